//! The partition function of the reflecting-end model by three routes.
//!
//! The reference value is the operator route: Z is the lowest-weight
//! component of the product of double-row B blocks applied to the
//! highest-weight state. The second route evaluates the normalized
//! symmetrized sum over S_L, and the third realizes the same sum as an
//! L-fold contour integral over small loops around the spectral
//! parameters. All three must agree; their agreement is the central
//! cross-check of this crate.

use num_complex::Complex64;

use crate::algebra::{apply_block_b, ModelInstance};
use crate::error::{Error, Result};
use crate::linalg::KahanSum;
use crate::theta::{eval_f, f_prime_zero, guarded_f, EllipticContext};

/// One set of L spectral parameters.
#[derive(Clone, Debug)]
pub struct SpectralPoint {
    lambdas: Vec<Complex64>,
}

impl SpectralPoint {
    /// Plain holder; genericity is route-specific and checked at use.
    pub fn new(lambdas: Vec<Complex64>) -> Self {
        Self { lambdas }
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Copy with one entry replaced.
    pub fn with_lambda(&self, index: usize, value: Complex64) -> Self {
        let mut lambdas = self.lambdas.clone();
        lambdas[index] = value;
        Self { lambdas }
    }

    /// Copy with one entry removed.
    pub fn dropping(&self, index: usize) -> Self {
        let mut lambdas = self.lambdas.clone();
        lambdas.remove(index);
        Self { lambdas }
    }
}

fn check_point(model: &ModelInstance, point: &SpectralPoint) -> Result<()> {
    if point.len() != model.length() {
        return Err(Error::DimensionMismatch(format!(
            "{} spectral parameters for chain length {}",
            point.len(),
            model.length()
        )));
    }
    Ok(())
}

/// Genericity preflight for a spectral point: every bracket of the forms
/// [2 lambda_i], [2 lambda_i + gamma], [lambda_i +- lambda_j + k gamma],
/// and [lambda_i +- mu_j + k gamma] with |k| <= 1 must clear the guard.
/// The failing bracket is named in the error.
pub fn point_genericity(model: &ModelInstance, point: &SpectralPoint) -> Result<()> {
    check_point(model, point)?;
    let ctx = model.ctx();
    let g = model.gamma();
    let shift = |k: i64| -> (Complex64, &'static str) {
        match k {
            -1 => (-g, "-gamma"),
            1 => (g, "+gamma"),
            _ => (Complex64::new(0.0, 0.0), ""),
        }
    };
    let lam = point.lambdas();
    for (i, &li) in lam.iter().enumerate() {
        guarded_f(ctx, li * 2.0, &format!("2*lambda[{i}]"))?;
        guarded_f(ctx, li * 2.0 + g, &format!("2*lambda[{i}]+gamma"))?;
        for k in -1..=1_i64 {
            let (kg, suffix) = shift(k);
            for (j, &mj) in model.mu().iter().enumerate() {
                guarded_f(ctx, li - mj + kg, &format!("lambda[{i}]-mu[{j}]{suffix}"))?;
                guarded_f(ctx, li + mj + kg, &format!("lambda[{i}]+mu[{j}]{suffix}"))?;
            }
            for (j, &lj) in lam.iter().enumerate().skip(i + 1) {
                guarded_f(ctx, li - lj + kg, &format!("lambda[{i}]-lambda[{j}]{suffix}"))?;
                guarded_f(ctx, li + lj + kg, &format!("lambda[{i}]+lambda[{j}]{suffix}"))?;
            }
        }
    }
    Ok(())
}

/// Operator route: the lowest-weight component of
/// prod_j B(lambda_j) applied to the highest-weight state.
pub fn z_algebraic(model: &ModelInstance, point: &SpectralPoint) -> Result<Complex64> {
    check_point(model, point)?;
    let d = model.dim();
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    v[model.vacuum_index()] = Complex64::new(1.0, 0.0);
    // Rightmost factor acts first; the order is irrelevant because the B
    // blocks commute.
    for &lambda in point.lambdas().iter().rev() {
        v = apply_block_b(model, lambda, &v)?;
    }
    Ok(v[model.dual_vacuum_index()])
}

/// The two-term kernel entering the symmetrized sum and the contour
/// integrand, with inhomogeneities taken from the model.
pub fn m_l(model: &ModelInstance, l: usize, z: &[Complex64]) -> Result<Complex64> {
    if l == 0 || l > model.length() || z.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "kernel index {l} with {} arguments for chain length {}",
            z.len(),
            model.length()
        )));
    }
    m_l_with(model, model.mu(), l, z)
}

/// Kernel with an explicit inhomogeneity list; the alternate symmetrized
/// sum reads the list in reversed order.
fn m_l_with(
    model: &ModelInstance,
    mu: &[Complex64],
    l: usize,
    z: &[Complex64],
) -> Result<Complex64> {
    let ctx = model.ctx();
    let g = model.gamma();
    let th = model.theta();
    let zeta = model.zeta();
    let zl = z[l - 1];
    let mu_l = mu[l - 1];
    let denom_tz = guarded_f(ctx, th + zeta + zl, "theta+zeta+z_l")?;
    // l - 1 < L, so the dynamical bracket sits inside the guarded ladder.
    let denom_th = eval_f(ctx, th + g * (l - 1) as f64)?;
    let denom = denom_tz * denom_th;
    let mut plus = eval_f(ctx, zl + zeta)?
        * eval_f(ctx, th + zeta - zl)?
        * eval_f(ctx, th + g * l as f64 + zl - mu_l)?
        * eval_f(ctx, zl + mu_l + g)?
        / denom;
    let mut minus = eval_f(ctx, zl - zeta + g)?
        * eval_f(ctx, th + zeta + zl + g)?
        * eval_f(ctx, th + g * (l - 1) as f64 - zl - mu_l)?
        * eval_f(ctx, zl - mu_l)?
        / denom;
    for j in 0..l - 1 {
        let zj = z[j];
        let diff = guarded_f(ctx, zj - zl, "z_j-z_l")?;
        let sum_g = guarded_f(ctx, zj + zl + g, "z_j+z_l+gamma")?;
        plus *= eval_f(ctx, zl - mu[j] + g)? * eval_f(ctx, zl + mu[j] + g)?
            * eval_f(ctx, zj - zl + g)?
            * eval_f(ctx, zj + zl)?
            / (diff * sum_g);
        // f(z_l - z_j) = -f(z_j - z_l) and f(z_l - z_j + gamma) =
        // -f(z_j - z_l - gamma); the two sign flips cancel.
        minus *= eval_f(ctx, zl + mu[j])? * eval_f(ctx, zl - mu[j])?
            * eval_f(ctx, zj - zl - g)?
            * eval_f(ctx, zj + zl + g * 2.0)?
            / (diff * sum_g);
    }
    Ok(plus - minus)
}

/// The overall normalization constant of the closed-form routes.
pub fn omega_l(model: &ModelInstance) -> Result<Complex64> {
    let ctx = model.ctx();
    let g = model.gamma();
    let th = model.theta();
    let zeta = model.zeta();
    let lf = model.length() as f64;
    let mut omega = eval_f(ctx, th + g * (lf + 1.0))? / eval_f(ctx, th + g * lf)?;
    for (i, &m) in model.mu().iter().enumerate() {
        omega *= eval_f(ctx, zeta - m)? * eval_f(ctx, th + zeta + m)?
            / (guarded_f(ctx, zeta + m, &format!("zeta+mu[{i}]"))?
                * guarded_f(ctx, th + zeta - m, &format!("theta+zeta-mu[{i}]"))?);
    }
    for k in 0..=model.length() / 2 {
        let spread = (model.length() - 2 * k) as f64;
        omega *= eval_f(ctx, th - g * spread)? / eval_f(ctx, th + g * (spread + 1.0))?;
    }
    Ok(omega)
}

/// Which of the two equivalent symmetrized sums to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetrizedVariant {
    /// Kernel indices ascend with the permutation prefix.
    Main,
    /// Kernel indices descend over the permutation suffix, with the
    /// inhomogeneity list reversed.
    Alt,
}

/// Advance index slice to the next lexicographic permutation; false once
/// the order wraps around.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Closed-form route: Omega_L times the sum over S_L in lexicographic
/// order with compensated accumulation.
pub fn z_symmetrized(
    model: &ModelInstance,
    point: &SpectralPoint,
    variant: SymmetrizedVariant,
) -> Result<Complex64> {
    check_point(model, point)?;
    let ctx = model.ctx();
    let g = model.gamma();
    let l = model.length();
    let lam = point.lambdas();
    let f_gamma = eval_f(ctx, g)?;
    // Per-parameter scalar [gamma][2 lambda]/[2 lambda + gamma].
    let mut prefactor = Vec::with_capacity(l);
    for (j, &lj) in lam.iter().enumerate() {
        let denom = guarded_f(ctx, lj * 2.0 + g, &format!("2*lambda[{j}]+gamma"))?;
        prefactor.push(f_gamma * eval_f(ctx, lj * 2.0)? / denom);
    }
    let mu_main = model.mu().to_vec();
    let mu_rev: Vec<Complex64> = model.mu().iter().rev().copied().collect();
    let mut perm: Vec<usize> = (0..l).collect();
    let mut acc = KahanSum::default();
    loop {
        let mut term = Complex64::new(1.0, 0.0);
        match variant {
            SymmetrizedVariant::Main => {
                let mut prefix = Vec::with_capacity(l);
                for (pos, &idx) in perm.iter().enumerate() {
                    prefix.push(lam[idx]);
                    term *= prefactor[idx] * m_l_with(model, &mu_main, pos + 1, &prefix)?;
                }
                for i in 0..l {
                    for j in i + 1..l {
                        term *= eval_f(ctx, lam[perm[i]] - mu_main[j])?
                            * eval_f(ctx, lam[perm[i]] + mu_main[j] + g)?;
                    }
                }
            }
            SymmetrizedVariant::Alt => {
                // Factor at position l uses the reversed-suffix arguments
                // (lambda_{sigma(L)}, ..., lambda_{sigma(l)}) and the
                // reversed inhomogeneity list.
                let mut suffix = Vec::with_capacity(l);
                for (pos, &idx) in perm.iter().enumerate().rev() {
                    suffix.push(lam[idx]);
                    term *= prefactor[idx] * m_l_with(model, &mu_rev, l - pos, &suffix)?;
                }
                for i in 0..l {
                    for j in 0..i {
                        term *= eval_f(ctx, lam[perm[i]] + mu_main[j] + g)?
                            * eval_f(ctx, lam[perm[i]] - mu_main[j])?;
                    }
                }
            }
        }
        acc.add(term);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(omega_l(model)? * acc.value())
}

/// Closed form at chain length one.
pub fn z_closed_l1(model: &ModelInstance, lambda: Complex64) -> Result<Complex64> {
    if model.length() != 1 {
        return Err(Error::UnsupportedSize(
            "closed form is specific to chain length 1".into(),
        ));
    }
    let ctx = model.ctx();
    let g = model.gamma();
    let th = model.theta();
    let zeta = model.zeta();
    let mu1 = model.mu()[0];
    let denom = guarded_f(ctx, th + zeta + lambda, "theta+zeta+lambda")? * eval_f(ctx, th)?;
    Ok(omega_l(model)?
        * eval_f(ctx, g)?
        * eval_f(ctx, zeta + mu1)?
        * eval_f(ctx, th + zeta - mu1)?
        * eval_f(ctx, th + g)?
        * eval_f(ctx, lambda * 2.0)?
        / denom)
}

/// The crossing multiplier picked up when one spectral parameter is
/// reflected, lambda -> -lambda - gamma.
pub fn crossing_factor(model: &ModelInstance, lambda: Complex64) -> Result<Complex64> {
    let ctx = model.ctx();
    let g = model.gamma();
    let tz = model.theta() + model.zeta();
    Ok(-(eval_f(ctx, lambda * 2.0 + g * 2.0)? * eval_f(ctx, tz + lambda)?)
        / (guarded_f(ctx, lambda * 2.0, "2*lambda")?
            * guarded_f(ctx, tz - lambda - g, "theta+zeta-lambda-gamma")?))
}

/// Z times prod_j f(theta + zeta + lambda_j); the combination that is a
/// higher-order theta function in each variable.
pub fn z_bar(model: &ModelInstance, point: &SpectralPoint) -> Result<Complex64> {
    let mut value = z_algebraic(model, point)?;
    for &lj in point.lambdas() {
        value *= eval_f(model.ctx(), model.theta() + model.zeta() + lj)?;
    }
    Ok(value)
}

/// Largest chain length the quadrature route accepts.
pub const MAX_CONTOUR_SIZE: usize = 3;

/// Minimal distance, in units of the contour radius, from each loop center
/// to every unwanted singularity of the integrand.
const ENCLOSURE_MARGIN: f64 = 2.0;

/// Fraction of the closest singularity distance used by the default radius.
const DEFAULT_RADIUS_FRACTION: f64 = 0.05;

/// Distance from x to the nearest zero of the bracket, i.e. to the lattice
/// of f (i pi periods, plus i pi tau steps in elliptic mode).
fn lattice_distance(ctx: &EllipticContext, x: Complex64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut best = f64::INFINITY;
    let n_range: Vec<f64> = if ctx.is_trigonometric() {
        vec![0.0]
    } else {
        vec![-2.0, -1.0, 0.0, 1.0, 2.0]
    };
    for m in -2..=2 {
        for &n in &n_range {
            let mut point = Complex64::new(0.0, pi * m as f64);
            if let Some(tau) = ctx.tau() {
                point += Complex64::new(0.0, pi) * tau * n;
            }
            best = best.min((x - point).norm());
        }
    }
    best
}

/// Distance from each loop center to the closest unwanted singularity of
/// the contour integrand: other centers, the reflected centers
/// -lambda_k - gamma, the boundary pole -theta - zeta, and the half-lattice
/// points of [2z + gamma].
fn min_singularity_distance(model: &ModelInstance, lam: &[Complex64]) -> f64 {
    let ctx = model.ctx();
    let g = model.gamma();
    let tz = model.theta() + model.zeta();
    let mut best = f64::INFINITY;
    for (j, &c) in lam.iter().enumerate() {
        best = best.min(lattice_distance(ctx, c * 2.0 + g) / 2.0);
        best = best.min(lattice_distance(ctx, tz + c));
        for (k, &ck) in lam.iter().enumerate() {
            best = best.min(lattice_distance(ctx, c + ck + g));
            if k != j {
                best = best.min(lattice_distance(ctx, c - ck));
            }
        }
    }
    best
}

/// Pairwise bracket tables between two slots of quadrature points.
struct PairTables {
    diff: Vec<Complex64>,
    diff_pg: Vec<Complex64>,
    diff_mg: Vec<Complex64>,
    sum: Vec<Complex64>,
    sum_pg: Vec<Complex64>,
    sum_p2g: Vec<Complex64>,
    stride: usize,
}

impl PairTables {
    fn at(&self, table: &[Complex64], a: usize, b: usize) -> Complex64 {
        table[a * self.stride + b]
    }
}

/// Quadrature route: L-fold trapezoid rule over the union of L circles
/// around the spectral parameters. Each variable slot gets its own node
/// phase offset so nodes of different slots never coincide, keeping the
/// removable z_i = z_j points away from the grid.
pub fn z_contour(
    model: &ModelInstance,
    point: &SpectralPoint,
    radius: Option<f64>,
    n_nodes: usize,
) -> Result<Complex64> {
    check_point(model, point)?;
    let l = model.length();
    if l > MAX_CONTOUR_SIZE {
        return Err(Error::UnsupportedSize(format!(
            "quadrature route supports chain length <= {MAX_CONTOUR_SIZE}, got {l}"
        )));
    }
    if n_nodes < 4 {
        return Err(Error::InvalidContext(format!(
            "at least 4 quadrature nodes required, got {n_nodes}"
        )));
    }
    let ctx = model.ctx();
    let g = model.gamma();
    let th = model.theta();
    let zeta = model.zeta();
    let lam = point.lambdas();
    let min_dist = min_singularity_distance(model, lam);
    let r = radius.unwrap_or(DEFAULT_RADIUS_FRACTION * min_dist);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidContext(format!(
            "contour radius {r} is not a positive finite number"
        )));
    }
    if min_dist <= ENCLOSURE_MARGIN * r {
        return Err(Error::ContourTooLarge(format!(
            "radius {r:.3e} needs every unwanted singularity farther than \
             {ENCLOSURE_MARGIN} radii from each loop center, but the closest \
             lies at distance {min_dist:.3e}"
        )));
    }
    let mu = model.mu();
    let n_points = l * n_nodes;
    // points[slot][k * n_nodes + t]: node t on the circle around lambda_k.
    let mut points = vec![vec![Complex64::new(0.0, 0.0); n_points]; l];
    // weight = (r/n) e^{i phi}: the trapezoid rule for dz/(2 pi i).
    let mut weights = vec![vec![Complex64::new(0.0, 0.0); n_points]; l];
    for slot in 0..l {
        let offset = slot as f64 / (l as f64 + 1.0);
        for k in 0..l {
            for t in 0..n_nodes {
                let phi = 2.0 * std::f64::consts::PI * (t as f64 + offset) / n_nodes as f64;
                let phase = Complex64::new(0.0, phi).exp();
                points[slot][k * n_nodes + t] = lam[k] + phase * r;
                weights[slot][k * n_nodes + t] = phase * (r / n_nodes as f64);
            }
        }
    }
    // Per-point factors that only see one variable. The slot index fixes
    // the variable's position: slot s plays z_{s+1}.
    let zero = Complex64::new(0.0, 0.0);
    let mut base = vec![vec![zero; n_points]; l];
    let mut solo_plus = vec![vec![zero; n_points]; l];
    let mut solo_minus = vec![vec![zero; n_points]; l];
    for slot in 0..l {
        for (p, &z) in points[slot].iter().enumerate() {
            // weight * [gamma][2z]/[2z+gamma] / prod_j [z - lambda_j],
            // and the position-dependent tail prod_{j>slot+1} [z - mu_j][z + mu_j + gamma].
            let mut denom = eval_f(ctx, z * 2.0 + g)?;
            for &lj in lam {
                denom *= eval_f(ctx, z - lj)?;
            }
            let mut value =
                weights[slot][p] * eval_f(ctx, g)? * eval_f(ctx, z * 2.0)? / denom;
            for &muj in &mu[slot + 1..] {
                value *= eval_f(ctx, z - muj)? * eval_f(ctx, z + muj + g)?;
            }
            base[slot][p] = value;
            // Solo parts of the kernel m_{slot+1}.
            let kernel_denom =
                eval_f(ctx, th + zeta + z)? * eval_f(ctx, th + g * slot as f64)?;
            let mut plus = eval_f(ctx, z + zeta)?
                * eval_f(ctx, th + zeta - z)?
                * eval_f(ctx, th + g * (slot + 1) as f64 + z - mu[slot])?
                * eval_f(ctx, z + mu[slot] + g)?
                / kernel_denom;
            let mut minus = eval_f(ctx, z - zeta + g)?
                * eval_f(ctx, th + zeta + z + g)?
                * eval_f(ctx, th + g * slot as f64 - z - mu[slot])?
                * eval_f(ctx, z - mu[slot])?
                / kernel_denom;
            for &muj in &mu[..slot] {
                plus *= eval_f(ctx, z - muj + g)? * eval_f(ctx, z + muj + g)?;
                minus *= eval_f(ctx, z - muj)? * eval_f(ctx, z + muj)?;
            }
            solo_plus[slot][p] = plus;
            solo_minus[slot][p] = minus;
        }
    }
    // Pairwise bracket tables for slot pairs a < b.
    let mut pair_tables: Vec<Vec<Option<PairTables>>> = Vec::with_capacity(l);
    for a in 0..l {
        let mut row = Vec::with_capacity(l);
        for b in 0..l {
            if a >= b {
                row.push(None);
                continue;
            }
            let len = n_points * n_points;
            let mut tables = PairTables {
                diff: vec![zero; len],
                diff_pg: vec![zero; len],
                diff_mg: vec![zero; len],
                sum: vec![zero; len],
                sum_pg: vec![zero; len],
                sum_p2g: vec![zero; len],
                stride: n_points,
            };
            for (pa, &za) in points[a].iter().enumerate() {
                for (pb, &zb) in points[b].iter().enumerate() {
                    let idx = pa * n_points + pb;
                    let d = za - zb;
                    let s = za + zb;
                    tables.diff[idx] = eval_f(ctx, d)?;
                    tables.diff_pg[idx] = eval_f(ctx, d + g)?;
                    tables.diff_mg[idx] = eval_f(ctx, d - g)?;
                    tables.sum[idx] = eval_f(ctx, s)?;
                    tables.sum_pg[idx] = eval_f(ctx, s + g)?;
                    tables.sum_p2g[idx] = eval_f(ctx, s + g * 2.0)?;
                }
            }
            row.push(Some(tables));
        }
        pair_tables.push(row);
    }
    // Sign of prod_{i != j} f(z_i - z_j) = prod_{i < j} (-f(z_i - z_j)^2).
    let pair_count = l * (l - 1) / 2;
    let pair_sign = if pair_count % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = KahanSum::default();
    let mut odometer = vec![0usize; l];
    loop {
        let mut term = Complex64::new(pair_sign, 0.0);
        for slot in 0..l {
            term *= base[slot][odometer[slot]];
        }
        for a in 0..l {
            for b in a + 1..l {
                let t = pair_tables[a][b].as_ref().expect("built above");
                let d = t.at(&t.diff, odometer[a], odometer[b]);
                term *= d * d;
            }
        }
        // Kernels: slot s couples to all earlier slots.
        for s in 0..l {
            let mut plus = solo_plus[s][odometer[s]];
            let mut minus = solo_minus[s][odometer[s]];
            for j in 0..s {
                let t = pair_tables[j][s].as_ref().expect("built above");
                let (pj, ps) = (odometer[j], odometer[s]);
                let denom = t.at(&t.diff, pj, ps) * t.at(&t.sum_pg, pj, ps);
                plus *= t.at(&t.diff_pg, pj, ps) * t.at(&t.sum, pj, ps) / denom;
                minus *= t.at(&t.diff_mg, pj, ps) * t.at(&t.sum_p2g, pj, ps) / denom;
            }
            term *= plus - minus;
        }
        acc.add(term);
        // Advance the odometer over all circle/node assignments.
        let mut slot = 0;
        loop {
            if slot == l {
                break;
            }
            odometer[slot] += 1;
            if odometer[slot] < n_points {
                break;
            }
            odometer[slot] = 0;
            slot += 1;
        }
        if slot == l {
            break;
        }
    }
    let fp0 = f_prime_zero(ctx);
    let value = omega_l(model)? * fp0.powi(l as i32) * acc.value();
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::ContourTooLarge(
            "quadrature produced a non-finite value; a node fell on a singularity".into(),
        ));
    }
    Ok(value)
}
