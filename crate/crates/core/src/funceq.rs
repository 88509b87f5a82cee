//! The linear relation satisfied by the partition function.
//!
//! With one extra spectral parameter lambda_0 the partition function obeys
//! a cyclic linear relation whose L+1 coefficients are built purely from
//! closed-form reference-state eigenvalues and brackets. Nothing here
//! touches the 2^L operator machinery, so residuals measured against the
//! operator route are genuine cross-checks. This module evaluates the
//! coefficient vector, the relation residual under a pluggable evaluator,
//! the matrix of all parameter-swapped relations, the special-zero scans,
//! and the recursion connecting chain lengths L and L-1.

use ndarray::Array2;
use num_complex::Complex64;

use crate::algebra::{vacuum_eigenvalues_closed, ModelInstance};
use crate::error::{Error, Result};
use crate::linalg::determinant;
use crate::partition::{crossing_factor, point_genericity, z_algebraic, SpectralPoint};
use crate::theta::{eval_f, f_prime_zero, guarded_f};

/// Partition-function evaluator signature shared by the residual checks.
pub type ZEval<'a> = dyn Fn(&ModelInstance, &SpectralPoint) -> Result<Complex64> + 'a;

/// The L+1 coefficients of the linear relation at one (lambda_0; lambda).
#[derive(Clone, Debug)]
pub struct CoefficientVector {
    m: Vec<Complex64>,
}

impl CoefficientVector {
    /// All components, index 0 first.
    pub fn values(&self) -> &[Complex64] {
        &self.m
    }

    /// Component nu, 0 <= nu <= L.
    pub fn m(&self, nu: usize) -> Complex64 {
        self.m[nu]
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// Coefficient vector of the relation. The distinguished component sets
/// the left eigenvalue against the dressed right eigenvalue at lambda_0;
/// each ordinary component mixes the two double-row eigenvalues at its
/// own spectral parameter.
pub fn coefficients(
    model: &ModelInstance,
    lambda0: Complex64,
    point: &SpectralPoint,
) -> Result<CoefficientVector> {
    let l = model.length();
    if point.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "{} spectral parameters for chain length {l}",
            point.len()
        )));
    }
    let ctx = model.ctx();
    let g = model.gamma();
    let th = model.theta();
    let lam = point.lambdas();
    let eig0 = vacuum_eigenvalues_closed(model, lambda0)?;
    let mut dressed = Complex64::new(1.0, 0.0);
    for (j, &lj) in lam.iter().enumerate() {
        dressed *= eval_f(ctx, lj - lambda0 + g)? * eval_f(ctx, lj + lambda0)?
            / (guarded_f(ctx, lj - lambda0, &format!("lambda[{}]-lambda0", j + 1))?
                * guarded_f(
                    ctx,
                    lj + lambda0 + g,
                    &format!("lambda[{}]+lambda0+gamma", j + 1),
                )?);
    }
    let mut m = Vec::with_capacity(l + 1);
    m.push(eig0.cal_a_left - eig0.cal_a * dressed);
    let f_gamma = eval_f(ctx, g)?;
    let theta_high = guarded_f(ctx, th + g * (l as f64 - 1.0), "theta+(L-1)*gamma")?;
    let theta_low = guarded_f(ctx, th - g * l as f64, "theta-L*gamma")?;
    for (i, &li) in lam.iter().enumerate() {
        let eig = vacuum_eigenvalues_closed(model, li)?;
        let mut first = eval_f(ctx, li * 2.0)? * f_gamma
            * eval_f(ctx, th + g * (l as f64 - 1.0) + li - lambda0)?
            / (guarded_f(ctx, li * 2.0 + g, &format!("2*lambda[{}]+gamma", i + 1))?
                * guarded_f(ctx, li - lambda0, &format!("lambda[{}]-lambda0", i + 1))?
                * theta_high)
            * eig.cal_a;
        let mut second = f_gamma * eval_f(ctx, th + g * (l as f64 - 2.0) - li - lambda0)?
            * eval_f(ctx, th - g * (l as f64 - 1.0))?
            / (guarded_f(
                ctx,
                li + lambda0 + g,
                &format!("lambda[{}]+lambda0+gamma", i + 1),
            )? * theta_high
                * theta_low)
            * eig.cal_d_tilde;
        for (j, &lj) in lam.iter().enumerate() {
            if j == i {
                continue;
            }
            let diff = guarded_f(
                ctx,
                lj - li,
                &format!("lambda[{}]-lambda[{}]", j + 1, i + 1),
            )?;
            let sum_g = guarded_f(
                ctx,
                lj + li + g,
                &format!("lambda[{}]+lambda[{}]+gamma", j + 1, i + 1),
            )?;
            first *= eval_f(ctx, lj - li + g)? * eval_f(ctx, lj + li)? / (diff * sum_g);
            // f(lambda_i - lambda_j) = -f(lambda_j - lambda_i).
            second *= eval_f(ctx, li - lj + g)? * eval_f(ctx, li + lj + g * 2.0)?
                / (-diff * sum_g);
        }
        m.push(first + second);
    }
    Ok(CoefficientVector { m })
}

/// The L-argument list (lambda_0, lambda_1, ..., lambda_L) with entry nu
/// omitted, lambda_0 kept in front.
fn omit(lambda0: Complex64, point: &SpectralPoint, nu: usize) -> SpectralPoint {
    if nu == 0 {
        return point.clone();
    }
    let mut lambdas = Vec::with_capacity(point.len());
    lambdas.push(lambda0);
    for (i, &lj) in point.lambdas().iter().enumerate() {
        if i + 1 != nu {
            lambdas.push(lj);
        }
    }
    SpectralPoint::new(lambdas)
}

/// Residual of the linear relation under the given evaluator: modulus of
/// the full sum next to the largest single term. The caller judges
/// residual against scale.
pub fn fe_residual(
    model: &ModelInstance,
    lambda0: Complex64,
    point: &SpectralPoint,
    z_eval: &ZEval,
) -> Result<(f64, f64)> {
    let coeffs = coefficients(model, lambda0, point)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0_f64;
    for nu in 0..=model.length() {
        let term = coeffs.m(nu) * z_eval(model, &omit(lambda0, point, nu))?;
        sum += term;
        scale = scale.max(term.norm());
    }
    Ok((sum.norm(), scale))
}

/// Coefficient matrix of the L+1 relations obtained by moving each of the
/// parameters (lambda_0, ..., lambda_L) into the distinguished slot. Entry
/// (rho, nu) multiplies the evaluation that omits parameter nu in the
/// relation distinguished at parameter rho, so each row is the coefficient
/// vector at (lambda_rho; rest) with its leading component moved to the
/// diagonal.
pub struct SwappedMatrix {
    entries: Array2<Complex64>,
}

impl SwappedMatrix {
    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }
}

fn swapped_row(
    model: &ModelInstance,
    all: &[Complex64],
    rho: usize,
    columns: usize,
) -> Result<Vec<Complex64>> {
    let rest: Vec<Complex64> = all
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != rho)
        .map(|(_, &v)| v)
        .collect();
    let coeffs = coefficients(model, all[rho], &SpectralPoint::new(rest))?;
    let mut row = Vec::with_capacity(columns);
    for nu in 0..columns {
        row.push(if nu == rho {
            coeffs.m(0)
        } else if nu < rho {
            coeffs.m(nu + 1)
        } else {
            coeffs.m(nu)
        });
    }
    Ok(row)
}

pub fn swapped_matrix(
    model: &ModelInstance,
    lambda0: Complex64,
    point: &SpectralPoint,
) -> Result<SwappedMatrix> {
    let l = model.length();
    if point.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "{} spectral parameters for chain length {l}",
            point.len()
        )));
    }
    let mut all = Vec::with_capacity(l + 1);
    all.push(lambda0);
    all.extend_from_slice(point.lambdas());
    let mut entries = Array2::from_elem((l + 1, l + 1), Complex64::new(0.0, 0.0));
    for rho in 0..=l {
        let row = swapped_row(model, &all, rho, l + 1)?;
        for (nu, &v) in row.iter().enumerate() {
            entries[(rho, nu)] = v;
        }
    }
    Ok(SwappedMatrix { entries })
}

fn det_with_row_scale(entries: &Array2<Complex64>) -> (Complex64, f64) {
    let det = determinant(entries);
    let mut scale = 1.0_f64;
    for row in entries.rows() {
        scale *= row.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
    }
    (det, scale)
}

/// Determinant of the swapped-relation matrix and the product of row
/// max-norms. A nonzero common solution of all L+1 relations forces the
/// determinant to vanish against this scale.
pub fn swapped_matrix_det(
    model: &ModelInstance,
    lambda0: Complex64,
    point: &SpectralPoint,
) -> Result<(Complex64, f64)> {
    let matrix = swapped_matrix(model, lambda0, point)?;
    Ok(det_with_row_scale(&matrix.entries))
}

/// The four distinguished pairs built from inhomogeneity k (1-based): the
/// first slot takes mu_k - gamma or -mu_k, the second -mu_k - gamma or
/// mu_k, and the four combinations map into each other under the crossing
/// substitution of one or both slots.
pub fn special_pair_values(model: &ModelInstance, k: usize) -> Result<[[Complex64; 2]; 2]> {
    let l = model.length();
    if k == 0 || k > l {
        return Err(Error::DimensionMismatch(format!(
            "inhomogeneity index {k} for chain length {l}"
        )));
    }
    let g = model.gamma();
    let mu_k = model.mu()[k - 1];
    Ok([[mu_k - g, -mu_k], [-mu_k - g, mu_k]])
}

/// |Z| at the four distinguished pairs inserted into the last two slots,
/// each normalized by |Z| at a nearby generic point (the pinned slots
/// displaced off the pair). Normalizing nearby keeps the reference on the
/// same local function scale as the probe; a far-away reference can sit
/// orders of magnitude off it. Row index picks the value of the
/// next-to-last slot, column index the last slot.
pub fn special_zero_scan(
    model: &ModelInstance,
    z_eval: &ZEval,
    k: usize,
    base: &SpectralPoint,
) -> Result<[[f64; 2]; 2]> {
    let l = model.length();
    if l < 2 {
        return Err(Error::UnsupportedSize(
            "vanishing pairs need at least two spectral parameters".into(),
        ));
    }
    if base.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "{} spectral parameters for chain length {l}",
            base.len()
        )));
    }
    let pairs = special_pair_values(model, k)?;
    let mut out = [[0.0_f64; 2]; 2];
    for (a, &plus) in pairs[0].iter().enumerate() {
        for (b, &minus) in pairs[1].iter().enumerate() {
            let probe = base.with_lambda(l - 2, plus).with_lambda(l - 1, minus);
            let scale = nearby_generic_scale(model, z_eval, &probe)?;
            out[a][b] = z_eval(model, &probe)?.norm() / scale;
        }
    }
    Ok(out)
}

/// |Z| with the last two slots displaced off the probe by a fixed ladder
/// of small generic offsets; the first displacement that clears the
/// genericity guards and evaluates to a nonzero value wins.
fn nearby_generic_scale(
    model: &ModelInstance,
    z_eval: &ZEval,
    probe: &SpectralPoint,
) -> Result<f64> {
    let l = probe.len();
    for t in 0..8 {
        let tf = t as f64;
        let d1 = Complex64::new(0.053 + 0.011 * tf, 0.021 - 0.007 * tf);
        let d2 = Complex64::new(-0.047 - 0.009 * tf, 0.033 + 0.006 * tf);
        let shifted = probe
            .with_lambda(l - 2, probe.lambdas()[l - 2] + d1)
            .with_lambda(l - 1, probe.lambdas()[l - 1] + d2);
        if point_genericity(model, &shifted).is_err() {
            continue;
        }
        match z_eval(model, &shifted) {
            Ok(v) if v.norm() > 0.0 => return Ok(v.norm()),
            Ok(_) => continue,
            Err(Error::DegenerateParameter(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateParameter(
        "no nearby generic reference for the vanishing-pair scan".into(),
    ))
}

/// Determinant of the truncated swapped-relation matrix (rows and columns
/// 0..=L-2) when the last two entries of `point` sit at a distinguished
/// vanishing pair. The last two coefficients vanish there, so the
/// relations close on the truncated set of evaluations, and a nonzero
/// truncated determinant pins all those evaluations to zero.
pub fn special_zero_matrix_det(
    model: &ModelInstance,
    lambda0: Complex64,
    point: &SpectralPoint,
) -> Result<(Complex64, f64)> {
    let l = model.length();
    if l < 2 {
        return Err(Error::UnsupportedSize(
            "the truncated matrix needs at least two spectral parameters".into(),
        ));
    }
    if point.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "{} spectral parameters for chain length {l}",
            point.len()
        )));
    }
    let mut all = Vec::with_capacity(l + 1);
    all.push(lambda0);
    all.extend_from_slice(point.lambdas());
    let mut entries = Array2::from_elem((l - 1, l - 1), Complex64::new(0.0, 0.0));
    for rho in 0..l - 1 {
        let row = swapped_row(model, &all, rho, l - 1)?;
        for (nu, &v) in row.iter().enumerate() {
            entries[(rho, nu)] = v;
        }
    }
    Ok(det_with_row_scale(&entries))
}

/// Which value closes the argument list of the recursion coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarChoice {
    /// Closing value -mu_L - gamma.
    Minus,
    /// Closing value mu_L.
    Plus,
}

impl StarChoice {
    pub fn value(self, model: &ModelInstance) -> Complex64 {
        let mu_last = model.mu()[model.length() - 1];
        match self {
            StarChoice::Minus => -mu_last - model.gamma(),
            StarChoice::Plus => mu_last,
        }
    }
}

/// Coefficients of the relation obeyed by the length-(L-1) function, one
/// per omitted parameter among (lambda_0, ..., lambda_{L-1}). The two
/// closing-value choices give the same vector up to one global factor.
#[derive(Clone, Debug)]
pub struct ReducedCoefficients {
    m: Vec<Complex64>,
    star: StarChoice,
}

impl ReducedCoefficients {
    pub fn values(&self) -> &[Complex64] {
        &self.m
    }

    pub fn m(&self, nu: usize) -> Complex64 {
        self.m[nu]
    }

    pub fn star(&self) -> StarChoice {
        self.star
    }
}

/// Assemble the length-(L-1) relation coefficients from full-length
/// coefficient vectors with the last slot closed at the star value and the
/// distinguished slot moved to mu_L - gamma.
pub fn reduced_coefficients(
    model: &ModelInstance,
    lambda0: Complex64,
    rest: &SpectralPoint,
    star: StarChoice,
) -> Result<ReducedCoefficients> {
    let l = model.length();
    if l < 2 {
        return Err(Error::UnsupportedSize(
            "the recursion needs at least two spectral parameters".into(),
        ));
    }
    if rest.len() != l - 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} spectral parameters for the reduced chain of length {}",
            rest.len(),
            l - 1
        )));
    }
    let ctx = model.ctx();
    let g = model.gamma();
    let mu_last = model.mu()[l - 1];
    let lambda_star = star.value(model);
    // (lambda_1, ..., lambda_{L-1}, lambda_*)
    let mut with_star = rest.lambdas().to_vec();
    with_star.push(lambda_star);
    let at_lambda0 = coefficients(model, lambda0, &SpectralPoint::new(with_star))?;
    // (lambda_0, lambda_1, ..., lambda_{L-1})
    let mut all0 = Vec::with_capacity(l);
    all0.push(lambda0);
    all0.extend_from_slice(rest.lambdas());
    let no_star = coefficients(model, mu_last - g, &SpectralPoint::new(all0.clone()))?;
    let mut m = Vec::with_capacity(l);
    for nu in 0..l {
        let mut list_nu: Vec<Complex64> = all0
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != nu)
            .map(|(_, &v)| v)
            .collect();
        list_nu.push(lambda_star);
        let closing = coefficients(model, mu_last - g, &SpectralPoint::new(list_nu))?;
        let mut value = at_lambda0.m(nu) * closing.m(l) + at_lambda0.m(l) * no_star.m(nu + 1);
        for (rho, &lr) in all0.iter().enumerate() {
            if rho == nu {
                continue;
            }
            value *= eval_f(ctx, lr - mu_last)? * eval_f(ctx, lr + mu_last + g)?;
        }
        m.push(value);
    }
    Ok(ReducedCoefficients { m, star })
}

/// Residual of the length-(L-1) relation under the given evaluator, which
/// is applied to the reduced model (last inhomogeneity dropped).
pub fn reduced_fe_residual(
    model: &ModelInstance,
    lambda0: Complex64,
    rest: &SpectralPoint,
    star: StarChoice,
    z_eval: &ZEval,
) -> Result<(f64, f64)> {
    let rc = reduced_coefficients(model, lambda0, rest, star)?;
    let reduced = model.dropping_mu(model.length() - 1)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0_f64;
    for nu in 0..model.length() {
        let term = rc.m(nu) * z_eval(&reduced, &omit(lambda0, rest, nu))?;
        sum += term;
        scale = scale.max(term.norm());
    }
    Ok((sum.norm(), scale))
}

/// Determinant of the L x L matrix whose first L-1 rows are the
/// swapped-relation rows of the reduced chain and whose last row holds the
/// reduced coefficients. The reduced relation is a linear combination of
/// the reduced chain's own relations, so the determinant must vanish.
pub fn reduced_consistency_det(
    model: &ModelInstance,
    lambda0: Complex64,
    rest: &SpectralPoint,
    star: StarChoice,
) -> Result<(Complex64, f64)> {
    let l = model.length();
    let rc = reduced_coefficients(model, lambda0, rest, star)?;
    let reduced = model.dropping_mu(l - 1)?;
    let mut all0 = Vec::with_capacity(l);
    all0.push(lambda0);
    all0.extend_from_slice(rest.lambdas());
    let mut entries = Array2::from_elem((l, l), Complex64::new(0.0, 0.0));
    for rho in 0..l - 1 {
        let row = swapped_row(&reduced, &all0, rho, l)?;
        for (nu, &v) in row.iter().enumerate() {
            entries[(rho, nu)] = v;
        }
    }
    for nu in 0..l {
        entries[(l - 1, nu)] = rc.m(nu);
    }
    Ok(det_with_row_scale(&entries))
}

/// Which end of the inhomogeneity list anchors the recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionRoute {
    /// Distinguished slot at mu_L - gamma; companion chain drops mu_L. The
    /// closed-form left eigenvalue supplies the relation constant; the
    /// companion solution's scale is measured once through the anchored
    /// factorization.
    Last,
    /// Distinguished slot at mu_1 - gamma; companion chain drops mu_1. The
    /// overall constant is measured once at a calibration point.
    First,
}

/// Deterministic generic probe points used to pin measured constants.
fn calibration_points(len: usize) -> impl Iterator<Item = SpectralPoint> {
    (0..8).map(move |t| {
        SpectralPoint::new(
            (0..len)
                .map(|j| {
                    Complex64::new(
                        0.37 + 0.083 * j as f64 + 0.029 * t as f64,
                        -0.11 + 0.047 * j as f64 - 0.017 * t as f64,
                    )
                })
                .collect(),
        )
    })
}

/// Scale of the length-(L-1) solution relative to the companion chain's
/// own partition function, measured through the factorization of the full
/// function when one argument sits at the anchored special value
/// mu_L - gamma. The ratio is a model constant, so one generic probe
/// fixes it.
fn anchored_scale(model: &ModelInstance, reduced: &ModelInstance) -> Result<Complex64> {
    let ctx = model.ctx();
    let g = model.gamma();
    let l = model.length();
    let anchor = model.mu()[l - 1];
    for w in calibration_points(l - 1) {
        let mut full_args = w.lambdas().to_vec();
        full_args.push(anchor - g);
        let full = match z_algebraic(model, &SpectralPoint::new(full_args)) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let companion = match z_algebraic(reduced, &w) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let mut prod = Complex64::new(1.0, 0.0);
        for &wj in w.lambdas() {
            prod *= eval_f(ctx, wj - anchor)? * eval_f(ctx, wj + anchor + g)?;
        }
        let denom = companion * prod;
        if denom.norm() == 0.0 {
            continue;
        }
        return Ok(full / denom);
    }
    Err(Error::DegenerateParameter(
        "no usable probe for the anchored factorization scale".into(),
    ))
}

fn recursion_sum(
    model: &ModelInstance,
    reduced: &ModelInstance,
    anchor_mu: Complex64,
    point: &SpectralPoint,
) -> Result<Complex64> {
    let ctx = model.ctx();
    let g = model.gamma();
    let coeffs = coefficients(model, anchor_mu - g, point)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 1..=model.length() {
        let companion = z_algebraic(reduced, &point.dropping(i - 1))?;
        let mut prod = Complex64::new(1.0, 0.0);
        for (j, &lj) in point.lambdas().iter().enumerate() {
            if j + 1 == i {
                continue;
            }
            prod *= eval_f(ctx, lj - anchor_mu)? * eval_f(ctx, lj + anchor_mu + g)?;
        }
        sum += coeffs.m(i) * companion * prod;
    }
    Ok(sum)
}

/// Rebuild the length-L value from length-(L-1) operator-route values via
/// the recursion. The relation fixes the result only up to a model
/// constant, so each variant measures one constant at a deterministic
/// probe and applies it everywhere: the end-anchored variant measures the
/// anchored factorization scale and keeps the closed-form relation
/// constant, the front-anchored variant calibrates the whole constant
/// against the operator route.
pub fn reconstruct_from_reduction(
    model: &ModelInstance,
    point: &SpectralPoint,
    route: ReductionRoute,
) -> Result<Complex64> {
    let l = model.length();
    if l < 2 {
        return Err(Error::UnsupportedSize(
            "the recursion needs at least two spectral parameters".into(),
        ));
    }
    if point.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "{} spectral parameters for chain length {l}",
            point.len()
        )));
    }
    match route {
        ReductionRoute::Last => {
            let reduced = model.dropping_mu(l - 1)?;
            let anchor = model.mu()[l - 1];
            let eig = vacuum_eigenvalues_closed(model, anchor - model.gamma())?;
            if eig.cal_a_left.norm() == 0.0 {
                return Err(Error::DegenerateParameter(
                    "left eigenvalue at the recursion anchor vanished".into(),
                ));
            }
            let scale = anchored_scale(model, &reduced)?;
            Ok(-scale * recursion_sum(model, &reduced, anchor, point)? / eig.cal_a_left)
        }
        ReductionRoute::First => {
            let reduced = model.dropping_mu(0)?;
            let anchor = model.mu()[0];
            let mut constant = None;
            for calib in calibration_points(l) {
                let reference = match z_algebraic(model, &calib) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                match recursion_sum(model, &reduced, anchor, &calib) {
                    Ok(s) if s.norm() > 0.0 => {
                        constant = Some(reference / s);
                        break;
                    }
                    _ => continue,
                }
            }
            let constant = constant.ok_or_else(|| {
                Error::DegenerateParameter(
                    "no usable calibration point for the front-anchored recursion".into(),
                )
            })?;
            Ok(constant * recursion_sum(model, &reduced, anchor, point)?)
        }
    }
}

/// Near-pole behaviour of the coefficient vector at one of its two pole
/// families, probed at shrinking offsets.
#[derive(Clone, Debug)]
pub struct ResidueScan {
    /// Offsets used, largest first.
    pub epsilons: [f64; 3],
    /// |bounded combination| at each offset; finite residues cancel here.
    pub combination: [f64; 3],
    /// |diverging component| at each offset; grows like 1/epsilon.
    pub pole: [f64; 3],
    /// Residue extrapolated to zero offset from epsilon times the
    /// diverging component.
    pub extrapolated: Complex64,
    /// Closed-form residue.
    pub closed_form: Complex64,
}

const RESIDUE_EPSILONS: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// Quadratic extrapolation of g to zero offset from three samples.
fn extrapolate_to_zero(eps: &[f64; 3], g: &[Complex64; 3]) -> Complex64 {
    let mut value = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        let mut weight = Complex64::new(1.0, 0.0);
        for m in 0..3 {
            if m != k {
                weight *= Complex64::new(eps[m] / (eps[m] - eps[k]), 0.0);
            }
        }
        value += weight * g[k];
    }
    value
}

fn lambda_products(
    model: &ModelInstance,
    point: &SpectralPoint,
    i: usize,
) -> Result<(Complex64, Complex64)> {
    let ctx = model.ctx();
    let g = model.gamma();
    let li = point.lambdas()[i - 1];
    let mut forward = Complex64::new(1.0, 0.0);
    let mut crossed = Complex64::new(1.0, 0.0);
    for (j, &lj) in point.lambdas().iter().enumerate() {
        if j + 1 == i {
            continue;
        }
        let diff = guarded_f(
            ctx,
            lj - li,
            &format!("lambda[{}]-lambda[{}]", j + 1, i),
        )?;
        let sum_g = guarded_f(
            ctx,
            lj + li + g,
            &format!("lambda[{}]+lambda[{}]+gamma", j + 1, i),
        )?;
        forward *= eval_f(ctx, lj - li + g)? * eval_f(ctx, lj + li)? / (diff * sum_g);
        crossed *= eval_f(ctx, li - lj + g)? * eval_f(ctx, li + lj + g * 2.0)? / (-diff * sum_g);
    }
    Ok((forward, crossed))
}

/// Probe the simple pole of the coefficients where the distinguished
/// parameter meets lambda_i. The distinguished and i'th components carry
/// opposite residues, so their sum stays bounded while each diverges; the
/// residue itself matches a closed form.
pub fn residue_scan_same(
    model: &ModelInstance,
    i: usize,
    point: &SpectralPoint,
) -> Result<ResidueScan> {
    let ctx = model.ctx();
    let g = model.gamma();
    let li = point.lambdas()[i - 1];
    let mut combination = [0.0_f64; 3];
    let mut pole = [0.0_f64; 3];
    let mut g_samples = [Complex64::new(0.0, 0.0); 3];
    for (k, &eps) in RESIDUE_EPSILONS.iter().enumerate() {
        let coeffs = coefficients(model, li + eps, point)?;
        combination[k] = (coeffs.m(0) + coeffs.m(i)).norm();
        pole[k] = coeffs.m(0).norm();
        g_samples[k] = coeffs.m(0) * eps;
    }
    let eig = vacuum_eigenvalues_closed(model, li)?;
    let (forward, _) = lambda_products(model, point, i)?;
    let closed_form = eval_f(ctx, li * 2.0)? * eval_f(ctx, g)?
        / (f_prime_zero(ctx) * guarded_f(ctx, li * 2.0 + g, "2*lambda[i]+gamma")?)
        * eig.cal_a
        * forward;
    Ok(ResidueScan {
        epsilons: RESIDUE_EPSILONS,
        combination,
        pole,
        extrapolated: extrapolate_to_zero(&RESIDUE_EPSILONS, &g_samples),
        closed_form,
    })
}

/// Probe the simple pole where the distinguished parameter meets the
/// crossing image -lambda_i - gamma. The distinguished component's residue
/// carries exactly the crossing weight that rescales the partition
/// function under lambda_i -> -lambda_i - gamma, so weighting the i'th
/// component by that same factor cancels the pole.
pub fn residue_scan_crossing(
    model: &ModelInstance,
    i: usize,
    point: &SpectralPoint,
) -> Result<ResidueScan> {
    let ctx = model.ctx();
    let g = model.gamma();
    let th = model.theta();
    let lf = model.length() as f64;
    let li = point.lambdas()[i - 1];
    let weight = crossing_factor(model, li)?;
    let mut combination = [0.0_f64; 3];
    let mut pole = [0.0_f64; 3];
    let mut g_samples = [Complex64::new(0.0, 0.0); 3];
    for (k, &eps) in RESIDUE_EPSILONS.iter().enumerate() {
        let coeffs = coefficients(model, -li - g + eps, point)?;
        combination[k] = (coeffs.m(0) + weight * coeffs.m(i)).norm();
        pole[k] = coeffs.m(i).norm();
        g_samples[k] = coeffs.m(i) * eps;
    }
    let eig = vacuum_eigenvalues_closed(model, li)?;
    let (_, crossed) = lambda_products(model, point, i)?;
    let closed_form = eval_f(ctx, g)? * eval_f(ctx, th - g * (lf - 1.0))?
        / (f_prime_zero(ctx) * guarded_f(ctx, th - g * lf, "theta-L*gamma")?)
        * eig.cal_d_tilde
        * crossed;
    Ok(ResidueScan {
        epsilons: RESIDUE_EPSILONS,
        combination,
        pole,
        extrapolated: extrapolate_to_zero(&RESIDUE_EPSILONS, &g_samples),
        closed_form,
    })
}

/// Denominator-free coefficient: the bracket dressing multiplies away
/// every pole of component nu, leaving a finite-order theta function in
/// each of the L+1 parameters.
pub fn normalized_coefficient(
    model: &ModelInstance,
    nu: usize,
    lambda0: Complex64,
    point: &SpectralPoint,
) -> Result<Complex64> {
    let l = model.length();
    if nu > l {
        return Err(Error::DimensionMismatch(format!(
            "component {nu} for chain length {l}"
        )));
    }
    let ctx = model.ctx();
    let g = model.gamma();
    let th = model.theta();
    let coeffs = coefficients(model, lambda0, point)?;
    let mut all = Vec::with_capacity(l + 1);
    all.push(lambda0);
    all.extend_from_slice(point.lambdas());
    let mut value = eval_f(ctx, th + g * (l as f64 - 1.0))?
        * eval_f(ctx, th + model.zeta() + all[nu])?
        * coeffs.m(nu);
    for rho in 0..=l {
        value *= eval_f(ctx, all[rho] * 2.0 + g)?;
        for j in rho + 1..=l {
            value *= eval_f(ctx, all[j] - all[rho])? * eval_f(ctx, all[j] + all[rho] + g)?;
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{z_closed_l1, z_symmetrized, SymmetrizedVariant};
    use crate::theta::{classify_order_norm, EllipticContext};
    use crate::tol;
    use std::cell::Cell;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(l: usize, trig: bool) -> ModelInstance {
        let ctx = if trig {
            EllipticContext::trigonometric()
        } else {
            EllipticContext::elliptic(c(0.0, 2.0)).unwrap()
        };
        let mu: Vec<Complex64> = (0..l)
            .map(|j| c(0.21 + 0.16 * j as f64, 0.05 - 0.03 * j as f64))
            .collect();
        ModelInstance::new(ctx, l, c(0.43, 0.07), c(0.57, -0.06), c(0.83, 0.11), mu).unwrap()
    }

    fn point(l: usize) -> SpectralPoint {
        SpectralPoint::new(
            (0..l)
                .map(|j| c(0.33 + 0.09 * j as f64, 0.08 - 0.05 * j as f64))
                .collect(),
        )
    }

    fn lambda0() -> Complex64 {
        c(0.19, -0.13)
    }

    fn operator_eval(m: &ModelInstance, p: &SpectralPoint) -> Result<Complex64> {
        z_algebraic(m, p)
    }

    #[test]
    fn relation_residual_vanishes_for_operator_route() {
        for (l, trig) in [(2, false), (2, true), (3, false)] {
            let m = model(l, trig);
            let (residual, scale) =
                fe_residual(&m, lambda0(), &point(l), &operator_eval).unwrap();
            assert!(
                residual <= tol::FUNCEQ_RESIDUAL * scale,
                "residual {residual:.3e} vs scale {scale:.3e} (L={l}, trig={trig})"
            );
        }
        // Closed form at length one.
        let m = model(1, false);
        let closed = |mm: &ModelInstance, p: &SpectralPoint| z_closed_l1(mm, p.lambdas()[0]);
        let (residual, scale) = fe_residual(&m, lambda0(), &point(1), &closed).unwrap();
        assert!(residual <= 1e-11 * scale, "{residual:.3e} vs {scale:.3e}");
    }

    #[test]
    fn relation_residual_detects_perturbation() {
        let m = model(2, false);
        let calls = Cell::new(0_usize);
        let perturbed = |mm: &ModelInstance, p: &SpectralPoint| -> Result<Complex64> {
            let v = z_algebraic(mm, p)?;
            calls.set(calls.get() + 1);
            Ok(if calls.get() == 1 { v * 1.01 } else { v })
        };
        let (residual, scale) = fe_residual(&m, lambda0(), &point(2), &perturbed).unwrap();
        assert!(
            residual > 1e-4 * scale,
            "a 1% perturbation must be visible: {residual:.3e} vs {scale:.3e}"
        );
    }

    #[test]
    fn distinguished_component_collapses_at_shifted_inhomogeneities() {
        let m = model(2, false);
        let p = point(2);
        for k in 0..2 {
            for sign in [1.0, -1.0] {
                let l0 = m.mu()[k] * sign - m.gamma();
                let coeffs = coefficients(&m, l0, &p).unwrap();
                let expect = vacuum_eigenvalues_closed(&m, l0).unwrap().cal_a_left;
                assert!(
                    (coeffs.m(0) - expect).norm() <= 1e-12 * expect.norm(),
                    "k={k}, sign={sign}: {} vs {}",
                    coeffs.m(0),
                    expect
                );
            }
        }
    }

    #[test]
    fn components_transpose_and_cross_as_stated() {
        let m = model(3, false);
        let p = point(3);
        let base = coefficients(&m, lambda0(), &p).unwrap();
        // Transposing two ordinary parameters swaps their components and
        // fixes the others.
        let mut swapped_lam = p.lambdas().to_vec();
        swapped_lam.swap(0, 1);
        let swapped = coefficients(&m, lambda0(), &SpectralPoint::new(swapped_lam)).unwrap();
        let close = |a: Complex64, b: Complex64, label: &str| {
            assert!(
                (a - b).norm() <= 1e-12 * a.norm().max(b.norm()),
                "{label}: {a} vs {b}"
            );
        };
        close(swapped.m(0), base.m(0), "component 0 under transposition");
        close(swapped.m(1), base.m(2), "component 1 swaps");
        close(swapped.m(2), base.m(1), "component 2 swaps");
        close(swapped.m(3), base.m(3), "component 3 fixed");
        // The crossing substitution on parameter 1 rescales component 1 by
        // the crossing factor and fixes the rest.
        let l1 = p.lambdas()[0];
        let crossed_point = p.with_lambda(0, -l1 - m.gamma());
        let crossed = coefficients(&m, lambda0(), &crossed_point).unwrap();
        let factor = crossing_factor(&m, l1).unwrap();
        close(crossed.m(0), base.m(0), "component 0 under crossing");
        close(crossed.m(1), factor * base.m(1), "component 1 rescales");
        close(crossed.m(2), base.m(2), "component 2 under crossing");
        close(crossed.m(3), base.m(3), "component 3 under crossing");
    }

    #[test]
    fn swapped_matrix_determinant_vanishes() {
        for (l, cap) in [(1, 1e-10), (2, tol::SWAPPED_DET), (3, tol::SWAPPED_DET)] {
            let m = model(l, false);
            let (det, scale) = swapped_matrix_det(&m, lambda0(), &point(l)).unwrap();
            assert!(
                det.norm() <= cap * scale,
                "L={l}: |det| {:.3e} vs scale {scale:.3e}",
                det.norm()
            );
        }
        // Sensitivity: a 1% bump of one entry must produce a visibly
        // nonzero determinant.
        let m = model(2, false);
        let matrix = swapped_matrix(&m, lambda0(), &point(2)).unwrap();
        let mut bumped = matrix.entries().clone();
        bumped[(0, 0)] *= 1.01;
        let (det, scale) = det_with_row_scale(&bumped);
        assert!(
            det.norm() > 1e-5 * scale,
            "|det| {:.3e} vs scale {scale:.3e}",
            det.norm()
        );
    }

    #[test]
    fn vanishing_pairs_zero_out_solutions_but_not_constants() {
        let m = model(2, false);
        let p = point(2);
        for k in 1..=2 {
            let scan = special_zero_scan(&m, &operator_eval, k, &p).unwrap();
            for row in &scan {
                for &r in row {
                    assert!(r <= tol::SPECIAL_ZERO, "k={k}: residual {r:.3e}");
                }
            }
        }
        let constant = |_: &ModelInstance, _: &SpectralPoint| Ok(Complex64::new(1.0, 0.0));
        let scan = special_zero_scan(&m, &constant, 1, &p).unwrap();
        for row in &scan {
            for &r in row {
                assert!((r - 1.0).abs() <= 1e-12, "constants are not solutions");
            }
        }
    }

    #[test]
    fn truncated_matrix_is_regular_at_vanishing_pairs() {
        for l in 2..=3 {
            let m = model(l, false);
            let pairs = special_pair_values(&m, l).unwrap();
            let p = point(l)
                .with_lambda(l - 2, pairs[0][0])
                .with_lambda(l - 1, pairs[1][0]);
            // The last two components of the coefficient vector vanish at
            // the pair, relative to the largest component.
            let coeffs = coefficients(&m, lambda0(), &p).unwrap();
            let top = coeffs
                .values()
                .iter()
                .map(|v| v.norm())
                .fold(0.0_f64, f64::max);
            assert!(coeffs.m(l - 1).norm() <= 1e-10 * top);
            assert!(coeffs.m(l).norm() <= 1e-10 * top);
            // The surviving relations have a regular coefficient matrix.
            let (det, scale) = special_zero_matrix_det(&m, lambda0(), &p).unwrap();
            assert!(
                det.norm() > 1e-6 * scale,
                "L={l}: |det| {:.3e} vs scale {scale:.3e}",
                det.norm()
            );
        }
    }

    #[test]
    fn reduced_vectors_agree_between_star_choices_up_to_one_factor() {
        for l in 2..=3 {
            let m = model(l, false);
            let rest = point(l - 1);
            let minus = reduced_coefficients(&m, lambda0(), &rest, StarChoice::Minus).unwrap();
            let plus = reduced_coefficients(&m, lambda0(), &rest, StarChoice::Plus).unwrap();
            let ratio0 = minus.m(0) / plus.m(0);
            for nu in 1..l {
                let ratio = minus.m(nu) / plus.m(nu);
                assert!(
                    (ratio - ratio0).norm() <= tol::REDUCED_RATIO_SPREAD * ratio0.norm(),
                    "L={l}, nu={nu}: ratio {ratio} vs {ratio0}"
                );
            }
        }
    }

    #[test]
    fn reduced_relation_holds_for_the_shorter_chain() {
        for l in 2..=3 {
            let m = model(l, false);
            let rest = point(l - 1);
            for star in [StarChoice::Minus, StarChoice::Plus] {
                let (residual, scale) =
                    reduced_fe_residual(&m, lambda0(), &rest, star, &operator_eval).unwrap();
                assert!(
                    residual <= tol::REDUCED_FUNCEQ * scale,
                    "L={l}, {star:?}: {residual:.3e} vs {scale:.3e}"
                );
            }
        }
    }

    #[test]
    fn reduced_vector_at_length_two_matches_length_one_components() {
        let m = model(2, false);
        let rest = point(1);
        let reduced = m.dropping_mu(1).unwrap();
        let direct = coefficients(&reduced, lambda0(), &rest).unwrap();
        let rc = reduced_coefficients(&m, lambda0(), &rest, StarChoice::Minus).unwrap();
        let ratio0 = rc.m(0) / direct.m(0);
        let ratio1 = rc.m(1) / direct.m(1);
        assert!(
            (ratio1 - ratio0).norm() <= 1e-10 * ratio0.norm(),
            "{ratio0} vs {ratio1}"
        );
    }

    #[test]
    fn reduced_relation_is_combination_of_shorter_relations() {
        for l in 2..=3 {
            let m = model(l, false);
            let (det, scale) =
                reduced_consistency_det(&m, lambda0(), &point(l - 1), StarChoice::Minus).unwrap();
            assert!(
                det.norm() <= tol::SWAPPED_DET * scale,
                "L={l}: |det| {:.3e} vs scale {scale:.3e}",
                det.norm()
            );
        }
    }

    #[test]
    fn reconstruction_recovers_operator_route() {
        let m2 = model(2, false);
        let p2 = point(2);
        let want2 = z_algebraic(&m2, &p2).unwrap();
        let last2 = reconstruct_from_reduction(&m2, &p2, ReductionRoute::Last).unwrap();
        assert!(
            (last2 - want2).norm() <= 1e-9 * want2.norm(),
            "{last2} vs {want2}"
        );
        let m3 = model(3, false);
        let p3 = point(3);
        let want3 = z_algebraic(&m3, &p3).unwrap();
        let last3 = reconstruct_from_reduction(&m3, &p3, ReductionRoute::Last).unwrap();
        assert!(
            (last3 - want3).norm() <= tol::RECONSTRUCTION * want3.norm(),
            "{last3} vs {want3}"
        );
        // The front-anchored variant calibrates its constant internally and
        // must then agree at unrelated points.
        for shift in [0.0, 0.07, -0.05] {
            let probe = SpectralPoint::new(
                p2.lambdas().iter().map(|&v| v + c(shift, -shift / 3.0)).collect(),
            );
            let want = z_algebraic(&m2, &probe).unwrap();
            let first = reconstruct_from_reduction(&m2, &probe, ReductionRoute::First).unwrap();
            assert!(
                (first - want).norm() <= 1e-9 * want.norm(),
                "shift {shift}: {first} vs {want}"
            );
        }
    }

    #[test]
    fn coefficient_poles_carry_the_stated_residues() {
        let m = model(2, false);
        let p = point(2);
        for i in 1..=2 {
            for scan in [
                residue_scan_same(&m, i, &p).unwrap(),
                residue_scan_crossing(&m, i, &p).unwrap(),
            ] {
                for k in 1..3 {
                    assert!(
                        scan.combination[k]
                            <= tol::RESIDUE_BOUNDED_FACTOR * scan.combination[0],
                        "i={i}: combination grew {:?}",
                        scan.combination
                    );
                }
                assert!(
                    scan.pole[1] > 5.0 * scan.pole[0],
                    "i={i}: no pole growth {:?}",
                    scan.pole
                );
                assert!(
                    (scan.extrapolated - scan.closed_form).norm()
                        <= tol::RESIDUE_VALUE * scan.closed_form.norm(),
                    "i={i}: residue {} vs closed form {}",
                    scan.extrapolated,
                    scan.closed_form
                );
            }
        }
    }

    #[test]
    fn normalized_components_classify_by_order_and_norm() {
        for trig in [false, true] {
            let m = model(2, false);
            let m = if trig { model(2, true) } else { m };
            let p = point(2);
            let l = 2_i64;
            let g = m.gamma();
            let th = m.theta();
            // Scan in the distinguished slot.
            for nu in 0..=2_usize {
                let (order, norm) = if nu == 0 {
                    (4 * l + 6, g * (l as f64 + 2.0) - th)
                } else {
                    (2 * l + 4, g * 3.0 - th)
                };
                let eval =
                    |x: Complex64| normalized_coefficient(&m, nu, x, &p);
                let (res_pi, res_second) =
                    classify_order_norm(m.ctx(), eval, order, norm).unwrap();
                assert!(
                    res_pi <= tol::MBAR_CLASSIFICATION && res_second <= tol::MBAR_CLASSIFICATION,
                    "slot 0, nu={nu}, trig={trig}: ({res_pi:.3e}, {res_second:.3e})"
                );
            }
            // Scan in the first ordinary slot.
            for nu in 0..=2_usize {
                let (order, norm) = if nu == 1 {
                    (4 * l + 6, g * (2.0 * l as f64 + 1.0))
                } else {
                    (2 * l + 4, g * (l as f64 + 2.0))
                };
                let eval = |x: Complex64| {
                    normalized_coefficient(&m, nu, lambda0(), &p.with_lambda(0, x))
                };
                let (res_pi, res_second) =
                    classify_order_norm(m.ctx(), eval, order, norm).unwrap();
                assert!(
                    res_pi <= tol::MBAR_CLASSIFICATION && res_second <= tol::MBAR_CLASSIFICATION,
                    "slot 1, nu={nu}, trig={trig}: ({res_pi:.3e}, {res_second:.3e})"
                );
            }
        }
    }

    #[test]
    fn symmetrized_route_satisfies_relation_too() {
        let m = model(2, false);
        let symm = |mm: &ModelInstance, p: &SpectralPoint| {
            z_symmetrized(mm, p, SymmetrizedVariant::Main)
        };
        let (residual, scale) = fe_residual(&m, lambda0(), &point(2), &symm).unwrap();
        assert!(
            residual <= tol::FUNCEQ_RESIDUAL * scale,
            "{residual:.3e} vs {scale:.3e}"
        );
    }
}
