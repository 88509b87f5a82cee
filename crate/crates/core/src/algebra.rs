//! Dense lattice operators and the exchange algebra of their blocks.
//!
//! A model instance fixes the chain length L, the crossing parameter gamma,
//! the boundary parameter zeta, the dynamical parameter theta, and one
//! inhomogeneity per site. Operators act on the 2^L-dimensional quantum
//! space (site 1 is the most significant bit, a clear bit is the plus
//! state); monodromies carry one extra auxiliary leg in front.
//!
//! The single-row monodromy and its reversed partner are the ordered
//! products
//!
//! ```text
//! T(lambda)    = R_{0,1}(lambda - mu_1, theta - gamma sum_{i>1} h_i) ... R_{0,L}(lambda - mu_L, theta)
//! Tbar(lambda) = R_{L,0}(lambda + mu_L, theta) ... R_{1,0}(lambda + mu_1, theta - gamma sum_{i>1} h_i)
//! ```
//!
//! and the double-row monodromy composes them around the reflecting end,
//! cal_T = T K_0 Tbar, with auxiliary-space blocks
//! cal_T = [[A, B], [C, D]]. The blocks obey the exchange relations probed
//! by [`algebra_relation_residual`]; scalar coefficients that depend on the
//! weight operator H act from the left as diagonal matrices graded by the
//! row weight.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, rel_residual, rel_residual_scaled};
use crate::theta::{eval_f, guarded_f, EllipticContext};
use crate::weights::{apply_embed_r, embed_r, leg_sign, KMatrix};

/// Largest chain length the dense operator layer supports.
pub const MAX_SYSTEM_SIZE: usize = 8;

/// A fully parameterized model on a chain of fixed length.
///
/// Construction enforces the genericity guards needed by every downstream
/// formula: the dynamical brackets f(theta + k gamma) for |k| <= L + 1, the
/// boundary brackets f(zeta +- mu_j) and f(theta + zeta +- mu_j), the
/// inhomogeneity separations f(mu_i -+ mu_j), and f(gamma) itself.
#[derive(Clone, Debug)]
pub struct ModelInstance {
    ctx: EllipticContext,
    length: usize,
    gamma: Complex64,
    zeta: Complex64,
    theta: Complex64,
    mu: Vec<Complex64>,
}

impl ModelInstance {
    pub fn new(
        ctx: EllipticContext,
        length: usize,
        gamma: Complex64,
        zeta: Complex64,
        theta: Complex64,
        mu: Vec<Complex64>,
    ) -> Result<Self> {
        if length == 0 || length > MAX_SYSTEM_SIZE {
            return Err(Error::UnsupportedSize(format!(
                "chain length {length} outside 1..={MAX_SYSTEM_SIZE}"
            )));
        }
        if mu.len() != length {
            return Err(Error::DimensionMismatch(format!(
                "{} inhomogeneities for chain length {length}",
                mu.len()
            )));
        }
        guarded_f(&ctx, gamma, "gamma")?;
        let bound = length as i64 + 1;
        for k in -bound..=bound {
            guarded_f(&ctx, theta + gamma * k as f64, &format!("theta{k:+}*gamma"))?;
        }
        for (j, &m) in mu.iter().enumerate() {
            guarded_f(&ctx, theta + zeta + m, &format!("theta+zeta+mu[{j}]"))?;
            guarded_f(&ctx, theta + zeta - m, &format!("theta+zeta-mu[{j}]"))?;
            guarded_f(&ctx, zeta + m, &format!("zeta+mu[{j}]"))?;
            guarded_f(&ctx, zeta - m, &format!("zeta-mu[{j}]"))?;
        }
        for i in 0..length {
            for j in i + 1..length {
                guarded_f(&ctx, mu[i] - mu[j], &format!("mu[{i}]-mu[{j}]"))?;
                guarded_f(&ctx, mu[i] + mu[j], &format!("mu[{i}]+mu[{j}]"))?;
            }
        }
        Ok(Self {
            ctx,
            length,
            gamma,
            zeta,
            theta,
            mu,
        })
    }

    pub fn ctx(&self) -> &EllipticContext {
        &self.ctx
    }

    /// Chain length L.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }

    pub fn theta(&self) -> Complex64 {
        self.theta
    }

    /// Inhomogeneities, 0-based (slot j holds the parameter of site j + 1).
    pub fn mu(&self) -> &[Complex64] {
        &self.mu
    }

    /// Dimension of the quantum space, 2^L.
    pub fn dim(&self) -> usize {
        1usize << self.length
    }

    /// Index of the highest-weight reference state (all plus).
    pub fn vacuum_index(&self) -> usize {
        0
    }

    /// Index of the lowest-weight reference state (all minus).
    pub fn dual_vacuum_index(&self) -> usize {
        self.dim() - 1
    }

    /// Weight L - 2 popcount of a quantum basis state.
    pub fn weight_of(&self, state: usize) -> i64 {
        self.length as i64 - 2 * (state.count_ones() as i64)
    }

    /// Same parameters on the chain with inhomogeneity slot `drop` removed.
    pub fn dropping_mu(&self, drop: usize) -> Result<Self> {
        if self.length < 2 {
            return Err(Error::UnsupportedSize(
                "cannot reduce a length-1 chain".into(),
            ));
        }
        if drop >= self.length {
            return Err(Error::DimensionMismatch(format!(
                "inhomogeneity slot {drop} outside 0..{}",
                self.length
            )));
        }
        let mut mu = self.mu.clone();
        mu.remove(drop);
        Self::new(
            self.ctx.clone(),
            self.length - 1,
            self.gamma,
            self.zeta,
            self.theta,
            mu,
        )
    }

    pub(crate) fn f(&self, arg: Complex64) -> Result<Complex64> {
        eval_f(&self.ctx, arg)
    }

    /// Product of brackets.
    pub(crate) fn brk(&self, args: &[Complex64]) -> Result<Complex64> {
        let mut p = Complex64::new(1.0, 0.0);
        for &a in args {
            p *= eval_f(&self.ctx, a)?;
        }
        Ok(p)
    }
}

/// Product direction of a single-row monodromy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Arguments lambda - mu_j, auxiliary leg in the first vertex slot.
    Forward,
    /// Arguments lambda + mu_j, auxiliary leg in the second vertex slot.
    Backward,
}

/// Auxiliary-space block of a monodromy, (row sign, column sign).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// (+, +)
    A,
    /// (+, -)
    B,
    /// (-, +)
    C,
    /// (-, -)
    D,
}

/// Dense operator together with its leg layout.
#[derive(Clone, Debug)]
pub struct LatticeOperator {
    matrix: Array2<Complex64>,
    sites: usize,
    has_aux: bool,
}

impl LatticeOperator {
    fn new(matrix: Array2<Complex64>, sites: usize, has_aux: bool) -> Self {
        let dim = (1usize << sites) << usize::from(has_aux);
        assert_eq!(matrix.nrows(), dim);
        assert_eq!(matrix.ncols(), dim);
        Self {
            matrix,
            sites,
            has_aux,
        }
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn has_aux(&self) -> bool {
        self.has_aux
    }

    /// Residual of the declared weight: max |(H X - X H) - w X| over the
    /// largest entry of X. Only defined on pure quantum-space operators.
    pub fn weight_defect(&self, declared: i64) -> f64 {
        assert!(!self.has_aux, "weight bookkeeping reads quantum legs only");
        let l = self.sites as i64;
        let scale = max_abs(&self.matrix).max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for ((row, col), entry) in self.matrix.indexed_iter() {
            let w_row = l - 2 * (row.count_ones() as i64);
            let w_col = l - 2 * (col.count_ones() as i64);
            let defect = ((w_row - w_col - declared) as f64) * entry;
            worst = worst.max(defect.norm() / scale);
        }
        worst
    }
}

/// Single-row monodromy embedded in a chain with `n_aux` auxiliary legs in
/// front; `aux_leg` selects which of them the product threads through, and
/// `extra_shift_legs` are added to every factor's dynamical shift.
fn monodromy_embedded(
    model: &ModelInstance,
    lambda: Complex64,
    theta: Complex64,
    direction: Direction,
    n_aux: usize,
    aux_leg: usize,
    extra_shift_legs: &[usize],
) -> Result<Array2<Complex64>> {
    let l = model.length;
    let n_legs = n_aux + l;
    let site_leg = |j: usize| n_aux + j - 1;
    let mut factors = Vec::with_capacity(l);
    for j in 1..=l {
        let mut shift_legs = Vec::from(extra_shift_legs);
        for i in j + 1..=l {
            shift_legs.push(site_leg(i));
        }
        let (arg, legs) = match direction {
            Direction::Forward => (lambda - model.mu[j - 1], (aux_leg, site_leg(j))),
            Direction::Backward => (lambda + model.mu[j - 1], (site_leg(j), aux_leg)),
        };
        factors.push(embed_r(
            &model.ctx,
            model.gamma,
            arg,
            theta,
            legs,
            &shift_legs,
            n_legs,
        )?);
    }
    // Forward: factor j = 1 leftmost. Backward: factor j = L leftmost.
    let ordered: Vec<&Array2<Complex64>> = match direction {
        Direction::Forward => factors.iter().collect(),
        Direction::Backward => factors.iter().rev().collect(),
    };
    let mut product = ordered[0].clone();
    for factor in &ordered[1..] {
        product = product.dot(*factor);
    }
    Ok(product)
}

/// Diagonal reflecting-end factor on one auxiliary leg of an embedded chain.
fn k_embedded(
    model: &ModelInstance,
    lambda: Complex64,
    theta: Complex64,
    n_aux: usize,
    aux_leg: usize,
) -> Result<Array2<Complex64>> {
    let k = KMatrix::new(&model.ctx, model.zeta, lambda, theta)?;
    let n_legs = n_aux + model.length;
    let dim = 1usize << n_legs;
    let mut m = Array2::from_elem((dim, dim), Complex64::new(0.0, 0.0));
    for state in 0..dim {
        m[(state, state)] = if leg_sign(state, aux_leg, n_legs) > 0 {
            k.k_plus
        } else {
            k.k_minus
        };
    }
    Ok(m)
}

pub(crate) fn monodromy_with_theta(
    model: &ModelInstance,
    lambda: Complex64,
    theta: Complex64,
    direction: Direction,
) -> Result<Array2<Complex64>> {
    monodromy_embedded(model, lambda, theta, direction, 1, 0, &[])
}

/// Single-row monodromy on the auxiliary leg plus quantum space.
pub fn build_monodromy(
    model: &ModelInstance,
    lambda: Complex64,
    direction: Direction,
) -> Result<LatticeOperator> {
    let m = monodromy_with_theta(model, lambda, model.theta, direction)?;
    Ok(LatticeOperator::new(m, model.length, true))
}

/// Double-row monodromy T K_0 Tbar on the auxiliary leg plus quantum space.
pub fn build_double_row(model: &ModelInstance, lambda: Complex64) -> Result<LatticeOperator> {
    let t = monodromy_with_theta(model, lambda, model.theta, Direction::Forward)?;
    let k = k_embedded(model, lambda, model.theta, 1, 0)?;
    let tbar = monodromy_with_theta(model, lambda, model.theta, Direction::Backward)?;
    Ok(LatticeOperator::new(
        t.dot(&k).dot(&tbar),
        model.length,
        true,
    ))
}

/// Apply the double-row B block to a quantum-space vector without building
/// any dense matrix: the vector is embedded with the auxiliary leg in the
/// minus state, threaded through Tbar, K, and T factor by factor, and the
/// plus half of the result is returned. One call costs O(L 2^L).
pub fn apply_block_b(
    model: &ModelInstance,
    lambda: Complex64,
    input: &[Complex64],
) -> Result<Vec<Complex64>> {
    let l = model.length;
    let d = model.dim();
    if input.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} for quantum dimension {d}",
            input.len()
        )));
    }
    let n_legs = l + 1;
    let mut w = vec![Complex64::new(0.0, 0.0); 2 * d];
    w[d..].copy_from_slice(input);
    // Tbar = Fbar_L ... Fbar_1 acts with Fbar_1 first.
    for j in 1..=l {
        let shift_legs: Vec<usize> = (j + 1..=l).collect();
        w = apply_embed_r(
            &model.ctx,
            model.gamma,
            lambda + model.mu[j - 1],
            model.theta,
            (j, 0),
            &shift_legs,
            n_legs,
            &w,
        )?;
    }
    let k = KMatrix::new(&model.ctx, model.zeta, lambda, model.theta)?;
    for (state, amp) in w.iter_mut().enumerate() {
        *amp *= if leg_sign(state, 0, n_legs) > 0 {
            k.k_plus
        } else {
            k.k_minus
        };
    }
    // T = F_1 ... F_L acts with F_L first.
    for j in (1..=l).rev() {
        let shift_legs: Vec<usize> = (j + 1..=l).collect();
        w = apply_embed_r(
            &model.ctx,
            model.gamma,
            lambda - model.mu[j - 1],
            model.theta,
            (0, j),
            &shift_legs,
            n_legs,
            &w,
        )?;
    }
    w.truncate(d);
    Ok(w)
}

/// Auxiliary-space block of a monodromy-type operator.
pub fn extract_block(op: &LatticeOperator, kind: BlockKind) -> Result<LatticeOperator> {
    if !op.has_aux {
        return Err(Error::DimensionMismatch(
            "block extraction needs an auxiliary leg".into(),
        ));
    }
    let d = 1usize << op.sites;
    let (row_off, col_off) = match kind {
        BlockKind::A => (0, 0),
        BlockKind::B => (0, d),
        BlockKind::C => (d, 0),
        BlockKind::D => (d, d),
    };
    let mut block = Array2::from_elem((d, d), Complex64::new(0.0, 0.0));
    for r in 0..d {
        for c in 0..d {
            block[(r, c)] = op.matrix[(row_off + r, col_off + c)];
        }
    }
    Ok(LatticeOperator::new(block, op.sites, false))
}

/// Left-multiply by a diagonal in the row weight: rows whose entries all
/// vanish are skipped without evaluating the coefficient, so structurally
/// empty weight sectors cannot trip spurious guards.
fn apply_h_coeff<G>(model: &ModelInstance, g: G, m: &Array2<Complex64>) -> Result<Array2<Complex64>>
where
    G: Fn(i64) -> Result<Complex64>,
{
    let mut out = m.clone();
    for (row, mut row_view) in out.rows_mut().into_iter().enumerate() {
        let live = row_view.iter().any(|z| z.norm() != 0.0);
        if !live {
            continue;
        }
        let coeff = g(model.weight_of(row))?;
        for z in row_view.iter_mut() {
            *z *= coeff;
        }
    }
    Ok(out)
}

/// The combination D - f(gamma) f(theta - gamma (H - 1) + 2 lambda) /
/// (f(2 lambda + gamma) f(theta - gamma (H - 1))) A of double-row blocks,
/// with the H-graded scalar acting from the left.
pub fn d_tilde(model: &ModelInstance, lambda: Complex64) -> Result<LatticeOperator> {
    let full = build_double_row(model, lambda)?;
    d_tilde_from(model, lambda, &full)
}

fn d_tilde_from(
    model: &ModelInstance,
    lambda: Complex64,
    full: &LatticeOperator,
) -> Result<LatticeOperator> {
    let a = extract_block(full, BlockKind::A)?;
    let d = extract_block(full, BlockKind::D)?;
    let f_gamma = model.f(model.gamma)?;
    let denom = guarded_f(&model.ctx, lambda * 2.0 + model.gamma, "2*lambda+gamma")?;
    let correction = apply_h_coeff(
        model,
        |w| {
            let shift = model.theta - model.gamma * (w - 1) as f64;
            Ok(f_gamma * model.f(shift + lambda * 2.0)? / (denom * model.f(shift)?))
        },
        a.matrix(),
    )?;
    Ok(LatticeOperator::new(
        d.matrix() - &correction,
        model.length,
        false,
    ))
}

/// Closed-form reference-state eigenvalues of the single-row and double-row
/// diagonal blocks.
#[derive(Clone, Copy, Debug)]
pub struct VacuumEigenvalues {
    /// A on the highest-weight state.
    pub a: Complex64,
    /// Reversed-row A on the highest-weight state.
    pub a_bar: Complex64,
    /// D on the highest-weight state.
    pub d: Complex64,
    /// Reversed-row D on the highest-weight state.
    pub d_bar: Complex64,
    /// A on the lowest-weight state (left action).
    pub left_a: Complex64,
    /// Reversed-row A on the lowest-weight state (left action).
    pub left_a_bar: Complex64,
    /// D on the lowest-weight state (left action).
    pub left_d: Complex64,
    /// Reversed-row D on the lowest-weight state (left action).
    pub left_d_bar: Complex64,
    /// Double-row A on the highest-weight state.
    pub cal_a: Complex64,
    /// Double-row D-tilde on the highest-weight state.
    pub cal_d_tilde: Complex64,
    /// Double-row A on the lowest-weight state (left action).
    pub cal_a_left: Complex64,
}

/// Evaluate all closed-form vacuum eigenvalues at one spectral parameter.
pub fn vacuum_eigenvalues_closed(
    model: &ModelInstance,
    lambda: Complex64,
) -> Result<VacuumEigenvalues> {
    let g = model.gamma;
    let th = model.theta;
    let z = model.zeta;
    let lf = model.length as f64;
    let mut prod_minus_g = Complex64::new(1.0, 0.0); // prod f(lambda - mu_j + gamma)
    let mut prod_plus_g = Complex64::new(1.0, 0.0); // prod f(lambda + mu_j + gamma)
    let mut prod_minus = Complex64::new(1.0, 0.0); // prod f(lambda - mu_j)
    let mut prod_plus = Complex64::new(1.0, 0.0); // prod f(lambda + mu_j)
    for &m in &model.mu {
        prod_minus_g *= model.f(lambda - m + g)?;
        prod_plus_g *= model.f(lambda + m + g)?;
        prod_minus *= model.f(lambda - m)?;
        prod_plus *= model.f(lambda + m)?;
    }
    let f_theta = model.f(th)?;
    let denom_tz = guarded_f(&model.ctx, th + z + lambda, "theta+zeta+lambda")?;
    let denom_2lg = guarded_f(&model.ctx, lambda * 2.0 + g, "2*lambda+gamma")?;
    let cal_a = model.f(z + lambda)? * model.f(th + z - lambda)? / denom_tz * prod_minus_g
        * prod_plus_g;
    let cal_d_tilde = model.f(z - lambda - g)?
        * model.brk(&[lambda * 2.0, th + z + lambda + g, th - g * lf])?
        / (denom_2lg * denom_tz * model.f(th - g * (lf - 1.0))?)
        * prod_minus
        * prod_plus;
    let cal_a_left = model.f(z - lambda)? * model.f(g)? * model.f(th + g * (lf - 1.0) - lambda * 2.0)?
        / (denom_2lg * model.f(th + g * (lf - 1.0))?)
        * prod_minus_g
        * prod_plus_g
        + model.f(z + lambda + g)?
            * model.brk(&[lambda * 2.0, th + z - lambda - g, th + g * lf])?
            / (denom_2lg * denom_tz * model.f(th + g * (lf - 1.0))?)
            * prod_minus
            * prod_plus;
    Ok(VacuumEigenvalues {
        a: prod_minus_g,
        a_bar: prod_plus_g,
        d: model.f(th + g)? / model.f(th - g * (lf - 1.0))? * prod_minus,
        d_bar: model.f(th - g * lf)? / f_theta * prod_plus,
        left_a: model.f(th - g)? / model.f(th + g * (lf - 1.0))? * prod_minus,
        left_a_bar: model.f(th + g * lf)? / f_theta * prod_plus,
        left_d: prod_minus_g,
        left_d_bar: prod_plus_g,
        cal_a,
        cal_d_tilde,
        cal_a_left,
    })
}

/// One measured eigen-relation: closed form against the dense action, plus
/// the relative size of the image component orthogonal to the reference
/// state.
#[derive(Clone, Debug)]
pub struct EigenCheck {
    pub name: &'static str,
    pub closed_vs_measured: f64,
    pub orthogonal: f64,
}

fn column_action(m: &Array2<Complex64>, index: usize) -> (Complex64, f64) {
    let dim = m.nrows();
    let mut norm_sq = 0.0_f64;
    let mut rest_sq = 0.0_f64;
    let mut coeff = Complex64::new(0.0, 0.0);
    for r in 0..dim {
        let v = m[(r, index)];
        norm_sq += v.norm_sqr();
        if r == index {
            coeff = v;
        } else {
            rest_sq += v.norm_sqr();
        }
    }
    let norm = norm_sq.sqrt();
    let orth = if norm == 0.0 {
        0.0
    } else {
        rest_sq.sqrt() / norm
    };
    (coeff, orth)
}

fn row_action(m: &Array2<Complex64>, index: usize) -> (Complex64, f64) {
    let dim = m.ncols();
    let mut norm_sq = 0.0_f64;
    let mut rest_sq = 0.0_f64;
    let mut coeff = Complex64::new(0.0, 0.0);
    for c in 0..dim {
        let v = m[(index, c)];
        norm_sq += v.norm_sqr();
        if c == index {
            coeff = v;
        } else {
            rest_sq += v.norm_sqr();
        }
    }
    let norm = norm_sq.sqrt();
    let orth = if norm == 0.0 {
        0.0
    } else {
        rest_sq.sqrt() / norm
    };
    (coeff, orth)
}

/// Compare every closed-form vacuum eigenvalue against the dense operator
/// action and measure the annihilation of the reference state by both
/// off-diagonal single-row blocks. Returns the eigen checks together with
/// (C annihilation, reversed-C annihilation) residuals relative to the
/// block scale.
pub fn vacuum_checks(
    model: &ModelInstance,
    lambda: Complex64,
) -> Result<(Vec<EigenCheck>, f64, f64)> {
    let closed = vacuum_eigenvalues_closed(model, lambda)?;
    let fwd = build_monodromy(model, lambda, Direction::Forward)?;
    let bwd = build_monodromy(model, lambda, Direction::Backward)?;
    let full = build_double_row(model, lambda)?;
    let dt = d_tilde_from(model, lambda, &full)?;
    let vac = model.vacuum_index();
    let dual = model.dual_vacuum_index();
    let mut checks = Vec::new();
    let mut push_right = |name: &'static str, m: &Array2<Complex64>, closed_v: Complex64| {
        let (measured, orth) = column_action(m, vac);
        checks.push(EigenCheck {
            name,
            closed_vs_measured: (measured - closed_v).norm()
                / closed_v.norm().max(measured.norm()).max(f64::MIN_POSITIVE),
            orthogonal: orth,
        });
    };
    let a_f = extract_block(&fwd, BlockKind::A)?;
    let d_f = extract_block(&fwd, BlockKind::D)?;
    let a_b = extract_block(&bwd, BlockKind::A)?;
    let d_b = extract_block(&bwd, BlockKind::D)?;
    let cal_a = extract_block(&full, BlockKind::A)?;
    push_right("A|0>", a_f.matrix(), closed.a);
    push_right("Abar|0>", a_b.matrix(), closed.a_bar);
    push_right("D|0>", d_f.matrix(), closed.d);
    push_right("Dbar|0>", d_b.matrix(), closed.d_bar);
    push_right("calA|0>", cal_a.matrix(), closed.cal_a);
    push_right("calDtilde|0>", dt.matrix(), closed.cal_d_tilde);
    let mut push_left = |name: &'static str, m: &Array2<Complex64>, closed_v: Complex64| {
        let (measured, orth) = row_action(m, dual);
        checks.push(EigenCheck {
            name,
            closed_vs_measured: (measured - closed_v).norm()
                / closed_v.norm().max(measured.norm()).max(f64::MIN_POSITIVE),
            orthogonal: orth,
        });
    };
    push_left("<0bar|A", a_f.matrix(), closed.left_a);
    push_left("<0bar|Abar", a_b.matrix(), closed.left_a_bar);
    push_left("<0bar|D", d_f.matrix(), closed.left_d);
    push_left("<0bar|Dbar", d_b.matrix(), closed.left_d_bar);
    push_left("<0bar|calA", cal_a.matrix(), closed.cal_a_left);
    let c_f = extract_block(&fwd, BlockKind::C)?;
    let c_b = extract_block(&bwd, BlockKind::C)?;
    let annihilation = |m: &Array2<Complex64>| -> f64 {
        let scale = max_abs(m).max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for r in 0..m.nrows() {
            worst = worst.max(m[(r, vac)].norm());
        }
        worst / scale
    };
    Ok((checks, annihilation(c_f.matrix()), annihilation(c_b.matrix())))
}

/// The exchange relations of the operator layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelationId {
    /// Quadratic relation of the forward single-row monodromy.
    Dyba,
    /// Quadratic relation of the reversed single-row monodromy.
    DybaBar,
    /// Mixed relation between the two single-row monodromies.
    DybaTtbar,
    /// Quadratic relation of the double-row monodromy.
    Drea,
    /// Commutativity of the double-row B blocks.
    RelBb,
    /// Exchange of double-row A past B.
    RelAb,
    /// Exchange of double-row D-tilde past B.
    RelDb,
    /// Exchange of double-row A past a full product of L B blocks.
    RelAbb,
    /// Reordering of C and reversed-B inside one row pair.
    Cbb,
    /// Reordering of B and reversed-C inside one row pair.
    Bcc,
    /// Crossing covariance of the double-row B block.
    BCrossing,
}

impl RelationId {
    pub const ALL: [RelationId; 11] = [
        RelationId::Dyba,
        RelationId::DybaBar,
        RelationId::DybaTtbar,
        RelationId::Drea,
        RelationId::RelBb,
        RelationId::RelAb,
        RelationId::RelDb,
        RelationId::RelAbb,
        RelationId::Cbb,
        RelationId::Bcc,
        RelationId::BCrossing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RelationId::Dyba => "dyba",
            RelationId::DybaBar => "dyba-bar",
            RelationId::DybaTtbar => "dyba-ttbar",
            RelationId::Drea => "drea",
            RelationId::RelBb => "bb-commute",
            RelationId::RelAb => "a-past-b",
            RelationId::RelDb => "dtilde-past-b",
            RelationId::RelAbb => "a-past-b-product",
            RelationId::Cbb => "c-bbar-reorder",
            RelationId::Bcc => "b-cbar-reorder",
            RelationId::BCrossing => "b-crossing",
        }
    }
}

/// Double-row block B at one spectral parameter.
fn block_b(model: &ModelInstance, lambda: Complex64) -> Result<Array2<Complex64>> {
    let full = build_double_row(model, lambda)?;
    Ok(extract_block(&full, BlockKind::B)?.matrix().clone())
}

/// Two-auxiliary-leg embedding helpers for the quadratic relations.
struct TwoAux<'m> {
    model: &'m ModelInstance,
}

impl<'m> TwoAux<'m> {
    fn site_legs(&self) -> Vec<usize> {
        (0..self.model.length).map(|j| 2 + j).collect()
    }

    /// Vertex factor on the two auxiliary legs; `swap` reverses the slots
    /// and `shift_h` grades the argument by the full quantum weight.
    fn r_aux(&self, arg: Complex64, swap: bool, shift_h: bool) -> Result<Array2<Complex64>> {
        let legs = if swap { (1, 0) } else { (0, 1) };
        let shifts = if shift_h { self.site_legs() } else { Vec::new() };
        embed_r(
            &self.model.ctx,
            self.model.gamma,
            arg,
            self.model.theta,
            legs,
            &shifts,
            2 + self.model.length,
        )
    }

    /// Single-row monodromy through one auxiliary leg; `shift_other` grades
    /// its dynamical parameter by the other auxiliary leg's sign.
    fn mono(
        &self,
        lambda: Complex64,
        aux: usize,
        direction: Direction,
        shift_other: bool,
    ) -> Result<Array2<Complex64>> {
        let extra = if shift_other { vec![1 - aux] } else { Vec::new() };
        monodromy_embedded(
            self.model,
            lambda,
            self.model.theta,
            direction,
            2,
            aux,
            &extra,
        )
    }

    /// Double-row monodromy through one auxiliary leg.
    fn double_row(&self, lambda: Complex64, aux: usize) -> Result<Array2<Complex64>> {
        let t = self.mono(lambda, aux, Direction::Forward, false)?;
        let k = k_embedded(self.model, lambda, self.model.theta, 2, aux)?;
        let tbar = self.mono(lambda, aux, Direction::Backward, false)?;
        Ok(t.dot(&k).dot(&tbar))
    }
}

/// Residual of one exchange relation, max |LHS - RHS| over the scale of the
/// larger side. `lambda0` is the first spectral argument; `others` supplies
/// the remaining ones (one value for the two-argument relations, L values
/// for the product relation, none for the crossing relation).
pub fn algebra_relation_residual(
    model: &ModelInstance,
    id: RelationId,
    lambda0: Complex64,
    others: &[Complex64],
) -> Result<f64> {
    let need = match id {
        RelationId::RelAbb => model.length,
        RelationId::Cbb | RelationId::Bcc | RelationId::BCrossing => 0,
        _ => 1,
    };
    if others.len() < need {
        return Err(Error::DimensionMismatch(format!(
            "relation {} needs {need} extra spectral parameters, got {}",
            id.name(),
            others.len()
        )));
    }
    match id {
        RelationId::Dyba => {
            let two = TwoAux { model };
            let (l1, l2) = (lambda0, others[0]);
            let lhs = two
                .r_aux(l1 - l2, false, true)?
                .dot(&two.mono(l1, 0, Direction::Forward, false)?)
                .dot(&two.mono(l2, 1, Direction::Forward, true)?);
            let rhs = two
                .mono(l2, 1, Direction::Forward, false)?
                .dot(&two.mono(l1, 0, Direction::Forward, true)?)
                .dot(&two.r_aux(l1 - l2, false, false)?);
            Ok(rel_residual(&lhs, &rhs))
        }
        RelationId::DybaBar => {
            let two = TwoAux { model };
            let (l1, l2) = (lambda0, others[0]);
            let lhs = two
                .r_aux(l1 - l2, true, false)?
                .dot(&two.mono(l1, 0, Direction::Backward, true)?)
                .dot(&two.mono(l2, 1, Direction::Backward, false)?);
            let rhs = two
                .mono(l2, 1, Direction::Backward, true)?
                .dot(&two.mono(l1, 0, Direction::Backward, false)?)
                .dot(&two.r_aux(l1 - l2, true, true)?);
            Ok(rel_residual(&lhs, &rhs))
        }
        RelationId::DybaTtbar => {
            let two = TwoAux { model };
            let (l1, l2) = (lambda0, others[0]);
            let lhs = two
                .mono(l1, 0, Direction::Forward, true)?
                .dot(&two.r_aux(l1 + l2, false, false)?)
                .dot(&two.mono(l2, 1, Direction::Backward, true)?);
            let rhs = two
                .mono(l2, 1, Direction::Backward, false)?
                .dot(&two.r_aux(l1 + l2, false, true)?)
                .dot(&two.mono(l1, 0, Direction::Forward, false)?);
            Ok(rel_residual(&lhs, &rhs))
        }
        RelationId::Drea => {
            let two = TwoAux { model };
            let (l1, l2) = (lambda0, others[0]);
            let lhs = two
                .r_aux(l1 - l2, false, true)?
                .dot(&two.double_row(l1, 0)?)
                .dot(&two.r_aux(l1 + l2, true, true)?)
                .dot(&two.double_row(l2, 1)?);
            let rhs = two
                .double_row(l2, 1)?
                .dot(&two.r_aux(l1 + l2, false, true)?)
                .dot(&two.double_row(l1, 0)?)
                .dot(&two.r_aux(l1 - l2, true, true)?);
            Ok(rel_residual(&lhs, &rhs))
        }
        RelationId::RelBb => {
            let b0 = block_b(model, lambda0)?;
            let b1 = block_b(model, others[0])?;
            Ok(rel_residual(&b0.dot(&b1), &b1.dot(&b0)))
        }
        RelationId::RelAb => rel_ab_residual(model, lambda0, others[0]),
        RelationId::RelDb => rel_db_residual(model, lambda0, others[0]),
        RelationId::RelAbb => rel_abb_residual(model, lambda0, &others[..model.length]),
        RelationId::Cbb => cbb_residual(model, lambda0),
        RelationId::Bcc => bcc_residual(model, lambda0),
        RelationId::BCrossing => b_crossing_residual(model, lambda0),
    }
}

fn rel_ab_residual(model: &ModelInstance, l0: Complex64, l1: Complex64) -> Result<f64> {
    let g = model.gamma;
    let th = model.theta;
    let full0 = build_double_row(model, l0)?;
    let full1 = build_double_row(model, l1)?;
    let a0 = extract_block(&full0, BlockKind::A)?;
    let a1 = extract_block(&full1, BlockKind::A)?;
    let b0 = extract_block(&full0, BlockKind::B)?;
    let b1 = extract_block(&full1, BlockKind::B)?;
    let dt1 = d_tilde_from(model, l1, &full1)?;
    let lhs = a0.matrix().dot(b1.matrix());
    let c1 = model.brk(&[l1 - l0 + g, l1 + l0])?
        / (guarded_f(&model.ctx, l1 - l0, "lambda1-lambda0")?
            * guarded_f(&model.ctx, l1 + l0 + g, "lambda1+lambda0+gamma")?);
    let denom_2l1 = guarded_f(&model.ctx, l1 * 2.0 + g, "2*lambda1+gamma")?;
    let f_l1_l0 = model.f(l1 - l0)?;
    let t2 = apply_h_coeff(
        model,
        |w| {
            let shift = th - g * (w + 1) as f64;
            Ok(model.brk(&[g, l1 * 2.0, shift + l1 - l0])? / (f_l1_l0 * denom_2l1 * model.f(shift)?))
        },
        &b0.matrix().dot(a1.matrix()),
    )?;
    let f_l1_l0_g = model.f(l1 + l0 + g)?;
    let t3 = apply_h_coeff(
        model,
        |w| {
            let shift = th - g * (w + 2) as f64;
            Ok(model.brk(&[g, shift - l1 - l0])? / (f_l1_l0_g * model.f(shift)?))
        },
        &b0.matrix().dot(dt1.matrix()),
    )?;
    let t1 = b1.matrix().dot(a0.matrix()).mapv(|e| e * c1);
    let term_scale = max_abs(&t1).max(max_abs(&t2)).max(max_abs(&t3));
    let rhs = t1 - &t2 - &t3;
    Ok(rel_residual_scaled(&lhs, &rhs, term_scale))
}

fn rel_db_residual(model: &ModelInstance, l0: Complex64, l1: Complex64) -> Result<f64> {
    let g = model.gamma;
    let th = model.theta;
    let full0 = build_double_row(model, l0)?;
    let full1 = build_double_row(model, l1)?;
    let dt0 = d_tilde_from(model, l0, &full0)?;
    let dt1 = d_tilde_from(model, l1, &full1)?;
    let a1 = extract_block(&full1, BlockKind::A)?;
    let b0 = extract_block(&full0, BlockKind::B)?;
    let b1 = extract_block(&full1, BlockKind::B)?;
    let lhs = dt0.matrix().dot(b1.matrix());
    let f_l0_l1 = guarded_f(&model.ctx, l0 - l1, "lambda0-lambda1")?;
    let f_sum_g = guarded_f(&model.ctx, l1 + l0 + g, "lambda1+lambda0+gamma")?;
    let denom_2l0 = guarded_f(&model.ctx, l0 * 2.0 + g, "2*lambda0+gamma")?;
    let denom_2l1 = guarded_f(&model.ctx, l1 * 2.0 + g, "2*lambda1+gamma")?;
    let t1 = apply_h_coeff(
        model,
        |w| {
            let wf = w as f64;
            Ok(model.brk(&[l0 - l1 + g, l1 + l0 + g * 2.0, th - g * wf, th - g * (wf + 1.0)])?
                / (f_l0_l1
                    * f_sum_g
                    * model.f(th - g * (wf - 1.0))?
                    * model.f(th - g * (wf + 2.0))?))
        },
        &b1.matrix().dot(dt0.matrix()),
    )?;
    let t2 = apply_h_coeff(
        model,
        |w| {
            let wf = w as f64;
            Ok(
                model.brk(&[g, l0 * 2.0 + g * 2.0, th - g * wf, th - g * (wf + 1.0) + l0 - l1])?
                    / (f_l0_l1
                        * denom_2l0
                        * model.f(th - g * (wf - 1.0))?
                        * model.f(th - g * (wf + 2.0))?),
            )
        },
        &b0.matrix().dot(dt1.matrix()),
    )?;
    let t3 = apply_h_coeff(
        model,
        |w| {
            let wf = w as f64;
            Ok(model.brk(&[
                l0 * 2.0 + g * 2.0,
                l1 * 2.0,
                g,
                th - g * wf,
                th - g * wf + l0 + l1,
            ])? / (denom_2l0
                * denom_2l1
                * f_sum_g
                * model.f(th - g * (wf - 1.0))?
                * model.f(th - g * (wf + 1.0))?))
        },
        &b0.matrix().dot(a1.matrix()),
    )?;
    let term_scale = max_abs(&t1).max(max_abs(&t2)).max(max_abs(&t3));
    let rhs = t1 - &t2 + &t3;
    Ok(rel_residual_scaled(&lhs, &rhs, term_scale))
}

fn rel_abb_residual(model: &ModelInstance, l0: Complex64, lam: &[Complex64]) -> Result<f64> {
    let g = model.gamma;
    let th = model.theta;
    let l = model.length;
    let full0 = build_double_row(model, l0)?;
    let a0 = extract_block(&full0, BlockKind::A)?.matrix().clone();
    let b0 = extract_block(&full0, BlockKind::B)?.matrix().clone();
    let mut a_i = Vec::with_capacity(l);
    let mut b_i = Vec::with_capacity(l);
    let mut dt_i = Vec::with_capacity(l);
    for &li in lam {
        let full = build_double_row(model, li)?;
        a_i.push(extract_block(&full, BlockKind::A)?.matrix().clone());
        b_i.push(extract_block(&full, BlockKind::B)?.matrix().clone());
        dt_i.push(d_tilde_from(model, li, &full)?.matrix().clone());
    }
    let b_product = |skip: Option<usize>, include_b0: bool| -> Array2<Complex64> {
        let dim = model.dim();
        let mut prod = crate::linalg::identity(dim);
        if include_b0 {
            prod = prod.dot(&b0);
        }
        for (j, b) in b_i.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            prod = prod.dot(b);
        }
        prod
    };
    let lhs = a0.dot(&b_product(None, false));
    // First term: plain scalar times B_1 ... B_L A_0.
    let mut c1 = Complex64::new(1.0, 0.0);
    for &lj in lam {
        c1 *= model.brk(&[lj - l0 + g, lj + l0])?
            / (guarded_f(&model.ctx, lj - l0, "lambda_j-lambda0")?
                * guarded_f(&model.ctx, lj + l0 + g, "lambda_j+lambda0+gamma")?);
    }
    let mut rhs = b_product(None, false).dot(&a0).mapv(|e| e * c1);
    let mut term_scale = max_abs(&rhs);
    for i in 0..l {
        let li = lam[i];
        let mut pair_i = Complex64::new(1.0, 0.0);
        let mut pair_i_cross = Complex64::new(1.0, 0.0);
        for (j, &lj) in lam.iter().enumerate() {
            if j == i {
                continue;
            }
            pair_i *= model.brk(&[lj - li + g, lj + li])?
                / (guarded_f(&model.ctx, lj - li, "lambda_j-lambda_i")?
                    * guarded_f(&model.ctx, lj + li + g, "lambda_j+lambda_i+gamma")?);
            pair_i_cross *= model.brk(&[li - lj + g, li + lj + g * 2.0])?
                / (model.f(li - lj)? * model.f(li + lj + g)?);
        }
        let denom_2li = guarded_f(&model.ctx, li * 2.0 + g, "2*lambda_i+gamma")?;
        let f_li_l0 = guarded_f(&model.ctx, li - l0, "lambda_i-lambda0")?;
        let f_sum = guarded_f(&model.ctx, li + l0 + g, "lambda_i+lambda0+gamma")?;
        let term_a = apply_h_coeff(
            model,
            |w| {
                let shift = th - g * (w + 1) as f64;
                Ok(model.brk(&[g, li * 2.0, shift + li - l0])?
                    / (f_li_l0 * denom_2li * model.f(shift)?)
                    * pair_i)
            },
            &b_product(Some(i), true).dot(&a_i[i]),
        )?;
        term_scale = term_scale.max(max_abs(&term_a));
        rhs = rhs - &term_a;
        let term_d = apply_h_coeff(
            model,
            |w| {
                let wf = w as f64;
                let pref = model.f(th - g * (wf + 2.0 * l as f64 - 1.0))?
                    / model.f(th - g * (wf + 2.0 * l as f64))?;
                Ok(pref * model.brk(&[g, th - g * (wf + 2.0) - li - l0])?
                    / (f_sum * model.f(th - g * (wf + 1.0))?)
                    * pair_i_cross)
            },
            &b_product(Some(i), true).dot(&dt_i[i]),
        )?;
        term_scale = term_scale.max(max_abs(&term_d));
        rhs = rhs - &term_d;
    }
    Ok(rel_residual_scaled(&lhs, &rhs, term_scale))
}

fn cbb_residual(model: &ModelInstance, lambda: Complex64) -> Result<f64> {
    let g = model.gamma;
    let th = model.theta;
    let block = |theta: Complex64, dir: Direction, kind: BlockKind| -> Result<Array2<Complex64>> {
        let m = monodromy_with_theta(model, lambda, theta, dir)?;
        let op = LatticeOperator::new(m, model.length, true);
        Ok(extract_block(&op, kind)?.matrix().clone())
    };
    let lhs = block(th, Direction::Forward, BlockKind::C)?
        .dot(&block(th, Direction::Backward, BlockKind::B)?);
    let denom = guarded_f(&model.ctx, lambda * 2.0 + g, "2*lambda+gamma")?;
    let pref = model.f(g)? / denom;
    let aa = apply_h_coeff(
        model,
        |w| {
            let shift = th - g * (w - 1) as f64;
            Ok(pref * model.f(shift + lambda * 2.0)? / model.f(shift)?)
        },
        &block(th + g, Direction::Backward, BlockKind::A)?
            .dot(&block(th + g, Direction::Forward, BlockKind::A)?),
    )?;
    let dd_scalar = pref * model.f(th + g + lambda * 2.0)? / model.f(th + g)?;
    let dd = block(th, Direction::Forward, BlockKind::D)?
        .dot(&block(th, Direction::Backward, BlockKind::D)?)
        .mapv(|e| e * dd_scalar);
    let bc = block(th + g, Direction::Backward, BlockKind::B)?
        .dot(&block(th + g, Direction::Forward, BlockKind::C)?);
    let term_scale = max_abs(&bc).max(max_abs(&aa)).max(max_abs(&dd));
    let rhs = bc + &aa - &dd;
    Ok(rel_residual_scaled(&lhs, &rhs, term_scale))
}

fn bcc_residual(model: &ModelInstance, lambda: Complex64) -> Result<f64> {
    let g = model.gamma;
    let th = model.theta;
    let block = |theta: Complex64, dir: Direction, kind: BlockKind| -> Result<Array2<Complex64>> {
        let m = monodromy_with_theta(model, lambda, theta, dir)?;
        let op = LatticeOperator::new(m, model.length, true);
        Ok(extract_block(&op, kind)?.matrix().clone())
    };
    let lhs = block(th, Direction::Forward, BlockKind::B)?
        .dot(&block(th, Direction::Backward, BlockKind::C)?);
    let denom = guarded_f(&model.ctx, lambda * 2.0 + g, "2*lambda+gamma")?;
    let pref = model.f(g)? / denom;
    let dd = apply_h_coeff(
        model,
        |w| {
            let shift = th - g * (w + 1) as f64;
            Ok(pref * model.f(shift - lambda * 2.0)? / model.f(shift)?)
        },
        &block(th - g, Direction::Backward, BlockKind::D)?
            .dot(&block(th - g, Direction::Forward, BlockKind::D)?),
    )?;
    let aa_scalar = pref * model.f(th - g - lambda * 2.0)? / model.f(th - g)?;
    let aa = block(th, Direction::Forward, BlockKind::A)?
        .dot(&block(th, Direction::Backward, BlockKind::A)?)
        .mapv(|e| e * aa_scalar);
    let cb = block(th - g, Direction::Backward, BlockKind::C)?
        .dot(&block(th - g, Direction::Forward, BlockKind::B)?);
    let term_scale = max_abs(&cb).max(max_abs(&dd)).max(max_abs(&aa));
    let rhs = cb + &dd - &aa;
    Ok(rel_residual_scaled(&lhs, &rhs, term_scale))
}

fn b_crossing_residual(model: &ModelInstance, lambda: Complex64) -> Result<f64> {
    let g = model.gamma;
    let lhs = block_b(model, -lambda - g)?;
    let factor = -model.brk(&[lambda * 2.0 + g * 2.0, model.theta + model.zeta + lambda])?
        / (guarded_f(&model.ctx, lambda * 2.0, "2*lambda")?
            * guarded_f(
                &model.ctx,
                model.theta + model.zeta - lambda - g,
                "theta+zeta-lambda-gamma",
            )?);
    let rhs = block_b(model, lambda)?.mapv(|e| e * factor);
    Ok(rel_residual(&lhs, &rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

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

    #[test]
    fn rejects_degenerate_parameters_by_name() {
        let ctx = EllipticContext::elliptic(c(0.0, 2.0)).unwrap();
        // theta = -2 gamma collides with the dynamical bracket ladder.
        let bad = ModelInstance::new(
            ctx,
            2,
            c(0.4, 0.0),
            c(0.6, 0.0),
            c(-0.8, 0.0),
            vec![c(0.2, 0.0), c(0.35, 0.0)],
        );
        match bad {
            Err(Error::DegenerateParameter(msg)) => assert!(msg.contains("theta")),
            other => panic!("expected degenerate-parameter rejection, got {other:?}"),
        }
    }

    #[test]
    fn blocks_carry_declared_weights() {
        for trig in [false, true] {
            let m = model(2, trig);
            let lambda = c(0.31, 0.12);
            let full = build_double_row(&m, lambda).unwrap();
            let dt = d_tilde(&m, lambda).unwrap();
            let pairs = [
                (extract_block(&full, BlockKind::A).unwrap(), 0),
                (extract_block(&full, BlockKind::B).unwrap(), -2),
                (extract_block(&full, BlockKind::C).unwrap(), 2),
                (extract_block(&full, BlockKind::D).unwrap(), 0),
                (dt, 0),
            ];
            for (op, w) in pairs {
                assert!(
                    op.weight_defect(w) <= tol::WEIGHT_BOOKKEEPING,
                    "weight {w} defect {} (trig={trig})",
                    op.weight_defect(w)
                );
            }
        }
    }

    #[test]
    fn vacuum_checks_pass_at_small_sizes() {
        for l in 1..=3 {
            let m = model(l, false);
            let (checks, ann_c, ann_cbar) = vacuum_checks(&m, c(0.29, 0.08)).unwrap();
            assert_eq!(checks.len(), 11);
            for chk in checks {
                assert!(
                    chk.closed_vs_measured <= tol::VACUUM_EIGENVALUE,
                    "{} deviation {}",
                    chk.name,
                    chk.closed_vs_measured
                );
                assert!(
                    chk.orthogonal <= tol::VACUUM_ORTHOGONAL,
                    "{} orthogonal {}",
                    chk.name,
                    chk.orthogonal
                );
            }
            assert!(ann_c <= tol::VACUUM_ANNIHILATION);
            assert!(ann_cbar <= tol::VACUUM_ANNIHILATION);
        }
    }

    #[test]
    fn vector_application_matches_dense_block() {
        for trig in [false, true] {
            let m = model(3, trig);
            let lambda = c(0.27, -0.06);
            let full = build_double_row(&m, lambda).unwrap();
            let b = extract_block(&full, BlockKind::B).unwrap();
            let d = m.dim();
            let v: Vec<Complex64> = (0..d)
                .map(|s| c(0.3 + 0.11 * s as f64, -0.2 + 0.07 * s as f64))
                .collect();
            let got = apply_block_b(&m, lambda, &v).unwrap();
            let mut scale = 0.0_f64;
            let mut worst = 0.0_f64;
            for r in 0..d {
                let mut want = Complex64::new(0.0, 0.0);
                for s in 0..d {
                    want += b.matrix()[(r, s)] * v[s];
                }
                scale = scale.max(want.norm());
                worst = worst.max((got[r] - want).norm());
            }
            assert!(worst <= 1e-12 * scale, "worst {worst} scale {scale}");
        }
    }

    #[test]
    fn all_relations_hold_at_one_generic_point() {
        for trig in [false, true] {
            let m = model(2, trig);
            let l0 = c(0.33, 0.09);
            let others_full = [c(0.52, -0.07), c(0.18, 0.14)];
            for id in RelationId::ALL {
                let others: &[Complex64] = match id {
                    RelationId::RelAbb => &others_full,
                    _ => &others_full[..1],
                };
                let r = algebra_relation_residual(&m, id, l0, others).unwrap();
                assert!(
                    r <= tol::ALGEBRA_RELATION,
                    "{} residual {r} (trig={trig})",
                    id.name()
                );
            }
        }
    }
}
