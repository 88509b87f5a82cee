//! Local Boltzmann weights: face weights, the dynamical vertex matrix, the
//! diagonal reflecting-end matrix, and their defining local identities.
//!
//! All six face weights are ratios of brackets in the spectral parameter
//! lambda, the dynamical parameter theta, and the crossing parameter gamma:
//!
//! ```text
//! a_pm(lambda, theta) = f(lambda + gamma)
//! b_pm(lambda, theta) = f(lambda) f(theta -+ gamma) / f(theta)
//! c_pm(lambda, theta) = f(theta -+ lambda) f(gamma) / f(theta)
//! ```
//!
//! The vertex matrix acts on a pair of two-state legs ordered
//! (++, +-, -+, --) with rows indexing the output pair:
//!
//! ```text
//! R = [ a+  0   0   0  ]
//!     [ 0   b+  c+  0  ]
//!     [ 0   c-  b-  0  ]
//!     [ 0   0   0   a- ]
//! ```
//!
//! The reflecting end is diagonal, K = diag(k+, k-) with
//!
//! ```text
//! k+(lambda, theta) = f(zeta + lambda) f(theta + zeta - lambda) / f(theta + zeta + lambda)
//! k-(lambda, theta) = f(zeta - lambda).
//! ```
//!
//! [`local_identity_residual`] probes the four local identities (dynamical
//! Yang-Baxter with shifted spectators, unitarity, crossing, reflection)
//! as normalized dense-matrix residuals.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{identity, max_abs, rel_residual};
use crate::theta::{eval_f, guarded_f, EllipticContext};

/// The six face weights at one (lambda, theta).
#[derive(Clone, Copy, Debug)]
pub struct FaceWeights {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    pub b_plus: Complex64,
    pub b_minus: Complex64,
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl FaceWeights {
    /// Evaluate all six weights; fails when f(theta) trips the genericity
    /// guard.
    pub fn new(
        ctx: &EllipticContext,
        gamma: Complex64,
        lambda: Complex64,
        theta: Complex64,
    ) -> Result<Self> {
        let f_theta = guarded_f(ctx, theta, "theta")?;
        let f_lambda = eval_f(ctx, lambda)?;
        let f_gamma = eval_f(ctx, gamma)?;
        let a = eval_f(ctx, lambda + gamma)?;
        Ok(Self {
            a_plus: a,
            a_minus: a,
            b_plus: f_lambda * eval_f(ctx, theta - gamma)? / f_theta,
            b_minus: f_lambda * eval_f(ctx, theta + gamma)? / f_theta,
            c_plus: eval_f(ctx, theta - lambda)? * f_gamma / f_theta,
            c_minus: eval_f(ctx, theta + lambda)? * f_gamma / f_theta,
        })
    }
}

/// Dynamical vertex matrix on a pair of legs, basis (++, +-, -+, --),
/// rows = output pair.
#[derive(Clone, Debug)]
pub struct RMatrix {
    entries: Array2<Complex64>,
}

impl RMatrix {
    /// Build from the face weights at (lambda, theta).
    pub fn new(
        ctx: &EllipticContext,
        gamma: Complex64,
        lambda: Complex64,
        theta: Complex64,
    ) -> Result<Self> {
        let w = FaceWeights::new(ctx, gamma, lambda, theta)?;
        let z = Complex64::new(0.0, 0.0);
        let mut m = Array2::from_elem((4, 4), z);
        m[(0, 0)] = w.a_plus;
        m[(1, 1)] = w.b_plus;
        m[(1, 2)] = w.c_plus;
        m[(2, 1)] = w.c_minus;
        m[(2, 2)] = w.b_minus;
        m[(3, 3)] = w.a_minus;
        Ok(Self { entries: m })
    }

    /// The dense 4x4 matrix.
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.entries
    }
}

/// Diagonal reflecting-end matrix K = diag(k+, k-).
#[derive(Clone, Copy, Debug)]
pub struct KMatrix {
    pub k_plus: Complex64,
    pub k_minus: Complex64,
}

impl KMatrix {
    /// Evaluate both entries; fails when f(theta + zeta + lambda) trips the
    /// genericity guard.
    pub fn new(
        ctx: &EllipticContext,
        zeta: Complex64,
        lambda: Complex64,
        theta: Complex64,
    ) -> Result<Self> {
        let denom = guarded_f(ctx, theta + zeta + lambda, "theta+zeta+lambda")?;
        Ok(Self {
            k_plus: eval_f(ctx, zeta + lambda)? * eval_f(ctx, theta + zeta - lambda)? / denom,
            k_minus: eval_f(ctx, zeta - lambda)?,
        })
    }

    /// The dense 2x2 matrix.
    pub fn matrix(&self) -> Array2<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let mut m = Array2::from_elem((2, 2), z);
        m[(0, 0)] = self.k_plus;
        m[(1, 1)] = self.k_minus;
        m
    }
}

/// Sign of a leg (+1 or -1) in a basis state of an `n_legs` chain; leg 0 is
/// the most significant bit, a clear bit is the plus state.
pub(crate) fn leg_sign(state: usize, leg: usize, n_legs: usize) -> i64 {
    if state >> (n_legs - 1 - leg) & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Basis state with the given leg forced to the given sign.
pub(crate) fn with_leg_sign(state: usize, leg: usize, n_legs: usize, sign: i64) -> usize {
    let bit = 1usize << (n_legs - 1 - leg);
    if sign > 0 {
        state & !bit
    } else {
        state | bit
    }
}

/// Pair index into the 4x4 vertex basis (++, +-, -+, --).
fn pair_index(s_first: i64, s_second: i64) -> usize {
    let hi = usize::from(s_first < 0);
    let lo = usize::from(s_second < 0);
    hi * 2 + lo
}

/// Signs of a pair index.
fn pair_signs(pair: usize) -> (i64, i64) {
    let hi = if pair & 2 == 0 { 1 } else { -1 };
    let lo = if pair & 1 == 0 { 1 } else { -1 };
    (hi, lo)
}

/// Dense embedding of the vertex matrix into an `n_legs` chain.
///
/// The matrix acts on `legs` = (first slot, second slot); its dynamical
/// argument is theta - gamma * (sum of the signs of `shift_legs`), read off
/// the input state. Entries are block-diagonal over every spectator leg, so
/// input and shift-leg signs coincide with output signs there.
pub(crate) fn embed_r(
    ctx: &EllipticContext,
    gamma: Complex64,
    lambda: Complex64,
    theta: Complex64,
    legs: (usize, usize),
    shift_legs: &[usize],
    n_legs: usize,
) -> Result<Array2<Complex64>> {
    assert!(legs.0 != legs.1 && legs.0 < n_legs && legs.1 < n_legs);
    let dim = 1usize << n_legs;
    let mut out = Array2::from_elem((dim, dim), Complex64::new(0.0, 0.0));
    // The dynamical shift takes at most n_legs + 1 distinct values; cache
    // the vertex matrix per shift sum.
    let mut cache: Vec<Option<RMatrix>> = vec![None; 2 * n_legs + 1];
    for state in 0..dim {
        let mut shift_sum = 0i64;
        for &l in shift_legs {
            debug_assert!(l != legs.0 && l != legs.1);
            shift_sum += leg_sign(state, l, n_legs);
        }
        let slot = (shift_sum + n_legs as i64) as usize;
        if cache[slot].is_none() {
            let theta_eff = theta - gamma * shift_sum as f64;
            cache[slot] = Some(RMatrix::new(ctx, gamma, lambda, theta_eff)?);
        }
        let r = cache[slot].as_ref().expect("cached above").matrix();
        let in_pair = pair_index(
            leg_sign(state, legs.0, n_legs),
            leg_sign(state, legs.1, n_legs),
        );
        for out_pair in 0..4 {
            let entry = r[(out_pair, in_pair)];
            if entry.norm() == 0.0 {
                continue;
            }
            let (s_first, s_second) = pair_signs(out_pair);
            let mut target = with_leg_sign(state, legs.0, n_legs, s_first);
            target = with_leg_sign(target, legs.1, n_legs, s_second);
            out[(target, state)] += entry;
        }
    }
    Ok(out)
}

/// Apply the embedded vertex matrix of [`embed_r`] to a state vector
/// without materializing the dense matrix. Each input state scatters into
/// at most two output states, so one sweep costs O(dim).
pub(crate) fn apply_embed_r(
    ctx: &EllipticContext,
    gamma: Complex64,
    lambda: Complex64,
    theta: Complex64,
    legs: (usize, usize),
    shift_legs: &[usize],
    n_legs: usize,
    input: &[Complex64],
) -> Result<Vec<Complex64>> {
    assert!(legs.0 != legs.1 && legs.0 < n_legs && legs.1 < n_legs);
    let dim = 1usize << n_legs;
    assert_eq!(input.len(), dim);
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    let mut cache: Vec<Option<RMatrix>> = vec![None; 2 * n_legs + 1];
    for (state, &amp) in input.iter().enumerate() {
        if amp.norm() == 0.0 {
            continue;
        }
        let mut shift_sum = 0i64;
        for &l in shift_legs {
            debug_assert!(l != legs.0 && l != legs.1);
            shift_sum += leg_sign(state, l, n_legs);
        }
        let slot = (shift_sum + n_legs as i64) as usize;
        if cache[slot].is_none() {
            let theta_eff = theta - gamma * shift_sum as f64;
            cache[slot] = Some(RMatrix::new(ctx, gamma, lambda, theta_eff)?);
        }
        let r = cache[slot].as_ref().expect("cached above").matrix();
        let in_pair = pair_index(
            leg_sign(state, legs.0, n_legs),
            leg_sign(state, legs.1, n_legs),
        );
        for out_pair in 0..4 {
            let entry = r[(out_pair, in_pair)];
            if entry.norm() == 0.0 {
                continue;
            }
            let (s_first, s_second) = pair_signs(out_pair);
            let mut target = with_leg_sign(state, legs.0, n_legs, s_first);
            target = with_leg_sign(target, legs.1, n_legs, s_second);
            out[target] += entry * amp;
        }
    }
    Ok(out)
}

/// The four local identities of the weight layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocalIdentityKind {
    /// Dynamical Yang-Baxter equation on three legs with spectator-shifted
    /// arguments.
    Dybe,
    /// R(lambda) R_swapped(-lambda) = f(gamma + lambda) f(gamma - lambda) Id.
    Unitarity,
    /// Conjugation by the antisymmetric leg rotation relates
    /// R(-lambda - gamma) to the leg-swapped R(lambda).
    Crossing,
    /// Boundary reflection equation on two legs.
    Reflection,
}

/// Parameters for one local-identity probe. `lambda[0..3]` feeds the
/// three-leg identity; the two-leg identities read `lambda[0]` (and
/// `lambda[1]` for reflection). `zeta` is only read by the reflection
/// identity.
#[derive(Clone, Copy, Debug)]
pub struct LocalPoint {
    pub gamma: Complex64,
    pub zeta: Complex64,
    pub theta: Complex64,
    pub lambda: [Complex64; 3],
}

/// Normalized max-abs residual of one local identity, LHS against RHS,
/// divided by the largest entry of either side.
pub fn local_identity_residual(
    ctx: &EllipticContext,
    kind: LocalIdentityKind,
    point: &LocalPoint,
) -> Result<f64> {
    match kind {
        LocalIdentityKind::Dybe => dybe_residual(ctx, point),
        LocalIdentityKind::Unitarity => unitarity_residual(ctx, point),
        LocalIdentityKind::Crossing => crossing_residual(ctx, point),
        LocalIdentityKind::Reflection => reflection_residual(ctx, point),
    }
}

fn dybe_residual(ctx: &EllipticContext, p: &LocalPoint) -> Result<f64> {
    let [l1, l2, l3] = p.lambda;
    let (g, th) = (p.gamma, p.theta);
    let lhs = embed_r(ctx, g, l1 - l2, th, (0, 1), &[2], 3)?
        .dot(&embed_r(ctx, g, l1 - l3, th, (0, 2), &[], 3)?)
        .dot(&embed_r(ctx, g, l2 - l3, th, (1, 2), &[0], 3)?);
    let rhs = embed_r(ctx, g, l2 - l3, th, (1, 2), &[], 3)?
        .dot(&embed_r(ctx, g, l1 - l3, th, (0, 2), &[1], 3)?)
        .dot(&embed_r(ctx, g, l1 - l2, th, (0, 1), &[], 3)?);
    Ok(rel_residual(&lhs, &rhs))
}

fn unitarity_residual(ctx: &EllipticContext, p: &LocalPoint) -> Result<f64> {
    let lambda = p.lambda[0];
    let lhs = embed_r(ctx, p.gamma, lambda, p.theta, (0, 1), &[], 2)?.dot(&embed_r(
        ctx,
        p.gamma,
        -lambda,
        p.theta,
        (1, 0),
        &[],
        2,
    )?);
    let scalar = eval_f(ctx, p.gamma + lambda)? * eval_f(ctx, p.gamma - lambda)?;
    let rhs = identity(4).mapv(|e| e * scalar);
    Ok(rel_residual(&lhs, &rhs))
}

/// Scalar on the right-hand side of the unitarity identity,
/// f(gamma + lambda) f(gamma - lambda); it carries no theta dependence.
pub fn unitarity_scalar(
    ctx: &EllipticContext,
    gamma: Complex64,
    lambda: Complex64,
) -> Result<Complex64> {
    Ok(eval_f(ctx, gamma + lambda)? * eval_f(ctx, gamma - lambda)?)
}

/// Entry of the antisymmetric rotation sigma_y in the (+, -) basis:
/// sigma_y(+,-) = -i, sigma_y(-,+) = +i, zero on the diagonal.
fn sigma_y(row_sign: i64, col_sign: i64) -> Complex64 {
    if row_sign == col_sign {
        Complex64::new(0.0, 0.0)
    } else if row_sign > 0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

/// Crossing on a pair of legs. The left-hand side conjugates the
/// first-leg-transposed vertex matrix at argument -lambda - gamma by
/// sigma_y on the first leg; the transposed matrix carries its dynamical
/// argument graded by its own output sign on that leg (the grading acts
/// after it), and the scalar f(theta - gamma h)/f(theta) is graded by the
/// input sign of the second leg:
///
/// ```text
/// LHS[(a',b'),(a,b)] = - sigma_y(a', -a') sigma_y(-a, a)
///     * R(-lambda - gamma, theta - gamma a')[(-a, b'), (-a', b)]
///     * f(theta - gamma b) / f(theta)
/// ```
///
/// and the identity asserts LHS = R_swapped(lambda, theta).
fn crossing_residual(ctx: &EllipticContext, p: &LocalPoint) -> Result<f64> {
    let lambda = p.lambda[0];
    let f_theta = guarded_f(ctx, p.theta, "theta")?;
    let mut lhs = Array2::from_elem((4, 4), Complex64::new(0.0, 0.0));
    let signs = [1i64, -1];
    for &a_out in &signs {
        // Transposed-leg grading: theta + gamma * (flipped output sign).
        let r = RMatrix::new(ctx, p.gamma, -lambda - p.gamma, p.theta - p.gamma * a_out as f64)?;
        for &b_out in &signs {
            for &a_in in &signs {
                for &b_in in &signs {
                    let entry = -sigma_y(a_out, -a_out)
                        * sigma_y(-a_in, a_in)
                        * r.matrix()[(pair_index(-a_in, b_out), pair_index(-a_out, b_in))]
                        * eval_f(ctx, p.theta - p.gamma * b_in as f64)?
                        / f_theta;
                    lhs[(pair_index(a_out, b_out), pair_index(a_in, b_in))] = entry;
                }
            }
        }
    }
    let rhs = embed_r(ctx, p.gamma, lambda, p.theta, (1, 0), &[], 2)?;
    Ok(rel_residual(&lhs, &rhs))
}

fn reflection_residual(ctx: &EllipticContext, p: &LocalPoint) -> Result<f64> {
    let [l1, l2, _] = p.lambda;
    let (g, z, th) = (p.gamma, p.zeta, p.theta);
    let k1 = |lambda: Complex64| -> Result<Array2<Complex64>> {
        let k = KMatrix::new(ctx, z, lambda, th)?;
        let mut m = identity(4);
        for state in 0..4 {
            m[(state, state)] = if leg_sign(state, 0, 2) > 0 {
                k.k_plus
            } else {
                k.k_minus
            };
        }
        Ok(m)
    };
    let k2 = |lambda: Complex64| -> Result<Array2<Complex64>> {
        let k = KMatrix::new(ctx, z, lambda, th)?;
        let mut m = identity(4);
        for state in 0..4 {
            m[(state, state)] = if leg_sign(state, 1, 2) > 0 {
                k.k_plus
            } else {
                k.k_minus
            };
        }
        Ok(m)
    };
    let lhs = embed_r(ctx, g, l1 - l2, th, (0, 1), &[], 2)?
        .dot(&k1(l1)?)
        .dot(&embed_r(ctx, g, l1 + l2, th, (1, 0), &[], 2)?)
        .dot(&k2(l2)?);
    let rhs = k2(l2)?
        .dot(&embed_r(ctx, g, l1 + l2, th, (0, 1), &[], 2)?)
        .dot(&k1(l1)?)
        .dot(&embed_r(ctx, g, l1 - l2, th, (1, 0), &[], 2)?);
    Ok(rel_residual(&lhs, &rhs))
}

/// Residuals of the ice rule [h1 + h2, R] = 0 and its transposed variant
/// [-h1 + h2, R^{t1}] = 0, normalized by the largest entry of R.
pub fn ice_rule_residuals(
    ctx: &EllipticContext,
    gamma: Complex64,
    lambda: Complex64,
    theta: Complex64,
) -> Result<(f64, f64)> {
    let r = RMatrix::new(ctx, gamma, lambda, theta)?;
    let m = r.matrix();
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let mut plain = 0.0_f64;
    let mut transposed = 0.0_f64;
    for row in 0..4 {
        for col in 0..4 {
            let (r1, r2) = pair_signs(row);
            let (c1, c2) = pair_signs(col);
            let w_plain = ((r1 + r2) - (c1 + c2)) as f64;
            plain = plain.max((m[(row, col)] * w_plain).norm() / scale);
            // R^{t1}[(r1,r2),(c1,c2)] = R[(c1,r2),(r1,c2)]
            let t1 = m[(pair_index(c1, r2), pair_index(r1, c2))];
            let w_t = ((-r1 + r2) - (-c1 + c2)) as f64;
            transposed = transposed.max((t1 * w_t).norm() / scale);
        }
    }
    Ok((plain, transposed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn contexts() -> Vec<EllipticContext> {
        vec![
            EllipticContext::elliptic(c(0.0, 1.5)).unwrap(),
            EllipticContext::elliptic(c(0.0, 2.0)).unwrap(),
            EllipticContext::elliptic(c(0.5, 2.0)).unwrap(),
            EllipticContext::trigonometric(),
        ]
    }

    fn sample_point(k: usize) -> LocalPoint {
        let t = k as f64;
        LocalPoint {
            gamma: c(0.41 + 0.003 * t, 0.06 - 0.002 * t),
            zeta: c(0.55 - 0.004 * t, -0.08 + 0.003 * t),
            theta: c(0.73 + 0.005 * t, 0.12 + 0.001 * t),
            lambda: [
                c(0.27 + 0.007 * t, -0.13 + 0.002 * t),
                c(0.62 - 0.006 * t, 0.09 - 0.003 * t),
                c(0.18 + 0.005 * t, 0.21 - 0.004 * t),
            ],
        }
    }

    #[test]
    fn weights_degenerate_correctly_at_zero_argument() {
        for ctx in contexts() {
            let gamma = c(0.4, 0.1);
            let theta = c(0.8, -0.05);
            let w = FaceWeights::new(&ctx, gamma, c(0.0, 0.0), theta).unwrap();
            let f_gamma = eval_f(&ctx, gamma).unwrap();
            assert!(w.b_plus.norm() == 0.0 && w.b_minus.norm() == 0.0);
            assert!((w.a_plus - f_gamma).norm() <= 1e-14 * f_gamma.norm());
            assert!((w.c_plus - f_gamma).norm() <= 1e-13 * f_gamma.norm());
            assert!((w.c_minus - f_gamma).norm() <= 1e-13 * f_gamma.norm());
        }
    }

    #[test]
    fn vertex_matrix_at_zero_is_permutation() {
        for ctx in contexts() {
            let gamma = c(0.37, 0.04);
            let r = RMatrix::new(&ctx, gamma, c(0.0, 0.0), c(0.9, 0.1)).unwrap();
            let f_gamma = eval_f(&ctx, gamma).unwrap();
            let mut p = Array2::from_elem((4, 4), c(0.0, 0.0));
            p[(0, 0)] = f_gamma;
            p[(1, 2)] = f_gamma;
            p[(2, 1)] = f_gamma;
            p[(3, 3)] = f_gamma;
            assert!(rel_residual(r.matrix(), &p) <= 1e-13);
        }
    }

    #[test]
    fn reflection_matrix_at_zero_is_scalar() {
        for ctx in contexts() {
            let zeta = c(0.6, -0.07);
            let k = KMatrix::new(&ctx, zeta, c(0.0, 0.0), c(0.85, 0.1)).unwrap();
            let f_zeta = eval_f(&ctx, zeta).unwrap();
            assert!((k.k_plus - f_zeta).norm() <= 1e-13 * f_zeta.norm());
            assert!((k.k_minus - f_zeta).norm() <= 1e-14 * f_zeta.norm());
        }
    }

    #[test]
    fn ice_rules_are_structurally_exact() {
        for ctx in contexts() {
            let (plain, transposed) =
                ice_rule_residuals(&ctx, c(0.4, 0.05), c(0.3, -0.1), c(0.8, 0.07)).unwrap();
            assert!(plain <= tol::ICE_RULE && transposed <= tol::ICE_RULE);
        }
    }

    #[test]
    fn unitarity_scalar_has_no_theta_dependence() {
        for ctx in contexts() {
            let mut point = sample_point(3);
            let mut values = Vec::new();
            for j in 0..5 {
                point.theta = c(0.55 + 0.09 * j as f64, 0.1 - 0.02 * j as f64);
                let lhs = embed_r(
                    &ctx,
                    point.gamma,
                    point.lambda[0],
                    point.theta,
                    (0, 1),
                    &[],
                    2,
                )
                .unwrap()
                .dot(
                    &embed_r(
                        &ctx,
                        point.gamma,
                        -point.lambda[0],
                        point.theta,
                        (1, 0),
                        &[],
                        2,
                    )
                    .unwrap(),
                );
                values.push(lhs[(0, 0)]);
            }
            let first = values[0];
            for v in values {
                assert!((v - first).norm() <= tol::UNITARITY_SCALAR * first.norm());
            }
        }
    }

    #[test]
    fn all_four_local_identities_hold_on_a_ramp() {
        for ctx in contexts() {
            for k in 0..6 {
                let point = sample_point(k);
                for kind in [
                    LocalIdentityKind::Dybe,
                    LocalIdentityKind::Unitarity,
                    LocalIdentityKind::Crossing,
                    LocalIdentityKind::Reflection,
                ] {
                    let r = local_identity_residual(&ctx, kind, &point).unwrap();
                    assert!(
                        r <= tol::LOCAL_IDENTITY,
                        "{kind:?} residual {r} at draw {k} (trig={})",
                        ctx.is_trigonometric()
                    );
                }
            }
        }
    }
}
