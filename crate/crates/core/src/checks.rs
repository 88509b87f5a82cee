//! Seeded verification suites over random generic parameter draws.
//!
//! Every suite draws parameters from fixed rectangles with a counter-based
//! stream cipher generator, so a (seed, config) pair fully determines the
//! report. Draws that trip a genericity guard are resampled and counted;
//! each check records its draw count, resample count, worst residual, and
//! the tolerance it was judged against.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::algebra::{
    algebra_relation_residual, vacuum_checks, vacuum_eigenvalues_closed, ModelInstance,
    RelationId, MAX_SYSTEM_SIZE,
};
use crate::error::{Error, Result};
use crate::funceq::{
    coefficients, fe_residual, normalized_coefficient, reconstruct_from_reduction,
    reduced_coefficients, reduced_fe_residual, residue_scan_crossing, residue_scan_same,
    special_zero_scan, swapped_matrix_det, ReductionRoute, StarChoice,
};
use crate::partition::{
    crossing_factor, point_genericity, z_algebraic, z_bar, z_closed_l1, z_contour,
    z_symmetrized, SpectralPoint, SymmetrizedVariant, MAX_CONTOUR_SIZE,
};
use crate::routes::relative_deviation;
use crate::theta::{
    addition_rule_residual, classify_order_norm, eval_f, f_prime_zero, interpolate_theta,
    EllipticContext, HigherOrderTheta,
};
use crate::tol;
use crate::weights::{ice_rule_residuals, local_identity_residual, LocalIdentityKind, LocalPoint};

/// The five verification suites, one per library layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Theta,
    Weights,
    Algebra,
    Partition,
    Funceq,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 5] = [
        SuiteKind::Theta,
        SuiteKind::Weights,
        SuiteKind::Algebra,
        SuiteKind::Partition,
        SuiteKind::Funceq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Theta => "theta",
            SuiteKind::Weights => "weights",
            SuiteKind::Algebra => "algebra",
            SuiteKind::Partition => "partition",
            SuiteKind::Funceq => "funceq",
        }
    }

    pub fn parse(name: &str) -> Option<SuiteKind> {
        SuiteKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Shared configuration of one suite run.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Largest chain length exercised by the model-level suites.
    pub max_length: usize,
    /// Baseline draw count; expensive checks run a fixed fraction of it.
    pub draws: usize,
    pub trigonometric: bool,
    /// Half-period ratio for the elliptic mode; ignored when trigonometric.
    pub tau: Complex64,
    /// Replaces every per-check default tolerance when set.
    pub tol_override: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            max_length: 3,
            draws: 8,
            trigonometric: false,
            tau: Complex64::new(0.0, 2.0),
            tol_override: None,
        }
    }
}

impl SuiteConfig {
    fn ctx(&self) -> Result<EllipticContext> {
        if self.trigonometric {
            Ok(EllipticContext::trigonometric())
        } else {
            EllipticContext::elliptic(self.tau)
        }
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol_override.unwrap_or(default)
    }

    fn lengths(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.max_length.min(MAX_SYSTEM_SIZE)
    }

    /// Draw count for checks whose single evaluation is expensive.
    fn sparse_draws(&self) -> usize {
        (self.draws / 5).max(1).min(self.draws.max(1))
    }
}

/// One verified property with its worst residual over all draws.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub draws: usize,
    pub resamples: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// All outcomes of one suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Run one suite under the given configuration.
pub fn run_suite(kind: SuiteKind, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let checks = match kind {
        SuiteKind::Theta => theta_suite(cfg)?,
        SuiteKind::Weights => weights_suite(cfg)?,
        SuiteKind::Algebra => algebra_suite(cfg)?,
        SuiteKind::Partition => partition_suite(cfg)?,
        SuiteKind::Funceq => funceq_suite(cfg)?,
    };
    Ok(SuiteReport {
        suite: kind.name(),
        checks,
    })
}

/// Run several suites in the given order.
pub fn run_suites(kinds: &[SuiteKind], cfg: &SuiteConfig) -> Result<Vec<SuiteReport>> {
    kinds.iter().map(|&k| run_suite(k, cfg)).collect()
}

/// Draw `count` generic spectral points for the model from the rectangle
/// Re in [re[0], re[1]], Im in [im[0], im[1]], resampling guard-rejected
/// draws up to the cap. Deterministic in the seed.
pub fn sample_points(
    model: &ModelInstance,
    count: usize,
    seed: u64,
    re: [f64; 2],
    im: [f64; 2],
) -> Result<Vec<SpectralPoint>> {
    if !(re[0] < re[1]) || !(im[0] < im[1]) {
        return Err(Error::InvalidContext(format!(
            "empty sampling region re {re:?}, im {im:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(99);
    let mut points = Vec::with_capacity(count);
    'next_point: for _ in 0..count {
        for _ in 0..RESAMPLE_CAP {
            let lambdas = (0..model.length())
                .map(|_| {
                    Complex64::new(rng.gen_range(re[0]..re[1]), rng.gen_range(im[0]..im[1]))
                })
                .collect();
            let p = SpectralPoint::new(lambdas);
            if point_genericity(model, &p).is_ok() {
                points.push(p);
                continue 'next_point;
            }
        }
        return Err(Error::DegenerateParameter(format!(
            "no generic sample accepted within {RESAMPLE_CAP} attempts"
        )));
    }
    Ok(points)
}

const RESAMPLE_CAP: usize = 64;

/// Deterministic draw source. Each suite gets its own stream so the suites
/// can be run in any subset without shifting one another's draws.
struct Sampler {
    rng: ChaCha8Rng,
    resamples: usize,
}

impl Sampler {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { rng, resamples: 0 }
    }

    /// One draw from Re in [0.1, 0.9], Im in [-0.3, 0.3]; real part first.
    fn complex(&mut self) -> Complex64 {
        let re = self.rng.gen_range(0.1..0.9);
        let im = self.rng.gen_range(-0.3..0.3);
        Complex64::new(re, im)
    }

    fn take(&mut self, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| self.complex()).collect()
    }

    /// Retry `body` with fresh draws while it rejects them as degenerate,
    /// counting the rejections, up to a fixed cap.
    fn generic<T>(&mut self, mut body: impl FnMut(&mut Self) -> Result<T>) -> Result<T> {
        for _ in 0..RESAMPLE_CAP {
            match body(self) {
                Err(Error::DegenerateParameter(_)) | Err(Error::DegenerateNodes(_)) => {
                    self.resamples += 1;
                }
                other => return other,
            }
        }
        Err(Error::DegenerateParameter(format!(
            "no generic draw accepted within {RESAMPLE_CAP} attempts"
        )))
    }

    fn model(&mut self, ctx: &EllipticContext, l: usize) -> Result<ModelInstance> {
        self.generic(|s| {
            let gamma = s.complex();
            let zeta = s.complex();
            let theta = s.complex();
            let mu = s.take(l);
            ModelInstance::new(ctx.clone(), l, gamma, zeta, theta, mu)
        })
    }

    fn model_and_point(
        &mut self,
        ctx: &EllipticContext,
        l: usize,
    ) -> Result<(ModelInstance, SpectralPoint)> {
        let model = self.model(ctx, l)?;
        let point = self.generic(|s| {
            let p = SpectralPoint::new(s.take(l));
            point_genericity(&model, &p)?;
            Ok(p)
        })?;
        Ok((model, point))
    }
}

/// Evaluate `body` over `draws` accepted draws and record the outcome.
fn run_check(
    out: &mut Vec<CheckOutcome>,
    cfg: &SuiteConfig,
    sampler: &mut Sampler,
    name: String,
    draws: usize,
    default_tol: f64,
    mut body: impl FnMut(&mut Sampler) -> Result<f64>,
) -> Result<()> {
    let before = sampler.resamples;
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        worst = worst.max(sampler.generic(&mut body)?);
    }
    let tolerance = cfg.tol(default_tol);
    out.push(CheckOutcome {
        name,
        draws,
        resamples: sampler.resamples - before,
        worst,
        tolerance,
        pass: worst <= tolerance,
    });
    Ok(())
}

fn i_pi() -> Complex64 {
    Complex64::new(0.0, PI)
}

fn floor(x: f64) -> f64 {
    x.max(f64::MIN_POSITIVE)
}

fn operator_eval(model: &ModelInstance, point: &SpectralPoint) -> Result<Complex64> {
    z_algebraic(model, point)
}

fn theta_suite(cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let ctx = cfg.ctx()?;
    let mut s = Sampler::new(cfg.seed, 0);
    let mut out = Vec::new();

    run_check(
        &mut out,
        cfg,
        &mut s,
        "oddness".into(),
        cfg.draws,
        tol::THETA_ODDNESS,
        |s| {
            let lambda = s.complex();
            let plus = eval_f(&ctx, lambda)?;
            let minus = eval_f(&ctx, -lambda)?;
            Ok((plus + minus).norm() / floor(plus.norm()))
        },
    )?;

    run_check(
        &mut out,
        cfg,
        &mut s,
        "quasiperiodicity".into(),
        cfg.draws,
        tol::THETA_QUASIPERIOD,
        |s| {
            let lambda = s.complex();
            let base = eval_f(&ctx, lambda)?;
            let up_pi = eval_f(&ctx, lambda + i_pi())?;
            let mut worst = (up_pi + base).norm() / floor(base.norm());
            if let Some(tau) = ctx.tau() {
                let up_tau = eval_f(&ctx, lambda + i_pi() * tau)?;
                let factor = -(-(lambda * 2.0) - i_pi() * tau).exp();
                worst = worst
                    .max((up_tau - factor * base).norm() / floor((factor * base).norm()));
            }
            Ok(worst)
        },
    )?;

    run_check(
        &mut out,
        cfg,
        &mut s,
        "lattice-zeros".into(),
        cfg.draws,
        tol::THETA_LATTICE_ZERO,
        |s| {
            let m = s.rng.gen_range(-2..=2_i64) as f64;
            let n = match ctx.tau() {
                Some(_) => s.rng.gen_range(-2..=2_i64) as f64,
                None => 0.0,
            };
            let point = match ctx.tau() {
                Some(tau) => i_pi() * m + i_pi() * tau * n,
                None => i_pi() * m,
            };
            Ok(eval_f(&ctx, point)?.norm() / f_prime_zero(&ctx).norm())
        },
    )?;

    run_check(
        &mut out,
        cfg,
        &mut s,
        "addition-rule".into(),
        cfg.draws,
        tol::THETA_ADDITION,
        |s| addition_rule_residual(&ctx, [s.complex(), s.complex(), s.complex(), s.complex()]),
    )?;

    // The sinh degeneration is checked against its own wide-tau context,
    // independent of the configured mode.
    let wide = EllipticContext::elliptic(Complex64::new(0.0, 40.0))?;
    run_check(
        &mut out,
        cfg,
        &mut s,
        "trig-limit".into(),
        cfg.draws,
        tol::THETA_TRIG_LIMIT,
        |s| {
            let lambda = s.complex();
            let v = eval_f(&wide, lambda)?;
            let sinh = lambda.sinh();
            Ok((v - sinh).norm() / sinh.norm().max(1.0))
        },
    )?;

    run_check(
        &mut out,
        cfg,
        &mut s,
        "derivative-at-zero".into(),
        1,
        tol::FP0_FINITE_DIFF,
        |_| {
            let fp = f_prime_zero(&ctx);
            let h = 1e-5;
            let fd = (eval_f(&ctx, Complex64::new(h, 0.0))?
                - eval_f(&ctx, Complex64::new(-h, 0.0))?)
                / Complex64::new(2.0 * h, 0.0);
            Ok((fp - fd).norm() / fp.norm())
        },
    )?;

    run_check(
        &mut out,
        cfg,
        &mut s,
        "interpolation".into(),
        cfg.draws,
        tol::THETA_INTERPOLATION,
        |s| {
            let theta = HigherOrderTheta::new(s.complex(), s.take(3))?;
            let nodes = s.take(3);
            let values = nodes
                .iter()
                .map(|&z| theta.eval(&ctx, z))
                .collect::<Result<Vec<_>>>()?;
            let mut worst = 0.0_f64;
            for (k, &node) in nodes.iter().enumerate() {
                let v = interpolate_theta(&ctx, &nodes, &values, theta.norm(), node)?;
                worst = worst.max((v - values[k]).norm() / floor(values[k].norm()));
            }
            let probe = s.complex();
            let v = interpolate_theta(&ctx, &nodes, &values, theta.norm(), probe)?;
            let exact = theta.eval(&ctx, probe)?;
            Ok(worst.max((v - exact).norm() / floor(exact.norm())))
        },
    )?;

    Ok(out)
}

fn weights_suite(cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let ctx = cfg.ctx()?;
    let mut s = Sampler::new(cfg.seed, 1);
    let mut out = Vec::new();

    for (kind, name) in [
        (LocalIdentityKind::Dybe, "yang-baxter"),
        (LocalIdentityKind::Unitarity, "unitarity"),
        (LocalIdentityKind::Crossing, "crossing"),
        (LocalIdentityKind::Reflection, "reflection"),
    ] {
        run_check(
            &mut out,
            cfg,
            &mut s,
            name.into(),
            cfg.draws,
            tol::LOCAL_IDENTITY,
            |s| {
                let point = LocalPoint {
                    gamma: s.complex(),
                    zeta: s.complex(),
                    theta: s.complex(),
                    lambda: [s.complex(), s.complex(), s.complex()],
                };
                local_identity_residual(&ctx, kind, &point)
            },
        )?;
    }

    run_check(
        &mut out,
        cfg,
        &mut s,
        "ice-rule".into(),
        cfg.draws,
        tol::ICE_RULE,
        |s| {
            let (plain, transposed) =
                ice_rule_residuals(&ctx, s.complex(), s.complex(), s.complex())?;
            Ok(plain.max(transposed))
        },
    )?;

    Ok(out)
}

fn algebra_suite(cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let ctx = cfg.ctx()?;
    let mut s = Sampler::new(cfg.seed, 2);
    let mut out = Vec::new();

    for l in cfg.lengths() {
        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("relations-L{l}"),
            cfg.draws,
            tol::ALGEBRA_RELATION,
            |s| {
                let model = s.model(&ctx, l)?;
                let lambda0 = s.complex();
                let others = s.take(l.max(1));
                let mut worst = 0.0_f64;
                for id in RelationId::ALL {
                    worst = worst.max(algebra_relation_residual(&model, id, lambda0, &others)?);
                }
                Ok(worst)
            },
        )?;

        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("vacuum-eigenvalues-L{l}"),
            cfg.draws,
            tol::VACUUM_EIGENVALUE,
            |s| {
                let model = s.model(&ctx, l)?;
                let (eigs, _, _) = vacuum_checks(&model, s.complex())?;
                Ok(eigs.iter().map(|e| e.closed_vs_measured).fold(0.0, f64::max))
            },
        )?;

        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("vacuum-orthogonality-L{l}"),
            cfg.draws,
            tol::VACUUM_ORTHOGONAL,
            |s| {
                let model = s.model(&ctx, l)?;
                let (eigs, _, _) = vacuum_checks(&model, s.complex())?;
                Ok(eigs.iter().map(|e| e.orthogonal).fold(0.0, f64::max))
            },
        )?;

        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("vacuum-annihilation-L{l}"),
            cfg.draws,
            tol::VACUUM_ANNIHILATION,
            |s| {
                let model = s.model(&ctx, l)?;
                let (_, ann, ann_rev) = vacuum_checks(&model, s.complex())?;
                Ok(ann.max(ann_rev))
            },
        )?;
    }

    Ok(out)
}

fn partition_suite(cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let ctx = cfg.ctx()?;
    let mut s = Sampler::new(cfg.seed, 3);
    let mut out = Vec::new();

    for l in cfg.lengths() {
        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("route-agreement-L{l}"),
            cfg.draws,
            tol::ROUTE_AGREEMENT,
            |s| {
                let (m, p) = s.model_and_point(&ctx, l)?;
                let a = z_algebraic(&m, &p)?;
                let main = z_symmetrized(&m, &p, SymmetrizedVariant::Main)?;
                let alt = z_symmetrized(&m, &p, SymmetrizedVariant::Alt)?;
                Ok(relative_deviation(a, main)
                    .max(relative_deviation(a, alt))
                    .max(relative_deviation(main, alt)))
            },
        )?;

        if l == 1 {
            run_check(
                &mut out,
                cfg,
                &mut s,
                "closed-form-L1".into(),
                cfg.draws,
                tol::ROUTE_AGREEMENT,
                |s| {
                    let (m, p) = s.model_and_point(&ctx, 1)?;
                    let a = z_algebraic(&m, &p)?;
                    let closed = z_closed_l1(&m, p.lambdas()[0])?;
                    Ok(relative_deviation(a, closed))
                },
            )?;
        }

        if l <= MAX_CONTOUR_SIZE.min(2) {
            run_check(
                &mut out,
                cfg,
                &mut s,
                format!("contour-agreement-L{l}"),
                cfg.sparse_draws(),
                tol::CONTOUR_AGREEMENT,
                |s| {
                    let (m, p) = s.model_and_point(&ctx, l)?;
                    let a = z_algebraic(&m, &p)?;
                    let quad = z_contour(&m, &p, None, 128)?;
                    Ok(relative_deviation(a, quad))
                },
            )?;
        }

        if l >= 2 {
            run_check(
                &mut out,
                cfg,
                &mut s,
                format!("permutation-invariance-L{l}"),
                cfg.draws,
                tol::PERMUTATION_INVARIANCE,
                |s| {
                    let (m, p) = s.model_and_point(&ctx, l)?;
                    let i = s.rng.gen_range(0..l);
                    let j = (i + 1 + s.rng.gen_range(0..l - 1)) % l;
                    let mut reordered = p.lambdas().to_vec();
                    reordered.swap(i, j);
                    let za = z_algebraic(&m, &p)?;
                    let zb = z_algebraic(&m, &SpectralPoint::new(reordered))?;
                    Ok(relative_deviation(za, zb))
                },
            )?;
        }

        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("crossing-covariance-L{l}"),
            cfg.draws,
            tol::CROSSING_COVARIANCE,
            |s| {
                let (m, p) = s.model_and_point(&ctx, l)?;
                let j = s.rng.gen_range(0..l);
                let lj = p.lambdas()[j];
                let crossed = p.with_lambda(j, -lj - m.gamma());
                let expect = crossing_factor(&m, lj)? * z_algebraic(&m, &p)?;
                let got = z_algebraic(&m, &crossed)?;
                Ok(relative_deviation(got, expect))
            },
        )?;

        if l >= 2 {
            run_check(
                &mut out,
                cfg,
                &mut s,
                format!("special-zeros-L{l}"),
                cfg.draws,
                tol::SPECIAL_ZERO,
                |s| {
                    let (m, p) = s.model_and_point(&ctx, l)?;
                    let k = s.rng.gen_range(1..=l);
                    let scan = special_zero_scan(&m, &operator_eval, k, &p)?;
                    Ok(scan.iter().flatten().copied().fold(0.0, f64::max))
                },
            )?;
        }

        if l <= 3 {
            run_check(
                &mut out,
                cfg,
                &mut s,
                format!("normalized-classification-L{l}"),
                cfg.sparse_draws(),
                tol::ZBAR_CLASSIFICATION,
                |s| {
                    let (m, p) = s.model_and_point(&ctx, l)?;
                    let slot = s.rng.gen_range(0..l);
                    let eval = |x: Complex64| z_bar(&m, &p.with_lambda(slot, x));
                    let (res_pi, res_second) = classify_order_norm(
                        m.ctx(),
                        eval,
                        2 * (l as i64 + 1),
                        m.gamma() * (l as f64 - 1.0),
                    )?;
                    Ok(res_pi.max(res_second))
                },
            )?;
        }
    }

    Ok(out)
}

fn funceq_suite(cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let ctx = cfg.ctx()?;
    let mut s = Sampler::new(cfg.seed, 4);
    let mut out = Vec::new();

    for l in cfg.lengths() {
        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("relation-residual-L{l}"),
            cfg.draws,
            tol::FUNCEQ_RESIDUAL,
            |s| {
                let (m, p) = s.model_and_point(&ctx, l)?;
                let (sum, scale) = fe_residual(&m, s.complex(), &p, &operator_eval)?;
                Ok(sum / floor(scale))
            },
        )?;

        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("swapped-determinant-L{l}"),
            cfg.draws,
            tol::SWAPPED_DET,
            |s| {
                let (m, p) = s.model_and_point(&ctx, l)?;
                let (det, scale) = swapped_matrix_det(&m, s.complex(), &p)?;
                Ok(det.norm() / floor(scale))
            },
        )?;

        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("component-collapse-L{l}"),
            cfg.draws,
            tol::COEFF_SYMMETRY,
            |s| {
                let (m, p) = s.model_and_point(&ctx, l)?;
                let k = s.rng.gen_range(0..l);
                let sign = if s.rng.gen_range(0..2) == 0 { 1.0 } else { -1.0 };
                let l0 = m.mu()[k] * sign - m.gamma();
                let coeffs = coefficients(&m, l0, &p)?;
                let expect = vacuum_eigenvalues_closed(&m, l0)?.cal_a_left;
                Ok((coeffs.m(0) - expect).norm() / floor(expect.norm()))
            },
        )?;

        if l >= 2 {
            run_check(
                &mut out,
                cfg,
                &mut s,
                format!("component-symmetry-L{l}"),
                cfg.draws,
                tol::COEFF_SYMMETRY,
                |s| {
                    let (m, p) = s.model_and_point(&ctx, l)?;
                    let lambda0 = s.complex();
                    let base = coefficients(&m, lambda0, &p)?;
                    let i = s.rng.gen_range(0..l - 1);
                    let j = i + 1 + s.rng.gen_range(0..l - 1 - i);
                    let mut swapped_lam = p.lambdas().to_vec();
                    swapped_lam.swap(i, j);
                    let swapped =
                        coefficients(&m, lambda0, &SpectralPoint::new(swapped_lam))?;
                    let mut worst = 0.0_f64;
                    for nu in 0..=l {
                        let expect = if nu == i + 1 {
                            base.m(j + 1)
                        } else if nu == j + 1 {
                            base.m(i + 1)
                        } else {
                            base.m(nu)
                        };
                        worst = worst
                            .max((swapped.m(nu) - expect).norm() / floor(expect.norm()));
                    }
                    let slot = s.rng.gen_range(0..l);
                    let ls = p.lambdas()[slot];
                    let crossed =
                        coefficients(&m, lambda0, &p.with_lambda(slot, -ls - m.gamma()))?;
                    let factor = crossing_factor(&m, ls)?;
                    for nu in 0..=l {
                        let expect = if nu == slot + 1 {
                            factor * base.m(nu)
                        } else {
                            base.m(nu)
                        };
                        worst = worst
                            .max((crossed.m(nu) - expect).norm() / floor(expect.norm()));
                    }
                    Ok(worst)
                },
            )?;

            run_check(
                &mut out,
                cfg,
                &mut s,
                format!("reduced-proportionality-L{l}"),
                cfg.draws,
                tol::REDUCED_RATIO_SPREAD,
                |s| {
                    let m = s.model(&ctx, l)?;
                    let lambda0 = s.complex();
                    let rest = SpectralPoint::new(s.take(l - 1));
                    let minus = reduced_coefficients(&m, lambda0, &rest, StarChoice::Minus)?;
                    let plus = reduced_coefficients(&m, lambda0, &rest, StarChoice::Plus)?;
                    let ratio0 = minus.m(0) / plus.m(0);
                    let mut worst = 0.0_f64;
                    for nu in 1..l {
                        let ratio = minus.m(nu) / plus.m(nu);
                        worst = worst.max((ratio - ratio0).norm() / floor(ratio0.norm()));
                    }
                    Ok(worst)
                },
            )?;

            run_check(
                &mut out,
                cfg,
                &mut s,
                format!("reduced-relation-L{l}"),
                cfg.draws,
                tol::REDUCED_FUNCEQ,
                |s| {
                    let m = s.model(&ctx, l)?;
                    let lambda0 = s.complex();
                    let rest = SpectralPoint::new(s.take(l - 1));
                    let mut worst = 0.0_f64;
                    for star in [StarChoice::Minus, StarChoice::Plus] {
                        let (sum, scale) =
                            reduced_fe_residual(&m, lambda0, &rest, star, &operator_eval)?;
                        worst = worst.max(sum / floor(scale));
                    }
                    Ok(worst)
                },
            )?;

            run_check(
                &mut out,
                cfg,
                &mut s,
                format!("reconstruction-L{l}"),
                cfg.sparse_draws(),
                tol::RECONSTRUCTION,
                |s| {
                    let (m, p) = s.model_and_point(&ctx, l)?;
                    let rebuilt = reconstruct_from_reduction(&m, &p, ReductionRoute::Last)?;
                    let direct = z_algebraic(&m, &p)?;
                    Ok(relative_deviation(rebuilt, direct))
                },
            )?;
        }

        run_check(
            &mut out,
            cfg,
            &mut s,
            format!("residue-extrapolation-L{l}"),
            cfg.draws,
            tol::RESIDUE_VALUE,
            |s| {
                let (m, p) = s.model_and_point(&ctx, l)?;
                let i = s.rng.gen_range(1..=l);
                let mut worst = 0.0_f64;
                for scan in [residue_scan_same(&m, i, &p)?, residue_scan_crossing(&m, i, &p)?]
                {
                    worst = worst.max(
                        (scan.extrapolated - scan.closed_form).norm()
                            / floor(scan.closed_form.norm()),
                    );
                }
                Ok(worst)
            },
        )?;

        if l == 2 {
            run_check(
                &mut out,
                cfg,
                &mut s,
                "component-classification-L2".into(),
                cfg.sparse_draws(),
                tol::MBAR_CLASSIFICATION,
                |s| {
                    let (m, p) = s.model_and_point(&ctx, 2)?;
                    let nu = s.rng.gen_range(0..=2_usize);
                    let (order, norm) = if nu == 0 {
                        (4 * 2 + 6, m.gamma() * 4.0 - m.theta())
                    } else {
                        (2 * 2 + 4, m.gamma() * 3.0 - m.theta())
                    };
                    let eval = |x: Complex64| normalized_coefficient(&m, nu, x, &p);
                    let (res_pi, res_second) =
                        classify_order_norm(m.ctx(), eval, order, norm)?;
                    Ok(res_pi.max(res_second))
                },
            )?;
        }
    }

    Ok(out)
}
