//! Acceptance gate: one pass/fail line per criterion, covering the local
//! identities, the operator algebra, the three evaluation routes, the
//! linear relation with its reduction, the theta layer, and report
//! determinism. Runtime budgets are part of the respective criteria.

use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;

use rsos_core::checks::{run_suite, CheckOutcome, SuiteConfig, SuiteKind, SuiteReport};
use rsos_core::theta::{interpolate_theta, EllipticContext, HigherOrderTheta};
use rsos_core::Result as CoreResult;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cfg(seed: u64, max_length: usize, draws: usize, trig: bool, tau: Complex64) -> SuiteConfig {
    SuiteConfig {
        seed,
        max_length,
        draws,
        trigonometric: trig,
        tau,
        tol_override: None,
    }
}

fn check<'a>(report: &'a SuiteReport, name: &str) -> &'a CheckOutcome {
    report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("missing check {name} in suite {}", report.suite))
}

/// All named checks pass; returns the worst residual among them.
fn gate(report: &SuiteReport, names: &[String]) -> (bool, f64) {
    let mut ok = true;
    let mut worst = 0.0_f64;
    for name in names {
        let outcome = check(report, name);
        ok &= outcome.pass;
        worst = worst.max(outcome.worst);
    }
    (ok, worst)
}

fn named(prefix: &str, lengths: std::ops::RangeInclusive<usize>) -> Vec<String> {
    lengths.map(|l| format!("{prefix}-L{l}")).collect()
}

fn record(
    results: &mut Vec<(&'static str, bool, String)>,
    name: &'static str,
    outcome: CoreResult<(bool, String)>,
) {
    match outcome {
        Ok((pass, detail)) => results.push((name, pass, detail)),
        Err(e) => results.push((name, false, format!("errored: {e}"))),
    }
}

#[test]
fn acceptance_criteria() {
    let tau = c(0.0, 2.0);
    let mut results: Vec<(&'static str, bool, String)> = Vec::new();

    // 1. Local identities at three elliptic nomes and the trig limit,
    //    50 draws each, relative residual below 1e-10, under 30 s.
    let outcome = (|| {
        let start = Instant::now();
        let mut ok = true;
        let mut worst = 0.0_f64;
        let modes = [
            (false, c(0.0, 1.5)),
            (false, tau),
            (false, c(0.5, 2.0)),
            (true, tau),
        ];
        for (trig, t) in modes {
            let rep = run_suite(SuiteKind::Weights, &cfg(1, 1, 50, trig, t))?;
            for name in ["yang-baxter", "unitarity", "crossing", "reflection"] {
                let c = check(&rep, name);
                ok &= c.pass;
                worst = worst.max(c.worst);
            }
        }
        let secs = start.elapsed().as_secs_f64();
        ok &= secs < 30.0;
        Ok((ok, format!("worst residual {worst:.2e}, {secs:.1}s (budget 30s)")))
    })();
    record(&mut results, "local-identities", outcome);

    // Shared suite runs: algebra feeds criteria 2 and 3, partition feeds
    // 4 and 6, funceq feeds 5 and 7.
    let algebra_clock = Instant::now();
    let algebra_ell = run_suite(SuiteKind::Algebra, &cfg(2, 4, 20, false, tau));
    let algebra_trig = run_suite(SuiteKind::Algebra, &cfg(3, 4, 20, true, tau));
    let algebra_secs = algebra_clock.elapsed().as_secs_f64();

    // 2. Exchange relations: every generator relation below 1e-10 for
    //    L 1..3 elliptic and 1..4 trigonometric, 20 draws, under 3 min.
    let outcome = (|| {
        let ell = match algebra_ell.as_ref() {
            Ok(r) => r,
            Err(e) => return Ok((false, format!("suite errored: {e}"))),
        };
        let trig = match algebra_trig.as_ref() {
            Ok(r) => r,
            Err(e) => return Ok((false, format!("suite errored: {e}"))),
        };
        let (ok_e, worst_e) = gate(ell, &named("relations", 1..=3));
        let (ok_t, worst_t) = gate(trig, &named("relations", 1..=4));
        let ok = ok_e && ok_t && algebra_secs < 180.0;
        Ok((
            ok,
            format!(
                "worst residual {:.2e}, {algebra_secs:.1}s (budget 180s)",
                worst_e.max(worst_t)
            ),
        ))
    })();
    record(&mut results, "exchange-relations", outcome);

    // 3. Vacuum eigenvalues: closed forms match the operator action to
    //    1e-10 with the off-vacuum component below 1e-11 for L <= 4.
    let outcome = (|| {
        let ell = match algebra_ell.as_ref() {
            Ok(r) => r,
            Err(e) => return Ok((false, format!("suite errored: {e}"))),
        };
        let (ok_v, worst_v) = gate(ell, &named("vacuum-eigenvalues", 1..=4));
        let (ok_o, worst_o) = gate(ell, &named("vacuum-orthogonality", 1..=4));
        Ok((
            ok_v && ok_o,
            format!("worst eigenvalue {worst_v:.2e}, worst orthogonality {worst_o:.2e}"),
        ))
    })();
    record(&mut results, "vacuum-eigenvalues", outcome);

    let partition_clock = Instant::now();
    let partition_ell = run_suite(SuiteKind::Partition, &cfg(4, 4, 20, false, tau));
    let partition_trig = run_suite(SuiteKind::Partition, &cfg(5, 6, 10, true, tau));
    let partition_secs = partition_clock.elapsed().as_secs_f64();

    // 4. Route agreement: operator vs both symmetrized sums to 1e-9 for
    //    L <= 4 elliptic (20 draws) and L <= 6 trigonometric (10 draws),
    //    contour route to 1e-6 for L <= 2, under 5 min.
    let outcome = (|| {
        let ell = match partition_ell.as_ref() {
            Ok(r) => r,
            Err(e) => return Ok((false, format!("suite errored: {e}"))),
        };
        let trig = match partition_trig.as_ref() {
            Ok(r) => r,
            Err(e) => return Ok((false, format!("suite errored: {e}"))),
        };
        let (ok_e, worst_e) = gate(ell, &named("route-agreement", 1..=4));
        let (ok_t, worst_t) = gate(trig, &named("route-agreement", 1..=6));
        let (ok_ce, worst_ce) = gate(ell, &named("contour-agreement", 1..=2));
        let (ok_ct, worst_ct) = gate(trig, &named("contour-agreement", 1..=2));
        let ok = ok_e && ok_t && ok_ce && ok_ct && partition_secs < 300.0;
        Ok((
            ok,
            format!(
                "worst exact {:.2e}, worst contour {:.2e}, {partition_secs:.1}s (budget 300s)",
                worst_e.max(worst_t),
                worst_ce.max(worst_ct)
            ),
        ))
    })();
    record(&mut results, "route-agreement", outcome);

    let funceq_ell = run_suite(SuiteKind::Funceq, &cfg(6, 4, 20, false, tau));

    // 5. Linear relation: residual over scale below 1e-9 and swapped
    //    coefficient matrix determinant below 1e-8 for L <= 4.
    let outcome = (|| {
        let ell = match funceq_ell.as_ref() {
            Ok(r) => r,
            Err(e) => return Ok((false, format!("suite errored: {e}"))),
        };
        let (ok_r, worst_r) = gate(ell, &named("relation-residual", 1..=4));
        let (ok_d, worst_d) = gate(ell, &named("swapped-determinant", 1..=4));
        Ok((
            ok_r && ok_d,
            format!("worst residual {worst_r:.2e}, worst determinant {worst_d:.2e}"),
        ))
    })();
    record(&mut results, "linear-relation", outcome);

    // 6. Structure of the partition function: permutation symmetry below
    //    1e-11, crossing covariance below 1e-10, the four special zeros
    //    per column below 1e-9 for L in {2,3}, and the normalized value
    //    classified as order 2(L+1) norm (L-1)gamma below 1e-8 for L <= 3.
    let outcome = (|| {
        let ell = match partition_ell.as_ref() {
            Ok(r) => r,
            Err(e) => return Ok((false, format!("suite errored: {e}"))),
        };
        let (ok_p, worst_p) = gate(ell, &named("permutation-invariance", 2..=4));
        let (ok_c, worst_c) = gate(ell, &named("crossing-covariance", 1..=4));
        let (ok_z, worst_z) = gate(ell, &named("special-zeros", 2..=3));
        let (ok_n, worst_n) = gate(ell, &named("normalized-classification", 1..=3));
        Ok((
            ok_p && ok_c && ok_z && ok_n,
            format!(
                "permutation {worst_p:.2e}, crossing {worst_c:.2e}, zeros {worst_z:.2e}, classification {worst_n:.2e}"
            ),
        ))
    })();
    record(&mut results, "structure-of-z", outcome);

    // 7. Reduction and uniqueness: reconstruction from the one-variable
    //    reduction matches the operator route to 1e-8 for L in {2,3}, the
    //    two distinguished-argument choices are proportional with spread
    //    below 1e-10, and the reduced relation residual is below 1e-8.
    let outcome = (|| {
        let ell = match funceq_ell.as_ref() {
            Ok(r) => r,
            Err(e) => return Ok((false, format!("suite errored: {e}"))),
        };
        let (ok_r, worst_r) = gate(ell, &named("reconstruction", 2..=3));
        let (ok_p, worst_p) = gate(ell, &named("reduced-proportionality", 2..=3));
        let (ok_q, worst_q) = gate(ell, &named("reduced-relation", 2..=3));
        Ok((
            ok_r && ok_p && ok_q,
            format!(
                "reconstruction {worst_r:.2e}, proportionality {worst_p:.2e}, residual {worst_q:.2e}"
            ),
        ))
    })();
    record(&mut results, "reduction-uniqueness", outcome);

    // 8. Theta layer: oddness, quasiperiodicity, addition rule, lattice
    //    zeros, trig limit, derivative at zero, and the interpolation
    //    formula, with node reproduction at the 1e-13 level.
    let outcome = (|| {
        let rep = run_suite(SuiteKind::Theta, &cfg(8, 1, 50, false, tau))?;
        let mut ok = rep.all_pass();
        let worst = rep.checks.iter().map(|c| c.worst).fold(0.0_f64, f64::max);
        let ctx = EllipticContext::elliptic(tau)?;
        let theta = HigherOrderTheta::new(
            c(1.3, -0.4),
            vec![c(0.31, 0.12), c(-0.22, 0.27), c(0.48, -0.19)],
        )?;
        let nodes = [c(0.11, 0.05), c(0.37, -0.14), c(0.73, 0.21)];
        let values = nodes
            .iter()
            .map(|&z| theta.eval(&ctx, z))
            .collect::<CoreResult<Vec<_>>>()?;
        let mut node_err = 0.0_f64;
        for (k, &node) in nodes.iter().enumerate() {
            let v = interpolate_theta(&ctx, &nodes, &values, theta.norm(), node)?;
            node_err = node_err.max((v - values[k]).norm() / values[k].norm());
        }
        ok &= node_err <= 1e-13;
        Ok((
            ok,
            format!("worst suite residual {worst:.2e}, node reproduction {node_err:.2e}"),
        ))
    })();
    record(&mut results, "theta-layer", outcome);

    // 9. Determinism: the verify command with a fixed seed writes
    //    byte-identical reports across two runs and exits cleanly.
    let outcome = (|| {
        let config_path = std::env::temp_dir().join(format!(
            "rsos-acceptance-{}-verify.json",
            std::process::id()
        ));
        std::fs::write(
            &config_path,
            r#"{ "verify": { "max_length": 2, "draws": 3 } }"#,
        )
        .expect("write config");
        let mut reports = Vec::new();
        let mut ok = true;
        for run in 0..2 {
            let out_path = std::env::temp_dir().join(format!(
                "rsos-acceptance-{}-report-{run}.json",
                std::process::id()
            ));
            let out = Command::new(env!("CARGO_BIN_EXE_rsos"))
                .args([
                    "verify",
                    "--config",
                    config_path.to_str().unwrap(),
                    "--seed",
                    "99",
                    "--out",
                    out_path.to_str().unwrap(),
                ])
                .output()
                .expect("run verify");
            ok &= out.status.code() == Some(0);
            reports.push(std::fs::read(&out_path).expect("read report"));
        }
        ok &= reports[0] == reports[1];
        let detail = if reports[0] == reports[1] {
            format!("{} identical bytes across two runs", reports[0].len())
        } else {
            "reports differ between runs".to_string()
        };
        Ok((ok, detail))
    })();
    record(&mut results, "determinism", outcome);

    let mut failed = Vec::new();
    for (name, pass, detail) in &results {
        let tag = if *pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {detail}");
        if !pass {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
