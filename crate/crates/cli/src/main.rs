//! Command line front end. `eval` computes the partition function at
//! spectral points by several independent strategies and compares them,
//! `verify` runs the seeded property suites, and `scan` tabulates the
//! partition function over a one- or two-axis parameter grid.

mod config;
mod fail;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use rsos_core::checks::{self, SuiteConfig, SuiteKind};
use rsos_core::partition::{point_genericity, SpectralPoint};
use rsos_core::routes::{self, Route, RouteRegistry};
use rsos_core::{theta, tol, Error as CoreError};

use config::{cplx, FileConfig, ModelConfig, ScanTarget};
use fail::{CliResult, Failure};
use report::ScanRow;

#[derive(Parser)]
#[command(
    name = "rsos",
    version,
    about = "Reflecting-end solid-on-solid partition function toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the partition function and compare the requested routes.
    Eval(CommonArgs),
    /// Run the seeded verification suites.
    Verify(CommonArgs),
    /// Tabulate the partition function over a parameter grid.
    Scan(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed; overrides the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated route names or shorthands (a, s, t, c).
    #[arg(long, value_delimiter = ',')]
    routes: Option<Vec<String>>,
    /// Comma-separated suite names.
    #[arg(long, value_delimiter = ',')]
    suites: Option<Vec<String>>,
    /// Tolerance override.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Eval(args) => run_eval(args),
        Command::Verify(args) => run_verify(args),
        Command::Scan(args) => run_scan(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code as u8)
        }
    }
}

fn load_config(args: &CommonArgs) -> CliResult<FileConfig> {
    match &args.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}

fn write_output(args: &CommonArgs, cfg: &FileConfig, text: &str) -> CliResult<()> {
    let path = args.out.clone().or_else(|| {
        cfg.output
            .as_ref()
            .and_then(|o| o.path.as_ref().map(PathBuf::from))
    });
    match path {
        Some(p) => fs::write(&p, text)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_eval(args: &CommonArgs) -> CliResult<u8> {
    let cfg = load_config(args)?;
    let model_cfg = cfg
        .model
        .as_ref()
        .ok_or_else(|| Failure::config("eval needs a model section"))?;
    let model = model_cfg.instantiate()?;
    let registry = RouteRegistry::standard();
    let requested = args.routes.clone().or_else(|| cfg.routes.clone()).unwrap_or_else(|| {
        vec![
            "algebraic".to_string(),
            "symmetrized-main".to_string(),
            "symmetrized-alt".to_string(),
        ]
    });
    // Resolve up front so unknown names and size limits fail before work.
    let mut route_names: Vec<String> = Vec::new();
    for key in &requested {
        let route = registry.resolve(key)?;
        check_route_size(route, model.length())?;
        if !route_names.iter().any(|n| n == route.name()) {
            route_names.push(route.name().to_string());
        }
    }
    let seed = args
        .seed
        .or_else(|| cfg.sample.as_ref().and_then(|s| s.seed))
        .or(cfg.seed)
        .unwrap_or(42);
    let points: Vec<SpectralPoint> = if let Some(point_cfg) = &cfg.point {
        if point_cfg.lambda.len() != model.length() {
            return Err(Failure::config(format!(
                "point has {} spectral parameters, model expects {}",
                point_cfg.lambda.len(),
                model.length()
            )));
        }
        vec![SpectralPoint::new(
            point_cfg.lambda.iter().map(|&p| cplx(p)).collect(),
        )]
    } else if let Some(sample) = &cfg.sample {
        checks::sample_points(&model, sample.count, seed, sample.re, sample.im)?
    } else {
        return Err(Failure::config("eval needs a point or a sample section"));
    };
    let has_contour = route_names.iter().any(|n| n == "contour");
    let default_tol = if has_contour {
        tol::CONTOUR_AGREEMENT
    } else {
        tol::ROUTE_AGREEMENT
    };
    let tolerance = args.tol.or(cfg.tolerance).unwrap_or(default_tol);
    let keys: Vec<&str> = route_names.iter().map(|s| s.as_str()).collect();
    let mut reports = Vec::with_capacity(points.len());
    for point in &points {
        point_genericity(&model, point)?;
        let rep = routes::evaluate_routes(&registry, &model, point, &keys)?;
        reports.push((point.clone(), rep));
    }
    let value = report::eval_report(model_cfg, seed, tolerance, &route_names, &reports);
    write_output(args, &cfg, &report::render(&value))?;
    let worst = reports
        .iter()
        .map(|(_, r)| r.max_deviation)
        .fold(0.0_f64, f64::max);
    Ok(if worst <= tolerance { 0 } else { 4 })
}

fn check_route_size(route: &dyn Route, length: usize) -> CliResult<()> {
    if length > route.max_system_size() {
        return Err(Failure::config(format!(
            "route {} supports chain length <= {}, got {}",
            route.name(),
            route.max_system_size(),
            length
        )));
    }
    Ok(())
}

fn run_verify(args: &CommonArgs) -> CliResult<u8> {
    let cfg = load_config(args)?;
    let names = args
        .suites
        .clone()
        .or_else(|| cfg.suites.clone())
        .unwrap_or_else(|| SuiteKind::ALL.iter().map(|k| k.name().to_string()).collect());
    let mut kinds: Vec<SuiteKind> = Vec::new();
    for name in &names {
        let kind = SuiteKind::parse(name).ok_or_else(|| {
            Failure::config(format!(
                "unknown suite {name} (available: theta, weights, algebra, partition, funceq)"
            ))
        })?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    let (trigonometric, tau) = match &cfg.model {
        Some(m) => (m.trigonometric, m.tau_value()),
        None => (false, Complex64::new(0.0, 2.0)),
    };
    let suite_cfg = SuiteConfig {
        seed: args.seed.or(cfg.seed).unwrap_or(42),
        max_length: cfg.verify.as_ref().and_then(|v| v.max_length).unwrap_or(3),
        draws: cfg.verify.as_ref().and_then(|v| v.draws).unwrap_or(8),
        trigonometric,
        tau,
        tol_override: args.tol.or(cfg.tolerance),
    };
    let suites = checks::run_suites(&kinds, &suite_cfg)?;
    let pass = suites.iter().all(|s| s.all_pass());
    let value = report::verify_report(
        suite_cfg.seed,
        trigonometric,
        tau,
        suite_cfg.max_length,
        suite_cfg.draws,
        suite_cfg.tol_override,
        &suites,
    );
    write_output(args, &cfg, &report::render(&value))?;
    Ok(if pass { 0 } else { 5 })
}

/// A scan row that produced no value: either a named degenerate parameter
/// combination (kept as a null row) or a fatal error that aborts the scan.
enum ScanMiss {
    Degenerate(String),
    Fatal(Failure),
}

fn classify(e: CoreError) -> ScanMiss {
    match e {
        CoreError::DegenerateParameter(msg) | CoreError::DegenerateNodes(msg) => {
            ScanMiss::Degenerate(msg)
        }
        other => ScanMiss::Fatal(Failure::from(other)),
    }
}

fn scan_value(
    model_cfg: &ModelConfig,
    targets: &[ScanTarget],
    combo: &[Complex64],
    base_lambda: &[Complex64],
    route: &dyn Route,
) -> Result<(Complex64, f64), ScanMiss> {
    let mut mc = model_cfg.clone();
    let mut lambda = base_lambda.to_vec();
    for (target, &value) in targets.iter().zip(combo) {
        match *target {
            ScanTarget::Gamma => mc.gamma = [value.re, value.im],
            ScanTarget::Zeta => mc.zeta = [value.re, value.im],
            ScanTarget::Theta => mc.theta = [value.re, value.im],
            ScanTarget::Mu(k) => mc.mu[k] = [value.re, value.im],
            ScanTarget::Lambda(k) => lambda[k] = value,
        }
    }
    let model = mc.build().map_err(classify)?;
    let point = SpectralPoint::new(lambda);
    point_genericity(&model, &point).map_err(classify)?;
    let z = route.evaluate(&model, &point).map_err(classify)?;
    let shifted: Vec<Complex64> = point
        .lambdas()
        .iter()
        .map(|&l| model.theta() + model.zeta() + l)
        .collect();
    let prefactor = theta::bracket(model.ctx(), &shifted).map_err(classify)?;
    Ok((z, (z * prefactor).norm()))
}

fn run_scan(args: &CommonArgs) -> CliResult<u8> {
    let cfg = load_config(args)?;
    let model_cfg = cfg
        .model
        .clone()
        .ok_or_else(|| Failure::config("scan needs a model section"))?;
    let scan = cfg
        .scan
        .clone()
        .ok_or_else(|| Failure::config("scan needs a scan section"))?;
    if scan.axes.is_empty() || scan.axes.len() > 2 {
        return Err(Failure::config(format!(
            "scan supports 1 or 2 axes, got {}",
            scan.axes.len()
        )));
    }
    let point_cfg = cfg.point.clone().ok_or_else(|| {
        Failure::config("scan needs a point section with base spectral parameters")
    })?;
    if point_cfg.lambda.len() != model_cfg.length {
        return Err(Failure::config(format!(
            "point has {} spectral parameters, model expects {}",
            point_cfg.lambda.len(),
            model_cfg.length
        )));
    }
    let registry = RouteRegistry::standard();
    let route_key = args
        .routes
        .as_ref()
        .and_then(|r| r.first().cloned())
        .or_else(|| scan.route.clone())
        .unwrap_or_else(|| "algebraic".to_string());
    let route = registry.resolve(&route_key)?;
    check_route_size(route, model_cfg.length)?;
    let targets: Vec<ScanTarget> = scan
        .axes
        .iter()
        .map(|a| ScanTarget::parse(&a.parameter, model_cfg.length))
        .collect::<CliResult<_>>()?;
    let grids: Vec<Vec<Complex64>> = scan.axes.iter().map(|a| a.values()).collect();
    let base_lambda: Vec<Complex64> = point_cfg.lambda.iter().map(|&p| cplx(p)).collect();
    // Row-major: the first axis is the outer loop.
    let combos: Vec<Vec<Complex64>> = if grids.len() == 1 {
        grids[0].iter().map(|&v| vec![v]).collect()
    } else {
        grids[0]
            .iter()
            .flat_map(|&u| grids[1].iter().map(move |&v| vec![u, v]))
            .collect()
    };
    let mut rows = Vec::with_capacity(combos.len());
    for (index, combo) in combos.iter().enumerate() {
        let coords: Vec<(String, Complex64)> = scan
            .axes
            .iter()
            .zip(combo)
            .map(|(a, &v)| (a.parameter.clone(), v))
            .collect();
        match scan_value(&model_cfg, &targets, combo, &base_lambda, route) {
            Ok(value) => rows.push(ScanRow {
                index,
                coords,
                value: Some(value),
                reason: None,
            }),
            Err(ScanMiss::Degenerate(reason)) => rows.push(ScanRow {
                index,
                coords,
                value: None,
                reason: Some(reason),
            }),
            Err(ScanMiss::Fatal(failure)) => return Err(failure),
        }
    }
    let axis_names: Vec<String> = scan.axes.iter().map(|a| a.parameter.clone()).collect();
    let format = cfg
        .output
        .as_ref()
        .and_then(|o| o.format.clone())
        .unwrap_or_else(|| "csv".to_string());
    let text = match format.as_str() {
        "csv" => report::scan_csv(&rows, &axis_names),
        "json" => report::render(&report::scan_json(&rows, &axis_names, route.name())),
        other => {
            return Err(Failure::config(format!(
                "unknown output format {other} (expected csv or json)"
            )))
        }
    };
    write_output(args, &cfg, &text)?;
    Ok(0)
}
