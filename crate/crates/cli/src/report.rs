//! Report serialization. Every floating-point value is rendered as a
//! 17-significant-digit decimal string so reruns with the same seed
//! produce byte-identical output and readers round-trip exactly.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use rsos_core::checks::SuiteReport;
use rsos_core::partition::SpectralPoint;
use rsos_core::routes::PartitionReport;

use crate::config::ModelConfig;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn real(x: f64) -> Value {
    Value::String(fmt_f64(x))
}

pub fn complex(z: Complex64) -> Value {
    json!([fmt_f64(z.re), fmt_f64(z.im)])
}

fn complex_list(zs: &[Complex64]) -> Value {
    Value::Array(zs.iter().map(|&z| complex(z)).collect())
}

pub fn render(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn model_echo(model: &ModelConfig) -> Value {
    let mut obj = Map::new();
    obj.insert("length".into(), json!(model.length));
    if model.trigonometric {
        obj.insert("trigonometric".into(), json!(true));
    } else {
        obj.insert("tau".into(), complex(model.tau_value()));
    }
    obj.insert("gamma".into(), complex(crate::config::cplx(model.gamma)));
    obj.insert("zeta".into(), complex(crate::config::cplx(model.zeta)));
    obj.insert("theta".into(), complex(crate::config::cplx(model.theta)));
    obj.insert(
        "mu".into(),
        Value::Array(
            model
                .mu
                .iter()
                .map(|&m| complex(crate::config::cplx(m)))
                .collect(),
        ),
    );
    Value::Object(obj)
}

fn point_entry(point: &SpectralPoint, report: &PartitionReport) -> Value {
    let values: Vec<Value> = report
        .values
        .iter()
        .map(|v| {
            json!({
                "route": v.route,
                "value": complex(v.value),
                "seconds": real(v.seconds),
            })
        })
        .collect();
    let deviations: Vec<Value> = report
        .deviations
        .iter()
        .map(|d| {
            json!({
                "route_a": d.route_a,
                "route_b": d.route_b,
                "deviation": real(d.deviation),
            })
        })
        .collect();
    let diagnostics: Map<String, Value> = report
        .diagnostics
        .iter()
        .map(|(name, value)| (name.clone(), real(*value)))
        .collect();
    json!({
        "lambda": complex_list(point.lambdas()),
        "omega": complex(report.omega),
        "values": values,
        "deviations": deviations,
        "max_deviation": real(report.max_deviation),
        "diagnostics": diagnostics,
    })
}

pub fn eval_report(
    model: &ModelConfig,
    seed: u64,
    tolerance: f64,
    routes: &[String],
    points: &[(SpectralPoint, PartitionReport)],
) -> Value {
    let max_deviation = points
        .iter()
        .map(|(_, r)| r.max_deviation)
        .fold(0.0_f64, f64::max);
    let entries: Vec<Value> = points
        .iter()
        .map(|(p, r)| point_entry(p, r))
        .collect();
    json!({
        "command": "eval",
        "seed": seed,
        "tolerance": real(tolerance),
        "routes": routes,
        "model": model_echo(model),
        "points": entries,
        "max_deviation": real(max_deviation),
        "agree": max_deviation <= tolerance,
    })
}

/// Verify reports omit wall-clock timings so a rerun with the same
/// configuration and seed is byte-identical.
pub fn verify_report(
    seed: u64,
    trigonometric: bool,
    tau: Complex64,
    max_length: usize,
    draws: usize,
    tol_override: Option<f64>,
    suites: &[SuiteReport],
) -> Value {
    let suite_entries: Vec<Value> = suites
        .iter()
        .map(|s| {
            let checks: Vec<Value> = s
                .checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "draws": c.draws,
                        "resamples": c.resamples,
                        "worst": real(c.worst),
                        "tolerance": real(c.tolerance),
                        "pass": c.pass,
                    })
                })
                .collect();
            json!({
                "suite": s.suite,
                "pass": s.all_pass(),
                "checks": checks,
            })
        })
        .collect();
    let mode = if trigonometric {
        json!("trigonometric")
    } else {
        json!("elliptic")
    };
    let tau_field = if trigonometric {
        Value::Null
    } else {
        complex(tau)
    };
    json!({
        "command": "verify",
        "seed": seed,
        "mode": mode,
        "tau": tau_field,
        "max_length": max_length,
        "draws": draws,
        "tolerance_override": tol_override.map(real).unwrap_or(Value::Null),
        "suites": suite_entries,
        "pass": suites.iter().all(|s| s.all_pass()),
    })
}

/// One scan grid row. A degenerate parameter combination keeps its grid
/// coordinates but carries no values, only the failed guard bracket.
pub struct ScanRow {
    pub index: usize,
    pub coords: Vec<(String, Complex64)>,
    pub value: Option<(Complex64, f64)>,
    pub reason: Option<String>,
}

fn csv_quote(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

pub fn scan_csv(rows: &[ScanRow], axis_names: &[String]) -> String {
    let mut header = vec!["index".to_string()];
    for name in axis_names {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    header.extend(
        ["z_re", "z_im", "z_abs", "zbar_abs", "status", "reason"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let mut fields = vec![row.index.to_string()];
        for (_, value) in &row.coords {
            fields.push(fmt_f64(value.re));
            fields.push(fmt_f64(value.im));
        }
        match (&row.value, &row.reason) {
            (Some((z, zbar_abs)), _) => {
                fields.push(fmt_f64(z.re));
                fields.push(fmt_f64(z.im));
                fields.push(fmt_f64(z.norm()));
                fields.push(fmt_f64(*zbar_abs));
                fields.push("ok".to_string());
                fields.push(csv_quote(""));
            }
            (None, reason) => {
                fields.extend(std::iter::repeat(String::new()).take(4));
                fields.push("degenerate".to_string());
                fields.push(csv_quote(reason.as_deref().unwrap_or("")));
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn scan_json(rows: &[ScanRow], axis_names: &[String], route: &str) -> Value {
    let entries: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            obj.insert("index".into(), json!(row.index));
            for (name, value) in &row.coords {
                obj.insert(name.clone(), complex(*value));
            }
            match (&row.value, &row.reason) {
                (Some((z, zbar_abs)), _) => {
                    obj.insert("z".into(), complex(*z));
                    obj.insert("z_abs".into(), real(z.norm()));
                    obj.insert("zbar_abs".into(), real(*zbar_abs));
                    obj.insert("status".into(), json!("ok"));
                }
                (None, reason) => {
                    obj.insert("z".into(), Value::Null);
                    obj.insert("z_abs".into(), Value::Null);
                    obj.insert("zbar_abs".into(), Value::Null);
                    obj.insert("status".into(), json!("degenerate"));
                    obj.insert(
                        "reason".into(),
                        json!(reason.as_deref().unwrap_or("")),
                    );
                }
            }
            Value::Object(obj)
        })
        .collect();
    json!({
        "command": "scan",
        "route": route,
        "axes": axis_names,
        "rows": entries,
    })
}
