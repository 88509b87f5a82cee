//! Strategy registry for the evaluation routes.
//!
//! Each way of computing the partition function sits behind the same
//! trait, registered under a stable name, so callers pick strategies at
//! runtime by identifier instead of linking against concrete functions.

use num_complex::Complex64;

use crate::algebra::{ModelInstance, MAX_SYSTEM_SIZE};
use crate::error::{Error, Result};
use crate::funceq::fe_residual;
use crate::partition::{
    crossing_factor, omega_l, z_algebraic, z_contour, z_symmetrized, SpectralPoint,
    SymmetrizedVariant, MAX_CONTOUR_SIZE,
};

/// One evaluation strategy for the partition function.
pub trait Route: Send + Sync {
    /// Stable registry identifier, also used by configs and the CLI.
    fn name(&self) -> &'static str;

    /// Largest chain length the strategy accepts.
    fn max_system_size(&self) -> usize;

    fn evaluate(&self, model: &ModelInstance, point: &SpectralPoint) -> Result<Complex64>;
}

struct Algebraic;

impl Route for Algebraic {
    fn name(&self) -> &'static str {
        "algebraic"
    }

    fn max_system_size(&self) -> usize {
        MAX_SYSTEM_SIZE
    }

    fn evaluate(&self, model: &ModelInstance, point: &SpectralPoint) -> Result<Complex64> {
        z_algebraic(model, point)
    }
}

struct SymmetrizedMain;

impl Route for SymmetrizedMain {
    fn name(&self) -> &'static str {
        "symmetrized-main"
    }

    fn max_system_size(&self) -> usize {
        MAX_SYSTEM_SIZE
    }

    fn evaluate(&self, model: &ModelInstance, point: &SpectralPoint) -> Result<Complex64> {
        z_symmetrized(model, point, SymmetrizedVariant::Main)
    }
}

struct SymmetrizedAlt;

impl Route for SymmetrizedAlt {
    fn name(&self) -> &'static str {
        "symmetrized-alt"
    }

    fn max_system_size(&self) -> usize {
        MAX_SYSTEM_SIZE
    }

    fn evaluate(&self, model: &ModelInstance, point: &SpectralPoint) -> Result<Complex64> {
        z_symmetrized(model, point, SymmetrizedVariant::Alt)
    }
}

struct Contour;

impl Route for Contour {
    fn name(&self) -> &'static str {
        "contour"
    }

    fn max_system_size(&self) -> usize {
        MAX_CONTOUR_SIZE
    }

    fn evaluate(&self, model: &ModelInstance, point: &SpectralPoint) -> Result<Complex64> {
        z_contour(model, point, None, 128)
    }
}

/// Name-indexed collection of evaluation strategies.
pub struct RouteRegistry {
    routes: Vec<Box<dyn Route>>,
}

impl RouteRegistry {
    /// The four built-in strategies.
    pub fn standard() -> Self {
        RouteRegistry {
            routes: vec![
                Box::new(Algebraic),
                Box::new(SymmetrizedMain),
                Box::new(SymmetrizedAlt),
                Box::new(Contour),
            ],
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.routes.iter().map(|r| r.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Route> {
        self.routes.iter().map(|r| r.as_ref())
    }

    /// Look a strategy up by its full name or one-letter shorthand
    /// (a, s, t, c for the respective registry entries).
    pub fn resolve(&self, key: &str) -> Result<&dyn Route> {
        let normalized = match key {
            "a" => "algebraic",
            "s" => "symmetrized-main",
            "t" => "symmetrized-alt",
            "c" => "contour",
            other => other,
        };
        self.routes
            .iter()
            .map(|r| r.as_ref())
            .find(|r| r.name() == normalized)
            .ok_or_else(|| {
                Error::UnknownRoute(format!(
                    "{key} (available: {})",
                    self.names().join(", ")
                ))
            })
    }
}

impl Default for RouteRegistry {
    fn default() -> Self {
        RouteRegistry::standard()
    }
}

/// One strategy's result inside a report.
#[derive(Clone, Debug)]
pub struct RouteValue {
    pub route: String,
    pub value: Complex64,
    pub seconds: f64,
}

/// Relative deviation between two strategies' results.
#[derive(Clone, Debug)]
pub struct PairDeviation {
    pub route_a: String,
    pub route_b: String,
    pub deviation: f64,
}

/// Values of the requested strategies plus their pairwise spread and the
/// point-local residual diagnostics.
#[derive(Clone, Debug)]
pub struct PartitionReport {
    pub omega: Complex64,
    pub values: Vec<RouteValue>,
    pub deviations: Vec<PairDeviation>,
    pub max_deviation: f64,
    pub diagnostics: Vec<(String, f64)>,
}

/// |a - b| relative to the larger magnitude; zero when both vanish.
pub fn relative_deviation(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Residual checks evaluated at this exact model and point with the
/// operator strategy: the linear-relation residual at the first usable
/// probe of a fixed ladder, permutation invariance of the first two slots,
/// and crossing covariance of the first slot. A diagnostic whose probe
/// trips a genericity guard is omitted rather than reported as non-finite.
pub fn point_diagnostics(
    model: &ModelInstance,
    point: &SpectralPoint,
) -> Result<Vec<(String, f64)>> {
    let mut diags = Vec::new();
    for t in 0..8 {
        let probe = Complex64::new(0.41 + 0.017 * t as f64, -0.095 - 0.013 * t as f64);
        match fe_residual(model, probe, point, &z_algebraic) {
            Ok((sum, scale)) => {
                diags.push((
                    "relation-residual".to_string(),
                    sum / scale.max(f64::MIN_POSITIVE),
                ));
                break;
            }
            Err(Error::DegenerateParameter(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if point.len() >= 2 {
        let mut reordered = point.lambdas().to_vec();
        reordered.swap(0, 1);
        let za = z_algebraic(model, point)?;
        let zb = z_algebraic(model, &SpectralPoint::new(reordered))?;
        diags.push(("permutation-invariance".to_string(), relative_deviation(za, zb)));
    }
    let l0 = point.lambdas()[0];
    let crossing = (|| -> Result<f64> {
        let crossed = point.with_lambda(0, -l0 - model.gamma());
        let expect = crossing_factor(model, l0)? * z_algebraic(model, point)?;
        Ok(relative_deviation(z_algebraic(model, &crossed)?, expect))
    })();
    match crossing {
        Ok(r) => diags.push(("crossing-covariance".to_string(), r)),
        Err(Error::DegenerateParameter(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(diags)
}

/// Evaluate the named strategies and collect pairwise deviations.
pub fn evaluate_routes(
    registry: &RouteRegistry,
    model: &ModelInstance,
    point: &SpectralPoint,
    names: &[&str],
) -> Result<PartitionReport> {
    let mut values: Vec<RouteValue> = Vec::with_capacity(names.len());
    for key in names {
        let route = registry.resolve(key)?;
        if model.length() > route.max_system_size() {
            return Err(Error::UnsupportedSize(format!(
                "route {} supports chain length <= {}, got {}",
                route.name(),
                route.max_system_size(),
                model.length()
            )));
        }
        if values.iter().any(|v| v.route == route.name()) {
            continue;
        }
        let start = std::time::Instant::now();
        let value = route.evaluate(model, point)?;
        values.push(RouteValue {
            route: route.name().to_string(),
            value,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let mut deviations = Vec::new();
    let mut max_deviation = 0.0_f64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let d = relative_deviation(values[i].value, values[j].value);
            max_deviation = max_deviation.max(d);
            deviations.push(PairDeviation {
                route_a: values[i].route.clone(),
                route_b: values[j].route.clone(),
                deviation: d,
            });
        }
    }
    Ok(PartitionReport {
        omega: omega_l(model)?,
        values,
        deviations,
        max_deviation,
        diagnostics: point_diagnostics(model, point)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::EllipticContext;
    use crate::tol;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(l: usize) -> ModelInstance {
        let ctx = EllipticContext::elliptic(c(0.0, 2.0)).unwrap();
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

    #[test]
    fn registry_resolves_names_and_shorthands() {
        let reg = RouteRegistry::standard();
        assert_eq!(
            reg.names(),
            vec!["algebraic", "symmetrized-main", "symmetrized-alt", "contour"]
        );
        for (key, want) in [
            ("a", "algebraic"),
            ("s", "symmetrized-main"),
            ("t", "symmetrized-alt"),
            ("c", "contour"),
            ("symmetrized-alt", "symmetrized-alt"),
        ] {
            assert_eq!(reg.resolve(key).unwrap().name(), want);
        }
        match reg.resolve("nope") {
            Err(Error::UnknownRoute(msg)) => assert!(msg.contains("algebraic")),
            Err(other) => panic!("expected unknown-route error, got {other:?}"),
            Ok(route) => panic!("expected unknown-route error, got {}", route.name()),
        }
    }

    #[test]
    fn report_collects_values_and_deviations() {
        let m = model(2);
        let reg = RouteRegistry::standard();
        let report = evaluate_routes(&reg, &m, &point(2), &["a", "s", "t", "c"]).unwrap();
        assert_eq!(report.values.len(), 4);
        assert_eq!(report.deviations.len(), 6);
        assert!(
            report.max_deviation <= tol::CONTOUR_AGREEMENT,
            "max deviation {:.3e}",
            report.max_deviation
        );
        let exact_pairs: f64 = report
            .deviations
            .iter()
            .filter(|d| d.route_a != "contour" && d.route_b != "contour")
            .map(|d| d.deviation)
            .fold(0.0, f64::max);
        assert!(exact_pairs <= tol::ROUTE_AGREEMENT, "{exact_pairs:.3e}");
        assert_eq!(report.diagnostics.len(), 3);
        for (name, value) in &report.diagnostics {
            assert!(*value <= tol::FUNCEQ_RESIDUAL, "{name}: {value:.3e}");
        }
    }

    #[test]
    fn oversized_contour_request_is_rejected() {
        let m = model(4);
        let reg = RouteRegistry::standard();
        match evaluate_routes(&reg, &m, &point(4), &["c"]) {
            Err(Error::UnsupportedSize(msg)) => assert!(msg.contains("contour")),
            other => panic!("expected size rejection, got {other:?}"),
        }
    }
}
