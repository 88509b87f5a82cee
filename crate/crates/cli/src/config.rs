//! JSON run configuration. Complex numbers are two-element [re, im]
//! arrays; unknown keys are rejected so typos surface as config errors.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use rsos_core::algebra::ModelInstance;
use rsos_core::theta::EllipticContext;

use crate::fail::{CliResult, Failure};

pub fn cplx(pair: [f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<ModelConfig>,
    pub point: Option<PointConfig>,
    pub sample: Option<SampleConfig>,
    pub routes: Option<Vec<String>>,
    pub suites: Option<Vec<String>>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub verify: Option<VerifySection>,
    pub scan: Option<ScanSection>,
    pub output: Option<OutputSection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<FileConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("cannot parse {}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub length: usize,
    #[serde(default)]
    pub trigonometric: bool,
    /// Half-period ratio; defaults to 2i, ignored in trigonometric mode.
    pub tau: Option<[f64; 2]>,
    pub gamma: [f64; 2],
    pub zeta: [f64; 2],
    pub theta: [f64; 2],
    pub mu: Vec<[f64; 2]>,
}

impl ModelConfig {
    pub fn tau_value(&self) -> Complex64 {
        cplx(self.tau.unwrap_or([0.0, 2.0]))
    }

    /// Core-level construction; scan rows inspect the error kind to tell
    /// degenerate parameter combinations from fatal configuration errors.
    pub fn build(&self) -> rsos_core::Result<ModelInstance> {
        let ctx = if self.trigonometric {
            EllipticContext::trigonometric()
        } else {
            EllipticContext::elliptic(self.tau_value())?
        };
        ModelInstance::new(
            ctx,
            self.length,
            cplx(self.gamma),
            cplx(self.zeta),
            cplx(self.theta),
            self.mu.iter().map(|&m| cplx(m)).collect(),
        )
    }

    pub fn instantiate(&self) -> CliResult<ModelInstance> {
        self.build().map_err(Failure::from)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub lambda: Vec<[f64; 2]>,
}

fn default_re() -> [f64; 2] {
    [0.1, 0.9]
}

fn default_im() -> [f64; 2] {
    [-0.3, 0.3]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub count: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_re")]
    pub re: [f64; 2],
    #[serde(default = "default_im")]
    pub im: [f64; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub max_length: Option<usize>,
    pub draws: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// Route name or shorthand; the operator route when omitted.
    pub route: Option<String>,
    /// One axis for a 1-D grid, two for a 2-D grid (row-major order).
    pub axes: Vec<AxisConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub parameter: String,
    pub start: [f64; 2],
    pub stop: [f64; 2],
    pub steps: usize,
}

impl AxisConfig {
    /// Evenly spaced values from start to stop inclusive; a single step
    /// sits at start, zero steps give an empty grid.
    pub fn values(&self) -> Vec<Complex64> {
        let a = cplx(self.start);
        let b = cplx(self.stop);
        match self.steps {
            0 => Vec::new(),
            1 => vec![a],
            n => (0..n)
                .map(|i| a + (b - a) * (i as f64 / (n - 1) as f64))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Option<String>,
}

/// A scalar model or point parameter addressable by a scan axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanTarget {
    Gamma,
    Zeta,
    Theta,
    Lambda(usize),
    Mu(usize),
}

impl ScanTarget {
    pub fn parse(name: &str, length: usize) -> CliResult<ScanTarget> {
        let indexed = |prefix: &str| -> Option<CliResult<usize>> {
            let rest = name.strip_prefix(prefix)?.strip_suffix(']')?;
            Some(rest.parse::<usize>().map_err(|_| {
                Failure::config(format!("bad index in scan parameter {name}"))
            }))
        };
        let target = match name {
            "gamma" => ScanTarget::Gamma,
            "zeta" => ScanTarget::Zeta,
            "theta" => ScanTarget::Theta,
            _ => {
                if let Some(idx) = indexed("lambda[") {
                    ScanTarget::Lambda(idx?)
                } else if let Some(idx) = indexed("mu[") {
                    ScanTarget::Mu(idx?)
                } else {
                    return Err(Failure::config(format!(
                        "unknown scan parameter {name} (expected gamma, zeta, theta, lambda[k], or mu[k])"
                    )));
                }
            }
        };
        let index_ok = match target {
            ScanTarget::Lambda(k) | ScanTarget::Mu(k) => k < length,
            _ => true,
        };
        if !index_ok {
            return Err(Failure::config(format!(
                "scan parameter {name} is out of range for chain length {length}"
            )));
        }
        Ok(target)
    }
}
