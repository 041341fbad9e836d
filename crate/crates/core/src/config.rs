//! JSON specifications for marginals, copulas, models and scenario grids.
//!
//! ```json
//! {"m1": {"family": "beta", "params": [2, 8]},
//!  "m2": {"family": "beta", "params": [5, 5]},
//!  "copula": {"family": "frank", "tau": 0.8}}
//! ```

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::copulas::{calibrate_parameter, Copula, CopulaFamily};
use crate::error::{Error, Result};
use crate::joint_demand::{JointDemandModel, QuantileMethod};
use crate::marginals::{MarginalDistribution, MarginalFamily};
use crate::pooling::{DEFAULT_SCAN_POINTS, DEFAULT_ZERO_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    pub family: MarginalFamily,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl MarginalSpec {
    pub fn new(family: MarginalFamily, params: &[f64]) -> Self {
        Self { family, params: params.to_vec() }
    }

    pub fn beta(a: f64, b: f64) -> Self {
        Self::new(MarginalFamily::Beta, &[a, b])
    }

    pub fn build(&self) -> Result<MarginalDistribution> {
        MarginalDistribution::from_params(self.family, &self.params)
    }

    /// File-name friendly label, e.g. `beta-2-8`.
    pub fn label(&self) -> String {
        let mut s = self.family.name().to_string();
        for p in &self.params {
            s.push('-');
            s.push_str(&p.to_string());
        }
        s
    }
}

/// A copula given either by Kendall's tau (calibrated when built) or by its
/// parameter directly. `rho` is accepted as a synonym of `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaSpec {
    pub family: CopulaFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, alias = "rho", skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl CopulaSpec {
    pub fn of(family: CopulaFamily) -> Self {
        Self { family, tau: None, theta: None }
    }

    pub fn with_tau(family: CopulaFamily, tau: f64) -> Self {
        Self { family, tau: Some(tau), theta: None }
    }

    pub fn with_theta(family: CopulaFamily, theta: f64) -> Self {
        Self { family, tau: None, theta: Some(theta) }
    }

    pub fn build(&self) -> Result<Copula> {
        let name = self.family.name();
        match (self.tau, self.theta) {
            (Some(_), Some(_)) => Err(Error::Config(format!("copula '{name}': give tau or theta, not both"))),
            (Some(tau), None) => calibrate_parameter(self.family, tau),
            (None, theta) => {
                if self.family.has_parameter() && theta.is_none() {
                    return Err(Error::Config(format!("copula '{name}' needs tau or theta")));
                }
                if !self.family.has_parameter() && theta.is_some() {
                    return Err(Error::Config(format!("copula '{name}' takes no parameter")));
                }
                Copula::new(self.family, theta)
            }
        }
    }

    /// File-name friendly label, e.g. `gumbel-tau0.5` or `gaussian-theta-0.5`.
    pub fn label(&self) -> String {
        let name = self.family.name();
        match (self.tau, self.theta) {
            (Some(t), _) => format!("{name}-tau{t}"),
            (None, Some(th)) => format!("{name}-theta{th}"),
            (None, None) => name.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub m1: MarginalSpec,
    pub m2: MarginalSpec,
    pub copula: CopulaSpec,
}

impl ModelSpec {
    pub fn build(&self) -> Result<JointDemandModel> {
        Ok(JointDemandModel::new(self.m1.build()?, self.m2.build()?, self.copula.build()?))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn default_mc_samples() -> usize {
    100_000
}
fn default_scan_points() -> usize {
    DEFAULT_SCAN_POINTS
}
fn default_zero_tol() -> f64 {
    DEFAULT_ZERO_TOL
}
fn default_validation_samples() -> usize {
    10_000
}
fn default_true() -> bool {
    true
}
fn default_method() -> QuantileMethod {
    QuantileMethod::Quadrature
}

/// A grid of cells, one per (marginal pair, copula spec).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub marginal_pairs: Vec<(MarginalSpec, MarginalSpec)>,
    pub copula_specs: Vec<CopulaSpec>,
    pub t_grid: Vec<f64>,
    #[serde(default = "default_method")]
    pub method: QuantileMethod,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    /// Threshold scan resolution; scans always use quadrature.
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
    /// Pairs drawn per cell to check the realized Kendall's tau.
    #[serde(default = "default_validation_samples")]
    pub validation_samples: usize,
    #[serde(default = "default_true")]
    pub compute_thresholds: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// `n` points evenly spaced from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || (n > 1 && hi <= lo) {
        return Err(Error::Config(format!("bad grid {lo}:{hi}:{n}")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let span = hi - lo;
    let steps = (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + span * i as f64 / steps }).collect())
}

/// Parses `lo:hi:n`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("grid '{text}' is not lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    uniform_grid(lo, hi, n)
}

/// One cell of a scenario grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub id: String,
    pub m1: MarginalSpec,
    pub m2: MarginalSpec,
    pub copula: CopulaSpec,
}

impl CellSpec {
    pub fn model(&self) -> Result<JointDemandModel> {
        ModelSpec { m1: self.m1.clone(), m2: self.m2.clone(), copula: self.copula.clone() }.build()
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn cells(&self) -> Vec<CellSpec> {
        let mut out = Vec::with_capacity(self.marginal_pairs.len() * self.copula_specs.len());
        for (m1, m2) in &self.marginal_pairs {
            for c in &self.copula_specs {
                out.push(CellSpec {
                    id: format!("{}__{}__{}", m1.label(), m2.label(), c.label()),
                    m1: m1.clone(),
                    m2: m2.clone(),
                    copula: c.clone(),
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.marginal_pairs.is_empty() {
            return Err(Error::Config("marginal_pairs is empty".into()));
        }
        if self.copula_specs.is_empty() {
            return Err(Error::Config("copula_specs is empty".into()));
        }
        for (m1, m2) in &self.marginal_pairs {
            m1.build()?;
            m2.build()?;
        }
        for c in &self.copula_specs {
            if let (Some(tau), CopulaFamily::Gumbel | CopulaFamily::Clayton) = (c.tau, c.family) {
                if tau < 0.0 {
                    return Err(Error::TauRange { family: c.family.name(), tau, range: c.family.tau_range() });
                }
            }
            c.build()?;
        }
        if self.t_grid.is_empty() {
            return Err(Error::Config("t_grid is empty".into()));
        }
        if let Some(&t) = self.t_grid.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::Config(format!("t_grid value {t} is outside (0, 1)")));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("t_grid must be strictly increasing".into()));
        }
        if self.method == QuantileMethod::MonteCarlo && self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be positive".into()));
        }
        if self.compute_thresholds && self.scan_points < 9 {
            return Err(Error::Config("scan_points must be at least 9".into()));
        }
        if !(self.zero_tol >= 0.0) {
            return Err(Error::Config("zero_tol must be non-negative".into()));
        }
        let mut seen = HashSet::new();
        for cell in self.cells() {
            if !seen.insert(cell.id.clone()) {
                return Err(Error::Config(format!("duplicate cell '{}'", cell.id)));
            }
        }
        Ok(())
    }
}
