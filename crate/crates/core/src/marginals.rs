//! Univariate demand laws.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalFamily {
    Beta,
    Normal,
    Exponential,
    Pareto,
    Uniform,
}

impl MarginalFamily {
    pub fn name(self) -> &'static str {
        match self {
            MarginalFamily::Beta => "beta",
            MarginalFamily::Normal => "normal",
            MarginalFamily::Exponential => "exponential",
            MarginalFamily::Pareto => "pareto",
            MarginalFamily::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Beta { a: f64, b: f64, ln_b: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Pareto { alpha: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
}

/// A validated parametric demand distribution. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalDistribution {
    law: Law,
}

fn positive(family: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { family, reason: format!("{name} must be finite and > 0, got {v}") })
    }
}

impl MarginalDistribution {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        positive("beta", "shape a", a)?;
        positive("beta", "shape b", b)?;
        Ok(Self { law: Law::Beta { a, b, ln_b: special::ln_beta(a, b) } })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidParameter { family: "normal", reason: format!("mean must be finite, got {mean}") });
        }
        positive("normal", "sd", sd)?;
        Ok(Self { law: Law::Normal { mean, sd } })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("exponential", "rate", rate)?;
        Ok(Self { law: Law::Exponential { rate } })
    }

    /// Pareto with tail index `alpha` and scale (minimum) `scale`. Any
    /// `alpha > 0` is accepted, including the infinite-mean regime.
    pub fn pareto(alpha: f64, scale: f64) -> Result<Self> {
        positive("pareto", "tail index", alpha)?;
        positive("pareto", "scale", scale)?;
        Ok(Self { law: Law::Pareto { alpha, scale } })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter { family: "uniform", reason: format!("need finite lower < upper, got [{lo}, {hi}]") });
        }
        Ok(Self { law: Law::Uniform { lo, hi } })
    }

    /// Build from a family tag and its positional parameters, as they appear
    /// in config files. Pareto accepts `[alpha]` with scale 1.
    pub fn from_params(family: MarginalFamily, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter { family: family.name(), reason: format!("expected {n} parameters, got {}", params.len()) })
            }
        };
        match family {
            MarginalFamily::Beta => {
                want(2)?;
                Self::beta(params[0], params[1])
            }
            MarginalFamily::Normal => {
                want(2)?;
                Self::normal(params[0], params[1])
            }
            MarginalFamily::Exponential => {
                want(1)?;
                Self::exponential(params[0])
            }
            MarginalFamily::Pareto => {
                if params.len() == 1 {
                    Self::pareto(params[0], 1.0)
                } else {
                    want(2)?;
                    Self::pareto(params[0], params[1])
                }
            }
            MarginalFamily::Uniform => {
                want(2)?;
                Self::uniform(params[0], params[1])
            }
        }
    }

    pub fn family(&self) -> MarginalFamily {
        match self.law {
            Law::Beta { .. } => MarginalFamily::Beta,
            Law::Normal { .. } => MarginalFamily::Normal,
            Law::Exponential { .. } => MarginalFamily::Exponential,
            Law::Pareto { .. } => MarginalFamily::Pareto,
            Law::Uniform { .. } => MarginalFamily::Uniform,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self.law {
            Law::Beta { a, b, .. } => vec![a, b],
            Law::Normal { mean, sd } => vec![mean, sd],
            Law::Exponential { rate } => vec![rate],
            Law::Pareto { alpha, scale } => vec![alpha, scale],
            Law::Uniform { lo, hi } => vec![lo, hi],
        }
    }

    /// Closed support `(lower, upper)`; infinite ends are `±inf`.
    pub fn support(&self) -> (f64, f64) {
        match self.law {
            Law::Beta { .. } => (0.0, 1.0),
            Law::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Law::Exponential { .. } => (0.0, f64::INFINITY),
            Law::Pareto { scale, .. } => (scale, f64::INFINITY),
            Law::Uniform { lo, hi } => (lo, hi),
        }
    }

    /// `None` when the mean is infinite (Pareto with tail index <= 1).
    pub fn mean(&self) -> Option<f64> {
        match self.law {
            Law::Beta { a, b, .. } => Some(a / (a + b)),
            Law::Normal { mean, .. } => Some(mean),
            Law::Exponential { rate } => Some(1.0 / rate),
            Law::Pareto { alpha, scale } => (alpha > 1.0).then(|| alpha * scale / (alpha - 1.0)),
            Law::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.law {
            Law::Beta { a, b, ln_b } => special::reg_inc_beta(x, a, b, ln_b),
            Law::Normal { mean, sd } => special::normal_cdf((x - mean) / sd),
            Law::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Law::Pareto { alpha, scale } => {
                if x <= scale {
                    0.0
                } else {
                    -(alpha * (scale / x).ln()).exp_m1()
                }
            }
            Law::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self.law {
            Law::Beta { a, b, ln_b } => special::beta_pdf(x, a, b, ln_b),
            Law::Normal { mean, sd } => special::normal_pdf((x - mean) / sd) / sd,
            Law::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Law::Pareto { alpha, scale } => {
                if x < scale {
                    0.0
                } else {
                    alpha / x * (scale / x).powf(alpha)
                }
            }
            Law::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    /// Generalized inverse `inf { x : F(x) >= p }`.
    ///
    /// `p = 0` or `p = 1` map to the corresponding support endpoint when it
    /// is finite and are rejected otherwise.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if p.is_nan() || !(0.0..=1.0).contains(&p) || (p == 0.0 && !lo.is_finite()) || (p == 1.0 && !hi.is_finite()) {
            return Err(Error::Domain { what: "probability", value: p, domain: domain_label(lo, hi) });
        }
        if p == 0.0 {
            return Ok(lo);
        }
        if p == 1.0 {
            return Ok(hi);
        }
        let x = self.quantile_interior(p);
        if !x.is_finite() {
            return Err(Error::Overflow { what: "quantile", p });
        }
        Ok(x)
    }

    /// Quantile for `p` strictly inside `(0, 1)`; no validation.
    pub(crate) fn quantile_interior(&self, p: f64) -> f64 {
        match self.law {
            Law::Beta { a, b, ln_b } => special::inv_reg_inc_beta(p, a, b, ln_b),
            Law::Normal { mean, sd } => mean + sd * special::normal_quantile(p),
            Law::Exponential { rate } => -(-p).ln_1p() / rate,
            Law::Pareto { alpha, scale } => scale * (-(-p).ln_1p() / alpha).exp(),
            Law::Uniform { lo, hi } => lo + p * (hi - lo),
        }
    }

    /// Inverse-CDF transform of a uniform draw.
    pub fn sample(&self, u: f64) -> Result<f64> {
        self.quantile(u)
    }
}

fn domain_label(lo: f64, hi: f64) -> &'static str {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => "[0, 1]",
        (true, false) => "[0, 1)",
        (false, true) => "(0, 1]",
        (false, false) => "(0, 1)",
    }
}

impl fmt::Display for MarginalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().iter().map(|p| p.to_string()).collect();
        write!(f, "{}({})", self.family().name(), params.join(","))
    }
}
