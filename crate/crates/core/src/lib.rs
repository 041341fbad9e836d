//! Dedicated versus pooled newsvendor inventory for two products whose
//! demands are coupled by a copula.
//!
//! The pieces, bottom up:
//!
//! * [`marginals`]: parametric demand laws with CDF, quantile and density.
//! * [`copulas`]: bivariate copulas, Kendall's tau and tau calibration.
//! * [`joint_demand`]: Sklar composition and the distribution of `D1 + D2`,
//!   by quadrature and by Monte Carlo.
//! * [`pooling`]: newsvendor quantities, pooling-effect curves and sign-change
//!   thresholds.
//! * [`experiments`]: config-driven scenario grids and presets.

pub mod config;
pub mod copulas;
pub mod error;
pub mod experiments;
pub mod joint_demand;
pub mod marginals;
pub mod pooling;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;

pub use copulas::{calibrate_parameter, empirical_kendall_tau, Copula, CopulaFamily};
pub use error::{Error, Result};
pub use joint_demand::{JointDemandModel, QuantileMethod, SumQuantileEstimate};
pub use marginals::{MarginalDistribution, MarginalFamily};
pub use pooling::{CurveMethod, PoolingCurve, ProfitParams, ThresholdReport};

