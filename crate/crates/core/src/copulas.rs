//! Bivariate copulas.
//!
//! Parameter conventions:
//!
//! * Clayton uses the standard form `C = (u^-θ + v^-θ - 1)^(-1/θ)`, `θ > 0`,
//!   with `τ = θ / (θ + 2)`. The reciprocal parameterization
//!   `(u^(-1/θ') + v^(-1/θ') - 1)^(-θ')` maps as `θ = 1/θ'`
//!   ([`Copula::clayton_reciprocal`]).
//! * Frank uses the natural parameter,
//!   `C = -(1/θ) ln(1 + (e^-θu - 1)(e^-θv - 1)/(e^-θ - 1))`, `θ ≠ 0`.
//!   The log-base form `log_α(1 + (α^u - 1)(α^v - 1)/(α - 1))` is the same
//!   copula with `α = e^-θ` ([`Copula::frank_log_base`]); `α = 100` gives
//!   `τ ≈ -0.43`.
//! * Gaussian is parameterized by the correlation `ρ ∈ (-1, 1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::rng::UniformStream;
use crate::special::{debye1, normal_cdf, normal_pdf, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaFamily {
    Independence,
    Gumbel,
    Clayton,
    Frank,
    Gaussian,
    Comonotone,
    Countermonotone,
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 7] = [
        CopulaFamily::Independence,
        CopulaFamily::Gumbel,
        CopulaFamily::Clayton,
        CopulaFamily::Frank,
        CopulaFamily::Gaussian,
        CopulaFamily::Comonotone,
        CopulaFamily::Countermonotone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CopulaFamily::Independence => "independence",
            CopulaFamily::Gumbel => "gumbel",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Frank => "frank",
            CopulaFamily::Gaussian => "gaussian",
            CopulaFamily::Comonotone => "comonotone",
            CopulaFamily::Countermonotone => "countermonotone",
        }
    }

    pub fn has_parameter(self) -> bool {
        matches!(self, CopulaFamily::Gumbel | CopulaFamily::Clayton | CopulaFamily::Frank | CopulaFamily::Gaussian)
    }

    /// Attainable Kendall's tau, as printed in range errors.
    pub fn tau_range(self) -> &'static str {
        match self {
            CopulaFamily::Independence => "{0}",
            CopulaFamily::Gumbel | CopulaFamily::Clayton => "[0, 1)",
            CopulaFamily::Frank | CopulaFamily::Gaussian => "(-1, 1)",
            CopulaFamily::Comonotone => "{1}",
            CopulaFamily::Countermonotone => "{-1}",
        }
    }
}

impl std::str::FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CopulaFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown copula family '{s}'")))
    }
}

/// A validated copula. `theta` is the dependence parameter (correlation for
/// Gaussian) and is ignored by the parameter-free families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Copula {
    family: CopulaFamily,
    theta: f64,
}

/// Frank with |θ| beyond this is numerically indistinguishable from the bounds
/// for our purposes and risks overflow in `e^|θ|`.
const FRANK_THETA_MAX: f64 = 700.0;
const CLAYTON_THETA_MAX: f64 = 1e6;
const GUMBEL_THETA_MAX: f64 = 1e6;
const GAUSSIAN_CDF_TOL: f64 = 1e-13;
const H_INVERSE_TOL: f64 = 1e-12;

impl Copula {
    pub fn independence() -> Self {
        Self { family: CopulaFamily::Independence, theta: 0.0 }
    }

    pub fn comonotone() -> Self {
        Self { family: CopulaFamily::Comonotone, theta: 0.0 }
    }

    pub fn countermonotone() -> Self {
        Self { family: CopulaFamily::Countermonotone, theta: 0.0 }
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && (1.0..=GUMBEL_THETA_MAX).contains(&theta)) {
            return Err(invalid("gumbel", format!("theta must be in [1, {GUMBEL_THETA_MAX:e}], got {theta}")));
        }
        Ok(Self { family: CopulaFamily::Gumbel, theta })
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0 && theta <= CLAYTON_THETA_MAX) {
            return Err(invalid("clayton", format!("theta must be in (0, {CLAYTON_THETA_MAX:e}], got {theta}")));
        }
        Ok(Self { family: CopulaFamily::Clayton, theta })
    }

    /// Clayton from the reciprocal parameter `θ' = 1/θ`.
    pub fn clayton_reciprocal(theta_reciprocal: f64) -> Result<Self> {
        Self::clayton(1.0 / theta_reciprocal)
    }

    pub fn frank(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta != 0.0 && theta.abs() <= FRANK_THETA_MAX) {
            return Err(invalid("frank", format!("theta must be nonzero with |theta| <= {FRANK_THETA_MAX}, got {theta}")));
        }
        Ok(Self { family: CopulaFamily::Frank, theta })
    }

    /// Frank from the log-base parameter `α = e^-θ` (`α > 0`, `α ≠ 1`).
    pub fn frank_log_base(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("frank", format!("log base must be positive, got {alpha}")));
        }
        Self::frank(-alpha.ln())
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > -1.0 && rho < 1.0) {
            return Err(invalid("gaussian", format!("rho must be in (-1, 1), got {rho}")));
        }
        Ok(Self { family: CopulaFamily::Gaussian, theta: rho })
    }

    pub fn new(family: CopulaFamily, theta: Option<f64>) -> Result<Self> {
        let need = || theta.ok_or_else(|| invalid(family.name(), "missing parameter theta".into()));
        match family {
            CopulaFamily::Independence => Ok(Self::independence()),
            CopulaFamily::Comonotone => Ok(Self::comonotone()),
            CopulaFamily::Countermonotone => Ok(Self::countermonotone()),
            CopulaFamily::Gumbel => Self::gumbel(need()?),
            CopulaFamily::Clayton => Self::clayton(need()?),
            CopulaFamily::Frank => Self::frank(need()?),
            CopulaFamily::Gaussian => Self::gaussian(need()?),
        }
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    /// Dependence parameter; `None` for the parameter-free families.
    pub fn theta(&self) -> Option<f64> {
        self.family.has_parameter().then_some(self.theta)
    }

    /// `C(u, v)`. Arguments are clamped into `[0, 1]`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        if u == 1.0 {
            return v;
        }
        if v == 1.0 {
            return u;
        }
        let th = self.theta;
        let raw = match self.family {
            CopulaFamily::Independence => u * v,
            CopulaFamily::Comonotone => u.min(v),
            CopulaFamily::Countermonotone => (u + v - 1.0).max(0.0),
            CopulaFamily::Gumbel => (-gumbel_a(-u.ln(), -v.ln(), th)).exp(),
            CopulaFamily::Clayton => {
                let s = (-th * u.ln()).exp_m1() + (-th * v.ln()).exp_m1() + 1.0;
                (-s.ln() / th).exp()
            }
            CopulaFamily::Frank => frank_cdf(u, v, th),
            CopulaFamily::Gaussian => gaussian_cdf(u, v, th),
        };
        raw.clamp((u + v - 1.0).max(0.0), u.min(v))
    }

    /// `h(v | u) = ∂C(u, v)/∂u`, the conditional CDF of `V` given `U = u`.
    pub fn conditional_cdf(&self, v: f64, given_u: f64) -> f64 {
        let u = given_u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        match self.family {
            CopulaFamily::Comonotone => return if v >= u { 1.0 } else { 0.0 },
            CopulaFamily::Countermonotone => return if v >= 1.0 - u { 1.0 } else { 0.0 },
            _ => {}
        }
        if v == 0.0 {
            return 0.0;
        }
        if v == 1.0 {
            return 1.0;
        }
        let u = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        let th = self.theta;
        let h = match self.family {
            CopulaFamily::Independence => v,
            CopulaFamily::Gumbel => {
                let (lu, lv) = (-u.ln(), -v.ln());
                let a = gumbel_a(lu, lv, th);
                (lu - a).exp() * (lu / a).powf(th - 1.0)
            }
            CopulaFamily::Clayton => {
                // (1 + u^θ (v^-θ - 1))^(-(1+θ)/θ)
                let x = (th * u.ln()).exp() * (-th * v.ln()).exp_m1();
                (-(1.0 + th) / th * x.ln_1p()).exp()
            }
            CopulaFamily::Frank => {
                // 1 / (1 + e^{θ(u-v)} (e^{-θ(1-v)} - 1)/(e^{-θv} - 1))
                let num = (-th * (1.0 - v)).exp_m1().abs().ln();
                let den = (-th * v).exp_m1().abs().ln();
                let r = (th * (u - v) + num - den).exp();
                1.0 / (1.0 + r)
            }
            CopulaFamily::Gaussian => {
                let s = (1.0 - th * th).sqrt();
                normal_cdf((normal_quantile(v) - th * normal_quantile(u)) / s)
            }
            CopulaFamily::Comonotone | CopulaFamily::Countermonotone => unreachable!(),
        };
        h.clamp(0.0, 1.0)
    }

    /// Solve `h(v | u) = w` for `v`.
    pub fn inverse_conditional_cdf(&self, w: f64, given_u: f64) -> f64 {
        let u = given_u.clamp(0.0, 1.0);
        match self.family {
            CopulaFamily::Comonotone => return u,
            CopulaFamily::Countermonotone => return 1.0 - u,
            _ => {}
        }
        if w <= 0.0 {
            return 0.0;
        }
        if w >= 1.0 {
            return 1.0;
        }
        let u = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        let th = self.theta;
        let v = match self.family {
            CopulaFamily::Independence => w,
            CopulaFamily::Clayton => {
                let xm1 = (-th / (1.0 + th) * w.ln()).exp_m1();
                (-(xm1 * (-th * u.ln()).exp()).ln_1p() / th).exp()
            }
            CopulaFamily::Frank => {
                let (lw, l1w) = (w.ln(), (-w).ln_1p());
                let top = log_sum_exp(lw - th, l1w - th * u);
                let bottom = log_sum_exp(lw, l1w - th * u);
                -(top - bottom) / th
            }
            CopulaFamily::Gaussian => {
                let s = (1.0 - th * th).sqrt();
                normal_cdf(th * normal_quantile(u) + s * normal_quantile(w))
            }
            CopulaFamily::Gumbel => self.invert_h_numerically(w, u),
            CopulaFamily::Comonotone | CopulaFamily::Countermonotone => unreachable!(),
        };
        v.clamp(0.0, 1.0)
    }

    /// Bisection on `v`, accelerated by Newton steps where the copula density
    /// is available.
    fn invert_h_numerically(&self, w: f64, u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut v = w;
        for _ in 0..200 {
            let g = self.conditional_cdf(v, u) - w;
            if g == 0.0 {
                return v;
            }
            if g < 0.0 {
                lo = v;
            } else {
                hi = v;
            }
            if hi - lo <= H_INVERSE_TOL * 1e-2 {
                break;
            }
            let mut next = match self.density(u, v) {
                Some(d) if d > 0.0 => v - g / d,
                _ => f64::NAN,
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - v).abs() <= H_INVERSE_TOL * 1e-3 {
                return next;
            }
            v = next;
        }
        0.5 * (lo + hi)
    }

    /// Copula density where a closed form is implemented.
    pub fn density(&self, u: f64, v: f64) -> Option<f64> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return None;
        }
        let th = self.theta;
        match self.family {
            CopulaFamily::Independence => Some(1.0),
            CopulaFamily::Gumbel => {
                let (lu, lv) = (-u.ln(), -v.ln());
                let a = gumbel_a(lu, lv, th);
                Some((lu + lv - a).exp() * (lu * lv).powf(th - 1.0) * a.powf(1.0 - 2.0 * th) * (a + th - 1.0))
            }
            CopulaFamily::Clayton => {
                let s = (-th * u.ln()).exp() + (-th * v.ln()).exp() - 1.0;
                Some((1.0 + th) * (u * v).powf(-th - 1.0) * s.powf(-1.0 / th - 2.0))
            }
            CopulaFamily::Frank => {
                let num = -th * (-th).exp_m1() * (-th * (u + v)).exp();
                let den = (-th).exp_m1() + (-th * u).exp_m1() * (-th * v).exp_m1();
                Some(num / (den * den))
            }
            CopulaFamily::Gaussian => {
                let (x, y) = (normal_quantile(u), normal_quantile(v));
                let q = 1.0 - th * th;
                Some((-(th * th * (x * x + y * y) - 2.0 * th * x * y) / (2.0 * q)).exp() / q.sqrt())
            }
            CopulaFamily::Comonotone | CopulaFamily::Countermonotone => None,
        }
    }

    /// Kendall's tau from the closed-form map of each family.
    pub fn kendall_tau(&self) -> f64 {
        let th = self.theta;
        match self.family {
            CopulaFamily::Independence => 0.0,
            CopulaFamily::Comonotone => 1.0,
            CopulaFamily::Countermonotone => -1.0,
            CopulaFamily::Gumbel => 1.0 - 1.0 / th,
            CopulaFamily::Clayton => th / (th + 2.0),
            CopulaFamily::Frank => frank_tau(th),
            CopulaFamily::Gaussian => std::f64::consts::FRAC_2_PI * th.asin(),
        }
    }

    /// Monte Carlo estimate of `τ = 4 E[C(U, V)] - 1` over `n_samples` pairs
    /// drawn from the copula itself.
    pub fn numeric_kendall_tau(&self, n_samples: usize, seed: u64) -> f64 {
        let stream = UniformStream::new(seed);
        let total: f64 = stream
            .pairs(0, n_samples)
            .map(|(a, b)| {
                let (u, v) = self.sample_pair(a, b);
                self.cdf(u, v)
            })
            .sum();
        4.0 * total / n_samples as f64 - 1.0
    }

    /// Conditional-inversion sampler: `(u1, h⁻¹(u2 | u1))`.
    pub fn sample_pair(&self, u1: f64, u2: f64) -> (f64, f64) {
        (u1, self.inverse_conditional_cdf(u2, u1))
    }
}

impl fmt::Display for Copula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.theta() {
            Some(t) if self.family == CopulaFamily::Gaussian => write!(f, "gaussian(rho={t})"),
            Some(t) => write!(f, "{}(theta={t})", self.family.name()),
            None => f.write_str(self.family.name()),
        }
    }
}

fn invalid(family: &'static str, reason: String) -> Error {
    Error::InvalidParameter { family, reason }
}

/// `(a^θ + b^θ)^(1/θ)` without overflow.
fn gumbel_a(a: f64, b: f64, th: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == 0.0 {
        return 0.0;
    }
    if hi.is_infinite() {
        return f64::INFINITY;
    }
    hi * (1.0 + (lo / hi).powf(th)).powf(1.0 / th)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn frank_cdf(u: f64, v: f64, th: f64) -> f64 {
    // For θ > 0 the log argument cancels towards 0 near (1, 1); use radial
    // symmetry C(u, v) = u + v - 1 + C(1 - u, 1 - v) there.
    if th > 0.0 && u + v > 1.0 {
        let (a, b) = (1.0 - u, 1.0 - v);
        let r = (-th * a).exp_m1() * (-th * b).exp_m1() / (-th).exp_m1();
        return (u + v - 1.0) - r.ln_1p() / th;
    }
    let r = (-th * u).exp_m1() * (-th * v).exp_m1() / (-th).exp_m1();
    -r.ln_1p() / th
}

fn frank_tau(th: f64) -> f64 {
    if th.abs() < 1e-3 {
        return th / 9.0 - th * th * th / 900.0;
    }
    1.0 - 4.0 / th * (1.0 - debye1(th))
}

/// `C(u, v) = ∫_0^u h(v | s) ds`, integrated in `z = Φ⁻¹(s)` where the
/// integrand `Φ((Φ⁻¹(v) - ρz)/√(1-ρ²)) φ(z)` is smooth.
fn gaussian_cdf(u: f64, v: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return u * v;
    }
    let s = (1.0 - rho * rho).sqrt();
    let y = normal_quantile(v);
    let integrand = |z: f64| normal_cdf((y - rho * z) / s) * normal_pdf(z);
    let zu = normal_quantile(u);
    if zu <= 0.0 {
        let lower = (zu - 1.0).min(-9.0);
        adaptive_simpson(integrand, lower, zu, GAUSSIAN_CDF_TOL, 8).map(|r| r.value).unwrap_or(f64::NAN)
    } else {
        // C(u, v) = v - P(U > u, V <= v)
        let upper = (zu + 1.0).max(9.0);
        let tail = adaptive_simpson(integrand, zu, upper, GAUSSIAN_CDF_TOL, 8).map(|r| r.value).unwrap_or(f64::NAN);
        v - tail
    }
}

/// Invert the closed-form tau map of `family`.
///
/// `target_tau = 0` returns [`Copula::independence`] for every family.
/// Gumbel, Clayton and Gaussian use their exact inverses; Frank bisects the
/// strictly monotone map `θ ↦ τ(θ)`.
pub fn calibrate_parameter(family: CopulaFamily, target_tau: f64) -> Result<Copula> {
    let out_of_range = || Error::TauRange { family: family.name(), tau: target_tau, range: family.tau_range() };
    if !target_tau.is_finite() {
        return Err(out_of_range());
    }
    if target_tau == 0.0 {
        return Ok(Copula::independence());
    }
    match family {
        CopulaFamily::Independence => Err(out_of_range()),
        CopulaFamily::Comonotone if target_tau == 1.0 => Ok(Copula::comonotone()),
        CopulaFamily::Countermonotone if target_tau == -1.0 => Ok(Copula::countermonotone()),
        CopulaFamily::Comonotone | CopulaFamily::Countermonotone => Err(out_of_range()),
        CopulaFamily::Gumbel => {
            if !(0.0..1.0).contains(&target_tau) {
                return Err(out_of_range());
            }
            Copula::gumbel(1.0 / (1.0 - target_tau)).map_err(|_| out_of_range())
        }
        CopulaFamily::Clayton => {
            if !(0.0..1.0).contains(&target_tau) {
                return Err(out_of_range());
            }
            Copula::clayton(2.0 * target_tau / (1.0 - target_tau)).map_err(|_| out_of_range())
        }
        CopulaFamily::Gaussian => {
            if target_tau.abs() >= 1.0 {
                return Err(out_of_range());
            }
            Copula::gaussian((std::f64::consts::FRAC_PI_2 * target_tau).sin()).map_err(|_| out_of_range())
        }
        CopulaFamily::Frank => {
            if target_tau.abs() >= 1.0 {
                return Err(out_of_range());
            }
            let sign = target_tau.signum();
            let goal = target_tau.abs();
            // τ is odd in θ, so solve on the positive half-line.
            let (mut lo, mut hi) = (0.0_f64, FRANK_THETA_MAX);
            if frank_tau(hi) < goal {
                return Err(out_of_range());
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if frank_tau(mid) < goal {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Copula::frank(sign * 0.5 * (lo + hi))
        }
    }
}

/// Sample Kendall's tau-a, `(concordant - discordant) / C(n, 2)`, in
/// `O(n log n)` by counting inversions with a merge sort. Pairs tied in
/// either coordinate count as neither concordant nor discordant.
pub fn empirical_kendall_tau(pairs: &[(f64, f64)]) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::Domain { what: "number of pairs", value: n as f64, domain: "n >= 2" });
    }
    let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let total = n as u128 * (n as u128 - 1) / 2;
    let tied_x = tied_pairs(sorted.iter().map(|p| p.0));
    let tied_xy = tied_pairs_by(&sorted, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let discordant = count_inversions(&mut ys, &mut buf);
    // `ys` is now sorted.
    let tied_y = tied_pairs(ys.iter().copied());

    let neither = tied_x + tied_y - tied_xy;
    let concordant = total - neither - discordant;
    Ok((concordant as f64 - discordant as f64) / total as f64)
}

fn tied_pairs(sorted: impl Iterator<Item = f64>) -> u128 {
    let mut count = 0u128;
    let mut run = 0u128;
    let mut prev: Option<f64> = None;
    for x in sorted {
        if prev == Some(x) {
            run += 1;
        } else {
            count += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(x);
    }
    count + run * (run + 1) / 2
}

fn tied_pairs_by(sorted: &[(f64, f64)], same: impl Fn(&(f64, f64), &(f64, f64)) -> bool) -> u128 {
    let mut count = 0u128;
    let mut run = 0u128;
    for w in sorted.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            count += run * (run + 1) / 2;
            run = 0;
        }
    }
    count + run * (run + 1) / 2
}

/// Strict inversions (`i < j`, `a[i] > a[j]`); sorts `a` as a side effect.
fn count_inversions(a: &mut [f64], buf: &mut [f64]) -> u128 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = a.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[i] <= a[j] {
            buf[k] = a[i];
            i += 1;
        } else {
            buf[k] = a[j];
            inv += (mid - i) as u128;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + (mid - i)].copy_from_slice(&a[i..mid]);
    k += mid - i;
    buf[k..k + (n - j)].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&buf[..n]);
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_tau(pairs: &[(f64, f64)]) -> f64 {
        let n = pairs.len();
        let mut s = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                let dx = pairs[i].0 - pairs[j].0;
                let dy = pairs[i].1 - pairs[j].1;
                s += ((dx * dy) > 0.0) as i64 - ((dx * dy) < 0.0) as i64;
            }
        }
        s as f64 / (n * (n - 1) / 2) as f64
    }

    fn parametric() -> Vec<Copula> {
        vec![
            Copula::gumbel(2.0).unwrap(),
            Copula::gumbel(5.0).unwrap(),
            Copula::clayton(2.0).unwrap(),
            Copula::clayton(8.0).unwrap(),
            Copula::frank(5.0).unwrap(),
            Copula::frank(-8.0).unwrap(),
            Copula::frank(18.19).unwrap(),
            Copula::gaussian(0.6).unwrap(),
            Copula::gaussian(-0.9).unwrap(),
        ]
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(Copula::independence().cdf(0.5, 0.5), 0.25);
        assert!((Copula::gumbel(1.0).unwrap().cdf(0.3, 0.7) - 0.21).abs() < 1e-15);
        assert_eq!(Copula::comonotone().cdf(0.3, 0.7), 0.3);
        assert_eq!(Copula::countermonotone().cdf(0.3, 0.7), 0.0);
        // exp(-(2 ln²2)^{1/2}) = 2^{-√2}
        assert!((Copula::gumbel(2.0).unwrap().cdf(0.5, 0.5) - 2f64.powf(-2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn conditional_examples() {
        assert_eq!(Copula::independence().conditional_cdf(0.4, 0.9), 0.4);
        assert!((Copula::gaussian(0.0).unwrap().conditional_cdf(0.6, 0.2) - 0.6).abs() < 1e-15);
        let c = Copula::clayton(2.0).unwrap();
        let d = 1e-6;
        let fd = (c.cdf(0.5 + d, 0.5) - c.cdf(0.5 - d, 0.5)) / (2.0 * d);
        assert!((c.conditional_cdf(0.5, 0.5) - fd).abs() < 1e-6);
    }

    #[test]
    fn h_matches_finite_difference_everywhere() {
        let d = 1e-6;
        for c in parametric() {
            for &u in &[0.05, 0.3, 0.5, 0.77, 0.95] {
                for &v in &[0.02, 0.25, 0.5, 0.8, 0.97] {
                    let fd = (c.cdf(u + d, v) - c.cdf(u - d, v)) / (2.0 * d);
                    let h = c.conditional_cdf(v, u);
                    assert!((h - fd).abs() < 1e-5, "{c} u={u} v={v}: h={h} fd={fd}");
                }
            }
        }
    }

    #[test]
    fn density_matches_h_derivative() {
        let d = 1e-6;
        for c in parametric() {
            for &(u, v) in &[(0.3, 0.6), (0.5, 0.5), (0.8, 0.2)] {
                let fd = (c.conditional_cdf(v + d, u) - c.conditional_cdf(v - d, u)) / (2.0 * d);
                let dens = c.density(u, v).unwrap();
                assert!((dens - fd).abs() < 1e-4 * dens.max(1.0), "{c} ({u},{v}): {dens} vs {fd}");
            }
        }
    }

    #[test]
    fn inverse_conditional_round_trips() {
        let mut all = parametric();
        all.push(Copula::independence());
        for c in all {
            for &u in &[0.01, 0.2, 0.5, 0.8, 0.99] {
                for &w in &[0.001, 0.1, 0.5, 0.9, 0.999] {
                    let v = c.inverse_conditional_cdf(w, u);
                    assert!((c.conditional_cdf(v, u) - w).abs() < 1e-8, "{c} u={u} w={w} v={v}");
                }
            }
        }
    }

    #[test]
    fn sample_pair_examples() {
        assert_eq!(Copula::independence().sample_pair(0.3, 0.8), (0.3, 0.8));
        assert_eq!(Copula::comonotone().sample_pair(0.3, 0.123), (0.3, 0.3));
        let c = Copula::clayton(2.0).unwrap();
        let (u, v) = c.sample_pair(0.5, 0.5);
        assert_eq!(u, 0.5);
        assert!((c.conditional_cdf(v, 0.5) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(Copula::independence().kendall_tau(), 0.0);
        assert_eq!(Copula::gumbel(2.0).unwrap().kendall_tau(), 0.5);
        assert!((Copula::clayton(8.0).unwrap().kendall_tau() - 0.8).abs() < 1e-15);
        let f = Copula::frank_log_base(100.0).unwrap();
        assert!((f.theta().unwrap() + 100f64.ln()).abs() < 1e-15);
        assert!((f.kendall_tau() + 0.43).abs() < 0.01, "{}", f.kendall_tau());
        assert!((Copula::gaussian(0.5).unwrap().kendall_tau() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn frank_tau_is_continuous_through_the_series_switch() {
        let a = frank_tau(0.999e-3);
        let b = frank_tau(1.001e-3);
        assert!((a - b).abs() < 1e-6 && a > 0.0);
        assert!((frank_tau(-2.0) + frank_tau(2.0)).abs() < 1e-14);
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibrate_parameter(CopulaFamily::Gumbel, 0.5).unwrap().theta(), Some(2.0));
        for f in CopulaFamily::ALL {
            assert_eq!(calibrate_parameter(f, 0.0).unwrap(), Copula::independence());
        }
        let f = calibrate_parameter(CopulaFamily::Frank, -0.43).unwrap();
        assert!((f.theta().unwrap() + 4.605).abs() < 0.05, "{f}");
    }

    #[test]
    fn calibration_round_trip_over_ranges() {
        for family in [CopulaFamily::Gumbel, CopulaFamily::Clayton, CopulaFamily::Frank, CopulaFamily::Gaussian] {
            let neg = matches!(family, CopulaFamily::Frank | CopulaFamily::Gaussian);
            for i in 1..99 {
                let tau = i as f64 / 100.0;
                for t in if neg { vec![tau, -tau] } else { vec![tau] } {
                    let c = calibrate_parameter(family, t).unwrap();
                    assert!((c.kendall_tau() - t).abs() <= 1e-8, "{family:?} tau={t}");
                }
            }
        }
    }

    #[test]
    fn calibration_range_errors() {
        let e = calibrate_parameter(CopulaFamily::Gumbel, -0.2).unwrap_err();
        assert!(e.to_string().contains("[0, 1)"), "{e}");
        assert!(calibrate_parameter(CopulaFamily::Clayton, 1.0).is_err());
        assert!(calibrate_parameter(CopulaFamily::Frank, 1.0).is_err());
        assert!(calibrate_parameter(CopulaFamily::Independence, 0.3).is_err());
        assert!(calibrate_parameter(CopulaFamily::Gaussian, f64::NAN).is_err());
    }

    #[test]
    fn construction_rejects_invalid_theta() {
        assert!(Copula::gumbel(0.9).is_err());
        assert!(Copula::clayton(0.0).is_err());
        assert!(Copula::frank(0.0).is_err());
        assert!(Copula::gaussian(1.0).is_err());
        assert!(Copula::new(CopulaFamily::Frank, None).is_err());
        assert!(Copula::frank_log_base(1.0).is_err());
    }

    #[test]
    fn reciprocal_clayton_maps_to_standard() {
        let c = Copula::clayton_reciprocal(0.5).unwrap();
        assert_eq!(c.theta(), Some(2.0));
        // (1 - 2 + u^{-1/θ'} + v^{-1/θ'})^{-θ'} with θ' = 0.5
        let (u, v) = (0.3_f64, 0.6_f64);
        let reciprocal_form = (u.powf(-2.0) + v.powf(-2.0) - 1.0).powf(-0.5);
        assert!((c.cdf(u, v) - reciprocal_form).abs() < 1e-15);
    }

    #[test]
    fn frank_log_base_form_matches() {
        let alpha: f64 = 100.0;
        let c = Copula::frank_log_base(alpha).unwrap();
        let (u, v) = (0.35_f64, 0.8_f64);
        let log_base = ((alpha.powf(u) - 1.0) * (alpha.powf(v) - 1.0) / (alpha - 1.0) + 1.0).ln() / alpha.ln();
        assert!((c.cdf(u, v) - log_base).abs() < 1e-14);
    }

    #[test]
    fn empirical_tau_examples() {
        assert_eq!(empirical_kendall_tau(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).unwrap(), 1.0);
        assert_eq!(empirical_kendall_tau(&[(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]).unwrap(), -1.0);
        assert!(empirical_kendall_tau(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn numeric_tau_independence_and_gumbel() {
        let t = Copula::independence().numeric_kendall_tau(100_000, 7);
        assert!(t.abs() < 0.01, "{t}");
        let t = Copula::gumbel(2.0).unwrap().numeric_kendall_tau(100_000, 7);
        assert!((t - 0.5).abs() < 0.01, "{t}");
        let t = Copula::clayton(8.0).unwrap().numeric_kendall_tau(100_000, 7);
        assert!((t - 0.8).abs() < 0.01, "{t}");
    }

    proptest! {
        #[test]
        fn knight_matches_brute_force(pairs in proptest::collection::vec((0i32..6, 0i32..6), 2..60)) {
            let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(a, b)| (a as f64, b as f64)).collect();
            let fast = empirical_kendall_tau(&pairs).unwrap();
            let slow = brute_force_tau(&pairs);
            prop_assert!((fast - slow).abs() < 1e-12, "{} vs {}", fast, slow);
        }

        #[test]
        fn frechet_bounds_and_boundaries(theta in 1.0f64..30.0, u in 0.0f64..=1.0, v in 0.0f64..=1.0, pick in 0usize..4) {
            let c = match pick {
                0 => Copula::gumbel(theta).unwrap(),
                1 => Copula::clayton(theta - 0.99).unwrap(),
                2 => Copula::frank(if theta > 15.0 { 15.0 - theta } else { theta }).unwrap(),
                _ => Copula::gaussian((theta - 15.5) / 15.0).unwrap(),
            };
            let x = c.cdf(u, v);
            prop_assert!(x >= (u + v - 1.0).max(0.0) - 1e-12 && x <= u.min(v) + 1e-12);
            prop_assert!((c.cdf(u, 1.0) - u).abs() <= 1e-12);
            prop_assert!((c.cdf(1.0, v) - v).abs() <= 1e-12);
            prop_assert_eq!(c.cdf(0.0, v), 0.0);
            prop_assert_eq!(c.cdf(u, 0.0), 0.0);
        }
    }
}
