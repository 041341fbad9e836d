//! Joint demand `(D1, D2)` built from two marginals and a copula, and the
//! distribution of total demand `D1 + D2`.
//!
//! The sum CDF is computed by conditioning on `U = F1(D1)`:
//!
//! ```text
//! P(D1 + D2 <= x) = ∫_0^1 h(F2(x - F1⁻¹(u)) | u) du
//! ```
//!
//! where `h` is the copula's conditional CDF. The integrand is identically 1
//! for `u < F1(x - hi2)` and identically 0 for `u > F1(x - lo2)`; these two
//! points are where it has kinks, so only the interval between them is
//! integrated numerically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{Copula, CopulaFamily};
use crate::error::{Error, Result};
use crate::marginals::MarginalDistribution;
use crate::quadrature::adaptive_simpson;
use crate::rng::UniformStream;
use crate::roots::brent;

/// Absolute tolerance of the sum-CDF quadrature.
pub const SUM_CDF_TOL: f64 = 1e-9;
/// Default probability-space tolerance for [`JointDemandModel::sum_quantile`].
pub const SUM_QUANTILE_TOL: f64 = 1e-9;
const PANELS: usize = 64;
const U_CLAMP: f64 = 1e-12;
/// Two-sided 99% standard normal quantile.
const Z_99: f64 = 2.575_829_303_548_900_4;
const MC_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantileMethod {
    Quadrature,
    #[serde(alias = "mc", alias = "monte_carlo")]
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumQuantileEstimate {
    pub point: f64,
    /// Half-width of the 99% confidence interval; zero for quadrature.
    pub ci_halfwidth: f64,
    pub method: QuantileMethod,
    /// Sample count for Monte Carlo estimates.
    pub n_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDemandModel {
    pub marginal1: MarginalDistribution,
    pub marginal2: MarginalDistribution,
    pub copula: Copula,
}

impl JointDemandModel {
    pub fn new(marginal1: MarginalDistribution, marginal2: MarginalDistribution, copula: Copula) -> Self {
        Self { marginal1, marginal2, copula }
    }

    /// `F(x1, x2) = C(F1(x1), F2(x2))`.
    pub fn joint_cdf(&self, x1: f64, x2: f64) -> f64 {
        self.copula.cdf(self.marginal1.cdf(x1), self.marginal2.cdf(x2))
    }

    /// Support of `D1 + D2`.
    pub fn sum_support(&self) -> (f64, f64) {
        let (a1, b1) = self.marginal1.support();
        let (a2, b2) = self.marginal2.support();
        (a1 + a2, b1 + b2)
    }

    /// `P(D1 + D2 <= x)`.
    pub fn sum_cdf(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.sum_support();
        if x < lo {
            return Ok(0.0);
        }
        if x >= hi {
            return Ok(1.0);
        }
        let p = match self.copula.family() {
            CopulaFamily::Comonotone => self.comonotone_sum_cdf(x),
            CopulaFamily::Countermonotone => self.countermonotone_sum_cdf(x),
            _ => self.regular_sum_cdf(x)?,
        };
        Ok(p.clamp(0.0, 1.0))
    }

    fn regular_sum_cdf(&self, x: f64) -> Result<f64> {
        let (lo2, hi2) = self.marginal2.support();
        let ones_until = if hi2.is_finite() { self.marginal1.cdf(x - hi2) } else { 0.0 };
        let zeros_from = if lo2.is_finite() { self.marginal1.cdf(x - lo2) } else { 1.0 };
        if zeros_from <= ones_until {
            return Ok(ones_until);
        }
        let integrand = |u: f64| {
            let u = u.clamp(U_CLAMP, 1.0 - U_CLAMP);
            let d1 = self.marginal1.quantile_interior(u);
            let v = self.marginal2.cdf(x - d1);
            self.copula.conditional_cdf(v, u)
        };
        let r = adaptive_simpson(integrand, ones_until, zeros_from, SUM_CDF_TOL, PANELS)?;
        Ok(ones_until + r.value)
    }

    /// Under `V = U` the integrand is `1[F1⁻¹(u) + F2⁻¹(u) <= x]`, a
    /// decreasing indicator, so the integral is the crossing point itself.
    fn comonotone_sum_cdf(&self, x: f64) -> f64 {
        let total = |u: f64| self.marginal1.quantile_interior(u) + self.marginal2.quantile_interior(u);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if total(mid) <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Under `V = 1 - U` the integrand is `1[F2(x - F1⁻¹(u)) >= 1 - u]`; the
    /// set where it holds is located on a grid and its edges bisected.
    fn countermonotone_sum_cdf(&self, x: f64) -> f64 {
        let inside = |u: f64| {
            let u = u.clamp(U_CLAMP, 1.0 - U_CLAMP);
            self.marginal2.cdf(x - self.marginal1.quantile_interior(u)) >= 1.0 - u
        };
        const GRID: usize = 4096;
        let mut measure = 0.0;
        let mut prev_u = 0.0;
        let mut prev_in = inside(0.0);
        let mut run_start = if prev_in { Some(0.0) } else { None };
        for i in 1..=GRID {
            let u = i as f64 / GRID as f64;
            let now_in = inside(u);
            if now_in != prev_in {
                let edge = refine_edge(&inside, prev_u, u, prev_in);
                if now_in {
                    run_start = Some(edge);
                } else if let Some(s) = run_start.take() {
                    measure += edge - s;
                }
            }
            prev_u = u;
            prev_in = now_in;
        }
        if let Some(s) = run_start {
            measure += 1.0 - s;
        }
        measure
    }

    /// Pooled inventory `F_{1+2}⁻¹(t)` by root finding on [`Self::sum_cdf`],
    /// stopping once `|F_{1+2}(x) - t| <= tol`.
    pub fn sum_quantile(&self, t: f64, tol: f64) -> Result<SumQuantileEstimate> {
        check_open_unit(t)?;
        let (lo, hi) = self.bracket(t)?;
        let scale = (hi - lo).abs().max(1e-300);
        let point = brent(|x| Ok(self.sum_cdf(x)? - t), lo, hi, 1e-13 * scale, tol, 200)?;
        Ok(SumQuantileEstimate { point, ci_halfwidth: 0.0, method: QuantileMethod::Quadrature, n_samples: None })
    }

    fn bracket(&self, t: f64) -> Result<(f64, f64)> {
        let (slo, shi) = self.sum_support();
        if slo.is_finite() && shi.is_finite() {
            return Ok((slo, shi));
        }
        let m1 = self.marginal1;
        let m2 = self.marginal2;
        let centre = m1.quantile_interior(t) + m2.quantile_interior(t);
        if !centre.is_finite() {
            return Err(Error::Overflow { what: "sum quantile", p: t });
        }
        let spread = (m1.quantile_interior(0.75) - m1.quantile_interior(0.25)).abs()
            + (m2.quantile_interior(0.75) - m2.quantile_interior(0.25)).abs();
        let step0 = spread.max(1e-12 * centre.abs()).max(f64::MIN_POSITIVE);

        let mut lo = if slo.is_finite() { slo } else { centre - step0 };
        let mut step = step0;
        let mut f_lo = self.sum_cdf(lo)?;
        let mut tries = 0;
        while f_lo > t && !slo.is_finite() {
            step *= 2.0;
            lo = centre - step;
            f_lo = self.sum_cdf(lo)?;
            tries += 1;
            if tries > 200 || !lo.is_finite() {
                return Err(Error::Bracket { lo, hi: centre, f_lo, f_hi: f64::NAN });
            }
        }
        let mut hi = if shi.is_finite() { shi } else { centre + step0 };
        let mut step = step0;
        let mut f_hi = self.sum_cdf(hi)?;
        let mut tries = 0;
        while f_hi < t && !shi.is_finite() {
            step *= 2.0;
            hi = centre + step;
            f_hi = self.sum_cdf(hi)?;
            tries += 1;
            if tries > 200 || !hi.is_finite() {
                return Err(Error::Bracket { lo, hi, f_lo, f_hi });
            }
        }
        Ok((lo, hi))
    }

    /// `n` demand pairs `(F1⁻¹(U_i), F2⁻¹(V_i))`, pair `i` driven by draw `i`
    /// of the uniform stream seeded with `seed`.
    pub fn sample_demands(&self, n: usize, seed: u64) -> Vec<(f64, f64)> {
        let stream = UniformStream::new(seed);
        let chunks: Vec<Vec<(f64, f64)>> = (0..n.div_ceil(MC_CHUNK))
            .into_par_iter()
            .map(|c| {
                let start = c * MC_CHUNK;
                let len = MC_CHUNK.min(n - start);
                stream.pairs(start as u64, len).map(|(a, b)| self.demand_from_uniforms(a, b)).collect()
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }

    fn demand_from_uniforms(&self, a: f64, b: f64) -> (f64, f64) {
        let (u, v) = self.copula.sample_pair(a, b);
        let keep = |p: f64| p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        (self.marginal1.quantile_interior(keep(u)), self.marginal2.quantile_interior(keep(v)))
    }

    /// Sorted Monte Carlo sample of `D1 + D2`.
    pub fn sample_sums(&self, n: usize, seed: u64) -> SortedSample {
        let mut sums: Vec<f64> = self.sample_demands(n, seed).into_iter().map(|(a, b)| a + b).collect();
        sums.sort_by(f64::total_cmp);
        SortedSample { values: sums }
    }

    /// Empirical quantile of `n` sampled sums with a 99% order-statistic
    /// confidence half-width.
    pub fn sum_quantile_mc(&self, t: f64, n: usize, seed: u64) -> Result<SumQuantileEstimate> {
        check_open_unit(t)?;
        if n == 0 {
            return Err(Error::Domain { what: "sample count", value: 0.0, domain: "n >= 1" });
        }
        Ok(self.sample_sums(n, seed).quantile(t))
    }
}

/// A sorted sample supporting empirical quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `inf { x : F̂(x) >= t }` with the distribution-free binomial
    /// confidence interval at 99%.
    pub fn quantile(&self, t: f64) -> SumQuantileEstimate {
        let n = self.values.len();
        let nf = n as f64;
        let at = |k: usize| self.values[k.clamp(1, n) - 1];
        let k = (nf * t).ceil() as usize;
        let point = at(k);
        let spread = Z_99 * (nf * t * (1.0 - t)).sqrt();
        let lo = at((nf * t - spread).floor().max(1.0) as usize);
        let hi = at((nf * t + spread).ceil() as usize);
        SumQuantileEstimate {
            point,
            ci_halfwidth: (point - lo).max(hi - point),
            method: QuantileMethod::MonteCarlo,
            n_samples: Some(n),
        }
    }
}

fn check_open_unit(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { what: "margin ratio", value: t, domain: "(0, 1)" })
    }
}

fn refine_edge(inside: &impl Fn(f64) -> bool, mut a: f64, mut b: f64, a_in: bool) -> f64 {
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if inside(m) == a_in {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform01() -> MarginalDistribution {
        MarginalDistribution::uniform(0.0, 1.0).unwrap()
    }

    fn exp1() -> MarginalDistribution {
        MarginalDistribution::exponential(1.0).unwrap()
    }

    fn beta(a: f64, b: f64) -> MarginalDistribution {
        MarginalDistribution::beta(a, b).unwrap()
    }

    /// Root of the Gamma(2, 1) CDF `1 - e^-x (1 + x)` by Newton, independent
    /// of the quadrature path.
    fn gamma2_quantile(t: f64) -> f64 {
        let mut x = 1.0;
        for _ in 0..100 {
            let f = 1.0 - (-x as f64).exp() * (1.0 + x) - t;
            let d = x * (-x as f64).exp();
            x -= f / d;
        }
        x
    }

    #[test]
    fn joint_cdf_examples() {
        let m = JointDemandModel::new(uniform01(), uniform01(), Copula::independence());
        assert_eq!(m.joint_cdf(0.5, 0.5), 0.25);
        let m = JointDemandModel::new(uniform01(), uniform01(), Copula::comonotone());
        assert_eq!(m.joint_cdf(0.3, 0.7), 0.3);
        let m = JointDemandModel::new(beta(5.0, 5.0), beta(5.0, 5.0), Copula::gumbel(2.0).unwrap());
        assert!((m.joint_cdf(0.5, 0.5) - 0.3752).abs() < 1e-4);
    }

    #[test]
    fn joint_cdf_marginal_consistency() {
        let m = JointDemandModel::new(beta(2.0, 8.0), beta(8.0, 2.0), Copula::clayton(3.0).unwrap());
        for x in [0.1, 0.3, 0.6] {
            assert!((m.joint_cdf(x, 1.0) - m.marginal1.cdf(x)).abs() < 1e-10);
            assert!((m.joint_cdf(1.0, x) - m.marginal2.cdf(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn sum_cdf_examples() {
        let b = beta(5.0, 5.0);
        let m = JointDemandModel::new(b, b, Copula::comonotone());
        let x = 2.0 * b.quantile(0.3).unwrap();
        assert!((m.sum_cdf(x).unwrap() - 0.3).abs() < 1e-12);

        let m = JointDemandModel::new(exp1(), exp1(), Copula::independence());
        let exact = 1.0 - (-0.8244f64).exp() * 1.8244;
        assert!((m.sum_cdf(0.8244).unwrap() - exact).abs() < 1e-9);
        assert!((exact - 0.2).abs() < 1e-4);

        let m = JointDemandModel::new(uniform01(), uniform01(), Copula::independence());
        assert!((m.sum_cdf(1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((m.sum_cdf(0.4).unwrap() - 0.08).abs() < 1e-12);
    }

    #[test]
    fn countermonotone_uniform_sum_is_degenerate_at_one() {
        let m = JointDemandModel::new(uniform01(), uniform01(), Copula::countermonotone());
        assert!(m.sum_cdf(0.999).unwrap() < 1e-9);
        assert!(m.sum_cdf(1.0).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn sum_quantile_examples() {
        let b = beta(5.0, 5.0);
        let m = JointDemandModel::new(b, b, Copula::comonotone());
        assert!((m.sum_quantile(0.5, SUM_QUANTILE_TOL).unwrap().point - 1.0).abs() < 1e-9);

        let m = JointDemandModel::new(exp1(), exp1(), Copula::independence());
        let q = m.sum_quantile(0.2, SUM_QUANTILE_TOL).unwrap();
        assert_eq!(q.method, QuantileMethod::Quadrature);
        assert_eq!(q.ci_halfwidth, 0.0);
        assert!((q.point - gamma2_quantile(0.2)).abs() < 1e-8, "{}", q.point);

        let (mu1, s1, mu2, s2, rho) = (1.0, 2.0, -3.0, 0.5, 0.4);
        let m = JointDemandModel::new(
            MarginalDistribution::normal(mu1, s1).unwrap(),
            MarginalDistribution::normal(mu2, s2).unwrap(),
            Copula::gaussian(rho).unwrap(),
        );
        for t in [0.1, 0.5, 0.9] {
            let exact = mu1 + mu2 + crate::special::normal_quantile(t) * (s1 * s1 + s2 * s2 + 2.0 * rho * s1 * s2).sqrt();
            let got = m.sum_quantile(t, SUM_QUANTILE_TOL).unwrap().point;
            assert!((got - exact).abs() < 1e-6, "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn sum_quantile_rejects_bad_t() {
        let m = JointDemandModel::new(exp1(), exp1(), Copula::independence());
        assert!(matches!(m.sum_quantile(0.0, 1e-9), Err(Error::Domain { .. })));
        assert!(m.sum_quantile_mc(1.0, 1000, 1).is_err());
    }

    #[test]
    fn sample_demands_first_pair_is_raw_stream() {
        let m = JointDemandModel::new(uniform01(), uniform01(), Copula::independence());
        let s = m.sample_demands(1, 99);
        assert_eq!(s, vec![UniformStream::new(99).pair(0)]);
    }

    #[test]
    fn sample_means_of_beta_2_8() {
        let b = beta(2.0, 8.0);
        let m = JointDemandModel::new(b, b, Copula::gumbel(3.0).unwrap());
        let s = m.sample_demands(1_000_000, 5);
        let (a, c) = s.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        assert!((a / 1e6 - 0.2).abs() < 1e-3 && (c / 1e6 - 0.2).abs() < 1e-3);
    }

    #[test]
    fn sampled_tau_matches_copula() {
        let m = JointDemandModel::new(beta(2.0, 8.0), exp1(), Copula::gumbel(2.0).unwrap());
        let s = m.sample_demands(100_000, 11);
        let tau = crate::copulas::empirical_kendall_tau(&s).unwrap();
        assert!((tau - 0.5).abs() < 0.02, "{tau}");
    }

    #[test]
    fn mc_quantile_examples() {
        let b = beta(5.0, 5.0);
        let m = JointDemandModel::new(b, b, Copula::comonotone());
        let q = m.sum_quantile_mc(0.5, 100_000, 3).unwrap();
        assert!((q.point - 1.0).abs() <= q.ci_halfwidth.max(1e-12));

        let m = JointDemandModel::new(exp1(), exp1(), Copula::independence());
        let q = m.sum_quantile_mc(0.2, 1_000_000, 3).unwrap();
        assert!((q.point - gamma2_quantile(0.2)).abs() <= q.ci_halfwidth, "{q:?}");
        assert_eq!(q.n_samples, Some(1_000_000));
    }

    #[test]
    fn sum_quantile_within_support_for_bounded_marginals() {
        let m = JointDemandModel::new(beta(2.0, 8.0), beta(8.0, 2.0), Copula::frank(-10.0).unwrap());
        for t in [0.01, 0.5, 0.99] {
            let q = m.sum_quantile(t, SUM_QUANTILE_TOL).unwrap().point;
            assert!((0.0..=2.0).contains(&q));
        }
    }

    #[test]
    fn empirical_quantile_definition() {
        let s = SortedSample::from_unsorted(vec![4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.quantile(0.5).point, 2.0);
        assert_eq!(s.quantile(0.51).point, 3.0);
        assert_eq!(s.quantile(0.01).point, 1.0);
    }
}
