//! Newsvendor quantities, pooling-effect curves and threshold detection.
//!
//! With margin ratio `t = (p - c)/p`, the dedicated system stocks
//! `F1⁻¹(t) + F2⁻¹(t)` and the pooled system stocks `F_{1+2}⁻¹(t)`. The
//! pooling effect is `P(t) = F_{1+2}⁻¹(t) - F1⁻¹(t) - F2⁻¹(t)`; positive means
//! pooling needs more stock.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joint_demand::{JointDemandModel, QuantileMethod, SUM_QUANTILE_TOL};
use crate::marginals::MarginalDistribution;
use crate::quadrature::adaptive_simpson;
use crate::special::normal_quantile;

pub const DEFAULT_SCAN_POINTS: usize = 199;
pub const DEFAULT_ZERO_TOL: f64 = 1e-5;
/// Width in `t` to which sign-change brackets are refined.
pub const ROOT_TOL: f64 = 1e-6;

/// Price/cost pair and the derived margin ratio. A bare margin ratio is also
/// accepted, in which case price and cost are unset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitParams {
    price: Option<f64>,
    cost: Option<f64>,
    margin_ratio: f64,
}

impl ProfitParams {
    pub fn new(price: f64, cost: f64) -> Result<Self> {
        if !(price.is_finite() && cost.is_finite() && cost > 0.0 && cost < price) {
            return Err(Error::Domain { what: "cost", value: cost, domain: "0 < cost < price" });
        }
        Ok(Self { price: Some(price), cost: Some(cost), margin_ratio: (price - cost) / price })
    }

    pub fn from_margin_ratio(t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain { what: "margin ratio", value: t, domain: "(0, 1)" });
        }
        Ok(Self { price: None, cost: None, margin_ratio: t })
    }

    pub fn margin_ratio(&self) -> f64 {
        self.margin_ratio
    }

    pub fn price(&self) -> Option<f64> {
        self.price
    }

    pub fn cost(&self) -> Option<f64> {
        self.cost
    }

    fn price_cost(&self) -> Result<(f64, f64)> {
        match (self.price, self.cost) {
            (Some(p), Some(c)) => Ok((p, c)),
            _ => Err(Error::Config("expected profit needs price and cost, not just a margin ratio".into())),
        }
    }
}

/// Optimal single-product stock `F⁻¹(t)`.
pub fn newsvendor_quantile(dist: &MarginalDistribution, pp: &ProfitParams) -> Result<f64> {
    dist.quantile(pp.margin_ratio)
}

/// `E[min(D, Q)] = Q - ∫_{lo}^{Q} F(x) dx`.
pub fn expected_sales(dist: &MarginalDistribution, q: f64) -> Result<f64> {
    let (lo, _) = dist.support();
    let lo = if lo.is_finite() { lo } else { dist.quantile(1e-17)? };
    if q <= lo {
        return Ok(q);
    }
    let area = adaptive_simpson(|x| dist.cdf(x), lo, q, 1e-12, 32)?;
    Ok(q - area.value)
}

/// `p E[min(D, Q)] - c Q`.
pub fn expected_profit(dist: &MarginalDistribution, q: f64, pp: &ProfitParams) -> Result<f64> {
    if q.is_nan() || q < 0.0 {
        return Err(Error::Domain { what: "order quantity", value: q, domain: "Q >= 0" });
    }
    let (p, c) = pp.price_cost()?;
    if q == 0.0 {
        return Ok(0.0);
    }
    Ok(p * expected_sales(dist, q)? - c * q)
}

/// `F1⁻¹(t) + F2⁻¹(t)`; does not depend on the copula.
pub fn dedicated_total(m: &JointDemandModel, t: f64) -> Result<f64> {
    Ok(m.marginal1.quantile(t)? + m.marginal2.quantile(t)?)
}

pub fn pooling_effect(m: &JointDemandModel, t: f64) -> Result<f64> {
    let pooled = m.sum_quantile(t, SUM_QUANTILE_TOL)?.point;
    Ok(pooled - dedicated_total(m, t)?)
}

/// Pooled stock for a bivariate normal demand:
/// `μ1 + μ2 + Φ⁻¹(t) √(σ1² + σ2² + 2ρσ1σ2)`.
pub fn normal_pooled_closed_form(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64, rho: f64, t: f64) -> f64 {
    let sd = (sigma1 * sigma1 + sigma2 * sigma2 + 2.0 * rho * sigma1 * sigma2).max(0.0).sqrt();
    mu1 + mu2 + normal_quantile(t) * sd
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveMethod {
    Quadrature,
    /// One sample of `n` sums, reused for every grid point.
    MonteCarlo { n_samples: usize, seed: u64 },
}

impl CurveMethod {
    pub fn kind(&self) -> QuantileMethod {
        match self {
            CurveMethod::Quadrature => QuantileMethod::Quadrature,
            CurveMethod::MonteCarlo { .. } => QuantileMethod::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingPoint {
    pub index: usize,
    pub t: f64,
    pub reason: String,
}

/// Dedicated and pooled stock over a grid of margin ratios. Points that
/// failed carry `NaN` in the numeric columns and are listed in `missing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingCurve {
    pub t_grid: Vec<f64>,
    pub dedicated: Vec<f64>,
    pub pooled: Vec<f64>,
    pub effect: Vec<f64>,
    pub effect_pct: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub missing: Vec<MissingPoint>,
}

pub const CURVE_CSV_HEADER: &str = "t,dedicated,pooled,effect,effect_pct,ci_halfwidth";

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Config("margin-ratio grid is empty".into()));
    }
    if let Some(&t) = t_grid.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Domain { what: "margin ratio", value: t, domain: "(0, 1)" });
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("margin-ratio grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn pooling_curve(m: &JointDemandModel, t_grid: &[f64], method: CurveMethod) -> Result<PoolingCurve> {
    check_grid(t_grid)?;
    let sample = match method {
        CurveMethod::MonteCarlo { n_samples, seed } => {
            if n_samples == 0 {
                return Err(Error::Domain { what: "sample count", value: 0.0, domain: "n >= 1" });
            }
            Some(m.sample_sums(n_samples, seed))
        }
        CurveMethod::Quadrature => None,
    };
    let points: Vec<Result<(f64, f64, f64)>> = t_grid
        .par_iter()
        .map(|&t| {
            let dedicated = dedicated_total(m, t)?;
            let est = match &sample {
                Some(s) => s.quantile(t),
                None => m.sum_quantile(t, SUM_QUANTILE_TOL)?,
            };
            Ok((dedicated, est.point, est.ci_halfwidth))
        })
        .collect();

    let n = t_grid.len();
    let mut curve = PoolingCurve {
        t_grid: t_grid.to_vec(),
        dedicated: Vec::with_capacity(n),
        pooled: Vec::with_capacity(n),
        effect: Vec::with_capacity(n),
        effect_pct: Vec::with_capacity(n),
        ci_halfwidth: Vec::with_capacity(n),
        missing: Vec::new(),
    };
    for (i, r) in points.into_iter().enumerate() {
        let (d, p, ci) = match r {
            Ok(v) => v,
            Err(e) => {
                curve.missing.push(MissingPoint { index: i, t: t_grid[i], reason: e.to_string() });
                (f64::NAN, f64::NAN, f64::NAN)
            }
        };
        let effect = p - d;
        curve.dedicated.push(d);
        curve.pooled.push(p);
        curve.effect.push(effect);
        curve.effect_pct.push(percentage(effect, d));
        curve.ci_halfwidth.push(ci);
    }
    Ok(curve)
}

/// `100 · effect / dedicated`, undefined unless `dedicated > 0`.
pub fn percentage(effect: f64, dedicated: f64) -> f64 {
    if dedicated > 0.0 {
        100.0 * effect / dedicated
    } else {
        f64::NAN
    }
}

fn csv_field(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        // Shortest representation that parses back to the same bits.
        format!("{x:?}")
    }
}

impl PoolingCurve {
    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    /// CSV with [`CURVE_CSV_HEADER`]; missing values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(CURVE_CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let row = [self.t_grid[i], self.dedicated[i], self.pooled[i], self.effect[i], self.effect_pct[i], self.ci_halfwidth[i]];
            let fields: Vec<String> = row.iter().map(|&x| csv_field(x)).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CURVE_CSV_HEADER => {}
            other => return Err(Error::Config(format!("unexpected curve CSV header {other:?}"))),
        }
        let mut c = PoolingCurve {
            t_grid: vec![],
            dedicated: vec![],
            pooled: vec![],
            effect: vec![],
            effect_pct: vec![],
            ci_halfwidth: vec![],
            missing: vec![],
        };
        for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| if f.is_empty() { Ok(f64::NAN) } else { f.trim().parse::<f64>() })
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("curve CSV row {}: {e}", row + 1)))?;
            if vals.len() != 6 {
                return Err(Error::Config(format!("curve CSV row {} has {} fields", row + 1, vals.len())));
            }
            c.t_grid.push(vals[0]);
            c.dedicated.push(vals[1]);
            c.pooled.push(vals[2]);
            c.effect.push(vals[3]);
            c.effect_pct.push(vals[4]);
            c.ci_halfwidth.push(vals[5]);
        }
        Ok(c)
    }

    /// Largest `|effect_pct|` over the points that have one.
    pub fn max_abs_effect_pct(&self) -> f64 {
        self.effect_pct.iter().filter(|x| x.is_finite()).fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
}

impl Sign {
    fn classify(x: f64, zero_tol: f64) -> Sign {
        if x > zero_tol {
            Sign::Positive
        } else if x < -zero_tol {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
            Sign::Zero => '0',
        }
    }
}

/// Sign changes of `P(t)` over a uniform interior scan of `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Refined roots, increasing.
    pub roots: Vec<f64>,
    /// Scan nodes bracketing each root.
    pub brackets: Vec<(f64, f64)>,
    /// One of `+ - 0` per scan node.
    pub sign_pattern: String,
    /// Runs of more than one consecutive zero node that are not crossed by a
    /// sign change, as `(first node, last node)`.
    pub zero_intervals: Vec<(f64, f64)>,
    pub unique: bool,
    pub scan_t: Vec<f64>,
    pub scan_effect: Vec<f64>,
}

impl ThresholdReport {
    /// Sign pattern with repeats collapsed, e.g. `"+-+-"`.
    pub fn segments(&self) -> String {
        let mut out = String::new();
        for c in self.sign_pattern.chars().filter(|&c| c != '0') {
            if !out.ends_with(c) {
                out.push(c);
            }
        }
        out
    }

    /// `[start, end]` of each maximal stretch where `P > 0`, bounded by roots
    /// or by the ends of the scan.
    pub fn positive_regions(&self) -> Vec<(f64, f64)> {
        self.regions_with(Sign::Positive)
    }

    pub fn negative_regions(&self) -> Vec<(f64, f64)> {
        self.regions_with(Sign::Negative)
    }

    fn regions_with(&self, want: Sign) -> Vec<(f64, f64)> {
        let (Some(&first), Some(&last)) = (self.scan_t.first(), self.scan_t.last()) else {
            return vec![];
        };
        let mut edges = vec![first];
        edges.extend(&self.roots);
        edges.push(last);
        edges
            .windows(2)
            .filter(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                // classify the segment by the scan node nearest its midpoint
                let k = self
                    .scan_t
                    .iter()
                    .enumerate()
                    .filter(|(_, &t)| t >= w[0] && t <= w[1])
                    .min_by(|a, b| (a.1 - mid).abs().total_cmp(&(b.1 - mid).abs()))
                    .map(|(k, _)| k);
                k.map(|k| self.sign_pattern.as_bytes()[k] as char == want.symbol()).unwrap_or(false)
            })
            .map(|w| (w[0], w[1]))
            .collect()
    }

    /// Compact JSON: roots, uniqueness, signs and brackets.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "roots": self.roots,
            "unique": self.unique,
            "sign_pattern": self.sign_pattern,
            "segments": self.segments(),
            "brackets": self.brackets,
            "zero_intervals": self.zero_intervals,
        })
    }
}

pub fn find_thresholds(m: &JointDemandModel, scan_points: usize, zero_tol: f64) -> Result<ThresholdReport> {
    if scan_points < 9 {
        return Err(Error::Domain { what: "scan points", value: scan_points as f64, domain: ">= 9" });
    }
    if !(zero_tol >= 0.0) {
        return Err(Error::Domain { what: "zero tolerance", value: zero_tol, domain: ">= 0" });
    }
    let denom = (scan_points + 1) as f64;
    let scan_t: Vec<f64> = (1..=scan_points).map(|i| i as f64 / denom).collect();
    let scan_effect: Vec<f64> = scan_t.par_iter().map(|&t| pooling_effect(m, t)).collect::<Result<_>>()?;
    let signs: Vec<Sign> = scan_effect.iter().map(|&p| Sign::classify(p, zero_tol)).collect();

    let nonzero: Vec<usize> = (0..signs.len()).filter(|&i| signs[i] != Sign::Zero).collect();
    let mut roots = Vec::new();
    let mut brackets = Vec::new();
    let mut zero_intervals = Vec::new();

    let mut zero_run = |a: usize, b: usize| {
        // nodes a..=b are all zero
        if b > a {
            zero_intervals.push((scan_t[a], scan_t[b]));
        }
    };
    match (nonzero.first(), nonzero.last()) {
        (None, _) | (_, None) => zero_run(0, signs.len() - 1),
        (Some(&first), Some(&last)) => {
            if first > 0 {
                zero_run(0, first - 1);
            }
            if last + 1 < signs.len() {
                zero_run(last + 1, signs.len() - 1);
            }
        }
    }
    for w in nonzero.windows(2) {
        let (i, j) = (w[0], w[1]);
        if signs[i] == signs[j] {
            if j > i + 1 {
                zero_run(i + 1, j - 1);
            }
            continue;
        }
        let (lo, hi) = (scan_t[i], scan_t[j]);
        let root = refine_root(m, lo, hi, scan_effect[i])?;
        roots.push(root);
        brackets.push((lo, hi));
    }

    Ok(ThresholdReport {
        unique: roots.len() == 1,
        roots,
        brackets,
        sign_pattern: signs.iter().map(|s| s.symbol()).collect(),
        zero_intervals,
        scan_t,
        scan_effect,
    })
}

fn refine_root(m: &JointDemandModel, mut lo: f64, mut hi: f64, p_lo: f64) -> Result<f64> {
    let lo_positive = p_lo > 0.0;
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let p = pooling_effect(m, mid)?;
        if (p > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Monte Carlo comparison of pooled and dedicated expected profit at the
/// respective optimal stock levels, on a shared sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitComparison {
    pub pooled: f64,
    pub dedicated: f64,
    /// Mean of the per-draw profit difference `pooled - dedicated`.
    pub gain: f64,
    /// Standard error of `gain`.
    pub gain_se: f64,
    pub pooled_se: f64,
}

pub fn compare_profits_mc(m: &JointDemandModel, pp: &ProfitParams, n: usize, seed: u64) -> Result<ProfitComparison> {
    let (p, c) = pp.price_cost()?;
    if n < 2 {
        return Err(Error::Domain { what: "sample count", value: n as f64, domain: "n >= 2" });
    }
    let t = pp.margin_ratio;
    let q1 = m.marginal1.quantile(t)?;
    let q2 = m.marginal2.quantile(t)?;
    let qp = m.sum_quantile(t, SUM_QUANTILE_TOL)?.point;
    let demands = m.sample_demands(n, seed);
    let nf = n as f64;
    let (mut sp, mut spp, mut sd, mut sg, mut sgg) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(d1, d2) in &demands {
        let pooled = p * (d1 + d2).min(qp) - c * qp;
        let dedicated = p * (d1.min(q1) + d2.min(q2)) - c * (q1 + q2);
        let g = pooled - dedicated;
        sp += pooled;
        spp += pooled * pooled;
        sd += dedicated;
        sg += g;
        sgg += g * g;
    }
    let var = |s: f64, ss: f64| ((ss - s * s / nf) / (nf - 1.0)).max(0.0);
    Ok(ProfitComparison {
        pooled: sp / nf,
        dedicated: sd / nf,
        gain: sg / nf,
        gain_se: (var(sg, sgg) / nf).sqrt(),
        pooled_se: (var(sp, spp) / nf).sqrt(),
    })
}
