//! Scenario grids: run every (marginal pair, copula) cell of a config, write
//! per-cell CSVs plus a manifest, and evaluate the qualitative claims.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{uniform_grid, CellSpec, CopulaSpec, MarginalSpec, ScenarioConfig};
use crate::copulas::{empirical_kendall_tau, CopulaFamily};
use crate::error::{Error, Result};
use crate::joint_demand::QuantileMethod;
use crate::marginals::MarginalFamily;
use crate::pooling::{find_thresholds, pooling_curve, CurveMethod, PoolingCurve, ThresholdReport};
use crate::rng::UniformStream;

pub const PRESETS: [&str; 9] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "prop2", "prop3"];

/// Required gap between successive thresholds in the skewness check.
pub const SKEWNESS_MARGIN: f64 = 0.005;
/// Positive regions narrower than this are treated as numerical artefacts.
pub const MIN_REGION_WIDTH: f64 = 0.01;

/// Seed for a cell: the first 8 bytes of `SHA-256(base_seed_le || cell_id)`.
pub fn cell_seed(base_seed: u64, cell_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(cell_id.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub cell_id: String,
    pub m1: MarginalSpec,
    pub m2: MarginalSpec,
    pub copula_spec: CopulaSpec,
    /// The copula actually used, after calibration.
    pub copula: Option<String>,
    pub kendall_tau: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub curve: Option<PoolingCurve>,
    #[serde(skip)]
    pub thresholds: Option<ThresholdReport>,
    pub empirical_tau: Option<f64>,
    pub error: Option<String>,
    pub wall_time_s: f64,
}

impl ScenarioResult {
    pub fn status(&self) -> &'static str {
        match (&self.error, &self.curve) {
            (Some(_), _) | (None, None) => "failed",
            (None, Some(c)) if !c.missing.is_empty() => "partial",
            _ => "ok",
        }
    }

    /// The threshold when it exists and is unique.
    pub fn unique_threshold(&self) -> std::result::Result<f64, String> {
        match &self.thresholds {
            None => Err(format!("{}: no threshold report", self.cell_id)),
            Some(r) if r.unique => Ok(r.roots[0]),
            Some(r) => Err(format!("{}: {} roots", self.cell_id, r.roots.len())),
        }
    }
}

fn run_cell(cfg: &ScenarioConfig, cell: &CellSpec) -> ScenarioResult {
    let start = Instant::now();
    let seed = cell_seed(cfg.base_seed, &cell.id);
    let mut res = ScenarioResult {
        cell_id: cell.id.clone(),
        m1: cell.m1.clone(),
        m2: cell.m2.clone(),
        copula_spec: cell.copula.clone(),
        copula: None,
        kendall_tau: None,
        seed,
        curve: None,
        thresholds: None,
        empirical_tau: None,
        error: None,
        wall_time_s: 0.0,
    };
    let outcome = (|| -> Result<()> {
        let model = cell.model()?;
        res.copula = Some(model.copula.to_string());
        res.kendall_tau = Some(model.copula.kendall_tau());
        let method = match cfg.method {
            QuantileMethod::Quadrature => CurveMethod::Quadrature,
            QuantileMethod::MonteCarlo => CurveMethod::MonteCarlo { n_samples: cfg.mc_samples, seed },
        };
        res.curve = Some(pooling_curve(&model, &cfg.t_grid, method)?);
        if cfg.validation_samples >= 2 {
            let stream = UniformStream::new(cell_seed(seed, "validation"));
            let pairs: Vec<(f64, f64)> = stream
                .pairs(0, cfg.validation_samples)
                .map(|(a, b)| model.copula.sample_pair(a, b))
                .collect();
            res.empirical_tau = Some(empirical_kendall_tau(&pairs)?);
        }
        if cfg.compute_thresholds {
            res.thresholds = Some(find_thresholds(&model, cfg.scan_points, cfg.zero_tol)?);
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        res.error = Some(e.to_string());
    }
    res.wall_time_s = start.elapsed().as_secs_f64();
    res
}

/// Runs every cell; results are sorted by cell id. Only an invalid config is
/// an error; failures inside a cell are recorded on that cell.
pub fn run_grid(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>> {
    cfg.validate()?;
    let mut cells = cfg.cells();
    cells.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(cells.par_iter().map(|c| run_cell(cfg, c)).collect())
}

fn beta_pair(a: (f64, f64), b: (f64, f64)) -> (MarginalSpec, MarginalSpec) {
    (MarginalSpec::beta(a.0, a.1), MarginalSpec::beta(b.0, b.1))
}

const SKEWED: [(f64, f64); 3] = [(2.0, 8.0), (5.0, 5.0), (8.0, 2.0)];

fn ordered_beta_pairs() -> Vec<(MarginalSpec, MarginalSpec)> {
    SKEWED.iter().flat_map(|&a| SKEWED.iter().map(move |&b| beta_pair(a, b))).collect()
}

fn unordered_beta_pairs() -> Vec<(MarginalSpec, MarginalSpec)> {
    let mut out = vec![];
    for i in 0..3 {
        for j in i..3 {
            out.push(beta_pair(SKEWED[i], SKEWED[j]));
        }
    }
    out
}

fn tau_specs(family: CopulaFamily, taus: &[f64]) -> Vec<CopulaSpec> {
    taus.iter().map(|&t| CopulaSpec::with_tau(family, t)).collect()
}

fn figure_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

fn base_config(name: &str, pairs: Vec<(MarginalSpec, MarginalSpec)>, copulas: Vec<CopulaSpec>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        marginal_pairs: pairs,
        copula_specs: copulas,
        t_grid: figure_grid(),
        method: QuantileMethod::Quadrature,
        mc_samples: 100_000,
        base_seed: 20_240_101,
        output_path: None,
        scan_points: crate::pooling::DEFAULT_SCAN_POINTS,
        zero_tol: crate::pooling::DEFAULT_ZERO_TOL,
        validation_samples: 10_000,
        compute_thresholds: true,
        notes: vec![],
    }
}

/// The named preset configuration.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let cfg = match name {
        "fig3" => {
            let mut c = base_config(
                name,
                vec![beta_pair((2.0, 4.0), (2.0, 4.0))],
                vec![CopulaSpec::with_theta(CopulaFamily::Frank, -(100f64.ln()))],
            );
            c.t_grid = uniform_grid(0.005, 0.995, 199)?;
            c.notes.push("Frank theta = -ln(100), i.e. generator log base 100".into());
            c
        }
        "fig4" => base_config(name, ordered_beta_pairs(), tau_specs(CopulaFamily::Gumbel, &[0.0, 0.2, 0.5, 0.8])),
        "fig5" => base_config(name, ordered_beta_pairs(), tau_specs(CopulaFamily::Clayton, &[0.0, 0.2, 0.5, 0.8])),
        "fig6" => base_config(name, ordered_beta_pairs(), tau_specs(CopulaFamily::Frank, &[0.0, 0.2, 0.5, 0.8])),
        "fig7" => base_config(name, unordered_beta_pairs(), tau_specs(CopulaFamily::Frank, &[0.8])),
        "fig8" => base_config(name, ordered_beta_pairs(), tau_specs(CopulaFamily::Frank, &[0.0, -0.2, -0.5, -0.8])),
        "fig9" => {
            let positive: Vec<f64> = (1..=16).map(|i| i as f64 * 5.0 / 100.0).collect();
            let both: Vec<f64> = (-8..=8).map(|i| i as f64 / 10.0).collect();
            let mut copulas = tau_specs(CopulaFamily::Gumbel, &positive);
            copulas.extend(tau_specs(CopulaFamily::Clayton, &positive));
            copulas.extend(tau_specs(CopulaFamily::Frank, &both));
            let mut c = base_config(name, vec![beta_pair((5.0, 5.0), (5.0, 5.0))], copulas);
            c.t_grid = vec![0.2, 0.5, 0.8];
            c.compute_thresholds = false;
            c.notes.push(
                "marginals fixed at beta(5,5); a normal-marginal variant of this sweep is not included"
                    .into(),
            );
            c.notes.push("dependence sweep: tau in {0.05,...,0.8} for gumbel/clayton, {-0.8,...,0.8} for frank".into());
            c
        }
        "prop2" => {
            let n01 = MarginalSpec::new(MarginalFamily::Normal, &[0.0, 1.0]);
            let n52 = MarginalSpec::new(MarginalFamily::Normal, &[5.0, 2.0]);
            let pairs = vec![(n01.clone(), n01.clone()), (n01, n52.clone()), (n52.clone(), n52)];
            let copulas = [-0.5, 0.0, 0.5].iter().map(|&r| CopulaSpec::with_theta(CopulaFamily::Gaussian, r)).collect();
            base_config(name, pairs, copulas)
        }
        "prop3" => {
            let pairs = [0.8, 3.0]
                .iter()
                .map(|&a| {
                    let m = MarginalSpec::new(MarginalFamily::Pareto, &[a, 1.0]);
                    (m.clone(), m)
                })
                .collect();
            let mut c = base_config(name, pairs, vec![CopulaSpec::of(CopulaFamily::Independence)]);
            c.method = QuantileMethod::MonteCarlo;
            c.mc_samples = 1_000_000;
            c.notes.push("pareto scale x_m = 1; independence copula".into());
            c
        }
        other => {
            return Err(Error::Config(format!("unknown preset '{other}'; available: {}", PRESETS.join(", "))))
        }
    };
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "not evaluable")]
    NotEvaluable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    /// What the check was evaluated over, e.g. a copula label or a pair.
    pub group: String,
    pub verdict: Verdict,
    pub values: Value,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
    /// No check failed. Not-evaluable checks do not count against this.
    pub all_pass: bool,
    pub passed: usize,
    pub failed: usize,
    pub not_evaluable: usize,
}

impl CheckReport {
    pub fn find(&self, id: &str, group: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id && c.group == group)
    }
}

fn pair_key(r: &ScenarioResult) -> String {
    format!("{}__{}", r.m1.label(), r.m2.label())
}

fn check(id: &str, group: String, verdict: Verdict, values: Value, detail: String) -> Check {
    Check { id: id.to_string(), group, verdict, values, detail }
}

fn skewness_checks(results: &[ScenarioResult], out: &mut Vec<Check>) {
    let order = ["beta-8-2__beta-8-2", "beta-5-5__beta-5-5", "beta-2-8__beta-2-8"];
    let mut by_copula: BTreeMap<String, Vec<&ScenarioResult>> = BTreeMap::new();
    for r in results.iter().filter(|r| order.contains(&pair_key(r).as_str())) {
        by_copula.entry(r.copula_spec.label()).or_default().push(r);
    }
    // a lone symmetric pair is not an attempt at this check
    by_copula.retain(|_, cells| cells.len() >= 2);
    for (group, cells) in by_copula {
        let mut t0 = vec![];
        let mut problems = vec![];
        for key in order {
            match cells.iter().find(|r| pair_key(r) == key) {
                None => problems.push(format!("missing cell {key}")),
                Some(r) => match r.unique_threshold() {
                    Ok(t) => t0.push(t),
                    Err(e) => problems.push(e),
                },
            }
        }
        let values = json!({ "pairs": order, "t0": t0, "margin": SKEWNESS_MARGIN });
        let (verdict, detail) = if !problems.is_empty() {
            (Verdict::NotEvaluable, problems.join("; "))
        } else if t0[0] + SKEWNESS_MARGIN <= t0[1] && t0[1] + SKEWNESS_MARGIN <= t0[2] {
            (Verdict::Pass, "t0 increases from left to right skewed marginals".into())
        } else {
            (Verdict::Fail, "t0 not ordered with the required margin".into())
        };
        out.push(check("skewness_ordering", group, verdict, values, detail));
    }
}

fn positive_tau_series<'a>(
    results: &'a [ScenarioResult],
    family: CopulaFamily,
) -> BTreeMap<String, Vec<(f64, &'a ScenarioResult)>> {
    let mut by_pair: BTreeMap<String, Vec<(f64, &ScenarioResult)>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.copula_spec.family == family) {
        if let Some(tau) = r.copula_spec.tau.filter(|&t| t > 0.0) {
            by_pair.entry(pair_key(r)).or_default().push((tau, r));
        }
    }
    for v in by_pair.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    by_pair.retain(|_, v| v.len() >= 2);
    by_pair
}

fn monotone_threshold_checks(results: &[ScenarioResult], out: &mut Vec<Check>) {
    for (family, increasing, id) in
        [(CopulaFamily::Gumbel, false, "gumbel_t0_decreasing"), (CopulaFamily::Clayton, true, "clayton_t0_increasing")]
    {
        for (pair, series) in positive_tau_series(results, family) {
            let taus: Vec<f64> = series.iter().map(|s| s.0).collect();
            let t0: Vec<std::result::Result<f64, String>> = series.iter().map(|s| s.1.unique_threshold()).collect();
            let problems: Vec<String> = t0.iter().filter_map(|r| r.clone().err()).collect();
            let t0: Vec<f64> = t0.into_iter().filter_map(|r| r.ok()).collect();
            let values = json!({ "tau": taus, "t0": t0 });
            let (verdict, detail) = if !problems.is_empty() {
                (Verdict::NotEvaluable, problems.join("; "))
            } else if t0.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] }) {
                (Verdict::Pass, format!("t0 {} in tau", if increasing { "increases" } else { "decreases" }))
            } else {
                (Verdict::Fail, "t0 not monotone in the expected direction".into())
            };
            out.push(check(id, format!("{}/{pair}", family.name()), verdict, values, detail));
        }
    }
}

fn shrinking_effect_checks(results: &[ScenarioResult], out: &mut Vec<Check>) {
    for family in [CopulaFamily::Gumbel, CopulaFamily::Clayton, CopulaFamily::Frank] {
        for (pair, series) in positive_tau_series(results, family) {
            let (lo, hi) = (series[0], series[series.len() - 1]);
            let size = |r: &ScenarioResult| r.curve.as_ref().map(|c| c.max_abs_effect_pct());
            let group = format!("{}/{pair}", family.name());
            let (verdict, detail, values) = match (size(lo.1), size(hi.1)) {
                (Some(a), Some(b)) => (
                    if b < a { Verdict::Pass } else { Verdict::Fail },
                    format!("max |effect_pct| {a} at tau={} vs {b} at tau={}", lo.0, hi.0),
                    json!({ "tau": [lo.0, hi.0], "max_abs_effect_pct": [a, b] }),
                ),
                _ => (Verdict::NotEvaluable, "curve missing".into(), json!({ "tau": [lo.0, hi.0] })),
            };
            out.push(check("effect_shrinks_with_dependence", group, verdict, values, detail));
        }
    }
}

fn non_uniqueness_check(results: &[ScenarioResult], out: &mut Vec<Check>) {
    let cells: Vec<&ScenarioResult> = results
        .iter()
        .filter(|r| r.copula_spec.family == CopulaFamily::Frank && r.copula_spec.tau.is_some_and(|t| (t - 0.8).abs() < 1e-12))
        .collect();
    if cells.is_empty() {
        return;
    }
    let mut root_counts = BTreeMap::new();
    let mut min_width = f64::INFINITY;
    let mut problems = vec![];
    for r in &cells {
        match &r.thresholds {
            Some(rep) => {
                root_counts.insert(pair_key(r), rep.roots.len());
                for (a, b) in rep.positive_regions() {
                    min_width = min_width.min(b - a);
                }
            }
            None => problems.push(format!("{}: no threshold report", r.cell_id)),
        }
    }
    let multi = root_counts.values().any(|&n| n >= 2);
    let values = json!({ "root_counts": root_counts, "min_positive_region_width": if min_width.is_finite() { json!(min_width) } else { Value::Null } });
    let (verdict, detail) = if multi && min_width > MIN_REGION_WIDTH {
        (Verdict::Pass, "at least one marginal combination has several thresholds".to_string())
    } else if root_counts.is_empty() {
        (Verdict::NotEvaluable, problems.join("; "))
    } else if !multi {
        (Verdict::Fail, "every evaluated combination has at most one threshold".to_string())
    } else {
        (Verdict::Fail, format!("a positive region is only {min_width} wide"))
    };
    out.push(check("frank_tau0.8_nonunique", "frank-tau0.8".into(), verdict, values, detail));
}

fn pareto_tail_checks(results: &[ScenarioResult], out: &mut Vec<Check>) {
    for r in results.iter().filter(|r| {
        r.m1.family == MarginalFamily::Pareto && r.m1 == r.m2 && r.copula_spec.family == CopulaFamily::Independence
    }) {
        let Some(&alpha) = r.m1.params.first() else { continue };
        if alpha == 1.0 {
            continue;
        }
        let group = pair_key(r);
        let Some(c) = &r.curve else {
            out.push(check("pareto_tail_sign", group, Verdict::NotEvaluable, Value::Null, "curve missing".into()));
            continue;
        };
        // heavy tails: positive from the median up; light tails: negative high up
        let (from, want_positive) = if alpha < 1.0 { (0.5, true) } else { (0.9, false) };
        let idx: Vec<usize> = (0..c.len()).filter(|&i| c.t_grid[i] >= from - 1e-12).collect();
        let ok = |i: usize| {
            let e = c.effect[i];
            let ci = if c.ci_halfwidth[i].is_finite() { c.ci_halfwidth[i] } else { f64::INFINITY };
            if want_positive { e > 3.0 * ci } else { e < -3.0 * ci }
        };
        let failing: Vec<f64> = idx.iter().filter(|&&i| !ok(i)).map(|&i| c.t_grid[i]).collect();
        let values = json!({ "alpha": alpha, "from_t": from, "points": idx.len(), "failing_t": failing });
        let verdict = if idx.is_empty() {
            Verdict::NotEvaluable
        } else if failing.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let sign = if want_positive { "positive" } else { "negative" };
        out.push(check("pareto_tail_sign", group, verdict, values, format!("effect {sign} beyond 3 CI half-widths for t >= {from}")));
    }
}

fn elliptical_checks(results: &[ScenarioResult], out: &mut Vec<Check>) {
    for r in results.iter().filter(|r| {
        r.m1.family == MarginalFamily::Normal && r.m2.family == MarginalFamily::Normal && r.copula_spec.family == CopulaFamily::Gaussian
    }) {
        let (verdict, values, detail) = match r.unique_threshold() {
            Ok(t0) => (
                if (t0 - 0.5).abs() <= 1e-4 { Verdict::Pass } else { Verdict::Fail },
                json!({ "t0": t0 }),
                "unique threshold at one half".to_string(),
            ),
            Err(e) => (Verdict::NotEvaluable, Value::Null, e),
        };
        out.push(check("elliptical_threshold_half", r.cell_id.clone(), verdict, values, detail));
    }
}

/// Evaluates whichever qualitative claims the results cover.
pub fn qualitative_checks(results: &[ScenarioResult]) -> CheckReport {
    let mut checks = vec![];
    skewness_checks(results, &mut checks);
    monotone_threshold_checks(results, &mut checks);
    shrinking_effect_checks(results, &mut checks);
    non_uniqueness_check(results, &mut checks);
    pareto_tail_checks(results, &mut checks);
    elliptical_checks(results, &mut checks);
    let count = |v: Verdict| checks.iter().filter(|c| c.verdict == v).count();
    let (passed, failed, not_evaluable) = (count(Verdict::Pass), count(Verdict::Fail), count(Verdict::NotEvaluable));
    CheckReport { all_pass: failed == 0, passed, failed, not_evaluable, checks }
}

/// Run-level manifest: config echo, code version and per-cell status.
pub fn manifest(cfg: &ScenarioConfig, results: &[ScenarioResult], wall_time_s: f64) -> Value {
    let cells: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "id": r.cell_id,
                "status": r.status(),
                "error": r.error,
                "csv": r.curve.as_ref().map(|_| format!("{}.csv", r.cell_id)),
                "seed": r.seed,
                "copula": r.copula,
                "kendall_tau": r.kendall_tau,
                "empirical_tau": r.empirical_tau,
                "missing_points": r.curve.as_ref().map(|c| c.missing.clone()).unwrap_or_default(),
                "thresholds": r.thresholds.as_ref().map(|t| t.to_json()),
                "wall_time_s": r.wall_time_s,
            })
        })
        .collect();
    json!({
        "name": cfg.name,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "notes": cfg.notes,
        "cells": cells,
        "wall_time_s": wall_time_s,
    })
}

/// Summary of a finished run written to disk.
#[derive(Debug)]
pub struct RunOutput {
    pub results: Vec<ScenarioResult>,
    pub checks: CheckReport,
}

/// Runs `cfg` and writes `<cell>.csv`, `manifest.json` and `checks.json`
/// into `out_dir`.
pub fn run_to_dir(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunOutput> {
    let start = Instant::now();
    let results = run_grid(cfg)?;
    let checks = qualitative_checks(&results);
    fs::create_dir_all(out_dir)?;
    for r in &results {
        if let Some(c) = &r.curve {
            fs::write(out_dir.join(format!("{}.csv", r.cell_id)), c.to_csv())?;
        }
    }
    let m = manifest(cfg, &results, start.elapsed().as_secs_f64());
    fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&m)? + "\n")?;
    fs::write(out_dir.join("checks.json"), serde_json::to_string_pretty(&checks)? + "\n")?;
    Ok(RunOutput { results, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(copulas: Vec<CopulaSpec>) -> ScenarioConfig {
        let mut c = base_config("small", vec![beta_pair((5.0, 5.0), (5.0, 5.0))], copulas);
        c.t_grid = vec![0.25, 0.5, 0.75];
        c.scan_points = 19;
        c.validation_samples = 500;
        c
    }

    #[test]
    fn seeds_depend_on_cell_and_base() {
        assert_ne!(cell_seed(1, "a"), cell_seed(1, "b"));
        assert_ne!(cell_seed(1, "a"), cell_seed(2, "a"));
        assert_eq!(cell_seed(7, "x"), cell_seed(7, "x"));
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("fig10").unwrap_err().to_string().contains("fig7"));
    }

    #[test]
    fn preset_shapes() {
        let f3 = preset("fig3").unwrap();
        assert_eq!(f3.marginal_pairs, vec![beta_pair((2.0, 4.0), (2.0, 4.0))]);
        assert_eq!(preset("fig4").unwrap().cells().len(), 36);
        let f7 = preset("fig7").unwrap();
        assert_eq!(f7.copula_specs, vec![CopulaSpec::with_tau(CopulaFamily::Frank, 0.8)]);
        assert_eq!(f7.marginal_pairs.len(), 6);
        let f9 = preset("fig9").unwrap();
        assert_eq!(f9.copula_specs.len(), 16 + 16 + 17);
        assert_eq!(f9.t_grid, vec![0.2, 0.5, 0.8]);
        assert_eq!(preset("prop3").unwrap().method, QuantileMethod::MonteCarlo);
    }

    #[test]
    fn comonotone_cell_is_flat() {
        let res = run_grid(&small(vec![CopulaSpec::of(CopulaFamily::Comonotone)])).unwrap();
        assert_eq!(res.len(), 1);
        assert_eq!(res[0].status(), "ok");
        assert!(res[0].curve.as_ref().unwrap().effect.iter().all(|e| e.abs() < 1e-6));
        assert!(res[0].thresholds.as_ref().unwrap().roots.is_empty());
    }

    #[test]
    fn failing_cell_is_captured() {
        let mut cfg = small(vec![CopulaSpec::with_tau(CopulaFamily::Clayton, 0.5)]);
        cfg.validation_samples = 0;
        let mut cells = cfg.cells();
        cells[0].m1 = MarginalSpec::beta(-1.0, 1.0);
        let r = run_cell(&cfg, &cells[0]);
        assert_eq!(r.status(), "failed");
        assert!(r.error.is_some());
    }

    #[test]
    fn checks_on_synthetic_results() {
        let res = run_grid(&small(vec![CopulaSpec::with_tau(CopulaFamily::Clayton, 0.2), CopulaSpec::with_tau(CopulaFamily::Clayton, 0.8)])).unwrap();
        let rep = qualitative_checks(&res);
        let c = rep.find("clayton_t0_increasing", "clayton/beta-5-5__beta-5-5").unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        assert!(rep.find("skewness_ordering", "clayton-tau0.2").is_none());
        assert!(rep.all_pass);
    }
}
