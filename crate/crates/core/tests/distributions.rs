use copula_pooling::copulas::{calibrate_parameter, Copula, CopulaFamily};
use copula_pooling::marginals::MarginalDistribution;
use copula_pooling::rng::UniformStream;
use proptest::prelude::*;

fn marginal() -> impl Strategy<Value = MarginalDistribution> {
    prop_oneof![
        (0.5..12.0f64, 0.5..12.0f64).prop_map(|(a, b)| MarginalDistribution::beta(a, b).unwrap()),
        (-10.0..10.0f64, 0.1..5.0f64).prop_map(|(m, s)| MarginalDistribution::normal(m, s).unwrap()),
        (0.1..5.0f64).prop_map(|r| MarginalDistribution::exponential(r).unwrap()),
        (0.5..6.0f64, 0.5..3.0f64).prop_map(|(a, s)| MarginalDistribution::pareto(a, s).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quantile_inverts_cdf(m in marginal(), p in 1e-6..(1.0 - 1e-6)) {
        let x = m.quantile(p).unwrap();
        prop_assert!((m.cdf(x) - p).abs() <= 1e-9, "{m} p={p} x={x} F={}", m.cdf(x));
    }

    #[test]
    fn quantile_is_monotone(m in marginal(), p in 1e-6..0.99, dp in 1e-4..0.01) {
        prop_assert!(m.quantile(p).unwrap() <= m.quantile(p + dp).unwrap());
    }

    #[test]
    fn density_matches_cdf_slope(m in marginal(), p in 0.02..0.98) {
        let x = m.quantile(p).unwrap();
        let h = 1e-5 * x.abs().max(1.0);
        let (lo, hi) = m.support();
        prop_assume!(x - h > lo && x + h < hi);
        let slope = (m.cdf(x + h) - m.cdf(x - h)) / (2.0 * h);
        let f = m.density(x);
        prop_assert!((slope - f).abs() <= 1e-5 * f.max(1.0), "{m} x={x} slope={slope} f={f}");
    }

    #[test]
    fn calibrated_copula_is_a_copula(fam in 0usize..4, tau in -0.9..0.95f64, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let family = [CopulaFamily::Gumbel, CopulaFamily::Clayton, CopulaFamily::Frank, CopulaFamily::Gaussian][fam];
        let Ok(c) = calibrate_parameter(family, tau) else { return Ok(()) };
        let x = c.cdf(u, v);
        prop_assert!(x >= (u + v - 1.0).max(0.0) - 1e-12 && x <= u.min(v) + 1e-12);
        let w = c.conditional_cdf(v, u);
        prop_assert!((0.0..=1.0).contains(&w));
    }
}

/// Kolmogorov-Smirnov statistic of a sample against the standard uniform.
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

fn sampled_copulas() -> Vec<Copula> {
    let mut out = vec![Copula::independence(), Copula::comonotone(), Copula::countermonotone()];
    for (family, tau) in [
        (CopulaFamily::Gumbel, 0.7),
        (CopulaFamily::Clayton, 0.6),
        (CopulaFamily::Frank, -0.7),
        (CopulaFamily::Frank, 0.5),
        (CopulaFamily::Gaussian, -0.4),
        (CopulaFamily::Gaussian, 0.8),
    ] {
        out.push(calibrate_parameter(family, tau).unwrap());
    }
    out
}

#[test]
fn sampled_coordinates_are_uniform() {
    // asymptotic 1% critical value of the KS statistic is 1.63 / sqrt(n)
    let n = 100_000;
    let crit = 1.63 / (n as f64).sqrt();
    for (k, c) in sampled_copulas().into_iter().enumerate() {
        let pairs: Vec<(f64, f64)> =
            UniformStream::new(500 + k as u64).pairs(0, n).map(|(a, b)| c.sample_pair(a, b)).collect();
        let d1 = ks_uniform(pairs.iter().map(|p| p.0).collect());
        let d2 = ks_uniform(pairs.iter().map(|p| p.1).collect());
        assert!(d1 < crit && d2 < crit, "{c}: D = {d1:.5}, {d2:.5}, critical {crit:.5}");
    }
}

#[test]
fn analytic_tau_matches_integral_estimate() {
    for c in [
        calibrate_parameter(CopulaFamily::Clayton, 0.4).unwrap(),
        calibrate_parameter(CopulaFamily::Frank, -0.5).unwrap(),
        calibrate_parameter(CopulaFamily::Gaussian, 0.3).unwrap(),
        Copula::countermonotone(),
    ] {
        let analytic = c.kendall_tau();
        let numeric = c.numeric_kendall_tau(1_000_000, 9);
        assert!((analytic - numeric).abs() <= 0.005, "{c}: {analytic} vs {numeric}");
    }
}

#[test]
fn frank_parameterisations_agree() {
    let theta = -(100f64.ln());
    let a = Copula::frank(theta).unwrap();
    let b = Copula::frank_log_base(100.0).unwrap();
    for (u, v) in [(0.2, 0.3), (0.5, 0.5), (0.9, 0.1)] {
        assert!((a.cdf(u, v) - b.cdf(u, v)).abs() < 1e-14);
    }
}
