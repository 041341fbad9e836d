use copula_pooling::copulas::{calibrate_parameter, Copula, CopulaFamily};
use copula_pooling::joint_demand::{JointDemandModel, SUM_QUANTILE_TOL};
use copula_pooling::marginals::MarginalDistribution;
use copula_pooling::pooling::{
    compare_profits_mc, dedicated_total, find_thresholds, normal_pooled_closed_form, pooling_curve, pooling_effect,
    CurveMethod, ProfitParams, DEFAULT_ZERO_TOL,
};
use proptest::prelude::*;

fn beta(a: f64, b: f64) -> MarginalDistribution {
    MarginalDistribution::beta(a, b).unwrap()
}

fn tau(family: CopulaFamily, tau: f64) -> Copula {
    calibrate_parameter(family, tau).unwrap()
}

fn positive_marginal() -> impl Strategy<Value = MarginalDistribution> {
    prop_oneof![
        (1.0..10.0f64, 1.0..10.0f64).prop_map(|(a, b)| beta(a, b)),
        (0.3..3.0f64).prop_map(|r| MarginalDistribution::exponential(r).unwrap()),
    ]
}

fn copula() -> impl Strategy<Value = Copula> {
    (0usize..4, 0.05..0.85f64, any::<bool>()).prop_map(|(k, t, neg)| {
        let family = [CopulaFamily::Gumbel, CopulaFamily::Clayton, CopulaFamily::Frank, CopulaFamily::Gaussian][k];
        let t = if neg && k >= 2 { -t } else { t };
        tau(family, t)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sum_cdf_is_a_distribution(m1 in positive_marginal(), m2 in positive_marginal(), c in copula()) {
        let m = JointDemandModel::new(m1, m2, c);
        let lo = m1.quantile(1e-4).unwrap() + m2.quantile(1e-4).unwrap();
        let hi = m1.quantile(1.0 - 1e-4).unwrap() + m2.quantile(1.0 - 1e-4).unwrap();
        let mut prev = 0.0;
        for i in 0..=40 {
            let x = lo + (hi - lo) * i as f64 / 40.0;
            let f = m.sum_cdf(x).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= prev - 1e-9, "{m1}+{m2} {c}: F({x}) = {f} < {prev}");
            prev = f;
        }
    }

    #[test]
    fn comonotone_pooling_is_neutral(m1 in positive_marginal(), m2 in positive_marginal(), t in 0.02..0.98f64) {
        let m = JointDemandModel::new(m1, m2, Copula::comonotone());
        prop_assert!(pooling_effect(&m, t).unwrap().abs() <= 1e-6);
    }

    #[test]
    fn pooled_level_is_the_sum_quantile(m1 in positive_marginal(), m2 in positive_marginal(), c in copula(), t in 0.05..0.95f64) {
        let m = JointDemandModel::new(m1, m2, c);
        let q = m.sum_quantile(t, SUM_QUANTILE_TOL).unwrap().point;
        prop_assert!((m.sum_cdf(q).unwrap() - t).abs() <= 1e-7);
    }
}

#[test]
fn gaussian_normal_matches_closed_form() {
    for (mu1, s1, mu2, s2) in [(0.0, 1.0, 0.0, 2.0), (5.0, 2.0, 5.0, 1.0), (-3.0, 0.5, 10.0, 4.0)] {
        for rho in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            let m = JointDemandModel::new(
                MarginalDistribution::normal(mu1, s1).unwrap(),
                MarginalDistribution::normal(mu2, s2).unwrap(),
                Copula::gaussian(rho).unwrap(),
            );
            for i in 1..=9 {
                let t = i as f64 / 10.0;
                let q = m.sum_quantile(t, SUM_QUANTILE_TOL).unwrap().point;
                let exact = normal_pooled_closed_form(mu1, s1, mu2, s2, rho, t);
                assert!((q - exact).abs() <= 1e-6, "rho={rho} t={t}: {q} vs {exact}");
            }
        }
    }
}

#[test]
fn sign_flips_once_at_a_unique_threshold() {
    let b55 = beta(5.0, 5.0);
    let models = [
        JointDemandModel::new(
            MarginalDistribution::normal(0.0, 1.0).unwrap(),
            MarginalDistribution::normal(5.0, 2.0).unwrap(),
            Copula::gaussian(0.3).unwrap(),
        ),
        JointDemandModel::new(b55, b55, tau(CopulaFamily::Gumbel, 0.5)),
        JointDemandModel::new(beta(2.0, 8.0), beta(2.0, 8.0), tau(CopulaFamily::Clayton, 0.5)),
        JointDemandModel::new(b55, b55, Copula::independence()),
    ];
    for m in models {
        let r = find_thresholds(&m, 99, DEFAULT_ZERO_TOL).unwrap();
        assert!(r.unique, "{:?}", r.roots);
        assert_eq!(r.segments(), "+-");
        let t0 = r.roots[0];
        for i in 1..40 {
            let t = i as f64 / 40.0;
            if (t - t0).abs() < 0.02 {
                continue;
            }
            let p = pooling_effect(&m, t).unwrap();
            assert!(if t < t0 { p > 0.0 } else { p < 0.0 }, "t0={t0} t={t} P={p}");
        }
    }
}

#[test]
fn curve_columns_are_consistent() {
    let m = JointDemandModel::new(beta(2.0, 8.0), beta(8.0, 2.0), tau(CopulaFamily::Frank, -0.4));
    let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    for method in [CurveMethod::Quadrature, CurveMethod::MonteCarlo { n_samples: 20_000, seed: 4 }] {
        let c = pooling_curve(&m, &grid, method).unwrap();
        for i in 0..c.len() {
            assert_eq!(c.effect[i], c.pooled[i] - c.dedicated[i]);
            assert_eq!(c.dedicated[i], dedicated_total(&m, grid[i]).unwrap());
            assert!((c.effect_pct[i] - 100.0 * c.effect[i] / c.dedicated[i]).abs() <= 1e-12 * c.effect_pct[i].abs().max(1.0));
        }
    }
}

#[test]
fn pooled_profit_is_never_worse() {
    let mut k = 0;
    for (m1, m2) in [(beta(2.0, 8.0), beta(8.0, 2.0)), (beta(5.0, 5.0), beta(5.0, 5.0))] {
        for c in [Copula::independence(), tau(CopulaFamily::Gumbel, 0.6), tau(CopulaFamily::Frank, -0.6)] {
            for (price, cost) in [(10.0, 2.0), (10.0, 5.0), (10.0, 8.0)] {
                let m = JointDemandModel::new(m1, m2, c);
                let r = compare_profits_mc(&m, &ProfitParams::new(price, cost).unwrap(), 50_000, k).unwrap();
                assert!(r.gain >= -3.0 * r.gain_se, "{m1}+{m2} {c} p={price} c={cost}: {r:?}");
                k += 1;
            }
        }
    }
}
