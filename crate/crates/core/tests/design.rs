//! Sample-size properties: power round trip, the φ = 1 regime, monotonicity
//! and the pilot-based method.

use rmtld::design::{
    analytic_power, calibrate_loss, n_control_raw, sample_size_from_variances,
    sample_size_rmtld_approx_raw, sample_size_rmtld_weibull, sample_size_rmtld_wu_simulated, shr_curve, LossModel,
    Method, PhiOptions, TrialDesign,
};
use rmtld::models::{Cause, CompetingRisksModel};
use rmtld::numerics::{normal_cdf, normal_quantile};

fn design(accrual: f64, followup: f64, tau: f64) -> TrialDesign {
    TrialDesign { accrual, followup, tau, ratio: 1.0, alpha: 0.05, power: 0.8, loss: LossModel::None }
}

fn exponential() -> (CompetingRisksModel, CompetingRisksModel) {
    (
        CompetingRisksModel::weibull(1.0, 0.15, 1.0, 0.1).unwrap(),
        CompetingRisksModel::weibull(1.0, 0.1, 1.0, 0.1).unwrap(),
    )
}

/// Power of the two-sided Z test at a possibly fractional control-arm size.
fn power_at(delta: f64, s2e: f64, s2c: f64, n_c: f64, ratio: f64, alpha: f64) -> f64 {
    let se = (s2e / (ratio * n_c) + s2c / n_c).sqrt();
    let z = normal_quantile(1.0 - alpha / 2.0).unwrap();
    normal_cdf(delta.abs() / se - z) + normal_cdf(-delta.abs() / se - z)
}

#[test]
fn power_round_trip_before_and_after_rounding() {
    let (e, c) = exponential();
    let weibull_e = CompetingRisksModel::weibull(1.3, 0.104, 1.3, 0.07).unwrap();
    let weibull_c = CompetingRisksModel::weibull(1.3, 0.08, 1.3, 0.07).unwrap();
    let heavy = TrialDesign { loss: LossModel::Uniform { theta: 22.0 }, ..design(18.0, 28.0, 15.0) };
    let cases = [
        (e, c, design(10.0, 10.0, 10.0)),
        (e, c, TrialDesign { ratio: 2.0, power: 0.9, ..design(10.0, 10.0, 10.0) }),
        (weibull_e, weibull_c, design(18.0, 28.0, 15.0)),
        (weibull_e, weibull_c, heavy),
    ];
    for (me, mc, d) in cases {
        let r = sample_size_rmtld_weibull(&me, &mc, &d, Cause::Interest, &PhiOptions::default()).unwrap();
        let (delta, s2e, s2c) = (r.delta.unwrap(), r.sigma2_e_corrected.unwrap(), r.sigma2_c_corrected.unwrap());
        let raw = n_control_raw(delta, s2e, s2c, d.ratio, d.alpha, d.power).unwrap();
        assert!(power_at(delta, s2e, s2c, raw, d.ratio, d.alpha) >= d.power - 1e-12);
        assert!(analytic_power(delta, s2e, s2c, r.n_e, r.n_c, d.alpha) >= d.power);
    }
}

#[test]
fn phi_is_one_without_censoring_before_tau() {
    let (e, c) = exponential();
    for (accrual, followup, tau) in [(10.0, 10.0, 10.0), (18.0, 28.0, 15.0), (0.0, 12.0, 8.0)] {
        let d = design(accrual, followup, tau);
        assert!(d.uncensored_before_tau());
        let sim = PhiOptions { always_simulate: true, seed: 77, ..PhiOptions::default() };
        let simulated = sample_size_rmtld_weibull(&e, &c, &d, Cause::Interest, &sim).unwrap();
        for phi in [simulated.phi_e.unwrap(), simulated.phi_c.unwrap()] {
            assert!((0.97..=1.03).contains(&phi), "phi {phi} at ({accrual}, {followup}, {tau})");
        }
        let analytic = sample_size_rmtld_weibull(&e, &c, &d, Cause::Interest, &PhiOptions::default()).unwrap();
        let mu = |m: &CompetingRisksModel| m.rmtl(Cause::Interest, tau).unwrap();
        let var = |m: &CompetingRisksModel| m.rtl_variance(Cause::Interest, tau).unwrap();
        let direct =
            sample_size_from_variances(Method::RmtldWeibull, mu(&e) - mu(&c), var(&e), var(&c), 1.0, 0.05, 0.8).unwrap();
        assert_eq!(analytic.n_total, direct.n_total);
        assert_eq!(analytic.n_c, direct.n_c);
    }
}

#[test]
fn n_falls_with_effect_and_rises_with_variance() {
    let n = |delta: f64, s2e: f64, s2c: f64| {
        sample_size_from_variances(Method::RmtldWeibull, delta, s2e, s2c, 1.0, 0.05, 0.8).unwrap().n_total
    };
    let deltas = [0.2, 0.5, 1.0, 1.5, 3.0];
    for w in deltas.windows(2) {
        assert!(n(w[1], 10.0, 12.0) <= n(w[0], 10.0, 12.0));
        assert!(n(-w[1], 10.0, 12.0) <= n(-w[0], 10.0, 12.0));
    }
    let vars = [1.0, 4.0, 9.0, 16.0];
    for w in vars.windows(2) {
        assert!(n(0.8, w[1], 5.0) >= n(0.8, w[0], 5.0));
        assert!(n(0.8, 5.0, w[1]) >= n(0.8, 5.0, w[0]));
    }
}

#[test]
fn single_variance_formula_is_conservative() {
    for (s2e, s2c) in [(10.0, 12.0), (3.0, 20.0), (8.0, 8.0), (15.2, 13.6)] {
        for ratio in [0.5, 1.0, 2.0, 3.0] {
            let exact = (1.0 + ratio) * n_control_raw(0.9, s2e, s2c, ratio, 0.05, 0.8).unwrap();
            let approx = sample_size_rmtld_approx_raw(0.9, f64::max(s2e, s2c), ratio, 0.05, 0.8).unwrap();
            assert!(approx >= exact * (1.0 - 1e-12), "ratio {ratio}: {approx} < {exact}");
        }
    }
}

#[test]
fn equal_allocation_minimises_the_single_variance_size() {
    let at = |r: f64| sample_size_rmtld_approx_raw(1.0, 4.0, r, 0.05, 0.8).unwrap();
    let best = at(1.0);
    for r in [0.25, 0.5, 0.8, 0.95, 1.05, 1.25, 2.0, 4.0] {
        assert!(at(r) > best, "r = {r}");
    }
}

#[test]
fn pilot_sizing_is_close_to_the_phi_corrected_answer() {
    let (e, c) = exponential();
    let d = design(10.0, 10.0, 10.0);
    let target = sample_size_rmtld_weibull(&e, &c, &d, Cause::Interest, &PhiOptions::default()).unwrap().n_total;
    let wu = sample_size_rmtld_wu_simulated(&e, &c, &d, Cause::Interest, 500, 7).unwrap().n_total;
    let rel = (wu as f64 - target as f64).abs() / target as f64;
    assert!(rel <= 0.10, "pilot {wu} vs {target}");
}

#[test]
fn shr_is_constant_under_proportional_subdistribution_hazards() {
    // with a negligible competing hazard the subdistribution hazard is the
    // Weibull hazard, so the ratio is (ρ_E/ρ_C)^k at every t
    let e = CompetingRisksModel::weibull(1.5, 0.12, 1.0, 1e-9).unwrap();
    let c = CompetingRisksModel::weibull(1.5, 0.1, 1.0, 1e-9).unwrap();
    let curve = shr_curve(&e, &c, Cause::Interest, &[1.0, 5.0, 10.0, 20.0]).unwrap();
    for (_, shr) in curve {
        assert!((shr - 1.2f64.powf(1.5)).abs() < 1e-6, "{shr}");
    }
}

#[test]
fn calibrated_loss_hits_the_target_in_expectation() {
    let (e, c) = exponential();
    let d = design(10.0, 10.0, 10.0);
    let loss = calibrate_loss(&e, &c, &d, 0.3).unwrap();
    let got = rmtld::design::pooled_censored(&e, &c, &d, &loss).unwrap();
    assert!((got - 0.3).abs() < 1e-8);
}
