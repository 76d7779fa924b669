//! Sample-size calculation for two-arm trials compared on the RMTL difference,
//! with the HR and SHR event-driven comparators and the analytic power curve.
//!
//! Censoring before τ inflates the standard error of μ̂_j(τ) beyond RSD/√n.
//! The inflation factor φ is estimated per arm from one large simulated
//! sample under the full design, and the arm variance is then (φ·RSD)².

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{EventTable, SurvivalRecord};
use crate::models::{Cause, CompetingRisksModel};
use crate::numerics::{derive_seed, find_root, normal_cdf, normal_quantile, RngStream, ToleranceConfig};
use crate::simulation::sample_subject;

/// Loss to follow-up, measured from entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossModel {
    #[default]
    None,
    /// Loss time ~ Uniform(0, θ).
    Uniform { theta: f64 },
}

impl LossModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossModel::None => Ok(()),
            LossModel::Uniform { theta } if theta > 0.0 && theta.is_finite() => Ok(()),
            LossModel::Uniform { theta } => {
                Err(Error::Input(format!("loss theta must be positive and finite, got {theta}")))
            }
        }
    }

    /// P(loss time > t).
    pub fn survival(&self, t: f64) -> f64 {
        match *self {
            LossModel::None => 1.0,
            LossModel::Uniform { theta } => (1.0 - t / theta).clamp(0.0, 1.0),
        }
    }
}

/// Accrual, follow-up and testing parameters of a two-arm trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialDesign {
    /// Accrual period t_a (uniform entry over [0, t_a]).
    pub accrual: f64,
    /// Follow-up after the end of accrual, t_f.
    pub followup: f64,
    pub tau: f64,
    /// Allocation ratio n_E / n_C.
    #[serde(default = "one")]
    pub ratio: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default)]
    pub loss: LossModel,
}

fn one() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.05
}
fn default_power() -> f64 {
    0.8
}

impl TrialDesign {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, v: f64, rule: &str| Err(Error::Input(format!("{field} must be {rule}, got {v}")));
        if !(self.accrual >= 0.0 && self.accrual.is_finite()) {
            return bad("accrual", self.accrual, ">= 0");
        }
        if !(self.followup > 0.0 && self.followup.is_finite()) {
            return bad("followup", self.followup, "> 0");
        }
        if !(self.tau > 0.0) {
            return bad("tau", self.tau, "> 0");
        }
        if self.tau > self.total_duration() {
            return Err(Error::Restriction { tau: self.tau, bound: self.total_duration() });
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return bad("ratio", self.ratio, "> 0");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", self.alpha, "in (0, 1)");
        }
        if !(self.power > 0.0 && self.power < 1.0) {
            return bad("power", self.power, "in (0, 1)");
        }
        self.loss.validate()
    }

    pub fn total_duration(&self) -> f64 {
        self.accrual + self.followup
    }

    /// No subject can be censored before τ.
    pub fn uncensored_before_tau(&self) -> bool {
        self.loss == LossModel::None && self.followup >= self.tau
    }

    /// (z_{1-α/2} + z_{1-β})².
    pub fn z_squared(&self) -> Result<f64> {
        z_squared(self.alpha, self.power)
    }

    /// Weight of the experimental arm in pooled quantities, r / (1 + r).
    fn weight_e(&self) -> f64 {
        self.ratio / (1.0 + self.ratio)
    }
}

fn z_squared(alpha: f64, power: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0) {
        return Err(Error::Domain(format!("alpha and power must lie in (0, 1), got {alpha}, {power}")));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)? + normal_quantile(power)?;
    Ok(z * z)
}

/// P(administrative censoring time > t) under uniform entry over [0, t_a]
/// and study end at t_a + t_f.
pub fn admin_censoring_survival(design: &TrialDesign, t: f64) -> f64 {
    let end = design.total_duration();
    if t <= design.followup {
        1.0
    } else if t >= end {
        0.0
    } else {
        (end - t) / design.accrual
    }
}

fn censoring_survival(design: &TrialDesign, loss: &LossModel, t: f64) -> f64 {
    loss.survival(t) * admin_censoring_survival(design, t)
}

fn censoring_breaks(design: &TrialDesign, loss: &LossModel) -> Vec<f64> {
    let mut b = vec![design.followup, design.total_duration()];
    if let LossModel::Uniform { theta } = *loss {
        b.push(theta);
    }
    b
}

/// Probability of observing an event of `cause` by `tau` under the design's
/// censoring.
pub fn observe_prob_event(model: &CompetingRisksModel, design: &TrialDesign, cause: Cause, tau: f64) -> Result<f64> {
    observe_prob_with_loss(model, design, &design.loss, cause, tau)
}

fn observe_prob_with_loss(
    model: &CompetingRisksModel,
    design: &TrialDesign,
    loss: &LossModel,
    cause: Cause,
    tau: f64,
) -> Result<f64> {
    let breaks = censoring_breaks(design, loss);
    model.integrate_subdensity(
        cause,
        0.0,
        tau,
        |t| censoring_survival(design, loss, t),
        &breaks,
        &ToleranceConfig::default(),
    )
}

/// Expected fraction of one arm censored before any event is observed.
pub fn censored_proportion(model: &CompetingRisksModel, design: &TrialDesign, loss: &LossModel) -> Result<f64> {
    let end = design.total_duration();
    let observed = observe_prob_with_loss(model, design, loss, Cause::Interest, end)?
        + observe_prob_with_loss(model, design, loss, Cause::Competing, end)?;
    Ok((1.0 - observed).clamp(0.0, 1.0))
}

/// Censored proportion pooled over arms with weights r/(1+r) and 1/(1+r).
pub fn pooled_censored(e: &CompetingRisksModel, c: &CompetingRisksModel, design: &TrialDesign, loss: &LossModel) -> Result<f64> {
    let w = design.weight_e();
    Ok(w * censored_proportion(e, design, loss)? + (1.0 - w) * censored_proportion(c, design, loss)?)
}

/// Uniform loss window θ giving a pooled censored proportion of `target`.
///
/// A target equal to the administrative-only proportion returns
/// [`LossModel::None`]; a smaller one is infeasible.
pub fn calibrate_loss(
    model_e: &CompetingRisksModel,
    model_c: &CompetingRisksModel,
    design: &TrialDesign,
    target: f64,
) -> Result<LossModel> {
    if !(target >= 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("censoring target must lie in [0, 1), got {target}")));
    }
    let floor = pooled_censored(model_e, model_c, design, &LossModel::None)?;
    if target < floor - 1e-9 {
        return Err(Error::InfeasibleTarget { target, floor });
    }
    if target <= floor + 1e-9 {
        return Ok(LossModel::None);
    }
    // Solve in η = 1/θ, over which the censored fraction rises from the
    // floor (η = 0) towards one.
    let excess = |eta: f64| -> f64 {
        let loss = if eta > 0.0 { LossModel::Uniform { theta: 1.0 / eta } } else { LossModel::None };
        pooled_censored(model_e, model_c, design, &loss).map_or(f64::NAN, |p| p - target)
    };
    let mut hi = 1.0 / design.total_duration();
    let mut tries = 0;
    while excess(hi) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Convergence { routine: "calibrate_loss bracket", max_iter: 60 });
        }
    }
    let cfg = ToleranceConfig { root_tol: 1e-10, ..Default::default() };
    let eta = find_root(excess, 0.0, hi, &cfg)?;
    Ok(LossModel::Uniform { theta: 1.0 / eta })
}

/// Controls for the Monte-Carlo estimate of φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiOptions {
    /// Subjects per simulated sample.
    pub samples: usize,
    pub seed: u64,
    /// Independent samples averaged into φ.
    #[serde(default = "one_usize")]
    pub replicates: usize,
    /// Simulate even when nothing can be censored before τ (φ = 1 exactly).
    #[serde(default)]
    pub always_simulate: bool,
}

fn one_usize() -> usize {
    1
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions { samples: 100_000, seed: 20_240_601, replicates: 1, always_simulate: false }
    }
}

const PHI_CHUNK: usize = 8192;

/// One arm of `m` subjects simulated under the design. Subjects are drawn in
/// fixed chunks, each from its own substream, so the output does not depend
/// on the number of worker threads.
pub fn simulate_arm(model: &CompetingRisksModel, design: &TrialDesign, m: usize, seed: u64) -> Vec<SurvivalRecord> {
    let chunks = m.div_ceil(PHI_CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = RngStream::new(seed, c as u64);
            let len = PHI_CHUNK.min(m - c * PHI_CHUNK);
            (0..len).map(move |_| sample_subject(model, design, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// φ = √m · SE(μ̂_j(τ)) / RSD_j(τ) from a simulated sample of size `m`.
pub fn estimate_phi(
    model: &CompetingRisksModel,
    design: &TrialDesign,
    cause: Cause,
    tau: f64,
    m: usize,
    seed: u64,
) -> Result<f64> {
    if m < 10_000 {
        return Err(Error::Input(format!("phi needs at least 10000 simulated subjects, got {m}")));
    }
    let rsd = true_variance(model, cause, tau)?.sqrt();
    if !(rsd > 0.0) {
        return Err(Error::Degenerate("restricted time lost has zero variance".into()));
    }
    let sample = simulate_arm(model, design, m, seed);
    let table = EventTable::new(&sample)?;
    if table.rows.iter().take_while(|r| r.time <= tau).all(|r| r.events(cause) == 0) {
        return Err(Error::Degenerate("no events of the requested cause before tau".into()));
    }
    table.check_tau(tau)?;
    let se = table.rmtl_se_martingale(cause, tau)?;
    Ok((m as f64).sqrt() * se / rsd)
}

/// σ²_corrected = φ² σ_j²(τ).
pub fn corrected_variance(phi: f64, model: &CompetingRisksModel, cause: Cause, tau: f64) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(Error::Domain(format!("phi must be positive, got {phi}")));
    }
    Ok(phi * phi * true_variance(model, cause, tau)?)
}

/// μ_j(τ), by closed form when both causes share a Weibull shape.
pub fn true_rmtl(model: &CompetingRisksModel, cause: Cause, tau: f64) -> Result<f64> {
    match model.common_weibull_shape() {
        Some(_) => model.rmtl_closed(cause, tau),
        None => model.rmtl(cause, tau),
    }
}

/// σ_j²(τ), by closed form when both causes share a Weibull shape.
pub fn true_variance(model: &CompetingRisksModel, cause: Cause, tau: f64) -> Result<f64> {
    match model.common_weibull_shape() {
        Some(_) => model.rtl_variance_closed(cause, tau),
        None => model.rtl_variance(cause, tau),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RmtldWeibull,
    RmtldApprox,
    RmtldWu,
    Hr,
    Shr,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Hr, Method::Shr, Method::RmtldWeibull, Method::RmtldApprox, Method::RmtldWu];

    pub fn name(self) -> &'static str {
        match self {
            Method::RmtldWeibull => "rmtld_weibull",
            Method::RmtldApprox => "rmtld_approx",
            Method::RmtldWu => "rmtld_wu",
            Method::Hr => "hr",
            Method::Shr => "shr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown method `{s}`")))
    }
}

/// A required sample size with the quantities that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSizeResult {
    pub method: Method,
    pub n_total: usize,
    pub n_e: usize,
    pub n_c: usize,
    pub delta: Option<f64>,
    pub phi_e: Option<f64>,
    pub phi_c: Option<f64>,
    pub sigma2_e_corrected: Option<f64>,
    pub sigma2_c_corrected: Option<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SampleSizeResult {
    fn new(method: Method, n_c: usize, ratio: f64) -> Self {
        let n_e = ceil_count(ratio * n_c as f64);
        SampleSizeResult {
            method,
            n_total: n_e + n_c,
            n_e,
            n_c,
            delta: None,
            phi_e: None,
            phi_c: None,
            sigma2_e_corrected: None,
            sigma2_c_corrected: None,
            diagnostics: BTreeMap::new(),
        }
    }

    fn note(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.to_string(), value);
    }
}

/// Round up, ignoring float noise just above an integer.
fn ceil_count(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() < 1e-9 * r.max(1.0) { r as usize } else { x.ceil() as usize }
}

fn check_delta(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta.abs() < 1e-12 {
        return Err(Error::UndefinedEffect(format!("RMTL difference is {delta}")));
    }
    Ok(())
}

/// Control-arm size n_C = (z_{1-α/2} + z_{1-β})² (σ²_C + σ²_E / r) / Δ², unrounded.
pub fn n_control_raw(delta: f64, sigma2_e: f64, sigma2_c: f64, ratio: f64, alpha: f64, power: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(sigma2_e >= 0.0 && sigma2_c >= 0.0) || !(ratio > 0.0) {
        return Err(Error::Domain("variances must be >= 0 and the ratio > 0".into()));
    }
    Ok(z_squared(alpha, power)? * (sigma2_c + sigma2_e / ratio) / (delta * delta))
}

/// RMTLd sample size from per-arm variances, rounded up per arm.
pub fn sample_size_from_variances(
    method: Method,
    delta: f64,
    sigma2_e: f64,
    sigma2_c: f64,
    ratio: f64,
    alpha: f64,
    power: f64,
) -> Result<SampleSizeResult> {
    let raw = n_control_raw(delta, sigma2_e, sigma2_c, ratio, alpha, power)?;
    let mut out = SampleSizeResult::new(method, ceil_count(raw), ratio);
    out.delta = Some(delta);
    out.sigma2_e_corrected = Some(sigma2_e);
    out.sigma2_c_corrected = Some(sigma2_c);
    out.note("n_c_raw", raw);
    out.note("n_total_raw", raw * (1.0 + ratio));
    out.note("power_at_n", analytic_power(delta, sigma2_e, sigma2_c, out.n_e, out.n_c, alpha));
    Ok(out)
}

/// Sample size from the arm models, with Monte-Carlo φ correction.
///
/// When no subject can be censored before τ the identity SE = RSD/√m holds
/// exactly, so φ = 1 is used without simulating (unless
/// `phi.always_simulate` is set).
pub fn sample_size_rmtld_weibull(
    model_e: &CompetingRisksModel,
    model_c: &CompetingRisksModel,
    design: &TrialDesign,
    cause: Cause,
    phi: &PhiOptions,
) -> Result<SampleSizeResult> {
    design.validate()?;
    let tau = design.tau;
    let mu_e = true_rmtl(model_e, cause, tau)?;
    let mu_c = true_rmtl(model_c, cause, tau)?;
    let delta = mu_e - mu_c;
    check_delta(delta)?;
    let var_e = true_variance(model_e, cause, tau)?;
    let var_c = true_variance(model_c, cause, tau)?;

    let analytic = design.uncensored_before_tau() && !phi.always_simulate;
    let arm_phi = |model: &CompetingRisksModel, tag: u64| -> Result<f64> {
        if analytic {
            return Ok(1.0);
        }
        if phi.replicates == 0 {
            return Err(Error::Input("phi replicates must be at least 1".into()));
        }
        let mut total = 0.0;
        for rep in 0..phi.replicates {
            let seed = derive_seed(derive_seed(phi.seed, tag), rep as u64);
            total += estimate_phi(model, design, cause, tau, phi.samples, seed)?;
        }
        Ok(total / phi.replicates as f64)
    };
    let phi_e = arm_phi(model_e, 1)?;
    let phi_c = arm_phi(model_c, 2)?;
    let s2e = phi_e * phi_e * var_e;
    let s2c = phi_c * phi_c * var_c;

    let mut out = sample_size_from_variances(
        Method::RmtldWeibull,
        delta,
        s2e,
        s2c,
        design.ratio,
        design.alpha,
        design.power,
    )?;
    out.phi_e = Some(phi_e);
    out.phi_c = Some(phi_c);
    out.note("mu_e", mu_e);
    out.note("mu_c", mu_c);
    out.note("sigma2_e", var_e);
    out.note("sigma2_c", var_c);
    out.note("phi_analytic", if analytic { 1.0 } else { 0.0 });
    out.note("phi_samples", if analytic { 0.0 } else { phi.samples as f64 });
    Ok(out)
}

/// Single-variance approximation n = (1 + r)(1 + 1/r)(z_{1-α/2} + z_{1-β})² σ² / Δ².
pub fn sample_size_rmtld_approx(delta: f64, sigma2: f64, ratio: f64, alpha: f64, power: f64) -> Result<usize> {
    Ok(ceil_count(sample_size_rmtld_approx_raw(delta, sigma2, ratio, alpha, power)?))
}

pub fn sample_size_rmtld_approx_raw(delta: f64, sigma2: f64, ratio: f64, alpha: f64, power: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(sigma2 >= 0.0) || !(ratio > 0.0) {
        return Err(Error::Domain("variance must be >= 0 and the ratio > 0".into()));
    }
    Ok((1.0 + ratio) * (1.0 + 1.0 / ratio) * z_squared(alpha, power)? * sigma2 / (delta * delta))
}

/// [`sample_size_rmtld_approx`] as a result split into arms.
pub fn sample_size_rmtld_approx_result(
    delta: f64,
    sigma2: f64,
    design: &TrialDesign,
) -> Result<SampleSizeResult> {
    let raw = sample_size_rmtld_approx_raw(delta, sigma2, design.ratio, design.alpha, design.power)?;
    let n_total = ceil_count(raw);
    let mut out = SampleSizeResult::new(Method::RmtldApprox, ceil_count(n_total as f64 / (1.0 + design.ratio)), design.ratio);
    out.delta = Some(delta);
    out.note("n_total_raw", raw);
    out.note("n_total_formula", n_total as f64);
    out.note("sigma2", sigma2);
    Ok(out)
}

/// Variance information from one pilot arm: the variance of μ̂ and the pilot size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotArm {
    pub var_estimate: f64,
    pub n: usize,
}

impl PilotArm {
    /// σ² = n* · Var*(μ̂).
    pub fn sigma2(&self) -> Result<f64> {
        if !(self.var_estimate > 0.0) || self.n == 0 {
            return Err(Error::Input(format!(
                "pilot variance and size must be positive, got {} and {}",
                self.var_estimate, self.n
            )));
        }
        Ok(self.n as f64 * self.var_estimate)
    }
}

/// Where the second arm's variance comes from when sizing from pilot data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CounterpartVariance {
    /// Both arms take the pilot arm's σ².
    SameAsPilot,
    /// The control arm has its own pilot.
    Pilot(PilotArm),
}

/// Sample size with arm variances σ² = n*·Var*(μ̂) taken from pilot data.
pub fn sample_size_rmtld_wu(
    pilot_e: PilotArm,
    counterpart: CounterpartVariance,
    delta: f64,
    ratio: f64,
    alpha: f64,
    power: f64,
) -> Result<SampleSizeResult> {
    let s2e = pilot_e.sigma2()?;
    let s2c = match counterpart {
        CounterpartVariance::SameAsPilot => s2e,
        CounterpartVariance::Pilot(p) => p.sigma2()?,
    };
    let mut out = sample_size_from_variances(Method::RmtldWu, delta, s2e, s2c, ratio, alpha, power)?;
    out.note("pilot_n_e", pilot_e.n as f64);
    Ok(out)
}

/// Pilot-based sizing with pilots of `pilot_n` subjects per arm simulated
/// under the design; Δ is taken from the models.
pub fn sample_size_rmtld_wu_simulated(
    model_e: &CompetingRisksModel,
    model_c: &CompetingRisksModel,
    design: &TrialDesign,
    cause: Cause,
    pilot_n: usize,
    seed: u64,
) -> Result<SampleSizeResult> {
    design.validate()?;
    let tau = design.tau;
    let delta = true_rmtl(model_e, cause, tau)? - true_rmtl(model_c, cause, tau)?;
    check_delta(delta)?;
    let pilot = |model: &CompetingRisksModel, tag: u64| -> Result<PilotArm> {
        let data = simulate_arm(model, design, pilot_n, derive_seed(seed, tag));
        let table = EventTable::new(&data)?;
        let se = table.rmtl_se_martingale(cause, tau)?;
        Ok(PilotArm { var_estimate: se * se, n: pilot_n })
    };
    let pe = pilot(model_e, 11)?;
    let pc = pilot(model_c, 12)?;
    sample_size_rmtld_wu(pe, CounterpartVariance::Pilot(pc), delta, design.ratio, design.alpha, design.power)
}

/// Required events and subjects for a log-rank-type comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventDrivenSize {
    pub events: usize,
    pub events_raw: f64,
    pub n: usize,
}

/// d = (1 + r)² (z_{1-α/2} + z_{1-β})² / (r (ln effect)²), n = d / p.
fn event_driven(effect: f64, p_event: f64, ratio: f64, alpha: f64, power: f64) -> Result<EventDrivenSize> {
    if !(effect > 0.0 && effect.is_finite()) {
        return Err(Error::Domain(format!("hazard ratio must be positive, got {effect}")));
    }
    if (effect - 1.0).abs() < 1e-12 {
        return Err(Error::UndefinedEffect(format!("hazard ratio is {effect}")));
    }
    if !(p_event > 0.0 && p_event <= 1.0) {
        return Err(Error::Domain(format!("event probability must lie in (0, 1], got {p_event}")));
    }
    if !(ratio > 0.0) {
        return Err(Error::Domain(format!("ratio must be positive, got {ratio}")));
    }
    let ln = effect.ln();
    let raw = (1.0 + ratio).powi(2) * z_squared(alpha, power)? / (ratio * ln * ln);
    let events = ceil_count(raw);
    Ok(EventDrivenSize { events, events_raw: raw, n: ceil_count(events as f64 / p_event) })
}

/// Cause-specific hazard ratio design (other cause treated as censoring).
pub fn sample_size_hr(hr: f64, p_event: f64, ratio: f64, alpha: f64, power: f64) -> Result<EventDrivenSize> {
    event_driven(hr, p_event, ratio, alpha, power)
}

/// Subdistribution hazard ratio design; `p_event` is the probability of
/// observing the event of interest.
pub fn sample_size_shr(shr: f64, p_event: f64, ratio: f64, alpha: f64, power: f64) -> Result<EventDrivenSize> {
    event_driven(shr, p_event, ratio, alpha, power)
}

impl EventDrivenSize {
    pub fn into_result(self, method: Method, effect: f64, p_event: f64, ratio: f64) -> SampleSizeResult {
        let mut out = SampleSizeResult::new(method, ceil_count(self.n as f64 / (1.0 + ratio)), ratio);
        out.note("effect", effect);
        out.note("p_event", p_event);
        out.note("events", self.events as f64);
        out.note("events_raw", self.events_raw);
        out.note("n_formula", self.n as f64);
        out
    }
}

/// Pooled probability of observing the event of interest by τ.
pub fn pooled_event_probability(
    model_e: &CompetingRisksModel,
    model_c: &CompetingRisksModel,
    design: &TrialDesign,
    cause: Cause,
) -> Result<f64> {
    let w = design.weight_e();
    Ok(w * observe_prob_event(model_e, design, cause, design.tau)?
        + (1.0 - w) * observe_prob_event(model_c, design, cause, design.tau)?)
}

/// Which hazard a model-implied ratio refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HazardScale {
    CauseSpecific,
    Subdistribution,
}

/// Model-implied hazard ratio E/C over [0, τ]: the exponentiated average of
/// the log ratio, weighted by the pooled density of events of `cause`.
pub fn average_hazard_ratio(
    model_e: &CompetingRisksModel,
    model_c: &CompetingRisksModel,
    cause: Cause,
    tau: f64,
    scale: HazardScale,
) -> Result<f64> {
    let cfg = ToleranceConfig::default();
    let log_ratio = |t: f64| -> f64 {
        let h = |m: &CompetingRisksModel| match scale {
            HazardScale::CauseSpecific => m.hazard(cause, t),
            HazardScale::Subdistribution => m.subdistribution_hazard(cause, t),
        };
        match (h(model_e), h(model_c)) {
            (Ok(a), Ok(b)) if a > 0.0 && b > 0.0 => (a / b).ln(),
            _ => 0.0,
        }
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for m in [model_e, model_c] {
        num += m.integrate_subdensity(cause, 0.0, tau, log_ratio, &[], &cfg)?;
        den += m.cif_with(cause, tau, &cfg)?;
    }
    if !(den > 0.0) {
        return Err(Error::Degenerate("no events of the requested cause before tau".into()));
    }
    Ok((num / den).exp())
}

/// SHR(t) = subdistribution hazard of E over that of C, on `grid`.
pub fn shr_curve(
    model_e: &CompetingRisksModel,
    model_c: &CompetingRisksModel,
    cause: Cause,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&t| {
            let a = model_e.subdistribution_hazard(cause, t)?;
            let b = model_c.subdistribution_hazard(cause, t)?;
            Ok((t, a / b))
        })
        .collect()
}

/// Power of the two-sided RMTLd Z test, Φ(|Δ| / √(σ²_E/n_E + σ²_C/n_C) − z_{1-α/2}).
pub fn analytic_power(delta: f64, sigma2_e: f64, sigma2_c: f64, n_e: usize, n_c: usize, alpha: f64) -> f64 {
    let se = (sigma2_e / n_e as f64 + sigma2_c / n_c as f64).sqrt();
    let z = normal_quantile(1.0 - alpha / 2.0).unwrap_or(f64::NAN);
    if se == 0.0 {
        return if delta == 0.0 { normal_cdf(-z) } else { 1.0 };
    }
    normal_cdf(delta.abs() / se - z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exp_design(tau: f64) -> TrialDesign {
        TrialDesign { accrual: 18.0, followup: 28.0, tau, ratio: 1.0, alpha: 0.05, power: 0.8, loss: LossModel::None }
    }

    #[test]
    fn admin_censoring_profile() {
        let d = exp_design(15.0);
        assert_eq!(admin_censoring_survival(&d, 28.0), 1.0);
        assert_eq!(admin_censoring_survival(&d, 46.0), 0.0);
        assert_abs_diff_eq!(admin_censoring_survival(&d, 37.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn observed_event_probability_without_early_censoring_is_the_cif() {
        let m = CompetingRisksModel::weibull(1.0, 0.1, 1.0, 0.1).unwrap();
        let p = observe_prob_event(&m, &exp_design(10.0), Cause::Interest, 10.0).unwrap();
        assert_abs_diff_eq!(p, 0.4323323583816937, epsilon = 1e-10);
        let far = TrialDesign { loss: LossModel::Uniform { theta: 1e9 }, ..exp_design(10.0) };
        assert_abs_diff_eq!(observe_prob_event(&m, &far, Cause::Interest, 10.0).unwrap(), p, epsilon = 1e-7);
    }

    #[test]
    fn exponential_pipeline_matches_hand_arithmetic() {
        let c = CompetingRisksModel::weibull(1.0, 0.1, 1.0, 0.1).unwrap();
        let e = CompetingRisksModel::weibull(1.0, 0.15, 1.0, 0.1).unwrap();
        let d = TrialDesign { followup: 10.0, ..exp_design(10.0) };
        let r = sample_size_rmtld_weibull(&e, &c, &d, Cause::Interest, &PhiOptions::default()).unwrap();
        assert_abs_diff_eq!(r.delta.unwrap(), 0.958665788605825, epsilon = 1e-9);
        assert_abs_diff_eq!(r.sigma2_c_corrected.unwrap(), 13.560454135572435, epsilon = 1e-8);
        assert_abs_diff_eq!(r.sigma2_e_corrected.unwrap(), 15.20672867548544, epsilon = 1e-8);
        assert_eq!((r.n_c, r.n_e, r.n_total), (246, 246, 492));
        let swapped = sample_size_rmtld_weibull(&c, &e, &d, Cause::Interest, &PhiOptions::default()).unwrap();
        assert_eq!(swapped.n_total, 492);
    }

    #[test]
    fn approximate_formula() {
        assert_eq!(sample_size_rmtld_approx(1.0, 4.0, 1.0, 0.05, 0.8).unwrap(), 126);
        let a = sample_size_rmtld_approx_raw(1.0, 4.0, 1.0, 0.05, 0.8).unwrap();
        let b = sample_size_rmtld_approx_raw(1.0, 4.0, 4.0, 0.05, 0.8).unwrap();
        assert_abs_diff_eq!(b / a, 25.0 / 16.0, epsilon = 1e-12);
        assert!(matches!(sample_size_rmtld_approx(0.0, 4.0, 1.0, 0.05, 0.8), Err(Error::UndefinedEffect(_))));
    }

    #[test]
    fn event_driven_comparators() {
        let hr = sample_size_hr(0.7, 0.5, 1.0, 0.05, 0.8).unwrap();
        assert_eq!((hr.events, hr.n), (247, 494));
        let shr = sample_size_shr(0.75, 0.4, 1.0, 0.05, 0.8).unwrap();
        assert_eq!((shr.events, shr.n), (380, 950));
        assert!(matches!(sample_size_hr(1.0, 0.5, 1.0, 0.05, 0.8), Err(Error::UndefinedEffect(_))));
    }

    #[test]
    fn analytic_power_values() {
        assert_abs_diff_eq!(analytic_power(0.0, 1.0, 1.0, 10, 10, 0.05), 0.025, epsilon = 1e-6);
        // Δ/SE = 2.80158 with SE = 1
        assert_abs_diff_eq!(analytic_power(2.80158, 50.0, 50.0, 100, 100, 0.05), 0.8, epsilon = 1e-4);
        assert!(analytic_power(0.1, 1.0, 1.0, 10_000_000, 10_000_000, 0.05) > 0.9999);
    }

    #[test]
    fn corrected_variance_scales_with_phi() {
        let m = CompetingRisksModel::weibull(1.0, 0.1, 1.0, 0.1).unwrap();
        let v = true_variance(&m, Cause::Interest, 10.0).unwrap();
        assert_abs_diff_eq!(corrected_variance(1.0, &m, Cause::Interest, 10.0).unwrap(), v, epsilon = 1e-12);
        assert_abs_diff_eq!(corrected_variance(1.2, &m, Cause::Interest, 10.0).unwrap(), 1.44 * v, epsilon = 1e-12);
    }

    #[test]
    fn calibration_floor_and_monotonicity() {
        let m = CompetingRisksModel::weibull(1.0, 0.05, 1.0, 0.03).unwrap();
        let d = exp_design(15.0);
        let floor = pooled_censored(&m, &m, &d, &LossModel::None).unwrap();
        assert_eq!(calibrate_loss(&m, &m, &d, floor).unwrap(), LossModel::None);
        match calibrate_loss(&m, &m, &d, floor - 0.05) {
            Err(Error::InfeasibleTarget { floor: f, .. }) => assert_abs_diff_eq!(f, floor, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
        let theta = |target: f64| match calibrate_loss(&m, &m, &d, target).unwrap() {
            LossModel::Uniform { theta } => theta,
            LossModel::None => f64::INFINITY,
        };
        let (a, b) = (theta(floor + 0.05), theta(floor + 0.15));
        assert!(b < a, "{a} {b}");
        let loss = calibrate_loss(&m, &m, &d, floor + 0.15).unwrap();
        assert_abs_diff_eq!(pooled_censored(&m, &m, &d, &loss).unwrap(), floor + 0.15, epsilon = 1e-6);
    }

    #[test]
    fn phi_needs_follow_up_beyond_tau() {
        let m = CompetingRisksModel::weibull(1.0, 0.1, 1.0, 0.1).unwrap();
        let d = TrialDesign { loss: LossModel::Uniform { theta: 8.0 }, followup: 10.0, ..exp_design(10.0) };
        let err = estimate_phi(&m, &d, Cause::Interest, 10.0, 10_000, 1).unwrap_err();
        assert!(matches!(err, Error::Restriction { .. }), "{err}");
    }

    #[test]
    fn design_validation_names_fields() {
        let bad = TrialDesign { alpha: 1.5, ..exp_design(10.0) };
        assert!(bad.validate().unwrap_err().to_string().contains("alpha"));
        let late = exp_design(50.0);
        assert!(matches!(late.validate(), Err(Error::Restriction { .. })));
    }
}
