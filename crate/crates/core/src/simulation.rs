//! Trial simulation under uniform accrual, uniform loss to follow-up and
//! administrative censoring, and Monte-Carlo power of the three tests.
//!
//! Replicate `i` of a power run always draws from substream `i` of a seed
//! derived from the scenario seed, so counts do not depend on how many
//! worker threads share the work.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{
    average_hazard_ratio, calibrate_loss, pooled_event_probability, sample_size_hr, sample_size_rmtld_weibull,
    sample_size_rmtld_wu_simulated, sample_size_shr, HazardScale, LossModel, Method, PhiOptions, SampleSizeResult,
    TrialDesign,
};
use crate::error::{Error, Result};
use crate::estimation::{Status, SurvivalRecord};
use crate::hypothesis::{gray_test, logrank_test, rmtld_test, TestKind, TestResult};
use crate::models::{Cause, CompetingRisksModel};
use crate::numerics::{derive_seed, RngStream};

/// One subject: uniform entry, latent event, administrative and loss
/// censoring. A tie between event and censoring goes to the event.
pub fn sample_subject(model: &CompetingRisksModel, design: &TrialDesign, rng: &mut RngStream) -> SurvivalRecord {
    let entry = design.accrual * rng.uniform();
    let (t, cause) = model.sample_event(rng);
    let admin = design.total_duration() - entry;
    let loss = match design.loss {
        LossModel::None => f64::INFINITY,
        LossModel::Uniform { theta } => theta * rng.uniform(),
    };
    let censor = admin.min(loss);
    if t <= censor {
        SurvivalRecord::event(t, cause)
    } else {
        SurvivalRecord::censored(censor)
    }
}

/// How each simulated replicate chooses its analysis τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// The design τ in every replicate.
    #[default]
    Fixed,
    /// The smaller of the two arms' largest observed times.
    MinMax,
}

/// A simulation scenario: arm models, design and Monte-Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub model_e: CompetingRisksModel,
    pub model_c: CompetingRisksModel,
    pub design: TrialDesign,
    /// Overall censored proportion to calibrate the loss model to; replaces
    /// `design.loss` when set.
    #[serde(default)]
    pub censoring_target: Option<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cause")]
    pub cause: Cause,
    /// Design hazard ratios; derived from the models when absent.
    #[serde(default)]
    pub hr: Option<f64>,
    #[serde(default)]
    pub shr: Option<f64>,
    #[serde(default)]
    pub tau_rule: TauRule,
    #[serde(default = "default_phi_samples")]
    pub phi_samples: usize,
    #[serde(default = "default_pilot")]
    pub pilot_size: usize,
}

fn default_iterations() -> usize {
    1000
}
fn default_cause() -> Cause {
    Cause::Interest
}
fn default_phi_samples() -> usize {
    100_000
}
fn default_pilot() -> usize {
    500
}

pub const MIN_POWER_ITERATIONS: usize = 100;

const TAG_PHI: u64 = 1;
const TAG_PILOT: u64 = 2;
const TAG_POWER: u64 = 3;

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.model_e.validate()?;
        self.model_c.validate()?;
        self.design.validate()?;
        if self.iterations == 0 {
            return Err(Error::Input("iterations must be at least 1".into()));
        }
        if let Some(t) = self.censoring_target {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::Input(format!("censoring_target must lie in [0, 1), got {t}")));
            }
        }
        for (name, v) in [("hr", self.hr), ("shr", self.shr)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Input(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Copy with `design.loss` calibrated to `censoring_target`, if any.
    pub fn resolved(&self) -> Result<ScenarioConfig> {
        self.validate()?;
        let mut out = self.clone();
        if let Some(target) = self.censoring_target {
            out.design.loss = calibrate_loss(&self.model_e, &self.model_c, &self.design, target)?;
        }
        Ok(out)
    }

    pub fn phi_options(&self) -> PhiOptions {
        PhiOptions { samples: self.phi_samples, seed: derive_seed(self.seed, TAG_PHI), ..PhiOptions::default() }
    }

    pub fn with_design(&self, design: TrialDesign) -> ScenarioConfig {
        ScenarioConfig { design, ..self.clone() }
    }
}

/// Simulated experimental and control arms.
pub fn generate_trial(
    scenario: &ScenarioConfig,
    n_e: usize,
    n_c: usize,
    rng: &mut RngStream,
) -> (Vec<SurvivalRecord>, Vec<SurvivalRecord>) {
    let d = &scenario.design;
    let e = (0..n_e).map(|_| sample_subject(&scenario.model_e, d, rng)).collect();
    let c = (0..n_c).map(|_| sample_subject(&scenario.model_c, d, rng)).collect();
    (e, c)
}

/// Censor every record at `tau`.
pub fn truncate_at(data: &[SurvivalRecord], tau: f64) -> Vec<SurvivalRecord> {
    data.iter()
        .map(|r| if r.time > tau { SurvivalRecord::new(tau, Status::Censored) } else { *r })
        .collect()
}

/// Rejections of one test over a power run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestPower {
    pub test: TestKind,
    pub rejections: usize,
    /// Replicates where the test could not be computed; counted as non-rejections.
    pub failures: usize,
    pub iterations: usize,
    pub power: f64,
    pub mc_se: f64,
}

impl TestPower {
    fn new(test: TestKind, rejections: usize, failures: usize, iterations: usize) -> Self {
        let p = rejections as f64 / iterations as f64;
        TestPower { test, rejections, failures, iterations, power: p, mc_se: (p * (1.0 - p) / iterations as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub n_e: usize,
    pub n_c: usize,
    pub tests: Vec<TestPower>,
}

impl PowerEstimate {
    pub fn get(&self, test: TestKind) -> Option<&TestPower> {
        self.tests.iter().find(|t| t.test == test)
    }
}

fn run_test(kind: TestKind, e: &[SurvivalRecord], c: &[SurvivalRecord], cause: Cause, tau: f64, alpha: f64) -> Result<TestResult> {
    match kind {
        TestKind::Rmtld => rmtld_test(e, c, cause, tau, alpha),
        // Rank tests see the same window [0, τ] as the RMTL comparison.
        TestKind::LogRank => logrank_test(&truncate_at(e, tau), &truncate_at(c, tau), cause),
        TestKind::Gray => gray_test(&truncate_at(e, tau), &truncate_at(c, tau), cause),
    }
}

fn max_time(data: &[SurvivalRecord]) -> f64 {
    data.iter().map(|r| r.time).fold(0.0, f64::max)
}

/// Run `f` on a pool of `workers` threads (all available when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Input("workers must be at least 1".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Fraction of simulated trials in which each test rejects at level `alpha`.
pub fn empirical_power(
    scenario: &ScenarioConfig,
    n_e: usize,
    n_c: usize,
    tests: &[TestKind],
    alpha: f64,
) -> Result<PowerEstimate> {
    if n_e == 0 || n_c == 0 {
        return Err(Error::Input("arm sizes must be positive".into()));
    }
    if scenario.iterations < MIN_POWER_ITERATIONS {
        return Err(Error::Input(format!(
            "power runs need at least {MIN_POWER_ITERATIONS} iterations, got {}",
            scenario.iterations
        )));
    }
    let seed = derive_seed(scenario.seed, TAG_POWER);
    let tau = scenario.design.tau;
    let outcomes: Vec<Vec<Option<bool>>> = (0..scenario.iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let (e, c) = generate_trial(scenario, n_e, n_c, &mut rng);
            let tau = match scenario.tau_rule {
                TauRule::Fixed => tau,
                TauRule::MinMax => max_time(&e).min(max_time(&c)),
            };
            tests
                .iter()
                .map(|&k| run_test(k, &e, &c, scenario.cause, tau, alpha).ok().map(|r| r.p_value < alpha))
                .collect()
        })
        .collect();
    let tests = tests
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let rejections = outcomes.iter().filter(|o| o[j] == Some(true)).count();
            let failures = outcomes.iter().filter(|o| o[j].is_none()).count();
            TestPower::new(k, rejections, failures, scenario.iterations)
        })
        .collect();
    Ok(PowerEstimate { n_e, n_c, tests })
}

pub const ALL_TESTS: [TestKind; 3] = [TestKind::LogRank, TestKind::Gray, TestKind::Rmtld];

/// The test that a sizing method is designed for.
pub fn matching_test(method: Method) -> TestKind {
    match method {
        Method::Hr => TestKind::LogRank,
        Method::Shr => TestKind::Gray,
        _ => TestKind::Rmtld,
    }
}

/// Sample size for `method` under an already-resolved scenario.
pub fn size_for(scenario: &ScenarioConfig, method: Method) -> Result<SampleSizeResult> {
    let (e, c, d) = (&scenario.model_e, &scenario.model_c, &scenario.design);
    let cause = scenario.cause;
    match method {
        Method::RmtldWeibull => sample_size_rmtld_weibull(e, c, d, cause, &scenario.phi_options()),
        Method::RmtldWu => {
            sample_size_rmtld_wu_simulated(e, c, d, cause, scenario.pilot_size, derive_seed(scenario.seed, TAG_PILOT))
        }
        Method::RmtldApprox => {
            let full = sample_size_rmtld_weibull(e, c, d, cause, &scenario.phi_options())?;
            let s2 = full.sigma2_e_corrected.unwrap_or(0.0).max(full.sigma2_c_corrected.unwrap_or(0.0));
            crate::design::sample_size_rmtld_approx_result(full.delta.unwrap_or(0.0), s2, d)
        }
        Method::Hr | Method::Shr => {
            let (given, scale) = match method {
                Method::Hr => (scenario.hr, HazardScale::CauseSpecific),
                _ => (scenario.shr, HazardScale::Subdistribution),
            };
            let effect = match given {
                Some(v) => v,
                None => average_hazard_ratio(e, c, cause, d.tau, scale)?,
            };
            let p = pooled_event_probability(e, c, d, cause)?;
            let size = match method {
                Method::Hr => sample_size_hr(effect, p, d.ratio, d.alpha, d.power)?,
                _ => sample_size_shr(effect, p, d.ratio, d.alpha, d.power)?,
            };
            Ok(size.into_result(method, effect, p, d.ratio))
        }
    }
}

/// Power of every test at fixed arm sizes, without any sizing step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedSizeRun {
    pub scenario: String,
    pub censoring_target: Option<f64>,
    pub loss: LossModel,
    pub power: PowerEstimate,
}

/// Resolve the loss model for `censoring_target` and run all three tests at `n_e`, `n_c`.
pub fn fixed_size_run(
    scenario: &ScenarioConfig,
    censoring_target: Option<f64>,
    n_e: usize,
    n_c: usize,
) -> Result<FixedSizeRun> {
    let mut s = scenario.clone();
    if censoring_target.is_some() {
        s.censoring_target = censoring_target;
    }
    let r = s.resolved()?;
    let power = empirical_power(&r, n_e, n_c, &ALL_TESTS, r.design.alpha)?;
    Ok(FixedSizeRun { scenario: r.name.clone(), censoring_target: s.censoring_target, loss: r.design.loss, power })
}

/// One row of a power table: a sizing method, its N, and all three powers at that N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub scenario: String,
    pub censoring_target: Option<f64>,
    pub method: Method,
    pub sizing: Option<SampleSizeResult>,
    pub power: Option<PowerEstimate>,
    pub error: Option<String>,
}

impl PowerRow {
    pub fn n_total(&self) -> Option<usize> {
        self.sizing.as_ref().map(|s| s.n_total)
    }

    pub fn power_of(&self, test: TestKind) -> Option<f64> {
        self.power.as_ref().and_then(|p| p.get(test)).map(|t| t.power)
    }
}

/// A block of rows for one (scenario, censoring target) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableBlock {
    pub scenario: String,
    pub censoring_target: Option<f64>,
    pub loss: Option<LossModel>,
    pub rows: Vec<PowerRow>,
}

pub const TABLE_METHODS: [Method; 4] = [Method::Hr, Method::Shr, Method::RmtldWeibull, Method::RmtldWu];

/// Size each method and evaluate all three tests at each N, for every
/// scenario and censoring target.
pub fn run_table(scenarios: &[ScenarioConfig], censoring_targets: &[Option<f64>], methods: &[Method]) -> Vec<TableBlock> {
    let mut blocks = Vec::new();
    for base in scenarios {
        for &target in censoring_targets {
            let mut cell = base.clone();
            if target.is_some() {
                cell.censoring_target = target;
            }
            let label = cell.censoring_target;
            match cell.resolved() {
                Err(e) => blocks.push(TableBlock {
                    scenario: base.name.clone(),
                    censoring_target: label,
                    loss: None,
                    rows: methods
                        .iter()
                        .map(|&m| PowerRow {
                            scenario: base.name.clone(),
                            censoring_target: label,
                            method: m,
                            sizing: None,
                            power: None,
                            error: Some(e.to_string()),
                        })
                        .collect(),
                }),
                Ok(resolved) => {
                    let rows = methods.iter().map(|&m| power_row(&resolved, label, m, &ALL_TESTS)).collect();
                    blocks.push(TableBlock {
                        scenario: base.name.clone(),
                        censoring_target: label,
                        loss: Some(resolved.design.loss),
                        rows,
                    });
                }
            }
        }
    }
    blocks
}

fn power_row(resolved: &ScenarioConfig, target: Option<f64>, method: Method, tests: &[TestKind]) -> PowerRow {
    let mut row = PowerRow {
        scenario: resolved.name.clone(),
        censoring_target: target,
        method,
        sizing: None,
        power: None,
        error: None,
    };
    match size_for(resolved, method) {
        Err(e) => row.error = Some(e.to_string()),
        Ok(size) => {
            match empirical_power(resolved, size.n_e, size.n_c, tests, resolved.design.alpha) {
                Ok(p) => row.power = Some(p),
                Err(e) => row.error = Some(e.to_string()),
            }
            row.sizing = Some(size);
        }
    }
    row
}

/// One τ of a restriction-time sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSweepRow {
    pub tau: f64,
    pub delta: Option<f64>,
    pub sigma2_e_corrected: Option<f64>,
    pub sigma2_c_corrected: Option<f64>,
    pub phi_e: Option<f64>,
    pub phi_c: Option<f64>,
    /// Per method: N and the power of its own test at that N.
    pub cells: Vec<PowerRow>,
}

pub const SWEEP_METHODS: [Method; 3] = [Method::Hr, Method::Shr, Method::RmtldWeibull];

/// N and power per method across restriction times. The loss model is
/// resolved once at the scenario's own τ and then held fixed.
pub fn sweep_tau(scenario: &ScenarioConfig, tau_grid: &[f64], methods: &[Method]) -> Result<Vec<TauSweepRow>> {
    let base = scenario.resolved()?;
    let mut rows = Vec::new();
    for &tau in tau_grid {
        let mut cell = base.clone();
        cell.censoring_target = None;
        cell.design.tau = tau;
        let mut row = TauSweepRow {
            tau,
            delta: None,
            sigma2_e_corrected: None,
            sigma2_c_corrected: None,
            phi_e: None,
            phi_c: None,
            cells: Vec::new(),
        };
        if tau == 0.0 {
            row.delta = Some(0.0);
        }
        for &m in methods {
            let r = if tau > 0.0 {
                power_row(&cell, scenario.censoring_target, m, &[matching_test(m)])
            } else {
                PowerRow {
                    scenario: base.name.clone(),
                    censoring_target: scenario.censoring_target,
                    method: m,
                    sizing: None,
                    power: None,
                    error: Some("tau = 0: effect is zero".into()),
                }
            };
            if let (Method::RmtldWeibull, Some(s)) = (m, &r.sizing) {
                row.delta = s.delta;
                row.sigma2_e_corrected = s.sigma2_e_corrected;
                row.sigma2_c_corrected = s.sigma2_c_corrected;
                row.phi_e = s.phi_e;
                row.phi_c = s.phi_c;
            }
            row.cells.push(r);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One (t_a, t_f) cell of an accrual/follow-up sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccrualSweepRow {
    pub accrual: f64,
    pub followup: f64,
    pub feasible: bool,
    pub cells: Vec<PowerRow>,
}

/// N and power per method across accrual and follow-up periods at the
/// scenario's τ, with the loss model held fixed. Cells with τ > t_a + t_f
/// are marked infeasible and skipped.
pub fn sweep_accrual_followup(
    scenario: &ScenarioConfig,
    ta_grid: &[f64],
    tf_grid: &[f64],
    methods: &[Method],
) -> Result<Vec<AccrualSweepRow>> {
    let base = scenario.resolved()?;
    let mut rows = Vec::new();
    for &ta in ta_grid {
        for &tf in tf_grid {
            let mut cell = base.clone();
            cell.censoring_target = None;
            cell.design.accrual = ta;
            cell.design.followup = tf;
            let feasible = cell.design.validate().is_ok();
            let cells = if feasible {
                methods
                    .iter()
                    .map(|&m| power_row(&cell, scenario.censoring_target, m, &[matching_test(m)]))
                    .collect()
            } else {
                Vec::new()
            };
            rows.push(AccrualSweepRow { accrual: ta, followup: tf, feasible, cells });
        }
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn opt_usize(v: Option<usize>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn power_fields(row: &PowerRow, tests: &[TestKind]) -> Vec<String> {
    let mut out = Vec::new();
    for &t in tests {
        let tp = row.power.as_ref().and_then(|p| p.get(t));
        out.push(opt(tp.map(|x| x.power)));
        out.push(opt(tp.map(|x| x.mc_se)));
        out.push(opt_usize(tp.map(|x| x.failures)));
    }
    out
}

fn test_label(t: TestKind) -> &'static str {
    match t {
        TestKind::LogRank => "hr",
        TestKind::Gray => "shr",
        TestKind::Rmtld => "rmtld",
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("cannot write CSV: {e}"))
}

/// Power tables as tidy CSV, one row per (scenario, censoring target, method).
pub fn write_table_csv<W: Write>(blocks: &[TableBlock], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["scenario", "censoring_target", "loss_theta", "method", "n_total", "n_e", "n_c", "iterations"]
            .map(String::from)
            .to_vec();
    for t in ALL_TESTS {
        let l = test_label(t);
        header.extend([format!("power_{l}"), format!("mc_se_{l}"), format!("failures_{l}")]);
    }
    header.push("error".into());
    w.write_record(&header).map_err(csv_err)?;
    for b in blocks {
        let theta = match b.loss {
            Some(LossModel::Uniform { theta }) => theta.to_string(),
            _ => String::new(),
        };
        for r in &b.rows {
            let mut rec = vec![
                b.scenario.clone(),
                opt(b.censoring_target),
                theta.clone(),
                r.method.name().to_string(),
                opt_usize(r.sizing.as_ref().map(|s| s.n_total)),
                opt_usize(r.sizing.as_ref().map(|s| s.n_e)),
                opt_usize(r.sizing.as_ref().map(|s| s.n_c)),
                opt_usize(r.power.as_ref().and_then(|p| p.tests.first()).map(|t| t.iterations)),
            ];
            rec.extend(power_fields(r, &ALL_TESTS));
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))
}

/// Fixed-size power runs as tidy CSV, one row per (scenario, censoring target).
pub fn write_fixed_csv<W: Write>(runs: &[FixedSizeRun], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["scenario", "censoring_target", "loss_theta", "n_e", "n_c", "iterations"].map(String::from).to_vec();
    for t in ALL_TESTS {
        let l = test_label(t);
        header.extend([format!("power_{l}"), format!("mc_se_{l}"), format!("failures_{l}")]);
    }
    w.write_record(&header).map_err(csv_err)?;
    for run in runs {
        let theta = match run.loss {
            LossModel::Uniform { theta } => theta.to_string(),
            LossModel::None => String::new(),
        };
        let p = &run.power;
        let mut rec = vec![
            run.scenario.clone(),
            opt(run.censoring_target),
            theta,
            p.n_e.to_string(),
            p.n_c.to_string(),
            opt_usize(p.tests.first().map(|t| t.iterations)),
        ];
        for t in ALL_TESTS {
            let tp = p.get(t);
            rec.push(opt(tp.map(|x| x.power)));
            rec.push(opt(tp.map(|x| x.mc_se)));
            rec.push(opt_usize(tp.map(|x| x.failures)));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))
}

fn sweep_cell_fields(r: &PowerRow) -> Vec<String> {
    let t = r.power.as_ref().and_then(|p| p.tests.first());
    vec![
        r.method.name().to_string(),
        opt_usize(r.n_total()),
        opt(t.map(|x| x.power)),
        opt(t.map(|x| x.mc_se)),
        opt_usize(t.map(|x| x.failures)),
        opt_usize(t.map(|x| x.iterations)),
        r.error.clone().unwrap_or_default(),
    ]
}

const SWEEP_CELL_HEADER: [&str; 7] = ["method", "n_total", "power", "mc_se", "failures", "iterations", "error"];

/// τ sweep as tidy CSV, one row per (τ, method).
pub fn write_tau_sweep_csv<W: Write>(rows: &[TauSweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["tau", "delta", "sigma2_e_corrected", "sigma2_c_corrected", "phi_e", "phi_c"];
    header.extend(SWEEP_CELL_HEADER);
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        for c in &r.cells {
            let mut rec = vec![
                r.tau.to_string(),
                opt(r.delta),
                opt(r.sigma2_e_corrected),
                opt(r.sigma2_c_corrected),
                opt(r.phi_e),
                opt(r.phi_c),
            ];
            rec.extend(sweep_cell_fields(c));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))
}

/// Accrual/follow-up sweep as tidy CSV, one row per (t_a, t_f, method).
pub fn write_accrual_sweep_csv<W: Write>(rows: &[AccrualSweepRow], methods: &[Method], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["accrual", "followup", "feasible"];
    header.extend(SWEEP_CELL_HEADER);
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let lead = [r.accrual.to_string(), r.followup.to_string(), r.feasible.to_string()];
        if r.feasible {
            for c in &r.cells {
                let mut rec = lead.to_vec();
                rec.extend(sweep_cell_fields(c));
                w.write_record(&rec).map_err(csv_err)?;
            }
        } else {
            for m in methods {
                let mut rec = lead.to_vec();
                rec.extend([m.name().to_string(), String::new(), String::new(), String::new(), String::new(), String::new()]);
                rec.push("infeasible: tau exceeds accrual + followup".into());
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn scenario() -> ScenarioConfig {
        let m = CompetingRisksModel::weibull(1.0, 0.1, 1.0, 0.1).unwrap();
        ScenarioConfig {
            name: "null".into(),
            model_e: m,
            model_c: m,
            design: TrialDesign {
                accrual: 10.0,
                followup: 10.0,
                tau: 10.0,
                ratio: 1.0,
                alpha: 0.05,
                power: 0.8,
                loss: LossModel::Uniform { theta: 40.0 },
            },
            censoring_target: None,
            iterations: 100,
            seed: 9,
            cause: Cause::Interest,
            hr: None,
            shr: None,
            tau_rule: TauRule::Fixed,
            phi_samples: 10_000,
            pilot_size: 200,
        }
    }

    #[test]
    fn observed_times_respect_the_administrative_bound() {
        let s = scenario();
        let mut rng = RngStream::new(1, 0);
        let (e, c) = generate_trial(&s, 500, 500, &mut rng);
        assert!(e.iter().chain(&c).all(|r| r.time <= s.design.total_duration()));
    }

    #[test]
    fn generation_is_deterministic() {
        let s = scenario();
        let a = generate_trial(&s, 50, 60, &mut RngStream::new(5, 3));
        let b = generate_trial(&s, 50, 60, &mut RngStream::new(5, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn power_counts_do_not_depend_on_workers() {
        let s = scenario();
        let one = with_workers(Some(1), || empirical_power(&s, 60, 60, &ALL_TESTS, 0.05)).unwrap().unwrap();
        let four = with_workers(Some(4), || empirical_power(&s, 60, 60, &ALL_TESTS, 0.05)).unwrap().unwrap();
        let sixteen = with_workers(Some(16), || empirical_power(&s, 60, 60, &ALL_TESTS, 0.05)).unwrap().unwrap();
        assert_eq!(one, four);
        assert_eq!(one, sixteen);
        for t in &one.tests {
            assert_eq!(t.iterations, 100);
            let p = t.power;
            assert!((t.mc_se - (p * (1.0 - p) / 100.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn short_power_runs_are_rejected() {
        let s = ScenarioConfig { iterations: 99, ..scenario() };
        assert!(matches!(empirical_power(&s, 60, 60, &ALL_TESTS, 0.05), Err(Error::Input(_))));
    }

    #[test]
    fn truncation_censors_beyond_tau() {
        let d = vec![SurvivalRecord::event(3.0, Cause::Interest), SurvivalRecord::event(1.0, Cause::Competing)];
        let t = truncate_at(&d, 2.0);
        assert_eq!(t[0], SurvivalRecord::censored(2.0));
        assert_eq!(t[1], d[1]);
    }

    #[test]
    fn scenario_json_round_trip() {
        let s = scenario();
        let text = serde_json::to_string(&s).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
