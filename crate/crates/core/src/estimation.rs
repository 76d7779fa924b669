//! Nonparametric estimation from subject-level competing-risks data.
//!
//! Every estimator here is built from an [`EventTable`]: the distinct observed
//! times with the number at risk and the counts of cause-1 events, cause-2
//! events and censorings at each. At a tied time, events are processed before
//! censorings, i.e. subjects censored at `t` are still at risk at `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Cause;
use crate::numerics::RngStream;

/// Observation status of one subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Censored,
    Event(Cause),
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Censored => 0,
            Status::Event(c) => c.code(),
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Status::Censored),
            1 => Ok(Status::Event(Cause::Interest)),
            2 => Ok(Status::Event(Cause::Competing)),
            other => Err(Error::Input(format!("status must be 0, 1 or 2, got {other}"))),
        }
    }
}

impl Serialize for Status {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Status {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        Status::from_code(code).map_err(serde::de::Error::custom)
    }
}

/// Follow-up time from entry and how it ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub time: f64,
    pub status: Status,
}

impl SurvivalRecord {
    pub fn new(time: f64, status: Status) -> Self {
        SurvivalRecord { time, status }
    }

    pub fn event(time: f64, cause: Cause) -> Self {
        SurvivalRecord { time, status: Status::Event(cause) }
    }

    pub fn censored(time: f64) -> Self {
        SurvivalRecord { time, status: Status::Censored }
    }
}

/// Right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCurve {
    /// Level before the first knot.
    pub initial: f64,
    /// Strictly ascending jump times.
    pub knots: Vec<f64>,
    /// Level from each knot onwards.
    pub values: Vec<f64>,
}

impl StepCurve {
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= t);
        if idx == 0 {
            self.initial
        } else {
            self.values[idx - 1]
        }
    }

    /// Left limit at `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k < t);
        if idx == 0 {
            self.initial
        } else {
            self.values[idx - 1]
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().copied().zip(self.values.iter().copied())
    }
}

/// Estimated restricted mean time lost with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmtlEstimate {
    pub value: f64,
    pub se: f64,
    pub tau: f64,
    pub cause: Cause,
    pub n: usize,
}

/// How to compute the standard error of μ̂_j(τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeMethod {
    /// Counting-process (martingale) linearisation of the Aalen–Johansen
    /// estimator.
    Martingale,
    /// Nonparametric bootstrap with `replicates` resamples.
    Bootstrap { replicates: usize, seed: u64 },
}

/// Distinct-time summary of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTable {
    pub rows: Vec<TableRow>,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub time: f64,
    pub at_risk: usize,
    pub d1: usize,
    pub d2: usize,
    pub censored: usize,
}

impl TableRow {
    pub fn events(&self, cause: Cause) -> usize {
        match cause {
            Cause::Interest => self.d1,
            Cause::Competing => self.d2,
        }
    }
}

pub(crate) fn validate_records(data: &[SurvivalRecord]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Input("dataset is empty".into()));
    }
    if let Some(bad) = data.iter().find(|r| !(r.time >= 0.0) || !r.time.is_finite()) {
        return Err(Error::Input(format!("observation time must be finite and >= 0, got {}", bad.time)));
    }
    Ok(())
}

impl EventTable {
    pub fn new(data: &[SurvivalRecord]) -> Result<Self> {
        validate_records(data)?;
        Ok(Self::build(data.iter().copied()))
    }

    fn build(records: impl Iterator<Item = SurvivalRecord>) -> Self {
        let mut sorted: Vec<SurvivalRecord> = records.collect();
        sorted.sort_by(|a, b| a.time.total_cmp(&b.time));
        let n = sorted.len();
        let mut rows: Vec<TableRow> = Vec::new();
        let mut remaining = n;
        let mut i = 0;
        while i < n {
            let t = sorted[i].time;
            let mut row = TableRow { time: t, at_risk: remaining, d1: 0, d2: 0, censored: 0 };
            while i < n && sorted[i].time == t {
                match sorted[i].status {
                    Status::Censored => row.censored += 1,
                    Status::Event(Cause::Interest) => row.d1 += 1,
                    Status::Event(Cause::Competing) => row.d2 += 1,
                }
                i += 1;
            }
            remaining -= row.d1 + row.d2 + row.censored;
            rows.push(row);
        }
        EventTable { rows, n }
    }

    pub fn max_time(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.time)
    }

    /// True when the last subjects at risk all had events, so Ŝ reaches zero
    /// and F̂ is determined for every t.
    pub fn is_complete(&self) -> bool {
        self.rows
            .last()
            .is_some_and(|r| r.censored == 0 && r.d1 + r.d2 == r.at_risk)
    }

    pub fn total_events(&self, cause: Cause) -> usize {
        self.rows.iter().map(|r| r.events(cause)).sum()
    }

    /// Walk event times ≤ `horizon`, yielding `(row, S(t-), S(t), F_cause(t-), F_cause(t))`.
    fn walk(&self, cause: Cause, horizon: f64) -> impl Iterator<Item = AjStep> + '_ {
        let mut surv = 1.0;
        let mut cif = 0.0;
        self.rows
            .iter()
            .take_while(move |r| r.time <= horizon)
            .filter(|r| r.d1 + r.d2 > 0)
            .map(move |r| {
                let y = r.at_risk as f64;
                let surv_before = surv;
                let cif_before = cif;
                cif += surv_before * r.events(cause) as f64 / y;
                surv *= 1.0 - (r.d1 + r.d2) as f64 / y;
                AjStep { row: *r, surv_before, surv, cif_before, cif }
            })
    }

    pub fn km_event_free(&self) -> StepCurve {
        let mut curve = StepCurve { initial: 1.0, knots: vec![], values: vec![] };
        for step in self.walk(Cause::Interest, f64::INFINITY) {
            curve.knots.push(step.row.time);
            curve.values.push(step.surv);
        }
        curve
    }

    pub fn aj_cif(&self, cause: Cause) -> StepCurve {
        let mut curve = StepCurve { initial: 0.0, knots: vec![], values: vec![] };
        for step in self.walk(cause, f64::INFINITY) {
            if step.row.events(cause) > 0 {
                curve.knots.push(step.row.time);
                curve.values.push(step.cif);
            }
        }
        curve
    }

    /// Exact step integrals `(∫₀^τ F̂, ∫₀^τ t F̂)`; τ beyond the last time is allowed.
    fn cif_integrals(&self, cause: Cause, tau: f64) -> (f64, f64) {
        let mut area = 0.0;
        let mut moment = 0.0;
        for step in self.walk(cause, tau) {
            let jump = step.cif - step.cif_before;
            if jump > 0.0 {
                let t = step.row.time;
                area += jump * (tau - t);
                moment += jump * 0.5 * (tau * tau - t * t);
            }
        }
        (area, moment)
    }

    pub fn check_tau(&self, tau: f64) -> Result<()> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("restriction time must be finite and >= 0, got {tau}")));
        }
        let bound = self.max_time();
        if tau > bound && !self.is_complete() {
            return Err(Error::Restriction { tau, bound });
        }
        Ok(())
    }

    pub fn rmtl(&self, cause: Cause, tau: f64) -> Result<f64> {
        self.check_tau(tau)?;
        Ok(self.cif_integrals(cause, tau).0)
    }

    pub fn rtl_variance(&self, cause: Cause, tau: f64) -> Result<f64> {
        self.check_tau(tau)?;
        let (area, moment) = self.cif_integrals(cause, tau);
        Ok((2.0 * tau * area - 2.0 * moment - area * area).max(0.0))
    }

    /// Martingale-linearised standard error of μ̂_j(τ).
    ///
    /// μ̂ - μ ≈ Σ_u [a(u) dM_j(u) + b(u) dM_k(u)] / Y(u) where, with
    /// G(u) = ∫_u^τ (F(t) - F(u)) dt, a(u) = S(u-)(τ - u) - G(u) and
    /// b(u) = -G(u). Increments at each time are treated as multinomial given
    /// the risk set, which makes the estimate agree with RSD̂/√n when nothing
    /// is censored before τ.
    pub fn rmtl_se_martingale(&self, cause: Cause, tau: f64) -> Result<f64> {
        self.check_tau(tau)?;
        let steps: Vec<AjStep> = self.walk(cause, tau).collect();
        // μ(u) = ∫₀ᵘ F̂ for each step, then G(u) = μ(τ) - μ(u) - F(u)(τ - u).
        let mut area_to = Vec::with_capacity(steps.len());
        let mut area = 0.0;
        let mut prev_t = 0.0;
        let mut prev_f = 0.0;
        for s in &steps {
            area += prev_f * (s.row.time - prev_t);
            area_to.push(area);
            prev_t = s.row.time;
            prev_f = s.cif;
        }
        let total = area + prev_f * (tau - prev_t);
        let mut var = 0.0;
        for (s, &mu_u) in steps.iter().zip(&area_to) {
            let u = s.row.time;
            let g = total - mu_u - s.cif * (tau - u);
            let a = s.surv_before * (tau - u) - g;
            let b = -g;
            let y = s.row.at_risk as f64;
            let dj = s.row.events(cause) as f64;
            let dk = s.row.events(cause.other()) as f64;
            // multinomial increments: Var d = d(Y-d)/Y, Cov(d_j, d_k) = -d_j d_k / Y
            var += (a * a * dj * (y - dj) + b * b * dk * (y - dk) - 2.0 * a * b * dj * dk) / (y * y * y);
        }
        Ok(var.sqrt())
    }
}

struct AjStep {
    row: TableRow,
    surv_before: f64,
    surv: f64,
    cif_before: f64,
    cif: f64,
}

/// Kaplan–Meier estimate of event-free survival (both causes are events).
pub fn km_event_free(data: &[SurvivalRecord]) -> Result<StepCurve> {
    Ok(EventTable::new(data)?.km_event_free())
}

/// Aalen–Johansen cumulative incidence, F̂_j(t) = Σ_{t_i ≤ t} (d_ij / n_i) Ŝ(t_i-).
pub fn aj_cif(data: &[SurvivalRecord], cause: Cause) -> Result<StepCurve> {
    Ok(EventTable::new(data)?.aj_cif(cause))
}

/// Plug-in restricted mean time lost, the exact area under F̂_j on [0, τ].
pub fn rmtl_hat(data: &[SurvivalRecord], cause: Cause, tau: f64) -> Result<f64> {
    EventTable::new(data)?.rmtl(cause, tau)
}

/// Plug-in variance of the restricted time lost.
pub fn rtl_var_hat(data: &[SurvivalRecord], cause: Cause, tau: f64) -> Result<f64> {
    EventTable::new(data)?.rtl_variance(cause, tau)
}

/// Bootstrap standard error together with the resamples that had to be skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapSe {
    pub se: f64,
    pub used: usize,
    pub skipped: usize,
}

/// Resampling standard error of μ̂_j(τ). Resamples without any event of the
/// requested cause are skipped and counted.
pub fn bootstrap_se(data: &[SurvivalRecord], cause: Cause, tau: f64, replicates: usize, seed: u64) -> Result<BootstrapSe> {
    EventTable::new(data)?.check_tau(tau)?;
    if replicates < 100 {
        return Err(Error::Input(format!("bootstrap needs at least 100 replicates, got {replicates}")));
    }
    let n = data.len();
    let mut values = Vec::with_capacity(replicates);
    let mut skipped = 0;
    for b in 0..replicates {
        let mut rng = RngStream::new(seed, b as u64);
        let table = EventTable::build((0..n).map(|_| data[rng.index(n)]));
        if table.total_events(cause) == 0 {
            skipped += 1;
            continue;
        }
        values.push(table.cif_integrals(cause, tau).0);
    }
    if values.len() < 2 {
        return Err(Error::Degenerate("fewer than two usable bootstrap resamples".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(BootstrapSe { se: var.sqrt(), used: values.len(), skipped })
}

/// Standard error of μ̂_j(τ).
pub fn rmtl_se(data: &[SurvivalRecord], cause: Cause, tau: f64, method: SeMethod) -> Result<f64> {
    match method {
        SeMethod::Martingale => EventTable::new(data)?.rmtl_se_martingale(cause, tau),
        SeMethod::Bootstrap { replicates, seed } => Ok(bootstrap_se(data, cause, tau, replicates, seed)?.se),
    }
}

/// μ̂_j(τ) with its standard error.
pub fn rmtl_estimate(data: &[SurvivalRecord], cause: Cause, tau: f64, method: SeMethod) -> Result<RmtlEstimate> {
    let table = EventTable::new(data)?;
    let value = table.rmtl(cause, tau)?;
    let se = match method {
        SeMethod::Martingale => table.rmtl_se_martingale(cause, tau)?,
        SeMethod::Bootstrap { replicates, seed } => bootstrap_se(data, cause, tau, replicates, seed)?.se,
    };
    Ok(RmtlEstimate { value, se, tau, cause, n: data.len() })
}
