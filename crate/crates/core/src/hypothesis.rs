//! Two-sample tests: the RMTL-difference Z test, the cause-specific log-rank
//! test (other cause treated as censoring) and Gray's test for equality of
//! cumulative incidence (ρ = 0 weighting).
//!
//! Effects are always experimental (first argument) minus control: Δ̂ for the
//! Z test, and a one-step log hazard ratio estimate (score / information) for
//! the two rank tests, so a negative effect means fewer events in E.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{EventTable, SeMethod, SurvivalRecord};
use crate::models::Cause;
use crate::numerics::{chi2_1_sf, normal_cdf, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestKind {
    Rmtld,
    LogRank,
    Gray,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub kind: TestKind,
    /// Signed Z for the RMTLd test, χ²₁ for the rank tests.
    pub statistic: f64,
    pub p_value: f64,
    pub effect: f64,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub alpha: f64,
}

impl TestResult {
    pub fn rejects(&self) -> bool {
        self.p_value < self.alpha
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Z test of Δ_j = μ_Ej(τ) − μ_Cj(τ) with Var(Δ̂) = SE_E² + SE_C².
pub fn rmtld_test(
    data_e: &[SurvivalRecord],
    data_c: &[SurvivalRecord],
    cause: Cause,
    tau: f64,
    alpha: f64,
) -> Result<TestResult> {
    rmtld_test_with(data_e, data_c, cause, tau, alpha, SeMethod::Martingale)
}

pub fn rmtld_test_with(
    data_e: &[SurvivalRecord],
    data_c: &[SurvivalRecord],
    cause: Cause,
    tau: f64,
    alpha: f64,
    method: SeMethod,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let table_e = EventTable::new(data_e)?;
    let table_c = EventTable::new(data_c)?;
    let bound = table_e.max_time().min(table_c.max_time());
    for t in [&table_e, &table_c] {
        if let Err(Error::Restriction { .. }) = t.check_tau(tau) {
            return Err(Error::Restriction { tau, bound });
        }
        t.check_tau(tau)?;
    }
    let se_of = |table: &EventTable, data: &[SurvivalRecord]| -> Result<f64> {
        match method {
            SeMethod::Martingale => table.rmtl_se_martingale(cause, tau),
            _ => crate::estimation::rmtl_se(data, cause, tau, method),
        }
    };
    let delta = table_e.rmtl(cause, tau)? - table_c.rmtl(cause, tau)?;
    let se = se_of(&table_e, data_e)?.hypot(se_of(&table_c, data_c)?);
    let z = if delta == 0.0 {
        0.0
    } else if se > 0.0 {
        delta / se
    } else {
        return Err(Error::Degenerate("RMTL difference has zero standard error".into()));
    };
    let half = normal_quantile(1.0 - alpha / 2.0)? * se;
    Ok(TestResult {
        kind: TestKind::Rmtld,
        statistic: z,
        p_value: (2.0 * normal_cdf(-z.abs())).min(1.0),
        effect: delta,
        se: Some(se),
        ci_low: Some(delta - half),
        ci_high: Some(delta + half),
        alpha,
    })
}

/// Both groups aligned on the pooled distinct times.
struct Merged {
    times: Vec<f64>,
    groups: [Vec<Counts>; 2],
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    at_risk: f64,
    d1: f64,
    d2: f64,
}

impl Merged {
    fn new(a: &EventTable, b: &EventTable) -> Self {
        let mut times: Vec<f64> = a.rows.iter().chain(&b.rows).map(|r| r.time).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let align = |table: &EventTable| {
            let mut out = Vec::with_capacity(times.len());
            let mut i = 0;
            for &t in &times {
                while i < table.rows.len() && table.rows[i].time < t {
                    i += 1;
                }
                out.push(match table.rows.get(i) {
                    Some(r) if r.time == t => {
                        Counts { at_risk: r.at_risk as f64, d1: r.d1 as f64, d2: r.d2 as f64 }
                    }
                    Some(r) => Counts { at_risk: r.at_risk as f64, ..Counts::default() },
                    None => Counts::default(),
                });
            }
            out
        };
        let groups = [align(a), align(b)];
        Merged { times, groups }
    }

    /// Counts with `cause` relabelled as d1.
    fn for_cause(mut self, cause: Cause) -> Self {
        if cause == Cause::Competing {
            for g in &mut self.groups {
                for c in g.iter_mut() {
                    std::mem::swap(&mut c.d1, &mut c.d2);
                }
            }
        }
        self
    }
}

fn tables(data_e: &[SurvivalRecord], data_c: &[SurvivalRecord], cause: Cause) -> Result<Merged> {
    let e = EventTable::new(data_e)?;
    let c = EventTable::new(data_c)?;
    if e.total_events(cause) + c.total_events(cause) == 0 {
        return Err(Error::Degenerate(format!("no events of cause {} in either group", cause.code())));
    }
    Ok(Merged::new(&e, &c).for_cause(cause))
}

fn rank_result(kind: TestKind, score: f64, variance: f64, information: f64) -> Result<TestResult> {
    if !(variance > 0.0) {
        return Err(Error::Degenerate("test statistic has zero variance".into()));
    }
    let chi2 = score * score / variance;
    Ok(TestResult {
        kind,
        statistic: chi2,
        p_value: chi2_1_sf(chi2).clamp(0.0, 1.0),
        effect: if information > 0.0 { score / information } else { 0.0 },
        se: None,
        ci_low: None,
        ci_high: None,
        alpha: 0.05,
    })
}

/// Log-rank test on cause-specific hazards; the other cause counts as censoring.
pub fn logrank_test(data_e: &[SurvivalRecord], data_c: &[SurvivalRecord], cause: Cause) -> Result<TestResult> {
    let m = tables(data_e, data_c, cause)?;
    let (mut score, mut var) = (0.0, 0.0);
    for (e, c) in m.groups[0].iter().zip(&m.groups[1]) {
        let d = e.d1 + c.d1;
        let y = e.at_risk + c.at_risk;
        if d == 0.0 {
            continue;
        }
        score += e.d1 - d * e.at_risk / y;
        if y > 1.0 {
            var += d * e.at_risk * c.at_risk * (y - d) / (y * y * (y - 1.0));
        }
    }
    rank_result(TestKind::LogRank, score, var, var)
}

/// Per-group path of the Aalen–Johansen quantities at the pooled times.
struct SubdistPath {
    /// Ŝ(t-), F̂(t-), F̂(t) and the subdistribution risk set R(t) = Y(1 − F̂(t-))/Ŝ(t-).
    surv_before: Vec<f64>,
    cif_before: Vec<f64>,
    cif: Vec<f64>,
    risk: Vec<f64>,
}

impl SubdistPath {
    fn new(counts: &[Counts]) -> Self {
        let n = counts.len();
        let mut p = SubdistPath {
            surv_before: Vec::with_capacity(n),
            cif_before: Vec::with_capacity(n),
            cif: Vec::with_capacity(n),
            risk: Vec::with_capacity(n),
        };
        let (mut s, mut f) = (1.0, 0.0);
        for c in counts {
            p.surv_before.push(s);
            p.cif_before.push(f);
            p.risk.push(if c.at_risk > 0.0 { c.at_risk * (1.0 - f) / s } else { 0.0 });
            if c.at_risk > 0.0 {
                f += s * c.d1 / c.at_risk;
                s *= 1.0 - (c.d1 + c.d2) / c.at_risk;
            }
            p.cif.push(f);
        }
        p
    }
}

/// Gray's two-sample test for the subdistribution hazard of `cause`.
///
/// The score is Σ_t w_t (dΓ̂_E − dΓ̂_C) with w = R_E R_C / (R_E + R_C). Its
/// variance is the sum over groups of the variance of the group's
/// linearised Σ w dΓ̂, with Γ̂ = ∫ dF̂/(1 − F̂₋) expanded through the
/// Aalen–Johansen influence of F̂ and multinomial event increments.
pub fn gray_test(data_e: &[SurvivalRecord], data_c: &[SurvivalRecord], cause: Cause) -> Result<TestResult> {
    let m = tables(data_e, data_c, cause)?;
    let paths = [SubdistPath::new(&m.groups[0]), SubdistPath::new(&m.groups[1])];
    let nt = m.times.len();
    let weight: Vec<f64> = (0..nt)
        .map(|i| {
            let (r1, r2) = (paths[0].risk[i], paths[1].risk[i]);
            if r1 + r2 > 0.0 { r1 * r2 / (r1 + r2) } else { 0.0 }
        })
        .collect();

    let (mut score, mut information) = (0.0, 0.0);
    for i in 0..nt {
        let d = m.groups[0][i].d1 + m.groups[1][i].d1;
        let r = paths[0].risk[i] + paths[1].risk[i];
        if d > 0.0 && r > 0.0 {
            score += m.groups[0][i].d1 - paths[0].risk[i] * d / r;
            information += weight[i] * d / r;
        }
    }

    let mut variance = 0.0;
    for (counts, path) in m.groups.iter().zip(&paths) {
        // Suffix sums over t > u of w dΓ̂, w dΓ̂ F₋/(1 − F₋), w dΓ̂/(1 − F₋).
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for i in (0..nt).rev() {
            let k = &counts[i];
            let y = k.at_risk;
            if y > 0.0 && k.d1 + k.d2 > 0.0 {
                let one_minus_f = 1.0 - path.cif_before[i];
                let q = if one_minus_f > 0.0 { path.surv_before[i] / one_minus_f } else { 0.0 };
                let tail = b - path.cif[i] * c;
                let coef1 = weight[i] * q - a + path.surv_before[i] * c - tail;
                let coef2 = -a - tail;
                variance += (coef1 * coef1 * k.d1 * (y - k.d1) + coef2 * coef2 * k.d2 * (y - k.d2)
                    - 2.0 * coef1 * coef2 * k.d1 * k.d2)
                    / (y * y * y);
            }
            if k.d1 > 0.0 && y > 0.0 {
                let one_minus_f = 1.0 - path.cif_before[i];
                if one_minus_f > 0.0 {
                    let dgamma = path.surv_before[i] * k.d1 / (y * one_minus_f);
                    let wd = weight[i] * dgamma;
                    a += wd;
                    b += wd * path.cif_before[i] / one_minus_f;
                    c += wd / one_minus_f;
                }
            }
        }
    }
    rank_result(TestKind::Gray, score, variance, information)
}
