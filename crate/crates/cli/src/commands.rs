use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rmtld::dataset::SurvivalDataset;
use rmtld::design::{
    analytic_power, calibrate_loss, censored_proportion, pooled_censored, LossModel, Method, SampleSizeResult,
};
use rmtld::estimation::{aj_cif, rmtl_estimate, SeMethod, SurvivalRecord};
use rmtld::hypothesis::{gray_test, logrank_test, rmtld_test_with, TestResult};
use rmtld::models::Cause;
use rmtld::numerics::normal_quantile;
use rmtld::simulation::{
    fixed_size_run, run_table, size_for, sweep_accrual_followup, sweep_tau, with_workers, write_accrual_sweep_csv,
    write_fixed_csv, write_table_csv, write_tau_sweep_csv, ScenarioConfig, SWEEP_METHODS, TABLE_METHODS,
};

use crate::config::{self, apply_overrides, ensure_seed, set_design, set_root, Outputs};
use crate::{AnalyzeArgs, CalibrateArgs, CliError, SamplesizeArgs, SimulateArgs, SweepArgs, SweepKind};

fn parse_methods(s: &str) -> Result<Vec<Method>, CliError> {
    if s == "all" {
        return Ok(Method::ALL.to_vec());
    }
    s.split(',').map(|m| Method::parse(m.trim()).map_err(CliError::from)).collect()
}

/// Options come from the flag, then the manifest, then the default.
fn pick<T: for<'de> Deserialize<'de>>(flag: Option<T>, manifest: &Option<Value>, key: &str, default: T) -> T {
    flag.or_else(|| manifest.as_ref().and_then(|m| m.get(key)).and_then(|v| serde_json::from_value(v.clone()).ok()))
        .unwrap_or(default)
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

fn opt3(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), f3)
}

fn p3(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        f3(p)
    }
}

fn loss_text(loss: &LossModel) -> String {
    match loss {
        LossModel::None => "none".into(),
        LossModel::Uniform { theta } => format!("uniform(0, {})", f3(*theta)),
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s.into_bytes()
}

fn single_config(path: &PathBuf, command: &str) -> Result<(Value, Option<Value>), CliError> {
    config::load(path)?.split(command)
}

#[derive(Serialize)]
struct MethodOutcome {
    method: Method,
    result: Option<SampleSizeResult>,
    analytic_power: Option<f64>,
    error: Option<String>,
    #[serde(skip)]
    failure: Option<rmtld::Error>,
}

pub fn samplesize(a: SamplesizeArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (mut v, manifest) = single_config(&a.config, "samplesize")?;
    apply_overrides(&mut v, &a.design)?;
    set_design(&mut v, "tau", a.tau)?;
    set_design(&mut v, "accrual", a.accrual)?;
    set_design(&mut v, "followup", a.followup)?;
    set_root(&mut v, "censoring_target", a.censoring_target.map(Value::from))?;
    let seed = ensure_seed(&mut v, a.run.seed)?;
    let scenario = config::scenario(&v, &a.config.display().to_string())?;
    let methods = match &a.method {
        Some(m) => parse_methods(m)?,
        None => pick(None, &manifest, "methods", vec![Method::RmtldWeibull]),
    };

    let (resolved, outcomes) = with_workers(a.run.workers, || -> Result<_, CliError> {
        let resolved = scenario.resolved()?;
        let d = resolved.design;
        let outcomes: Vec<MethodOutcome> = methods
            .iter()
            .map(|&m| match size_for(&resolved, m) {
                Ok(r) => {
                    let power = match (r.delta, r.sigma2_e_corrected, r.sigma2_c_corrected) {
                        (Some(delta), Some(se), Some(sc)) => Some(analytic_power(delta, se, sc, r.n_e, r.n_c, d.alpha)),
                        _ => None,
                    };
                    MethodOutcome { method: m, result: Some(r), analytic_power: power, error: None, failure: None }
                }
                Err(e) => MethodOutcome {
                    method: m,
                    result: None,
                    analytic_power: None,
                    error: Some(e.to_string()),
                    failure: Some(e),
                },
            })
            .collect();
        Ok((resolved, outcomes))
    })??;

    let report = json!({
        "scenario": resolved.name,
        "design": resolved.design,
        "censoring_target": resolved.censoring_target,
        "cause": resolved.cause,
        "results": outcomes,
    });
    if a.json {
        print!("{}", String::from_utf8(to_json(&report)).expect("utf-8"));
    } else {
        let d = &resolved.design;
        println!(
            "scenario {}  tau {}  accrual {}  followup {}  alpha {}  power {}  ratio {}  loss {}",
            resolved.name,
            f3(d.tau),
            f3(d.accrual),
            f3(d.followup),
            f3(d.alpha),
            f3(d.power),
            f3(d.ratio),
            loss_text(&d.loss)
        );
        println!(
            "{:<14} {:>8} {:>7} {:>7} {:>8} {:>7} {:>7} {:>9} {:>9} {:>7}",
            "method", "n_total", "n_e", "n_c", "effect", "phi_e", "phi_c", "var_e", "var_c", "power"
        );
        for o in &outcomes {
            match &o.result {
                Some(r) => {
                    let effect = r.delta.or_else(|| r.diagnostics.get("effect").copied());
                    println!(
                        "{:<14} {:>8} {:>7} {:>7} {:>8} {:>7} {:>7} {:>9} {:>9} {:>7}",
                        o.method.name(),
                        r.n_total,
                        r.n_e,
                        r.n_c,
                        opt3(effect),
                        opt3(r.phi_e),
                        opt3(r.phi_c),
                        opt3(r.sigma2_e_corrected),
                        opt3(r.sigma2_c_corrected),
                        opt3(o.analytic_power)
                    );
                }
                None => println!("{:<14} error: {}", o.method.name(), o.error.as_deref().unwrap_or("")),
            }
        }
    }

    let mut out = Outputs::new(a.run.out.clone())?;
    out.write("samplesize.json", &to_json(&report))?;
    out.finish("samplesize", Some(seed), v, json!({ "methods": methods }), None, a.run.workers, start.elapsed())?;
    // the first failing method decides the exit code
    match outcomes.into_iter().find_map(|o| o.failure) {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnalyzeConfig {
    data: String,
    data_sha256: String,
    tau: Option<f64>,
    alpha: f64,
    experimental: Option<String>,
    se_method: String,
    replicates: usize,
    seed: u64,
}

#[derive(Serialize)]
struct GroupSummary {
    label: String,
    n: usize,
    events_interest: usize,
    events_competing: usize,
    censored: usize,
    rmtl: f64,
    se: f64,
    ci_low: f64,
    ci_high: f64,
}

#[derive(Serialize)]
struct RankOutcome {
    result: Option<TestResult>,
    error: Option<String>,
}

impl From<rmtld::Result<TestResult>> for RankOutcome {
    fn from(r: rmtld::Result<TestResult>) -> Self {
        match r {
            Ok(t) => RankOutcome { result: Some(t), error: None },
            Err(e) => RankOutcome { result: None, error: Some(e.to_string()) },
        }
    }
}

fn max_time(data: &[SurvivalRecord]) -> f64 {
    data.iter().map(|r| r.time).fold(0.0, f64::max)
}

pub fn analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let previous: Option<AnalyzeConfig> = match &a.config {
        Some(path) => {
            let (v, _) = single_config(path, "analyze")?;
            Some(serde_json::from_value(v).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    let data_path = match (&a.data, &previous) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => PathBuf::from(&c.data),
        (None, None) => return Err(CliError::Input("no dataset given".into())),
    };
    let bytes = fs::read(&data_path).map_err(|e| CliError::io(&data_path, e))?;
    let hash = config::sha256_hex(&bytes);
    if let Some(c) = &previous {
        if a.data.is_none() && c.data_sha256 != hash {
            return Err(CliError::Input(format!("{} changed since the recorded run", data_path.display())));
        }
    }
    let se_name = a.method.clone().or_else(|| previous.as_ref().map(|c| c.se_method.clone())).unwrap_or("martingale".into());
    let replicates = a.iterations.or(previous.as_ref().map(|c| c.replicates)).unwrap_or(1000);
    let seed = a.run.seed.or(previous.as_ref().map(|c| c.seed)).unwrap_or_else(|| rand::random::<u64>() >> 11);
    let cfg = AnalyzeConfig {
        data: data_path.display().to_string(),
        data_sha256: hash,
        tau: a.tau.or(previous.as_ref().and_then(|c| c.tau)),
        alpha: a.alpha.or(previous.as_ref().map(|c| c.alpha)).unwrap_or(0.05),
        experimental: a.experimental.clone().or(previous.as_ref().and_then(|c| c.experimental.clone())),
        se_method: se_name.clone(),
        replicates,
        seed,
    };
    let se_method = match se_name.as_str() {
        "martingale" => SeMethod::Martingale,
        "bootstrap" => {
            eprintln!("seed: {seed}");
            SeMethod::Bootstrap { replicates, seed }
        }
        other => return Err(CliError::Input(format!("unknown standard-error method `{other}`"))),
    };

    let data = SurvivalDataset::from_csv(bytes.as_slice())
        .map_err(|e| CliError::Input(format!("{}: {}", data_path.display(), strip_prefix(&e))))?;
    let labels: Vec<String> = data.labels().iter().map(|s| s.to_string()).collect();
    if labels.len() != 2 {
        return Err(CliError::Input(format!(
            "{}: expected exactly two groups, found {} ({})",
            data_path.display(),
            labels.len(),
            labels.join(", ")
        )));
    }
    let exp = match &cfg.experimental {
        Some(l) if labels.contains(l) => l.clone(),
        Some(l) => return Err(CliError::Input(format!("group `{l}` not found; groups are {}", labels.join(", ")))),
        None => labels[0].clone(),
    };
    let ctl = labels.iter().find(|l| **l != exp).expect("two labels").clone();
    let de = data.group(&exp).expect("label exists");
    let dc = data.group(&ctl).expect("label exists");

    let bound = max_time(de).min(max_time(dc));
    let tau = cfg.tau.unwrap_or(bound);
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(CliError::Input(format!("tau must be positive, got {tau}")));
    }
    if tau > bound {
        return Err(rmtld::Error::Restriction { tau, bound }.into());
    }
    let z = normal_quantile(1.0 - cfg.alpha / 2.0)?;

    let (groups, test, logrank, gray) = with_workers(a.run.workers, || -> Result<_, CliError> {
        let mut groups = Vec::new();
        for (label, d) in [(&exp, de), (&ctl, dc)] {
            let est = rmtl_estimate(d, Cause::Interest, tau, se_method)?;
            let count = |code: u8| d.iter().filter(|r| r.status.code() == code).count();
            groups.push(GroupSummary {
                label: label.clone(),
                n: d.len(),
                events_interest: count(1),
                events_competing: count(2),
                censored: count(0),
                rmtl: est.value,
                se: est.se,
                ci_low: est.value - z * est.se,
                ci_high: est.value + z * est.se,
            });
        }
        let test = rmtld_test_with(de, dc, Cause::Interest, tau, cfg.alpha, se_method)?;
        let logrank = RankOutcome::from(logrank_test(de, dc, Cause::Interest));
        let gray = RankOutcome::from(gray_test(de, dc, Cause::Interest));
        Ok((groups, test, logrank, gray))
    })??;

    let mut cif = String::from("group,cause,time,cif\n");
    for (label, d) in [(&exp, de), (&ctl, dc)] {
        for cause in [Cause::Interest, Cause::Competing] {
            for (t, f) in aj_cif(d, cause)?.points() {
                cif.push_str(&format!("{},{},{t},{f}\n", csv_field(label), cause.code()));
            }
        }
    }

    let report = json!({
        "data": cfg.data,
        "experimental": exp,
        "control": ctl,
        "tau": tau,
        "tau_bound": bound,
        "alpha": cfg.alpha,
        "se_method": se_name,
        "groups": groups,
        "rmtld": test,
        "logrank": logrank,
        "gray": gray,
    });
    if a.json {
        print!("{}", String::from_utf8(to_json(&report)).expect("utf-8"));
    } else {
        let level = 100.0 * (1.0 - cfg.alpha);
        println!("tau {}  (bound {})  alpha {}  se {}", f3(tau), f3(bound), f3(cfg.alpha), se_name);
        println!("{:<12} {:>6} {:>6} {:>6} {:>6}  RMTL ({level:.0}% CI)", "group", "n", "d1", "d2", "cens");
        for g in &groups {
            println!(
                "{:<12} {:>6} {:>6} {:>6} {:>6}  {} ({}, {})",
                g.label,
                g.n,
                g.events_interest,
                g.events_competing,
                g.censored,
                f3(g.rmtl),
                f3(g.ci_low),
                f3(g.ci_high)
            );
        }
        println!(
            "RMTLd {} - {}: {} ({}, {})  Z {}  p {}",
            exp,
            ctl,
            f3(test.effect),
            opt3(test.ci_low),
            opt3(test.ci_high),
            f3(test.statistic),
            p3(test.p_value)
        );
        for (name, r) in [("log-rank", &logrank), ("Gray", &gray)] {
            match (&r.result, &r.error) {
                (Some(t), _) => println!("{name}: chi2 {}  p {}", f3(t.statistic), p3(t.p_value)),
                (None, e) => println!("{name}: not available ({})", e.as_deref().unwrap_or("")),
            }
        }
    }

    let mut out = Outputs::new(a.run.out.clone())?;
    out.write("analysis.json", &to_json(&report))?;
    out.write("cif.csv", cif.as_bytes())?;
    let cfg_value = serde_json::to_value(&cfg).expect("config serializes");
    out.finish("analyze", Some(seed), cfg_value, json!({}), None, a.run.workers, start.elapsed())
}

fn strip_prefix(e: &rmtld::Error) -> String {
    match e {
        rmtld::Error::Input(m) => m.clone(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn parse_target(s: &str) -> Result<Option<f64>, CliError> {
    let s = s.trim();
    if s == "none" {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::Input(format!("censoring target must be a number or `none`, got `{s}`")))
}

fn prepare_scenario(
    v: &mut Value,
    origin: &str,
    overrides: &crate::config::DesignOverrides,
    iterations: Option<usize>,
    seed: Option<u64>,
) -> Result<ScenarioConfig, CliError> {
    apply_overrides(v, overrides)?;
    set_root(v, "iterations", iterations.map(Value::from))?;
    ensure_seed(v, seed)?;
    config::scenario(v, origin)
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut values = Vec::new();
    let mut manifest_opts = None;
    for path in &a.config {
        let (v, opts) = single_config(path, "simulate")?;
        if opts.is_some() {
            manifest_opts = opts;
        }
        match v {
            Value::Array(items) => values.extend(items.into_iter().map(|i| (path.display().to_string(), i))),
            other => values.push((path.display().to_string(), other)),
        }
    }
    let mut scenarios = Vec::new();
    for (origin, v) in values.iter_mut() {
        set_design(v, "tau", a.tau)?;
        set_design(v, "accrual", a.accrual)?;
        set_design(v, "followup", a.followup)?;
        scenarios.push(prepare_scenario(v, origin, &a.design, a.iterations, a.run.seed)?);
    }
    let targets: Vec<Option<f64>> = if a.censoring_target.is_empty() {
        pick(None, &manifest_opts, "censoring_targets", vec![None])
    } else {
        a.censoring_target.iter().map(|s| parse_target(s)).collect::<Result<_, _>>()?
    };
    let methods = match &a.method {
        Some(m) => parse_methods(m)?,
        None => pick(None, &manifest_opts, "methods", TABLE_METHODS.to_vec()),
    };
    let arm_sizes: Option<Vec<usize>> = pick(a.arm_sizes.clone().map(Some), &manifest_opts, "arm_sizes", None);

    let mut out = Outputs::new(a.run.out.clone())?;
    let options = json!({ "censoring_targets": targets, "methods": methods, "arm_sizes": arm_sizes });
    match &arm_sizes {
        Some(sizes) => {
            let (n_e, n_c) = match sizes.as_slice() {
                [e, c] if *e > 0 && *c > 0 => (*e, *c),
                _ => return Err(CliError::Input("arm sizes must be two positive integers `n_e,n_c`".into())),
            };
            let runs = with_workers(a.run.workers, || -> Result<Vec<_>, CliError> {
                let mut runs = Vec::new();
                for s in &scenarios {
                    for &t in &targets {
                        runs.push(fixed_size_run(s, t, n_e, n_c)?);
                    }
                }
                Ok(runs)
            })??;
            println!(
                "{:<14} {:>8} {:>16} {:>7} {:>7} {:>9} {:>9} {:>9}",
                "scenario", "target", "loss", "n_e", "n_c", "p_hr", "p_shr", "p_rmtld"
            );
            for r in &runs {
                let p = |k| r.power.get(k).map(|t| t.power);
                println!(
                    "{:<14} {:>8} {:>16} {:>7} {:>7} {:>9} {:>9} {:>9}",
                    r.scenario,
                    opt3(r.censoring_target),
                    loss_text(&r.loss),
                    n_e,
                    n_c,
                    opt3(p(rmtld::hypothesis::TestKind::LogRank)),
                    opt3(p(rmtld::hypothesis::TestKind::Gray)),
                    opt3(p(rmtld::hypothesis::TestKind::Rmtld))
                );
            }
            let mut buf = Vec::new();
            write_fixed_csv(&runs, &mut buf)?;
            out.write("power_fixed.csv", &buf)?;
        }
        None => {
            let blocks = with_workers(a.run.workers, || run_table(&scenarios, &targets, &methods))?;
            println!(
                "{:<14} {:>8} {:>16} {:<14} {:>8} {:>9} {:>9} {:>9}",
                "scenario", "target", "loss", "method", "n_total", "p_hr", "p_shr", "p_rmtld"
            );
            for b in &blocks {
                for r in &b.rows {
                    let head = format!(
                        "{:<14} {:>8} {:>16} {:<14}",
                        b.scenario,
                        opt3(b.censoring_target),
                        b.loss.as_ref().map_or("-".into(), loss_text),
                        r.method.name()
                    );
                    match &r.error {
                        Some(e) => println!("{head} error: {e}"),
                        None => println!(
                            "{head} {:>8} {:>9} {:>9} {:>9}",
                            r.n_total().map_or("-".into(), |n| n.to_string()),
                            opt3(r.power_of(rmtld::hypothesis::TestKind::LogRank)),
                            opt3(r.power_of(rmtld::hypothesis::TestKind::Gray)),
                            opt3(r.power_of(rmtld::hypothesis::TestKind::Rmtld))
                        ),
                    }
                }
            }
            let mut buf = Vec::new();
            write_table_csv(&blocks, &mut buf)?;
            out.write("power_table.csv", &buf)?;
        }
    }
    let configs: Vec<Value> = values.into_iter().map(|(_, v)| v).collect();
    let seed = scenarios.first().map(|s| s.seed);
    let iterations = scenarios.first().map(|s| s.iterations);
    out.finish("simulate", seed, Value::Array(configs), options, iterations, a.run.workers, start.elapsed())
}

pub fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (mut v, manifest) = single_config(&a.config, "sweep")?;
    set_root(&mut v, "censoring_target", a.censoring_target.map(Value::from))?;
    let scenario = prepare_scenario(&mut v, &a.config.display().to_string(), &a.design, a.iterations, a.run.seed)?;
    let kind = pick(a.kind, &manifest, "kind", SweepKind::Tau);
    let methods = match &a.method {
        Some(m) => parse_methods(m)?,
        None => pick(None, &manifest, "methods", SWEEP_METHODS.to_vec()),
    };
    let nonempty = |v: &Vec<f64>| (!v.is_empty()).then(|| v.clone());
    let tau_grid: Vec<f64> = pick(nonempty(&a.tau), &manifest, "tau_grid", Vec::new());
    let accrual_grid: Vec<f64> = pick(nonempty(&a.accrual), &manifest, "accrual_grid", Vec::new());
    let followup_grid: Vec<f64> =
        pick(nonempty(&a.followup), &manifest, "followup_grid", vec![scenario.design.followup]);

    let mut out = Outputs::new(a.run.out.clone())?;
    match kind {
        SweepKind::Tau => {
            if tau_grid.is_empty() {
                return Err(CliError::Input("tau sweep needs --tau with a comma-separated grid".into()));
            }
            let rows = with_workers(a.run.workers, || sweep_tau(&scenario, &tau_grid, &methods))??;
            let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
            println!("{:>8} {:>8}  N / power per method ({})", "tau", "delta", names.join(", "));
            for r in &rows {
                let cells: Vec<String> = r
                    .cells
                    .iter()
                    .map(|c| match c.n_total() {
                        Some(n) => format!("{n} / {}", opt3(c.power.as_ref().and_then(|p| p.tests.first()).map(|t| t.power))),
                        None => "-".into(),
                    })
                    .collect();
                println!("{:>8} {:>8}  {}", f3(r.tau), opt3(r.delta), cells.join("  "));
            }
            let mut buf = Vec::new();
            write_tau_sweep_csv(&rows, &mut buf)?;
            out.write("tau_sweep.csv", &buf)?;
        }
        SweepKind::Accrual => {
            if accrual_grid.is_empty() {
                return Err(CliError::Input("accrual sweep needs --accrual with a comma-separated grid".into()));
            }
            let rows =
                with_workers(a.run.workers, || sweep_accrual_followup(&scenario, &accrual_grid, &followup_grid, &methods))??;
            println!("{:>8} {:>8}  N / power per method", "accrual", "followup");
            for r in &rows {
                let cells: Vec<String> = if r.feasible {
                    r.cells
                        .iter()
                        .map(|c| match c.n_total() {
                            Some(n) => format!(
                                "{} {n} / {}",
                                c.method.name(),
                                opt3(c.power.as_ref().and_then(|p| p.tests.first()).map(|t| t.power))
                            ),
                            None => format!("{} -", c.method.name()),
                        })
                        .collect()
                } else {
                    vec!["infeasible".into()]
                };
                println!("{:>8} {:>8}  {}", f3(r.accrual), f3(r.followup), cells.join("  "));
            }
            let mut buf = Vec::new();
            write_accrual_sweep_csv(&rows, &methods, &mut buf)?;
            out.write("accrual_sweep.csv", &buf)?;
        }
    }
    let options = json!({
        "kind": kind,
        "methods": methods,
        "tau_grid": tau_grid,
        "accrual_grid": accrual_grid,
        "followup_grid": followup_grid,
    });
    out.finish("sweep", Some(scenario.seed), v, options, Some(scenario.iterations), a.run.workers, start.elapsed())
}

pub fn calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (mut v, _) = single_config(&a.config, "calibrate")?;
    apply_overrides(&mut v, &a.design)?;
    set_design(&mut v, "tau", a.tau)?;
    set_design(&mut v, "accrual", a.accrual)?;
    set_design(&mut v, "followup", a.followup)?;
    set_root(&mut v, "censoring_target", a.censoring_target.map(Value::from))?;
    let s = config::scenario(&v, &a.config.display().to_string())?;
    let target = s
        .censoring_target
        .ok_or_else(|| CliError::Input("calibrate needs --censoring-target or `censoring_target` in the config".into()))?;
    let d = s.design;
    let floor = pooled_censored(&s.model_e, &s.model_c, &d, &LossModel::None)?;
    let loss = calibrate_loss(&s.model_e, &s.model_c, &d, target)?;
    let achieved = pooled_censored(&s.model_e, &s.model_c, &d, &loss)?;
    let arm_e = censored_proportion(&s.model_e, &d, &loss)?;
    let arm_c = censored_proportion(&s.model_c, &d, &loss)?;
    let report = json!({
        "scenario": s.name,
        "target": target,
        "floor": floor,
        "loss": loss,
        "achieved": achieved,
        "censored_e": arm_e,
        "censored_c": arm_c,
    });
    if a.json {
        print!("{}", String::from_utf8(to_json(&report)).expect("utf-8"));
    } else {
        println!("scenario {}  target {}  administrative floor {}", s.name, f3(target), f3(floor));
        println!("loss {}", loss_text(&loss));
        println!("censored: pooled {}  E {}  C {}", f3(achieved), f3(arm_e), f3(arm_c));
    }
    let mut out = Outputs::new(a.run.out.clone())?;
    out.write("calibration.json", &to_json(&report))?;
    out.finish("calibrate", None, v, json!({}), None, a.run.workers, start.elapsed())
}
