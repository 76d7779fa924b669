//! Config loading, command-line overrides and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use rmtld::simulation::ScenarioConfig;

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Overrides of design fields given on the command line.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct DesignOverrides {
    /// Two-sided significance level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Target power.
    #[arg(long)]
    pub power: Option<f64>,
    /// Allocation ratio n_E / n_C.
    #[arg(long)]
    pub ratio: Option<f64>,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub config: Value,
    pub options: Value,
    pub iterations: Option<usize>,
    pub workers: Option<usize>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// A parsed `--config` file: either a plain config or a manifest of an earlier run.
pub enum Loaded {
    Plain(Value),
    Manifest(Manifest),
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let v = read_json(path)?;
    if v.get("tool").and_then(Value::as_str) == Some("rmtld") && v.get("command").is_some() {
        let m: Manifest =
            serde_json::from_value(v).map_err(|e| CliError::Input(format!("{}: bad manifest: {e}", path.display())))?;
        Ok(Loaded::Manifest(m))
    } else {
        Ok(Loaded::Plain(v))
    }
}

impl Loaded {
    /// Config value(s) and the manifest options, checking the command matches.
    pub fn split(self, command: &str) -> Result<(Value, Option<Value>), CliError> {
        match self {
            Loaded::Plain(v) => Ok((v, None)),
            Loaded::Manifest(m) if m.command == command => Ok((m.config, Some(m.options))),
            Loaded::Manifest(m) => Err(CliError::Input(format!(
                "manifest was written by `{}`, not `{command}`",
                m.command
            ))),
        }
    }
}

fn object<'a>(v: &'a mut Value, what: &str) -> Result<&'a mut Map<String, Value>, CliError> {
    v.as_object_mut().ok_or_else(|| CliError::Input(format!("{what} must be a JSON object")))
}

fn design_mut(v: &mut Value) -> Result<&mut Map<String, Value>, CliError> {
    let root = object(v, "config")?;
    let d = root.entry("design").or_insert_with(|| Value::Object(Map::new()));
    object(d, "config field `design`")
}

pub fn set_design(v: &mut Value, field: &str, value: Option<f64>) -> Result<(), CliError> {
    if let Some(x) = value {
        design_mut(v)?.insert(field.to_string(), x.into());
    }
    Ok(())
}

pub fn set_root(v: &mut Value, field: &str, value: Option<Value>) -> Result<(), CliError> {
    if let Some(x) = value {
        object(v, "config")?.insert(field.to_string(), x);
    }
    Ok(())
}

pub fn apply_overrides(v: &mut Value, o: &DesignOverrides) -> Result<(), CliError> {
    set_design(v, "alpha", o.alpha)?;
    set_design(v, "power", o.power)?;
    set_design(v, "ratio", o.ratio)
}

/// Make sure the config carries a seed: the flag wins, then the file, then a
/// fresh random value. The seed in use is always logged.
pub fn ensure_seed(v: &mut Value, flag: Option<u64>) -> Result<u64, CliError> {
    let root = object(v, "config")?;
    let seed = match (flag, root.get("seed").and_then(Value::as_u64)) {
        (Some(s), _) => s,
        (None, Some(s)) => s,
        (None, None) => rand::random::<u64>() >> 11,
    };
    root.insert("seed".into(), seed.into());
    eprintln!("seed: {seed}");
    Ok(seed)
}

pub fn scenario(v: &Value, origin: &str) -> Result<ScenarioConfig, CliError> {
    let s: ScenarioConfig =
        serde_json::from_value(v.clone()).map_err(|e| CliError::Input(format!("config {origin}: {e}")))?;
    s.validate()?;
    Ok(s)
}

/// Output directory handling shared by all commands.
pub struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<OutputFile>,
}

impl Outputs {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        Ok(Outputs { dir, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            self.files.push(OutputFile { file: name.to_string(), sha256: sha256_hex(bytes) });
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn finish(
        mut self,
        command: &str,
        seed: Option<u64>,
        config: Value,
        options: Value,
        iterations: Option<usize>,
        workers: Option<usize>,
        elapsed: Duration,
    ) -> Result<(), CliError> {
        if self.dir.is_none() {
            return Ok(());
        }
        let config_bytes = serde_json::to_vec(&config).expect("JSON values serialize");
        let manifest = Manifest {
            tool: "rmtld".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config_sha256: sha256_hex(&config_bytes),
            config,
            options,
            iterations,
            workers,
            wall_time_seconds: elapsed.as_secs_f64(),
            outputs: std::mem::take(&mut self.files),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.dir.as_ref().expect("checked above").join(MANIFEST_FILE);
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}
