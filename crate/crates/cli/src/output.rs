//! CSV and JSON emission with an embedded config echo.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use qbm_core::asymptotics::PhasePoint;
use qbm_core::config::RunConfig;
use qbm_core::sweep::TraceRecord;
use serde_json::{json, Value};

use crate::CliError;

pub const TRACE_COLUMNS: [&str; 9] = [
    "t",
    "en_exact",
    "en_moments",
    "en_asymptotic",
    "dx_plus2",
    "dp_plus2",
    "dx_minus2",
    "dp_minus2",
    "xp_plus_anticomm",
];

pub const PHASE_COLUMNS: [&str; 9] = [
    "r",
    "temperature",
    "phase",
    "e_mean",
    "e_amp",
    "period",
    "r_crit",
    "s_crit",
    "e_c",
];

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `# key value` lines that open every CSV.
pub fn header(cfg: &RunConfig) -> String {
    format!(
        "# qbm {}\n# config_hash {}\n# config {}\n",
        qbm_core::VERSION,
        cfg.hash(),
        cfg.canonical_json()
    )
}

/// Hash recorded in an existing output, CSV header or JSON field.
fn recorded_hash(path: &Path) -> Option<String> {
    let text = fs::read_to_string(path).ok()?;
    if let Some(line) = text.lines().find(|l| l.starts_with("# config_hash ")) {
        return Some(line["# config_hash ".len()..].trim().to_string());
    }
    serde_json::from_str::<Value>(&text)
        .ok()?
        .get("config_hash")?
        .as_str()
        .map(str::to_string)
}

/// Warns when `path` already holds output of a different configuration.
pub fn check_existing(path: &Path, cfg: &RunConfig) {
    if let Some(old) = recorded_hash(path) {
        let new = cfg.hash();
        if old != new {
            log::warn!(
                "{} was produced by a different configuration (hash {old}, now {new}); overwriting",
                path.display()
            );
        }
    }
}

pub fn trace_csv(cfg: &RunConfig, records: &[TraceRecord]) -> Result<Vec<u8>, CliError> {
    let mut out = header(cfg).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(TRACE_COLUMNS)?;
        for r in records {
            let m = &r.moments;
            w.write_record([
                fmt_f64(r.t),
                opt(r.en_exact),
                opt(r.en_moments),
                opt(r.en_asymptotic),
                fmt_f64(m.dx_plus2),
                fmt_f64(m.dp_plus2),
                fmt_f64(m.dx_minus2),
                fmt_f64(m.dp_minus2),
                fmt_f64(m.xp_plus),
            ])?;
        }
        w.flush().map_err(|e| CliError::Io("<buffer>".into(), e))?;
    }
    Ok(out)
}

pub fn phase_csv(cfg: &RunConfig, rows: &[PhasePoint]) -> Result<Vec<u8>, CliError> {
    let mut out = header(cfg).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(PHASE_COLUMNS)?;
        for p in rows {
            w.write_record([
                fmt_f64(p.r),
                fmt_f64(p.temperature),
                p.phase.to_string(),
                fmt_f64(p.e_mean),
                fmt_f64(p.e_amp),
                fmt_f64(p.period),
                fmt_f64(p.r_crit),
                fmt_f64(p.s_crit),
                fmt_f64(p.e_c),
            ])?;
        }
        w.flush().map_err(|e| CliError::Io("<buffer>".into(), e))?;
    }
    Ok(out)
}

/// Wraps a JSON payload with the version, config hash and config echo.
pub fn json_document(cfg: &RunConfig, key: &str, payload: Value) -> Result<Vec<u8>, CliError> {
    let config: Value = serde_json::from_str(&cfg.canonical_json())?;
    let doc = json!({
        "version": qbm_core::VERSION,
        "config_hash": cfg.hash(),
        "config": config,
        key: payload,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, cfg: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => {
            check_existing(p, cfg);
            fs::write(p, bytes).map_err(|e| CliError::Io(p.display().to_string(), e))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io("<stdout>".into(), e))
        }
    }
}
