//! Run configuration: TOML schema, defaults, `--set` overrides, validation and hashing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::bath::{auto_mode_count, DiscreteBath, SpectralDensity};
use crate::error::{Error, Result};
use crate::exact::hamiltonian::{build_model, CouplingModel, DriftMatrix, OscillatorParams};
use crate::exact::propagate::{EvolutionConfig, Integrator, STEP_FACTOR};
use crate::gaussian::{coherent, separable_squeezed, two_mode_squeezed, CovarianceMatrix, ModeOrdering};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: CouplingModel,
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    #[serde(default)]
    pub evolution: EvolutionSettings,
    #[serde(default)]
    pub trace: TraceColumns,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub n: f64,
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_gamma0() -> f64 {
    0.1
}

fn default_cutoff() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub mass: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub c12: f64,
    pub c12_tilde: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega1: 1.0,
            omega2: 1.0,
            c12: 0.0,
            c12_tilde: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

/// `"auto"` or an explicit mode count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeCount {
    Fixed(usize),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathConfig {
    pub modes: ModeCount,
    pub temperature: f64,
    pub renormalize: bool,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            modes: ModeCount::Auto(AutoTag::Auto),
            temperature: 0.0,
            renormalize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    TwoModeSqueezed,
    SeparableSqueezed,
    Coherent,
    CustomCovariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialStateConfig {
    pub kind: InitialKind,
    pub r: f64,
    /// `δx δp` of each mode; values above 1/2 scale the pure state uniformly.
    pub purity_product: f64,
    /// Physical-ordering rows, used by `custom_covariance` only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        Self {
            kind: InitialKind::SeparableSqueezed,
            r: 1.0,
            purity_product: 0.5,
            covariance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSettings {
    /// Defaults to the largest allowed step `0.05/Λ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_max: f64,
    pub sample_stride: usize,
    pub integrator: Integrator,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 150.0,
            sample_stride: 40,
            integrator: Integrator::NormalMode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceColumns {
    pub moments: bool,
    pub asymptotic: bool,
}

impl Default for TraceColumns {
    fn default() -> Self {
        Self {
            moments: true,
            asymptotic: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionSource {
    /// Exact ohmic forms at `T = 0`, otherwise the zero- or high-temperature coefficient limits.
    ClosedForm,
    /// Late-time average of the exact plus-mode moments.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub r_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Worker threads; 0 uses the global pool.
    pub parallelism: usize,
    pub dispersion_source: DispersionSource,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            r_grid: (0..=60).map(|i| i as f64 * 0.05).collect(),
            t_grid: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            parallelism: 0,
            dispersion_source: DispersionSource::ClosedForm,
        }
    }
}

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::config(field, reason)
}

fn require(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(bad(field, reason))
    }
}

/// Parses a `--set` value as a TOML value, falling back to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| bad(assignment, "override must look like key=value"))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad(key, "empty path segment"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| bad(key, format!("`{p}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| bad("<file>", e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| bad("<schema>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(&path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text, overrides)
    }

    /// Schema-level checks; physics refusals (step bound, recurrence) happen when running.
    pub fn validate(&self) -> Result<()> {
        let s = &self.spectral;
        require(s.n > 0.0 && s.n.is_finite(), "spectral.n", "must be positive")?;
        require(s.gamma0 >= 0.0 && s.gamma0.is_finite(), "spectral.gamma0", "must be >= 0")?;
        require(s.cutoff > 0.0 && s.cutoff.is_finite(), "spectral.cutoff", "must be positive")?;
        let y = &self.system;
        require(y.mass > 0.0 && y.mass.is_finite(), "system.mass", "must be positive")?;
        require(y.omega1 > 0.0 && y.omega1.is_finite(), "system.omega1", "must be positive")?;
        require(y.omega2 > 0.0 && y.omega2.is_finite(), "system.omega2", "must be positive")?;
        require(y.c12.is_finite(), "system.c12", "must be finite")?;
        require(y.c12_tilde.is_finite(), "system.c12_tilde", "must be finite")?;
        require(y.omega1 < s.cutoff && y.omega2 < s.cutoff, "system.omega1", "oscillator frequencies must lie below the cutoff")?;
        if self.model == CouplingModel::Position {
            require(y.c12_tilde == 0.0, "system.c12_tilde", "momentum coupling exists only in the symmetric model")?;
        }
        if let ModeCount::Fixed(n) = self.bath.modes {
            require(n > 0, "bath.modes", "must be at least 1 or \"auto\"")?;
        }
        let t = self.bath.temperature;
        require(t >= 0.0 && t.is_finite(), "bath.temperature", "must be >= 0")?;
        let i = &self.initial_state;
        require(i.r.is_finite(), "initial_state.r", "must be finite")?;
        require(i.purity_product >= 0.5 && i.purity_product.is_finite(), "initial_state.purity_product", "must be >= 1/2")?;
        match (i.kind, &i.covariance) {
            (InitialKind::CustomCovariance, None) => {
                return Err(bad("initial_state.covariance", "required for custom_covariance"))
            }
            (InitialKind::CustomCovariance, Some(rows)) => {
                require(rows.len() == 4 && rows.iter().all(|r| r.len() == 4), "initial_state.covariance", "must be 4x4")?;
            }
            (_, Some(_)) => return Err(bad("initial_state.covariance", "only used with kind = custom_covariance")),
            _ => {}
        }
        let e = &self.evolution;
        if let Some(dt) = e.dt {
            require(dt > 0.0 && dt.is_finite(), "evolution.dt", "must be positive")?;
        }
        require(e.t_max > 0.0 && e.t_max.is_finite(), "evolution.t_max", "must be positive")?;
        require(e.sample_stride > 0, "evolution.sample_stride", "must be at least 1")?;
        if let Some(sw) = &self.sweep {
            require(!sw.r_grid.is_empty(), "sweep.r_grid", "must be nonempty")?;
            require(!sw.t_grid.is_empty(), "sweep.t_grid", "must be nonempty")?;
            require(sw.r_grid.iter().all(|r| r.is_finite()), "sweep.r_grid", "entries must be finite")?;
            require(sw.t_grid.iter().all(|t| *t >= 0.0 && t.is_finite()), "sweep.t_grid", "entries must be >= 0")?;
        }
        Ok(())
    }

    /// Canonical JSON of the resolved configuration; the hash is taken over this text.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn spectral_density(&self) -> Result<SpectralDensity> {
        SpectralDensity::new(self.spectral.n, self.spectral.gamma0, self.spectral.cutoff, self.system.mass)
    }

    pub fn oscillator(&self) -> OscillatorParams {
        OscillatorParams {
            mass: self.system.mass,
            omega1: self.system.omega1,
            omega2: self.system.omega2,
            c12: self.system.c12,
            c12_tilde: self.system.c12_tilde,
        }
    }

    pub fn mode_count(&self) -> usize {
        match self.bath.modes {
            ModeCount::Fixed(n) => n,
            ModeCount::Auto(_) => auto_mode_count(self.spectral.cutoff, self.evolution.t_max),
        }
    }

    pub fn dt(&self) -> f64 {
        self.evolution.dt.unwrap_or(STEP_FACTOR / self.spectral.cutoff)
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt(),
            t_max: self.evolution.t_max,
            sample_stride: self.evolution.sample_stride,
            integrator: self.evolution.integrator,
        }
    }

    pub fn discrete_bath(&self) -> Result<DiscreteBath> {
        self.spectral_density()?
            .discretize(self.mode_count())?
            .with_temperature(self.bath.temperature)
    }

    pub fn drift(&self, bath: &DiscreteBath) -> Result<DriftMatrix> {
        build_model(self.model, &self.oscillator(), bath, self.bath.renormalize)
    }

    /// Initial two-mode state. Squeezed states use `(m, Ω1)` for both oscillators.
    pub fn initial_state(&self) -> Result<CovarianceMatrix> {
        let i = &self.initial_state;
        let (m, w) = (self.system.mass, self.system.omega1);
        let pure = match i.kind {
            InitialKind::TwoModeSqueezed => two_mode_squeezed(i.r, m, w)?,
            InitialKind::SeparableSqueezed => separable_squeezed(i.r, m, w)?,
            InitialKind::Coherent => coherent(m, w)?,
            InitialKind::CustomCovariance => {
                let rows = i.covariance.as_ref().expect("validated");
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                return CovarianceMatrix::new(nalgebra::DMatrix::from_row_slice(4, 4, &flat), ModeOrdering::Physical)
                    .map_err(|e| bad("initial_state.covariance", e.to_string()));
            }
        };
        if i.purity_product == 0.5 {
            return Ok(pure);
        }
        CovarianceMatrix::new(pure.entries() * (2.0 * i.purity_product), pure.ordering())
    }
}
