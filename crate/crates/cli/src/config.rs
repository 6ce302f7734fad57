//! Run configuration: a TOML file plus `--set key=value` overrides.

use std::path::PathBuf;

use ruelle_core::maps::{MapSpec, TrigSeries};
use ruelle_core::transfer::FourierTruncation;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Truncation {
    Fixed(usize),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub map: MapSpec,
    /// Fiber modes for `spectrum`, `correlate` and `gauge-check`.
    pub nu: Vec<f64>,
    /// `"auto"` (`ceil(1.6 nu_max) + 32`) or a fixed `N`.
    pub truncation: Truncation,
    /// Quadrature nodes per unit of `kN + N + ceil(|nu| max|tau|) + 16`.
    pub quad_factor: usize,
    /// Escape rate of the compact zone; default `(1 + E_min) / 2`.
    pub kappa: Option<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Also write each transfer matrix in the binary layout.
    pub export_matrix: bool,
    /// `spectrum` also reports the distance to the spectrum at `2N`.
    pub convergence_check: bool,
    pub sweep: SweepConfig,
    pub captivity: CaptivityConfig,
    pub trapped: TrappedConfig,
    pub manifold: ManifoldConfig,
    pub fractal: FractalConfig,
    pub cloud: CloudConfig,
    pub correlate: CorrelateConfig,
    pub gauge: GaugeConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptivityConfig {
    pub grid: [usize; 2],
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrappedConfig {
    pub grid: [usize; 2],
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldConfig {
    pub tol: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FractalConfig {
    pub x: f64,
    pub m_range: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudConfig {
    pub count: usize,
    pub sigma: f64,
    pub center: [f64; 2],
    /// Snapshot times.
    pub steps: Vec<usize>,
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateConfig {
    /// Fourier coefficients `[m, re, im]`.
    pub psi1: Vec<[f64; 3]>,
    pub psi2: Vec<[f64; 3]>,
    pub n_max: usize,
    pub fit_window: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeConfig {
    pub eta: TrigSeries,
    pub floor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            map: MapSpec::preset("doubling-cos"),
            nu: vec![10.0],
            truncation: Truncation::Named("auto".into()),
            quad_factor: 8,
            kappa: None,
            seed: ruelle_core::simulate::REFERENCE_SEED,
            output_dir: PathBuf::from("out"),
            export_matrix: false,
            convergence_check: false,
            sweep: SweepConfig::default(),
            captivity: CaptivityConfig::default(),
            trapped: TrappedConfig::default(),
            manifold: ManifoldConfig::default(),
            fractal: FractalConfig::default(),
            cloud: CloudConfig::default(),
            correlate: CorrelateConfig::default(),
            gauge: GaugeConfig::default(),
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 20.0,
            step: 0.5,
        }
    }
}

impl Default for CaptivityConfig {
    fn default() -> Self {
        Self {
            grid: [256, 129],
            n_max: 10,
        }
    }
}

impl Default for TrappedConfig {
    fn default() -> Self {
        Self {
            grid: [512, 257],
            depth: 10,
        }
    }
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            points: 1024,
        }
    }
}

impl Default for FractalConfig {
    fn default() -> Self {
        Self {
            x: 0.0,
            m_range: 4096,
        }
    }
}

impl Default for CloudConfig {
    fn default() -> Self {
        Self {
            count: 100_000,
            sigma: 0.01,
            center: [0.0, 0.0],
            steps: vec![0, 2, 10, 19],
            bins: 64,
        }
    }
}

impl Default for CorrelateConfig {
    fn default() -> Self {
        Self {
            psi1: vec![[1.0, 1.0, 0.0]],
            psi2: vec![[1.0, 1.0, 0.0]],
            n_max: 30,
            fit_window: [3, 12],
        }
    }
}

impl Default for GaugeConfig {
    fn default() -> Self {
        Self {
            eta: TrigSeries::sin1(0.3),
            floor: 0.3,
        }
    }
}

/// A rule violation tied to a dotted key.
struct Invalid {
    key: &'static str,
    reason: String,
}

fn check(ok: bool, key: &'static str, reason: impl FnOnce() -> String) -> Result<(), Invalid> {
    if ok {
        Ok(())
    } else {
        Err(Invalid {
            key,
            reason: reason(),
        })
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), Invalid> {
        check(!self.nu.is_empty(), "nu", || "list is empty".into())?;
        check(self.nu.iter().all(|v| v.is_finite()), "nu", || {
            "values must be finite".into()
        })?;
        match &self.truncation {
            Truncation::Fixed(n) => check(*n >= 1, "truncation", || "must be >= 1".into())?,
            Truncation::Named(s) => check(s == "auto", "truncation", || {
                format!("expected \"auto\" or an integer, got \"{s}\"")
            })?,
        }
        check(self.quad_factor >= 4, "quad_factor", || {
            format!("must be >= 4, got {}", self.quad_factor)
        })?;
        if let Some(k) = self.kappa {
            check(k > 1.0, "kappa", || format!("must exceed 1, got {k}"))?;
        }
        let s = &self.sweep;
        check(s.step > 0.0 && s.step.is_finite(), "sweep.step", || {
            format!("must be positive, got {}", s.step)
        })?;
        check(s.stop >= s.start, "sweep.stop", || {
            format!("reversed range: stop {} < start {}", s.stop, s.start)
        })?;
        for (key, grid) in [
            ("captivity.grid", self.captivity.grid),
            ("trapped.grid", self.trapped.grid),
        ] {
            check(grid[0] >= 1 && grid[1] >= 2, key, || {
                format!("need nx >= 1 and nxi >= 2, got {grid:?}")
            })?;
        }
        check(self.captivity.n_max >= 1, "captivity.n_max", || {
            "must be >= 1".into()
        })?;
        check(self.trapped.depth >= 1, "trapped.depth", || {
            "must be >= 1".into()
        })?;
        check(self.manifold.tol > 0.0, "manifold.tol", || {
            "must be positive".into()
        })?;
        check(self.manifold.points >= 1, "manifold.points", || {
            "must be >= 1".into()
        })?;
        check(self.fractal.m_range >= 1, "fractal.m_range", || {
            "must be >= 1".into()
        })?;
        let c = &self.cloud;
        check(c.count >= 1, "cloud.count", || "must be >= 1".into())?;
        check(c.sigma >= 0.0 && c.sigma.is_finite(), "cloud.sigma", || {
            format!("must be >= 0, got {}", c.sigma)
        })?;
        check(!c.steps.is_empty(), "cloud.steps", || {
            "list is empty".into()
        })?;
        check(c.bins >= 2, "cloud.bins", || "must be >= 2".into())?;
        let r = &self.correlate;
        for (key, psi) in [("correlate.psi1", &r.psi1), ("correlate.psi2", &r.psi2)] {
            check(!psi.is_empty(), key, || "no coefficients".into())?;
            check(psi.iter().all(|c| c[0].fract() == 0.0), key, || {
                "modes must be integers".into()
            })?;
        }
        let [lo, hi] = r.fit_window;
        check(lo < hi && hi <= r.n_max, "correlate.fit_window", || {
            format!("need lo < hi <= n_max = {}, got [{lo}, {hi}]", r.n_max)
        })?;
        check(self.gauge.floor >= 0.0, "gauge.floor", || {
            "must be >= 0".into()
        })?;
        Ok(())
    }

    /// Truncation for the configured `nu` values.
    pub fn truncation_for(&self, nus: &[f64]) -> Result<FourierTruncation, CliError> {
        match self.truncation {
            Truncation::Fixed(n) => FourierTruncation::new(n).map_err(CliError::numeric),
            Truncation::Named(_) => {
                let nu_max = nus.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                Ok(FourierTruncation::auto(nu_max))
            }
        }
    }

    pub fn truncation_rule(&self) -> String {
        match self.truncation {
            Truncation::Fixed(n) => format!("fixed N = {n}"),
            Truncation::Named(_) => "auto: N = ceil(1.6 nu_max) + 32".into(),
        }
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        let s = &self.sweep;
        let frames = ((s.stop - s.start) / s.step + 1e-9).floor() as usize + 1;
        (0..frames).map(|i| s.start + i as f64 * s.step).collect()
    }

    /// SHA-256 of the canonical serialization, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = toml::to_string(&canonical).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Line number of the assignment to a dotted key such as `cloud.count`,
/// either inside `[cloud]` or written out in full.
fn locate(text: &str, key: &str) -> Option<usize> {
    let (table, leaf) = match key.rsplit_once('.') {
        Some((t, l)) => (t, l),
        None => ("", key),
    };
    let assigns = |line: &str, name: &str| {
        line.strip_prefix(name)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    };
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            continue;
        }
        if (current == table && assigns(line, leaf)) || (current.is_empty() && assigns(line, key)) {
            return Some(i + 1);
        }
    }
    None
}

fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {raw}: expected key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("--set {raw}: empty key")));
    }
    let doc = format!("v = {}", value.trim());
    // Bare words such as `doubling-sin` are taken as strings.
    let parsed = match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.trim().to_string()),
    };
    Ok((key.split('.').map(str::to_string).collect(), parsed))
}

fn insert(
    table: &mut toml::Table,
    path: &[String],
    value: toml::Value,
    raw: &str,
) -> Result<(), CliError> {
    let (head, rest) = path.split_first().expect("nonempty path");
    if rest.is_empty() {
        table.insert(head.clone(), value);
        return Ok(());
    }
    let entry = table
        .entry(head.clone())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => insert(t, rest, value, raw),
        _ => Err(CliError::Config(format!(
            "--set {raw}: `{head}` is not a table"
        ))),
    }
}

/// Load from optional file text, apply overrides, validate.
pub fn load(text: Option<(&str, &str)>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let (name, body) = text.unwrap_or(("<defaults>", ""));
    let mut config: RunConfig = toml::from_str(body)
        .map_err(|e| CliError::Config(format!("{name}: {}", e.to_string().trim_end())))?;
    if !overrides.is_empty() {
        let mut table: toml::Table = body
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(format!("{name}: {e}")))?;
        for raw in overrides {
            let (path, value) = parse_override(raw)?;
            insert(&mut table, &path, value, raw)?;
        }
        config = RunConfig::deserialize(table).map_err(|e| {
            CliError::Config(format!(
                "after --set overrides: {}",
                e.to_string().trim_end()
            ))
        })?;
    }
    config.validate().map_err(|inv| {
        let at = if overrides
            .iter()
            .any(|o| o.split('=').next().map(str::trim) == Some(inv.key))
        {
            "--set".to_string()
        } else {
            match locate(body, inv.key) {
                Some(line) => format!("{name}: line {line}"),
                None => name.to_string(),
            }
        };
        CliError::Config(format!("{at}: {}: {}", inv.key, inv.reason))
    })?;
    Ok(config)
}
