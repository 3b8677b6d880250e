//! Run configuration. Values come from built-in defaults, then the TOML
//! file, then command-line overrides; later sources win. Every key is
//! validated before any computation and errors name the offending key.

use crate::error::{LabError, Result};
use crate::grid::{Grid2D, Grid3D};
use crate::params::StrainParams;
use crate::weighted::WeightExponent;
use serde::Serialize;
use std::path::{Path, PathBuf};
pub use toml::Value;
use toml::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Fields,
    Residual,
    Spectrum,
    Evolve2d,
    Evolve3d,
    Accept,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fields => "fields",
            Command::Residual => "residual",
            Command::Spectrum => "spectrum",
            Command::Evolve2d => "evolve2d",
            Command::Evolve3d => "evolve3d",
            Command::Accept => "accept",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Command::Fields, Command::Residual, Command::Spectrum, Command::Evolve2d, Command::Evolve3d, Command::Accept]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `d_1 g`, as a planar field or a column.
    D1g,
    /// The base column `(0, 0, g)`.
    GaussianColumn,
    /// A `d_1 g` column plus a small divergence-free field varying in `xi_3`.
    Modulated3d,
    /// The singular Burgers vortex in physical variables.
    SingularBurgers,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::D1g => "d1g",
            Preset::GaussianColumn => "gaussian-column",
            Preset::Modulated3d => "modulated-3d",
            Preset::SingularBurgers => "singular-burgers",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Preset::D1g, Preset::GaussianColumn, Preset::Modulated3d, Preset::SingularBurgers]
            .into_iter()
            .find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialData {
    Preset(Preset),
    /// A binary field dump.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrainConfig {
    pub mu: f64,
    pub alpha: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridConfig {
    pub n: usize,
    pub radius: f64,
    pub n3: usize,
    pub half_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeConfig {
    pub tau_end: f64,
    pub dt: f64,
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Largest accepted Navier-Stokes residual.
    pub residual: f64,
    /// Allowed excess of an eigenvalue over its bound.
    pub spectral: f64,
    /// Allowed relative deviation of a fitted decay rate.
    pub rate: f64,
    /// Divergence growth factor that triggers a projection.
    pub divergence_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumConfig {
    pub modes: usize,
    pub mus: Vec<f64>,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualConfig {
    pub times: Vec<f64>,
    /// Box half-width in core radii `1/sqrt(beta)`.
    pub core: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveConfig {
    pub nonlinear: bool,
    pub leray: bool,
    pub fit_window: Option<[f64; 2]>,
    /// Window exponent offset for the secondary profile.
    pub delta: f64,
    /// `X(m)`-norm of the vertically varying part of `modulated-3d`.
    pub perturbation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub strain: StrainConfig,
    pub weight: WeightExponent,
    pub grid: GridConfig,
    pub initial: InitialData,
    pub time: TimeConfig,
    pub tolerances: Tolerances,
    pub spectrum: SpectrumConfig,
    pub residual: ResidualConfig,
    pub evolve: EvolveConfig,
    pub out: PathBuf,
    pub seed: u64,
}

const KNOWN_KEYS: &[&str] = &[
    "command",
    "out",
    "seed",
    "strain.mu",
    "strain.alpha",
    "strain.t_star",
    "weight.m",
    "grid.n",
    "grid.radius",
    "grid.n3",
    "grid.half_height",
    "initial.data",
    "time.tau_end",
    "time.dt",
    "time.record_every",
    "tolerances.residual",
    "tolerances.spectral",
    "tolerances.rate",
    "tolerances.divergence_growth",
    "spectrum.modes",
    "spectrum.mus",
    "spectrum.alphas",
    "residual.times",
    "residual.core",
    "evolve.nonlinear",
    "evolve.leray",
    "evolve.fit_window",
    "evolve.delta",
    "evolve.perturbation",
];

fn cfg_err(key: &str, reason: impl Into<String>) -> LabError {
    LabError::Config { key: key.to_string(), reason: reason.into() }
}

/// Parses `--set key=value` style text. Values are read as TOML and fall
/// back to a bare string.
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| cfg_err(text, "override must look like key=value"))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key, value))
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap();
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| cfg_err(key, format!("`{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push(key),
        }
    }
}

struct Reader<'a> {
    table: &'a Table,
}

impl Reader<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        let mut cur = self.table;
        let mut parts = key.split('.').peekable();
        while let Some(p) = parts.next() {
            let v = cur.get(p)?;
            if parts.peek().is_none() {
                return Some(v);
            }
            cur = v.as_table()?;
        }
        None
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Float(x)) => Ok(*x),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(other) => Err(cfg_err(key, format!("expected a number, found {}", other.type_str()))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(other) => Err(cfg_err(key, format!("expected a non-negative integer, found {other}"))),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(other) => Err(cfg_err(key, format!("expected true or false, found {other}"))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(cfg_err(key, format!("expected a string, found {other}"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    other => Err(cfg_err(key, format!("list entries must be numbers, found {other}"))),
                })
                .collect(),
            Some(Value::Float(x)) => Ok(vec![*x]),
            Some(Value::Integer(i)) => Ok(vec![*i as f64]),
            Some(other) => Err(cfg_err(key, format!("expected a list of numbers, found {other}"))),
        }
    }
}

/// Loads a configuration: defaults for `command`, then `file`, then
/// `overrides` in order.
pub fn load(command: Command, file: Option<&Path>, overrides: &[(String, Value)]) -> Result<RunConfig> {
    let mut table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| cfg_err("--config", format!("{}: {e}", p.display())))?;
            text.parse::<Table>().map_err(|e| cfg_err("--config", format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    for (k, v) in overrides {
        set_dotted(&mut table, k, v.clone())?;
    }
    from_table(command, &table)
}

pub fn from_table(command: Command, table: &Table) -> Result<RunConfig> {
    let mut keys = Vec::new();
    flatten("", table, &mut keys);
    if let Some(bad) = keys.iter().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(cfg_err(bad, "unknown key"));
    }
    let r = Reader { table };
    if let Some(c) = r.string("command")? {
        Command::parse(&c).ok_or_else(|| cfg_err("command", format!("unknown command `{c}`")))?;
    }
    let spatial = matches!(command, Command::Evolve3d | Command::Fields);

    let strain = StrainConfig {
        mu: r.f64("strain.mu", 2.0)?,
        alpha: r.f64("strain.alpha", 1.0)?,
        t_star: r.f64("strain.t_star", 1.0)?,
    };
    StrainParams::new(strain.mu, strain.alpha, strain.t_star).map_err(|e| match e {
        LabError::InvalidParameter { name, reason } => cfg_err(&format!("strain.{name}"), reason),
        other => other,
    })?;

    let weight = match r.get("weight.m") {
        None => WeightExponent::Polynomial(4.0),
        Some(Value::String(s)) if s == "gaussian" || s == "inf" => WeightExponent::Gaussian,
        Some(Value::Float(_)) | Some(Value::Integer(_)) => {
            WeightExponent::finite(r.f64("weight.m", 4.0)?).map_err(|e| cfg_err("weight.m", e.to_string()))?
        }
        Some(other) => return Err(cfg_err("weight.m", format!("expected a number or \"gaussian\", found {other}"))),
    };

    let n_def = match command {
        Command::Evolve3d | Command::Fields => 96,
        Command::Residual => 128,
        _ => 256,
    };
    let grid = GridConfig {
        n: r.usize("grid.n", n_def)?,
        radius: r.f64("grid.radius", 12.0)?,
        n3: r.usize("grid.n3", 48)?,
        half_height: r.f64("grid.half_height", 24.0)?,
    };
    Grid2D::new(grid.n, grid.radius).map_err(|e| grid_err(e, "grid.n", "grid.radius"))?;
    if spatial {
        Grid3D::new(grid.n, grid.radius, grid.n3, grid.half_height).map_err(|e| grid_err(e, "grid.n3", "grid.half_height"))?;
    }

    let initial = match r.string("initial.data")? {
        None => InitialData::Preset(match command {
            Command::Residual => Preset::SingularBurgers,
            Command::Evolve3d => Preset::Modulated3d,
            Command::Fields => Preset::GaussianColumn,
            _ => Preset::D1g,
        }),
        Some(s) => match Preset::parse(&s) {
            Some(p) => InitialData::Preset(p),
            None if Path::new(&s).extension().is_some() || s.contains('/') => InitialData::File(PathBuf::from(s)),
            None => return Err(cfg_err("initial.data", format!("`{s}` is neither a preset nor a file path"))),
        },
    };
    check_initial(command, &initial)?;

    let time = TimeConfig {
        tau_end: r.f64("time.tau_end", 8.0)?,
        dt: r.f64("time.dt", 0.05)?,
        record_every: r.usize("time.record_every", 2)?,
    };
    positive("time.tau_end", time.tau_end)?;
    positive("time.dt", time.dt)?;
    if time.dt > time.tau_end {
        return Err(cfg_err("time.dt", format!("step {} exceeds the horizon {}", time.dt, time.tau_end)));
    }
    if time.record_every == 0 {
        return Err(cfg_err("time.record_every", "must be at least 1"));
    }

    let tolerances = Tolerances {
        residual: r.f64("tolerances.residual", 1e-5)?,
        spectral: r.f64("tolerances.spectral", 1e-6)?,
        rate: r.f64("tolerances.rate", 0.1)?,
        divergence_growth: r.f64("tolerances.divergence_growth", 10.0)?,
    };
    positive("tolerances.residual", tolerances.residual)?;
    positive("tolerances.spectral", tolerances.spectral)?;
    positive("tolerances.rate", tolerances.rate)?;
    if !(tolerances.divergence_growth >= 1.0) {
        return Err(cfg_err("tolerances.divergence_growth", "must be at least 1"));
    }

    let spectrum = SpectrumConfig {
        modes: r.usize("spectrum.modes", 32)?,
        mus: r.list("spectrum.mus", &[strain.mu])?,
        alphas: r.list("spectrum.alphas", &[strain.alpha])?,
    };
    if spectrum.modes < 4 {
        return Err(cfg_err("spectrum.modes", "need at least 4 Hermite modes per axis"));
    }
    if spectrum.mus.is_empty() || spectrum.mus.iter().any(|&m| !(m > 1.0)) {
        return Err(cfg_err("spectrum.mus", "need a non-empty list of strains above 1"));
    }
    if spectrum.alphas.is_empty() || spectrum.alphas.iter().any(|a| !a.is_finite()) {
        return Err(cfg_err("spectrum.alphas", "need a non-empty list of finite circulations"));
    }

    let residual = ResidualConfig { times: r.list("residual.times", &[0.0, 0.5, 0.9])?, core: r.f64("residual.core", 3.0)? };
    positive("residual.core", residual.core)?;
    if residual.times.is_empty() || residual.times.iter().any(|&t| !(t >= 0.0 && t < strain.t_star)) {
        return Err(cfg_err("residual.times", format!("times must lie in [0, {})", strain.t_star)));
    }

    let fit_window = match r.get("evolve.fit_window") {
        None => None,
        Some(_) => {
            let w = r.list("evolve.fit_window", &[])?;
            if w.len() != 2 || !(w[0] >= 0.0 && w[1] > w[0] && w[1] <= time.tau_end) {
                return Err(cfg_err("evolve.fit_window", format!("need [start, end] with 0 <= start < end <= {}", time.tau_end)));
            }
            Some([w[0], w[1]])
        }
    };
    let evolve = EvolveConfig {
        nonlinear: r.bool("evolve.nonlinear", true)?,
        leray: r.bool("evolve.leray", true)?,
        fit_window,
        delta: r.f64("evolve.delta", 0.5)?,
        perturbation: r.f64("evolve.perturbation", 1e-3)?,
    };
    positive("evolve.delta", evolve.delta)?;
    if !(evolve.perturbation >= 0.0) {
        return Err(cfg_err("evolve.perturbation", "must be non-negative"));
    }
    if matches!(command, Command::Evolve2d | Command::Evolve3d) && weight.is_gaussian() {
        return Err(cfg_err("weight.m", "dynamics need a finite weight exponent"));
    }

    let out = PathBuf::from(r.string("out")?.unwrap_or_else(|| format!("runs/{}", command.name())));
    let seed = match r.get("seed") {
        None => 0,
        Some(Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(other) => return Err(cfg_err("seed", format!("expected a non-negative integer, found {other}"))),
    };

    Ok(RunConfig { command, strain, weight, grid, initial, time, tolerances, spectrum, residual, evolve, out, seed })
}

fn grid_err(e: LabError, n_key: &str, len_key: &str) -> LabError {
    match e {
        LabError::InvalidParameter { name, reason } => {
            let key = match name {
                "n" => "grid.n",
                "n3" => n_key,
                "radius" => "grid.radius",
                "half_height" => len_key,
                _ => n_key,
            };
            cfg_err(key, reason)
        }
        other => other,
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(key, format!("must be positive and finite, got {v}")))
    }
}

fn check_initial(command: Command, initial: &InitialData) -> Result<()> {
    let allowed: &[Preset] = match command {
        Command::Fields => &[Preset::D1g, Preset::GaussianColumn, Preset::Modulated3d, Preset::SingularBurgers],
        Command::Residual => &[Preset::SingularBurgers],
        Command::Evolve2d => &[Preset::D1g],
        Command::Evolve3d => &[Preset::D1g, Preset::Modulated3d],
        Command::Spectrum | Command::Accept => return Ok(()),
    };
    match initial {
        InitialData::Preset(p) if !allowed.contains(p) => Err(cfg_err(
            "initial.data",
            format!("preset `{}` is not available for `{}`", p.name(), command.name()),
        )),
        InitialData::File(_) if command == Command::Residual => {
            Err(cfg_err("initial.data", "residuals need a closed-form flow, not a file"))
        }
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn params(&self) -> StrainParams {
        StrainParams::new(self.strain.mu, self.strain.alpha, self.strain.t_star).expect("validated at load")
    }

    pub fn grid2d(&self) -> Grid2D {
        Grid2D::new(self.grid.n, self.grid.radius).expect("validated at load")
    }

    pub fn grid3d(&self) -> Result<Grid3D> {
        Grid3D::new(self.grid.n, self.grid.radius, self.grid.n3, self.grid.half_height)
            .map_err(|e| grid_err(e, "grid.n3", "grid.half_height"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        text.parse().unwrap()
    }

    fn key_of(e: LabError) -> String {
        match e {
            LabError::Config { key, .. } => key,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn defaults_are_desk_scale() {
        let c = from_table(Command::Evolve3d, &Table::new()).unwrap();
        assert_eq!((c.grid.n, c.grid.n3, c.grid.half_height), (96, 48, 24.0));
        assert_eq!(c.initial, InitialData::Preset(Preset::Modulated3d));
        let c = from_table(Command::Evolve2d, &Table::new()).unwrap();
        assert_eq!((c.grid.n, c.grid.radius), (256, 12.0));
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("[strain]\nmu = 0.5", "strain.mu"),
            ("[grid]\nn = 7", "grid.n"),
            ("[time]\ndt = -1.0", "time.dt"),
            ("[time]\ndt = \"fast\"", "time.dt"),
            ("[strain]\nmew = 2.0", "strain.mew"),
            ("[initial]\ndata = \"nonsense\"", "initial.data"),
            ("[spectrum]\nmus = [2.0, 0.9]", "spectrum.mus"),
            ("[residual]\ntimes = [1.0]", "residual.times"),
            ("[evolve]\nfit_window = [5.0, 2.0]", "evolve.fit_window"),
            ("[weight]\nm = 0.5", "weight.m"),
            ("command = \"plot\"", "command"),
        ];
        for (text, key) in cases {
            assert_eq!(key_of(from_table(Command::Evolve2d, &table(text)).unwrap_err()), key, "{text}");
        }
    }

    #[test]
    fn dynamics_refuse_gaussian_weight() {
        let t = table("[weight]\nm = \"gaussian\"");
        assert_eq!(key_of(from_table(Command::Evolve2d, &t).unwrap_err()), "weight.m");
        assert!(from_table(Command::Spectrum, &t).unwrap().weight.is_gaussian());
    }

    #[test]
    fn presets_are_checked_against_the_command() {
        let t = table("[initial]\ndata = \"gaussian-column\"");
        assert_eq!(key_of(from_table(Command::Evolve2d, &t).unwrap_err()), "initial.data");
        assert!(from_table(Command::Fields, &t).is_ok());
        let f = table("[initial]\ndata = \"runs/w.bin\"");
        assert_eq!(from_table(Command::Evolve3d, &f).unwrap().initial, InitialData::File("runs/w.bin".into()));
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "[strain]\nmu = 3.0\nalpha = 2.0\n[grid]\nn = 64\n").unwrap();
        let over = vec![parse_override("strain.mu=5").unwrap(), parse_override("initial.data=d1g").unwrap()];
        let c = load(Command::Evolve2d, Some(&p), &over).unwrap();
        assert_eq!((c.strain.mu, c.strain.alpha, c.grid.n), (5.0, 2.0, 64));
        assert_eq!(c.initial, InitialData::Preset(Preset::D1g));
    }

    #[test]
    fn unreadable_file_is_a_config_error() {
        let e = load(Command::Fields, Some(Path::new("/nonexistent/run.toml")), &[]).unwrap_err();
        assert_eq!(key_of(e), "--config");
    }
}
