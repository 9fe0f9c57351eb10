//! Run configurations: `key = value` documents with flag overrides.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::photonic::{DetectorKind, MeasurementSetting, Settings, StateFamily};
use crate::search::SearchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Strength,
    Optimize,
    EtaMin,
    EtaForStrength,
    Trace,
    Simulate,
    Chsh,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Strength,
        Command::Optimize,
        Command::EtaMin,
        Command::EtaForStrength,
        Command::Trace,
        Command::Simulate,
        Command::Chsh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Strength => "strength",
            Command::Optimize => "optimize",
            Command::EtaMin => "eta-min",
            Command::EtaForStrength => "eta-for-strength",
            Command::Trace => "trace",
            Command::Simulate => "simulate",
            Command::Chsh => "chsh",
        }
    }

    fn needs_eta(self) -> bool {
        matches!(
            self,
            Command::Strength | Command::Optimize | Command::Simulate | Command::Chsh
        )
    }

    fn needs_settings(self) -> bool {
        matches!(self, Command::Strength | Command::Chsh)
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
                format!("expected one of {}", names.join(", "))
            })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    /// Whitespace-aligned columns with a header line.
    #[default]
    AppendixTable,
    /// Comma-separated values; boundary curves become plot data.
    DelimitedValues,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::AppendixTable => "appendix-table",
            OutputFormat::DelimitedValues => "delimited-values",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "appendix-table" => Ok(OutputFormat::AppendixTable),
            "delimited-values" => Ok(OutputFormat::DelimitedValues),
            _ => Err("expected appendix-table or delimited-values".into()),
        }
    }
}

/// Monte-Carlo sample size when none is given.
pub const DEFAULT_TRIALS: u64 = 1_000_000;

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub family: StateFamily,
    pub kind: DetectorKind,
    pub eta: Option<f64>,
    pub settings: Option<Settings>,
    /// Strength level in bits; 0 asks for the S > 0 boundary.
    pub target_s: Option<f64>,
    /// θ or γ values for `trace`.
    pub grid: Vec<f64>,
    pub trials: u64,
    pub search: SearchConfig,
    pub out: Option<PathBuf>,
    /// Second output of `trace`: plot data.
    pub plot: Option<PathBuf>,
    pub format: OutputFormat,
}

const KEYS: [&str; 25] = [
    "command",
    "family",
    "theta",
    "gamma",
    "phi",
    "kind",
    "eta",
    "settings",
    "azimuths",
    "target_s",
    "grid",
    "trials",
    "restarts",
    "seed",
    "planar",
    "eta_resolution",
    "angle_tol",
    "strength_tol",
    "max_evals",
    "truncation",
    "em_tol",
    "em_max_iter",
    "out",
    "plot",
    "format",
];

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Raw key-value pairs after overrides, before validation.
struct Entries(Vec<(String, String)>);

impl Entries {
    fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn parse<T: FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| config_error(key, format!("cannot read {v:?} as {expected}")))
            })
            .transpose()
    }

    fn real(&self, key: &str, ok: impl Fn(f64) -> bool, range: &str) -> Result<Option<f64>> {
        match self.parse::<f64>(key, "a number")? {
            Some(x) if !x.is_finite() || !ok(x) => Err(config_error(
                key,
                format!("{x} is outside the accepted range {range}"),
            )),
            other => Ok(other),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        let x = x.trim();
                        x.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| {
                                config_error(key, format!("cannot read {x:?} as a number"))
                            })
                    })
                    .collect()
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(config_error(
                    key,
                    format!("cannot read {v:?} as true or false"),
                )),
            })
            .transpose()
    }
}

fn read_document(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            config_error(
                &format!("line {}", number + 1),
                format!("expected key = value, found {line:?}"),
            )
        })?;
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Parses a configuration document, applies `overrides` (later entries
/// win) and validates the result.
///
/// Lines have the form `key = value`; `#` starts a comment. Every error
/// names the offending key.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut entries = read_document(text)?;
    entries.extend(overrides.iter().cloned());
    for (key, _) in &entries {
        if !KEYS.contains(&key.as_str()) {
            return Err(config_error(key, "unknown key"));
        }
    }
    let e = Entries(entries);

    let command: Command = e
        .parse("command", "a command")?
        .ok_or_else(|| config_error("command", "missing required key"))?;
    let family = read_family(&e)?;
    let kind: DetectorKind = e
        .parse("kind", "counter or detector")?
        .ok_or_else(|| config_error("kind", "missing required key (counter or detector)"))?;
    let eta = e.real("eta", |x| (0.0..=1.0).contains(&x), "[0, 1]")?;
    if command.needs_eta() && eta.is_none() {
        return Err(config_error("eta", format!("required by {command}")));
    }
    let settings = read_settings(&e)?;
    if command.needs_settings() && settings.is_none() {
        return Err(config_error("settings", format!("required by {command}")));
    }
    let target_s = e.real("target_s", |x| x >= 0.0, "[0, inf) bits")?;
    if command == Command::EtaForStrength && !target_s.is_some_and(|t| t > 0.0) {
        return Err(config_error(
            "target_s",
            "eta-for-strength needs a target in (0, inf) bits",
        ));
    }
    let grid = e.list("grid")?.unwrap_or_default();
    if command == Command::Trace && grid.is_empty() {
        return Err(config_error("grid", "required by trace"));
    }
    for &value in &grid {
        family
            .with_parameter(value)
            .build()
            .map_err(|err| config_error("grid", err.to_string()))?;
    }
    let trials = e
        .parse::<u64>("trials", "a whole number")?
        .unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(config_error(
            "trials",
            "0 is outside the accepted range [1, inf)",
        ));
    }

    let mut search = SearchConfig::default();
    if let Some(r) = e.parse::<usize>("restarts", "a whole number")? {
        search.restarts = r;
    }
    if let Some(s) = e.parse::<u64>("seed", "a whole number")? {
        search.seed = s;
    }
    if let Some(p) = e.flag("planar")? {
        search.planar_only = p;
    }
    if let Some(x) = e.real("eta_resolution", |x| x > 0.0 && x <= 0.5, "(0, 0.5]")? {
        search.eta_resolution = x;
    }
    if let Some(x) = e.real("angle_tol", |x| x > 0.0, "(0, inf) degrees")? {
        search.angle_tol = x;
    }
    if let Some(x) = e.real("strength_tol", |x| x > 0.0, "(0, inf) bits")? {
        search.strength_tol = x;
    }
    if let Some(x) = e.parse::<usize>("max_evals", "a whole number")? {
        search.max_evals = x;
    }
    if let Some(x) = e.real("truncation", |x| x > 0.0, "(0, inf) bits")? {
        search.strength.truncation = x;
    }
    if let Some(x) = e.real("em_tol", |x| x > 0.0, "(0, inf) bits")? {
        search.strength.em.tol = x;
    }
    if let Some(x) = e.parse::<usize>("em_max_iter", "a whole number")? {
        search.strength.em.max_iter = x;
    }
    search.validate()?;
    if search.planar_only && settings.is_some_and(|s| !s.is_planar()) {
        return Err(config_error(
            "azimuths",
            "off-plane settings need planar = false",
        ));
    }

    let format = e
        .parse::<OutputFormat>("format", "appendix-table or delimited-values")?
        .unwrap_or_default();
    Ok(RunConfig {
        command,
        family,
        kind,
        eta,
        settings,
        target_s,
        grid,
        trials,
        search,
        out: e.get("out").map(PathBuf::from),
        plot: e.get("plot").map(PathBuf::from),
        format,
    })
}

fn read_family(e: &Entries) -> Result<StateFamily> {
    let theta = e.get("theta").is_some();
    let gamma = e.get("gamma").is_some();
    if theta && gamma {
        return Err(config_error(
            "theta, gamma",
            "give theta for the unbalanced family or gamma for the pseudo family, not both",
        ));
    }
    let family = match e.get("family") {
        Some("unbalanced") => "unbalanced",
        Some("pseudo") => "pseudo",
        Some(other) => {
            return Err(config_error(
                "family",
                format!("{other:?} is not unbalanced or pseudo"),
            ))
        }
        None if theta => "unbalanced",
        None if gamma => "pseudo",
        None => return Err(config_error("family", "missing required key")),
    };
    if family == "unbalanced" {
        if gamma || e.get("phi").is_some() {
            let key = if gamma { "gamma" } else { "phi" };
            return Err(config_error(
                &format!("family, {key}"),
                format!("{key} belongs to the pseudo family"),
            ));
        }
        let theta = e.real("theta", |x| x > 0.0 && x <= 45.0, "(0, 45] degrees")?;
        Ok(StateFamily::Unbalanced {
            theta: theta.unwrap_or(45.0),
        })
    } else {
        if theta {
            return Err(config_error(
                "family, theta",
                "theta belongs to the unbalanced family",
            ));
        }
        let gamma = e.real("gamma", |x| (0.0..=90.0).contains(&x), "[0, 90] degrees")?;
        let phi = e.real(
            "phi",
            |x| (-360.0..=360.0).contains(&x),
            "[-360, 360] degrees",
        )?;
        Ok(StateFamily::PseudoBell {
            gamma: gamma.unwrap_or(45.0),
            phi: phi.unwrap_or(0.0),
        })
    }
}

fn read_settings(e: &Entries) -> Result<Option<Settings>> {
    let Some(polars) = e.list("settings")? else {
        if e.get("azimuths").is_some() {
            return Err(config_error("azimuths", "given without settings"));
        }
        return Ok(None);
    };
    if polars.len() != 4 {
        return Err(config_error(
            "settings",
            format!(
                "expected 4 polar angles A_1, A_2, B_1, B_2, found {}",
                polars.len()
            ),
        ));
    }
    let azimuths = e.list("azimuths")?.unwrap_or_else(|| vec![0.0; 4]);
    if azimuths.len() != 4 {
        return Err(config_error(
            "azimuths",
            format!("expected 4 azimuths, found {}", azimuths.len()),
        ));
    }
    let mut out = [MeasurementSetting::wrapped(0.0, 0.0); 4];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = MeasurementSetting::new(polars[i], azimuths[i]).map_err(|err| {
            let key = if (-180.0..=180.0).contains(&polars[i]) {
                "azimuths"
            } else {
                "settings"
            };
            config_error(key, err.to_string())
        })?;
    }
    Ok(Some(Settings(out)))
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl RunConfig {
    /// Every effective value as a document that [`parse_config`] reads back
    /// to an equal configuration.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("command", self.command.to_string());
        line("family", self.family.family_name().to_string());
        match self.family {
            StateFamily::Unbalanced { theta } => line("theta", theta.to_string()),
            StateFamily::PseudoBell { gamma, phi } => {
                line("gamma", gamma.to_string());
                line("phi", phi.to_string());
            }
        }
        line("kind", self.kind.name().to_string());
        if let Some(eta) = self.eta {
            line("eta", eta.to_string());
        }
        if let Some(settings) = &self.settings {
            line("settings", join(&settings.polars()));
            line("azimuths", join(&settings.0.map(|m| m.azimuth())));
        }
        if let Some(t) = self.target_s {
            line("target_s", t.to_string());
        }
        if !self.grid.is_empty() {
            line("grid", join(&self.grid));
        }
        line("trials", self.trials.to_string());
        let c = &self.search;
        line("restarts", c.restarts.to_string());
        line("seed", c.seed.to_string());
        line("planar", c.planar_only.to_string());
        line("eta_resolution", c.eta_resolution.to_string());
        line("angle_tol", c.angle_tol.to_string());
        line("strength_tol", c.strength_tol.to_string());
        line("max_evals", c.max_evals.to_string());
        line("truncation", c.strength.truncation.to_string());
        line("em_tol", c.strength.em.tol.to_string());
        line("em_max_iter", c.strength.em.max_iter.to_string());
        if let Some(p) = &self.out {
            line("out", p.display().to_string());
        }
        if let Some(p) = &self.plot {
            line("plot", p.display().to_string());
        }
        line("format", self.format.name().to_string());
        s
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::dump`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.dump().as_bytes());
        hex::encode(&digest[..8])
    }
}
