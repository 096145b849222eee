//! Run configuration: a flat `key = value` document.
//!
//! ```text
//! # Fig. 4 operating point
//! command = optimize
//! f  = 1e6
//! T1 = 0.12
//! L1 = 5.0e-3
//! l  = 0.5
//! x  = 0.1
//! T2 = 0.8
//! L2 = 5.0e-2
//! la = 0.25
//! lb = 0.25
//! ```
//!
//! Blank lines and `#` comments are ignored. Keys are case-sensitive and may
//! appear once. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::{Baseline, Spacing};
use crate::error::Error as PhysicsError;
use crate::feedback::{DetectionParams, FeedbackParams};
use crate::opo::{OpoParams, PumpSign};

pub const KNOWN_KEYS: &[&str] = &[
    "command",
    "T1",
    "L1",
    "l",
    "x",
    "pump_sign",
    "T2",
    "L2",
    "la",
    "lb",
    "xi",
    "rho",
    "baseline",
    "f",
    "grid",
    "fmin",
    "fmax",
    "n",
    "spacing",
    "preset",
    "output",
    "format",
];

const PHYSICS_KEYS: &[&str] = &["T1", "L1", "l", "x", "T2", "L2", "la", "lb"];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error(transparent)]
    Invalid(#[from] PhysicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("expected csv or json, got `{s}`")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Spectrum {
        f_hz: f64,
    },
    SweepT2 {
        f_hz: f64,
        grid: usize,
    },
    SweepFreq {
        f_min: f64,
        f_max: f64,
        n: usize,
        spacing: Spacing,
    },
    Optimize {
        f_hz: f64,
    },
    Threshold,
    Reproduce {
        preset: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::SweepT2 { .. } => "sweep-t2",
            Command::SweepFreq { .. } => "sweep-freq",
            Command::Optimize { .. } => "optimize",
            Command::Threshold => "threshold",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

/// Physics parameters of a run. Absent for `reproduce`, whose presets carry
/// their own.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub opo: OpoParams,
    pub feedback: FeedbackParams,
    pub detection: Option<DetectionParams>,
    pub baseline: Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub physics: Option<Physics>,
    pub command: Command,
    /// `None` writes to standard output (a directory for `reproduce`).
    pub output: Option<PathBuf>,
    pub format: Format,
}

fn spacing_name(s: Spacing) -> &'static str {
    match s {
        Spacing::Linear => "linear",
        Spacing::Log => "log",
    }
}

fn baseline_name(b: Baseline) -> &'static str {
    match b {
        Baseline::Uncontrolled => "uncontrolled",
        Baseline::SameLoss => "same_loss",
    }
}

fn pump_sign_name(s: PumpSign) -> &'static str {
    match s {
        PumpSign::Positive => "positive",
        PumpSign::Negative => "negative",
    }
}

impl RunConfig {
    /// Every field of the validated configuration, defaults included, as
    /// `(key, value)` pairs in a fixed order. Re-parsing these pairs yields
    /// the same configuration.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("command", self.command.name().to_string())];
        if let Some(p) = &self.physics {
            out.extend([
                ("T1", p.opo.t1.to_string()),
                ("L1", p.opo.l1.to_string()),
                ("l", p.opo.length.to_string()),
                ("x", p.opo.x.to_string()),
                ("pump_sign", pump_sign_name(p.opo.pump_sign).to_string()),
                ("T2", p.feedback.t2.to_string()),
                ("L2", p.feedback.l2.to_string()),
                ("la", p.feedback.la.to_string()),
                ("lb", p.feedback.lb.to_string()),
            ]);
            if let Some(d) = &p.detection {
                out.push(("xi", d.xi.to_string()));
                out.push(("rho", d.rho.to_string()));
            }
            out.push(("baseline", baseline_name(p.baseline).to_string()));
        }
        match &self.command {
            Command::Spectrum { f_hz } | Command::Optimize { f_hz } => {
                out.push(("f", f_hz.to_string()))
            }
            Command::SweepT2 { f_hz, grid } => {
                out.push(("f", f_hz.to_string()));
                out.push(("grid", grid.to_string()));
            }
            Command::SweepFreq {
                f_min,
                f_max,
                n,
                spacing,
            } => {
                out.push(("fmin", f_min.to_string()));
                out.push(("fmax", f_max.to_string()));
                out.push(("n", n.to_string()));
                out.push(("spacing", spacing_name(*spacing).to_string()));
            }
            Command::Threshold => {}
            Command::Reproduce { preset } => out.push(("preset", preset.clone())),
        }
        let output = match &self.output {
            Some(p) => p.display().to_string(),
            None => "-".to_string(),
        };
        out.push(("output", output));
        out.push(("format", self.format.to_string()));
        out
    }

    /// Renders [`Self::fields`] as a config document.
    pub fn to_document(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Like [`parse_config`], with `overrides` (e.g. from command-line flags)
/// replacing or adding keys after the document is read.
pub fn parse_config_with(
    text: &str,
    overrides: &[(&str, String)],
) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("empty key or value in `{content}`"),
            });
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if entries.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }
    for (key, value) in overrides {
        if !KNOWN_KEYS.contains(key) {
            return Err(ConfigError::UnknownKey {
                line: 0,
                key: key.to_string(),
            });
        }
        entries.insert(key.to_string(), value.clone());
    }
    build(&entries)
}

struct Entries<'a>(&'a BTreeMap<String, String>);

impl Entries<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::InvalidValue {
                    key: key.to_string(),
                    message: format!("`{v}`: {e}"),
                })
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| ConfigError::MissingKeys(vec![key.to_string()]))
    }

    fn choice<T: Copy>(
        &self,
        key: &str,
        default: T,
        options: &[(&str, T)],
    ) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => options
                .iter()
                .find(|(name, _)| *name == v)
                .map(|(_, t)| *t)
                .ok_or_else(|| ConfigError::InvalidValue {
                    key: key.to_string(),
                    message: format!(
                        "`{v}`: expected one of {}",
                        options
                            .iter()
                            .map(|(n, _)| *n)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                }),
        }
    }
}

fn command_keys(command: &str) -> &'static [&'static str] {
    match command {
        "spectrum" | "optimize" => &["f"],
        "sweep-t2" => &["f", "grid"],
        "sweep-freq" => &["fmin", "fmax", "n"],
        "reproduce" => &["preset"],
        _ => &[],
    }
}

fn build(map: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let e = Entries(map);
    let command_name = e.raw("command");
    let needs_physics = command_name != Some("reproduce");

    let mut missing: Vec<String> = Vec::new();
    if command_name.is_none() {
        missing.push("command".into());
    }
    if needs_physics {
        missing.extend(
            PHYSICS_KEYS
                .iter()
                .filter(|k| e.raw(k).is_none())
                .map(|k| k.to_string()),
        );
    }
    if let Some(name) = command_name {
        missing.extend(
            command_keys(name)
                .iter()
                .filter(|k| e.raw(k).is_none())
                .map(|k| k.to_string()),
        );
    }
    if !missing.is_empty() {
        return Err(ConfigError::MissingKeys(missing));
    }

    let command = match command_name.unwrap_or_default() {
        "spectrum" => Command::Spectrum { f_hz: frequency(&e, "f")? },
        "optimize" => Command::Optimize { f_hz: frequency(&e, "f")? },
        "sweep-t2" => {
            let grid: usize = e.require("grid")?;
            if grid == 0 {
                return Err(ConfigError::InvalidValue {
                    key: "grid".into(),
                    message: "expected at least 1 grid point".into(),
                });
            }
            Command::SweepT2 { f_hz: frequency(&e, "f")?, grid }
        }
        "sweep-freq" => {
            let f_min = frequency(&e, "fmin")?;
            let f_max = frequency(&e, "fmax")?;
            let n: usize = e.require("n")?;
            if !(f_min > 0.0 && f_min < f_max) {
                return Err(ConfigError::InvalidValue {
                    key: "fmin".into(),
                    message: format!("expected 0 < fmin < fmax, got fmin = {f_min}, fmax = {f_max}"),
                });
            }
            if n < 2 {
                return Err(ConfigError::InvalidValue {
                    key: "n".into(),
                    message: format!("expected n >= 2, got {n}"),
                });
            }
            let spacing = e.choice("spacing", Spacing::Linear, &[("linear", Spacing::Linear), ("log", Spacing::Log)])?;
            Command::SweepFreq { f_min, f_max, n, spacing }
        }
        "threshold" => Command::Threshold,
        "reproduce" => Command::Reproduce { preset: e.require("preset")? },
        other => {
            return Err(ConfigError::InvalidValue {
                key: "command".into(),
                message: format!(
                    "`{other}`: expected one of spectrum, sweep-t2, sweep-freq, optimize, threshold, reproduce"
                ),
            })
        }
    };

    let physics = if needs_physics {
        Some(physics(&e)?)
    } else {
        None
    };
    let format = e.get::<Format>("format")?.unwrap_or_default();
    let output = e.raw("output").filter(|v| *v != "-").map(PathBuf::from);

    Ok(RunConfig {
        physics,
        command,
        output,
        format,
    })
}

fn frequency(e: &Entries<'_>, key: &str) -> Result<f64, ConfigError> {
    let f: f64 = e.require(key)?;
    if f.is_finite() && f >= 0.0 {
        Ok(f)
    } else {
        Err(ConfigError::InvalidValue {
            key: key.to_string(),
            message: format!("expected a finite frequency >= 0 Hz, got {f}"),
        })
    }
}

fn physics(e: &Entries<'_>) -> Result<Physics, ConfigError> {
    let pump_sign = e.choice(
        "pump_sign",
        PumpSign::Positive,
        &[
            ("positive", PumpSign::Positive),
            ("negative", PumpSign::Negative),
        ],
    )?;
    let opo = OpoParams::new(
        e.require("T1")?,
        e.require("L1")?,
        e.require("l")?,
        e.require("x")?,
    )?
    .with_pump_sign(pump_sign);
    if opo.x >= 1.0 {
        return Err(PhysicsError::InvalidParameter {
            name: "x",
            value: opo.x,
            bound: "0 <= x < 1",
        }
        .into());
    }
    let feedback = FeedbackParams::new(
        e.require("T2")?,
        e.require("L2")?,
        e.require("la")?,
        e.require("lb")?,
    )?;
    let detection = match (e.get::<f64>("xi")?, e.get::<f64>("rho")?) {
        (Some(xi), Some(rho)) => Some(DetectionParams::new(xi, rho)?),
        (None, None) => None,
        (Some(_), None) => return Err(ConfigError::MissingKeys(vec!["rho".into()])),
        (None, Some(_)) => return Err(ConfigError::MissingKeys(vec!["xi".into()])),
    };
    let baseline = e.choice(
        "baseline",
        Baseline::Uncontrolled,
        &[
            ("uncontrolled", Baseline::Uncontrolled),
            ("same_loss", Baseline::SameLoss),
        ],
    )?;
    Ok(Physics {
        opo,
        feedback,
        detection,
        baseline,
    })
}
