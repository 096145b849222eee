use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use cfsqueeze::analysis::{
    spectrum_point, transmissivity_grid, ParamsSnapshot, PointStatus, SpectrumPoint,
};
use cfsqueeze::config::{parse_config_with, Command, ConfigError, Physics, RunConfig};
use cfsqueeze::output::{
    emit_series, render_record, render_series, report_values, write_output, OutputError,
};
use cfsqueeze::presets::{run_preset, PresetError, PresetItem};
use cfsqueeze::{
    optimal_transmissivity, oscillation_threshold, sweep_frequency, sweep_transmissivity, Axis,
    Error, SpectrumSeries, Stage,
};

#[derive(Parser)]
#[command(
    name = "cfsqueeze",
    version,
    about = "Coherent-feedback squeezing spectra"
)]
struct Cli {
    /// Flat `key = value` run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for `reproduce`); standard output if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Closed-loop spectrum at one sideband frequency.
    Spectrum {
        #[arg(long)]
        f: f64,
    },
    /// Spectrum versus CBS transmissivity on the grid k/n, k = 1..n.
    SweepT2 {
        #[arg(long)]
        f: f64,
        #[arg(long)]
        grid: usize,
    },
    /// Spectrum versus frequency.
    SweepFreq {
        #[arg(long)]
        fmin: f64,
        #[arg(long)]
        fmax: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = ["linear", "log"])]
        spacing: Option<String>,
    },
    /// Best CBS transmissivity for squeezing at one frequency.
    Optimize {
        #[arg(long)]
        f: f64,
    },
    /// Closed-loop oscillation threshold in pump strength.
    Threshold,
    /// Theory curves of a built-in figure preset.
    Reproduce {
        #[arg(long)]
        preset: String,
    },
}

enum Failure {
    Validation(String),
    Physics(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Physics(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Physics(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_threshold() {
            Failure::Physics(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<PresetError> for Failure {
    fn from(e: PresetError) -> Self {
        match e {
            PresetError::Physics(e) => e.into(),
            other => Failure::Validation(other.to_string()),
        }
    }
}

fn overrides(cli: &Cli) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    match &cli.command {
        Sub::Spectrum { f } => out.extend([("command", "spectrum".into()), ("f", f.to_string())]),
        Sub::SweepT2 { f, grid } => out.extend([
            ("command", "sweep-t2".into()),
            ("f", f.to_string()),
            ("grid", grid.to_string()),
        ]),
        Sub::SweepFreq {
            fmin,
            fmax,
            n,
            spacing,
        } => {
            out.extend([
                ("command", "sweep-freq".into()),
                ("fmin", fmin.to_string()),
                ("fmax", fmax.to_string()),
                ("n", n.to_string()),
            ]);
            if let Some(s) = spacing {
                out.push(("spacing", s.clone()));
            }
        }
        Sub::Optimize { f } => out.extend([("command", "optimize".into()), ("f", f.to_string())]),
        Sub::Threshold => out.push(("command", "threshold".into())),
        Sub::Reproduce { preset } => {
            out.extend([("command", "reproduce".into()), ("preset", preset.clone())])
        }
    }
    if let Some(p) = &cli.out {
        out.push(("output", p.display().to_string()));
    }
    if let Some(f) = &cli.format {
        out.push(("format", f.clone()));
    }
    out
}

fn warn_flagged(series: &SpectrumSeries) {
    let n = series.flagged_count();
    if n > 0 {
        eprintln!(
            "warning: {n} of {} points are at or above the closed-loop oscillation threshold",
            series.points.len()
        );
    }
}

fn physics(cfg: &RunConfig) -> &Physics {
    cfg.physics
        .as_ref()
        .expect("non-reproduce configs carry physics")
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let cfg = parse_config_with(&text, &overrides(cli))?;
    let meta = cfg.fields();
    let out = cfg.output.as_deref();

    match &cfg.command {
        Command::Spectrum { f_hz } => {
            let p = physics(&cfg);
            let (s_plus, s_minus) =
                spectrum_point(&p.opo, &p.feedback, *f_hz, p.detection.as_ref())?;
            let series = SpectrumSeries {
                stage: if p.detection.is_some() {
                    Stage::Detected
                } else {
                    Stage::ClosedLoop
                },
                axis: Axis::FrequencyHz,
                params: ParamsSnapshot {
                    opo: p.opo,
                    feedback: Some(p.feedback),
                    detection: p.detection,
                    frequency_hz: None,
                },
                points: vec![SpectrumPoint {
                    axis_value: *f_hz,
                    s_plus: Some(s_plus),
                    s_minus: Some(s_minus),
                    status: PointStatus::Ok,
                }],
            };
            emit_series(&series, &meta, cfg.format, out)?;
        }
        Command::SweepT2 { f_hz, grid } => {
            let p = physics(&cfg);
            let series = sweep_transmissivity(
                &p.opo,
                &p.feedback,
                *f_hz,
                &transmissivity_grid(*grid),
                p.detection.as_ref(),
            )?;
            warn_flagged(&series);
            emit_series(&series, &meta, cfg.format, out)?;
        }
        Command::SweepFreq {
            f_min,
            f_max,
            n,
            spacing,
        } => {
            let p = physics(&cfg);
            let series = sweep_frequency(
                &p.opo,
                &p.feedback,
                *f_min,
                *f_max,
                *n,
                *spacing,
                p.detection.as_ref(),
            )?;
            warn_flagged(&series);
            emit_series(&series, &meta, cfg.format, out)?;
        }
        Command::Optimize { f_hz } => {
            let p = physics(&cfg);
            let report = optimal_transmissivity(&p.opo, &p.feedback, *f_hz, p.baseline)?;
            if !report.improved {
                eprintln!("note: no transmissivity improves on the baseline");
            }
            write_output(
                out,
                &render_record("optimize", &report_values(&report), &meta, cfg.format),
            )?;
        }
        Command::Threshold => {
            let p = physics(&cfg);
            let x_star = oscillation_threshold(&p.opo, &p.feedback)?;
            let values = [
                ("x_threshold", Value::from(x_star)),
                ("x", Value::from(p.opo.x)),
                ("below_threshold", Value::from(p.opo.x < x_star)),
            ];
            write_output(out, &render_record("threshold", &values, &meta, cfg.format))?;
        }
        Command::Reproduce { preset } => {
            let run = run_preset(preset)?;
            let dir = out.unwrap_or(Path::new("."));
            fs::create_dir_all(dir)
                .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
            let mut file_meta = meta.clone();
            for (k, v) in &run.meta {
                if !file_meta.iter().any(|(have, _)| have == k) {
                    file_meta.push((k, v.clone()));
                }
            }
            for o in &run.outputs {
                let path = dir.join(format!("{}.{}", o.stem, cfg.format.extension()));
                let content = match &o.item {
                    PresetItem::Series(s) => {
                        warn_flagged(s);
                        render_series(s, &file_meta, cfg.format)
                    }
                    PresetItem::Report(r) => {
                        render_record("optimize", &report_values(r), &file_meta, cfg.format)
                    }
                    PresetItem::Record(values) => {
                        let values: Vec<_> =
                            values.iter().map(|(k, v)| (*k, Value::from(*v))).collect();
                        render_record(&o.stem, &values, &file_meta, cfg.format)
                    }
                };
                write_output(Some(&path), &content)?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return if usage_error {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
