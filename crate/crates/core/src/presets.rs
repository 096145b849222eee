//! Built-in parameter sets reproducing the published theory curves.
//!
//! | preset  | content                                                        |
//! |---------|----------------------------------------------------------------|
//! | `fig4`  | `S±` vs `T2` at 1 MHz for x = 0.1, 0.35, 0.6, bare-OPO points  |
//! | `fig5`  | `S±` vs frequency up to 8 MHz for `T2` = 0.7 .. 1.0, x = 0.1   |
//! | `fig7b` | detected `S±` vs `T2` at 2.5 MHz, experimental parameters      |
//! | `fig8`  | detected `S±` vs frequency up to 8 MHz, broadband parameters   |
//!
//! Everything is embedded; presets never read files.

use thiserror::Error;

use crate::analysis::{
    enhancement_bandwidth, optimal_transmissivity, sweep_frequency, sweep_transmissivity,
    transmissivity_grid, Baseline, EnhancementReport, Spacing, SpectrumSeries,
};
use crate::error::Error;
use crate::feedback::{DetectionParams, FeedbackParams};
use crate::opo::OpoParams;

pub const PRESET_NAMES: [&str; 4] = ["fig4", "fig5", "fig7b", "fig8"];

/// Sideband frequency of the transmissivity study in Hz.
pub const THEORY_FREQUENCY_HZ: f64 = 1.0e6;
/// Center frequency of the transmissivity measurement in Hz.
pub const MEASUREMENT_FREQUENCY_HZ: f64 = 2.5e6;
/// Spectrum-analyzer settings of the measurements (metadata only).
pub const RESOLUTION_BANDWIDTH_HZ: f64 = 30.0e3;
pub const VIDEO_BANDWIDTH_HZ: f64 = 300.0;

pub const FIG4_PUMPS: [f64; 3] = [0.1, 0.35, 0.6];
pub const FEEDBACK_T2S: [f64; 4] = [0.7, 0.8, 0.9, 1.0];

const BROADBAND_F_MIN_HZ: f64 = 1.0e4;
const BROADBAND_F_MAX_HZ: f64 = 8.0e6;
const BROADBAND_POINTS: usize = 800;
const T2_GRID_POINTS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum PresetError {
    #[error("unknown preset `{0}`; expected one of fig4, fig5, fig7b, fig8")]
    Unknown(String),
    #[error(transparent)]
    Physics(#[from] Error),
}

/// Theory OPO: `T1 = 0.12`, `L1 = 5e-3`, `l = 0.5 m`.
pub fn theory_opo(x: f64) -> OpoParams {
    OpoParams {
        t1: 0.12,
        l1: 5.0e-3,
        length: 0.5,
        x,
        pump_sign: Default::default(),
    }
}

/// Theory loop: `L2 = 0.05`, `la = lb = 0.25 m`.
pub fn theory_loop(t2: f64) -> FeedbackParams {
    FeedbackParams {
        t2,
        l2: 5.0e-2,
        la: 0.25,
        lb: 0.25,
    }
}

/// OPO of the transmissivity measurement: `x = 0.111`, `T1 = 0.20`, `L1 = 6.5e-3`.
pub fn experiment_opo() -> OpoParams {
    OpoParams {
        t1: 0.20,
        l1: 6.5e-3,
        length: 0.5,
        x: 0.111,
        pump_sign: Default::default(),
    }
}

/// OPO of the broadband measurement: `x = 0.106`, `L1 = 9.0e-3`.
pub fn broadband_opo() -> OpoParams {
    OpoParams {
        x: 0.106,
        l1: 9.0e-3,
        ..experiment_opo()
    }
}

/// Experimental loop: `L2 = 0.12`, `la = lb = 0.25 m`.
pub fn experiment_loop(t2: f64) -> FeedbackParams {
    FeedbackParams {
        t2,
        l2: 0.12,
        la: 0.25,
        lb: 0.25,
    }
}

/// Homodyne detector: visibility 0.985, photodiode efficiency 0.99.
pub fn experiment_detection() -> DetectionParams {
    DetectionParams {
        xi: 0.985,
        rho: 0.99,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetItem {
    Series(SpectrumSeries),
    Report(EnhancementReport),
    /// Named scalar values.
    Record(Vec<(&'static str, f64)>),
}

/// One output file of a preset, identified by its file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetOutput {
    pub stem: String,
    pub item: PresetItem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetRun {
    pub name: &'static str,
    pub meta: Vec<(&'static str, String)>,
    pub outputs: Vec<PresetOutput>,
}

/// Evaluates a named preset.
pub fn run_preset(name: &str) -> Result<PresetRun, PresetError> {
    match name {
        "fig4" => fig4(),
        "fig5" => fig5(),
        "fig7b" => fig7b(),
        "fig8" => fig8(),
        other => Err(PresetError::Unknown(other.to_string())),
    }
}

fn output(stem: String, item: PresetItem) -> PresetOutput {
    PresetOutput { stem, item }
}

fn fig4() -> Result<PresetRun, PresetError> {
    let grid = transmissivity_grid(T2_GRID_POINTS);
    let mut outputs = Vec::new();
    for x in FIG4_PUMPS {
        let op = theory_opo(x);
        let fb = theory_loop(1.0);
        let sweep = sweep_transmissivity(&op, &fb, THEORY_FREQUENCY_HZ, &grid, None)?;
        let bare = Baseline::Uncontrolled.apply(&fb);
        let baseline = sweep_transmissivity(&op, &bare, THEORY_FREQUENCY_HZ, &[1.0], None)?;
        let report = optimal_transmissivity(&op, &fb, THEORY_FREQUENCY_HZ, Baseline::Uncontrolled)?;
        outputs.push(output(
            format!("fig4_x{x}_sweep"),
            PresetItem::Series(sweep),
        ));
        outputs.push(output(
            format!("fig4_x{x}_baseline"),
            PresetItem::Series(baseline),
        ));
        outputs.push(output(
            format!("fig4_x{x}_optimum"),
            PresetItem::Report(report),
        ));
    }
    Ok(PresetRun {
        name: "fig4",
        meta: vec![("preset", "fig4".into())],
        outputs,
    })
}

fn frequency_family(
    prefix: &str,
    op: &OpoParams,
    make_loop: fn(f64) -> FeedbackParams,
    det: Option<&DetectionParams>,
) -> Result<Vec<PresetOutput>, PresetError> {
    let mut outputs = Vec::new();
    let mut bandwidths = Vec::new();
    for t2 in FEEDBACK_T2S {
        let fb = make_loop(t2);
        let series = sweep_frequency(
            op,
            &fb,
            BROADBAND_F_MIN_HZ,
            BROADBAND_F_MAX_HZ,
            BROADBAND_POINTS,
            Spacing::Linear,
            det,
        )?;
        outputs.push(output(
            format!("{prefix}_t2_{t2}"),
            PresetItem::Series(series),
        ));
        if t2 < 1.0 {
            let bw = enhancement_bandwidth(op, &fb, BROADBAND_F_MAX_HZ, Baseline::SameLoss)?;
            bandwidths.push(bw);
        }
    }
    let names = [
        "bandwidth_hz_t2_0.7",
        "bandwidth_hz_t2_0.8",
        "bandwidth_hz_t2_0.9",
    ];
    outputs.push(output(
        format!("{prefix}_bandwidth"),
        PresetItem::Record(names.into_iter().zip(bandwidths).collect()),
    ));
    Ok(outputs)
}

fn fig5() -> Result<PresetRun, PresetError> {
    Ok(PresetRun {
        name: "fig5",
        meta: vec![("preset", "fig5".into())],
        outputs: frequency_family("fig5", &theory_opo(0.1), theory_loop, None)?,
    })
}

fn measurement_meta(name: &str) -> Vec<(&'static str, String)> {
    vec![
        ("preset", name.to_string()),
        ("rbw_hz", RESOLUTION_BANDWIDTH_HZ.to_string()),
        ("vbw_hz", VIDEO_BANDWIDTH_HZ.to_string()),
    ]
}

fn fig7b() -> Result<PresetRun, PresetError> {
    let op = experiment_opo();
    let fb = experiment_loop(1.0);
    let det = experiment_detection();
    let sweep = sweep_transmissivity(
        &op,
        &fb,
        MEASUREMENT_FREQUENCY_HZ,
        &transmissivity_grid(T2_GRID_POINTS),
        Some(&det),
    )?;
    let measured =
        sweep_transmissivity(&op, &fb, MEASUREMENT_FREQUENCY_HZ, &[0.8, 1.0], Some(&det))?;
    Ok(PresetRun {
        name: "fig7b",
        meta: measurement_meta("fig7b"),
        outputs: vec![
            output("fig7b_sweep".into(), PresetItem::Series(sweep)),
            output("fig7b_measured_points".into(), PresetItem::Series(measured)),
        ],
    })
}

fn fig8() -> Result<PresetRun, PresetError> {
    let det = experiment_detection();
    Ok(PresetRun {
        name: "fig8",
        meta: measurement_meta("fig8"),
        outputs: frequency_family("fig8", &broadband_opo(), experiment_loop, Some(&det))?,
    })
}
