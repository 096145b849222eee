//! Frequency-domain model of coherent-feedback (CF) control of optical
//! squeezing.
//!
//! The crate evaluates the vacuum noise spectra of a degenerate optical
//! parametric oscillator (OPO), the spectra of the same OPO closed in a
//! coherent feedback loop through a control beam splitter (CBS) with delays
//! and loop loss, and the homodyne detection-efficiency correction. On top of
//! that sit parameter sweeps, an optimal-transmissivity search, the
//! enhancement bandwidth, and the presets behind the `cfsqueeze` CLI.
//!
//! All spectra are normalized to the quantum noise limit (QNL = 1, 0 dB).
//!
//! ```
//! use cfsqueeze::{open_loop_spectrum, OpoParams, Quadrature};
//!
//! let opo = OpoParams::new(0.12, 0.0, 0.5, 0.1).unwrap();
//! let s = open_loop_spectrum(&opo, 0.0, Quadrature::Minus).unwrap();
//! assert!((s - (0.9f64 / 1.1).powi(2)).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod config;
mod error;
pub mod feedback;
pub mod opo;
pub mod output;
pub mod presets;

pub use analysis::{
    enhancement_bandwidth, optimal_transmissivity, sweep_frequency, sweep_pump,
    sweep_transmissivity, to_db, Axis, Baseline, EnhancementReport, ParamsSnapshot, PointStatus,
    Spacing, SpectrumPoint, SpectrumSeries, Stage,
};
pub use error::{Error, Result, ThresholdKind};
pub use feedback::{
    closed_loop_spectrum, detected_spectrum, loop_gain_alpha, loss_path_beta,
    oscillation_threshold, DetectionParams, FeedbackParams,
};
pub use opo::{
    angular_frequency, damping_rates, dc_lossless_spectrum, open_loop_spectrum, transfer_functions,
    DampingRates, OpoParams, PumpSign, Quadrature, TransferQuad, SPEED_OF_LIGHT,
};
