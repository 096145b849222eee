//! Sweeps, the optimal-transmissivity search and the enhancement bandwidth.
//!
//! Public entry points take ordinary frequencies in Hz. Points where the CF
//! loop is at or above its oscillation threshold are kept in a series with
//! [`PointStatus::AboveThreshold`] and no spectrum values, so that series
//! lengths always match their grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{closed_loop_spectrum, detected_spectrum, DetectionParams, FeedbackParams};
use crate::opo::{angular_frequency, open_loop_spectrum, OpoParams, PumpSign, Quadrature};

/// Points in the coarse transmissivity grid of [`optimal_transmissivity`].
pub const OPTIMIZER_GRID_POINTS: usize = 201;
/// Target bracket width in `T2` of the golden-section refinement.
pub const OPTIMIZER_TOLERANCE: f64 = 1e-6;
/// Scan steps of [`enhancement_bandwidth`] over `(0, f_max]`.
pub const BANDWIDTH_SCAN_STEPS: usize = 2000;
/// Final resolution of the bandwidth crossover in Hz.
pub const BANDWIDTH_RESOLUTION_HZ: f64 = 1.0e3;

/// Power ratio to decibels.
pub fn to_db(s: f64) -> Result<f64> {
    if s.is_finite() && s > 0.0 {
        Ok(10.0 * s.log10())
    } else {
        Err(Error::Domain(format!("cannot convert power {s} to dB")))
    }
}

impl OpoParams {
    /// Quadrature pushed below the QNL by this pump.
    pub fn squeezed_quadrature(&self) -> Quadrature {
        match self.pump_sign {
            PumpSign::Positive => Quadrature::Minus,
            PumpSign::Negative => Quadrature::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    OpenLoop,
    ClosedLoop,
    Detected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    FrequencyHz,
    TransmissivityT2,
    PumpStrengthX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    AboveThreshold,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::AboveThreshold => "above_threshold",
        }
    }
}

/// One sample of a series. Spectrum values are `None` for flagged points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub axis_value: f64,
    pub s_plus: Option<f64>,
    pub s_minus: Option<f64>,
    pub status: PointStatus,
}

/// Parameters a series was generated with. The swept quantity is
/// overwritten per point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsSnapshot {
    pub opo: OpoParams,
    pub feedback: Option<FeedbackParams>,
    pub detection: Option<DetectionParams>,
    /// Fixed sideband frequency for non-frequency axes.
    pub frequency_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    pub stage: Stage,
    pub axis: Axis,
    pub params: ParamsSnapshot,
    pub points: Vec<SpectrumPoint>,
}

impl SpectrumSeries {
    pub fn flagged_count(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.status == PointStatus::AboveThreshold)
            .count()
    }
}

/// Frequency grid spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Reference against which feedback is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Bare OPO: `T2 = 1` and `L2 = 0`.
    Uncontrolled,
    /// Open CBS at the same loop loss: `T2 = 1`, `L2` unchanged.
    SameLoss,
}

impl Baseline {
    pub fn apply(self, fb: &FeedbackParams) -> FeedbackParams {
        match self {
            Baseline::Uncontrolled => fb.with_t2(1.0).with_l2(0.0),
            Baseline::SameLoss => fb.with_t2(1.0),
        }
    }
}

/// Closed-loop `(S+, S-)` at one frequency, optionally detection-corrected.
/// Sweeps produce their points through this function.
pub fn spectrum_point(
    op: &OpoParams,
    fb: &FeedbackParams,
    f_hz: f64,
    det: Option<&DetectionParams>,
) -> Result<(f64, f64)> {
    let omega = angular_frequency(f_hz);
    let plus = closed_loop_spectrum(op, fb, omega, Quadrature::Plus)?;
    let minus = closed_loop_spectrum(op, fb, omega, Quadrature::Minus)?;
    match det {
        Some(d) => Ok((detected_spectrum(plus, d)?, detected_spectrum(minus, d)?)),
        None => Ok((plus, minus)),
    }
}

fn make_point(axis_value: f64, value: Result<(f64, f64)>) -> Result<SpectrumPoint> {
    match value {
        Ok((s_plus, s_minus)) => Ok(SpectrumPoint {
            axis_value,
            s_plus: Some(s_plus),
            s_minus: Some(s_minus),
            status: PointStatus::Ok,
        }),
        Err(e) if e.is_threshold() => Ok(SpectrumPoint {
            axis_value,
            s_plus: None,
            s_minus: None,
            status: PointStatus::AboveThreshold,
        }),
        Err(e) => Err(e),
    }
}

fn check_grid(name: &str, grid: &[f64], ok: impl Fn(f64) -> bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain(format!("{name} grid is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite() || !ok(**v)) {
        return Err(Error::Domain(format!("{name} grid value {v} out of range")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!(
            "{name} grid is not strictly increasing"
        )));
    }
    Ok(())
}

fn check_frequency(f_hz: f64) -> Result<()> {
    if f_hz.is_finite() && f_hz >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "frequency {f_hz} Hz must be finite and >= 0"
        )))
    }
}

fn stage_for(det: Option<&DetectionParams>) -> Stage {
    if det.is_some() {
        Stage::Detected
    } else {
        Stage::ClosedLoop
    }
}

/// `n` evenly spaced transmissivities `k/n`, `k = 1..=n`, ending at 1.
pub fn transmissivity_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / n as f64).collect()
}

/// `n >= 2` frequencies from `f_min` to `f_max` inclusive.
pub fn frequency_grid(f_min: f64, f_max: f64, n: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(f_min.is_finite() && f_max.is_finite() && f_min > 0.0 && f_min < f_max) {
        return Err(Error::Domain(format!(
            "need 0 < f_min < f_max, got f_min = {f_min}, f_max = {f_max}"
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 frequency points, got {n}"
        )));
    }
    let last = (n - 1) as f64;
    let grid = (0..n).map(|i| {
        let t = i as f64 / last;
        match spacing {
            Spacing::Linear => f_min + (f_max - f_min) * t,
            Spacing::Log => f_min * (f_max / f_min).powf(t),
        }
    });
    let mut grid: Vec<f64> = grid.collect();
    grid[n - 1] = f_max;
    Ok(grid)
}

/// `S±` versus CBS transmissivity at a fixed frequency.
pub fn sweep_transmissivity(
    op: &OpoParams,
    fb_template: &FeedbackParams,
    f_hz: f64,
    grid: &[f64],
    det: Option<&DetectionParams>,
) -> Result<SpectrumSeries> {
    check_frequency(f_hz)?;
    check_grid("T2", grid, |v| v > 0.0 && v <= 1.0)?;
    let points = grid
        .iter()
        .map(|&t2| make_point(t2, spectrum_point(op, &fb_template.with_t2(t2), f_hz, det)))
        .collect::<Result<_>>()?;
    Ok(SpectrumSeries {
        stage: stage_for(det),
        axis: Axis::TransmissivityT2,
        params: ParamsSnapshot {
            opo: *op,
            feedback: Some(*fb_template),
            detection: det.copied(),
            frequency_hz: Some(f_hz),
        },
        points,
    })
}

/// Closed-loop `S±` versus sideband frequency.
pub fn sweep_frequency(
    op: &OpoParams,
    fb: &FeedbackParams,
    f_min: f64,
    f_max: f64,
    n: usize,
    spacing: Spacing,
    det: Option<&DetectionParams>,
) -> Result<SpectrumSeries> {
    let grid = frequency_grid(f_min, f_max, n, spacing)?;
    let points = grid
        .iter()
        .map(|&f| make_point(f, spectrum_point(op, fb, f, det)))
        .collect::<Result<_>>()?;
    Ok(SpectrumSeries {
        stage: stage_for(det),
        axis: Axis::FrequencyHz,
        params: ParamsSnapshot {
            opo: *op,
            feedback: Some(*fb),
            detection: det.copied(),
            frequency_hz: None,
        },
        points,
    })
}

/// Bare-OPO `S±` versus sideband frequency.
pub fn sweep_open_loop(
    op: &OpoParams,
    f_min: f64,
    f_max: f64,
    n: usize,
    spacing: Spacing,
) -> Result<SpectrumSeries> {
    let grid = frequency_grid(f_min, f_max, n, spacing)?;
    let points = grid
        .iter()
        .map(|&f| {
            let omega = angular_frequency(f);
            let value = open_loop_spectrum(op, omega, Quadrature::Plus)
                .and_then(|p| Ok((p, open_loop_spectrum(op, omega, Quadrature::Minus)?)));
            make_point(f, value)
        })
        .collect::<Result<_>>()?;
    Ok(SpectrumSeries {
        stage: Stage::OpenLoop,
        axis: Axis::FrequencyHz,
        params: ParamsSnapshot {
            opo: *op,
            feedback: None,
            detection: None,
            frequency_hz: None,
        },
        points,
    })
}

/// Closed-loop `S±` versus pump strength at a fixed frequency.
pub fn sweep_pump(
    op: &OpoParams,
    fb: &FeedbackParams,
    f_hz: f64,
    grid: &[f64],
    det: Option<&DetectionParams>,
) -> Result<SpectrumSeries> {
    check_frequency(f_hz)?;
    check_grid("x", grid, |v| v >= 0.0)?;
    let points = grid
        .iter()
        .map(|&x| make_point(x, spectrum_point(&op.with_x(x), fb, f_hz, det)))
        .collect::<Result<_>>()?;
    Ok(SpectrumSeries {
        stage: stage_for(det),
        axis: Axis::PumpStrengthX,
        params: ParamsSnapshot {
            opo: *op,
            feedback: Some(*fb),
            detection: det.copied(),
            frequency_hz: Some(f_hz),
        },
        points,
    })
}

/// Result of [`optimal_transmissivity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhancementReport {
    /// CBS transmissivity minimizing the squeezed-quadrature noise.
    pub t2_star: f64,
    pub s_minus_at_star: f64,
    pub baseline_s_minus: f64,
    /// `10 log10(baseline / best)` when `improved`, else 0.
    pub improvement_db: f64,
    pub improved: bool,
    pub baseline: Baseline,
}

/// Minimizes `f` on `[lo, hi]` by golden-section search until the bracket is
/// narrower than `tol`. Returns the best point evaluated.
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Finds the CBS transmissivity giving the lowest squeezed-quadrature noise
/// at `f_hz` and compares it with `baseline`.
///
/// A coarse scan of [`OPTIMIZER_GRID_POINTS`] transmissivities is refined by
/// golden-section search around the best grid point. Transmissivities at or
/// above the closed-loop threshold are treated as infinitely noisy.
pub fn optimal_transmissivity(
    op: &OpoParams,
    fb_template: &FeedbackParams,
    f_hz: f64,
    baseline: Baseline,
) -> Result<EnhancementReport> {
    check_frequency(f_hz)?;
    fb_template.validate()?;
    let omega = angular_frequency(f_hz);
    let q = op.squeezed_quadrature();

    let baseline_s = closed_loop_spectrum(op, &baseline.apply(fb_template), omega, q)?;

    let objective = |t2: f64| -> Result<f64> {
        match closed_loop_spectrum(op, &fb_template.with_t2(t2), omega, q) {
            Ok(s) => Ok(s),
            Err(e) if e.is_threshold() => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    let grid = transmissivity_grid(OPTIMIZER_GRID_POINTS);
    let values = grid
        .iter()
        .map(|&t| objective(t))
        .collect::<Result<Vec<_>>>()?;
    let (best_idx, &coarse_best) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let mut t2_star = grid[best_idx];
    let mut s_star = coarse_best;

    let lo = if best_idx == 0 {
        grid[0] / 2.0
    } else {
        grid[best_idx - 1]
    };
    let hi = grid[(best_idx + 1).min(grid.len() - 1)];
    // Only threshold errors can occur inside the bracket; they map to +inf.
    let (t_refined, s_refined) = golden_section_min(
        |t| objective(t).unwrap_or(f64::INFINITY),
        lo,
        hi,
        OPTIMIZER_TOLERANCE,
    );
    if s_refined < s_star {
        t2_star = t_refined;
        s_star = s_refined;
    }

    let improved = s_star < baseline_s;
    let improvement_db = if improved {
        to_db(baseline_s)? - to_db(s_star)?
    } else {
        0.0
    };
    Ok(EnhancementReport {
        t2_star,
        s_minus_at_star: s_star,
        baseline_s_minus: baseline_s,
        improvement_db,
        improved,
        baseline,
    })
}

/// Highest frequency up to `f_max` below which feedback keeps the squeezed
/// quadrature quieter than `baseline`.
///
/// Scans `(0, f_max]` in [`BANDWIDTH_SCAN_STEPS`] steps, then bisects the
/// first crossover to [`BANDWIDTH_RESOLUTION_HZ`]. Returns 0 when there is no
/// enhancement at the first scan frequency and `f_max` when there is no
/// crossover.
pub fn enhancement_bandwidth(
    op: &OpoParams,
    fb: &FeedbackParams,
    f_max: f64,
    baseline: Baseline,
) -> Result<f64> {
    if !(f_max.is_finite() && f_max > 0.0) {
        return Err(Error::Domain(format!("f_max = {f_max} must be positive")));
    }
    let q = op.squeezed_quadrature();
    let reference = baseline.apply(fb);
    let gap = |f: f64| -> Result<f64> {
        let omega = angular_frequency(f);
        Ok(closed_loop_spectrum(op, fb, omega, q)?
            - closed_loop_spectrum(op, &reference, omega, q)?)
    };

    let step = f_max / BANDWIDTH_SCAN_STEPS as f64;
    if gap(step)? >= 0.0 {
        return Ok(0.0);
    }
    for k in 2..=BANDWIDTH_SCAN_STEPS {
        let f = if k == BANDWIDTH_SCAN_STEPS {
            f_max
        } else {
            k as f64 * step
        };
        if gap(f)? >= 0.0 {
            let (mut lo, mut hi) = ((k - 1) as f64 * step, f);
            while hi - lo > BANDWIDTH_RESOLUTION_HZ {
                let mid = 0.5 * (lo + hi);
                if gap(mid)? < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(lo);
        }
    }
    Ok(f_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::FeedbackParams;

    fn fig4_opo(x: f64) -> OpoParams {
        OpoParams::new(0.12, 5.0e-3, 0.5, x).unwrap()
    }

    fn fig4_loop() -> FeedbackParams {
        FeedbackParams::new(1.0, 0.05, 0.25, 0.25).unwrap()
    }

    #[test]
    fn db_conversion() {
        assert_eq!(to_db(1.0).unwrap(), 0.0);
        assert!((to_db(2.0).unwrap() - 3.0103).abs() < 1e-4);
        assert!((to_db(0.66942).unwrap() + 1.744).abs() < 1e-3);
        assert!(to_db(0.0).is_err());
        assert!(to_db(-1.0).is_err());
        assert!(to_db(f64::NAN).is_err());
    }

    #[test]
    fn grids() {
        let g = frequency_grid(1.0, 9.0, 5, Spacing::Linear).unwrap();
        assert_eq!(g, vec![1.0, 3.0, 5.0, 7.0, 9.0]);
        let g = frequency_grid(1.0e3, 1.0e7, 5, Spacing::Log).unwrap();
        for (got, want) in g.iter().zip([1e3, 1e4, 1e5, 1e6, 1e7]) {
            assert!((got / want - 1.0).abs() < 1e-12);
        }
        assert!(frequency_grid(0.0, 1.0, 5, Spacing::Linear).is_err());
        assert!(frequency_grid(2.0, 1.0, 5, Spacing::Linear).is_err());
        assert!(frequency_grid(1.0, 2.0, 1, Spacing::Linear).is_err());
        let t = transmissivity_grid(4);
        assert_eq!(t, vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn single_open_point_matches_open_loop() {
        let op = fig4_opo(0.1);
        let fb = fig4_loop().with_l2(0.0);
        let series = sweep_transmissivity(&op, &fb, 1.0e6, &[1.0], None).unwrap();
        let omega = angular_frequency(1.0e6);
        let p = series.points[0];
        assert!(
            (p.s_plus.unwrap() - open_loop_spectrum(&op, omega, Quadrature::Plus).unwrap()).abs()
                < 1e-10
        );
        assert!(
            (p.s_minus.unwrap() - open_loop_spectrum(&op, omega, Quadrature::Minus).unwrap()).abs()
                < 1e-10
        );
        assert_eq!(series.stage, Stage::ClosedLoop);
        assert_eq!(series.axis, Axis::TransmissivityT2);
    }

    #[test]
    fn invalid_grids_rejected() {
        let op = fig4_opo(0.1);
        let fb = fig4_loop();
        assert!(sweep_transmissivity(&op, &fb, 1e6, &[], None).is_err());
        assert!(sweep_transmissivity(&op, &fb, 1e6, &[0.0, 0.5], None).is_err());
        assert!(sweep_transmissivity(&op, &fb, 1e6, &[0.5, 0.4], None).is_err());
        assert!(sweep_transmissivity(&op, &fb, 1e6, &[0.5, 1.2], None).is_err());
    }

    #[test]
    fn fig4_sweep_has_interior_minimum_only_at_weak_pump() {
        let fb = fig4_loop();
        let grid = transmissivity_grid(101);
        let baseline = |x: f64| {
            closed_loop_spectrum(
                &fig4_opo(x),
                &Baseline::Uncontrolled.apply(&fb),
                angular_frequency(1e6),
                Quadrature::Minus,
            )
            .unwrap()
        };
        let min_minus = |x: f64| {
            sweep_transmissivity(&fig4_opo(x), &fb, 1e6, &grid, None)
                .unwrap()
                .points
                .iter()
                .filter_map(|p| p.s_minus)
                .fold(f64::INFINITY, f64::min)
        };
        assert!(min_minus(0.1) < baseline(0.1));
        assert!(min_minus(0.6) >= baseline(0.6));
    }

    #[test]
    fn flagged_points_are_kept() {
        let fb = fig4_loop();
        let grid = transmissivity_grid(20);
        let series = sweep_transmissivity(&fig4_opo(0.6), &fb, 1e6, &grid, None).unwrap();
        assert_eq!(series.points.len(), grid.len());
        assert!(series.flagged_count() > 0);
        let last = series.points.last().unwrap();
        assert_eq!(last.status, PointStatus::Ok);
        for p in &series.points {
            assert_eq!(p.status == PointStatus::Ok, p.s_minus.is_some());
        }
    }

    #[test]
    fn zero_pump_frequency_sweep_is_flat() {
        let fb = fig4_loop().with_t2(0.7);
        let series =
            sweep_frequency(&fig4_opo(0.0), &fb, 1e5, 8e6, 40, Spacing::Linear, None).unwrap();
        for p in series.points {
            assert!((p.s_plus.unwrap() - 1.0).abs() < 1e-10);
            assert!((p.s_minus.unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn open_cbs_with_small_loss_tracks_uncontrolled_opo() {
        let op = fig4_opo(0.1);
        let lossy =
            sweep_frequency(&op, &fig4_loop(), 1e5, 8e6, 80, Spacing::Linear, None).unwrap();
        let bare = sweep_open_loop(&op, 1e5, 8e6, 80, Spacing::Linear).unwrap();
        assert_eq!(bare.stage, Stage::OpenLoop);
        for (a, b) in lossy.points.iter().zip(&bare.points) {
            let d_plus = to_db(a.s_plus.unwrap()).unwrap() - to_db(b.s_plus.unwrap()).unwrap();
            let d_minus = to_db(a.s_minus.unwrap()).unwrap() - to_db(b.s_minus.unwrap()).unwrap();
            assert!(d_plus.abs() < 0.1 && d_minus.abs() < 0.1);
        }
    }

    #[test]
    fn smaller_t2_squeezes_more_at_low_frequency() {
        let op = fig4_opo(0.1);
        let s = |t2: f64| {
            sweep_frequency(
                &op,
                &fig4_loop().with_t2(t2),
                1e4,
                8e6,
                50,
                Spacing::Linear,
                None,
            )
            .unwrap()
        };
        let (a, b) = (s(0.7), s(0.9));
        assert!(a.points[0].s_minus.unwrap() < b.points[0].s_minus.unwrap());
    }

    #[test]
    fn series_points_match_single_calls() {
        let op = fig4_opo(0.2);
        let fb = fig4_loop().with_t2(0.8);
        let series = sweep_frequency(&op, &fb, 1e5, 5e6, 17, Spacing::Log, None).unwrap();
        for p in &series.points {
            let (plus, minus) = spectrum_point(&op, &fb, p.axis_value, None).unwrap();
            assert_eq!(p.s_plus.unwrap().to_bits(), plus.to_bits());
            assert_eq!(p.s_minus.unwrap().to_bits(), minus.to_bits());
        }
    }

    #[test]
    fn pump_sweep_flags_above_threshold() {
        let fb = fig4_loop().with_t2(0.8);
        let series = sweep_pump(&fig4_opo(0.0), &fb, 1e6, &[0.1, 0.3, 0.5, 0.7], None).unwrap();
        let statuses: Vec<_> = series.points.iter().map(|p| p.status).collect();
        assert_eq!(
            statuses,
            [
                PointStatus::Ok,
                PointStatus::Ok,
                PointStatus::AboveThreshold,
                PointStatus::AboveThreshold
            ]
        );
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-16);
    }

    #[test]
    fn optimizer_reports() {
        let fb = fig4_loop();
        let weak =
            optimal_transmissivity(&fig4_opo(0.1), &fb, 1e6, Baseline::Uncontrolled).unwrap();
        assert!(weak.improved && weak.improvement_db > 0.0);
        assert!(weak.t2_star > 0.0 && weak.t2_star < 1.0);
        let strong =
            optimal_transmissivity(&fig4_opo(0.6), &fb, 1e6, Baseline::Uncontrolled).unwrap();
        assert!(!strong.improved);
        assert_eq!(strong.improvement_db, 0.0);
    }

    #[test]
    fn optimizer_never_reports_negative_improvement_without_loss() {
        let fb = fig4_loop().with_l2(0.0);
        for x in [0.0, 0.05, 0.3, 0.7, 0.95] {
            let r = optimal_transmissivity(&fig4_opo(x), &fb, 1e6, Baseline::Uncontrolled).unwrap();
            assert!(r.improvement_db >= 0.0);
            assert!(r.t2_star > 0.0 && r.t2_star <= 1.0);
        }
    }

    #[test]
    fn refinement_not_worse_than_grid() {
        let op = fig4_opo(0.35);
        let fb = fig4_loop();
        let omega = angular_frequency(1e6);
        let coarse = transmissivity_grid(OPTIMIZER_GRID_POINTS)
            .into_iter()
            .filter_map(|t| {
                closed_loop_spectrum(&op, &fb.with_t2(t), omega, Quadrature::Minus).ok()
            })
            .fold(f64::INFINITY, f64::min);
        let r = optimal_transmissivity(&op, &fb, 1e6, Baseline::Uncontrolled).unwrap();
        assert!(r.s_minus_at_star <= coarse + 1e-12);
    }

    #[test]
    fn bandwidth_zero_for_open_cbs() {
        let bw =
            enhancement_bandwidth(&fig4_opo(0.1), &fig4_loop(), 8e6, Baseline::SameLoss).unwrap();
        assert_eq!(bw, 0.0);
    }

    #[test]
    fn bandwidth_narrows_with_stronger_feedback() {
        let op = fig4_opo(0.1);
        let bw = |t2: f64| {
            enhancement_bandwidth(&op, &fig4_loop().with_t2(t2), 8e6, Baseline::SameLoss).unwrap()
        };
        let (a, b, c) = (bw(0.7), bw(0.8), bw(0.9));
        assert!(0.0 < a && a < b && b < c && c < 8e6, "{a} {b} {c}");
    }

    #[test]
    fn bandwidth_is_a_crossover() {
        let op = fig4_opo(0.1);
        let fb = fig4_loop().with_t2(0.8);
        let reference = Baseline::SameLoss.apply(&fb);
        let bw = enhancement_bandwidth(&op, &fb, 8e6, Baseline::SameLoss).unwrap();
        let s = |fb: &FeedbackParams, f: f64| {
            closed_loop_spectrum(&op, fb, angular_frequency(f), Quadrature::Minus).unwrap()
        };
        assert!(s(&fb, bw) < s(&reference, bw));
        assert!(
            s(&fb, bw + BANDWIDTH_RESOLUTION_HZ) >= s(&reference, bw + BANDWIDTH_RESOLUTION_HZ)
        );
    }
}
