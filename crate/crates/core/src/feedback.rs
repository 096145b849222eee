//! Closed coherent-feedback loop around the OPO.
//!
//! The OPO output travels a path `lb` back to the control beam splitter (CBS)
//! through a lumped loop loss `L2` (a fictitious beam splitter just before the
//! CBS), and the CBS reflects part of it back over a path `la` into the OPO.
//! The loop is held on carrier resonance, `exp(i w0 (tau_a + tau_b)) = -1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result, ThresholdKind};
use crate::opo::{transfer_functions, OpoParams, Quadrature, SPEED_OF_LIGHT};

/// Smallest admissible magnitude of the closed-loop denominator.
pub const DENOMINATOR_GUARD: f64 = 1e-9;

/// Absolute tolerance in `x` of [`oscillation_threshold`].
pub const THRESHOLD_TOLERANCE: f64 = 1e-9;

/// CF loop parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    /// CBS power transmissivity, in (0, 1]. `T2 = 1` opens the loop.
    pub t2: f64,
    /// Lumped loop power loss, in [0, 1].
    pub l2: f64,
    /// Path length CBS -> OPO in meters.
    pub la: f64,
    /// Path length OPO -> CBS in meters.
    pub lb: f64,
}

impl FeedbackParams {
    pub fn new(t2: f64, l2: f64, la: f64, lb: f64) -> Result<Self> {
        let fb = FeedbackParams { t2, l2, la, lb };
        fb.validate()?;
        Ok(fb)
    }

    /// The bare OPO seen through an ideal, lossless CBS at `T2 = 1`.
    pub fn uncontrolled(la: f64, lb: f64) -> Self {
        FeedbackParams {
            t2: 1.0,
            l2: 0.0,
            la,
            lb,
        }
    }

    pub fn with_t2(mut self, t2: f64) -> Self {
        self.t2 = t2;
        self
    }

    pub fn with_l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_range("T2", self.t2, "0 < T2 <= 1", |v| v > 0.0 && v <= 1.0)?;
        check_range("L2", self.l2, "0 <= L2 <= 1", |v| (0.0..=1.0).contains(&v))?;
        check_range("la", self.la, "la >= 0", |v| v >= 0.0)?;
        check_range("lb", self.lb, "lb >= 0", |v| v >= 0.0)?;
        Ok(())
    }

    /// Propagation delays `(tau_a, tau_b)` in seconds.
    pub fn delays(&self) -> (f64, f64) {
        (self.la / SPEED_OF_LIGHT, self.lb / SPEED_OF_LIGHT)
    }

    /// Carrier phase factor of one loop round trip. Always `-1`: only the
    /// resonant loop is modeled.
    pub fn carrier_phase(&self) -> Complex64 {
        Complex64::new(-1.0, 0.0)
    }

    /// Round-trip amplitude factor `sqrt((1 - T2)(1 - L2))`.
    pub fn round_trip_amplitude(&self) -> f64 {
        ((1.0 - self.t2) * (1.0 - self.l2)).sqrt()
    }
}

/// Homodyne detector imperfections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Homodyne visibility, in [0, 1].
    pub xi: f64,
    /// Photodiode quantum efficiency, in [0, 1].
    pub rho: f64,
}

impl DetectionParams {
    pub fn new(xi: f64, rho: f64) -> Result<Self> {
        let d = DetectionParams { xi, rho };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("xi", self.xi, "0 <= xi <= 1", |v| (0.0..=1.0).contains(&v))?;
        check_range("rho", self.rho, "0 <= rho <= 1", |v| {
            (0.0..=1.0).contains(&v)
        })?;
        Ok(())
    }

    /// Overall detection efficiency `eta = xi² rho`.
    pub fn eta(&self) -> f64 {
        self.xi * self.xi * self.rho
    }
}

/// Loop gain `alpha± = (G ± g) exp(i Omega (tau_a + tau_b))` times the
/// resonant carrier phase `-1`.
pub fn loop_gain_alpha(
    op: &OpoParams,
    fb: &FeedbackParams,
    omega: f64,
    q: Quadrature,
) -> Result<Complex64> {
    fb.validate()?;
    let tf = transfer_functions(op, omega)?;
    let (tau_a, tau_b) = fb.delays();
    let delay = Complex64::from_polar(1.0, omega * (tau_a + tau_b));
    Ok(fb.carrier_phase() * tf.input_gain(q) * delay)
}

/// Loss-port path `beta± = (Gbar ± gbar) exp(i Omega tau_b)`.
///
/// The carrier part of the `tau_b` phase is set to 1; only `|beta|²` enters
/// the spectrum.
pub fn loss_path_beta(
    op: &OpoParams,
    fb: &FeedbackParams,
    omega: f64,
    q: Quadrature,
) -> Result<Complex64> {
    fb.validate()?;
    let tf = transfer_functions(op, omega)?;
    let (_, tau_b) = fb.delays();
    Ok(tf.loss_gain(q) * Complex64::from_polar(1.0, omega * tau_b))
}

/// Closed-loop spectrum from given `alpha` and `beta`, without any threshold
/// guard. Exposed so callers can study the expression itself (e.g. its
/// independence from the phase of `beta`).
pub fn closed_loop_from_gains(fb: &FeedbackParams, alpha: Complex64, beta: Complex64) -> f64 {
    let t2 = fb.t2;
    let l2 = fb.l2;
    let denom = 1.0 + alpha * fb.round_trip_amplitude();
    let ratio = alpha / denom;

    let from_input = (1.0 - t2).sqrt() + ratio * (t2 * (1.0 - l2).sqrt());
    let from_opo_loss = t2 * (1.0 - l2) * beta.norm_sqr() / denom.norm_sqr();
    let from_loop_loss =
        Complex64::from((t2 * l2).sqrt()) - ratio * (t2 * (1.0 - l2) * (1.0 - t2) * l2).sqrt();

    from_input.norm_sqr() + from_opo_loss + from_loop_loss.norm_sqr()
}

/// Real DC loop denominator `1 + alpha(0) sqrt((1-T2)(1-L2))`, minimized over
/// both quadratures. Positive iff the loop is below its oscillation threshold.
fn dc_stability_margin(op: &OpoParams, fb: &FeedbackParams) -> Result<f64> {
    let r = fb.round_trip_amplitude();
    let tf = transfer_functions(op, 0.0)?;
    Ok(Quadrature::BOTH
        .iter()
        .map(|&q| 1.0 + (fb.carrier_phase() * tf.input_gain(q)).re * r)
        .fold(f64::INFINITY, f64::min))
}

/// Vacuum-input closed-loop spectrum at angular frequency `omega`, QNL = 1.
///
/// Fails with a closed-loop threshold error when the loop is at or above its
/// oscillation threshold, or when the loop denominator at `omega` is within
/// [`DENOMINATOR_GUARD`] of zero.
pub fn closed_loop_spectrum(
    op: &OpoParams,
    fb: &FeedbackParams,
    omega: f64,
    q: Quadrature,
) -> Result<f64> {
    fb.validate()?;
    op.check_below_threshold()?;
    let above = Error::AboveThreshold {
        x: op.x,
        kind: ThresholdKind::ClosedLoop,
    };
    if dc_stability_margin(op, fb)? <= DENOMINATOR_GUARD {
        return Err(above);
    }
    let alpha = loop_gain_alpha(op, fb, omega, q)?;
    let beta = loss_path_beta(op, fb, omega, q)?;
    if (1.0 + alpha * fb.round_trip_amplitude()).norm() < DENOMINATOR_GUARD {
        return Err(above);
    }
    Ok(closed_loop_from_gains(fb, alpha, beta))
}

/// Detection-efficiency correction `1 + eta (S - 1)`.
pub fn detected_spectrum(s: f64, det: &DetectionParams) -> Result<f64> {
    check_range("S", s, "S >= 0", |v| v >= 0.0)?;
    det.validate()?;
    Ok(1.0 + det.eta() * (s - 1.0))
}

/// Pump strength at which the closed loop starts to oscillate.
///
/// Bisects the DC loop denominator over `x` in (0, 1) to
/// [`THRESHOLD_TOLERANCE`]; the `x` field of `op` is ignored. Returns 1 when
/// the loop is open (`T2 = 1`) or fully lossy (`L2 = 1`).
pub fn oscillation_threshold(op: &OpoParams, fb: &FeedbackParams) -> Result<f64> {
    let base = op.with_x(0.0);
    base.validate()?;
    fb.validate()?;
    if fb.round_trip_amplitude() == 0.0 {
        return Ok(1.0);
    }
    // margin(0) > 0 and margin -> -inf as x -> 1, so a root always exists.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > THRESHOLD_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if dc_stability_margin(&base.with_x(mid), fb)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
