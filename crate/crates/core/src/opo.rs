//! Open-loop OPO: damping rates, input-output transfer functions and the
//! vacuum-input quadrature spectra.
//!
//! The OPO is a single-mode cavity with one coupling mirror (power
//! transmissivity `T1`) and intracavity loss `L1`, pumped with a real
//! nonlinear gain `epsilon = x * gamma / 2`. In the Fourier domain the output
//! field is a linear combination of the input field, the loss-port vacuum and
//! their conjugates; the four coefficients are collected in [`TransferQuad`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result, ThresholdKind};

/// Exact SI speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts an ordinary frequency in Hz to angular frequency in rad/s.
pub fn angular_frequency(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

/// Sign of the (real) pump amplitude. A positive pump squeezes the
/// [`Quadrature::Minus`] quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpSign {
    #[default]
    Positive,
    Negative,
}

impl PumpSign {
    pub fn factor(self) -> f64 {
        match self {
            PumpSign::Positive => 1.0,
            PumpSign::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            PumpSign::Positive => PumpSign::Negative,
            PumpSign::Negative => PumpSign::Positive,
        }
    }
}

/// Quadrature selector: `Plus` is the amplitude quadrature (theta = 0),
/// `Minus` the phase quadrature (theta = pi/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    Plus,
    Minus,
}

impl Quadrature {
    pub const BOTH: [Quadrature; 2] = [Quadrature::Plus, Quadrature::Minus];

    /// `+1` for `Plus`, `-1` for `Minus`; the sign in `G ± g`.
    pub fn sign(self) -> f64 {
        match self {
            Quadrature::Plus => 1.0,
            Quadrature::Minus => -1.0,
        }
    }

    /// Quadrature angle theta in radians.
    pub fn angle(self) -> f64 {
        match self {
            Quadrature::Plus => 0.0,
            Quadrature::Minus => PI / 2.0,
        }
    }
}

/// Physical parameters of the OPO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpoParams {
    /// Power transmissivity of the input-output mirror, in (0, 1].
    pub t1: f64,
    /// Intracavity power loss, in [0, 1).
    pub l1: f64,
    /// Round-trip optical path length in meters.
    pub length: f64,
    /// Normalized pump strength `2|epsilon|/gamma`, in [0, 1).
    pub x: f64,
    #[serde(default)]
    pub pump_sign: PumpSign,
}

/// Cavity damping rates in 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingRates {
    /// Coupling through the input-output mirror.
    pub gamma1: f64,
    /// Intracavity loss.
    pub gamma_l1: f64,
    /// Total decay rate, `gamma1 + gamma_l1`.
    pub gamma: f64,
}

impl OpoParams {
    /// Builds validated parameters with a positive pump.
    pub fn new(t1: f64, l1: f64, length: f64, x: f64) -> Result<Self> {
        let p = OpoParams {
            t1,
            l1,
            length,
            x,
            pump_sign: PumpSign::Positive,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_pump_sign(mut self, sign: PumpSign) -> Self {
        self.pump_sign = sign;
        self
    }

    pub fn with_x(mut self, x: f64) -> Self {
        self.x = x;
        self
    }

    /// Checks the cavity parameters and `x >= 0`. Whether `x` is below the
    /// oscillation threshold is checked separately by [`Self::check_below_threshold`].
    pub fn validate(&self) -> Result<()> {
        check_range("T1", self.t1, "0 < T1 <= 1", |v| v > 0.0 && v <= 1.0)?;
        check_range("L1", self.l1, "0 <= L1 < 1", |v| (0.0..1.0).contains(&v))?;
        check_range("l", self.length, "l > 0", |v| v > 0.0)?;
        check_range("x", self.x, "x >= 0", |v| v >= 0.0)?;
        Ok(())
    }

    pub fn check_below_threshold(&self) -> Result<()> {
        self.validate()?;
        if self.x >= 1.0 {
            return Err(Error::AboveThreshold {
                x: self.x,
                kind: ThresholdKind::OpenLoop,
            });
        }
        Ok(())
    }

    fn rates(&self) -> DampingRates {
        let gamma1 = SPEED_OF_LIGHT * self.t1 / self.length;
        let gamma_l1 = SPEED_OF_LIGHT * self.l1 / self.length;
        DampingRates {
            gamma1,
            gamma_l1,
            gamma: gamma1 + gamma_l1,
        }
    }

    /// Signed real pump amplitude `epsilon = ±x gamma / 2` in 1/s.
    pub fn epsilon(&self) -> f64 {
        self.pump_sign.factor() * self.x * self.rates().gamma / 2.0
    }
}

/// Damping rates `gamma1 = c T1 / l`, `gamma_L1 = c L1 / l` and their sum.
pub fn damping_rates(p: &OpoParams) -> Result<DampingRates> {
    p.validate()?;
    Ok(p.rates())
}

/// The four OPO transfer functions at one sideband angular frequency.
///
/// `A_out = G A_in + g A_in† + Gbar C_in + gbar C_in†`, where `C_in` is the
/// vacuum entering through the intracavity loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferQuad {
    /// Sideband angular frequency in rad/s.
    pub omega: f64,
    /// Input field to output field (`G`).
    pub direct: Complex64,
    /// Conjugate input to output (`g`).
    pub conjugate: Complex64,
    /// Loss-port field to output (`Gbar`).
    pub loss_direct: Complex64,
    /// Conjugate loss-port field to output (`gbar`).
    pub loss_conjugate: Complex64,
}

impl TransferQuad {
    /// `G ± g`, the quadrature gain from the input port.
    pub fn input_gain(&self, q: Quadrature) -> Complex64 {
        self.direct + self.conjugate * q.sign()
    }

    /// `Gbar ± gbar`, the quadrature gain from the loss port.
    pub fn loss_gain(&self, q: Quadrature) -> Complex64 {
        self.loss_direct + self.loss_conjugate * q.sign()
    }
}

/// Evaluates the OPO transfer functions at angular frequency `omega`.
pub fn transfer_functions(p: &OpoParams, omega: f64) -> Result<TransferQuad> {
    p.check_below_threshold()?;
    if !omega.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite angular frequency {omega}"
        )));
    }
    let r = p.rates();
    let eps = p.epsilon();
    let i_omega = Complex64::new(0.0, omega);

    let half_gamma = Complex64::from(r.gamma / 2.0) - i_omega;
    let denom = half_gamma * half_gamma - eps * eps;
    let half_loss = Complex64::from(r.gamma_l1 / 2.0) - i_omega;

    let direct = ((r.gamma1 / 2.0).powi(2) - half_loss * half_loss + eps * eps) / denom;
    let loss_direct = (r.gamma1 * r.gamma_l1).sqrt() * half_gamma / denom;
    let conjugate = Complex64::from(eps * r.gamma1) / denom;
    let loss_conjugate = conjugate * (r.gamma_l1 / r.gamma1).sqrt();

    Ok(TransferQuad {
        omega,
        direct,
        conjugate,
        loss_direct,
        loss_conjugate,
    })
}

/// Open-loop vacuum spectrum `|G ± g|² + |Gbar ± gbar|²`, QNL = 1.
pub fn open_loop_spectrum(p: &OpoParams, omega: f64, q: Quadrature) -> Result<f64> {
    let tf = transfer_functions(p, omega)?;
    Ok(tf.input_gain(q).norm_sqr() + tf.loss_gain(q).norm_sqr())
}

/// Closed-form DC spectrum of a lossless OPO:
/// `((gamma1 ± 2 epsilon) / (gamma1 ∓ 2 epsilon))²`.
pub fn dc_lossless_spectrum(p: &OpoParams, q: Quadrature) -> Result<f64> {
    p.check_below_threshold()?;
    if p.l1 != 0.0 {
        return Err(Error::Domain(format!(
            "lossless DC closed form requires L1 = 0, got {}",
            p.l1
        )));
    }
    let gamma1 = p.rates().gamma1;
    let two_eps = 2.0 * p.epsilon() * q.sign();
    Ok(((gamma1 + two_eps) / (gamma1 - two_eps)).powi(2))
}
