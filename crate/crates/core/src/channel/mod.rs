//! Channel impairments: tapped-delay-line fading, sampling and carrier
//! frequency offsets and additive white Gaussian noise, applied in that
//! fixed order.

mod fading;
mod profile;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fading::{tdl_fade, TdlRealization, INTERP_TAPS, JAKES_SINUSOIDS};
pub use profile::{
    load_profile, ChannelProfile, DelayUnit, FadingKind, Tap, DEFAULT_CARRIER_HZ, SPEED_OF_LIGHT,
};

/// Frequency offsets and noise level of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentSpec {
    pub cfo_hz: f64,
    pub sfo_ppm: f64,
    pub sfo_interp: SfoInterpolator,
    /// `None` disables noise.
    pub snr_db: Option<f64>,
}

impl Default for ImpairmentSpec {
    fn default() -> Self {
        Self {
            cfo_hz: 0.0,
            sfo_ppm: 0.0,
            sfo_interp: SfoInterpolator::default(),
            snr_db: None,
        }
    }
}

impl ImpairmentSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.cfo_hz.is_finite() || !self.sfo_ppm.is_finite() {
            return Err(Error::Param("CFO and SFO must be finite".into()));
        }
        if self.sfo_ppm.abs() >= 1000.0 {
            return Err(Error::Param(format!(
                "SFO {} ppm outside (-1000, 1000)",
                self.sfo_ppm
            )));
        }
        if let Some(s) = self.snr_db {
            if s.is_nan() {
                return Err(Error::Param("SNR is NaN".into()));
            }
        }
        Ok(())
    }
}

/// `y(n) = exp(j*2*pi*(n + start)*f_o/f_s) * x(n)`, in place.
pub fn apply_cfo_in_place(x: &mut [Complex64], f_o: f64, f_s: f64, start: usize) {
    if f_o == 0.0 {
        return;
    }
    let step = f_o / f_s;
    for (n, v) in x.iter_mut().enumerate() {
        let cycles = ((n + start) as f64 * step).fract();
        *v *= Complex64::from_polar(1.0, 2.0 * PI * cycles);
    }
}

pub fn apply_cfo(x: &[Complex64], f_o: f64, f_s: f64) -> Vec<Complex64> {
    let mut y = x.to_vec();
    apply_cfo_in_place(&mut y, f_o, f_s, 0);
    y
}

/// Half-length of the windowed-sinc SFO interpolator.
pub const SFO_SINC_HALF: usize = 16;

/// Interpolator behind [`apply_sfo_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SfoInterpolator {
    /// Four-point Lagrange polynomial. Attenuates the outer subcarriers of a
    /// wide signal by several dB at half-sample phases.
    Cubic,
    /// `2 * SFO_SINC_HALF`-tap Hann-windowed sinc.
    #[default]
    Sinc,
}

impl std::fmt::Display for SfoInterpolator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SfoInterpolator::Cubic => "cubic",
            SfoInterpolator::Sinc => "sinc",
        })
    }
}

impl std::str::FromStr for SfoInterpolator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cubic" => Ok(SfoInterpolator::Cubic),
            "sinc" => Ok(SfoInterpolator::Sinc),
            _ => Err(Error::Param(format!("unknown SFO interpolator '{s}'"))),
        }
    }
}

/// [`apply_sfo_with`] using the default interpolator.
pub fn apply_sfo(x: &[Complex64], ppm: f64) -> Vec<Complex64> {
    apply_sfo_with(x, ppm, SfoInterpolator::default())
}

/// Resamples `x` as seen by a receiver clock running `ppm` parts per million
/// fast: `y(n) = x(n * (1 + ppm*1e-6))`. Samples outside the input read as
/// zero.
pub fn apply_sfo_with(x: &[Complex64], ppm: f64, interp: SfoInterpolator) -> Vec<Complex64> {
    if ppm == 0.0 || x.is_empty() {
        return x.to_vec();
    }
    let ratio = 1.0 + ppm * 1e-6;
    let out_len = ((x.len() - 1) as f64 / ratio).floor() as usize + 1;
    let at = |i: i64| -> Complex64 {
        if i < 0 || i as usize >= x.len() {
            Complex64::default()
        } else {
            x[i as usize]
        }
    };
    let half = SFO_SINC_HALF as i64;
    let tap_cos: [f64; 2 * SFO_SINC_HALF] =
        std::array::from_fn(|j| (PI * j as f64 / SFO_SINC_HALF as f64).cos());
    let tap_sin: [f64; 2 * SFO_SINC_HALF] =
        std::array::from_fn(|j| (PI * j as f64 / SFO_SINC_HALF as f64).sin());
    (0..out_len)
        .map(|n| {
            let t = n as f64 * ratio;
            let i = t.floor();
            let mu = t - i;
            let i = i as i64;
            match interp {
                SfoInterpolator::Cubic => {
                    let wm1 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0;
                    let w0 = (mu + 1.0) * (mu - 1.0) * (mu - 2.0) / 2.0;
                    let w1 = -(mu + 1.0) * mu * (mu - 2.0) / 2.0;
                    let w2 = (mu + 1.0) * mu * (mu - 1.0) / 6.0;
                    at(i - 1) * wm1 + at(i) * w0 + at(i + 1) * w1 + at(i + 2) * w2
                }
                SfoInterpolator::Sinc => {
                    if mu == 0.0 {
                        return at(i);
                    }
                    // d = t - k runs from mu + half - 1 down to mu - half;
                    // sin(pi d) = +-sin(pi mu) and cos(pi d / half) splits
                    // into a per-sample phase and a fixed per-tap table
                    let s_mu = (PI * mu).sin() / PI;
                    let d0 = mu + half as f64 - 1.0;
                    let (s0, c0) = (PI * d0 / half as f64).sin_cos();
                    let mut w = [0.0; 2 * SFO_SINC_HALF];
                    for (j, wj) in w.iter_mut().enumerate() {
                        let sign = if (SFO_SINC_HALF - 1 + j).is_multiple_of(2) {
                            1.0
                        } else {
                            -1.0
                        };
                        let hann = 0.5 * (1.0 + c0 * tap_cos[j] + s0 * tap_sin[j]);
                        *wj = sign * s_mu / (d0 - j as f64) * hann;
                    }
                    let first = i - half + 1;
                    if first >= 0 && first as usize + w.len() <= x.len() {
                        let seg = &x[first as usize..first as usize + w.len()];
                        seg.iter()
                            .zip(&w)
                            .fold(Complex64::default(), |a, (v, c)| a + v * c)
                    } else {
                        w.iter()
                            .enumerate()
                            .fold(Complex64::default(), |a, (j, c)| {
                                a + at(first + j as i64) * c
                            })
                    }
                }
            }
        })
        .collect()
}

/// Per-sample noise variance for a given SNR and signal power.
pub fn noise_variance(snr_db: f64, signal_power: f64) -> f64 {
    signal_power * 10f64.powf(-snr_db / 10.0)
}

/// Adds circular complex Gaussian noise of total variance `variance`.
pub fn add_noise<R: Rng + ?Sized>(x: &mut [Complex64], variance: f64, rng: &mut R) {
    if variance <= 0.0 {
        return;
    }
    let s = (variance / 2.0).sqrt();
    for v in x.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re * s, im * s);
    }
}

/// `x` plus noise at `snr_db` relative to `signal_power`; an infinite SNR
/// returns `x` unchanged.
pub fn awgn<R: Rng + ?Sized>(
    x: &[Complex64],
    snr_db: f64,
    signal_power: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let mut y = x.to_vec();
    if snr_db.is_finite() {
        add_noise(&mut y, noise_variance(snr_db, signal_power), rng);
    }
    y
}

/// Full link model: optional fading, then SFO, CFO and AWGN.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub profile: Option<ChannelProfile>,
    pub impairments: ImpairmentSpec,
    /// Reference power of the bootstrap symbols entering the channel.
    pub signal_power: f64,
}

/// Channel output together with the fading realization that produced it.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub samples: Vec<Complex64>,
    pub realization: Option<TdlRealization>,
}

impl ChannelModel {
    pub fn awgn_only(snr_db: Option<f64>) -> Self {
        Self {
            profile: None,
            impairments: ImpairmentSpec {
                snr_db,
                ..Default::default()
            },
            signal_power: 1.0,
        }
    }

    /// Applies the channel. Fading draws from `channel_rng`, noise from
    /// `noise_rng`, so one can be held fixed while the other varies.
    pub fn run<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &self,
        x: &[Complex64],
        sample_rate: f64,
        channel_rng: &mut R1,
        noise_rng: &mut R2,
    ) -> Result<ChannelOutput> {
        self.impairments.validate()?;
        let (mut y, realization) = match &self.profile {
            Some(p) => {
                let r = TdlRealization::new(p, sample_rate, channel_rng)?;
                (r.apply(x)?, Some(r))
            }
            None => (x.to_vec(), None),
        };
        if self.impairments.sfo_ppm != 0.0 {
            y = apply_sfo_with(&y, self.impairments.sfo_ppm, self.impairments.sfo_interp);
        }
        apply_cfo_in_place(&mut y, self.impairments.cfo_hz, sample_rate, 0);
        if let Some(snr) = self.impairments.snr_db {
            if snr.is_finite() {
                add_noise(&mut y, noise_variance(snr, self.signal_power), noise_rng);
            }
        }
        Ok(ChannelOutput {
            samples: y,
            realization,
        })
    }
}
