use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::profile::{ChannelProfile, FadingKind};
use crate::dsp::{hann, sinc};
use crate::error::{Error, Result};

/// Sinusoids per Rayleigh tap.
pub const JAKES_SINUSOIDS: usize = 64;

/// Length of the fractional-delay interpolator.
pub const INTERP_TAPS: usize = 16;

/// Samples of look-ahead used by the centred interpolator.
const INTERP_LEAD: usize = INTERP_TAPS / 2 - 1;

/// Largest Doppler phase advance (cycles) tolerated inside one block of
/// constant channel coefficients.
const BLOCK_DOPPLER_CYCLES: f64 = 1e-3;

const MAX_BLOCK: usize = 1024;

/// One tap's complex gain process.
#[derive(Debug, Clone)]
struct TapProcess {
    /// Angular Doppler frequencies (rad/s) and initial phases of the
    /// diffuse component, pre-scaled by `diffuse_amp`.
    sinusoids: Vec<(f64, f64)>,
    diffuse_amp: f64,
    los_amp: f64,
    los_omega: f64,
    los_phase: f64,
}

impl TapProcess {
    fn draw<R: Rng + ?Sized>(power: f64, kind: FadingKind, f_d: f64, rng: &mut R) -> Self {
        let (los_p, diffuse_p) = match kind {
            FadingKind::Rayleigh => (0.0, power),
            FadingKind::Los => (power, 0.0),
            FadingKind::Rician { k_db } => {
                let k = 10f64.powf(k_db / 10.0);
                (power * k / (k + 1.0), power / (k + 1.0))
            }
        };
        let mut sinusoids = Vec::new();
        if diffuse_p > 0.0 {
            // evenly spaced arrival angles with a random common offset
            let offset: f64 = rng.random();
            sinusoids = (0..JAKES_SINUSOIDS)
                .map(|n| {
                    let alpha = 2.0 * PI * (n as f64 + offset) / JAKES_SINUSOIDS as f64;
                    let phase = rng.random::<f64>() * 2.0 * PI;
                    (2.0 * PI * f_d * alpha.cos(), phase)
                })
                .collect();
        }
        Self {
            sinusoids,
            diffuse_amp: (diffuse_p / JAKES_SINUSOIDS as f64).sqrt(),
            los_amp: los_p.sqrt(),
            los_omega: 2.0 * PI * f_d,
            los_phase: rng.random::<f64>() * 2.0 * PI,
        }
    }

    fn gain(&self, t: f64) -> Complex64 {
        let mut g = Complex64::from_polar(self.los_amp, self.los_omega * t + self.los_phase);
        let mut d = Complex64::default();
        for &(w, ph) in &self.sinusoids {
            d += Complex64::from_polar(1.0, w * t + ph);
        }
        g += d * self.diffuse_amp;
        g
    }
}

/// Windowed-sinc weights realizing a delay of `frac` (in `[0, 1)`) samples:
/// `x(n - frac) ~ sum_i w[i] x(n - i + INTERP_LEAD)`.
fn fractional_weights(frac: f64) -> [f64; INTERP_TAPS] {
    let mut w = [0.0; INTERP_TAPS];
    let half = (INTERP_TAPS / 2) as f64;
    for (j, wj) in w.iter_mut().enumerate() {
        let u = j as f64 - INTERP_LEAD as f64 - frac;
        *wj = sinc(u) * hann(u, half);
    }
    w
}

/// One realization of a tapped-delay-line channel at a given sample rate.
///
/// Tap gains are held constant over short blocks whose length keeps the
/// Doppler phase advance below 1e-3 cycles.
#[derive(Debug, Clone)]
pub struct TdlRealization {
    sample_rate: f64,
    taps: Vec<TapProcess>,
    /// Integer delay and interpolator weights per tap.
    delays: Vec<(usize, [f64; INTERP_TAPS])>,
    /// Combined FIR length.
    fir_len: usize,
    block: usize,
}

impl TdlRealization {
    pub fn new<R: Rng + ?Sized>(
        profile: &ChannelProfile,
        sample_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(Error::Param("sample rate must be positive".into()));
        }
        let f_d = profile.max_doppler();
        let delays_s = profile.delays_seconds()?;
        let taps = profile
            .taps
            .iter()
            .map(|t| TapProcess::draw(t.power, t.kind, f_d, rng))
            .collect();
        let delays: Vec<(usize, [f64; INTERP_TAPS])> = delays_s
            .iter()
            .map(|&d| {
                let s = d * sample_rate;
                let whole = s.floor();
                let mut frac = s - whole;
                let mut whole = whole as usize;
                if frac > 1.0 - 1e-9 {
                    whole += 1;
                    frac = 0.0;
                }
                if frac < 1e-9 {
                    frac = 0.0;
                }
                (whole, fractional_weights(frac))
            })
            .collect();
        let fir_len = delays.iter().map(|d| d.0).max().unwrap_or(0) + INTERP_TAPS;
        let block = if f_d > 0.0 {
            ((BLOCK_DOPPLER_CYCLES * sample_rate / f_d).floor() as usize).clamp(1, MAX_BLOCK)
        } else {
            MAX_BLOCK
        };
        Ok(Self {
            sample_rate,
            taps,
            delays,
            fir_len,
            block,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Complex gain of each tap at sample index `n`.
    pub fn tap_gains(&self, n: f64) -> Vec<Complex64> {
        let t = n / self.sample_rate;
        self.taps.iter().map(|p| p.gain(t)).collect()
    }

    /// Combined impulse response at sample `n`: `y(n) = sum_j h[j] x(n + lead - j)`
    /// with `lead` from [`TdlRealization::lead`].
    pub fn impulse_response(&self, n: f64) -> Vec<Complex64> {
        let gains = self.tap_gains(n);
        let mut h = vec![Complex64::default(); self.fir_len];
        for (g, (d, w)) in gains.iter().zip(&self.delays) {
            for (j, wj) in w.iter().enumerate() {
                h[d + j] += g * wj;
            }
        }
        h
    }

    /// Non-causal look-ahead of [`TdlRealization::impulse_response`].
    pub fn lead(&self) -> usize {
        INTERP_LEAD
    }

    /// Frequency response `C(k)` on an `n_fft`-point grid at sample `n`,
    /// indexed by FFT bin.
    pub fn frequency_response(&self, n: f64, n_fft: usize) -> Vec<Complex64> {
        let h = self.impulse_response(n);
        let lead = INTERP_LEAD as f64;
        (0..n_fft)
            .map(|b| {
                h.iter()
                    .enumerate()
                    .map(|(j, hj)| {
                        let ph = -2.0 * PI * b as f64 * (j as f64 - lead) / n_fft as f64;
                        hj * Complex64::from_polar(1.0, ph)
                    })
                    .sum()
            })
            .collect()
    }

    /// Filters `x`; the output has the same length, with the multipath tail
    /// past the end of the input dropped.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.fir_len - INTERP_LEAD > x.len() {
            return Err(Error::Param(format!(
                "channel spans {} samples, longer than the {}-sample input",
                self.fir_len,
                x.len()
            )));
        }
        let len = x.len();
        let mut y = vec![Complex64::default(); len];
        let mut start = 0;
        while start < len {
            let end = (start + self.block).min(len);
            let h = self.impulse_response((start + end) as f64 / 2.0);
            let active: Vec<(usize, Complex64)> = h
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm_sqr() > 0.0)
                .map(|(j, v)| (j, *v))
                .collect();
            for (n, out) in y[start..end].iter_mut().enumerate() {
                let n = n + start + INTERP_LEAD;
                let mut acc = Complex64::default();
                for &(j, hj) in &active {
                    if let Some(i) = n.checked_sub(j) {
                        if i < len {
                            acc += hj * x[i];
                        }
                    }
                }
                *out = acc;
            }
            start = end;
        }
        Ok(y)
    }
}

/// Passes `x` through a fresh realization of `profile`.
pub fn tdl_fade<R: Rng + ?Sized>(
    x: &[Complex64],
    profile: &ChannelProfile,
    sample_rate: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    TdlRealization::new(profile, sample_rate, rng)?.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::profile::DelayUnit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tone(len: usize, f: f64) -> Vec<Complex64> {
        (0..len)
            .map(|n| Complex64::from_polar(1.0, 2.0 * PI * f * n as f64))
            .collect()
    }

    #[test]
    fn static_los_tap_is_a_phase_rotation() {
        let p = ChannelProfile::parse("0, 0, los\n").unwrap();
        let x = tone(500, 0.013);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = tdl_fade(&x, &p, 6.144e6, &mut rng).unwrap();
        let rot = y[0] / x[0];
        assert!((rot.norm() - 1.0).abs() < 1e-12);
        for (a, b) in x.iter().zip(&y) {
            assert!((a * rot - b).norm() < 1e-12);
        }
    }

    #[test]
    fn integer_two_path_comb() {
        let fs = 1e6;
        let p = ChannelProfile::from_taps(
            "two",
            &[(0.0, 0.0, FadingKind::Los), (1e-6, 0.0, FadingKind::Los)],
            DelayUnit::Seconds,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = TdlRealization::new(&p, fs, &mut rng).unwrap();
        let g = ch.tap_gains(0.0);
        let x: Vec<Complex64> = (0..64).map(|n| Complex64::new(n as f64, 1.0)).collect();
        let y = ch.apply(&x).unwrap();
        for n in 1..64 {
            let expect = g[0] * x[n] + g[1] * x[n - 1];
            assert!((y[n] - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn fractional_delay_shifts_a_tone() {
        let fs = 1.0;
        let d = 3.37;
        let p = ChannelProfile::from_taps("d", &[(d, 0.0, FadingKind::Los)], DelayUnit::Seconds)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = TdlRealization::new(&p, fs, &mut rng).unwrap();
        let g = ch.tap_gains(0.0)[0];
        let f = 0.11;
        let x = tone(400, f);
        let y = ch.apply(&x).unwrap();
        for n in 50..350 {
            let expect = g * Complex64::from_polar(1.0, 2.0 * PI * f * (n as f64 - d));
            assert!((y[n] - expect).norm() < 2e-3, "n={n}");
        }
        // the frequency response reports the same delay
        let c = ch.frequency_response(0.0, 64);
        let k = 7usize;
        let expect = g * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * d / 64.0);
        assert!((c[k] - expect).norm() < 2e-3);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = ChannelProfile::builtin("tdl-c")
            .unwrap()
            .with_rms_ds(300e-9)
            .with_speed(120.0);
        let x = tone(4000, 0.05);
        let a = tdl_fade(&x, &p, 6.144e6, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = tdl_fade(&x, &p, 6.144e6, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);
        let c = tdl_fade(&x, &p, 6.144e6, &mut ChaCha8Rng::seed_from_u64(78)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_short_input_rejected() {
        let p = ChannelProfile::builtin("tu6").unwrap();
        let x = vec![Complex64::new(1.0, 0.0); 20];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(tdl_fade(&x, &p, 6.144e6, &mut rng).is_err());
    }

    #[test]
    fn rician_tap_power_split() {
        let p = ChannelProfile::flat(FadingKind::Rician { k_db: 10.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 4000;
        let mut mean = 0.0;
        let mut var = 0.0;
        for _ in 0..trials {
            let ch = TdlRealization::new(&p, 1e6, &mut rng).unwrap();
            let g = ch.tap_gains(0.0)[0];
            let p2 = g.norm_sqr();
            mean += p2;
            var += p2 * p2;
        }
        mean /= trials as f64;
        var = var / trials as f64 - mean * mean;
        assert!((mean - 1.0).abs() < 0.03, "mean power {mean}");
        // K = 10 leaves a far smaller power spread than Rayleigh (variance 1)
        assert!(var < 0.3, "variance {var}");
    }
}
