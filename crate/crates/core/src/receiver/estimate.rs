use std::f64::consts::PI;

use num_complex::{Complex32, Complex64};

use super::correlator::CorrelatorOutputs;
use crate::channel::apply_cfo_in_place;
use crate::dsp::{argmax_abs, FftPair};
use crate::sequences::ShiftCode;
use crate::waveform::{BootstrapConfig, SUBCARRIER_SPACING};

/// Reference angle at the timing peak and the fractional offset it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FfoEstimate {
    pub theta_ref: f64,
    /// Offset in subcarrier spacings, in `(-0.5, 0.5]` for the normal grid.
    pub epsilon: f64,
}

/// `theta_ref = angle(add_1 + add_23)` at the peak; `eps = theta_ref f_s / (2 pi N_A Delta)`.
pub fn estimate_ffo(out: &CorrelatorOutputs, peak: usize, config: &BootstrapConfig) -> FfoEstimate {
    let theta_ref = (out.add_1[peak] + out.add_23[peak]).arg();
    let epsilon =
        theta_ref * config.sample_rate() / (2.0 * PI * config.n_a() as f64 * SUBCARRIER_SPACING);
    FfoEstimate { theta_ref, epsilon }
}

/// `y(n) = exp(-j 2 pi n f / f_s) x(n)` with the phase referenced to `x[0]`.
pub fn correct_cfo(x: &[Complex64], f_hat: f64, f_s: f64) -> Vec<Complex64> {
    let mut y = x.to_vec();
    apply_cfo_in_place(&mut y, -f_hat, f_s, 0);
    y
}

/// Integer offset search over `l in [-L, L]`.
///
/// For each `l` the received spectra are multiplied by the conjugate of the
/// references cyclically shifted by `l` bins; the score is the sum of the
/// squared peak magnitudes of both inverse transforms. Only the location of
/// the best score matters, so the transforms run in single precision.
pub fn estimate_ifo(
    z: [&[Complex64]; 2],
    s: [&[Complex64]; 2],
    range: usize,
    fft: &mut FftPair<f32>,
) -> (i64, Vec<f64>) {
    let n = fft.len();
    let narrow = |v: &[Complex64]| -> Vec<Complex32> {
        v.iter()
            .map(|c| Complex32::new(c.re as f32, c.im as f32))
            .collect()
    };
    let z32 = [narrow(z[0]), narrow(z[1])];
    let s32 = [narrow(s[0]), narrow(s[1])];
    let mut scores = Vec::with_capacity(2 * range + 1);
    let mut buf = vec![Complex32::default(); n];
    let l_max = range as i64;
    for l in -l_max..=l_max {
        // bin k pairs with reference bin (k - l) mod n
        let split = l.rem_euclid(n as i64) as usize;
        let mut v = 0.0;
        for m in 0..2 {
            let (zm, sm) = (&z32[m], &s32[m]);
            for k in 0..split {
                buf[k] = zm[k] * sm[k + n - split].conj();
            }
            for k in split..n {
                buf[k] = zm[k] * sm[k - split].conj();
            }
            fft.inverse(&mut buf);
            let peak = buf.iter().map(|c| c.norm_sqr()).fold(0.0f32, f32::max);
            v += peak as f64;
        }
        scores.push(v);
    }
    let best = scores
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |b, (i, &v)| if v > b.1 { (i, v) } else { b },
        )
        .0;
    (best as i64 - l_max, scores)
}

/// `H_m(k) = Z_m(k) S_m*(k)` on bins where the reference is active.
pub fn estimate_channel(z: &[Complex64], s: &[Complex64]) -> Vec<Complex64> {
    z.iter()
        .zip(s)
        .map(|(z, s)| {
            if s.norm_sqr() > 0.0 {
                z * s.conj()
            } else {
                Complex64::default()
            }
        })
        .collect()
}

/// `M_hat = argmax |IFFT(H_0 H_1*)|`, then Gray decoding of the shift cell.
pub fn decode_signaling(
    h0: &[Complex64],
    h1: &[Complex64],
    n_b: usize,
    fft: &mut FftPair,
) -> ShiftCode {
    let mut h: Vec<Complex64> = h0.iter().zip(h1).map(|(a, b)| a * b.conj()).collect();
    fft.inverse(&mut h);
    let (m_hat, _) = argmax_abs(&h);
    ShiftCode::decode(m_hat, n_b, h.len())
}
