//! Small DSP building blocks shared by the transmitter, channel and receiver.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::{Complex, Complex64};
use rustfft::{Fft, FftNum, FftPlanner};

/// Planned forward/inverse transform pair of one size with its own scratch.
///
/// Both directions are unnormalized; forward uses the negative exponent.
#[derive(Clone)]
pub struct FftPair<T: FftNum = f64> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: FftNum> FftPair<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Self {
            n,
            fwd,
            inv,
            scratch: vec![Complex::new(T::zero(), T::zero()); len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&mut self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }
}

impl<T: FftNum> std::fmt::Debug for FftPair<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("n", &self.n).finish()
    }
}

/// FFT bin holding signed subcarrier `k` on an `n`-point grid.
#[inline]
pub fn bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Signed subcarrier index of FFT bin `b`.
#[inline]
pub fn signed_index(b: usize, n: usize) -> i64 {
    if b < n.div_ceil(2) {
        b as i64
    } else {
        b as i64 - n as i64
    }
}

#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hann taper over `|t| < half_width`, zero outside.
#[inline]
pub fn hann(t: f64, half_width: f64) -> f64 {
    if t.abs() >= half_width {
        0.0
    } else {
        0.5 * (1.0 + (PI * t / half_width).cos())
    }
}

/// Odd-length Hann-windowed sinc low-pass with cutoff `cutoff` given as a
/// fraction of the sample rate. Taps are normalized to unit DC gain.
pub fn lowpass_taps(num_taps: usize, cutoff: f64) -> Vec<f64> {
    assert!(num_taps % 2 == 1, "low-pass length must be odd");
    let centre = (num_taps / 2) as f64;
    let half = centre + 1.0;
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|i| {
            let t = i as f64 - centre;
            2.0 * cutoff * sinc(2.0 * cutoff * t) * hann(t, half)
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    taps
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Rotates `x` left by `m`: `out[n] = x[(n + m) mod len]`.
pub fn rotate_left(x: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = x.len();
    let m = m % n.max(1);
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&x[m..]);
    out.extend_from_slice(&x[..m]);
    out
}

/// Index of the largest magnitude.
pub fn argmax_abs(x: &[Complex64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in x.iter().enumerate() {
        let p = v.norm_sqr();
        if p > best.1 {
            best = (i, p);
        }
    }
    (best.0, best.1.max(0.0).sqrt())
}
