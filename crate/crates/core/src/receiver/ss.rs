use num_complex::Complex64;

use crate::dsp::FftPair;
use crate::error::{Error, Result};

/// Slice-start search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsSearch {
    /// Back-off `B` of the capture start ahead of the expected part A.
    pub backoff: usize,
    /// Half-width `W` of the drift search.
    pub window: usize,
    pub threshold: f64,
}

impl Default for SsSearch {
    fn default() -> Self {
        Self {
            backoff: 16,
            window: 64,
            threshold: 0.3,
        }
    }
}

/// Outcome of one slice-start search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsDetection {
    /// Lag `m_hat` of the correlation peak.
    pub lag: i64,
    /// Timing drift of the symbol relative to its expected position, in
    /// samples (positive: late).
    pub drift: i64,
    pub peak: f64,
}

/// Normalized circular correlation of the capture against `a_ss` at every
/// lag, `|sum_n r(n) a*((n + m) mod N)| / sqrt(N sum |r|^2)`, indexed by
/// `m mod N`.
pub fn ss_correlation(r_ss: &[Complex64], a_ss: &[Complex64], fft: &mut FftPair) -> Vec<f64> {
    let n = fft.len();
    let mut r: Vec<Complex64> = r_ss.to_vec();
    let mut a: Vec<Complex64> = a_ss.to_vec();
    fft.forward(&mut r);
    fft.forward(&mut a);
    // sum_n r(n) a*(n+m) = IFFT(A R*)(m) / N, conjugated
    let mut x: Vec<Complex64> = a.iter().zip(&r).map(|(a, r)| a * r.conj()).collect();
    fft.inverse(&mut x);
    let energy: f64 = r_ss.iter().map(|v| v.norm_sqr()).sum();
    let denom = (n as f64 * energy).sqrt() * n as f64;
    x.iter()
        .map(|v| if denom > 0.0 { v.norm() / denom } else { 0.0 })
        .collect()
}

/// Searches `m in [-B - W, -B + W]` for the slice-start peak in an `N_A`-sample
/// capture that starts `B` samples ahead of the expected part A.
pub fn detect_ss(
    r_ss: &[Complex64],
    a_ss: &[Complex64],
    search: &SsSearch,
    fft: &mut FftPair,
) -> Result<Option<SsDetection>> {
    let n = fft.len();
    if r_ss.len() != n || a_ss.len() != n {
        return Err(Error::Param(format!(
            "slice-start capture and reference must hold {n} samples"
        )));
    }
    if search.backoff + search.window >= n / 2 {
        return Err(Error::Param(
            "slice-start search wider than half a symbol".into(),
        ));
    }
    let c = ss_correlation(r_ss, a_ss, fft);
    let b = search.backoff as i64;
    let w = search.window as i64;
    let (mut lag, mut peak) = (0, -1.0);
    for m in (-b - w)..=(-b + w) {
        let v = c[m.rem_euclid(n as i64) as usize];
        if v > peak {
            peak = v;
            lag = m;
        }
    }
    Ok((peak >= search.threshold).then_some(SsDetection {
        lag,
        drift: -lag - b,
        peak,
    }))
}
