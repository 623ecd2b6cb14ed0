use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::waveform::{BootstrapConfig, SymbolKind};

/// Peak of `corr` for an ideal, noiseless VFS pair.
pub const CORR_PEAK: f64 = 8.0;

/// Lags, window and accumulation delays of the delayed correlator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelatorGeometry {
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
    /// Moving-average length.
    pub window: usize,
}

impl CorrelatorGeometry {
    pub fn for_config(config: &BootstrapConfig) -> Self {
        let (n_b, n_c) = config.bc_lengths(SymbolKind::Vfs0);
        Self {
            n_a: config.n_a(),
            n_b,
            n_c,
            window: n_b,
        }
    }

    pub fn n_t(&self) -> usize {
        self.n_a + self.n_b + self.n_c
    }

    /// Branch lags `(a, a+b, b)`.
    pub fn lags(&self) -> [usize; 3] {
        [self.n_a, self.n_a + self.n_b, self.n_b]
    }

    /// Accumulation delays of `add_1`, `add_2`, `add_3`.
    pub fn add_delays(&self) -> [usize; 3] {
        [
            self.n_a + 2 * self.n_b + self.n_c,
            self.n_a + 2 * self.n_b,
            2 * self.n_b,
        ]
    }

    /// Shortest input the correlator accepts.
    pub fn warm_up(&self) -> usize {
        2 * self.n_t()
    }
}

/// All intermediate streams of the delayed correlator, indexed by sample.
///
/// Entry `n` of a branch output covers products over `[n - window, n - 1]`;
/// samples before the start of the input read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorOutputs {
    pub geometry: CorrelatorGeometry,
    pub u_a: Vec<Complex64>,
    pub u_ab: Vec<Complex64>,
    pub u_b: Vec<Complex64>,
    pub add_1: Vec<Complex64>,
    pub add_2: Vec<Complex64>,
    pub add_3: Vec<Complex64>,
    pub add_23: Vec<Complex64>,
    pub corr: Vec<f64>,
}

impl CorrelatorOutputs {
    pub fn len(&self) -> usize {
        self.corr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corr.is_empty()
    }

    /// `sqrt(corr / 8)`: 1 for a perfect match, comparable to a per-branch
    /// correlation coefficient.
    pub fn confidence(&self, n: usize) -> f64 {
        (self.corr[n] / CORR_PEAK).sqrt()
    }
}

/// `s[n] = sum of v[n - w .. n]`, reading before the start as zero. Running
/// sums are restarted exactly every `w` samples so that rounding residue
/// cannot survive into silent stretches.
fn window_sums<T>(v: &[T], w: usize) -> Vec<T>
where
    T: Copy + Default + std::ops::AddAssign + std::ops::SubAssign,
{
    let mut out = vec![T::default(); v.len()];
    let mut acc = T::default();
    for n in 1..v.len() {
        if n % w == 0 {
            acc = T::default();
            for x in &v[n - w..n] {
                acc += *x;
            }
        } else {
            acc += v[n - 1];
            if n > w {
                acc -= v[n - 1 - w];
            }
        }
        out[n] = acc;
    }
    out
}

/// Windowed, power-normalized conjugate-lag correlation of one branch, given
/// the windowed input energy `e`.
fn branch(r: &[Complex64], e: &[f64], e_max: f64, lag: usize, window: usize) -> Vec<Complex64> {
    let prod: Vec<Complex64> = (0..r.len())
        .map(|i| {
            if i >= lag {
                r[i] * r[i - lag].conj()
            } else {
                Complex64::default()
            }
        })
        .collect();
    let acc = window_sums(&prod, window);
    let floor = 1e-12 * e_max;
    acc.iter()
        .enumerate()
        .map(|(n, a)| {
            let e_now = e[n];
            let e_lag = if n >= lag { e[n - lag] } else { 0.0 };
            if e_now > floor && e_lag > floor {
                a / (e_now * e_lag).sqrt()
            } else {
                Complex64::default()
            }
        })
        .collect()
}

fn delayed_sum(u: &[Complex64], delay: usize) -> Vec<Complex64> {
    u.iter()
        .enumerate()
        .map(|(n, v)| if n >= delay { v + u[n - delay] } else { *v })
        .collect()
}

/// Runs the three-branch delayed correlator over `r`.
pub fn delayed_correlate(r: &[Complex64], config: &BootstrapConfig) -> Result<CorrelatorOutputs> {
    correlate_with(r, CorrelatorGeometry::for_config(config))
}

pub fn correlate_with(r: &[Complex64], g: CorrelatorGeometry) -> Result<CorrelatorOutputs> {
    if r.len() < g.warm_up() {
        return Err(Error::Param(format!(
            "correlator needs at least {} samples, got {}",
            g.warm_up(),
            r.len()
        )));
    }
    let pow: Vec<f64> = r.iter().map(|v| v.norm_sqr()).collect();
    let e = window_sums(&pow, g.window);
    let e_max = e.iter().copied().fold(0.0, f64::max);
    let [la, lab, lb] = g.lags();
    let u_a = branch(r, &e, e_max, la, g.window);
    let u_ab = branch(r, &e, e_max, lab, g.window);
    let u_b = branch(r, &e, e_max, lb, g.window);
    let [d1, d2, d3] = g.add_delays();
    let add_1 = delayed_sum(&u_a, d1);
    let add_2 = delayed_sum(&u_ab, d2);
    let add_3 = delayed_sum(&u_b, d3);
    let len = r.len();
    let add_23: Vec<Complex64> = (0..len)
        .map(|n| {
            if n >= g.n_a {
                add_2[n] * add_3[n - g.n_a].conj()
            } else {
                Complex64::default()
            }
        })
        .collect();
    let shift = g.n_c as isize - g.n_b as isize;
    let corr = (0..len)
        .map(|n| {
            let m = n as isize + shift;
            if m >= 0 && (m as usize) < len {
                add_23[m as usize].norm() * add_1[n].norm()
            } else {
                0.0
            }
        })
        .collect();
    Ok(CorrelatorOutputs {
        geometry: g,
        u_a,
        u_ab,
        u_b,
        add_1,
        add_2,
        add_3,
        add_23,
        corr,
    })
}

/// Timing decision from the correlator output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Peak index `n_hat`.
    pub peak: usize,
    /// First sample of VFS0, `n_hat - 2 N_t`.
    pub start: usize,
    pub confidence: f64,
}

/// Largest `sqrt(corr/8)` over `n >= 2 N_t`, whether or not it passes a threshold.
pub fn peak_in_scan(out: &CorrelatorOutputs) -> Option<Detection> {
    let lo = out.geometry.warm_up();
    let (mut best, mut val) = (None, -1.0);
    for n in lo..out.len() {
        if out.corr[n] > val {
            val = out.corr[n];
            best = Some(n);
        }
    }
    best.map(|peak| Detection {
        peak,
        start: peak - lo,
        confidence: (val / CORR_PEAK).sqrt(),
    })
}

/// `n_hat = argmax corr(n)` over the scan window if its confidence reaches
/// `threshold`; `None` is a missed detection.
pub fn detect_and_time(out: &CorrelatorOutputs, threshold: f64) -> Option<Detection> {
    peak_in_scan(out).filter(|d| d.confidence >= threshold)
}

/// Detections in a long stream. A threshold crossing opens a search for the
/// largest peak over the next VFS pair, which skips the delayed-product
/// sidelobes about one symbol to either side of the true peak; the scan
/// resumes one VFS pair past the peak.
pub fn scan_detections(out: &CorrelatorOutputs, threshold: f64) -> Vec<Detection> {
    let g = out.geometry;
    let span = 2 * g.n_t();
    let thr = CORR_PEAK * threshold * threshold;
    let mut found = Vec::new();
    let mut n = g.warm_up();
    while n < out.len() {
        if out.corr[n] < thr {
            n += 1;
            continue;
        }
        let end = (n + span).min(out.len());
        let (peak, val) =
            (n..end)
                .map(|i| (i, out.corr[i]))
                .fold((n, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        found.push(Detection {
            peak,
            start: peak - g.warm_up(),
            confidence: (val / CORR_PEAK).sqrt(),
        });
        n = peak + span;
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::argmax_abs;
    use crate::waveform::BootstrapSynth;

    fn noiseless_at_zero(tail: usize) -> (BootstrapConfig, Vec<Complex64>) {
        let cfg = BootstrapConfig::normal();
        let s = BootstrapSynth::new(cfg.clone()).unwrap();
        let mut r = s
            .build_vfs_pair(&[true, false, false, true, true, false, true, false])
            .unwrap()
            .samples;
        r.extend(std::iter::repeat_n(Complex64::default(), tail));
        (cfg, r)
    }

    #[test]
    fn peak_positions_match_impulse_analysis() {
        let (cfg, r) = noiseless_at_zero(6144);
        let out = delayed_correlate(&r, &cfg).unwrap();
        assert_eq!(argmax_abs(&out.add_1).0, 6144);
        assert_eq!(argmax_abs(&out.add_2).0, 6144);
        assert_eq!(argmax_abs(&out.add_3).0, 4096);
        let corr_peak = (0..out.len())
            .max_by(|&a, &b| out.corr[a].total_cmp(&out.corr[b]))
            .unwrap();
        assert_eq!(corr_peak, 6144);
        assert!((out.corr[6144] - 8.0).abs() < 1e-9);
        assert!((out.add_1[6144].norm() - 2.0).abs() < 1e-9);
        // side impulses of add_1 at half the main magnitude
        for side in [2560, 9728] {
            let ratio = out.add_1[side].norm() / out.add_1[6144].norm();
            assert!((ratio - 0.5).abs() < 0.025, "side {side}: {ratio}");
        }
    }

    #[test]
    fn branch_impulses() {
        let (cfg, r) = noiseless_at_zero(6144);
        let out = delayed_correlate(&r, &cfg).unwrap();
        for n in [2560, 6144] {
            assert!((out.u_a[n].norm() - 1.0).abs() < 1e-9);
        }
        for n in [3072, 6144] {
            assert!((out.u_ab[n].norm() - 1.0).abs() < 1e-9);
        }
        for n in [3072, 4096] {
            assert!((out.u_b[n].norm() - 1.0).abs() < 1e-9);
        }
        assert!(out.u_a.iter().all(|v| v.norm() <= 1.0 + 1e-9));
    }

    #[test]
    fn cfo_phase_identity() {
        let (cfg, r) = noiseless_at_zero(4000);
        let f_o = 1234.5;
        let fs = cfg.sample_rate();
        let r = crate::channel::apply_cfo(&r, f_o, fs);
        let out = delayed_correlate(&r, &cfg).unwrap();
        let expect = 2.0 * std::f64::consts::PI * 2048.0 * f_o / fs;
        let d = (out.add_1[6144] * Complex64::from_polar(1.0, -expect)).arg();
        assert!(d.abs() < 1e-6);
        let d = (out.add_23[6144] * Complex64::from_polar(1.0, -expect)).arg();
        assert!(d.abs() < 1e-6);
    }

    #[test]
    fn short_input_rejected() {
        let cfg = BootstrapConfig::normal();
        assert!(delayed_correlate(&vec![Complex64::default(); 6143], &cfg).is_err());
    }

    #[test]
    fn zero_input_gives_zero_metric() {
        let cfg = BootstrapConfig::normal();
        let out = delayed_correlate(&vec![Complex64::default(); 8000], &cfg).unwrap();
        assert!(out.corr.iter().all(|&c| c == 0.0));
        assert!(detect_and_time(&out, 0.1).is_none());
    }
}
