//! Delayed-correlation bootstrap receiver: detection and timing, fractional
//! and integer frequency offset estimation, channel estimation, signaling
//! decode and slice-start resynchronization.

mod correlator;
mod estimate;
mod frontend;
mod ss;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

pub use correlator::{
    correlate_with, delayed_correlate, detect_and_time, peak_in_scan, scan_detections,
    CorrelatorGeometry, CorrelatorOutputs, Detection, CORR_PEAK,
};
pub use estimate::{
    correct_cfo, decode_signaling, estimate_channel, estimate_ffo, estimate_ifo, FfoEstimate,
};
pub use frontend::{scaled_frontend, ScaledFrontend, FRONTEND_MARGIN, FRONTEND_TAPS};
pub use ss::{detect_ss, ss_correlation, SsDetection, SsSearch};

use crate::dsp::FftPair;
use crate::error::{Error, Result};
use crate::sequences::bits_to_string;
use crate::waveform::{
    BootstrapConfig, BootstrapSynth, SymbolKind, Variant, VfsTemplates, SUBCARRIER_SPACING,
};

/// Default detection threshold on the `sqrt(corr/8)` scale for the normal
/// variant.
pub const DEFAULT_THRESHOLD: f64 = 0.028;

/// Default threshold of each variant: about 1.3 times the 99.9th percentile
/// of the noise-only maximum over a 10^4-sample scan after the scaled front
/// end. Band-limited noise decorrelates slowly, so narrower parts need more
/// headroom.
pub fn default_threshold(variant: Variant) -> f64 {
    match variant {
        Variant::Normal => DEFAULT_THRESHOLD,
        Variant::Scaled839 => 0.044,
        Variant::Scaled467 => 0.070,
        Variant::Scaled241 => 0.110,
        Variant::Scaled127 => 0.164,
    }
}

/// Default integer offset search range `L`.
pub const DEFAULT_IFO_RANGE: usize = 70;

/// Default part-A capture back-off on the 2048 grid.
pub const DEFAULT_CAPTURE_BACKOFF: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub bootstrap: BootstrapConfig,
    pub threshold: f64,
    pub ifo_range: usize,
    /// Part-A captures start this many samples early; the resulting phase
    /// ramp is removed after the transform.
    pub capture_backoff: usize,
    pub ss: SsSearch,
    /// Expected slice-start symbol starts relative to `n_0`.
    pub ss_positions: Vec<usize>,
}

impl ReceiverConfig {
    pub fn new(bootstrap: BootstrapConfig) -> Self {
        let scale = bootstrap.n_ifft / 2048;
        Self {
            threshold: default_threshold(bootstrap.variant),
            bootstrap,
            ifo_range: DEFAULT_IFO_RANGE,
            capture_backoff: DEFAULT_CAPTURE_BACKOFF * scale.max(1),
            ss: SsSearch::default(),
            ss_positions: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bootstrap.validate()?;
        if !(self.threshold >= 0.0 && self.threshold <= 1.0) {
            return Err(Error::Param(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        let (_, n_c) = self.bootstrap.bc_lengths(SymbolKind::Vfs0);
        if self.capture_backoff > n_c {
            return Err(Error::Param(format!(
                "capture back-off {} exceeds N_C = {n_c}",
                self.capture_backoff
            )));
        }
        if 2 * self.ifo_range + 1 > self.bootstrap.n_ifft {
            return Err(Error::Param(format!(
                "IFO range {} wider than the grid",
                self.ifo_range
            )));
        }
        let (_, ss_c) = self.bootstrap.bc_lengths(SymbolKind::Ss);
        if self.ss.backoff + self.ss.window > ss_c {
            return Err(Error::Param(
                "slice-start back-off plus window exceeds N_C".into(),
            ));
        }
        Ok(())
    }
}

/// Everything estimated for one detected VFS pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Correlation peak `n_hat`.
    pub peak: usize,
    /// First VFS0 sample `n_0 = n_hat - 2 N_t`.
    pub start: usize,
    pub theta_ref: f64,
    /// Fractional offset in subcarriers.
    pub epsilon: f64,
    /// Integer offset in subcarriers.
    pub ifo: i64,
    /// `(l + eps) Delta`.
    pub cfo_hz: f64,
    pub shift: usize,
    pub bits: Vec<bool>,
    pub h0: Vec<Complex64>,
    pub h1: Vec<Complex64>,
    /// `sqrt(corr(n_hat)/8)`.
    pub confidence: f64,
    /// One entry per configured slice-start position.
    pub ss: Vec<Option<SsDetection>>,
}

impl DetectionResult {
    /// Single-line `key=value` record.
    pub fn record(&self, frame: usize) -> String {
        let mut s = format!(
            "frame={frame} peak={} n0={} theta={:.6} eps={:.6} ifo={} cfo_hz={:.3} shift={} bits={} confidence={:.6}",
            self.peak,
            self.start,
            self.theta_ref,
            self.epsilon,
            self.ifo,
            self.cfo_hz,
            self.shift,
            bits_to_string(&self.bits),
            self.confidence
        );
        for (i, d) in self.ss.iter().enumerate() {
            match d {
                Some(d) => write!(s, " ss{i}_drift={} ss{i}_peak={:.4}", d.drift, d.peak),
                None => write!(s, " ss{i}_drift=none"),
            }
            .expect("writing to a String");
        }
        s
    }
}

/// Known timing, offset and optionally channel for perfect synchronization.
#[derive(Debug, Clone, PartialEq)]
pub struct Genie {
    pub start: usize,
    pub cfo_hz: f64,
    /// True response for VFS0, by FFT bin; estimated from the capture when
    /// absent.
    pub h0: Option<Vec<Complex64>>,
}

/// Receiver for one bootstrap configuration.
#[derive(Debug, Clone)]
pub struct Receiver {
    config: ReceiverConfig,
    geometry: CorrelatorGeometry,
    templates: Arc<VfsTemplates>,
    fft: FftPair,
    fft32: FftPair<f32>,
    /// `sqrt(active)/N_A` times the back-off ramp, by bin.
    capture_gain: Vec<Complex64>,
}

impl Receiver {
    pub fn new(config: ReceiverConfig) -> Result<Self> {
        config.validate()?;
        let synth = BootstrapSynth::new(config.bootstrap.clone())?;
        let n = config.bootstrap.n_ifft;
        let g = (config.bootstrap.active_subcarriers() as f64).sqrt() / n as f64;
        let bo = config.capture_backoff as f64;
        let capture_gain = (0..n)
            .map(|b| Complex64::from_polar(g, 2.0 * PI * b as f64 * bo / n as f64))
            .collect();
        Ok(Self {
            geometry: CorrelatorGeometry::for_config(&config.bootstrap),
            templates: Arc::new(synth.templates().clone()),
            fft: FftPair::new(n),
            fft32: FftPair::new(n),
            capture_gain,
            config,
        })
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.config
    }

    pub fn geometry(&self) -> CorrelatorGeometry {
        self.geometry
    }

    pub fn templates(&self) -> &VfsTemplates {
        &self.templates
    }

    pub fn correlate(&self, r: &[Complex64]) -> Result<CorrelatorOutputs> {
        correlate_with(r, self.geometry)
    }

    /// Strongest VFS pair in `r`, or `None` if it falls below the threshold.
    pub fn detect(&mut self, r: &[Complex64]) -> Result<Option<DetectionResult>> {
        let out = self.correlate(r)?;
        match detect_and_time(&out, self.config.threshold) {
            Some(d) => self.analyze(r, &out, d).map(Some),
            None => Ok(None),
        }
    }

    /// Every VFS pair found by scanning `r` from start to end.
    pub fn detect_all(&mut self, r: &[Complex64]) -> Result<Vec<DetectionResult>> {
        let out = self.correlate(r)?;
        scan_detections(&out, self.config.threshold)
            .into_iter()
            .map(|d| self.analyze(r, &out, d))
            .collect()
    }

    /// Offset estimation, channel estimation and decode at a given peak.
    pub fn analyze(
        &mut self,
        r: &[Complex64],
        out: &CorrelatorOutputs,
        det: Detection,
    ) -> Result<DetectionResult> {
        let cfg = self.config.bootstrap.clone();
        let ffo = estimate_ffo(out, det.peak, &cfg);
        let fs = cfg.sample_rate();
        let z = self.spectra(r, det.start, ffo.epsilon * SUBCARRIER_SPACING)?;
        let t = Arc::clone(&self.templates);
        let (ifo, _) = estimate_ifo(
            [&z[0], &z[1]],
            [&t.s0.values, &t.s1.values],
            self.config.ifo_range,
            &mut self.fft32,
        );
        let cfo_hz = (ifo as f64 + ffo.epsilon) * SUBCARRIER_SPACING;
        let z = if ifo == 0 {
            z
        } else {
            self.spectra(r, det.start, cfo_hz)?
        };
        let h0 = estimate_channel(&z[0], &t.s0.values);
        let h1 = estimate_channel(&z[1], &t.s1.values);
        let code = decode_signaling(&h0, &h1, cfg.signaling_bits, &mut self.fft);
        let ss = self.resync(r, det.start, cfo_hz, fs)?;
        Ok(DetectionResult {
            peak: det.peak,
            start: det.start,
            theta_ref: ffo.theta_ref,
            epsilon: ffo.epsilon,
            ifo,
            cfo_hz,
            shift: code.shift,
            bits: code.bits,
            h0,
            h1,
            confidence: det.confidence,
            ss,
        })
    }

    /// Decode with known timing and offset, bypassing detection and offset
    /// estimation.
    pub fn process_genie(&mut self, r: &[Complex64], genie: &Genie) -> Result<DetectionResult> {
        let cfg = self.config.bootstrap.clone();
        let n_t = self.geometry.n_t();
        let fs = cfg.sample_rate();
        let z = self.spectra(r, genie.start, genie.cfo_hz)?;
        let t = Arc::clone(&self.templates);
        let h0 = match &genie.h0 {
            Some(h) if h.len() == cfg.n_ifft => h
                .iter()
                .zip(&t.s0.values)
                .map(|(h, s)| {
                    if s.norm_sqr() > 0.0 {
                        *h
                    } else {
                        Complex64::default()
                    }
                })
                .collect(),
            Some(h) => {
                return Err(Error::Param(format!(
                    "genie response has {} bins, grid has {}",
                    h.len(),
                    cfg.n_ifft
                )))
            }
            None => estimate_channel(&z[0], &t.s0.values),
        };
        let h1 = estimate_channel(&z[1], &t.s1.values);
        let code = decode_signaling(&h0, &h1, cfg.signaling_bits, &mut self.fft);
        let offset = genie.cfo_hz / SUBCARRIER_SPACING;
        let ifo = offset.round();
        let ss = self.resync(r, genie.start, genie.cfo_hz, fs)?;
        Ok(DetectionResult {
            peak: genie.start + 2 * n_t,
            start: genie.start,
            theta_ref: 2.0 * PI * (offset - ifo),
            epsilon: offset - ifo,
            ifo: ifo as i64,
            cfo_hz: genie.cfo_hz,
            shift: code.shift,
            bits: code.bits,
            h0,
            h1,
            confidence: 1.0,
            ss,
        })
    }

    /// Transforms of both part-A captures after removing `f_hat` over the
    /// `2 N_t` VFS samples, with the phase referenced to `n_0`.
    fn spectra(&mut self, r: &[Complex64], n0: usize, f_hat: f64) -> Result<[Vec<Complex64>; 2]> {
        let g = self.geometry;
        let n_t = g.n_t();
        if n0 + 2 * n_t > r.len() {
            return Err(Error::Param(format!(
                "VFS at {n0} runs past the {}-sample input",
                r.len()
            )));
        }
        let seg = correct_cfo(
            &r[n0..n0 + 2 * n_t],
            f_hat,
            self.config.bootstrap.sample_rate(),
        );
        let bo = self.config.capture_backoff;
        let starts = [g.n_c - bo, n_t + g.n_b + g.n_c - bo];
        Ok(starts.map(|s| {
            let mut z = seg[s..s + g.n_a].to_vec();
            self.fft.forward(&mut z);
            z.iter_mut()
                .zip(&self.capture_gain)
                .for_each(|(v, c)| *v *= c);
            z
        }))
    }

    /// Slice-start searches at the configured positions.
    fn resync(
        &mut self,
        r: &[Complex64],
        n0: usize,
        f_hat: f64,
        fs: f64,
    ) -> Result<Vec<Option<SsDetection>>> {
        let (_, ss_c) = self.config.bootstrap.bc_lengths(SymbolKind::Ss);
        let n_a = self.geometry.n_a;
        let search = self.config.ss;
        let mut found = Vec::with_capacity(self.config.ss_positions.len());
        for &p in &self.config.ss_positions {
            let start = n0 + p + ss_c - search.backoff;
            if start + n_a > r.len() {
                found.push(None);
                continue;
            }
            let mut cap = r[start..start + n_a].to_vec();
            crate::channel::apply_cfo_in_place(&mut cap, -f_hat, fs, start - n0);
            found.push(detect_ss(
                &cap,
                &self.templates.a_ss,
                &search,
                &mut self.fft,
            )?);
        }
        Ok(found)
    }
}
