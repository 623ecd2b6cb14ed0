use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{wilson_interval, SignalPath, Z95};
use crate::channel::add_noise;
use crate::error::{Error, Result};
use crate::receiver::{CorrelatorGeometry, ScaledFrontend};
use crate::waveform::{BootstrapConfig, Variant, NORMAL_FFT};

/// Threshold meeting one false-alarm target over one scan window.
#[derive(Debug, Clone, PartialEq)]
pub struct FaThreshold {
    pub window: usize,
    pub pfa: f64,
    pub threshold: f64,
    /// Noise-only trials whose maximum reached the threshold.
    pub exceed: usize,
    /// Wilson interval of the false-alarm rate at the threshold.
    pub rate_lo: f64,
    pub rate_hi: f64,
}

/// Empirical distribution of noise-only peak confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct FaCalibration {
    pub variant: Variant,
    pub path: SignalPath,
    pub trials: usize,
    pub windows: Vec<usize>,
    /// Sorted maxima of `sqrt(corr/8)` over each scan window.
    pub maxima: Vec<Vec<f64>>,
    pub thresholds: Vec<FaThreshold>,
}

impl FaCalibration {
    /// False alarms at `threshold` over window index `w`, with the Wilson
    /// interval of the rate.
    pub fn false_alarms(&self, w: usize, threshold: f64) -> (usize, f64, f64) {
        let m = &self.maxima[w];
        let k = m.len() - m.partition_point(|&v| v < threshold);
        let (lo, hi) = wilson_interval(k, self.trials, Z95);
        (k, lo, hi)
    }

    /// Smallest threshold passed by at most `floor(pfa * trials)` maxima.
    pub fn threshold_for(&self, w: usize, pfa: f64) -> f64 {
        let m = &self.maxima[w];
        let allowed = ((pfa * self.trials as f64).floor() as usize).min(m.len());
        if allowed == m.len() {
            return 0.0;
        }
        m[m.len() - 1 - allowed].next_up()
    }
}

/// Noise-only Monte-Carlo calibration of the detection threshold.
///
/// Each trial draws unit-variance white noise, passes it through the scaled
/// front end on the multiplex path, runs the correlator and records the
/// largest peak confidence within the first `w` samples of the scan region
/// for every `w` in `windows`.
pub fn calibrate_false_alarm(
    variant: Variant,
    path: SignalPath,
    trials: usize,
    windows: &[usize],
    pfas: &[f64],
    seed: u64,
    workers: usize,
) -> Result<FaCalibration> {
    if trials < 1000 {
        return Err(Error::Config(format!(
            "calibration needs at least 1000 trials, got {trials}"
        )));
    }
    if windows.is_empty() || windows.contains(&0) {
        return Err(Error::Config(
            "scan windows must be non-empty and positive".into(),
        ));
    }
    if pfas.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::Config(
            "false-alarm targets must lie in (0, 1)".into(),
        ));
    }
    let config = BootstrapConfig::for_variant(variant);
    let geometry = CorrelatorGeometry::for_config(&config);
    let longest = *windows.iter().max().expect("non-empty");
    let len = geometry.warm_up() + longest;
    let frontend = match path {
        SignalPath::Direct => None,
        SignalPath::Multiplex => Some(ScaledFrontend::new(&config, 2 * NORMAL_FFT)?),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let per_trial: Vec<Vec<f64>> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let r = match &frontend {
                    None => {
                        let mut r = vec![Complex64::default(); len];
                        add_noise(&mut r, 1.0, &mut rng);
                        r
                    }
                    Some(fe) => {
                        let mut w = vec![Complex64::default(); 2 * len];
                        add_noise(&mut w, 1.0, &mut rng);
                        fe.process(&w)
                    }
                };
                let out = crate::receiver::correlate_with(&r, geometry)?;
                let start = geometry.warm_up();
                let mut best = 0.0f64;
                let mut maxima = Vec::with_capacity(windows.len());
                let mut sorted: Vec<usize> = windows.to_vec();
                sorted.sort_unstable();
                let mut n = start;
                for &w in &sorted {
                    while n < start + w {
                        best = best.max(out.corr[n]);
                        n += 1;
                    }
                    maxima.push((w, (best / crate::receiver::CORR_PEAK).sqrt()));
                }
                Ok(windows
                    .iter()
                    .map(|w| {
                        maxima
                            .iter()
                            .find(|(x, _)| x == w)
                            .expect("window present")
                            .1
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let maxima: Vec<Vec<f64>> = (0..windows.len())
        .map(|w| {
            let mut m: Vec<f64> = per_trial.iter().map(|t| t[w]).collect();
            m.sort_by(f64::total_cmp);
            m
        })
        .collect();
    let mut cal = FaCalibration {
        variant,
        path,
        trials,
        windows: windows.to_vec(),
        maxima,
        thresholds: Vec::new(),
    };
    for (w, &window) in windows.iter().enumerate() {
        for &pfa in pfas {
            let threshold = cal.threshold_for(w, pfa);
            let (exceed, rate_lo, rate_hi) = cal.false_alarms(w, threshold);
            cal.thresholds.push(FaThreshold {
                window,
                pfa,
                threshold,
                exceed,
                rate_lo,
                rate_hi,
            });
        }
    }
    Ok(cal)
}
