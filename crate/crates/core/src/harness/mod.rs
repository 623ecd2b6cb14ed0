//! Monte-Carlo frame-error-rate harness: SNR sweeps, required-SNR search
//! and false-alarm threshold calibration.

mod calibrate;
mod report;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate_false_alarm, FaCalibration, FaThreshold};
pub use report::{csv_string, manifest_string, write_csv, write_manifest, CSV_HEADER};

use crate::channel::{
    add_noise, apply_cfo_in_place, apply_sfo_with, noise_variance, ChannelProfile, ImpairmentSpec,
    SfoInterpolator, TdlRealization,
};
use crate::error::{Error, Result};
use crate::receiver::{default_threshold, Genie, Receiver, ReceiverConfig, ScaledFrontend};
use crate::waveform::{
    assemble_frame, BootstrapConfig, BootstrapSynth, FrameLayout, MultiplexSynth, SymbolKind,
    Variant, SUBCARRIER_SPACING,
};

/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Frames simulated between early-stopping checks.
pub const CHUNK_FRAMES: usize = 1000;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncMode {
    /// Known timing, offset and channel.
    Perfect,
    /// Full detection and estimation chain.
    Practical,
}

impl fmt::Display for SyncMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyncMode::Perfect => "perfect",
            SyncMode::Practical => "practical",
        })
    }
}

impl FromStr for SyncMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "perfect" => Ok(SyncMode::Perfect),
            "practical" => Ok(SyncMode::Practical),
            _ => Err(Error::Config(format!("unknown sync mode '{s}'"))),
        }
    }
}

/// How the variant under test reaches the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalPath {
    /// The variant alone at 6.144 MHz.
    Direct,
    /// All five parts on the 12.288 MHz grid, then the scaled front end.
    Multiplex,
}

impl fmt::Display for SignalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalPath::Direct => "direct",
            SignalPath::Multiplex => "multiplex",
        })
    }
}

impl FromStr for SignalPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "direct" => Ok(SignalPath::Direct),
            "multiplex" => Ok(SignalPath::Multiplex),
            _ => Err(Error::Config(format!("unknown signal path '{s}'"))),
        }
    }
}

/// One Monte-Carlo scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub variant: Variant,
    pub path: SignalPath,
    /// Built-in profile name or profile file; `None` is AWGN only.
    pub profile: Option<String>,
    /// RMS delay spread override in nanoseconds.
    pub rms_ds_ns: Option<f64>,
    pub speed_kmh: Option<f64>,
    pub cfo_hz: f64,
    pub sfo_ppm: f64,
    pub sfo_interp: SfoInterpolator,
    pub sync: SyncMode,
    /// SNR points of a sweep; `inf` disables noise.
    pub snr_db: Vec<f64>,
    /// Required-SNR search bounds.
    pub snr_lo: f64,
    pub snr_hi: f64,
    /// Bracket width at which the search stops.
    pub snr_tol: f64,
    pub target_pe: f64,
    pub frames: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Detection threshold override.
    pub threshold: Option<f64>,
    pub ifo_range: usize,
    /// Stop a point once its Wilson interval excludes `target_pe`.
    pub early_stop: bool,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            variant: Variant::Normal,
            path: SignalPath::Direct,
            profile: None,
            rms_ds_ns: None,
            speed_kmh: None,
            cfo_hz: 0.0,
            sfo_ppm: 0.0,
            sfo_interp: SfoInterpolator::default(),
            sync: SyncMode::Practical,
            snr_db: vec![-12.0, -10.0, -8.0],
            snr_lo: -20.0,
            snr_hi: 0.0,
            snr_tol: 0.25,
            target_pe: 1e-3,
            frames: 20_000,
            seed: 1,
            workers: 0,
            threshold: None,
            ifo_range: crate::receiver::DEFAULT_IFO_RANGE,
            early_stop: false,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.frames == 0 {
            return cfg("frames per point must be at least 1".into());
        }
        if self
            .snr_db
            .iter()
            .any(|s| s.is_nan() || *s == f64::NEG_INFINITY)
        {
            return cfg("SNR list holds NaN or -inf".into());
        }
        if !(self.snr_lo.is_finite() && self.snr_hi.is_finite() && self.snr_lo < self.snr_hi) {
            return cfg(format!(
                "bad SNR search bounds [{}, {}]",
                self.snr_lo, self.snr_hi
            ));
        }
        if !(self.snr_tol > 0.0) {
            return cfg("SNR tolerance must be positive".into());
        }
        if !(self.target_pe > 0.0 && self.target_pe <= 1.0) {
            return cfg(format!(
                "target error rate {} outside (0, 1]",
                self.target_pe
            ));
        }
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                return cfg(format!("threshold {t} outside [0, 1]"));
            }
        }
        if self.sync == SyncMode::Perfect && self.path == SignalPath::Multiplex {
            return cfg("perfect synchronization is only modelled on the direct path".into());
        }
        ImpairmentSpec {
            cfo_hz: self.cfo_hz,
            sfo_ppm: self.sfo_ppm,
            ..Default::default()
        }
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(ds) = self.rms_ds_ns {
            if !(ds > 0.0 && ds.is_finite()) {
                return cfg(format!("RMS delay spread {ds} ns is not positive"));
            }
        }
        if let Some(v) = self.speed_kmh {
            if !(v >= 0.0 && v.is_finite()) {
                return cfg(format!("speed {v} km/h is negative"));
            }
        }
        self.channel_profile()?;
        Ok(())
    }

    /// Resolves the profile by built-in name first, then as a file.
    pub fn channel_profile(&self) -> Result<Option<ChannelProfile>> {
        let Some(name) = &self.profile else {
            return Ok(None);
        };
        let mut p = match ChannelProfile::builtin(name) {
            Ok(p) => p,
            Err(_) => ChannelProfile::load(Path::new(name)).map_err(|e| {
                Error::Config(format!(
                    "profile '{name}' is neither built in nor loadable: {e}"
                ))
            })?,
        };
        if let Some(ds) = self.rms_ds_ns {
            p = p.with_rms_ds(ds * 1e-9);
        }
        if let Some(v) = self.speed_kmh {
            p = p.with_speed(v);
        }
        p.delays_seconds()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Some(p))
    }
}

/// Statistics of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct FerPoint {
    pub snr_db: f64,
    pub frames: usize,
    pub frame_errors: usize,
    pub fer: f64,
    pub fer_lo: f64,
    pub fer_hi: f64,
    /// Over detected frames, in samples at 6.144 MHz.
    pub timing_err_mean: f64,
    pub timing_err_std: f64,
    /// Fractional offset error in subcarriers.
    pub ffo_rmse: f64,
    /// Fraction of detected frames with the correct integer offset.
    pub ifo_acc: f64,
    pub missed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FerReport {
    pub spec: SimulationSpec,
    pub points: Vec<FerPoint>,
    pub required_snr: Option<RequiredSnr>,
}

/// Outcome of a required-SNR search.
#[derive(Debug, Clone, PartialEq)]
pub struct RequiredSnr {
    pub snr_db: f64,
    pub target_pe: f64,
    /// Frames behind each of the two bracketing points.
    pub frames_per_point: usize,
    pub below: FerPoint,
    pub above: FerPoint,
}

/// Per-frame result, reduced in frame order.
#[derive(Debug, Clone, Copy, Default)]
struct FrameOutcome {
    error: bool,
    missed: bool,
    timing: f64,
    ffo: f64,
    ifo_ok: bool,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    frames: usize,
    errors: usize,
    missed: usize,
    detected: usize,
    t_sum: f64,
    t_sq: f64,
    ffo_sq: f64,
    ifo_ok: usize,
}

impl Tally {
    fn add(&mut self, o: &FrameOutcome) {
        self.frames += 1;
        self.errors += o.error as usize;
        if o.missed {
            self.missed += 1;
            return;
        }
        self.detected += 1;
        self.t_sum += o.timing;
        self.t_sq += o.timing * o.timing;
        self.ffo_sq += o.ffo * o.ffo;
        self.ifo_ok += o.ifo_ok as usize;
    }

    fn point(&self, snr_db: f64) -> FerPoint {
        let (lo, hi) = wilson_interval(self.errors, self.frames, Z95);
        let d = self.detected as f64;
        let (mean, std, ffo, ifo) = if self.detected == 0 {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = self.t_sum / d;
            let var = (self.t_sq / d - mean * mean).max(0.0);
            (
                mean,
                var.sqrt(),
                (self.ffo_sq / d).sqrt(),
                self.ifo_ok as f64 / d,
            )
        };
        FerPoint {
            snr_db,
            frames: self.frames,
            frame_errors: self.errors,
            fer: self.errors as f64 / self.frames.max(1) as f64,
            fer_lo: lo,
            fer_hi: hi,
            timing_err_mean: mean,
            timing_err_std: std,
            ffo_rmse: ffo,
            ifo_acc: ifo,
            missed: self.missed,
        }
    }
}

enum Transmitter {
    Direct(BootstrapSynth),
    Multiplex {
        mux: MultiplexSynth,
        part: usize,
        frontend: ScaledFrontend,
    },
}

/// One frame as it leaves the channel.
#[derive(Debug, Clone)]
pub struct ReceivedFrame {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    /// Signaling bits of the part under test.
    pub bits: Vec<bool>,
    /// First VFS sample in the transmitted stream.
    pub vfs_position: usize,
    pub realization: Option<TdlRealization>,
}

/// Everything a worker needs to simulate frames of one scenario.
pub struct Scenario {
    spec: SimulationSpec,
    config: BootstrapConfig,
    tx: Transmitter,
    layout: FrameLayout,
    ss: Vec<Complex64>,
    profile: Option<ChannelProfile>,
    receiver: Receiver,
    /// Sample rate of the transmitted stream.
    tx_rate: f64,
    /// Transmitted samples per 6.144 MHz receiver sample.
    ratio: usize,
}

impl Scenario {
    pub fn new(spec: &SimulationSpec) -> Result<Self> {
        spec.validate()?;
        let config = BootstrapConfig::for_variant(spec.variant);
        let profile = spec.channel_profile()?;
        let mut rc = ReceiverConfig::new(config.clone());
        rc.threshold = spec
            .threshold
            .unwrap_or_else(|| default_threshold(spec.variant));
        rc.ifo_range = spec.ifo_range;
        let receiver = Receiver::new(rc).map_err(|e| Error::Config(e.to_string()))?;
        let (tx, layout, ss, tx_rate, ratio) = match spec.path {
            SignalPath::Direct => {
                let synth = BootstrapSynth::new(config.clone())?;
                let layout = FrameLayout::desk_scale(&config);
                let ss = synth.build_ss()?.samples;
                (
                    Transmitter::Direct(synth),
                    layout,
                    ss,
                    config.sample_rate(),
                    1,
                )
            }
            SignalPath::Multiplex => {
                let mux = MultiplexSynth::all_variants()?;
                let part = mux
                    .configs()
                    .iter()
                    .position(|c| c.variant == spec.variant)
                    .ok_or_else(|| {
                        Error::Config(format!("{} not in the multiplex", spec.variant))
                    })?;
                let frontend = ScaledFrontend::new(&mux.configs()[part], mux.grid())?;
                let layout = FrameLayout::desk_scale(mux.grid_config());
                let ss = mux.build_ss()?.samples;
                let rate = mux.sample_rate();
                let ratio = mux.grid() / config.n_ifft;
                (
                    Transmitter::Multiplex {
                        mux,
                        part,
                        frontend,
                    },
                    layout,
                    ss,
                    rate,
                    ratio,
                )
            }
        };
        Ok(Self {
            spec: spec.clone(),
            config,
            tx,
            layout,
            ss,
            profile,
            receiver,
            tx_rate,
            ratio,
        })
    }

    pub fn spec(&self) -> &SimulationSpec {
        &self.spec
    }

    /// Frame `index` at `snr_db` as it leaves the channel, before any
    /// receiver processing. The random draws depend on the seed and the frame
    /// index only, so every SNR point sees the same bits, channels and
    /// normalized noise.
    pub fn received_frame(&self, index: u64, snr_db: f64) -> Result<ReceivedFrame> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(2 * index);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        noise_rng.set_stream(2 * index + 1);

        let random_bits = |n: usize, rng: &mut ChaCha8Rng| -> Vec<bool> {
            (0..n).map(|_| rng.random::<bool>()).collect()
        };
        let (vfs, bits) = match &self.tx {
            Transmitter::Direct(s) => {
                let bits = random_bits(self.config.signaling_bits, &mut rng);
                (s.build_vfs_pair(&bits)?.samples, bits)
            }
            Transmitter::Multiplex { mux, part, .. } => {
                let all: Vec<Vec<bool>> = mux
                    .configs()
                    .iter()
                    .map(|c| random_bits(c.signaling_bits, &mut rng))
                    .collect();
                let bits = all[*part].clone();
                (mux.build_vfs_pair(&all)?.samples, bits)
            }
        };
        let x = assemble_frame(&self.layout, &vfs, &[&self.ss], &mut rng)?;
        let realization = match &self.profile {
            Some(p) => Some(TdlRealization::new(p, self.tx_rate, &mut rng)?),
            None => None,
        };
        let mut y = match &realization {
            Some(r) => r.apply(&x)?,
            None => x,
        };
        if self.spec.sfo_ppm != 0.0 {
            y = apply_sfo_with(&y, self.spec.sfo_ppm, self.spec.sfo_interp);
        }
        apply_cfo_in_place(&mut y, self.spec.cfo_hz, self.tx_rate, 0);
        if snr_db.is_finite() {
            add_noise(&mut y, noise_variance(snr_db, 1.0), &mut noise_rng);
        }
        Ok(ReceivedFrame {
            samples: y,
            sample_rate: self.tx_rate,
            bits,
            vfs_position: self.layout.vfs_position(),
            realization,
        })
    }

    fn run_frame(&self, rx: &mut Receiver, index: u64, snr_db: f64) -> Result<FrameOutcome> {
        let ReceivedFrame {
            samples: y,
            bits,
            realization,
            ..
        } = self.received_frame(index, snr_db)?;
        let y = match &self.tx {
            Transmitter::Direct(_) => y,
            Transmitter::Multiplex { frontend, .. } => frontend.process(&y),
        };

        let delta = self.spec.sfo_ppm * 1e-6;
        let true_start = self.layout.vfs_position() as f64 / (1.0 + delta) / self.ratio as f64;
        let offset = self.spec.cfo_hz / SUBCARRIER_SPACING;
        let true_ifo = offset.round();
        let true_eps = offset - true_ifo;

        let result = match self.spec.sync {
            SyncMode::Practical => rx.detect(&y)?,
            SyncMode::Perfect => {
                let n = self.config.n_ifft;
                let h0 = match &realization {
                    Some(r) => {
                        let (_, n_c) = self.config.bc_lengths(SymbolKind::Vfs0);
                        let t = (self.layout.vfs_position() + n_c + n / 2) as f64;
                        r.frequency_response(t, n)
                    }
                    None => vec![Complex64::new(1.0, 0.0); n],
                };
                let genie = Genie {
                    start: true_start.round() as usize,
                    cfo_hz: self.spec.cfo_hz,
                    h0: Some(h0),
                };
                Some(rx.process_genie(&y, &genie)?)
            }
        };
        Ok(match result {
            None => FrameOutcome {
                error: true,
                missed: true,
                ..Default::default()
            },
            Some(d) => {
                let mut ffo = d.epsilon - true_eps;
                ffo -= ffo.round();
                FrameOutcome {
                    error: d.bits != bits,
                    missed: false,
                    timing: d.start as f64 - true_start,
                    ffo,
                    ifo_ok: d.ifo == true_ifo as i64,
                }
            }
        })
    }

    /// Simulates frames `[from, to)` at one SNR on `pool`, in frame order.
    fn run_frames(
        &self,
        pool: &rayon::ThreadPool,
        snr_db: f64,
        from: usize,
        to: usize,
    ) -> Result<Vec<FrameOutcome>> {
        pool.install(|| {
            (from..to)
                .into_par_iter()
                .map_init(
                    || self.receiver.clone(),
                    |rx, i| self.run_frame(rx, i as u64, snr_db),
                )
                .collect()
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.spec.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))
    }

    /// Runs one point, resuming from `tally`. With `stop_at` set, simulation
    /// halts at a chunk boundary once the Wilson interval excludes it.
    fn extend_point(
        &self,
        pool: &rayon::ThreadPool,
        snr_db: f64,
        tally: &mut Tally,
        stop_at: Option<f64>,
    ) -> Result<()> {
        while tally.frames < self.spec.frames {
            let end = (tally.frames + CHUNK_FRAMES).min(self.spec.frames);
            for o in self.run_frames(pool, snr_db, tally.frames, end)? {
                tally.add(&o);
            }
            if let Some(target) = stop_at {
                let (lo, hi) = wilson_interval(tally.errors, tally.frames, Z95);
                if lo > target || hi < target {
                    break;
                }
            }
        }
        Ok(())
    }
}

/// FER at every SNR of the scenario's list, sorted by SNR.
pub fn run_fer_sweep(spec: &SimulationSpec) -> Result<FerReport> {
    let scenario = Scenario::new(spec)?;
    let pool = scenario.pool()?;
    let mut snrs = spec.snr_db.clone();
    snrs.sort_by(f64::total_cmp);
    let stop = spec.early_stop.then_some(spec.target_pe);
    let mut points = Vec::with_capacity(snrs.len());
    for snr in snrs {
        let mut t = Tally::default();
        scenario.extend_point(&pool, snr, &mut t, stop)?;
        points.push(t.point(snr));
    }
    Ok(FerReport {
        spec: spec.clone(),
        points,
        required_snr: None,
    })
}

/// Bisection for the SNR at which FER crosses `spec.target_pe`, with
/// log-linear interpolation between the final bracketing points.
///
/// Points visited during the search stop early once their outcome relative
/// to the target is clear; the two final bracketing points are always
/// completed to `spec.frames`. A target of 1 is met everywhere and returns
/// the lower bound.
pub fn find_required_snr(spec: &SimulationSpec) -> Result<FerReport> {
    let scenario = Scenario::new(spec)?;
    let pool = scenario.pool()?;
    let target = spec.target_pe;
    let mut visited: Vec<(f64, Tally)> = Vec::new();
    let eval = |snr: f64, visited: &mut Vec<(f64, Tally)>| -> Result<Tally> {
        let mut t = Tally::default();
        scenario.extend_point(&pool, snr, &mut t, Some(target))?;
        visited.push((snr, t.clone()));
        Ok(t)
    };
    let (mut lo, mut hi) = (spec.snr_lo, spec.snr_hi);
    if target >= 1.0 {
        let t = eval(lo, &mut visited)?;
        let r = required(lo, target, (lo, &t), (lo, &t));
        return Ok(finish(spec, visited, Some(r)));
    }
    let mut t_lo = eval(lo, &mut visited)?;
    let mut t_hi = eval(hi, &mut visited)?;
    let fer = |t: &Tally| t.errors as f64 / t.frames as f64;
    if fer(&t_lo) <= target || fer(&t_hi) > target {
        return Err(Error::Bracket {
            target,
            lo,
            hi,
            fer_lo: fer(&t_lo),
            fer_hi: fer(&t_hi),
        });
    }
    while hi - lo > spec.snr_tol {
        let mid = 0.5 * (lo + hi);
        let t = eval(mid, &mut visited)?;
        if fer(&t) > target {
            lo = mid;
            t_lo = t;
        } else {
            hi = mid;
            t_hi = t;
        }
    }
    scenario.extend_point(&pool, lo, &mut t_lo, None)?;
    scenario.extend_point(&pool, hi, &mut t_hi, None)?;
    for (s, t) in visited.iter_mut() {
        if *s == lo {
            *t = t_lo.clone();
        } else if *s == hi {
            *t = t_hi.clone();
        }
    }
    let snr = interpolate(lo, fer(&t_lo), hi, fer(&t_hi), target, spec.frames);
    let r = required(snr, target, (lo, &t_lo), (hi, &t_hi));
    Ok(finish(spec, visited, Some(r)))
}

fn required(snr: f64, target: f64, below: (f64, &Tally), above: (f64, &Tally)) -> RequiredSnr {
    RequiredSnr {
        snr_db: snr,
        target_pe: target,
        frames_per_point: below.1.frames.min(above.1.frames),
        below: below.1.point(below.0),
        above: above.1.point(above.0),
    }
}

fn finish(spec: &SimulationSpec, visited: Vec<(f64, Tally)>, r: Option<RequiredSnr>) -> FerReport {
    let mut points: Vec<FerPoint> = visited.iter().map(|(s, t)| t.point(*s)).collect();
    points.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    points.dedup_by(|a, b| a.snr_db == b.snr_db);
    FerReport {
        spec: spec.clone(),
        points,
        required_snr: r,
    }
}

/// Crossing of `target` on the line through `(lo, log10 f_lo)` and
/// `(hi, log10 f_hi)`. A zero count is replaced by half an error so the
/// logarithm stays finite.
pub fn interpolate(lo: f64, f_lo: f64, hi: f64, f_hi: f64, target: f64, frames: usize) -> f64 {
    let floor = 0.5 / frames.max(1) as f64;
    let (a, b) = (f_lo.max(floor).log10(), f_hi.max(floor).log10());
    let t = target.log10();
    if a <= t {
        return lo;
    }
    if b >= t {
        return hi;
    }
    lo + (a - t) / (a - b) * (hi - lo)
}
