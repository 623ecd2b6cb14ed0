//! `b2x`: waveform export, file detection and Monte-Carlo FER runs.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use b2x_bootstrap::channel::SfoInterpolator;
use b2x_bootstrap::harness::{
    calibrate_false_alarm, find_required_snr, run_fer_sweep, write_csv, write_manifest, FerReport,
    Scenario, SignalPath, SimulationSpec, SyncMode,
};
use b2x_bootstrap::receiver::{Receiver, ReceiverConfig, ScaledFrontend};
use b2x_bootstrap::sequences::bits_to_string;
use b2x_bootstrap::waveform::iq::{read_iq, write_iq, IqMeta};
use b2x_bootstrap::waveform::{BootstrapConfig, ComplexBuffer, MultiplexSynth, Variant};
use b2x_bootstrap::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "b2x", version, about = "B2X bootstrap modem and FER harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write received frames of a scenario as an IQ file with sidecar.
    Generate(GenerateArgs),
    /// Detect and decode every bootstrap in an IQ file.
    Detect(DetectArgs),
    /// Frame error rate at each SNR of the list.
    Sweep(RunArgs),
    /// SNR at which the frame error rate crosses the target.
    RequiredSnr(RunArgs),
    /// Noise-only detection threshold calibration.
    CalibrateFa(CalibrateArgs),
}

/// Flags mirroring [`SimulationSpec`]; unset flags keep the spec defaults.
#[derive(Args, Debug, Default)]
struct SpecFlags {
    /// TOML file of simulation fields; its values override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    path: Option<SignalPath>,
    /// Built-in profile name (tdl-b ... tdl-e, tu6) or profile file.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    rms_ds_ns: Option<f64>,
    #[arg(long)]
    speed_kmh: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    cfo_hz: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sfo_ppm: Option<f64>,
    #[arg(long)]
    sfo_interp: Option<SfoInterpolator>,
    #[arg(long)]
    sync: Option<SyncMode>,
    /// Comma-separated SNR list in dB; `inf` disables noise.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    snr_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    snr_hi: Option<f64>,
    #[arg(long)]
    snr_tol: Option<f64>,
    #[arg(long)]
    target_pe: Option<f64>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    ifo_range: Option<usize>,
    #[arg(long)]
    early_stop: Option<bool>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    spec: SpecFlags,
    /// CSV report path; printed to stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Run manifest path.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    spec: SpecFlags,
    /// Output sample file; the sidecar goes next to it.
    #[arg(long, short)]
    out: PathBuf,
    /// Number of consecutive frames.
    #[arg(long = "count", default_value_t = 1)]
    count: usize,
    /// SNR of the written frames; noiseless when absent.
    #[arg(long = "at-snr-db", allow_negative_numbers = true)]
    at_snr_db: Option<f64>,
}

#[derive(Args)]
struct DetectArgs {
    /// Input sample file with sidecar.
    input: PathBuf,
    /// Variant to look for; taken from the sidecar when absent.
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    ifo_range: Option<usize>,
    /// Nominal SS offsets from the VFS start, in samples.
    #[arg(long, value_delimiter = ',')]
    ss_position: Vec<usize>,
    /// Record output; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value = "normal")]
    variant: Variant,
    #[arg(long, default_value = "direct")]
    path: SignalPath,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Comma-separated scan-window lengths in samples.
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    window: Vec<usize>,
    /// Comma-separated false-alarm targets.
    #[arg(long, value_delimiter = ',', default_value = "0.0001,0.001,0.01")]
    pfa: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// CSV output; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl SpecFlags {
    /// Flags over the defaults, then the config file over both.
    fn resolve(&self) -> Result<SimulationSpec, Error> {
        let mut s = SimulationSpec::default();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { s.$f = v.clone(); } )* };
        }
        set!(variant, path, cfo_hz, sfo_ppm, sfo_interp, sync, snr_db, snr_lo, snr_hi);
        set!(snr_tol, target_pe, frames, seed, workers, ifo_range, early_stop);
        if self.profile.is_some() {
            s.profile = self.profile.clone();
        }
        if self.rms_ds_ns.is_some() {
            s.rms_ds_ns = self.rms_ds_ns;
        }
        if self.speed_kmh.is_some() {
            s.speed_kmh = self.speed_kmh;
        }
        if self.threshold.is_some() {
            s.threshold = self.threshold;
        }
        if let Some(path) = &self.config {
            s = overlay(&s, path)?;
        }
        s.validate()?;
        Ok(s)
    }
}

/// Replaces the fields of `base` named in the TOML file at `path`.
fn overlay(base: &SimulationSpec, path: &Path) -> Result<SimulationSpec, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut merged = toml::Table::try_from(base)
        .map_err(|e| Error::Config(format!("cannot encode spec: {e}")))?;
    merged.extend(file);
    merged
        .try_into()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_report(report: &FerReport, args: &RunArgs) -> Result<(), Error> {
    match &args.csv {
        Some(p) => write_csv(report, p)?,
        None => emit(None, &b2x_bootstrap::harness::csv_string(report))?,
    }
    if let Some(p) = &args.manifest {
        write_manifest(report, p)?;
    }
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<(), Error> {
    if args.count == 0 {
        return Err(Error::Config("frame count must be at least 1".into()));
    }
    let spec = args.spec.resolve()?;
    let scenario = Scenario::new(&spec)?;
    let snr = args.at_snr_db.unwrap_or(f64::INFINITY);
    let mut samples = Vec::new();
    let mut rate = 0.0;
    let mut first_bits = Vec::new();
    for i in 0..args.count {
        let f = scenario.received_frame(i as u64, snr)?;
        rate = f.sample_rate;
        if i == 0 {
            first_bits = f.bits;
        }
        samples.extend(f.samples);
    }
    let config = BootstrapConfig::for_variant(spec.variant);
    let mut meta = IqMeta::for_config(&config, (args.count == 1).then_some(first_bits.as_slice()));
    meta.extra.insert("frames".into(), args.count.to_string());
    meta.extra.insert("path".into(), spec.path.to_string());
    meta.extra.insert("seed".into(), spec.seed.to_string());
    meta.extra.insert("snr_db".into(), snr.to_string());
    write_iq(&args.out, &ComplexBuffer::new(samples, rate), &meta)?;
    Ok(())
}

fn detect(args: &DetectArgs) -> Result<(), Error> {
    let (buf, meta) = read_iq(&args.input)?;
    let variant = args
        .variant
        .or(meta.variant)
        .ok_or_else(|| Error::Config("no variant given and none in the sidecar".into()))?;
    let config = BootstrapConfig::for_variant(variant);
    let r = if (buf.sample_rate - config.sample_rate()).abs() < 1.0 {
        buf.samples
    } else {
        let mux = MultiplexSynth::all_variants()?;
        if (buf.sample_rate - mux.sample_rate()).abs() >= 1.0 {
            return Err(Error::Config(format!(
                "sample rate {} Hz is neither {} nor {} Hz",
                buf.sample_rate,
                config.sample_rate(),
                mux.sample_rate()
            )));
        }
        let part = mux
            .configs()
            .iter()
            .find(|c| c.variant == variant)
            .ok_or_else(|| Error::Config(format!("{variant} not in the multiplex")))?;
        ScaledFrontend::new(part, mux.grid())?.process(&buf.samples)
    };
    let mut rc = ReceiverConfig::new(config);
    if let Some(t) = args.threshold {
        rc.threshold = t;
    }
    if let Some(l) = args.ifo_range {
        rc.ifo_range = l;
    }
    rc.ss_positions = args.ss_position.clone();
    rc.validate().map_err(|e| Error::Config(e.to_string()))?;
    let mut rx = Receiver::new(rc)?;
    let found = rx.detect_all(&r)?;
    let mut text = String::new();
    for (i, d) in found.iter().enumerate() {
        text += &d.record(i);
        text.push('\n');
    }
    emit(args.out.as_deref(), &text)?;
    if let Some(bits) = &meta.bits {
        if let Some(d) = found.first() {
            eprintln!(
                "first frame: sent {} decoded {}",
                bits_to_string(bits),
                bits_to_string(&d.bits)
            );
        }
    }
    eprintln!("{} bootstrap(s) detected", found.len());
    Ok(())
}

fn calibrate(args: &CalibrateArgs) -> Result<(), Error> {
    let cal = calibrate_false_alarm(
        args.variant,
        args.path,
        args.trials,
        &args.window,
        &args.pfa,
        args.seed,
        args.workers,
    )?;
    let mut text = String::from("window,pfa,threshold,exceed,trials,rate_lo,rate_hi\n");
    for t in &cal.thresholds {
        text += &format!(
            "{},{},{},{},{},{},{}\n",
            t.window, t.pfa, t.threshold, t.exceed, cal.trials, t.rate_lo, t.rate_hi
        );
    }
    emit(args.out.as_deref(), &text)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Detect(a) => detect(&a),
        Command::Sweep(a) => {
            let report = run_fer_sweep(&a.spec.resolve()?)?;
            write_report(&report, &a)
        }
        Command::RequiredSnr(a) => {
            let report = find_required_snr(&a.spec.resolve()?)?;
            if let Some(r) = &report.required_snr {
                eprintln!(
                    "required SNR {:.2} dB at P_e {} ({} frames per bracketing point)",
                    r.snr_db, r.target_pe, r.frames_per_point
                );
            }
            write_report(&report, &a)
        }
        Command::CalibrateFa(a) => calibrate(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Param(_) | Error::Profile { .. } => 2,
                Error::Bracket { .. } => 3,
                _ => 1,
            })
        }
    }
}
