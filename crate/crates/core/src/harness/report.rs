use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{FerPoint, FerReport};
use crate::error::Result;

pub const CSV_HEADER: &str =
    "snr_db,frames,frame_errors,fer,fer_lo,fer_hi,timing_err_mean,timing_err_std,ffo_rmse,ifo_acc,missed";

fn csv_row(p: &FerPoint) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        p.snr_db,
        p.frames,
        p.frame_errors,
        p.fer,
        p.fer_lo,
        p.fer_hi,
        p.timing_err_mean,
        p.timing_err_std,
        p.ffo_rmse,
        p.ifo_acc,
        p.missed
    )
}

/// Per-point statistics, one row per SNR, LF line endings.
pub fn csv_string(report: &FerReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in &report.points {
        s.push_str(&csv_row(p));
        s.push('\n');
    }
    s
}

pub fn write_csv(report: &FerReport, path: &Path) -> Result<()> {
    fs::write(path, csv_string(report))?;
    Ok(())
}

/// `key=value` lines describing the run: every scenario parameter, the seed
/// and the required SNR when one was searched for.
pub fn manifest_string(report: &FerReport) -> String {
    let s = &report.spec;
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |v| v.to_string());
    let snrs: Vec<String> = s.snr_db.iter().map(|v| v.to_string()).collect();
    let mut m = String::new();
    let _ = writeln!(m, "variant={}", s.variant);
    let _ = writeln!(m, "path={}", s.path);
    let _ = writeln!(m, "profile={}", s.profile.as_deref().unwrap_or("awgn"));
    let _ = writeln!(m, "rms_ds_ns={}", opt(s.rms_ds_ns));
    let _ = writeln!(m, "speed_kmh={}", opt(s.speed_kmh));
    let _ = writeln!(m, "cfo_hz={}", s.cfo_hz);
    let _ = writeln!(m, "sfo_ppm={}", s.sfo_ppm);
    let _ = writeln!(m, "sfo_interp={}", s.sfo_interp);
    let _ = writeln!(m, "sync={}", s.sync);
    let _ = writeln!(m, "snr_db={}", snrs.join(";"));
    let _ = writeln!(m, "snr_lo={}", s.snr_lo);
    let _ = writeln!(m, "snr_hi={}", s.snr_hi);
    let _ = writeln!(m, "snr_tol={}", s.snr_tol);
    let _ = writeln!(m, "target_pe={}", s.target_pe);
    let _ = writeln!(m, "frames={}", s.frames);
    let _ = writeln!(m, "seed={}", s.seed);
    let _ = writeln!(m, "workers={}", s.workers);
    let _ = writeln!(m, "threshold={}", opt(s.threshold));
    let _ = writeln!(m, "ifo_range={}", s.ifo_range);
    let _ = writeln!(m, "early_stop={}", s.early_stop);
    match &report.required_snr {
        Some(r) => {
            let _ = writeln!(m, "required_snr_db={}", r.snr_db);
            let _ = writeln!(m, "required_frames_per_point={}", r.frames_per_point);
            let _ = writeln!(m, "bracket_lo_db={}", r.below.snr_db);
            let _ = writeln!(m, "bracket_hi_db={}", r.above.snr_db);
        }
        None => {
            let _ = writeln!(m, "required_snr_db=none");
        }
    }
    m
}

pub fn write_manifest(report: &FerReport, path: &Path) -> Result<()> {
    fs::write(path, manifest_string(report))?;
    Ok(())
}
