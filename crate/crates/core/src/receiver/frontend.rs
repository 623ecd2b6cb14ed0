use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::lowpass_taps;
use crate::error::{Error, Result};
use crate::waveform::{BootstrapConfig, NORMAL_FFT};

/// Low-pass length of the scaled front end.
pub const FRONTEND_TAPS: usize = 63;

/// Cutoff margin over the part half-bandwidth.
pub const FRONTEND_MARGIN: f64 = 1.2;

/// Decimating front end that moves one multiplex part to 6.144 MHz baseband.
#[derive(Debug, Clone)]
pub struct ScaledFrontend {
    center_offset: i64,
    grid: usize,
    taps: Vec<f64>,
}

impl ScaledFrontend {
    /// Front end for `part` on a `grid`-point wideband at `grid * 3 kHz`.
    pub fn new(part: &BootstrapConfig, grid: usize) -> Result<Self> {
        Self::with_cutoff(part, grid, FRONTEND_MARGIN)
    }

    /// Cutoff at `margin` times the part half-bandwidth.
    pub fn with_cutoff(part: &BootstrapConfig, grid: usize, margin: f64) -> Result<Self> {
        if grid != 2 * NORMAL_FFT {
            return Err(Error::Param(format!(
                "front end decimates a {}-point grid by 2, got {grid}",
                2 * NORMAL_FFT
            )));
        }
        let half = part.half_width() as i64;
        if part.center_offset.abs() + half >= grid as i64 / 2 {
            return Err(Error::Param(format!(
                "{} at offset {} does not fit the {grid}-point grid",
                part.variant, part.center_offset
            )));
        }
        // cutoff as a fraction of the wideband rate
        let cutoff = (margin * part.half_width() as f64 / grid as f64).min(0.25);
        Ok(Self {
            center_offset: part.center_offset,
            grid,
            taps: lowpass_taps(FRONTEND_TAPS, cutoff),
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Mixes the part centre to 0 Hz, filters and keeps every second
    /// sample; the filter delay is compensated so that output `m` lines up
    /// with input `2m`.
    pub fn process(&self, wide: &[Complex64]) -> Vec<Complex64> {
        let w = -2.0 * PI * self.center_offset as f64 / self.grid as f64;
        let mixed: Vec<Complex64> = wide
            .iter()
            .enumerate()
            .map(|(n, v)| v * Complex64::from_polar(1.0, w * (n % self.grid) as f64))
            .collect();
        let delay = (self.taps.len() / 2) as isize;
        let len = wide.len();
        (0..len.div_ceil(2))
            .map(|m| {
                let centre = (2 * m) as isize + delay;
                let mut acc = Complex64::default();
                for (j, h) in self.taps.iter().enumerate() {
                    let i = centre - j as isize;
                    if i >= 0 && (i as usize) < len {
                        acc += mixed[i as usize] * h;
                    }
                }
                acc
            })
            .collect()
    }
}

/// One-shot [`ScaledFrontend`].
pub fn scaled_frontend(
    wide: &[Complex64],
    part: &BootstrapConfig,
    grid: usize,
) -> Result<Vec<Complex64>> {
    Ok(ScaledFrontend::new(part, grid)?.process(wide))
}
