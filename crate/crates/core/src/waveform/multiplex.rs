use num_complex::Complex64;

use super::symbol::{
    apply_phase_ramp, map_subcarriers, ofdm_modulate_normalized, wrap_structure, FrequencySymbol,
    SymbolKind,
};
use super::{BootstrapConfig, ComplexBuffer, Variant, NORMAL_FFT};
use crate::dsp::{bin, rotate_left, FftPair};
use crate::error::{Error, Result};
use crate::sequences::{gen_pn, gen_zc, gray_encode, PnParams, ZcParams};

/// One variant's contribution to the multiplex and the bits it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexPart {
    pub config: BootstrapConfig,
    pub bits: Vec<bool>,
}

/// Subcarrier values of one part placed at its centre offset on the wide grid.
#[derive(Debug, Clone)]
struct PlacedPart {
    variant: Variant,
    signaling_bits: usize,
    s0: Vec<Complex64>,
    s1: Vec<Complex64>,
    s_ss: Vec<Complex64>,
}

fn place(sym: &FrequencySymbol, offset: i64, grid: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); grid];
    let n_h = sym.half_width as i64;
    for k in (-n_h..=n_h).filter(|&k| k != 0) {
        out[bin(k + offset, grid)] = sym.at(k);
    }
    out
}

fn place_parts(configs: &[&BootstrapConfig], grid: usize) -> Result<Vec<PlacedPart>> {
    if grid < 2 * NORMAL_FFT || !grid.is_power_of_two() {
        return Err(Error::Param(format!(
            "multiplex grid {grid} must be a power of two >= {}",
            2 * NORMAL_FFT
        )));
    }
    if configs.is_empty() {
        return Err(Error::Layout("multiplex needs at least one part".into()));
    }
    let mut bands: Vec<(i64, i64, Variant)> = Vec::new();
    let mut parts = Vec::with_capacity(configs.len());
    for cfg in configs {
        cfg.validate()?;
        let v = cfg.variant;
        if bands.iter().any(|b| b.2 == v) {
            return Err(Error::Layout(format!("variant {v} appears twice")));
        }
        let n_h = cfg.half_width() as i64;
        let (lo, hi) = (cfg.center_offset - n_h, cfg.center_offset + n_h);
        if lo <= -(grid as i64) / 2 || hi >= grid as i64 / 2 {
            return Err(Error::Layout(format!(
                "{v} band [{lo}, {hi}] leaves the grid"
            )));
        }
        if let Some(o) = bands.iter().find(|b| lo <= b.1 && b.0 <= hi) {
            return Err(Error::Layout(format!("{v} band overlaps {}", o.2)));
        }
        bands.push((lo, hi, v));

        let n_h = cfg.half_width();
        let zc = gen_zc(ZcParams::new(cfg.zc_length, cfg.root, cfg.zc_shift)?)?;
        let zc_ss = gen_zc(ZcParams::new(cfg.zc_length, cfg.root, 0)?)?;
        let pn = gen_pn(PnParams::new(cfg.pn_seed, 2 * n_h)?)?;
        let pn_ss = gen_pn(PnParams::new(cfg.pn_seed, n_h)?)?;
        let s0 = map_subcarriers(&zc, &pn.chips, SymbolKind::Vfs0, grid)?;
        let s1 = map_subcarriers(&zc, &pn.chips, SymbolKind::Vfs1, grid)?;
        let s_ss = map_subcarriers(&zc_ss, &pn_ss.chips, SymbolKind::Ss, grid)?;
        parts.push(PlacedPart {
            variant: v,
            signaling_bits: cfg.signaling_bits,
            s0: place(&s0, cfg.center_offset, grid),
            s1: place(&s1, cfg.center_offset, grid),
            s_ss: place(&s_ss, cfg.center_offset, grid),
        });
    }
    Ok(parts)
}

fn grid_config(grid: usize) -> Result<BootstrapConfig> {
    BootstrapConfig::normal().with_n_ifft(grid)
}

fn active_total(configs: &[&BootstrapConfig]) -> usize {
    configs.iter().map(|c| c.active_subcarriers()).sum()
}

fn check_bits(part: &PlacedPart, bits: &[bool]) -> Result<()> {
    if bits.len() != part.signaling_bits {
        return Err(Error::Param(format!(
            "{}: {} bits given, {} expected",
            part.variant,
            bits.len(),
            part.signaling_bits
        )));
    }
    Ok(())
}

/// Builds the VFS pair of all `parts` on one `grid`-point frequency grid.
///
/// Each part's VFS1 shift is applied as a phase ramp over absolute bins
/// before the single inverse transform; the output is scaled by the square
/// root of the total active subcarrier count across parts.
pub fn assemble_scaled_multiplex(parts: &[MultiplexPart], grid: usize) -> Result<ComplexBuffer> {
    let configs: Vec<&BootstrapConfig> = parts.iter().map(|p| &p.config).collect();
    let placed = place_parts(&configs, grid)?;
    let mut f0 = vec![Complex64::default(); grid];
    let mut f1 = vec![Complex64::default(); grid];
    for (p, part) in placed.iter().zip(parts) {
        check_bits(p, &part.bits)?;
        let m = gray_encode(&part.bits, grid)?;
        let mut s1 = p.s1.clone();
        apply_phase_ramp(&mut s1, m);
        for b in 0..grid {
            f0[b] += p.s0[b];
            f1[b] += s1[b];
        }
    }
    let norm = active_total(&configs);
    let mut fft = FftPair::new(grid);
    let a0 = ofdm_modulate_normalized(&f0, norm, &mut fft);
    let a1 = ofdm_modulate_normalized(&f1, norm, &mut fft);
    let cfg = grid_config(grid)?;
    let mut samples = wrap_structure(&a0, SymbolKind::Vfs0, &cfg, 0)?.samples;
    samples.extend(wrap_structure(&a1, SymbolKind::Vfs1, &cfg, 0)?.samples);
    Ok(ComplexBuffer::new(samples, cfg.sample_rate()))
}

/// Cached multiplex transmitter: per-part VFS1 templates are transformed
/// once and rotated per frame, which equals the phase-ramp construction.
#[derive(Debug, Clone)]
pub struct MultiplexSynth {
    grid_config: BootstrapConfig,
    configs: Vec<BootstrapConfig>,
    a0: Vec<Complex64>,
    a1_parts: Vec<Vec<Complex64>>,
    a_ss: Vec<Complex64>,
}

impl MultiplexSynth {
    pub fn new(configs: &[BootstrapConfig], grid: usize) -> Result<Self> {
        let refs: Vec<&BootstrapConfig> = configs.iter().collect();
        let placed = place_parts(&refs, grid)?;
        let norm = active_total(&refs);
        let mut fft = FftPair::new(grid);
        let sum = |pick: fn(&PlacedPart) -> &Vec<Complex64>| {
            let mut f = vec![Complex64::default(); grid];
            for p in &placed {
                f.iter_mut().zip(pick(p)).for_each(|(a, b)| *a += b);
            }
            f
        };
        let f0 = sum(|p| &p.s0);
        let fss = sum(|p| &p.s_ss);
        let a0 = ofdm_modulate_normalized(&f0, norm, &mut fft);
        let a_ss = ofdm_modulate_normalized(&fss, norm, &mut fft);
        let a1_parts = placed
            .iter()
            .map(|p| ofdm_modulate_normalized(&p.s1, norm, &mut fft))
            .collect();
        Ok(Self {
            grid_config: grid_config(grid)?,
            configs: configs.to_vec(),
            a0,
            a1_parts,
            a_ss,
        })
    }

    /// The five-part multiplex on the 4096-point, 12.288 MHz grid.
    pub fn all_variants() -> Result<Self> {
        let configs: Vec<BootstrapConfig> = Variant::ALL
            .iter()
            .map(|&v| BootstrapConfig::for_variant(v))
            .collect();
        Self::new(&configs, 2 * NORMAL_FFT)
    }

    pub fn configs(&self) -> &[BootstrapConfig] {
        &self.configs
    }

    /// Config describing the wide grid (lengths and sample rate).
    pub fn grid_config(&self) -> &BootstrapConfig {
        &self.grid_config
    }

    pub fn grid(&self) -> usize {
        self.grid_config.n_ifft
    }

    pub fn sample_rate(&self) -> f64 {
        self.grid_config.sample_rate()
    }

    pub fn active_total(&self) -> usize {
        self.configs.iter().map(|c| c.active_subcarriers()).sum()
    }

    /// VFS pair with `bits[i]` carried by the `i`-th configured part.
    pub fn build_vfs_pair(&self, bits: &[Vec<bool>]) -> Result<ComplexBuffer> {
        if bits.len() != self.configs.len() {
            return Err(Error::Param(format!(
                "{} bit vectors for {} parts",
                bits.len(),
                self.configs.len()
            )));
        }
        let grid = self.grid();
        let mut a1 = vec![Complex64::default(); grid];
        for ((cfg, b), tmpl) in self.configs.iter().zip(bits).zip(&self.a1_parts) {
            if b.len() != cfg.signaling_bits {
                return Err(Error::Param(format!(
                    "{}: {} bits given, {} expected",
                    cfg.variant,
                    b.len(),
                    cfg.signaling_bits
                )));
            }
            let m = gray_encode(b, grid)?;
            a1.iter_mut()
                .zip(rotate_left(tmpl, m))
                .for_each(|(x, y)| *x += y);
        }
        let cfg = &self.grid_config;
        let mut samples = wrap_structure(&self.a0, SymbolKind::Vfs0, cfg, 0)?.samples;
        samples.extend(wrap_structure(&a1, SymbolKind::Vfs1, cfg, 0)?.samples);
        Ok(ComplexBuffer::new(samples, cfg.sample_rate()))
    }

    pub fn build_ss(&self) -> Result<ComplexBuffer> {
        let cfg = &self.grid_config;
        let s = wrap_structure(&self.a_ss, SymbolKind::Ss, cfg, 0)?.samples;
        Ok(ComplexBuffer::new(s, cfg.sample_rate()))
    }
}
