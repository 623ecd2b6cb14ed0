use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::symbol::{
    apply_signaling_shift, map_subcarriers, ofdm_modulate, wrap_structure, FrequencySymbol,
    SymbolKind, TimeSymbol,
};
use super::{BootstrapConfig, ComplexBuffer, NORMAL_FFT};
use crate::error::{Error, Result};
use crate::sequences::{gen_pn, gen_zc, gray_encode, PnParams, ZcParams};

/// Unshifted part-A waveforms and their subcarrier symbols for one config.
#[derive(Debug, Clone)]
pub struct VfsTemplates {
    pub s0: FrequencySymbol,
    pub s1: FrequencySymbol,
    pub s_ss: FrequencySymbol,
    pub a0: Vec<Complex64>,
    pub a1: Vec<Complex64>,
    pub a_ss: Vec<Complex64>,
}

/// Transmitter for one bootstrap configuration.
///
/// Sequence generation and the inverse transforms run once at construction;
/// every VFS pair afterwards is a rotation and two copies.
#[derive(Debug, Clone)]
pub struct BootstrapSynth {
    config: BootstrapConfig,
    templates: VfsTemplates,
}

impl BootstrapSynth {
    pub fn new(config: BootstrapConfig) -> Result<Self> {
        config.validate()?;
        let n_h = config.half_width();
        let zc_vfs = gen_zc(ZcParams::new(
            config.zc_length,
            config.root,
            config.zc_shift,
        )?)?;
        let zc_ss = gen_zc(ZcParams::new(config.zc_length, config.root, 0)?)?;
        // one uninterrupted run for both VFS symbols; the SS restarts the register
        let pn_vfs = gen_pn(PnParams::new(config.pn_seed, 2 * n_h)?)?;
        let pn_ss = gen_pn(PnParams::new(config.pn_seed, n_h)?)?;
        let n = config.n_ifft;
        let s0 = map_subcarriers(&zc_vfs, &pn_vfs.chips, SymbolKind::Vfs0, n)?;
        let s1 = map_subcarriers(&zc_vfs, &pn_vfs.chips, SymbolKind::Vfs1, n)?;
        let s_ss = map_subcarriers(&zc_ss, &pn_ss.chips, SymbolKind::Ss, n)?;
        let templates = VfsTemplates {
            a0: ofdm_modulate(&s0),
            a1: ofdm_modulate(&s1),
            a_ss: ofdm_modulate(&s_ss),
            s0,
            s1,
            s_ss,
        };
        Ok(Self { config, templates })
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.config
    }

    pub fn templates(&self) -> &VfsTemplates {
        &self.templates
    }

    /// Cyclic shift carrying `bits` on this config's grid.
    pub fn shift_for(&self, bits: &[bool]) -> Result<usize> {
        if bits.len() != self.config.signaling_bits {
            return Err(Error::Param(format!(
                "{} signaling bits given, variant carries {}",
                bits.len(),
                self.config.signaling_bits
            )));
        }
        gray_encode(bits, self.config.n_ifft)
    }

    /// The two VFS symbols; VFS0 is never shifted.
    pub fn vfs_symbols(&self, bits: &[bool]) -> Result<[TimeSymbol; 2]> {
        let m = self.shift_for(bits)?;
        let t = &self.templates;
        let a1 = apply_signaling_shift(&t.a1, m)?;
        Ok([
            wrap_structure(&t.a0, SymbolKind::Vfs0, &self.config, 0)?,
            wrap_structure(&a1, SymbolKind::Vfs1, &self.config, m)?,
        ])
    }

    /// VFS0 (CAB, unshifted) followed by VFS1 (BCA, shifted by the Gray code
    /// of `bits`), `2*N_t` samples.
    pub fn build_vfs_pair(&self, bits: &[bool]) -> Result<ComplexBuffer> {
        let [v0, v1] = self.vfs_symbols(bits)?;
        let mut samples = v0.samples;
        samples.extend_from_slice(&v1.samples);
        Ok(ComplexBuffer::new(samples, self.config.sample_rate()))
    }

    pub fn ss_symbol(&self) -> Result<TimeSymbol> {
        wrap_structure(&self.templates.a_ss, SymbolKind::Ss, &self.config, 0)
    }

    pub fn build_ss(&self) -> Result<ComplexBuffer> {
        Ok(ComplexBuffer::new(
            self.ss_symbol()?.samples,
            self.config.sample_rate(),
        ))
    }
}

/// Content of regions not occupied by bootstrap symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fill {
    Zero,
    /// Unit-variance circular complex Gaussian samples.
    Noise,
}

/// Placement of the VFS pair and SS symbols inside a (shortened) virtual frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLayout {
    pub lead_in: usize,
    pub vfs_len: usize,
    pub ss_len: usize,
    /// Absolute sample offsets of each SS symbol, ascending.
    pub ss_positions: Vec<usize>,
    pub total_len: usize,
    pub lead_in_fill: Fill,
    pub filler_fill: Fill,
}

/// Lead-in, filler and SS count of the default desk-scale frame at 6.144 MHz.
pub const DESK_LEAD_IN: usize = 5000;
pub const DESK_FILLER: usize = 2048;

impl FrameLayout {
    /// `[lead-in][VFS pair]` then `ss_count` times `[filler][SS]`; with no SS
    /// a single filler closes the frame.
    pub fn new(config: &BootstrapConfig, lead_in: usize, filler: usize, ss_count: usize) -> Self {
        let n_t = config.n_t();
        let vfs_len = 2 * n_t;
        let mut pos = lead_in + vfs_len;
        let mut ss_positions = Vec::with_capacity(ss_count);
        for _ in 0..ss_count {
            pos += filler;
            ss_positions.push(pos);
            pos += n_t;
        }
        if ss_count == 0 {
            pos += filler;
        }
        Self {
            lead_in,
            vfs_len,
            ss_len: n_t,
            ss_positions,
            total_len: pos,
            lead_in_fill: Fill::Zero,
            filler_fill: Fill::Zero,
        }
    }

    /// 5000-sample lead-in, VFS pair, 2048-sample filler and one SS, with
    /// lengths scaled to the config's sample rate.
    pub fn desk_scale(config: &BootstrapConfig) -> Self {
        let r = config.n_ifft / NORMAL_FFT;
        let r = r.max(1);
        Self::new(config, DESK_LEAD_IN * r, DESK_FILLER * r, 1)
    }

    pub fn vfs_position(&self) -> usize {
        self.lead_in
    }

    pub fn validate(&self) -> Result<()> {
        let mut end = self.lead_in + self.vfs_len;
        for &p in &self.ss_positions {
            if p < end {
                return Err(Error::Layout(format!(
                    "SS at {p} overlaps the previous segment ending at {end}"
                )));
            }
            end = p + self.ss_len;
        }
        if end > self.total_len {
            return Err(Error::Layout(format!(
                "segments end at {end}, past the frame length {}",
                self.total_len
            )));
        }
        Ok(())
    }
}

fn fill<R: Rng + ?Sized>(out: &mut [Complex64], how: Fill, rng: &mut R) {
    match how {
        Fill::Zero => out.iter_mut().for_each(|v| *v = Complex64::default()),
        Fill::Noise => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for v in out.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v = Complex64::new(re * s, im * s);
            }
        }
    }
}

/// Lays out lead-in, VFS pair, filler and SS symbols per `layout`.
pub fn assemble_frame<R: Rng + ?Sized>(
    layout: &FrameLayout,
    vfs: &[Complex64],
    ss: &[&[Complex64]],
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    layout.validate()?;
    if vfs.len() != layout.vfs_len {
        return Err(Error::Layout(format!(
            "VFS pair has {} samples, layout expects {}",
            vfs.len(),
            layout.vfs_len
        )));
    }
    if ss.len() != layout.ss_positions.len() {
        return Err(Error::Layout(format!(
            "{} SS symbols for {} positions",
            ss.len(),
            layout.ss_positions.len()
        )));
    }
    let mut out = vec![Complex64::default(); layout.total_len];
    fill(&mut out[..layout.lead_in], layout.lead_in_fill, rng);
    let vfs_end = layout.lead_in + layout.vfs_len;
    out[layout.lead_in..vfs_end].copy_from_slice(vfs);
    let mut cursor = vfs_end;
    for (&p, s) in layout.ss_positions.iter().zip(ss) {
        if s.len() != layout.ss_len {
            return Err(Error::Layout(format!(
                "SS has {} samples, layout expects {}",
                s.len(),
                layout.ss_len
            )));
        }
        fill(&mut out[cursor..p], layout.filler_fill, rng);
        out[p..p + s.len()].copy_from_slice(s);
        cursor = p + s.len();
    }
    fill(&mut out[cursor..], layout.filler_fill, rng);
    Ok(out)
}
