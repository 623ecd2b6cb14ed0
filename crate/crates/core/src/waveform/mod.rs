//! Bootstrap waveform synthesis: VFS/SS symbols, virtual-frame assembly,
//! the scaled multi-bandwidth multiplex, and IQ file export.

mod frame;
pub mod iq;
mod multiplex;
mod symbol;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::sequences::{is_prime, ZcParams};

pub use frame::{assemble_frame, BootstrapSynth, Fill, FrameLayout, VfsTemplates};
pub use multiplex::{assemble_scaled_multiplex, MultiplexPart, MultiplexSynth};
pub use symbol::{
    apply_phase_ramp, apply_signaling_shift, map_subcarriers, ofdm_modulate,
    ofdm_modulate_normalized, wrap_structure, FrequencySymbol, Structure, SymbolKind, TimeSymbol,
};

/// Subcarrier spacing in Hz.
pub const SUBCARRIER_SPACING: f64 = 3_000.0;

/// IFFT size of the normal baseband bootstrap.
pub const NORMAL_FFT: usize = 2048;

/// RF carrier bandwidths (MHz) that the VFS ZC shift can signal, ascending.
pub const RF_BANDWIDTHS_MHZ: [u32; 16] =
    [5, 6, 7, 8, 10, 12, 14, 15, 16, 18, 20, 21, 24, 30, 40, 50];

/// Bandwidth the desk-scale defaults assume for the payload carrier.
pub const DEFAULT_RF_BANDWIDTH_MHZ: u32 = 10;

/// The five bootstrap bandwidth options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "normal")]
    Normal,
    #[serde(rename = "scaled-839")]
    Scaled839,
    #[serde(rename = "scaled-467")]
    Scaled467,
    #[serde(rename = "scaled-241")]
    Scaled241,
    #[serde(rename = "scaled-127")]
    Scaled127,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Normal,
        Variant::Scaled839,
        Variant::Scaled467,
        Variant::Scaled241,
        Variant::Scaled127,
    ];

    pub fn zc_length(self) -> usize {
        match self {
            Variant::Normal => 1499,
            Variant::Scaled839 => 839,
            Variant::Scaled467 => 467,
            Variant::Scaled241 => 241,
            Variant::Scaled127 => 127,
        }
    }

    /// Centre of the part relative to the normal bootstrap, in subcarriers.
    pub fn center_offset(self) -> i64 {
        match self {
            Variant::Normal => 0,
            Variant::Scaled839 => 1176,
            Variant::Scaled467 => -984,
            Variant::Scaled241 => -1344,
            Variant::Scaled127 => -1536,
        }
    }

    pub fn signaling_bits(self) -> usize {
        match self {
            Variant::Normal => 8,
            Variant::Scaled839 => 7,
            Variant::Scaled467 => 6,
            Variant::Scaled241 => 5,
            Variant::Scaled127 => 4,
        }
    }

    /// Fixed ZC root of the scaled variants; `None` for the configurable normal one.
    fn scaled_root(self) -> Option<usize> {
        match self {
            Variant::Normal => None,
            Variant::Scaled839 | Variant::Scaled467 => Some(3),
            Variant::Scaled241 => Some(163),
            Variant::Scaled127 => Some(109),
        }
    }

    pub fn is_scaled(self) -> bool {
        self != Variant::Normal
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Normal => "normal",
            Variant::Scaled839 => "scaled-839",
            Variant::Scaled467 => "scaled-467",
            Variant::Scaled241 => "scaled-241",
            Variant::Scaled127 => "scaled-127",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| Error::Param(format!("unknown bootstrap variant '{s}'")))
    }
}

/// PN seed shared by every scaled variant.
pub const SCALED_PN_SEED: u16 = 0x100;

/// Default (non-normative) root and seed of the normal bootstrap.
pub const NORMAL_DEFAULT_ROOT: usize = 137;
pub const NORMAL_DEFAULT_SEED: u16 = 0x136;

/// Default ZC shift for the `i`-th entry of [`RF_BANDWIDTHS_MHZ`].
///
/// The real table is not public; this spreads the 16 shifts evenly over the
/// ZC length.
pub fn default_zc_shift(bandwidth_index: usize, zc_length: usize) -> usize {
    ((bandwidth_index as f64 * zc_length as f64 / 16.0).round() as usize) % zc_length
}

pub fn bandwidth_index(mhz: u32) -> Result<usize> {
    RF_BANDWIDTHS_MHZ
        .iter()
        .position(|&b| b == mhz)
        .ok_or_else(|| Error::Param(format!("{mhz} MHz is not a signalable RF bandwidth")))
}

/// All per-variant parameters of a bootstrap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub variant: Variant,
    pub zc_length: usize,
    pub root: usize,
    /// ZC cyclic shift signaling the RF bandwidth (normal variant only).
    pub zc_shift: usize,
    pub pn_seed: u16,
    pub n_ifft: usize,
    pub signaling_bits: usize,
    /// Part centre in subcarriers (multiplex placement).
    pub center_offset: i64,
}

impl BootstrapConfig {
    /// Normal 6.144 MHz bootstrap with the default root, seed and RF bandwidth.
    pub fn normal() -> Self {
        let zc_length = Variant::Normal.zc_length();
        let idx = bandwidth_index(DEFAULT_RF_BANDWIDTH_MHZ).expect("default bandwidth is in table");
        Self {
            variant: Variant::Normal,
            zc_length,
            root: NORMAL_DEFAULT_ROOT,
            zc_shift: default_zc_shift(idx, zc_length),
            pn_seed: NORMAL_DEFAULT_SEED,
            n_ifft: NORMAL_FFT,
            signaling_bits: Variant::Normal.signaling_bits(),
            center_offset: 0,
        }
    }

    /// Baseband (6.144 MHz) configuration of a variant, as seen after the
    /// scaled front end.
    pub fn for_variant(variant: Variant) -> Self {
        match variant.scaled_root() {
            None => Self::normal(),
            Some(root) => Self {
                variant,
                zc_length: variant.zc_length(),
                root,
                zc_shift: 0,
                pn_seed: SCALED_PN_SEED,
                n_ifft: NORMAL_FFT,
                signaling_bits: variant.signaling_bits(),
                center_offset: variant.center_offset(),
            },
        }
    }

    pub fn with_n_ifft(mut self, n_ifft: usize) -> Result<Self> {
        self.n_ifft = n_ifft;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rf_bandwidth(mut self, mhz: u32) -> Result<Self> {
        if self.variant.is_scaled() {
            return param("scaled bootstraps do not signal the RF bandwidth");
        }
        self.zc_shift = default_zc_shift(bandwidth_index(mhz)?, self.zc_length);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ZcParams::new(self.zc_length, self.root, self.zc_shift)?;
        if self.pn_seed == 0 || self.pn_seed >> 11 != 0 {
            return param(format!(
                "PN seed {:#x} is not a non-zero 11-bit value",
                self.pn_seed
            ));
        }
        if !self.n_ifft.is_power_of_two() || self.n_ifft < 128 {
            return param(format!(
                "IFFT size {} must be a power of two >= 128",
                self.n_ifft
            ));
        }
        if self.zc_length > self.n_ifft {
            return param(format!(
                "{} active subcarriers do not fit a {}-point grid",
                self.zc_length - 1,
                self.n_ifft
            ));
        }
        if self.signaling_bits == 0 || self.signaling_bits > 11 {
            return param(format!(
                "signaling bit count {} outside [1, 11]",
                self.signaling_bits
            ));
        }
        if self.variant.is_scaled() {
            let v = self.variant;
            if self.zc_length != v.zc_length()
                || Some(self.root) != v.scaled_root()
                || self.pn_seed != SCALED_PN_SEED
                || self.zc_shift != 0
                || self.signaling_bits != v.signaling_bits()
            {
                return param(format!("{v} parameters differ from the fixed scaled set"));
            }
        } else if !is_prime(self.zc_length) {
            return param("ZC length must be prime");
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.n_ifft as f64 * SUBCARRIER_SPACING
    }

    /// `N_H = (N_ZC - 1) / 2`.
    pub fn half_width(&self) -> usize {
        (self.zc_length - 1) / 2
    }

    pub fn active_subcarriers(&self) -> usize {
        self.zc_length - 1
    }

    pub fn n_a(&self) -> usize {
        self.n_ifft
    }

    /// `(N_B, N_C)` of a symbol kind.
    pub fn bc_lengths(&self, kind: SymbolKind) -> (usize, usize) {
        let n_a = self.n_a();
        match kind {
            SymbolKind::Vfs0 | SymbolKind::Vfs1 => (n_a / 4, n_a / 4),
            SymbolKind::Ss => (31 * n_a / 128, 33 * n_a / 128),
        }
    }

    /// `N_t = N_A + N_B + N_C` (identical for VFS and SS).
    pub fn n_t(&self) -> usize {
        3 * self.n_a() / 2
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self::normal()
    }
}

/// Complex baseband samples with their sample rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexBuffer {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl ComplexBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_numerology() {
        let c = BootstrapConfig::normal();
        c.validate().unwrap();
        assert_eq!(c.sample_rate(), 6.144e6);
        assert_eq!(c.n_t(), 3072);
        assert!((c.n_t() as f64 / c.sample_rate() - 500e-6).abs() < 1e-12);
        assert_eq!(c.bc_lengths(SymbolKind::Vfs0), (512, 512));
        assert_eq!(c.bc_lengths(SymbolKind::Ss), (496, 528));
        assert_eq!(c.half_width(), 749);
        // 10 MHz is the fifth bandwidth: round(4 * 1499 / 16)
        assert_eq!(c.zc_shift, 375);
    }

    #[test]
    fn scaled_variants_fixed_parameters() {
        let expect = [
            (839, 3, 1176, 7),
            (467, 3, -984, 6),
            (241, 163, -1344, 5),
            (127, 109, -1536, 4),
        ];
        for (v, e) in Variant::ALL[1..].iter().zip(expect) {
            let c = BootstrapConfig::for_variant(*v);
            c.validate().unwrap();
            assert_eq!((c.zc_length, c.root, c.center_offset, c.signaling_bits), e);
            assert_eq!(c.pn_seed, 0x100);
            let wide = c.clone().with_n_ifft(4096).unwrap();
            assert_eq!(wide.sample_rate(), 12.288e6);
            assert_eq!(wide.bc_lengths(SymbolKind::Vfs1), (1024, 1024));
        }
    }

    #[test]
    fn scaled_variant_rejects_edits() {
        let mut c = BootstrapConfig::for_variant(Variant::Scaled241);
        c.root = 5;
        assert!(c.validate().is_err());
        assert!(BootstrapConfig::for_variant(Variant::Scaled127)
            .with_rf_bandwidth(10)
            .is_err());
        assert!(BootstrapConfig::normal().with_n_ifft(1024).is_err());
    }

    #[test]
    fn zc_shift_table() {
        let shifts: Vec<usize> = (0..16).map(|i| default_zc_shift(i, 1499)).collect();
        assert_eq!(shifts[0], 0);
        assert!(shifts.windows(2).all(|w| w[0] < w[1]));
        assert!(bandwidth_index(9).is_err());
    }

    #[test]
    fn variant_names_parse() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("scaled-100".parse::<Variant>().is_err());
    }
}
