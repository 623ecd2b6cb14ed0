use std::f64::consts::PI;

use num_complex::Complex64;

use super::BootstrapConfig;
use crate::dsp::{bin, FftPair};
use crate::error::{param, Result};

/// Which bootstrap symbol is being built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Vfs0,
    Vfs1,
    Ss,
}

impl SymbolKind {
    /// Time-domain layout: VFS0 and SS use CAB, VFS1 uses BCA.
    pub fn structure(self) -> Structure {
        match self {
            SymbolKind::Vfs0 | SymbolKind::Ss => Structure::Cab,
            SymbolKind::Vfs1 => Structure::Bca,
        }
    }

    /// PN/mapping symbol index `m`.
    pub fn index(self) -> usize {
        match self {
            SymbolKind::Vfs0 | SymbolKind::Ss => 0,
            SymbolKind::Vfs1 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// `[C | A | B]`
    Cab,
    /// `[B | C | A]`
    Bca,
}

/// Subcarrier values of one bootstrap symbol, stored by FFT bin
/// (`k` at bin `k mod n_ifft`).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySymbol {
    pub kind: SymbolKind,
    pub n_ifft: usize,
    pub half_width: usize,
    pub values: Vec<Complex64>,
}

impl FrequencySymbol {
    pub fn at(&self, k: i64) -> Complex64 {
        self.values[bin(k, self.n_ifft)]
    }

    pub fn active_count(&self) -> usize {
        2 * self.half_width
    }
}

/// Maps the product of the (shifted) ZC sequence and the PN chips onto
/// subcarriers `-N_H ..= N_H`, mirrored about DC, with DC left empty.
///
/// Symbol `m` consumes chips `m*N_H .. (m+1)*N_H`, so consecutive VFS symbols
/// fed from one chip run see a continuous PN sequence.
pub fn map_subcarriers(
    zc_shifted: &[Complex64],
    pn_chips: &[f64],
    kind: SymbolKind,
    n_ifft: usize,
) -> Result<FrequencySymbol> {
    let n_zc = zc_shifted.len();
    if n_zc < 3 || n_zc.is_multiple_of(2) {
        return param(format!("ZC length {n_zc} must be odd"));
    }
    let n_h = (n_zc - 1) / 2;
    if 2 * n_h >= n_ifft {
        return param(format!("{} subcarriers do not fit {n_ifft} bins", 2 * n_h));
    }
    let m = kind.index();
    let needed = (m + 1) * n_h;
    if pn_chips.len() < needed {
        return param(format!(
            "symbol {m} needs {needed} PN chips, got {}",
            pn_chips.len()
        ));
    }
    let mut values = vec![Complex64::default(); n_ifft];
    let n_h_i = n_h as i64;
    let base = ((m + 1) * n_h) as i64;
    for k in -n_h_i..=-1 {
        let z = zc_shifted[(k + n_h_i) as usize];
        let c = pn_chips[(base + k) as usize];
        values[bin(k, n_ifft)] = z * c;
    }
    for k in 1..=n_h_i {
        let z = zc_shifted[(n_h_i - k) as usize];
        let c = pn_chips[(base - k) as usize];
        values[bin(k, n_ifft)] = z * c;
    }
    Ok(FrequencySymbol {
        kind,
        n_ifft,
        half_width: n_h,
        values,
    })
}

/// Inverse transform with `1/sqrt(active count)` scaling, giving unit mean
/// power over the `N_IFFT` output samples.
pub fn ofdm_modulate(s: &FrequencySymbol) -> Vec<Complex64> {
    let mut fft = FftPair::new(s.n_ifft);
    ofdm_modulate_normalized(&s.values, s.active_count(), &mut fft)
}

/// Inverse transform of bin-indexed values scaled by `1/sqrt(norm_count)`.
pub fn ofdm_modulate_normalized(
    values: &[Complex64],
    norm_count: usize,
    fft: &mut FftPair,
) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    if norm_count == 0 {
        return vec![Complex64::default(); values.len()];
    }
    fft.inverse(&mut buf);
    let scale = 1.0 / (norm_count as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// `A(n) = Ã((n + M) mod N)`. `M == N` wraps to the identity.
pub fn apply_signaling_shift(a_tilde: &[Complex64], m: usize) -> Result<Vec<Complex64>> {
    let n = a_tilde.len();
    if m > n {
        return param(format!("cyclic shift {m} outside [0, {n})"));
    }
    Ok(crate::dsp::rotate_left(a_tilde, m))
}

/// Frequency-domain form of the signaling shift: multiplies bin `b` of an
/// `N`-point grid by `exp(+j*2*pi*M*b/N)`.
///
/// With the positive-exponent inverse transform this is exactly a left
/// rotation of the time-domain output by `M`. Bins carry absolute
/// subcarrier indices, so a part placed off-centre picks up its centre
/// offset in the ramp automatically.
pub fn apply_phase_ramp(values: &mut [Complex64], m: usize) {
    let n = values.len();
    let m = m % n.max(1);
    for (b, v) in values.iter_mut().enumerate() {
        let r = (m * b) % n;
        *v *= Complex64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64);
    }
}

/// A symbol's part A and its assembled `N_t` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSymbol {
    pub kind: SymbolKind,
    pub structure: Structure,
    pub shift: usize,
    pub n_b: usize,
    pub n_c: usize,
    pub part_a: Vec<Complex64>,
    pub samples: Vec<Complex64>,
}

impl TimeSymbol {
    /// Offset of part A inside the assembled symbol.
    pub fn part_a_offset(&self) -> usize {
        match self.structure {
            Structure::Cab => self.n_c,
            Structure::Bca => self.n_b + self.n_c,
        }
    }
}

/// Surrounds part A with B and C, both copied from the tail of A.
pub fn wrap_structure(
    a: &[Complex64],
    kind: SymbolKind,
    config: &BootstrapConfig,
    shift: usize,
) -> Result<TimeSymbol> {
    let n_a = config.n_a();
    if a.len() != n_a {
        return param(format!("part A has {} samples, expected {n_a}", a.len()));
    }
    let (n_b, n_c) = config.bc_lengths(kind);
    let b = &a[n_a - n_b..];
    let c = &a[n_a - n_c..];
    let structure = kind.structure();
    let mut samples = Vec::with_capacity(n_a + n_b + n_c);
    match structure {
        Structure::Cab => {
            samples.extend_from_slice(c);
            samples.extend_from_slice(a);
            samples.extend_from_slice(b);
        }
        Structure::Bca => {
            samples.extend_from_slice(b);
            samples.extend_from_slice(c);
            samples.extend_from_slice(a);
        }
    }
    Ok(TimeSymbol {
        kind,
        structure,
        shift,
        n_b,
        n_c,
        part_a: a.to_vec(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::mean_power;
    use crate::sequences::{gen_pn, gen_zc, PnParams, ZcParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normal_symbols() -> (BootstrapConfig, FrequencySymbol, FrequencySymbol) {
        let cfg = BootstrapConfig::normal();
        let zc = gen_zc(ZcParams::new(cfg.zc_length, cfg.root, cfg.zc_shift).unwrap()).unwrap();
        let pn = gen_pn(PnParams::new(cfg.pn_seed, 3 * cfg.half_width()).unwrap()).unwrap();
        let s0 = map_subcarriers(&zc, &pn.chips, SymbolKind::Vfs0, 2048).unwrap();
        let s1 = map_subcarriers(&zc, &pn.chips, SymbolKind::Vfs1, 2048).unwrap();
        (cfg, s0, s1)
    }

    #[test]
    fn mapping_dc_null_symmetry_and_count() {
        let (_, s0, s1) = normal_symbols();
        for s in [&s0, &s1] {
            assert_eq!(s.at(0), Complex64::default());
            for k in 1..=749 {
                assert_eq!(s.at(-k), s.at(k));
                assert!((s.at(k).norm() - 1.0).abs() < 1e-12);
            }
            for k in 750..=1024 {
                assert_eq!(s.at(k), Complex64::default());
                assert_eq!(s.at(-k), Complex64::default());
            }
            let active = s.values.iter().filter(|v| v.norm() > 0.5).count();
            assert_eq!(active, 1498);
        }
    }

    #[test]
    fn mapping_matches_elementwise_oracle() {
        // independent evaluation of both branches from raw sequences
        let (cfg, s0, s1) = normal_symbols();
        let zc = gen_zc(ZcParams::new(1499, cfg.root, cfg.zc_shift).unwrap()).unwrap();
        let pn = gen_pn(PnParams::new(cfg.pn_seed, 2000).unwrap()).unwrap();
        for (m, s) in [(0usize, &s0), (1, &s1)] {
            for k in 1..=749usize {
                let neg = zc[749 - k] * (1.0 - 2.0 * pn.bits[(m + 1) * 749 - k] as f64);
                assert!((s.at(-(k as i64)) - neg).norm() < 1e-15);
                assert!((s.at(k as i64) - neg).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn mapping_rejects_short_pn() {
        let zc = gen_zc(ZcParams::new(127, 109, 0).unwrap()).unwrap();
        let chips = vec![1.0; 100];
        assert!(map_subcarriers(&zc, &chips, SymbolKind::Vfs1, 2048).is_err());
        assert!(map_subcarriers(&zc, &chips, SymbolKind::Vfs0, 2048).is_ok());
    }

    #[test]
    fn modulated_symbol_has_unit_power() {
        let (_, s0, _) = normal_symbols();
        let a = ofdm_modulate(&s0);
        assert!((mean_power(&a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_symbol_modulates_to_zero() {
        let (_, mut s0, _) = normal_symbols();
        s0.values.iter_mut().for_each(|v| *v = Complex64::default());
        assert!(ofdm_modulate(&s0).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn forward_transform_recovers_symbol() {
        let (_, s0, _) = normal_symbols();
        let mut a = ofdm_modulate(&s0);
        FftPair::new(2048).forward(&mut a);
        let g = 2048.0 / (1498f64).sqrt();
        for (x, s) in a.iter().zip(&s0.values) {
            assert!((x / g - s).norm() < 1e-9);
        }
    }

    #[test]
    fn out_of_band_leakage_is_negligible() {
        let (_, _, s1) = normal_symbols();
        let a = apply_signaling_shift(&ofdm_modulate(&s1), 777).unwrap();
        let mut spec = a.clone();
        FftPair::new(2048).forward(&mut spec);
        let inband: f64 = (1..=749)
            .map(|k| spec[bin(k, 2048)].norm_sqr() + spec[bin(-k, 2048)].norm_sqr())
            .sum();
        let outband: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>() - inband;
        assert!(10.0 * (outband.max(1e-300) / inband).log10() < -120.0);
    }

    #[test]
    fn shift_identity_and_wrap() {
        let (_, s0, _) = normal_symbols();
        let a = ofdm_modulate(&s0);
        assert_eq!(apply_signaling_shift(&a, 0).unwrap(), a);
        assert_eq!(apply_signaling_shift(&a, 2048).unwrap(), a);
        assert!(apply_signaling_shift(&a, 2049).is_err());
        let s = apply_signaling_shift(&a, 5).unwrap();
        assert_eq!(s[0], a[5]);
        assert_eq!(s[2047], a[4]);
    }

    #[test]
    fn time_shift_equals_phase_ramp() {
        let (_, _, s1) = normal_symbols();
        let base = ofdm_modulate(&s1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut fft = FftPair::new(2048);
        for _ in 0..100 {
            let m = rng.random_range(0..2048);
            let shifted = apply_signaling_shift(&base, m).unwrap();
            let mut ramped = s1.values.clone();
            apply_phase_ramp(&mut ramped, m);
            let via_freq = ofdm_modulate_normalized(&ramped, 1498, &mut fft);
            let err = shifted
                .iter()
                .zip(&via_freq)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "M={m} err={err}");
        }
    }

    #[test]
    fn structures_and_lengths() {
        let (cfg, s0, _) = normal_symbols();
        let a = ofdm_modulate(&s0);
        let vfs = wrap_structure(&a, SymbolKind::Vfs0, &cfg, 0).unwrap();
        assert_eq!(vfs.samples.len(), 3072);
        assert_eq!(vfs.structure, Structure::Cab);
        assert_eq!(&vfs.samples[..512], &vfs.samples[2560..]);
        assert_eq!(&vfs.samples[512..2560], &a[..]);

        let bca = wrap_structure(&a, SymbolKind::Vfs1, &cfg, 0).unwrap();
        assert_eq!(bca.structure, Structure::Bca);
        assert_eq!(&bca.samples[..512], &a[1536..]);
        assert_eq!(&bca.samples[512..1024], &a[1536..]);
        assert_eq!(bca.part_a_offset(), 1024);

        let ss = wrap_structure(&a, SymbolKind::Ss, &cfg, 0).unwrap();
        assert_eq!((ss.n_b, ss.n_c), (496, 528));
        assert_eq!(ss.samples.len(), 3072);
        assert_eq!(&ss.samples[..528], &a[2048 - 528..]);
        assert_eq!(&ss.samples[528 + 2048..], &a[2048 - 496..]);
        assert_ne!(&ss.samples[..496], &ss.samples[3072 - 496..]);

        assert!(wrap_structure(&a[..100], SymbolKind::Vfs0, &cfg, 0).is_err());
    }
}
