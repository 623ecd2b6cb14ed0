//! Raw IQ files: interleaved little-endian `f32` pairs (I then Q) with no
//! header, plus a `<path>.meta` sidecar of `key=value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::{BootstrapConfig, ComplexBuffer, Variant};
use crate::error::{Error, Result};
use crate::sequences::{bits_from_str, bits_to_string};

/// Sidecar metadata. Unknown keys are kept in `extra`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IqMeta {
    pub sample_rate: f64,
    pub variant: Option<Variant>,
    pub pn_seed: Option<u16>,
    pub root: Option<usize>,
    pub zc_shift: Option<usize>,
    pub bits: Option<Vec<bool>>,
    pub extra: BTreeMap<String, String>,
}

impl IqMeta {
    pub fn for_config(config: &BootstrapConfig, bits: Option<&[bool]>) -> Self {
        Self {
            sample_rate: config.sample_rate(),
            variant: Some(config.variant),
            pn_seed: Some(config.pn_seed),
            root: Some(config.root),
            zc_shift: Some(config.zc_shift),
            bits: bits.map(|b| b.to_vec()),
            extra: BTreeMap::new(),
        }
    }

    fn render(&self) -> String {
        let mut out = format!("sample_rate={}\n", self.sample_rate);
        if let Some(v) = self.variant {
            out += &format!("variant={v}\n");
        }
        if let Some(s) = self.pn_seed {
            out += &format!("pn_seed={s:#05x}\n");
        }
        if let Some(r) = self.root {
            out += &format!("root={r}\n");
        }
        if let Some(k) = self.zc_shift {
            out += &format!("zc_shift={k}\n");
        }
        if let Some(b) = &self.bits {
            out += &format!("bits={}\n", bits_to_string(b));
        }
        for (k, v) in &self.extra {
            out += &format!("{k}={v}\n");
        }
        out
    }

    fn parse(text: &str) -> Result<Self> {
        let mut meta = IqMeta::default();
        let mut have_rate = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("sidecar line {}: missing '='", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let bad =
                |what: &str| Error::Format(format!("sidecar line {}: bad {what} '{v}'", i + 1));
            match k {
                "sample_rate" => {
                    meta.sample_rate = v.parse().map_err(|_| bad("sample rate"))?;
                    have_rate = true;
                }
                "variant" => meta.variant = Some(v.parse().map_err(|_| bad("variant"))?),
                "pn_seed" => {
                    meta.pn_seed =
                        Some(crate::sequences::parse_seed(v).map_err(|_| bad("PN seed"))?)
                }
                "root" => meta.root = Some(v.parse().map_err(|_| bad("root"))?),
                "zc_shift" => meta.zc_shift = Some(v.parse().map_err(|_| bad("ZC shift"))?),
                "bits" => meta.bits = Some(bits_from_str(v).map_err(|_| bad("bit string"))?),
                _ => {
                    meta.extra.insert(k.to_string(), v.to_string());
                }
            }
        }
        if !have_rate || meta.sample_rate <= 0.0 {
            return Err(Error::Format("sidecar lacks a positive sample_rate".into()));
        }
        Ok(meta)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn encode_samples(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for v in samples {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of f32 values",
            bytes.len()
        )));
    }
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Format("odd number of f32 values".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect())
}

/// Writes the samples and their sidecar; the buffer's sample rate wins
/// over the one in `meta`.
pub fn write_iq(path: &Path, buf: &ComplexBuffer, meta: &IqMeta) -> Result<()> {
    let mut meta = meta.clone();
    meta.sample_rate = buf.sample_rate;
    fs::write(path, encode_samples(&buf.samples))?;
    fs::write(sidecar_path(path), meta.render())?;
    Ok(())
}

pub fn read_iq(path: &Path) -> Result<(ComplexBuffer, IqMeta)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side)
        .map_err(|e| Error::Format(format!("cannot read sidecar {}: {e}", side.display())))?;
    let meta = IqMeta::parse(&text)?;
    let samples = decode_samples(&fs::read(path)?)?;
    Ok((ComplexBuffer::new(samples, meta.sample_rate), meta))
}
