use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default carrier frequency in Hz.
pub const DEFAULT_CARRIER_HZ: f64 = 695e6;

/// Statistics of one tap's complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingKind {
    /// Sum-of-sinusoids Jakes process.
    Rayleigh,
    /// Constant amplitude with a Doppler phase rotation.
    Los,
    /// Specular plus Rayleigh component with the given K-factor in dB.
    Rician { k_db: f64 },
}

impl fmt::Display for FadingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingKind::Rayleigh => f.write_str("rayleigh"),
            FadingKind::Los => f.write_str("los"),
            FadingKind::Rician { k_db } => write!(f, "rician:{k_db}"),
        }
    }
}

impl FromStr for FadingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "rayleigh" => Ok(FadingKind::Rayleigh),
            "los" | "fixed-los" => Ok(FadingKind::Los),
            _ => match s.strip_prefix("rician:") {
                Some(k) => k
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|k| k.is_finite())
                    .map(|k_db| FadingKind::Rician { k_db })
                    .ok_or_else(|| format!("bad K-factor in '{s}'")),
                None => Err(format!("unknown fading kind '{s}'")),
            },
        }
    }
}

/// How the delay column of a profile is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayUnit {
    /// Multiples of the profile's RMS delay spread; needs `rms_ds` to be usable.
    Normalized,
    Seconds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tap {
    /// Delay in the profile's [`DelayUnit`].
    pub delay: f64,
    pub power_db: f64,
    /// Linear power after normalizing the profile to unit total power.
    pub power: f64,
    pub kind: FadingKind,
}

/// Tapped-delay-line power-delay profile with mobility parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub name: String,
    pub taps: Vec<Tap>,
    pub delay_unit: DelayUnit,
    /// Requested RMS delay spread in seconds. Absolute profiles are
    /// rescaled to it when set.
    pub rms_ds: Option<f64>,
    pub speed_kmh: f64,
    pub carrier_hz: f64,
}

const BUILTIN: [(&str, &str); 5] = [
    ("tdl-b", include_str!("../../profiles/tdl_b.txt")),
    ("tdl-c", include_str!("../../profiles/tdl_c.txt")),
    ("tdl-d", include_str!("../../profiles/tdl_d.txt")),
    ("tdl-e", include_str!("../../profiles/tdl_e.txt")),
    ("tu6", include_str!("../../profiles/tu6.txt")),
];

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Profile {
        line,
        msg: msg.into(),
    })
}

impl ChannelProfile {
    /// Builds a validated profile from raw `(delay, power_db, kind)` rows.
    pub fn from_taps(
        name: &str,
        rows: &[(f64, f64, FadingKind)],
        delay_unit: DelayUnit,
    ) -> Result<Self> {
        let mut p = Self {
            name: name.to_string(),
            taps: rows
                .iter()
                .map(|&(delay, power_db, kind)| Tap {
                    delay,
                    power_db,
                    power: 0.0,
                    kind,
                })
                .collect(),
            delay_unit,
            rms_ds: None,
            speed_kmh: 0.0,
            carrier_hz: DEFAULT_CARRIER_HZ,
        };
        p.normalize()?;
        Ok(p)
    }

    fn normalize(&mut self) -> Result<()> {
        if self.taps.is_empty() {
            return perr(0, "profile has no taps");
        }
        for (i, w) in self.taps.windows(2).enumerate() {
            if w[1].delay <= w[0].delay {
                return perr(
                    i + 2,
                    format!(
                        "delay {} does not follow {} in ascending order",
                        w[1].delay, w[0].delay
                    ),
                );
            }
        }
        for (i, t) in self.taps.iter().enumerate() {
            if !(t.delay.is_finite() && t.delay >= 0.0 && t.power_db.is_finite()) {
                return perr(i + 1, "delay and power must be finite, delay non-negative");
            }
        }
        let total: f64 = self
            .taps
            .iter()
            .map(|t| 10f64.powf(t.power_db / 10.0))
            .sum();
        for t in &mut self.taps {
            t.power = 10f64.powf(t.power_db / 10.0) / total;
        }
        Ok(())
    }

    /// Parses the profile text format: `key = value` header lines and
    /// `delay, power_db, kind` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = String::from("custom");
        let mut unit = DelayUnit::Seconds;
        let mut scale = 1.0;
        let mut rms_ds = None;
        let mut speed = 0.0;
        let mut carrier = DEFAULT_CARRIER_HZ;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                let num = || -> Result<f64> {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite() && *x >= 0.0)
                        .map_or_else(|| perr(ln, format!("bad value for {k}: '{v}'")), Ok)
                };
                match k {
                    "name" => name = v.to_string(),
                    "delay_unit" => {
                        (unit, scale) = match v {
                            "normalized" => (DelayUnit::Normalized, 1.0),
                            "s" => (DelayUnit::Seconds, 1.0),
                            "us" => (DelayUnit::Seconds, 1e-6),
                            "ns" => (DelayUnit::Seconds, 1e-9),
                            _ => return perr(ln, format!("unknown delay unit '{v}'")),
                        }
                    }
                    "rms_ds" => rms_ds = Some(num()?),
                    "speed_kmh" => speed = num()?,
                    "carrier_hz" => carrier = num()?,
                    _ => return perr(ln, format!("unknown header key '{k}'")),
                }
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 3 {
                return perr(ln, format!("expected 3 columns, found {}", cols.len()));
            }
            let delay: f64 = cols[0]
                .parse()
                .or_else(|_| perr(ln, format!("bad delay '{}'", cols[0])))?;
            let power: f64 = cols[1]
                .parse()
                .or_else(|_| perr(ln, format!("bad power '{}'", cols[1])))?;
            let kind: FadingKind = cols[2].parse().or_else(|e: String| perr(ln, e))?;
            rows.push((ln, delay * scale, power, kind));
        }
        if rows.is_empty() {
            return perr(0, "profile has no taps");
        }
        for w in rows.windows(2) {
            if w[1].1 <= w[0].1 {
                let what = if w[1].1 == w[0].1 {
                    "duplicate"
                } else {
                    "non-ascending"
                };
                return perr(w[1].0, format!("{what} delay {}", w[1].1 / scale));
            }
        }
        let taps: Vec<(f64, f64, FadingKind)> = rows.iter().map(|r| (r.1, r.2, r.3)).collect();
        let mut p = Self::from_taps(&name, &taps, unit)?;
        p.rms_ds = rms_ds;
        p.speed_kmh = speed;
        p.carrier_hz = carrier;
        Ok(p)
    }

    /// One of the shipped profiles: `tdl-b`, `tdl-c`, `tdl-d`, `tdl-e`, `tu6`.
    pub fn builtin(name: &str) -> Result<Self> {
        let key: String = name
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect();
        BUILTIN
            .iter()
            .find(|(n, _)| n.replace('-', "") == key)
            .map(|(_, text)| Self::parse(text))
            .unwrap_or_else(|| Err(Error::Param(format!("no built-in profile '{name}'"))))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    /// Flat single-path profile.
    pub fn flat(kind: FadingKind) -> Self {
        Self::from_taps("flat", &[(0.0, 0.0, kind)], DelayUnit::Seconds)
            .expect("single tap profile is valid")
    }

    pub fn with_rms_ds(mut self, seconds: f64) -> Self {
        self.rms_ds = Some(seconds);
        self
    }

    pub fn with_speed(mut self, kmh: f64) -> Self {
        self.speed_kmh = kmh;
        self
    }

    /// Maximum Doppler shift in Hz.
    pub fn max_doppler(&self) -> f64 {
        self.speed_kmh / 3.6 * self.carrier_hz / SPEED_OF_LIGHT
    }

    /// RMS spread of the delay column in its own unit.
    pub fn table_rms_spread(&self) -> f64 {
        rms_spread(self.taps.iter().map(|t| (t.delay, t.power)))
    }

    /// Tap delays in seconds after delay-spread scaling.
    pub fn delays_seconds(&self) -> Result<Vec<f64>> {
        let unit_ds = self.table_rms_spread();
        let factor = match (self.delay_unit, self.rms_ds) {
            (DelayUnit::Normalized, None) => {
                return Err(Error::Param(format!(
                    "normalized profile '{}' needs an RMS delay spread",
                    self.name
                )))
            }
            (DelayUnit::Seconds, None) => 1.0,
            (_, Some(ds)) if unit_ds > 0.0 => ds / unit_ds,
            (_, Some(_)) => 1.0,
        };
        Ok(self.taps.iter().map(|t| t.delay * factor).collect())
    }

    /// RMS delay spread of the scaled profile, in seconds.
    pub fn realized_rms_ds(&self) -> Result<f64> {
        let d = self.delays_seconds()?;
        Ok(rms_spread(
            d.into_iter().zip(self.taps.iter().map(|t| t.power)),
        ))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn rms_spread(taps: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let p: f64 = taps.clone().map(|t| t.1).sum();
    let mean = taps.clone().map(|(d, w)| d * w).sum::<f64>() / p;
    let sq = taps.map(|(d, w)| d * d * w).sum::<f64>() / p;
    (sq - mean * mean).max(0.0).sqrt()
}

/// Reads a profile file.
pub fn load_profile(path: &Path) -> Result<ChannelProfile> {
    ChannelProfile::load(path)
}
