//! Zadoff–Chu sequences, the 11-stage PN generator, and the Gray-coded
//! cyclic-shift alphabet carried by the second VFS symbol.
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{param, Result};

/// Register order of the PN generator, `g(x) = x^11 + x^9 + 1`.
pub const PN_ORDER: usize = 11;

/// Number of bits in the full shift vector `m_10 .. m_0`.
pub const SHIFT_BITS: usize = 11;

/// Grid on which the shift vector is defined (`2^11`).
pub const SHIFT_GRID: usize = 1 << SHIFT_BITS;

/// Parameters of a (possibly cyclically shifted) Zadoff–Chu sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZcParams {
    pub length: usize,
    pub root: usize,
    pub shift: usize,
}

impl ZcParams {
    pub fn new(length: usize, root: usize, shift: usize) -> Result<Self> {
        let p = Self {
            length,
            root,
            shift,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.length) || self.length < 3 {
            return param(format!("ZC length {} is not an odd prime", self.length));
        }
        if self.root == 0 || self.root >= self.length {
            return param(format!(
                "ZC root {} outside [1, {}]",
                self.root,
                self.length - 1
            ));
        }
        if self.shift >= self.length {
            return param(format!(
                "ZC cyclic shift {} outside [0, {})",
                self.shift, self.length
            ));
        }
        Ok(())
    }
}

pub(crate) fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Generates `z(k) = exp(-j*pi*q*k'(k'+1)/N)` with `k' = (k + K) mod N`.
///
/// The exponent is reduced modulo `N` in integer arithmetic before the
/// trigonometric evaluation, so long sequences keep full precision.
pub fn gen_zc(params: ZcParams) -> Result<Vec<Complex64>> {
    params.validate()?;
    let n = params.length as u64;
    let q = params.root as u64;
    Ok((0..params.length as u64)
        .map(|k| {
            let kk = (k + params.shift as u64) % n;
            // k'(k'+1) is even, so pi*q*k'(k'+1)/N = 2*pi*(q*k'(k'+1)/2 mod N)/N.
            let tri = (kk * (kk + 1) / 2) % n;
            let r = (q * tri) % n;
            Complex64::from_polar(1.0, -2.0 * PI * r as f64 / n as f64)
        })
        .collect())
}

/// Seed and output length of the PN generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PnParams {
    pub seed: u16,
    pub length: usize,
}

impl PnParams {
    pub fn new(seed: u16, length: usize) -> Result<Self> {
        let p = Self { seed, length };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed == 0 {
            return param("PN seed must be non-zero");
        }
        if self.seed >> PN_ORDER != 0 {
            return param(format!("PN seed {:#x} wider than 11 bits", self.seed));
        }
        Ok(())
    }
}

/// Parses a seed written as `0x`-prefixed hex or plain decimal.
pub fn parse_seed(s: &str) -> Result<u16> {
    let t = s.trim();
    let v = if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u16::from_str_radix(h, 16)
    } else {
        t.parse::<u16>()
    };
    v.map_err(|_| crate::Error::Param(format!("cannot parse PN seed '{s}'")))
}

/// Binary sequence `p(k)` and its antipodal form `c(k) = 1 - 2 p(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PnSequence {
    pub bits: Vec<u8>,
    pub chips: Vec<f64>,
}

/// Runs the LFSR `p(k+11) = p(k) xor p(k+2)` starting from the seed read
/// least-significant bit first.
pub fn gen_pn(params: PnParams) -> Result<PnSequence> {
    params.validate()?;
    let mut bits = Vec::with_capacity(params.length.max(PN_ORDER));
    for i in 0..PN_ORDER {
        bits.push(((params.seed >> i) & 1) as u8);
    }
    while bits.len() < params.length {
        let k = bits.len() - PN_ORDER;
        bits.push(bits[k] ^ bits[k + 2]);
    }
    bits.truncate(params.length);
    let chips = bits.iter().map(|&b| 1.0 - 2.0 * b as f64).collect();
    Ok(PnSequence { bits, chips })
}

/// Maps `n_b` signaling bits onto the 11-bit shift vector `m_10 .. m_0` and
/// returns its value on the 2048 grid.
///
/// `m_i` is the running parity of `b_0 ..= b_{10-i}` for `i > 10 - n_b`,
/// `m_{10-n_b}` is set, and all lower bits are clear. The resulting value
/// sits at the centre of a decision cell of width `2^(11-n_b)`.
pub fn gray_shift_vector(bits: &[bool]) -> Result<usize> {
    let n_b = bits.len();
    if n_b == 0 || n_b > SHIFT_BITS {
        return param(format!("signaling bit count {n_b} outside [1, 11]"));
    }
    let mut m = 0usize;
    let mut parity = false;
    // i runs from 10 down to 11-n_b, consuming b_0, b_1, ...
    for (j, &b) in bits.iter().enumerate() {
        parity ^= b;
        if parity {
            m |= 1 << (SHIFT_BITS - 1 - j);
        }
    }
    if n_b < SHIFT_BITS {
        m |= 1 << (SHIFT_BITS - 1 - n_b);
    }
    Ok(m)
}

/// Encodes signaling bits as a cyclic shift on an `n_ifft`-sample grid.
///
/// The 11-bit vector is scaled by `n_ifft / 2048`, so the shift always spans
/// the same fraction of the symbol regardless of the sampling grid.
pub fn gray_encode(bits: &[bool], n_ifft: usize) -> Result<usize> {
    let m11 = gray_shift_vector(bits)?;
    scale_shift(m11, n_ifft)
}

fn scale_shift(m11: usize, n_ifft: usize) -> Result<usize> {
    if n_ifft == 0 || !n_ifft.is_power_of_two() {
        return param(format!("shift grid {n_ifft} is not a power of two"));
    }
    if n_ifft >= SHIFT_GRID {
        Ok(m11 * (n_ifft / SHIFT_GRID))
    } else {
        let div = SHIFT_GRID / n_ifft;
        if !m11.is_multiple_of(div) {
            return param(format!(
                "shift {m11} not representable on a {n_ifft}-sample grid"
            ));
        }
        Ok(m11 / div)
    }
}

/// Recovers `n_b` bits from a shift on the 2048 grid.
///
/// `b_0 = m_10` and `b_j = m_{11-j} xor m_{10-j}`; bits below
/// `m_{11-n_b}` are ignored, so any value in a decision cell decodes to the
/// cell's pattern. Total on `[0, 2048)`; larger values wrap.
pub fn gray_decode(m: usize, n_b: usize) -> Vec<bool> {
    let m = m % SHIFT_GRID;
    let bit = |i: usize| (m >> i) & 1 == 1;
    let n_b = n_b.min(SHIFT_BITS);
    (0..n_b)
        .map(|j| {
            if j == 0 {
                bit(SHIFT_BITS - 1)
            } else {
                bit(SHIFT_BITS - j) ^ bit(SHIFT_BITS - 1 - j)
            }
        })
        .collect()
}

/// Maps a shift measured on an `n_ifft` grid back onto the 2048 grid,
/// rounding to the nearest grid point.
pub fn shift_to_grid2048(m: usize, n_ifft: usize) -> usize {
    let m = m % n_ifft;
    ((m * SHIFT_GRID + n_ifft / 2) / n_ifft) % SHIFT_GRID
}

/// Signaling bits together with the cyclic shift that carries them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftCode {
    pub bits: Vec<bool>,
    pub shift: usize,
    pub n_ifft: usize,
}

impl ShiftCode {
    pub fn encode(bits: &[bool], n_ifft: usize) -> Result<Self> {
        Ok(Self {
            bits: bits.to_vec(),
            shift: gray_encode(bits, n_ifft)?,
            n_ifft,
        })
    }

    pub fn decode(shift: usize, n_b: usize, n_ifft: usize) -> Self {
        let bits = gray_decode(shift_to_grid2048(shift, n_ifft), n_b);
        Self {
            bits,
            shift: shift % n_ifft,
            n_ifft,
        }
    }

    pub fn n_b(&self) -> usize {
        self.bits.len()
    }
}

/// Little-endian bit expansion of `value`: `b_0` is the least significant bit.
pub fn bits_from_index(value: usize, n_b: usize) -> Vec<bool> {
    (0..n_b).map(|j| (value >> j) & 1 == 1).collect()
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn bits_from_str(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => param(format!("invalid bit character '{c}' in '{s}'")),
        })
        .collect()
}
