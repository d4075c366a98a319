//! Fixed-point two's-complement encoding of reals and points.
//!
//! A [`FixedPointFormat`] with `total_bits = d` and `frac_bits = q` represents
//! the grid `{ k * 2^-q : -2^(d-1) <= k < 2^(d-1) }`. Points in R^n are the
//! concatenation of their coordinates, first coordinate in the most
//! significant position.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest width a [`BitString`] can carry.
pub const MAX_WIDTH: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFormat", into = "RawFormat")]
pub struct FixedPointFormat {
    total_bits: u32,
    frac_bits: u32,
}

#[derive(Serialize, Deserialize)]
struct RawFormat {
    total_bits: u32,
    frac_bits: u32,
}

impl TryFrom<RawFormat> for FixedPointFormat {
    type Error = Error;

    fn try_from(raw: RawFormat) -> Result<Self> {
        FixedPointFormat::new(raw.total_bits, raw.frac_bits)
    }
}

impl From<FixedPointFormat> for RawFormat {
    fn from(fmt: FixedPointFormat) -> Self {
        RawFormat {
            total_bits: fmt.total_bits,
            frac_bits: fmt.frac_bits,
        }
    }
}

impl FixedPointFormat {
    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self> {
        if !(2..=32).contains(&total_bits) {
            return Err(Error::InvalidFormat(format!(
                "total_bits must be in [2, 32], got {total_bits}"
            )));
        }
        if frac_bits >= total_bits {
            return Err(Error::InvalidFormat(format!(
                "frac_bits ({frac_bits}) must be smaller than total_bits ({total_bits})"
            )));
        }
        Ok(Self { total_bits, frac_bits })
    }

    /// Pure integer format with `total_bits` bits.
    pub fn integer(total_bits: u32) -> Result<Self> {
        Self::new(total_bits, 0)
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    /// Grid spacing `2^-q`.
    pub fn step(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.step()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.step()
    }

    fn min_raw(&self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    fn max_raw(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    fn mask(&self) -> u128 {
        width_mask(self.total_bits)
    }

    /// Scaled integer for `v` if it lies exactly on the grid and in range.
    pub fn exact_raw(&self, v: f64) -> Option<i64> {
        let scaled = v * self.step().recip();
        if !scaled.is_finite() || scaled.fract() != 0.0 {
            return None;
        }
        let raw = scaled as i64;
        (self.min_raw()..=self.max_raw()).contains(&raw).then_some(raw)
    }

    pub fn is_representable(&self, v: f64) -> bool {
        self.exact_raw(v).is_some()
    }

    fn raw_to_bits(&self, raw: i64) -> BitString {
        BitString {
            bits: (raw as i128 as u128) & self.mask(),
            width: self.total_bits,
        }
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.total_bits - self.frac_bits, self.frac_bits)
    }
}

pub(crate) fn width_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// A fixed-width bit pattern, most significant bit first when rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: u128,
    width: u32,
}

impl BitString {
    /// Builds a bit string from the low `width` bits of `bits`.
    pub fn new(bits: u128, width: u32) -> Result<Self> {
        if width > MAX_WIDTH {
            return Err(Error::InvalidFormat(format!(
                "bit strings are limited to {MAX_WIDTH} bits, got {width}"
            )));
        }
        if bits & !width_mask(width) != 0 {
            return Err(Error::WidthMismatch {
                expected: width,
                actual: MAX_WIDTH - bits.leading_zeros(),
            });
        }
        Ok(Self { bits, width })
    }

    pub(crate) fn from_raw(bits: u128, width: u32) -> Self {
        debug_assert!(width <= MAX_WIDTH && bits & !width_mask(width) == 0);
        Self { bits, width }
    }

    pub fn zeros(width: u32) -> Self {
        Self { bits: 0, width }
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Bit at position `i`, counted from the most significant end.
    pub fn bit(&self, i: u32) -> u8 {
        assert!(i < self.width, "bit index {i} out of range for width {}", self.width);
        ((self.bits >> (self.width - 1 - i)) & 1) as u8
    }

    /// `self` followed by `other` (other occupies the low bits).
    pub fn concat(&self, other: &BitString) -> Result<BitString> {
        let width = self.width + other.width;
        if width > MAX_WIDTH {
            return Err(Error::InvalidFormat(format!(
                "concatenation width {width} exceeds {MAX_WIDTH}"
            )));
        }
        let high = if other.width >= 128 {
            0
        } else {
            self.bits << other.width
        };
        Ok(BitString::from_raw(high | other.bits, width))
    }

    /// The `width` bits starting at MSB-first position `start`.
    pub fn slice(&self, start: u32, width: u32) -> Result<BitString> {
        if start + width > self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                actual: start + width,
            });
        }
        let shift = self.width - start - width;
        let bits = if shift >= 128 { 0 } else { self.bits >> shift };
        Ok(BitString::from_raw(bits & width_mask(width), width))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width {
            f.write_str(if self.bit(i) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let width = s.len() as u32;
        if width > MAX_WIDTH {
            return Err(Error::InvalidFormat(format!(
                "bit strings are limited to {MAX_WIDTH} bits, got {width}"
            )));
        }
        let mut bits = 0u128;
        for ch in s.chars() {
            let b = match ch {
                '0' => 0,
                '1' => 1,
                other => {
                    return Err(Error::InvalidFormat(format!(
                        "unexpected character {other:?} in bit string"
                    )))
                }
            };
            bits = (bits << 1) | b;
        }
        Ok(BitString { bits, width })
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Result of a saturating encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Encoded {
    pub bits: BitString,
    pub saturated: bool,
}

fn round_scaled(v: f64, fmt: &FixedPointFormat) -> f64 {
    // f64::round rounds half away from zero
    (v * fmt.step().recip()).round()
}

/// Encodes `v` as `round(v * 2^q)` in `d`-bit two's complement.
pub fn encode_scalar(v: f64, fmt: &FixedPointFormat) -> Result<BitString> {
    let r = round_scaled(v, fmt);
    if r.is_nan() || r < fmt.min_raw() as f64 || r > fmt.max_raw() as f64 {
        return Err(Error::Overflow {
            value: v,
            total_bits: fmt.total_bits,
            frac_bits: fmt.frac_bits,
        });
    }
    Ok(fmt.raw_to_bits(r as i64))
}

/// Like [`encode_scalar`] but clamps out-of-range values to the nearest end
/// of the representable range, flagging the clamp.
pub fn encode_scalar_saturating(v: f64, fmt: &FixedPointFormat) -> Result<Encoded> {
    let r = round_scaled(v, fmt);
    if r.is_nan() {
        return Err(Error::Overflow {
            value: v,
            total_bits: fmt.total_bits,
            frac_bits: fmt.frac_bits,
        });
    }
    let (raw, saturated) = if r < fmt.min_raw() as f64 {
        (fmt.min_raw(), true)
    } else if r > fmt.max_raw() as f64 {
        (fmt.max_raw(), true)
    } else {
        (r as i64, false)
    };
    Ok(Encoded {
        bits: fmt.raw_to_bits(raw),
        saturated,
    })
}

/// Encodes `v` only if it lies exactly on the grid of `fmt`.
pub fn encode_exact(v: f64, fmt: &FixedPointFormat) -> Result<BitString> {
    if let Some(raw) = fmt.exact_raw(v) {
        return Ok(fmt.raw_to_bits(raw));
    }
    let scaled = v * fmt.step().recip();
    if scaled.is_finite() && scaled.fract() == 0.0 {
        Err(Error::Overflow {
            value: v,
            total_bits: fmt.total_bits,
            frac_bits: fmt.frac_bits,
        })
    } else {
        Err(Error::NotRepresentable {
            value: v,
            frac_bits: fmt.frac_bits,
        })
    }
}

/// Two's-complement integer carried by `b`, without scaling.
pub fn decode_raw(b: &BitString, fmt: &FixedPointFormat) -> Result<i64> {
    if b.width != fmt.total_bits {
        return Err(Error::WidthMismatch {
            expected: fmt.total_bits,
            actual: b.width,
        });
    }
    let shift = 128 - fmt.total_bits;
    Ok((((b.bits << shift) as i128) >> shift) as i64)
}

pub fn decode_scalar(b: &BitString, fmt: &FixedPointFormat) -> Result<f64> {
    Ok(decode_raw(b, fmt)? as f64 * fmt.step())
}

/// Flip every bit and add one, modulo `2^width`.
pub fn negate_bits(b: &BitString) -> BitString {
    let mask = width_mask(b.width);
    BitString::from_raw((!b.bits).wrapping_add(1) & mask, b.width)
}

/// Most significant bit; 1 exactly when the two's-complement value is negative.
pub fn sign_bit(b: &BitString) -> u8 {
    if b.width == 0 {
        return 0;
    }
    ((b.bits >> (b.width - 1)) & 1) as u8
}

pub fn encode_point(x: &[f64], fmt: &FixedPointFormat) -> Result<BitString> {
    concat_point(x, fmt, encode_scalar)
}

/// Point encoding that refuses any coordinate not exactly on the grid.
pub fn encode_point_exact(x: &[f64], fmt: &FixedPointFormat) -> Result<BitString> {
    concat_point(x, fmt, encode_exact)
}

fn concat_point(
    x: &[f64],
    fmt: &FixedPointFormat,
    encode: fn(f64, &FixedPointFormat) -> Result<BitString>,
) -> Result<BitString> {
    let width = x.len() as u32 * fmt.total_bits;
    if width > MAX_WIDTH {
        return Err(Error::InvalidFormat(format!(
            "{}-dimensional point needs {width} bits, more than {MAX_WIDTH}",
            x.len()
        )));
    }
    let mut acc = BitString::zeros(0);
    for (index, &v) in x.iter().enumerate() {
        let bits = encode(v, fmt).map_err(|e| Error::CoordinateEncoding {
            index,
            source: Box::new(e),
        })?;
        acc = acc.concat(&bits)?;
    }
    Ok(acc)
}

pub fn decode_point(b: &BitString, fmt: &FixedPointFormat) -> Result<Vec<f64>> {
    let d = fmt.total_bits;
    if !b.width.is_multiple_of(d) {
        return Err(Error::WidthMismatch {
            expected: (b.width / d + 1) * d,
            actual: b.width,
        });
    }
    (0..b.width / d)
        .map(|k| decode_scalar(&b.slice(k * d, d)?, fmt))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmt(d: u32, q: u32) -> FixedPointFormat {
        FixedPointFormat::new(d, q).unwrap()
    }

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn format_validation() {
        assert!(FixedPointFormat::new(1, 0).is_err());
        assert!(FixedPointFormat::new(33, 0).is_err());
        assert!(FixedPointFormat::new(4, 4).is_err());
        assert!(FixedPointFormat::new(32, 31).is_ok());
        let f = fmt(4, 2);
        assert_eq!(f.min_value(), -2.0);
        assert_eq!(f.max_value(), 1.75);
        assert_eq!(f.step(), 0.25);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_scalar(3.0, &fmt(4, 0)).unwrap().to_string(), "0011");
        assert_eq!(encode_scalar(-3.0, &fmt(4, 0)).unwrap().to_string(), "1101");
        assert_eq!(encode_scalar(-1.5, &fmt(4, 1)).unwrap().to_string(), "1101");
        assert_eq!(encode_scalar(0.0, &fmt(4, 0)).unwrap().to_string(), "0000");
    }

    #[test]
    fn encode_rounds_ties_away_from_zero() {
        let f = fmt(8, 0);
        assert_eq!(decode_scalar(&encode_scalar(2.5, &f).unwrap(), &f).unwrap(), 3.0);
        assert_eq!(decode_scalar(&encode_scalar(-2.5, &f).unwrap(), &f).unwrap(), -3.0);
        assert_eq!(decode_scalar(&encode_scalar(2.4, &f).unwrap(), &f).unwrap(), 2.0);
    }

    #[test]
    fn encode_overflow() {
        let f = fmt(4, 0);
        assert!(matches!(encode_scalar(8.0, &f), Err(Error::Overflow { .. })));
        assert!(matches!(encode_scalar(-9.0, &f), Err(Error::Overflow { .. })));
        assert!(encode_scalar(-8.0, &f).is_ok());
        assert!(encode_scalar(f64::NAN, &f).is_err());
        // 7.6 rounds to 8, which is out of range
        assert!(encode_scalar(7.6, &f).is_err());
    }

    #[test]
    fn saturating_encode_flags_clamp() {
        let f = fmt(4, 0);
        let e = encode_scalar_saturating(100.0, &f).unwrap();
        assert!(e.saturated);
        assert_eq!(e.bits.to_string(), "0111");
        let e = encode_scalar_saturating(-100.0, &f).unwrap();
        assert!(e.saturated);
        assert_eq!(e.bits.to_string(), "1000");
        let e = encode_scalar_saturating(5.0, &f).unwrap();
        assert!(!e.saturated);
        assert_eq!(e.bits.to_string(), "0101");
    }

    #[test]
    fn exact_encode_rejects_off_grid() {
        let f = fmt(8, 2);
        assert!(encode_exact(0.25, &f).is_ok());
        assert!(matches!(encode_exact(0.3, &f), Err(Error::NotRepresentable { .. })));
        assert!(matches!(encode_exact(64.0, &f), Err(Error::Overflow { .. })));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_scalar(&bs("1101"), &fmt(4, 0)).unwrap(), -3.0);
        assert_eq!(decode_scalar(&bs("0111"), &fmt(4, 0)).unwrap(), 7.0);
        assert_eq!(decode_scalar(&bs("1000"), &fmt(4, 2)).unwrap(), -2.0);
        assert!(matches!(
            decode_scalar(&bs("101"), &fmt(4, 0)),
            Err(Error::WidthMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn negate_examples() {
        assert_eq!(negate_bits(&bs("0011")).to_string(), "1101");
        assert_eq!(negate_bits(&bs("0000")).to_string(), "0000");
        assert_eq!(negate_bits(&bs("1000")).to_string(), "1000");
    }

    #[test]
    fn negate_wraparound_brute_force() {
        // -(-2^(d-1)) = 2^(d-1) does not fit, so it must wrap back to itself.
        for d in 2..=12u32 {
            let f = fmt(d, 0);
            let most_negative = BitString::from_raw(1u128 << (d - 1), d);
            let want = ((1i64 << (d - 1)) as i128).rem_euclid(1i128 << d) as u128;
            assert_eq!(negate_bits(&most_negative).bits(), want);
            assert_eq!(negate_bits(&most_negative), most_negative);
            assert_eq!(decode_scalar(&most_negative, &f).unwrap(), -((1u64 << (d - 1)) as f64));
        }
    }

    #[test]
    fn point_examples() {
        assert_eq!(encode_point(&[3.0, -3.0], &fmt(4, 0)).unwrap().to_string(), "00111101");
        assert_eq!(encode_point(&[0.0, 0.0], &fmt(4, 0)).unwrap().to_string(), "00000000");
        assert_eq!(encode_point(&[1.5], &fmt(4, 1)).unwrap().to_string(), "0011");
        assert_eq!(decode_point(&bs("00111101"), &fmt(4, 0)).unwrap(), vec![3.0, -3.0]);
    }

    #[test]
    fn point_overflow_names_coordinate() {
        match encode_point(&[1.0, 20.0, 0.0], &fmt(4, 0)) {
            Err(Error::CoordinateEncoding { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected coordinate overflow, got {other:?}"),
        }
    }

    #[test]
    fn sign_bit_examples() {
        assert_eq!(sign_bit(&bs("1101")), 1);
        assert_eq!(sign_bit(&bs("0011")), 0);
        assert_eq!(sign_bit(&bs("0000")), 0);
    }

    #[test]
    fn bitstring_parse_and_slice() {
        let b = bs("110010");
        assert_eq!(b.width(), 6);
        assert_eq!(b.slice(1, 3).unwrap().to_string(), "100");
        assert_eq!(b.bit(0), 1);
        assert_eq!(b.bit(5), 0);
        assert!("10a".parse::<BitString>().is_err());
        assert!(BitString::new(0b100, 2).is_err());
    }

    #[test]
    fn exhaustive_roundtrip_negation_and_sign() {
        for d in 2..=12u32 {
            for q in [0, d / 2, d - 1] {
                let f = fmt(d, q);
                let most_negative = 1u128 << (d - 1);
                let mut prev: Option<f64> = None;
                // Walk raw values in increasing numeric order to check monotonicity.
                for raw in -(1i64 << (d - 1))..(1i64 << (d - 1)) {
                    let b = f.raw_to_bits(raw);
                    let v = decode_scalar(&b, &f).unwrap();
                    assert_eq!(encode_scalar(v, &f).unwrap(), b, "roundtrip d={d} q={q} {b}");
                    assert_eq!(sign_bit(&b) == 1, v < 0.0);
                    if b.bits() != most_negative {
                        assert_eq!(decode_scalar(&negate_bits(&b), &f).unwrap(), -v);
                    }
                    if let Some(p) = prev {
                        assert!(v > p);
                    }
                    prev = Some(v);
                }
            }
        }
    }
}
