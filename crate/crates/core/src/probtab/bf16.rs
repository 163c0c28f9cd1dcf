//! 16-bit brain floating point storage for probability tables.
//!
//! Layout: 1 sign bit, 8 exponent bits (bias 127), 7 mantissa bits. This is the
//! upper half of an IEEE-754 binary32, so widening to `f32` is a shift.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bf16(u16);

impl Bf16 {
    pub const ZERO: Bf16 = Bf16(0x0000);
    pub const ONE: Bf16 = Bf16(0x3F80);
    pub const INFINITY: Bf16 = Bf16(0x7F80);
    pub const NAN: Bf16 = Bf16(0x7FC0);

    pub const fn from_bits(bits: u16) -> Self {
        Bf16(bits)
    }

    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Round-to-nearest-even from binary32.
    pub fn from_f32(x: f32) -> Self {
        let bits = x.to_bits();
        if x.is_nan() {
            // keep sign and payload top bits, force quiet
            return Bf16(((bits >> 16) as u16) | 0x0040);
        }
        let round = 0x7FFF + ((bits >> 16) & 1);
        Bf16((bits.wrapping_add(round) >> 16) as u16)
    }

    /// Round-to-nearest-even from binary64, rounding once.
    ///
    /// The value is first narrowed to binary32 with round-to-odd, which keeps
    /// enough sticky information for the second rounding to be exact.
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            return Bf16::NAN;
        }
        let y = x as f32;
        let y = if f64::from(y) != x && y.to_bits() & 1 == 0 {
            let bits = y.to_bits();
            let sign = bits & 0x8000_0000;
            let mag = bits & 0x7FFF_FFFF;
            let mag = if x.abs() > f64::from(y).abs() {
                mag + 1
            } else {
                mag - 1
            };
            f32::from_bits(sign | mag)
        } else {
            y
        };
        Bf16::from_f32(y)
    }

    pub fn to_f32(self) -> f32 {
        f32::from_bits(u32::from(self.0) << 16)
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.to_f32())
    }

    pub fn is_nan(self) -> bool {
        self.0 & 0x7F80 == 0x7F80 && self.0 & 0x007F != 0
    }

    pub fn is_finite(self) -> bool {
        self.0 & 0x7F80 != 0x7F80
    }

    fn is_sign_negative(self) -> bool {
        self.0 & 0x8000 != 0
    }

    fn is_zero(self) -> bool {
        self.0 & 0x7FFF == 0
    }

    /// Spacing between this value and the next representable magnitude.
    pub fn ulp(self) -> f64 {
        let exp = i32::from((self.0 >> 7) & 0xFF);
        // subnormals share the minimum exponent
        let exp = exp.max(1);
        2f64.powi(exp - 127 - 7)
    }

    /// Checks that the pattern is usable as a probability weight.
    pub fn validate_probability(self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvalidProbability(format!(
                "non-finite pattern {:#06x}",
                self.0
            )));
        }
        if self.is_sign_negative() && !self.is_zero() {
            return Err(Error::InvalidProbability(format!(
                "negative pattern {:#06x}",
                self.0
            )));
        }
        Ok(())
    }

    /// `max(1, round(p * 2^n))` evaluated exactly, ties away from zero.
    pub fn to_fixed(self, prob_bits: u32) -> Result<u32> {
        check_prob_bits(prob_bits)?;
        self.validate_probability()?;
        let biased = i32::from((self.0 >> 7) & 0xFF);
        let frac = u64::from(self.0 & 0x7F);
        // value = mant * 2^exp exactly
        let (mant, exp) = if biased == 0 {
            (frac, -126 - 7)
        } else {
            (frac | 0x80, biased - 127 - 7)
        };
        let shift = exp + prob_bits as i32;
        let rounded = if mant == 0 {
            0
        } else if shift >= 0 {
            if shift > 32 {
                return Err(overflow(self, prob_bits));
            }
            mant << shift
        } else {
            let right = (-shift) as u32;
            if right > 9 {
                // mant < 2^8, so the product is below one half
                0
            } else {
                (mant + (1 << (right - 1))) >> right
            }
        };
        if rounded > u64::from(u32::MAX) {
            return Err(overflow(self, prob_bits));
        }
        Ok((rounded as u32).max(1))
    }
}

fn overflow(p: Bf16, prob_bits: u32) -> Error {
    Error::InvalidProbability(format!(
        "{} scaled by 2^{} exceeds 32 bits",
        p.to_f64(),
        prob_bits
    ))
}

pub(crate) fn check_prob_bits(prob_bits: u32) -> Result<()> {
    if (1..=16).contains(&prob_bits) {
        Ok(())
    } else {
        Err(Error::InvalidPrecision(prob_bits))
    }
}

impl From<f32> for Bf16 {
    fn from(x: f32) -> Self {
        Bf16::from_f32(x)
    }
}

impl From<f64> for Bf16 {
    fn from(x: f64) -> Self {
        Bf16::from_f64(x)
    }
}

impl From<Bf16> for f64 {
    fn from(x: Bf16) -> Self {
        x.to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Nearest-even oracle by enumerating the two bracketing BF16 values.
    fn nearest_by_enumeration(x: f64) -> u16 {
        let mut best: Option<(f64, u16)> = None;
        for bits in 0u16..=0xFFFF {
            let b = Bf16::from_bits(bits);
            if !b.is_finite() {
                continue;
            }
            let err = (b.to_f64() - x).abs();
            match best {
                None => best = Some((err, bits)),
                Some((e, bb)) => {
                    let even = bits & 1 == 0 && bb & 1 == 1;
                    if err < e || (err == e && even) {
                        best = Some((err, bits));
                    }
                }
            }
        }
        best.unwrap().1
    }

    #[test]
    fn exact_powers_of_two() {
        assert_eq!(Bf16::from_f64(1.0).to_bits(), 0x3F80);
        assert_eq!(Bf16::from_f64(0.5).to_bits(), 0x3F00);
        assert_eq!(Bf16::from_f32(1.0).to_bits(), 0x3F80);
    }

    #[test]
    fn point_two_rounds_up() {
        // 0.2f32 = 0x3E4CCCCD; discarded half 0xCCCD > 0x8000
        assert_eq!(0.2f32.to_bits(), 0x3E4C_CCCD);
        assert_eq!(Bf16::from_f64(0.2).to_bits(), 0x3E4D);
        assert_eq!(Bf16::from_f64(0.2).to_f64(), 0.200_195_312_5);
    }

    #[test]
    fn ties_go_to_even() {
        // 1 + 2^-8 sits halfway between 0x3F80 and 0x3F81
        assert_eq!(Bf16::from_f64(1.0 + 2f64.powi(-8)).to_bits(), 0x3F80);
        // 1 + 3*2^-8 sits halfway between 0x3F81 and 0x3F82
        assert_eq!(Bf16::from_f64(1.0 + 3.0 * 2f64.powi(-8)).to_bits(), 0x3F82);
    }

    #[test]
    fn no_double_rounding_from_f64() {
        // just above the tie: f32 would round to the tie, then to even (down)
        let x = 1.0 + 2f64.powi(-8) + 2f64.powi(-40);
        assert_eq!(Bf16::from_f64(x).to_bits(), 0x3F81);
        assert_eq!(nearest_by_enumeration(x), 0x3F81);
    }

    #[test]
    fn to_fixed_examples() {
        assert_eq!(Bf16::from_f64(0.5).to_fixed(12).unwrap(), 2048);
        assert_eq!(Bf16::ZERO.to_fixed(12).unwrap(), 1);
        // 0.2001953125 * 16 = 3.203125
        assert_eq!(Bf16::from_f64(0.2).to_fixed(4).unwrap(), 3);
        assert_eq!(Bf16::ONE.to_fixed(16).unwrap(), 65536);
    }

    #[test]
    fn to_fixed_rounds_half_away() {
        // 0.75 * 2 = 1.5 -> 2 ; 0.25 * 2 = 0.5 -> 1
        assert_eq!(Bf16::from_f64(0.75).to_fixed(1).unwrap(), 2);
        assert_eq!(Bf16::from_f64(0.25).to_fixed(1).unwrap(), 1);
        // 2.5/16 * 16 = 2.5 -> 3
        assert_eq!(Bf16::from_f64(2.5 / 16.0).to_fixed(4).unwrap(), 3);
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(Bf16::NAN.to_fixed(12).is_err());
        assert!(Bf16::INFINITY.to_fixed(12).is_err());
        assert!(Bf16::from_f64(-0.25).to_fixed(12).is_err());
        assert!(Bf16::from_bits(0x8000).to_fixed(12).is_ok());
        assert!(Bf16::ONE.to_fixed(0).is_err());
        assert!(Bf16::ONE.to_fixed(17).is_err());
        // 3.4e38 * 2^12 cannot fit in 32 bits
        assert!(Bf16::from_bits(0x7F7F).to_fixed(12).is_err());
    }

    #[test]
    fn subnormals_quantize_to_floor() {
        assert_eq!(Bf16::from_bits(0x0001).to_fixed(16).unwrap(), 1);
        assert_eq!(Bf16::from_bits(0x007F).to_fixed(16).unwrap(), 1);
    }

    proptest! {
        #[test]
        fn from_f64_matches_enumeration(x in 0.0f64..4.0) {
            prop_assert_eq!(Bf16::from_f64(x).to_bits(), nearest_by_enumeration(x));
        }

        #[test]
        fn from_f64_within_one_ulp(x in 1e-30f64..1e30) {
            let b = Bf16::from_f64(x);
            prop_assert!((b.to_f64() - x).abs() <= b.ulp());
        }

        #[test]
        fn to_fixed_within_half(bits in 0u16..0x3F81, n in 1u32..=16) {
            let p = Bf16::from_bits(bits);
            let exact = p.to_f64() * 2f64.powi(n as i32);
            let q = p.to_fixed(n).unwrap();
            if exact >= 0.5 {
                prop_assert!((f64::from(q) - exact).abs() <= 0.5);
            } else {
                prop_assert_eq!(q, 1);
            }
            prop_assert!(q <= (1 << n) + 1);
        }
    }
}
