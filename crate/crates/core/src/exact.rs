//! Exact accumulation of products of doubles.
//!
//! Carbon totals and request-weighted error rates are sums of
//! `count × a × b` over finite non-negative doubles. Every such term is a
//! dyadic rational, so the sum can be held exactly as an integer scaled by a
//! fixed power of two and rounded to `f64` once at the end. The result does
//! not depend on summation order or on how terms are grouped.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

// integer_decode of the smallest subnormal yields exponent -1075, so the
// product of two doubles never has an exponent below -2150.
const SCALE: i32 = 2150;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExactSum {
    scaled: BigInt,
}

fn decode(x: f64) -> (i64, i32) {
    assert!(x.is_finite(), "exact accumulation requires finite inputs");
    let bits = x.to_bits();
    let sign: i64 = if bits >> 63 == 0 { 1 } else { -1 };
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = if exponent == 0 {
        (bits & 0xf_ffff_ffff_ffff) << 1
    } else {
        (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
    };
    (sign * mantissa as i64, exponent - 1075)
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add `count × a × b` exactly.
    pub fn add_product(&mut self, count: u64, a: f64, b: f64) {
        let (ma, ea) = decode(a);
        let (mb, eb) = decode(b);
        if count == 0 || ma == 0 || mb == 0 {
            return;
        }
        let term = BigInt::from(count) * BigInt::from(ma) * BigInt::from(mb);
        self.scaled += term << ((ea + eb + SCALE) as usize);
    }

    pub fn add(&mut self, other: &ExactSum) {
        self.scaled += &other.scaled;
    }

    pub fn is_zero(&self) -> bool {
        self.scaled.is_zero()
    }

    pub fn as_ratio(&self) -> BigRational {
        BigRational::new(self.scaled.clone(), BigInt::from(1) << (SCALE as usize))
    }

    /// The exact sum divided by `divisor`, rounded once to the nearest `f64`.
    pub fn to_f64_div(&self, divisor: u64) -> f64 {
        assert!(divisor > 0);
        let ratio = BigRational::new(self.scaled.clone(), BigInt::from(divisor) << (SCALE as usize));
        ratio.to_f64().expect("finite ratio")
    }

    pub fn to_f64(&self) -> f64 {
        self.to_f64_div(1)
    }
}
