//! Fixed-width binary floating point on top of `num-bigint`.
//!
//! A value is `mant * 2^exp` with `|mant|` holding exactly `prec` significant
//! bits (or zero). Every operation rounds to nearest at the precision of its
//! widest operand. Only what the root finder needs is provided.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MpFloat {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

impl MpFloat {
    pub fn zero(prec: u32) -> Self {
        Self {
            mant: BigInt::zero(),
            exp: 0,
            prec,
        }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    fn normalized(mant: BigInt, exp: i64, prec: u32) -> Self {
        if mant.is_zero() {
            return Self::zero(prec);
        }
        let bits = mant.bits() as i64;
        let p = prec as i64;
        match bits.cmp(&p) {
            Ordering::Equal => Self { mant, exp, prec },
            Ordering::Less => Self {
                mant: mant << ((p - bits) as usize),
                exp: exp - (p - bits),
                prec,
            },
            Ordering::Greater => {
                let shift = (bits - p) as usize;
                let negative = mant.sign() == Sign::Minus;
                let mag = mant.magnitude();
                let one = num_bigint::BigUint::from(1u8);
                let half = &one << (shift - 1);
                let rem = mag & ((&one << shift) - &one);
                let mut rounded = mag >> shift;
                // round to nearest, ties to even
                let up = match rem.cmp(&half) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => rounded.bit(0),
                };
                if up {
                    rounded += 1u8;
                }
                let mut e = exp + shift as i64;
                if rounded.bits() as i64 > p {
                    rounded >>= 1usize;
                    e += 1;
                }
                let sign = if negative { Sign::Minus } else { Sign::Plus };
                Self {
                    mant: BigInt::from_biguint(sign, rounded),
                    exp: e,
                    prec,
                }
            }
        }
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "non-finite value cannot be converted");
        if x == 0.0 {
            return Self::zero(prec);
        }
        let (m, e, s) = num_traits::Float::integer_decode(x);
        let mant = BigInt::from(m) * i64::from(s);
        Self::normalized(mant, i64::from(e), prec)
    }

    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        if q.is_zero() {
            return Self::zero(prec);
        }
        Self::quotient(q.numer(), 0, q.denom(), 0, prec)
    }

    pub fn from_bigint(n: &BigInt, prec: u32) -> Self {
        Self::normalized(n.clone(), 0, prec)
    }

    /// `(a * 2^ea) / (b * 2^eb)` rounded to `prec` bits.
    fn quotient(a: &BigInt, ea: i64, b: &BigInt, eb: i64, prec: u32) -> Self {
        let shift = (prec as i64 + 2 + b.bits() as i64 - a.bits() as i64).max(0) as usize;
        let num = a << shift;
        let (q, r) = num.div_rem(b);
        // sticky bit keeps round-to-nearest honest for the tail
        let q = if r.is_zero() {
            q << 1usize
        } else {
            (q << 1usize) + q_sign(a, b)
        };
        Self::normalized(q, ea - eb - shift as i64 - 1, prec)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let drop = (bits - 64).max(0);
        let top = (&self.mant >> drop as usize).to_f64().unwrap_or(0.0);
        ldexp(top, self.exp + drop)
    }

    /// log2 of the magnitude; `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mant.bits() as i64;
        let drop = (bits - 64).max(0);
        let top = (self.mant.magnitude() >> drop as usize)
            .to_f64()
            .unwrap_or(1.0);
        top.log2() + (self.exp + drop) as f64
    }

    pub fn neg(&self) -> Self {
        Self {
            mant: -self.mant.clone(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return Self::normalized(other.mant.clone(), other.exp, prec);
        }
        if other.is_zero() {
            return Self::normalized(self.mant.clone(), self.exp, prec);
        }
        let top_a = self.exp + self.mant.bits() as i64;
        let top_b = other.exp + other.mant.bits() as i64;
        let guard = prec as i64 + 4;
        // an operand entirely below the rounding position of the other only
        // contributes a sticky bit
        if top_a - top_b > guard {
            return Self::sticky_add(self, other.mant.sign(), prec);
        }
        if top_b - top_a > guard {
            return Self::sticky_add(other, self.mant.sign(), prec);
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &other.mant << (other.exp - e) as usize;
        Self::normalized(a + b, e, prec)
    }

    fn sticky_add(big: &Self, small_sign: Sign, prec: u32) -> Self {
        // three guard bits, lowest one sticky: never a tie
        let widened = &big.mant << 3usize;
        let nudged = match small_sign {
            Sign::Minus => widened - 1,
            _ => widened + 1,
        };
        Self::normalized(nudged, big.exp - 3, prec)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        Self::normalized(&self.mant * &other.mant, self.exp + other.exp, prec)
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero");
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return Self::zero(prec);
        }
        Self::quotient(&self.mant, self.exp, &other.mant, other.exp, prec)
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        Self {
            mant: self.mant.clone(),
            exp: self.exp + k,
            prec: self.prec,
        }
    }
}

fn q_sign(a: &BigInt, b: &BigInt) -> BigInt {
    if (a.sign() == Sign::Minus) ^ (b.sign() == Sign::Minus) {
        BigInt::from(-1)
    } else {
        BigInt::from(1)
    }
}

/// `x * 2^e` without intermediate overflow of `2^e`.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}
