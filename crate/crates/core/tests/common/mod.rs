//! Extended-precision reference arithmetic for test oracles.
//!
//! `Fixed` is a signed big integer with an implicit scale of `2^-BITS`; enough
//! headroom to sum alternating series whose terms reach 1e30 before cancelling.

#![allow(dead_code)]

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::ops::{Add, Mul, Neg, Sub};

pub const BITS: u64 = 640;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed(pub BigInt);

impl Fixed {
    pub fn one() -> Self {
        Fixed(BigInt::one() << BITS)
    }

    pub fn zero() -> Self {
        Fixed(BigInt::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Fixed(BigInt::from(n) << BITS)
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let (mant, e) = if exp == 0 {
            (bits & ((1 << 52) - 1), -1074)
        } else {
            ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
        };
        let mut v = BigInt::from(mant) << BITS;
        if e >= 0 {
            v <<= e as u64;
        } else {
            v >>= (-e) as u64;
        }
        Fixed(if x < 0.0 { -v } else { v })
    }

    pub fn to_f64(&self) -> f64 {
        // Keep 64 significant bits, then scale.
        let mag = self.0.abs();
        let len = mag.bits() as i64;
        let shift = (len - 64).max(0);
        let top = (&mag >> shift as u64).to_u64().unwrap_or(0) as f64;
        let v = top * 2f64.powi((shift - BITS as i64) as i32);
        if self.0.sign() == Sign::Minus {
            -v
        } else {
            v
        }
    }

    pub fn div_int(&self, n: i64) -> Self {
        Fixed(&self.0 / BigInt::from(n))
    }

    pub fn div(&self, other: &Fixed) -> Self {
        Fixed((&self.0 << BITS) / &other.0)
    }

    pub fn is_negligible(&self) -> bool {
        self.0.abs() < BigInt::from(16)
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.0.is_negative());
        Fixed((&self.0 << BITS).sqrt())
    }
}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, o: &Fixed) -> Fixed {
        Fixed(&self.0 + &o.0)
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, o: &Fixed) -> Fixed {
        Fixed(&self.0 - &o.0)
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, o: &Fixed) -> Fixed {
        Fixed((&self.0 * &o.0) >> BITS)
    }
}

impl Neg for &Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(-&self.0)
    }
}

/// `arctan(1/n)` by its Taylor series.
fn arctan_inv(n: i64) -> Fixed {
    let n2 = n * n;
    let mut power = Fixed::one().div_int(n);
    let mut sum = power.clone();
    let mut k = 1;
    loop {
        power = -&power.div_int(n2);
        let term = power.div_int(2 * k + 1);
        if term.is_negligible() {
            return sum;
        }
        sum = &sum + &term;
        k += 1;
    }
}

/// Machin's formula `pi = 16 atan(1/5) - 4 atan(1/239)`.
pub fn pi() -> Fixed {
    let a = arctan_inv(5);
    let b = arctan_inv(239);
    Fixed(a.0 * 16 - b.0 * 4)
}

/// `sum_k c^k / (k! (k + shift)!)` for `c` of either sign.
fn bessel_like(c: &Fixed, shift: i64) -> Fixed {
    let mut fact_shift = Fixed::one();
    for j in 1..=shift {
        fact_shift = fact_shift.div_int(j);
    }
    let mut term = fact_shift;
    let mut sum = term.clone();
    let mut k = 1;
    loop {
        term = (&term * c).div_int(k * (k + shift));
        if term.is_negligible() && k > 4 {
            return sum;
        }
        sum = &sum + &term;
        k += 1;
    }
}

/// `J0(x) = sum (-x²/4)^k / (k!)²`
pub fn j0(x: &Fixed) -> Fixed {
    let c = -&(x * x).div_int(4);
    bessel_like(&c, 0)
}

/// `J1(x) = (x/2) sum (-x²/4)^k / (k! (k+1)!)`
pub fn j1(x: &Fixed) -> Fixed {
    let c = -&(x * x).div_int(4);
    &x.div_int(2) * &bessel_like(&c, 1)
}

/// `I0(x) = sum (x²/4)^k / (k!)²`
pub fn i0(x: &Fixed) -> Fixed {
    let c = (x * x).div_int(4);
    bessel_like(&c, 0)
}

/// `e^x` by Taylor series (for moderate `|x|`).
pub fn exp(x: &Fixed) -> Fixed {
    let mut term = Fixed::one();
    let mut sum = term.clone();
    let mut k = 1;
    loop {
        term = (&term * x).div_int(k);
        if term.is_negligible() && k > 4 {
            return sum;
        }
        sum = &sum + &term;
        k += 1;
    }
}

/// `1F2(1/2; 1, 3/2; -z) = sum (-z)^k / ((2k+1) (k!)²)`
pub fn hyp1f2(z: &Fixed) -> Fixed {
    let mut power = Fixed::one();
    let mut sum = Fixed::one();
    let mut k: i64 = 1;
    loop {
        power = (-&(&power * z)).div_int(k * k);
        let term = power.div_int(2 * k + 1);
        if term.is_negligible() && k > 4 {
            return sum;
        }
        sum = &sum + &term;
        k += 1;
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, in doubles.
pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "no sign change");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
