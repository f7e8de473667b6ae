//! Reference arithmetic for unit tests: fixed-point numbers with 256
//! fractional bits, and summation orders independent of the library's.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

const BITS: u32 = 256;

/// `value / 2^BITS`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Fixed(BigInt);

impl Fixed {
    fn one() -> Self {
        Fixed(BigInt::one() << BITS)
    }

    pub(crate) fn int(n: i64) -> Self {
        Fixed(BigInt::from(n) << BITS)
    }

    /// Exact conversion.
    pub(crate) fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Fixed(BigInt::zero());
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let (mantissa, exp) = if exp == 0 {
            (bits & ((1 << 52) - 1), -1074)
        } else {
            ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
        };
        let shift = exp + BITS as i64;
        let m = BigInt::from(mantissa);
        let v = if shift >= 0 { m << shift as u32 } else { m >> (-shift) as u32 };
        Fixed(if x < 0.0 { -v } else { v })
    }

    pub(crate) fn to_f64(&self) -> f64 {
        // keep 80 significant bits before the (exact) power-of-two scaling
        let len = self.0.bits() as i64;
        let drop = (len - 80).max(0);
        let head = (&self.0 >> drop as u32).to_f64().expect("finite");
        head * 2f64.powi((drop - BITS as i64) as i32)
    }

    pub(crate) fn add(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 + &o.0)
    }

    pub(crate) fn sub(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 - &o.0)
    }

    pub(crate) fn mul(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 * &o.0) >> BITS)
    }

    pub(crate) fn div(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 << BITS) / &o.0)
    }

    fn is_negligible(&self) -> bool {
        self.0.abs() < BigInt::from(16)
    }

    pub(crate) fn exp(&self) -> Fixed {
        // exp(x) = exp(x / 2^k)^(2^k) with |x / 2^k| < 1/2
        let mut k = 0u32;
        let half = Fixed(BigInt::one() << (BITS - 1));
        let mut y = self.clone();
        while Fixed(y.0.abs()) >= half {
            y = Fixed(y.0 >> 1);
            k += 1;
        }
        let mut sum = Fixed::one();
        let mut term = Fixed::one();
        for n in 1..200 {
            term = Fixed(term.mul(&y).0 / n);
            if term.is_negligible() {
                break;
            }
            sum = sum.add(&term);
        }
        for _ in 0..k {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// `2 atanh(z)` for `|z| <= 1/3`.
    fn two_atanh(z: &Fixed) -> Fixed {
        let z2 = z.mul(z);
        let mut power = z.clone();
        let mut sum = Fixed(BigInt::zero());
        for n in 0..1000 {
            let term = Fixed(&power.0 / (2 * n + 1));
            if term.is_negligible() {
                break;
            }
            sum = sum.add(&term);
            power = power.mul(&z2);
        }
        Fixed(sum.0 << 1)
    }

    pub(crate) fn ln(&self) -> Fixed {
        assert!(self.0.is_positive(), "ln of a nonpositive number");
        // self = m 2^k with m in [2/3, 4/3)
        let mut m = self.clone();
        let mut k = 0i64;
        let (lo, hi) = (Fixed::int(2).div(&Fixed::int(3)), Fixed::int(4).div(&Fixed::int(3)));
        while m >= hi {
            m = Fixed(m.0 >> 1);
            k += 1;
        }
        while m < lo {
            m = Fixed(m.0 << 1);
            k -= 1;
        }
        let ln2 = Self::two_atanh(&Fixed::one().div(&Fixed::int(3)));
        let z = m.sub(&Fixed::one()).div(&m.add(&Fixed::one()));
        Self::two_atanh(&z).add(&Fixed(ln2.0 * k))
    }

    pub(crate) fn powf(&self, a: &Fixed) -> Fixed {
        a.mul(&self.ln()).exp()
    }

    pub(crate) fn e() -> Fixed {
        Fixed::one().exp()
    }
}

/// Relative difference, with an absolute floor of `f64::MIN_POSITIVE`.
pub(crate) fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Recursive pairwise summation.
pub(crate) fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        n => pairwise_sum(&x[..n / 2]) + pairwise_sum(&x[n / 2..]),
    }
}

/// Deterministic pseudo-random values in `[lo, hi)` for oracle comparisons.
pub(crate) fn sample(n: usize, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_constants() {
        assert_eq!(Fixed::e().to_f64(), std::f64::consts::E);
        assert_eq!(Fixed::int(2).ln().to_f64(), std::f64::consts::LN_2);
        assert_eq!(Fixed::int(10).ln().to_f64(), std::f64::consts::LN_10);
        assert_eq!(Fixed::from_f64(-0.375).to_f64(), -0.375);
        let x = Fixed::from_f64(1e-300);
        assert_eq!(x.to_f64(), 0.0);
        let third = Fixed::int(1).div(&Fixed::int(3));
        assert_eq!(Fixed::int(27).powf(&third).to_f64(), 3.0);
    }

    #[test]
    fn exp_and_ln_invert() {
        for x in [-7.5, -1.0, 1e-9, 0.3, 2.0, 40.0] {
            let y = Fixed::from_f64(x).exp().ln().to_f64();
            assert!((y - x).abs() <= 1e-15 * x.abs().max(1.0), "{x} -> {y}");
        }
    }
}
