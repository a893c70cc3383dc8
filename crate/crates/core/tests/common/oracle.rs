//! High-precision reference values for I0 and K0.
//!
//! Binary fixed point over `BigInt` with 512 fractional bits (~154 decimal
//! digits). The K0 ascending series cancels by ~26 orders of magnitude at
//! x = 30, so double-double would not be enough here.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: u32 = 512;

/// Euler-Mascheroni constant, 100 digits.
const EULER_GAMMA: &str = "0.5772156649015328606065120900824024310421593359399235988057672348848677267776646709369470632917467495";

#[derive(Clone, Debug)]
struct Fixed(BigInt);

impl Fixed {
    fn one() -> Self {
        Fixed(BigInt::one() << FRAC_BITS)
    }

    fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Fixed(BigInt::zero());
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let shift = FRAC_BITS as i64 + e;
        assert!(shift >= 0, "argument too small for fixed-point oracle");
        let v = BigInt::from(mantissa) << (shift as usize);
        Fixed(if x < 0.0 { -v } else { v })
    }

    fn from_decimal(s: &str) -> Self {
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        let digits: BigInt = format!("{int_part}{frac_part}").parse().unwrap();
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        Fixed((digits << FRAC_BITS) / denom)
    }

    fn from_int(n: i64) -> Self {
        Fixed(BigInt::from(n) << FRAC_BITS)
    }

    fn add(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 + &o.0)
    }

    fn sub(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 - &o.0)
    }

    fn mul(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 * &o.0) >> FRAC_BITS)
    }

    fn div(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 << FRAC_BITS) / &o.0)
    }

    fn div_int(&self, n: i64) -> Fixed {
        Fixed(&self.0 / BigInt::from(n))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn to_f64(&self) -> f64 {
        // Keep the top 64 significant bits, then scale by an exact power of two.
        let bits = self.0.bits() as i64;
        let drop = (bits - 64).max(0);
        let top = (&self.0 >> (drop as usize)).to_f64().unwrap();
        top * 2f64.powi((drop - FRAC_BITS as i64) as i32)
    }

    /// 2·atanh(s) = ln((1+s)/(1-s)), for |s| ≤ 1/3.
    fn two_atanh(s: &Fixed) -> Fixed {
        let s2 = s.mul(s);
        let mut power = s.clone();
        let mut sum = Fixed(BigInt::zero());
        let mut k = 0i64;
        while !power.is_zero() {
            sum = sum.add(&power.div_int(2 * k + 1));
            power = power.mul(&s2);
            k += 1;
        }
        Fixed(sum.0 << 1)
    }

    fn ln(&self) -> Fixed {
        assert!(self.0.is_positive());
        // y = m·2^e with m in [1, 2)
        let e = self.0.bits() as i64 - 1 - FRAC_BITS as i64;
        let m = if e >= 0 {
            Fixed(&self.0 >> (e as usize))
        } else {
            Fixed(&self.0 << ((-e) as usize))
        };
        let one = Fixed::one();
        let s = m.sub(&one).div(&m.add(&one));
        let ln_m = Fixed::two_atanh(&s);
        let ln2 = Fixed::two_atanh(&Fixed::one().div_int(3));
        ln_m.add(&Fixed(&ln2.0 * BigInt::from(e)))
    }
}

/// Ascending-series terms t_k = (x²/4)^k / (k!)², summed until they vanish
/// at working precision (always well past 64 terms on [1e-3, 30]).
fn series_terms(x: f64) -> Vec<Fixed> {
    let q = Fixed::from_f64(x).mul(&Fixed::from_f64(x)).div_int(4);
    let mut terms = vec![Fixed::one()];
    let mut k = 1i64;
    loop {
        let next = terms[terms.len() - 1].mul(&q).div_int(k * k);
        if next.is_zero() && k >= 64 {
            break;
        }
        terms.push(next);
        k += 1;
    }
    terms
}

pub fn i0(x: f64) -> f64 {
    let mut sum = Fixed(BigInt::zero());
    for t in series_terms(x) {
        sum = sum.add(&t);
    }
    sum.to_f64()
}

pub fn k0(x: f64) -> f64 {
    assert!(x > 0.0);
    let terms = series_terms(x);
    let mut i0 = Fixed(BigInt::zero());
    let mut harmonic_sum = Fixed(BigInt::zero());
    let mut harmonic = Fixed(BigInt::zero());
    for (k, t) in terms.iter().enumerate() {
        i0 = i0.add(t);
        if k > 0 {
            harmonic = harmonic.add(&Fixed::one().div_int(k as i64));
            harmonic_sum = harmonic_sum.add(&t.mul(&harmonic));
        }
    }
    let half_x = Fixed::from_f64(x).div(&Fixed::from_int(2));
    let lead = half_x.ln().add(&Fixed::from_decimal(EULER_GAMMA));
    harmonic_sum.sub(&lead.mul(&i0)).to_f64()
}

/// 200 log-spaced points on [1e-3, 30].
pub fn log_grid() -> Vec<f64> {
    let (lo, hi) = (1e-3f64.ln(), 30f64.ln());
    (0..200)
        .map(|i| (lo + (hi - lo) * i as f64 / 199.0).exp())
        .collect()
}

#[allow(dead_code)]
pub fn self_check() {
    // ln 2 and a pair of textbook values
    let ln2 = Fixed::from_int(2).ln().to_f64();
    assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-16);
    assert!((i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
    assert!((k0(1.0) - 0.421_024_438_240_708_3).abs() < 1e-15);
}
