//! Modified Bessel functions of order zero.
//!
//! | function | range          | method                                   |
//! |----------|----------------|------------------------------------------|
//! | I0       | x <= 30        | ascending power series (all terms > 0)   |
//! | I0       | x > 30         | Hankel asymptotic expansion, scaled      |
//! | K0       | x < 2          | ascending series with harmonic numbers   |
//! | K0       | 2 <= x <= 25   | trapezoid rule on exp(-x (cosh t - 1))   |
//! | K0       | x > 25         | Hankel asymptotic expansion, scaled      |
//!
//! The asymptotic series are only used where their smallest term is below
//! 1e-20, which is what drives the switch points. The trapezoid rule on the
//! integral representation converges geometrically because the integrand is
//! analytic in a strip around the real axis.

use crate::error::{Error, Result};

const I0_SERIES_MAX: f64 = 30.0;
const K0_SERIES_MAX: f64 = 2.0;
const K0_QUADRATURE_MAX: f64 = 25.0;
const K0_QUADRATURE_STEP: f64 = 0.05;

/// I0(x) for finite x >= 0. Overflows to +inf past x ~ 713.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_nonneg("bessel_i0", x)?;
    if x <= I0_SERIES_MAX {
        Ok(i0_series(x))
    } else {
        // split the exponential so the product stays finite up to ~713
        let half = (0.5 * x).exp();
        Ok(i0_scaled_asymptotic(x) * half * half)
    }
}

/// exp(-x)·I0(x) for finite x >= 0.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    check_nonneg("bessel_i0_scaled", x)?;
    if x <= I0_SERIES_MAX {
        Ok(i0_series(x) * (-x).exp())
    } else {
        Ok(i0_scaled_asymptotic(x))
    }
}

/// K0(x) for finite x > 0.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_pos("bessel_k0", x)?;
    if x < K0_SERIES_MAX {
        Ok(k0_series(x))
    } else {
        let half = (-0.5 * x).exp();
        Ok(k0_scaled_large(x) * half * half)
    }
}

/// exp(x)·K0(x) for finite x > 0.
pub fn bessel_k0_scaled(x: f64) -> Result<f64> {
    check_pos("bessel_k0_scaled", x)?;
    if x < K0_SERIES_MAX {
        Ok(k0_series(x) * x.exp())
    } else {
        Ok(k0_scaled_large(x))
    }
}

fn check_nonneg(op: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(op, format!("argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

fn check_pos(op: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(op, format!("argument must be finite and > 0, got {x}")));
    }
    Ok(())
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

/// Coefficients ((2k-1)!!)² / (k! 8^k) shared by both Hankel expansions.
fn hankel_sum(x: f64, alternating: bool) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while k < 200.0 {
        let odd = 2.0 * k - 1.0;
        let next = term * odd * odd / (8.0 * k * x);
        if next >= term {
            // series has started to diverge; the previous term bounds the error
            break;
        }
        term = next;
        sum += if alternating && (k as u32) % 2 == 1 { -term } else { term };
        if term < 1e-18 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum
}

fn i0_scaled_asymptotic(x: f64) -> f64 {
    hankel_sum(x, false) / (2.0 * std::f64::consts::PI * x).sqrt()
}

fn k0_series(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        harmonic += 1.0 / k;
        i0 += term;
        tail += term * harmonic;
        if term * harmonic <= 1e-18 * tail.abs().max(1e-300) {
            break;
        }
        k += 1.0;
    }
    tail - ((0.5 * x).ln() + EULER_GAMMA) * i0
}

fn k0_scaled_large(x: f64) -> f64 {
    if x <= K0_QUADRATURE_MAX {
        k0_scaled_quadrature(x)
    } else {
        hankel_sum(x, true) * (std::f64::consts::PI / (2.0 * x)).sqrt()
    }
}

/// e^x K0(x) = ∫_0^∞ exp(-x (cosh t - 1)) dt, trapezoid rule on the even integrand.
fn k0_scaled_quadrature(x: f64) -> f64 {
    let h = K0_QUADRATURE_STEP;
    let mut sum = 0.5;
    let mut j = 1.0;
    loop {
        let t: f64 = j * h;
        let f = (-x * (t.cosh() - 1.0)).exp();
        sum += f;
        if f < 1e-18 * sum {
            break;
        }
        j += 1.0;
    }
    sum * h
}
