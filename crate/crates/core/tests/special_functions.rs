mod common;

use common::{oracle, rel_err};
use qploss::numerics::{bessel_i0, bessel_i0_scaled, bessel_k0, bessel_k0_scaled};

#[test]
fn oracle_self_check() {
    oracle::self_check();
}

#[test]
fn i0_k0_match_extended_precision_series_on_log_grid() {
    let mut worst_i0: f64 = 0.0;
    let mut worst_k0: f64 = 0.0;
    for x in oracle::log_grid() {
        worst_i0 = worst_i0.max(rel_err(bessel_i0(x).unwrap(), oracle::i0(x)));
        worst_k0 = worst_k0.max(rel_err(bessel_k0(x).unwrap(), oracle::k0(x)));
    }
    println!("max rel err: I0 {worst_i0:.2e}, K0 {worst_k0:.2e}");
    assert!(worst_i0 <= 1e-10);
    assert!(worst_k0 <= 1e-10);
}

#[test]
fn scaled_variants_agree_with_unscaled() {
    for x in [0.01, 0.5, 1.9, 2.1, 7.0, 24.0, 26.0, 29.0, 31.0, 60.0] {
        let i = bessel_i0(x).unwrap() * (-x).exp();
        let k = bessel_k0(x).unwrap() * x.exp();
        assert!(rel_err(bessel_i0_scaled(x).unwrap(), i) < 1e-13, "x = {x}");
        assert!(rel_err(bessel_k0_scaled(x).unwrap(), k) < 1e-13, "x = {x}");
    }
}

#[test]
fn spot_values_from_oracle() {
    // oracle against 40-digit reference values
    assert!(rel_err(oracle::i0(10.0), 2_815.716_628_466_254_5) < 1e-15);
    assert!(rel_err(oracle::k0(5.0), 0.003_691_098_334_042_594_3) < 1e-15);
    assert!(rel_err(oracle::k0(30.0), 2.132_477_496_463_056_4e-14) < 1e-14);
    assert!(rel_err(oracle::k0(1e-3), 7.023_688_800_562_381) < 1e-15);
}
