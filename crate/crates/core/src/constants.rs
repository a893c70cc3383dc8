//! Physical constants (SI, 2019 exact definitions where applicable).

use std::f64::consts::PI;

/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;
/// Planck constant [J·s].
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant [J·s].
pub const HBAR: f64 = H / (2.0 * PI);
/// Elementary charge, i.e. joules per electronvolt.
pub const EV: f64 = 1.602_176_634e-19;
/// Vacuum permeability [H/m].
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Cubic metres per cubic micrometre.
pub const M3_PER_UM3: f64 = 1e-18;

pub fn per_m3_to_per_um3(n: f64) -> f64 {
    n * M3_PER_UM3
}

pub fn per_um3_to_per_m3(n: f64) -> f64 {
    n / M3_PER_UM3
}

pub fn ev_to_joule(e: f64) -> f64 {
    e * EV
}

pub fn joule_to_ev(e: f64) -> f64 {
    e / EV
}

/// dBm to watts.
pub fn dbm_to_watt(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn density_units_round_trip(n in 1e-3f64..1e30) {
            let back = per_m3_to_per_um3(per_um3_to_per_m3(n));
            prop_assert!(((back - n) / n).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn dbm_reference_points() {
        assert_eq!(dbm_to_watt(30.0), 1.0);
        assert!((dbm_to_watt(0.0) - 1e-3).abs() < 1e-18);
        assert_eq!(dbm_to_watt(f64::NEG_INFINITY), 0.0);
    }
}
