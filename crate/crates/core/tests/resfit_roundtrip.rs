use num_complex::Complex64;
use proptest::prelude::*;
use qploss::lossmodel::{delta_i_theory, ResonatorParams};
use qploss::mbcore::{GapModel, Material};
use qploss::resfit::{classify_regime, fit_resonance, synthesize, Background, NotchParams, Regime, SweepRecord};
use qploss::synth::{add_noise, NoiseSpec};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn window(p: &NotchParams, linewidths: f64, n: usize) -> Vec<f64> {
    let half = 0.5 * linewidths * p.linewidth_hz();
    (0..n)
        .map(|i| p.f_r_hz - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

fn record(p: &NotchParams) -> SweepRecord {
    let f = window(p, 5.0, 2001);
    SweepRecord::new(f.clone(), synthesize(&f, p), 0.05, -140.0, "r").unwrap()
}

fn draw_strategy() -> impl Strategy<Value = NotchParams> {
    (
        4.0f64..6.0,
        0.0f64..1.0,
        -0.4f64..0.4,
        0.5f64..1.5,
        -3.1f64..3.1,
        0.0f64..60e-9,
        3e9f64..8e9,
    )
        .prop_map(|(lq, u, phi0, a, th, tau, f_r)| {
            let q_l = 10f64.powf(lq);
            // Q_c/Q_l in [1.05, 20], log-uniform
            let ratio = 1.05 * (20.0f64 / 1.05).powf(u);
            NotchParams {
                f_r_hz: f_r,
                q_l,
                q_c_abs: ratio * q_l,
                phi0_rad: phi0,
                background: Background {
                    amplitude: a,
                    phase_offset_rad: th,
                    delay_s: tau,
                },
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn noiseless_round_trip(p in draw_strategy()) {
        let fit = fit_resonance(&record(&p)).unwrap();
        prop_assert!(rel(fit.f_r_hz, p.f_r_hz) < 1e-3);
        prop_assert!(rel(fit.q_l, p.q_l) < 1e-3, "Q_l {} vs {}", fit.q_l, p.q_l);
        prop_assert!(rel(fit.q_c_abs, p.q_c_abs) < 1e-3, "Q_c {} vs {}", fit.q_c_abs, p.q_c_abs);
        prop_assert!(rel(fit.q_i, p.q_i()) < 1e-3, "Q_i {} vs {}", fit.q_i, p.q_i());
        prop_assert!(fit.fit.converged);
    }
}

#[test]
fn noisy_median_error() {
    let p = NotchParams {
        f_r_hz: 3.654e9,
        q_l: 9e4,
        q_c_abs: 1e5,
        phi0_rad: 0.1,
        background: Background {
            amplitude: 0.98,
            phase_offset_rad: 0.3,
            delay_s: 40e-9,
        },
    };
    let clean = record(&p);
    let mut errs: Vec<f64> = (0..100)
        .map(|seed| {
            let mut r = clean.clone();
            add_noise(&mut r.s21, 0.98, NoiseSpec { snr_db: 40.0, seed }, 0);
            rel(fit_resonance(&r).unwrap().q_i, p.q_i())
        })
        .collect();
    errs.sort_by(f64::total_cmp);
    let median = 0.5 * (errs[49] + errs[50]);
    assert!(median < 0.01, "median Q_i error {median}");
}

#[test]
fn complex_rescaling_only_moves_background() {
    let p = NotchParams {
        f_r_hz: 5.1e9,
        q_l: 2e5,
        q_c_abs: 5e5,
        phi0_rad: -0.2,
        background: Background {
            amplitude: 1.0,
            phase_offset_rad: 0.0,
            delay_s: 25e-9,
        },
    };
    let base = record(&p);
    let a = fit_resonance(&base).unwrap();
    for k in [Complex64::new(0.3, 0.4), Complex64::new(-1.7, 0.2), Complex64::new(0.0, -2.5)] {
        let mut scaled = base.clone();
        scaled.s21.iter_mut().for_each(|z| *z *= k);
        let b = fit_resonance(&scaled).unwrap();
        assert!(rel(b.f_r_hz, a.f_r_hz) < 1e-6);
        assert!(rel(b.q_l, a.q_l) < 1e-6);
        assert!(rel(b.q_c_abs, a.q_c_abs) < 1e-6);
        assert!(rel(b.q_i, a.q_i) < 1e-6);
        assert!(rel(b.background.amplitude, a.background.amplitude * k.norm()) < 1e-6);
    }
}

#[test]
fn frequency_shift_is_tracked() {
    let mut last = f64::INFINITY;
    for (i, _t) in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6].iter().enumerate() {
        let p = NotchParams {
            f_r_hz: 3.654e9 - 2.0e3 * i as f64,
            q_l: 9e4,
            q_c_abs: 1e5,
            phi0_rad: 0.05,
            background: Background::default(),
        };
        let fit = fit_resonance(&record(&p)).unwrap();
        assert!(fit.f_r_hz < last);
        last = fit.f_r_hz;
    }
}

#[test]
fn regime_flips_once_at_crossing() {
    // Q_i(T) from the surface-impedance theory with a constant extra loss,
    // Q_c placed so that Q_i = 3·Q_c between 0.5 K and 0.6 K
    let ta = Material::new("Ta", 4.06, 6.9e28, 1.0e7, GapModel::TanhInterpolation).unwrap();
    let res = ResonatorParams::new(3.654e9, 0.05, ta).unwrap();
    let other = 1e-7;
    let qi = |t: f64| 1.0 / (delta_i_theory(&res, t).unwrap() + other);
    let q_c = 0.5 * (qi(0.5) + qi(0.6)) / 3.0;
    let temps: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
    let fits: Vec<_> = temps
        .iter()
        .map(|&t| {
            let p = NotchParams {
                f_r_hz: 3.654e9,
                q_l: 1.0 / (1.0 / qi(t) + 1.0 / q_c),
                q_c_abs: q_c,
                phi0_rad: 0.0,
                background: Background::default(),
            };
            fit_resonance(&record(&p)).unwrap()
        })
        .collect();
    let pairs: Vec<(f64, &_)> = temps.iter().cloned().zip(fits.iter()).rev().collect();
    let labels = classify_regime(&pairs, 3.0).unwrap();
    let flips: Vec<usize> = (1..labels.len()).filter(|&i| labels[i].1 != labels[i - 1].1).collect();
    assert_eq!(flips.len(), 1);
    assert_eq!(labels[flips[0] - 1].0, 0.5);
    assert_eq!(labels[flips[0] - 1].1, Regime::CouplingLimited);
    assert_eq!(labels[flips[0]].1, Regime::LossLimited);
}
