//! Notch-type (hanger) resonance model and fitting.
//!
//! The model is the diameter-corrected form with a complex coupling quality
//! factor Q_c = |Q_c|·e^{−jφ0}:
//!
//! ```text
//! S21(f) = a·e^{j(θ − 2πfτ)} · [1 − (Q_l/|Q_c|)·e^{jφ0} / (1 + 2jQ_l(f/f_r − 1))]
//! 1/Q_i  = 1/Q_l − cos(φ0)/|Q_c|
//! ```
//!
//! [`fit_resonance`] runs three stages: cable-delay removal from a linear
//! phase fit on the outer 20 % of the window, an algebraic circle fit plus a
//! phase-vs-frequency fit for starting values, then a full nonlinear
//! refinement of all seven parameters.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{dbm_to_watt, HBAR};
use crate::error::{Error, Result};
use crate::numerics::{least_squares, FitProblem, FitResult};

pub const MIN_TRACE_POINTS: usize = 50;
pub const MIN_SPAN_LINEWIDTHS: f64 = 3.0;
pub const DEFAULT_REGIME_THRESHOLD: f64 = 3.0;
/// Fraction of the window (split between both ends) treated as off-resonant.
const WING_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub frequencies_hz: Vec<f64>,
    pub s21: Vec<Complex64>,
    pub temperature_k: f64,
    /// Power at the chip reference plane.
    pub applied_power_dbm: f64,
    pub resonator_id: String,
}

impl SweepRecord {
    pub fn new(
        frequencies_hz: Vec<f64>,
        s21: Vec<Complex64>,
        temperature_k: f64,
        applied_power_dbm: f64,
        resonator_id: impl Into<String>,
    ) -> Result<Self> {
        let r = Self {
            frequencies_hz,
            s21,
            temperature_k,
            applied_power_dbm,
            resonator_id: resonator_id.into(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies_hz.is_empty() {
            return Err(Error::Precondition("empty trace".into()));
        }
        if self.frequencies_hz.len() != self.s21.len() {
            return Err(Error::Precondition(format!(
                "frequency/S21 length mismatch: {} vs {}",
                self.frequencies_hz.len(),
                self.s21.len()
            )));
        }
        if self.frequencies_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("non-monotone frequency".into()));
        }
        if self.frequencies_hz.iter().any(|f| !f.is_finite())
            || self.s21.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::Precondition("non-finite sample in trace".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub amplitude: f64,
    /// Phase at f = 0, wrapped to (−π, π].
    pub phase_offset_rad: f64,
    pub delay_s: f64,
}

impl Default for Background {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            phase_offset_rad: 0.0,
            delay_s: 0.0,
        }
    }
}

/// Parameters of the notch model, without fit diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchParams {
    pub f_r_hz: f64,
    pub q_l: f64,
    pub q_c_abs: f64,
    pub phi0_rad: f64,
    pub background: Background,
}

impl NotchParams {
    pub fn inv_q_i(&self) -> f64 {
        1.0 / self.q_l - self.phi0_rad.cos() / self.q_c_abs
    }

    pub fn q_i(&self) -> f64 {
        1.0 / self.inv_q_i()
    }

    pub fn linewidth_hz(&self) -> f64 {
        self.f_r_hz / self.q_l
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    pub f_r_hz: f64,
    pub q_l: f64,
    pub q_c_abs: f64,
    pub phi0_rad: f64,
    /// Diameter-corrected internal Q; negative or infinite values mean the
    /// fit could not separate internal loss from coupling.
    pub q_i: f64,
    pub background: Background,
    pub fit: FitResult,
}

impl ResonanceFit {
    pub fn notch(&self) -> NotchParams {
        NotchParams {
            f_r_hz: self.f_r_hz,
            q_l: self.q_l,
            q_c_abs: self.q_c_abs,
            phi0_rad: self.phi0_rad,
            background: self.background,
        }
    }

    pub fn inv_q_i(&self) -> f64 {
        self.notch().inv_q_i()
    }

    /// Effective coupling Q seen by the loaded-Q identity, |Q_c|/cos φ0.
    pub fn q_c_effective(&self) -> f64 {
        self.q_c_abs / self.phi0_rad.cos()
    }
}

/// Evaluates the notch model at frequency `f_hz`.
pub fn s21_model(f_hz: f64, p: &NotchParams) -> Complex64 {
    let bg = p.background;
    let env = Complex64::from_polar(bg.amplitude, bg.phase_offset_rad - 2.0 * PI * f_hz * bg.delay_s);
    env * resonance_factor(f_hz, p.f_r_hz, p.q_l, p.q_c_abs, p.phi0_rad)
}

fn resonance_factor(f: f64, f_r: f64, q_l: f64, q_c: f64, phi0: f64) -> Complex64 {
    let x = 2.0 * q_l * (f - f_r) / f_r;
    Complex64::new(1.0, 0.0)
        - Complex64::from_polar(q_l / q_c, phi0) / Complex64::new(1.0, x)
}

/// Samples the model on a frequency grid.
pub fn synthesize(frequencies_hz: &[f64], p: &NotchParams) -> Vec<Complex64> {
    frequencies_hz.iter().map(|&f| s21_model(f, p)).collect()
}

fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn unwrap(phases: &mut [f64]) {
    for i in 1..phases.len() {
        let d = phases[i] - phases[i - 1];
        phases[i] -= 2.0 * PI * (d / (2.0 * PI)).round();
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn wing_indices(n: usize) -> Vec<usize> {
    let per_side = ((n as f64 * WING_FRACTION / 2.0).round() as usize).max(2);
    (0..per_side).chain(n - per_side..n).collect()
}

/// Baseline and robust noise estimate (1.4826·MAD) of |S21| over the wings.
fn wing_statistics(s21: &[Complex64]) -> (f64, f64) {
    let mut amps: Vec<f64> = wing_indices(s21.len()).iter().map(|&i| s21[i].norm()).collect();
    let base = median(&mut amps);
    let mut dev: Vec<f64> = amps.iter().map(|a| (a - base).abs()).collect();
    (base, 1.4826 * median(&mut dev))
}

fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Algebraic (Kasa) circle fit; returns centre and radius.
fn circle_fit(z: &[Complex64]) -> Option<(Complex64, f64)> {
    // minimise Σ (x² + y² + D x + E y + F)²
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in z {
        let row = Vector3::new(p.re, p.im, 1.0);
        let rhs = -(p.re * p.re + p.im * p.im);
        ata += row * row.transpose();
        atb += row * rhs;
    }
    let sol = ata.lu().solve(&atb)?;
    let c = Complex64::new(-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = c.norm_sqr() - sol[2];
    (r2 > 0.0).then(|| (c, r2.sqrt()))
}

/// Fits a notch resonance to a complex S21 trace.
pub fn fit_resonance(trace: &SweepRecord) -> Result<ResonanceFit> {
    trace.validate()?;
    let n = trace.frequencies_hz.len();
    if n < MIN_TRACE_POINTS {
        return Err(Error::Precondition(format!(
            "resonance fit needs >= {MIN_TRACE_POINTS} points, got {n}"
        )));
    }
    let freqs = &trace.frequencies_hz;
    let data = &trace.s21;

    // dip detection on a lightly smoothed amplitude
    let (baseline, noise) = wing_statistics(data);
    let amps: Vec<f64> = data.iter().map(|z| z.norm()).collect();
    let smooth = moving_average(&amps, (n / 100).max(5) | 1);
    let depth = baseline - smooth.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(depth > 3.0 * noise) || depth <= 1e-9 * baseline {
        return Err(Error::NoDip { depth, noise });
    }

    let f_center = 0.5 * (freqs[0] + freqs[n - 1]);
    let span = freqs[n - 1] - freqs[0];

    // stage 1: cable delay from the wings
    let mut phase: Vec<f64> = data.iter().map(|z| z.arg()).collect();
    unwrap(&mut phase);
    let wings = wing_indices(n);
    let (wf, wp): (Vec<f64>, Vec<f64>) = wings.iter().map(|&i| (freqs[i] - f_center, phase[i])).unzip();
    let (slope, _) = linear_fit(&wf, &wp);
    let delay0 = -slope / (2.0 * PI);
    let derotated: Vec<Complex64> = freqs
        .iter()
        .zip(data)
        .map(|(&f, &z)| z * Complex64::from_polar(1.0, 2.0 * PI * (f - f_center) * delay0))
        .collect();

    // stage 2: circle geometry and phase response
    let (center, radius) = circle_fit(&derotated)
        .ok_or_else(|| Error::Analysis("degenerate circle fit".into()))?;
    let ends = derotated[0] + derotated[n - 1] - 2.0 * center;
    let off_dir = if ends.norm() > 0.0 { ends / ends.norm() } else { Complex64::new(1.0, 0.0) };
    let off_guess = center + off_dir * radius;

    let lorentz: Vec<f64> = moving_average(
        &derotated.iter().map(|z| (z - off_guess).norm_sqr()).collect::<Vec<_>>(),
        (n / 200).max(3) | 1,
    );
    let (i_peak, &peak) = lorentz
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let f_r0 = freqs[i_peak];
    let above: Vec<usize> = (0..n).filter(|&i| lorentz[i] >= 0.5 * peak).collect();
    let fwhm = (freqs[*above.last().unwrap()] - freqs[above[0]]).max(2.0 * span / n as f64);
    let q_l0 = f_r0 / fwhm;

    let centered: Vec<Complex64> = derotated.iter().map(|z| z - center).collect();
    let mut theta: Vec<f64> = centered.iter().map(|z| z.arg()).collect();
    unwrap(&mut theta);
    let theta_res0 = theta[i_peak];
    let phase_problem = FitProblem::new(
        |p: &[f64]| {
            let f_r = f_r0 * (1.0 + p[2] / q_l0);
            let q_l = q_l0 * p[1].exp();
            freqs
                .iter()
                .zip(&theta)
                .map(|(&f, &th)| {
                    let model = p[0] + 2.0 * (2.0 * q_l * (1.0 - f / f_r)).atan();
                    wrap_phase(th - model)
                })
                .collect()
        },
        vec![theta_res0, 0.0, 0.0],
    )
    .with_max_iterations(100);
    let pf = least_squares(&phase_problem)?;
    let q_l1 = q_l0 * pf.params[1].exp();
    let f_r1 = f_r0 * (1.0 + pf.params[2] / q_l0);
    let off_res = center + Complex64::from_polar(radius, pf.params[0] + PI);

    let a1 = off_res.norm();
    let alpha_c1 = off_res.arg();
    let q_c1 = (q_l1 * a1 / (2.0 * radius)).max(q_l1 * 1e-3);
    let phi1 = wrap_phase((Complex64::new(1.0, 0.0) - center / off_res).arg());

    // stage 3: full refinement, all parameters O(1) near the start point
    let delay_unit = 1.0 / (2.0 * PI * span);
    let scale = 1.0 / a1;
    let model_at = move |p: &[f64], f: f64| -> Complex64 {
        let a = a1 * p[0];
        let tau = delay0 + p[2] * delay_unit;
        let f_r = f_r1 * (1.0 + p[3] / q_l1);
        let q_l = q_l1 * p[4].exp();
        let q_c = q_c1 * p[5].exp();
        Complex64::from_polar(a, p[1] - 2.0 * PI * (f - f_center) * tau)
            * resonance_factor(f, f_r, q_l, q_c, p[6])
    };
    let full = FitProblem::new(
        |p: &[f64]| {
            let mut r = Vec::with_capacity(2 * n);
            for (&f, &z) in freqs.iter().zip(data) {
                let d = (model_at(p, f) - z) * scale;
                r.push(d.re);
                r.push(d.im);
            }
            r
        },
        vec![1.0, alpha_c1, 0.0, 0.0, 0.0, 0.0, phi1],
    );
    let fit = least_squares(&full)?;
    let p = &fit.params;

    let delay = delay0 + p[2] * delay_unit;
    let notch = NotchParams {
        f_r_hz: f_r1 * (1.0 + p[3] / q_l1),
        q_l: q_l1 * p[4].exp(),
        q_c_abs: q_c1 * p[5].exp(),
        phi0_rad: wrap_phase(p[6]),
        background: Background {
            amplitude: a1 * p[0],
            phase_offset_rad: wrap_phase(p[1] + 2.0 * PI * f_center * delay),
            delay_s: delay,
        },
    };
    if span < MIN_SPAN_LINEWIDTHS * notch.linewidth_hz() {
        return Err(Error::Precondition(format!(
            "trace spans {:.2} linewidths, need >= {MIN_SPAN_LINEWIDTHS}",
            span / notch.linewidth_hz()
        )));
    }
    Ok(ResonanceFit {
        f_r_hz: notch.f_r_hz,
        q_l: notch.q_l,
        q_c_abs: notch.q_c_abs,
        phi0_rad: notch.phi0_rad,
        q_i: notch.q_i(),
        background: notch.background,
        fit,
    })
}

/// Mean intra-resonator photon number for a notch resonator driven at
/// resonance: ⟨n⟩ = 2·Q_l²·P / (|Q_c|·ħ·ω_r²).
pub fn photon_number(q_l: f64, q_c_abs: f64, f_r_hz: f64, applied_power_dbm: f64) -> f64 {
    let w = 2.0 * PI * f_r_hz;
    2.0 * q_l * q_l * dbm_to_watt(applied_power_dbm) / (q_c_abs * HBAR * w * w)
}

/// [`photon_number`] using the quality factors of a fit.
pub fn photon_number_for(fit: &ResonanceFit, applied_power_dbm: f64) -> f64 {
    photon_number(fit.q_l, fit.q_c_abs, fit.f_r_hz, applied_power_dbm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    CouplingLimited,
    LossLimited,
}

/// Labels each temperature point: coupling-limited when Q_i >= r·|Q_c|.
/// Output is sorted by temperature.
pub fn classify_regime(fits_vs_t: &[(f64, &ResonanceFit)], threshold: f64) -> Result<Vec<(f64, Regime)>> {
    if fits_vs_t.len() < 2 {
        return Err(Error::Precondition("regime classification needs >= 2 temperatures".into()));
    }
    let mut out: Vec<(f64, Regime)> = fits_vs_t
        .iter()
        .map(|(t, fit)| {
            let coupled = fit.inv_q_i() <= 1.0 / (threshold * fit.q_c_abs);
            (*t, if coupled { Regime::CouplingLimited } else { Regime::LossLimited })
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q_l: f64, q_c: f64, phi0: f64) -> NotchParams {
        NotchParams {
            f_r_hz: 3.654e9,
            q_l,
            q_c_abs: q_c,
            phi0_rad: phi0,
            background: Background::default(),
        }
    }

    fn grid(p: &NotchParams, linewidths: f64, n: usize) -> Vec<f64> {
        let half = 0.5 * linewidths * p.linewidth_hz();
        (0..n)
            .map(|i| p.f_r_hz - half + 2.0 * half * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn model_closed_forms() {
        let p = params(1e5, 2e5, 0.0);
        let on = s21_model(p.f_r_hz, &p);
        assert!((on - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((p.q_i() - 2e5).abs() < 1e-6);
        let far = s21_model(p.f_r_hz * 1.01, &p);
        assert!((far.norm() - 1.0).abs() < 1e-3);
        let p = params(9e4, 1e5, 0.0);
        assert!((s21_model(p.f_r_hz, &p) - Complex64::new(1.0 - 0.9, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reference_trace_round_trip() {
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
        let f = grid(&p, 5.0, 2001);
        let rec = SweepRecord::new(f.clone(), synthesize(&f, &p), 0.02, -140.0, "r").unwrap();
        let fit = fit_resonance(&rec).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(fit.f_r_hz, p.f_r_hz) < 1e-3);
        assert!(rel(fit.q_l, p.q_l) < 1e-3);
        assert!(rel(fit.q_c_abs, p.q_c_abs) < 1e-3);
        assert!(rel(fit.phi0_rad, p.phi0_rad) < 1e-3);
        assert!(rel(fit.q_i, p.q_i()) < 1e-3);
        assert!(rel(fit.background.amplitude, 0.98) < 1e-3);
        assert!(rel(fit.background.delay_s, 40e-9) < 1e-3);
    }

    #[test]
    fn flat_trace_has_no_dip() {
        let f: Vec<f64> = (0..500).map(|i| 3.6e9 + i as f64 * 100.0).collect();
        let s = vec![Complex64::new(0.7, 0.2); 500];
        let rec = SweepRecord::new(f, s, 0.1, -120.0, "r").unwrap();
        assert!(matches!(fit_resonance(&rec), Err(Error::NoDip { .. })));
    }

    #[test]
    fn too_few_points() {
        let p = params(1e4, 2e4, 0.0);
        let f = grid(&p, 6.0, 40);
        let rec = SweepRecord::new(f.clone(), synthesize(&f, &p), 0.1, -120.0, "r").unwrap();
        assert!(matches!(fit_resonance(&rec), Err(Error::Precondition(_))));
    }

    #[test]
    fn record_validation() {
        assert!(SweepRecord::new(vec![], vec![], 0.1, 0.0, "r").is_err());
        assert!(SweepRecord::new(vec![2.0, 1.0], vec![Complex64::default(); 2], 0.1, 0.0, "r").is_err());
        assert!(SweepRecord::new(vec![1.0, 2.0], vec![Complex64::default(); 3], 0.1, 0.0, "r").is_err());
    }

    #[test]
    fn photon_number_scaling() {
        let n = photon_number(9e4, 1e5, 3.654e9, -140.0);
        // independent scalar evaluation: 2·Q_l²·1e-17 W / (Q_c·ħ·(2π f)²)
        let hbar = 6.626_070_15e-34 / (2.0 * PI);
        let w = 2.0 * PI * 3.654e9;
        let want = 2.0 * 9e4 * 9e4 * 1e-17 / (1e5 * hbar * w * w);
        assert!(((n - want) / want).abs() < 1e-12);
        assert!(((n - 29.143_521_701_059_72) / 29.143_521_701_059_72).abs() < 1e-12, "{n}");
        let doubled = photon_number(9e4, 1e5, 3.654e9, -140.0 + 10.0 * 2f64.log10());
        assert!((doubled / n - 2.0).abs() < 1e-12);
        assert_eq!(photon_number(9e4, 1e5, 3.654e9, f64::NEG_INFINITY), 0.0);
    }

    fn fake_fit(q_i: f64, q_c: f64) -> ResonanceFit {
        let q_l = 1.0 / (1.0 / q_i + 1.0 / q_c);
        ResonanceFit {
            f_r_hz: 3.654e9,
            q_l,
            q_c_abs: q_c,
            phi0_rad: 0.0,
            q_i,
            background: Background::default(),
            fit: FitResult {
                params: vec![],
                residual_norm: 0.0,
                jacobian_condition_proxy: 1.0,
                iterations: 0,
                converged: true,
                per_param_stderr: vec![],
                gradient_norm: 0.0,
                residual_history: vec![],
            },
        }
    }

    #[test]
    fn regime_labels() {
        let hi = fake_fit(1e6, 1e5);
        let lo = fake_fit(1e4, 1e5);
        let all_hi = classify_regime(&[(0.3, &hi), (0.1, &hi)], 3.0).unwrap();
        assert_eq!(all_hi.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0.1, 0.3]);
        assert!(all_hi.iter().all(|x| x.1 == Regime::CouplingLimited));
        let all_lo = classify_regime(&[(0.1, &lo), (0.2, &lo)], 3.0).unwrap();
        assert!(all_lo.iter().all(|x| x.1 == Regime::LossLimited));
        assert!(classify_regime(&[(0.1, &lo)], 3.0).is_err());
    }
}
