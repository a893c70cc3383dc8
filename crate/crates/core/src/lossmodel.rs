//! Loss channels and the loss-budget algebra.
//!
//! All losses are dimensionless inverse quality factors (δ = 1/Q).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{per_m3_to_per_um3, H, K_B};
use crate::error::{Error, Result};
use crate::mbcore::{self, Material};
use crate::numerics::{least_squares, FitProblem, FitResult};

pub const DEFAULT_BETA_BOUNDS: (f64, f64) = (0.1, 2.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    pub f_r_hz: f64,
    /// Kinetic-inductance fraction L_k / L_total.
    pub alpha: f64,
    pub material: Material,
}

impl ResonatorParams {
    pub fn new(f_r_hz: f64, alpha: f64, material: Material) -> Result<Self> {
        let r = Self {
            f_r_hz,
            alpha,
            material,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_r_hz.is_finite() && self.f_r_hz > 0.0) {
            return Err(Error::Config(format!("f_r must be > 0, got {}", self.f_r_hz)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        self.material.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsParams {
    /// Intrinsic TLS loss 1/Q_TLS⁰.
    pub inv_q_tls0: f64,
    /// Critical photon number.
    pub n_c: f64,
    /// Saturation exponent.
    pub beta: f64,
}

impl TlsParams {
    pub fn new(inv_q_tls0: f64, n_c: f64, beta: f64) -> Result<Self> {
        if !(inv_q_tls0 > 0.0 && n_c > 0.0 && beta > 0.0)
            || !(inv_q_tls0.is_finite() && n_c.is_finite() && beta.is_finite())
        {
            return Err(Error::Precondition(format!(
                "TLS parameters must be finite and > 0: ({inv_q_tls0}, {n_c}, {beta})"
            )));
        }
        Ok(Self {
            inv_q_tls0,
            n_c,
            beta,
        })
    }
}

/// δ_TLS = (1/Q_TLS⁰)·tanh(h f_r / 2kT) / sqrt(1 + (n/n_c)^β).
pub fn delta_tls(params: &TlsParams, t_k: f64, n_ph: f64, f_r_hz: f64) -> Result<f64> {
    if !(t_k > 0.0 && t_k.is_finite()) {
        return Err(Error::domain("delta_tls", format!("T must be > 0, got {t_k}")));
    }
    if !(n_ph >= 0.0) {
        return Err(Error::domain("delta_tls", format!("n_ph must be >= 0, got {n_ph}")));
    }
    Ok(tls_shape(params, t_k, n_ph, f_r_hz))
}

fn tls_shape(p: &TlsParams, t_k: f64, n_ph: f64, f_r_hz: f64) -> f64 {
    let thermal = (H * f_r_hz / (2.0 * K_B * t_k)).tanh();
    p.inv_q_tls0 * thermal / (1.0 + (n_ph / p.n_c).powf(p.beta)).sqrt()
}

/// Quasiparticle loss from the thermal density:
/// δ_qp = (α/π)·sqrt(2Δ(T)/h f_r)·n_qp(T)/(N0·Δ(T)).
pub fn delta_qp_theory(res: &ResonatorParams, t_k: f64) -> Result<f64> {
    let n = mbcore::nqp_thermal_per_m3(&res.material, t_k)?;
    delta_qp_from_density_per_m3(res, t_k, n)
}

/// The same quasiparticle loss law applied to an arbitrary density in m⁻³.
pub fn delta_qp_from_density_per_m3(res: &ResonatorParams, t_k: f64, n_per_m3: f64) -> Result<f64> {
    let gap = res.material.gap_j(t_k)?;
    Ok(res.alpha / PI * (2.0 * gap / (H * res.f_r_hz)).sqrt() * n_per_m3
        / (res.material.n0_per_m3_j() * gap))
}

/// Internal loss from the surface impedance: α·Rs/(ωLs).
pub fn delta_i_theory(res: &ResonatorParams, t_k: f64) -> Result<f64> {
    let zs = mbcore::surface_impedance(&res.material, t_k, res.f_r_hz)?;
    Ok(res.alpha * zs.loss_ratio())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub delta_qp: f64,
    /// The raw subtraction was negative and has been set to zero.
    pub clamped: bool,
}

/// δ_qp,measured = 1/Q_i,measured − δ_TLS(T, n_ph), clamped at zero.
pub fn extract_delta_qp_measured(
    inv_qi_measured: f64,
    tls: &TlsParams,
    t_k: f64,
    n_ph: f64,
    f_r_hz: f64,
) -> Result<Extraction> {
    if !(inv_qi_measured > 0.0 && inv_qi_measured.is_finite()) {
        return Err(Error::Precondition(format!(
            "1/Q_i must be finite and > 0, got {inv_qi_measured}"
        )));
    }
    let raw = inv_qi_measured - delta_tls(tls, t_k, n_ph, f_r_hz)?;
    Ok(if raw < 0.0 {
        Extraction {
            delta_qp: 0.0,
            clamped: true,
        }
    } else {
        Extraction {
            delta_qp: raw,
            clamped: false,
        }
    })
}

/// Inverse of the quasiparticle loss law, in µm⁻³:
/// n_qp = δ_qp·N0·Δ(T)·(π/α)·sqrt(h f_r / 2Δ(T)).
pub fn nqp_from_delta(delta_qp: f64, res: &ResonatorParams, t_k: f64) -> Result<f64> {
    if !(delta_qp >= 0.0) {
        return Err(Error::domain("nqp_from_delta", format!("delta_qp must be >= 0, got {delta_qp}")));
    }
    let gap = res.material.gap_j(t_k)?;
    let n = delta_qp * res.material.n0_per_m3_j() * gap * (PI / res.alpha)
        * (H * res.f_r_hz / (2.0 * gap)).sqrt();
    Ok(per_m3_to_per_um3(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlsFit {
    pub params: TlsParams,
    /// Power-independent loss floor.
    pub delta_floor: f64,
    pub fit: FitResult,
}

impl TlsFit {
    pub fn predict(&self, t_k: f64, n_ph: f64, f_r_hz: f64) -> f64 {
        tls_shape(&self.params, t_k, n_ph, f_r_hz) + self.delta_floor
    }
}

/// Fits 1/Q_i(n) = δ_TLS(n) + δ_floor to a power sweep at fixed temperature.
///
/// `points` are (n_ph, 1/Q_i) pairs. Residuals are relative, so the fit is
/// insensitive to the absolute loss scale; it is restarted from a few
/// exponents and the best converged solution is kept.
pub fn fit_tls_power_sweep(
    points: &[(f64, f64)],
    t_k: f64,
    f_r_hz: f64,
    beta_bounds: (f64, f64),
) -> Result<TlsFit> {
    if points.len() < 5 {
        return Err(Error::Precondition(format!(
            "TLS fit needs >= 5 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(n, y)| !(n > 0.0 && n.is_finite() && y > 0.0 && y.is_finite()))
    {
        return Err(Error::Precondition(
            "TLS fit needs finite n_ph > 0 and 1/Q_i > 0".into(),
        ));
    }
    let n_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let n_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if n_max / n_min < 100.0 {
        return Err(Error::Precondition(format!(
            "TLS fit needs >= 2 decades of n_ph, got [{n_min:.3e}, {n_max:.3e}]"
        )));
    }
    if !(beta_bounds.0 > 0.0 && beta_bounds.0 < beta_bounds.1) {
        return Err(Error::Precondition(format!("invalid beta bounds {beta_bounds:?}")));
    }
    if !(t_k > 0.0) {
        return Err(Error::domain("fit_tls_power_sweep", format!("T must be > 0, got {t_k}")));
    }

    let y_max = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let y_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let thermal = (H * f_r_hz / (2.0 * K_B * t_k)).tanh();
    let scale = y_max;

    // θ = [ln(q0/scale), ln n_c, β, floor/scale]
    let residual = |theta: &[f64]| -> Vec<f64> {
        let q0 = scale * theta[0].exp();
        let n_c = theta[1].exp();
        let floor = scale * theta[3];
        points
            .iter()
            .map(|&(n, y)| {
                let model = q0 * thermal / (1.0 + (n / n_c).powf(theta[2])).sqrt() + floor;
                model / y - 1.0
            })
            .collect()
    };

    let lower = vec![-40.0, (n_min / 1e3).ln(), beta_bounds.0, 0.0];
    let upper = vec![40.0, (n_max * 1e3).ln(), beta_bounds.1, 1.0];

    // knee guess: where the data sit halfway between the extremes
    let half = 0.5 * (y_max + y_min);
    let knee = points
        .iter()
        .min_by(|a, b| (a.1 - half).abs().total_cmp(&(b.1 - half).abs()))
        .map(|p| p.0)
        .unwrap();
    let floor0 = 0.5 * y_min / scale;
    let amp0 = ((y_max - 0.5 * y_min).max(0.1 * y_max) / (scale * thermal))
        .ln()
        .clamp(lower[0], upper[0]);

    let mut best: Option<FitResult> = None;
    for beta0 in [0.5, 1.0, 1.5] {
        for knee_factor in [1.0, 0.1, 10.0] {
            let init = vec![
                amp0,
                (knee * knee_factor).ln().clamp(lower[1], upper[1]),
                f64::clamp(beta0, beta_bounds.0, beta_bounds.1),
                floor0,
            ];
            let problem = FitProblem::new(residual, init).with_bounds(lower.clone(), upper.clone());
            let fit = least_squares(&problem)?;
            let better = match &best {
                None => true,
                Some(b) => fit.residual_norm < b.residual_norm,
            };
            if better {
                best = Some(fit);
            }
        }
    }
    let fit = best.expect("at least one start");
    let params = TlsParams {
        inv_q_tls0: scale * fit.params[0].exp(),
        n_c: fit.params[1].exp(),
        beta: fit.params[2],
    };
    Ok(TlsFit {
        params,
        delta_floor: scale * fit.params[3],
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub temperature_k: f64,
    pub n_ph: f64,
    /// Measured 1/Q_i.
    pub delta_total: f64,
    pub delta_tls: f64,
    pub delta_qp: f64,
    pub delta_other: f64,
    /// A channel exceeded the remaining measured loss and was capped so that
    /// all components stay non-negative.
    pub clamped: bool,
}

impl LossBudget {
    /// Splits `total` into TLS, quasiparticle and remainder, capping each
    /// channel at what is left so every component is >= 0.
    fn from_channels(t_k: f64, n_ph: f64, total: f64, tls: f64, qp: f64) -> Self {
        let tls_c = tls.min(total);
        let qp_c = qp.min(total - tls_c);
        let other = total - tls_c - qp_c;
        Self {
            temperature_k: t_k,
            n_ph,
            delta_total: total,
            delta_tls: tls_c,
            delta_qp: qp_c,
            delta_other: other,
            clamped: tls_c < tls || qp_c < qp,
        }
    }
}

/// Budget with the quasiparticle channel absorbing everything above TLS.
///
/// `delta_other` is zero here; use [`budget_against_theory`] to see the loss
/// that the quasiparticle theory does not account for.
pub fn budget_at(
    res: &ResonatorParams,
    tls: &TlsParams,
    t_k: f64,
    n_ph: f64,
    inv_qi_measured: f64,
) -> Result<LossBudget> {
    res.validate()?;
    let tls_loss = delta_tls(tls, t_k, n_ph, res.f_r_hz)?;
    let ext = extract_delta_qp_measured(inv_qi_measured, tls, t_k, n_ph, res.f_r_hz)?;
    let mut b = LossBudget::from_channels(t_k, n_ph, inv_qi_measured, tls_loss, ext.delta_qp);
    b.clamped |= ext.clamped;
    Ok(b)
}

/// Budget with the quasiparticle channel fixed by the surface-impedance
/// theory; `delta_other` is the excess the measurement shows beyond TLS and
/// thermal quasiparticles.
pub fn budget_against_theory(
    res: &ResonatorParams,
    tls: &TlsParams,
    t_k: f64,
    n_ph: f64,
    inv_qi_measured: f64,
) -> Result<LossBudget> {
    if !(inv_qi_measured > 0.0 && inv_qi_measured.is_finite()) {
        return Err(Error::Precondition(format!(
            "1/Q_i must be finite and > 0, got {inv_qi_measured}"
        )));
    }
    let tls_loss = delta_tls(tls, t_k, n_ph, res.f_r_hz)?;
    let qp = delta_i_theory(res, t_k)?;
    Ok(LossBudget::from_channels(t_k, n_ph, inv_qi_measured, tls_loss, qp))
}
