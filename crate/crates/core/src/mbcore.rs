//! Superconductor electrodynamics in the low-temperature, low-frequency limit.
//!
//! Energies are carried in joules internally. The only eV quantities are the
//! density of states on [`Material`] (which is how it is usually tabulated)
//! and the values returned by [`delta0`] / [`gap_at`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{joule_to_ev, per_m3_to_per_um3, EV, HBAR, K_B, MU_0};
use crate::error::{Error, Result};
use crate::numerics::{bessel_i0_scaled, bessel_k0_scaled};

/// BCS weak-coupling ratio Δ0 / (kB·Tc).
pub const BCS_GAP_RATIO: f64 = 1.76;
/// Slope constant in the tanh interpolation of Δ(T).
const TANH_GAP_SLOPE: f64 = 1.74;
/// Ratio above which ħω/Δ0 or kB·T/Δ0 is flagged as outside the approximation.
pub const VALIDITY_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GapModel {
    /// Δ(T) = Δ0.
    ConstantDelta0,
    /// Δ(T) = Δ0·tanh(1.74·sqrt(Tc/T − 1)).
    #[default]
    #[serde(alias = "tanh")]
    TanhInterpolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub tc_k: f64,
    /// Single-spin density of states at the Fermi level [states/(m³·eV)].
    pub n0_per_m3_ev: f64,
    pub sigma_n_s_per_m: f64,
    pub gap_model: GapModel,
}

impl Material {
    pub fn new(
        name: impl Into<String>,
        tc_k: f64,
        n0_per_m3_ev: f64,
        sigma_n_s_per_m: f64,
        gap_model: GapModel,
    ) -> Result<Self> {
        let m = Self {
            name: name.into(),
            tc_k,
            n0_per_m3_ev,
            sigma_n_s_per_m,
            gap_model,
        };
        m.validate()?;
        Ok(m)
    }

    /// Same as [`Material::new`] with N0 given per joule instead of per eV.
    pub fn with_n0_per_m3_j(
        name: impl Into<String>,
        tc_k: f64,
        n0_per_m3_j: f64,
        sigma_n_s_per_m: f64,
        gap_model: GapModel,
    ) -> Result<Self> {
        Self::new(name, tc_k, n0_per_m3_j * EV, sigma_n_s_per_m, gap_model)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.tc_k) || !ok(self.n0_per_m3_ev) || !ok(self.sigma_n_s_per_m) {
            return Err(Error::Config(format!(
                "material '{}': tc_k, n0 and sigma_n must be finite and > 0",
                self.name
            )));
        }
        Ok(())
    }

    /// N0 in states/(m³·J).
    pub fn n0_per_m3_j(&self) -> f64 {
        self.n0_per_m3_ev / EV
    }

    /// Δ0 in joules.
    pub fn delta0_j(&self) -> f64 {
        BCS_GAP_RATIO * K_B * self.tc_k
    }

    /// Δ(T) in joules; see [`gap_at`].
    pub fn gap_j(&self, t_k: f64) -> Result<f64> {
        if !(t_k >= 0.0 && t_k < self.tc_k) {
            return Err(Error::domain(
                "gap_at",
                format!("T = {t_k} K outside [0, Tc = {} K)", self.tc_k),
            ));
        }
        let d0 = self.delta0_j();
        Ok(match self.gap_model {
            GapModel::ConstantDelta0 => d0,
            GapModel::TanhInterpolation if t_k == 0.0 => d0,
            GapModel::TanhInterpolation => {
                d0 * (TANH_GAP_SLOPE * (self.tc_k / t_k - 1.0).sqrt()).tanh()
            }
        })
    }
}

/// Zero-temperature gap Δ0 = 1.76·kB·Tc, in eV.
pub fn delta0(material: &Material) -> f64 {
    joule_to_ev(material.delta0_j())
}

/// Temperature-dependent gap in eV, for 0 <= T < Tc.
pub fn gap_at(material: &Material, t_k: f64) -> Result<f64> {
    material.gap_j(t_k).map(joule_to_ev)
}

fn omega(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

fn check_frequency(op: &'static str, f_hz: f64) -> Result<()> {
    if !(f_hz.is_finite() && f_hz > 0.0) {
        return Err(Error::domain(op, format!("frequency must be > 0, got {f_hz}")));
    }
    Ok(())
}

fn check_open_temperature(op: &'static str, m: &Material, t_k: f64) -> Result<()> {
    if !(t_k > 0.0 && t_k < m.tc_k) {
        return Err(Error::domain(op, format!("T = {t_k} K outside (0, Tc = {} K)", m.tc_k)));
    }
    Ok(())
}

/// σ1/σn = (4Δ0/ħω)·e^{−Δ0/kT}·sinh(ξ)·K0(ξ), ξ = ħω/2kT.
pub fn sigma1_ratio(material: &Material, t_k: f64, f_hz: f64) -> Result<f64> {
    check_open_temperature("sigma1_ratio", material, t_k)?;
    check_frequency("sigma1_ratio", f_hz)?;
    let d0 = material.delta0_j();
    let hw = HBAR * omega(f_hz);
    let kt = K_B * t_k;
    let xi = hw / (2.0 * kt);
    // sinh(ξ)·K0(ξ) = ½(1 − e^{−2ξ})·[e^ξ K0(ξ)], finite for any ξ
    let sinh_k0 = 0.5 * (-(-2.0 * xi).exp_m1()) * bessel_k0_scaled(xi)?;
    Ok(4.0 * d0 / hw * (-d0 / kt).exp() * sinh_k0)
}

/// σ2/σn = (πΔ0/ħω)·[1 − sqrt(2πkT/Δ0)·e^{−Δ0/kT} − 2·e^{−Δ0/kT}·e^{−ξ}·I0(ξ)].
pub fn sigma2_ratio(material: &Material, t_k: f64, f_hz: f64) -> Result<f64> {
    if !(t_k >= 0.0 && t_k < material.tc_k) {
        return Err(Error::domain(
            "sigma2_ratio",
            format!("T = {t_k} K outside [0, Tc = {} K)", material.tc_k),
        ));
    }
    check_frequency("sigma2_ratio", f_hz)?;
    let ceiling = PI * material.delta0_j() / (HBAR * omega(f_hz));
    Ok(ceiling - sigma2_deficit_ratio(material, t_k, f_hz)?)
}

/// πΔ0/ħω − σ2/σn, evaluated without cancellation.
///
/// Below about 0.05·Tc the thermal correction to σ2 is smaller than one ulp
/// of σ2 itself, so σ2 rounds to its ceiling; the deficit still resolves
/// the temperature dependence there.
pub fn sigma2_deficit_ratio(material: &Material, t_k: f64, f_hz: f64) -> Result<f64> {
    if !(t_k >= 0.0 && t_k < material.tc_k) {
        return Err(Error::domain(
            "sigma2_deficit_ratio",
            format!("T = {t_k} K outside [0, Tc = {} K)", material.tc_k),
        ));
    }
    check_frequency("sigma2_deficit_ratio", f_hz)?;
    if t_k == 0.0 {
        return Ok(0.0);
    }
    let d0 = material.delta0_j();
    let hw = HBAR * omega(f_hz);
    let kt = K_B * t_k;
    let xi = hw / (2.0 * kt);
    let boltz = (-d0 / kt).exp();
    let terms = (2.0 * PI * kt / d0).sqrt() * boltz + 2.0 * boltz * bessel_i0_scaled(xi)?;
    Ok(PI * d0 / hw * terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityWarning {
    /// ħω/Δ0 above [`VALIDITY_THRESHOLD`].
    PhotonEnergyNotSmall,
    /// kB·T/Δ0 above [`VALIDITY_THRESHOLD`].
    ThermalEnergyNotSmall,
}

/// Flags for inputs that approach the edge of the ħω ≪ Δ0, kT ≪ Δ0 regime.
pub fn validity_warnings(material: &Material, t_k: f64, f_hz: f64) -> Vec<ValidityWarning> {
    let d0 = material.delta0_j();
    let mut w = Vec::new();
    if HBAR * omega(f_hz) / d0 > VALIDITY_THRESHOLD {
        w.push(ValidityWarning::PhotonEnergyNotSmall);
    }
    if K_B * t_k / d0 > VALIDITY_THRESHOLD {
        w.push(ValidityWarning::ThermalEnergyNotSmall);
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexConductivity {
    pub sigma1_over_sigman: f64,
    pub sigma2_over_sigman: f64,
    pub temperature_k: f64,
    pub frequency_hz: f64,
    pub warnings: Vec<ValidityWarning>,
}

pub fn complex_conductivity(material: &Material, t_k: f64, f_hz: f64) -> Result<ComplexConductivity> {
    Ok(ComplexConductivity {
        sigma1_over_sigman: sigma1_ratio(material, t_k, f_hz)?,
        sigma2_over_sigman: sigma2_ratio(material, t_k, f_hz)?,
        temperature_k: t_k,
        frequency_hz: f_hz,
        warnings: validity_warnings(material, t_k, f_hz),
    })
}

/// Thermal quasiparticle density in m⁻³: 2·N0·sqrt(2π·kT·Δ(T))·e^{−Δ(T)/kT}.
pub fn nqp_thermal_per_m3(material: &Material, t_k: f64) -> Result<f64> {
    if !(t_k > 0.0 && t_k <= 0.5 * material.tc_k) {
        return Err(Error::domain(
            "nqp_thermal",
            format!("T = {t_k} K outside (0, Tc/2 = {} K]", 0.5 * material.tc_k),
        ));
    }
    let gap = material.gap_j(t_k)?;
    let kt = K_B * t_k;
    Ok(2.0 * material.n0_per_m3_j() * (2.0 * PI * kt * gap).sqrt() * (-gap / kt).exp())
}

/// Thermal quasiparticle density in µm⁻³.
pub fn nqp_thermal(material: &Material, t_k: f64) -> Result<f64> {
    nqp_thermal_per_m3(material, t_k).map(per_m3_to_per_um3)
}

/// Natural log of the thermal density in µm⁻³; finite where the density
/// itself underflows.
pub fn ln_nqp_thermal(material: &Material, t_k: f64) -> Result<f64> {
    nqp_thermal_per_m3(material, t_k)?;
    let gap = material.gap_j(t_k)?;
    let kt = K_B * t_k;
    Ok(per_m3_to_per_um3(2.0 * material.n0_per_m3_j() * (2.0 * PI * kt * gap).sqrt()).ln() - gap / kt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceImpedance {
    pub rs_ohm: f64,
    pub ls_henry: f64,
    pub frequency_hz: f64,
}

impl SurfaceImpedance {
    /// Rs / (ωLs).
    pub fn loss_ratio(&self) -> f64 {
        self.rs_ohm / (omega(self.frequency_hz) * self.ls_henry)
    }
}

/// Zs = sqrt(jμ0ω / (σ1 − jσ2)) = Rs + jωLs, principal branch.
pub fn surface_impedance(material: &Material, t_k: f64, f_hz: f64) -> Result<SurfaceImpedance> {
    let sn = material.sigma_n_s_per_m;
    let s1 = sigma1_ratio(material, t_k, f_hz)? * sn;
    let s2 = sigma2_ratio(material, t_k, f_hz)? * sn;
    let w = omega(f_hz);
    let zs = principal_sqrt(Complex64::new(0.0, MU_0 * w) / Complex64::new(s1, -s2));
    Ok(SurfaceImpedance {
        rs_ohm: zs.re,
        ls_henry: zs.im / w,
        frequency_hz: f_hz,
    })
}

/// Principal square root without the polar round trip, which loses the real
/// part (~1e-17 relative floor) next to the negative real axis.
fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, z.im);
    }
    let t = ((z.re.abs() + z.norm()) / 2.0).sqrt();
    if z.re >= 0.0 {
        Complex64::new(t, z.im / (2.0 * t))
    } else {
        Complex64::new(z.im.abs() / (2.0 * t), t.copysign(z.im))
    }
}
