//! Forward simulator for synthetic sweep datasets.
//!
//! For every (resonator, T, P) grid point the internal loss is
//! 1/Q_i = δ_TLS(T, n_ph) + δ_qp(n_thermal(T) + n_excess), the photon number
//! is solved self-consistently with the loaded Q it implies, and the notch
//! trace is sampled with [`crate::resfit::s21_model`].
//!
//! Noise is additive complex Gaussian with equal variance per quadrature,
//! σ = a·10^(−snr/20)/√2, so the total noise power sits `snr_db` below the
//! off-resonant carrier. The random stream is ChaCha8 keyed by the scenario
//! seed, one stream per grid point (stream id = flat grid index), and
//! uniforms are mapped to normals by the Box–Muller transform. Output is
//! therefore bit-identical for a given spec regardless of thread count.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::per_um3_to_per_m3;
use crate::error::{Error, Result};
use crate::lossmodel::{self, ResonatorParams, TlsParams};
use crate::mbcore::{self, Material};
use crate::numfmt::num;
use crate::resfit::{self, Background, NotchParams, SweepRecord};

pub const FIXED_POINT_MAX_ITERATIONS: usize = 20;
pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    pub id: String,
    pub resonator: ResonatorParams,
    pub tls: TlsParams,
    pub q_c_abs: f64,
    pub phi0_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Carrier-to-noise ratio; `f64::INFINITY` turns noise off.
    pub snr_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub material: Material,
    pub resonators: Vec<ResonatorSpec>,
    pub temperature_grid_k: Vec<f64>,
    pub power_grid_dbm: Vec<f64>,
    pub noise: NoiseSpec,
    pub background: Background,
    /// Temperature-independent excess quasiparticle density, µm⁻³.
    pub excess_density_per_um3: f64,
    pub points_per_trace: usize,
    /// Trace window width in loaded linewidths, centred on f_r.
    pub span_linewidths: f64,
}

impl ScenarioSpec {
    pub fn new(material: Material, resonators: Vec<ResonatorSpec>, temperature_grid_k: Vec<f64>, power_grid_dbm: Vec<f64>) -> Self {
        Self {
            material,
            resonators,
            temperature_grid_k,
            power_grid_dbm,
            noise: NoiseSpec {
                snr_db: f64::INFINITY,
                seed: 0,
            },
            background: Background::default(),
            excess_density_per_um3: 0.0,
            points_per_trace: 2001,
            span_linewidths: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if self.resonators.is_empty() || self.temperature_grid_k.is_empty() || self.power_grid_dbm.is_empty() {
            return Err(Error::Config("scenario grids and resonator list must be non-empty".into()));
        }
        if self.noise.snr_db.is_nan() || self.noise.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("snr_db must be finite or +inf, got {}", self.noise.snr_db)));
        }
        if self.temperature_grid_k.iter().any(|&t| !(t > 0.0 && t < self.material.tc_k / 2.0)) {
            return Err(Error::Config("temperatures must lie in (0, Tc/2)".into()));
        }
        if self.power_grid_dbm.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("powers must be finite".into()));
        }
        if !(self.excess_density_per_um3 >= 0.0) {
            return Err(Error::Config("excess density must be >= 0".into()));
        }
        if self.points_per_trace < resfit::MIN_TRACE_POINTS || !(self.span_linewidths >= resfit::MIN_SPAN_LINEWIDTHS) {
            return Err(Error::Config(format!(
                "traces need >= {} points over >= {} linewidths",
                resfit::MIN_TRACE_POINTS,
                resfit::MIN_SPAN_LINEWIDTHS
            )));
        }
        let bg = self.background;
        if !(bg.amplitude > 0.0 && bg.amplitude.is_finite() && bg.phase_offset_rad.is_finite() && bg.delay_s.is_finite()) {
            return Err(Error::Config("background must be finite with amplitude > 0".into()));
        }
        for r in &self.resonators {
            r.resonator.validate()?;
            if r.resonator.material != self.material {
                return Err(Error::Config(format!("resonator {} uses a material other than the scenario's", r.id)));
            }
            if !(r.q_c_abs > 0.0 && r.q_c_abs.is_finite()) || !(r.phi0_rad.abs() < PI / 2.0) {
                return Err(Error::Config(format!("resonator {}: need Q_c > 0 and |phi0| < pi/2", r.id)));
            }
        }
        Ok(())
    }
}

/// Returns a copy of `spec` with `n_x_per_um3` added to the excess density.
pub fn inject_nonequilibrium(spec: &ScenarioSpec, n_x_per_um3: f64) -> Result<ScenarioSpec> {
    if !(n_x_per_um3 >= 0.0 && n_x_per_um3.is_finite()) {
        return Err(Error::domain("inject_nonequilibrium", format!("n_x must be >= 0, got {n_x_per_um3}")));
    }
    let mut out = spec.clone();
    out.excess_density_per_um3 += n_x_per_um3;
    Ok(out)
}

/// Generator state behind one synthetic trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub temperature_k: f64,
    pub power_dbm: f64,
    pub n_ph: f64,
    pub notch: NotchParams,
    pub q_i: f64,
    pub delta_tls: f64,
    pub delta_qp_thermal: f64,
    pub delta_qp_excess: f64,
    pub fixed_point_iterations: usize,
    pub fixed_point_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSweep {
    pub record: SweepRecord,
    pub truth: GroundTruth,
}

struct FixedPoint {
    n_ph: f64,
    iterations: usize,
    converged: bool,
}

/// Solves n = g(n), with g the photon number implied by the loaded Q at n.
///
/// Newton steps on ln n − ln g(n); g is increasing and saturating in n, so
/// the log form converges in a handful of steps from n = g(0).
fn solve_photon_number(g: impl Fn(f64) -> f64) -> FixedPoint {
    let mut x = g(0.0).ln();
    for it in 1..=FIXED_POINT_MAX_ITERATIONS {
        let h = |x: f64| g(x.exp()).ln() - x;
        let hx = h(x);
        let step = 1e-6 * x.abs().max(1.0);
        let dh = (h(x + step) - hx) / step;
        let next = if dh < 0.0 { x - hx / dh } else { x + hx };
        let done = (next - x).abs() <= FIXED_POINT_TOLERANCE;
        x = next;
        if done {
            return FixedPoint {
                n_ph: x.exp(),
                iterations: it,
                converged: true,
            };
        }
    }
    FixedPoint {
        n_ph: x.exp(),
        iterations: FIXED_POINT_MAX_ITERATIONS,
        converged: false,
    }
}

fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // 1 − u keeps the log argument in (0, 1]
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    (r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
}

/// Adds complex Gaussian noise `noise.snr_db` below a carrier of magnitude
/// `amplitude`, drawn from stream `stream` of the seeded generator.
pub fn add_noise(s21: &mut [Complex64], amplitude: f64, noise: NoiseSpec, stream: u64) {
    if !noise.snr_db.is_finite() {
        return;
    }
    let sigma = amplitude * 10f64.powf(-noise.snr_db / 20.0) / 2f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(stream);
    for z in s21 {
        let (a, b) = standard_normal_pair(&mut rng);
        *z += Complex64::new(sigma * a, sigma * b);
    }
}

fn grid_point(spec: &ScenarioSpec, res: &ResonatorSpec, t_k: f64, p_dbm: f64, stream: u64) -> Result<GeneratedSweep> {
    let rp = &res.resonator;
    let f_r = rp.f_r_hz;
    let thermal = lossmodel::delta_qp_theory(rp, t_k)?;
    let excess = lossmodel::delta_qp_from_density_per_m3(rp, t_k, per_um3_to_per_m3(spec.excess_density_per_um3))?;
    let inv_qc = res.phi0_rad.cos() / res.q_c_abs;
    let q_l_at = |n: f64| {
        let tls = lossmodel::delta_tls(&res.tls, t_k, n, f_r).unwrap_or(0.0);
        1.0 / (tls + thermal + excess + inv_qc)
    };
    let fp = solve_photon_number(|n| resfit::photon_number(q_l_at(n), res.q_c_abs, f_r, p_dbm));
    let delta_tls = lossmodel::delta_tls(&res.tls, t_k, fp.n_ph, f_r)?;
    let notch = NotchParams {
        f_r_hz: f_r,
        q_l: q_l_at(fp.n_ph),
        q_c_abs: res.q_c_abs,
        phi0_rad: res.phi0_rad,
        background: spec.background,
    };

    let n = spec.points_per_trace;
    let half = 0.5 * spec.span_linewidths * notch.linewidth_hz();
    let freqs: Vec<f64> = (0..n)
        .map(|i| f_r - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    let mut s21 = resfit::synthesize(&freqs, &notch);
    add_noise(&mut s21, spec.background.amplitude, spec.noise, stream);
    Ok(GeneratedSweep {
        record: SweepRecord::new(freqs, s21, t_k, p_dbm, res.id.clone())?,
        truth: GroundTruth {
            temperature_k: t_k,
            power_dbm: p_dbm,
            n_ph: fp.n_ph,
            notch,
            q_i: 1.0 / (delta_tls + thermal + excess),
            delta_tls,
            delta_qp_thermal: thermal,
            delta_qp_excess: excess,
            fixed_point_iterations: fp.iterations,
            fixed_point_converged: fp.converged,
        },
    })
}

/// Generates one trace per (resonator, temperature, power), ordered by
/// resonator, then temperature, then power as listed in the spec.
pub fn generate_sweeps(spec: &ScenarioSpec) -> Result<Vec<GeneratedSweep>> {
    spec.validate()?;
    let nt = spec.temperature_grid_k.len();
    let np = spec.power_grid_dbm.len();
    let total = spec.resonators.len() * nt * np;
    (0..total)
        .into_par_iter()
        .map(|k| {
            let res = &spec.resonators[k / (nt * np)];
            let t = spec.temperature_grid_k[(k / np) % nt];
            let p = spec.power_grid_dbm[k % np];
            grid_point(spec, res, t, p, k as u64)
        })
        .collect()
}

/// Writes a trace in the ingest CSV layout. The declared power is the
/// chip-plane power plus `attenuation_db`, so ingesting with the same
/// attenuation reproduces the record.
pub fn write_trace_csv(record: &SweepRecord, attenuation_db: f64, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "# temperature_k={}", num(record.temperature_k))?;
    writeln!(w, "# power_dbm={}", num(record.applied_power_dbm + attenuation_db))?;
    writeln!(w, "# resonator={}", record.resonator_id)?;
    writeln!(w, "freq_hz,s21_re,s21_im")?;
    for (f, z) in record.frequencies_hz.iter().zip(&record.s21) {
        writeln!(w, "{},{},{}", num(*f), num(z.re), num(z.im))?;
    }
    Ok(())
}

/// Writes one row of generator ground truth per sweep.
pub fn write_truth_csv(sweeps: &[GeneratedSweep], mut w: impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "resonator,temperature_k,power_dbm,n_ph,f_r_hz,q_l,q_c_abs,phi0_rad,q_i,delta_tls,delta_qp_thermal,delta_qp_excess,fixed_point_converged"
    )?;
    for s in sweeps {
        let t = &s.truth;
        let v = [
            t.temperature_k,
            t.power_dbm,
            t.n_ph,
            t.notch.f_r_hz,
            t.notch.q_l,
            t.notch.q_c_abs,
            t.notch.phi0_rad,
            t.q_i,
            t.delta_tls,
            t.delta_qp_thermal,
            t.delta_qp_excess,
        ];
        let v: Vec<String> = v.iter().map(|&x| num(x)).collect();
        writeln!(w, "{},{},{}", s.record.resonator_id, v.join(","), t.fixed_point_converged)?;
    }
    Ok(())
}

/// Thermal density at each grid temperature, µm⁻³, for reference curves.
pub fn thermal_density_curve(spec: &ScenarioSpec) -> Result<Vec<(f64, f64)>> {
    spec.temperature_grid_k
        .iter()
        .map(|&t| Ok((t, mbcore::nqp_thermal(&spec.material, t)?)))
        .collect()
}
