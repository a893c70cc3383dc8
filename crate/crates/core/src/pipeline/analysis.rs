//! Batch analysis: resonance fits, TLS fit, loss budgets and both
//! quasiparticle-density tracks for every configured resonator.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ClampPolicy, RunConfig};
use super::ingest::{self, Rejection};
use crate::error::{Error, Result};
use crate::lossmodel::{self, ResonatorParams, TlsFit};
use crate::mbcore;
use crate::resfit::{self, Regime, ResonanceFit, SweepRecord};

pub const SCHEMA_VERSION: &str = "1.0";

pub const PHOTON_SELECTION_RULE: &str =
    "per temperature, the power point whose fitted photon number minimises |log10(n_ph)|";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub resonator: String,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_sha256: String,
    pub inputs: Vec<String>,
    pub rejected: Vec<Rejection>,
    pub stage_failures: Vec<StageFailure>,
    pub photon_selection_rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub temperature_k: f64,
    pub power_dbm: f64,
    pub n_ph: f64,
    pub f_r_hz: f64,
    pub q_l: f64,
    pub q_c_abs: f64,
    pub phi0_rad: f64,
    pub q_i: f64,
    pub converged: bool,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlsRow {
    pub temperature_k: f64,
    pub inv_q_tls0: f64,
    pub n_c: f64,
    pub beta: f64,
    pub delta_floor: f64,
    pub points: usize,
    pub converged: bool,
}

/// One temperature at the single-photon point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub temperature_k: f64,
    pub power_dbm: f64,
    pub n_ph: f64,
    pub q_i_measured: f64,
    pub q_l: f64,
    pub q_c_abs: f64,
    pub regime: Option<Regime>,
    pub delta_total: f64,
    pub delta_tls: f64,
    pub delta_qp_measured: f64,
    pub delta_qp_theory: f64,
    pub delta_i_theory: f64,
    /// Measured loss not explained by TLS plus the surface-impedance theory.
    pub delta_other: f64,
    pub q_i_theory: f64,
    pub n_qp_measured_per_um3: f64,
    pub n_qp_theory_per_um3: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivityRow {
    pub temperature_k: f64,
    pub sigma1_over_sigman: f64,
    pub sigma2_over_sigman: f64,
    pub n_qp_theory_per_um3: f64,
    pub n_qp_measured_per_um3: Option<f64>,
    pub rs_ohm: f64,
    pub ls_henry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorReport {
    pub id: String,
    pub material: String,
    pub f_r_hz: f64,
    pub alpha: f64,
    pub fits: Vec<FitRow>,
    pub tls: Option<TlsRow>,
    pub budgets: Vec<BudgetRow>,
    pub conductivity: Vec<ConductivityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub provenance: Provenance,
    /// Column name → unit, shared by every table.
    pub units: BTreeMap<String, String>,
    pub resonators: Vec<ResonatorReport>,
}

pub fn units() -> BTreeMap<String, String> {
    [
        ("temperature_k", "K"),
        ("power_dbm", "dBm"),
        ("n_ph", "1"),
        ("f_r_hz", "Hz"),
        ("q_l", "1"),
        ("q_c_abs", "1"),
        ("q_i", "1"),
        ("q_i_measured", "1"),
        ("q_i_theory", "1"),
        ("phi0_rad", "rad"),
        ("residual_norm", "1"),
        ("alpha", "1"),
        ("inv_q_tls0", "1"),
        ("n_c", "1"),
        ("beta", "1"),
        ("delta_floor", "1"),
        ("delta_total", "1"),
        ("delta_tls", "1"),
        ("delta_qp_measured", "1"),
        ("delta_qp_theory", "1"),
        ("delta_i_theory", "1"),
        ("delta_other", "1"),
        ("n_qp_measured_per_um3", "um^-3"),
        ("n_qp_theory_per_um3", "um^-3"),
        ("sigma1_over_sigman", "1"),
        ("sigma2_over_sigman", "1"),
        ("rs_ohm", "ohm"),
        ("ls_henry", "H"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl Report {
    pub fn has_rejections(&self) -> bool {
        !self.provenance.rejected.is_empty() || !self.provenance.stage_failures.is_empty()
    }
}

/// Ingests the configured inputs and analyses them.
pub fn run_analysis(config: &RunConfig) -> Result<Report> {
    if config.io.inputs.is_empty() {
        return Err(Error::Config("no inputs configured".into()));
    }
    let ing = ingest::ingest(&config.io.inputs, config.reference_plane_attenuation_db)?;
    if ing.records.is_empty() {
        return Err(Error::Analysis(format!(
            "no usable traces ({} rejected)",
            ing.rejected.len()
        )));
    }
    let mut report = analyze_records(config, &ing.records, ing.rejected)?;
    report.provenance.inputs = ing.accepted_paths;
    Ok(report)
}

/// Analyses already-ingested records.
pub fn analyze_records(config: &RunConfig, records: &[SweepRecord], rejected: Vec<Rejection>) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::Analysis("no traces to analyse".into()));
    }
    let mut groups: BTreeMap<&str, Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.resonator_id.as_str()).or_default().push(r);
    }
    let outcomes: Vec<(Option<ResonatorReport>, Vec<StageFailure>)> = groups
        .into_par_iter()
        .map(|(id, recs)| analyze_resonator(config, id, &recs))
        .collect();
    let mut resonators = Vec::new();
    let mut stage_failures = Vec::new();
    for (rep, fails) in outcomes {
        resonators.extend(rep);
        stage_failures.extend(fails);
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION.to_string(),
        provenance: Provenance {
            tool_version: crate::VERSION.to_string(),
            config_sha256: config.source_sha256.clone(),
            inputs: Vec::new(),
            rejected,
            stage_failures,
            photon_selection_rule: PHOTON_SELECTION_RULE.to_string(),
        },
        units: units(),
        resonators,
    })
}

struct Fitted {
    row: FitRow,
    fit: ResonanceFit,
}

fn analyze_resonator(config: &RunConfig, id: &str, recs: &[&SweepRecord]) -> (Option<ResonatorReport>, Vec<StageFailure>) {
    let mut fails = Vec::new();
    let fail = |stage: &str, message: String| StageFailure {
        resonator: id.to_string(),
        stage: stage.to_string(),
        message,
    };
    let res = match config.resonator_params(id) {
        Ok(r) => r,
        Err(e) => return (None, vec![fail("config", e.to_string())]),
    };

    // stage 1: resonance fits and photon numbers
    let fitted: Vec<std::result::Result<Fitted, String>> = recs
        .par_iter()
        .map(|r| {
            let fit = resfit::fit_resonance(r).map_err(|e| {
                format!("T={} K, P={} dBm: {e}", r.temperature_k, r.applied_power_dbm)
            })?;
            let n_ph = resfit::photon_number_for(&fit, r.applied_power_dbm);
            Ok(Fitted {
                row: FitRow {
                    temperature_k: r.temperature_k,
                    power_dbm: r.applied_power_dbm,
                    n_ph,
                    f_r_hz: fit.f_r_hz,
                    q_l: fit.q_l,
                    q_c_abs: fit.q_c_abs,
                    phi0_rad: fit.phi0_rad,
                    q_i: fit.q_i,
                    converged: fit.fit.converged,
                    residual_norm: fit.fit.residual_norm,
                },
                fit,
            })
        })
        .collect();
    let mut good = Vec::new();
    for f in fitted {
        match f {
            Ok(f) => good.push(f),
            Err(msg) => fails.push(fail("resonance_fit", msg)),
        }
    }
    let fits: Vec<FitRow> = good.iter().map(|f| f.row.clone()).collect();

    // stage 2: TLS fit on the coldest power sweep
    let tls = fit_tls_stage(config, &res, &good).map_err(|e| fails.push(fail("tls_fit", e.to_string()))).ok();

    // stage 3: single-photon point per temperature
    let mut by_t: BTreeMap<u64, &Fitted> = BTreeMap::new();
    for f in &good {
        if !(f.row.n_ph > 0.0) {
            continue;
        }
        let key = f.row.temperature_k.to_bits();
        let score = f.row.n_ph.log10().abs();
        match by_t.get(&key) {
            Some(prev) if prev.row.n_ph.log10().abs() <= score => {}
            _ => {
                by_t.insert(key, f);
            }
        }
    }
    let mut singles: Vec<&Fitted> = by_t.into_values().collect();
    singles.sort_by(|a, b| a.row.temperature_k.total_cmp(&b.row.temperature_k));

    let regimes: BTreeMap<u64, Regime> = if singles.len() >= 2 {
        let pairs: Vec<(f64, &ResonanceFit)> = singles.iter().map(|f| (f.row.temperature_k, &f.fit)).collect();
        match resfit::classify_regime(&pairs, config.fit.regime_threshold) {
            Ok(v) => v.into_iter().map(|(t, r)| (t.to_bits(), r)).collect(),
            Err(e) => {
                fails.push(fail("regime", e.to_string()));
                BTreeMap::new()
            }
        }
    } else {
        fails.push(fail("regime", "fewer than 2 temperatures".into()));
        BTreeMap::new()
    };

    // stage 4: budgets and density tracks
    let mut budgets = Vec::new();
    if let Some(tls_fit) = &tls {
        for f in &singles {
            match budget_row(&res, tls_fit, f, regimes.get(&f.row.temperature_k.to_bits()).copied()) {
                Ok(row) if row.clamped && config.fit.clamp_policy == ClampPolicy::Drop => fails.push(fail(
                    "budget",
                    format!("T={} K: clamped extraction dropped", row.temperature_k),
                )),
                Ok(row) => budgets.push(row),
                Err(e) => fails.push(fail("budget", format!("T={} K: {e}", f.row.temperature_k))),
            }
        }
    }

    // stage 5: conductivity tables at the configured frequency
    let measured: BTreeMap<u64, f64> = budgets
        .iter()
        .map(|b| (b.temperature_k.to_bits(), b.n_qp_measured_per_um3))
        .collect();
    let mut conductivity = Vec::new();
    for f in &singles {
        let t = f.row.temperature_k;
        match conductivity_row(&res, t) {
            Ok(mut row) => {
                row.n_qp_measured_per_um3 = measured.get(&t.to_bits()).copied();
                conductivity.push(row);
            }
            Err(e) => fails.push(fail("conductivity", format!("T={t} K: {e}"))),
        }
    }

    let report = ResonatorReport {
        id: id.to_string(),
        material: res.material.name.clone(),
        f_r_hz: res.f_r_hz,
        alpha: res.alpha,
        fits,
        tls: tls.map(|(t_k, points, fit)| TlsRow {
            temperature_k: t_k,
            inv_q_tls0: fit.params.inv_q_tls0,
            n_c: fit.params.n_c,
            beta: fit.params.beta,
            delta_floor: fit.delta_floor,
            points,
            converged: fit.fit.converged,
        }),
        budgets,
        conductivity,
    };
    (Some(report), fails)
}

fn fit_tls_stage(config: &RunConfig, res: &ResonatorParams, good: &[Fitted]) -> Result<(f64, usize, TlsFit)> {
    let t_min = good
        .iter()
        .map(|f| f.row.temperature_k)
        .fold(f64::INFINITY, f64::min);
    if !t_min.is_finite() {
        return Err(Error::Analysis("no successful resonance fits".into()));
    }
    let points: Vec<(f64, f64)> = good
        .iter()
        .filter(|f| f.row.temperature_k == t_min && f.fit.inv_q_i() > 0.0 && f.row.n_ph > 0.0)
        .map(|f| (f.row.n_ph, f.fit.inv_q_i()))
        .collect();
    let fit = lossmodel::fit_tls_power_sweep(
        &points,
        t_min,
        res.f_r_hz,
        (config.fit.beta_min, config.fit.beta_max),
    )?;
    Ok((t_min, points.len(), fit))
}

fn budget_row(
    res: &ResonatorParams,
    tls: &(f64, usize, TlsFit),
    f: &Fitted,
    regime: Option<Regime>,
) -> Result<BudgetRow> {
    let t = f.row.temperature_k;
    let n = f.row.n_ph;
    let inv_qi = f.fit.inv_q_i();
    let params = &tls.2.params;
    let measured = lossmodel::budget_at(res, params, t, n, inv_qi)?;
    let theory = lossmodel::budget_against_theory(res, params, t, n, inv_qi)?;
    let delta_qp_theory = lossmodel::delta_qp_theory(res, t)?;
    let delta_i_theory = lossmodel::delta_i_theory(res, t)?;
    Ok(BudgetRow {
        temperature_k: t,
        power_dbm: f.row.power_dbm,
        n_ph: n,
        q_i_measured: f.row.q_i,
        q_l: f.row.q_l,
        q_c_abs: f.row.q_c_abs,
        regime,
        delta_total: inv_qi,
        delta_tls: measured.delta_tls,
        delta_qp_measured: measured.delta_qp,
        delta_qp_theory,
        delta_i_theory,
        delta_other: theory.delta_other,
        q_i_theory: 1.0 / (lossmodel::delta_tls(params, t, n, res.f_r_hz)? + delta_i_theory),
        n_qp_measured_per_um3: lossmodel::nqp_from_delta(measured.delta_qp, res, t)?,
        n_qp_theory_per_um3: lossmodel::nqp_from_delta(delta_qp_theory, res, t)?,
        clamped: measured.clamped,
    })
}

fn conductivity_row(res: &ResonatorParams, t: f64) -> Result<ConductivityRow> {
    let c = mbcore::complex_conductivity(&res.material, t, res.f_r_hz)?;
    let zs = mbcore::surface_impedance(&res.material, t, res.f_r_hz)?;
    Ok(ConductivityRow {
        temperature_k: t,
        sigma1_over_sigman: c.sigma1_over_sigman,
        sigma2_over_sigman: c.sigma2_over_sigman,
        n_qp_theory_per_um3: mbcore::nqp_thermal(&res.material, t)?,
        n_qp_measured_per_um3: None,
        rs_ohm: zs.rs_ohm,
        ls_henry: zs.ls_henry,
    })
}
