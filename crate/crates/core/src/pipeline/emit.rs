//! Report writers: structured JSON, flat CSV tables and a text summary.
//!
//! All output is a pure function of the [`Report`]; nothing time-dependent
//! is written, so re-emitting a report is byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::analysis::{Report, ResonatorReport};
use crate::error::{Error, Result};
use crate::numfmt::num;
use crate::resfit::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Structured,
    #[default]
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }
    fn structured(self) -> bool {
        matches!(self, Self::Structured | Self::Both)
    }
}

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";

pub fn to_json(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Analysis(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn regime_label(r: Option<Regime>) -> &'static str {
    match r {
        Some(Regime::CouplingLimited) => "coupling_limited",
        Some(Regime::LossLimited) => "loss_limited",
        None => "",
    }
}

fn cells(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

/// Named CSV tables for one resonator, as (file stem, contents).
pub fn csv_tables(r: &ResonatorReport) -> Vec<(String, String)> {
    let mut tables = Vec::new();

    let mut s = String::from("temperature_k,power_dbm,n_ph,f_r_hz,q_l,q_c_abs,phi0_rad,q_i,residual_norm,converged\n");
    for f in &r.fits {
        let v = [f.temperature_k, f.power_dbm, f.n_ph, f.f_r_hz, f.q_l, f.q_c_abs, f.phi0_rad, f.q_i, f.residual_norm];
        let _ = writeln!(s, "{},{}", cells(&v), f.converged);
    }
    tables.push(("qi_vs_power".to_string(), s));

    let mut s = String::from("temperature_k,n_ph,q_i,q_l,q_c_abs,regime\n");
    for b in &r.budgets {
        let v = [b.temperature_k, b.n_ph, b.q_i_measured, b.q_l, b.q_c_abs];
        let _ = writeln!(s, "{},{}", cells(&v), regime_label(b.regime));
    }
    tables.push(("q_vs_temperature".to_string(), s));

    let mut s = String::from("temperature_k,n_ph,delta_total,delta_tls,delta_qp_measured,delta_i_theory,delta_other,clamped\n");
    for b in &r.budgets {
        let v = [b.temperature_k, b.n_ph, b.delta_total, b.delta_tls, b.delta_qp_measured, b.delta_i_theory, b.delta_other];
        let _ = writeln!(s, "{},{}", cells(&v), b.clamped);
    }
    tables.push(("loss_budget".to_string(), s));

    let mut s = String::from("temperature_k,q_i_measured,q_i_theory\n");
    for b in &r.budgets {
        let _ = writeln!(s, "{}", cells(&[b.temperature_k, b.q_i_measured, b.q_i_theory]));
    }
    tables.push(("qi_measured_vs_theory".to_string(), s));

    let mut s = String::from("temperature_k,n_qp_measured_per_um3,n_qp_theory_per_um3\n");
    for b in &r.budgets {
        let _ = writeln!(s, "{}", cells(&[b.temperature_k, b.n_qp_measured_per_um3, b.n_qp_theory_per_um3]));
    }
    tables.push(("nqp_vs_temperature".to_string(), s));

    let mut s = String::from("temperature_k,sigma1_over_sigman,sigma2_over_sigman,rs_ohm,ls_henry\n");
    for c in &r.conductivity {
        let v = [c.temperature_k, c.sigma1_over_sigman, c.sigma2_over_sigman, c.rs_ohm, c.ls_henry];
        let _ = writeln!(s, "{}", cells(&v));
    }
    tables.push(("sigma_vs_temperature".to_string(), s));

    let mut s = String::from("temperature_k,n_qp_theory_per_um3,n_qp_measured_per_um3,sigma1_over_sigman,sigma2_over_sigman\n");
    for c in &r.conductivity {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(c.temperature_k),
            num(c.n_qp_theory_per_um3),
            c.n_qp_measured_per_um3.map(num).unwrap_or_default(),
            num(c.sigma1_over_sigman),
            num(c.sigma2_over_sigman)
        );
    }
    tables.push(("sigma_vs_nqp".to_string(), s));

    tables
}

pub fn summary(report: &Report) -> String {
    let mut s = String::new();
    let p = &report.provenance;
    let _ = writeln!(s, "qploss {} (report schema {})", p.tool_version, report.schema_version);
    let _ = writeln!(s, "config sha256: {}", p.config_sha256);
    let _ = writeln!(s, "inputs: {} accepted, {} rejected", p.inputs.len(), p.rejected.len());
    for r in &p.rejected {
        let _ = writeln!(s, "  rejected {}: {}", r.path, r.reason);
    }
    let _ = writeln!(s, "single-photon selection: {}", p.photon_selection_rule);
    for r in &report.resonators {
        let _ = writeln!(s, "\n[{}] material {} f_r {} Hz alpha {}", r.id, r.material, r.f_r_hz, r.alpha);
        let _ = writeln!(s, "  resonance fits: {}", r.fits.len());
        match &r.tls {
            Some(t) => {
                let _ = writeln!(
                    s,
                    "  TLS at {} K: 1/Q_TLS0 {:.4e}, n_c {:.4e}, beta {:.4}, floor {:.4e}",
                    t.temperature_k, t.inv_q_tls0, t.n_c, t.beta, t.delta_floor
                );
            }
            None => {
                let _ = writeln!(s, "  TLS fit: unavailable");
            }
        }
        let _ = writeln!(s, "  {:>10} {:>10} {:>12} {:>14} {:>14} regime", "T_K", "n_ph", "Q_i", "n_qp_meas", "n_qp_theory");
        for b in &r.budgets {
            let _ = writeln!(
                s,
                "  {:>10.4} {:>10.3e} {:>12.4e} {:>14.4e} {:>14.4e} {}{}",
                b.temperature_k,
                b.n_ph,
                b.q_i_measured,
                b.n_qp_measured_per_um3,
                b.n_qp_theory_per_um3,
                regime_label(b.regime),
                if b.clamped { " (clamped)" } else { "" }
            );
        }
    }
    if !p.stage_failures.is_empty() {
        let _ = writeln!(s, "\nstage failures:");
        for f in &p.stage_failures {
            let _ = writeln!(s, "  {} / {}: {}", f.resonator, f.stage, f.message);
        }
    }
    s
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the report into `out_dir`, returning the files written.
pub fn emit(report: &Report, out_dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    if format.structured() {
        write(out_dir.join(REPORT_FILE), &to_json(report)?, &mut written)?;
    }
    if format.csv() {
        for r in &report.resonators {
            for (stem, body) in csv_tables(r) {
                write(out_dir.join(format!("{}_{stem}.csv", r.id)), &body, &mut written)?;
            }
        }
    }
    write(out_dir.join(SUMMARY_FILE), &summary(report), &mut written)?;
    Ok(written)
}
