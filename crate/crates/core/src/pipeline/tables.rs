//! Stand-alone theory tables: conductivity over a temperature grid and
//! thermal-density comparisons between two materials.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mbcore::{self, Material};
use crate::numfmt::num;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbRow {
    pub temperature_k: f64,
    pub sigma1_over_sigman: f64,
    pub sigma2_over_sigman: f64,
    pub n_qp_per_um3: f64,
    pub rs_ohm: f64,
    pub ls_henry: f64,
    pub warnings: String,
}

/// Conductivity, thermal density and surface impedance at each temperature.
pub fn mb_table(material: &Material, f_hz: f64, temperatures_k: &[f64]) -> Result<Vec<MbRow>> {
    temperatures_k
        .iter()
        .map(|&t| {
            let c = mbcore::complex_conductivity(material, t, f_hz)?;
            let zs = mbcore::surface_impedance(material, t, f_hz)?;
            Ok(MbRow {
                temperature_k: t,
                sigma1_over_sigman: c.sigma1_over_sigman,
                sigma2_over_sigman: c.sigma2_over_sigman,
                n_qp_per_um3: mbcore::nqp_thermal(material, t)?,
                rs_ohm: zs.rs_ohm,
                ls_henry: zs.ls_henry,
                warnings: c
                    .warnings
                    .iter()
                    .map(|w| format!("{w:?}"))
                    .collect::<Vec<_>>()
                    .join(";"),
            })
        })
        .collect()
}

pub fn mb_table_csv(rows: &[MbRow]) -> String {
    let mut s = String::from("temperature_k,sigma1_over_sigman,sigma2_over_sigman,n_qp_per_um3,rs_ohm,ls_henry,warnings\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            num(r.temperature_k),
            num(r.sigma1_over_sigman),
            num(r.sigma2_over_sigman),
            num(r.n_qp_per_um3),
            num(r.rs_ohm),
            num(r.ls_henry),
            r.warnings
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub t_over_tc_a: f64,
    pub t_over_tc_b: f64,
    pub temperature_a_k: f64,
    pub temperature_b_k: f64,
    pub n_qp_a_per_um3: f64,
    pub n_qp_b_per_um3: f64,
    /// n_qp(A)/n_qp(B), evaluated in the log domain so it stays finite
    /// when either density underflows.
    pub ratio: f64,
    pub ln_ratio: f64,
}

fn compare_row(a: &Material, b: &Material, ta: f64, tb: f64) -> Result<CompareRow> {
    let na = mbcore::nqp_thermal(a, ta)?;
    let nb = mbcore::nqp_thermal(b, tb)?;
    let ln_ratio = mbcore::ln_nqp_thermal(a, ta)? - mbcore::ln_nqp_thermal(b, tb)?;
    Ok(CompareRow {
        t_over_tc_a: ta / a.tc_k,
        t_over_tc_b: tb / b.tc_k,
        temperature_a_k: ta,
        temperature_b_k: tb,
        n_qp_a_per_um3: na,
        n_qp_b_per_um3: nb,
        ratio: ln_ratio.exp(),
        ln_ratio,
    })
}

/// Thermal densities of two materials at equal reduced temperature T/Tc.
pub fn compare_reduced(a: &Material, b: &Material, t_over_tc: &[f64]) -> Result<Vec<CompareRow>> {
    if t_over_tc.is_empty() {
        return Err(Error::Precondition("empty T/Tc grid".into()));
    }
    t_over_tc
        .iter()
        .map(|&x| compare_row(a, b, x * a.tc_k, x * b.tc_k))
        .collect()
}

/// Thermal densities of two materials at one absolute temperature.
pub fn compare_absolute(a: &Material, b: &Material, t_k: f64) -> Result<CompareRow> {
    compare_row(a, b, t_k, t_k)
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from("t_over_tc_a,t_over_tc_b,temperature_a_k,temperature_b_k,n_qp_a_per_um3,n_qp_b_per_um3,ratio,ln_ratio\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            num(r.t_over_tc_a),
            num(r.t_over_tc_b),
            num(r.temperature_a_k),
            num(r.temperature_b_k),
            num(r.n_qp_a_per_um3),
            num(r.n_qp_b_per_um3),
            num(r.ratio),
            num(r.ln_ratio)
        );
    }
    s
}

/// `n` temperatures spaced evenly between `lo` and `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbcore::GapModel;

    #[test]
    fn ta_table_trends() {
        let ta = Material::new("Ta", 4.06, 6.9e28, 1.0e7, GapModel::TanhInterpolation).unwrap();
        let rows = mb_table(&ta, 3.654e9, &linear_grid(0.077, 1.0, 40)).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].sigma1_over_sigman > w[0].sigma1_over_sigman);
            assert!(w[1].sigma2_over_sigman <= w[0].sigma2_over_sigman);
            assert!(w[1].n_qp_per_um3 > w[0].n_qp_per_um3);
        }
        assert_eq!(mb_table_csv(&rows).lines().count(), 41);
    }

    #[test]
    fn compare_identical_materials() {
        let ta = Material::new("Ta", 4.06, 6.9e28, 1.0e7, GapModel::TanhInterpolation).unwrap();
        let rows = compare_reduced(&ta, &ta, &[0.1, 0.2, 0.3]).unwrap();
        assert!(rows.iter().all(|r| r.ratio == 1.0 && r.ln_ratio == 0.0));
        assert!(compare_reduced(&ta, &ta, &[0.6]).is_err());
    }
}
