//! Frozen example report. Regenerate with `QPLOSS_BLESS=1 cargo test --test golden_report`
//! after an intentional change to the analysis or the report layout.

use std::path::PathBuf;

use qploss::pipeline::emit::to_json;
use qploss::pipeline::{analyze_records, RunConfig};
use qploss::synth::generate_sweeps;
use serde_json::Value;

const CONFIG: &str = r#"
reference_plane_attenuation_db = 80.0

[materials.Ta]
tc_k = 4.06
n0_per_m3_ev = 6.9e28
sigma_n_s_per_m = 1.0e7

[resonators.R1]
material = "Ta"
f_r_hz = 3.654e9
alpha = 0.05
q_c_abs = 2e5
phi0_rad = 0.05
tls = { inv_q_tls0 = 2e-6, n_c = 5.0, beta = 1.0 }

[io]
inputs = []

[synth]
temperatures_k = [0.02, 0.5, 1.0]
powers_dbm = [-170.0, -160.0, -150.0, -140.0, -130.0, -120.0, -110.0, -100.0]
excess_density_per_um3 = 300.0
points_per_trace = 401
"#;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/golden/report.json")
}

fn same(path: &str, got: &Value, want: &Value) -> Result<(), String> {
    match (got, want) {
        (Value::Number(g), Value::Number(w)) => {
            let (g, w) = (g.as_f64().unwrap(), w.as_f64().unwrap());
            let tol = 1e-9 * w.abs().max(1e-300);
            if (g - w).abs() <= tol {
                Ok(())
            } else {
                Err(format!("{path}: {g} != {w}"))
            }
        }
        (Value::Array(g), Value::Array(w)) if g.len() == w.len() => g
            .iter()
            .zip(w)
            .enumerate()
            .try_for_each(|(i, (a, b))| same(&format!("{path}[{i}]"), a, b)),
        (Value::Object(g), Value::Object(w)) if g.keys().eq(w.keys()) => {
            g.iter().try_for_each(|(k, a)| same(&format!("{path}.{k}"), a, &w[k]))
        }
        _ if got == want => Ok(()),
        _ => Err(format!("{path}: structure differs")),
    }
}

#[test]
fn report_matches_golden() {
    let cfg = RunConfig::from_toml_str(CONFIG).unwrap();
    let records: Vec<_> = generate_sweeps(&cfg.scenario(None).unwrap())
        .unwrap()
        .into_iter()
        .map(|s| s.record)
        .collect();
    let json = to_json(&analyze_records(&cfg, &records, vec![]).unwrap()).unwrap();
    let path = golden_path();
    if std::env::var_os("QPLOSS_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &json).unwrap();
        return;
    }
    let want: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let got: Value = serde_json::from_str(&json).unwrap();
    if let Err(e) = same("$", &got, &want) {
        panic!("report differs from {}: {e}", path.display());
    }
}
