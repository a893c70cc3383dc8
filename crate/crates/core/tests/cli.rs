use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"
reference_plane_attenuation_db = 80.0

[materials.Ta]
tc_k = 4.06
n0_per_m3_ev = 6.9e28
sigma_n_s_per_m = 1.0e7

[materials.NbN]
tc_k = 15.0
n0_per_m3_ev = 3.7e28
sigma_n_s_per_m = 4.0e5

[resonators.R1]
material = "Ta"
f_r_hz = 3.654e9
alpha = 0.05
q_c_abs = 2e5
tls = { inv_q_tls0 = 2e-6, n_c = 5.0, beta = 1.0 }

[io]
inputs = ["data"]
output_dir = "report"

[synth]
temperatures_k = [0.02, 0.3, 0.8]
powers_dbm = [-170.0, -160.0, -150.0, -140.0, -130.0, -120.0, -110.0, -100.0]
snr_db = 60.0
seed = 11
points_per_trace = 601

[compare]
material_a = "Ta"
material_b = "NbN"
t_over_tc = [0.1, 0.2]

[mb_table]
material = "Ta"
frequency_hz = 3.654e9
temperatures_k = [0.1, 0.5, 1.0]
"#;

fn qploss(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qploss")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let o = qploss(&["synth", "--config", "run.toml", "--out", "data"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    (dir, cfg)
}

#[test]
fn synth_then_analyze() {
    let (dir, _) = workspace();
    let traces = std::fs::read_dir(dir.path().join("data")).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")
    });
    assert_eq!(traces.count(), 24);
    assert!(dir.path().join("data/truth/ground_truth.csv").exists());
    assert!(dir.path().join("data/truth/ground_truth.json").exists());

    let o = qploss(&["analyze", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("24 accepted, 0 rejected"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], "1.0");
    assert_eq!(report["resonators"][0]["budgets"].as_array().unwrap().len(), 3);
    assert!(dir.path().join("report/R1_loss_budget.csv").exists());

    std::fs::write(dir.path().join("data/bad.csv"), "t,re,im\n1,2,3\n").unwrap();
    let o = qploss(&["analyze", "--config", "run.toml", "--out", "partial", "--format", "structured"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("malformed header"));
    assert!(dir.path().join("partial/report.json").exists());
    assert!(!dir.path().join("partial/R1_loss_budget.csv").exists());
}

#[test]
fn synth_is_reproducible_and_seed_overrides() {
    let (dir, _) = workspace();
    let o = qploss(&["synth", "--config", "run.toml", "--out", "again", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let a = std::fs::read(dir.path().join("data/R1_0005.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("again/R1_0005.csv")).unwrap());
    let o = qploss(&["synth", "--config", "run.toml", "--out", "other", "--seed", "12"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(a, std::fs::read(dir.path().join("other/R1_0005.csv")).unwrap());
}

#[test]
fn single_trace_and_power_sweep_fits() {
    let (dir, _) = workspace();
    let o = qploss(&["fit-s21", "data/R1_0000.csv", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let row: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(row["resonator"], "R1");
    assert_eq!(row["power_dbm"], -170.0);
    assert!((row["f_r_hz"].as_f64().unwrap() / 3.654e9 - 1.0).abs() < 1e-6);

    let sweep: Vec<String> = (0..8).map(|i| format!("data/R1_{i:04}.csv")).collect();
    let mut args = vec!["fit-tls", "--config", "run.toml"];
    args.extend(sweep.iter().map(String::as_str));
    let o = qploss(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let tls: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let inv_q = tls["params"]["inv_q_tls0"].as_f64().unwrap();
    assert!((inv_q / 2e-6 - 1.0).abs() < 0.05, "1/Q_TLS0 {inv_q}");

    // two temperatures in one sweep is a usage error
    let o = qploss(&["fit-tls", "data/R1_0000.csv", "data/R1_0008.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn theory_tables() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();

    let o = qploss(&["mb-table", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("temperature_k,sigma1_over_sigman"));
    assert_eq!(text.lines().count(), 4);

    let o = qploss(&["mb-table", "--config", "run.toml", "--grid", "0.1", "1.0", "10", "--out", "t", "--format", "both"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("t/mb_table_Ta.csv").exists());
    assert!(dir.path().join("t/mb_table_Ta.json").exists());

    let o = qploss(&["compare", "--config", "run.toml", "--temperature-k", "0.02"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].ends_with("ratio,ln_ratio"));
    // at a common 20 mK the NbN density underflows, the log ratio does not
    let ln_ratio: f64 = lines[3].rsplit(',').next().unwrap().parse().unwrap();
    assert!(ln_ratio.is_finite() && ln_ratio > 100.0);
}

#[test]
fn fatal_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = qploss(&["analyze", "--config", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    std::fs::write(dir.path().join("typo.toml"), CONFIG.replace("tc_k = 15.0", "tc_k = 15.0\ntc = 1.0")).unwrap();
    let o = qploss(&["mb-table", "--config", "typo.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));

    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    std::fs::create_dir(dir.path().join("data")).unwrap();
    let o = qploss(&["analyze", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
