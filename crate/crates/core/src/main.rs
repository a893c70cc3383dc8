use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qploss::error::{Error, Result};
use qploss::lossmodel::{self, DEFAULT_BETA_BOUNDS};
use qploss::pipeline::{self, ingest, tables, OutputFormat, RunConfig};
use qploss::resfit;
use qploss::synth;

/// Exit status: 0 success, 1 partial (some inputs or stages rejected), 2 fatal.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Ok,
    Partial,
}

#[derive(Parser)]
#[command(name = "qploss", version, about = "Quasiparticle and TLS loss analysis for superconducting resonators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Structured,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Structured => OutputFormat::Structured,
            Format::Both => OutputFormat::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Conductivity, thermal density and surface impedance over a temperature grid.
    MbTable {
        #[arg(long)]
        config: PathBuf,
        /// Material name; defaults to [mb_table].material.
        #[arg(long)]
        material: Option<String>,
        #[arg(long)]
        frequency_hz: Option<f64>,
        #[arg(long, num_args = 3, value_names = ["T_MIN_K", "T_MAX_K", "POINTS"])]
        grid: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Fit a single S21 trace and print the fit as JSON.
    FitS21 {
        trace: PathBuf,
        /// Supplies the reference-plane attenuation.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the TLS power law to a power sweep at one temperature.
    FitTls {
        /// Trace files or directories holding one power sweep.
        traces: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full batch analysis of the configured inputs.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        format: Format,
    },
    /// Generate a synthetic dataset from the [synth] section. Traces go to
    /// `out/`, generator ground truth to `out/truth/`.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "both")]
        format: Format,
    },
    /// Thermal quasiparticle densities of two materials at equal T/Tc.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        material_a: Option<String>,
        #[arg(long)]
        material_b: Option<String>,
        /// Comma-separated T/Tc values; defaults to [compare].t_over_tc.
        #[arg(long, value_delimiter = ',')]
        t_over_tc: Vec<f64>,
        /// Also report the ratio at this common absolute temperature.
        #[arg(long)]
        temperature_k: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Analysis(e.to_string()))
}

/// Writes tabular output to `out/<stem>.{csv,json}` or stdout.
fn deliver<T: Serialize>(out: Option<&Path>, stem: &str, format: Format, csv: String, rows: &T) -> Result<()> {
    let fmt = OutputFormat::from(format);
    let json = to_json(rows)?;
    match out {
        Some(dir) => {
            if matches!(fmt, OutputFormat::Csv | OutputFormat::Both) {
                write_file(&dir.join(format!("{stem}.csv")), &csv)?;
            }
            if matches!(fmt, OutputFormat::Structured | OutputFormat::Both) {
                write_file(&dir.join(format!("{stem}.json")), &json)?;
            }
        }
        None => match fmt {
            OutputFormat::Structured => print!("{json}"),
            _ => print!("{csv}"),
        },
    }
    Ok(())
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::MbTable {
            config,
            material,
            frequency_hz,
            grid,
            out,
            format,
        } => {
            let cfg = RunConfig::from_path(&config)?;
            let section = cfg.mb_table.clone();
            let name = material
                .or_else(|| section.as_ref().map(|s| s.material.clone()))
                .ok_or_else(|| Error::Config("no material given (--material or [mb_table])".into()))?;
            let f = frequency_hz
                .or_else(|| section.as_ref().map(|s| s.frequency_hz))
                .ok_or_else(|| Error::Config("no frequency given (--frequency-hz or [mb_table])".into()))?;
            let temps = match grid {
                Some(g) => {
                    let lo: f64 = g[0].parse().map_err(|_| Error::Config("bad T_MIN_K".into()))?;
                    let hi: f64 = g[1].parse().map_err(|_| Error::Config("bad T_MAX_K".into()))?;
                    let n: usize = g[2].parse().map_err(|_| Error::Config("bad POINTS".into()))?;
                    tables::linear_grid(lo, hi, n)
                }
                None => section
                    .map(|s| s.temperatures_k)
                    .ok_or_else(|| Error::Config("no temperature grid (--grid or [mb_table])".into()))?,
            };
            let rows = tables::mb_table(&cfg.material(&name)?, f, &temps)?;
            deliver(out.as_deref(), &format!("mb_table_{name}"), format, tables::mb_table_csv(&rows), &rows)?;
            Ok(Outcome::Ok)
        }
        Command::FitS21 { trace, config, out } => {
            let att = match config {
                Some(c) => RunConfig::from_path(&c)?.reference_plane_attenuation_db,
                None => 0.0,
            };
            let rec = pipeline::read_trace(&trace, att)?;
            let fit = resfit::fit_resonance(&rec)?;
            #[derive(Serialize)]
            struct Row<'a> {
                resonator: &'a str,
                temperature_k: f64,
                power_dbm: f64,
                n_ph: f64,
                #[serde(flatten)]
                fit: &'a resfit::ResonanceFit,
            }
            let row = Row {
                resonator: &rec.resonator_id,
                temperature_k: rec.temperature_k,
                power_dbm: rec.applied_power_dbm,
                n_ph: resfit::photon_number_for(&fit, rec.applied_power_dbm),
                fit: &fit,
            };
            let json = to_json(&row)?;
            match out {
                Some(dir) => write_file(&dir.join("fit.json"), &json)?,
                None => print!("{json}"),
            }
            Ok(Outcome::Ok)
        }
        Command::FitTls { traces, config, out } => {
            let cfg = config.map(|c| RunConfig::from_path(&c)).transpose()?;
            let att = cfg.as_ref().map_or(0.0, |c| c.reference_plane_attenuation_db);
            let bounds = cfg.as_ref().map_or(DEFAULT_BETA_BOUNDS, |c| (c.fit.beta_min, c.fit.beta_max));
            let ing = ingest::ingest(&traces, att)?;
            let mut partial = !ing.rejected.is_empty();
            for r in &ing.rejected {
                eprintln!("rejected {}: {}", r.path, r.reason);
            }
            let first = ing
                .records
                .first()
                .ok_or_else(|| Error::Analysis("no usable traces".into()))?;
            if ing
                .records
                .iter()
                .any(|r| r.temperature_k != first.temperature_k || r.resonator_id != first.resonator_id)
            {
                return Err(Error::Precondition(
                    "fit-tls expects one resonator at one temperature".into(),
                ));
            }
            let mut points = Vec::new();
            let mut freqs = Vec::new();
            for r in &ing.records {
                match resfit::fit_resonance(r) {
                    Ok(fit) if fit.inv_q_i() > 0.0 => {
                        points.push((resfit::photon_number_for(&fit, r.applied_power_dbm), fit.inv_q_i()));
                        freqs.push(fit.f_r_hz);
                    }
                    Ok(_) => {
                        partial = true;
                        eprintln!("skipped P={} dBm: non-positive 1/Q_i", r.applied_power_dbm);
                    }
                    Err(e) => {
                        partial = true;
                        eprintln!("skipped P={} dBm: {e}", r.applied_power_dbm);
                    }
                }
            }
            let f_r = match cfg.as_ref().and_then(|c| c.resonator_params(&first.resonator_id).ok()) {
                Some(rp) => rp.f_r_hz,
                None => {
                    freqs.sort_by(f64::total_cmp);
                    *freqs.get(freqs.len() / 2).ok_or_else(|| Error::Analysis("no successful fits".into()))?
                }
            };
            let tls = lossmodel::fit_tls_power_sweep(&points, first.temperature_k, f_r, bounds)?;
            let json = to_json(&tls)?;
            match out {
                Some(dir) => write_file(&dir.join("tls.json"), &json)?,
                None => print!("{json}"),
            }
            Ok(if partial { Outcome::Partial } else { Outcome::Ok })
        }
        Command::Analyze { config, out, format } => {
            let cfg = RunConfig::from_path(&config)?;
            let out = out
                .or_else(|| cfg.io.output_dir.clone())
                .ok_or_else(|| Error::Config("no output directory (--out or io.output_dir)".into()))?;
            let report = pipeline::run_analysis(&cfg)?;
            pipeline::emit(&report, &out, format.into())?;
            print!("{}", pipeline::emit::summary(&report));
            Ok(if report.has_rejections() { Outcome::Partial } else { Outcome::Ok })
        }
        Command::Synth { config, out, seed, format } => {
            let cfg = RunConfig::from_path(&config)?;
            let spec = cfg.scenario(seed)?;
            let sweeps = synth::generate_sweeps(&spec)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let fmt = OutputFormat::from(format);
            if matches!(fmt, OutputFormat::Csv | OutputFormat::Both) {
                for (i, s) in sweeps.iter().enumerate() {
                    let path = out.join(format!("{}_{i:04}.csv", s.record.resonator_id));
                    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
                    synth::write_trace_csv(&s.record, cfg.reference_plane_attenuation_db, f)
                        .map_err(|e| Error::io(&path, e))?;
                }
                let path = out.join("truth").join("ground_truth.csv");
                write_file(&path, "")?;
                let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
                synth::write_truth_csv(&sweeps, f).map_err(|e| Error::io(&path, e))?;
            }
            if matches!(fmt, OutputFormat::Structured | OutputFormat::Both) {
                let truth: Vec<_> = sweeps.iter().map(|s| (&s.record.resonator_id, &s.truth)).collect();
                write_file(&out.join("truth").join("ground_truth.json"), &to_json(&truth)?)?;
            }
            let unconverged = sweeps.iter().filter(|s| !s.truth.fixed_point_converged).count();
            println!("wrote {} traces to {}", sweeps.len(), out.display());
            if unconverged > 0 {
                eprintln!("{unconverged} traces: photon-number fixed point did not converge");
                return Ok(Outcome::Partial);
            }
            Ok(Outcome::Ok)
        }
        Command::Compare {
            config,
            material_a,
            material_b,
            t_over_tc,
            temperature_k,
            out,
            format,
        } => {
            let cfg = RunConfig::from_path(&config)?;
            let section = cfg.compare.clone();
            let pick = |arg: Option<String>, f: fn(&pipeline::config::CompareConfig) -> String| {
                arg.or_else(|| section.as_ref().map(f))
                    .ok_or_else(|| Error::Config("two materials required (--material-a/-b or [compare])".into()))
            };
            let a = cfg.material(&pick(material_a, |s| s.material_a.clone())?)?;
            let b = cfg.material(&pick(material_b, |s| s.material_b.clone())?)?;
            let grid = if t_over_tc.is_empty() {
                section.as_ref().map(|s| s.t_over_tc.clone()).unwrap_or_default()
            } else {
                t_over_tc
            };
            let mut rows = if grid.is_empty() { Vec::new() } else { tables::compare_reduced(&a, &b, &grid)? };
            if let Some(t) = temperature_k.or_else(|| section.as_ref().and_then(|s| s.temperature_k)) {
                rows.push(tables::compare_absolute(&a, &b, t)?);
            }
            if rows.is_empty() {
                return Err(Error::Config("nothing to compare: give --t-over-tc or --temperature-k".into()));
            }
            deliver(
                out.as_deref(),
                &format!("compare_{}_{}", a.name, b.name),
                format,
                tables::compare_csv(&rows),
                &rows,
            )?;
            Ok(Outcome::Ok)
        }
    }
}
