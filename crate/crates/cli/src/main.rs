//! `carnot` — command-line front end for the comparison-principle harness.
//!
//! Subcommands: `group-check`, `convolve`, `perturb`, `structure-check`,
//! `compare`. Reports are printed to stdout as JSON and, with `--out DIR`,
//! written to files; `--format csv` additionally writes the CSV field dumps
//! (columns: coordinates in layer order, value, optional witness).
//!
//! Exit codes: 0 success (`compare`: HOLDS), 1 failed checks or violation
//! verdicts, 2 invalid input/config, 3 INCONCLUSIVE.

use carnot_core::comparison::Verdict;
use carnot_core::group::{CarnotGroup, Point};
use carnot_core::scenario::{
    self, coefficient_csv, run_group_check, ScenarioConfig,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "carnot", version, about = "Carnot-group comparison-principle toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the group laws (associativity, inverses, invariance,
    /// homogeneity) of a built-in or JSON-specified group.
    GroupCheck {
        /// Group name (euclidean:n, heisenberg:n, engel) or path to a JSON
        /// group spec.
        group: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also export the coefficient matrix at this comma-separated point.
        #[arg(long)]
        coeff_at: Option<String>,
    },
    /// Sup/inf convolution sweep over a list of epsilons.
    Convolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Strict-supersolution perturbation of the scenario's `v` field.
    Perturb {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Sampled check of the operator's declared structure properties.
    StructureCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Full comparison-principle verification pipeline.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn read_config(path: &Path) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    ScenarioConfig::from_json(&text).map_err(|e| e.to_string())
}

fn write_out(
    out: &Option<PathBuf>,
    report_name: &str,
    report_json: &str,
    csvs: &[(String, String)],
    format: Format,
) -> Result<(), String> {
    let Some(dir) = out else { return Ok(()) };
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(report_name);
    std::fs::write(&path, report_json)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    if format == Format::Csv {
        for (name, body) in csvs {
            let path = dir.join(name);
            std::fs::write(&path, body)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}

fn resolve_group(arg: &str) -> Result<CarnotGroup, String> {
    let path = Path::new(arg);
    if path.exists() || arg.ends_with(".json") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        CarnotGroup::from_json(&text).map_err(|e| e.to_string())
    } else {
        CarnotGroup::by_name(arg).map_err(|e| e.to_string())
    }
}

fn run() -> Result<u8, String> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::GroupCheck { group, samples, seed, out, format, coeff_at } => {
            let g = resolve_group(&group)?;
            let report = run_group_check(&g, samples, seed).map_err(|e| e.to_string())?;
            let json = to_json(&report);
            print!("{json}");
            let mut csvs = Vec::new();
            if let Some(spec) = coeff_at {
                let coords: Result<Vec<f64>, _> =
                    spec.split(',').map(|t| t.trim().parse::<f64>()).collect();
                let coords = coords.map_err(|e| format!("bad --coeff-at point: {e}"))?;
                let csv = coefficient_csv(&g, &Point::new(coords)).map_err(|e| e.to_string())?;
                csvs.push(("coefficient_matrix.csv".to_string(), csv));
            }
            write_out(&out, "group_check.json", &json, &csvs, format)?;
            Ok(if report.pass { 0 } else { 1 })
        }
        Cmd::Convolve { config, out, format } => {
            let cfg = read_config(&config)?;
            let res = scenario::run_convolve(&cfg).map_err(|e| e.to_string())?;
            let json = to_json(&res.report);
            print!("{json}");
            write_out(&out, "convolve_report.json", &json, &res.csvs, format)?;
            Ok(0)
        }
        Cmd::Perturb { config, out, format } => {
            let cfg = read_config(&config)?;
            let res = scenario::run_perturb(&cfg).map_err(|e| e.to_string())?;
            let json = to_json(&res.report);
            print!("{json}");
            write_out(&out, "perturb_report.json", &json, &res.csvs, format)?;
            Ok(if res.report.c_delta > 0.0 && res.report.bounds_hold { 0 } else { 1 })
        }
        Cmd::StructureCheck { config, out, samples, seed } => {
            let mut cfg = read_config(&config)?;
            if samples.is_some() {
                cfg.samples = samples;
            }
            if seed.is_some() {
                cfg.seed = seed;
            }
            let report = scenario::run_structure_check(&cfg).map_err(|e| e.to_string())?;
            let json = to_json(&report);
            print!("{json}");
            write_out(&out, "structure_report.json", &json, &[], Format::Json)?;
            Ok(if report.declared_hold { 0 } else { 1 })
        }
        Cmd::Compare { config, out, format, seed } => {
            let mut cfg = read_config(&config)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            let res = scenario::run_compare(&cfg).map_err(|e| e.to_string())?;
            let json = to_json(&res.report);
            print!("{json}");
            write_out(&out, "compare_report.json", &json, &res.csvs, format)?;
            Ok(match res.report.verdict {
                Verdict::Holds => 0,
                Verdict::HypothesisViolation | Verdict::CounterexampleCandidate => 1,
                Verdict::Inconclusive => 3,
            })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
