mod claims;
mod config;
mod error;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Arg, ArgMatches, Command};
use serde_json::{json, Value};

use claims::{claims_table, FitReport, Manifest, StatusFile};
use config::{add_keys, OutFormat, Settings, COMMON_KEYS};
use error::{exit, CliError};
use experiments::{Experiment, Output, EXPERIMENTS};

const VERSION: &str = env!("HEISLAB_VERSION");

fn cli() -> Command {
    let mut cmd = Command::new("heislab")
        .version(VERSION)
        .about("Numerical experiments on oriented walks and percolation in the discrete Heisenberg group")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for e in EXPERIMENTS {
        let sub = Command::new(e.name).about(e.about);
        let sub = add_keys(sub, &[e.keys, COMMON_KEYS].concat());
        cmd = cmd.subcommand(sub);
    }
    cmd.subcommand(
        Command::new("claims")
            .about("List the claims in the manifest with their last recorded status")
            .arg(Arg::new("manifest").long("manifest").value_name("FILE"))
            .arg(
                Arg::new("status-path")
                    .long("status-path")
                    .value_name("FILE")
                    .default_value("heislab-status.json"),
            ),
    )
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let result = match matches.subcommand() {
        Some(("claims", m)) => show_claims(m),
        Some((name, m)) => match experiments::find(name) {
            Some(e) => run_experiment(e, m),
            None => Err(CliError::Config(format!("unknown experiment {name:?}"))),
        },
        None => Err(CliError::Config("no experiment given".into())),
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("heislab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn show_claims(m: &ArgMatches) -> Result<(), CliError> {
    let manifest = Manifest::load(m.get_one::<String>("manifest").map(String::as_str))?;
    let status = StatusFile::load(Path::new(m.get_one::<String>("status-path").unwrap()))?;
    print!("{}", claims_table(&manifest, &status));
    Ok(())
}

fn run_experiment(e: &Experiment, m: &ArgMatches) -> Result<(), CliError> {
    let settings = Settings::resolve(e.name, &[e.keys, COMMON_KEYS].concat(), m)?;
    let format = settings.format()?;
    let threads = settings.threads()?;
    settings.seed()?;
    let manifest = Manifest::load(settings.raw("manifest"))?;
    let out_path = settings.raw("out-path").map(PathBuf::from);
    let summary_path = settings.raw("summary-path").map(PathBuf::from);
    let status_path = PathBuf::from(settings.raw("status-path").unwrap_or("heislab-status.json"));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|err| CliError::Config(format!("cannot start {threads} threads: {err}")))?;
    let start = Instant::now();
    let output = pool.install(|| (e.run)(&settings, &manifest))?;
    let runtime = start.elapsed().as_secs_f64();

    let summary = summary_json(e, &settings, &output, runtime);
    let body = match format {
        OutFormat::Csv => csv_text(e.header, &output.rows)?,
        OutFormat::Json => serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    };
    match &out_path {
        Some(p) => std::fs::write(p, &body).map_err(|err| io_error(p, err))?,
        None => print!("{body}"),
    }
    if let Some(p) = &summary_path {
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
        std::fs::write(p, text).map_err(|err| io_error(p, err))?;
    }

    if !output.fits.is_empty() {
        let mut status = StatusFile::load(&status_path)?;
        status.record(&output.fits, VERSION);
        status.save(&status_path)?;
    }
    for f in &output.fits {
        eprintln!(
            "claim {}: slope {:.4}, r^2 {:.4}, target {} +/- {}: {}",
            f.claim_id,
            f.slope,
            f.r_squared,
            f.target,
            f.tolerance,
            if f.pass { "pass" } else { "FAIL" }
        );
    }
    let failed: Vec<String> = output.fits.iter().filter(|f| !f.pass).map(|f| f.claim_id.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ClaimsFailed(failed))
    }
}

fn io_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {err}", path.display()))
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_text(header: &[&str], rows: &[Vec<Value>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |err: csv::Error| CliError::Io(err.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(cell)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|err| CliError::Io(err.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn fit_json(f: &FitReport) -> Value {
    json!({
        "claim_id": f.claim_id,
        "slope": experiments::num(f.slope),
        "intercept": experiments::num(f.intercept),
        "r_squared": experiments::num(f.r_squared),
        "range": f.range,
        "statistic": f.statistic,
        "target": f.target,
        "tolerance": f.tolerance,
        "pass": f.pass,
    })
}

fn summary_json(e: &Experiment, settings: &Settings, output: &Output, runtime: f64) -> Value {
    let results: Vec<Value> = output
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, Value> = e
                .header
                .iter()
                .zip(row)
                .map(|(h, v)| (h.to_string(), v.clone()))
                .collect();
            Value::Object(obj)
        })
        .collect();
    json!({
        "experiment": e.name,
        "config": settings.values,
        "results": results,
        "fits": output.fits.iter().map(fit_json).collect::<Vec<_>>(),
        "runtime_seconds": runtime,
        "version": VERSION,
        "diagnostics": output.diagnostics,
    })
}
