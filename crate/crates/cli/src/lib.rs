//! Batch front end for the twin experiments: single runs from a config
//! file, catalog suites, reference-only runs and catalog listing.

pub mod artifacts;
pub mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use benard_cda::config::{parse_config_str, render_config};
use benard_cda::experiments::{
    reference_groups, run_reference, run_twins, scenario_catalog, CatalogEntry, ScenarioConfig,
};
use benard_cda::Error;
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use artifacts::{summary_row, write_reference, write_twin, SUMMARY_HEADER, TIMING_HEADER};
use manifest::{config_hash, RunManifest, ScenarioEntry, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMING_FILE: &str = "timing.csv";

#[derive(Debug, Parser)]
#[command(name = "benard-cda", version, about = "Twin experiments for data assimilation in Benard convection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one twin experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the noise seed of the config.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Run every catalog scenario whose name matches a glob.
    Suite {
        #[arg(long)]
        filter: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        jobs: Option<NonZeroUsize>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Integrate only the reference run and export its observations.
    Reference {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// List catalog scenario names.
    Catalog {
        #[arg(long)]
        filter: Option<String>,
    },
}

/// Process exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) | Error::Parse { .. } => EXIT_CONFIG,
        Error::Incompatible { .. } | Error::BlowUp { .. } => EXIT_BLOW_UP,
        Error::Io(_) => EXIT_IO,
        Error::Scenario { .. } => unreachable!("root looks through scenario wrappers"),
    }
}

/// Failure with its exit status and a one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn io(context: &str, path: &Path, err: impl std::fmt::Display) -> Self {
        Self::new(EXIT_IO, format!("{context} `{}`: {err}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

/// Parse arguments and execute; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command, &mut std::io::stdout()) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn std::io::Write) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, seed_override } => cmd_run(config, out, *seed_override),
        Command::Suite { filter, out, jobs, seed_override } => {
            let jobs = jobs.map_or_else(default_jobs, NonZeroUsize::get);
            cmd_suite(filter, out, jobs, *seed_override)
        }
        Command::Reference { config, out, seed_override } => cmd_reference(config, out, *seed_override),
        Command::Catalog { filter } => {
            for entry in select(filter.as_deref().unwrap_or("*"))? {
                writeln!(stdout, "{}", entry.name).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
            }
            Ok(())
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

/// Catalog entries matching `filter`, in catalog order.
pub fn select(filter: &str) -> Result<Vec<CatalogEntry>, Failure> {
    let pattern = glob::Pattern::new(filter)
        .map_err(|e| Failure::new(EXIT_CONFIG, format!("invalid filter `{filter}`: {e}")))?;
    let chosen: Vec<CatalogEntry> = scenario_catalog().into_iter().filter(|e| pattern.matches(&e.name)).collect();
    if chosen.is_empty() {
        return Err(Failure::new(EXIT_CONFIG, format!("no scenarios selected by filter `{filter}`")));
    }
    Ok(chosen)
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<(ScenarioConfig, Vec<u8>), Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::new(EXIT_CONFIG, format!("cannot read config `{}`: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Failure::new(EXIT_CONFIG, format!("config `{}` is not UTF-8", path.display())))?;
    let mut config = parse_config_str(text).map_err(|e| {
        let f = Failure::from(e);
        Failure::new(f.code, format!("{}: {}", path.display(), f.message))
    })?;
    apply_seed(&mut config, seed_override);
    Ok((config, bytes))
}

fn apply_seed(config: &mut ScenarioConfig, seed_override: Option<u64>) {
    if let Some(seed) = seed_override {
        config.noise.seed = seed;
    }
}

fn seed_bytes(seed_override: Option<u64>) -> Vec<u8> {
    seed_override.map(|s| s.to_le_bytes().to_vec()).unwrap_or_default()
}

fn prepare_out(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::io("cannot create output directory", out, e))
}

struct Outcome {
    entry: ScenarioEntry,
    summary: Option<String>,
    code: i32,
}

/// Run `entries` as reference-sharing work units on `jobs` threads and
/// write each scenario's files from the worker that ran it.
fn run_entries(entries: &[CatalogEntry], out: &Path, jobs: usize) -> Result<Vec<Outcome>, Failure> {
    let configs: Vec<ScenarioConfig> = entries.iter().map(|e| e.config.clone()).collect();
    let chunk = entries.len().div_ceil(jobs).max(1);
    let units: Vec<Vec<usize>> = reference_groups(&configs)
        .into_iter()
        .flat_map(|g| g.chunks(chunk).map(<[usize]>::to_vec).collect::<Vec<_>>())
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::new(EXIT_CONFIG, format!("cannot start {jobs} workers: {e}")))?;
    let done: Vec<Vec<(usize, Outcome)>> = pool.install(|| {
        units.par_iter().map(|unit| run_unit(unit, entries, &configs, out)).collect()
    });
    let mut slots: Vec<Option<Outcome>> = entries.iter().map(|_| None).collect();
    for (i, o) in done.into_iter().flatten() {
        slots[i] = Some(o);
    }
    Ok(slots.into_iter().map(|o| o.expect("every scenario runs once")).collect())
}

fn run_unit(unit: &[usize], entries: &[CatalogEntry], configs: &[ScenarioConfig], out: &Path) -> Vec<(usize, Outcome)> {
    let members: Vec<ScenarioConfig> = unit.iter().map(|&i| configs[i].clone()).collect();
    let clock = Instant::now();
    let results = run_twins(&members);
    let share = clock.elapsed().as_secs_f64() / unit.len() as f64;
    unit.iter()
        .zip(results)
        .map(|(&i, result)| {
            let entry = &entries[i];
            let mut record = ScenarioEntry {
                name: entry.name.clone(),
                group: entry.group.clone(),
                status: Status::Ok,
                error: None,
                seconds: share,
                files: Vec::new(),
            };
            let written = result.and_then(|r| {
                record.seconds = r.compute_time.as_secs_f64();
                let files = write_twin(out, &entry.config, &r)?;
                Ok((files, summary_row(&entry.group, &r)))
            });
            let (summary, code) = match written {
                Ok((files, row)) => {
                    record.files = files;
                    (Some(row), EXIT_OK)
                }
                Err(e) => {
                    record.status = Status::Failed;
                    record.error = Some(e.to_string());
                    (None, exit_code(&e))
                }
            };
            (i, Outcome { entry: record, summary, code })
        })
        .collect()
}

/// Write tables and manifest; the first failure in scenario order decides
/// the exit status.
fn finish(mut manifest: RunManifest, outcomes: Vec<Outcome>, out: &Path) -> Result<(), Failure> {
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut timing = format!("{TIMING_HEADER}\n");
    let mut failed = None;
    for o in outcomes {
        if let Some(row) = &o.summary {
            summary.push_str(row);
            summary.push('\n');
        }
        let _ = writeln!(timing, "{},{},{:.6}", o.entry.name, o.entry.group, o.entry.seconds);
        if o.code != EXIT_OK && failed.is_none() {
            failed = Some((o.code, o.entry.error.clone().unwrap_or_default()));
        }
        manifest.scenarios.push(o.entry);
    }
    for (name, text) in [(SUMMARY_FILE, &summary), (TIMING_FILE, &timing)] {
        let path = out.join(name);
        fs::write(&path, text).map_err(|e| Failure::io("cannot write", &path, e))?;
        manifest.files.push(name.to_owned());
    }
    manifest.write(out).map_err(|e| Failure::io("cannot write manifest in", out, e))?;
    match failed {
        None => Ok(()),
        Some((code, first)) => {
            let n = manifest.failures();
            Err(Failure::new(code, format!("{n} of {} scenarios failed; first: {first}", manifest.scenarios.len())))
        }
    }
}

pub fn cmd_run(config_path: &Path, out: &Path, seed_override: Option<u64>) -> Result<(), Failure> {
    let (config, bytes) = load_config(config_path, seed_override)?;
    prepare_out(out)?;
    let hash = config_hash([bytes.as_slice(), &seed_bytes(seed_override)]);
    let entry = CatalogEntry { name: config.name.clone(), group: config.name.clone(), config };
    let outcomes = run_entries(std::slice::from_ref(&entry), out, 1)?;
    finish(RunManifest::new("run", out, hash), outcomes, out)
}

pub fn cmd_suite(filter: &str, out: &Path, jobs: usize, seed_override: Option<u64>) -> Result<(), Failure> {
    let mut entries = select(filter)?;
    for e in &mut entries {
        apply_seed(&mut e.config, seed_override);
    }
    prepare_out(out)?;
    let rendered: Vec<String> = entries.iter().map(|e| render_config(&e.config)).collect();
    let hash = config_hash(rendered.iter().map(String::as_bytes));
    let outcomes = run_entries(&entries, out, jobs.max(1))?;
    finish(RunManifest::new(&format!("suite {filter}"), out, hash), outcomes, out)
}

pub fn cmd_reference(config_path: &Path, out: &Path, seed_override: Option<u64>) -> Result<(), Failure> {
    let (config, bytes) = load_config(config_path, seed_override)?;
    prepare_out(out)?;
    let mut manifest =
        RunManifest::new("reference", out, config_hash([bytes.as_slice(), &seed_bytes(seed_override)]));
    let clock = Instant::now();
    let result = run_reference(&config).and_then(|run| write_reference(out, &config, &run));
    let mut entry = ScenarioEntry {
        name: config.name.clone(),
        group: config.name.clone(),
        status: Status::Ok,
        error: None,
        seconds: clock.elapsed().as_secs_f64(),
        files: Vec::new(),
    };
    let failure = match result {
        Ok(files) => {
            entry.files = files;
            None
        }
        Err(e) => {
            entry.status = Status::Failed;
            entry.error = Some(e.to_string());
            Some(Failure::from(e))
        }
    };
    manifest.scenarios.push(entry);
    manifest.write(out).map_err(|e| Failure::io("cannot write manifest in", out, e))?;
    failure.map_or(Ok(()), Err)
}
