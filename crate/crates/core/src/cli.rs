//! Command-line front end: `antsel generate` and `antsel run`.
//!
//! Exit codes: 0 on success, 1 when a run fails at runtime, 2 for usage or
//! configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    best_rates, build_scenario, compare_subcarrier_policies, csi_robustness, sweep_neighborhood, sweep_selected_count,
    write_csv, Algorithm, ResultDocument, RunResult, ScenarioConfig,
};

pub const CONFIG_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Sweep,
    Neighborhood,
    Subcarriers,
    Csi,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Sweep => "sweep",
            Experiment::Neighborhood => "neighborhood",
            Experiment::Subcarriers => "subcarriers",
            Experiment::Csi => "csi",
        }
    }
}

/// Versioned configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub version: u32,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    /// Used when `--experiment` is not given.
    #[serde(default)]
    pub experiment: Option<Experiment>,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: ConfigDocument = serde_json::from_str(text)?;
        if doc.version != CONFIG_VERSION {
            return Err(Error::Format(format!("unsupported config version {}, expected {CONFIG_VERSION}", doc.version)));
        }
        doc.scenario.validate()?;
        Ok(doc)
    }
}

#[derive(Debug, Parser)]
#[command(name = "antsel", version, about = "Transmit antenna selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the scenario geometry (JSON) and normalized channel tensor (binary).
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; receives geometry.json and channel.bin.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// User count; defaults to the first configured one.
        #[arg(long)]
        users: Option<usize>,
    },
    /// Run an experiment and write its table as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        experiment: Option<Experiment>,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; never changes results.
        #[arg(long)]
        threads: Option<usize>,
        /// Also write a JSON mirror with the config embedded.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Fill the wall_time_ms column (makes output vary between runs).
        #[arg(long)]
        record_timing: bool,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> std::result::Result<ConfigDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut doc = ConfigDocument::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        doc.scenario.master_seed = s;
    }
    Ok(doc)
}

/// Parses `args` (including the program name), executes the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            let mut cmd = Cli::command();
            cmd.build();
            let sub = args.get(1).and_then(|a| a.to_str()).and_then(|name| cmd.find_subcommand_mut(name).cloned());
            let usage = match sub {
                Some(mut sub) => sub.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("\n{usage}");
            return EXIT_USAGE;
        }
    };
    let outcome = match cli.command {
        Command::Generate { config, out, seed, users } => cmd_generate(&config, &out, seed, users),
        Command::Run { config, experiment, out, seed, threads, json, record_timing } => {
            cmd_run(&config, experiment, &out, seed, threads, json.as_deref(), record_timing)
        }
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn cmd_generate(config: &Path, out: &Path, seed: Option<u64>, users: Option<usize>) -> std::result::Result<(), Failure> {
    let doc = load_config(config, seed)?;
    let n_users = users.unwrap_or(doc.scenario.user_counts[0]);
    if n_users == 0 {
        return Err(Failure::Usage("--users must be positive".into()));
    }
    let scn = build_scenario(&doc.scenario, n_users)?;
    fs::create_dir_all(out).map_err(Error::from)?;
    fs::write(out.join("geometry.json"), scn.geometry.to_json()?).map_err(Error::from)?;
    fs::write(out.join("channel.bin"), scn.tensor.to_bytes()).map_err(Error::from)?;
    Ok(())
}

fn run_experiment(config: &ScenarioConfig, experiment: Experiment) -> Result<Vec<RunResult>> {
    match experiment {
        Experiment::Sweep => sweep_selected_count(config, &Algorithm::ALL),
        Experiment::Neighborhood => Ok(sweep_neighborhood(config, &config.local.k_grid)?
            .iter()
            .map(|r| {
                let mut row = r.to_run_result(config.power_control);
                row.policy = config.local.subcarrier_policy.label(config.grid.n_subcarriers);
                row
            })
            .collect()),
        Experiment::Subcarriers => compare_subcarrier_policies(config),
        Experiment::Csi => Ok(csi_robustness(config, config.study.csi_error)?
            .into_iter()
            .flat_map(|p| [p.clean, p.perturbed])
            .collect()),
    }
}

fn cmd_run(
    config: &Path,
    experiment: Option<Experiment>,
    out: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
    json: Option<&Path>,
    record_timing: bool,
) -> std::result::Result<(), Failure> {
    let doc = load_config(config, seed)?;
    let experiment = experiment
        .or(doc.experiment)
        .ok_or_else(|| Failure::Usage("no experiment given (use --experiment or the config's experiment key)".into()))?;
    if threads == Some(0) {
        return Err(Failure::Usage("--threads must be positive".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;

    // One run per user count, so that a failing count does not hide the others.
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    pool.install(|| {
        for &n in &doc.scenario.user_counts {
            let cfg = ScenarioConfig { user_counts: vec![n], ..doc.scenario.clone() };
            match run_experiment(&cfg, experiment) {
                Ok(r) => rows.extend(r),
                Err(e) => failures.push(format!("{} users={n}: {e}", experiment.name())),
            }
        }
    });

    let file = fs::File::create(out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
    write_csv(&rows, std::io::BufWriter::new(file), record_timing)?;
    if let Some(path) = json {
        let mut rows = rows.clone();
        if !record_timing {
            rows.iter_mut().for_each(|r| r.wall_time_ms = 0.0);
        }
        let doc = ResultDocument { experiment: experiment.name().into(), config: doc.scenario.clone(), rows };
        fs::write(path, serde_json::to_string_pretty(&doc).map_err(Error::from)?).map_err(Error::from)?;
    }

    let stdout = std::io::stdout();
    let mut so = stdout.lock();
    for (alg, r) in best_rates(&rows) {
        let k = r.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(so, "{alg}\tusers={}\tk={k}\tpolicy={}\tn_selected={}\tzf_rate={}", r.n_users, r.policy, r.n_selected, r.zf_rate);
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} run(s) failed:\n  {}", failures.len(), failures.join("\n  "))))
    }
}
