use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use nas_core::config::parse_config;
use nas_core::fixtures;
use nas_core::runner::{run_experiment, Overrides, RunOutput};
use nas_core::NasError;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "nas", version, about = "Dynamical-property checkers for non-autonomous systems on finite models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of a config file.
    Run {
        /// Config path (same as --config).
        path: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in fixture.
    Fixture {
        /// Fixture name.
        name: Option<String>,
        /// List fixture names.
        #[arg(long)]
        list: bool,
        /// Run the whole catalog.
        #[arg(long, conflicts_with = "name")]
        all: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a single check by id.
    Check {
        id: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the stability checks.
    Stability {
        #[command(flatten)]
        common: Common,
    },
    /// Run the chain-relation and transitivity checks.
    Chain {
        #[command(flatten)]
        common: Common,
    },
    /// Run the shadowing checks.
    Shadow {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "fixture")]
    config: Option<PathBuf>,
    /// Built-in fixture instead of a config file.
    #[arg(long)]
    fixture: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated, descending.
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    #[arg(long, default_value = "nas-out")]
    out_dir: PathBuf,
    /// Worker threads for pair scans.
    #[arg(long, env = "NAS_JOBS")]
    jobs: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, horizon: self.horizon, eps: self.eps, delta_grid: self.delta_grid.clone() }
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<NasError> for Failure {
    fn from(e: NasError) -> Self {
        match e {
            NasError::Config(_) => Failure::Input(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool, Failure> {
    let (common, filter) = match cmd {
        Command::Run { path, mut common } => {
            if path.is_some() && common.config.is_some() {
                return Err(Failure::Input(anyhow::anyhow!("config given twice")));
            }
            common.config = common.config.or(path);
            (common, None)
        }
        Command::Fixture { list: true, .. } => {
            for n in fixtures::names() {
                say(n);
            }
            return Ok(true);
        }
        Command::Fixture { all: true, common, .. } => return run_catalog(&common),
        Command::Fixture { name, mut common, .. } => {
            if common.fixture.is_some() && name.is_some() {
                return Err(Failure::Input(anyhow::anyhow!("fixture given twice")));
            }
            common.fixture = common.fixture.or(name);
            (common, None)
        }
        Command::Check { id, common } => (common, Some(id)),
        Command::Stability { common } => (common, Some("stability".to_string())),
        Command::Chain { common } => (common, Some("chain".to_string())),
        Command::Shadow { common } => (common, Some("shadow".to_string())),
    };
    configure_jobs(common.jobs)?;
    let out = execute(&common, filter.as_deref())?;
    emit(&common.out_dir, &out, filter.as_deref())
}

fn configure_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::Input(anyhow::anyhow!("--jobs must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    Ok(())
}

fn execute(common: &Common, filter: Option<&str>) -> Result<RunOutput, Failure> {
    let ov = common.overrides();
    match (&common.config, &common.fixture) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Input)?;
            let cfg = parse_config(&text).map_err(|e| Failure::Input(anyhow::anyhow!("{}: {e}", path.display())))?;
            Ok(run_experiment(&cfg, &text, &ov, filter)?)
        }
        (None, Some(name)) => Ok(fixtures::run_fixture_with(name, &ov, filter)?),
        (None, None) => Err(Failure::Input(anyhow::anyhow!("either --config or --fixture is required"))),
    }
}

fn run_catalog(common: &Common) -> Result<bool, Failure> {
    if common.config.is_some() || common.fixture.is_some() {
        return Err(Failure::Input(anyhow::anyhow!("--all takes no config or fixture")));
    }
    configure_jobs(common.jobs)?;
    let ov = common.overrides();
    let names: Vec<&str> = fixtures::names().collect();
    let outs: Vec<_> = names.par_iter().map(|n| fixtures::run_fixture_with(n, &ov, None)).collect();
    let mut ok = true;
    for out in outs {
        ok &= emit(&common.out_dir, &out?, None)?;
    }
    Ok(ok)
}

fn emit(out_dir: &Path, out: &RunOutput, filter: Option<&str>) -> Result<bool, Failure> {
    let r = &out.report;
    let dir = out_dir.join(&r.name);
    let report_name = match filter {
        None => "report.json".to_string(),
        Some(f) => format!("report-{f}.json"),
    };
    let write = || -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, body) in &out.tables {
            write_atomic(&dir.join(name), body)?;
        }
        let path = dir.join(&report_name);
        write_atomic(&path, &r.to_json())?;
        Ok(path)
    };
    let path = write().map_err(Failure::Runtime)?;
    for c in &r.results {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let constant = c.verdict.constant_estimate.map(|v| format!(" c={v:.6}")).unwrap_or_default();
        say(&format!("{status} {}/{} [{:?}] holds={}{constant}", r.name, c.id, c.check, c.verdict.holds));
        for f in &c.failures {
            say(&format!("    {f}"));
        }
        if c.hypothesis_violated {
            say("    HYPOTHESIS-VIOLATED");
        }
    }
    say(&format!("report: {}", path.display()));
    Ok(r.all_passed && !r.hypothesis_violations)
}

/// Prints a line, ignoring a closed stdout.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn write_atomic(path: &Path, body: &str) -> anyhow::Result<()> {
    let file_name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(body.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}
