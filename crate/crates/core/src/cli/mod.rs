//! Command-line front end: `train`, `oracle`, `check` and `version`.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical
//! failure, 3 check-suite failure.

mod config;
mod output;
mod snapshot;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{
    resolve_seed, GridSection, NetSection, OutputSection, ProblemSection, RunConfigFile, TrainSection, SEED_ENV,
};
pub use output::{csv_string, format_f64, line_chart};
pub use snapshot::{config_hash, LayerRecord, ModelSnapshot, SNAPSHOT_FORMAT, SNAPSHOT_VERSION};

use crate::checks::{run_suite, Suite};
use crate::error::{Error, Result};
use crate::metrics::uniform_grid;
use crate::oracle::integrate_reference;
use crate::problems::{problem_with, OdeProblem, ProblemOverrides};
use crate::training::{train_with, TrainReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_SUITE: u8 = 3;

/// Rows in `solution.csv` and `reference.csv`.
pub const OUTPUT_POINTS: usize = 1001;

#[derive(Debug, Parser)]
#[command(name = "stiffnet", version, about = "Stiff ODEs by rate-modulated network collocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a JSON run configuration.
    Train(TrainArgs),
    /// Integrate a built-in problem with the reference solver.
    Oracle(OracleArgs),
    /// Run a self-audit suite.
    Check(CheckArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Clone, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides both `STIFFNET_SEED` and `train.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write `solution.svg`.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, clap::Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CheckArgs {
    #[arg(long, value_parser = parse_suite)]
    pub suite: Suite,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_CONFIG
                }
            };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match cli.command {
        Command::Train(a) => cmd_train(&a, env_seed.as_deref(), out, err),
        Command::Oracle(a) => cmd_oracle(&a, out, err),
        Command::Check(a) => cmd_check(a.suite, out, err),
        Command::Version => {
            let _ = writeln!(out, "stiffnet {}", env!("CARGO_PKG_VERSION"));
            EXIT_OK
        }
    }
}

/// What a finished `train` run produced.
#[derive(Debug)]
pub struct TrainOutcome {
    pub dir: PathBuf,
    pub report: TrainReport,
}

fn io_context(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Config(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_context(path))
}

/// Loads the run configuration, applying seed and output-directory
/// overrides.
pub fn load_config(args: &TrainArgs, env_seed: Option<&str>) -> Result<RunConfigFile> {
    let text = fs::read_to_string(&args.config).map_err(io_context(&args.config))?;
    let mut cfg = RunConfigFile::from_json(&text)?;
    cfg.train.seed = resolve_seed(args.seed, env_seed, cfg.train.seed)?;
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    Ok(cfg)
}

/// Trains and writes `loss.csv`, `solution.csv`, `model.json`,
/// `report.json` and `config.json` into the output directory.
pub fn train_to_dir(cfg: &RunConfigFile, svg: bool, progress: &mut dyn Write) -> Result<TrainOutcome> {
    let (problem, tc) = cfg.resolve()?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).map_err(io_context(&dir))?;
    let every = (tc.iterations / 10).max(1);
    let (model, report) = train_with(&problem, &tc, |it, loss| {
        if (it + 1) % every == 0 {
            let _ = writeln!(progress, "iteration {:>6}  loss {loss:.6e}", it + 1);
        }
    })?;

    let loss_rows: Vec<[f64; 2]> = report.loss_history.iter().enumerate().map(|(i, &l)| [i as f64, l]).collect();
    let header = vec!["iteration".to_string(), "loss".to_string()];
    write_file(&dir.join("loss.csv"), &csv_string(&header, loss_rows.iter().map(|r| r.as_slice())))?;

    let times = uniform_grid(problem.horizon, OUTPUT_POINTS);
    let predicted = model.predict_many(&times);
    let truth = truth_rows(&problem, &times);
    let n = problem.n;
    let mut header = vec!["t".to_string()];
    header.extend(output::numbered("yhat", n));
    if truth.is_some() {
        header.extend(output::numbered("ytruth", n));
    }
    let rows: Vec<Vec<f64>> = match &predicted {
        Ok(p) => times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut row = vec![t];
                row.extend(&p[i]);
                if let Some(tr) = &truth {
                    row.extend(&tr[i]);
                }
                row
            })
            .collect(),
        Err(_) => vec![],
    };
    write_file(&dir.join("solution.csv"), &csv_string(&header, rows.iter().map(Vec::as_slice)))?;
    if svg {
        let series: Vec<(String, Vec<f64>)> = header[1..]
            .iter()
            .enumerate()
            .map(|(j, name)| (name.clone(), rows.iter().map(|r| r[j + 1]).collect()))
            .collect();
        let title = format!("{} (seed {})", problem.name, tc.seed);
        write_file(&dir.join("solution.svg"), &line_chart(&title, &times, &series))?;
    }

    let snapshot = ModelSnapshot::capture(&model, cfg.experiment_hash());
    match snapshot.to_json() {
        Ok(json) => write_file(&dir.join("model.json"), &json)?,
        Err(e) if report.diverged.is_some() => {
            let _ = writeln!(progress, "model.json not written: {e}");
        }
        Err(e) => return Err(e),
    }
    write_file(&dir.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    write_file(&dir.join("config.json"), &cfg.to_json())?;
    Ok(TrainOutcome { dir, report })
}

fn truth_rows(problem: &OdeProblem, times: &[f64]) -> Option<Vec<Vec<f64>>> {
    if let Some(exact) = &problem.exact {
        return Some(times.iter().map(|&t| exact(t)).collect());
    }
    integrate_reference(problem, 1e-10, 1e-10, times).ok().map(|r| r.states)
}

pub fn cmd_train(args: &TrainArgs, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let cfg = match load_config(args, env_seed) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    match train_to_dir(&cfg, args.svg, err) {
        Ok(outcome) => {
            let r = &outcome.report;
            let _ = writeln!(out, "problem {}  seed {}  iterations {}", r.problem, r.seed, r.iterations_run);
            if let Some(last) = r.loss_history.last() {
                let _ = writeln!(out, "final loss {last:.6e}  residual rms {:.3e}  ic error {:.3e}", r.final_residual_rms, r.ic_error);
            }
            if let Some(m) = &r.error {
                let _ = writeln!(out, "error vs {:?}: rel L2 {:.3e}  Linf {:.3e}", m.truth, m.rel_l2, m.linf);
            }
            let _ = writeln!(out, "wrote {}", outcome.dir.display());
            match &r.diverged {
                Some(d) => {
                    let _ = writeln!(err, "error: diverged at iteration {}: {}", d.iteration, d.message);
                    EXIT_NUMERICAL
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Writes `reference.csv` on the uniform output grid.
pub fn oracle_to_dir(args: &OracleArgs) -> Result<PathBuf> {
    let problem = problem_with(&args.problem, &ProblemOverrides { lambda: args.lambda, horizon: args.horizon })?;
    let times = uniform_grid(problem.horizon, OUTPUT_POINTS);
    let traj = integrate_reference(&problem, args.atol, args.rtol, &times)?;
    fs::create_dir_all(&args.out).map_err(io_context(&args.out))?;
    let mut header = vec!["t".to_string()];
    header.extend(output::numbered("y", problem.n));
    let rows: Vec<Vec<f64>> = times
        .iter()
        .zip(&traj.states)
        .map(|(&t, y)| std::iter::once(t).chain(y.iter().copied()).collect())
        .collect();
    let path = args.out.join("reference.csv");
    write_file(&path, &csv_string(&header, rows.iter().map(Vec::as_slice)))?;
    Ok(path)
}

pub fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match oracle_to_dir(args) {
        Ok(path) => {
            let _ = writeln!(out, "wrote {}", path.display());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn cmd_check(suite: Suite, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match run_suite(suite) {
        Ok(report) => {
            for line in &report.details {
                let _ = writeln!(out, "  {line}");
            }
            let _ = writeln!(out, "{report}");
            if report.passed {
                EXIT_OK
            } else {
                EXIT_SUITE
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_SUITE
        }
    }
}

impl RunConfigFile {
    /// Hash of the configuration with the output directory blanked, so
    /// identical experiments written to different places hash alike.
    pub fn experiment_hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        config_hash(&c.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (u8, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_from(std::iter::once("stiffnet").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn version_verb() {
        let (code, out, _) = run(&["version"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.trim(), format!("stiffnet {}", env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&[]).0, EXIT_CONFIG);
        assert_eq!(run(&["frobnicate"]).0, EXIT_CONFIG);
        assert_eq!(run(&["check", "--suite", "nope"]).0, EXIT_CONFIG);
        assert_eq!(run(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn unknown_problem_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, err) = run(&["oracle", "--problem", "nope", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("nope"));
    }

    #[test]
    fn missing_config_file_exits_one() {
        let (code, _, err) = run(&["train", "--config", "/definitely/not/here.json"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("not/here.json"));
    }

    #[test]
    fn experiment_hash_ignores_output_dir() {
        let a = RunConfigFile::default();
        let mut b = a.clone();
        b.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.experiment_hash(), b.experiment_hash());
        b.train.seed = 1;
        assert_ne!(a.experiment_hash(), b.experiment_hash());
    }
}
