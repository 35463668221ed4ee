use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splitobs_cli::pipeline::{run_analyze_trace, Artifact};
use splitobs_cli::{fixtures, parse_scenario, run, CliError, Command, Outcome, Overrides, ScenarioFile};

#[derive(Parser)]
#[command(name = "splitobs", version, about = "Design, simulate and check split-spectrum distributed estimators")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize gains and coupling, print the design report.
    Design(Common),
    /// Simulate the plant and all estimators, write the trace and indicator CSVs.
    Simulate(Common),
    /// Fit the error decay and report the error spectra.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Fit an existing trace CSV instead of simulating a scenario.
        #[arg(long, conflicts_with_all = ["scenario", "fixture"])]
        trace: Option<PathBuf>,
    },
    /// Run the full invariant suite.
    Check {
        #[command(flatten)]
        common: Common,
        /// Check every bundled fixture concurrently.
        #[arg(long, conflicts_with_all = ["scenario", "fixture"])]
        all_fixtures: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long, conflicts_with = "fixture")]
    scenario: Option<PathBuf>,
    /// Bundled fixture name.
    #[arg(long)]
    fixture: Option<String>,
    /// Directory for reports and CSVs; without it they go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of a generated switching signal.
    #[arg(long)]
    seed: Option<u64>,
    /// Allow adaptive coupling on switching graphs.
    #[arg(long)]
    experimental_adaptive_switching: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, experimental_adaptive_switching: self.experimental_adaptive_switching }
    }

    fn load(&self) -> Result<ScenarioFile, CliError> {
        match (&self.scenario, &self.fixture) {
            (Some(path), _) => Ok(parse_scenario(path)?),
            (None, Some(name)) => match fixtures::load(name) {
                Some(f) => Ok(f?),
                None => Err(CliError::Usage(format!(
                    "unknown fixture `{name}`; available: {}",
                    fixtures::names().collect::<Vec<_>>().join(", ")
                ))),
            },
            (None, None) => Err(CliError::Usage("one of --scenario or --fixture is required".into())),
        }
    }

    fn out_dir(&self, file: Option<&ScenarioFile>) -> Option<PathBuf> {
        self.out.clone().or_else(|| file.and_then(|f| f.output.as_ref()).and_then(|o| o.dir.clone()).map(PathBuf::from))
    }
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let io = |path: &Path, source| CliError::Io { path: path.display().to_string(), source };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(|e| io(&path, e))?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

/// With an output directory, files go there and the summary to stdout. Without one, the main
/// artifact goes to stdout and the summary to stderr.
fn emit(outcome: &Outcome, dir: Option<&Path>) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            write_artifacts(dir, &outcome.artifacts)?;
            print!("{}", outcome.summary);
        }
        None => {
            if let Some(a) = outcome.artifacts.first() {
                print!("{}", a.contents);
            }
            eprint!("{}", outcome.summary);
        }
    }
    Ok(())
}

fn run_one(cmd: Command, common: &Common) -> Result<u8, CliError> {
    let file = common.load()?;
    let outcome = run(cmd, &file, &common.overrides())?;
    emit(&outcome, common.out_dir(Some(&file)).as_deref())?;
    Ok(outcome.status)
}

fn check_all(common: &Common) -> Result<u8, CliError> {
    let ov = common.overrides();
    let results: Vec<(&str, Result<Outcome, CliError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = fixtures::FIXTURES
            .iter()
            .map(|(name, text)| {
                (*name, s.spawn(move || splitobs_cli::parse_str(text).map_err(CliError::from).and_then(|f| run(Command::Check, &f, &ov))))
            })
            .collect();
        handles.into_iter().map(|(n, h)| (n, h.join().expect("check thread panicked"))).collect()
    });
    let mut status = 0u8;
    for (name, result) in results {
        match result {
            Ok(outcome) => {
                let failed = outcome.report["failed"].as_u64().unwrap_or(0);
                println!("{} {name} ({failed} failed)", if outcome.status == 0 { "PASS" } else { "FAIL" });
                if let Some(dir) = &common.out {
                    let renamed: Vec<Artifact> = outcome
                        .artifacts
                        .iter()
                        .map(|a| Artifact { name: format!("{name}.{}", a.name), contents: a.contents.clone() })
                        .collect();
                    write_artifacts(dir, &renamed)?;
                }
                status = status.max(outcome.status);
            }
            Err(e) => {
                println!("FAIL {name}: {e}");
                status = status.max(e.exit_code());
            }
        }
    }
    Ok(status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPLITOBS_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Design(c) => run_one(Command::Design, c),
        Cmd::Simulate(c) => run_one(Command::Simulate, c),
        Cmd::Analyze { common, trace: Some(path) } => std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })
            .and_then(|text| run_analyze_trace(&path.display().to_string(), &text))
            .and_then(|o| emit(&o, common.out_dir(None).as_deref()).map(|_| o.status)),
        Cmd::Analyze { common, trace: None } => run_one(Command::Analyze, common),
        Cmd::Check { common, all_fixtures: true } => check_all(common),
        Cmd::Check { common, all_fixtures: false } => run_one(Command::Check, common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
