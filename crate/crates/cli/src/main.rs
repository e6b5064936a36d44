use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pilotwave::error::Error;
use pilotwave::scenario::{bundled_text, diff_reports, run_scenario, RunOptions, RunReport, ScenarioConfig, Stage};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "pilotwave", version, about = "Pilot-wave scenario runner")]
struct Cli {
    /// Scenario TOML file, or the name of a bundled scenario.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory; overrides `scenario.output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `scenario.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Evolve the initial state and dump the final field.
    Evolve,
    /// Evolve and integrate the configured trajectory ensemble.
    Trajectories,
    /// Exchange-symmetry classification.
    Classify,
    /// Winding-number phase table of a two-particle planar state.
    AnyonPhase,
    /// Equivariance or Nelson stationarity test.
    Equilibrium,
    /// Walls-up, flip and merge protocol on boxed spinors.
    SpinProtocol,
    /// Every stage the scenario enables.
    Run,
    /// Compare two report.json files.
    DiffReports {
        a: PathBuf,
        b: PathBuf,
        /// Relative tolerance for numeric fields.
        #[arg(long, default_value_t = 1e-12)]
        rel_tolerance: f64,
    },
    /// List the bundled scenarios, or print one.
    Bundled { name: Option<String> },
}

fn load_config(spec: &str) -> Result<ScenarioConfig, Error> {
    let path = Path::new(spec);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{spec}: {e}")))?
    } else if let Some(t) = bundled_text(spec) {
        t.to_string()
    } else {
        return Err(Error::Config(format!("{spec}: no such file or bundled scenario")));
    };
    ScenarioConfig::from_toml(&text)
}

fn stages(verb: &Verb, cfg: &ScenarioConfig) -> Result<Vec<Stage>, Error> {
    let a = &cfg.analysis;
    let need = |present: bool, block: &str| {
        if present {
            Ok(())
        } else {
            Err(Error::Config(format!("scenario {} has no [analysis.{block}] block", cfg.scenario.name)))
        }
    };
    Ok(match verb {
        Verb::Evolve => {
            need(cfg.initial.is_some() && cfg.stepper.steps > 0, "evolution (stepper.steps > 0)")?;
            vec![Stage::Evolve]
        }
        Verb::Trajectories => {
            need(a.trajectories.is_some(), "trajectories")?;
            vec![Stage::Trajectories]
        }
        Verb::Classify => {
            need(a.symmetry.is_some(), "symmetry")?;
            vec![Stage::Classify]
        }
        Verb::AnyonPhase => {
            need(a.winding.is_some(), "winding")?;
            vec![Stage::Winding]
        }
        Verb::Equilibrium => {
            need(a.equilibrium.is_some(), "equilibrium")?;
            vec![Stage::Equilibrium]
        }
        Verb::SpinProtocol => {
            need(a.spin.is_some(), "spin")?;
            vec![Stage::Spin]
        }
        Verb::Run => vec![],
        Verb::DiffReports { .. } | Verb::Bundled { .. } => unreachable!("handled before loading a config"),
    })
}

fn read_report(p: &Path) -> Result<RunReport, Error> {
    let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
    RunReport::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Incompatible(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_FAIL),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match &cli.verb {
        Verb::DiffReports { a, b, rel_tolerance } => {
            let diff = read_report(a).and_then(|ra| read_report(b).and_then(|rb| diff_reports(&ra, &rb, *rel_tolerance)));
            return match diff {
                Ok(d) if d.is_empty() => {
                    println!("no differences");
                    ExitCode::SUCCESS
                }
                Ok(d) => {
                    print!("{}", d.to_text());
                    ExitCode::from(EXIT_FAIL)
                }
                Err(e) => exit_for(&e),
            };
        }
        Verb::Bundled { name: None } => {
            for (n, _) in pilotwave::scenario::BUNDLED {
                println!("{n}");
            }
            return ExitCode::SUCCESS;
        }
        Verb::Bundled { name: Some(n) } => {
            return match bundled_text(n) {
                Some(t) => {
                    print!("{t}");
                    ExitCode::SUCCESS
                }
                None => exit_for(&Error::Config(format!("no bundled scenario {n:?}"))),
            };
        }
        _ => {}
    }
    let Some(spec) = &cli.config else {
        return exit_for(&Error::Config("--config is required".into()));
    };
    let mut cfg = match load_config(spec) {
        Ok(c) => c,
        Err(e) => return exit_for(&e),
    };
    if let Some(s) = cli.seed {
        cfg.scenario.seed = s;
    }
    let stages = match stages(&cli.verb, &cfg) {
        Ok(s) => s,
        Err(e) => return exit_for(&e),
    };
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.scenario.output_dir));
    match run_scenario(&cfg, &RunOptions { out_dir: out_dir.clone(), stages }) {
        Ok(report) => {
            for c in report.failed_checks() {
                eprintln!("FAIL {}: {} {} {} {}", c.name, c.value, c.relation.symbol(), c.tolerance, c.detail);
            }
            let n = report.checks.len();
            let failed = report.failed_checks().len();
            println!(
                "{} {}: {}/{} checks passed, report in {}",
                if failed == 0 { "PASS" } else { "FAIL" },
                report.scenario,
                n - failed,
                n,
                out_dir.display()
            );
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(e) => exit_for(&e),
    }
}
