use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ehpc_cli::*;

#[derive(Parser)]
#[command(name = "ehpc", version, about = "Power control for two energy-harvesting sensors")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use the reference constants and the two 10-slot arrival sequences.
    #[arg(long, global = true)]
    paper_defaults: bool,
    /// Directory for CSV/JSON outputs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Buffer model size.
    #[arg(long, global = true, value_enum)]
    scale: Option<ScaleArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Offline water-filling schedules for known traces.
    Offline {
        #[arg(long, value_enum)]
        oracle: Option<OracleArg>,
    },
    /// Optimal stationary policy by value iteration.
    Online,
    /// Policy comparison over a correlation sweep.
    Compare {
        /// Restrict to these policies (repeatable).
        #[arg(long, value_enum)]
        policy: Vec<PolicyArg>,
    },
    /// Overflow probability versus buffer size.
    Overflow,
    /// Convergence traces and the cost/distortion check.
    Convergence,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Ci,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    None,
    Exhaustive,
    Descent,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Greedy,
    Saveforward,
    Online,
    Offline,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if cli.paper_defaults {
        cfg.apply_paper_defaults();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = cli.scale {
        cfg.scale = match s {
            ScaleArg::Ci => Scale::Ci,
            ScaleArg::Paper => Scale::Paper,
        };
    }
    match &cli.command {
        Command::Offline { oracle: Some(o) } => {
            cfg.solver.oracle = match o {
                OracleArg::None => OracleChoice::None,
                OracleArg::Exhaustive => OracleChoice::Exhaustive,
                OracleArg::Descent => OracleChoice::Descent,
            }
        }
        Command::Compare { policy } if !policy.is_empty() => {
            cfg.compare.policies = policy
                .iter()
                .map(|p| match p {
                    PolicyArg::Greedy => PolicyChoice::Greedy,
                    PolicyArg::Saveforward => PolicyChoice::SaveForward,
                    PolicyArg::Online => PolicyChoice::Online,
                    PolicyArg::Offline => PolicyChoice::Offline,
                })
                .collect();
        }
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    configure_threads(std::env::var("EHPC_THREADS").ok().as_deref())?;
    let cfg = build_config(cli)?;
    let mut out = OutputDir::create(&cli.out)?;
    let (name, violations) = match &cli.command {
        Command::Offline { .. } => {
            let r = run_offline(&cfg, &mut out)?;
            eprintln!("objective {:.12} after {} iterations", r.objective, r.iterations);
            if let Some(o) = &r.oracle {
                eprintln!("oracle objective {:.12}, relative gap {:e}", o.objective, o.relative_gap);
            }
            ("offline", r.violations)
        }
        Command::Online => {
            let r = run_online(&cfg, &mut out)?;
            eprintln!(
                "{} states, {} iterations, expected distortion {:.6}, overflow ({:.3e}, {:.3e})",
                r.states, r.iterations, r.expected_distortion, r.overflow[0], r.overflow[1]
            );
            ("online", r.violations)
        }
        Command::Compare { .. } => {
            let r = run_compare(&cfg, &mut out)?;
            for row in &r.rows {
                eprintln!("sqrt_eta {:.3} {:>12} {:.6} +- {:.6}", row.sqrt_eta, row.policy, row.mean, row.stderr);
            }
            ("compare", r.violations)
        }
        Command::Overflow => {
            let r = run_overflow(&cfg, &mut out)?;
            for row in &r.rows {
                eprintln!("L {:>3}  q1 {:.4e}  q2 {:.4e}", row.l, row.q1, row.q2);
            }
            ("overflow", r.violations)
        }
        Command::Convergence => {
            let r = run_convergence(&cfg, &mut out)?;
            eprintln!("max error ratio {:.6} (alpha {})", r.max_ratio, r.alpha);
            ("convergence", r.violations)
        }
    };
    let dir = out.finish(name, &cfg)?;
    eprintln!("wrote {}", dir.display());
    Ok(violations)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) if v.is_empty() => ExitCode::SUCCESS,
        Ok(v) => {
            for m in &v {
                eprintln!("violation: {m}");
            }
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
