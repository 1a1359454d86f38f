//! `refrabill`: command-line front end of the refraction billiard engine.
//!
//! Exit codes: 0 success, 1 config or usage error, 2 inadmissible domain,
//! 3 solver failure, 4 early termination of the dynamics.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "refrabill", version, about = "Refraction billiards: central configurations, word realization, dynamics")]
struct Cli {
    /// TOML file with [curve], [params] and [run] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Inner energy jump h.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Interval half-width relative to the curve length.
    #[arg(long, global = true)]
    half_width: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Central configurations and the interval system.
    Ccs,
    /// Realize a word as a trajectory.
    Realize(RealizeArgs),
    /// Iterate the first-return map from a boundary state.
    Simulate(SimulateArgs),
    /// Threshold scan over a grid of h.
    Scan(ScanArgs),
    /// Linearization at homothetic fixed points.
    Saddle(SaddleArgs),
    /// Padded heteroclinic realizations.
    Heteroclinic(HeteroclinicArgs),
}

#[derive(Debug, Args)]
struct RealizeArgs {
    /// Word, e.g. 1,2,2,1.
    #[arg(long)]
    word: Option<String>,
    #[arg(long, conflicts_with = "fixed_ends")]
    periodic: bool,
    #[arg(long)]
    fixed_ends: bool,
    #[arg(long, requires = "xi_b")]
    xi_a: Option<f64>,
    #[arg(long, requires = "xi_a")]
    xi_b: Option<f64>,
    #[arg(long)]
    samples_per_arc: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    xi: Option<f64>,
    /// Angle of the outgoing velocity from the normal.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    backward: Option<usize>,
    /// Continue through crossings outside the interval system.
    #[arg(long)]
    permissive: bool,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Comma-separated h values.
    #[arg(long)]
    h_grid: Option<String>,
    /// Scan all periodic words up to this length when no words are given.
    #[arg(long)]
    max_length: Option<usize>,
}

#[derive(Debug, Args)]
struct SaddleArgs {
    /// 1-based configuration index; all when omitted.
    #[arg(long)]
    cc: Option<usize>,
}

#[derive(Debug, Args)]
struct HeteroclinicArgs {
    #[arg(long)]
    from: Option<usize>,
    #[arg(long)]
    to: Option<usize>,
    /// Comma-separated padding lengths.
    #[arg(long)]
    pad: Option<String>,
    /// Bridge word; repeat for several. Use "" for none.
    #[arg(long)]
    bridge: Vec<String>,
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',').map(|s| s.trim().parse::<T>().map_err(|_| format!("bad list entry {s:?}"))).collect()
}

fn run(cli: Cli) -> Result<commands::Outcome, String> {
    let mut file = config::load(cli.config.as_deref())?;
    if let Some(o) = cli.output {
        file.run.output = Some(o);
    }
    if let Some(h) = cli.h {
        file.params.h = Some(h);
    }
    if let Some(w) = cli.half_width {
        file.run.half_width = Some(w);
    }
    let name = match &cli.command {
        Command::Ccs => "ccs",
        Command::Realize(a) => {
            if let Some(w) = &a.word {
                file.run.words = Some(vec![w.clone()]);
            }
            if a.periodic {
                file.run.mode = Some(refrabill_core::jacobi::Mode::Periodic);
            }
            if a.fixed_ends {
                file.run.mode = Some(refrabill_core::jacobi::Mode::FixedEnds);
            }
            if let (Some(x), Some(y)) = (a.xi_a, a.xi_b) {
                file.run.endpoints = Some([x, y]);
            }
            if a.samples_per_arc.is_some() {
                file.run.samples_per_arc = a.samples_per_arc;
            }
            "realize"
        }
        Command::Simulate(a) => {
            file.run.xi = a.xi.or(file.run.xi);
            file.run.alpha = a.alpha.or(file.run.alpha);
            file.run.steps = a.steps.or(file.run.steps);
            file.run.backward = a.backward.or(file.run.backward);
            if a.permissive {
                file.run.permissive = Some(true);
            }
            "simulate"
        }
        Command::Scan(a) => {
            if let Some(g) = &a.h_grid {
                file.params.h_grid = Some(parse_list(g)?);
            }
            file.run.scan_max_length = a.max_length.or(file.run.scan_max_length);
            "scan"
        }
        Command::Saddle(a) => {
            file.run.cc = a.cc.or(file.run.cc);
            "saddle"
        }
        Command::Heteroclinic(a) => {
            file.run.from = a.from.or(file.run.from);
            file.run.to = a.to.or(file.run.to);
            if let Some(p) = &a.pad {
                file.run.pad = Some(parse_list(p)?);
            }
            if !a.bridge.is_empty() {
                file.run.bridges = Some(a.bridge.clone());
            }
            "heteroclinic"
        }
    };
    let cfg = config::ResolvedConfig::resolve(name, file)?;
    Ok(match cli.command {
        Command::Ccs => commands::ccs(&cfg),
        Command::Realize(_) => commands::realize(&cfg),
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Scan(_) => commands::scan(&cfg),
        Command::Saddle(_) => commands::saddle(&cfg),
        Command::Heteroclinic(_) => commands::heteroclinic(&cfg),
    })
}

fn init_threads() {
    if let Ok(v) = std::env::var("REFRABILL_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring REFRABILL_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_threads();
    match run(cli) {
        Ok(outcome) => {
            if let Some(msg) = &outcome.message {
                eprintln!("{msg}");
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(commands::Code::Config as u8)
        }
    }
}
