//! Command-line front end: single-scenario solve/verify/simulate, ban and
//! bargaining comparisons, and plot-ready regime-map sweeps.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use datatrade::closed_form::{self, RegimeTag, Selection, ServiceSpace, SolveOptions};
use datatrade::model::Primitives;
use datatrade::oracle::verify_closed_form;
use datatrade::policy;
use datatrade::report::{self, RangeSpec, SweepSpec};
use datatrade::sim;

#[derive(Parser)]
#[command(
    name = "datatrade",
    version,
    about = "Solve, verify, and stress-test data-collection/data-trade mechanisms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write to this path instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_selection(s: &str) -> Result<Selection, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<RangeSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range `{s}` must be lo:hi:steps"));
    }
    let lo = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let hi = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let steps = parts[2].parse::<usize>().map_err(|e| e.to_string())?;
    Ok(RangeSpec::new(lo, hi, steps))
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Space {
    General,
    Binary,
}

impl From<Space> for ServiceSpace {
    fn from(s: Space) -> Self {
        match s {
            Space::General => ServiceSpace::General,
            Space::Binary => ServiceSpace::Binary,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Report the economy's optimal-mechanism regime
    Classify {
        #[arg(long)]
        primitives: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Construct the closed-form optimal mechanism
    Solve {
        #[arg(long)]
        primitives: PathBuf,
        /// Bargaining power in (0, 1]
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Point picked from the set-valued pi(l|H)
        #[arg(long, value_parser = parse_selection, default_value = "upper")]
        selection: Selection,
        /// Service space the menu draws from
        #[arg(long, value_enum, default_value = "general")]
        service_space: Space,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the closed form against the independent grid oracle
    Verify {
        #[arg(long)]
        primitives: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Agreement tolerance on the payoff gap
        #[arg(long, default_value_t = 5e-3)]
        tol: f64,
        /// Coarse grid pitch
        #[arg(long, default_value_t = 0.02)]
        grid_step: f64,
        /// Local refinement rounds (pitch shrinks 10x each)
        #[arg(long, default_value_t = 3)]
        refine: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo play-out of the solved mechanism
    Simulate {
        #[arg(long)]
        primitives: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, value_parser = parse_selection, default_value = "upper")]
        selection: Selection,
        /// Number of simulated consumers
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Welfare with the data market versus a data-trade ban
    CompareBan {
        #[arg(long)]
        primitives: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Surplus table across bargaining powers (repeat --beta to customize)
    BetaSweep {
        #[arg(long)]
        primitives: PathBuf,
        #[arg(long = "beta")]
        betas: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep (mu0, delta^2/dv) and emit one row per grid cell
    RegimeMap {
        /// Base primitives; the sweep varies mu0 and H
        #[arg(long)]
        primitives: PathBuf,
        /// lo:hi:steps for mu0
        #[arg(long, value_parser = parse_range, default_value = "0.05:0.95:50")]
        mu0_range: RangeSpec,
        /// lo:hi:steps for delta^2/dv
        #[arg(long, value_parser = parse_range, default_value = "0.05:2:50")]
        ratio_range: RangeSpec,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Surplus distribution with and without the data market
    SurplusTable {
        /// One or more economies (repeat the flag)
        #[arg(long, required = true)]
        primitives: Vec<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn load_primitives(path: &PathBuf) -> Result<Primitives> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read primitives file {}", path.display()))?;
    let p: Primitives = serde_json::from_str(&text)
        .with_context(|| format!("malformed primitives file {}", path.display()))?;
    p.validate()?;
    Ok(p)
}

fn emit(output: &OutputArgs, text: String) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("cannot write output to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Solves with the requested options, falling back to the two-branch
/// knife-edge solution (larger welfare) where the single closed form is
/// undefined.
fn solve_for(
    p: &Primitives,
    beta: f64,
    opts: &SolveOptions,
) -> Result<closed_form::SolutionBundle> {
    let regime = closed_form::classify_regime(p)?;
    let bundle = if regime.tag == RegimeTag::Boundary {
        let both = closed_form::solve_boundary(p, opts)?;
        if both.large_branch.welfare >= both.small_branch.welfare {
            both.large_branch
        } else {
            both.small_branch
        }
    } else if beta == 1.0 {
        closed_form::solve(p, opts)?
    } else {
        closed_form::solve_bargaining(p, beta, opts)?
    };
    Ok(bundle)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Classify { primitives, output } => {
            let p = load_primitives(&primitives)?;
            let regime = closed_form::classify_regime(&p)?;
            let text = match output.format {
                Format::Json => report::to_json_string(&regime),
                Format::Csv => report::classify_csv(&regime),
            };
            emit(&output, text)?;
        }
        Command::Solve {
            primitives,
            beta,
            selection,
            service_space,
            output,
        } => {
            let p = load_primitives(&primitives)?;
            let opts = SolveOptions {
                selection,
                service_space: service_space.into(),
            };
            let regime = closed_form::classify_regime(&p)?;
            let text = if regime.tag == RegimeTag::Boundary && beta == 1.0 {
                // Knife edge: report both branch solutions.
                let both = closed_form::solve_boundary(&p, &opts)?;
                match output.format {
                    Format::Json => report::to_json_string(&both),
                    Format::Csv => report::boundary_csv(&both),
                }
            } else {
                let bundle = solve_for(&p, beta, &opts)?;
                match output.format {
                    Format::Json => report::to_json_string(&bundle),
                    Format::Csv => report::bundle_csv(&bundle),
                }
            };
            emit(&output, text)?;
        }
        Command::Verify {
            primitives,
            beta,
            tol,
            grid_step,
            refine,
            output,
        } => {
            let p = load_primitives(&primitives)?;
            let verification = verify_closed_form(&p, beta, tol, grid_step, refine)?;
            let text = match output.format {
                Format::Json => report::to_json_string(&verification),
                Format::Csv => report::verification_csv(&verification),
            };
            emit(&output, text)?;
            if !verification.agree {
                eprintln!(
                    "verification disagreement: closed {} vs oracle {} (gap {})",
                    verification.closed_payoff, verification.oracle_payoff, verification.gap
                );
                return Ok(ExitCode::from(3));
            }
        }
        Command::Simulate {
            primitives,
            beta,
            selection,
            samples,
            seed,
            output,
        } => {
            let p = load_primitives(&primitives)?;
            let opts = SolveOptions::with_selection(selection);
            let bundle = solve_for(&p, beta, &opts)?;
            let sim_report = sim::simulate(&p, &bundle.mechanism, samples, seed);
            let text = match output.format {
                Format::Json => report::to_json_string(&sim_report),
                Format::Csv => sim_report.price_frequency_csv(),
            };
            emit(&output, text)?;
        }
        Command::CompareBan { primitives, output } => {
            let p = load_primitives(&primitives)?;
            let comparison = policy::compare_ban(&p)?;
            let text = match output.format {
                Format::Json => report::to_json_string(&comparison),
                Format::Csv => report::ban_csv(&comparison),
            };
            emit(&output, text)?;
        }
        Command::BetaSweep {
            primitives,
            betas,
            output,
        } => {
            let p = load_primitives(&primitives)?;
            let betas = if betas.is_empty() {
                vec![0.25, 0.5, 0.75, 1.0]
            } else {
                betas
            };
            let rows = policy::beta_sweep(&p, &betas)?;
            let text = match output.format {
                Format::Json => report::to_json_string(&rows),
                Format::Csv => report::beta_sweep_csv(&rows),
            };
            emit(&output, text)?;
        }
        Command::RegimeMap {
            primitives,
            mu0_range,
            ratio_range,
            output,
        } => {
            let base = load_primitives(&primitives)?;
            let spec = SweepSpec {
                mu0_range,
                ratio_range,
                base,
            };
            let rows = report::regime_map(&spec)?;
            let text = match output.format {
                Format::Json => report::to_json_string(&rows),
                Format::Csv => report::regime_map_csv(&rows),
            };
            emit(&output, text)?;
        }
        Command::SurplusTable { primitives, output } => {
            let ps = primitives
                .iter()
                .map(load_primitives)
                .collect::<Result<Vec<_>>>()?;
            let rows = policy::surplus_table(&ps)?;
            let text = match output.format {
                Format::Json => report::to_json_string(&rows),
                Format::Csv => report::surplus_table_csv(&rows),
            };
            emit(&output, text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
