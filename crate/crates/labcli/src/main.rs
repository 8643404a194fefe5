use clap::{Args, Parser, Subcommand};
use labcli::commands::{self, Outcome, Overrides};
use labcli::config::{parse_cap, ExperimentConfig};
use labcli::{exit, exit_code, outcome_code};
use mflab::{Error, Result};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "labcli", version, about = "Blow-up experiments for singular mean field equations on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to `run.out` of the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated ε values.
    #[arg(long, global = true, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    /// Uniform mesh size.
    #[arg(long, global = true)]
    mesh_h: Option<f64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// FEM Green functions against the closed form and symmetry.
    GreenCheck,
    /// Bubble masses and self-energies over the λ ladder.
    BubbleCheck,
    /// Resonant values up to a cap such as `40pi`.
    Resonance {
        #[arg(long)]
        cap: String,
    },
    /// Critical point of the reduced functional with a stability probe.
    FindCritical,
    /// Ansatz energy, residual and mass over the ε grid.
    Sweep,
    /// Newton correction over the ε grid.
    Newton,
    /// All acceptance criteria.
    VerifyAll,
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
    let path = path.ok_or_else(|| Error::Parameter("--config is required for this command".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parameter(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

fn run(cli: &Cli) -> Result<(Outcome, PathBuf)> {
    let c = &cli.common;
    let ov = Overrides { eps_grid: c.eps_grid.clone(), mesh_h: c.mesh_h, seed: c.seed, out: c.out.clone(), svg: c.svg };
    let cfg = match (&cli.command, &c.config) {
        (Command::VerifyAll, None) => None,
        _ => Some(load(c.config.as_deref())?),
    };
    let out_dir = PathBuf::from(ov.run(cfg.as_ref()).out);
    let need = || cfg.as_ref().expect("configuration loaded above");
    let outcome = match &cli.command {
        Command::GreenCheck => commands::green_check(need(), &ov)?,
        Command::BubbleCheck => commands::bubble_check(need(), &ov)?,
        Command::Resonance { cap } => commands::resonance(need(), parse_cap(cap)?)?,
        Command::FindCritical => commands::find_critical_cmd(need(), &ov)?,
        Command::Sweep => commands::sweep(need(), &ov)?,
        Command::Newton => commands::newton(need(), &ov)?,
        Command::VerifyAll => commands::verify_all(cfg.as_ref(), &ov)?,
    };
    Ok((outcome, out_dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::USAGE as u8);
        }
    }
    let code = match run(&cli) {
        Ok((outcome, dir)) => {
            let mut stdout = std::io::stdout().lock();
            for l in &outcome.report.summary {
                if writeln!(stdout, "{l}").is_err() {
                    break;
                }
            }
            match outcome.report.write(&dir) {
                Ok(_) => outcome_code(&outcome),
                Err(e) => {
                    eprintln!("error: writing {}: {e}", dir.display());
                    exit::NUMERIC
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
