use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use tfplasma::cases::{Scale, Setup};
use tfplasma::config::{parse_config, CaseId, SchemeConfig};
use tfplasma::driver::{convergence_csv, convergence_study, run, RunError};
use tfplasma::maxwell::MaxwellScheme;
use tfplasma::output::Snapshot;
use tfplasma::stepper::Integrator;

#[derive(Parser)]
#[command(name = "tfplasma", version, about = "Two-fluid relativistic plasma solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a test case from a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key=value` with dotted keys for tables, e.g. `sources.eta=0.02`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Use the published resolutions and end times for unset fields.
        #[arg(long)]
        paper_scale: bool,
    },
    /// L1 errors and observed orders for a manufactured case.
    Convergence {
        #[arg(long)]
        case: CaseId,
        #[arg(long)]
        integrator: Integrator,
        #[arg(long, value_delimiter = ',', required = true)]
        cells: Vec<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        paper_scale: bool,
        /// Write the table here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a snapshot's header, value ranges and divergence norms.
    Inspect {
        #[arg(long)]
        snapshot: PathBuf,
    },
}

fn scale(paper: bool) -> Scale {
    if paper {
        Scale::Paper
    } else {
        Scale::Desk
    }
}

fn execute(cmd: Command) -> Result<(), RunError> {
    match cmd {
        Command::Run {
            config,
            overrides,
            paper_scale,
        } => {
            let cfg = parse_config(&config, &overrides)?;
            let setup = Setup::resolve(&cfg, scale(paper_scale))?;
            let s = run(setup)?;
            println!(
                "finished {} steps to t = {:.6} in {:.1?}; divB L1 {:.3e}, Gauss residual L1 {:.3e}; output in {}",
                s.steps,
                s.time,
                s.wall,
                s.last.div_b_l1,
                s.last.div_e_res_l1,
                s.output_dir.display()
            );
        }
        Command::Convergence {
            case,
            integrator,
            cells,
            t_end,
            paper_scale,
            out,
        } => {
            let mut cfg = SchemeConfig::new(case, MaxwellScheme::MultiD, integrator);
            cfg.t_end = t_end;
            let rows = convergence_study(&cfg, scale(paper_scale), &cells)?;
            let csv = convergence_csv(&rows);
            print!("{csv}");
            if let Some(p) = out {
                std::fs::write(p, csv)?;
            }
        }
        Command::Inspect { snapshot } => {
            let s = Snapshot::read(&snapshot)?;
            println!("nx {} ny {} dx {:e} dy {:e} time {}", s.nx, s.ny, s.dx, s.dy, s.time);
            for (name, col) in [("rho_i", 16), ("p_i", 20), ("rho_e", 21), ("p_e", 25), ("B_z", 12), ("E_z", 15)] {
                let (lo, hi) = s.range(col);
                println!("{name:>6} [{lo:.6e}, {hi:.6e}]");
            }
            let (l1, l2) = s.interior_div_b();
            println!("divB L1 {l1:.6e} L2 {l2:.6e} (interior vertices)");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
