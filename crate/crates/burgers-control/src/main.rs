use burgers_control::config::ProblemConfig;
use burgers_control::csvio;
use burgers_control::experiments::{self, SweepKind};
use burgers_control::kernels::{verify_moments_scaled, KernelSpec};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "burgers-control", version, about = "Particle-based optimal control of the viscous Burgers equation")]
struct Cli {
    /// Flat key=value config file; flags override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV files
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Particle,
    Reference,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    Eps,
    H,
    Coupled,
}

#[derive(Subcommand)]
enum Command {
    /// Check the kernel moment conditions for a list of smoothing lengths
    VerifyKernel {
        /// Comma-separated ε values (default: 0.05,0.1,0.3,1.0)
        #[arg(long)]
        eps_list: Option<String>,
        /// Scale the kernel amplitude to demonstrate a failing check
        #[arg(long, hide = true)]
        corrupt_kernel: bool,
    },
    /// Run the optimization and write iteration log, control and state CSVs
    Optimize {
        #[arg(long, value_enum, default_value = "particle")]
        backend: Backend,
        /// Also dump the full particle trajectory (state + adjoint schema)
        #[arg(long)]
        dump_trajectory: bool,
    },
    /// Compute (or load) the reference optimum and dump it
    Reference,
    /// Convergence sweep against the cached reference optimum
    Convergence {
        #[arg(long, value_enum)]
        sweep: Sweep,
    },
}

fn load_config(cli: &Cli) -> burgers_control::Result<ProblemConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ProblemConfig::parse(&std::fs::read_to_string(path)?)?,
        None => ProblemConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> burgers_control::Result<bool> {
    let cfg = load_config(cli)?;
    let out_dir = PathBuf::from(&cfg.out_dir);
    match &cli.command {
        Command::VerifyKernel {
            eps_list,
            corrupt_kernel,
        } => {
            let eps: Vec<f64> = match eps_list {
                Some(s) => s
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| {
                        burgers_control::Error::Config(format!("bad eps list: {e}"))
                    })?,
                None => vec![0.05, 0.1, 0.3, 1.0],
            };
            let amplitude = if *corrupt_kernel { 1.1 } else { 1.0 };
            let mut all_pass = true;
            for &e in &eps {
                let spec = KernelSpec::gaussian(e)?;
                let rep = verify_moments_scaled(&spec, amplitude, 1e-10)?;
                println!(
                    "eps={e}: zeroth={:.12} first={:.3e} r_th_abs={:.6e} pass={}",
                    rep.zeroth, rep.first, rep.r_th_abs, rep.pass
                );
                all_pass &= rep.pass;
            }
            Ok(all_pass)
        }
        Command::Optimize {
            backend,
            dump_trajectory,
        } => match backend {
            Backend::Particle => {
                let result = experiments::run_particle_optimize(&cfg)?;
                csvio::write_iteration_log(&out_dir.join("iterations.csv"), &result)?;
                csvio::write_control(&out_dir.join("control.csv"), &result.control)?;
                if *dump_trajectory {
                    csvio::write_state_snapshots(
                        &out_dir.join("state.csv"),
                        &result.final_state,
                    )?;
                    let adj = burgers_control::adjoint::solve_adjoint(
                        &result.final_state,
                        cfg.y_d.as_fn(),
                        cfg.nu,
                    )?;
                    csvio::write_adjoint_snapshots(&out_dir.join("adjoint.csv"), &adj)?;
                }
                println!(
                    "iterations={} final_cost={:.6} converged={} backtracks_total={}",
                    result.iterations(),
                    result.cost_history.last().unwrap(),
                    result.converged,
                    result.armijo_backtracks.iter().sum::<usize>()
                );
                Ok(result.converged)
            }
            Backend::Reference => {
                let result = experiments::run_reference_optimize(&cfg)?;
                csvio::write_iteration_log(&out_dir.join("iterations.csv"), &result)?;
                csvio::write_control(&out_dir.join("control.csv"), &result.control)?;
                if *dump_trajectory {
                    csvio::write_reference(&out_dir.join("reference.csv"), &result.final_state)?;
                }
                println!(
                    "iterations={} final_cost={:.6} converged={}",
                    result.iterations(),
                    result.cost_history.last().unwrap(),
                    result.converged
                );
                Ok(result.converged)
            }
        },
        Command::Reference => {
            let sol = experiments::cached_reference(&cfg, &out_dir)?;
            csvio::write_reference(&out_dir.join("reference.csv"), &sol)?;
            if let Some(u) = &sol.control {
                csvio::write_control(&out_dir.join("reference_control.csv"), u)?;
            }
            let max_y = sol
                .terminal()
                .iter()
                .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            println!("reference ready: max y(T) = {max_y:.4}");
            Ok(true)
        }
        Command::Convergence { sweep } => {
            let kind = match sweep {
                Sweep::Eps => SweepKind::EpsFixedH,
                Sweep::H => SweepKind::HFixedEps,
                Sweep::Coupled => SweepKind::Coupled,
            };
            let reference = experiments::cached_reference(&cfg, &out_dir)?;
            let report = experiments::run_convergence(&cfg, kind, &reference);
            let name = match kind {
                SweepKind::EpsFixedH => "convergence_eps.csv",
                SweepKind::HFixedEps => "convergence_h.csv",
                SweepKind::Coupled => "convergence_coupled.csv",
            };
            csvio::write_convergence(&out_dir.join(name), &report)?;
            for r in &report.records {
                println!(
                    "h={:<8} eps={:<8} err_y={:.6e} err_u={:.6e} ({:.1}s)",
                    r.h, r.epsilon, r.err_y_l2v, r.err_u_h1, r.runtime_s
                );
            }
            println!("slope_y={:.4} slope_u={:.4}", report.slope_y, report.slope_u);
            // a sweep succeeds if every point produced finite errors
            Ok(report
                .records
                .iter()
                .all(|r| r.err_y_l2v.is_finite() && r.err_u_h1.is_finite()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
