//! `vmreg` command line: kernel tables, runs, distances, field dumps and
//! experiments.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vmreg::dynamics::{load_ensemble, simulate, simulate_weighted, SimConfig};
use vmreg::fields::{FieldGrid, GridSpec};
use vmreg::harness::{run_experiment, Experiment, Manifest};
use vmreg::kernels::{build_mollifier, ChiFamily, KernelFamily, RadialKernel};
use vmreg::meanfield::{picard_solve, reference_flow};
use vmreg::transport::{mkr_distance_with, MkrMode, MkrOptions};
use vmreg::{Exec, Vec3};

#[derive(Parser)]
#[command(name = "vmreg", version, about = "Regularized Vlasov-Maxwell particle dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowMode {
    Flow,
    Picard,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceMode {
    Exact,
    Entropic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Equivalence,
    Dobrushin,
    Meanfield,
    Energy,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the retarded and initial-layer kernels.
    KernelBuild {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "bump")]
        family: String,
        /// Table spacings are epsilon / resolution.
        #[arg(long, default_value_t = 8.0)]
        resolution: f64,
        /// Once-mollified kernel (tilde fields) instead of the force kernel.
        #[arg(long)]
        single: bool,
    },
    /// N-particle run from a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the trajectories as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Weighted mean-field flow, stepped or by Picard iteration.
    Meanfield {
        #[arg(long, value_enum)]
        mode: FlowMode,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Prebuilt kernel; built from the config when absent.
        #[arg(long)]
        kernel: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// MKR distance between two ensembles (CSV or history files).
    Mkr {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: DistanceMode,
        /// Time slice for history inputs; last node when absent.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = vmreg::transport::DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Fields and potentials on a lattice, as a binary grid plus CSV slices.
    FieldDump {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        t: f64,
        /// `h,R`: spacing and half width.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        /// `x,y,z`; the origin when absent.
        #[arg(long)]
        center: Option<String>,
    },
    /// Run an experiment; exit code 0 iff all registered criteria pass.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Threshold manifest; the checked-in one when absent.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn floats(s: &str, n: usize, what: &str) -> AnyResult<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("bad {what} `{s}`: {e}"))?;
    if v.len() != n {
        return Err(format!("{what} needs {n} comma-separated numbers, got `{s}`").into());
    }
    Ok(v)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> AnyResult<ExitCode> {
    match cli.command {
        Command::KernelBuild {
            epsilon,
            tmax,
            out,
            family,
            resolution,
            single,
        } => {
            let family: ChiFamily = family.parse()?;
            let p = build_mollifier(epsilon, family)?;
            let kind = if single { KernelFamily::Single } else { KernelFamily::Double };
            let h = epsilon / resolution;
            let k = RadialKernel::build(&p, kind, tmax, h, h)?;
            k.save(&out)?;
            println!("{}", serde_json::to_string_pretty(&k.sidecar())?);
        }
        Command::Simulate {
            config,
            kernel,
            out,
            csv,
        } => {
            let cfg = SimConfig::load(&config)?;
            let k = RadialKernel::load(&kernel)?;
            cfg.check_kernel(&k)?;
            let init = cfg.initial_ensemble()?;
            let h = if init.is_uniform() {
                simulate(&cfg, &k, &init)?
            } else {
                simulate_weighted(&cfg, &k, &init)?
            };
            h.save(&out)?;
            if let Some(p) = csv {
                h.write_csv(&p)?;
            }
        }
        Command::Meanfield {
            mode,
            config,
            out,
            kernel,
            max_iter,
            tol,
        } => {
            let cfg = SimConfig::load(&config)?;
            let k = match kernel {
                Some(p) => RadialKernel::load(&p)?,
                None => cfg.build_kernel()?,
            };
            cfg.check_kernel(&k)?;
            let init = cfg.initial_ensemble()?;
            let sol = match mode {
                FlowMode::Flow => reference_flow(&init, &k, &cfg)?,
                FlowMode::Picard => picard_solve(&init, &k, &cfg, max_iter, tol)?,
            };
            sol.history.save(&out)?;
            if let Some(r) = &sol.report {
                println!("{}", serde_json::to_string_pretty(r)?);
                if !r.converged {
                    eprintln!("picard iteration did not reach tol = {tol:e}");
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Mkr {
            mu,
            nu,
            mode,
            t,
            budget,
        } => {
            let a = load_ensemble(&mu, t)?;
            let b = load_ensemble(&nu, t)?;
            let mode = match mode {
                DistanceMode::Exact => MkrMode::Exact,
                DistanceMode::Entropic => MkrMode::Entropic,
            };
            let opts = MkrOptions {
                budget,
                ..Default::default()
            };
            let (d, plan) = mkr_distance_with(&a, &b, mode, &opts)?;
            let out = serde_json::json!({
                "distance": d,
                "atoms": a.len() + b.len(),
                "mode": plan.mode,
                "gap": plan.gap,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::FieldDump {
            history,
            kernel,
            t,
            grid,
            out,
            center,
        } => {
            let g = floats(&grid, 2, "grid")?;
            let c = match center {
                Some(s) => {
                    let v = floats(&s, 3, "center")?;
                    Vec3::new(v[0], v[1], v[2])
                }
                None => Vec3::ZERO,
            };
            let h = vmreg::dynamics::TrajectoryHistory::load(&history)?;
            let k = RadialKernel::load(&kernel)?;
            let spec = GridSpec::new(c, g[1], g[0])?;
            let fg = FieldGrid::evaluate(&h, &k, t, spec, Exec::default())?;
            fg.save(&out)?;
            let mid = spec.n() / 2;
            for (axis, name) in ["x", "y", "z"].iter().enumerate() {
                fg.write_csv_slice(&with_suffix(&out, &format!(".{name}.csv")), axis, mid)?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "n": spec.n(),
                    "e_max": fg.e_max(),
                    "b_max": fg.b_max(),
                    "div_b_max": fg.div_b_max(),
                })
            );
        }
        Command::Experiment {
            name,
            config,
            out,
            manifest,
        } => {
            let e = match name {
                ExperimentName::Equivalence => Experiment::Equivalence,
                ExperimentName::Dobrushin => Experiment::Dobrushin,
                ExperimentName::Meanfield => Experiment::Meanfield,
                ExperimentName::Energy => Experiment::Energy,
            };
            let m = match manifest {
                Some(p) => Manifest::load(&p)?,
                None => Manifest::checked_in(),
            };
            let text = std::fs::read_to_string(&config)?;
            let report = run_experiment(e, &text, &m)?;
            report.write(&out)?;
            for line in report.summary() {
                println!("{line}");
            }
            for n in &report.notes {
                println!("note: {n}");
            }
            return Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
