use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use sk_decay::harness::experiment::{
    certification_directions, report_from_stored, run_experiment, Check, ExperimentConfig, ExperimentReport,
    RunOptions,
};
use sk_decay::harness::fmt_num;
use sk_decay::harness::inequalities::{verify_inequalities, SuiteOptions};
use sk_decay::spectral::{check_sk_kernel, log_radii, lyapunov_family, spectral_gap_fit, symbol, SynthesisOptions};
use sk_decay::system_model::builtin_system;

/// Stability certificates and decay-rate experiments for dissipative
/// hyperbolic systems.
#[derive(Parser)]
#[command(name = "sk-decay", version)]
struct Cli {
    /// Experiment config; repeat to run a batch.
    #[arg(long, global = true)]
    config: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed of configs and random samplers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Keep outputs of failed runs.
    #[arg(long, global = true)]
    keep_partial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SystemArg {
    /// Built-in id (damped-euler-1d/2d/3d, hp-test, decoupled) or a system file.
    #[arg(long, default_value = "damped-euler-1d")]
    system: String,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural assumptions of a linear system.
    Validate {
        #[command(flatten)]
        system: SystemArg,
    },
    /// Kernel condition, spectral-gap constant and optional compensating matrices.
    SkCertify {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long, default_value_t = 1e-2)]
        radius_lo: f64,
        #[arg(long, default_value_t = 1e2)]
        radius_hi: f64,
        #[arg(long, default_value_t = 41)]
        radius_count: usize,
        /// Random directions added to the fixed set in 2D and 3D.
        #[arg(long, default_value_t = 0)]
        extra_directions: usize,
        #[arg(long)]
        synthesize: bool,
    },
    /// Eigenvalues of the Fourier symbol along one direction.
    Spectrum {
        #[command(flatten)]
        system: SystemArg,
        /// Direction, comma separated (normalized internally).
        #[arg(long, value_delimiter = ',', default_value = "1")]
        direction: Vec<f64>,
        #[arg(long, default_value_t = 1e-2)]
        radius_lo: f64,
        #[arg(long, default_value_t = 1e2)]
        radius_hi: f64,
        #[arg(long, default_value_t = 41)]
        radius_count: usize,
    },
    /// Run linear radial-decay experiments from configs.
    LinearDecay,
    /// Run damped Euler simulations from configs.
    SimulateEuler {
        /// Re-fit from stored snapshots without simulating.
        #[arg(long)]
        resume: bool,
    },
    /// Sampled checks of the Littlewood-Paley inequalities and the Lyapunov decay.
    VerifyInequalities {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 200)]
        trajectories: usize,
    },
    /// Recompute verdicts from the CSVs stored in the output directory.
    Report,
}

fn load_system(arg: &SystemArg) -> Result<sk_decay::system_model::LinearDissipativeSystem> {
    builtin_system(&arg.system).with_context(|| format!("loading system `{}`", arg.system))
}

fn write(out: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_checks(checks: &[Check]) -> bool {
    for c in checks {
        println!("{:<4} {:<30} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.passed)
}

fn load_configs(paths: &[PathBuf]) -> Result<Vec<ExperimentConfig>> {
    if paths.is_empty() {
        bail!("this command needs at least one --config");
    }
    paths
        .iter()
        .map(|p| ExperimentConfig::load(p).with_context(|| format!("config {}", p.display())))
        .collect()
}

fn experiment_dirs(cli: &Cli, cfgs: &[ExperimentConfig]) -> Vec<PathBuf> {
    if cfgs.len() == 1 {
        vec![cli.out.clone()]
    } else {
        cfgs.iter().map(|c| cli.out.join(&c.name)).collect()
    }
}

fn run_batch(cli: &Cli, want_simulation: bool, resume: bool) -> Result<bool> {
    let cfgs = load_configs(&cli.config)?;
    for c in &cfgs {
        if c.simulation.is_some() != want_simulation {
            let kind = if want_simulation { "a [simulation]" } else { "a [linear]" };
            bail!("config `{}` has no {kind} section", c.name);
        }
    }
    let dirs = experiment_dirs(cli, &cfgs);
    let opts = RunOptions { seed: cli.seed, keep_partial: cli.keep_partial, resume };
    let results: Vec<sk_decay::Result<ExperimentReport>> =
        cfgs.par_iter().zip(&dirs).map(|(cfg, dir)| run_experiment(cfg, dir, &opts)).collect();
    finish_batch(results)
}

fn finish_batch(results: Vec<sk_decay::Result<ExperimentReport>>) -> Result<bool> {
    let mut ok = true;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(rep) => {
                print!("{}", rep.summary());
                println!("outputs in {}", rep.out_dir.display());
                ok &= rep.passed();
            }
            Err(e) => {
                eprintln!("error: {e}");
                if let Some(src) = std::error::Error::source(&e) {
                    eprintln!("  caused by: {src}");
                }
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e.into());
    }
    Ok(ok)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Validate { system } => {
            let sys = load_system(system)?;
            let omegas = certification_directions(sys.dim(), 0, cli.seed.unwrap_or(0));
            let rep = sys.validate(&omegas)?;
            let mut csv = String::from("predicate,passed,measured,tolerance,note\n");
            for p in &rep.predicates {
                println!(
                    "{:<4} {:<22} measured {:.3e} (tolerance {:.1e}){}",
                    if p.passed { "PASS" } else { "FAIL" },
                    p.name,
                    p.measured,
                    p.tolerance,
                    p.note.as_deref().map(|n| format!(" [{n}]")).unwrap_or_default()
                );
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.name,
                    p.passed,
                    fmt_num(p.measured),
                    fmt_num(p.tolerance),
                    p.note.as_deref().unwrap_or("")
                ));
            }
            write(&cli.out, "validation.csv", &csv)?;
            Ok(rep.passed())
        }
        Command::SkCertify { system, radius_lo, radius_hi, radius_count, extra_directions, synthesize } => {
            let sys = load_system(system)?;
            let seed = cli.seed.unwrap_or(0);
            let omegas = certification_directions(sys.dim(), *extra_directions, seed);
            let kernel = check_sk_kernel(&sys, &omegas)?;
            match &kernel.witness {
                None => println!("PASS kernel condition (min separation {:.3e})", kernel.min_separation),
                Some(w) => println!(
                    "FAIL kernel condition: eigenvector {:?} of A({:?}) with eigenvalue {} lies in ker L",
                    w.vector, w.omega, w.lambda
                ),
            }
            let radii = log_radii(*radius_lo, *radius_hi, *radius_count);
            let gap = spectral_gap_fit(&sys, &radii, &omegas)?;
            println!(
                "{} spectral gap c* = {:.6} at |xi| = {:.4e}",
                if gap.passed { "PASS" } else { "FAIL" },
                gap.c_star,
                gap.radii[gap.argmin.0]
            );
            let mut csv = String::from("radius,direction,max_real_part,ratio\n");
            for (i, r) in gap.radii.iter().enumerate() {
                for k in 0..gap.omegas.len() {
                    csv.push_str(&format!("{},{k},{},{}\n", fmt_num(*r), fmt_num(gap.worst[i][k]), fmt_num(gap.ratio(i, k))));
                }
            }
            write(&cli.out, "spectral_gap.csv", &csv)?;
            let mut ok = kernel.passed && gap.passed;
            if *synthesize {
                match lyapunov_family(&sys, &omegas, &SynthesisOptions { seed, ..Default::default() }) {
                    Ok(fam) => {
                        println!(
                            "PASS compensating matrices: min lambda_min = {:.6}, kappa = {:.6}",
                            fam.c1, fam.kappa
                        );
                        let mut csv = String::from("direction,achieved_min_eig,kappa_max\n");
                        for (k, m) in fam.matrices.iter().enumerate() {
                            csv.push_str(&format!("{k},{},{}\n", fmt_num(m.achieved_min_eig), fmt_num(m.kappa_max)));
                        }
                        write(&cli.out, "compensating.csv", &csv)?;
                    }
                    Err(e) => {
                        println!("FAIL compensating matrices: {e}");
                        ok = false;
                    }
                }
            }
            Ok(ok)
        }
        Command::Spectrum { system, direction, radius_lo, radius_hi, radius_count } => {
            let sys = load_system(system)?;
            if direction.len() != sys.dim() {
                bail!("direction has {} entries, the system is {}D", direction.len(), sys.dim());
            }
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                bail!("direction must be nonzero");
            }
            let mut csv = String::from("radius,index,re,im\n");
            for r in log_radii(*radius_lo, *radius_hi, *radius_count) {
                let xi: Vec<f64> = direction.iter().map(|v| v / norm * r).collect();
                for (i, ev) in symbol(&sys, &xi)?.eigenvalues.iter().enumerate() {
                    csv.push_str(&format!("{},{i},{},{}\n", fmt_num(r), fmt_num(ev.re), fmt_num(ev.im)));
                }
            }
            write(&cli.out, "spectrum.csv", &csv)?;
            print!("{csv}");
            Ok(true)
        }
        Command::LinearDecay => run_batch(cli, false, false),
        Command::SimulateEuler { resume } => run_batch(cli, true, *resume),
        Command::VerifyInequalities { samples, resolution, trajectories } => {
            let opts = SuiteOptions {
                samples: *samples,
                resolution: *resolution,
                trajectories: *trajectories,
                seed: cli.seed.unwrap_or(0),
            };
            let checks = verify_inequalities(&opts)?;
            let mut csv = String::from("check,passed,detail\n");
            for c in &checks {
                csv.push_str(&format!("{},{},\"{}\"\n", c.name, c.passed, c.detail));
            }
            write(&cli.out, "inequalities.csv", &csv)?;
            Ok(print_checks(&checks))
        }
        Command::Report => {
            let cfgs = load_configs(&cli.config)?;
            let dirs = experiment_dirs(cli, &cfgs);
            let results = cfgs.iter().zip(&dirs).map(|(c, d)| report_from_stored(c, d)).collect();
            finish_batch(results)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
