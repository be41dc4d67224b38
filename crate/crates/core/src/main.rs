use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cran_dimred::capacity::{lmmse_sqinr, sum_capacity};
use cran_dimred::compression::{plan, CompressionOptions};
use cran_dimred::dimred::{full_mi, mfgs_select};
use cran_dimred::harness::trial::{baseline_bases, draw_trial};
use cran_dimred::harness::validate::run_validation;
use cran_dimred::harness::{emit_csv, load_config, run_sweep, Experiment};
use cran_dimred::scenario::{PilotSnr, SystemConfig};
use cran_dimred::{Error, Result};

#[derive(Parser)]
#[command(name = "cran-dimred", version, about = "MF-GS dimension reduction fronthaul compression simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Overrides {
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// CSI mode: `perfect` or a pilot SNR in dB.
    #[arg(long)]
    csi: Option<String>,
    /// Charge the fixed-rate Lloyd-Max surcharge of 1.4 bits per scalar.
    #[arg(long)]
    lloyd_max: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described in a config file and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Trial count (overrides the config file).
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one realisation and print its diagnostics.
    Trial {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the oracle and invariant checks.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
}

fn apply_overrides(cfg: &mut SystemConfig, o: &Overrides) -> Result<()> {
    if let Some(seed) = o.seed {
        cfg.rng_seed = seed;
    }
    if let Some(csi) = &o.csi {
        cfg.pilot_snr = if csi == "perfect" {
            PilotSnr::Perfect
        } else {
            let db: f64 = csi
                .parse()
                .map_err(|_| Error::Config(format!("--csi expects `perfect` or a dB value, got {csi:?}")))?;
            PilotSnr::from_db(db)
        };
    }
    if o.lloyd_max {
        cfg.lloyd_max = true;
    }
    cfg.validate()
}

fn fmt_vec(xs: &[f64]) -> String {
    let parts: Vec<String> = xs
        .iter()
        .map(|x| if x.is_finite() { format!("{x:.4}") } else { "inf".into() })
        .collect();
    format!("[{}]", parts.join(", "))
}

fn trial(cfg: &SystemConfig, index: u64) -> Result<()> {
    let inputs = draw_trial(cfg, index)?;
    let h = &inputs.channels.h;
    let res = mfgs_select(&inputs.csi.h_check, cfg.rho, cfg.dimension)?;
    let opts = CompressionOptions {
        fronthaul_rate: cfg.fronthaul_rate,
        rho: cfg.rho,
        lloyd_max: cfg.lloyd_max,
    };
    println!(
        "trial {index} seed {} K={} L={} M={} N={} R={} csi={}",
        cfg.rng_seed,
        cfg.users,
        cfg.receivers,
        cfg.antennas,
        cfg.dimension,
        cfg.fronthaul_rate,
        cfg.pilot_snr.label()
    );
    println!("full MI: {:.6} bits", full_mi(h, cfg.rho)?);
    println!("MI trajectory: {}", fmt_vec(&res.mi_trajectory));
    for (name, bases) in [("proposed", res.bases.clone()), ("local_baseline", baseline_bases(&inputs.csi))] {
        let plan = plan(&bases, &inputs.csi, &opts)?;
        println!("{name}:");
        for (l, rx) in plan.receivers.iter().enumerate() {
            if name == "proposed" {
                println!("  rx {l}: users {:?}", res.selected[l]);
            }
            println!("    lambda {}", fmt_vec(&rx.lambda));
            println!("    rates  {}", fmt_vec(&rx.rates));
            println!("    phi    {}", fmt_vec(&rx.phi));
        }
        let g = plan.g();
        let phi = plan.phi_active();
        let cs = sum_capacity(&g, &phi, cfg.rho)?;
        let lm = lmmse_sqinr(&g, &phi, cfg.rho)?;
        println!("  sum capacity {cs:.6} bits, LMMSE users {}", fmt_vec(&lm.user_capacity));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            trials,
            overrides,
        } => {
            let Experiment { sweep, .. } = load_config(&config)?;
            let mut spec = sweep.ok_or_else(|| Error::Config("config has no [sweep] table".into()))?;
            apply_overrides(&mut spec.base, &overrides)?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            log::info!("{spec}");
            let rows = run_sweep(&spec)?;
            emit_csv(&rows, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(true)
        }
        Command::Trial {
            config,
            index,
            overrides,
        } => {
            let mut cfg = load_config(&config)?.system;
            apply_overrides(&mut cfg, &overrides)?;
            trial(&cfg, index)?;
            Ok(true)
        }
        Command::Validate { seed, instances } => {
            let checks = run_validation(seed, instances)?;
            let mut ok = true;
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
