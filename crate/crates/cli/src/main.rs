use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rsm_core::load::{format_load_report, LoadParams};
use rsm_core::rsm::load_policies;
use rsm_core::runner::{compare_arms, read_arm, run_experiment, ExperimentResult, RunOptions};
use rsm_core::scenario::{reference_config, ScenarioConfig, UseCase};

/// System-level simulator of IoT/MBB coexistence steered by a radio service map.
///
/// Log verbosity follows RUST_LOG (default: info).
#[derive(Parser)]
#[command(name = "rsmsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum UseCaseArg {
    A,
    B,
    C,
    Baseline,
}

impl From<UseCaseArg> for UseCase {
    fn from(u: UseCaseArg) -> Self {
        match u {
            UseCaseArg::A => UseCase::A,
            UseCaseArg::B => UseCase::B,
            UseCaseArg::C => UseCase::C,
            UseCaseArg::Baseline => UseCase::Baseline,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV outputs.
    Run {
        /// Scenario JSON; the built-in reference deployment when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, ignore_case = true)]
        use_case: UseCaseArg,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Policy records (JSON list) replacing the scenario's own.
        #[arg(long)]
        policies: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write serving-link gain traces.
        #[arg(long)]
        dump_channel: bool,
    },
    /// Print the built-in reference scenario as JSON.
    Scenario {
        #[arg(long, value_enum, ignore_case = true)]
        use_case: UseCaseArg,
    },
    /// Print the worst-case RSM storage and signalling load.
    LoadReport {
        #[arg(long)]
        n_bs: Option<usize>,
        #[arg(long)]
        n_rb: Option<usize>,
        /// Map raster in metres.
        #[arg(long)]
        raster: Option<f64>,
    },
    /// Align the windowed summaries of several arm directories.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        arms: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn scenario_config(path: Option<&PathBuf>, use_case: UseCase) -> Result<ScenarioConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ScenarioConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(reference_config(use_case)),
    }
}

fn print_result(r: &ExperimentResult) {
    for arm in &r.arms {
        let mean = |f: fn(&rsm_core::runner::WindowSummary) -> f64| {
            let w = &arm.summary.windows;
            w.iter().map(f).sum::<f64>() / w.len().max(1) as f64
        };
        println!(
            "{:<14} indoor sum {:8.2} Mbit/s  outdoor mean {:7.3} Mbit/s  -> {}",
            arm.name,
            mean(|w| w.indoor_sum_bps) / 1e6,
            mean(|w| w.outdoor_mean_bps) / 1e6,
            arm.dir.display()
        );
        for p in arm.phases.iter().filter(|_| arm.phases.len() > 1) {
            println!("    {:<12} PF-processed RBs/TTI {:8.1}  plan failures {}", p.phase, p.pf_processed_mean, p.plan_failures);
        }
    }
    if let Some(p) = &r.protection {
        let worst = p.epochs.iter().map(|e| e.planned_interference_w / p.constraint.i_max_w).fold(0.0, f64::max);
        println!("{} epochs, worst planned interference {:.3} of the cap", p.epochs.len(), worst);
    }
    for i in &r.intervals {
        println!(
            "interval {} [{:.1}, {:.1}) s  {} RBs  indoor mean {:.3} Mbit/s",
            i.interval,
            i.t_start_s,
            i.t_end_s,
            i.allowed_rbs_min,
            i.indoor_mean_bps / 1e6
        );
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { scenario, use_case, seed, duration, policies, out, dump_channel } => {
            let use_case = UseCase::from(use_case);
            let mut cfg = scenario_config(scenario.as_ref(), use_case)?;
            cfg.run.use_case = use_case;
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            if let Some(d) = duration {
                cfg.run.duration_s = d;
            }
            if let Some(p) = policies {
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                cfg.policies = load_policies(&text).with_context(|| format!("parsing {}", p.display()))?;
            }
            let result = run_experiment(&cfg, &out, RunOptions { dump_channel }).context("experiment failed")?;
            print_result(&result);
        }
        Command::Scenario { use_case } => println!("{}", reference_config(use_case.into()).to_json()),
        Command::LoadReport { n_bs, n_rb, raster } => {
            let mut p = LoadParams::default();
            if let Some(v) = n_bs {
                p.n_bs = v;
            }
            if let Some(v) = n_rb {
                p.n_rb = v;
            }
            if let Some(v) = raster {
                p.raster_m = v;
            }
            print!("{}", format_load_report(&p)?);
        }
        Command::Compare { arms, out } => {
            let loaded = arms.iter().map(|d| read_arm(d).with_context(|| format!("reading {}", d.display()))).collect::<Result<Vec<_>>>()?;
            let table = compare_arms(&loaded)?;
            match out {
                Some(path) => table.write_csv(std::fs::File::create(&path)?)?,
                None => table.write_csv(std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}
