//! End-to-end experiments.
//!
//! Every arm of a run gets its own directory holding the raw streams
//! (`tti.csv`, `cost.csv`), `users.csv`, the windowed summaries
//! (`windows.csv`, `ue_windows.csv`), scheduler cost per phase (`phases.csv`)
//! and `meta.json`. Use-case tables (`epochs.csv`, `intervals.csv`,
//! `plans.csv`, ...) sit next to the arm directories.

mod compare;
mod stream;
mod summary;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use compare::{compare_arms, read_arm, ArmOutput, Comparison, ComparisonRow};
pub use stream::{cost_row, read_csv, tti_rows, write_csv, CostRow, TtiRow, UserGroups, UserRow};
pub use summary::{summarize, summarize_windows, uniform_windows, window_ttis, Summary, UeWindow, WindowSummary};

use crate::rsm::{Party, RsmError, RsmRepository};
use crate::scenario::{Mobility, Operator, Scenario, ScenarioConfig, ScenarioError, UseCase};
use crate::scheduler::TtiReport;
use crate::sim::World;
use crate::units::{dbm_to_w, lin_to_db, w_to_dbm};
use crate::usecases::{
    apply_lsa_schedule, lsa_control, run_adaptive_protection, HybridConfig, HybridController, HybridPlan,
    ProtectionArm, ProtectionConstraint, ProtectionError, ProtectionRun, TrafficMap,
};
use stream::{create_csv, CsvSink};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Protection(#[from] ProtectionError),
    #[error(transparent)]
    Rsm(#[from] RsmError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("use case B needs a victim UE that follows a trajectory")]
    NoVictim,
    #[error("window of {window_s} s is not a whole number of TTIs")]
    Window { window_s: f64 },
    #[error("no arms to compare")]
    NoArms,
    #[error("arms are not comparable: {0}")]
    Mismatch(String),
}

/// Sidecar of one arm: enough to rerun it bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub arm: String,
    pub use_case: UseCase,
    pub seed: u64,
    /// SHA-256 of the scenario configuration as JSON.
    pub config_hash: String,
    pub duration_s: f64,
    pub tti_s: f64,
    pub n_ttis: u64,
    pub i_max_dbm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCost {
    pub phase: String,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub ttis: u64,
    pub pf_processed_total: u64,
    pub pf_processed_mean: f64,
    pub plan_failures: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmResult {
    pub name: String,
    pub dir: PathBuf,
    pub meta: RunMeta,
    pub summary: Summary,
    pub phases: Vec<PhaseCost>,
}

impl ArmResult {
    pub fn phase(&self, name: &str) -> Option<&PhaseCost> {
        self.phases.iter().find(|p| p.phase == name)
    }
}

/// Use case A: means over one interval of the policy schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub interval: usize,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub allowed_rbs_min: usize,
    pub allowed_rbs_max: usize,
    pub indoor_mean_bps: f64,
    pub indoor_sum_bps: f64,
    pub outdoor_mean_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EpochRow {
    epoch: usize,
    t_start_s: f64,
    victim_x_m: f64,
    victim_y_m: f64,
    clamped: bool,
    planned_interference_dbm: f64,
    i_max_dbm: f64,
    planned_sum_rate: f64,
    adaptive_indoor_sum_bps: f64,
    adaptive_outdoor_mean_bps: f64,
    no_protection_indoor_sum_bps: f64,
    no_protection_outdoor_mean_bps: f64,
    no_indoor_indoor_sum_bps: f64,
    no_indoor_outdoor_mean_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PowerRow {
    epoch: usize,
    bs_id: u32,
    power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlanRow {
    valid_from_s: f64,
    valid_until_s: f64,
    ue_id: u32,
    bs_id: u32,
    n_rbs: usize,
    mcs: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ChannelRow {
    t_ms: u64,
    ue_id: u32,
    bs_id: u32,
    large_scale_db: f64,
    mean_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub out_dir: PathBuf,
    pub arms: Vec<ArmResult>,
    /// Use case B.
    pub protection: Option<ProtectionRun>,
    /// Use case A.
    pub intervals: Vec<IntervalSummary>,
    /// Use case C, in the order they were derived.
    pub plans: Vec<HybridPlan>,
}

impl ExperimentResult {
    pub fn arm(&self, name: &str) -> Option<&ArmResult> {
        self.arms.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Also write serving-link gain traces to `channel.csv`.
    pub dump_channel: bool,
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    Sha256::digest(config.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shared by every arm of one run.
struct RunContext<'a> {
    scenario: &'a Scenario,
    config_hash: String,
    windows: Vec<(u64, u64)>,
    phases: Vec<(String, u64, u64)>,
}

struct ArmRecorder {
    name: String,
    dir: PathBuf,
    tti: CsvSink,
    rows: Vec<TtiRow>,
    costs: Vec<CostRow>,
}

impl ArmRecorder {
    fn new(out: &Path, name: &str) -> Result<Self, RunnerError> {
        let dir = out.join(name);
        std::fs::create_dir_all(&dir)?;
        let tti = create_csv(&dir.join("tti.csv"))?;
        Ok(Self { name: name.to_string(), dir, tti, rows: Vec::new(), costs: Vec::new() })
    }

    fn record(&mut self, report: &TtiReport) -> Result<(), RunnerError> {
        for row in tti_rows(report) {
            self.tti.serialize(&row)?;
            self.rows.push(row);
        }
        self.costs.push(cost_row(report));
        Ok(())
    }

    fn finish(mut self, ctx: &RunContext) -> Result<ArmResult, RunnerError> {
        self.tti.flush()?;
        let run = &ctx.scenario.run;
        write_csv(&self.dir.join("cost.csv"), &self.costs)?;
        let users: Vec<UserRow> = ctx.scenario.users.iter().map(UserRow::from_ue).collect();
        write_csv(&self.dir.join("users.csv"), &users)?;
        let summary = summarize_windows(&self.rows, &self.costs, &UserGroups::from_rows(&users), run.tti_s, &ctx.windows);
        write_csv(&self.dir.join("windows.csv"), &summary.windows)?;
        write_csv(&self.dir.join("ue_windows.csv"), &summary.per_ue)?;
        let phases = phase_costs(&self.costs, &ctx.phases, run.tti_s);
        write_csv(&self.dir.join("phases.csv"), &phases)?;
        let meta = RunMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            arm: self.name.clone(),
            use_case: run.use_case,
            seed: run.seed,
            config_hash: ctx.config_hash.clone(),
            duration_s: run.duration_s,
            tti_s: run.tti_s,
            n_ttis: run.n_ttis(),
            i_max_dbm: (run.use_case == UseCase::B).then_some(run.i_max_dbm),
        };
        std::fs::write(self.dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(ArmResult { name: self.name, dir: self.dir, meta, summary, phases })
    }
}

fn phase_costs(costs: &[CostRow], phases: &[(String, u64, u64)], tti_s: f64) -> Vec<PhaseCost> {
    phases
        .iter()
        .map(|(name, first, last)| {
            let inside = costs.iter().filter(|c| (*first..*last).contains(&c.t_ms));
            let (total, failures) = inside.fold((0, 0), |(t, f), c| (t + c.pf_processed, f + c.plan_failures));
            let n = last - first;
            PhaseCost {
                phase: name.clone(),
                t_start_s: *first as f64 * tti_s,
                t_end_s: *last as f64 * tti_s,
                ttis: n,
                pf_processed_total: total,
                pf_processed_mean: if n == 0 { 0.0 } else { total as f64 / n as f64 },
                plan_failures: failures,
            }
        })
        .collect()
}

/// TTI ranges between consecutive policy boundaries.
fn policy_intervals(scenario: &Scenario, n_ttis: u64) -> Vec<(u64, u64)> {
    let tti_s = scenario.run.tti_s;
    let mut cuts = vec![0, n_ttis];
    for r in &scenario.policies {
        for t in [r.t_start_s, r.t_end_s] {
            let k = (t / tti_s).round();
            if k > 0.0 && k < n_ttis as f64 {
                cuts.push(k as u64);
            }
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Runs the experiment `config` describes and writes every output below `out`.
pub fn run_experiment(config: &ScenarioConfig, out: &Path, opts: RunOptions) -> Result<ExperimentResult, RunnerError> {
    let scenario = config.resolve()?;
    let run = &scenario.run;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("scenario.json"), config.to_json() + "\n")?;
    let n_ttis = run.n_ttis();
    let per_epoch = window_ttis(run.epoch_s, run.tti_s)?;
    let mut ctx = RunContext {
        scenario: &scenario,
        config_hash: config_hash(config),
        windows: uniform_windows(n_ttis, per_epoch),
        phases: vec![("run".to_string(), 0, n_ttis)],
    };
    log::info!("use case {:?}, seed {}, {} TTIs -> {}", run.use_case, run.seed, n_ttis, out.display());

    let mut result =
        ExperimentResult { out_dir: out.to_path_buf(), arms: Vec::new(), protection: None, intervals: Vec::new(), plans: Vec::new() };
    match run.use_case {
        UseCase::Baseline => {
            let mut rec = ArmRecorder::new(out, "pf")?;
            let mut world = World::new(scenario.clone());
            for _ in 0..n_ttis {
                let control = world.default_control();
                rec.record(&world.run_tti(&control))?;
            }
            result.arms.push(rec.finish(&ctx)?);
        }
        UseCase::A => {
            let mut repo = RsmRepository::new(Party::Operator(Operator::Mbb));
            repo.set_policies(scenario.policies.clone());
            let governed = repo.governed_bs();
            let n_rb = scenario.deployment.n_rb;
            let mut rec = ArmRecorder::new(out, "lsa")?;
            let mut world = World::new(scenario.clone());
            for k in 0..n_ttis {
                let grants = apply_lsa_schedule(&repo, k as f64 * run.tti_s, &governed, n_rb);
                let control = lsa_control(&world.default_control(), &grants);
                rec.record(&world.run_tti(&control))?;
            }
            ctx.windows = policy_intervals(&scenario, n_ttis);
            let arm = rec.finish(&ctx)?;
            result.intervals = ctx
                .windows
                .iter()
                .zip(&arm.summary.windows)
                .enumerate()
                .map(|(k, (&(first, _), w))| {
                    let allowed: Vec<usize> = apply_lsa_schedule(&repo, first as f64 * run.tti_s, &governed, n_rb)
                        .iter()
                        .map(|g| g.allowed_rbs())
                        .collect();
                    IntervalSummary {
                        interval: k,
                        t_start_s: w.t_start_s,
                        t_end_s: w.t_end_s,
                        allowed_rbs_min: allowed.iter().copied().min().unwrap_or(n_rb),
                        allowed_rbs_max: allowed.iter().copied().max().unwrap_or(n_rb),
                        indoor_mean_bps: w.indoor_mean_bps,
                        indoor_sum_bps: w.indoor_sum_bps,
                        outdoor_mean_bps: w.outdoor_mean_bps,
                    }
                })
                .collect();
            write_csv(&out.join("intervals.csv"), &result.intervals)?;
            result.arms.push(arm);
        }
        UseCase::B => {
            let victim = scenario.victims().next().ok_or(RunnerError::NoVictim)?;
            let Mobility::Trajectory(trajectory) = &victim.mobility else { return Err(RunnerError::NoVictim) };
            let constraint = ProtectionConstraint::new(victim.id, dbm_to_w(run.i_max_dbm), run.epoch_s)?;
            let mut recs = ProtectionArm::ALL.iter().map(|a| ArmRecorder::new(out, a.name())).collect::<Result<Vec<_>, _>>()?;
            let mut failed: Option<RunnerError> = None;
            let protection = run_adaptive_protection(&scenario, trajectory, &constraint, &mut |arm, report| {
                if failed.is_none() {
                    failed = recs[arm as usize].record(report).err();
                }
            })?;
            if let Some(e) = failed {
                return Err(e);
            }
            for rec in recs {
                result.arms.push(rec.finish(&ctx)?);
            }
            write_epochs(out, &protection, run.i_max_dbm)?;
            result.protection = Some(protection);
        }
        UseCase::C => {
            let raster = scenario.load_profile.as_ref().map_or(1.0, |l| l.raster_m);
            let map = TrafficMap::for_building(&scenario.deployment.building, raster, scenario.deployment.n_rb)?;
            let cfg = HybridConfig { observation_s: run.observation_s, window_s: run.static_window_s, ..HybridConfig::default() };
            let mut ctl = HybridController::new(cfg, map);
            let mut hybrid = ArmRecorder::new(out, "hybrid")?;
            let mut pf_only = ArmRecorder::new(out, "pf_only")?;
            let mut w_hybrid = World::new(scenario.clone());
            let mut w_pf = World::new(scenario.clone());
            for _ in 0..n_ttis {
                hybrid.record(&ctl.step(&mut w_hybrid))?;
                let control = w_pf.default_control();
                pf_only.record(&w_pf.run_tti(&control))?;
            }
            let split = window_ttis(run.observation_s, run.tti_s)?.min(n_ttis);
            ctx.windows = uniform_windows(n_ttis, window_ttis(run.static_window_s, run.tti_s)?);
            ctx.phases = vec![("observation".to_string(), 0, split), ("hybrid".to_string(), split, n_ttis)];
            result.arms.push(hybrid.finish(&ctx)?);
            result.arms.push(pf_only.finish(&ctx)?);
            let plans: Vec<PlanRow> = ctl
                .history
                .iter()
                .flat_map(|p| {
                    p.grants.iter().map(|g| PlanRow {
                        valid_from_s: p.valid_from_s,
                        valid_until_s: p.valid_until_s,
                        ue_id: g.ue.0,
                        bs_id: g.bs.0,
                        n_rbs: g.rbs.len(),
                        mcs: g.mcs,
                    })
                })
                .collect();
            write_csv(&out.join("plans.csv"), &plans)?;
            ctl.map.layer.export_csv(std::io::BufWriter::new(std::fs::File::create(out.join("traffic_map.csv"))?))?;
            result.plans = ctl.history;
        }
    }
    if opts.dump_channel {
        dump_channel(&scenario, &out.join("channel.csv"))?;
    }
    Ok(result)
}

fn write_epochs(out: &Path, run: &ProtectionRun, i_max_dbm: f64) -> Result<(), RunnerError> {
    let rows: Vec<EpochRow> = run
        .epochs
        .iter()
        .map(|e| {
            let (a, n, z) =
                (e.arm(ProtectionArm::Adaptive), e.arm(ProtectionArm::NoProtection), e.arm(ProtectionArm::NoIndoor));
            EpochRow {
                epoch: e.epoch,
                t_start_s: e.t_start_s,
                victim_x_m: e.victim_position.x,
                victim_y_m: e.victim_position.y,
                clamped: e.clamped,
                planned_interference_dbm: w_to_dbm(e.planned_interference_w),
                i_max_dbm,
                planned_sum_rate: e.planned_sum_rate,
                adaptive_indoor_sum_bps: a.indoor_sum_bps,
                adaptive_outdoor_mean_bps: a.outdoor_mean_bps,
                no_protection_indoor_sum_bps: n.indoor_sum_bps,
                no_protection_outdoor_mean_bps: n.outdoor_mean_bps,
                no_indoor_indoor_sum_bps: z.indoor_sum_bps,
                no_indoor_outdoor_mean_bps: z.outdoor_mean_bps,
            }
        })
        .collect();
    write_csv(&out.join("epochs.csv"), &rows)?;
    let powers: Vec<PowerRow> = run
        .epochs
        .iter()
        .flat_map(|e| {
            e.powers.bs.iter().zip(&e.powers.power_w).map(move |(b, &p)| PowerRow {
                epoch: e.epoch,
                bs_id: b.0,
                power_dbm: w_to_dbm(p),
            })
        })
        .collect();
    write_csv(&out.join("powers.csv"), &powers)
}

/// Serving-link gains per TTI. Channels do not depend on scheduling, so a
/// fresh PF world reproduces the traces every arm saw.
fn dump_channel(scenario: &Scenario, path: &Path) -> Result<(), RunnerError> {
    let mut world = World::new(scenario.clone());
    let mut w = create_csv(path)?;
    for _ in 0..scenario.run.n_ttis() {
        let control = world.default_control();
        let report = world.run_tti(&control);
        for u in &world.users {
            let Some(bs) = world.serving(u.id) else { continue };
            let gains = world.link_gain(u.id, bs);
            let mean = gains.iter().sum::<f64>() / gains.len() as f64;
            w.serialize(ChannelRow {
                t_ms: report.t_ms,
                ue_id: u.id.0,
                bs_id: bs.0,
                large_scale_db: lin_to_db(world.large_scale_gain(u.id, bs)),
                mean_gain_db: lin_to_db(mean),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
