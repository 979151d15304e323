use serde::{Deserialize, Serialize};

use crate::ids::UeId;

/// Floor on the average rate so that a fresh UE has a finite priority.
pub const AVG_FLOOR_BPS: f64 = 1.0;

/// How `beta` enters the priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfVariant {
    /// `r^β / R^(1-β)` with averaging constant `t_c`.
    #[default]
    Exponent,
    /// `r / R` with `β` as the averaging weight of the newest sample.
    Ema,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    pub beta: f64,
    /// Averaging window in TTIs.
    pub t_c: f64,
    pub variant: PfVariant,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self { beta: 0.5, t_c: 1000.0, variant: PfVariant::Exponent }
    }
}

impl SchedulerConfig {
    fn ema_weight(&self) -> f64 {
        match self.variant {
            PfVariant::Exponent => 1.0 / self.t_c,
            PfVariant::Ema => self.beta,
        }
    }

    fn priority_exponent(&self) -> f64 {
        match self.variant {
            PfVariant::Exponent => self.beta,
            PfVariant::Ema => 0.5,
        }
    }
}

/// Per-UE average served rate, indexed by UE id.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerState {
    pub config: SchedulerConfig,
    pub avg_bps: Vec<f64>,
    /// TTIs in which each UE received RBs.
    pub served_ttis: Vec<u64>,
}

impl SchedulerState {
    pub fn new(n_ue: usize, config: SchedulerConfig) -> Self {
        assert!((0.0..=1.0).contains(&config.beta), "beta must lie in [0, 1]");
        Self { config, avg_bps: vec![AVG_FLOOR_BPS; n_ue], served_ttis: vec![0; n_ue] }
    }

    pub fn avg(&self, ue: UeId) -> f64 {
        self.avg_bps[ue.index()]
    }
}

/// `r_inst^β / R_avg^(1-β)`.
pub fn pf_priority(r_inst_bps: f64, r_avg_bps: f64, beta: f64) -> f64 {
    if beta == 0.5 {
        (r_inst_bps / r_avg_bps).sqrt()
    } else {
        r_inst_bps.powf(beta) / r_avg_bps.powf(1.0 - beta)
    }
}

/// `R ← (1 - 1/t_c)·R + (1/t_c)·r`, floored at [`AVG_FLOOR_BPS`].
pub fn update_average_rate(state: &mut SchedulerState, ue: UeId, served_bps: f64) {
    let w = state.config.ema_weight();
    let r = &mut state.avg_bps[ue.index()];
    *r = ((1.0 - w) * *r + w * served_bps).max(AVG_FLOOR_BPS);
    if served_bps > 0.0 {
        state.served_ttis[ue.index()] += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PfOutcome {
    /// Chosen UE per RB; `None` where the RB was unavailable or nobody could use it.
    pub assignment: Vec<Option<UeId>>,
    /// RBs that went through the argmax.
    pub processed: u32,
}

/// Assigns each available RB to the highest-priority candidate.
///
/// `r_inst[k][rb]` is candidate `k`'s achievable rate on `rb`. Candidates must
/// be sorted by id; ties go to the lowest id. An RB whose best priority is
/// zero stays unassigned.
pub fn pf_schedule(candidates: &[UeId], r_inst: &[Vec<f64>], state: &SchedulerState, available: &[bool]) -> PfOutcome {
    debug_assert!(candidates.windows(2).all(|w| w[0] < w[1]));
    let beta = state.config.priority_exponent();
    let avgs: Vec<f64> = candidates.iter().map(|&u| state.avg(u)).collect();
    let mut assignment = vec![None; available.len()];
    let mut processed = 0;
    for (rb, slot) in assignment.iter_mut().enumerate() {
        if !available[rb] {
            continue;
        }
        processed += 1;
        let mut best: Option<(UeId, f64)> = None;
        for (k, &ue) in candidates.iter().enumerate() {
            let p = pf_priority(r_inst[k][rb], avgs[k], beta);
            if p > 0.0 && best.is_none_or(|(_, bp)| p > bp) {
                best = Some((ue, p));
            }
        }
        *slot = best.map(|(ue, _)| ue);
    }
    PfOutcome { assignment, processed }
}

/// Whole-TTI round robin: the UE whose turn it is at `t_ms` gets every available RB.
pub fn round_robin(candidates: &[UeId], t_ms: u64, available: &[bool]) -> Vec<Option<UeId>> {
    if candidates.is_empty() {
        return vec![None; available.len()];
    }
    let ue = candidates[(t_ms % candidates.len() as u64) as usize];
    available.iter().map(|&a| a.then_some(ue)).collect()
}
