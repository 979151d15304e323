//! Downlink scheduling: proportional fair with soft frequency reuse on the
//! MBB base stations, round robin on the road-side units.

mod pf;
mod report;
mod sfr;

pub use pf::{
    pf_priority, pf_schedule, round_robin, update_average_rate, PfOutcome, PfVariant, SchedulerConfig,
    SchedulerState, AVG_FLOOR_BPS,
};
pub use report::{BsTx, RbDecision, RbTx, TtiReport, UeTti, VictimInterference};
pub use sfr::SfrPlan;
