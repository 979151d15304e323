//! Dynamic spectrum management on top of the RSM and the scheduler:
//! LSA policy enforcement, trajectory-aware protection of an outdoor victim
//! and traffic-map based hybrid scheduling.

mod lsa;
mod protection;
mod traffic;

pub use lsa::{apply_lsa_schedule, lsa_control, LsaGrant};
pub use protection::{
    build_power_problem, optimize_indoor_powers, optimize_indoor_powers_from, predict_victim_position, run_adaptive_protection, ArmEpoch,
    EpochRecord, PowerProblem, PowerVector, ProtectionArm, ProtectionConstraint, ProtectionError, ProtectionRun,
    UserGains,
};
pub use traffic::{
    classify_static, derive_hybrid_plan, hybrid_schedule_step, ingest_report, update_traffic_map, CellSummary,
    HybridConfig, HybridController, HybridPlan, Phase, RbPool, StaticCandidate, TrafficMap, TrafficSample,
    DEFAULT_EMA_WEIGHT, DEFAULT_SIGMA_MAX, MAX_STATIC_SHARE,
};
