//! Radio service map subsystem: repositories of geolocated map layers, the
//! RSM manager operations (queries, merging, policy readout, conformance)
//! and the data-acquisition path.

mod conformance;
mod layer;
mod policy;
mod repository;
mod trajectory;

pub use conformance::{conformance_check, Violation, ViolationKind};
pub use layer::{CellStat, GridSpec, LayerKind, MapLayer, Visibility};
pub use policy::{effective_cap_dbm, load_policies, PolicyRecord, RbRange, SpectrumMask};
pub use repository::{
    merge_shared, MergeOptions, MergeOutcome, ObservationSample, Party, QueryResult, RsmRepository, Tier,
};
pub use trajectory::{TrajectoryFix, TrajectoryRecord, Waypoint};

use crate::ids::BsId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RsmError {
    #[error("sample position outside the layer grid")]
    OutOfGrid,
    #[error("sample at t={t_s} s is older than the cell's last update at {last_t_s} s")]
    OutOfOrder { t_s: f64, last_t_s: f64 },
    #[error("RB index does not match the layer's RB dimension")]
    RbDimension,
    #[error("invalid grid specification")]
    InvalidGrid,
    #[error("unknown layer {0:?}")]
    UnknownLayer(LayerKind),
    #[error("layer {0:?} already exists")]
    DuplicateLayer(LayerKind),
    #[error("layer {0:?} is not shared")]
    NotShared(LayerKind),
    #[error("grids are not congruent and resampling is disabled")]
    IncongruentGrids,
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("trajectory timestamps must increase strictly (at t={t_s})")]
    NonMonotoneTrajectory { t_s: f64 },
    #[error("invalid policy for BS {bs}: {reason}")]
    InvalidPolicy { bs: BsId, reason: String },
    #[error("policy parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
