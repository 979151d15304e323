//! Deployment geometry, node and user populations, mobility and run
//! configuration.
//!
//! A [`Scenario`] is immutable once resolved; the simulator keeps mutable
//! per-run state (positions, fading, scheduler averages) in [`crate::sim::World`].

mod config;
mod mobility;
mod reference;

pub use config::{
    load_scenario, ClusterSpec, LoadProfile, MobilitySpec, RegionSpec, ScenarioConfig,
    ScenarioError, UserGroup, UserSpec,
};
pub use mobility::{step_mobility, MobilityModel};
pub use reference::{
    build_reference_scenario, bus_waypoints, lsa_demo_policies, reference_config, BUS_SPEED_MPS, BUS_TRIP_S,
    LSA_DEMO_BUDGETS,
};

use crate::channel::ChannelConfig;
use crate::ids::{BsId, UeId};
use crate::rsm::{PolicyRecord, TrajectoryRecord};
use serde::{Deserialize, Serialize};

/// Hard ceiling on transmit power for every node.
pub const MAX_TX_POWER_DBM: f64 = 21.0;
/// Antenna height of outdoor base stations above ground.
pub const OUTDOOR_BS_HEIGHT_M: f64 = 10.0;
/// Minimum UE separation from an outdoor BS.
pub const MIN_DIST_OUTDOOR_BS_M: f64 = 10.0;
/// Minimum UE separation from an indoor BS.
pub const MIN_DIST_INDOOR_BS_M: f64 = 3.0;
/// Nominal pedestrian walking speed.
pub const PEDESTRIAN_SPEED_MPS: f64 = 0.8;
/// UE antenna height above its floor.
pub const UE_HEIGHT_M: f64 = 1.5;

/// A point in the scenario frame, metres. Serialised as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn lerp(&self, other: &Point3, frac: f64) -> Point3 {
        Point3::new(
            self.x + (other.x - self.x) * frac,
            self.y + (other.y - self.y) * frac,
            self.z + (other.z - self.z) * frac,
        )
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Axis-aligned office building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    /// South-west ground corner.
    pub origin: Point3,
    /// Extent along x.
    pub width_m: f64,
    /// Extent along y.
    pub depth_m: f64,
    pub height_m: f64,
    pub floors: u32,
    /// Side of the square rooms used by the indoor LOS heuristic.
    #[serde(default = "default_room_size")]
    pub room_size_m: f64,
}

fn default_room_size() -> f64 {
    10.0
}

impl Building {
    pub fn floor_height_m(&self) -> f64 {
        self.height_m / self.floors as f64
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.origin.x
            && p.x <= self.origin.x + self.width_m
            && p.y >= self.origin.y
            && p.y <= self.origin.y + self.depth_m
            && p.z >= self.origin.z
            && p.z <= self.origin.z + self.height_m
    }

    /// Whether the ground projection of `p` lies on the footprint.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        x >= self.origin.x
            && x <= self.origin.x + self.width_m
            && y >= self.origin.y
            && y <= self.origin.y + self.depth_m
    }

    /// Floor index of an indoor point, clamped to the valid range.
    pub fn floor_of(&self, p: &Point3) -> u32 {
        let f = ((p.z - self.origin.z) / self.floor_height_m()).floor();
        (f.max(0.0) as u32).min(self.floors - 1)
    }

    /// Room grid cell `(ix, iy)` of an indoor point.
    pub fn room_of(&self, p: &Point3) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.room_size_m).floor() as i64,
            ((p.y - self.origin.y) / self.room_size_m).floor() as i64,
        )
    }

    /// Length of the segment `a`–`b` that lies inside the building box.
    pub fn inside_length(&self, a: &Point3, b: &Point3) -> f64 {
        let lo = [self.origin.x, self.origin.y, self.origin.z];
        let hi = [
            self.origin.x + self.width_m,
            self.origin.y + self.depth_m,
            self.origin.z + self.height_m,
        ];
        let pa = [a.x, a.y, a.z];
        let d = [b.x - a.x, b.y - a.y, b.z - a.z];
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..3 {
            if d[k].abs() < 1e-15 {
                if pa[k] < lo[k] || pa[k] > hi[k] {
                    return 0.0;
                }
            } else {
                let ta = (lo[k] - pa[k]) / d[k];
                let tb = (hi[k] - pa[k]) / d[k];
                t0 = t0.max(ta.min(tb));
                t1 = t1.min(ta.max(tb));
            }
        }
        if t1 <= t0 {
            0.0
        } else {
            (t1 - t0) * a.distance(b)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Mbb,
    Iot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsKind {
    IndoorHotspot,
    OutdoorMacro,
    RoadSideUnit,
}

impl BsKind {
    pub fn is_indoor(self) -> bool {
        matches!(self, BsKind::IndoorHotspot)
    }
}

/// Carrier selector: `F1` is the IoT/shared band, `F2` the MBB macro band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    F1,
    F2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStation {
    pub id: BsId,
    pub kind: BsKind,
    pub operator: Operator,
    pub position: Point3,
    pub carrier: Carrier,
    pub max_tx_power_dbm: f64,
}

impl BaseStation {
    pub fn height_m(&self) -> f64 {
        self.position.z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deployment {
    pub building: Building,
    pub base_stations: Vec<BaseStation>,
    pub carrier_f1_hz: f64,
    pub carrier_f2_hz: f64,
    pub channel_bandwidth_hz: f64,
    pub n_rb: usize,
    pub rb_bandwidth_hz: f64,
}

impl Deployment {
    pub fn carrier_hz(&self, c: Carrier) -> f64 {
        match c {
            Carrier::F1 => self.carrier_f1_hz,
            Carrier::F2 => self.carrier_f2_hz,
        }
    }

    pub fn bs(&self, id: BsId) -> &BaseStation {
        &self.base_stations[id.index()]
    }

    pub fn indoor_bs_ids(&self) -> Vec<BsId> {
        self.base_stations
            .iter()
            .filter(|b| b.kind.is_indoor())
            .map(|b| b.id)
            .collect()
    }
}

/// Where a UE lives and moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// One floor of the building.
    Indoor { floor: u32 },
    /// Ground-level rectangle outside the building.
    Outdoor { min: [f64; 2], max: [f64; 2] },
}

impl Region {
    pub fn is_indoor(&self) -> bool {
        matches!(self, Region::Indoor { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mobility {
    Static,
    /// Constant-speed random walk; `heading_rad` is the current direction.
    Pedestrian { speed_mps: f64, heading_rad: f64 },
    /// Follows timestamped waypoints.
    Trajectory(TrajectoryRecord),
}

impl Mobility {
    /// Nominal speed used for Doppler.
    pub fn speed_mps(&self) -> f64 {
        match self {
            Mobility::Static => 0.0,
            Mobility::Pedestrian { speed_mps, .. } => *speed_mps,
            Mobility::Trajectory(tr) => tr.mean_speed_mps(),
        }
    }
}

/// Full-buffer downlink user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: UeId,
    pub operator: Operator,
    pub position: Point3,
    pub region: Region,
    pub mobility: Mobility,
    pub cluster_id: Option<u32>,
    /// Subject of an outdoor protection constraint.
    pub victim: bool,
}

impl UserEquipment {
    pub fn is_indoor(&self) -> bool {
        self.region.is_indoor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UseCase {
    #[serde(rename = "A", alias = "a")]
    A,
    #[serde(rename = "B", alias = "b")]
    B,
    #[serde(rename = "C", alias = "c")]
    C,
    #[serde(rename = "baseline")]
    Baseline,
}

impl std::str::FromStr for UseCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(UseCase::A),
            "B" | "b" => Ok(UseCase::B),
            "C" | "c" => Ok(UseCase::C),
            "baseline" => Ok(UseCase::Baseline),
            other => Err(format!("unknown use case '{other}' (expected A, B, C or baseline)")),
        }
    }
}

impl std::fmt::Display for UseCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            UseCase::A => "A",
            UseCase::B => "B",
            UseCase::C => "C",
            UseCase::Baseline => "baseline",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub duration_s: f64,
    pub tti_s: f64,
    pub seed: u64,
    pub use_case: UseCase,
    /// Reporting and re-optimisation window of use case B.
    pub epoch_s: f64,
    /// Traffic-map observation period of use case C.
    pub observation_s: f64,
    /// Validity of a static-user plan in use case C.
    pub static_window_s: f64,
    /// Aggregate interference cap at the protected outdoor UE.
    pub i_max_dbm: f64,
    pub out_dir: Option<std::path::PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            duration_s: 1.0,
            tti_s: crate::units::TTI_S,
            seed: 1,
            use_case: UseCase::Baseline,
            epoch_s: 0.2,
            observation_s: 10.0,
            static_window_s: 5.0,
            i_max_dbm: -100.0,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn n_ttis(&self) -> u64 {
        (self.duration_s / self.tti_s).round() as u64
    }
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub deployment: Deployment,
    pub users: Vec<UserEquipment>,
    pub run: RunConfig,
    pub channel: ChannelConfig,
    pub policies: Vec<PolicyRecord>,
    pub load_profile: Option<LoadProfile>,
}

impl Scenario {
    pub fn victims(&self) -> impl Iterator<Item = &UserEquipment> {
        self.users.iter().filter(|u| u.victim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn building() -> Building {
        Building {
            origin: Point3::new(0.0, 0.0, 0.0),
            width_m: 40.0,
            depth_m: 40.0,
            height_m: 6.0,
            floors: 2,
            room_size_m: 10.0,
        }
    }

    #[test]
    fn inside_length_crossing_wall() {
        let b = building();
        let inside = b.inside_length(&Point3::new(20.0, 10.0, 2.0), &Point3::new(20.0, -10.0, 2.0));
        assert!((inside - 10.0).abs() < 1e-9);
        let outside = b.inside_length(&Point3::new(-5.0, -5.0, 1.0), &Point3::new(-5.0, -50.0, 1.0));
        assert_eq!(outside, 0.0);
        let full = b.inside_length(&Point3::new(1.0, 1.0, 1.0), &Point3::new(2.0, 3.0, 1.0));
        assert!((full - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn floors_and_rooms() {
        let b = building();
        assert_eq!(b.floor_of(&Point3::new(1.0, 1.0, 1.5)), 0);
        assert_eq!(b.floor_of(&Point3::new(1.0, 1.0, 4.5)), 1);
        assert_eq!(b.floor_of(&Point3::new(1.0, 1.0, 6.0)), 1);
        assert_eq!(b.room_of(&Point3::new(15.0, 35.0, 1.0)), (1, 3));
    }

    #[test]
    fn point_serialises_as_array() {
        let p = Point3::new(1.0, 2.5, -3.0);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[1.0,2.5,-3.0]");
    }
}
