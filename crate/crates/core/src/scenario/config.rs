use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    BaseStation, Building, Deployment, Mobility, Operator, Point3, Region, RunConfig, Scenario,
    UserEquipment, MAX_TX_POWER_DBM, MIN_DIST_INDOOR_BS_M, MIN_DIST_OUTDOOR_BS_M, OUTDOOR_BS_HEIGHT_M,
    PEDESTRIAN_SPEED_MPS, UE_HEIGHT_M,
};
use crate::channel::ChannelConfig;
use crate::ids::UeId;
use crate::rng::{stream, stream_rng};
use crate::rsm::{PolicyRecord, TrajectoryRecord, Waypoint};

const PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { path: path.into(), message: message.into() }
}

pub type RegionSpec = Region;

/// Users placed uniformly in a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserGroup {
    pub operator: Operator,
    pub region: RegionSpec,
    pub count: usize,
    /// Share of the group that never moves; the rest walk.
    #[serde(default = "default_static_fraction")]
    pub static_fraction: f64,
    #[serde(default = "default_speed")]
    pub speed_mps: f64,
}

fn default_static_fraction() -> f64 {
    0.2
}

fn default_speed() -> f64 {
    PEDESTRIAN_SPEED_MPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilitySpec {
    Static,
    Pedestrian { speed_mps: f64 },
    Trajectory {
        waypoints: Vec<Waypoint>,
        #[serde(default)]
        typical_route: bool,
    },
}

/// One explicitly placed user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub operator: Operator,
    /// Ignored for trajectory users, which start at their first waypoint.
    #[serde(default)]
    pub position: Option<Point3>,
    /// Inferred from the position when absent.
    #[serde(default)]
    pub region: Option<RegionSpec>,
    pub mobility: MobilitySpec,
    #[serde(default)]
    pub victim: bool,
}

/// A rectangular block of static devices at `spacing_m` pitch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub id: u32,
    pub operator: Operator,
    pub origin: Point3,
    pub nx: usize,
    pub ny: usize,
    pub spacing_m: f64,
}

impl ClusterSpec {
    pub fn size(&self) -> usize {
        self.nx * self.ny
    }
}

/// Dimensions used by the storage/throughput calculator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadProfile {
    pub n_rb: usize,
    #[serde(default = "default_raster")]
    pub raster_m: f64,
}

fn default_raster() -> f64 {
    1.0
}

/// Scenario file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub building: Building,
    #[serde(default = "default_f1")]
    pub carrier_f1_hz: f64,
    #[serde(default = "default_f2")]
    pub carrier_f2_hz: f64,
    #[serde(default = "default_bw")]
    pub channel_bandwidth_hz: f64,
    #[serde(default = "default_n_rb")]
    pub n_rb: usize,
    #[serde(default = "default_rb_bw")]
    pub rb_bandwidth_hz: f64,
    pub base_stations: Vec<BaseStation>,
    #[serde(default)]
    pub user_groups: Vec<UserGroup>,
    #[serde(default)]
    pub users: Vec<UserSpec>,
    #[serde(default)]
    pub clusters: Vec<ClusterSpec>,
    #[serde(default)]
    pub policies: Vec<PolicyRecord>,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub load_profile: Option<LoadProfile>,
}

fn default_f1() -> f64 {
    3.5e9
}

fn default_f2() -> f64 {
    2.6e9
}

fn default_bw() -> f64 {
    20e6
}

fn default_n_rb() -> usize {
    108
}

fn default_rb_bw() -> f64 {
    180e3
}

/// Parses and resolves a scenario file with the seed it carries.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let cfg: ScenarioConfig = serde_json::from_str(text)?;
    cfg.resolve()
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let b = &self.building;
        if !(b.width_m > 0.0 && b.depth_m > 0.0 && b.height_m > 0.0 && b.room_size_m > 0.0) {
            return Err(invalid("building", "dimensions must be positive"));
        }
        if b.floors == 0 {
            return Err(invalid("building.floors", "at least one floor required"));
        }
        if self.n_rb == 0 {
            return Err(invalid("n_rb", "must be positive"));
        }
        if !(self.rb_bandwidth_hz > 0.0 && self.carrier_f1_hz > 0.0 && self.carrier_f2_hz > 0.0) {
            return Err(invalid("rb_bandwidth_hz", "frequencies must be positive"));
        }
        if self.n_rb as f64 * self.rb_bandwidth_hz > self.channel_bandwidth_hz * (1.0 + 1e-12) {
            return Err(invalid(
                "n_rb",
                format!(
                    "{} RBs of {} Hz exceed the {} Hz channel",
                    self.n_rb, self.rb_bandwidth_hz, self.channel_bandwidth_hz
                ),
            ));
        }
        if self.base_stations.is_empty() {
            return Err(invalid("base_stations", "no base stations"));
        }
        for (i, bs) in self.base_stations.iter().enumerate() {
            let path = format!("base_stations[{i}]");
            if bs.id.index() != i {
                return Err(invalid(format!("{path}.id"), format!("expected id {i}, got {}", bs.id)));
            }
            if !(bs.max_tx_power_dbm <= MAX_TX_POWER_DBM) {
                return Err(invalid(
                    format!("{path}.max_tx_power_dbm"),
                    format!("{} dBm exceeds {MAX_TX_POWER_DBM} dBm", bs.max_tx_power_dbm),
                ));
            }
            let inside = b.contains(&bs.position);
            if bs.kind.is_indoor() {
                if !inside {
                    return Err(invalid(format!("{path}.position"), "indoor BS outside the building"));
                }
            } else {
                if inside {
                    return Err(invalid(format!("{path}.position"), "outdoor BS inside the building"));
                }
                if (bs.position.z - OUTDOOR_BS_HEIGHT_M).abs() > 1e-9 {
                    return Err(invalid(
                        format!("{path}.position"),
                        format!("outdoor BS height must be {OUTDOOR_BS_HEIGHT_M} m"),
                    ));
                }
            }
        }
        for (i, g) in self.user_groups.iter().enumerate() {
            let path = format!("user_groups[{i}]");
            if !(0.0..=1.0).contains(&g.static_fraction) {
                return Err(invalid(format!("{path}.static_fraction"), "must lie in [0, 1]"));
            }
            if !(g.speed_mps >= 0.0) {
                return Err(invalid(format!("{path}.speed_mps"), "must be non-negative"));
            }
            self.validate_region(&g.region, &format!("{path}.region"))?;
        }
        for (i, u) in self.users.iter().enumerate() {
            let path = format!("users[{i}]");
            match &u.mobility {
                MobilitySpec::Trajectory { waypoints, .. } => {
                    let rec = TrajectoryRecord { subject: UeId(0), waypoints: waypoints.clone(), typical_route: false };
                    rec.validate().map_err(|e| invalid(format!("{path}.mobility"), e.to_string()))?;
                }
                _ => {
                    if u.position.is_none() {
                        return Err(invalid(format!("{path}.position"), "required for non-trajectory users"));
                    }
                }
            }
            if let Some(r) = &u.region {
                self.validate_region(r, &format!("{path}.region"))?;
            }
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if c.size() == 0 || !(c.spacing_m > 0.0) {
                return Err(invalid(format!("clusters[{i}]"), "cluster must be non-empty with positive spacing"));
            }
        }
        for (i, p) in self.policies.iter().enumerate() {
            if p.bs_id.index() >= self.base_stations.len() {
                return Err(invalid(format!("policies[{i}].bs_id"), format!("unknown BS {}", p.bs_id)));
            }
            p.validate(self.n_rb, MAX_TX_POWER_DBM)
                .map_err(|e| invalid(format!("policies[{i}]"), e.to_string()))?;
        }
        let r = &self.run;
        if !(r.duration_s >= 1.0) {
            return Err(invalid("run.duration_s", "runs must last at least 1 s"));
        }
        if (r.tti_s - crate::units::TTI_S).abs() > 1e-15 {
            return Err(invalid("run.tti_s", "TTI must be 1 ms"));
        }
        if !(r.epoch_s > 0.0 && r.observation_s >= 0.0 && r.static_window_s > 0.0) {
            return Err(invalid("run", "epoch_s and static_window_s must be positive"));
        }
        Ok(())
    }

    fn validate_region(&self, r: &Region, path: &str) -> Result<(), ScenarioError> {
        match r {
            Region::Indoor { floor } if *floor >= self.building.floors => {
                Err(invalid(path, format!("floor {floor} does not exist")))
            }
            Region::Outdoor { min, max } if !(max[0] > min[0] && max[1] > min[1]) => {
                Err(invalid(path, "outdoor rectangle is empty"))
            }
            _ => Ok(()),
        }
    }

    pub fn deployment(&self) -> Deployment {
        Deployment {
            building: self.building.clone(),
            base_stations: self.base_stations.clone(),
            carrier_f1_hz: self.carrier_f1_hz,
            carrier_f2_hz: self.carrier_f2_hz,
            channel_bandwidth_hz: self.channel_bandwidth_hz,
            n_rb: self.n_rb,
            rb_bandwidth_hz: self.rb_bandwidth_hz,
        }
    }

    /// Validates and places every user using `run.seed`.
    pub fn resolve(&self) -> Result<Scenario, ScenarioError> {
        self.validate()?;
        let deployment = self.deployment();
        let seed = self.run.seed;
        let mut users = Vec::new();
        let next_id = |users: &Vec<UserEquipment>| UeId(users.len() as u32);

        for (gi, g) in self.user_groups.iter().enumerate() {
            let mut rng = stream_rng(seed, stream::PLACEMENT, gi as u64, 0);
            let n_static = (g.count as f64 * g.static_fraction).round() as usize;
            for k in 0..g.count {
                let position = sample_position(&deployment, &g.region, &mut rng)
                    .ok_or_else(|| invalid(format!("user_groups[{gi}].region"), "no admissible position"))?;
                let mobility = if k < n_static || g.speed_mps == 0.0 {
                    Mobility::Static
                } else {
                    Mobility::Pedestrian { speed_mps: g.speed_mps, heading_rad: rng.random_range(0.0..std::f64::consts::TAU) }
                };
                users.push(UserEquipment {
                    id: next_id(&users),
                    operator: g.operator,
                    position,
                    region: g.region.clone(),
                    mobility,
                    cluster_id: None,
                    victim: false,
                });
            }
        }

        for (ui, u) in self.users.iter().enumerate() {
            let id = next_id(&users);
            let mut heading_rng = stream_rng(seed, stream::PLACEMENT, 1 << 32, ui as u64);
            let (position, mobility) = match &u.mobility {
                MobilitySpec::Static => (u.position.expect("validated"), Mobility::Static),
                MobilitySpec::Pedestrian { speed_mps } => (
                    u.position.expect("validated"),
                    Mobility::Pedestrian {
                        speed_mps: *speed_mps,
                        heading_rad: heading_rng.random_range(0.0..std::f64::consts::TAU),
                    },
                ),
                MobilitySpec::Trajectory { waypoints, typical_route } => (
                    waypoints[0].position,
                    Mobility::Trajectory(TrajectoryRecord {
                        subject: id,
                        waypoints: waypoints.clone(),
                        typical_route: *typical_route,
                    }),
                ),
            };
            let region = u.region.clone().unwrap_or_else(|| infer_region(&deployment.building, &position));
            users.push(UserEquipment {
                id,
                operator: u.operator,
                position,
                region,
                mobility,
                cluster_id: None,
                victim: u.victim,
            });
        }

        for c in &self.clusters {
            for iy in 0..c.ny {
                for ix in 0..c.nx {
                    let position = Point3::new(
                        c.origin.x + ix as f64 * c.spacing_m,
                        c.origin.y + iy as f64 * c.spacing_m,
                        c.origin.z,
                    );
                    users.push(UserEquipment {
                        id: next_id(&users),
                        operator: c.operator,
                        position,
                        region: infer_region(&deployment.building, &position),
                        mobility: Mobility::Static,
                        cluster_id: Some(c.id),
                        victim: false,
                    });
                }
            }
        }

        Ok(Scenario {
            deployment,
            users,
            run: self.run.clone(),
            channel: self.channel.clone(),
            policies: self.policies.clone(),
            load_profile: self.load_profile.clone(),
        })
    }
}

fn infer_region(building: &Building, p: &Point3) -> Region {
    if building.contains(p) {
        Region::Indoor { floor: building.floor_of(p) }
    } else {
        Region::Outdoor { min: [p.x, p.y], max: [p.x, p.y] }
    }
}

/// Whether a UE position respects the minimum distances to base stations.
pub(crate) fn clear_of_base_stations(deployment: &Deployment, p: &Point3) -> bool {
    deployment.base_stations.iter().all(|bs| {
        let min = if bs.kind.is_indoor() { MIN_DIST_INDOOR_BS_M } else { MIN_DIST_OUTDOOR_BS_M };
        bs.position.distance(p) >= min
    })
}

fn sample_position<R: Rng>(deployment: &Deployment, region: &Region, rng: &mut R) -> Option<Point3> {
    let b = &deployment.building;
    for _ in 0..PLACEMENT_ATTEMPTS {
        let p = match region {
            Region::Indoor { floor } => Point3::new(
                rng.random_range(b.origin.x..b.origin.x + b.width_m),
                rng.random_range(b.origin.y..b.origin.y + b.depth_m),
                b.origin.z + *floor as f64 * b.floor_height_m() + UE_HEIGHT_M,
            ),
            Region::Outdoor { min, max } => {
                let p = Point3::new(rng.random_range(min[0]..max[0]), rng.random_range(min[1]..max[1]), UE_HEIGHT_M);
                if b.footprint_contains(p.x, p.y) {
                    continue;
                }
                p
            }
        };
        if clear_of_base_stations(deployment, &p) {
            return Some(p);
        }
    }
    None
}
