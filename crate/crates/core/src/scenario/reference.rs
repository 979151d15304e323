use super::config::{ClusterSpec, LoadProfile, MobilitySpec, ScenarioConfig, ScenarioError, UserGroup, UserSpec};
use super::{
    BaseStation, Building, BsKind, Carrier, Operator, Point3, Region, RunConfig, Scenario, UseCase,
    MAX_TX_POWER_DBM, OUTDOOR_BS_HEIGHT_M, UE_HEIGHT_M,
};
use crate::channel::ChannelConfig;
use crate::ids::BsId;
use crate::rsm::{PolicyRecord, RbRange, SpectrumMask, Waypoint};

/// 50 km/h.
pub const BUS_SPEED_MPS: f64 = 50.0 / 3.6;
pub const BUS_TRIP_S: f64 = 6.0;
/// Distance of the bus lane from the building's south wall.
const BUS_LANE_Y_M: f64 = -10.0;
/// Road-side units sit across the lane from the building's south corners.
const RSU_Y_M: f64 = -30.0;
/// Interference budget of the bus receiver.
const BUS_I_MAX_DBM: f64 = -85.0;

const BUILDING_SIDE_M: f64 = 40.0;
const FLOOR_HEIGHT_M: f64 = 3.0;
const FLOORS: u32 = 2;
/// Indoor BSs hang this far below the ceiling.
const CEILING_GAP_M: f64 = 0.2;
const INDOOR_USERS_PER_FLOOR: usize = 18;
const OUTDOOR_USERS: usize = 6;

/// RB budgets of the four one-second LSA demo intervals.
pub const LSA_DEMO_BUDGETS: [usize; 4] = [50, 100, 20, 80];

fn indoor_columns() -> [f64; 3] {
    [BUILDING_SIDE_M / 6.0, BUILDING_SIDE_M / 2.0, 5.0 * BUILDING_SIDE_M / 6.0]
}

fn indoor_rows() -> [f64; 2] {
    [BUILDING_SIDE_M / 4.0, 3.0 * BUILDING_SIDE_M / 4.0]
}

fn reference_base_stations() -> Vec<BaseStation> {
    let mut out = Vec::new();
    for floor in 0..FLOORS {
        let z = (floor + 1) as f64 * FLOOR_HEIGHT_M - CEILING_GAP_M;
        for y in indoor_rows() {
            for x in indoor_columns() {
                out.push(BaseStation {
                    id: BsId(out.len() as u32),
                    kind: BsKind::IndoorHotspot,
                    operator: Operator::Mbb,
                    position: Point3::new(x, y, z),
                    carrier: Carrier::F1,
                    max_tx_power_dbm: MAX_TX_POWER_DBM,
                });
            }
        }
    }
    let mid = BUILDING_SIDE_M / 2.0;
    let outdoor = [
        (BsKind::OutdoorMacro, Operator::Mbb, Carrier::F2, Point3::new(mid, -45.0, OUTDOOR_BS_HEIGHT_M)),
        (BsKind::RoadSideUnit, Operator::Iot, Carrier::F1, Point3::new(0.0, RSU_Y_M, OUTDOOR_BS_HEIGHT_M)),
        (BsKind::RoadSideUnit, Operator::Iot, Carrier::F1, Point3::new(BUILDING_SIDE_M, RSU_Y_M, OUTDOOR_BS_HEIGHT_M)),
    ];
    for (kind, operator, carrier, position) in outdoor {
        out.push(BaseStation {
            id: BsId(out.len() as u32),
            kind,
            operator,
            position,
            carrier,
            max_tx_power_dbm: MAX_TX_POWER_DBM,
        });
    }
    out
}

/// Bus route along the south facade, centred on the building.
pub fn bus_waypoints() -> Vec<Waypoint> {
    let half = BUS_SPEED_MPS * BUS_TRIP_S / 2.0;
    let mid = BUILDING_SIDE_M / 2.0;
    vec![
        Waypoint { t_s: 0.0, position: Point3::new(mid - half, BUS_LANE_Y_M, UE_HEIGHT_M) },
        Waypoint { t_s: BUS_TRIP_S, position: Point3::new(mid + half, BUS_LANE_Y_M, UE_HEIGHT_M) },
    ]
}

/// LSA demo schedule: every indoor BS gets RBs `[0, budget)` in consecutive one-second intervals.
pub fn lsa_demo_policies(indoor: &[BsId], budgets: &[usize]) -> Vec<PolicyRecord> {
    let mut out = Vec::new();
    for &bs in indoor {
        for (k, &budget) in budgets.iter().enumerate() {
            out.push(PolicyRecord {
                bs_id: bs,
                t_start_s: k as f64,
                t_end_s: (k + 1) as f64,
                rb_range: RbRange::new(0, budget),
                max_tx_power_dbm: MAX_TX_POWER_DBM,
                spectrum_mask: SpectrumMask::default(),
            });
        }
    }
    out
}

/// The reference deployment and populations for one use case.
pub fn reference_config(use_case: UseCase) -> ScenarioConfig {
    let base_stations = reference_base_stations();
    let indoor: Vec<BsId> = base_stations.iter().filter(|b| b.kind.is_indoor()).map(|b| b.id).collect();
    let mut user_groups: Vec<UserGroup> = (0..FLOORS)
        .map(|floor| UserGroup {
            operator: Operator::Mbb,
            region: Region::Indoor { floor },
            count: INDOOR_USERS_PER_FLOOR,
            static_fraction: 0.2,
            speed_mps: super::PEDESTRIAN_SPEED_MPS,
        })
        .collect();
    if use_case != UseCase::B {
        user_groups.push(UserGroup {
            operator: Operator::Mbb,
            region: Region::Outdoor { min: [-20.0, -70.0], max: [60.0, -15.0] },
            count: OUTDOOR_USERS,
            static_fraction: 0.2,
            speed_mps: super::PEDESTRIAN_SPEED_MPS,
        });
    }
    let mut users = Vec::new();
    let mut clusters = Vec::new();
    let mut policies = Vec::new();
    let duration_s = match use_case {
        UseCase::Baseline => 1.0,
        UseCase::A => LSA_DEMO_BUDGETS.len() as f64,
        UseCase::B => BUS_TRIP_S,
        UseCase::C => 15.0,
    };
    match use_case {
        UseCase::A => policies = lsa_demo_policies(&indoor, &LSA_DEMO_BUDGETS),
        UseCase::B => users.push(UserSpec {
            operator: Operator::Iot,
            position: None,
            region: Some(Region::Outdoor { min: [-40.0, -20.0], max: [80.0, -5.0] }),
            mobility: MobilitySpec::Trajectory { waypoints: bus_waypoints(), typical_route: true },
            victim: true,
        }),
        UseCase::C => clusters.push(ClusterSpec {
            id: 0,
            operator: Operator::Mbb,
            origin: Point3::new(23.5, 24.5, UE_HEIGHT_M),
            nx: 5,
            ny: 2,
            spacing_m: 1.0,
        }),
        UseCase::Baseline => {}
    }
    ScenarioConfig {
        building: Building {
            origin: Point3::new(0.0, 0.0, 0.0),
            width_m: BUILDING_SIDE_M,
            depth_m: BUILDING_SIDE_M,
            height_m: FLOORS as f64 * FLOOR_HEIGHT_M,
            floors: FLOORS,
            room_size_m: 10.0,
        },
        carrier_f1_hz: 3.5e9,
        carrier_f2_hz: 2.6e9,
        channel_bandwidth_hz: 20e6,
        n_rb: 108,
        rb_bandwidth_hz: 180e3,
        base_stations,
        user_groups,
        users,
        clusters,
        policies,
        channel: ChannelConfig::default(),
        run: RunConfig {
            duration_s,
            use_case,
            i_max_dbm: if use_case == UseCase::B { BUS_I_MAX_DBM } else { RunConfig::default().i_max_dbm },
            ..RunConfig::default()
        },
        load_profile: Some(LoadProfile { n_rb: 100, raster_m: 1.0 }),
    }
}

/// Reference scenario for `use_case`, resolved with `seed`.
pub fn build_reference_scenario(seed: u64, use_case: UseCase) -> Result<Scenario, ScenarioError> {
    let mut cfg = reference_config(use_case);
    cfg.run.seed = seed;
    cfg.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Mobility;

    #[test]
    fn twelve_indoor_base_stations() {
        for seed in [1, 2, 99] {
            for uc in [UseCase::Baseline, UseCase::A, UseCase::B, UseCase::C] {
                let s = build_reference_scenario(seed, uc).unwrap();
                assert_eq!(s.deployment.indoor_bs_ids().len(), 12);
                assert_eq!(s.deployment.n_rb, 108);
                assert!(s.deployment.n_rb as f64 * s.deployment.rb_bandwidth_hz <= 0.98 * 20e6);
            }
        }
    }

    #[test]
    fn bus_route_length() {
        let s = build_reference_scenario(1, UseCase::B).unwrap();
        let victim = s.victims().next().unwrap();
        let Mobility::Trajectory(tr) = &victim.mobility else { panic!("victim must follow a trajectory") };
        assert!((BUS_SPEED_MPS - 13.89).abs() < 0.005);
        assert!((tr.length_m() - 83.33).abs() < 0.01);
        assert!((tr.end_s() - tr.start_s() - 6.0).abs() < 1e-12);
        let mid = tr.position_at(3.0).unwrap().position;
        assert!((mid.x - 20.0).abs() < 1e-12);
    }

    #[test]
    fn cluster_of_ten() {
        let s = build_reference_scenario(1, UseCase::C).unwrap();
        let cluster: Vec<_> = s.users.iter().filter(|u| u.cluster_id == Some(0)).collect();
        assert_eq!(cluster.len(), 10);
        assert!(cluster.iter().all(|u| u.mobility == Mobility::Static && u.is_indoor()));
    }

    #[test]
    fn population_mix() {
        let s = build_reference_scenario(4, UseCase::Baseline).unwrap();
        let indoor: Vec<_> = s.users.iter().filter(|u| u.is_indoor()).collect();
        let n_static = indoor.iter().filter(|u| u.mobility == Mobility::Static).count();
        assert_eq!(indoor.len(), 36);
        // 20% of 18 per floor rounds to 4
        assert_eq!(n_static, 8);
    }

    #[test]
    fn lsa_demo_schedule() {
        let s = build_reference_scenario(1, UseCase::A).unwrap();
        assert_eq!(s.policies.len(), 12 * 4);
        assert_eq!(s.run.duration_s, 4.0);
    }
}
