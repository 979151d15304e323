use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Building, Mobility, Point3, Region, UserEquipment};
use crate::rng::{stream, stream_rng};

/// Walls are kept this far from a pedestrian.
const WALL_MARGIN_M: f64 = 0.05;
/// Heading redraws before a blocked pedestrian waits for the next step.
const MAX_REDRAWS: usize = 64;

/// Per-user random state for pedestrian direction changes.
#[derive(Debug, Clone)]
pub struct MobilityModel {
    building: Building,
    rngs: Vec<ChaCha8Rng>,
}

impl MobilityModel {
    pub fn new(building: &Building, users: &[UserEquipment], seed: u64) -> Self {
        Self {
            building: building.clone(),
            rngs: users.iter().map(|u| stream_rng(seed, stream::MOBILITY, u.id.0 as u64, 0)).collect(),
        }
    }

    fn admissible(&self, region: &Region, x: f64, y: f64) -> bool {
        let b = &self.building;
        match region {
            Region::Indoor { .. } => {
                x >= b.origin.x + WALL_MARGIN_M
                    && x <= b.origin.x + b.width_m - WALL_MARGIN_M
                    && y >= b.origin.y + WALL_MARGIN_M
                    && y <= b.origin.y + b.depth_m - WALL_MARGIN_M
            }
            Region::Outdoor { min, max } => {
                x >= min[0] && x <= max[0] && y >= min[1] && y <= max[1] && !b.footprint_contains(x, y)
            }
        }
    }

    /// Moves every user to its position at `t_s`, `dt_s` after the previous step.
    pub fn step(&mut self, users: &mut [UserEquipment], t_s: f64, dt_s: f64) {
        assert!(dt_s > 0.0, "mobility step must be positive");
        for (i, u) in users.iter_mut().enumerate() {
            match &mut u.mobility {
                Mobility::Static => {}
                Mobility::Trajectory(tr) => {
                    if let Ok(fix) = tr.position_at(t_s) {
                        u.position = fix.position;
                    }
                }
                Mobility::Pedestrian { speed_mps, heading_rad } => {
                    let step = *speed_mps * dt_s;
                    let p = u.position;
                    let target = |h: f64| (p.x + step * h.cos(), p.y + step * h.sin());
                    let (mut x, mut y) = target(*heading_rad);
                    let mut ok = self.admissible(&u.region, x, y);
                    let mut redraws = 0;
                    while !ok && redraws < MAX_REDRAWS {
                        *heading_rad = self.rngs[i].random_range(0.0..std::f64::consts::TAU);
                        (x, y) = target(*heading_rad);
                        ok = self.admissible(&u.region, x, y);
                        redraws += 1;
                    }
                    if ok {
                        u.position = Point3::new(x, y, p.z);
                    }
                }
            }
        }
    }
}

/// Advances `users` by `dt_s` to absolute time `t_s`.
pub fn step_mobility(model: &mut MobilityModel, users: &mut [UserEquipment], t_s: f64, dt_s: f64) {
    model.step(users, t_s, dt_s);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::UeId;
    use crate::rsm::{TrajectoryRecord, Waypoint};
    use crate::scenario::Operator;

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

    fn ue(id: u32, position: Point3, mobility: Mobility) -> UserEquipment {
        UserEquipment {
            id: UeId(id),
            operator: Operator::Mbb,
            position,
            region: Region::Indoor { floor: 0 },
            mobility,
            cluster_id: None,
            victim: false,
        }
    }

    #[test]
    fn static_user_stays() {
        let p = Point3::new(3.0, 4.0, 1.5);
        let mut users = vec![ue(0, p, Mobility::Static)];
        let mut m = MobilityModel::new(&building(), &users, 1);
        for k in 1..100 {
            m.step(&mut users, k as f64 * 0.37, 0.37);
        }
        assert_eq!(users[0].position, p);
    }

    #[test]
    fn pedestrian_constant_speed() {
        let p = Point3::new(20.0, 20.0, 1.5);
        let mut users = vec![ue(0, p, Mobility::Pedestrian { speed_mps: 0.8, heading_rad: 0.3 })];
        let mut m = MobilityModel::new(&building(), &users, 1);
        m.step(&mut users, 1.0, 1.0);
        assert!((users[0].position.distance(&p) - 0.8).abs() < 1e-9);
        let start = users[0].position;
        for k in 1..=1000 {
            m.step(&mut users, 1.0 + k as f64 * 1e-3, 1e-3);
        }
        // no wall within reach: straight line
        assert!((users[0].position.distance(&start) - 0.8).abs() < 1e-9);
    }

    #[test]
    fn pedestrian_bounces_off_walls() {
        let mut users = vec![ue(0, Point3::new(39.5, 20.0, 1.5), Mobility::Pedestrian { speed_mps: 0.8, heading_rad: 0.0 })];
        let b = building();
        let mut m = MobilityModel::new(&b, &users, 3);
        let mut prev = users[0].position;
        for k in 1..=2000 {
            m.step(&mut users, k as f64 * 0.1, 0.1);
            let p = users[0].position;
            assert!(b.footprint_contains(p.x, p.y));
            let d = p.distance(&prev);
            assert!(d < 1e-12 || (d - 0.08).abs() < 1e-9);
            prev = p;
        }
    }

    #[test]
    fn trajectory_midpoint() {
        let tr = TrajectoryRecord {
            subject: UeId(0),
            waypoints: vec![
                Waypoint { t_s: 0.0, position: Point3::new(-20.0, -10.0, 1.5) },
                Waypoint { t_s: 6.0, position: Point3::new(60.0, -10.0, 1.5) },
            ],
            typical_route: true,
        };
        let mut users = vec![ue(0, Point3::new(-20.0, -10.0, 1.5), Mobility::Trajectory(tr))];
        let mut m = MobilityModel::new(&building(), &users, 1);
        m.step(&mut users, 3.0, 3.0);
        assert_eq!(users[0].position, Point3::new(20.0, -10.0, 1.5));
    }

    #[test]
    fn same_seed_same_trace() {
        let run = |seed| {
            let mut users: Vec<_> = (0..5)
                .map(|i| ue(i, Point3::new(5.0 + 6.0 * i as f64, 20.0, 1.5), Mobility::Pedestrian { speed_mps: 0.8, heading_rad: 1.0 }))
                .collect();
            let mut m = MobilityModel::new(&building(), &users, seed);
            let mut trace = Vec::new();
            for k in 1..=3000 {
                m.step(&mut users, k as f64 * 0.01, 0.01);
                trace.extend(users.iter().map(|u| u.position));
            }
            trace
        };
        assert_eq!(run(9), run(9));
    }
}
