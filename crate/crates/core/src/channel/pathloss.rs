//! Winner II path loss.
//!
//! Scenario mapping: A1 (indoor office) for indoor links, B1 (urban micro)
//! for outdoor links, and B1 plus a wall penetration term and a per-metre
//! indoor loss for links crossing the building shell.

use crate::scenario::{Building, Point3};
use crate::units::SPEED_OF_LIGHT_MPS;
use serde::{Deserialize, Serialize};

use super::ChannelConfig;

/// Distance below which the models are not valid.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    IndoorIndoor,
    OutdoorOutdoor,
    OutdoorToIndoor,
    IndoorToOutdoor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    Los,
    Nlos,
}

/// Endpoint geometry of one link, with the derived quantities the path loss needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    pub tx: Point3,
    pub rx: Point3,
    pub class: LinkClass,
    pub carrier_hz: f64,
    pub distance_m: f64,
    pub propagation: Propagation,
    /// Internal walls crossed (indoor NLOS only).
    pub walls: u32,
    /// Floors crossed (indoor only).
    pub floors: u32,
    /// Portion of the direct path inside the building (shell-crossing links).
    pub indoor_length_m: f64,
}

impl LinkGeometry {
    pub fn new(tx: Point3, rx: Point3, carrier_hz: f64, building: &Building, cfg: &ChannelConfig) -> Self {
        let (tx_in, rx_in) = (building.contains(&tx), building.contains(&rx));
        let class = match (tx_in, rx_in) {
            (true, true) => LinkClass::IndoorIndoor,
            (false, false) => LinkClass::OutdoorOutdoor,
            (false, true) => LinkClass::OutdoorToIndoor,
            (true, false) => LinkClass::IndoorToOutdoor,
        };
        let distance_m = tx.distance(&rx);
        let (mut walls, mut floors, mut indoor_length_m) = (0, 0, 0.0);
        let geometric = match class {
            LinkClass::IndoorIndoor => {
                floors = building.floor_of(&tx).abs_diff(building.floor_of(&rx));
                let (rt, rr) = (building.room_of(&tx), building.room_of(&rx));
                walls = (rt.0.abs_diff(rr.0) + rt.1.abs_diff(rr.1)) as u32;
                if floors == 0 && walls == 0 {
                    Propagation::Los
                } else {
                    Propagation::Nlos
                }
            }
            _ => {
                if class != LinkClass::OutdoorOutdoor {
                    indoor_length_m = building.inside_length(&tx, &rx);
                }
                if distance_m <= cfg.outdoor_los_radius_m {
                    Propagation::Los
                } else {
                    Propagation::Nlos
                }
            }
        };
        Self {
            tx,
            rx,
            class,
            carrier_hz,
            distance_m,
            propagation: cfg.los_override.unwrap_or(geometric),
            walls,
            floors,
            indoor_length_m,
        }
    }
}

/// Path loss value; `clamped` marks links shorter than [`MIN_DISTANCE_M`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub db: f64,
    pub clamped: bool,
}

fn freq_term(carrier_hz: f64, coeff: f64) -> f64 {
    coeff * (carrier_hz / 5e9).log10()
}

pub fn a1_los_db(d: f64, carrier_hz: f64) -> f64 {
    18.7 * d.log10() + 46.8 + freq_term(carrier_hz, 20.0)
}

pub fn a1_nlos_db(d: f64, carrier_hz: f64, walls: u32, floors: u32, wall_loss_db: f64) -> f64 {
    let floor_loss = if floors > 0 { 17.0 + 4.0 * (floors as f64 - 1.0) } else { 0.0 };
    20.0 * d.log10() + 46.4 + wall_loss_db * walls as f64 + floor_loss + freq_term(carrier_hz, 20.0)
}

/// B1 LOS with the dual-slope breakpoint; continuous at the breakpoint.
pub fn b1_los_db(d: f64, carrier_hz: f64, h_bs: f64, h_ms: f64) -> f64 {
    let hb = (h_bs - 1.0).max(0.1);
    let hm = (h_ms - 1.0).max(0.1);
    let d_bp = (4.0 * hb * hm * carrier_hz / SPEED_OF_LIGHT_MPS).max(MIN_DISTANCE_M);
    let near = |d: f64| 22.7 * d.log10() + 41.0 + freq_term(carrier_hz, 20.0);
    if d <= d_bp {
        near(d)
    } else {
        near(d_bp) + 40.0 * (d / d_bp).log10()
    }
}

pub fn b1_nlos_db(d: f64, carrier_hz: f64, h_bs: f64) -> f64 {
    let h = h_bs.max(1.5);
    (44.9 - 6.55 * h.log10()) * d.log10() + 34.46 + 5.83 * h.log10() + freq_term(carrier_hz, 23.0)
}

/// Deterministic path loss of a link in dB.
pub fn path_loss_db(link: &LinkGeometry, cfg: &ChannelConfig) -> PathLoss {
    let clamped = link.distance_m < MIN_DISTANCE_M;
    let d = link.distance_m.max(MIN_DISTANCE_M);
    let f = link.carrier_hz;
    let (h_bs, h_ms) = (link.tx.z.max(link.rx.z), link.tx.z.min(link.rx.z));
    let outdoor = |d: f64| match link.propagation {
        Propagation::Los => b1_los_db(d, f, h_bs, h_ms),
        Propagation::Nlos => b1_nlos_db(d, f, h_bs),
    };
    let db = match link.class {
        LinkClass::IndoorIndoor => match link.propagation {
            Propagation::Los => a1_los_db(d, f),
            Propagation::Nlos => a1_nlos_db(d, f, link.walls, link.floors, cfg.internal_wall_loss_db),
        },
        LinkClass::OutdoorOutdoor => outdoor(d),
        LinkClass::OutdoorToIndoor | LinkClass::IndoorToOutdoor => {
            outdoor(d) + cfg.wall_penetration_db + cfg.indoor_loss_db_per_m * link.indoor_length_m
        }
    };
    PathLoss { db, clamped }
}

/// Log-normal shadowing standard deviation for the link's scenario.
pub fn shadowing_sigma_db(link: &LinkGeometry) -> f64 {
    match (link.class, link.propagation) {
        (LinkClass::IndoorIndoor, Propagation::Los) => 3.0,
        (LinkClass::IndoorIndoor, Propagation::Nlos) => 4.0,
        (LinkClass::OutdoorOutdoor, Propagation::Los) => 3.0,
        (LinkClass::OutdoorOutdoor, Propagation::Nlos) => 4.0,
        _ => 7.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

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

    fn indoor_los(d: f64) -> LinkGeometry {
        let cfg = ChannelConfig::default();
        LinkGeometry::new(Point3::new(1.0, 1.0, 1.5), Point3::new(1.0, 1.0 + d, 1.5), 3.5e9, &building(), &cfg)
    }

    #[test]
    fn a1_los_reference_values() {
        let cfg = ChannelConfig::default();
        let g = LinkGeometry::new(Point3::new(0.5, 0.5, 1.5), Point3::new(6.5, 8.5, 1.5), 3.5e9, &building(), &cfg);
        assert_eq!(g.class, LinkClass::IndoorIndoor);
        assert_eq!(g.propagation, Propagation::Los);
        let pl = path_loss_db(&g, &cfg);
        let expected = 18.7 * 10f64.log10() + 46.8 + 20.0 * (3.5f64 / 5.0).log10();
        assert!((pl.db - expected).abs() < 1e-12);
        assert!((pl.db - 62.4).abs() < 0.05);
        assert!((a1_los_db(3.0, 3.5e9) - 52.6).abs() < 0.05);
    }

    #[test]
    fn doubling_distance_adds_fixed_step() {
        let cfg = ChannelConfig::default();
        let a = path_loss_db(&indoor_los(2.0), &cfg).db;
        let b = path_loss_db(&indoor_los(4.0), &cfg).db;
        assert!((b - a - 18.7 * 2f64.log10()).abs() < 1e-12);
        assert!((b - a - 5.63).abs() < 0.01);
    }

    #[test]
    fn short_links_clamped_and_flagged() {
        let cfg = ChannelConfig::default();
        let pl = path_loss_db(&indoor_los(0.4), &cfg);
        assert!(pl.clamped);
        assert_eq!(pl.db, a1_los_db(1.0, 3.5e9));
    }

    #[test]
    fn classes_from_endpoints() {
        let cfg = ChannelConfig::default();
        let b = building();
        let inside = Point3::new(20.0, 10.0, 2.8);
        let street = Point3::new(20.0, -10.0, 1.5);
        let far = Point3::new(20.0, -80.0, 10.0);
        assert_eq!(LinkGeometry::new(inside, street, 3.5e9, &b, &cfg).class, LinkClass::IndoorToOutdoor);
        assert_eq!(LinkGeometry::new(street, inside, 3.5e9, &b, &cfg).class, LinkClass::OutdoorToIndoor);
        let oo = LinkGeometry::new(far, street, 3.5e9, &b, &cfg);
        assert_eq!((oo.class, oo.propagation), (LinkClass::OutdoorOutdoor, Propagation::Nlos));
        let o2i = LinkGeometry::new(inside, street, 3.5e9, &b, &cfg);
        // half of the slanted path lies inside
        assert!((o2i.indoor_length_m - 0.5 * o2i.distance_m).abs() < 1e-9);
        let pl = path_loss_db(&o2i, &cfg).db;
        let outdoor_only = b1_los_db(o2i.distance_m, 3.5e9, 2.8, 1.5);
        assert!((pl - outdoor_only - 14.0 - 0.5 * o2i.indoor_length_m).abs() < 1e-9);
    }

    #[test]
    fn floors_and_walls_add_loss() {
        let cfg = ChannelConfig::default();
        let b = building();
        let tx = Point3::new(5.0, 5.0, 2.8);
        let same_room = LinkGeometry::new(tx, Point3::new(8.0, 8.0, 1.5), 3.5e9, &b, &cfg);
        let next_room = LinkGeometry::new(tx, Point3::new(12.0, 5.0, 1.5), 3.5e9, &b, &cfg);
        let upstairs = LinkGeometry::new(tx, Point3::new(5.0, 8.0, 4.5), 3.5e9, &b, &cfg);
        assert_eq!(same_room.propagation, Propagation::Los);
        assert_eq!((next_room.walls, next_room.propagation), (1, Propagation::Nlos));
        assert_eq!(upstairs.floors, 1);
        assert!(path_loss_db(&next_room, &cfg).db > path_loss_db(&same_room, &cfg).db);
    }

    proptest! {
        #[test]
        fn monotone_along_ray(d1 in 1.0f64..400.0, step in 0.0f64..200.0, angle in 0.0f64..std::f64::consts::TAU) {
            let cfg = ChannelConfig::default();
            let b = building();
            for (tx, z) in [(Point3::new(20.0, 10.0, 2.8), 1.5), (Point3::new(-50.0, -50.0, 10.0), 1.5)] {
                let dir = (angle.cos(), angle.sin());
                let at = |d: f64| Point3::new(tx.x + d * dir.0, tx.y + d * dir.1, z);
                let g1 = LinkGeometry::new(tx, at(d1), 3.5e9, &b, &cfg);
                let g2 = LinkGeometry::new(tx, at(d1 + step), 3.5e9, &b, &cfg);
                if g1.class == g2.class && g1.propagation == g2.propagation
                    && g1.walls == g2.walls && g1.floors == g2.floors
                    && (g1.indoor_length_m - g2.indoor_length_m).abs() < 1e-9 {
                    prop_assert!(path_loss_db(&g2, &cfg).db >= path_loss_db(&g1, &cfg).db - 1e-9);
                }
            }
        }

        #[test]
        fn pure_function(x in -60.0f64..60.0, y in -60.0f64..60.0) {
            let cfg = ChannelConfig::default();
            let g = LinkGeometry::new(Point3::new(20.0, 30.0, 2.8), Point3::new(x, y, 1.5), 3.5e9, &building(), &cfg);
            prop_assert_eq!(path_loss_db(&g, &cfg), path_loss_db(&g.clone(), &cfg));
        }
    }
}
