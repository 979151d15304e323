use crate::ids::UeId;
use crate::scenario::Point3;
use serde::{Deserialize, Serialize};

use super::RsmError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t_s: f64,
    pub position: Point3,
}

/// Timestamped route of a mobile subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRecord {
    pub subject: UeId,
    pub waypoints: Vec<Waypoint>,
    #[serde(default)]
    pub typical_route: bool,
}

/// Interpolated position; `clamped` is set when `t` fell outside the span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryFix {
    pub position: Point3,
    pub clamped: bool,
}

impl TrajectoryRecord {
    pub fn validate(&self) -> Result<(), RsmError> {
        if self.waypoints.is_empty() {
            return Err(RsmError::EmptyTrajectory);
        }
        for w in self.waypoints.windows(2) {
            if !(w[1].t_s > w[0].t_s) {
                return Err(RsmError::NonMonotoneTrajectory { t_s: w[1].t_s });
            }
        }
        Ok(())
    }

    pub fn start_s(&self) -> f64 {
        self.waypoints.first().map_or(0.0, |w| w.t_s)
    }

    pub fn end_s(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.t_s)
    }

    pub fn length_m(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].position.distance(&w[1].position))
            .sum()
    }

    pub fn mean_speed_mps(&self) -> f64 {
        let span = self.end_s() - self.start_s();
        if span > 0.0 {
            self.length_m() / span
        } else {
            0.0
        }
    }

    /// Piecewise-linear position at `t_s`, clamped to the endpoints.
    pub fn position_at(&self, t_s: f64) -> Result<TrajectoryFix, RsmError> {
        let wps = &self.waypoints;
        let (first, last) = match (wps.first(), wps.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(RsmError::EmptyTrajectory),
        };
        if t_s <= first.t_s {
            return Ok(TrajectoryFix { position: first.position, clamped: t_s < first.t_s });
        }
        if t_s >= last.t_s {
            return Ok(TrajectoryFix { position: last.position, clamped: t_s > last.t_s });
        }
        // first index with t > t_s; t_s lies in [wps[i-1].t, wps[i].t)
        let i = wps.partition_point(|w| w.t_s <= t_s);
        let (a, b) = (&wps[i - 1], &wps[i]);
        if t_s == a.t_s {
            return Ok(TrajectoryFix { position: a.position, clamped: false });
        }
        let frac = (t_s - a.t_s) / (b.t_s - a.t_s);
        Ok(TrajectoryFix { position: a.position.lerp(&b.position, frac), clamped: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn route() -> TrajectoryRecord {
        TrajectoryRecord {
            subject: UeId(7),
            waypoints: vec![
                Waypoint { t_s: 0.0, position: Point3::new(0.0, 0.0, 1.5) },
                Waypoint { t_s: 2.0, position: Point3::new(10.0, 0.0, 1.5) },
                Waypoint { t_s: 6.0, position: Point3::new(10.0, 20.0, 1.5) },
            ],
            typical_route: true,
        }
    }

    #[test]
    fn passes_through_waypoints() {
        let r = route();
        for w in &r.waypoints {
            let fix = r.position_at(w.t_s).unwrap();
            assert_eq!(fix.position, w.position);
            assert!(!fix.clamped);
        }
    }

    #[test]
    fn midpoint_and_clamp() {
        let r = route();
        let mid = r.position_at(1.0).unwrap().position;
        assert_eq!(mid, Point3::new(5.0, 0.0, 1.5));
        let late = r.position_at(9.0).unwrap();
        assert!(late.clamped);
        assert_eq!(late.position, Point3::new(10.0, 20.0, 1.5));
        assert!((r.length_m() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_records() {
        let empty = TrajectoryRecord { subject: UeId(0), waypoints: vec![], typical_route: false };
        assert!(matches!(empty.position_at(0.0), Err(RsmError::EmptyTrajectory)));
        let mut r = route();
        r.waypoints[2].t_s = 2.0;
        assert!(r.validate().is_err());
    }
}
