//! Per-link, per-RB, per-TTI channel gains: Winner II path loss, quasi-static
//! log-normal shadowing and EPA taps driven by Jakes oscillators.

mod fading;
mod pathloss;

pub use fading::{
    fading_gain, make_fading_process, FadingProcess, FadingProfile, SteeringTable, DEFAULT_OSCILLATORS,
};
pub use pathloss::{
    a1_los_db, a1_nlos_db, b1_los_db, b1_nlos_db, path_loss_db, shadowing_sigma_db, LinkClass, LinkGeometry,
    PathLoss, Propagation, MIN_DISTANCE_M,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    /// Loss of the building shell for links crossing it.
    pub wall_penetration_db: f64,
    /// Extra loss per metre travelled inside the building on shell-crossing links.
    pub indoor_loss_db_per_m: f64,
    /// Loss per internal wall on indoor NLOS links.
    pub internal_wall_loss_db: f64,
    /// Outdoor and shell-crossing links are LOS up to this distance.
    pub outdoor_los_radius_m: f64,
    /// Forces every link to LOS or NLOS.
    pub los_override: Option<Propagation>,
    pub shadowing: bool,
    /// Small-scale fading; `false` gives a unit response on every RB.
    pub fading: bool,
    pub oscillators: usize,
    pub noise_figure_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            wall_penetration_db: 14.0,
            indoor_loss_db_per_m: 0.5,
            internal_wall_loss_db: 5.0,
            outdoor_los_radius_m: 50.0,
            los_override: None,
            shadowing: true,
            fading: true,
            oscillators: DEFAULT_OSCILLATORS,
            noise_figure_db: crate::units::DEFAULT_NOISE_FIGURE_DB,
        }
    }
}

/// Linear per-RB power gains of one link in one TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGain {
    pub gains: Vec<f64>,
}

impl LinkGain {
    pub fn mean(&self) -> f64 {
        self.gains.iter().sum::<f64>() / self.gains.len() as f64
    }
}

/// `10^(-(PL + shadowing)/10) · |H_rb|²` for every RB.
pub fn compose_gain(path_loss_db: f64, shadowing_db: f64, response: &[Complex64]) -> LinkGain {
    let large_scale = 10f64.powf(-(path_loss_db + shadowing_db) / 10.0);
    LinkGain { gains: response.iter().map(|h| large_scale * h.norm_sqr()).collect() }
}

/// Composed gain of one link at `t_s`.
pub fn link_gain(
    geometry: &LinkGeometry,
    cfg: &ChannelConfig,
    fading: &mut FadingProcess,
    shadowing_db: f64,
    t_s: f64,
    n_rb: usize,
    rb_bandwidth_hz: f64,
) -> LinkGain {
    let pl = path_loss_db(geometry, cfg);
    let h = fading_gain(fading, t_s, n_rb, rb_bandwidth_hz);
    compose_gain(pl.db, shadowing_db, &h)
}
