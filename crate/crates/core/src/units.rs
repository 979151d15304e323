//! Unit conversions and radio constants.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

/// Scheduling period.
pub const TTI_S: f64 = 1e-3;

/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Default receiver noise figure.
pub const DEFAULT_NOISE_FIGURE_DB: f64 = 9.0;

#[inline]
pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[inline]
pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Noise power over `bandwidth_hz` for the given noise figure, in dBm.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Doppler shift for a terminal moving at `speed_mps` on `carrier_hz`.
pub fn doppler_hz(speed_mps: f64, carrier_hz: f64) -> f64 {
    speed_mps * carrier_hz / SPEED_OF_LIGHT_MPS
}

/// Simulation time of TTI number `ms`. Division keeps boundaries such as 2.0 s exact.
#[inline]
pub fn ms_to_s(ms: u64) -> f64 {
    ms as f64 / 1000.0
}
