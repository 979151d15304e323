//! Worst-case storage and signalling load of the RSM for the three use cases.
//!
//! Everything is computed in bits and bits/s. Bytes appear only in
//! [`format_load_report`].

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// Size of one update, update rate and derived totals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadEstimate {
    pub bits_per_update: f64,
    pub updates_per_s: f64,
    pub throughput_bits_per_s: f64,
    pub per_user_bits_per_s: Option<f64>,
    pub per_rb_bits: Option<f64>,
    pub total_storage_bits: Option<f64>,
}

impl LoadEstimate {
    fn stream(bits_per_update: f64, updates_per_s: f64) -> Self {
        Self {
            bits_per_update,
            updates_per_s,
            throughput_bits_per_s: bits_per_update * updates_per_s,
            per_user_bits_per_s: None,
            per_rb_bits: None,
            total_storage_bits: None,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64, LoadError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(LoadError::NonPositive(name))
    }
}

/// LSA policy feed: a power level and a spectrum mask per BS and RB, refreshed
/// every `update_interval_s`.
pub fn estimate_lsa_load(
    n_bs: usize,
    n_rb: usize,
    bits_power: u32,
    bits_mask: u32,
    update_interval_s: f64,
) -> Result<LoadEstimate, LoadError> {
    let n_bs = positive("n_bs", n_bs as f64)?;
    let n_rb = positive("n_rb", n_rb as f64)?;
    let per_entry = positive("bits_power + bits_mask", (bits_power + bits_mask) as f64)?;
    let interval = positive("update_interval_s", update_interval_s)?;
    Ok(LoadEstimate::stream(n_bs * n_rb * per_entry, 1.0 / interval))
}

/// CQI feedback: `bits_per_rb` for every RB, `reports_per_s` times per second,
/// from one user per BS.
pub fn estimate_cqi_load(n_rb: usize, bits_per_rb: u32, reports_per_s: f64, n_bs: usize) -> Result<LoadEstimate, LoadError> {
    let n_rb = positive("n_rb", n_rb as f64)?;
    let bits = positive("bits_per_rb", bits_per_rb as f64)?;
    let rate = positive("reports_per_s", reports_per_s)?;
    let n_bs = positive("n_bs", n_bs as f64)?;
    let per_user_report = n_rb * bits;
    let mut est = LoadEstimate::stream(per_user_report * n_bs, rate);
    est.per_user_bits_per_s = Some(per_user_report * rate);
    Ok(est)
}

/// Traffic map storage: a quantised mean MCS and variance per cell and RB.
/// One update is a full snapshot; the map has no prescribed refresh rate, so
/// `updates_per_s` is zero.
pub fn estimate_traffic_map_load(n_cells: usize, bits_mcs: u32, bits_var: u32, n_rb: usize) -> Result<LoadEstimate, LoadError> {
    let n_cells = positive("n_cells", n_cells as f64)?;
    let per_slot = positive("bits_mcs + bits_var", (bits_mcs + bits_var) as f64)?;
    let n_rb = positive("n_rb", n_rb as f64)?;
    let per_rb = n_cells * per_slot;
    let total = per_rb * n_rb;
    let mut est = LoadEstimate::stream(total, 0.0);
    est.per_rb_bits = Some(per_rb);
    est.total_storage_bits = Some(total);
    Ok(est)
}

/// Inputs of the three-row load table.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadParams {
    pub n_bs: usize,
    pub n_rb: usize,
    pub bits_power: u32,
    pub bits_mask: u32,
    pub lsa_update_interval_s: f64,
    pub cqi_bits_per_rb: u32,
    pub cqi_reports_per_s: f64,
    pub area_x_m: f64,
    pub area_y_m: f64,
    pub raster_m: f64,
    pub bits_mcs: u32,
    pub bits_var: u32,
    /// A published LSA rate in MB/s to cross-check against the computed bit rate.
    pub quoted_lsa_mbyte_per_s: Option<f64>,
}

impl Default for LoadParams {
    fn default() -> Self {
        Self {
            n_bs: 12,
            n_rb: 100,
            bits_power: 8,
            bits_mask: 40,
            lsa_update_interval_s: 1e-3,
            cqi_bits_per_rb: 5,
            cqi_reports_per_s: 1000.0,
            area_x_m: 40.0,
            area_y_m: 40.0,
            raster_m: 1.0,
            bits_mcs: 5,
            bits_var: 8,
            quoted_lsa_mbyte_per_s: Some(57.0),
        }
    }
}

impl LoadParams {
    pub fn n_cells(&self) -> usize {
        let nx = (self.area_x_m / self.raster_m).round() as usize;
        let ny = (self.area_y_m / self.raster_m).round() as usize;
        nx * ny
    }
}

/// The three estimates for `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadTable {
    pub lsa: LoadEstimate,
    pub cqi: LoadEstimate,
    pub traffic_map: LoadEstimate,
    /// Set when a quoted MB/s figure matches the computed Mbit/s instead.
    pub unit_mismatch: Option<UnitMismatch>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitMismatch {
    pub quoted_mbyte_per_s: f64,
    pub computed_mbit_per_s: f64,
    pub computed_mbyte_per_s: f64,
}

/// A quoted MB/s value "mixes units" when it is within 5% of the computed
/// Mbit/s and off from the computed MB/s by more than that.
pub fn check_unit_mismatch(quoted_mbyte_per_s: f64, computed_bits_per_s: f64) -> Option<UnitMismatch> {
    let mbit = computed_bits_per_s / 1e6;
    let mbyte = mbit / 8.0;
    let near = |a: f64, b: f64| (a - b).abs() <= 0.05 * b.abs();
    (near(quoted_mbyte_per_s, mbit) && !near(quoted_mbyte_per_s, mbyte)).then_some(UnitMismatch {
        quoted_mbyte_per_s,
        computed_mbit_per_s: mbit,
        computed_mbyte_per_s: mbyte,
    })
}

pub fn load_table(p: &LoadParams) -> Result<LoadTable, LoadError> {
    let lsa = estimate_lsa_load(p.n_bs, p.n_rb, p.bits_power, p.bits_mask, p.lsa_update_interval_s)?;
    let cqi = estimate_cqi_load(p.n_rb, p.cqi_bits_per_rb, p.cqi_reports_per_s, p.n_bs)?;
    positive("raster_m", p.raster_m)?;
    let traffic_map = estimate_traffic_map_load(p.n_cells(), p.bits_mcs, p.bits_var, p.n_rb)?;
    let unit_mismatch = p.quoted_lsa_mbyte_per_s.and_then(|q| check_unit_mismatch(q, lsa.throughput_bits_per_s));
    Ok(LoadTable { lsa, cqi, traffic_map, unit_mismatch })
}

/// Human-readable table with both bit and byte presentations.
pub fn format_load_report(p: &LoadParams) -> Result<String, LoadError> {
    let t = load_table(p)?;
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>18} {:>16} {:>18} {:>14}", "use case", "bits/update", "updates/s", "throughput", "bytes");
    let _ = writeln!(
        s,
        "{:<12} {:>18.0} {:>16.0} {:>13.3} Mb/s {:>9.3} MB/s",
        "A (LSA)",
        t.lsa.bits_per_update,
        t.lsa.updates_per_s,
        t.lsa.throughput_bits_per_s / 1e6,
        t.lsa.throughput_bits_per_s / 8e6
    );
    let _ = writeln!(
        s,
        "{:<12} {:>18.0} {:>16.0} {:>13.3} Mb/s {:>9.3} MB/s",
        "B (CQI)",
        t.cqi.bits_per_update,
        t.cqi.updates_per_s,
        t.cqi.throughput_bits_per_s / 1e6,
        t.cqi.throughput_bits_per_s / 8e6
    );
    let total = t.traffic_map.total_storage_bits.unwrap_or(0.0);
    let _ = writeln!(
        s,
        "{:<12} {:>18.0} {:>16} {:>16.3} Mb {:>11.3} MB",
        "C (traffic)",
        t.traffic_map.per_rb_bits.unwrap_or(0.0),
        "-",
        total / 1e6,
        total / 8e6
    );
    let _ = writeln!(
        s,
        "B per user: {:.3} Mb/s; C: {} cells at {} m raster, {:.1} kb per RB",
        t.cqi.per_user_bits_per_s.unwrap_or(0.0) / 1e6,
        p.n_cells(),
        p.raster_m,
        t.traffic_map.per_rb_bits.unwrap_or(0.0) / 1e3
    );
    if let Some(m) = t.unit_mismatch {
        let _ = writeln!(
            s,
            "warning: quoted LSA rate {} MB/s matches {:.1} Mbit/s read as bytes; the byte rate is {:.1} MB/s",
            m.quoted_mbyte_per_s, m.computed_mbit_per_s, m.computed_mbyte_per_s
        );
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsm::{GridSpec, LayerKind, MapLayer, Visibility};

    #[test]
    fn lsa_reference() {
        let e = estimate_lsa_load(12, 100, 8, 40, 1e-3).unwrap();
        assert_eq!(e.bits_per_update, 57_600.0);
        assert!((e.throughput_bits_per_s - 57.6e6).abs() < 1e-3);
        let unit = estimate_lsa_load(1, 1, 8, 40, 1.0).unwrap();
        assert_eq!(unit.throughput_bits_per_s, 48.0);
        let doubled = estimate_lsa_load(12, 200, 8, 40, 1e-3).unwrap();
        assert!((doubled.throughput_bits_per_s - 2.0 * e.throughput_bits_per_s).abs() < 1e-3);
    }

    #[test]
    fn cqi_reference() {
        let e = estimate_cqi_load(100, 5, 1000.0, 12).unwrap();
        assert_eq!(e.per_user_bits_per_s, Some(500_000.0));
        assert_eq!(e.throughput_bits_per_s, 6_000_000.0);
        assert_eq!(estimate_cqi_load(1, 5, 1.0, 1).unwrap().throughput_bits_per_s, 5.0);
        let wide = estimate_cqi_load(200, 5, 1000.0, 12).unwrap();
        assert_eq!(wide.per_user_bits_per_s, Some(1_000_000.0));
    }

    #[test]
    fn traffic_map_reference() {
        let e = estimate_traffic_map_load(1600, 5, 8, 100).unwrap();
        assert_eq!(e.per_rb_bits, Some(20_800.0));
        assert_eq!(e.total_storage_bits, Some(2_080_000.0));
        assert_eq!(estimate_traffic_map_load(1, 5, 8, 1).unwrap().total_storage_bits, Some(13.0));
        let fine = estimate_traffic_map_load(4 * 1600, 5, 8, 100).unwrap();
        assert_eq!(fine.total_storage_bits, Some(4.0 * 2_080_000.0));
    }

    #[test]
    fn matches_dense_layer_size() {
        let grid = GridSpec { origin: [0.0, 0.0], raster_m: 1.0, nx: 40, ny: 40, floors: 1, z0: 0.0, floor_height_m: 3.0 };
        let layer = MapLayer::new(LayerKind::TrafficDensity, grid, Some(100), Visibility::Private).unwrap();
        let e = estimate_traffic_map_load(1600, 5, 8, 100).unwrap();
        assert_eq!(layer.storage_bits(5, 8) as f64, e.total_storage_bits.unwrap());
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(estimate_lsa_load(0, 100, 8, 40, 1e-3).is_err());
        assert!(estimate_cqi_load(100, 5, 0.0, 12).is_err());
        assert!(estimate_traffic_map_load(1600, 5, 8, 0).is_err());
    }

    #[test]
    fn report_flags_units() {
        let text = format_load_report(&LoadParams::default()).unwrap();
        assert!(text.contains("57.600 Mb/s"));
        assert!(text.contains("7.200 MB/s"));
        assert!(text.contains("warning: quoted LSA rate 57 MB/s"));
        let t = load_table(&LoadParams::default()).unwrap();
        assert!(t.unit_mismatch.is_some());
        let decimetre = LoadParams { raster_m: 0.1, ..LoadParams::default() };
        assert_eq!(decimetre.n_cells(), 160_000);
    }

    #[test]
    fn no_flag_when_units_agree() {
        assert!(check_unit_mismatch(7.2, 57.6e6).is_none());
    }
}
