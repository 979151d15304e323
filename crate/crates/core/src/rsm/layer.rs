use crate::scenario::Point3;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::RsmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    RadioData,
    Performance,
    Mobility,
    TrafficDensity,
    UserDensity,
    Trajectory,
    History,
}

impl LayerKind {
    /// Sharing default: radio data is published, everything describing users stays private.
    pub fn default_visibility(self) -> Visibility {
        match self {
            LayerKind::RadioData => Visibility::Shared,
            _ => Visibility::Private,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Private,
    Shared,
}

/// Regular raster over one or more floors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Ground-plane corner `[x, y]` of cell `(0, 0)`.
    pub origin: [f64; 2],
    pub raster_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub floors: usize,
    /// Base height of floor 0 and floor pitch, used to map `z` to a floor.
    pub z0: f64,
    pub floor_height_m: f64,
}

impl GridSpec {
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny * self.floors
    }

    pub fn is_valid(&self) -> bool {
        self.raster_m > 0.0 && self.nx > 0 && self.ny > 0 && self.floors > 0 && self.floor_height_m > 0.0
    }

    /// Flat cell index of a position, `None` outside the grid.
    pub fn cell_of(&self, p: &Point3) -> Option<usize> {
        let fx = (p.x - self.origin[0]) / self.raster_m;
        let fy = (p.y - self.origin[1]) / self.raster_m;
        let ff = (p.z - self.z0) / self.floor_height_m;
        if !(fx >= 0.0 && fy >= 0.0 && ff >= 0.0) {
            return None;
        }
        let (ix, iy, fl) = (fx.floor() as usize, fy.floor() as usize, ff.floor() as usize);
        (ix < self.nx && iy < self.ny && fl < self.floors).then(|| (fl * self.ny + iy) * self.nx + ix)
    }

    /// Centre of a flat cell index; `z` is the floor base.
    pub fn cell_center(&self, cell: usize) -> Point3 {
        let ix = cell % self.nx;
        let iy = (cell / self.nx) % self.ny;
        let fl = cell / (self.nx * self.ny);
        Point3::new(
            self.origin[0] + (ix as f64 + 0.5) * self.raster_m,
            self.origin[1] + (iy as f64 + 0.5) * self.raster_m,
            self.z0 + fl as f64 * self.floor_height_m,
        )
    }

    pub fn floor_of_cell(&self, cell: usize) -> usize {
        cell / (self.nx * self.ny)
    }
}

/// Exponentially weighted first and second moments of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CellStat {
    pub mean: f64,
    pub second_moment: f64,
    pub count: u64,
    pub last_t_s: f64,
}

impl CellStat {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn std(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0).sqrt()
    }

    /// EMA update with weight `w` on the new value; the first sample initialises.
    pub fn update(&mut self, value: f64, w: f64, t_s: f64) {
        if self.count == 0 {
            self.mean = value;
            self.second_moment = value * value;
        } else {
            self.mean = (1.0 - w) * self.mean + w * value;
            self.second_moment = (1.0 - w) * self.second_moment + w * value * value;
        }
        self.count += 1;
        self.last_t_s = t_s;
    }
}

/// A geolocated grid of per-cell statistics, optionally with a per-RB dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapLayer {
    pub kind: LayerKind,
    pub grid: GridSpec,
    pub n_rb: Option<usize>,
    pub visibility: Visibility,
    cells: Vec<CellStat>,
}

impl MapLayer {
    pub fn new(kind: LayerKind, grid: GridSpec, n_rb: Option<usize>, visibility: Visibility) -> Result<Self, RsmError> {
        if !grid.is_valid() || n_rb == Some(0) {
            return Err(RsmError::InvalidGrid);
        }
        let len = grid.n_cells() * n_rb.unwrap_or(1);
        Ok(Self { kind, grid, n_rb, visibility, cells: vec![CellStat::default(); len] })
    }

    pub fn rb_dim(&self) -> usize {
        self.n_rb.unwrap_or(1)
    }

    /// Number of stored payload entries (cells × RBs).
    pub fn payload_len(&self) -> usize {
        self.cells.len()
    }

    fn slot(&self, cell: usize, rb: Option<usize>) -> Result<usize, RsmError> {
        match (self.n_rb, rb) {
            (Some(n), Some(rb)) if rb < n => Ok(cell * n + rb),
            (None, None) => Ok(cell),
            _ => Err(RsmError::RbDimension),
        }
    }

    pub fn slot_at(&self, p: &Point3, rb: Option<usize>) -> Result<usize, RsmError> {
        let cell = self.grid.cell_of(p).ok_or(RsmError::OutOfGrid)?;
        self.slot(cell, rb)
    }

    pub fn get(&self, p: &Point3, rb: Option<usize>) -> Result<&CellStat, RsmError> {
        let s = self.slot_at(p, rb)?;
        Ok(&self.cells[s])
    }

    pub fn get_cell(&self, cell: usize, rb: Option<usize>) -> Result<&CellStat, RsmError> {
        let s = self.slot(cell, rb)?;
        Ok(&self.cells[s])
    }

    /// Folds a sample into its cell. Samples older than the cell's last update are rejected.
    pub fn ingest(&mut self, p: &Point3, rb: Option<usize>, value: f64, w: f64, t_s: f64) -> Result<CellStat, RsmError> {
        let s = self.slot_at(p, rb)?;
        let cell = &mut self.cells[s];
        if !cell.is_empty() && t_s < cell.last_t_s {
            return Err(RsmError::OutOfOrder { t_s, last_t_s: cell.last_t_s });
        }
        cell.update(value, w, t_s);
        Ok(*cell)
    }

    pub fn cells(&self) -> &[CellStat] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [CellStat] {
        &mut self.cells
    }

    pub fn observed_slots(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_empty()).count()
    }

    /// Dense storage size in bits when every slot holds a quantised mean and variance.
    pub fn storage_bits(&self, bits_mean: u64, bits_var: u64) -> u64 {
        self.cells.len() as u64 * (bits_mean + bits_var)
    }

    pub fn same_geometry(&self, other: &MapLayer) -> bool {
        self.grid == other.grid && self.n_rb == other.n_rb
    }

    /// Writes observed slots as CSV rows `x,y,floor,rb,mean,std,t`.
    pub fn export_csv<W: Write>(&self, w: W) -> Result<(), RsmError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y", "floor", "rb", "mean", "std", "t"])?;
        let dim = self.rb_dim();
        for (slot, c) in self.cells.iter().enumerate() {
            if c.is_empty() {
                continue;
            }
            let cell = slot / dim;
            let center = self.grid.cell_center(cell);
            let rb = if self.n_rb.is_some() { (slot % dim).to_string() } else { String::new() };
            wr.write_record([
                center.x.to_string(),
                center.y.to_string(),
                self.grid.floor_of_cell(cell).to_string(),
                rb,
                c.mean.to_string(),
                c.std().to_string(),
                c.last_t_s.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn grid() -> GridSpec {
        GridSpec { origin: [0.0, 0.0], raster_m: 1.0, nx: 40, ny: 40, floors: 2, z0: 0.0, floor_height_m: 3.0 }
    }

    #[test]
    fn first_sample_initialises() {
        let mut l = MapLayer::new(LayerKind::RadioData, grid(), Some(4), Visibility::Shared).unwrap();
        let c = l.ingest(&Point3::new(3.2, 4.7, 1.5), Some(2), 7.0, 0.1, 0.0).unwrap();
        assert_eq!(c.mean, 7.0);
        assert_eq!(c.std(), 0.0);
        assert_eq!(l.observed_slots(), 1);
    }

    #[test]
    fn outside_grid_rejected() {
        let mut l = MapLayer::new(LayerKind::RadioData, grid(), None, Visibility::Shared).unwrap();
        let before = l.clone();
        assert!(matches!(l.ingest(&Point3::new(-0.1, 3.0, 1.0), None, 1.0, 0.1, 0.0), Err(RsmError::OutOfGrid)));
        assert!(matches!(l.ingest(&Point3::new(3.0, 3.0, 6.5), None, 1.0, 0.1, 0.0), Err(RsmError::OutOfGrid)));
        assert_eq!(l, before);
    }

    #[test]
    fn out_of_order_rejected() {
        let mut l = MapLayer::new(LayerKind::RadioData, grid(), None, Visibility::Shared).unwrap();
        let p = Point3::new(1.0, 1.0, 1.0);
        l.ingest(&p, None, 1.0, 0.1, 2.0).unwrap();
        assert!(matches!(l.ingest(&p, None, 1.0, 0.1, 1.0), Err(RsmError::OutOfOrder { .. })));
        assert!(l.ingest(&p, None, 1.0, 0.1, 2.0).is_ok());
    }

    #[test]
    fn alternating_stream_ema_limit() {
        // closed-form fixed point of the two-step EMA recursion for {4, 6}, w = 0.1
        let w: f64 = 0.1;
        let a = 1.0 - w;
        let mean_after_4 = (a * w * 6.0 + w * 4.0) / (1.0 - a * a);
        let m2_after_4 = (a * w * 36.0 + w * 16.0) / (1.0 - a * a);
        let std_after_4 = (m2_after_4 - mean_after_4 * mean_after_4).sqrt();

        let mut c = CellStat::default();
        for k in 0..2000 {
            c.update(if k % 2 == 0 { 6.0 } else { 4.0 }, w, k as f64);
        }
        assert!((c.mean - mean_after_4).abs() < 1e-9);
        assert!((c.std() - std_after_4).abs() < 1e-9);
        assert!((c.mean - 5.0).abs() <= 0.11);
        assert!((c.std() - 1.0).abs() <= 0.05);
    }

    #[test]
    fn storage_size_dense() {
        let g = GridSpec { floors: 1, ..grid() };
        let l = MapLayer::new(LayerKind::TrafficDensity, g, Some(100), Visibility::Private).unwrap();
        assert_eq!(l.storage_bits(5, 8), 1600 * 100 * 13);
    }

    #[test]
    fn csv_export_lists_observed() {
        let mut l = MapLayer::new(LayerKind::RadioData, grid(), Some(2), Visibility::Shared).unwrap();
        l.ingest(&Point3::new(0.5, 0.5, 0.5), Some(1), 3.0, 0.5, 0.25).unwrap();
        let mut buf = Vec::new();
        l.export_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "x,y,floor,rb,mean,std,t\n0.5,0.5,0,1,3,0,0.25\n");
    }
}
