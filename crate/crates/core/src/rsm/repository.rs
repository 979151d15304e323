use crate::ids::UeId;
use crate::scenario::{Operator, Point3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::layer::{CellStat, LayerKind, MapLayer, Visibility};
use super::policy::{effective_cap_dbm, PolicyRecord};
use super::trajectory::TrajectoryRecord;
use super::RsmError;
use crate::ids::BsId;

/// Who owns a repository or issues a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Operator(Operator),
    ThirdParty,
}

/// Placement of a repository in the hierarchy. Informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// Long-term data.
    #[default]
    Central,
    /// Short-term data near the base stations.
    Local,
}

/// One data-acquisition observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationSample {
    pub t_s: f64,
    pub position: Point3,
    pub rb: Option<usize>,
    pub value: f64,
    pub source: u32,
}

/// Result of a cell query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QueryResult {
    /// Layer does not exist or is not visible to the requester.
    Absent,
    /// Layer visible, cell never observed.
    Empty,
    Value(CellStat),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MergeOptions {
    /// Map the second layer onto the first layer's grid by nearest cell centre.
    pub resample: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub layer: MapLayer,
    pub from_a: usize,
    pub from_b: usize,
}

/// A radio service map repository: map layers split into private and shared
/// parts, the LSA policy store and the trajectory store.
#[derive(Debug, Clone, PartialEq)]
pub struct RsmRepository {
    pub owner: Party,
    pub tier: Tier,
    layers: BTreeMap<LayerKind, MapLayer>,
    policies: Vec<PolicyRecord>,
    trajectories: BTreeMap<UeId, TrajectoryRecord>,
    rejected_samples: u64,
}

impl RsmRepository {
    pub fn new(owner: Party) -> Self {
        Self {
            owner,
            tier: Tier::default(),
            layers: BTreeMap::new(),
            policies: Vec::new(),
            trajectories: BTreeMap::new(),
            rejected_samples: 0,
        }
    }

    /// Adds a layer; each kind exists at most once, so a layer is either private or shared.
    pub fn add_layer(&mut self, layer: MapLayer) -> Result<(), RsmError> {
        if self.layers.contains_key(&layer.kind) {
            return Err(RsmError::DuplicateLayer(layer.kind));
        }
        self.layers.insert(layer.kind, layer);
        Ok(())
    }

    pub fn layer(&self, kind: LayerKind) -> Option<&MapLayer> {
        self.layers.get(&kind)
    }

    pub fn layer_mut(&mut self, kind: LayerKind) -> Option<&mut MapLayer> {
        self.layers.get_mut(&kind)
    }

    /// Layers visible to `requester`.
    pub fn visible_layer(&self, kind: LayerKind, requester: Party) -> Option<&MapLayer> {
        self.layers
            .get(&kind)
            .filter(|l| requester == self.owner || l.visibility == Visibility::Shared)
    }

    pub fn rejected_samples(&self) -> u64 {
        self.rejected_samples
    }

    /// Data-acquisition entry point. Weight `w` is the EMA weight of the new sample.
    pub fn ingest_sample(&mut self, sample: &ObservationSample, kind: LayerKind, w: f64) -> Result<CellStat, RsmError> {
        let layer = self.layers.get_mut(&kind).ok_or(RsmError::UnknownLayer(kind))?;
        let res = layer.ingest(&sample.position, sample.rb, sample.value, w, sample.t_s);
        if res.is_err() {
            self.rejected_samples += 1;
        }
        res
    }

    pub fn query_cell(&self, kind: LayerKind, position: &Point3, rb: Option<usize>, requester: Party) -> QueryResult {
        let Some(layer) = self.visible_layer(kind, requester) else {
            return QueryResult::Absent;
        };
        match layer.get(position, rb) {
            Ok(c) if c.is_empty() => QueryResult::Empty,
            Ok(c) => QueryResult::Value(*c),
            Err(_) => QueryResult::Absent,
        }
    }

    pub fn add_policy(&mut self, record: PolicyRecord) {
        self.policies.push(record);
    }

    pub fn set_policies(&mut self, records: Vec<PolicyRecord>) {
        self.policies = records;
    }

    pub fn policies(&self) -> &[PolicyRecord] {
        &self.policies
    }

    /// BSs governed by at least one record.
    pub fn governed_bs(&self) -> Vec<BsId> {
        let mut ids: Vec<BsId> = self.policies.iter().map(|r| r.bs_id).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Records active at `t_s` (`t_start <= t < t_end`).
    pub fn active_policies(&self, t_s: f64) -> Vec<&PolicyRecord> {
        self.policies.iter().filter(|r| r.is_active(t_s)).collect()
    }

    /// Minimum cap over active records covering `(bs, rb)`.
    pub fn effective_cap_dbm(&self, bs: BsId, rb: usize, t_s: f64) -> Option<f64> {
        effective_cap_dbm(&self.policies, bs, rb, t_s)
    }

    pub fn store_trajectory(&mut self, record: TrajectoryRecord) -> Result<(), RsmError> {
        record.validate()?;
        self.trajectories.insert(record.subject, record);
        Ok(())
    }

    pub fn trajectory(&self, subject: UeId) -> Option<&TrajectoryRecord> {
        self.trajectories.get(&subject)
    }
}

/// Cell-wise freshest-timestamp-wins merge of the shared `kind` layers of two repositories.
pub fn merge_shared(a: &RsmRepository, b: &RsmRepository, kind: LayerKind, opts: MergeOptions) -> Result<MergeOutcome, RsmError> {
    let la = shared_layer(a, kind)?;
    let lb = shared_layer(b, kind)?;
    if la.n_rb != lb.n_rb {
        return Err(RsmError::IncongruentGrids);
    }
    let b_cells: Vec<CellStat> = if la.grid == lb.grid {
        lb.cells().to_vec()
    } else if opts.resample {
        resample_onto(lb, la)
    } else {
        return Err(RsmError::IncongruentGrids);
    };

    let mut merged = la.clone();
    let (mut from_a, mut from_b) = (0, 0);
    for (dst, cb) in merged.cells_mut().iter_mut().zip(&b_cells) {
        let take_b = !cb.is_empty() && (dst.is_empty() || cb.last_t_s > dst.last_t_s);
        if take_b {
            *dst = *cb;
            from_b += 1;
        } else if !dst.is_empty() {
            from_a += 1;
        }
    }
    Ok(MergeOutcome { layer: merged, from_a, from_b })
}

fn shared_layer(repo: &RsmRepository, kind: LayerKind) -> Result<&MapLayer, RsmError> {
    let l = repo.layer(kind).ok_or(RsmError::UnknownLayer(kind))?;
    if l.visibility != Visibility::Shared {
        return Err(RsmError::NotShared(kind));
    }
    Ok(l)
}

/// Nearest-cell resampling of `src` onto the grid of `dst`. Where several
/// source cells land on one target cell the freshest wins.
fn resample_onto(src: &MapLayer, dst: &MapLayer) -> Vec<CellStat> {
    let dim = dst.rb_dim();
    let mut out = vec![CellStat::default(); dst.payload_len()];
    for cell in 0..src.grid.n_cells() {
        let mut center = src.grid.cell_center(cell);
        center.z += 0.5 * src.grid.floor_height_m;
        let Some(target) = dst.grid.cell_of(&center) else { continue };
        for rb in 0..dim {
            let c = src.cells()[cell * dim + rb];
            let slot = &mut out[target * dim + rb];
            if !c.is_empty() && (slot.is_empty() || c.last_t_s > slot.last_t_s) {
                *slot = c;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::layer::GridSpec;
    use super::*;

    fn grid() -> GridSpec {
        GridSpec { origin: [0.0, 0.0], raster_m: 1.0, nx: 4, ny: 3, floors: 1, z0: 0.0, floor_height_m: 3.0 }
    }

    fn repo(owner: Operator) -> RsmRepository {
        let mut r = RsmRepository::new(Party::Operator(owner));
        r.add_layer(MapLayer::new(LayerKind::RadioData, grid(), None, Visibility::Shared).unwrap()).unwrap();
        r.add_layer(MapLayer::new(LayerKind::TrafficDensity, grid(), None, Visibility::Private).unwrap()).unwrap();
        r
    }

    fn sample(x: f64, y: f64, v: f64, t: f64) -> ObservationSample {
        ObservationSample { t_s: t, position: Point3::new(x, y, 1.0), rb: None, value: v, source: 0 }
    }

    #[test]
    fn privacy_of_layers() {
        let mut r = repo(Operator::Mbb);
        r.ingest_sample(&sample(1.5, 1.5, 3.0, 0.0), LayerKind::TrafficDensity, 0.1).unwrap();
        let p = Point3::new(1.5, 1.5, 1.0);
        let owner = Party::Operator(Operator::Mbb);
        assert!(matches!(r.query_cell(LayerKind::TrafficDensity, &p, None, owner), QueryResult::Value(_)));
        assert_eq!(r.query_cell(LayerKind::TrafficDensity, &p, None, Party::Operator(Operator::Iot)), QueryResult::Absent);
        assert_eq!(r.query_cell(LayerKind::TrafficDensity, &p, None, Party::ThirdParty), QueryResult::Absent);
        assert_eq!(r.query_cell(LayerKind::RadioData, &p, None, Party::ThirdParty), QueryResult::Empty);
        assert_eq!(r.query_cell(LayerKind::History, &p, None, owner), QueryResult::Absent);
    }

    #[test]
    fn rejected_samples_counted() {
        let mut r = repo(Operator::Mbb);
        assert!(r.ingest_sample(&sample(10.0, 1.0, 1.0, 0.0), LayerKind::RadioData, 0.1).is_err());
        assert_eq!(r.rejected_samples(), 1);
        assert_eq!(r.layer(LayerKind::RadioData).unwrap().observed_slots(), 0);
    }

    #[test]
    fn duplicate_layer_refused() {
        let mut r = repo(Operator::Mbb);
        let again = MapLayer::new(LayerKind::RadioData, grid(), None, Visibility::Private).unwrap();
        assert!(matches!(r.add_layer(again), Err(RsmError::DuplicateLayer(_))));
    }

    #[test]
    fn merge_rules() {
        let mut a = repo(Operator::Mbb);
        let mut b = repo(Operator::Iot);
        let k = LayerKind::RadioData;
        a.ingest_sample(&sample(0.5, 0.5, 1.0, 1.0), k, 0.1).unwrap();
        a.ingest_sample(&sample(1.5, 0.5, 2.0, 1.0), k, 0.1).unwrap();

        // b empty: identity
        let m = merge_shared(&a, &b, k, MergeOptions::default()).unwrap();
        assert_eq!(&m.layer, a.layer(k).unwrap());
        assert_eq!((m.from_a, m.from_b), (2, 0));

        b.ingest_sample(&sample(2.5, 0.5, 5.0, 0.5), k, 0.1).unwrap();
        b.ingest_sample(&sample(1.5, 0.5, 9.0, 2.0), k, 0.1).unwrap();
        let m = merge_shared(&a, &b, k, MergeOptions::default()).unwrap();
        assert_eq!((m.from_a, m.from_b), (1, 2));
        assert_eq!(m.layer.get(&Point3::new(1.5, 0.5, 1.0), None).unwrap().mean, 9.0);
        assert_eq!(m.layer.get(&Point3::new(2.5, 0.5, 1.0), None).unwrap().mean, 5.0);
        assert_eq!(m.layer.get(&Point3::new(0.5, 0.5, 1.0), None).unwrap().mean, 1.0);

        // idempotent
        let same = merge_shared(&a, &a, k, MergeOptions::default()).unwrap();
        assert_eq!(&same.layer, a.layer(k).unwrap());
    }

    #[test]
    fn merge_private_or_incongruent_fails() {
        let a = repo(Operator::Mbb);
        let b = repo(Operator::Iot);
        assert!(matches!(
            merge_shared(&a, &b, LayerKind::TrafficDensity, MergeOptions::default()),
            Err(RsmError::NotShared(_))
        ));
        let mut c = RsmRepository::new(Party::ThirdParty);
        let g = GridSpec { raster_m: 2.0, nx: 2, ny: 2, ..grid() };
        c.add_layer(MapLayer::new(LayerKind::RadioData, g, None, Visibility::Shared).unwrap()).unwrap();
        c.ingest_sample(&sample(2.5, 0.5, 4.0, 3.0), LayerKind::RadioData, 0.1).unwrap();
        assert!(matches!(
            merge_shared(&a, &c, LayerKind::RadioData, MergeOptions::default()),
            Err(RsmError::IncongruentGrids)
        ));
        let m = merge_shared(&a, &c, LayerKind::RadioData, MergeOptions { resample: true }).unwrap();
        assert_eq!(m.from_b, 1);
        // coarse cell (1, 0) has its centre at (3, 1)
        assert_eq!(m.layer.get(&Point3::new(3.5, 1.5, 1.0), None).unwrap().mean, 4.0);
    }
}
