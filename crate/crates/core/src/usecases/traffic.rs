use std::collections::BTreeSet;

use crate::ids::{BsId, UeId};
use crate::link::McsTable;
use crate::rsm::{GridSpec, LayerKind, MapLayer, RsmError, Visibility};
use crate::scenario::{Building, BsKind, Point3, UserEquipment};
use crate::scheduler::TtiReport;
use crate::sim::{FixedGrant, TtiControl, World};
use crate::units::ms_to_s;

pub const DEFAULT_EMA_WEIGHT: f64 = 0.1;
pub const DEFAULT_SIGMA_MAX: f64 = 0.5;
/// Largest share of a BS's available RBs that static grants may take.
pub const MAX_STATIC_SHARE: f64 = 0.75;

/// Per-cell, per-RB statistics of the MCS index the scheduler assigned there.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMap {
    pub layer: MapLayer,
    first_sample_s: Option<f64>,
}

/// One scheduler decision located in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficSample {
    pub t_s: f64,
    pub position: Point3,
    pub rb: usize,
    pub mcs: u8,
}

/// Statistics of one map cell averaged over the RBs observed there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub mean: f64,
    pub std: f64,
    pub observed_rbs: usize,
}

impl TrafficMap {
    pub fn new(grid: GridSpec, n_rb: usize) -> Result<Self, RsmError> {
        let layer = MapLayer::new(LayerKind::TrafficDensity, grid, Some(n_rb), LayerKind::TrafficDensity.default_visibility())?;
        Ok(Self { layer, first_sample_s: None })
    }

    /// Map covering the building footprint on every floor.
    pub fn for_building(building: &Building, raster_m: f64, n_rb: usize) -> Result<Self, RsmError> {
        let grid = GridSpec {
            origin: [building.origin.x, building.origin.y],
            raster_m,
            nx: (building.width_m / raster_m).round() as usize,
            ny: (building.depth_m / raster_m).round() as usize,
            floors: building.floors as usize,
            z0: building.origin.z,
            floor_height_m: building.floor_height_m(),
        };
        Self::new(grid, n_rb)
    }

    pub fn visibility(&self) -> Visibility {
        self.layer.visibility
    }

    /// Time span covered by the ingested samples up to `t_s`.
    pub fn observed_for_s(&self, t_s: f64) -> f64 {
        self.first_sample_s.map_or(0.0, |t0| t_s - t0)
    }

    /// RB-averaged mean and std of the cell containing `p`; `None` outside the
    /// grid or where nothing was ever scheduled.
    pub fn cell_summary(&self, p: &Point3) -> Option<CellSummary> {
        let cell = self.layer.grid.cell_of(p)?;
        let (mut mean, mut std, mut n) = (0.0, 0.0, 0);
        for rb in 0..self.layer.rb_dim() {
            let c = self.layer.get_cell(cell, Some(rb)).ok()?;
            if !c.is_empty() {
                mean += c.mean;
                std += c.std();
                n += 1;
            }
        }
        (n > 0).then(|| CellSummary { mean: mean / n as f64, std: std / n as f64, observed_rbs: n })
    }

    /// Margin-protected MCS for a fixed grant: `floor(mean − std)` of the
    /// (cell, RB) slot, `None` when not updated since `since_s` or below the
    /// lowest index.
    pub fn planned_mcs(&self, p: &Point3, rb: usize, since_s: f64) -> Option<u8> {
        let c = self.layer.get(p, Some(rb)).ok()?;
        if c.is_empty() || c.last_t_s < since_s {
            return None;
        }
        let m = (c.mean - c.std()).floor();
        (m >= 1.0).then_some(m as u8)
    }
}

/// EMA update of the sample's (cell, RB) slot with weight `w`.
pub fn update_traffic_map(map: &mut TrafficMap, sample: &TrafficSample, w: f64) -> Result<(), RsmError> {
    map.layer.ingest(&sample.position, Some(sample.rb), sample.mcs as f64, w, sample.t_s)?;
    map.first_sample_s.get_or_insert(sample.t_s);
    Ok(())
}

/// Feeds every per-RB decision of a TTI into the map at the UE's position.
/// Decisions outside the map are skipped. Returns the number ingested.
pub fn ingest_report(map: &mut TrafficMap, report: &TtiReport, users: &[UserEquipment], w: f64) -> usize {
    let t_s = ms_to_s(report.t_ms);
    let mut n = 0;
    for d in &report.decisions {
        let sample = TrafficSample { t_s, position: users[d.ue.index()].position, rb: d.rb as usize, mcs: d.mcs };
        if update_traffic_map(map, &sample, w).is_ok() {
            n += 1;
        }
    }
    n
}

/// A UE considered for a fixed grant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticCandidate {
    pub ue: UeId,
    pub bs: BsId,
    pub position: Point3,
    /// Bits per TTI the grant must deliver.
    pub demand_bits: u64,
}

/// RBs of one BS still free for static grants, and how many more it may give.
#[derive(Debug, Clone, PartialEq)]
pub struct RbPool {
    pub bs: BsId,
    pub free: Vec<u16>,
    pub budget: usize,
}

/// Selects static UEs and their grants.
///
/// Candidates whose cell has mean > 0 and std ≤ `sigma_max` are taken in
/// ascending std order (ties by UE id). Each takes its best free RBs by
/// planned MCS until `bits(min MCS, k) ≥ demand`; a candidate whose demand
/// the remaining pool cannot meet is skipped. Only RB slots updated since
/// `since_s` are planned on.
#[allow(clippy::too_many_arguments)]
pub fn classify_static(
    map: &TrafficMap,
    candidates: &[StaticCandidate],
    sigma_max: f64,
    pools: &mut [RbPool],
    table: &McsTable,
    rb_bandwidth_hz: f64,
    tti_s: f64,
    since_s: f64,
) -> Vec<FixedGrant> {
    let mut eligible: Vec<(f64, &StaticCandidate)> = candidates
        .iter()
        .filter(|c| c.demand_bits > 0)
        .filter_map(|c| map.cell_summary(&c.position).map(|s| (s, c)))
        .filter(|(s, _)| s.mean > 0.0 && s.std <= sigma_max)
        .map(|(s, c)| (s.std, c))
        .collect();
    eligible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.ue.cmp(&b.1.ue)));

    let mut grants = Vec::new();
    for (_, c) in eligible {
        let Some(pool) = pools.iter_mut().find(|p| p.bs == c.bs) else { continue };
        let mut options: Vec<(u8, u16)> =
            pool.free.iter().filter_map(|&rb| map.planned_mcs(&c.position, rb as usize, since_s).map(|m| (m, rb))).collect();
        options.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut chosen = Vec::new();
        let mut mcs = u8::MAX;
        let mut met = false;
        for &(m, rb) in options.iter().take(pool.budget) {
            chosen.push(rb);
            mcs = mcs.min(m);
            if table.bits(mcs, chosen.len(), rb_bandwidth_hz, tti_s) >= c.demand_bits {
                met = true;
                break;
            }
        }
        if !met {
            continue;
        }
        chosen.sort_unstable();
        pool.free.retain(|rb| chosen.binary_search(rb).is_err());
        pool.budget -= chosen.len();
        grants.push(FixedGrant { ue: c.ue, bs: c.bs, rbs: chosen, mcs });
    }
    grants
}

/// Fixed grants for the static UEs over `[valid_from_s, valid_until_s)`; every
/// other available RB stays with PF.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPlan {
    pub grants: Vec<FixedGrant>,
    pub dynamic: Vec<(BsId, Vec<u16>)>,
    pub valid_from_s: f64,
    pub valid_until_s: f64,
}

impl HybridPlan {
    pub fn empty(valid_from_s: f64, valid_until_s: f64) -> Self {
        Self { grants: Vec::new(), dynamic: Vec::new(), valid_from_s, valid_until_s }
    }

    pub fn static_ues(&self) -> Vec<UeId> {
        self.grants.iter().map(|g| g.ue).collect()
    }

    pub fn is_valid_at(&self, t_s: f64) -> bool {
        self.valid_from_s <= t_s && t_s < self.valid_until_s
    }

    pub fn static_rbs(&self, bs: BsId) -> usize {
        self.grants.iter().filter(|g| g.bs == bs).map(|g| g.rbs.len()).sum()
    }
}

/// Tuning of the traffic-map scheduler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig {
    pub ema_weight: f64,
    pub sigma_max: f64,
    pub observation_s: f64,
    pub window_s: f64,
    pub max_static_share: f64,
    /// Only map slots refreshed this recently are planned on. Shadowing is
    /// per link, so a slot last written by a passer-by says little about the
    /// UE now standing there.
    pub freshness_s: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            ema_weight: DEFAULT_EMA_WEIGHT,
            sigma_max: DEFAULT_SIGMA_MAX,
            observation_s: 10.0,
            window_s: 5.0,
            max_static_share: MAX_STATIC_SHARE,
            freshness_s: 1.0,
        }
    }
}

/// Plan for `[t_s, t_s + window)` from the map and the PF averages in `world`.
/// UEs in `excluded` are not considered.
pub fn derive_hybrid_plan(
    map: &TrafficMap,
    world: &World,
    control: &TtiControl,
    cfg: &HybridConfig,
    t_s: f64,
    excluded: &BTreeSet<UeId>,
) -> HybridPlan {
    let dep = &world.scenario.deployment;
    let tti_s = world.scenario.run.tti_s;
    let candidates: Vec<StaticCandidate> = world
        .users
        .iter()
        .filter(|u| !excluded.contains(&u.id))
        .filter_map(|u| {
            let bs = world.serving(u.id)?;
            (dep.bs(bs).kind != BsKind::RoadSideUnit).then(|| StaticCandidate {
                ue: u.id,
                bs,
                position: u.position,
                demand_bits: (world.sched.avg(u.id) * tti_s).ceil() as u64,
            })
        })
        .collect();
    let mut pools: Vec<RbPool> = dep
        .base_stations
        .iter()
        .filter(|b| b.kind != BsKind::RoadSideUnit && control.plans[b.id.index()].active)
        .map(|b| {
            let free: Vec<u16> = control.plans[b.id.index()]
                .power_w
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(rb, _)| rb as u16)
                .collect();
            let budget = (cfg.max_static_share * free.len() as f64).floor() as usize;
            RbPool { bs: b.id, free, budget }
        })
        .collect();
    let grants = classify_static(
        map,
        &candidates,
        cfg.sigma_max,
        &mut pools,
        &world.mcs,
        dep.rb_bandwidth_hz,
        tti_s,
        t_s - cfg.freshness_s,
    );
    HybridPlan {
        grants,
        dynamic: pools.into_iter().map(|p| (p.bs, p.free)).collect(),
        valid_from_s: t_s,
        valid_until_s: t_s + cfg.window_s,
    }
}

/// One TTI with the plan's grants served outside PF while the plan is valid.
pub fn hybrid_schedule_step(plan: &HybridPlan, world: &mut World, control: &TtiControl) -> TtiReport {
    let t_s = ms_to_s(world.t_ms());
    if plan.is_valid_at(t_s) && !plan.grants.is_empty() {
        let mut c = control.clone();
        c.fixed.extend(plan.grants.iter().cloned());
        world.run_tti(&c)
    } else {
        world.run_tti(control)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Observation,
    Hybrid,
}

/// Observation under pure PF, then hybrid windows re-planned at every boundary.
/// UEs whose grant failed during a window are left out of the next plan.
#[derive(Debug, Clone)]
pub struct HybridController {
    pub cfg: HybridConfig,
    pub map: TrafficMap,
    pub plan: Option<HybridPlan>,
    pub history: Vec<HybridPlan>,
    failed: BTreeSet<UeId>,
}

impl HybridController {
    pub fn new(cfg: HybridConfig, map: TrafficMap) -> Self {
        Self { cfg, map, plan: None, history: Vec::new(), failed: BTreeSet::new() }
    }

    pub fn phase_at(&self, t_s: f64) -> Phase {
        if t_s < self.cfg.observation_s {
            Phase::Observation
        } else {
            Phase::Hybrid
        }
    }

    pub fn step(&mut self, world: &mut World) -> TtiReport {
        let t_s = ms_to_s(world.t_ms());
        let control = world.default_control();
        if self.phase_at(t_s) == Phase::Hybrid && self.plan.as_ref().is_none_or(|p| t_s >= p.valid_until_s) {
            let excluded = std::mem::take(&mut self.failed);
            let plan = derive_hybrid_plan(&self.map, world, &control, &self.cfg, t_s, &excluded);
            log::info!(
                "t={t_s:.3} s: {} static UEs, {} fixed RBs",
                plan.grants.len(),
                plan.grants.iter().map(|g| g.rbs.len()).sum::<usize>()
            );
            self.history.push(plan.clone());
            self.plan = Some(plan);
        }
        let report = match &self.plan {
            Some(plan) => hybrid_schedule_step(plan, world, &control),
            None => world.run_tti(&control),
        };
        self.failed.extend(report.ues.iter().filter(|u| u.plan_failure).map(|u| u.ue));
        ingest_report(&mut self.map, &report, &world.users, self.cfg.ema_weight);
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> TrafficMap {
        let grid = GridSpec { origin: [0.0, 0.0], raster_m: 1.0, nx: 4, ny: 4, floors: 1, z0: 0.0, floor_height_m: 3.0 };
        TrafficMap::new(grid, 4).unwrap()
    }

    fn feed(m: &mut TrafficMap, p: Point3, rb: usize, values: &[u8], w: f64) {
        for (k, &v) in values.iter().enumerate() {
            update_traffic_map(m, &TrafficSample { t_s: k as f64 * 1e-3, position: p, rb, mcs: v }, w).unwrap();
        }
    }

    #[test]
    fn constant_stream_has_zero_std() {
        let mut m = map();
        let p = Point3::new(1.5, 1.5, 1.5);
        feed(&mut m, p, 2, &[7; 300], 0.1);
        let c = m.layer.get(&p, Some(2)).unwrap();
        assert!((c.mean - 7.0).abs() < 1e-9);
        assert!(c.std() < 1e-6);
    }

    #[test]
    fn unit_weight_tracks_last_sample() {
        let mut m = map();
        let p = Point3::new(0.5, 0.5, 1.0);
        feed(&mut m, p, 0, &[3, 9, 4, 12], 1.0);
        let c = m.layer.get(&p, Some(0)).unwrap();
        assert_eq!(c.mean, 12.0);
        assert!(c.std() < 1e-6);
    }

    #[test]
    fn alternating_stream_steady_state() {
        // E[mean] = 5 and the EMA second moment tends to 26, so std → 1;
        // the mean oscillates by ±w/(2−w) around 5
        let mut m = map();
        let p = Point3::new(2.5, 0.5, 1.0);
        let values: Vec<u8> = (0..2000).map(|k| if k % 2 == 0 { 4 } else { 6 }).collect();
        feed(&mut m, p, 1, &values, 0.1);
        let c = m.layer.get(&p, Some(1)).unwrap();
        let swing = 0.1 / (2.0 - 0.1);
        assert!((c.mean - 5.0).abs() <= swing + 1e-9 && (c.mean - 5.0).abs() <= 0.11);
        assert!((c.std() - 1.0).abs() < 0.05, "std {}", c.std());
    }

    #[test]
    fn planned_mcs_subtracts_std() {
        let mut m = map();
        let p = Point3::new(0.5, 2.5, 1.0);
        feed(&mut m, p, 3, &[9; 10], 0.1);
        assert_eq!(m.planned_mcs(&p, 3, f64::NEG_INFINITY), Some(9));
        assert_eq!(m.planned_mcs(&p, 2, f64::NEG_INFINITY), None);
        let q = Point3::new(1.5, 2.5, 1.0);
        feed(&mut m, q, 3, &[0; 10], 0.1);
        assert_eq!(m.planned_mcs(&q, 3, f64::NEG_INFINITY), None);
    }

    #[test]
    fn stale_slots_are_not_planned() {
        let mut m = map();
        let p = Point3::new(0.5, 2.5, 1.0);
        // last sample at 9 ms
        feed(&mut m, p, 3, &[9; 10], 0.1);
        assert_eq!(m.planned_mcs(&p, 3, 0.009), Some(9));
        assert_eq!(m.planned_mcs(&p, 3, 0.0091), None);
    }

    fn candidate(ue: u32, p: Point3, demand: u64) -> StaticCandidate {
        StaticCandidate { ue: UeId(ue), bs: BsId(0), position: p, demand_bits: demand }
    }

    #[test]
    fn classification_rules() {
        let mut m = map();
        let calm = Point3::new(0.5, 0.5, 1.0);
        let busy = Point3::new(1.5, 0.5, 1.0);
        let never = Point3::new(2.5, 0.5, 1.0);
        for rb in 0..4 {
            feed(&mut m, calm, rb, &[10; 50], 0.1);
            let noisy: Vec<u8> = (0..50).map(|k| if k % 2 == 0 { 3 } else { 12 }).collect();
            feed(&mut m, busy, rb, &noisy, 0.1);
        }
        let table = McsTable::default();
        let mut pools = vec![RbPool { bs: BsId(0), free: vec![0, 1, 2, 3], budget: 4 }];
        let per_rb = table.bits(10, 1, 180e3, 1e-3);
        let grants = classify_static(
            &m,
            &[candidate(0, calm, 2 * per_rb), candidate(1, busy, 1), candidate(2, never, 1)],
            0.5,
            &mut pools,
            &table,
            180e3,
            1e-3,
            f64::NEG_INFINITY,
        );
        assert_eq!(grants.len(), 1);
        assert_eq!(grants[0].ue, UeId(0));
        assert_eq!(grants[0].rbs, vec![0, 1]);
        assert_eq!(grants[0].mcs, 10);
        assert_eq!(pools[0].free, vec![2, 3]);
        assert_eq!(pools[0].budget, 2);
    }

    #[test]
    fn pool_limits_admission() {
        let mut m = map();
        let cells: Vec<Point3> = (0..4).map(|k| Point3::new(k as f64 + 0.5, 3.5, 1.0)).collect();
        for p in &cells {
            for rb in 0..4 {
                feed(&mut m, *p, rb, &[8; 20], 0.1);
            }
        }
        let table = McsTable::default();
        let one_rb = table.bits(8, 1, 180e3, 1e-3);
        let cands: Vec<_> = cells.iter().enumerate().map(|(k, p)| candidate(k as u32, *p, one_rb)).collect();
        let mut pools = vec![RbPool { bs: BsId(0), free: vec![0, 1, 2, 3], budget: 3 }];
        let grants = classify_static(&m, &cands, 0.5, &mut pools, &table, 180e3, 1e-3, f64::NEG_INFINITY);
        assert_eq!(grants.iter().map(|g| g.ue.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        let mut used: Vec<u16> = grants.iter().flat_map(|g| g.rbs.clone()).collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 3);
    }
}
