use crate::ids::BsId;
use crate::scenario::Deployment;

/// Soft frequency reuse: the band is cut into `n_sets` contiguous RB sets;
/// each participating BS transmits its preferred set at full power and the
/// others `offset_db` lower.
#[derive(Debug, Clone, PartialEq)]
pub struct SfrPlan {
    pub n_rb: usize,
    pub n_sets: usize,
    /// Negative power offset on non-preferred sets.
    pub offset_db: f64,
    /// Preferred set per BS; `None` for BSs outside the plan.
    pub preferred: Vec<Option<usize>>,
}

impl SfrPlan {
    pub const DEFAULT_OFFSET_DB: f64 = -6.0;
    pub const DEFAULT_SETS: usize = 3;

    /// Plan with no participants.
    pub fn disabled(n_rb: usize, n_bs: usize) -> Self {
        Self { n_rb, n_sets: Self::DEFAULT_SETS, offset_db: 0.0, preferred: vec![None; n_bs] }
    }

    /// Three-set plan over the indoor BSs, rotated so that neighbours along
    /// x, along y and across floors prefer different sets.
    pub fn for_deployment(dep: &Deployment, offset_db: f64) -> Self {
        let indoor: Vec<_> = dep.base_stations.iter().filter(|b| b.kind.is_indoor()).collect();
        let rank = |vals: Vec<f64>, v: f64| {
            let mut vals = vals;
            vals.sort_by(f64::total_cmp);
            vals.dedup_by(|a, b| (*a - *b).abs() < 0.1);
            vals.iter().position(|&x| (x - v).abs() < 0.1).unwrap_or(0)
        };
        let xs: Vec<f64> = indoor.iter().map(|b| b.position.x).collect();
        let ys: Vec<f64> = indoor.iter().map(|b| b.position.y).collect();
        let mut preferred = vec![None; dep.base_stations.len()];
        for b in &indoor {
            let col = rank(xs.clone(), b.position.x);
            let row = rank(ys.clone(), b.position.y);
            let floor = dep.building.floor_of(&b.position) as usize;
            preferred[b.id.index()] = Some((col + 2 * row + floor) % Self::DEFAULT_SETS);
        }
        Self { n_rb: dep.n_rb, n_sets: Self::DEFAULT_SETS, offset_db, preferred }
    }

    pub fn set_of_rb(&self, rb: usize) -> usize {
        rb * self.n_sets / self.n_rb
    }

    pub fn is_full_power(&self, bs: BsId, rb: usize) -> bool {
        match self.preferred[bs.index()] {
            None => true,
            Some(set) => self.set_of_rb(rb) == set,
        }
    }

    /// Linear factor applied to the full per-RB power.
    pub fn power_factor(&self, bs: BsId, rb: usize) -> f64 {
        if self.is_full_power(bs, rb) {
            1.0
        } else {
            10f64.powf(self.offset_db / 10.0)
        }
    }

    pub fn full_power_rbs(&self, bs: BsId) -> Vec<usize> {
        (0..self.n_rb).filter(|&rb| self.is_full_power(bs, rb)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{reference_config, UseCase};

    #[test]
    fn sets_partition_band() {
        let dep = reference_config(UseCase::Baseline).deployment();
        let plan = SfrPlan::for_deployment(&dep, SfrPlan::DEFAULT_OFFSET_DB);
        let counts = (0..3).map(|s| (0..108).filter(|&rb| plan.set_of_rb(rb) == s).count()).collect::<Vec<_>>();
        assert_eq!(counts, vec![36, 36, 36]);
        for id in dep.indoor_bs_ids() {
            assert_eq!(plan.full_power_rbs(id).len(), 36);
        }
        // outdoor BSs are not part of the plan
        assert_eq!(plan.full_power_rbs(BsId(12)).len(), 108);
    }

    #[test]
    fn axis_neighbours_differ() {
        let dep = reference_config(UseCase::Baseline).deployment();
        let plan = SfrPlan::for_deployment(&dep, -6.0);
        let indoor: Vec<_> = dep.base_stations.iter().filter(|b| b.kind.is_indoor()).collect();
        for a in &indoor {
            for b in &indoor {
                let dx = (a.position.x - b.position.x).abs();
                let dy = (a.position.y - b.position.y).abs();
                let dz = (a.position.z - b.position.z).abs();
                let differing = [dx, dy, dz].iter().filter(|d| **d > 0.1).count();
                if differing == 1 && dx < 14.0 {
                    assert_ne!(plan.preferred[a.id.index()], plan.preferred[b.id.index()], "{} vs {}", a.id, b.id);
                }
            }
        }
    }

    #[test]
    fn reduced_sets_exactly_offset() {
        let dep = reference_config(UseCase::Baseline).deployment();
        let plan = SfrPlan::for_deployment(&dep, -6.0);
        let bs = BsId(0);
        let reduced = (0..108).find(|&rb| !plan.is_full_power(bs, rb)).unwrap();
        assert!((10.0 * plan.power_factor(bs, reduced).log10() + 6.0).abs() < 1e-12);
    }
}
