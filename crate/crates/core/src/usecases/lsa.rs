use crate::ids::BsId;
use crate::rsm::RsmRepository;
use crate::sim::TtiControl;
use crate::units::{db_to_lin, dbm_to_w};

/// Caps granted to one BS at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LsaGrant {
    pub bs: BsId,
    /// Total-power cap (dBm) per RB; `None` where no active record grants the RB.
    pub cap_dbm: Vec<Option<f64>>,
    /// Worst out-of-range emission per RB (W), from the active records' masks.
    pub leak_w: Vec<f64>,
}

impl LsaGrant {
    pub fn allowed_rbs(&self) -> usize {
        self.cap_dbm.iter().filter(|c| c.is_some()).count()
    }

    /// Per-RB cap in W: the total-power cap spread evenly over all RBs.
    pub fn cap_per_rb_w(&self, rb: usize) -> Option<f64> {
        let n_rb = self.cap_dbm.len() as f64;
        self.cap_dbm[rb].map(|c| dbm_to_w(c) / n_rb)
    }
}

/// Reads the policy store at `t_s` into per-BS caps for every BS in `bss`.
///
/// A BS without an active record gets no RB at all; overlapping records
/// combine by taking the lowest cap.
pub fn apply_lsa_schedule(repo: &RsmRepository, t_s: f64, bss: &[BsId], n_rb: usize) -> Vec<LsaGrant> {
    let active = repo.active_policies(t_s);
    bss.iter()
        .map(|&bs| {
            let mut cap_dbm: Vec<Option<f64>> = vec![None; n_rb];
            let mine: Vec<_> = active.iter().filter(|r| r.bs_id == bs).collect();
            for r in &mine {
                for slot in cap_dbm.iter_mut().take(r.rb_range.end.min(n_rb)).skip(r.rb_range.start) {
                    *slot = Some(slot.map_or(r.max_tx_power_dbm, |c| c.min(r.max_tx_power_dbm)));
                }
            }
            let mut leak_w = vec![0.0; n_rb];
            for r in &mine {
                let in_range_w = dbm_to_w(r.max_tx_power_dbm) / n_rb as f64;
                for (rb, leak) in leak_w.iter_mut().enumerate() {
                    if cap_dbm[rb].is_some() {
                        continue;
                    }
                    if let Some(att) = r.rb_range.edge_offset(rb).and_then(|o| r.spectrum_mask.attenuation_db(o)) {
                        *leak = f64::max(*leak, in_range_w * db_to_lin(-att));
                    }
                }
            }
            LsaGrant { bs, cap_dbm, leak_w }
        })
        .collect()
}

/// Restricts `base` to the grants: each granted RB keeps the lower of its base
/// power and the cap, every other RB of a governed BS is switched off.
pub fn lsa_control(base: &TtiControl, grants: &[LsaGrant]) -> TtiControl {
    let mut out = base.clone();
    for g in grants {
        let plan = &mut out.plans[g.bs.index()];
        for (rb, p) in plan.power_w.iter_mut().enumerate() {
            *p = g.cap_per_rb_w(rb).map_or(0.0, |cap| p.min(cap));
        }
        plan.leak_w = g.leak_w.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsm::{Party, PolicyRecord, RbRange, SpectrumMask};
    use crate::scenario::{lsa_demo_policies, Operator, LSA_DEMO_BUDGETS};
    use crate::sim::BsPlan;

    fn rec(bs: u32, t0: f64, t1: f64, rbs: (usize, usize), p: f64) -> PolicyRecord {
        PolicyRecord {
            bs_id: BsId(bs),
            t_start_s: t0,
            t_end_s: t1,
            rb_range: RbRange::new(rbs.0, rbs.1),
            max_tx_power_dbm: p,
            spectrum_mask: SpectrumMask::default(),
        }
    }

    fn repo(records: Vec<PolicyRecord>) -> RsmRepository {
        let mut r = RsmRepository::new(Party::Operator(Operator::Mbb));
        r.set_policies(records);
        r
    }

    #[test]
    fn demo_budgets_read_back() {
        let bss: Vec<BsId> = (0..12).map(BsId).collect();
        let r = repo(lsa_demo_policies(&bss, &LSA_DEMO_BUDGETS));
        for (k, &budget) in LSA_DEMO_BUDGETS.iter().enumerate() {
            for t in [k as f64, k as f64 + 0.5, k as f64 + 0.999] {
                for g in apply_lsa_schedule(&r, t, &bss, 108) {
                    assert_eq!(g.allowed_rbs(), budget);
                }
            }
        }
        assert!(apply_lsa_schedule(&r, 4.0, &bss, 108).iter().all(|g| g.allowed_rbs() == 0));
    }

    #[test]
    fn zero_length_record_is_inert() {
        let base = repo(vec![rec(0, 0.0, 2.0, (0, 50), 21.0)]);
        let with = repo(vec![rec(0, 0.0, 2.0, (0, 50), 21.0), rec(0, 1.0, 1.0, (0, 108), 0.0)]);
        for t in [0.0, 0.5, 1.0, 1.5] {
            assert_eq!(apply_lsa_schedule(&base, t, &[BsId(0)], 108), apply_lsa_schedule(&with, t, &[BsId(0)], 108));
        }
    }

    #[test]
    fn overlap_takes_lowest_cap() {
        let r = repo(vec![rec(0, 0.0, 2.0, (0, 50), 21.0), rec(0, 0.0, 2.0, (40, 60), 15.0)]);
        let g = &apply_lsa_schedule(&r, 1.0, &[BsId(0)], 108)[0];
        assert_eq!(g.cap_dbm[10], Some(21.0));
        assert_eq!(g.cap_dbm[45], Some(15.0));
        assert_eq!(g.cap_dbm[55], Some(15.0));
        assert_eq!(g.cap_dbm[60], None);
    }

    #[test]
    fn mask_leaks_next_to_range() {
        let r = repo(vec![rec(0, 0.0, 1.0, (10, 20), 21.0)]);
        let g = &apply_lsa_schedule(&r, 0.5, &[BsId(0)], 108)[0];
        let in_range = dbm_to_w(21.0) / 108.0;
        assert!((g.leak_w[9] - in_range * 1e-3).abs() < 1e-18);
        assert!((g.leak_w[20] - in_range * 1e-3).abs() < 1e-18);
        assert!((g.leak_w[24] - in_range * 1e-7).abs() < 1e-22);
        assert_eq!(g.leak_w[25], 0.0);
        assert_eq!(g.leak_w[15], 0.0);
    }

    #[test]
    fn control_applies_caps() {
        let n_rb = 8;
        let base = TtiControl {
            plans: vec![
                BsPlan { active: true, power_w: vec![0.05; n_rb], leak_w: Vec::new() },
                BsPlan { active: true, power_w: vec![0.05; n_rb], leak_w: Vec::new() },
            ],
            fixed: Vec::new(),
        };
        // 8 RBs at 10 dBm total: 1.25 mW each, below the base level
        let r = repo(vec![rec(0, 0.0, 1.0, (2, 5), 10.0)]);
        let c = lsa_control(&base, &apply_lsa_schedule(&r, 0.0, &[BsId(0)], n_rb));
        let p = &c.plans[0].power_w;
        assert_eq!(p[0], 0.0);
        assert!((p[3] - 1.25e-3).abs() < 1e-15);
        assert_eq!(c.plans[0].available_rbs(), 3);
        assert_eq!(c.plans[1], base.plans[1]);
    }
}
