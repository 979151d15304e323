use crate::ids::BsId;
use crate::scheduler::TtiReport;
use crate::units::ms_to_s;

use super::RsmRepository;

/// Slack when comparing a transmitted per-RB power to its cap.
const POWER_TOLERANCE_DB: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    /// Transmission on an RB no active record grants.
    OutsideRange,
    /// Per-RB power above the active cap.
    PowerExceeded { power_dbm: f64, cap_dbm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t_ms: u64,
    pub bs: BsId,
    pub rb: usize,
    pub kind: ViolationKind,
}

/// Flags every (TTI, BS, RB) where a policy-governed BS transmitted outside
/// its active grants. Caps are total-power levels; the per-RB limit is the
/// cap spread over `n_rb` RBs.
pub fn conformance_check<'a, I>(repo: &RsmRepository, reports: I, n_rb: usize) -> Vec<Violation>
where
    I: IntoIterator<Item = &'a TtiReport>,
{
    let governed = repo.governed_bs();
    let spread_db = 10.0 * (n_rb as f64).log10();
    let mut out = Vec::new();
    for report in reports {
        let t_s = ms_to_s(report.t_ms);
        for tx in report.transmissions.iter().filter(|tx| governed.binary_search(&tx.bs).is_ok()) {
            for rb_tx in &tx.rbs {
                let rb = rb_tx.rb as usize;
                let kind = match repo.effective_cap_dbm(tx.bs, rb, t_s) {
                    None => Some(ViolationKind::OutsideRange),
                    Some(cap) => {
                        let cap_per_rb = cap - spread_db;
                        (rb_tx.power_dbm > cap_per_rb + POWER_TOLERANCE_DB)
                            .then_some(ViolationKind::PowerExceeded { power_dbm: rb_tx.power_dbm, cap_dbm: cap_per_rb })
                    }
                };
                if let Some(kind) = kind {
                    out.push(Violation { t_ms: report.t_ms, bs: tx.bs, rb, kind });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::UeId;
    use crate::rsm::{Party, PolicyRecord, RbRange, SpectrumMask};
    use crate::scenario::Operator;
    use crate::scheduler::{BsTx, RbTx};

    fn repo() -> RsmRepository {
        let mut r = RsmRepository::new(Party::Operator(Operator::Iot));
        r.add_policy(PolicyRecord {
            bs_id: BsId(0),
            t_start_s: 0.0,
            t_end_s: 1.0,
            rb_range: RbRange::new(0, 10),
            max_tx_power_dbm: 20.0,
            spectrum_mask: SpectrumMask::default(),
        });
        r
    }

    fn report(t_ms: u64, rbs: &[(u16, f64)]) -> TtiReport {
        TtiReport {
            t_ms,
            transmissions: vec![BsTx {
                bs: BsId(0),
                rbs: rbs.iter().map(|&(rb, p)| RbTx { rb, ue: Some(UeId(0)), power_dbm: p }).collect(),
            }],
            ..TtiReport::default()
        }
    }

    #[test]
    fn clean_run_has_no_violations() {
        let per_rb = 20.0 - 10.0 * 100f64.log10();
        let reports: Vec<_> = (0..1000).map(|t| report(t, &[(0, per_rb), (9, per_rb - 6.0)])).collect();
        assert!(conformance_check(&repo(), &reports, 100).is_empty());
    }

    #[test]
    fn injected_faults_found() {
        let per_rb = 20.0 - 10.0 * 100f64.log10();
        let mut reports: Vec<_> = (0..100).map(|t| report(t, &[(3, per_rb)])).collect();
        reports[42].transmissions[0].rbs[0].power_dbm += 3.0;
        reports[77].transmissions[0].rbs.push(RbTx { rb: 12, ue: None, power_dbm: per_rb });
        let v = conformance_check(&repo(), &reports, 100);
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].t_ms, 42);
        assert!(matches!(v[0].kind, ViolationKind::PowerExceeded { .. }));
        assert_eq!((v[1].t_ms, v[1].rb, v[1].kind), (77, 12, ViolationKind::OutsideRange));
    }

    #[test]
    fn transmission_after_expiry_flagged() {
        let v = conformance_check(&repo(), &[report(1000, &[(0, -10.0)])], 100);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::OutsideRange);
    }
}
