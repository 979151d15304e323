use crate::ids::{BsId, UeId};

/// One RB a BS transmitted on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbTx {
    pub rb: u16,
    pub ue: Option<UeId>,
    pub power_dbm: f64,
}

/// Everything one BS put on the air in a TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct BsTx {
    pub bs: BsId,
    pub rbs: Vec<RbTx>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeTti {
    pub ue: UeId,
    pub serving_bs: Option<BsId>,
    pub bits: u64,
    pub n_rbs: u16,
    pub mcs: Option<u8>,
    /// Served from a static-user plan rather than by PF.
    pub planned: bool,
    /// Planned MCS was not supported by the realised channel.
    pub plan_failure: bool,
}

/// Single-RB MCS the channel supported on an allocated RB (0 for outage).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbDecision {
    pub ue: UeId,
    pub rb: u16,
    pub mcs: u8,
}

/// Aggregate interference from indoor BSs at a protected UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VictimInterference {
    pub ue: UeId,
    pub interference_w: f64,
}

/// Observable outcome of one TTI.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TtiReport {
    pub t_ms: u64,
    pub ues: Vec<UeTti>,
    pub transmissions: Vec<BsTx>,
    pub victims: Vec<VictimInterference>,
    /// RBs that went through the PF argmax, per BS.
    pub pf_processed: Vec<(BsId, u32)>,
    pub decisions: Vec<RbDecision>,
}

impl TtiReport {
    pub fn total_bits(&self) -> u64 {
        self.ues.iter().map(|u| u.bits).sum()
    }

    pub fn pf_processed_total(&self) -> u64 {
        self.pf_processed.iter().map(|(_, n)| *n as u64).sum()
    }

    pub fn victim_interference_w(&self) -> f64 {
        self.victims.iter().map(|v| v.interference_w).sum()
    }

    pub fn plan_failures(&self) -> usize {
        self.ues.iter().filter(|u| u.plan_failure).count()
    }

    pub fn ue(&self, ue: UeId) -> Option<&UeTti> {
        self.ues.iter().find(|u| u.ue == ue)
    }

    pub fn tx(&self, bs: BsId) -> Option<&BsTx> {
        self.transmissions.iter().find(|t| t.bs == bs)
    }
}
