use crate::ids::BsId;
use serde::{Deserialize, Serialize};

use super::RsmError;

/// Half-open RB interval `[start, end)`. Serialised as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct RbRange {
    pub start: usize,
    pub end: usize,
}

impl RbRange {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, rb: usize) -> bool {
        rb >= self.start && rb < self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance in RBs from the nearest range edge for an RB outside the range.
    pub fn edge_offset(&self, rb: usize) -> Option<usize> {
        if self.is_empty() || self.contains(rb) {
            None
        } else if rb < self.start {
            Some(self.start - rb)
        } else {
            Some(rb + 1 - self.end)
        }
    }
}

impl From<[usize; 2]> for RbRange {
    fn from(v: [usize; 2]) -> Self {
        RbRange::new(v[0], v[1])
    }
}

impl From<RbRange> for [usize; 2] {
    fn from(r: RbRange) -> Self {
        [r.start, r.end]
    }
}

/// Out-of-range emission mask: five 8-bit attenuation steps (dB) applied to
/// the first five RBs beyond either edge of the licensed range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectrumMask(pub [u8; 5]);

impl Default for SpectrumMask {
    fn default() -> Self {
        SpectrumMask([30, 40, 50, 60, 70])
    }
}

impl SpectrumMask {
    pub const BITS: u32 = 40;

    /// Attenuation for an RB `offset` RBs outside the range, `None` past the mask.
    pub fn attenuation_db(&self, offset: usize) -> Option<f64> {
        (1..=5).contains(&offset).then(|| self.0[offset - 1] as f64)
    }

    pub fn to_bits(self) -> u64 {
        self.0.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (b as u64) << (8 * i))
    }

    pub fn from_bits(bits: u64) -> Self {
        let mut steps = [0u8; 5];
        for (i, s) in steps.iter_mut().enumerate() {
            *s = (bits >> (8 * i)) as u8;
        }
        SpectrumMask(steps)
    }
}

/// One licensed-shared-access rule.
///
/// `max_tx_power_dbm` is expressed as total transmit power over the carrier;
/// the per-RB limit is that level spread evenly over all RBs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyRecord {
    pub bs_id: BsId,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub rb_range: RbRange,
    pub max_tx_power_dbm: f64,
    #[serde(default)]
    pub spectrum_mask: SpectrumMask,
}

impl PolicyRecord {
    /// Zero-length records pass validation; they are simply never active.
    pub fn validate(&self, n_rb: usize, global_max_dbm: f64) -> Result<(), RsmError> {
        let bad = |reason: String| RsmError::InvalidPolicy { bs: self.bs_id, reason };
        if !(self.t_start_s.is_finite() && self.t_end_s.is_finite()) || self.t_end_s < self.t_start_s {
            return Err(bad(format!("time range [{}, {}) is inverted", self.t_start_s, self.t_end_s)));
        }
        if self.rb_range.is_empty() || self.rb_range.end > n_rb {
            return Err(bad(format!(
                "rb_range [{}, {}) outside [0, {n_rb})",
                self.rb_range.start, self.rb_range.end
            )));
        }
        if !(self.max_tx_power_dbm <= global_max_dbm) {
            return Err(bad(format!(
                "max_tx_power_dbm {} exceeds {global_max_dbm}",
                self.max_tx_power_dbm
            )));
        }
        Ok(())
    }

    pub fn is_active(&self, t_s: f64) -> bool {
        self.t_start_s <= t_s && t_s < self.t_end_s
    }
}

/// Parses a JSON list of policy records.
pub fn load_policies(text: &str) -> Result<Vec<PolicyRecord>, RsmError> {
    Ok(serde_json::from_str(text)?)
}

/// Effective per-(bs, rb) cap at time `t_s`: the minimum over every active
/// record covering the RB, `None` when no record grants it.
pub fn effective_cap_dbm(records: &[PolicyRecord], bs: BsId, rb: usize, t_s: f64) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.bs_id == bs && r.is_active(t_s) && r.rb_range.contains(rb))
        .map(|r| r.max_tx_power_dbm)
        .reduce(f64::min)
}
