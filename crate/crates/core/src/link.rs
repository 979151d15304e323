//! Link-to-system mapping: per-RB SINR, exponential effective SNR mapping
//! (EESM) and MCS selection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("no RBs")]
    NoRbs,
    #[error("EESM beta must be positive, got {0}")]
    BadBeta(f64),
    #[error("invalid MCS table: {0}")]
    BadTable(String),
}

/// Per-RB linear SINR of one UE–BS link in one TTI.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SinrVector {
    pub rbs: Vec<u16>,
    pub sinr: Vec<f64>,
}

impl SinrVector {
    pub fn is_empty(&self) -> bool {
        self.sinr.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sinr.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: u8,
    /// Linear EESM calibration factor.
    pub beta_eesm: f64,
    pub min_effective_snr_db: f64,
    pub spectral_efficiency_bps_per_hz: f64,
}

impl McsEntry {
    pub fn threshold_lin(&self) -> f64 {
        10f64.powf(self.min_effective_snr_db / 10.0)
    }
}

/// MCS ladder, indices `1..=N` stored in order.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
    thresholds: Vec<f64>,
}

/// QPSK through 64QAM efficiencies of the 15-level LTE/NR CQI ladder.
const DEFAULT_EFFICIENCIES: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234,
    5.1152, 5.5547,
];

impl Default for McsTable {
    /// 15 levels, thresholds from -6 dB to +22 dB in 2 dB steps, beta from 1 to 30.
    fn default() -> Self {
        let entries = DEFAULT_EFFICIENCIES
            .iter()
            .enumerate()
            .map(|(i, &eff)| McsEntry {
                index: i as u8 + 1,
                beta_eesm: 1.0 + 29.0 * i as f64 / 14.0,
                min_effective_snr_db: -6.0 + 2.0 * i as f64,
                spectral_efficiency_bps_per_hz: eff,
            })
            .collect();
        McsTable::new(entries).expect("default table is valid")
    }
}

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self, LinkError> {
        if entries.is_empty() {
            return Err(LinkError::BadTable("empty".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.index as usize != i + 1 {
                return Err(LinkError::BadTable(format!("entry {i} has index {}", e.index)));
            }
            if !(e.beta_eesm > 0.0) {
                return Err(LinkError::BadTable(format!("MCS {} beta must be positive", e.index)));
            }
        }
        for w in entries.windows(2) {
            if !(w[1].min_effective_snr_db > w[0].min_effective_snr_db) {
                return Err(LinkError::BadTable(format!("thresholds not increasing at MCS {}", w[1].index)));
            }
            if !(w[1].spectral_efficiency_bps_per_hz > w[0].spectral_efficiency_bps_per_hz) {
                return Err(LinkError::BadTable(format!("efficiencies not increasing at MCS {}", w[1].index)));
            }
        }
        let thresholds = entries.iter().map(McsEntry::threshold_lin).collect();
        Ok(Self { entries, thresholds })
    }

    /// Parses `index threshold_db beta efficiency` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, LinkError> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            let bad = || LinkError::BadTable(format!("line {}: expected 'index threshold_db beta efficiency'", lineno + 1));
            if fields.len() != 4 {
                return Err(bad());
            }
            entries.push(McsEntry {
                index: fields[0].parse().map_err(|_| bad())?,
                min_effective_snr_db: fields[1].parse().map_err(|_| bad())?,
                beta_eesm: fields[2].parse().map_err(|_| bad())?,
                spectral_efficiency_bps_per_hz: fields[3].parse().map_err(|_| bad())?,
            });
        }
        McsTable::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn entry(&self, index: u8) -> &McsEntry {
        &self.entries[index as usize - 1]
    }

    pub fn max_index(&self) -> u8 {
        self.entries.len() as u8
    }

    /// Highest MCS a single RB at linear SINR `snr` supports (EESM of one value is the value).
    pub fn mcs_for_snr(&self, snr: f64) -> Option<u8> {
        let n = self.thresholds.partition_point(|&t| t <= snr);
        (n > 0).then_some(n as u8)
    }

    /// Bits carried by `n_rbs` RBs at `mcs` in one TTI.
    pub fn bits(&self, mcs: u8, n_rbs: usize, rb_bandwidth_hz: f64, tti_s: f64) -> u64 {
        (self.entry(mcs).spectral_efficiency_bps_per_hz * rb_bandwidth_hz * tti_s * n_rbs as f64).floor() as u64
    }
}

/// `γ_eff = -β·ln(mean(exp(-γ_n/β)))`, evaluated relative to the minimum for stability.
pub fn eesm_effective_snr(sinrs: &[f64], beta: f64) -> Result<f64, LinkError> {
    if sinrs.is_empty() {
        return Err(LinkError::NoRbs);
    }
    if !(beta > 0.0) {
        return Err(LinkError::BadBeta(beta));
    }
    let min = sinrs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = sinrs.iter().map(|g| (-(g - min) / beta).exp()).sum::<f64>() / sinrs.len() as f64;
    Ok(min - beta * mean.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McsDecision {
    /// `None` is outage.
    pub mcs: Option<u8>,
    pub bits: u64,
}

/// Highest index whose own-β effective SNR clears its threshold.
pub fn select_mcs(sinrs: &[f64], table: &McsTable, rb_bandwidth_hz: f64, tti_s: f64) -> McsDecision {
    let outage = McsDecision { mcs: None, bits: 0 };
    if sinrs.is_empty() {
        return outage;
    }
    let min = sinrs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = sinrs.iter().sum::<f64>() / sinrs.len() as f64;
    for (entry, &thr) in table.entries.iter().zip(&table.thresholds).rev() {
        // min <= γ_eff <= mean
        let ok = if min >= thr {
            true
        } else if mean < thr {
            false
        } else {
            eesm_effective_snr(sinrs, entry.beta_eesm).map(|g| g >= thr).unwrap_or(false)
        };
        if ok {
            return McsDecision {
                mcs: Some(entry.index),
                bits: table.bits(entry.index, sinrs.len(), rb_bandwidth_hz, tti_s),
            };
        }
    }
    outage
}

/// Transmit power and channel gain per RB of one transmitter towards one receiver.
#[derive(Debug, Clone, Copy)]
pub struct TxLink<'a> {
    /// Per-RB transmit power in W; zero where the transmitter is silent.
    pub power_w: &'a [f64],
    pub gain: &'a [f64],
}

/// `SINR(rb) = P_s·g_s / (N0 + Σ_i P_i·g_i)` over the listed RBs.
pub fn compute_sinr(rbs: &[u16], serving: TxLink<'_>, interferers: &[TxLink<'_>], noise_w: f64) -> SinrVector {
    let sinr = rbs
        .iter()
        .map(|&rb| {
            let rb = rb as usize;
            let interference: f64 = interferers.iter().map(|i| i.power_w[rb] * i.gain[rb]).sum();
            serving.power_w[rb] * serving.gain[rb] / (noise_w + interference)
        })
        .collect();
    SinrVector { rbs: rbs.to_vec(), sinr }
}
