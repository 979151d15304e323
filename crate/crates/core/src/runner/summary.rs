//! Windowed rate summaries. Everything here is a pure function of the raw
//! streams, so a summary read back from disk can be recomputed exactly.

use serde::{Deserialize, Serialize};

use super::stream::{CostRow, TtiRow, UserGroups};
use super::RunnerError;
use crate::units::{dbm_to_w, w_to_dbm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window: usize,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub ttis: u64,
    pub indoor_mean_bps: f64,
    pub indoor_sum_bps: f64,
    pub outdoor_mean_bps: f64,
    pub outdoor_sum_bps: f64,
    /// Linear mean over the window's TTIs.
    pub victim_interference_mean_dbm: Option<f64>,
    pub victim_interference_max_dbm: Option<f64>,
    pub pf_processed_mean: f64,
    pub plan_failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeWindow {
    pub window: usize,
    pub ue_id: u32,
    pub bits: u64,
    pub mean_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub windows: Vec<WindowSummary>,
    pub per_ue: Vec<UeWindow>,
}

/// Number of TTIs in `window_s`, which must be a whole multiple of `tti_s`.
pub fn window_ttis(window_s: f64, tti_s: f64) -> Result<u64, RunnerError> {
    let ratio = window_s / tti_s;
    let k = ratio.round();
    if !(k >= 1.0) || (ratio - k).abs() > 1e-9 * ratio {
        return Err(RunnerError::Window { window_s });
    }
    Ok(k as u64)
}

/// Consecutive `[first, last)` TTI ranges of `per_window` TTIs; the last one may be short.
pub fn uniform_windows(n_ttis: u64, per_window: u64) -> Vec<(u64, u64)> {
    (0..n_ttis.div_ceil(per_window)).map(|k| (k * per_window, ((k + 1) * per_window).min(n_ttis))).collect()
}

fn stream_len(rows: &[TtiRow], costs: &[CostRow]) -> u64 {
    let a = rows.iter().map(|r| r.t_ms + 1).max().unwrap_or(0);
    let b = costs.iter().map(|c| c.t_ms + 1).max().unwrap_or(0);
    a.max(b)
}

/// Per-UE and per-group mean rates over consecutive windows of `window_s`.
pub fn summarize(
    rows: &[TtiRow],
    costs: &[CostRow],
    groups: &UserGroups,
    tti_s: f64,
    window_s: f64,
) -> Result<Summary, RunnerError> {
    let per = window_ttis(window_s, tti_s)?;
    Ok(summarize_windows(rows, costs, groups, tti_s, &uniform_windows(stream_len(rows, costs), per)))
}

/// As [`summarize`] over explicit, contiguous and ascending TTI ranges.
pub fn summarize_windows(
    rows: &[TtiRow],
    costs: &[CostRow],
    groups: &UserGroups,
    tti_s: f64,
    bounds: &[(u64, u64)],
) -> Summary {
    let n_ue = rows
        .iter()
        .map(|r| r.ue_id as usize + 1)
        .chain(groups.indoor.iter().chain(&groups.outdoor).map(|u| u.index() + 1))
        .max()
        .unwrap_or(0);
    let window_of = |t: u64| -> Option<usize> {
        let k = bounds.partition_point(|&(_, last)| last <= t);
        (k < bounds.len() && bounds[k].0 <= t).then_some(k)
    };

    let mut bits = vec![vec![0u64; n_ue]; bounds.len()];
    let mut seen = vec![vec![false; n_ue]; bounds.len()];
    // (sum W, max dBm, TTIs) per window
    let mut interference: Vec<(f64, f64, u64)> = vec![(0.0, f64::NEG_INFINITY, 0); bounds.len()];
    let mut last_t: Option<u64> = None;
    for r in rows {
        let Some(k) = window_of(r.t_ms) else { continue };
        bits[k][r.ue_id as usize] += r.bits;
        seen[k][r.ue_id as usize] = true;
        if last_t != Some(r.t_ms) {
            last_t = Some(r.t_ms);
            if let Some(dbm) = r.interference_at_victims_dbm {
                let acc = &mut interference[k];
                acc.0 += dbm_to_w(dbm);
                acc.1 = acc.1.max(dbm);
                acc.2 += 1;
            }
        }
    }
    let mut processed = vec![0u64; bounds.len()];
    let mut failures = vec![0u64; bounds.len()];
    for c in costs {
        if let Some(k) = window_of(c.t_ms) {
            processed[k] += c.pf_processed;
            failures[k] += c.plan_failures;
        }
    }

    let mut out = Summary::default();
    for (k, &(first, last)) in bounds.iter().enumerate() {
        let n = last - first;
        let span_s = n as f64 * tti_s;
        let rates = |ids: &[crate::ids::UeId]| -> Vec<f64> {
            ids.iter().map(|u| bits[k].get(u.index()).copied().unwrap_or(0) as f64 / span_s).collect()
        };
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let indoor = rates(&groups.indoor);
        let outdoor = rates(&groups.outdoor);
        let (i_sum, i_max, i_n) = interference[k];
        out.windows.push(WindowSummary {
            window: k,
            t_start_s: first as f64 * tti_s,
            t_end_s: last as f64 * tti_s,
            ttis: n,
            indoor_mean_bps: mean(&indoor),
            indoor_sum_bps: indoor.iter().sum(),
            outdoor_mean_bps: mean(&outdoor),
            outdoor_sum_bps: outdoor.iter().sum(),
            victim_interference_mean_dbm: (i_n > 0).then(|| w_to_dbm(i_sum / i_n as f64)),
            victim_interference_max_dbm: (i_n > 0).then_some(i_max),
            pf_processed_mean: if n == 0 { 0.0 } else { processed[k] as f64 / n as f64 },
            plan_failures: failures[k],
        });
        for ue in 0..n_ue {
            if seen[k][ue] {
                out.per_ue.push(UeWindow {
                    window: k,
                    ue_id: ue as u32,
                    bits: bits[k][ue],
                    mean_bps: bits[k][ue] as f64 / span_s,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::UeId;

    fn row(t: u64, ue: u32, bits: u64) -> TtiRow {
        TtiRow { t_ms: t, ue_id: ue, bits, n_rbs: 1, mcs: Some(5), serving_bs: Some(0), interference_at_victims_dbm: None }
    }

    fn groups() -> UserGroups {
        UserGroups { indoor: vec![UeId(0)], outdoor: vec![UeId(1)] }
    }

    #[test]
    fn constant_rate_every_window() {
        // 1000 bits per 1 ms TTI = 1 Mbit/s
        let rows: Vec<_> = (0..1000).flat_map(|t| [row(t, 0, 1000), row(t, 1, 500)]).collect();
        let s = summarize(&rows, &[], &groups(), 1e-3, 0.2).unwrap();
        assert_eq!(s.windows.len(), 5);
        for w in &s.windows {
            assert!((w.indoor_mean_bps - 1e6).abs() < 1e-6);
            assert!((w.outdoor_mean_bps - 5e5).abs() < 1e-6);
            assert_eq!(w.ttis, 200);
        }
        assert_eq!(s.per_ue.len(), 10);
    }

    #[test]
    fn full_run_window_is_run_mean() {
        let rows: Vec<_> = (0..300).map(|t| row(t, 0, t)).collect();
        let s = summarize(&rows, &[], &groups(), 1e-3, 0.3).unwrap();
        assert_eq!(s.windows.len(), 1);
        let total: u64 = (0..300).sum();
        assert_eq!(s.windows[0].indoor_sum_bps, total as f64 / 0.3);
    }

    #[test]
    fn window_must_be_whole_ttis() {
        assert!(window_ttis(0.2, 1e-3).is_ok());
        assert!(window_ttis(0.0005, 1e-3).is_err());
        assert!(window_ttis(0.2005, 1e-3).is_err());
    }

    #[test]
    fn short_last_window() {
        assert_eq!(uniform_windows(450, 200), vec![(0, 200), (200, 400), (400, 450)]);
    }

    #[test]
    fn interference_and_cost() {
        let mut rows = Vec::new();
        for t in 0..4 {
            for ue in 0..2 {
                let mut r = row(t, ue, 0);
                r.interference_at_victims_dbm = Some(if t % 2 == 0 { -90.0 } else { -80.0 });
                rows.push(r);
            }
        }
        let costs: Vec<_> = (0..4).map(|t| CostRow { t_ms: t, pf_processed: 10 + t, plan_failures: t % 2 }).collect();
        let s = summarize(&rows, &costs, &groups(), 1e-3, 0.004).unwrap();
        let w = &s.windows[0];
        assert_eq!(w.victim_interference_max_dbm, Some(-80.0));
        let mean_w = (1e-12 + 1e-11) / 2.0;
        assert!((w.victim_interference_mean_dbm.unwrap() - w_to_dbm(mean_w)).abs() < 1e-9);
        assert_eq!(w.pf_processed_mean, 11.5);
        assert_eq!(w.plan_failures, 2);
    }
}
