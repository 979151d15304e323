//! Time-varying tapped-delay-line fading.
//!
//! Each tap is an independent sum-of-sinusoids process with `N` unit-amplitude
//! oscillators at arrival angles `α_n = (2πn + θ)/N` and uniformly random
//! phases, giving Doppler shifts `f_d·cos α_n`. The in-phase autocorrelation
//! approaches `J0(2π f_d τ)` and the envelope approaches Rayleigh.

use crate::rng::{stream, stream_rng};
use crate::units::doppler_hz;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::{PI, TAU};

use super::LinkGeometry;

/// Default oscillators per tap.
pub const DEFAULT_OSCILLATORS: usize = 32;

/// Rotation steps between exact re-evaluations of the oscillator phasors.
const RESYNC_STEPS: u32 = 1000;

/// Power-delay profile.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingProfile {
    pub delays_s: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl FadingProfile {
    /// Extended Pedestrian A.
    pub fn epa() -> Self {
        Self {
            delays_s: vec![0.0, 30e-9, 70e-9, 90e-9, 110e-9, 190e-9, 410e-9],
            powers_db: vec![0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8],
        }
    }

    /// Single zero-delay tap.
    pub fn flat() -> Self {
        Self { delays_s: vec![0.0], powers_db: vec![0.0] }
    }

    pub fn n_taps(&self) -> usize {
        self.delays_s.len()
    }

    /// Linear tap powers normalised to unit sum.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }
}

/// Per-RB phase rotations `exp(-j 2π f_rb τ_l)` for a fixed delay set.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringTable {
    n_rb: usize,
    n_taps: usize,
    table: Vec<Complex64>,
}

impl SteeringTable {
    /// RB centre frequencies are taken relative to the carrier centre.
    pub fn new(delays_s: &[f64], n_rb: usize, rb_bandwidth_hz: f64) -> Self {
        let mut table = Vec::with_capacity(n_rb * delays_s.len());
        for rb in 0..n_rb {
            let f = (rb as f64 + 0.5 - n_rb as f64 / 2.0) * rb_bandwidth_hz;
            for &tau in delays_s {
                table.push(Complex64::from_polar(1.0, -TAU * f * tau));
            }
        }
        Self { n_rb, n_taps: delays_s.len(), table }
    }

    pub fn n_rb(&self) -> usize {
        self.n_rb
    }
}

/// One link's fading state.
#[derive(Debug, Clone)]
pub struct FadingProcess {
    delays_s: Vec<f64>,
    tap_powers: Vec<f64>,
    doppler_hz: f64,
    n_osc: usize,
    /// Angular Doppler frequency and initial phase per oscillator, tap-major.
    omegas: Vec<f64>,
    phases: Vec<f64>,
    phasors: Vec<Complex64>,
    rotations: Vec<Complex64>,
    t_state: f64,
    rot_dt: f64,
    steps_since_sync: u32,
    taps: Vec<Complex64>,
}

impl FadingProcess {
    pub fn new(profile: &FadingProfile, doppler_hz: f64, n_osc: usize, seed: u64) -> Self {
        assert!(doppler_hz >= 0.0 && n_osc > 0);
        let n_taps = profile.n_taps();
        let mut rng = stream_rng(seed, stream::FADING, 0, 0);
        let mut omegas = Vec::with_capacity(n_taps * n_osc);
        let mut phases = Vec::with_capacity(n_taps * n_osc);
        for _ in 0..n_taps {
            let theta: f64 = rng.random_range(-PI..PI);
            for n in 0..n_osc {
                let alpha = (TAU * n as f64 + theta) / n_osc as f64;
                omegas.push(TAU * doppler_hz * alpha.cos());
                phases.push(rng.random_range(0.0..TAU));
            }
        }
        let mut p = Self {
            delays_s: profile.delays_s.clone(),
            tap_powers: profile.normalized_powers(),
            doppler_hz,
            n_osc,
            omegas,
            phases,
            phasors: Vec::new(),
            rotations: Vec::new(),
            t_state: 0.0,
            rot_dt: 0.0,
            steps_since_sync: 0,
            taps: vec![Complex64::new(0.0, 0.0); n_taps],
        };
        p.resync(0.0);
        p
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    pub fn n_taps(&self) -> usize {
        self.delays_s.len()
    }

    pub fn delays_s(&self) -> &[f64] {
        &self.delays_s
    }

    pub fn tap_powers(&self) -> &[f64] {
        &self.tap_powers
    }

    fn resync(&mut self, t: f64) {
        self.phasors = self
            .omegas
            .iter()
            .zip(&self.phases)
            .map(|(w, ph)| Complex64::from_polar(1.0, w * t + ph))
            .collect();
        self.t_state = t;
        self.steps_since_sync = 0;
        self.sum_taps();
    }

    fn sum_taps(&mut self) {
        let n = self.n_osc;
        for (l, tap) in self.taps.iter_mut().enumerate() {
            let s: Complex64 = self.phasors[l * n..(l + 1) * n].iter().sum();
            *tap = s * (self.tap_powers[l] / n as f64).sqrt();
        }
    }

    /// Advances the oscillators to `t_s`. Repeated equal steps use phasor
    /// rotation with periodic exact re-evaluation; anything else is evaluated directly.
    pub fn advance_to(&mut self, t_s: f64) {
        let dt = t_s - self.t_state;
        if dt == 0.0 {
            return;
        }
        if self.doppler_hz == 0.0 {
            self.t_state = t_s;
            return;
        }
        if dt > 0.0 && (dt - self.rot_dt).abs() < 1e-12 && self.steps_since_sync < RESYNC_STEPS {
            for (z, r) in self.phasors.iter_mut().zip(&self.rotations) {
                *z *= r;
            }
            self.t_state = t_s;
            self.steps_since_sync += 1;
            self.sum_taps();
        } else {
            if dt > 0.0 && (dt - self.rot_dt).abs() >= 1e-12 {
                self.rot_dt = dt;
                self.rotations = self.omegas.iter().map(|w| Complex64::from_polar(1.0, w * dt)).collect();
            }
            self.resync(t_s);
        }
    }

    /// Complex tap gains at the current state.
    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Exact tap gains at an arbitrary time, without touching the state.
    pub fn taps_at(&self, t_s: f64) -> Vec<Complex64> {
        let n = self.n_osc;
        (0..self.n_taps())
            .map(|l| {
                let s: Complex64 = (l * n..(l + 1) * n)
                    .map(|k| Complex64::from_polar(1.0, self.omegas[k] * t_s + self.phases[k]))
                    .sum();
                s * (self.tap_powers[l] / n as f64).sqrt()
            })
            .collect()
    }

    /// Frequency response at each RB centre from the current taps.
    pub fn response_into(&self, table: &SteeringTable, out: &mut [Complex64]) {
        debug_assert_eq!(table.n_taps, self.n_taps());
        for (rb, h) in out.iter_mut().enumerate().take(table.n_rb) {
            let row = &table.table[rb * table.n_taps..(rb + 1) * table.n_taps];
            *h = row.iter().zip(&self.taps).map(|(s, t)| s * t).sum();
        }
    }
}

/// Fading process for a link with EPA taps and the default oscillator count.
pub fn make_fading_process(link: &LinkGeometry, speed_mps: f64, seed: u64) -> FadingProcess {
    FadingProcess::new(&FadingProfile::epa(), doppler_hz(speed_mps, link.carrier_hz), DEFAULT_OSCILLATORS, seed)
}

/// Per-RB complex gains at time `t_s`.
pub fn fading_gain(process: &mut FadingProcess, t_s: f64, n_rb: usize, rb_bandwidth_hz: f64) -> Vec<Complex64> {
    process.advance_to(t_s);
    let table = SteeringTable::new(process.delays_s(), n_rb, rb_bandwidth_hz);
    let mut out = vec![Complex64::new(0.0, 0.0); n_rb];
    process.response_into(&table, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epa_has_seven_normalised_taps() {
        let p = FadingProfile::epa();
        assert_eq!(p.n_taps(), 7);
        assert!((p.normalized_powers().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_profile_gives_flat_response() {
        let mut p = FadingProcess::new(&FadingProfile::flat(), 50.0, 32, 3);
        for t in [0.0, 0.013, 0.5] {
            let h = fading_gain(&mut p, t, 108, 180e3);
            let m0 = h[0].norm();
            assert!(h.iter().all(|x| (x.norm() - m0).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_doppler_is_constant() {
        let mut p = FadingProcess::new(&FadingProfile::epa(), 0.0, 32, 9);
        let a = fading_gain(&mut p, 0.0, 108, 180e3);
        let b = fading_gain(&mut p, 3.7, 108, 180e3);
        assert_eq!(a, b);
    }

    #[test]
    fn stepping_matches_direct_evaluation() {
        let mut p = FadingProcess::new(&FadingProfile::epa(), 162.0, 32, 5);
        for k in 1..=2500u64 {
            p.advance_to(k as f64 / 1000.0);
        }
        let direct = p.taps_at(2.5);
        for (a, b) in p.taps().iter().zip(&direct) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_process() {
        let a = FadingProcess::new(&FadingProfile::epa(), 9.3, 32, 11).taps_at(0.77);
        let b = FadingProcess::new(&FadingProfile::epa(), 9.3, 32, 11).taps_at(0.77);
        assert_eq!(a, b);
    }
}
