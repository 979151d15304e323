use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ids::{BsId, UeId};
use crate::rsm::{RsmError, TrajectoryFix, TrajectoryRecord};
use crate::scenario::{Operator, Point3, Scenario};
use crate::scheduler::TtiReport;
use crate::sim::{TtiControl, World};
use crate::units::{dbm_to_w, ms_to_s};

#[derive(Debug, Error)]
pub enum ProtectionError {
    #[error("interference cap must be positive, got {0} W")]
    NonPositiveCap(f64),
    #[error("epoch length must be positive, got {0} s")]
    NonPositiveEpoch(f64),
    #[error("UE {0} is not a protected victim of the scenario")]
    UnknownVictim(UeId),
    #[error(transparent)]
    Trajectory(#[from] RsmError),
}

/// Aggregate interference cap at one outdoor victim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionConstraint {
    pub victim: UeId,
    pub i_max_w: f64,
    pub epoch_s: f64,
}

impl ProtectionConstraint {
    pub fn new(victim: UeId, i_max_w: f64, epoch_s: f64) -> Result<Self, ProtectionError> {
        if !(i_max_w > 0.0) {
            return Err(ProtectionError::NonPositiveCap(i_max_w));
        }
        if !(epoch_s > 0.0) {
            return Err(ProtectionError::NonPositiveEpoch(epoch_s));
        }
        Ok(Self { victim, i_max_w, epoch_s })
    }
}

/// Total transmit power of each indoor BS for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector {
    pub bs: Vec<BsId>,
    pub power_w: Vec<f64>,
    pub epoch: usize,
}

/// Victim position at `t_s` by linear interpolation; times outside the
/// trajectory clamp to its ends and come back flagged.
pub fn predict_victim_position(trajectory: &TrajectoryRecord, t_s: f64) -> Result<TrajectoryFix, RsmError> {
    trajectory.position_at(t_s)
}

/// One UE of the sum-rate objective: its serving BS and its large-scale gain
/// from every BS of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGains {
    pub serving: usize,
    pub gains: Vec<f64>,
}

/// Sum-rate maximisation under an aggregate interference cap:
/// maximise `Σ_u log2(1 + SINR_u(p))` s.t. `Σ_b p_b g_b ≤ i_max`, `0 ≤ p_b ≤ p_max_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProblem {
    pub p_max_w: Vec<f64>,
    pub victim_gain: Vec<f64>,
    pub users: Vec<UserGains>,
    pub noise_w: f64,
    pub i_max_w: f64,
}

const ITERATIONS: usize = 500;
const RANDOM_STARTS: usize = 8;
/// Lower power bound of the log-domain search, relative to `p_max`.
const MIN_POWER_FRACTION: f64 = 1e-6;

impl PowerProblem {
    pub fn n_bs(&self) -> usize {
        self.p_max_w.len()
    }

    pub fn sum_rate(&self, p: &[f64]) -> f64 {
        self.users
            .iter()
            .map(|u| {
                let s = p[u.serving] * u.gains[u.serving];
                let i: f64 = self.noise_w
                    + (0..p.len()).filter(|&b| b != u.serving).map(|b| p[b] * u.gains[b]).sum::<f64>();
                (1.0 + s / i).log2()
            })
            .sum()
    }

    pub fn interference(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.victim_gain).map(|(p, g)| p * g).sum()
    }

    /// Gradient with respect to `ln p`.
    fn log_gradient(&self, p: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; p.len()];
        for u in &self.users {
            let s = p[u.serving] * u.gains[u.serving];
            let i: f64 = self.noise_w
                + (0..p.len()).filter(|&b| b != u.serving).map(|b| p[b] * u.gains[b]).sum::<f64>();
            grad[u.serving] += s / (i + s);
            for b in (0..p.len()).filter(|&b| b != u.serving) {
                grad[b] -= s * p[b] * u.gains[b] / (i * (i + s));
            }
        }
        grad.iter().map(|g| g / std::f64::consts::LN_2).collect()
    }

    /// Box clamp followed by uniform scaling onto the interference hyperplane.
    fn project(&self, p: &mut [f64]) {
        for (v, &m) in p.iter_mut().zip(&self.p_max_w) {
            *v = v.clamp(m * MIN_POWER_FRACTION, m);
        }
        let mut s = self.interference(p);
        while s > self.i_max_w {
            let f = self.i_max_w / s;
            for v in p.iter_mut() {
                *v *= f;
            }
            s = self.interference(p);
            if s > self.i_max_w {
                for v in p.iter_mut() {
                    *v = v.next_down();
                }
                s = self.interference(p);
            }
        }
    }

    fn ascend(&self, mut p: Vec<f64>) -> (Vec<f64>, f64) {
        self.project(&mut p);
        let mut f = self.sum_rate(&p);
        let mut step = 1.0;
        for _ in 0..ITERATIONS {
            let g = self.log_gradient(&p);
            let norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if norm == 0.0 {
                break;
            }
            let mut q: Vec<f64> = p.iter().zip(&g).map(|(p, g)| p * (step * g / norm).exp()).collect();
            self.project(&mut q);
            let fq = self.sum_rate(&q);
            if fq > f {
                p = q;
                f = fq;
                step = (step * 1.5).min(8.0);
            } else {
                step *= 0.5;
                if step < 1e-10 {
                    break;
                }
            }
        }
        (p, f)
    }
}

/// Projected gradient ascent in `ln p` from several starting points.
/// The returned vector satisfies the interference cap exactly.
pub fn optimize_indoor_powers(problem: &PowerProblem) -> Result<Vec<f64>, ProtectionError> {
    optimize_indoor_powers_from(problem, &[])
}

/// As [`optimize_indoor_powers`], with extra starting points such as the
/// previous epoch's solution.
pub fn optimize_indoor_powers_from(problem: &PowerProblem, warm: &[Vec<f64>]) -> Result<Vec<f64>, ProtectionError> {
    if !(problem.i_max_w > 0.0) {
        return Err(ProtectionError::NonPositiveCap(problem.i_max_w));
    }
    let n = problem.n_bs();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut starts: Vec<Vec<f64>> = warm.iter().filter(|w| w.len() == n).cloned().collect();
    starts.push(problem.p_max_w.clone());
    starts.push(
        (0..n)
            .map(|b| {
                let g = problem.victim_gain[b];
                if g > 0.0 {
                    problem.p_max_w[b].min(problem.i_max_w / (n as f64 * g))
                } else {
                    problem.p_max_w[b]
                }
            })
            .collect(),
    );
    if n > 1 {
        for b in 0..n {
            starts.push((0..n).map(|k| if k == b { problem.p_max_w[k] } else { 0.0 }).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..RANDOM_STARTS {
        starts.push(problem.p_max_w.iter().map(|&m| m * 10f64.powf(-rng.random_range(0.0..4.0))).collect());
    }
    let best = starts
        .into_iter()
        .map(|s| problem.ascend(s))
        .fold(None::<(Vec<f64>, f64)>, |acc, (p, f)| match acc {
            Some((_, bf)) if bf >= f => acc,
            _ => Some((p, f)),
        })
        .map(|(p, _)| p)
        .unwrap_or_default();
    debug_assert!(problem.interference(&best) <= problem.i_max_w);
    Ok(best)
}

/// Comparison arms of the protection experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtectionArm {
    Adaptive,
    NoProtection,
    NoIndoor,
}

impl ProtectionArm {
    pub const ALL: [ProtectionArm; 3] = [ProtectionArm::Adaptive, ProtectionArm::NoProtection, ProtectionArm::NoIndoor];

    pub fn name(self) -> &'static str {
        match self {
            ProtectionArm::Adaptive => "adaptive",
            ProtectionArm::NoProtection => "no_protection",
            ProtectionArm::NoIndoor => "no_indoor",
        }
    }
}

/// Rates of one arm over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmEpoch {
    pub indoor_sum_bps: f64,
    pub indoor_mean_bps: f64,
    pub outdoor_mean_bps: f64,
    /// Mean received interference at the victim including fading.
    pub victim_interference_w: f64,
    /// Worst per-TTI interference at the victim evaluated with planning gains
    /// at its actual position.
    pub planning_interference_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub t_start_s: f64,
    /// Predicted victim position at the epoch midpoint.
    pub victim_position: Point3,
    pub clamped: bool,
    pub powers: PowerVector,
    /// `Σ p_b g_b` with the gains the plan was made for.
    pub planned_interference_w: f64,
    /// Optimised objective, `Σ_u log2(1 + SINR_u)` over the indoor UEs.
    pub planned_sum_rate: f64,
    pub arms: [ArmEpoch; 3],
}

impl EpochRecord {
    pub fn arm(&self, arm: ProtectionArm) -> &ArmEpoch {
        &self.arms[arm as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionRun {
    pub constraint: ProtectionConstraint,
    pub epochs: Vec<EpochRecord>,
}

impl ProtectionRun {
    /// Time at which the predicted victim is closest to `target` in the horizontal plane,
    /// searched on the TTI grid of the run.
    pub fn closest_approach_s(trajectory: &TrajectoryRecord, target: Point3, duration_s: f64, tti_s: f64) -> f64 {
        let n = (duration_s / tti_s).round() as u64;
        (0..n)
            .map(|k| k as f64 * tti_s)
            .filter_map(|t| trajectory.position_at(t).ok().map(|f| (t, f.position.horizontal_distance(&target))))
            .fold((0.0, f64::INFINITY), |acc, (t, d)| if d < acc.1 { (t, d) } else { acc })
            .0
    }
}

/// Sum-rate problem over the indoor MBB network with the victim's planning
/// gains taken as the worst case over `victim_positions`.
pub fn build_power_problem(world: &World, indoor: &[BsId], victim: UeId, victim_positions: &[Point3], i_max_w: f64) -> PowerProblem {
    let dep = &world.scenario.deployment;
    let p_max_w = indoor.iter().map(|&b| dbm_to_w(dep.bs(b).max_tx_power_dbm)).collect();
    let victim_gain = indoor
        .iter()
        .map(|&b| victim_positions.iter().map(|&p| world.predicted_gain(victim, b, p)).fold(0.0, f64::max))
        .collect();
    let users = world
        .users
        .iter()
        .filter(|u| u.is_indoor() && u.operator == Operator::Mbb)
        .map(|u| {
            let gains: Vec<f64> = indoor.iter().map(|&b| world.large_scale_gain(u.id, b)).collect();
            let serving = world
                .serving(u.id)
                .and_then(|s| indoor.iter().position(|&b| b == s))
                .unwrap_or_else(|| {
                    (0..gains.len()).fold(0, |best, k| if gains[k] > gains[best] { k } else { best })
                });
            UserGains { serving, gains }
        })
        .collect();
    PowerProblem {
        p_max_w,
        victim_gain,
        users,
        noise_w: world.noise_w_per_rb() * world.n_rb() as f64,
        i_max_w,
    }
}

/// Scales every indoor BS's per-RB powers by `p_b / P_max`, keeping the SFR shape.
fn scaled_control(base: &TtiControl, world: &World, indoor: &[BsId], powers: &[f64]) -> TtiControl {
    let mut c = base.clone();
    for (k, &b) in indoor.iter().enumerate() {
        let f = powers[k] / dbm_to_w(world.scenario.deployment.bs(b).max_tx_power_dbm);
        for p in c.plans[b.index()].power_w.iter_mut() {
            *p *= f;
        }
    }
    c
}

fn tx_total_w(report: &TtiReport, bs: BsId) -> f64 {
    report.tx(bs).map_or(0.0, |tx| tx.rbs.iter().map(|r| dbm_to_w(r.power_dbm)).sum())
}

/// Runs the three arms epoch by epoch. Every epoch the adaptive arm predicts
/// the victim's path over the epoch, re-optimises the indoor powers against
/// the worst-case gains along that path and holds them for the epoch.
pub fn run_adaptive_protection(
    scenario: &Scenario,
    trajectory: &TrajectoryRecord,
    constraint: &ProtectionConstraint,
    sink: &mut dyn FnMut(ProtectionArm, &TtiReport),
) -> Result<ProtectionRun, ProtectionError> {
    trajectory.validate()?;
    if !scenario.users.iter().any(|u| u.id == constraint.victim && u.victim) {
        return Err(ProtectionError::UnknownVictim(constraint.victim));
    }
    let mut worlds: Vec<World> = ProtectionArm::ALL.iter().map(|_| World::new(scenario.clone())).collect();
    let indoor = scenario.deployment.indoor_bs_ids();
    let tti_s = scenario.run.tti_s;
    let n_ttis = scenario.run.n_ttis();
    let per_epoch = (constraint.epoch_s / tti_s).round().max(1.0) as u64;
    let n_epochs = n_ttis.div_ceil(per_epoch) as usize;
    let indoor_ues: Vec<UeId> =
        scenario.users.iter().filter(|u| u.is_indoor() && u.operator == Operator::Mbb).map(|u| u.id).collect();
    let outdoor_ues: Vec<UeId> = scenario.users.iter().filter(|u| !u.is_indoor()).map(|u| u.id).collect();

    let mut epochs = Vec::with_capacity(n_epochs);
    let mut previous: Vec<Vec<f64>> = Vec::new();
    for e in 0..n_epochs {
        let first = e as u64 * per_epoch;
        let last = (first + per_epoch).min(n_ttis);
        let t_start_s = ms_to_s(first);
        let mut path = Vec::with_capacity((last - first) as usize);
        for t in first..last {
            path.push(predict_victim_position(trajectory, ms_to_s(t))?.position);
        }
        let mid = predict_victim_position(trajectory, t_start_s + 0.5 * (last - first) as f64 * tti_s)?;

        let adaptive = &worlds[ProtectionArm::Adaptive as usize];
        let problem = build_power_problem(adaptive, &indoor, constraint.victim, &path, constraint.i_max_w);
        let powers = optimize_indoor_powers_from(&problem, &previous)?;
        previous = vec![powers.clone()];
        let planned_interference_w = problem.interference(&powers);
        let planned_sum_rate = problem.sum_rate(&powers);

        let mut arms = [ArmEpoch::default(); 3];
        for arm in ProtectionArm::ALL {
            let world = &mut worlds[arm as usize];
            let base = world.default_control();
            let control = match arm {
                ProtectionArm::Adaptive => scaled_control(&base, world, &indoor, &powers),
                ProtectionArm::NoProtection => base,
                ProtectionArm::NoIndoor => {
                    let mut c = base;
                    for &b in &indoor {
                        c.silence(b);
                    }
                    c
                }
            };
            let mut bits = vec![0u64; world.users.len()];
            let mut i_sum = 0.0;
            let mut i_plan_max = 0.0f64;
            for _ in first..last {
                let report = world.run_tti(&control);
                for u in &report.ues {
                    bits[u.ue.index()] += u.bits;
                }
                i_sum += report.victims.iter().filter(|v| v.ue == constraint.victim).map(|v| v.interference_w).sum::<f64>();
                let pos = world.users[constraint.victim.index()].position;
                let i_plan: f64 =
                    indoor.iter().map(|&b| tx_total_w(&report, b) * world.predicted_gain(constraint.victim, b, pos)).sum();
                i_plan_max = i_plan_max.max(i_plan);
                sink(arm, &report);
            }
            let span_s = (last - first) as f64 * tti_s;
            let rate = |ids: &[UeId]| -> Vec<f64> { ids.iter().map(|u| bits[u.index()] as f64 / span_s).collect() };
            let indoor_rates = rate(&indoor_ues);
            let outdoor_rates = rate(&outdoor_ues);
            let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
            arms[arm as usize] = ArmEpoch {
                indoor_sum_bps: indoor_rates.iter().sum(),
                indoor_mean_bps: mean(&indoor_rates),
                outdoor_mean_bps: mean(&outdoor_rates),
                victim_interference_w: i_sum / (last - first) as f64,
                planning_interference_w: i_plan_max,
            };
        }
        epochs.push(EpochRecord {
            epoch: e,
            t_start_s,
            victim_position: mid.position,
            clamped: mid.clamped,
            powers: PowerVector { bs: indoor.clone(), power_w: powers, epoch: e },
            planned_interference_w,
            planned_sum_rate,
            arms,
        });
    }
    Ok(ProtectionRun { constraint: *constraint, epochs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsm::Waypoint;

    fn two_by_two() -> PowerProblem {
        PowerProblem {
            p_max_w: vec![0.125, 0.125],
            victim_gain: vec![1e-9, 4e-10],
            users: vec![
                UserGains { serving: 0, gains: vec![1e-7, 1e-9] },
                UserGains { serving: 1, gains: vec![2e-9, 5e-8] },
            ],
            noise_w: 1e-12,
            i_max_w: 1e-10,
        }
    }

    #[test]
    fn rejects_non_positive_cap() {
        let mut p = two_by_two();
        p.i_max_w = 0.0;
        assert!(optimize_indoor_powers(&p).is_err());
        assert!(ProtectionConstraint::new(UeId(0), -1.0, 0.2).is_err());
    }

    #[test]
    fn victim_out_of_range_keeps_full_power() {
        // weak cross-coupling, so full power is also the unconstrained optimum
        let mut p = two_by_two();
        p.victim_gain = vec![0.0, 0.0];
        p.users[0].gains[1] = 1e-13;
        p.users[1].gains[0] = 1e-13;
        assert_eq!(optimize_indoor_powers(&p).unwrap(), p.p_max_w);
    }

    #[test]
    fn single_bs_closed_form() {
        for (g, i_max) in [(1e-9, 1e-10), (1e-12, 1e-10), (3e-8, 7e-11)] {
            let p = PowerProblem {
                p_max_w: vec![0.125],
                victim_gain: vec![g],
                users: vec![UserGains { serving: 0, gains: vec![1e-8] }],
                noise_w: 1e-12,
                i_max_w: i_max,
            };
            let got = optimize_indoor_powers(&p).unwrap()[0];
            let want = f64::min(0.125, i_max / g);
            assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
            assert!(got * g <= i_max);
        }
    }

    #[test]
    fn two_bs_matches_grid() {
        let p = two_by_two();
        let got = optimize_indoor_powers(&p).unwrap();
        let mut best = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                let q = [p.p_max_w[0] * i as f64 / 63.0, p.p_max_w[1] * j as f64 / 63.0];
                if p.interference(&q) <= p.i_max_w {
                    best = best.max(p.sum_rate(&q));
                }
            }
        }
        assert!(p.sum_rate(&got) >= 0.99 * best);
        assert!(p.interference(&got) <= p.i_max_w);
    }

    #[test]
    fn prediction_interpolates_and_clamps() {
        let tr = TrajectoryRecord {
            subject: UeId(0),
            waypoints: vec![
                Waypoint { t_s: 0.0, position: Point3::new(0.0, 0.0, 1.5) },
                Waypoint { t_s: 2.0, position: Point3::new(10.0, 4.0, 1.5) },
            ],
            typical_route: true,
        };
        assert_eq!(predict_victim_position(&tr, 2.0).unwrap().position, Point3::new(10.0, 4.0, 1.5));
        assert_eq!(predict_victim_position(&tr, 1.0).unwrap().position, Point3::new(5.0, 2.0, 1.5));
        let late = predict_victim_position(&tr, 9.0).unwrap();
        assert!(late.clamped);
        assert_eq!(late.position, Point3::new(10.0, 4.0, 1.5));
        let empty = TrajectoryRecord { subject: UeId(0), waypoints: Vec::new(), typical_route: false };
        assert!(predict_victim_position(&empty, 0.0).is_err());
    }
}
