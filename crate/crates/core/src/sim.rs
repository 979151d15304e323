//! The per-TTI world loop: mobility, channel evolution, association,
//! scheduling, link abstraction and rate accounting.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{
    path_loss_db, shadowing_sigma_db, FadingProcess, FadingProfile, LinkGeometry, SteeringTable,
};
use crate::ids::{BsId, UeId};
use crate::link::{eesm_effective_snr, select_mcs, McsTable};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::scenario::{BsKind, Carrier, Mobility, MobilityModel, Point3, Scenario, UserEquipment};
use crate::scheduler::{
    pf_schedule, round_robin, update_average_rate, BsTx, RbDecision, RbTx, SchedulerConfig, SchedulerState,
    SfrPlan, TtiReport, UeTti, VictimInterference,
};
use crate::units::{dbm_to_w, doppler_hz, ms_to_s, noise_power_dbm, w_to_dbm};

/// Association is re-evaluated this often.
pub const ASSOCIATION_PERIOD_MS: u64 = 1000;

/// What one BS may do in a TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct BsPlan {
    pub active: bool,
    /// Power (W) used on an RB the BS schedules; zero marks the RB unavailable.
    pub power_w: Vec<f64>,
    /// Out-of-range emission (W) per RB. Counts as interference only; may be empty.
    pub leak_w: Vec<f64>,
}

impl BsPlan {
    pub fn silent(n_rb: usize) -> Self {
        Self { active: false, power_w: vec![0.0; n_rb], leak_w: Vec::new() }
    }

    pub fn available_rbs(&self) -> usize {
        if self.active {
            self.power_w.iter().filter(|&&p| p > 0.0).count()
        } else {
            0
        }
    }
}

/// RBs reserved for one UE outside PF, at a fixed MCS.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedGrant {
    pub ue: UeId,
    pub bs: BsId,
    pub rbs: Vec<u16>,
    pub mcs: u8,
}

/// Per-TTI instructions from a use-case controller.
#[derive(Debug, Clone, PartialEq)]
pub struct TtiControl {
    pub plans: Vec<BsPlan>,
    pub fixed: Vec<FixedGrant>,
}

impl TtiControl {
    pub fn silence(&mut self, bs: BsId) {
        let n = self.plans[bs.index()].power_w.len();
        self.plans[bs.index()] = BsPlan::silent(n);
    }
}

#[derive(Debug, Clone)]
struct LinkState {
    geometry: LinkGeometry,
    shadow_z: f64,
    shadow_db: f64,
    pl_db: f64,
    fading: Option<FadingProcess>,
    response_ready: bool,
    response: Vec<Complex64>,
    gain: Vec<f64>,
}

impl LinkState {
    fn large_scale_lin(&self) -> f64 {
        10f64.powf(-(self.pl_db + self.shadow_db) / 10.0)
    }
}

/// Mutable simulation state of one run.
#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    pub users: Vec<UserEquipment>,
    pub sched: SchedulerState,
    pub sfr: SfrPlan,
    pub mcs: McsTable,
    mobility: MobilityModel,
    links: Vec<LinkState>,
    steering: SteeringTable,
    serving: Vec<Option<BsId>>,
    est_sinr: Vec<Vec<f64>>,
    est_valid: Vec<bool>,
    last_tx_w: Vec<Vec<f64>>,
    noise_w: f64,
    t_ms: u64,
}

impl World {
    pub fn new(scenario: Scenario) -> Self {
        Self::with_options(scenario, McsTable::default(), SchedulerConfig::default(), true)
    }

    pub fn with_options(scenario: Scenario, mcs: McsTable, sched: SchedulerConfig, sfr_enabled: bool) -> Self {
        let dep = &scenario.deployment;
        let n_rb = dep.n_rb;
        let n_bs = dep.base_stations.len();
        let seed = scenario.run.seed;
        let profile = FadingProfile::epa();
        let steering = SteeringTable::new(&profile.delays_s, n_rb, dep.rb_bandwidth_hz);
        let mut links = Vec::with_capacity(scenario.users.len() * n_bs);
        for ue in &scenario.users {
            for bs in &dep.base_stations {
                let carrier_hz = dep.carrier_hz(bs.carrier);
                let geometry = LinkGeometry::new(bs.position, ue.position, carrier_hz, &dep.building, &scenario.channel);
                let shadow_z: f64 = if scenario.channel.shadowing {
                    StandardNormal.sample(&mut stream_rng(seed, stream::SHADOWING, ue.id.0 as u64, bs.id.0 as u64))
                } else {
                    0.0
                };
                let fading = scenario.channel.fading.then(|| {
                    FadingProcess::new(
                        &profile,
                        doppler_hz(ue.mobility.speed_mps(), carrier_hz),
                        scenario.channel.oscillators,
                        derive_seed(seed, stream::FADING, ue.id.0 as u64, bs.id.0 as u64),
                    )
                });
                let mut link = LinkState {
                    shadow_z,
                    shadow_db: 0.0,
                    pl_db: 0.0,
                    geometry,
                    fading,
                    response_ready: false,
                    response: vec![Complex64::new(1.0, 0.0); n_rb],
                    gain: vec![0.0; n_rb],
                };
                refresh_large_scale(&mut link, &scenario);
                links.push(link);
            }
        }
        let sfr = if sfr_enabled {
            SfrPlan::for_deployment(dep, SfrPlan::DEFAULT_OFFSET_DB)
        } else {
            SfrPlan::disabled(n_rb, n_bs)
        };
        let noise_w = dbm_to_w(noise_power_dbm(dep.rb_bandwidth_hz, scenario.channel.noise_figure_db));
        let n_ue = scenario.users.len();
        let mut world = Self {
            users: scenario.users.clone(),
            mobility: MobilityModel::new(&dep.building, &scenario.users, seed),
            sched: SchedulerState::new(n_ue, sched),
            sfr,
            mcs,
            links,
            steering,
            serving: vec![None; n_ue],
            est_sinr: vec![vec![0.0; n_rb]; n_ue],
            est_valid: vec![false; n_ue],
            last_tx_w: vec![vec![0.0; n_rb]; n_bs],
            noise_w,
            t_ms: 0,
            scenario,
        };
        for i in 0..world.links.len() {
            world.refresh_fading(i, 0.0);
        }
        world
    }

    pub fn n_rb(&self) -> usize {
        self.scenario.deployment.n_rb
    }

    pub fn n_bs(&self) -> usize {
        self.scenario.deployment.base_stations.len()
    }

    /// Time of the next TTI.
    pub fn t_ms(&self) -> u64 {
        self.t_ms
    }

    pub fn noise_w_per_rb(&self) -> f64 {
        self.noise_w
    }

    pub fn serving(&self, ue: UeId) -> Option<BsId> {
        self.serving[ue.index()]
    }

    fn link_index(&self, ue: UeId, bs: BsId) -> usize {
        ue.index() * self.n_bs() + bs.index()
    }

    /// Per-RB linear gain of a link at the last evaluated TTI.
    pub fn link_gain(&self, ue: UeId, bs: BsId) -> &[f64] {
        &self.links[self.link_index(ue, bs)].gain
    }

    /// Path loss plus shadowing of a link, as a linear gain.
    pub fn large_scale_gain(&self, ue: UeId, bs: BsId) -> f64 {
        self.links[self.link_index(ue, bs)].large_scale_lin()
    }

    /// Large-scale gain the link would have with the UE at `position`,
    /// keeping the link's shadowing realisation.
    pub fn predicted_gain(&self, ue: UeId, bs: BsId, position: Point3) -> f64 {
        let dep = &self.scenario.deployment;
        let b = dep.bs(bs);
        let geo = LinkGeometry::new(b.position, position, dep.carrier_hz(b.carrier), &dep.building, &self.scenario.channel);
        let link = &self.links[self.link_index(ue, bs)];
        let shadow = link.shadow_z * shadowing_sigma_db(&geo);
        10f64.powf(-(path_loss_db(&geo, &self.scenario.channel).db + shadow) / 10.0)
    }

    /// Full-power plans with the SFR masks applied.
    pub fn default_control(&self) -> TtiControl {
        let dep = &self.scenario.deployment;
        let n_rb = dep.n_rb;
        let plans = dep
            .base_stations
            .iter()
            .map(|b| {
                let full = dbm_to_w(b.max_tx_power_dbm) / n_rb as f64;
                BsPlan {
                    active: true,
                    power_w: (0..n_rb).map(|rb| full * self.sfr.power_factor(b.id, rb)).collect(),
                    leak_w: Vec::new(),
                }
            })
            .collect();
        TtiControl { plans, fixed: Vec::new() }
    }

    fn refresh_fading(&mut self, i: usize, t_s: f64) {
        let link = &mut self.links[i];
        if let Some(f) = link.fading.as_mut() {
            if !(link.response_ready && f.doppler_hz() == 0.0) {
                f.advance_to(t_s);
                f.response_into(&self.steering, &mut link.response);
                link.response_ready = true;
            }
        }
        let ls = link.large_scale_lin();
        for (g, h) in link.gain.iter_mut().zip(&link.response) {
            *g = ls * h.norm_sqr();
        }
    }

    fn update_links(&mut self, t_s: f64) {
        let n_bs = self.n_bs();
        for (u, ue) in self.users.iter().enumerate() {
            if ue.mobility == Mobility::Static {
                continue;
            }
            for b in 0..n_bs {
                let link = &mut self.links[u * n_bs + b];
                let bs = &self.scenario.deployment.base_stations[b];
                link.geometry = LinkGeometry::new(
                    bs.position,
                    ue.position,
                    link.geometry.carrier_hz,
                    &self.scenario.deployment.building,
                    &self.scenario.channel,
                );
                refresh_large_scale(link, &self.scenario);
            }
        }
        for i in 0..self.links.len() {
            self.refresh_fading(i, t_s);
        }
    }

    fn associate(&mut self, control: &TtiControl, all: bool) {
        let dep = &self.scenario.deployment;
        for (u, ue) in self.users.iter().enumerate() {
            let current = self.serving[u];
            let current_ok = current.is_some_and(|b| control.plans[b.index()].available_rbs() > 0);
            if !all && current_ok {
                continue;
            }
            let best = dep
                .base_stations
                .iter()
                .filter(|b| b.operator == ue.operator && control.plans[b.id.index()].available_rbs() > 0)
                .map(|b| {
                    let l = &self.links[u * dep.base_stations.len() + b.id.index()];
                    (b.id, b.max_tx_power_dbm - l.pl_db - l.shadow_db)
                })
                .fold(None::<(BsId, f64)>, |acc, (id, p)| match acc {
                    Some((_, bp)) if bp >= p => acc,
                    _ => Some((id, p)),
                })
                .map(|(id, _)| id);
            if best != current {
                self.serving[u] = best;
                self.est_valid[u] = false;
            }
        }
    }

    /// Interference-plus-signal estimate of every RB of `ue`'s serving link,
    /// assuming the serving BS uses its planned power and others emit `tx_w`.
    fn estimate_sinr(&self, u: usize, control: &TtiControl, tx_w: &[Vec<f64>]) -> Vec<f64> {
        let n_rb = self.n_rb();
        let Some(s) = self.serving[u] else {
            return vec![0.0; n_rb];
        };
        let dep = &self.scenario.deployment;
        let carrier = dep.bs(s).carrier;
        let n_bs = self.n_bs();
        let serv_gain = &self.links[u * n_bs + s.index()].gain;
        let mut interference = vec![self.noise_w; n_rb];
        for b in dep.base_stations.iter().filter(|b| b.id != s && b.carrier == carrier) {
            let g = &self.links[u * n_bs + b.id.index()].gain;
            let tx = &tx_w[b.id.index()];
            let leak = &control.plans[b.id.index()].leak_w;
            for rb in 0..n_rb {
                let p = tx[rb] + leak.get(rb).copied().unwrap_or(0.0);
                interference[rb] += p * g[rb];
            }
        }
        let p = &control.plans[s.index()].power_w;
        (0..n_rb).map(|rb| p[rb] * serv_gain[rb] / interference[rb]).collect()
    }

    /// Runs one TTI at [`World::t_ms`] under `control`.
    pub fn run_tti(&mut self, control: &TtiControl) -> TtiReport {
        let t_ms = self.t_ms;
        let t_s = ms_to_s(t_ms);
        let n_rb = self.n_rb();
        let n_bs = self.n_bs();
        let n_ue = self.users.len();
        let tti_s = self.scenario.run.tti_s;
        let rb_bw = self.scenario.deployment.rb_bandwidth_hz;
        assert_eq!(control.plans.len(), n_bs, "one plan per BS");

        // association and causal rate estimates use the previous TTI's channel
        self.associate(control, t_ms % ASSOCIATION_PERIOD_MS == 0);
        let snapshot: Vec<Vec<f64>> = if t_ms == 0 {
            control.plans.iter().map(|p| if p.active { p.power_w.clone() } else { vec![0.0; n_rb] }).collect()
        } else {
            self.last_tx_w.clone()
        };
        for u in 0..n_ue {
            if !self.est_valid[u] {
                self.est_sinr[u] = self.estimate_sinr(u, control, &snapshot);
                self.est_valid[u] = true;
            }
        }

        if t_ms > 0 {
            self.mobility.step(&mut self.users, t_s, tti_s);
            self.update_links(t_s);
        }

        // fixed grants
        let mut assign: Vec<Vec<Option<UeId>>> = vec![vec![None; n_rb]; n_bs];
        let mut planned_mcs: Vec<Option<u8>> = vec![None; n_ue];
        for g in &control.fixed {
            let plan = &control.plans[g.bs.index()];
            if self.serving[g.ue.index()] != Some(g.bs) || !plan.active {
                continue;
            }
            planned_mcs[g.ue.index()] = Some(g.mcs);
            for &rb in &g.rbs {
                if plan.power_w[rb as usize] > 0.0 && assign[g.bs.index()][rb as usize].is_none() {
                    assign[g.bs.index()][rb as usize] = Some(g.ue);
                }
            }
        }

        let mut attached: Vec<Vec<UeId>> = vec![Vec::new(); n_bs];
        for (u, s) in self.serving.iter().enumerate() {
            if let Some(b) = s {
                if planned_mcs[u].is_none() {
                    attached[b.index()].push(UeId(u as u32));
                }
            }
        }

        let mut pf_processed = Vec::new();
        for b in 0..n_bs {
            let plan = &control.plans[b];
            if !plan.active {
                continue;
            }
            let bs = &self.scenario.deployment.base_stations[b];
            let available: Vec<bool> = (0..n_rb).map(|rb| plan.power_w[rb] > 0.0 && assign[b][rb].is_none()).collect();
            let chosen = if bs.kind == BsKind::RoadSideUnit {
                round_robin(&attached[b], t_ms, &available)
            } else {
                let r_inst: Vec<Vec<f64>> = attached[b]
                    .iter()
                    .map(|ue| {
                        self.est_sinr[ue.index()]
                            .iter()
                            .map(|&s| {
                                self.mcs
                                    .mcs_for_snr(s)
                                    .map_or(0.0, |m| self.mcs.entry(m).spectral_efficiency_bps_per_hz * rb_bw)
                            })
                            .collect()
                    })
                    .collect();
                let out = pf_schedule(&attached[b], &r_inst, &self.sched, &available);
                pf_processed.push((bs.id, out.processed));
                out.assignment
            };
            for rb in 0..n_rb {
                if available[rb] {
                    assign[b][rb] = chosen[rb];
                }
            }
        }

        let mut tx_w = vec![vec![0.0; n_rb]; n_bs];
        let mut transmissions = Vec::new();
        for b in 0..n_bs {
            let plan = &control.plans[b];
            let mut rbs = Vec::new();
            for rb in 0..n_rb {
                if let Some(ue) = assign[b][rb] {
                    tx_w[b][rb] = plan.power_w[rb];
                    rbs.push(RbTx { rb: rb as u16, ue: Some(ue), power_dbm: w_to_dbm(plan.power_w[rb]) });
                }
            }
            if !rbs.is_empty() {
                transmissions.push(BsTx { bs: BsId(b as u32), rbs });
            }
        }
        let emitted: Vec<Vec<f64>> = (0..n_bs)
            .map(|b| {
                let leak = &control.plans[b].leak_w;
                let any = tx_w[b].iter().any(|&p| p > 0.0);
                (0..n_rb)
                    .map(|rb| tx_w[b][rb] + if any { leak.get(rb).copied().unwrap_or(0.0) } else { 0.0 })
                    .collect()
            })
            .collect();

        // realised SINR → MCS → bits
        let mut ues = Vec::with_capacity(n_ue);
        let mut decisions = Vec::new();
        let mut per_ue_rbs: Vec<Vec<u16>> = vec![Vec::new(); n_ue];
        for b in 0..n_bs {
            for rb in 0..n_rb {
                if let Some(ue) = assign[b][rb] {
                    per_ue_rbs[ue.index()].push(rb as u16);
                }
            }
        }
        for u in 0..n_ue {
            let ue = UeId(u as u32);
            let serving = self.serving[u];
            let rbs = &per_ue_rbs[u];
            let mut rec = UeTti { ue, serving_bs: serving, bits: 0, n_rbs: rbs.len() as u16, mcs: None, planned: false, plan_failure: false };
            if let (Some(s), false) = (serving, rbs.is_empty()) {
                let carrier = self.scenario.deployment.bs(s).carrier;
                let sinr = self.realised_sinr(u, s, carrier, rbs, &tx_w, &emitted);
                for (&rb, &g) in rbs.iter().zip(&sinr) {
                    decisions.push(RbDecision { ue, rb, mcs: self.mcs.mcs_for_snr(g).unwrap_or(0) });
                }
                if let Some(m) = planned_mcs[u] {
                    rec.planned = true;
                    let e = self.mcs.entry(m);
                    let ok = eesm_effective_snr(&sinr, e.beta_eesm).is_ok_and(|g| g >= e.threshold_lin());
                    if ok {
                        rec.mcs = Some(m);
                        rec.bits = self.mcs.bits(m, rbs.len(), rb_bw, tti_s);
                    } else {
                        rec.plan_failure = true;
                    }
                } else {
                    let d = select_mcs(&sinr, &self.mcs, rb_bw, tti_s);
                    rec.mcs = d.mcs;
                    rec.bits = d.bits;
                }
            }
            ues.push(rec);
        }

        for rec in &ues {
            if rec.serving_bs.is_some() {
                update_average_rate(&mut self.sched, rec.ue, rec.bits as f64 / tti_s);
            }
        }

        let victims = self
            .users
            .iter()
            .filter(|u| u.victim)
            .map(|v| {
                let mut i_w = 0.0;
                for bs in self.scenario.deployment.base_stations.iter().filter(|b| b.kind.is_indoor()) {
                    let g = &self.links[v.id.index() * n_bs + bs.id.index()].gain;
                    i_w += emitted[bs.id.index()].iter().zip(g).map(|(p, g)| p * g).sum::<f64>();
                }
                VictimInterference { ue: v.id, interference_w: i_w }
            })
            .collect();

        for u in 0..n_ue {
            self.est_sinr[u] = self.estimate_sinr(u, control, &emitted);
            self.est_valid[u] = true;
        }
        self.last_tx_w = emitted;
        self.t_ms += 1;

        TtiReport { t_ms, ues, transmissions, victims, pf_processed, decisions }
    }

    fn realised_sinr(&self, u: usize, s: BsId, carrier: Carrier, rbs: &[u16], tx_w: &[Vec<f64>], emitted: &[Vec<f64>]) -> Vec<f64> {
        let n_bs = self.n_bs();
        let serv_gain = &self.links[u * n_bs + s.index()].gain;
        let others: Vec<usize> = self
            .scenario
            .deployment
            .base_stations
            .iter()
            .filter(|b| b.id != s && b.carrier == carrier)
            .map(|b| b.id.index())
            .collect();
        rbs.iter()
            .map(|&rb| {
                let rb = rb as usize;
                let i: f64 = others.iter().map(|&b| emitted[b][rb] * self.links[u * n_bs + b].gain[rb]).sum();
                tx_w[s.index()][rb] * serv_gain[rb] / (self.noise_w + i)
            })
            .collect()
    }
}

fn refresh_large_scale(link: &mut LinkState, scenario: &Scenario) {
    link.pl_db = path_loss_db(&link.geometry, &scenario.channel).db;
    link.shadow_db = link.shadow_z * shadowing_sigma_db(&link.geometry);
}
