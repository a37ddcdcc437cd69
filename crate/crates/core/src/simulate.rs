//! Exact Gillespie simulation of the accelerated exclusion process.
//!
//! The conductance field takes only two values, so each event is sampled in
//! two stages: an exponential holding time of rate `Lambda = sum_x xi(x)`,
//! then a slow-vs-normal class flip followed by a uniform pick inside the
//! class. Time runs on the micro clock; a regime's speedup factor converts a
//! macro observation time `t` into the micro horizon `t * speedup`.
//!
//! Replicas are independent ChaCha streams derived from `(base_seed,
//! replica index)`, fanned out with rayon and reduced in replica order, so a
//! fixed seed reproduces every output byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, LatticeSpec, TimeScaleRegime};
use crate::profile::{Profile, TestFunction};

/// Default per-replica event budget.
pub const DEFAULT_EVENT_BUDGET: u64 = 1 << 33;

/// Micro time units per macro time unit: `k^2 n^(2+theta)` in the
/// subcritical regime, `k^2 n^(1+beta)` in the critical one.
pub fn speedup_factor(spec: &LatticeSpec, regime: TimeScaleRegime) -> f64 {
    let n = spec.n() as f64;
    let k2 = (spec.k() * spec.k()) as f64;
    match regime {
        TimeScaleRegime::Subcritical { theta } => k2 * n.powf(2.0 + theta),
        TimeScaleRegime::Critical => k2 * n.powf(1.0 + spec.beta()),
    }
}

/// Two-class edge sampler with precomputed class tables.
#[derive(Debug, Clone)]
pub struct EdgeSampler {
    lambda: f64,
    inv_lambda: f64,
    p_slow: f64,
    slow_edges: Vec<usize>,
    normal_edges: Vec<usize>,
}

impl EdgeSampler {
    pub fn new(spec: &LatticeSpec) -> Self {
        let slow_edges: Vec<usize> = (1..=spec.k()).map(|j| j * spec.n() - 1).collect();
        let normal_edges: Vec<usize> =
            (0..spec.sites()).filter(|&x| !spec.is_slow_edge(x)).collect();
        let lambda = spec.total_rate();
        let p_slow = spec.k() as f64 * spec.slow_rate() / lambda;
        Self { lambda, inv_lambda: 1.0 / lambda, p_slow, slow_edges, normal_edges }
    }

    /// Total jump rate `Lambda`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    fn holding(&self, rng: &mut ChaCha8Rng) -> f64 {
        let e: f64 = rng.sample(Exp1);
        e * self.inv_lambda
    }

    #[inline]
    fn edge(&self, rng: &mut ChaCha8Rng) -> usize {
        if rng.random::<f64>() < self.p_slow {
            self.slow_edges[rng.random_range(0..self.slow_edges.len())]
        } else {
            self.normal_edges[rng.random_range(0..self.normal_edges.len())]
        }
    }
}

/// One Gillespie event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub edge: usize,
    pub holding: f64,
    pub changed: bool,
}

/// Configuration, micro clock, event counter, and the replica's own RNG.
#[derive(Debug, Clone)]
pub struct SimState {
    pub config: Configuration,
    micro_time: f64,
    events: u64,
    rng: ChaCha8Rng,
}

impl SimState {
    pub fn new(config: Configuration, seed: u64) -> Self {
        Self { config, micro_time: 0.0, events: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Replica streams share `base_seed` and differ in the ChaCha stream
    /// index, so they never overlap.
    pub fn for_replica(config: Configuration, base_seed: u64, replica: u64) -> Self {
        Self { config, micro_time: 0.0, events: 0, rng: replica_rng(base_seed, replica) }
    }

    pub fn micro_time(&self) -> f64 {
        self.micro_time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Advances one event: exponential holding time, two-class edge pick,
    /// swap.
    pub fn step(&mut self, sampler: &EdgeSampler) -> Event {
        let holding = sampler.holding(&mut self.rng);
        self.micro_time += holding;
        let edge = sampler.edge(&mut self.rng);
        let changed = self.config.swap_in_place(edge);
        self.events += 1;
        Event { edge, holding, changed }
    }
}

/// Deterministic per-replica RNG stream.
pub fn replica_rng(base_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(replica);
    rng
}

/// Runs the state to macro time `macro_t`, leaving the configuration as it
/// is the instant before the first holding time that crosses the horizon.
pub fn run_until(
    state: &mut SimState,
    sampler: &EdgeSampler,
    speedup: f64,
    macro_t: f64,
    budget: u64,
) -> Result<()> {
    run_until_observed(state, sampler, speedup, macro_t, budget, |_, _| {})
}

/// Same as [`run_until`], reporting every constant-configuration segment
/// `(configuration, micro duration)` to `observe`, including the final
/// partial segment. Exact time integrals of configuration functionals are
/// sums of `value * duration` over segments.
pub fn run_until_observed(
    state: &mut SimState,
    sampler: &EdgeSampler,
    speedup: f64,
    macro_t: f64,
    budget: u64,
    mut observe: impl FnMut(&Configuration, f64),
) -> Result<()> {
    if !(macro_t.is_finite() && macro_t >= 0.0) {
        return Err(Error::Usage(format!("macro time must be finite and >= 0, got {macro_t}")));
    }
    if !(speedup.is_finite() && speedup > 0.0) {
        return Err(Error::Usage(format!("speedup must be finite and > 0, got {speedup}")));
    }
    let target = macro_t * speedup;
    if target < state.micro_time {
        return Err(Error::Usage(format!(
            "macro time {macro_t} lies before the current micro time {}",
            state.micro_time
        )));
    }
    loop {
        let holding = sampler.holding(&mut state.rng);
        if state.micro_time + holding >= target {
            // The crossing holding time never completes; by memorylessness
            // the clock restarts fresh from the horizon.
            observe(&state.config, target - state.micro_time);
            state.micro_time = target;
            return Ok(());
        }
        observe(&state.config, holding);
        state.micro_time += holding;
        if state.events >= budget {
            return Err(Error::EventBudget {
                events: state.events,
                budget,
                micro_time: state.micro_time,
                macro_time: macro_t,
            });
        }
        let edge = sampler.edge(&mut state.rng);
        state.config.swap_in_place(edge);
        state.events += 1;
    }
}

/// Independent Bernoulli occupations with `P(eta(x) = 1) = gamma(x/(n k))`.
pub fn sample_initial(spec: &LatticeSpec, gamma: &Profile, rng: &mut ChaCha8Rng) -> Configuration {
    let nk = spec.sites() as f64;
    let values: Vec<f64> = (0..spec.sites()).map(|x| gamma.at(x as f64 / nk)).collect();
    Configuration::from_fn(spec.sites(), |x| rng.random::<f64>() < values[x])
}

/// Replica fan-out parameters shared by the Monte Carlo estimators.
#[derive(Debug, Clone)]
pub struct ReplicaPlan {
    pub replicas: usize,
    pub base_seed: u64,
    pub regime: TimeScaleRegime,
    pub event_budget: u64,
}

impl ReplicaPlan {
    pub fn new(replicas: usize, base_seed: u64, regime: TimeScaleRegime) -> Result<Self> {
        if replicas == 0 {
            return Err(Error::Usage("need at least one replica".into()));
        }
        Ok(Self { replicas, base_seed, regime, event_budget: DEFAULT_EVENT_BUDGET })
    }

    pub fn with_event_budget(mut self, budget: u64) -> Self {
        self.event_budget = budget;
        self
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
}

pub(crate) fn mean_stderr(xs: &[f64]) -> Estimate {
    let r = xs.len();
    let mean = xs.iter().sum::<f64>() / r as f64;
    let stderr = if r >= 2 {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1) as f64;
        (var / r as f64).sqrt()
    } else {
        0.0
    };
    Estimate { mean, stderr, replicas: r }
}

/// Per-replica box-average trajectories: `out[replica][time][box]` holds the
/// box occupation density at each requested macro time.
pub fn box_average_trajectories(
    spec: &LatticeSpec,
    gamma: &Profile,
    plan: &ReplicaPlan,
    macro_times: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_times(macro_times)?;
    let sampler = EdgeSampler::new(spec);
    let speedup = speedup_factor(spec, plan.regime);
    let n = spec.n() as f64;
    (0..plan.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(plan.base_seed, r as u64);
            let init = sample_initial(spec, gamma, &mut rng);
            let mut state = SimState { config: init, micro_time: 0.0, events: 0, rng };
            let mut rows = Vec::with_capacity(macro_times.len());
            for &t in macro_times {
                run_until(&mut state, &sampler, speedup, t, plan.event_budget)?;
                rows.push(
                    state.config.box_counts(spec).iter().map(|&c| c as f64 / n).collect(),
                );
            }
            Ok(rows)
        })
        .collect()
}

/// Per-replica configuration snapshots: `out[replica][time]` is the exact
/// configuration at each requested macro time.
pub fn configurations_at_times(
    spec: &LatticeSpec,
    gamma: &Profile,
    plan: &ReplicaPlan,
    macro_times: &[f64],
) -> Result<Vec<Vec<Configuration>>> {
    check_times(macro_times)?;
    let sampler = EdgeSampler::new(spec);
    let speedup = speedup_factor(spec, plan.regime);
    (0..plan.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(plan.base_seed, r as u64);
            let init = sample_initial(spec, gamma, &mut rng);
            let mut state = SimState { config: init, micro_time: 0.0, events: 0, rng };
            let mut snaps = Vec::with_capacity(macro_times.len());
            for &t in macro_times {
                run_until(&mut state, &sampler, speedup, t, plan.event_budget)?;
                snaps.push(state.config.clone());
            }
            Ok(snaps)
        })
        .collect()
}

/// Final configurations of independent replicas run to macro time `t`.
pub fn final_configurations(
    spec: &LatticeSpec,
    gamma: &Profile,
    plan: &ReplicaPlan,
    t: f64,
) -> Result<Vec<Configuration>> {
    let rows = configurations_at_times(spec, gamma, plan, &[t])?;
    Ok(rows.into_iter().map(|mut snaps| snaps.pop().expect("one snapshot per replica")).collect())
}

/// Box-fluctuation statistic under the subcritical acceleration:
/// mean over replicas of
/// `| int_0^t (n k)^-1 sum_x G(x/(n k)) (eta_s(x) - box average) ds |`,
/// the time integral taken exactly over constant-configuration segments.
pub fn mixing_statistic(
    spec: &LatticeSpec,
    gamma: &Profile,
    plan: &ReplicaPlan,
    g: &TestFunction,
    t: f64,
) -> Result<Estimate> {
    if !matches!(plan.regime, TimeScaleRegime::Subcritical { .. }) {
        return Err(Error::Usage("the mixing statistic runs in the subcritical regime".into()));
    }
    integrated_statistic(spec, gamma, plan, t, mixing_integrand_fn(spec, g))
}

/// Value of the mixing integrand on one configuration.
pub fn mixing_integrand(spec: &LatticeSpec, g: &TestFunction, cfg: &Configuration) -> f64 {
    mixing_integrand_fn(spec, g)(cfg)
}

fn mixing_integrand_fn(spec: &LatticeSpec, g: &TestFunction) -> impl Fn(&Configuration) -> f64 {
    let n = spec.n();
    let k = spec.k();
    let nk = spec.sites();
    let nkf = nk as f64;
    // Weights are centered per box against the box's first site, which makes
    // every term vanish identically for spatially constant G.
    let gv: Vec<f64> = (0..nk).map(|x| g.at(x as f64 / nkf)).collect();
    let d: Vec<f64> = (0..nk).map(|x| gv[x] - gv[(x / n) * n]).collect();
    let dsum: Vec<f64> = (0..k).map(|i| d[i * n..(i + 1) * n].iter().sum()).collect();
    let inv_n = 1.0 / n as f64;
    move |cfg: &Configuration| {
        let mut v = 0.0;
        for i in 0..k {
            let start = i * n;
            let mut a = 0.0;
            let mut c = 0u64;
            for x in start..start + n {
                let occ = cfg.occ(x);
                c += occ;
                if occ == 1 {
                    a += d[x];
                }
            }
            v += a - (c as f64 * inv_n) * dsum[i];
        }
        v / nkf
    }
}

/// Boundary-replacement statistic under the critical acceleration:
/// mean over replicas of
/// `| int_0^t k sum_i G(i/k) (eta_s(i n) + eta_s((i+1) n - 1) - 2 box avg) ds |`.
pub fn replacement_statistic(
    spec: &LatticeSpec,
    gamma: &Profile,
    plan: &ReplicaPlan,
    g: &TestFunction,
    t: f64,
) -> Result<Estimate> {
    if plan.regime != TimeScaleRegime::Critical {
        return Err(Error::Usage("the replacement statistic runs in the critical regime".into()));
    }
    integrated_statistic(spec, gamma, plan, t, replacement_integrand_fn(spec, g))
}

/// Value of the replacement integrand on one configuration. Vanishes
/// identically when every box is flat, in particular on the full lattice.
pub fn replacement_integrand(spec: &LatticeSpec, g: &TestFunction, cfg: &Configuration) -> f64 {
    replacement_integrand_fn(spec, g)(cfg)
}

fn replacement_integrand_fn(
    spec: &LatticeSpec,
    g: &TestFunction,
) -> impl Fn(&Configuration) -> f64 {
    let n = spec.n();
    let kf = spec.k() as f64;
    let gi: Vec<f64> = (0..spec.k()).map(|i| g.at(i as f64 / kf)).collect();
    let inv_n = 1.0 / n as f64;
    move |cfg: &Configuration| {
        let mut v = 0.0;
        for (i, &gval) in gi.iter().enumerate() {
            let start = i * n;
            let mut c = 0u64;
            for x in start..start + n {
                c += cfg.occ(x);
            }
            let ends = (cfg.occ(start) + cfg.occ(start + n - 1)) as f64;
            v += gval * (ends - 2.0 * (c as f64 * inv_n));
        }
        v * kf
    }
}

fn integrated_statistic(
    spec: &LatticeSpec,
    gamma: &Profile,
    plan: &ReplicaPlan,
    t: f64,
    value: impl Fn(&Configuration) -> f64 + Sync,
) -> Result<Estimate> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Usage(format!("macro time must be finite and >= 0, got {t}")));
    }
    let sampler = EdgeSampler::new(spec);
    let speedup = speedup_factor(spec, plan.regime);
    let samples: Vec<f64> = (0..plan.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(plan.base_seed, r as u64);
            let init = sample_initial(spec, gamma, &mut rng);
            let mut state = SimState { config: init, micro_time: 0.0, events: 0, rng };
            let mut acc = 0.0;
            run_until_observed(&mut state, &sampler, speedup, t, plan.event_budget, |cfg, dt| {
                acc += value(cfg) * dt;
            })?;
            Ok(acc.abs() / speedup)
        })
        .collect::<Result<_>>()?;
    Ok(mean_stderr(&samples))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Usage("need at least one macro time".into()));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Usage("macro times must be strictly increasing".into()));
        }
    }
    if !(times[0].is_finite() && times[0] >= 0.0) {
        return Err(Error::Usage("macro times must be finite and >= 0".into()));
    }
    Ok(())
}
