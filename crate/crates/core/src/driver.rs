//! Runs simulations, offline solves and sampler checks against a loaded [`Instance`].

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certifiers::{matroid_certifier, Certificate};
use crate::error::{Error, Result};
use crate::harness::{
    iid_trial, par_map, pss_trial, run_trials, secretary_profile_seed, secretary_trial, trial_rng, Experiment, Model,
};
use crate::instance::{Instance, System};
use crate::model::{sample_profile, Assignment, IndependenceSystem, WeightDistribution, WeightProfile};
use crate::offline::{offline_opt_bruteforce, DEFAULT_BUDGET};
use crate::online::SecretarySchedule;
use crate::samplers::{verify_sampler, CertificateSampler, DirectedSampler, HmSampler, MatchoidSampler, SamplerReport, VerifyMode};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Hm,
    Directed,
    Matchoid,
}

impl SamplerKind {
    /// The only sampler that accepts `system`.
    pub fn for_system(system: &System) -> Self {
        match system {
            System::Hypergraph(_) => SamplerKind::Hm,
            System::Matroid(_) => SamplerKind::Directed,
            System::Matchoid(_) => SamplerKind::Matchoid,
        }
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hm" => Ok(SamplerKind::Hm),
            "directed" => Ok(SamplerKind::Directed),
            "matchoid" => Ok(SamplerKind::Matchoid),
            other => Err(Error::InvalidParameter(format!("unknown sampler '{other}' (expected hm, directed or matchoid)"))),
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerKind::Hm => "hm",
            SamplerKind::Directed => "directed",
            SamplerKind::Matchoid => "matchoid",
        })
    }
}

impl IndependenceSystem for System {
    fn ground_size(&self) -> usize {
        System::ground_size(self)
    }

    fn is_independent(&self, set: &[crate::model::Element]) -> bool {
        match self {
            System::Hypergraph(h) => h.is_independent(set),
            System::Matroid(m) => m.is_independent(set),
            System::Matchoid(m) => m.is_independent(set),
        }
    }
}

/// Work that needs a concrete sampler; see [`with_sampler`].
pub trait SamplerTask<S: Scalar> {
    type Output;

    fn run<Smp: CertificateSampler<S>>(self, sampler: &Smp) -> Result<Self::Output>;
}

/// Builds the sampler `kind` over `system` and hands it to `task`.
pub fn with_sampler<S: Scalar, T: SamplerTask<S>>(system: &System, kind: SamplerKind, task: T) -> Result<T::Output> {
    match (kind, system) {
        (SamplerKind::Hm, System::Hypergraph(h)) => task.run(&HmSampler::new(h, h.k())),
        (SamplerKind::Directed, System::Matroid(m)) => task.run(&DirectedSampler::new(m, matroid_certifier(m))),
        (SamplerKind::Matchoid, System::Matchoid(mc)) => task.run(&MatchoidSampler::new(mc)),
        (kind, system) => Err(Error::InvalidParameter(format!(
            "sampler '{kind}' does not apply to a {} system (use '{}')",
            system.kind(),
            SamplerKind::for_system(system)
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub model: Model,
    pub trials: usize,
    pub seed: u64,
    /// Random arrival order in the IID model.
    pub shuffle: bool,
    /// Secretary learning probability; defaults to the one for the sampler's `k`.
    pub p: Option<f64>,
    /// Overrides the sampler's blocking parameter when picking the secretary schedule.
    pub k: Option<usize>,
    /// Secretary trials sharing one adversarial profile.
    pub orders: usize,
}

impl SimulationConfig {
    pub fn new(model: Model, trials: usize, seed: u64) -> Self {
        Self { model, trials, seed, shuffle: false, p: None, k: None, orders: 1 }
    }
}

struct Simulate<'a, S> {
    dists: Vec<WeightDistribution<S>>,
    shared: bool,
    config: &'a SimulationConfig,
}

impl<S: Scalar> SamplerTask<S> for Simulate<'_, S> {
    type Output = Experiment<S>;

    fn run<Smp: CertificateSampler<S>>(self, sampler: &Smp) -> Result<Experiment<S>> {
        let cfg = self.config;
        let m = self.dists.len();
        match cfg.model {
            Model::Iid => {
                if !self.shared {
                    return Err(Error::InvalidParameter("the iid model needs one distribution shared by all agents".into()));
                }
                run_trials(cfg.trials, cfg.seed, |_, rng| {
                    iid_trial(sampler, &self.dists[0], m, cfg.shuffle, rng).map(|(run, opt)| (run.value, opt))
                })
            }
            Model::Pss => run_trials(cfg.trials, cfg.seed, |_, rng| {
                pss_trial(sampler, &self.dists, rng).map(|(run, opt)| (run.value, opt))
            }),
            Model::Secretary => {
                let k = cfg.k.unwrap_or_else(|| sampler.k());
                let schedule = match cfg.p {
                    Some(p) => SecretarySchedule::with_p(k, p)?,
                    None => SecretarySchedule::new(k)?,
                };
                let orders = cfg.orders.max(1);
                let groups = cfg.trials.div_ceil(orders);
                let profiles = par_map(groups, |g| {
                    let mut rng = trial_rng(secretary_profile_seed(cfg.seed, g * orders, orders));
                    let profile = sample_profile(&self.dists, &mut rng);
                    let (_, opt) = offline_opt_bruteforce(sampler.system(), &profile, DEFAULT_BUDGET)?;
                    Ok((profile, opt))
                })?;
                run_trials(cfg.trials, cfg.seed, |t, rng| {
                    let (profile, opt) = &profiles[t / orders];
                    Ok((secretary_trial(sampler, profile, &schedule, rng)?.value, opt.clone()))
                })
            }
        }
    }
}

/// Runs `config.trials` trials of the online model on `instance`.
///
/// The IID model needs all agents to share one distribution. Secretary trials
/// are grouped `config.orders` at a time; each group shares a profile drawn
/// from the agents' distributions and varies only the arrival order.
pub fn simulate<S: Scalar>(instance: &Instance, kind: SamplerKind, config: &SimulationConfig) -> Result<Experiment<S>> {
    let dists: Vec<WeightDistribution<S>> = instance.per_agent().iter().map(|d| d.convert()).collect();
    let shared = dists.iter().all(|d| d.atoms() == dists[0].atoms());
    with_sampler(&instance.system, kind, Simulate { dists, shared, config })
}

/// Profile used by `solve` and `verify`: each agent's first atom, or one draw
/// from the distributions when a seed is given.
pub fn instance_profile<S: Scalar>(instance: &Instance, seed: Option<u64>) -> WeightProfile<S> {
    let dists: Vec<WeightDistribution<S>> = instance.per_agent().iter().map(|d| d.convert()).collect();
    match seed {
        Some(seed) => sample_profile(&dists, &mut trial_rng(seed)),
        None => WeightProfile::new(dists.iter().map(|d| d.atoms()[0].1.clone()).collect()),
    }
}

/// Brute-force optimum of `profile` on the instance's system.
pub fn solve<S: Scalar>(instance: &Instance, profile: &WeightProfile<S>) -> Result<(Assignment, S)> {
    offline_opt_bruteforce(&instance.system, profile, DEFAULT_BUDGET)
}

struct Verify<'a, S, R> {
    profile: &'a WeightProfile<S>,
    mode: VerifyMode,
    trials: usize,
    rng: &'a mut R,
}

impl<S: Scalar, R: Rng> SamplerTask<S> for Verify<'_, S, R> {
    type Output = SamplerReport<S>;

    fn run<Smp: CertificateSampler<S>>(self, sampler: &Smp) -> Result<SamplerReport<S>> {
        verify_sampler(sampler, self.profile, self.mode, self.trials, self.rng)
    }
}

/// Checks the sampler `kind` on `profile`; `trials` only matters in Monte Carlo mode.
pub fn verify<S: Scalar>(
    instance: &Instance,
    kind: SamplerKind,
    profile: &WeightProfile<S>,
    mode: VerifyMode,
    trials: usize,
    seed: u64,
) -> Result<SamplerReport<S>> {
    let mut rng = trial_rng(seed);
    with_sampler(&instance.system, kind, Verify { profile, mode, trials, rng: &mut rng })
}

struct Draw<'a, S> {
    profile: &'a WeightProfile<S>,
    seed: u64,
}

impl<S: Scalar> SamplerTask<S> for Draw<'_, S> {
    type Output = Vec<Certificate>;

    fn run<Smp: CertificateSampler<S>>(self, sampler: &Smp) -> Result<Vec<Certificate>> {
        Ok(sampler.sample(self.profile, &mut trial_rng(self.seed))?.per_agent)
    }
}

/// One draw of the sampler's per-agent certificates on `profile`.
pub fn draw_certificates<S: Scalar>(
    instance: &Instance,
    kind: SamplerKind,
    profile: &WeightProfile<S>,
    seed: u64,
) -> Result<Vec<Certificate>> {
    with_sampler(&instance.system, kind, Draw { profile, seed })
}
