//! Online assignment templates driven by a certificate sampler: the prophet
//! IID model, the prophet-secretary model with one sample per agent, and the
//! secretary model.
//!
//! All three share one acceptance rule: the arriving agent's proposed
//! certificate is taken iff it is not the sentinel and no certificate accepted
//! so far blocks it.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::certifiers::{verify_certification, Certificate, Certifier};
use crate::error::{Error, Result};
use crate::model::{AgentId, Assignment, WeightFunction, WeightProfile, WeightSource};
use crate::samplers::CertificateSampler;
use crate::scalar::Scalar;

/// Running certification and the partial assignment it induces.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineState {
    pub certification: Vec<Certificate>,
    pub assignment: Assignment,
}

impl OnlineState {
    pub fn new(m: usize) -> Self {
        Self { certification: Vec::new(), assignment: Assignment::empty(m) }
    }

    /// Appends `proposal` for `agent` unless it is the sentinel or blocked by an accepted certificate.
    pub fn accept_step<C: Certifier + ?Sized>(&mut self, cert: &C, agent: AgentId, proposal: Certificate) -> bool {
        let Some(e) = proposal.element() else {
            return false;
        };
        if self.certification.iter().any(|c| cert.blocks(c, &proposal)) {
            return false;
        }
        self.certification.push(proposal);
        self.assignment.set(agent, Some(e));
        true
    }
}

/// Outcome of one online run.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineRun<S> {
    pub assignment: Assignment,
    /// Weight functions revealed to the algorithm, indexed by agent.
    pub realized: WeightProfile<S>,
    /// Sum of realized weights of the assigned elements.
    pub value: S,
    pub certification: Vec<Certificate>,
    /// Agents in the order they arrived.
    pub order: Vec<AgentId>,
    /// Length of the learning phase (secretary model only).
    pub tau: Option<usize>,
}

fn finish<S: Scalar>(state: OnlineState, realized: Vec<WeightFunction<S>>, order: Vec<AgentId>, tau: Option<usize>) -> OnlineRun<S> {
    let realized = WeightProfile::new(realized);
    let value = state
        .assignment
        .0
        .iter()
        .enumerate()
        .fold(S::zero(), |acc, (a, e)| acc + realized.agent(a).weight(*e));
    OnlineRun { assignment: state.assignment, realized, value, certification: state.certification, order, tau }
}

fn step<Smp, S, R>(
    sampler: &Smp,
    state: &mut OnlineState,
    profile: &WeightProfile<S>,
    proposer: AgentId,
    agent: AgentId,
    rng: &mut R,
) -> Result<()>
where
    Smp: CertificateSampler<S>,
    S: Scalar,
    R: Rng + ?Sized,
{
    let law = sampler.prepare(profile)?;
    let proposal = sampler.draw_agent(&law, proposer, rng)?;
    if proposal.element().is_some() && !sampler.certifier().is_certificate(&proposal) {
        return Err(Error::InvalidCertificate(format!("sampler {} proposed {proposal:?}", sampler.name())));
    }
    state.accept_step(sampler.certifier(), agent, proposal);
    if cfg!(debug_assertions) && !verify_certification(sampler.certifier(), sampler.system(), &state.certification)? {
        return Err(Error::Internal("accepted certificates are not a certification".into()));
    }
    Ok(())
}

/// Prophet IID template with `m` agents sharing the weight source.
///
/// Agents arrive in id order unless `shuffle` is set. At each step the
/// arriving weight is planted at a uniformly random position of a profile
/// whose other `m − 1` entries are fresh draws, and the sampler's proposal for
/// that position is offered to the arriving agent.
pub fn run_prophet_iid<Smp, S, D, R>(sampler: &Smp, dist: &D, m: usize, shuffle: bool, rng: &mut R) -> Result<OnlineRun<S>>
where
    Smp: CertificateSampler<S>,
    S: Scalar,
    D: WeightSource<S>,
    R: Rng + ?Sized,
{
    if m == 0 {
        return Err(Error::InvalidParameter("the prophet IID model needs at least one agent".into()));
    }
    let mut order: Vec<AgentId> = (0..m).collect();
    if shuffle {
        order.shuffle(rng);
    }
    let mut state = OnlineState::new(m);
    let mut realized = vec![WeightFunction::zero(); m];
    for &agent in &order {
        let r = dist.draw(rng);
        let slot = rng.random_range(0..m);
        let profile =
            WeightProfile::new((0..m).map(|j| if j == slot { r.clone() } else { dist.draw(rng) }).collect());
        step(sampler, &mut state, &profile, slot, agent, rng)?;
        realized[agent] = r;
    }
    Ok(finish(state, realized, order, None))
}

/// Prophet-secretary template using one sample per agent.
///
/// Samples are drawn for every agent first, then the real weights, then a
/// uniformly random arrival order. At step `t` the sampler sees real weights
/// for arrived agents and samples for the rest.
pub fn run_prophet_secretary_single_sample<Smp, S, D, R>(sampler: &Smp, dists: &[D], rng: &mut R) -> Result<OnlineRun<S>>
where
    Smp: CertificateSampler<S>,
    S: Scalar,
    D: WeightSource<S>,
    R: Rng + ?Sized,
{
    let m = dists.len();
    let samples: Vec<WeightFunction<S>> = dists.iter().map(|d| d.draw(rng)).collect();
    let reals: Vec<WeightFunction<S>> = dists.iter().map(|d| d.draw(rng)).collect();
    let mut order: Vec<AgentId> = (0..m).collect();
    order.shuffle(rng);
    let mut view = samples;
    let mut state = OnlineState::new(m);
    for &agent in &order {
        view[agent] = reals[agent].clone();
        let profile = WeightProfile::new(view.clone());
        step(sampler, &mut state, &profile, agent, agent, rng)?;
    }
    Ok(finish(state, reals, order, None))
}

/// Learning-phase probability and target ratio for blocking parameter `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecretarySchedule {
    pub k: usize,
    pub p: f64,
    pub alpha: f64,
}

impl SecretarySchedule {
    pub fn new(k: usize) -> Result<Self> {
        let (p, alpha) = p_alpha(k)?;
        Ok(Self { k, p, alpha })
    }

    /// Schedule with an explicit learning probability; `alpha` keeps the value for `k`.
    pub fn with_p(k: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("learning probability {p} outside [0,1]")));
        }
        Ok(Self { p, ..Self::new(k)? })
    }
}

/// `(1/e, 1/e)` for `k = 1`, else `(k^(−1/(k−1)), k^(−k/(k−1)))`.
pub fn p_alpha(k: usize) -> Result<(f64, f64)> {
    match k {
        0 => Err(Error::InvalidParameter("k must be at least 1".into())),
        1 => {
            let v = (-1.0f64).exp();
            Ok((v, v))
        }
        _ => {
            let kf = k as f64;
            let e = 1.0 / (kf - 1.0);
            Ok((kf.powf(-e), kf.powf(-kf * e)))
        }
    }
}

/// Secretary template on a fixed profile.
///
/// `τ ~ Bin(m, p)` agents of a uniformly random order are observed without
/// being assigned; every later agent is offered the sampler's proposal on the
/// profile of all agents seen so far, reindexed in arrival order so the
/// arriving agent comes last.
pub fn run_secretary<Smp, S, R>(
    sampler: &Smp,
    profile: &WeightProfile<S>,
    schedule: &SecretarySchedule,
    rng: &mut R,
) -> Result<OnlineRun<S>>
where
    Smp: CertificateSampler<S>,
    S: Scalar,
    R: Rng + ?Sized,
{
    let m = profile.num_agents();
    let tau = Binomial::new(m as u64, schedule.p)
        .map_err(|e| Error::InvalidParameter(format!("learning probability {}: {e}", schedule.p)))?
        .sample(rng) as usize;
    let mut order: Vec<AgentId> = (0..m).collect();
    order.shuffle(rng);
    run_secretary_with(sampler, profile, &order, tau, rng)
}

/// Secretary template with a given arrival order and learning-phase length.
pub fn run_secretary_with<Smp, S, R>(
    sampler: &Smp,
    profile: &WeightProfile<S>,
    order: &[AgentId],
    tau: usize,
    rng: &mut R,
) -> Result<OnlineRun<S>>
where
    Smp: CertificateSampler<S>,
    S: Scalar,
    R: Rng + ?Sized,
{
    let m = profile.num_agents();
    let mut seen = vec![false; m];
    if order.len() != m || order.iter().any(|&a| a >= m || std::mem::replace(&mut seen[a], true)) {
        return Err(Error::InvalidParameter("arrival order is not a permutation of the agents".into()));
    }
    if tau > m {
        return Err(Error::InvalidParameter(format!("learning phase {tau} longer than {m} agents")));
    }
    let mut state = OnlineState::new(m);
    for t in tau..m {
        let prefix = WeightProfile::new(order[..=t].iter().map(|&a| profile.agent(a).clone()).collect());
        step(sampler, &mut state, &prefix, t, order[t], rng)?;
    }
    Ok(finish(state, profile.agents().to_vec(), order.to_vec(), Some(tau)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifiers::{hypergraph_certifier, partition_certifier};
    use crate::matroids::PartitionMatroid;
    use crate::model::{is_feasible, Hypergraph, WeightDistribution};
    use crate::samplers::{DirectedSampler, HmSampler};
    use crate::scalar::Rational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> Rational {
        Rational::from_ratio(n, 1)
    }

    #[test]
    fn p_alpha_values() {
        let (p1, a1) = p_alpha(1).unwrap();
        assert!((p1 - 0.367_879_441_171_442_3).abs() < 1e-15 && p1 == a1);
        assert_eq!(p_alpha(2).unwrap(), (0.5, 0.25));
        let (p3, a3) = p_alpha(3).unwrap();
        assert!((p3 - 3f64.powf(-0.5)).abs() < 1e-15);
        assert!((a3 - 3f64.powf(-1.5)).abs() < 1e-15);
        assert!(matches!(p_alpha(0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn accept_step_rules() {
        let hg = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let cert = hypergraph_certifier(&hg);
        let mut state = OnlineState::new(3);
        assert!(!state.accept_step(&cert, 0, Certificate::Bottom));
        assert_eq!(state, OnlineState::new(3));
        assert!(state.accept_step(&cert, 0, Certificate::Edge { edge: 0 }));
        assert!(!state.accept_step(&cert, 1, Certificate::Edge { edge: 1 }));
        assert_eq!(state.assignment, Assignment(vec![Some(0), None, None]));
    }

    #[test]
    fn single_agent_iid_accepts_proposal() {
        let hg = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        let sampler = HmSampler::new(&hg, 2);
        let d = WeightDistribution::point(WeightFunction::single(0, q(2)).unwrap());
        let run = run_prophet_iid(&sampler, &d, 1, false, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(run.assignment, Assignment(vec![Some(0)]));
        assert_eq!(run.value, q(2));
    }

    #[test]
    fn degenerate_disjoint_edges_reach_opt() {
        // every agent wants its own edge; the point distribution makes the LP integral
        let hg = Hypergraph::new(6, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let sampler = HmSampler::new(&hg, 2);
        let dists: Vec<_> = (0..3)
            .map(|i| WeightDistribution::point(WeightFunction::single(i, q(1)).unwrap()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let run = run_prophet_secretary_single_sample(&sampler, &dists, &mut rng).unwrap();
            assert_eq!(run.value, q(3));
        }
        let d = WeightDistribution::point(WeightFunction::new([(0, q(1))]).unwrap());
        let run = run_prophet_iid(&sampler, &d, 1, false, &mut rng).unwrap();
        assert_eq!(run.value, q(1));
    }

    #[test]
    fn first_arrival_gets_its_optimal_element() {
        let pm = PartitionMatroid::new(vec![vec![0, 1], vec![2]]).unwrap();
        let sampler = DirectedSampler::new(&pm, partition_certifier(&pm));
        let ws = [
            WeightFunction::new([(0, q(2)), (2, q(1))]).unwrap(),
            WeightFunction::new([(1, q(3)), (2, q(2))]).unwrap(),
        ];
        // two optima of value 4; the brute-force tie-break picks the certified one
        let dists: Vec<_> = ws.iter().cloned().map(WeightDistribution::point).collect();
        let (opt, _) = crate::offline::offline_opt_bruteforce(
            &pm,
            &WeightProfile::new(ws.to_vec()),
            crate::offline::DEFAULT_BUDGET,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let run = run_prophet_secretary_single_sample(&sampler, &dists, &mut rng).unwrap();
            let first = run.order[0];
            assert_eq!(run.assignment.get(first), opt.get(first));
        }
    }

    #[test]
    fn secretary_edge_cases() {
        let hg = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        let sampler = HmSampler::new(&hg, 2);
        let p = WeightProfile::new(vec![WeightFunction::single(0, q(1)).unwrap()]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let all_skipped = run_secretary_with(&sampler, &p, &[0], 1, &mut rng).unwrap();
        assert_eq!(all_skipped.assignment, Assignment::empty(1));
        assert_eq!(all_skipped.value, q(0));
        let taken = run_secretary_with(&sampler, &p, &[0], 0, &mut rng).unwrap();
        assert_eq!(taken.assignment, Assignment(vec![Some(0)]));
        let forced = SecretarySchedule::with_p(2, 1.0).unwrap();
        assert_eq!(run_secretary(&sampler, &p, &forced, &mut rng).unwrap().tau, Some(1));
        assert!(run_secretary_with(&sampler, &p, &[0, 0], 0, &mut rng).is_err());
    }

    #[test]
    fn runs_are_feasible_and_replayable() {
        let hg = Hypergraph::new(5, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4], vec![0, 4]]).unwrap();
        let sampler = HmSampler::new(&hg, 2);
        let d = WeightDistribution::uniform(vec![
            WeightFunction::new([(0, q(1)), (2, q(3))]).unwrap(),
            WeightFunction::new([(1, q(2)), (3, q(1)), (4, q(2))]).unwrap(),
            WeightFunction::zero(),
        ])
        .unwrap();
        for seed in 0..30 {
            let a = run_prophet_iid(&sampler, &d, 4, seed % 2 == 0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = run_prophet_iid(&sampler, &d, 4, seed % 2 == 0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(a, b);
            assert!(is_feasible(&hg, &a.assignment).unwrap());
        }
    }
}
