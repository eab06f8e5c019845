//! Certificate samplers: LP rounding for hypergraphs, the deterministic
//! optimum-as-certificate sampler for directed certifiers, and LP rounding
//! with matroid decompositions for matchoids.
//!
//! A sampler is split into [`CertificateSampler::prepare`], which does the
//! deterministic work for a profile (LP solve, decomposition, brute force), and
//! [`CertificateSampler::draw_agent`], which draws one agent's certificate
//! from the prepared law. Exact per-agent blocking probabilities are exposed so
//! the sampler conditions can be checked without sampling noise.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certifiers::{
    hypergraph_certifier, independent_sets, matchoid_certifier, random_independent_set, Certificate,
    Certifier, DirectedCertifier, HypergraphCertifier, MatchoidCertifier,
};
use crate::error::{Error, Result};
use crate::matroids::{Matchoid, Matroid};
use crate::model::{AgentId, Assignment, Element, HypergraphLike, IndependenceSystem, WeightProfile};
use crate::offline::simplex::LpOptions;
use crate::offline::{
    decompose_polytope_point, offline_opt_bruteforce, solve_hm_lp_with, solve_matchoid_lp_with,
    ConvexDecomposition, LpSolution, DEFAULT_BUDGET,
};
use crate::scalar::Scalar;

/// Ground sets up to this size get exhaustive blocking probes.
pub const EXHAUSTIVE_PROBE_LIMIT: usize = 6;
/// Number of probes drawn when exhaustive probing is out of reach.
pub const RANDOM_PROBES: usize = 2000;

/// One certificate per agent, possibly the sentinel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SamplerOutput {
    pub per_agent: Vec<Certificate>,
}

pub trait CertificateSampler<S: Scalar>: Sync {
    type Law: Send + Sync;
    type Cert: Certifier;
    type System: IndependenceSystem + ?Sized;

    fn name(&self) -> &'static str;
    fn certifier(&self) -> &Self::Cert;
    fn system(&self) -> &Self::System;
    /// Blocking bound the sampler is expected to respect.
    fn k(&self) -> usize;

    fn prepare(&self, profile: &WeightProfile<S>) -> Result<Self::Law>;
    fn draw_agent<R: Rng + ?Sized>(&self, law: &Self::Law, a: AgentId, rng: &mut R) -> Result<Certificate>;

    /// Exact `E[w_a(e_a)]` summed over agents.
    fn expected_value(&self, law: &Self::Law, profile: &WeightProfile<S>) -> S;
    /// Exact probability that agent `a`'s certificate blocks `probe`.
    fn blocking_probability(&self, law: &Self::Law, a: AgentId, probe: &Certificate) -> S;
    /// Certificates against which blocking mass is measured.
    fn probes<R: Rng + ?Sized>(&self, law: &Self::Law, profile: &WeightProfile<S>, rng: &mut R) -> Vec<Certificate>;

    fn draw<R: Rng + ?Sized>(&self, law: &Self::Law, m: usize, rng: &mut R) -> Result<SamplerOutput> {
        let per_agent = (0..m).map(|a| self.draw_agent(law, a, rng)).collect::<Result<_>>()?;
        Ok(SamplerOutput { per_agent })
    }

    fn sample<R: Rng + ?Sized>(&self, profile: &WeightProfile<S>, rng: &mut R) -> Result<SamplerOutput> {
        let law = self.prepare(profile)?;
        self.draw(&law, profile.num_agents(), rng)
    }
}

/// Draws an item with probability proportional to its weight; `None` if all weights vanish.
fn pick_weighted<'a, T, S: Scalar, R: Rng + ?Sized>(items: &'a [(T, S)], rng: &mut R) -> Option<&'a T> {
    let total: f64 = items.iter().map(|(_, w)| w.as_f64()).sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (t, w) in items {
        let w = w.as_f64();
        if w <= 0.0 {
            continue;
        }
        last = Some(t);
        if u < w {
            return Some(t);
        }
        u -= w;
    }
    last
}

fn lp_expected_value<S: Scalar>(lp: &LpSolution<S>, profile: &WeightProfile<S>) -> S {
    let mut total = S::zero();
    for (a, xa) in lp.x.iter().enumerate() {
        for (e, v) in xa {
            total += v.clone() * profile.agent(a).get(*e);
        }
    }
    total
}

/// Rounds the hypergraph-matching LP: agent `a` draws `e` with probability `x*_a(e)`.
pub struct HmSampler<'a, H: ?Sized> {
    hg: &'a H,
    cert: HypergraphCertifier<'a, H>,
    k: usize,
    pub options: LpOptions,
}

impl<'a, H: HypergraphLike + ?Sized> HmSampler<'a, H> {
    /// `k` is the largest edge size, the blocking bound.
    pub fn new(hg: &'a H, k: usize) -> Self {
        Self { hg, cert: hypergraph_certifier(hg), k, options: LpOptions::default() }
    }
}

impl<'a, H, S> CertificateSampler<S> for HmSampler<'a, H>
where
    H: HypergraphLike + IndependenceSystem + ?Sized,
    S: Scalar,
{
    type Law = LpSolution<S>;
    type Cert = HypergraphCertifier<'a, H>;
    type System = H;

    fn name(&self) -> &'static str {
        "hm"
    }

    fn certifier(&self) -> &Self::Cert {
        &self.cert
    }

    fn system(&self) -> &H {
        self.hg
    }

    fn k(&self) -> usize {
        self.k
    }

    fn prepare(&self, profile: &WeightProfile<S>) -> Result<LpSolution<S>> {
        solve_hm_lp_with(self.hg, profile, &self.options)
    }

    fn draw_agent<R: Rng + ?Sized>(&self, law: &LpSolution<S>, a: AgentId, rng: &mut R) -> Result<Certificate> {
        Ok(match pick_weighted(&law.marginal(a), rng) {
            Some(Some(e)) => Certificate::Edge { edge: *e },
            _ => Certificate::Bottom,
        })
    }

    fn expected_value(&self, law: &LpSolution<S>, profile: &WeightProfile<S>) -> S {
        lp_expected_value(law, profile)
    }

    fn blocking_probability(&self, law: &LpSolution<S>, a: AgentId, probe: &Certificate) -> S {
        let Certificate::Edge { edge: f } = probe else {
            return S::zero();
        };
        let mut p = S::zero();
        for (e, v) in &law.x[a] {
            if self.hg.edges_intersect(*e, *f) {
                p += v.clone();
            }
        }
        p
    }

    /// Every edge when there are at most 4096, otherwise the edges carrying LP mass.
    fn probes<R: Rng + ?Sized>(&self, law: &LpSolution<S>, _: &WeightProfile<S>, _: &mut R) -> Vec<Certificate> {
        let edges: Vec<Element> = if self.hg.num_edges() <= 4096 {
            (0..self.hg.num_edges()).collect()
        } else {
            let mut es: Vec<Element> = law.x.iter().flatten().map(|(e, _)| *e).collect();
            es.sort_unstable();
            es.dedup();
            es
        };
        edges.into_iter().map(|edge| Certificate::Edge { edge }).collect()
    }
}


/// Uses a maximum-weight assignment `M*` as the certificate source: agent `a`
/// receives `(I(w), M*(a))` where `I(w)` is the image of `M*`.
pub struct DirectedSampler<'a, M: ?Sized, C> {
    system: &'a M,
    cert: C,
    pub budget: usize,
}

impl<'a, M: Matroid + ?Sized, C: DirectedCertifier> DirectedSampler<'a, M, C> {
    pub fn new(system: &'a M, cert: C) -> Self {
        Self { system, cert, budget: DEFAULT_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectedLaw<S> {
    pub assignment: Assignment,
    /// Sorted image of the optimum, shared by every agent's certificate.
    pub set: Arc<[Element]>,
    pub value: S,
}

impl<S> DirectedLaw<S> {
    pub fn certificate(&self, a: AgentId) -> Certificate {
        match self.assignment.get(a) {
            Some(element) => Certificate::Set { set: self.set.clone(), element },
            None => Certificate::Bottom,
        }
    }
}

impl<M, C, S> CertificateSampler<S> for DirectedSampler<'_, M, C>
where
    M: Matroid + ?Sized,
    C: DirectedCertifier,
    S: Scalar,
{
    type Law = DirectedLaw<S>;
    type Cert = C;
    type System = M;

    fn name(&self) -> &'static str {
        "directed"
    }

    fn certifier(&self) -> &C {
        &self.cert
    }

    fn system(&self) -> &M {
        self.system
    }

    fn k(&self) -> usize {
        self.cert.k()
    }

    fn prepare(&self, profile: &WeightProfile<S>) -> Result<DirectedLaw<S>> {
        let (assignment, value) = offline_opt_bruteforce(self.system, profile, self.budget)?;
        let mut set = assignment.elements();
        set.sort_unstable();
        Ok(DirectedLaw { assignment, set: set.into(), value })
    }

    fn draw_agent<R: Rng + ?Sized>(&self, law: &DirectedLaw<S>, a: AgentId, _: &mut R) -> Result<Certificate> {
        Ok(law.certificate(a))
    }

    fn expected_value(&self, law: &DirectedLaw<S>, _: &WeightProfile<S>) -> S {
        law.value.clone()
    }

    fn blocking_probability(&self, law: &DirectedLaw<S>, a: AgentId, probe: &Certificate) -> S {
        if self.cert.blocks(&law.certificate(a), probe) {
            S::one()
        } else {
            S::zero()
        }
    }

    /// All `(J,f)` for small ground sets; otherwise random ones plus the optimum's own certificates.
    fn probes<R: Rng + ?Sized>(&self, law: &DirectedLaw<S>, _: &WeightProfile<S>, rng: &mut R) -> Vec<Certificate> {
        let mut out = Vec::new();
        if self.system.ground_size() <= EXHAUSTIVE_PROBE_LIMIT {
            for j in independent_sets(self.system) {
                let shared: Arc<[Element]> = j.clone().into();
                out.extend(j.iter().map(|&f| Certificate::Set { set: shared.clone(), element: f }));
            }
        } else {
            out.extend(law.set.iter().map(|&f| Certificate::Set { set: law.set.clone(), element: f }));
            while out.len() < RANDOM_PROBES {
                let j = random_independent_set(self.system, rng);
                if let Some(&f) = j.choose(rng) {
                    out.push(Certificate::set(j, f));
                }
            }
        }
        out
    }
}

/// Rounds the matchoid LP: agent `a` draws `e_a` from `x*_a`, then, in every
/// component containing `e_a`, an independent set from that component's
/// decomposition of `y*` conditioned on containing `e_a`.
pub struct MatchoidSampler<'a> {
    cert: MatchoidCertifier<'a>,
    pub options: LpOptions,
}

impl<'a> MatchoidSampler<'a> {
    pub fn new(mc: &'a Matchoid) -> Self {
        Self { cert: matchoid_certifier(mc), options: LpOptions::default() }
    }

    fn matchoid(&self) -> &'a Matchoid {
        self.cert.matchoid()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchoidLaw<S> {
    pub lp: LpSolution<S>,
    /// One decomposition of `y*` per component, in global element ids.
    pub decompositions: Vec<ConvexDecomposition<S>>,
}

impl<S: Scalar> MatchoidLaw<S> {
    /// Atoms of component `i` containing `e`, with their conditional probabilities.
    pub fn conditional(&self, i: usize, e: Element) -> Result<Vec<(&[Element], S)>> {
        let dec = &self.decompositions[i];
        let total = dec.mass_containing(e);
        if !total.is_pos_tol() {
            return Err(Error::Internal(format!(
                "element {e} carries LP mass but no atom of component {i} contains it"
            )));
        }
        Ok(dec
            .atoms
            .iter()
            .filter(|(_, set)| set.binary_search(&e).is_ok())
            .map(|(l, set)| (set.as_slice(), l.clone() / total.clone()))
            .collect())
    }
}

impl<'a, S: Scalar> CertificateSampler<S> for MatchoidSampler<'a> {
    type Law = MatchoidLaw<S>;
    type Cert = MatchoidCertifier<'a>;
    type System = Matchoid;

    fn name(&self) -> &'static str {
        "matchoid"
    }

    fn certifier(&self) -> &MatchoidCertifier<'a> {
        &self.cert
    }

    fn system(&self) -> &Matchoid {
        self.matchoid()
    }

    fn k(&self) -> usize {
        self.cert.k()
    }

    fn prepare(&self, profile: &WeightProfile<S>) -> Result<MatchoidLaw<S>> {
        let mc = self.matchoid();
        let lp = solve_matchoid_lp_with(mc, profile, &self.options)?;
        let y = lp.y.as_deref().unwrap_or_default();
        let mut decompositions = Vec::with_capacity(mc.components().len());
        for comp in mc.components() {
            let z: Vec<(Element, S)> = y
                .iter()
                .filter_map(|(e, v)| comp.local(*e).map(|l| (l, v.clone())))
                .collect();
            let dec = decompose_polytope_point(comp.matroid(), &z)?;
            decompositions.push(dec.map_elements(|l| comp.active()[l]));
        }
        Ok(MatchoidLaw { lp, decompositions })
    }

    fn draw_agent<R: Rng + ?Sized>(&self, law: &MatchoidLaw<S>, a: AgentId, rng: &mut R) -> Result<Certificate> {
        let Some(Some(e)) = pick_weighted(&law.lp.marginal(a), rng).copied() else {
            return Ok(Certificate::Bottom);
        };
        let mc = self.matchoid();
        let mut sets: Vec<Arc<[Element]>> = vec![Arc::from(Vec::new()); mc.components().len()];
        for &i in mc.components_of(e) {
            let options = law.conditional(i, e)?;
            let chosen = pick_weighted(&options, rng)
                .ok_or_else(|| Error::Internal(format!("empty conditional law for element {e}")))?;
            sets[i] = Arc::from(chosen.to_vec());
        }
        Ok(Certificate::Bundle { sets, element: e })
    }

    fn expected_value(&self, law: &MatchoidLaw<S>, profile: &WeightProfile<S>) -> S {
        lp_expected_value(&law.lp, profile)
    }

    /// `Σ_e x*_a(e) · (1 − Π_i (1 − q_i(e)))` over components `i` shared by
    /// `e` and the probe element, where `q_i(e)` is the conditional mass of
    /// component-`i` atoms whose certificate blocks the probe there.
    fn blocking_probability(&self, law: &MatchoidLaw<S>, a: AgentId, probe: &Certificate) -> S {
        let Certificate::Bundle { sets: probe_sets, element: f } = probe else {
            return S::zero();
        };
        let mc = self.matchoid();
        let mut total = S::zero();
        for (e, x) in &law.lp.x[a] {
            let mut miss = S::one();
            for &i in mc.components_of(*e) {
                if !mc.components()[i].contains(*f) {
                    continue;
                }
                let Ok(options) = law.conditional(i, *e) else { continue };
                let mut q = S::zero();
                for (set, p) in options {
                    if self.cert.component_blocks(i, (set, *e), (&probe_sets[i], *f)) {
                        q += p;
                    }
                }
                miss = miss * (S::one() - q);
            }
            total += x.clone() * (S::one() - miss);
        }
        total
    }

    /// Bundles for every element `f`: per component, candidate sets are `{f}`,
    /// the decomposition atoms containing `f`, and (for components of at most
    /// six elements) every independent set containing `f`. Products larger than
    /// 4096 are subsampled.
    fn probes<R: Rng + ?Sized>(&self, law: &MatchoidLaw<S>, _: &WeightProfile<S>, rng: &mut R) -> Vec<Certificate> {
        const CAP: usize = 4096;
        let mc = self.matchoid();
        let ncomp = mc.components().len();
        let mut out = Vec::new();
        for f in 0..mc.ground_size() {
            let comps = mc.components_of(f);
            let mut candidates: Vec<Vec<Vec<Element>>> = Vec::with_capacity(comps.len());
            for &i in comps {
                let comp = &mc.components()[i];
                let mut cands = vec![vec![f]];
                cands.extend(
                    law.decompositions[i]
                        .atoms
                        .iter()
                        .filter(|(_, s)| s.binary_search(&f).is_ok())
                        .map(|(_, s)| s.clone()),
                );
                if comp.active().len() <= EXHAUSTIVE_PROBE_LIMIT {
                    let lf = comp.local(f).expect("component contains f");
                    for local in independent_sets(comp.matroid()) {
                        if local.contains(&lf) {
                            cands.push(comp.globalize(&local));
                        }
                    }
                }
                cands.sort();
                cands.dedup();
                candidates.push(cands);
            }
            let product = candidates.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
            let build = |choice: &[usize]| {
                let mut sets: Vec<Arc<[Element]>> = vec![Arc::from(Vec::new()); ncomp];
                for (slot, &i) in comps.iter().enumerate() {
                    sets[i] = Arc::from(candidates[slot][choice[slot]].clone());
                }
                Certificate::Bundle { sets, element: f }
            };
            match product {
                Some(p) if p <= CAP => {
                    let mut choice = vec![0usize; comps.len()];
                    for _ in 0..p {
                        out.push(build(&choice));
                        for slot in 0..choice.len() {
                            choice[slot] += 1;
                            if choice[slot] < candidates[slot].len() {
                                break;
                            }
                            choice[slot] = 0;
                        }
                    }
                }
                _ => {
                    for _ in 0..CAP {
                        let choice: Vec<usize> =
                            candidates.iter().map(|c| rng.random_range(0..c.len())).collect();
                        out.push(build(&choice));
                    }
                }
            }
        }
        out
    }
}

pub fn sample_hm<H, S, R>(hg: &H, profile: &WeightProfile<S>, rng: &mut R) -> Result<SamplerOutput>
where
    H: HypergraphLike + IndependenceSystem + ?Sized,
    S: Scalar,
    R: Rng + ?Sized,
{
    HmSampler::new(hg, 0).sample(profile, rng)
}

pub fn sample_directed<M, C, S>(matroid: &M, cert: C, profile: &WeightProfile<S>) -> Result<SamplerOutput>
where
    M: Matroid + ?Sized,
    C: DirectedCertifier,
    S: Scalar,
{
    let sampler = DirectedSampler::new(matroid, cert);
    let law: DirectedLaw<S> = sampler.prepare(profile)?;
    let per_agent = (0..profile.num_agents()).map(|a| law.certificate(a)).collect();
    Ok(SamplerOutput { per_agent })
}

pub fn sample_matchoid<S: Scalar, R: Rng + ?Sized>(
    mc: &Matchoid,
    profile: &WeightProfile<S>,
    rng: &mut R,
) -> Result<SamplerOutput> {
    MatchoidSampler::new(mc).sample(profile, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerifyMode {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "mc")]
    MonteCarlo,
}

/// Approximation and blocking measurements of a sampler on one profile.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerReport<S> {
    pub sampler: &'static str,
    pub method: VerifyMode,
    pub expected_value: S,
    pub opt: S,
    /// `expected_value / opt`, or 1 when `opt` is zero.
    pub gamma_observed: f64,
    /// Largest summed blocking probability over the probes.
    pub k_observed: S,
    pub k_bound: usize,
    pub probes: usize,
    pub worst_probe: Option<Certificate>,
}

impl<S: Scalar> SamplerReport<S> {
    pub fn approximation_holds(&self) -> bool {
        self.expected_value.ge_tol(&self.opt)
    }

    pub fn blocking_holds(&self) -> bool {
        S::from_usize(self.k_bound).ge_tol(&self.k_observed)
    }
}

/// Measures the value ratio against the brute-force optimum and the largest
/// blocking mass over the sampler's probes.
///
/// In exact mode both come from the closed-form law; in Monte Carlo mode the
/// value is a sample mean over `trials` full draws and blocking masses are
/// empirical frequencies over the same draws.
pub fn verify_sampler<Smp, S, R>(
    sampler: &Smp,
    profile: &WeightProfile<S>,
    mode: VerifyMode,
    trials: usize,
    rng: &mut R,
) -> Result<SamplerReport<S>>
where
    Smp: CertificateSampler<S>,
    S: Scalar,
    R: Rng + ?Sized,
{
    let (_, opt) = offline_opt_bruteforce(sampler.system(), profile, DEFAULT_BUDGET)?;
    let law = sampler.prepare(profile)?;
    let probes = sampler.probes(&law, profile, rng);
    let m = profile.num_agents();
    let (expected_value, masses): (S, Vec<S>) = match mode {
        VerifyMode::Exact => {
            let masses = probes
                .iter()
                .map(|p| (0..m).fold(S::zero(), |acc, a| acc + sampler.blocking_probability(&law, a, p)))
                .collect();
            (sampler.expected_value(&law, profile), masses)
        }
        VerifyMode::MonteCarlo => {
            if trials == 0 {
                return Err(Error::InvalidParameter("Monte Carlo verification needs trials > 0".into()));
            }
            let mut counts = vec![0usize; probes.len()];
            let mut total = S::zero();
            for _ in 0..trials {
                let out = sampler.draw(&law, m, rng)?;
                for (a, c) in out.per_agent.iter().enumerate() {
                    total += profile.agent(a).weight(c.element());
                    if c.is_bottom() {
                        continue;
                    }
                    for (slot, p) in probes.iter().enumerate() {
                        if sampler.certifier().blocks(c, p) {
                            counts[slot] += 1;
                        }
                    }
                }
            }
            let n = S::from_usize(trials);
            (total / n.clone(), counts.into_iter().map(|c| S::from_usize(c) / n.clone()).collect())
        }
    };
    let mut k_observed = S::zero();
    let mut worst_probe = None;
    for (p, mass) in probes.iter().zip(masses) {
        if worst_probe.is_none() || mass > k_observed {
            k_observed = mass;
            worst_probe = Some(p.clone());
        }
    }
    let gamma_observed = if opt.is_zero_tol() { 1.0 } else { expected_value.as_f64() / opt.as_f64() };
    Ok(SamplerReport {
        sampler: sampler.name(),
        method: mode,
        expected_value,
        opt,
        gamma_observed,
        k_observed,
        k_bound: sampler.k(),
        probes: probes.len(),
        worst_probe,
    })
}
