//! Checks shared by the property suite and the acceptance run. Each returns
//! `Err` with a description of the first violation.
#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use onassign::certifiers::{
    check_directedness, hypergraph_certifier, independent_sets, matchoid_certifier, matroid_certifier,
    random_independent_set, verify_certification, Certificate, Certifier, DirectedCertifier,
};
use onassign::harness::{
    gen_random_distributions, gen_random_graph, gen_random_hypergraph, gen_random_matchoid, gen_random_matroid,
    gen_random_partition, gen_random_transversal, iid_trial, pss_trial, run_trials, secretary_trial, trial_rng,
    AtomOptions,
};
use onassign::matroids::{AnyMatroid, Matchoid};
use onassign::model::{assignment_value, is_feasible, sample_profile, Element, IndependenceSystem, WeightDistribution};
use onassign::offline::{offline_opt_bruteforce, DEFAULT_BUDGET};
use onassign::online::{OnlineRun, SecretarySchedule};
use onassign::samplers::{CertificateSampler, DirectedSampler, HmSampler, MatchoidSampler};
use onassign::scalar::Rational;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    trial_rng(seed)
}

pub fn small_matroid(seed: u64) -> AnyMatroid {
    let mut r = rng(seed);
    match seed % 3 {
        0 => gen_random_partition(5, 2, &mut r).unwrap().into(),
        1 => gen_random_graph(4, 5, &mut r).unwrap().into(),
        _ => gen_random_transversal(5, 3, &mut r).unwrap().into(),
    }
}

/// Per component, every independent set containing `e` (global ids), or just ∅ where `e` is inactive.
fn bundle_choices(mc: &Matchoid, e: Element) -> Vec<Vec<Arc<[Element]>>> {
    mc.components()
        .iter()
        .map(|c| {
            if !c.contains(e) {
                return vec![Arc::from(Vec::new())];
            }
            independent_sets(c.matroid())
                .into_iter()
                .map(|local| c.globalize(&local))
                .filter(|s| s.contains(&e))
                .map(|mut s| {
                    s.sort_unstable();
                    Arc::from(s)
                })
                .collect()
        })
        .collect()
}

pub fn all_bundles(mc: &Matchoid) -> Vec<Certificate> {
    let mut out = Vec::new();
    for e in 0..mc.ground_size() {
        let choices = bundle_choices(mc, e);
        let mut idx = vec![0usize; choices.len()];
        loop {
            let sets = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
            out.push(Certificate::Bundle { sets, element: e });
            let Some(pos) = (0..idx.len()).find(|&p| idx[p] + 1 < choices[p].len()) else { break };
            idx[pos] += 1;
            idx[..pos].iter_mut().for_each(|i| *i = 0);
        }
    }
    out
}

pub fn all_set_certificates(m: &AnyMatroid) -> Vec<Certificate> {
    independent_sets(m)
        .into_iter()
        .flat_map(|s| s.clone().into_iter().map(move |e| Certificate::set(s.clone(), e)))
        .collect()
}

/// Bundle for `e ∈ set`, `set` independent in the whole matchoid.
pub fn bundle_of(mc: &Matchoid, set: &[Element], e: Element) -> Certificate {
    let sets = mc
        .components()
        .iter()
        .map(|c| {
            if c.contains(e) {
                Arc::from(set.iter().copied().filter(|&x| c.contains(x)).collect::<Vec<_>>())
            } else {
                Arc::from(Vec::new())
            }
        })
        .collect();
    Certificate::Bundle { sets, element: e }
}

fn random_bundle<R: Rng>(mc: &Matchoid, r: &mut R) -> Option<Certificate> {
    let set = random_independent_set(mc, r);
    let &e = set.choose(r)?;
    Some(bundle_of(mc, &set, e))
}

/// Axioms (a) and (b), sentinel neutrality, and (c) on every ordered pair.
pub fn exhaustive_axioms<C: Certifier, I: IndependenceSystem>(cert: &C, system: &I, certs: &[Certificate]) -> Check {
    for c in certs {
        ensure!(cert.is_certificate(c), "{c:?} should be a certificate");
        ensure!(!cert.blocks(&Certificate::Bottom, c) && !cert.blocks(c, &Certificate::Bottom), "⊥ interacts with {c:?}");
        for d in certs {
            if d.element() == c.element() {
                ensure!(cert.blocks(c, d), "{c:?} must block {d:?}");
            }
            match verify_certification(cert, system, &[c.clone(), d.clone()]) {
                Ok(ok) => ensure!(ok == !cert.blocks(c, d), "pair verdict wrong for {c:?}, {d:?}"),
                Err(e) => return Err(format!("axiom (c) broken by {c:?}, {d:?}: {e}")),
            }
        }
    }
    Ok(())
}

pub fn hypergraph_axioms(seed: u64) -> Check {
    let hg = gen_random_hypergraph(6, 8, 3, &mut rng(seed)).map_err(|e| e.to_string())?;
    let cert = hypergraph_certifier(&hg);
    let certs: Vec<_> = (0..hg.edges().len()).map(|edge| Certificate::Edge { edge }).collect();
    exhaustive_axioms(&cert, &hg, &certs)?;
    let out_of_range = Certificate::Edge { edge: hg.edges().len() };
    ensure!(!cert.is_certificate(&out_of_range), "edge id past the end accepted");
    Ok(())
}

pub fn matroid_axioms(seed: u64) -> Check {
    let m = small_matroid(seed);
    let cert = matroid_certifier(&m);
    exhaustive_axioms(&cert, &m, &all_set_certificates(&m))?;
    let all: Vec<Element> = (0..m.ground_size()).collect();
    if !m.is_independent(&all) {
        ensure!(!cert.is_certificate(&Certificate::set(all, 0)), "dependent set accepted by {}", m.kind());
    }
    if m.ground_size() > 1 {
        ensure!(!cert.is_certificate(&Certificate::set(vec![0], 1)), "element outside its set accepted");
    }
    let report = check_directedness(&cert, &m, cert.k(), 0, &mut rng(seed));
    ensure!(report.exhaustive && report.within_bound, "{report:?} for {}", m.kind());
    Ok(())
}

pub fn matchoid_axioms(seed: u64) -> Check {
    let mc = gen_random_matchoid(4, 2, &mut rng(seed)).map_err(|e| e.to_string())?;
    let cert = matchoid_certifier(&mc);
    let certs = all_bundles(&mc);
    exhaustive_axioms(&cert, &mc, &certs)?;
    for set in independent_sets(&mc) {
        for target in &certs {
            let count = set.iter().filter(|&&e| cert.blocks(&bundle_of(&mc, &set, e), target)).count();
            ensure!(count <= cert.k(), "{count} > {} blockers from {set:?} on {target:?}", cert.k());
        }
    }
    Ok(())
}

/// Greedy blocking-free sequence from random certificates.
fn random_certification<C: Certifier>(cert: &C, mut draw: impl FnMut() -> Option<Certificate>, attempts: usize) -> Vec<Certificate> {
    let mut seq: Vec<Certificate> = Vec::new();
    for _ in 0..attempts {
        let Some(c) = draw() else { continue };
        if !seq.iter().any(|s| cert.blocks(s, &c)) {
            seq.push(c);
        }
    }
    seq
}

fn check_sequence<C: Certifier, I: IndependenceSystem>(cert: &C, system: &I, seq: &[Certificate]) -> Check {
    let verdict = verify_certification(cert, system, seq).map_err(|e| e.to_string())?;
    ensure!(verdict, "blocking-free sequence rejected: {seq:?}");
    let mut elems: Vec<Element> = seq.iter().filter_map(Certificate::element).collect();
    elems.sort_unstable();
    elems.dedup();
    ensure!(elems.len() == seq.len(), "repeated elements in {seq:?}");
    ensure!(system.is_independent(&elems), "dependent elements {elems:?}");
    Ok(())
}

/// `count` random certifications over hypergraphs, matroids and matchoids.
pub fn random_certifications(count: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for round in 0..count {
        let attempts = r.random_range(1..12);
        match round % 4 {
            0 => {
                let hg = gen_random_hypergraph(12, 15, 3, &mut r).map_err(|e| e.to_string())?;
                let cert = hypergraph_certifier(&hg);
                let n = hg.edges().len();
                let seq = random_certification(&cert, || Some(Certificate::Edge { edge: r.random_range(0..n) }), attempts);
                check_sequence(&cert, &hg, &seq)?;
            }
            1 | 2 => {
                let m = gen_random_matroid(r.random_range(3..10), &mut r).map_err(|e| e.to_string())?;
                let cert = matroid_certifier(&m);
                let draw = || {
                    let s = random_independent_set(&m, &mut r);
                    let &e = s.choose(&mut r)?;
                    Some(Certificate::set(s, e))
                };
                let seq = random_certification(&cert, draw, attempts);
                check_sequence(&cert, &m, &seq)?;
            }
            _ => {
                let mc = gen_random_matchoid(r.random_range(2..9), r.random_range(1..4), &mut r).map_err(|e| e.to_string())?;
                let cert = matchoid_certifier(&mc);
                let seq = random_certification(&cert, || random_bundle(&mc, &mut r), attempts);
                check_sequence(&cert, &mc, &seq)?;
            }
        }
    }
    Ok(())
}

fn check_run<Smp: CertificateSampler<Rational>>(sampler: &Smp, run: &OnlineRun<Rational>, opt: &Rational) -> Check {
    let feasible = is_feasible(sampler.system(), &run.assignment).map_err(|e| e.to_string())?;
    ensure!(feasible, "infeasible online output {:?}", run.assignment);
    let certified = verify_certification(sampler.certifier(), sampler.system(), &run.certification).map_err(|e| e.to_string())?;
    ensure!(certified, "online certification has a blocked entry");
    let value = assignment_value(&run.realized, &run.assignment).map_err(|e| e.to_string())?;
    ensure!(value == run.value, "reported value {} but assignment is worth {value}", run.value);
    ensure!(run.value <= *opt, "alg {} above opt {opt}", run.value);
    Ok(())
}

fn all_models<Smp: CertificateSampler<Rational>>(sampler: &Smp, dists: &[WeightDistribution<Rational>], seed: u64) -> Check {
    let mut r = rng(seed);
    let err = |e: onassign::Error| e.to_string();
    let (run, opt) = iid_trial(sampler, &dists[0], dists.len(), true, &mut r).map_err(err)?;
    check_run(sampler, &run, &opt)?;
    let (run, opt) = pss_trial(sampler, dists, &mut r).map_err(err)?;
    check_run(sampler, &run, &opt)?;
    let profile = sample_profile(dists, &mut r);
    let (_, opt) = offline_opt_bruteforce(sampler.system(), &profile, DEFAULT_BUDGET).map_err(err)?;
    let schedule = SecretarySchedule::new(sampler.k().max(1)).map_err(err)?;
    let run = secretary_trial(sampler, &profile, &schedule, &mut r).map_err(err)?;
    check_run(sampler, &run, &opt)
}

/// All three models on random hypergraph, matroid and matchoid instances, exact arithmetic.
pub fn online_soundness(seed: u64) -> Check {
    let mut r = rng(seed);
    let opts = AtomOptions::default();
    let err = |e: onassign::Error| e.to_string();
    let hg = gen_random_hypergraph(8, 7, 2, &mut r).map_err(err)?;
    let dists = gen_random_distributions(hg.edges().len(), 5, 2, &opts, &mut r).map_err(err)?;
    all_models(&HmSampler::new(&hg, 2), &dists, seed)?;

    let m = gen_random_matroid(6, &mut r).map_err(err)?;
    let dists = gen_random_distributions(6, 5, 2, &opts, &mut r).map_err(err)?;
    all_models(&DirectedSampler::new(&m, matroid_certifier(&m)), &dists, seed)?;

    let mc = gen_random_matchoid(6, 2, &mut r).map_err(err)?;
    let dists = gen_random_distributions(6, 4, 2, &opts, &mut r).map_err(err)?;
    all_models(&MatchoidSampler::new(&mc), &dists, seed)
}

/// Reruns an experiment and each of its trials from the recorded seed.
pub fn replay(master: u64) -> Check {
    let mut r = rng(master);
    let err = |e: onassign::Error| e.to_string();
    let hg = gen_random_hypergraph(8, 7, 2, &mut r).map_err(err)?;
    let dists: Vec<WeightDistribution<Rational>> =
        gen_random_distributions(hg.edges().len(), 5, 3, &AtomOptions::default(), &mut r).map_err(err)?;
    let sampler = HmSampler::new(&hg, 2);
    let trial = |_: usize, rng: &mut ChaCha8Rng| pss_trial(&sampler, &dists, rng).map(|(run, opt)| (run.value, opt));
    let a = run_trials(6, master, trial).map_err(err)?;
    ensure!(a == run_trials(6, master, trial).map_err(err)?, "experiment with master seed {master} not reproducible");
    for rec in &a.records {
        let (alg, opt) = trial(rec.trial, &mut trial_rng(rec.seed)).map_err(err)?;
        ensure!(alg == rec.alg_value && opt == rec.opt_value, "trial {} (seed {}) replays differently", rec.trial, rec.seed);
    }
    Ok(())
}
