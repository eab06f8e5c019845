//! Acceptance run: one pass/fail line per criterion, nonzero exit on any failure.
//!
//! `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7.

mod support;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use onassign::bounds::{falling_sum, hockey_stick_check, secretary_window_at_pk};
use onassign::certifiers::{graphic_certifier, matroid_certifier, partition_certifier};
use onassign::hardness::{
    build_hardness, distinct_labels, expected_opt_lower_bound, run_gap_experiment, HardnessDraw,
};
use onassign::harness::{
    gen_random_distribution, gen_random_distributions, gen_random_graph, gen_random_hypergraph, gen_random_matchoid,
    gen_random_matroid, gen_random_partition, gen_random_weight_function, iid_trial, par_map, pss_trial, run_trials,
    secretary_profile_seed, secretary_trial, trial_rng, AtomOptions, Experiment, Model, SummaryStats,
};
use onassign::model::{sample_profile, Hypergraph, WeightProfile};
use onassign::offline::{offline_opt_bruteforce, DEFAULT_BUDGET};
use onassign::online::SecretarySchedule;
use onassign::samplers::{verify_sampler, CertificateSampler, DirectedSampler, HmSampler, MatchoidSampler, SamplerReport, VerifyMode};
use onassign::scalar::{Rational, Scalar};
use onassign::Result;

const SIGMAS: f64 = 3.0;
const TRIALS: usize = 5000;
const AGENTS: usize = 6;
const ATOMS: usize = 3;
const NODES: usize = 10;
const EDGES: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }

    fn all(parts: Vec<Outcome>) -> Self {
        Self {
            pass: parts.iter().all(|p| p.pass),
            detail: parts.iter().map(|p| p.detail.as_str()).collect::<Vec<_>>().join("; "),
        }
    }
}

fn ratio_outcome(label: &str, s: &SummaryStats, target: f64) -> Outcome {
    Outcome::new(
        s.clears(target, SIGMAS),
        format!(
            "{label}: ratio {:.4} ± {:.4} vs target {target:.5} (n={})",
            s.ratio_of_means, s.se_ratio, s.trials
        ),
    )
}

fn summary(exp: Result<Experiment<Rational>>) -> Result<SummaryStats> {
    exp?.summary()
}

fn iid_target(k: usize) -> f64 {
    (1.0 - (-(k as f64)).exp()) / k as f64
}

fn hm_instance(k: usize, rng: &mut ChaCha8Rng) -> Result<Hypergraph> {
    gen_random_hypergraph(NODES, EDGES, k, rng)
}

/// Prophet IID on a fresh random hypergraph instance per trial.
fn criterion_1() -> Result<Outcome> {
    let k = 2;
    let s = summary(run_trials(TRIALS, 101, |_, rng| {
        let hg = hm_instance(k, rng)?;
        let dist = gen_random_distribution::<Rational, _>(EDGES, ATOMS, &AtomOptions::default(), rng)?;
        let (run, opt) = iid_trial(&HmSampler::new(&hg, k), &dist, AGENTS, false, rng)?;
        Ok((run.value, opt))
    }))?;
    Ok(ratio_outcome("iid k=2", &s, iid_target(k)))
}

/// Single-sample prophet secretary, k = 2 and k = 3 families.
fn criterion_2() -> Result<Outcome> {
    let mut parts = Vec::new();
    for (k, seed) in [(2usize, 201u64), (3, 202)] {
        let s = summary(run_trials(TRIALS, seed, |_, rng| {
            let hg = hm_instance(k, rng)?;
            let dists = gen_random_distributions::<Rational, _>(EDGES, AGENTS, ATOMS, &AtomOptions::default(), rng)?;
            let (run, opt) = pss_trial(&HmSampler::new(&hg, k), &dists, rng)?;
            Ok((run.value, opt))
        }))?;
        parts.push(ratio_outcome(&format!("pss k={k}"), &s, 1.0 / (k as f64 + 1.0)));
    }
    Ok(Outcome::all(parts))
}

const PROFILES: usize = 50;
const ORDERS: usize = 200;

/// Secretary on fixed random profiles, each run under many random orders.
fn secretary_family(k: usize, schedule: SecretarySchedule, opts: AtomOptions, master: u64) -> Result<SummaryStats> {
    let instances = par_map(PROFILES, |g| {
        let mut rng = trial_rng(secretary_profile_seed(master, g * ORDERS, ORDERS));
        let hg = hm_instance(k, &mut rng)?;
        let profile: WeightProfile<Rational> =
            WeightProfile::new((0..AGENTS).map(|_| gen_random_weight_function(EDGES, &opts, &mut rng)).collect());
        let (_, opt) = offline_opt_bruteforce(&hg, &profile, DEFAULT_BUDGET)?;
        Ok((hg, profile, opt))
    })?;
    summary(run_trials(PROFILES * ORDERS, master, |t, rng| {
        let (hg, profile, opt) = &instances[t / ORDERS];
        let run = secretary_trial(&HmSampler::new(hg, k), profile, &schedule, rng)?;
        Ok((run.value, opt.clone()))
    }))
}

fn criterion_3() -> Result<Outcome> {
    let k2 = secretary_family(2, SecretarySchedule::with_p(2, 0.5)?, AtomOptions::default(), 301)?;
    let single = AtomOptions { single_minded: true, ..AtomOptions::default() };
    let k1 = secretary_family(1, SecretarySchedule::new(1)?, single, 302)?;
    Ok(Outcome::all(vec![
        ratio_outcome("secretary k=2 p=1/2", &k2, 0.25),
        ratio_outcome("secretary k=1 p=1/e single-minded", &k1, (-1.0f64).exp()),
    ]))
}

/// Prophet IID through the directed sampler on graphic and partition matroids.
fn criterion_4() -> Result<Outcome> {
    const GRAPH_EDGES: usize = 9;
    let graphic = summary(run_trials(TRIALS, 401, |_, rng| {
        let gm = gen_random_graph(6, GRAPH_EDGES, rng)?;
        let dist = gen_random_distribution::<Rational, _>(GRAPH_EDGES, ATOMS, &AtomOptions::default(), rng)?;
        let sampler = DirectedSampler::new(&gm, graphic_certifier(&gm));
        let (run, opt) = iid_trial(&sampler, &dist, AGENTS, false, rng)?;
        Ok((run.value, opt))
    }))?;
    const PARTITION_ELEMENTS: usize = 8;
    let partition = summary(run_trials(TRIALS, 402, |_, rng| {
        let pm = gen_random_partition(PARTITION_ELEMENTS, 3, rng)?;
        let dist = gen_random_distribution::<Rational, _>(PARTITION_ELEMENTS, ATOMS, &AtomOptions::default(), rng)?;
        let sampler = DirectedSampler::new(&pm, partition_certifier(&pm));
        let (run, opt) = iid_trial(&sampler, &dist, AGENTS, false, rng)?;
        Ok((run.value, opt))
    }))?;
    Ok(Outcome::all(vec![
        ratio_outcome("graphic k=2", &graphic, iid_target(2)),
        ratio_outcome("partition k=1", &partition, iid_target(1)),
    ]))
}

const SAMPLER_INSTANCES: usize = 200;

fn sampler_outcome(label: &str, reports: &[SamplerReport<Rational>]) -> Outcome {
    let value_fail = reports.iter().filter(|r| r.expected_value < r.opt).count();
    let block_fail = reports.iter().filter(|r| r.k_observed > Rational::from_usize(r.k_bound)).count();
    let min_gamma = reports.iter().map(|r| r.gamma_observed).fold(f64::INFINITY, f64::min);
    let max_k = reports.iter().map(|r| r.k_observed.as_f64() / r.k_bound as f64).fold(0.0, f64::max);
    let probes: usize = reports.iter().map(|r| r.probes).sum();
    Outcome::new(
        value_fail == 0 && block_fail == 0,
        format!(
            "{label}: {} instances, {probes} probes, min E/OPT {min_gamma:.4}, max blocking/k {max_k:.4}, \
             value failures {value_fail}, blocking failures {block_fail}",
            reports.len()
        ),
    )
}

fn verify_exact<Smp: CertificateSampler<Rational>>(sampler: &Smp, profile: &WeightProfile<Rational>, rng: &mut ChaCha8Rng) -> Result<SamplerReport<Rational>> {
    verify_sampler(sampler, profile, VerifyMode::Exact, 0, rng)
}

/// Exact value and blocking guarantees of all three samplers, rational arithmetic.
fn criterion_5() -> Result<Outcome> {
    let opts = AtomOptions::default();
    let hm = par_map(SAMPLER_INSTANCES, |t| {
        let mut rng = trial_rng(trial_seed_of(501, t));
        let k = 2 + t % 2;
        let hg = gen_random_hypergraph(7, 7, k, &mut rng)?;
        let dists = gen_random_distributions(hg.edges().len(), 4, 2, &opts, &mut rng)?;
        let profile = sample_profile(&dists, &mut rng);
        verify_exact(&HmSampler::new(&hg, k), &profile, &mut rng)
    })?;
    let directed = par_map(SAMPLER_INSTANCES, |t| {
        let mut rng = trial_rng(trial_seed_of(502, t));
        let n = rng.random_range(3..=7);
        let m = gen_random_matroid(n, &mut rng)?;
        let dists = gen_random_distributions(n, 4, 2, &opts, &mut rng)?;
        let profile = sample_profile(&dists, &mut rng);
        verify_exact(&DirectedSampler::new(&m, matroid_certifier(&m)), &profile, &mut rng)
    })?;
    let matchoid = par_map(SAMPLER_INSTANCES, |t| {
        let mut rng = trial_rng(trial_seed_of(503, t));
        let n = rng.random_range(3..=6);
        let mc = gen_random_matchoid(n, rng.random_range(1..=3), &mut rng)?;
        let dists = gen_random_distributions(n, 3, 2, &opts, &mut rng)?;
        let profile = sample_profile(&dists, &mut rng);
        verify_exact(&MatchoidSampler::new(&mc), &profile, &mut rng)
    })?;
    Ok(Outcome::all(vec![
        sampler_outcome("hm", &hm),
        sampler_outcome("directed", &directed),
        sampler_outcome("matchoid", &matchoid),
    ]))
}

fn trial_seed_of(master: u64, t: usize) -> u64 {
    onassign::harness::trial_seed(master, t as u64)
}

/// Exact combinatorial identities and the secretary window bound.
fn criterion_6() -> Result<Outcome> {
    let one = |d: usize| Rational::from_ratio(1, d as i64);
    let mut falling_bad = Vec::new();
    let mut falling_count = 0;
    for m in 2..=50 {
        for k in 1..m {
            falling_count += 1;
            if falling_sum(m, k)? != one(k + 1) {
                falling_bad.push((m, k));
            }
        }
    }
    for k in 1..=20 {
        for m in 1..=k {
            falling_count += 1;
            if falling_sum(m, k)? != one(m) {
                falling_bad.push((m, k));
            }
        }
    }
    let mut hockey_bad = Vec::new();
    let mut hockey_count = 0;
    for m in 2..=60 {
        for k in 1..m {
            hockey_count += 1;
            if !hockey_stick_check(m, k)? {
                hockey_bad.push((m, k));
            }
        }
    }
    let rows: Vec<(usize, usize)> = (1..=6).flat_map(|k| (1..=200).map(move |m| (m, k))).collect();
    let window = par_map(rows.len(), |i| {
        let (m, k) = rows[i];
        let alpha = if k == 1 { (-1.0f64).exp() } else { (k as f64).powf(-(k as f64) / (k as f64 - 1.0)) };
        let (value, err) = secretary_window_at_pk(m, k)?;
        Ok((m, k, value.as_f64() + err - alpha))
    })?;
    let window_bad: Vec<_> = window.iter().filter(|w| w.2 < -1e-9).collect();
    let slack = window.iter().map(|w| w.2).fold(f64::INFINITY, f64::min);
    Ok(Outcome::all(vec![
        Outcome::new(falling_bad.is_empty(), format!("falling sums: {falling_count} exact, failures {falling_bad:?}")),
        Outcome::new(hockey_bad.is_empty(), format!("hockey stick: {hockey_count} exact, failures {hockey_bad:?}")),
        Outcome::new(
            window_bad.is_empty(),
            format!("secretary window: {} pairs, min slack {slack:.3e}, failures {}", window.len(), window_bad.len()),
        ),
    ]))
}

/// Hardness family: label statistics, gap to the online value, and the optimum oracle.
fn criterion_7() -> Result<Outcome> {
    const M: usize = 8;
    const HARD_TRIALS: usize = 2000;
    let mf = M as f64;
    let exact = mf * (1.0 - (1.0 - 1.0 / mf).powi(M as i32));
    let bound = mf * (1.0 - (-1.0f64).exp());
    let l = expected_opt_lower_bound(M, HARD_TRIALS, &mut trial_rng(701))?;
    let gap = run_gap_experiment(M, Model::Iid, HARD_TRIALS, 702)?;
    let log2 = (mf + 1.0).log2();

    let mut mismatches = 0;
    let mut checked = 0;
    let mut rng = trial_rng(703);
    for m in 2..=4 {
        let inst = build_hardness(m)?;
        for _ in 0..200 {
            let draws: Vec<HardnessDraw> = (0..m).map(|_| inst.draw_agent(&mut rng)).collect();
            let profile = WeightProfile::new(
                draws.iter().map(|d| inst.weight_function::<Rational>(d)).collect::<Result<Vec<_>>>()?,
            );
            let (_, opt) = offline_opt_bruteforce(&inst, &profile, DEFAULT_BUDGET)?;
            checked += 1;
            if opt != Rational::from_usize(distinct_labels(&draws)) {
                mismatches += 1;
            }
        }
    }
    Ok(Outcome::all(vec![
        Outcome::new(
            (l.mean - exact).abs() <= SIGMAS * l.se,
            format!("mean L {:.4} ± {:.4} vs exact {exact:.4}", l.mean, l.se),
        ),
        Outcome::new(l.mean >= bound - SIGMAS * l.se, format!("mean L vs m(1-1/e) = {bound:.4}")),
        Outcome::new(
            gap.mean_alg <= log2 + SIGMAS * gap.se_alg,
            format!("mean ALG {:.4} ± {:.4} vs log2(m+1) = {log2:.4}", gap.mean_alg, gap.se_alg),
        ),
        Outcome::new(mismatches == 0, format!("brute-force OPT = L on {checked} draws with m ≤ 4, mismatches {mismatches}")),
    ]))
}

/// Property suites: certifier axioms, random certifications, online soundness, replay.
fn criterion_8() -> Result<Outcome> {
    let run = |name: &str, seeds: u64, f: fn(u64) -> support::Check| {
        let failures: Vec<String> =
            (0..seeds).filter_map(|s| f(0x8000 + s).err().map(|e| format!("seed {}: {e}", 0x8000 + s))).collect();
        Outcome::new(
            failures.is_empty(),
            format!("{name}: {seeds} cases{}", failures.first().map(|f| format!(", first failure {f}")).unwrap_or_default()),
        )
    };
    let certs = support::random_certifications(10_000, 801);
    Ok(Outcome::all(vec![
        run("hypergraph axioms", 50, support::hypergraph_axioms),
        run("matroid axioms", 60, support::matroid_axioms),
        run("matchoid axioms", 50, support::matchoid_axioms),
        Outcome::new(certs.is_ok(), format!("10000 random certifications{}", certs.err().map(|e| format!(": {e}")).unwrap_or_default())),
        run("online feasibility and alg ≤ opt", 100, support::online_soundness),
        run("seed replay", 20, support::replay),
    ]))
}

type Criterion = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, Criterion); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let mut failed = 0;
    let mut out = std::io::stdout().lock();
    for (n, f) in criteria.into_iter().filter(|(n, _)| only.is_empty() || only.contains(n)) {
        let start = Instant::now();
        let outcome = f().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        failed += usize::from(!outcome.pass);
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{tag}] criterion {n} ({:.1}s): {}", start.elapsed().as_secs_f64(), outcome.detail);
        let _ = out.flush();
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        let _ = writeln!(out, "{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
