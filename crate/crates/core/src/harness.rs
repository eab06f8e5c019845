//! Instance generators, trial orchestration, summary statistics and CSV output.

use std::io::Write;
use std::sync::OnceLock;

use rand::seq::{index, SliceRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroids::{AnyMatroid, GraphicMatroid, Matchoid, MatchoidComponent, PartitionMatroid, TransversalMatroid};
use crate::model::{is_feasible, Hypergraph, WeightDistribution, WeightFunction, WeightProfile, WeightSource};
use crate::offline::{offline_opt_bruteforce, DEFAULT_BUDGET};
use crate::online::{run_prophet_iid, run_prophet_secretary_single_sample, run_secretary, OnlineRun, SecretarySchedule};
use crate::samplers::CertificateSampler;
use crate::scalar::Scalar;

/// Seed of trial `trial`: the first word of stream `trial` of a ChaCha8
/// generator keyed by `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.next_u64()
}

pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("ONASSIGN_THREADS").ok().and_then(|v| v.parse().ok()).unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
    })
}

/// Maps `f` over `0..n` in parallel, keeping index order. The thread count
/// comes from `ONASSIGN_THREADS` (default: all cores).
pub fn par_map<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Iid,
    Pss,
    Secretary,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(Self::Iid),
            "pss" => Ok(Self::Pss),
            "secretary" => Ok(Self::Secretary),
            other => Err(Error::InvalidParameter(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord<S> {
    pub trial: usize,
    pub seed: u64,
    pub alg_value: S,
    pub opt_value: S,
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return MeanSe { mean: f64::NAN, se: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return MeanSe { mean, se: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    MeanSe { mean, se: (var / n).sqrt() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub trials: usize,
    pub mean_alg: f64,
    pub mean_opt: f64,
    pub se_alg: f64,
    pub se_opt: f64,
    pub ratio_of_means: f64,
    /// Delta-method standard error of `ratio_of_means` over paired trials.
    pub se_ratio: f64,
}

impl SummaryStats {
    /// Whether the ratio clears `target − sigmas · se_ratio`.
    pub fn clears(&self, target: f64, sigmas: f64) -> bool {
        self.ratio_of_means >= target - sigmas * self.se_ratio
    }
}

pub fn summarize(alg: &[f64], opt: &[f64]) -> Result<SummaryStats> {
    if alg.len() != opt.len() || alg.is_empty() {
        return Err(Error::InvalidInput("need equally many, and at least one, alg and opt values".into()));
    }
    let a = mean_se(alg);
    let o = mean_se(opt);
    if o.mean <= 0.0 {
        return Err(Error::Numeric("mean optimum is zero; ratio of means is undefined".into()));
    }
    let n = alg.len() as f64;
    let ratio = a.mean / o.mean;
    let se_ratio = if alg.len() < 2 {
        0.0
    } else {
        let resid: f64 = alg
            .iter()
            .zip(opt)
            .map(|(x, y)| (x - ratio * y).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (resid / n).sqrt() / o.mean
    };
    Ok(SummaryStats {
        trials: alg.len(),
        mean_alg: a.mean,
        mean_opt: o.mean,
        se_alg: a.se,
        se_opt: o.se,
        ratio_of_means: ratio,
        se_ratio,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment<S> {
    pub master_seed: u64,
    pub records: Vec<RunRecord<S>>,
}

impl<S: Scalar> Experiment<S> {
    pub fn summary(&self) -> Result<SummaryStats> {
        let alg: Vec<f64> = self.records.iter().map(|r| r.alg_value.as_f64()).collect();
        let opt: Vec<f64> = self.records.iter().map(|r| r.opt_value.as_f64()).collect();
        summarize(&alg, &opt)
    }

    /// CSV with columns `trial, seed, alg_value, opt_value`; values are
    /// doubles, or exact `p/q` strings when `exact` is set.
    pub fn write_csv<W: Write>(&self, out: W, exact: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "seed", "alg_value", "opt_value"])?;
        for r in &self.records {
            let fmt = |v: &S| if exact { v.to_exact_string() } else { format!("{}", v.as_f64()) };
            w.write_record([r.trial.to_string(), r.seed.to_string(), fmt(&r.alg_value), fmt(&r.opt_value)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `trials` independent trials in parallel. Trial `t` gets the seed
/// [`trial_seed`]`(master, t)` and returns `(alg, opt)`; any error, or an
/// algorithm value above the optimum, aborts with the trial index and seed.
pub fn run_trials<S, F>(trials: usize, master: u64, f: F) -> Result<Experiment<S>>
where
    S: Scalar,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<(S, S)> + Sync + Send,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let records = par_map(trials, |t| {
        let seed = trial_seed(master, t as u64);
        let (alg_value, opt_value) = f(t, &mut trial_rng(seed)).map_err(|e| with_trial(e, t, seed))?;
        if alg_value.is_neg_tol() || (alg_value.clone() - opt_value.clone()).is_pos_tol() {
            return Err(Error::Internal(format!(
                "trial {t} (seed {seed}): algorithm value {alg_value} exceeds optimum {opt_value}"
            )));
        }
        Ok(RunRecord { trial: t, seed, alg_value, opt_value })
    })?;
    Ok(Experiment { master_seed: master, records })
}

fn with_trial(e: Error, t: usize, seed: u64) -> Error {
    let ctx = format!("trial {t} (seed {seed})");
    match e {
        Error::InvalidInstance(m) => Error::InvalidInstance(format!("{ctx}: {m}")),
        Error::InvalidDistribution(m) => Error::InvalidDistribution(format!("{ctx}: {m}")),
        Error::InvalidCertificate(m) => Error::InvalidCertificate(format!("{ctx}: {m}")),
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("{ctx}: {m}")),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{ctx}: {m}")),
        Error::Resource(m) => Error::Resource(format!("{ctx}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("{ctx}: {m}")),
        Error::Internal(m) => Error::Internal(format!("{ctx}: {m}")),
        other => other,
    }
}

fn check_run<Smp: CertificateSampler<S>, S: Scalar>(sampler: &Smp, run: &OnlineRun<S>) -> Result<()> {
    if !is_feasible(sampler.system(), &run.assignment)? {
        return Err(Error::Internal(format!("online run produced infeasible assignment {:?}", run.assignment)));
    }
    Ok(())
}

/// One prophet IID run plus the optimum of the realized profile.
pub fn iid_trial<Smp, S, D, R>(sampler: &Smp, dist: &D, m: usize, shuffle: bool, rng: &mut R) -> Result<(OnlineRun<S>, S)>
where
    Smp: CertificateSampler<S>,
    S: Scalar,
    D: WeightSource<S>,
    R: Rng + ?Sized,
{
    let run = run_prophet_iid(sampler, dist, m, shuffle, rng)?;
    check_run(sampler, &run)?;
    let (_, opt) = offline_opt_bruteforce(sampler.system(), &run.realized, DEFAULT_BUDGET)?;
    Ok((run, opt))
}

/// One single-sample prophet-secretary run plus the optimum of the realized profile.
pub fn pss_trial<Smp, S, D, R>(sampler: &Smp, dists: &[D], rng: &mut R) -> Result<(OnlineRun<S>, S)>
where
    Smp: CertificateSampler<S>,
    S: Scalar,
    D: WeightSource<S>,
    R: Rng + ?Sized,
{
    let run = run_prophet_secretary_single_sample(sampler, dists, rng)?;
    check_run(sampler, &run)?;
    let (_, opt) = offline_opt_bruteforce(sampler.system(), &run.realized, DEFAULT_BUDGET)?;
    Ok((run, opt))
}

/// One secretary run on a fixed profile whose optimum is already known.
pub fn secretary_trial<Smp, S, R>(
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
    let run = run_secretary(sampler, profile, schedule, rng)?;
    check_run(sampler, &run)?;
    Ok(run)
}

/// Seed of the adversarial profile shared by a group of secretary trials:
/// the seed of the group's first trial.
pub fn secretary_profile_seed(master: u64, trial: usize, orders_per_profile: usize) -> u64 {
    let first = trial / orders_per_profile.max(1) * orders_per_profile.max(1);
    trial_seed(master, first as u64) ^ 0x9e37_79b9_7f4a_7c15
}

/// How generated weight functions look.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AtomOptions {
    /// Largest number of positive-weight elements per weight function.
    pub max_support: usize,
    /// Exactly one positive-weight element per weight function.
    pub single_minded: bool,
    /// Weights are uniform on `{1/grid, 2/grid, …, 1}`.
    pub grid: u32,
}

impl Default for AtomOptions {
    fn default() -> Self {
        Self { max_support: 3, single_minded: false, grid: 1000 }
    }
}

/// Random distinct edges with sizes uniform in `1..=k`.
pub fn gen_random_hypergraph<R: Rng + ?Sized>(n: usize, edge_count: usize, k: usize, rng: &mut R) -> Result<Hypergraph> {
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ n, got n={n}, k={k}")));
    }
    let available: f64 = (1..=k).map(|s| binomial_f64(n, s)).sum();
    if edge_count as f64 > available {
        return Err(Error::InvalidParameter(format!(
            "{edge_count} distinct edges requested but only {available} subsets of size ≤ {k} exist"
        )));
    }
    let mut edges: Vec<Vec<usize>> = Vec::with_capacity(edge_count);
    while edges.len() < edge_count {
        let size = rng.random_range(1..=k);
        let mut edge = index::sample(rng, n, size).into_vec();
        edge.sort_unstable();
        if !edges.contains(&edge) {
            edges.push(edge);
        }
    }
    Hypergraph::new(n, edges)
}

fn binomial_f64(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn gen_random_weight_function<S: Scalar, R: Rng + ?Sized>(ground: usize, opts: &AtomOptions, rng: &mut R) -> WeightFunction<S> {
    if ground == 0 {
        return WeightFunction::zero();
    }
    let size = if opts.single_minded { 1 } else { rng.random_range(1..=opts.max_support.clamp(1, ground)) };
    let grid = opts.grid.max(1);
    let entries = index::sample(rng, ground, size)
        .into_iter()
        .map(|e| (e, S::from_ratio(rng.random_range(1..=grid) as i64, grid as i64)));
    WeightFunction::new(entries).expect("distinct elements with positive weights")
}

/// `atoms` random weight functions with equal probability.
pub fn gen_random_distribution<S: Scalar, R: Rng + ?Sized>(
    ground: usize,
    atoms: usize,
    opts: &AtomOptions,
    rng: &mut R,
) -> Result<WeightDistribution<S>> {
    if atoms == 0 {
        return Err(Error::InvalidParameter("atoms per agent must be at least 1".into()));
    }
    WeightDistribution::uniform((0..atoms).map(|_| gen_random_weight_function(ground, opts, rng)).collect())
}

pub fn gen_random_distributions<S: Scalar, R: Rng + ?Sized>(
    ground: usize,
    m: usize,
    atoms: usize,
    opts: &AtomOptions,
    rng: &mut R,
) -> Result<Vec<WeightDistribution<S>>> {
    (0..m).map(|_| gen_random_distribution(ground, atoms, opts, rng)).collect()
}

/// Simple graph with `edge_count` distinct vertex pairs.
pub fn gen_random_graph<R: Rng + ?Sized>(n_vertices: usize, edge_count: usize, rng: &mut R) -> Result<GraphicMatroid> {
    let mut pairs: Vec<(usize, usize)> =
        (0..n_vertices).flat_map(|u| (u + 1..n_vertices).map(move |v| (u, v))).collect();
    if edge_count > pairs.len() {
        return Err(Error::InvalidParameter(format!(
            "{edge_count} edges requested on {n_vertices} vertices"
        )));
    }
    pairs.shuffle(rng);
    pairs.truncate(edge_count);
    GraphicMatroid::new(n_vertices, pairs)
}

/// Random partition of `0..n` into `parts` nonempty parts.
pub fn gen_random_partition<R: Rng + ?Sized>(n: usize, parts: usize, rng: &mut R) -> Result<PartitionMatroid> {
    if parts == 0 || parts > n {
        return Err(Error::InvalidParameter(format!("cannot split {n} elements into {parts} nonempty parts")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut out: Vec<Vec<usize>> = order[..parts].iter().map(|&e| vec![e]).collect();
    for &e in &order[parts..] {
        out[rng.random_range(0..parts)].push(e);
    }
    PartitionMatroid::new(out)
}

/// Each left vertex gets one or two random right neighbours.
pub fn gen_random_transversal<R: Rng + ?Sized>(n_left: usize, n_right: usize, rng: &mut R) -> Result<TransversalMatroid> {
    if n_right == 0 {
        return Err(Error::InvalidParameter("transversal matroid needs a right vertex".into()));
    }
    let adjacency = (0..n_left)
        .map(|_| {
            let d = rng.random_range(1..=2.min(n_right));
            index::sample(rng, n_right, d).into_vec()
        })
        .collect();
    TransversalMatroid::new(n_right, adjacency)
}

/// Partition, graphic or transversal matroid on `0..n`, kind chosen uniformly.
pub fn gen_random_matroid<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<AnyMatroid> {
    Ok(match rng.random_range(0..3) {
        0 => gen_random_partition(n, rng.random_range(1..=n.max(1)).min(n.max(1)), rng)?.into(),
        1 => {
            let verts = rng.random_range(2..=4);
            let edges = (0..n)
                .map(|_| {
                    let u = rng.random_range(0..verts);
                    let v = (u + rng.random_range(1..verts)) % verts;
                    (u, v)
                })
                .collect();
            GraphicMatroid::new(verts, edges)?.into()
        }
        _ => gen_random_transversal(n, rng.random_range(1..=3), rng)?.into(),
    })
}

/// Matchoid on `0..n` with `components` random components; uncovered
/// elements are added to the first component.
pub fn gen_random_matchoid<R: Rng + ?Sized>(n: usize, components: usize, rng: &mut R) -> Result<Matchoid> {
    if n == 0 || components == 0 {
        return Err(Error::InvalidParameter("matchoid needs elements and components".into()));
    }
    let mut actives: Vec<Vec<usize>> = (0..components)
        .map(|_| {
            let size = rng.random_range(1..=n);
            index::sample(rng, n, size).into_vec()
        })
        .collect();
    for e in 0..n {
        if !actives.iter().any(|a| a.contains(&e)) {
            actives[0].push(e);
        }
    }
    let comps = actives
        .into_iter()
        .map(|active| {
            let matroid = gen_random_matroid(active.len(), rng)?;
            MatchoidComponent::new(active, matroid)
        })
        .collect::<Result<Vec<_>>>()?;
    Matchoid::new(n, comps)
}
