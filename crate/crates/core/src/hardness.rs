//! Lower-bound instance separating online algorithms from the offline
//! optimum by a `log m` versus `m` gap.
//!
//! Nodes are two copies of every off-diagonal cell of an `m × m` table plus
//! one node `x_i` per row. Every edge carries a label `ℓ`, takes one node from
//! each off-diagonal cell of row `ℓ` and of column `ℓ`, and ends with `x_ℓ`,
//! so it has `2m − 1` nodes. An agent's weight function fixes a label and one
//! node per column cell (the column set `C`); its positive edges are the
//! `2^{m−1}` edges with that label and column set, each of weight 1.
//!
//! Layout: cell `(i, j)`, `i ≠ j`, copy `c ∈ {0,1}` is node
//! `2·(i·(m−1) + (j if j < i else j − 1)) + c`; `x_i` is node `2m(m−1) + i`.
//! Edge ids are `label·4^{m−1} + colbits·2^{m−1} + rowbits`, where bit `p` of
//! `rowbits` (resp. `colbits`) picks the copy in the `p`-th off-diagonal cell
//! of the row (resp. column), cells taken in increasing order of the other
//! coordinate. The edge set is never materialised.

use std::borrow::Cow;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{mean_se, par_map, trial_rng, trial_seed, MeanSe, Model};
use crate::model::{edges_form_matching, Element, HypergraphLike, IndependenceSystem, WeightFunction, WeightProfile, WeightSource};
use crate::offline::simplex::LpOptions;
use crate::online::{run_prophet_iid, run_prophet_secretary_single_sample};
use crate::samplers::HmSampler;
use crate::scalar::Scalar;

/// Largest table size for which positive edges are enumerated.
pub const MAX_GAP_M: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HardnessInstance {
    m: usize,
}

/// Decoded edge id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeParts {
    pub label: usize,
    pub colbits: u32,
    pub rowbits: u32,
}

pub fn build_hardness(m: usize) -> Result<HardnessInstance> {
    HardnessInstance::new(m)
}

impl HardnessInstance {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("table size must be at least 2, got {m}")));
        }
        if m > 16 {
            return Err(Error::Resource(format!("table size {m} overflows the edge id layout")));
        }
        let inst = Self { m };
        debug_assert_eq!(inst.num_nodes(), 2 * m * m - m);
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edge_size(&self) -> usize {
        2 * self.m - 1
    }

    fn half(&self) -> u32 {
        (self.m - 1) as u32
    }

    /// Position of column `j` among the off-diagonal cells of row `i` (and symmetrically).
    fn offset(i: usize, j: usize) -> usize {
        if j < i {
            j
        } else {
            j - 1
        }
    }

    pub fn cell_node(&self, i: usize, j: usize, copy: usize) -> usize {
        debug_assert!(i != j && i < self.m && j < self.m && copy < 2);
        2 * (i * (self.m - 1) + Self::offset(i, j)) + copy
    }

    pub fn x_node(&self, i: usize) -> usize {
        2 * self.m * (self.m - 1) + i
    }

    /// Inverse of the layout: `Ok((i, j, copy))` for table nodes, `Err(i)` for `x_i`.
    pub fn decode_node(&self, v: usize) -> std::result::Result<(usize, usize, usize), usize> {
        let table = 2 * self.m * (self.m - 1);
        if v >= table {
            return Err(v - table);
        }
        let copy = v % 2;
        let cell = v / 2;
        let i = cell / (self.m - 1);
        let p = cell % (self.m - 1);
        let j = if p < i { p } else { p + 1 };
        Ok((i, j, copy))
    }

    pub fn edge_id(&self, parts: EdgeParts) -> Element {
        let h = self.half();
        (parts.label << (2 * h)) | ((parts.colbits as usize) << h) | parts.rowbits as usize
    }

    pub fn decode_edge(&self, e: Element) -> EdgeParts {
        let h = self.half();
        let mask = (1usize << h) - 1;
        EdgeParts { label: e >> (2 * h), colbits: ((e >> h) & mask) as u32, rowbits: (e & mask) as u32 }
    }

    /// Nodes of the column set of `label` chosen by `colbits`.
    pub fn column_set(&self, label: usize, colbits: u32) -> Vec<usize> {
        (0..self.m)
            .filter(|&i| i != label)
            .map(|i| self.cell_node(i, label, (colbits >> Self::offset(label, i) & 1) as usize))
            .collect()
    }

    fn nodes_of(&self, parts: EdgeParts) -> Vec<usize> {
        let l = parts.label;
        let mut nodes = self.column_set(l, parts.colbits);
        nodes.extend(
            (0..self.m)
                .filter(|&j| j != l)
                .map(|j| self.cell_node(l, j, (parts.rowbits >> Self::offset(l, j) & 1) as usize)),
        );
        nodes.push(self.x_node(l));
        nodes.sort_unstable();
        nodes
    }

    /// Draws a label and a column set uniformly.
    pub fn draw_agent<R: Rng + ?Sized>(&self, rng: &mut R) -> HardnessDraw {
        let label = rng.random_range(0..self.m);
        let colbits = rng.random::<u32>() & ((1u32 << self.half()) - 1);
        HardnessDraw { label, colbits }
    }

    pub fn is_positive(&self, draw: &HardnessDraw, e: Element) -> bool {
        if e >= self.num_edges() {
            return false;
        }
        let p = self.decode_edge(e);
        p.label == draw.label && p.colbits == draw.colbits
    }

    /// The `2^{m−1}` positive edges of `draw`, in increasing id order.
    pub fn positive_edges(&self, draw: &HardnessDraw) -> impl Iterator<Item = Element> + '_ {
        let draw = *draw;
        (0..1u32 << self.half()).map(move |rowbits| {
            self.edge_id(EdgeParts { label: draw.label, colbits: draw.colbits, rowbits })
        })
    }

    pub fn weight_function<S: Scalar>(&self, draw: &HardnessDraw) -> Result<WeightFunction<S>> {
        if self.m > MAX_GAP_M {
            return Err(Error::Resource(format!(
                "table size {} exceeds the enumeration limit {MAX_GAP_M}",
                self.m
            )));
        }
        Ok(WeightFunction::from_sorted_unchecked(self.positive_edges(draw).map(|e| (e, S::one())).collect()))
    }
}

impl HypergraphLike for HardnessInstance {
    fn num_nodes(&self) -> usize {
        2 * self.m * self.m - self.m
    }

    fn num_edges(&self) -> usize {
        self.m << (2 * self.half())
    }

    fn edge_nodes(&self, e: Element) -> Cow<'_, [usize]> {
        Cow::Owned(self.nodes_of(self.decode_edge(e)))
    }
}

impl IndependenceSystem for HardnessInstance {
    fn ground_size(&self) -> usize {
        self.num_edges()
    }

    fn is_independent(&self, set: &[Element]) -> bool {
        edges_form_matching(self, set)
    }
}

/// An agent's hidden type: a label and one bit per off-diagonal cell of that label's column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HardnessDraw {
    pub label: usize,
    pub colbits: u32,
}

/// IID source of hardness weight functions.
#[derive(Clone, Copy, Debug)]
pub struct HardnessDistribution {
    pub instance: HardnessInstance,
}

impl<S: Scalar> WeightSource<S> for HardnessDistribution {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightFunction<S> {
        let d = self.instance.draw_agent(rng);
        self.instance.weight_function(&d).expect("table size checked when the experiment starts")
    }
}

/// Number of distinct labels among the draws.
pub fn distinct_labels(draws: &[HardnessDraw]) -> usize {
    let mut labels: Vec<usize> = draws.iter().map(|d| d.label).collect();
    labels.sort_unstable();
    labels.dedup();
    labels.len()
}

/// First draw of every label, in order of first appearance.
pub fn representatives(draws: &[HardnessDraw]) -> Vec<HardnessDraw> {
    let mut seen = Vec::new();
    let mut reps = Vec::new();
    for d in draws {
        if !seen.contains(&d.label) {
            seen.push(d.label);
            reps.push(*d);
        }
    }
    reps
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessMatching {
    /// One edge per representative, in input order.
    pub edges: Vec<Element>,
}

/// Pairwise-disjoint edges, one of weight 1 for every representative.
///
/// Representative `i` with label `ℓ_i` takes its own column set, `x_{ℓ_i}`,
/// and in row `ℓ_i`: for a cell in the column of another representative `j`,
/// the copy not in `j`'s column set; for every other cell, copy 0.
pub fn witness_matching(inst: &HardnessInstance, reps: &[HardnessDraw]) -> Result<WitnessMatching> {
    let m = inst.m();
    let mut owner = vec![None; m];
    for (idx, d) in reps.iter().enumerate() {
        if d.label >= m {
            return Err(Error::InvalidInput(format!("label {} outside 0..{m}", d.label)));
        }
        if owner[d.label].replace(idx).is_some() {
            return Err(Error::InvalidInput(format!("label {} appears twice among representatives", d.label)));
        }
    }
    let mut edges = Vec::with_capacity(reps.len());
    for d in reps {
        let l = d.label;
        let mut rowbits = 0u32;
        for t in (0..m).filter(|&t| t != l) {
            if let Some(j) = owner[t] {
                // cell (ℓ_i, ℓ_j) lies in column ℓ_j; take the copy C(b_j) left free
                let used = reps[j].colbits >> HardnessInstance::offset(t, l) & 1;
                rowbits |= (1 - used) << HardnessInstance::offset(l, t);
            }
        }
        edges.push(inst.edge_id(EdgeParts { label: l, colbits: d.colbits, rowbits }));
    }
    for (d, &e) in reps.iter().zip(&edges) {
        if !inst.is_positive(d, e) {
            return Err(Error::Internal(format!("witness edge {e} has weight 0 for its agent")));
        }
    }
    if !edges_form_matching(inst, &edges) {
        return Err(Error::Internal("witness edges are not pairwise disjoint".into()));
    }
    Ok(WitnessMatching { edges })
}

/// `m(1 − (1 − 1/m)^m)`, the expected number of distinct labels among `m` draws.
pub fn exact_expected_labels(m: usize) -> f64 {
    let mf = m as f64;
    mf * (1.0 - (1.0 - 1.0 / mf).powi(m as i32))
}

/// Empirical mean of the number of distinct labels among `m` draws.
pub fn expected_opt_lower_bound<R: Rng + ?Sized>(m: usize, trials: usize, rng: &mut R) -> Result<MeanSe> {
    let inst = HardnessInstance::new(m)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let ls: Vec<f64> = (0..trials)
        .map(|_| {
            let draws: Vec<HardnessDraw> = (0..m).map(|_| inst.draw_agent(rng)).collect();
            distinct_labels(&draws) as f64
        })
        .collect();
    Ok(mean_se(&ls))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub m: usize,
    pub trials: usize,
    pub model: Model,
    pub mean_l: f64,
    pub se_l: f64,
    pub exact_mean_l: f64,
    /// `m(1 − 1/e)`.
    pub bound: f64,
    pub mean_alg: f64,
    pub se_alg: f64,
    /// `log₂(m + 1)`.
    pub log2_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapTrial {
    pub labels: usize,
    pub alg: f64,
}

/// One online run against `m` hardness agents. The optimum of the realized
/// profile equals its number of distinct labels.
///
/// Sampler LPs are solved in floating point without the lexicographic tie-break,
/// since the ceiling on the algorithm's value does not depend on which
/// optimal vertex is used.
pub fn gap_trial<R: Rng + ?Sized>(inst: &HardnessInstance, model: Model, rng: &mut R) -> Result<GapTrial> {
    let m = inst.m();
    if m > MAX_GAP_M {
        return Err(Error::Resource(format!("table size {m} exceeds the enumeration limit {MAX_GAP_M}")));
    }
    let mut sampler = HmSampler::new(inst, inst.edge_size());
    sampler.options = LpOptions { lexicographic: false, ..LpOptions::default() };
    let dist = HardnessDistribution { instance: *inst };
    let run = match model {
        Model::Iid => run_prophet_iid::<_, f64, _, _>(&sampler, &dist, m, false, rng)?,
        Model::Pss => run_prophet_secretary_single_sample::<_, f64, _, _>(&sampler, &vec![dist; m], rng)?,
        Model::Secretary => {
            return Err(Error::InvalidParameter("the gap experiment uses a prophet model".into()));
        }
    };
    Ok(GapTrial { labels: realized_labels(inst, &run.realized), alg: run.value })
}

fn realized_labels<S: Scalar>(inst: &HardnessInstance, profile: &WeightProfile<S>) -> usize {
    let mut labels: Vec<usize> = profile
        .agents()
        .iter()
        .filter_map(|w| w.support().next().map(|e| inst.decode_edge(e).label))
        .collect();
    labels.sort_unstable();
    labels.dedup();
    labels.len()
}

/// Mean online value and mean optimum over `trials` independent gap trials.
pub fn run_gap_experiment(m: usize, model: Model, trials: usize, seed: u64) -> Result<GapReport> {
    let inst = HardnessInstance::new(m)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let results = par_map(trials, |t| gap_trial(&inst, model, &mut trial_rng(trial_seed(seed, t as u64))))?;
    let ls: Vec<f64> = results.iter().map(|r| r.labels as f64).collect();
    let algs: Vec<f64> = results.iter().map(|r| r.alg).collect();
    let l = mean_se(&ls);
    let a = mean_se(&algs);
    Ok(GapReport {
        m,
        trials,
        model,
        mean_l: l.mean,
        se_l: l.se,
        exact_mean_l: exact_expected_labels(m),
        bound: m as f64 * (1.0 - (-1.0f64).exp()),
        mean_alg: a.mean,
        se_alg: a.se,
        log2_bound: ((m + 1) as f64).log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offline::{offline_opt_bruteforce, DEFAULT_BUDGET};
    use crate::scalar::Rational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sizes() {
        assert_eq!(build_hardness(2).unwrap().num_nodes(), 6);
        let inst = build_hardness(4).unwrap();
        assert_eq!(inst.num_nodes(), 28);
        assert_eq!(inst.edge_size(), 7);
        assert!(build_hardness(1).is_err());
    }

    #[test]
    fn node_layout_round_trips() {
        for m in 2..=6 {
            let inst = build_hardness(m).unwrap();
            let mut seen = vec![false; inst.num_nodes()];
            for (v, slot) in seen.iter_mut().enumerate() {
                let back = match inst.decode_node(v) {
                    Ok((i, j, c)) => inst.cell_node(i, j, c),
                    Err(i) => inst.x_node(i),
                };
                assert_eq!(back, v);
                assert!(!std::mem::replace(slot, true));
            }
        }
    }

    #[test]
    fn positive_edges_match_predicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 2..=6 {
            let inst = build_hardness(m).unwrap();
            for _ in 0..5 {
                let d = inst.draw_agent(&mut rng);
                let pos: Vec<Element> = inst.positive_edges(&d).collect();
                assert_eq!(pos.len(), 1 << (m - 1));
                for &e in &pos {
                    let nodes = inst.edge_nodes(e);
                    assert_eq!(nodes.len(), 2 * m - 1);
                    assert!(nodes.contains(&inst.x_node(d.label)));
                    assert!(inst.column_set(d.label, d.colbits).iter().all(|v| nodes.contains(v)));
                }
                let count = (0..inst.num_edges()).filter(|&e| inst.is_positive(&d, e)).count();
                assert_eq!(count, pos.len());
            }
        }
    }

    #[test]
    fn witness_is_a_matching_of_positive_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let m = rng.random_range(2..=8);
            let inst = build_hardness(m).unwrap();
            let draws: Vec<HardnessDraw> = (0..m).map(|_| inst.draw_agent(&mut rng)).collect();
            let reps = representatives(&draws);
            let w = witness_matching(&inst, &reps).unwrap();
            assert_eq!(w.edges.len(), distinct_labels(&draws));
        }
        let inst = build_hardness(3).unwrap();
        let dup = [HardnessDraw { label: 1, colbits: 0 }, HardnessDraw { label: 1, colbits: 1 }];
        assert!(matches!(witness_matching(&inst, &dup), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn optimum_equals_label_count_for_small_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 2..=4 {
            let inst = build_hardness(m).unwrap();
            for _ in 0..20 {
                let draws: Vec<HardnessDraw> = (0..m).map(|_| inst.draw_agent(&mut rng)).collect();
                let profile = WeightProfile::new(
                    draws.iter().map(|d| inst.weight_function::<Rational>(d).unwrap()).collect(),
                );
                let (_, opt) = offline_opt_bruteforce(&inst, &profile, DEFAULT_BUDGET).unwrap();
                assert_eq!(opt, Rational::from_usize(distinct_labels(&draws)));
            }
        }
    }

    #[test]
    fn label_expectation() {
        assert!((exact_expected_labels(2) - 1.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let one = expected_opt_lower_bound(5, 1, &mut rng).unwrap();
        assert!(one.mean >= 1.0 && one.mean <= 5.0 && one.mean.fract() == 0.0);
        let est = expected_opt_lower_bound(2, 20_000, &mut rng).unwrap();
        assert!((est.mean - 1.5).abs() <= 3.0 * est.se + 1e-9);
    }

    #[test]
    fn small_gap_run() {
        let rep = run_gap_experiment(4, Model::Iid, 20, 9).unwrap();
        assert!(rep.mean_alg <= rep.mean_l + 1e-9);
        assert_eq!(rep.trials, 20);
    }
}
