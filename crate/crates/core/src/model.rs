//! Ground sets, weight functions, profiles, distributions and assignments.

use std::borrow::Cow;

use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

pub type Element = usize;
pub type AgentId = usize;

/// Downward-closed family of subsets of `0..ground_size`.
pub trait IndependenceSystem: Send + Sync {
    fn ground_size(&self) -> usize;

    /// `set` is assumed to hold distinct in-range elements.
    fn is_independent(&self, set: &[Element]) -> bool;
}

/// Sparse nonnegative weights; absent elements weigh zero and so does ⊥.
///
/// Entries are kept sorted by element and strictly positive, so the support
/// is exactly the stored keys.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction<S> {
    entries: Vec<(Element, S)>,
}

impl<S: Scalar> WeightFunction<S> {
    pub fn new(entries: impl IntoIterator<Item = (Element, S)>) -> Result<Self> {
        let mut entries: Vec<(Element, S)> = entries.into_iter().collect();
        if let Some((e, w)) = entries.iter().find(|(_, w)| w.is_neg_tol()) {
            return Err(Error::InvalidInput(format!("negative weight {w} on element {e}")));
        }
        entries.retain(|(_, w)| !w.is_zero_tol());
        entries.sort_by_key(|(e, _)| *e);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput(format!("element {} listed twice", w[0].0)));
        }
        Ok(Self { entries })
    }

    pub fn zero() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn single(e: Element, w: S) -> Result<Self> {
        Self::new([(e, w)])
    }

    /// Builds from entries already sorted, distinct and strictly positive.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(Element, S)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { entries }
    }

    pub fn get(&self, e: Element) -> S {
        match self.entries.binary_search_by_key(&e, |(k, _)| *k) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => S::zero(),
        }
    }

    /// Weight of an assignment target, with `None` standing for ⊥.
    pub fn weight(&self, e: Option<Element>) -> S {
        e.map_or_else(S::zero, |e| self.get(e))
    }

    pub fn entries(&self) -> &[(Element, S)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = Element> + '_ {
        self.entries.iter().map(|(e, _)| *e)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_weight(&self) -> S {
        self.entries
            .iter()
            .fold(S::zero(), |m, (_, w)| m.max_of(w.clone()))
    }

    pub fn max_element(&self) -> Option<Element> {
        self.entries.last().map(|(e, _)| *e)
    }

    pub fn convert<T: Scalar>(&self) -> WeightFunction<T> {
        WeightFunction {
            entries: self
                .entries
                .iter()
                .map(|(e, w)| (*e, T::from_rational(&w.to_rational())))
                .collect(),
        }
    }
}

/// One weight function per agent; agents are `0..m`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightProfile<S> {
    agents: Vec<WeightFunction<S>>,
}

impl<S: Scalar> WeightProfile<S> {
    pub fn new(agents: Vec<WeightFunction<S>>) -> Self {
        Self { agents }
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, a: AgentId) -> &WeightFunction<S> {
        &self.agents[a]
    }

    pub fn agents(&self) -> &[WeightFunction<S>] {
        &self.agents
    }

    pub fn into_agents(self) -> Vec<WeightFunction<S>> {
        self.agents
    }

    /// Largest element referenced by any agent.
    pub fn max_element(&self) -> Option<Element> {
        self.agents.iter().filter_map(|w| w.max_element()).max()
    }

    pub fn convert<T: Scalar>(&self) -> WeightProfile<T> {
        WeightProfile { agents: self.agents.iter().map(WeightFunction::convert).collect() }
    }
}

/// Anything that produces one random weight function per call.
pub trait WeightSource<S>: Sync {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightFunction<S>;
}

/// Finite-support distribution with exact probabilities.
#[derive(Clone, Debug)]
pub struct WeightDistribution<S> {
    atoms: Vec<(Rational, WeightFunction<S>)>,
    cumulative: Vec<f64>,
}

impl<S: Scalar> WeightDistribution<S> {
    pub fn new(atoms: Vec<(Rational, WeightFunction<S>)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("empty atom list".into()));
        }
        if let Some((p, _)) = atoms.iter().find(|(p, _)| p.is_neg_tol()) {
            return Err(Error::InvalidDistribution(format!("negative probability {p}")));
        }
        let total: Rational = atoms.iter().map(|(p, _)| p.clone()).sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let mut acc = Rational::zero();
        let cumulative = atoms
            .iter()
            .map(|(p, _)| {
                acc += p;
                acc.to_f64().unwrap_or(1.0)
            })
            .collect();
        Ok(Self { atoms, cumulative })
    }

    pub fn point(w: WeightFunction<S>) -> Self {
        Self { atoms: vec![(Rational::one(), w)], cumulative: vec![1.0] }
    }

    /// Equal mass on every listed weight function.
    pub fn uniform(ws: Vec<WeightFunction<S>>) -> Result<Self> {
        let n = ws.len() as i64;
        Self::new(ws.into_iter().map(|w| (Rational::from_ratio(1, n.max(1)), w)).collect())
    }

    pub fn atoms(&self) -> &[(Rational, WeightFunction<S>)] {
        &self.atoms
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|c| *c <= u);
        // zero-probability atoms share their cumulative value with a neighbour and are never picked
        i.min(self.atoms.len() - 1)
    }

    pub fn max_element(&self) -> Option<Element> {
        self.atoms.iter().filter_map(|(_, w)| w.max_element()).max()
    }

    pub fn convert<T: Scalar>(&self) -> WeightDistribution<T> {
        WeightDistribution {
            atoms: self.atoms.iter().map(|(p, w)| (p.clone(), w.convert())).collect(),
            cumulative: self.cumulative.clone(),
        }
    }
}

impl<S: Scalar> WeightSource<S> for WeightDistribution<S> {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightFunction<S> {
        self.atoms[self.sample_index(rng)].1.clone()
    }
}

/// Draws each agent's weight function independently.
pub fn sample_profile<S: Scalar, R: Rng + ?Sized>(
    dists: &[WeightDistribution<S>],
    rng: &mut R,
) -> WeightProfile<S> {
    WeightProfile::new(dists.iter().map(|d| d.draw(rng)).collect())
}

/// Agent → element map with `None` for ⊥.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<Option<Element>>);

impl Assignment {
    pub fn empty(m: usize) -> Self {
        Self(vec![None; m])
    }

    pub fn num_agents(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, a: AgentId) -> Option<Element> {
        self.0[a]
    }

    pub fn set(&mut self, a: AgentId, e: Option<Element>) {
        self.0[a] = e;
    }

    /// Assigned elements in agent order.
    pub fn elements(&self) -> Vec<Element> {
        self.0.iter().flatten().copied().collect()
    }
}

/// Checks injectivity on non-⊥ values and independence of the image.
pub fn is_feasible<I: IndependenceSystem + ?Sized>(system: &I, asg: &Assignment) -> Result<bool> {
    let n = system.ground_size();
    let mut elems = asg.elements();
    if let Some(e) = elems.iter().find(|&&e| e >= n) {
        return Err(Error::InvalidInstance(format!("element {e} outside ground set of size {n}")));
    }
    elems.sort_unstable();
    if elems.windows(2).any(|w| w[0] == w[1]) {
        return Ok(false);
    }
    Ok(system.is_independent(&elems))
}

pub fn assignment_value<S: Scalar>(profile: &WeightProfile<S>, asg: &Assignment) -> Result<S> {
    if asg.num_agents() > profile.num_agents() {
        return Err(Error::InvalidInput(format!(
            "assignment covers {} agents but the profile has {}",
            asg.num_agents(),
            profile.num_agents()
        )));
    }
    let mut total = S::zero();
    for (a, e) in asg.0.iter().enumerate() {
        total += profile.agent(a).weight(*e);
    }
    Ok(total)
}

/// Edge-indexed hypergraph access shared by explicit and implicit hypergraphs.
pub trait HypergraphLike: Send + Sync {
    fn num_nodes(&self) -> usize;
    fn num_edges(&self) -> usize;
    /// Sorted node list of edge `e`.
    fn edge_nodes(&self, e: Element) -> Cow<'_, [usize]>;

    fn edges_intersect(&self, e: Element, f: Element) -> bool {
        if e == f {
            return true;
        }
        sorted_intersect(&self.edge_nodes(e), &self.edge_nodes(f))
    }
}

pub(crate) fn sorted_intersect(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

pub(crate) fn edges_form_matching<H: HypergraphLike + ?Sized>(h: &H, set: &[Element]) -> bool {
    let mut used = vec![false; h.num_nodes()];
    for &e in set {
        for &v in h.edge_nodes(e).iter() {
            if std::mem::replace(&mut used[v], true) {
                return false;
            }
        }
    }
    true
}

/// Explicit hypergraph whose independent sets are matchings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n_nodes: usize,
    edges: Vec<Vec<usize>>,
    k: usize,
}

impl Hypergraph {
    pub fn new(n_nodes: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        let mut clean = Vec::with_capacity(edges.len());
        for (i, mut edge) in edges.into_iter().enumerate() {
            edge.sort_unstable();
            edge.dedup();
            if edge.is_empty() {
                return Err(Error::InvalidInstance(format!("edge {i} is empty")));
            }
            if let Some(v) = edge.iter().find(|&&v| v >= n_nodes) {
                return Err(Error::InvalidInstance(format!(
                    "edge {i} uses node {v} but there are only {n_nodes} nodes"
                )));
            }
            clean.push(edge);
        }
        let k = clean.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { n_nodes, edges: clean, k })
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge(&self, e: Element) -> &[usize] {
        &self.edges[e]
    }

    /// Largest edge size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Edges incident to node `v`, in id order.
    pub fn incident(&self, v: usize) -> Vec<Element> {
        (0..self.edges.len()).filter(|&e| self.edges[e].binary_search(&v).is_ok()).collect()
    }
}

impl HypergraphLike for Hypergraph {
    fn num_nodes(&self) -> usize {
        self.n_nodes
    }

    fn num_edges(&self) -> usize {
        self.edges.len()
    }

    fn edge_nodes(&self, e: Element) -> Cow<'_, [usize]> {
        Cow::Borrowed(&self.edges[e])
    }
}

impl IndependenceSystem for Hypergraph {
    fn ground_size(&self) -> usize {
        self.edges.len()
    }

    fn is_independent(&self, set: &[Element]) -> bool {
        edges_form_matching(self, set)
    }
}
