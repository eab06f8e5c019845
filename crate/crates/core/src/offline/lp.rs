//! The hypergraph-matching LP and the matchoid LP over fractional assignments.
//!
//! Both LPs have one variable `x_a(e)` per agent and positive-weight element
//! (zero-weight pairs can be dropped without changing the optimum or the
//! lexicographic tie-break) and leave `x_a(⊥)` as the slack of the agent row
//! `Σ_e x_a(e) ≤ 1`. Among optimal solutions the one that is lexicographically
//! smallest in (agent, element) order is returned.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matroids::Matchoid;
use crate::model::{AgentId, Element, HypergraphLike, WeightProfile};
use crate::offline::simplex::{maximize, LpOptions, Row};
use crate::offline::SubsetRanks;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<S> {
    /// Positive entries of `x_a`, sorted by element.
    pub x: Vec<Vec<(Element, S)>>,
    /// `x_a(⊥)`.
    pub bottom: Vec<S>,
    /// Element loads `y(e) = Σ_a x_a(e)` (matchoid LP only), positive entries sorted.
    pub y: Option<Vec<(Element, S)>>,
    pub objective: S,
}

impl<S: Scalar> LpSolution<S> {
    pub fn num_agents(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self, a: AgentId, e: Element) -> S {
        match self.x[a].binary_search_by_key(&e, |(k, _)| *k) {
            Ok(i) => self.x[a][i].1.clone(),
            Err(_) => S::zero(),
        }
    }

    /// Marginal of agent `a` over `E ∪ {⊥}`, ⊥ (as `None`) first.
    pub fn marginal(&self, a: AgentId) -> Vec<(Option<Element>, S)> {
        let mut out = Vec::with_capacity(self.x[a].len() + 1);
        if !self.bottom[a].is_zero_tol() {
            out.push((None, self.bottom[a].clone()));
        }
        out.extend(self.x[a].iter().map(|(e, v)| (Some(*e), v.clone())));
        out
    }

    pub fn load(&self, e: Element) -> S {
        let mut total = S::zero();
        for xa in &self.x {
            if let Ok(i) = xa.binary_search_by_key(&e, |(k, _)| *k) {
                total += xa[i].1.clone();
            }
        }
        total
    }
}

struct Vars<S> {
    /// (agent, element, weight) in (agent, element) order
    list: Vec<(AgentId, Element, S)>,
}

impl<S: Scalar> Vars<S> {
    fn new(profile: &WeightProfile<S>, ground: usize) -> Result<Self> {
        let mut list = Vec::new();
        for (a, w) in profile.agents().iter().enumerate() {
            for (e, we) in w.entries() {
                if *e >= ground {
                    return Err(Error::InvalidInstance(format!(
                        "agent {a} weighs element {e} outside ground set of size {ground}"
                    )));
                }
                list.push((a, *e, we.clone()));
            }
        }
        Ok(Self { list })
    }

    fn agent_rows(&self, m: usize) -> Vec<Row<S>> {
        let mut rows: Vec<Row<S>> = (0..m).map(|_| Row { coefs: Vec::new(), rhs: S::one() }).collect();
        for (j, (a, _, _)) in self.list.iter().enumerate() {
            rows[*a].coefs.push((j, S::one()));
        }
        rows.retain(|r| !r.coefs.is_empty());
        rows
    }

    fn by_element(&self) -> BTreeMap<Element, Vec<usize>> {
        let mut map: BTreeMap<Element, Vec<usize>> = BTreeMap::new();
        for (j, (_, e, _)) in self.list.iter().enumerate() {
            map.entry(*e).or_default().push(j);
        }
        map
    }

    fn solve(&self, m: usize, rows: &[Row<S>], opts: &LpOptions) -> Result<LpSolution<S>> {
        let c: Vec<S> = self.list.iter().map(|(_, _, w)| w.clone()).collect();
        let out = maximize(&c, rows, opts)?;
        let mut x = vec![Vec::new(); m];
        let mut mass = vec![S::zero(); m];
        for ((a, e, _), v) in self.list.iter().zip(out.x) {
            if !v.is_zero_tol() {
                mass[*a] += v.clone();
                x[*a].push((*e, v));
            }
        }
        let bottom = mass.into_iter().map(|s| (S::one() - s).clamp_nonneg()).collect();
        Ok(LpSolution { x, bottom, y: None, objective: out.objective })
    }
}

/// Solves `max Σ w_a(e) x_a(e)` subject to one unit of mass per agent and at
/// most one unit of edge mass through every node.
pub fn solve_hm_lp<H, S>(hg: &H, profile: &WeightProfile<S>) -> Result<LpSolution<S>>
where
    H: HypergraphLike + ?Sized,
    S: Scalar,
{
    solve_hm_lp_with(hg, profile, &LpOptions::default())
}

pub fn solve_hm_lp_with<H, S>(hg: &H, profile: &WeightProfile<S>, opts: &LpOptions) -> Result<LpSolution<S>>
where
    H: HypergraphLike + ?Sized,
    S: Scalar,
{
    let vars = Vars::new(profile, hg.num_edges())?;
    let mut rows = vars.agent_rows(profile.num_agents());
    let mut node_rows: BTreeMap<usize, Vec<(usize, S)>> = BTreeMap::new();
    for (e, js) in vars.by_element() {
        for &v in hg.edge_nodes(e).iter() {
            let row = node_rows.entry(v).or_default();
            row.extend(js.iter().map(|&j| (j, S::one())));
        }
    }
    rows.extend(node_rows.into_values().map(|coefs| Row { coefs, rhs: S::one() }));
    vars.solve(profile.num_agents(), &rows, opts)
}

/// Solves the matchoid LP: the element loads restricted to each component lie
/// in that component's matroid polytope.
///
/// Rank constraints are enumerated explicitly over the flats of each
/// component restricted to elements that carry a variable; other subsets are
/// implied. Components with more than
/// [`MAX_ENUMERATED`](crate::offline::MAX_ENUMERATED) such elements are
/// refused.
pub fn solve_matchoid_lp<S: Scalar>(mc: &Matchoid, profile: &WeightProfile<S>) -> Result<LpSolution<S>> {
    solve_matchoid_lp_with(mc, profile, &LpOptions::default())
}

pub fn solve_matchoid_lp_with<S: Scalar>(
    mc: &Matchoid,
    profile: &WeightProfile<S>,
    opts: &LpOptions,
) -> Result<LpSolution<S>> {
    use crate::model::IndependenceSystem;
    let vars = Vars::new(profile, mc.ground_size())?;
    let mut rows = vars.agent_rows(profile.num_agents());
    let by_element = vars.by_element();
    for comp in mc.components() {
        let used: Vec<usize> = (0..comp.active().len())
            .filter(|&i| by_element.contains_key(&comp.active()[i]))
            .collect();
        if used.is_empty() {
            continue;
        }
        let ranks = SubsetRanks::new(comp.matroid(), &used)?;
        for flat in ranks.flats() {
            if flat == 0 {
                continue;
            }
            let coefs = ranks
                .members(flat)
                .flat_map(|i| by_element[&comp.active()[used[i]]].iter().map(|&j| (j, S::one())))
                .collect();
            rows.push(Row { coefs, rhs: S::from_usize(ranks.rank[flat] as usize) });
        }
    }
    let mut sol = vars.solve(profile.num_agents(), &rows, opts)?;
    let mut y: BTreeMap<Element, S> = BTreeMap::new();
    for xa in &sol.x {
        for (e, v) in xa {
            *y.entry(*e).or_insert_with(S::zero) += v.clone();
        }
    }
    sol.y = Some(y.into_iter().collect());
    Ok(sol)
}
