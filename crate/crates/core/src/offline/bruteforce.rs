//! Exhaustive optimum of the assignment problem with branch and bound.

use crate::error::{Error, Result};
use crate::matroids::Matroid;
use crate::model::{Assignment, Element, IndependenceSystem, WeightProfile};
use crate::scalar::Scalar;

/// Default cap on explored search nodes.
pub const DEFAULT_BUDGET: usize = 50_000_000;

/// Maximum-weight feasible assignment.
///
/// Agents are branched in id order, each trying ⊥ first and then its
/// positive-weight elements in id order; only strictly better completions
/// replace the incumbent, so ties resolve to the lexicographically smallest
/// assignment (⊥ before any element). `budget` bounds the number of search
/// nodes.
pub fn offline_opt_bruteforce<I, S>(system: &I, profile: &WeightProfile<S>, budget: usize) -> Result<(Assignment, S)>
where
    I: IndependenceSystem + ?Sized,
    S: Scalar,
{
    let n = system.ground_size();
    let m = profile.num_agents();
    for (a, w) in profile.agents().iter().enumerate() {
        if let Some(e) = w.support().find(|&e| e >= n) {
            return Err(Error::InvalidInstance(format!(
                "agent {a} weighs element {e} outside ground set of size {n}"
            )));
        }
    }
    let mut suffix = vec![S::zero(); m + 1];
    for a in (0..m).rev() {
        suffix[a] = suffix[a + 1].clone() + profile.agent(a).max_weight();
    }
    let mut search = Search {
        system,
        profile,
        suffix,
        budget,
        nodes: 0,
        current: vec![None; m],
        chosen: Vec::with_capacity(m),
        used: vec![false; n],
        best: vec![None; m],
        best_value: S::zero(),
    };
    search.descend(0, S::zero())?;
    Ok((Assignment(search.best), search.best_value))
}

/// Matroid entry point; the search is the same exhaustive one.
pub fn offline_opt_matroid<M, S>(matroid: &M, profile: &WeightProfile<S>, budget: usize) -> Result<(Assignment, S)>
where
    M: Matroid + ?Sized,
    S: Scalar,
{
    offline_opt_bruteforce(matroid, profile, budget)
}

struct Search<'a, I: ?Sized, S> {
    system: &'a I,
    profile: &'a WeightProfile<S>,
    suffix: Vec<S>,
    budget: usize,
    nodes: usize,
    current: Vec<Option<Element>>,
    chosen: Vec<Element>,
    used: Vec<bool>,
    best: Vec<Option<Element>>,
    best_value: S,
}

impl<I: IndependenceSystem + ?Sized, S: Scalar> Search<'_, I, S> {
    fn descend(&mut self, a: usize, value: S) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Resource(format!(
                "brute-force search exceeded {} nodes ({} agents)",
                self.budget,
                self.current.len()
            )));
        }
        if a == self.current.len() {
            if (value.clone() - self.best_value.clone()).is_pos_tol() {
                self.best_value = value;
                self.best.clone_from(&self.current);
            }
            return Ok(());
        }
        // nothing below this node can beat the incumbent strictly
        if !(value.clone() + self.suffix[a].clone() - self.best_value.clone()).is_pos_tol() {
            return Ok(());
        }
        self.current[a] = None;
        self.descend(a + 1, value.clone())?;
        let profile = self.profile;
        for (e, w) in profile.agent(a).entries() {
            if self.used[*e] {
                continue;
            }
            self.chosen.push(*e);
            if self.system.is_independent(&self.chosen) {
                self.used[*e] = true;
                self.current[a] = Some(*e);
                self.descend(a + 1, value.clone() + w.clone())?;
                self.current[a] = None;
                self.used[*e] = false;
            }
            self.chosen.pop();
        }
        Ok(())
    }
}
