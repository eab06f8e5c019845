//! Writes a point of a matroid polytope as a convex combination of
//! independent-set indicator vectors.

use crate::error::{Error, Result};
use crate::model::{Element, IndependenceSystem};
use crate::offline::SubsetRanks;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDecomposition<S> {
    /// `(λ_I, I)` with positive λ summing to one; each `I` sorted.
    pub atoms: Vec<(S, Vec<Element>)>,
}

impl<S: Scalar> ConvexDecomposition<S> {
    /// `Σ_{I∋e} λ_I`.
    pub fn mass_containing(&self, e: Element) -> S {
        let mut total = S::zero();
        for (l, set) in &self.atoms {
            if set.binary_search(&e).is_ok() {
                total += l.clone();
            }
        }
        total
    }

    /// `Σ λ_I χ^I` restricted to the elements that appear.
    pub fn reconstruct(&self) -> Vec<(Element, S)> {
        let mut map = std::collections::BTreeMap::new();
        for (l, set) in &self.atoms {
            for &e in set {
                *map.entry(e).or_insert_with(S::zero) += l.clone();
            }
        }
        map.into_iter().collect()
    }

    pub fn map_elements(self, f: impl Fn(Element) -> Element) -> Self {
        let atoms = self
            .atoms
            .into_iter()
            .map(|(l, set)| {
                let mut set: Vec<Element> = set.into_iter().map(&f).collect();
                set.sort_unstable();
                (l, set)
            })
            .collect();
        Self { atoms }
    }
}

/// Decomposes `z` (sparse, element → value) into at most `|supp z| + 1` atoms.
///
/// Repeatedly takes an independent set that spans every set currently tight
/// for the residual, maximal within the residual support, and removes the
/// largest multiple that keeps the residual inside the scaled polytope. The
/// result is checked against `z` before it is returned.
pub fn decompose_polytope_point<M, S>(matroid: &M, z: &[(Element, S)]) -> Result<ConvexDecomposition<S>>
where
    M: IndependenceSystem + ?Sized,
    S: Scalar,
{
    let mut pairs: Vec<(Element, S)> = Vec::with_capacity(z.len());
    for (e, v) in z {
        if v.is_neg_tol() {
            return Err(Error::InvalidInput(format!("negative coordinate {v} on element {e}")));
        }
        if *e >= matroid.ground_size() {
            return Err(Error::InvalidInput(format!("element {e} outside the matroid ground set")));
        }
        if !v.is_zero_tol() {
            pairs.push((*e, v.clone()));
        }
    }
    pairs.sort_by_key(|(e, _)| *e);
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput("element listed twice".into()));
    }
    let elems: Vec<Element> = pairs.iter().map(|(e, _)| *e).collect();
    let ranks = SubsetRanks::new(matroid, &elems)?;
    let n = elems.len();
    let full = ranks.full();
    let mut r: Vec<S> = pairs.iter().map(|(_, v)| v.clone()).collect();
    let sums = subset_sums(&r);
    if let Some(s) = (1..=full).find(|&s| (sums[s].clone() - S::from_usize(ranks.rank[s] as usize)).is_pos_tol()) {
        return Err(Error::InvalidInput(format!(
            "point violates the rank constraint on {:?}",
            ranks.members(s).map(|i| elems[i]).collect::<Vec<_>>()
        )));
    }

    let mut mu = S::one();
    let mut atoms: Vec<(S, usize)> = Vec::new();
    for _ in 0..n + 2 {
        if !mu.is_pos_tol() {
            break;
        }
        let supp: usize = (0..n).filter(|&i| r[i].is_pos_tol()).fold(0, |m, i| m | 1 << i);
        if supp == 0 {
            atoms.push((mu.clone(), 0));
            mu = S::zero();
            break;
        }
        let sums = subset_sums(&r);
        let slack = |s: usize| mu.clone() * S::from_usize(ranks.rank[s] as usize) - sums[s].clone();
        let mut tight: Vec<usize> = submasks(supp).filter(|&s| s != 0 && slack(s).is_zero_tol()).collect();
        tight.sort_by_key(|s| s.count_ones());
        let independent = |set: usize| ranks.rank[set] as u32 == set.count_ones();
        let spans_tight = |set: usize| tight.iter().all(|&t| (set & t).count_ones() == ranks.rank[t] as u32);

        let mut order: Vec<usize> = ranks.members(supp).collect();
        order.sort_by(|&a, &b| r[b].partial_cmp(&r[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        let mut set = 0usize;
        for &t in &tight {
            for &i in &order {
                if t >> i & 1 == 1 && set >> i & 1 == 0 && independent(set | 1 << i) {
                    set |= 1 << i;
                }
            }
        }
        for &i in &order {
            if set >> i & 1 == 0 && independent(set | 1 << i) {
                set |= 1 << i;
            }
        }
        if !spans_tight(set) {
            set = submasks(supp)
                .filter(|&s| independent(s) && spans_tight(s))
                .max_by_key(|s| s.count_ones())
                .ok_or_else(|| Error::Internal("no independent set spans the tight sets".into()))?;
        }

        let mut lambda = mu.clone();
        for i in ranks.members(set) {
            lambda = min(lambda, r[i].clone());
        }
        for s in submasks(supp) {
            let deficit = ranks.rank[s] as u32 - (set & s).count_ones().min(ranks.rank[s] as u32);
            if deficit > 0 {
                lambda = min(lambda, slack(s) / S::from_usize(deficit as usize));
            }
        }
        if !lambda.is_pos_tol() {
            return Err(Error::Internal("decomposition step made no progress".into()));
        }
        for i in ranks.members(set) {
            r[i] = (r[i].clone() - lambda.clone()).clamp_nonneg();
        }
        mu -= lambda.clone();
        atoms.push((lambda, set));
    }
    if mu.is_pos_tol() || r.iter().any(|v| v.is_pos_tol()) {
        return Err(Error::Internal("decomposition did not terminate within the step bound".into()));
    }

    let mut merged: Vec<(S, usize)> = Vec::new();
    for (l, set) in atoms {
        match merged.iter_mut().find(|(_, s)| *s == set) {
            Some(slot) => slot.0 += l,
            None => merged.push((l, set)),
        }
    }
    let dec = ConvexDecomposition {
        atoms: merged
            .into_iter()
            .map(|(l, set)| (l, ranks.members(set).map(|i| elems[i]).collect()))
            .collect(),
    };
    let total = dec.atoms.iter().fold(S::zero(), |acc, (l, _)| acc + l.clone());
    let rebuilt = dec.reconstruct();
    let exact = total.eq_tol(&S::one())
        && rebuilt.len() == pairs.len()
        && rebuilt.iter().zip(&pairs).all(|(a, b)| a.0 == b.0 && a.1.eq_tol(&b.1));
    if !exact {
        return Err(Error::Internal("decomposition does not reproduce the input point".into()));
    }
    Ok(dec)
}

fn min<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

fn subset_sums<S: Scalar>(v: &[S]) -> Vec<S> {
    let mut sums = vec![S::zero(); 1 << v.len()];
    for s in 1..sums.len() {
        let low = s.trailing_zeros() as usize;
        sums[s] = sums[s & (s - 1)].clone() + v[low].clone();
    }
    sums
}

/// All submasks of `mask`, including 0 and `mask` itself.
fn submasks(mask: usize) -> impl Iterator<Item = usize> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}
