//! Certificates, blocking relations and the concrete certifiers.
//!
//! A certifier is represented intensionally: [`Certifier::is_certificate`]
//! decides membership in the node set and [`Certifier::blocks`] decides the
//! arc relation, both from the certificate payloads alone.

use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroids::{AnyMatroid, GraphicMatroid, Matchoid, PartitionMatroid, TransversalMatroid};
use crate::model::{Element, HypergraphLike, IndependenceSystem};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// The sentinel (⊥,⊥): blocks nothing and is blocked by nothing.
    Bottom,
    /// Hypergraph certificate (e,e).
    Edge { edge: Element },
    /// (I,e) with I a sorted independent set containing e.
    Set { set: Arc<[Element]>, element: Element },
    /// (I_1,…,I_ℓ; e) with one sorted set per matchoid component, empty where e is inactive.
    Bundle { sets: Vec<Arc<[Element]>>, element: Element },
}

impl Certificate {
    pub fn element(&self) -> Option<Element> {
        match self {
            Certificate::Bottom => None,
            Certificate::Edge { edge } => Some(*edge),
            Certificate::Set { element, .. } | Certificate::Bundle { element, .. } => Some(*element),
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Certificate::Bottom)
    }

    /// Builds (I,e), sorting I.
    pub fn set(mut set: Vec<Element>, element: Element) -> Self {
        set.sort_unstable();
        Certificate::Set { set: set.into(), element }
    }
}

pub trait Certifier: Send + Sync {
    fn is_certificate(&self, c: &Certificate) -> bool;

    /// Whether `a` blocks `b`. Certificates of a foreign shape never block.
    fn blocks(&self, a: &Certificate, b: &Certificate) -> bool;
}

/// Certifier with 𝓢 = 𝓘 whose independent sets block a fixed certificate through at most `k()` elements.
pub trait DirectedCertifier: Certifier {
    fn k(&self) -> usize;
}

/// (e,e) blocks (f,f) iff the edges share a node.
#[derive(Clone, Copy, Debug)]
pub struct HypergraphCertifier<'a, H: ?Sized> {
    hg: &'a H,
}

pub fn hypergraph_certifier<H: HypergraphLike + ?Sized>(hg: &H) -> HypergraphCertifier<'_, H> {
    HypergraphCertifier { hg }
}

impl<H: HypergraphLike + ?Sized> Certifier for HypergraphCertifier<'_, H> {
    fn is_certificate(&self, c: &Certificate) -> bool {
        matches!(c, Certificate::Edge { edge } if *edge < self.hg.num_edges())
    }

    fn blocks(&self, a: &Certificate, b: &Certificate) -> bool {
        match (a, b) {
            (Certificate::Edge { edge: e }, Certificate::Edge { edge: f }) => self.hg.edges_intersect(*e, *f),
            _ => false,
        }
    }
}

fn set_certificate_ok<M: IndependenceSystem + ?Sized>(m: &M, c: &Certificate) -> bool {
    match c {
        Certificate::Set { set, element } => {
            set.windows(2).all(|w| w[0] < w[1])
                && set.last().is_none_or(|&e| e < m.ground_size())
                && set.binary_search(element).is_ok()
                && m.is_independent(set)
        }
        _ => false,
    }
}

fn as_set(c: &Certificate) -> Option<(&[Element], Element)> {
    match c {
        Certificate::Set { set, element } => Some((set, *element)),
        _ => None,
    }
}

/// (I,v) blocks (I',v') iff v and v' lie in the same part.
#[derive(Clone, Copy, Debug)]
pub struct PartitionCertifier<'a> {
    pm: &'a PartitionMatroid,
}

pub fn partition_certifier(pm: &PartitionMatroid) -> PartitionCertifier<'_> {
    PartitionCertifier { pm }
}

impl Certifier for PartitionCertifier<'_> {
    fn is_certificate(&self, c: &Certificate) -> bool {
        set_certificate_ok(self.pm, c)
    }

    fn blocks(&self, a: &Certificate, b: &Certificate) -> bool {
        match (as_set(a), as_set(b)) {
            (Some((_, v)), Some((_, w))) => self.pm.part_of(v) == self.pm.part_of(w),
            _ => false,
        }
    }
}

impl DirectedCertifier for PartitionCertifier<'_> {
    fn k(&self) -> usize {
        1
    }
}

/// Orients a forest away from the smallest-label vertex of each component.
///
/// Returns one `(tail, head)` arc per edge of `forest`, in the same order.
pub fn orient_forest(gm: &GraphicMatroid, forest: &[Element]) -> Result<Vec<(usize, usize)>> {
    if !gm.is_independent(forest) {
        return Err(Error::InvalidCertificate(format!("edge set {forest:?} contains a cycle")));
    }
    let n = gm.num_vertices();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (slot, &e) in forest.iter().enumerate() {
        let (u, v) = gm.endpoints(e);
        adj[u].push((v, slot));
        adj[v].push((u, slot));
    }
    let mut arcs = vec![(usize::MAX, usize::MAX); forest.len()];
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    // scanning vertices in label order makes the first vertex met in each component its root
    for root in 0..n {
        if seen[root] || adj[root].is_empty() {
            continue;
        }
        seen[root] = true;
        stack.push(root);
        while let Some(u) = stack.pop() {
            for &(v, slot) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    arcs[slot] = (u, v);
                    stack.push(v);
                }
            }
        }
    }
    Ok(arcs)
}

/// Head e⁺_F of edge `e` in or(F).
pub fn forest_head(gm: &GraphicMatroid, forest: &[Element], e: Element) -> Result<usize> {
    let slot = forest
        .iter()
        .position(|&f| f == e)
        .ok_or_else(|| Error::InvalidCertificate(format!("edge {e} is not in {forest:?}")))?;
    Ok(orient_forest(gm, forest)?[slot].1)
}

/// (F,e) blocks (F',e') iff the head of e in or(F) is an endpoint of e'.
#[derive(Clone, Copy, Debug)]
pub struct GraphicCertifier<'a> {
    gm: &'a GraphicMatroid,
}

pub fn graphic_certifier(gm: &GraphicMatroid) -> GraphicCertifier<'_> {
    GraphicCertifier { gm }
}

impl Certifier for GraphicCertifier<'_> {
    fn is_certificate(&self, c: &Certificate) -> bool {
        set_certificate_ok(self.gm, c)
    }

    fn blocks(&self, a: &Certificate, b: &Certificate) -> bool {
        let (Some((f, e)), Some((_, e2))) = (as_set(a), as_set(b)) else {
            return false;
        };
        match forest_head(self.gm, f, e) {
            Ok(head) => {
                let (u, v) = self.gm.endpoints(e2);
                head == u || head == v
            }
            Err(_) => false,
        }
    }
}

impl DirectedCertifier for GraphicCertifier<'_> {
    fn k(&self) -> usize {
        2
    }
}

/// (X,v) blocks (X',v') iff the canonical matching edges covering v and v' share an endpoint.
#[derive(Clone, Copy, Debug)]
pub struct TransversalCertifier<'a> {
    tm: &'a TransversalMatroid,
}

pub fn transversal_certifier(tm: &TransversalMatroid) -> TransversalCertifier<'_> {
    TransversalCertifier { tm }
}

/// Right partner of `v` in the canonical matching of `set`.
pub fn matched_partner(tm: &TransversalMatroid, set: &[Element], v: Element) -> Result<usize> {
    let slot = set
        .iter()
        .position(|&x| x == v)
        .ok_or_else(|| Error::InvalidCertificate(format!("element {v} is not in {set:?}")))?;
    let matching = tm
        .canonical_matching(set)
        .ok_or_else(|| Error::InvalidCertificate(format!("{set:?} is not independent")))?;
    Ok(matching[slot])
}

impl Certifier for TransversalCertifier<'_> {
    fn is_certificate(&self, c: &Certificate) -> bool {
        set_certificate_ok(self.tm, c)
    }

    fn blocks(&self, a: &Certificate, b: &Certificate) -> bool {
        let (Some((x, v)), Some((x2, v2))) = (as_set(a), as_set(b)) else {
            return false;
        };
        if v == v2 {
            return true;
        }
        match (matched_partner(self.tm, x, v), matched_partner(self.tm, x2, v2)) {
            (Ok(r), Ok(r2)) => r == r2,
            _ => false,
        }
    }
}

impl DirectedCertifier for TransversalCertifier<'_> {
    fn k(&self) -> usize {
        2
    }
}

/// Directed certifier of whichever matroid kind is wrapped.
#[derive(Clone, Copy, Debug)]
pub enum MatroidCertifier<'a> {
    Partition(PartitionCertifier<'a>),
    Graphic(GraphicCertifier<'a>),
    Transversal(TransversalCertifier<'a>),
}

pub fn matroid_certifier(m: &AnyMatroid) -> MatroidCertifier<'_> {
    match m {
        AnyMatroid::Partition(pm) => MatroidCertifier::Partition(partition_certifier(pm)),
        AnyMatroid::Graphic(gm) => MatroidCertifier::Graphic(graphic_certifier(gm)),
        AnyMatroid::Transversal(tm) => MatroidCertifier::Transversal(transversal_certifier(tm)),
    }
}

impl Certifier for MatroidCertifier<'_> {
    fn is_certificate(&self, c: &Certificate) -> bool {
        match self {
            MatroidCertifier::Partition(x) => x.is_certificate(c),
            MatroidCertifier::Graphic(x) => x.is_certificate(c),
            MatroidCertifier::Transversal(x) => x.is_certificate(c),
        }
    }

    fn blocks(&self, a: &Certificate, b: &Certificate) -> bool {
        match self {
            MatroidCertifier::Partition(x) => x.blocks(a, b),
            MatroidCertifier::Graphic(x) => x.blocks(a, b),
            MatroidCertifier::Transversal(x) => x.blocks(a, b),
        }
    }
}

impl DirectedCertifier for MatroidCertifier<'_> {
    fn k(&self) -> usize {
        match self {
            MatroidCertifier::Partition(x) => x.k(),
            MatroidCertifier::Graphic(x) => x.k(),
            MatroidCertifier::Transversal(x) => x.k(),
        }
    }
}

/// Bundle certifier: blocking happens in some component where both elements are active.
#[derive(Clone, Debug)]
pub struct MatchoidCertifier<'a> {
    mc: &'a Matchoid,
    components: Vec<MatroidCertifier<'a>>,
}

pub fn matchoid_certifier(mc: &Matchoid) -> MatchoidCertifier<'_> {
    let components = mc.components().iter().map(|c| matroid_certifier(c.matroid())).collect();
    MatchoidCertifier { mc, components }
}

impl<'a> MatchoidCertifier<'a> {
    pub fn matchoid(&self) -> &'a Matchoid {
        self.mc
    }

    pub fn component_k(&self, i: usize) -> usize {
        self.components[i].k()
    }

    /// Σ of component parameters over the components containing `e`.
    pub fn k_of(&self, e: Element) -> usize {
        self.mc.components_of(e).iter().map(|&i| self.components[i].k()).sum()
    }

    /// Component certificate (I_i,e) in local indices.
    pub fn local_certificate(&self, i: usize, set: &[Element], e: Element) -> Option<Certificate> {
        let comp = &self.mc.components()[i];
        let local_e = comp.local(e)?;
        Some(Certificate::set(comp.restrict(set), local_e))
    }

    pub fn component_blocks(&self, i: usize, a: (&[Element], Element), b: (&[Element], Element)) -> bool {
        match (self.local_certificate(i, a.0, a.1), self.local_certificate(i, b.0, b.1)) {
            (Some(ca), Some(cb)) => self.components[i].blocks(&ca, &cb),
            _ => false,
        }
    }

    /// Validates a bundle, explaining the first defect found.
    pub fn check_bundle(&self, c: &Certificate) -> Result<()> {
        let Certificate::Bundle { sets, element } = c else {
            return Err(Error::InvalidCertificate("expected a bundle".into()));
        };
        let comps = self.mc.components();
        if sets.len() != comps.len() {
            return Err(Error::InvalidCertificate(format!(
                "bundle has {} sets for {} components",
                sets.len(),
                comps.len()
            )));
        }
        if *element >= self.mc.ground_size() {
            return Err(Error::InvalidCertificate(format!("element {element} out of range")));
        }
        for (i, (set, comp)) in sets.iter().zip(comps).enumerate() {
            if !comp.contains(*element) {
                if !set.is_empty() {
                    return Err(Error::InvalidCertificate(format!(
                        "component {i} does not contain {element} but its set is nonempty"
                    )));
                }
                continue;
            }
            if set.binary_search(element).is_err() {
                return Err(Error::InvalidCertificate(format!(
                    "component {i} set {set:?} misses element {element}"
                )));
            }
            let local = comp.restrict(set);
            if local.len() != set.len() || !set.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidCertificate(format!(
                    "component {i} set {set:?} is unsorted or leaves the component"
                )));
            }
            if !comp.matroid().is_independent(&local) {
                return Err(Error::InvalidCertificate(format!(
                    "component {i} set {set:?} is dependent"
                )));
            }
        }
        Ok(())
    }
}

impl Certifier for MatchoidCertifier<'_> {
    fn is_certificate(&self, c: &Certificate) -> bool {
        self.check_bundle(c).is_ok()
    }

    fn blocks(&self, a: &Certificate, b: &Certificate) -> bool {
        let (
            Certificate::Bundle { sets: sa, element: ea },
            Certificate::Bundle { sets: sb, element: eb },
        ) = (a, b)
        else {
            return false;
        };
        let (ca, cb) = (self.mc.components_of(*ea), self.mc.components_of(*eb));
        ca.iter()
            .filter(|i| cb.contains(i))
            .any(|&i| self.component_blocks(i, (&sa[i], *ea), (&sb[i], *eb)))
    }
}

impl DirectedCertifier for MatchoidCertifier<'_> {
    /// max over elements of the summed component parameters.
    fn k(&self) -> usize {
        (0..self.mc.ground_size()).map(|e| self.k_of(e)).max().unwrap_or(0)
    }
}

/// Checks that no entry blocks a later one.
///
/// A blocking-free sequence whose elements are repeated or dependent means the
/// certifier violates its axioms; that is reported as an error rather than `false`.
pub fn verify_certification<C, I>(cert: &C, system: &I, seq: &[Certificate]) -> Result<bool>
where
    C: Certifier + ?Sized,
    I: IndependenceSystem + ?Sized,
{
    for (i, a) in seq.iter().enumerate() {
        if seq[i + 1..].iter().any(|b| cert.blocks(a, b)) {
            return Ok(false);
        }
    }
    let mut elems: Vec<Element> = seq.iter().filter_map(Certificate::element).collect();
    let len = elems.len();
    elems.sort_unstable();
    elems.dedup();
    if elems.len() != len {
        return Err(Error::Internal(format!("certification repeats an element: {seq:?}")));
    }
    if !system.is_independent(&elems) {
        return Err(Error::Internal(format!("certification yields dependent set {elems:?}")));
    }
    Ok(true)
}

/// Largest number of elements of one independent set blocking a fixed certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DirectednessReport {
    pub max_count: usize,
    pub probes: usize,
    pub exhaustive: bool,
    pub within_bound: bool,
}

/// Every independent set of a ground set small enough to enumerate.
pub fn independent_sets<I: IndependenceSystem + ?Sized>(system: &I) -> Vec<Vec<Element>> {
    let n = system.ground_size();
    assert!(n < 24, "ground set of size {n} is too large to enumerate");
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|s| system.is_independent(s))
        .collect()
}

/// Random maximal-ish independent set: elements in random order, kept while independent.
pub fn random_independent_set<I: IndependenceSystem + ?Sized, R: Rng + ?Sized>(
    system: &I,
    rng: &mut R,
) -> Vec<Element> {
    let mut order: Vec<Element> = (0..system.ground_size()).collect();
    order.shuffle(rng);
    let stop = rng.random_range(0..=order.len());
    let mut set = Vec::new();
    for &e in &order[..stop] {
        set.push(e);
        if !system.is_independent(&set) {
            set.pop();
        }
    }
    set.sort_unstable();
    set
}

/// Measures condition (e): max over I, (J,f) of |{e ∈ I : (I,e) blocks (J,f)}|.
///
/// Exhaustive when the ground set has at most 6 elements, otherwise `trials`
/// random triples.
pub fn check_directedness<C, I, R>(cert: &C, system: &I, k: usize, trials: usize, rng: &mut R) -> DirectednessReport
where
    C: Certifier + ?Sized,
    I: IndependenceSystem + ?Sized,
    R: Rng + ?Sized,
{
    let count = |i: &[Element], j: &[Element], f: Element| {
        let target = Certificate::set(j.to_vec(), f);
        let shared: Arc<[Element]> = i.into();
        i.iter()
            .filter(|&&e| cert.blocks(&Certificate::Set { set: shared.clone(), element: e }, &target))
            .count()
    };
    let mut max_count = 0;
    let mut probes = 0;
    let exhaustive = system.ground_size() <= 6;
    if exhaustive {
        let sets = independent_sets(system);
        for i in &sets {
            for j in &sets {
                for &f in j {
                    max_count = max_count.max(count(i, j, f));
                    probes += 1;
                }
            }
        }
    } else {
        while probes < trials {
            let i = random_independent_set(system, rng);
            let j = random_independent_set(system, rng);
            let Some(&f) = j.choose(rng) else { continue };
            max_count = max_count.max(count(&i, &j, f));
            probes += 1;
        }
    }
    DirectednessReport { max_count, probes, exhaustive, within_bound: max_count <= k }
}
