//! Matroid oracles (partition, graphic, transversal) and matchoids built from them.

use crate::error::{Error, Result};
use crate::model::{Element, Hypergraph, HypergraphLike, IndependenceSystem};

pub trait Matroid: IndependenceSystem {
    /// Size of a largest independent subset, found greedily in the given order.
    fn rank(&self, set: &[Element]) -> usize {
        let mut kept = Vec::with_capacity(set.len());
        for &e in set {
            kept.push(e);
            if !self.is_independent(&kept) {
                kept.pop();
            }
        }
        kept.len()
    }
}

/// Unitary partition matroid: at most one element from each part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionMatroid {
    parts: Vec<Vec<Element>>,
    part_of: Vec<usize>,
}

impl PartitionMatroid {
    pub fn new(parts: Vec<Vec<Element>>) -> Result<Self> {
        let n: usize = parts.iter().map(Vec::len).sum();
        let mut part_of = vec![usize::MAX; n];
        for (i, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::InvalidInstance(format!("part {i} is empty")));
            }
            for &e in part {
                if e >= n || part_of[e] != usize::MAX {
                    return Err(Error::InvalidInstance(format!(
                        "parts must partition 0..{n}; element {e} is out of range or repeated"
                    )));
                }
                part_of[e] = i;
            }
        }
        let parts = parts
            .into_iter()
            .map(|mut p| {
                p.sort_unstable();
                p
            })
            .collect();
        Ok(Self { parts, part_of })
    }

    /// One part holding every element.
    pub fn unitary(n: usize) -> Result<Self> {
        Self::new(vec![(0..n).collect()])
    }

    pub fn parts(&self) -> &[Vec<Element>] {
        &self.parts
    }

    pub fn part_of(&self, e: Element) -> usize {
        self.part_of[e]
    }
}

impl IndependenceSystem for PartitionMatroid {
    fn ground_size(&self) -> usize {
        self.part_of.len()
    }

    fn is_independent(&self, set: &[Element]) -> bool {
        let mut seen = vec![false; self.parts.len()];
        set.iter().all(|&e| !std::mem::replace(&mut seen[self.part_of[e]], true))
    }
}

impl Matroid for PartitionMatroid {
    fn rank(&self, set: &[Element]) -> usize {
        let mut seen = vec![false; self.parts.len()];
        set.iter().filter(|&&e| !std::mem::replace(&mut seen[self.part_of[e]], true)).count()
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Forests of a loopless multigraph; ground element `i` is edge `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphicMatroid {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphicMatroid {
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::InvalidInstance(format!(
                    "edge {i} = ({u},{v}) leaves the vertex range 0..{n_vertices}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInstance(format!("edge {i} is a loop at vertex {u}")));
            }
        }
        Ok(Self { n_vertices, edges })
    }

    pub fn num_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn endpoints(&self, e: Element) -> (usize, usize) {
        self.edges[e]
    }
}

impl IndependenceSystem for GraphicMatroid {
    fn ground_size(&self) -> usize {
        self.edges.len()
    }

    fn is_independent(&self, set: &[Element]) -> bool {
        let mut uf = UnionFind::new(self.n_vertices);
        set.iter().all(|&e| {
            let (u, v) = self.edges[e];
            uf.union(u, v)
        })
    }
}

impl Matroid for GraphicMatroid {
    fn rank(&self, set: &[Element]) -> usize {
        let mut uf = UnionFind::new(self.n_vertices);
        set.iter()
            .filter(|&&e| {
                let (u, v) = self.edges[e];
                uf.union(u, v)
            })
            .count()
    }
}

/// Subsets of the left side coverable by a bipartite matching; ground = left vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransversalMatroid {
    n_right: usize,
    adjacency: Vec<Vec<usize>>,
}

impl TransversalMatroid {
    pub fn new(n_right: usize, adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let mut adj = Vec::with_capacity(adjacency.len());
        for (l, mut nbrs) in adjacency.into_iter().enumerate() {
            nbrs.sort_unstable();
            nbrs.dedup();
            if let Some(r) = nbrs.iter().find(|&&r| r >= n_right) {
                return Err(Error::InvalidInstance(format!(
                    "left vertex {l} is adjacent to right vertex {r} but there are only {n_right}"
                )));
            }
            adj.push(nbrs);
        }
        Ok(Self { n_right, adjacency: adj })
    }

    pub fn num_left(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_right(&self) -> usize {
        self.n_right
    }

    pub fn neighbors(&self, l: Element) -> &[usize] {
        &self.adjacency[l]
    }

    /// Matching covering `set`, as the right partner of each element of `set` (same order).
    ///
    /// Elements are inserted in ascending id order with augmenting paths that try
    /// neighbours in ascending order, so the result depends only on the set.
    pub fn canonical_matching(&self, set: &[Element]) -> Option<Vec<usize>> {
        let mut order: Vec<Element> = set.to_vec();
        order.sort_unstable();
        let mut owner: Vec<Option<Element>> = vec![None; self.n_right];
        for &l in &order {
            let mut visited = vec![false; self.n_right];
            if !self.augment(l, &mut owner, &mut visited) {
                return None;
            }
        }
        let mut partner_of = std::collections::HashMap::with_capacity(set.len());
        for (r, o) in owner.iter().enumerate() {
            if let Some(l) = o {
                partner_of.insert(*l, r);
            }
        }
        Some(set.iter().map(|l| partner_of[l]).collect())
    }

    fn augment(&self, l: Element, owner: &mut [Option<Element>], visited: &mut [bool]) -> bool {
        for &r in &self.adjacency[l] {
            if visited[r] {
                continue;
            }
            visited[r] = true;
            match owner[r] {
                None => {
                    owner[r] = Some(l);
                    return true;
                }
                Some(other) => {
                    if self.augment(other, owner, visited) {
                        owner[r] = Some(l);
                        return true;
                    }
                }
            }
        }
        false
    }
}

impl IndependenceSystem for TransversalMatroid {
    fn ground_size(&self) -> usize {
        self.adjacency.len()
    }

    fn is_independent(&self, set: &[Element]) -> bool {
        self.canonical_matching(set).is_some()
    }
}

impl Matroid for TransversalMatroid {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyMatroid {
    Partition(PartitionMatroid),
    Graphic(GraphicMatroid),
    Transversal(TransversalMatroid),
}

impl AnyMatroid {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyMatroid::Partition(_) => "partition",
            AnyMatroid::Graphic(_) => "graphic",
            AnyMatroid::Transversal(_) => "transversal",
        }
    }
}

impl IndependenceSystem for AnyMatroid {
    fn ground_size(&self) -> usize {
        match self {
            AnyMatroid::Partition(m) => m.ground_size(),
            AnyMatroid::Graphic(m) => m.ground_size(),
            AnyMatroid::Transversal(m) => m.ground_size(),
        }
    }

    fn is_independent(&self, set: &[Element]) -> bool {
        match self {
            AnyMatroid::Partition(m) => m.is_independent(set),
            AnyMatroid::Graphic(m) => m.is_independent(set),
            AnyMatroid::Transversal(m) => m.is_independent(set),
        }
    }
}

impl Matroid for AnyMatroid {
    fn rank(&self, set: &[Element]) -> usize {
        match self {
            AnyMatroid::Partition(m) => m.rank(set),
            AnyMatroid::Graphic(m) => m.rank(set),
            AnyMatroid::Transversal(m) => m.rank(set),
        }
    }
}

impl From<PartitionMatroid> for AnyMatroid {
    fn from(m: PartitionMatroid) -> Self {
        AnyMatroid::Partition(m)
    }
}

impl From<GraphicMatroid> for AnyMatroid {
    fn from(m: GraphicMatroid) -> Self {
        AnyMatroid::Graphic(m)
    }
}

impl From<TransversalMatroid> for AnyMatroid {
    fn from(m: TransversalMatroid) -> Self {
        AnyMatroid::Transversal(m)
    }
}

/// A matroid acting on the sorted subset `active` of the global ground set.
/// The matroid's own element `i` is the global element `active[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchoidComponent {
    active: Vec<Element>,
    matroid: AnyMatroid,
}

impl MatchoidComponent {
    pub fn new(mut active: Vec<Element>, matroid: AnyMatroid) -> Result<Self> {
        active.sort_unstable();
        if active.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInstance("component lists an element twice".into()));
        }
        if matroid.ground_size() != active.len() {
            return Err(Error::InvalidInstance(format!(
                "component has {} active elements but its {} matroid has ground size {}",
                active.len(),
                matroid.kind(),
                matroid.ground_size()
            )));
        }
        Ok(Self { active, matroid })
    }

    pub fn active(&self) -> &[Element] {
        &self.active
    }

    pub fn matroid(&self) -> &AnyMatroid {
        &self.matroid
    }

    pub fn local(&self, e: Element) -> Option<usize> {
        self.active.binary_search(&e).ok()
    }

    pub fn contains(&self, e: Element) -> bool {
        self.local(e).is_some()
    }

    /// Local indices of `set ∩ active`.
    pub fn restrict(&self, set: &[Element]) -> Vec<usize> {
        set.iter().filter_map(|&e| self.local(e)).collect()
    }

    /// Global ids of local indices.
    pub fn globalize(&self, local: &[usize]) -> Vec<Element> {
        local.iter().map(|&i| self.active[i]).collect()
    }
}

/// Independent iff independent in every component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matchoid {
    ground_size: usize,
    components: Vec<MatchoidComponent>,
    membership: Vec<Vec<usize>>,
}

impl Matchoid {
    pub fn new(ground_size: usize, components: Vec<MatchoidComponent>) -> Result<Self> {
        let mut membership = vec![Vec::new(); ground_size];
        for (i, c) in components.iter().enumerate() {
            for &e in &c.active {
                if e >= ground_size {
                    return Err(Error::InvalidInstance(format!(
                        "component {i} uses element {e} outside ground set of size {ground_size}"
                    )));
                }
                membership[e].push(i);
            }
        }
        if let Some(e) = membership.iter().position(Vec::is_empty) {
            return Err(Error::InvalidInstance(format!("element {e} belongs to no component")));
        }
        Ok(Self { ground_size, components, membership })
    }

    pub fn components(&self) -> &[MatchoidComponent] {
        &self.components
    }

    /// Components in which `e` is active.
    pub fn components_of(&self, e: Element) -> &[usize] {
        &self.membership[e]
    }

    /// Largest number of components sharing one element.
    pub fn multiplicity(&self) -> usize {
        self.membership.iter().map(Vec::len).max().unwrap_or(0)
    }
}

impl IndependenceSystem for Matchoid {
    fn ground_size(&self) -> usize {
        self.ground_size
    }

    fn is_independent(&self, set: &[Element]) -> bool {
        self.components.iter().all(|c| c.matroid.is_independent(&c.restrict(set)))
    }
}

/// One rank-1 component per node with at least one incident edge; edges are the ground set.
pub fn hypergraph_as_matchoid(hg: &Hypergraph) -> Matchoid {
    let mut incident: Vec<Vec<Element>> = vec![Vec::new(); hg.num_nodes()];
    for (e, nodes) in hg.edges().iter().enumerate() {
        for &v in nodes {
            incident[v].push(e);
        }
    }
    let components = incident
        .into_iter()
        .filter(|es| !es.is_empty())
        .map(|es| {
            let unitary = PartitionMatroid::unitary(es.len()).expect("nonempty part");
            MatchoidComponent::new(es, unitary.into()).expect("sorted distinct edges")
        })
        .collect();
    Matchoid::new(hg.edges().len(), components).expect("every edge has a node")
}
