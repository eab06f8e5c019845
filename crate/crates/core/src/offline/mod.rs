//! Exact offline oracles: brute-force optimum, LP relaxations and matroid
//! polytope decomposition.

pub mod bruteforce;
pub mod decompose;
pub mod lp;
pub mod simplex;

pub use bruteforce::{offline_opt_bruteforce, offline_opt_matroid, DEFAULT_BUDGET};
pub use decompose::{decompose_polytope_point, ConvexDecomposition};
pub use lp::{solve_hm_lp, solve_hm_lp_with, solve_matchoid_lp, solve_matchoid_lp_with, LpSolution};

use crate::error::{Error, Result};
use crate::model::{Element, IndependenceSystem};

/// Largest element list whose subsets are enumerated explicitly.
pub const MAX_ENUMERATED: usize = 16;

/// Rank of every subset of a short element list, indexed by bitmask over
/// positions in that list.
pub(crate) struct SubsetRanks {
    pub elems: Vec<Element>,
    pub rank: Vec<u8>,
}

impl SubsetRanks {
    /// One independence test per subset: a greedy basis of `S − {top}` extended
    /// by `top` when possible is a basis of `S`.
    pub fn new<M: IndependenceSystem + ?Sized>(matroid: &M, elems: &[Element]) -> Result<Self> {
        let n = elems.len();
        if n > MAX_ENUMERATED {
            return Err(Error::Resource(format!(
                "{n} elements exceed the explicit subset enumeration limit of {MAX_ENUMERATED}"
            )));
        }
        let size = 1usize << n;
        let mut basis = vec![0u32; size];
        let mut rank = vec![0u8; size];
        let mut buf = Vec::with_capacity(n);
        for mask in 1..size {
            let top = usize::BITS - 1 - mask.leading_zeros();
            let rest = mask & !(1 << top);
            let cand = basis[rest] | (1 << top);
            buf.clear();
            buf.extend((0..n).filter(|i| cand >> i & 1 == 1).map(|i| elems[i]));
            if matroid.is_independent(&buf) {
                basis[mask] = cand;
                rank[mask] = rank[rest] + 1;
            } else {
                basis[mask] = basis[rest];
                rank[mask] = rank[rest];
            }
        }
        Ok(Self { elems: elems.to_vec(), rank })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn full(&self) -> usize {
        (1usize << self.len()) - 1
    }

    /// Closed sets: adding any outside element raises the rank.
    pub fn flats(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.len();
        (0..=self.full()).filter(move |&s| {
            (0..n).all(|i| s >> i & 1 == 1 || self.rank[s | 1 << i] > self.rank[s])
        })
    }

    pub fn members(&self, mask: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |i| mask >> i & 1 == 1)
    }
}
