//! Pointwise alternating multilinear algebra.
//!
//! Alternating tensors are stored densely over the sorted multi-indices of
//! their degree. A `k`-form with values in a fiber of dimension `f` is a flat
//! `C(n, k) * f` array, multi-index major. The products below are evaluated by
//! enumerating shuffles of sorted multi-indices, which is what the
//! `1/(k! l!)`-normalised permutation sums collapse to.

mod field;
mod kernels;
mod kind;
mod point;

pub use field::{lift, FormField};
pub use kind::ValueKind;
pub use point::{PointForm, PointValue};

pub(crate) use kernels::{act_end_into, act_poly_into, wedge_end_into, wedge_poly_into, wedge_scalar_into};

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Largest ambient dimension supported by the precomputed tables.
pub const MAX_DIM: usize = 8;

/// Strictly increasing tuple of coordinate axes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    axes: Vec<usize>,
}

impl MultiIndex {
    pub fn new(axes: Vec<usize>, n: usize) -> Result<Self> {
        for &a in &axes {
            if a >= n {
                return Err(Error::Index { index: a, n });
            }
        }
        if axes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Degree(format!("multi-index {axes:?} is not strictly increasing")));
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn degree(&self) -> usize {
        self.axes.len()
    }

    pub(crate) fn mask(&self) -> u32 {
        self.axes.iter().fold(0u32, |m, &a| m | (1 << a))
    }

    pub(crate) fn from_mask(mask: u32) -> Self {
        Self { axes: (0..32).filter(|a| mask & (1 << a) != 0).collect() }
    }
}

/// Sorts `tuple`, returning the sorted axes and the signature of the sorting
/// permutation. The sign is 0 iff an axis repeats; the returned axes are then
/// sorted but not strictly increasing.
pub fn canonicalize(tuple: &[usize], n: usize) -> Result<(Vec<usize>, i32)> {
    if let Some(&bad) = tuple.iter().find(|&&a| a >= n) {
        return Err(Error::Index { index: bad, n });
    }
    let mut inversions = 0usize;
    for i in 0..tuple.len() {
        for j in i + 1..tuple.len() {
            if tuple[i] == tuple[j] {
                let mut sorted = tuple.to_vec();
                sorted.sort_unstable();
                return Ok((sorted, 0));
            }
            if tuple[i] > tuple[j] {
                inversions += 1;
            }
        }
    }
    let mut sorted = tuple.to_vec();
    sorted.sort_unstable();
    Ok((sorted, if inversions % 2 == 0 { 1 } else { -1 }))
}

/// Sign of the permutation sorting the concatenation of two disjoint sorted
/// index sets `a` then `b`.
#[inline]
pub(crate) fn concat_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let t = rest.trailing_zeros();
        inversions += (a >> (t + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// One term of a shuffle product: `out[out] += sign * left[left] * right[right]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ShuffleTerm {
    pub out: u32,
    pub left: u32,
    pub right: u32,
    pub sign: f64,
}

/// One term of the derivation induced on `Λ^q` by an endomorphism `M`:
/// `out[out] += sign * M[row][col] * input[input]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DerivationTerm {
    pub out: u32,
    pub input: u32,
    pub row: u32,
    pub col: u32,
    pub sign: f64,
}

/// Combinatorial tables for one ambient dimension.
pub(crate) struct Tables {
    pub n: usize,
    /// Masks of the sorted multi-indices of each degree, lexicographic order.
    pub basis: Vec<Vec<u32>>,
    /// Position of a mask inside its degree's basis.
    pub position: Vec<u32>,
    /// `shuffles[k][l]` enumerates all `(k, l)` shuffles of every sorted
    /// multi-index of degree `k + l`.
    shuffles: Vec<Vec<Vec<ShuffleTerm>>>,
    derivations: Vec<Vec<DerivationTerm>>,
}

impl Tables {
    fn build(n: usize) -> Self {
        use itertools::Itertools;
        let mut basis = vec![Vec::new(); n + 1];
        let mut position = vec![0u32; 1 << n];
        for (k, slot) in basis.iter_mut().enumerate() {
            for combo in (0..n).combinations(k) {
                let mask = combo.iter().fold(0u32, |m, &a| m | (1 << a));
                position[mask as usize] = slot.len() as u32;
                slot.push(mask);
            }
        }
        let mut shuffles = vec![vec![Vec::new(); n + 1]; n + 1];
        for k in 0..=n {
            for l in 0..=n - k {
                let terms = &mut shuffles[k][l];
                for (o, &out_mask) in basis[k + l].iter().enumerate() {
                    // enumerate submasks of out_mask with popcount k
                    let mut sub = out_mask;
                    loop {
                        if sub.count_ones() as usize == k {
                            let rest = out_mask & !sub;
                            terms.push(ShuffleTerm {
                                out: o as u32,
                                left: position[sub as usize],
                                right: position[rest as usize],
                                sign: concat_sign(sub, rest),
                            });
                        }
                        if sub == 0 {
                            break;
                        }
                        sub = (sub - 1) & out_mask;
                    }
                }
            }
        }
        let mut derivations = vec![Vec::new(); n + 1];
        for (q, terms) in derivations.iter_mut().enumerate() {
            for (i, &mask) in basis[q].iter().enumerate() {
                let axes = MultiIndex::from_mask(mask).axes;
                for (slot, &col) in axes.iter().enumerate() {
                    for row in 0..n {
                        let mut replaced = axes.clone();
                        replaced[slot] = row;
                        let (sorted, sign) = canonicalize(&replaced, n).expect("axes in range");
                        if sign == 0 {
                            continue;
                        }
                        let out_mask = sorted.iter().fold(0u32, |m, &a| m | (1 << a));
                        terms.push(DerivationTerm {
                            out: position[out_mask as usize],
                            input: i as u32,
                            row: row as u32,
                            col: col as u32,
                            sign: sign as f64,
                        });
                    }
                }
            }
        }
        Self { n, basis, position, shuffles, derivations }
    }

    #[inline]
    pub fn dim(&self, k: usize) -> usize {
        if k > self.n {
            0
        } else {
            self.basis[k].len()
        }
    }

    #[inline]
    pub fn shuffles(&self, k: usize, l: usize) -> &[ShuffleTerm] {
        if k + l > self.n {
            &[]
        } else {
            &self.shuffles[k][l]
        }
    }

    /// Terms of `M ↦ (w ↦ Σ_slots w with one slot replaced by M)` on `Λ^q`.
    #[inline]
    pub fn derivation(&self, q: usize) -> &[DerivationTerm] {
        if q > self.n {
            &[]
        } else {
            &self.derivations[q]
        }
    }

    #[inline]
    pub fn pos(&self, mask: u32) -> usize {
        self.position[mask as usize] as usize
    }
}

pub(crate) fn tables(n: usize) -> &'static Tables {
    static TABLES: OnceLock<Vec<Tables>> = OnceLock::new();
    let all = TABLES.get_or_init(|| (0..=MAX_DIM).map(Tables::build).collect());
    &all[n]
}

/// Sorted multi-indices of degree `k` in storage order.
pub fn basis(n: usize, k: usize) -> Vec<MultiIndex> {
    if n > MAX_DIM || k > n {
        return Vec::new();
    }
    tables(n).basis[k].iter().map(|&m| MultiIndex::from_mask(m)).collect()
}

/// Storage position of a sorted multi-index.
pub fn position(index: &MultiIndex, n: usize) -> usize {
    tables(n).pos(index.mask())
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::Dimension(format!("ambient dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}
