//! Strictly increasing multi-indices naming the basis of the exterior powers
//! of an `n`-dimensional space, with the sign bookkeeping needed by the
//! exterior product and the Hodge star.
//!
//! Bases are ordered lexicographically. Internally the double-form code
//! works on bitmasks (`u32`, bit `i` set when `e_i` is present); both
//! representations share the same order.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported dimension. Masks are `u32` and dense storage grows
/// like `C(n, n/2)^2`, so this is far beyond anything practical anyway.
pub const MAX_DIM: usize = 24;

/// A strictly increasing tuple of indices, naming `e_I = e_{i1} ∧ … ∧ e_{ip}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex {
    indices: Vec<usize>,
}

impl MultiIndex {
    /// Builds a multi-index, rejecting anything that is not strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            let reason = if w[0] == w[1] {
                format!("repeated index {}", w[0])
            } else {
                "indices are not increasing".to_string()
            };
            return Err(Error::MalformedIndex { indices, reason });
        }
        Ok(Self { indices })
    }

    /// Builds a multi-index and checks every entry is below `n`.
    pub fn in_dimension(indices: Vec<usize>, n: usize) -> Result<Self> {
        let index = Self::new(indices)?;
        index.check_dimension(n)?;
        Ok(index)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn check_dimension(&self, n: usize) -> Result<()> {
        if self.indices.len() > n {
            return Err(Error::MalformedIndex {
                indices: self.indices.clone(),
                reason: format!("more than {n} indices"),
            });
        }
        if let Some(&i) = self.indices.iter().find(|&&i| i >= n) {
            return Err(Error::MalformedIndex {
                indices: self.indices.clone(),
                reason: format!("index {i} out of range for dimension {n}"),
            });
        }
        Ok(())
    }

    pub(crate) fn to_mask(&self) -> u32 {
        self.indices.iter().fold(0u32, |m, &i| m | (1 << i))
    }

    pub(crate) fn from_mask(mask: u32) -> Self {
        Self {
            indices: mask_indices(mask).collect(),
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as usize
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// All `C(n, p)` multi-indices of length `p` in lexicographic order.
pub fn enumerate_basis(n: usize, p: usize) -> Result<Vec<MultiIndex>> {
    if p > n {
        return Err(Error::Domain { n, p });
    }
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    Ok(basis_masks(n, p).into_iter().map(MultiIndex::from_mask).collect())
}

/// Position of `index` in [`enumerate_basis`]`(n, index.len())`.
pub fn rank(index: &MultiIndex, n: usize) -> usize {
    rank_sorted(index.indices(), n)
}

/// Inverse of [`rank`].
pub fn unrank(n: usize, p: usize, r: usize) -> Result<MultiIndex> {
    if p > n {
        return Err(Error::Domain { n, p });
    }
    let total = binomial(n, p);
    if r >= total {
        return Err(Error::InvalidParameter(format!(
            "rank {r} out of range for C({n},{p}) = {total}"
        )));
    }
    let mut remaining = r;
    let mut indices = Vec::with_capacity(p);
    let mut next = 0;
    for slot in 0..p {
        let mut j = next;
        loop {
            let block = binomial(n - 1 - j, p - 1 - slot);
            if remaining < block {
                break;
            }
            remaining -= block;
            j += 1;
        }
        indices.push(j);
        next = j + 1;
    }
    Ok(MultiIndex { indices })
}

/// Sign and support of `e_I ∧ e_J`: `None` when the indices overlap,
/// otherwise the parity of the permutation sorting `I ‖ J` together with
/// the sorted union.
pub fn merge_sign(left: &MultiIndex, right: &MultiIndex) -> Option<(i8, MultiIndex)> {
    let concat: Vec<usize> = left.indices.iter().chain(right.indices.iter()).copied().collect();
    let mut inversions = 0usize;
    for a in 0..concat.len() {
        for b in a + 1..concat.len() {
            match concat[a].cmp(&concat[b]) {
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Greater => inversions += 1,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    let mut indices = concat;
    indices.sort_unstable();
    let sign = if inversions.is_multiple_of(2) { 1 } else { -1 };
    Some((sign, MultiIndex { indices }))
}

/// Complement `Ic = [0, n) \ I` and the sign with `e_I ∧ e_Ic = sign · vol`.
pub fn complement_sign(index: &MultiIndex, n: usize) -> (i8, MultiIndex) {
    let complement = MultiIndex {
        indices: (0..n).filter(|&i| !index.contains(i)).collect(),
    };
    let (sign, _) = merge_sign(index, &complement).expect("complement is disjoint");
    (sign, complement)
}

// ---------------------------------------------------------------------------
// Bitmask helpers shared by the dense double-form code.

pub(crate) fn mask_indices(mask: u32) -> impl Iterator<Item = usize> {
    (0..32usize).filter(move |&i| mask & (1 << i) != 0)
}

/// Masks of all `p`-subsets of `[0, n)` in lexicographic order of their
/// sorted index tuples. Empty when `p > n`.
pub(crate) fn basis_masks(n: usize, p: usize) -> Vec<u32> {
    fn fill(n: usize, p: usize, start: usize, acc: u32, out: &mut Vec<u32>) {
        if p == 0 {
            out.push(acc);
            return;
        }
        for i in start..=(n - p) {
            fill(n, p - 1, i + 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::with_capacity(binomial(n, p));
    if p <= n {
        fill(n, p, 0, 0, &mut out);
    }
    out
}

pub(crate) fn rank_sorted(indices: &[usize], n: usize) -> usize {
    let p = indices.len();
    let mut r = 0;
    let mut next = 0;
    for (slot, &c) in indices.iter().enumerate() {
        for j in next..c {
            r += binomial(n - 1 - j, p - 1 - slot);
        }
        next = c + 1;
    }
    r
}

pub(crate) fn mask_rank(mask: u32, n: usize) -> usize {
    let p = mask.count_ones() as usize;
    let mut r = 0;
    let mut next = 0;
    for (slot, c) in mask_indices(mask).enumerate() {
        for j in next..c {
            r += binomial(n - 1 - j, p - 1 - slot);
        }
        next = c + 1;
    }
    r
}

/// Sign of the shuffle taking `left ‖ right` to sorted order; the masks
/// must be disjoint.
pub(crate) fn shuffle_sign(left: u32, right: u32) -> f64 {
    debug_assert_eq!(left & right, 0);
    let mut inversions = 0u32;
    for b in mask_indices(right) {
        inversions += (left >> (b + 1)).count_ones();
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign of moving the single index `i` to the front of `mask` (`i ∉ mask`).
pub(crate) fn insertion_sign(i: usize, mask: u32) -> f64 {
    if (mask & ((1u32 << i) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sorts an arbitrary index tuple, returning the permutation sign and mask,
/// or `None` if an index repeats.
pub(crate) fn sort_tuple(indices: &[usize]) -> Option<(f64, u32)> {
    let mut mask = 0u32;
    let mut inversions = 0usize;
    for (a, &i) in indices.iter().enumerate() {
        if mask & (1 << i) != 0 {
            return None;
        }
        mask |= 1 << i;
        inversions += indices[..a].iter().filter(|&&j| j > i).count();
    }
    let sign = if inversions.is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((sign, mask))
}
