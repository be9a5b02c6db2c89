//! Fixed-width step sets.
//!
//! Every subset DP in the crate indexes tables by the raw mask, so a
//! `StepSet` is just a `u32` with set operations attached.

use std::fmt;
use std::ops::{BitAnd, BitOr, BitXor, Not, Sub};

/// Hard upper bound on the number of steps a mask can hold.
pub const MAX_STEPS: usize = 30;

/// A set of step indices in `0..MAX_STEPS`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StepSet(u32);

impl StepSet {
    pub const EMPTY: StepSet = StepSet(0);

    #[inline]
    pub const fn from_bits(bits: u32) -> Self {
        StepSet(bits)
    }

    #[inline]
    pub const fn bits(self) -> u32 {
        self.0
    }

    /// All steps `0..k`.
    #[inline]
    pub fn full(k: usize) -> Self {
        debug_assert!(k <= 31);
        StepSet(((1u64 << k) - 1) as u32)
    }

    #[inline]
    pub fn singleton(i: usize) -> Self {
        StepSet(1 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        it.into_iter().fold(StepSet::EMPTY, |acc, i| acc.with(i))
    }

    #[inline]
    pub fn with(self, i: usize) -> Self {
        StepSet(self.0 | (1 << i))
    }

    #[inline]
    pub fn without(self, i: usize) -> Self {
        StepSet(self.0 & !(1 << i))
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_subset(self, other: StepSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn intersects(self, other: StepSet) -> bool {
        self.0 & other.0 != 0
    }

    /// Lowest index in the set.
    #[inline]
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> Indices {
        Indices(self.0)
    }

    /// Every subset of `self`, starting with `self` and ending with the empty set.
    pub fn subsets(self) -> Subsets {
        Subsets { mask: self.0, cur: self.0, done: false }
    }
}

impl BitOr for StepSet {
    type Output = StepSet;
    #[inline]
    fn bitor(self, rhs: StepSet) -> StepSet {
        StepSet(self.0 | rhs.0)
    }
}

impl BitAnd for StepSet {
    type Output = StepSet;
    #[inline]
    fn bitand(self, rhs: StepSet) -> StepSet {
        StepSet(self.0 & rhs.0)
    }
}

impl BitXor for StepSet {
    type Output = StepSet;
    #[inline]
    fn bitxor(self, rhs: StepSet) -> StepSet {
        StepSet(self.0 ^ rhs.0)
    }
}

impl Sub for StepSet {
    type Output = StepSet;
    #[inline]
    fn sub(self, rhs: StepSet) -> StepSet {
        StepSet(self.0 & !rhs.0)
    }
}

impl Not for StepSet {
    type Output = StepSet;
    #[inline]
    fn not(self) -> StepSet {
        StepSet(!self.0)
    }
}

impl fmt::Debug for StepSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for StepSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        StepSet::from_indices(iter)
    }
}

pub struct Indices(u32);

impl Iterator for Indices {
    type Item = usize;
    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(i as usize)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Indices {}

pub struct Subsets {
    mask: u32,
    cur: u32,
    done: bool,
}

impl Iterator for Subsets {
    type Item = StepSet;
    #[inline]
    fn next(&mut self) -> Option<StepSet> {
        if self.done {
            return None;
        }
        let out = self.cur;
        if out == 0 {
            self.done = true;
        } else {
            self.cur = (self.cur - 1) & self.mask;
        }
        Some(StepSet(out))
    }
}

/// A bit per subset of `0..k`.
#[derive(Clone, PartialEq, Eq)]
pub struct SubsetTable {
    k: usize,
    words: Vec<u64>,
}

impl SubsetTable {
    pub fn new(k: usize) -> Self {
        let len = (1usize << k).div_ceil(64);
        SubsetTable { k, words: vec![0; len] }
    }

    pub fn filled(k: usize) -> Self {
        let mut t = SubsetTable::new(k);
        for m in 0..1u64 << k {
            t.set(StepSet(m as u32), true);
        }
        t
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, f: StepSet) -> bool {
        let i = f.0 as usize;
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, f: StepSet, v: bool) {
        let i = f.0 as usize;
        if v {
            self.words[i >> 6] |= 1 << (i & 63);
        } else {
            self.words[i >> 6] &= !(1 << (i & 63));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn members(&self) -> impl Iterator<Item = StepSet> + '_ {
        (0..1u64 << self.k).map(|m| StepSet(m as u32)).filter(|&f| self.get(f))
    }
}

impl fmt::Debug for SubsetTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}
