//! Exact cover of subsets by one set per family, swept family by family.
//!
//! Both backends fill the same minimal-prefix table: `reach[T] = 1 + i`
//! where `i` is the least number of leading families whose disjoint
//! members can tile `T` (`0` = never).

use super::SolveError;
use crate::stepset::{StepSet, SubsetTable};

/// Members of `base` that lie inside `mask`. The empty set is always a member.
#[derive(Clone, Copy)]
pub struct Family<'a> {
    pub base: &'a SubsetTable,
    pub mask: StepSet,
}

impl Family<'_> {
    #[inline]
    pub fn contains(&self, f: StepSet) -> bool {
        f.is_empty() || (f.is_subset(self.mask) && self.base.get(f))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    /// Pick by step count.
    #[default]
    Auto,
    /// Enumerate the free subsets of each reachable set: `O(3^k)` per family.
    Enumerate,
    /// Ranked zeta/Möbius subset convolution: `O(k^2 2^k)` per family.
    Convolution,
}

/// Step count from which `Auto` prefers convolution.
pub const CONVOLUTION_MIN_K: usize = 12;

impl Backend {
    pub fn resolve(self, k: usize) -> Backend {
        match self {
            Backend::Auto if k >= CONVOLUTION_MIN_K => Backend::Convolution,
            Backend::Auto => Backend::Enumerate,
            b => b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachTable {
    k: usize,
    reach: Vec<u32>,
}

impl ReachTable {
    #[inline]
    pub fn get(&self, t: StepSet) -> u32 {
        self.reach[t.bits() as usize]
    }

    #[inline]
    pub fn reachable(&self, t: StepSet) -> bool {
        self.get(t) != 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn raw(&self) -> &[u32] {
        &self.reach
    }
}

/// Sweeps `families` in order. With `stop_at` set, stops once that set is reachable.
pub fn cover_sweep(
    k: usize,
    families: &[Family<'_>],
    backend: Backend,
    stop_at: Option<StepSet>,
    visited: &mut u64,
) -> ReachTable {
    let mut reach = vec![0u32; 1 << k];
    reach[0] = 1;
    if stop_at == Some(StepSet::EMPTY) {
        return ReachTable { k, reach };
    }
    match backend.resolve(k) {
        Backend::Convolution => sweep_convolution(k, families, stop_at, &mut reach, visited),
        _ => sweep_enumerate(k, families, stop_at, &mut reach, visited),
    }
    ReachTable { k, reach }
}

fn sweep_enumerate(k: usize, families: &[Family<'_>], stop_at: Option<StepSet>, reach: &mut [u32], visited: &mut u64) {
    let full = StepSet::full(k);
    for (i, fam) in families.iter().enumerate() {
        let pos = i as u32 + 1;
        for t in 0..reach.len() {
            let r = reach[t];
            if r == 0 || r > pos {
                continue;
            }
            let t = StepSet::from_bits(t as u32);
            let free = (full - t) & fam.mask;
            for f in free.subsets() {
                *visited += 1;
                if f.is_empty() {
                    continue;
                }
                let u = (t | f).bits() as usize;
                if reach[u] == 0 && fam.base.get(f) {
                    reach[u] = pos + 1;
                }
            }
        }
        if stop_at.is_some_and(|s| reach[s.bits() as usize] != 0) {
            return;
        }
    }
}

/// Ranked zeta transform in place; layout is `[mask][rank]` with stride `k + 1`.
fn zeta(k: usize, a: &mut [u32]) {
    let w = k + 1;
    for b in 0..k {
        let bit = 1usize << b;
        for x in 0..1usize << k {
            if x & bit != 0 {
                let (lo, hi) = a.split_at_mut(x * w);
                let src = &lo[(x ^ bit) * w..(x ^ bit) * w + w];
                for (d, s) in hi[..w].iter_mut().zip(src) {
                    *d = d.wrapping_add(*s);
                }
            }
        }
    }
}

fn moebius(k: usize, a: &mut [u32]) {
    let w = k + 1;
    for b in 0..k {
        let bit = 1usize << b;
        for x in 0..1usize << k {
            if x & bit != 0 {
                let (lo, hi) = a.split_at_mut(x * w);
                let src = &lo[(x ^ bit) * w..(x ^ bit) * w + w];
                for (d, s) in hi[..w].iter_mut().zip(src) {
                    *d = d.wrapping_sub(*s);
                }
            }
        }
    }
}

fn ranked_indicator(k: usize, member: impl Fn(usize) -> bool, out: &mut [u32]) {
    let w = k + 1;
    out.iter_mut().for_each(|v| *v = 0);
    for x in 0..1usize << k {
        if member(x) {
            out[x * w + x.count_ones() as usize] = 1;
        }
    }
}

fn sweep_convolution(
    k: usize,
    families: &[Family<'_>],
    stop_at: Option<StepSet>,
    reach: &mut [u32],
    visited: &mut u64,
) {
    let w = k + 1;
    let size = 1usize << k;
    let mut cur = vec![0u32; size * w];
    let mut fz = vec![0u32; size * w];
    let mut fz_base: Option<*const SubsetTable> = None;
    let mut acc = vec![0u32; w];
    for (i, fam) in families.iter().enumerate() {
        let pos = i as u32 + 1;
        if fz_base != Some(fam.base as *const _) {
            ranked_indicator(k, |x| x == 0 || fam.base.get(StepSet::from_bits(x as u32)), &mut fz);
            zeta(k, &mut fz);
            fz_base = Some(fam.base as *const _);
        }
        ranked_indicator(k, |x| reach[x] != 0, &mut cur);
        zeta(k, &mut cur);
        let mask = fam.mask.bits() as usize;
        for x in 0..size {
            let y = x & mask;
            let r_row = &cur[x * w..x * w + w];
            let f_row = &fz[y * w..y * w + w];
            let top = x.count_ones() as usize;
            for r in 0..w {
                let mut s = 0u32;
                for j in 0..=r.min(top) {
                    s = s.wrapping_add(r_row[j].wrapping_mul(f_row[r - j]));
                }
                acc[r] = s;
            }
            cur[x * w..x * w + w].copy_from_slice(&acc);
        }
        moebius(k, &mut cur);
        *visited += (size * w) as u64;
        for x in 0..size {
            if reach[x] == 0 && cur[x * w + x.count_ones() as usize] != 0 {
                reach[x] = pos + 1;
            }
        }
        if stop_at.is_some_and(|s| reach[s.bits() as usize] != 0) {
            return;
        }
    }
}

/// Splits `target` into `(family index, member)` pieces following the reach table.
pub fn reconstruct(
    reach: &ReachTable,
    families: &[Family<'_>],
    target: StepSet,
) -> Result<Vec<(usize, StepSet)>, SolveError> {
    if !reach.reachable(target) {
        return Err(SolveError::InternalInconsistency("target set is not reachable".into()));
    }
    let mut out = Vec::new();
    let mut t = target;
    while !t.is_empty() {
        let r = reach.get(t);
        let idx = (r - 2) as usize;
        let fam = &families[idx];
        let piece = (t & fam.mask)
            .subsets()
            .find(|&f| !f.is_empty() && fam.base.get(f) && {
                let rest = reach.get(t - f);
                rest != 0 && rest < r
            })
            .ok_or_else(|| SolveError::InternalInconsistency(format!("no member of family {idx} explains {t:?}")))?;
        out.push((idx, piece));
        t = t - piece;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_backends_agree(k: usize, tables: &[SubsetTable], masks: &[StepSet]) {
        let fams: Vec<Family> = tables.iter().zip(masks).map(|(b, &m)| Family { base: b, mask: m }).collect();
        let mut v = 0;
        let a = cover_sweep(k, &fams, Backend::Enumerate, None, &mut v);
        let b = cover_sweep(k, &fams, Backend::Convolution, None, &mut v);
        assert_eq!(a, b);
        for t in 0..1u32 << k {
            let t = StepSet::from_bits(t);
            if a.reachable(t) {
                let pieces = reconstruct(&a, &fams, t).unwrap();
                let union = pieces.iter().fold(StepSet::EMPTY, |acc, &(_, f)| {
                    assert!(!acc.intersects(f));
                    acc | f
                });
                assert_eq!(union, t);
                let mut idx: Vec<usize> = pieces.iter().map(|p| p.0).collect();
                idx.sort();
                idx.dedup();
                assert_eq!(idx.len(), pieces.len());
            }
        }
    }

    #[test]
    fn backends_identical_on_pseudo_random_families() {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for k in 1..=7 {
            let mut tables = Vec::new();
            let mut masks = Vec::new();
            for _ in 0..4 {
                let mut t = SubsetTable::new(k);
                for f in 0..1u32 << k {
                    if next() % 3 == 0 {
                        t.set(StepSet::from_bits(f), true);
                    }
                }
                tables.push(t);
                masks.push(StepSet::from_bits(next() as u32) & StepSet::full(k));
            }
            all_backends_agree(k, &tables, &masks);
        }
    }

    #[test]
    fn unreachable_target_is_an_error() {
        let t = SubsetTable::new(2);
        let fams = [Family { base: &t, mask: StepSet::full(2) }];
        let mut v = 0;
        let r = cover_sweep(2, &fams, Backend::Enumerate, None, &mut v);
        assert!(reconstruct(&r, &fams, StepSet::full(2)).is_err());
    }
}
