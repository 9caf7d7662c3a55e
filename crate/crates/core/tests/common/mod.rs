//! Independent oracles written against raw symbol vectors, sharing nothing
//! with the library beyond its public types.

#![allow(dead_code)]

use aglab_core::exact::Q;
use num_traits::{One, Zero};

/// Every code of `[m]^n` in lexicographic order, coordinate 0 most significant.
pub fn all_codes(m: u32, n: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u32>| {
                (1..=m).map(move |s| {
                    let mut v = prefix.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

pub fn agree(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x == y).count()
}

/// Maximum size of a family with no pair agreeing on exactly `t - 1`
/// coordinates, and every maximum family as a sorted list of code indices,
/// by enumerating all subsets.
pub fn brute_max_avoiding(m: u32, n: usize, t: usize) -> (usize, Vec<Vec<u64>>) {
    let codes = all_codes(m, n);
    let k = codes.len();
    assert!(k <= 20, "subset enumeration is limited to 20 codes");
    let conflict: Vec<u32> = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i && agree(&codes[i], &codes[j]) + 1 == t)
                .fold(0u32, |acc, j| acc | 1 << j)
        })
        .collect();
    let mut best = 0;
    let mut sets = Vec::new();
    for mask in 0u32..1 << k {
        let ok = (0..k).all(|i| mask >> i & 1 == 0 || conflict[i] & mask == 0);
        if !ok {
            continue;
        }
        let size = mask.count_ones() as usize;
        if size > best {
            best = size;
            sets.clear();
        }
        if size == best {
            sets.push((0..k as u64).filter(|&i| mask >> i & 1 == 1).collect());
        }
    }
    sets.sort();
    (best, sets)
}

/// Uniform density of a set of codes inside `[m]^n`.
pub fn density(members: &[Vec<u32>], m: u32, n: usize) -> Q {
    Q::new(members.len().into(), (m as u64).pow(n as u32).into())
}

/// Whether the codes (in `[m]^n`) satisfy `density(F(S->x)) <= tau^|S| density(F)`
/// for every non-empty `S` and `x`, comparing rationals directly.
pub fn is_homogeneous(members: &[Vec<u32>], m: u32, n: usize, tau: &Q) -> bool {
    if members.is_empty() {
        return true;
    }
    let base = density(members, m, n);
    for mask in 1u32..1 << n {
        let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        for x in all_codes(m, s.len()) {
            let hits = members
                .iter()
                .filter(|c| s.iter().zip(&x).all(|(&i, &v)| c[i] == v))
                .count();
            let restricted = density(&vec![vec![]; hits], m, n - s.len());
            let mut bound = base.clone();
            for _ in 0..s.len() {
                bound *= tau;
            }
            if restricted > bound {
                return false;
            }
        }
    }
    true
}

pub fn qpow(x: &Q, e: u32) -> Q {
    (0..e).fold(Q::one(), |acc, _| acc * x)
}

pub fn is_zero(x: &Q) -> bool {
    x.is_zero()
}
