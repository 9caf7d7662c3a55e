//! Codes, restrictions, families and agreement arithmetic.
//!
//! Symbols are 1-based (`1..=m`). Coordinates are 0-based in the Rust API and
//! 1-based in every JSON or CLI surface.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{ensure, Error, Result};

/// Families over boxes with at most this many codes use a dense bitset.
pub const DENSE_LIMIT: u64 = 1 << 24;

/// The ambient space `[m]^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CodeBox {
    pub m: u32,
    pub n: usize,
}

impl CodeBox {
    pub fn new(m: u32, n: usize) -> Result<Self> {
        ensure!(
            m >= 2,
            Domain,
            "alphabet size m must be at least 2, got {m}"
        );
        ensure!(n >= 1, Domain, "word length n must be at least 1, got {n}");
        Self::derived(m, n)
    }

    /// Like [`CodeBox::new`] but also admits the degenerate boxes `[m]^0`
    /// (quotient onto every coordinate) and `[1]^n` (gluing onto a point).
    pub fn derived(m: u32, n: usize) -> Result<Self> {
        ensure!(m >= 1, Domain, "alphabet size must be positive");
        let b = CodeBox { m, n };
        ensure!(
            b.checked_size().is_some(),
            Budget,
            "{m}^{n} does not fit in u64"
        );
        Ok(b)
    }

    fn checked_size(&self) -> Option<u64> {
        (self.m as u64).checked_pow(u32::try_from(self.n).ok()?)
    }

    /// Number of codes, `m^n`.
    pub fn size(&self) -> u64 {
        self.checked_size()
            .expect("box size validated at construction")
    }

    pub fn is_dense(&self) -> bool {
        self.size() <= DENSE_LIMIT
    }

    pub(crate) fn shrink(&self, k: usize) -> CodeBox {
        CodeBox {
            m: self.m,
            n: self.n - k,
        }
    }

    /// Lexicographic index of a code (first coordinate most significant).
    pub fn index_of(&self, code: &Code) -> u64 {
        code.0
            .iter()
            .fold(0u64, |acc, &s| acc * self.m as u64 + (s - 1) as u64)
    }

    pub fn code_at(&self, mut index: u64) -> Code {
        let m = self.m as u64;
        let mut symbols = vec![0u32; self.n];
        for slot in symbols.iter_mut().rev() {
            *slot = (index % m) as u32 + 1;
            index /= m;
        }
        Code(symbols)
    }

    pub fn codes(&self) -> impl Iterator<Item = Code> + '_ {
        (0..self.size()).map(move |i| self.code_at(i))
    }

    pub fn check(&self, code: &Code) -> Result<()> {
        ensure!(
            code.len() == self.n,
            Dimension,
            "code of length {} in a box of length {}",
            code.len(),
            self.n
        );
        ensure!(
            code.0.iter().all(|&s| s >= 1 && s <= self.m),
            Domain,
            "code {code} has a symbol outside [1, {}]",
            self.m
        );
        Ok(())
    }
}

impl fmt::Display for CodeBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]^{}", self.m, self.n)
    }
}

/// A full assignment in `[m]^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Code(pub Vec<u32>);

impl Code {
    pub fn new(symbols: impl Into<Vec<u32>>) -> Self {
        Code(symbols.into())
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The code with coordinates `coords` (sorted, 0-based) deleted.
    pub fn without(&self, coords: &[usize]) -> Code {
        let mut out = Vec::with_capacity(self.len() - coords.len());
        let mut k = 0;
        for (i, &s) in self.0.iter().enumerate() {
            if k < coords.len() && coords[k] == i {
                k += 1;
            } else {
                out.push(s);
            }
        }
        Code(out)
    }

    pub fn project(&self, coords: &[usize]) -> Restriction {
        Restriction {
            coords: coords.to_vec(),
            values: coords.iter().map(|&c| self.0[c]).collect(),
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for Code {
    fn from(v: Vec<u32>) -> Self {
        Code(v)
    }
}

/// A partial assignment `(Z, x)` with `Z` strictly increasing.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Restriction {
    coords: Vec<usize>,
    values: Vec<u32>,
}

impl Restriction {
    pub fn new(coords: Vec<usize>, values: Vec<u32>) -> Result<Self> {
        ensure!(
            coords.len() == values.len(),
            Domain,
            "restriction has {} coordinates but {} values",
            coords.len(),
            values.len()
        );
        ensure!(
            coords.windows(2).all(|w| w[0] < w[1]),
            Domain,
            "restriction coordinates must be strictly increasing"
        );
        ensure!(
            values.iter().all(|&v| v >= 1),
            Domain,
            "restriction values are 1-based"
        );
        Ok(Restriction { coords, values })
    }

    pub fn empty() -> Self {
        Restriction::default()
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn value_at(&self, coord: usize) -> Option<u32> {
        self.coords
            .binary_search(&coord)
            .ok()
            .map(|k| self.values[k])
    }

    pub fn matches(&self, code: &Code) -> bool {
        self.coords
            .iter()
            .zip(&self.values)
            .all(|(&c, &v)| code.0[c] == v)
    }

    pub fn check(&self, b: &CodeBox) -> Result<()> {
        ensure!(
            self.coords.last().is_none_or(|&c| c < b.n),
            Domain,
            "restriction coordinate outside [0, {})",
            b.n
        );
        ensure!(
            self.values.iter().all(|&v| v <= b.m),
            Domain,
            "restriction value exceeds m = {}",
            b.m
        );
        Ok(())
    }

    /// Union of two restrictions on disjoint or consistent supports.
    pub fn join(&self, other: &Restriction) -> Option<Restriction> {
        let mut pairs: Vec<(usize, u32)> = self
            .coords
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .collect();
        for (&c, &v) in other.coords.iter().zip(&other.values) {
            match self.value_at(c) {
                Some(w) if w != v => return None,
                Some(_) => {}
                None => pairs.push((c, v)),
            }
        }
        pairs.sort_unstable();
        let (coords, values) = pairs.into_iter().unzip();
        Some(Restriction { coords, values })
    }

    /// Embedded image `{c*m + v}`, 1-based elements of `[mn]` as for [`embed_code`].
    pub fn embed(&self, m: u32) -> Vec<usize> {
        self.coords
            .iter()
            .zip(&self.values)
            .map(|(&c, &v)| c * m as usize + v as usize)
            .collect()
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (c, v)) in self.coords.iter().zip(&self.values).enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}->{}", c + 1, v)?;
        }
        write!(f, "}}")
    }
}

/// Anything that assigns symbols to some coordinates.
pub trait PartialCode {
    fn value_at(&self, coord: usize) -> Option<u32>;
}

impl PartialCode for Code {
    fn value_at(&self, coord: usize) -> Option<u32> {
        self.0.get(coord).copied()
    }
}

impl PartialCode for Restriction {
    fn value_at(&self, coord: usize) -> Option<u32> {
        Restriction::value_at(self, coord)
    }
}

/// Number of coordinates on which `x` and `y` carry the same symbol.
pub fn agr(x: &Code, y: &Code) -> Result<usize> {
    ensure!(
        x.len() == y.len(),
        Dimension,
        "codes of lengths {} and {}",
        x.len(),
        y.len()
    );
    Ok(agr_unchecked(x.symbols(), y.symbols()))
}

#[inline]
pub(crate) fn agr_unchecked(x: &[u32], y: &[u32]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a == b).count()
}

/// Agreement counted only on the coordinate set `z`.
pub fn agr_on<X: PartialCode, Y: PartialCode>(z: &[usize], x: &X, y: &Y) -> Result<usize> {
    let mut count = 0;
    for &c in z {
        match (x.value_at(c), y.value_at(c)) {
            (Some(a), Some(b)) => count += usize::from(a == b),
            _ => {
                return Err(Error::Domain(format!(
                    "coordinate {} outside the domain of an operand",
                    c + 1
                )))
            }
        }
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Members {
    Dense(BitSet),
    Sparse(BTreeSet<u64>),
}

/// A set of codes in a declared box. Iteration is in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    space: CodeBox,
    members: Members,
}

/// Restriction mode: keep the restricted coordinates or delete them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestrictMode {
    /// `F[Z -> x]`: matching members, same box.
    Keep,
    /// `F(Z -> x)`: matching members with `Z` deleted.
    Quotient,
}

impl Family {
    pub fn empty(space: CodeBox) -> Self {
        let members = if space.is_dense() {
            Members::Dense(BitSet::new(space.size() as usize))
        } else {
            Members::Sparse(BTreeSet::new())
        };
        Family { space, members }
    }

    pub fn full(space: CodeBox) -> Self {
        if space.is_dense() {
            Family {
                space,
                members: Members::Dense(BitSet::full(space.size() as usize)),
            }
        } else {
            Family {
                space,
                members: Members::Sparse((0..space.size()).collect()),
            }
        }
    }

    /// Builds a family from codes, rejecting duplicates and codes outside the box.
    pub fn from_codes<I>(space: CodeBox, codes: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<Code>,
    {
        let mut f = Family::empty(space);
        for c in codes {
            let c = c.into();
            space.check(&c)?;
            ensure!(
                f.insert_index(space.index_of(&c)),
                Domain,
                "duplicate code {c}"
            );
        }
        Ok(f)
    }

    /// Builds a family from lexicographic indices; repeated indices collapse.
    pub fn from_indices(space: CodeBox, indices: impl IntoIterator<Item = u64>) -> Self {
        let mut f = Family::empty(space);
        for i in indices {
            assert!(i < space.size(), "index {i} outside {space}");
            f.insert_index(i);
        }
        f
    }

    fn insert_index(&mut self, i: u64) -> bool {
        match &mut self.members {
            Members::Dense(b) => b.insert(i as usize),
            Members::Sparse(s) => s.insert(i),
        }
    }

    pub fn space(&self) -> CodeBox {
        self.space
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::Dense(b) => b.count(),
            Members::Sparse(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.members {
            Members::Dense(b) => b.is_empty(),
            Members::Sparse(s) => s.is_empty(),
        }
    }

    pub fn contains_index(&self, i: u64) -> bool {
        match &self.members {
            Members::Dense(b) => b.contains(i as usize),
            Members::Sparse(s) => s.contains(&i),
        }
    }

    pub fn contains(&self, code: &Code) -> bool {
        self.space.check(code).is_ok() && self.contains_index(self.space.index_of(code))
    }

    pub fn indices(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.members {
            Members::Dense(b) => Box::new(b.iter().map(|i| i as u64)),
            Members::Sparse(s) => Box::new(s.iter().copied()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Code> + '_ {
        self.indices().map(move |i| self.space.code_at(i))
    }

    pub fn codes(&self) -> Vec<Code> {
        self.iter().collect()
    }

    pub fn filter(&self, mut keep: impl FnMut(&Code) -> bool) -> Family {
        let space = self.space;
        Family::from_indices(space, self.indices().filter(|&i| keep(&space.code_at(i))))
    }

    pub fn union(&self, other: &Family) -> Result<Family> {
        self.same_box(other)?;
        Ok(Family::from_indices(
            self.space,
            self.indices().chain(other.indices()),
        ))
    }

    pub fn difference(&self, other: &Family) -> Result<Family> {
        self.same_box(other)?;
        Ok(Family::from_indices(
            self.space,
            self.indices().filter(|&i| !other.contains_index(i)),
        ))
    }

    pub fn is_subset(&self, other: &Family) -> bool {
        self.space == other.space && self.indices().all(|i| other.contains_index(i))
    }

    pub(crate) fn same_box(&self, other: &Family) -> Result<()> {
        ensure!(
            self.space == other.space,
            Dimension,
            "families live in {} and {}",
            self.space,
            other.space
        );
        Ok(())
    }

    /// `F[Z -> x]` or `F(Z -> x)`.
    pub fn restrict(&self, r: &Restriction, mode: RestrictMode) -> Result<Family> {
        r.check(&self.space)?;
        let matching = self.iter().filter(|c| r.matches(c));
        Ok(match mode {
            RestrictMode::Keep => {
                let space = self.space;
                Family::from_indices(space, matching.map(|c| space.index_of(&c)))
            }
            RestrictMode::Quotient => {
                let sub = self.space.shrink(r.len());
                Family::from_indices(sub, matching.map(|c| sub.index_of(&c.without(r.coords()))))
            }
        })
    }

    /// Number of members matching `r`, i.e. `|F[Z -> x]|`.
    pub fn count_matching(&self, r: &Restriction) -> usize {
        self.iter().filter(|c| r.matches(c)).count()
    }

    pub fn to_json(&self) -> FamilyJson {
        FamilyJson {
            m: self.space.m,
            n: self.space.n,
            codes: self.iter().map(|c| c.0).collect(),
        }
    }

    pub fn from_json(j: &FamilyJson) -> Result<Family> {
        let space = CodeBox::new(j.m, j.n)?;
        Family::from_codes(space, j.codes.iter().cloned())
    }
}

/// `{"m": int, "n": int, "codes": [[int,...],...]}`, 1-based symbols.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub m: u32,
    pub n: usize,
    pub codes: Vec<Vec<u32>>,
}

/// Result of an avoidance check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Avoidance {
    Avoiding,
    /// Two distinct members agreeing on exactly `t - 1` coordinates.
    Violated(Code, Code),
}

impl Avoidance {
    pub fn holds(&self) -> bool {
        matches!(self, Avoidance::Avoiding)
    }
}

/// Checks that no two distinct members agree on exactly `t - 1` coordinates.
pub fn is_avoiding(f: &Family, t: usize) -> Result<Avoidance> {
    let n = f.space().n;
    ensure!(
        t >= 1 && t <= n + 1,
        Domain,
        "t = {t} outside [1, n + 1] for n = {n}"
    );
    let codes = f.codes();
    for (i, x) in codes.iter().enumerate() {
        for y in &codes[i + 1..] {
            if agr_unchecked(x.symbols(), y.symbols()) == t - 1 {
                return Ok(Avoidance::Violated(x.clone(), y.clone()));
            }
        }
    }
    Ok(Avoidance::Avoiding)
}

/// The star `{x : x_Z = values}`.
pub fn make_star(space: CodeBox, coords: &[usize], values: &[u32]) -> Result<Family> {
    ensure!(
        coords.len() == values.len(),
        Domain,
        "star on {} coordinates with {} values",
        coords.len(),
        values.len()
    );
    let r = Restriction::new(coords.to_vec(), values.to_vec())?;
    r.check(&space)?;
    let free: Vec<usize> = (0..space.n).filter(|c| r.value_at(*c).is_none()).collect();
    let sub = space.shrink(r.len());
    let members = (0..sub.size()).map(|i| {
        let rest = sub.code_at(i);
        let mut code = vec![0u32; space.n];
        for (&c, &v) in r.coords().iter().zip(r.values()) {
            code[c] = v;
        }
        for (&c, &v) in free.iter().zip(rest.symbols()) {
            code[c] = v;
        }
        space.index_of(&Code(code))
    });
    Ok(Family::from_indices(space, members))
}

/// Common fixed part of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarMatch {
    pub restriction: Restriction,
    /// The family is the whole star on `restriction`.
    pub exact: bool,
}

/// Maximal restriction shared by every member; `None` for the empty family.
pub fn detect_star(f: &Family) -> Option<StarMatch> {
    let mut it = f.iter();
    let first = it.next()?;
    let mut fixed: Vec<bool> = vec![true; first.len()];
    for c in it {
        for (k, flag) in fixed.iter_mut().enumerate() {
            if c.0[k] != first.0[k] {
                *flag = false;
            }
        }
    }
    let coords: Vec<usize> = (0..first.len()).filter(|&k| fixed[k]).collect();
    let restriction = first.project(&coords);
    let star_size = (f.space().m as u64).pow((first.len() - coords.len()) as u32);
    Some(StarMatch {
        restriction,
        exact: f.len() as u64 == star_size,
    })
}

/// Parameters of the Frankl-type family `S_{t,r}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StarSpec {
    pub space: CodeBox,
    pub t: usize,
    pub r: usize,
}

impl StarSpec {
    pub fn new(space: CodeBox, t: usize, r: usize) -> Result<Self> {
        ensure!(t >= 1, Domain, "t must be at least 1");
        ensure!(
            t + 2 * r <= space.n,
            Domain,
            "t + 2r = {} exceeds n = {}",
            t + 2 * r,
            space.n
        );
        Ok(StarSpec { space, t, r })
    }
}

/// Codes with at least `t + r` ones among the first `t + 2r` coordinates.
pub fn srt_family(spec: &StarSpec) -> Family {
    let window = spec.t + 2 * spec.r;
    let need = spec.t + spec.r;
    Family::full(spec.space).filter(|c| c.0[..window].iter().filter(|&&s| s == 1).count() >= need)
}

/// `|S_{t,r}|` in closed form.
pub fn srt_size(spec: &StarSpec) -> u64 {
    let window = spec.t + 2 * spec.r;
    let m = spec.space.m as u64;
    let inner: u64 = (spec.t + spec.r..=window)
        .map(|j| binomial(window as u64, j as u64) * (m - 1).pow((window - j) as u32))
        .sum();
    inner * m.pow((spec.space.n - window) as u32)
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Embedded image `{(i-1)m + x_i}` of a code, as 1-based elements of `[mn]`.
pub fn embed_code(code: &Code, m: u32) -> Vec<usize> {
    code.0
        .iter()
        .enumerate()
        .map(|(i, &s)| i * m as usize + s as usize)
        .collect()
}

/// Set-system image of a family under the coordinate-block embedding.
pub fn embed_to_sets(f: &Family) -> Vec<Vec<usize>> {
    let m = f.space().m;
    f.iter().map(|c| embed_code(&c, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(m: u32, n: usize) -> CodeBox {
        CodeBox::new(m, n).unwrap()
    }

    fn fam(m: u32, n: usize, codes: &[&[u32]]) -> Family {
        Family::from_codes(bx(m, n), codes.iter().map(|c| c.to_vec())).unwrap()
    }

    #[test]
    fn agreement_examples() {
        assert_eq!(
            agr(&Code::new([1, 2, 3]), &Code::new([1, 2, 4])).unwrap(),
            2
        );
        assert_eq!(agr(&Code::new([1, 1]), &Code::new([2, 2])).unwrap(), 0);
        let x = Code::new([3, 1, 2]);
        assert_eq!(agr(&x, &x).unwrap(), 3);
        assert!(matches!(agr(&x, &Code::new([1])), Err(Error::Dimension(_))));
    }

    #[test]
    fn agreement_on_subsets() {
        assert_eq!(
            agr_on(&[0], &Code::new([1, 2]), &Code::new([1, 3])).unwrap(),
            1
        );
        assert_eq!(
            agr_on(&[], &Code::new([1, 2]), &Code::new([2, 3])).unwrap(),
            0
        );
        assert_eq!(
            agr_on(&[1, 2], &Code::new([1, 2, 3]), &Code::new([9, 2, 4])).unwrap(),
            1
        );
        let r = Restriction::new(vec![1], vec![2]).unwrap();
        assert_eq!(agr_on(&[1], &r, &Code::new([5, 2])).unwrap(), 1);
        assert!(matches!(
            agr_on(&[0], &r, &Code::new([5, 2])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn restriction_examples() {
        let full = Family::full(bx(2, 2));
        let r = Restriction::new(vec![0], vec![1]).unwrap();
        let q = full.restrict(&r, RestrictMode::Quotient).unwrap();
        assert_eq!(q.space(), bx(2, 1));
        assert_eq!(q.codes(), vec![Code::new([1]), Code::new([2])]);

        let f = fam(2, 2, &[&[1, 1], &[2, 2]]);
        assert_eq!(
            f.restrict(&r, RestrictMode::Keep).unwrap().codes(),
            vec![Code::new([1, 1])]
        );

        let g = fam(3, 2, &[&[1, 2], &[2, 1]]);
        let r3 = Restriction::new(vec![0], vec![3]).unwrap();
        assert!(g.restrict(&r3, RestrictMode::Keep).unwrap().is_empty());
    }

    #[test]
    fn avoidance_examples() {
        assert!(is_avoiding(&fam(2, 2, &[&[1, 1], &[2, 2]]), 2)
            .unwrap()
            .holds());
        assert_eq!(
            is_avoiding(&fam(2, 2, &[&[1, 1], &[1, 2]]), 2).unwrap(),
            Avoidance::Violated(Code::new([1, 1]), Code::new([1, 2]))
        );
        let star = make_star(bx(3, 3), &[0, 2], &[2, 1]).unwrap();
        for t in 1..=2 {
            assert!(is_avoiding(&star, t).unwrap().holds());
        }
        assert!(is_avoiding(&star, 0).is_err());
        assert!(is_avoiding(&star, 5).is_err());
    }

    #[test]
    fn star_examples() {
        let s = make_star(bx(3, 2), &[0], &[2]).unwrap();
        assert_eq!(
            s.codes(),
            vec![Code::new([2, 1]), Code::new([2, 2]), Code::new([2, 3])]
        );
        assert_eq!(make_star(bx(2, 3), &[0, 1], &[1, 1]).unwrap().len(), 2);
        assert_eq!(make_star(bx(4, 2), &[0, 1], &[3, 4]).unwrap().len(), 1);
        assert!(matches!(
            make_star(bx(2, 3), &[0, 1], &[1]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn detect_star_examples() {
        let s = make_star(bx(3, 2), &[0], &[2]).unwrap();
        let d = detect_star(&s).unwrap();
        assert_eq!(d.restriction, Restriction::new(vec![0], vec![2]).unwrap());
        assert!(d.exact);

        let d = detect_star(&fam(2, 2, &[&[1, 1], &[1, 2], &[2, 1]])).unwrap();
        assert!(d.restriction.is_empty());
        assert!(!d.exact);

        let d = detect_star(&fam(2, 2, &[&[1, 1]])).unwrap();
        assert_eq!(
            d.restriction,
            Restriction::new(vec![0, 1], vec![1, 1]).unwrap()
        );
        assert!(d.exact);

        assert!(detect_star(&Family::empty(bx(2, 2))).is_none());
    }

    #[test]
    fn srt_examples() {
        let spec = StarSpec::new(bx(2, 3), 1, 1).unwrap();
        assert_eq!(srt_size(&spec), 4);
        assert_eq!(srt_family(&spec).len(), 4);

        let spec = StarSpec::new(bx(3, 4), 1, 1).unwrap();
        assert_eq!(srt_size(&spec), 21);
        assert_eq!(srt_family(&spec).len(), 21);

        let spec = StarSpec::new(bx(3, 3), 2, 0).unwrap();
        assert_eq!(
            srt_family(&spec),
            make_star(bx(3, 3), &[0, 1], &[1, 1]).unwrap()
        );
        assert!(StarSpec::new(bx(3, 3), 2, 1).is_err());
    }

    #[test]
    fn embedding_examples() {
        assert_eq!(embed_code(&Code::new([1, 2]), 2), vec![1, 4]);
        assert_eq!(embed_code(&Code::new([2, 1]), 2), vec![2, 3]);
    }

    #[test]
    fn json_rejects_duplicates() {
        let j = FamilyJson {
            m: 2,
            n: 2,
            codes: vec![vec![1, 1], vec![1, 1]],
        };
        assert!(Family::from_json(&j).is_err());
        let j = FamilyJson {
            m: 2,
            n: 2,
            codes: vec![vec![1, 1], vec![2, 1]],
        };
        let f = Family::from_json(&j).unwrap();
        assert_eq!(f.to_json(), j);
        let j = FamilyJson {
            m: 2,
            n: 2,
            codes: vec![vec![1, 3]],
        };
        assert!(Family::from_json(&j).is_err());
    }

    #[test]
    fn sparse_families_behave_like_dense() {
        let big = CodeBox::new(2, 25).unwrap();
        assert!(!big.is_dense());
        let s = make_star(big, &(0..22).collect::<Vec<_>>(), &[1; 22]).unwrap();
        assert_eq!(s.len(), 8);
        assert!(detect_star(&s).unwrap().exact);
        assert!(is_avoiding(&s, 22).unwrap().holds());
    }
}
