//! Exact product measures, gluings and push-forwards.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{Code, CodeBox, Family, Restriction};
use crate::error::{ensure, Result};
use crate::exact::{fmt_q, parse_q, qu, Q};

/// `nu(x) = prod_i nu_i(x_i)` with exact rational factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductMeasure {
    space: CodeBox,
    factors: Vec<Vec<Q>>,
}

impl ProductMeasure {
    pub fn uniform(space: CodeBox) -> Self {
        let w = Q::new(1.into(), space.m.into());
        ProductMeasure {
            space,
            factors: vec![vec![w; space.m as usize]; space.n],
        }
    }

    pub fn new(space: CodeBox, factors: Vec<Vec<Q>>) -> Result<Self> {
        ensure!(
            factors.len() == space.n,
            Dimension,
            "{} factors for n = {}",
            factors.len(),
            space.n
        );
        for (i, f) in factors.iter().enumerate() {
            ensure!(
                f.len() == space.m as usize,
                Dimension,
                "factor {} has {} weights for m = {}",
                i + 1,
                f.len(),
                space.m
            );
            ensure!(
                f.iter().all(|w| !w.is_negative()),
                Domain,
                "factor {} has a negative weight",
                i + 1
            );
            let total: Q = f.iter().sum();
            ensure!(
                total.is_one(),
                Domain,
                "factor {} sums to {}",
                i + 1,
                fmt_q(&total)
            );
        }
        Ok(ProductMeasure { space, factors })
    }

    /// The same distribution on every coordinate.
    pub fn iid(space: CodeBox, factor: Vec<Q>) -> Result<Self> {
        ProductMeasure::new(space, vec![factor; space.n])
    }

    pub fn space(&self) -> CodeBox {
        self.space
    }

    pub fn factors(&self) -> &[Vec<Q>] {
        &self.factors
    }

    pub fn is_uniform(&self) -> bool {
        let w = Q::new(1.into(), self.space.m.into());
        self.factors.iter().all(|f| f.iter().all(|x| *x == w))
    }

    pub fn weight(&self, code: &Code) -> Q {
        code.symbols()
            .iter()
            .enumerate()
            .map(|(i, &s)| &self.factors[i][(s - 1) as usize])
            .product()
    }

    /// `nu_Z(x)`, the mass of the cylinder `[m]^n[Z -> x]`.
    pub fn cylinder(&self, r: &Restriction) -> Q {
        r.coords()
            .iter()
            .zip(r.values())
            .map(|(&c, &v)| &self.factors[c][(v - 1) as usize])
            .product()
    }

    /// Weights of all codes in lexicographic order.
    pub fn table(&self) -> Vec<Q> {
        let mut table = vec![Q::one()];
        for f in &self.factors {
            table = table
                .iter()
                .flat_map(|w| f.iter().map(move |x| w * x))
                .collect();
        }
        table
    }

    pub fn measure_of(&self, f: &Family) -> Result<Q> {
        ensure!(
            f.space() == self.space,
            Dimension,
            "family in {} but measure on {}",
            f.space(),
            self.space
        );
        if self.is_uniform() {
            return Ok(Q::new(f.len().into(), self.space.size().into()));
        }
        Ok(f.iter().map(|c| self.weight(&c)).sum())
    }

    /// `nu_{Z -> x}`: the product of the factors outside `coords`.
    pub fn restrict(&self, coords: &[usize]) -> Result<ProductMeasure> {
        ensure!(
            coords.windows(2).all(|w| w[0] < w[1]),
            Domain,
            "coordinates must be strictly increasing"
        );
        ensure!(
            coords.last().is_none_or(|&c| c < self.space.n),
            Domain,
            "coordinate outside the box"
        );
        let factors: Vec<Vec<Q>> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| coords.binary_search(i).is_err())
            .map(|(_, f)| f.clone())
            .collect();
        Ok(ProductMeasure {
            space: CodeBox::derived(self.space.m, factors.len())?,
            factors,
        })
    }

    /// Minimal `b` with every atom at most `b/m`.
    pub fn balancedness(&self) -> Q {
        let max = self
            .factors
            .iter()
            .flatten()
            .max()
            .cloned()
            .unwrap_or_else(Q::zero);
        max * qu(self.space.m as u64)
    }

    /// Largest atom `max_{i,x} nu_i(x)`.
    pub fn max_atom(&self) -> Q {
        self.factors
            .iter()
            .flatten()
            .max()
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn to_json(&self) -> MeasureJson {
        MeasureJson {
            m: self.space.m,
            n: self.space.n,
            factors: self
                .factors
                .iter()
                .map(|f| f.iter().map(fmt_q).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &MeasureJson) -> Result<Self> {
        let space = CodeBox::new(j.m, j.n)?;
        let factors = j
            .factors
            .iter()
            .map(|f| f.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>>>())
            .collect::<Result<Vec<_>>>()?;
        ProductMeasure::new(space, factors)
    }
}

/// `{"m": int, "n": int, "factors": [["p/q", ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub m: u32,
    pub n: usize,
    pub factors: Vec<Vec<String>>,
}

/// Coordinatewise surjections `[m1] -> [m2]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gluing {
    m1: u32,
    m2: u32,
    maps: Vec<Vec<u32>>,
}

impl Gluing {
    /// `maps[i][a - 1]` is the image of symbol `a` at coordinate `i`.
    pub fn new(m1: u32, m2: u32, maps: Vec<Vec<u32>>) -> Result<Self> {
        ensure!(
            m1 >= 1 && m2 >= 1,
            Domain,
            "alphabet sizes must be positive"
        );
        for (i, map) in maps.iter().enumerate() {
            ensure!(
                map.len() == m1 as usize,
                Dimension,
                "map {} has {} entries for m1 = {m1}",
                i + 1,
                map.len()
            );
            ensure!(
                map.iter().all(|&y| y >= 1 && y <= m2),
                Domain,
                "map {} leaves [1, {m2}]",
                i + 1
            );
            let mut hit = vec![false; m2 as usize];
            for &y in map {
                hit[(y - 1) as usize] = true;
            }
            ensure!(
                hit.iter().all(|&h| h),
                Domain,
                "map {} is not surjective",
                i + 1
            );
        }
        Ok(Gluing { m1, m2, maps })
    }

    pub fn identity(m: u32, n: usize) -> Self {
        Gluing {
            m1: m,
            m2: m,
            maps: vec![(1..=m).collect(); n],
        }
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[Vec<u32>] {
        &self.maps
    }

    pub fn source(&self) -> Result<CodeBox> {
        CodeBox::derived(self.m1, self.n())
    }

    pub fn target(&self) -> Result<CodeBox> {
        CodeBox::derived(self.m2, self.n())
    }

    pub fn image(&self, code: &Code) -> Code {
        Code(
            code.symbols()
                .iter()
                .zip(&self.maps)
                .map(|(&s, map)| map[(s - 1) as usize])
                .collect(),
        )
    }

    pub fn fiber_sizes(&self, coord: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.m2 as usize];
        for &y in &self.maps[coord] {
            sizes[(y - 1) as usize] += 1;
        }
        sizes
    }

    pub fn max_fiber(&self) -> usize {
        (0..self.n())
            .flat_map(|i| self.fiber_sizes(i))
            .max()
            .unwrap_or(0)
    }

    /// Every fiber has size at most `b * m1 / m2`.
    pub fn is_balanced(&self, b: &Q) -> bool {
        let bound = b * qu(self.m1 as u64) / qu(self.m2 as u64);
        qu(self.max_fiber() as u64) <= bound
    }

    /// `F^pi = {pi(x) : x in F}`.
    pub fn apply(&self, f: &Family) -> Result<Family> {
        let src = self.source()?;
        ensure!(
            f.space() == src,
            Dimension,
            "family in {} but gluing from {}",
            f.space(),
            src
        );
        let target = self.target()?;
        Ok(Family::from_indices(
            target,
            f.iter().map(|c| target.index_of(&self.image(&c))),
        ))
    }

    /// `nu^pi(y) = prod_i nu_i(pi_i^{-1}(y_i))`.
    pub fn push(&self, nu: &ProductMeasure) -> Result<ProductMeasure> {
        ensure!(
            nu.space() == self.source()?,
            Dimension,
            "measure on {} but gluing from {}",
            nu.space(),
            self.source()?
        );
        let factors = self
            .maps
            .iter()
            .zip(nu.factors())
            .map(|(map, f)| {
                let mut out = vec![Q::zero(); self.m2 as usize];
                for (a, &y) in map.iter().enumerate() {
                    out[(y - 1) as usize] += &f[a];
                }
                out
            })
            .collect();
        ProductMeasure::new(self.target()?, factors)
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &Gluing) -> Result<Gluing> {
        ensure!(
            after.m1 == self.m2 && after.n() == self.n(),
            Dimension,
            "gluings do not compose"
        );
        let maps = self
            .maps
            .iter()
            .zip(&after.maps)
            .map(|(f, g)| f.iter().map(|&y| g[(y - 1) as usize]).collect())
            .collect();
        Gluing::new(self.m1, after.m2, maps)
    }

    /// Keeps only the given coordinates (sorted).
    pub fn select(&self, coords: &[usize]) -> Gluing {
        Gluing {
            m1: self.m1,
            m2: self.m2,
            maps: coords.iter().map(|&c| self.maps[c].clone()).collect(),
        }
    }

    pub fn to_json(&self) -> GluingJson {
        GluingJson {
            m1: self.m1,
            m2: self.m2,
            maps: self.maps.clone(),
        }
    }

    pub fn from_json(j: &GluingJson) -> Result<Self> {
        Gluing::new(j.m1, j.m2, j.maps.clone())
    }
}

/// `{"m1": int, "m2": int, "maps": [[int, ...], ...]}`, 1-based targets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingJson {
    pub m1: u32,
    pub m2: u32,
    pub maps: Vec<Vec<u32>>,
}

/// Surjective maps `[m1] -> [m2]` with all fibers of size at most `cap`,
/// ordered lexicographically by the image vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapSpace {
    pub m1: u32,
    pub m2: u32,
    pub cap: usize,
}

impl MapSpace {
    fn completions(&self, remaining: usize, counts: &[usize]) -> BigUint {
        // dp[s]: labeled ways to place s items into the targets seen so far
        let mut dp = vec![BigUint::zero(); remaining + 1];
        dp[0] = BigUint::one();
        for &c in counts {
            let lo = usize::from(c == 0);
            let hi = self.cap.saturating_sub(c);
            let mut next = vec![BigUint::zero(); remaining + 1];
            for (s, slot) in next.iter_mut().enumerate() {
                for k in lo..=hi.min(s) {
                    if !dp[s - k].is_zero() {
                        *slot += binomial_big(s, k) * &dp[s - k];
                    }
                }
            }
            dp = next;
        }
        dp.pop().unwrap_or_default()
    }

    pub fn count(&self) -> BigUint {
        self.completions(self.m1 as usize, &vec![0; self.m2 as usize])
    }

    /// The map at lexicographic position `index`.
    pub fn unrank(&self, index: &BigUint) -> Vec<u32> {
        let mut idx = index.clone();
        let mut counts = vec![0usize; self.m2 as usize];
        let mut map = Vec::with_capacity(self.m1 as usize);
        for pos in 0..self.m1 as usize {
            let rest = self.m1 as usize - pos - 1;
            let mut placed = false;
            for v in 0..self.m2 as usize {
                if counts[v] >= self.cap {
                    continue;
                }
                counts[v] += 1;
                let c = self.completions(rest, &counts);
                if idx < c {
                    map.push(v as u32 + 1);
                    placed = true;
                    break;
                }
                idx -= c;
                counts[v] -= 1;
            }
            assert!(placed, "index out of range");
        }
        map
    }

    /// Every map, in lexicographic order.
    pub fn all(&self, limit: u64) -> Result<Vec<Vec<u32>>> {
        let total = self.count();
        ensure!(
            total <= BigUint::from(limit),
            Budget,
            "{total} maps per coordinate exceed the limit {limit}"
        );
        let mut out = Vec::with_capacity(total.to_usize().unwrap_or(0));
        let mut map = Vec::with_capacity(self.m1 as usize);
        let mut counts = vec![0usize; self.m2 as usize];
        self.extend(&mut map, &mut counts, &mut out);
        Ok(out)
    }

    fn extend(&self, map: &mut Vec<u32>, counts: &mut [usize], out: &mut Vec<Vec<u32>>) {
        let rest = self.m1 as usize - map.len();
        let missing = counts.iter().filter(|&&c| c == 0).count();
        if missing > rest {
            return;
        }
        if rest == 0 {
            out.push(map.clone());
            return;
        }
        for v in 0..counts.len() {
            if counts[v] < self.cap {
                counts[v] += 1;
                map.push(v as u32 + 1);
                self.extend(map, counts, out);
                map.pop();
                counts[v] -= 1;
            }
        }
    }
}

fn binomial_big(n: usize, k: usize) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `Pi_{m1,m2,b}^{⊗n}`: tuples of balanced maps, coordinate 1 most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GluingSpace {
    pub maps: MapSpace,
    pub n: usize,
}

/// Per-coordinate map lists larger than this are never materialized.
pub const MAP_LIST_LIMIT: u64 = 1 << 22;

impl GluingSpace {
    pub fn count(&self) -> BigUint {
        num_traits::pow(self.maps.count(), self.n)
    }

    pub fn unrank(&self, index: &BigUint) -> Gluing {
        let per = self.maps.count();
        let mut idx = index.clone();
        let mut maps = vec![Vec::new(); self.n];
        for slot in maps.iter_mut().rev() {
            *slot = self.maps.unrank(&(&idx % &per));
            idx /= &per;
        }
        Gluing {
            m1: self.maps.m1,
            m2: self.maps.m2,
            maps,
        }
    }

    /// Uniform over the space.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Gluing {
        let idx = rng.gen_biguint_below(&self.count());
        self.unrank(&idx)
    }

    /// Every gluing in lexicographic order.
    pub fn iter(&self) -> Result<impl Iterator<Item = Gluing>> {
        let list = self.maps.all(MAP_LIST_LIMIT)?;
        let (m1, m2, n) = (self.maps.m1, self.maps.m2, self.n);
        let k = list.len();
        let mut digits = vec![0usize; n];
        let mut done = k == 0 && n > 0;
        Ok(std::iter::from_fn(move || {
            if done {
                return None;
            }
            let g = Gluing {
                m1,
                m2,
                maps: digits.iter().map(|&d| list[d].clone()).collect(),
            };
            done = true;
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < k {
                    done = false;
                    break;
                }
                *d = 0;
            }
            Some(g)
        }))
    }
}

/// The balanced gluings `Pi_{m1,m2,b}^{⊗n}`.
///
/// Feasible exactly when `m2 <= m1` and `m2` fibers of the allowed size
/// `floor(b * m1 / m2)` can cover `[m1]`.
pub fn enumerate_gluings(m1: u32, m2: u32, b: &Q, n: usize) -> Result<GluingSpace> {
    ensure!(
        m2 >= 1 && m2 <= m1,
        Domain,
        "need 1 <= m2 <= m1, got m1 = {m1}, m2 = {m2}"
    );
    let cap = (b * qu(m1 as u64) / qu(m2 as u64))
        .floor()
        .to_integer()
        .to_usize()
        .unwrap_or(usize::MAX)
        .min(m1 as usize);
    ensure!(
        cap * m2 as usize >= m1 as usize,
        Domain,
        "fibers of size at most {cap} cannot cover [{m1}] with {m2} targets"
    );
    Ok(GluingSpace {
        maps: MapSpace { m1, m2, cap },
        n,
    })
}

/// `pi(x) = ((x - 1) mod k) + 1` on every coordinate, a balanced map onto `[k]` when `k | m`.
pub fn modular_gluing(m: u32, k: u32, n: usize) -> Result<Gluing> {
    ensure!(
        k >= 1 && k <= m,
        Domain,
        "target alphabet {k} outside [1, {m}]"
    );
    Gluing::new(m, k, vec![(0..m).map(|x| x % k + 1).collect(); n])
}
