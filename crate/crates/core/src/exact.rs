//! Exact rational helpers, rational roots and certified signs of log forms.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{ensure, Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qu(n: u64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn pow(x: &Q, e: u32) -> Q {
    num_traits::pow(x.clone(), e as usize)
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Formats as `p/q`, or `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.25`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int = if int.is_empty() || int == "-" {
            "0"
        } else {
            int
        };
        let whole: BigInt = int.parse().map_err(|_| bad())?;
        let digits: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac = Q::new(digits, scale);
        let whole = Q::from_integer(whole.abs());
        let v = whole + frac;
        return Ok(if negative { -v } else { v });
    }
    s.parse::<BigInt>().map(Q::from_integer).map_err(|_| bad())
}

/// The non-negative real `radicand^(1/degree)`, compared exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalRoot {
    pub radicand: Q,
    pub degree: u32,
}

impl RationalRoot {
    pub fn new(radicand: Q, degree: u32) -> Self {
        assert!(degree >= 1, "root degree must be positive");
        assert!(!radicand.is_negative(), "radicand must be non-negative");
        RationalRoot { radicand, degree }
    }

    pub fn rational(x: Q) -> Self {
        RationalRoot::new(x, 1)
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.radicand).powf(1.0 / self.degree as f64)
    }

    /// `self^k`, exact.
    pub fn pow(&self, k: u32) -> RationalRoot {
        RationalRoot::new(pow(&self.radicand, k), self.degree)
    }

    /// Rational enclosure `[lo, hi]` of width at most `2^-bits`.
    pub fn enclose(&self, bits: u32) -> (Q, Q) {
        let d = self.degree;
        let num = self.radicand.numer().to_biguint().expect("non-negative");
        let den = self.radicand.denom().to_biguint().expect("positive");
        // root(a/b) = root(a * b^(d-1)) / b
        let scale = BigUint::one() << bits;
        let big = num
            * num_traits::pow(den.clone(), (d - 1) as usize)
            * num_traits::pow(scale.clone(), d as usize);
        let r = big.nth_root(d);
        let denom = BigInt::from(den * scale);
        let exact = num_traits::pow(r.clone(), d as usize) == big;
        let lo = Q::new(BigInt::from(r.clone()), denom.clone());
        let hi = if exact {
            lo.clone()
        } else {
            Q::new(BigInt::from(r + 1u32), denom)
        };
        (lo, hi)
    }
}

impl PartialOrd for RationalRoot {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RationalRoot {
    fn cmp(&self, other: &Self) -> Ordering {
        pow(&self.radicand, other.degree).cmp(&pow(&other.radicand, self.degree))
    }
}

impl fmt::Display for RationalRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree == 1 {
            write!(f, "{}", fmt_q(&self.radicand))
        } else {
            write!(f, "({})^(1/{})", fmt_q(&self.radicand), self.degree)
        }
    }
}

/// Logarithm of a positive rational, as a formal integer combination of
/// logarithms of integers greater than one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LogTerm(BTreeMap<BigUint, i64>);

impl LogTerm {
    pub fn of(x: &Q) -> Result<LogTerm> {
        ensure!(
            x.is_positive(),
            Domain,
            "logarithm of non-positive {}",
            fmt_q(x)
        );
        let mut t = LogTerm::default();
        t.add(x.numer().magnitude(), 1);
        t.add(x.denom().magnitude(), -1);
        Ok(t)
    }

    pub fn of_int(n: u64) -> LogTerm {
        let mut t = LogTerm::default();
        t.add(&BigUint::from(n), 1);
        t
    }

    fn add(&mut self, n: &BigUint, e: i64) {
        if !n.is_one() {
            *self.0.entry(n.clone()).or_insert(0) += e;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|&e| e == 0)
    }
}

/// A real of the form `sum c_k * prod(log terms)` with at most two log factors per monomial.
#[derive(Clone, Debug, Default)]
pub struct LogForm {
    terms: Vec<(Q, Vec<LogTerm>)>,
}

/// Outcome of a certified sign decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertifiedSign {
    Negative,
    Zero,
    Positive,
    /// Interval evaluation did not separate the value from zero within the precision cap.
    Undecided,
}

impl LogForm {
    pub fn new() -> Self {
        LogForm::default()
    }

    pub fn constant(mut self, c: Q) -> Self {
        self.terms.push((c, vec![]));
        self
    }

    pub fn linear(mut self, c: Q, a: LogTerm) -> Self {
        self.terms.push((c, vec![a]));
        self
    }

    pub fn product(mut self, c: Q, a: LogTerm, b: LogTerm) -> Self {
        self.terms.push((c, vec![a, b]));
        self
    }

    /// Decides the sign exactly when the form vanishes identically over a
    /// coprime basis, otherwise by interval refinement up to `max_bits`.
    pub fn sign(&self, max_bits: u32) -> CertifiedSign {
        let (poly, basis) = self.polynomial();
        if poly.is_empty() {
            return CertifiedSign::Zero;
        }
        if let Some(sign) = float_filter(&poly, &basis) {
            return sign;
        }
        refine_sign(&poly, &basis, max_bits)
    }

    #[cfg(test)]
    fn sign_by_intervals(&self, max_bits: u32) -> CertifiedSign {
        let (poly, basis) = self.polynomial();
        if poly.is_empty() {
            return CertifiedSign::Zero;
        }
        refine_sign(&poly, &basis, max_bits)
    }

    /// The form as a polynomial in the logs of a coprime basis.
    fn polynomial(&self) -> (BTreeMap<Vec<usize>, Q>, Vec<BigUint>) {
        let mut ints: Vec<BigUint> = Vec::new();
        for (_, logs) in &self.terms {
            for l in logs {
                ints.extend(l.0.keys().cloned());
            }
        }
        let basis = coprime_basis(&ints);
        let expand = |l: &LogTerm| -> Vec<Q> {
            let mut v = vec![Q::zero(); basis.len()];
            for (n, &e) in &l.0 {
                for (k, exp) in factor_over(n, &basis) {
                    v[k] += qi(e * exp as i64);
                }
            }
            v
        };
        // Polynomial in basis logs: keys are sorted index lists of length <= 2.
        let mut poly: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (c, logs) in &self.terms {
            match logs.as_slice() {
                [] => *poly.entry(vec![]).or_insert_with(Q::zero) += c,
                [a] => {
                    for (i, ai) in expand(a).into_iter().enumerate() {
                        if !ai.is_zero() {
                            *poly.entry(vec![i]).or_insert_with(Q::zero) += c * ai;
                        }
                    }
                }
                [a, b] => {
                    let (va, vb) = (expand(a), expand(b));
                    for (i, ai) in va.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                        for (j, bj) in vb.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                            let key = if i <= j { vec![i, j] } else { vec![j, i] };
                            *poly.entry(key).or_insert_with(Q::zero) += c * ai * bj;
                        }
                    }
                }
                _ => unreachable!("log forms have degree at most two"),
            }
        }
        poly.retain(|_, c| !c.is_zero());
        (poly, basis)
    }
}

fn refine_sign(poly: &BTreeMap<Vec<usize>, Q>, basis: &[BigUint], max_bits: u32) -> CertifiedSign {
    let mut bits = 64;
    while bits <= max_bits {
        let logs: Vec<(Q, Q)> = basis.iter().map(|b| ln_interval(b, bits)).collect();
        let (mut lo, mut hi) = (Q::zero(), Q::zero());
        for (key, c) in poly {
            let (mut plo, mut phi) = (Q::one(), Q::one());
            for &k in key {
                // every basis element exceeds one, so its log interval is positive
                plo *= &logs[k].0;
                phi *= &logs[k].1;
            }
            if c.is_positive() {
                lo += c * plo;
                hi += c * phi;
            } else {
                lo += c * phi;
                hi += c * plo;
            }
        }
        if lo.is_positive() {
            return CertifiedSign::Positive;
        }
        if hi.is_negative() {
            return CertifiedSign::Negative;
        }
        bits *= 2;
    }
    CertifiedSign::Undecided
}

/// Sign from double-precision logs when the value clears the rounding error
/// by a wide margin. Each term carries at most a few ulps of relative error,
/// so a gap of `2^-30` of the absolute term sum is decisive.
fn float_filter(poly: &BTreeMap<Vec<usize>, Q>, basis: &[BigUint]) -> Option<CertifiedSign> {
    let logs: Vec<f64> = basis
        .iter()
        .map(|b| b.to_f64().map(f64::ln))
        .collect::<Option<_>>()?;
    let (mut value, mut scale) = (0.0f64, 0.0f64);
    for (key, c) in poly {
        let term = to_f64(c) * key.iter().map(|&k| logs[k]).product::<f64>();
        if !term.is_finite() {
            return None;
        }
        value += term;
        scale += term.abs();
    }
    if value.abs() > scale * 2f64.powi(-30) {
        Some(if value > 0.0 {
            CertifiedSign::Positive
        } else {
            CertifiedSign::Negative
        })
    } else {
        None
    }
}

/// Pairwise coprime integers (> 1) generating every input multiplicatively.
pub fn coprime_basis(ints: &[BigUint]) -> Vec<BigUint> {
    let mut basis: Vec<BigUint> = Vec::new();
    let mut queue: Vec<BigUint> = ints
        .iter()
        .filter(|n| !n.is_one() && !n.is_zero())
        .cloned()
        .collect();
    while let Some(x) = queue.pop() {
        if x.is_one() || basis.contains(&x) {
            continue;
        }
        let hit = basis.iter().position(|b| !b.gcd(&x).is_one());
        match hit {
            None => basis.push(x),
            Some(k) => {
                let b = basis.swap_remove(k);
                let g = b.gcd(&x);
                queue.push(&b / &g);
                queue.push(&x / &g);
                queue.push(g);
            }
        }
    }
    basis.sort();
    basis
}

/// Exponents of `n` over a coprime basis that generates it.
fn factor_over(n: &BigUint, basis: &[BigUint]) -> Vec<(usize, u32)> {
    let mut rest = n.clone();
    let mut out = Vec::new();
    for (k, b) in basis.iter().enumerate() {
        let mut e = 0;
        while (&rest % b).is_zero() {
            rest /= b;
            e += 1;
        }
        if e > 0 {
            out.push((k, e));
        }
    }
    debug_assert!(rest.is_one(), "basis does not generate {n}");
    out
}

fn round_down(x: &Q, bits: u32) -> Q {
    let scale = BigInt::one() << bits;
    Q::new(
        (x * Q::from_integer(scale.clone())).floor().to_integer(),
        scale,
    )
}

fn round_up(x: &Q, bits: u32) -> Q {
    let scale = BigInt::one() << bits;
    Q::new(
        (x * Q::from_integer(scale.clone())).ceil().to_integer(),
        scale,
    )
}

/// `2 atanh(z)` enclosed for rational `0 <= z <= 1/3`.
fn two_atanh(z: &Q, bits: u32) -> (Q, Q) {
    let work = bits + 16;
    let z2 = z * z;
    let (mut p_lo, mut p_hi) = (round_down(z, work), round_up(z, work));
    let (mut s_lo, mut s_hi) = (Q::zero(), Q::zero());
    let mut k = 1i64;
    let eps = Q::new(BigInt::one(), BigInt::one() << (bits + 4));
    loop {
        s_lo += round_down(&(&p_lo / qi(k)), work);
        s_hi += round_up(&(&p_hi / qi(k)), work);
        p_lo = round_down(&(&p_lo * &z2), work);
        p_hi = round_up(&(&p_hi * &z2), work);
        k += 2;
        // tail bound: z^k / (k (1 - z^2)), with z^2 <= 1/9
        let tail = &p_hi * q(9, 8) / qi(k);
        if tail < eps || p_hi.is_zero() {
            return (s_lo * qi(2), round_up(&((s_hi + tail) * qi(2)), work));
        }
    }
}

/// Enclosure of `ln n` for an integer `n >= 1`, width about `2^-bits * log2(n)`.
pub fn ln_interval(n: &BigUint, bits: u32) -> (Q, Q) {
    if n.is_one() {
        return (Q::zero(), Q::zero());
    }
    let (l2lo, l2hi) = two_atanh(&q(1, 3), bits + 16);
    let k = n.bits() - 1;
    // n = 2^k * y with 1 <= y < 2, ln y = 2 atanh((y-1)/(y+1))
    let y = Q::new(
        BigInt::from_biguint(Sign::Plus, n.clone()),
        BigInt::one() << k,
    );
    let z = (&y - Q::one()) / (&y + Q::one());
    let (alo, ahi) = two_atanh(&z, bits + 8);
    let kq = qu(k);
    (&kq * l2lo + alo, &kq * l2hi + ahi)
}
