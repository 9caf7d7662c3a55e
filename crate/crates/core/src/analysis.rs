//! Noise operators, stability, norms, homogeneity and globalness, and the
//! measure-boosting constants and experiments.

use std::fmt::Debug;

use num_bigint::BigUint;
use num_traits::{Num, One, Signed, Zero};
use rand::Rng;
use serde_json::json;

use crate::codes::{Code, CodeBox, Family, RestrictMode, Restriction};
use crate::corpus::trial_rng;
use crate::error::{ensure, Error, Result};
use crate::exact::{fmt_q, pow, q, qu, to_f64, RationalRoot, Q};
use crate::measure::{enumerate_gluings, modular_gluing, Gluing, GluingSpace, ProductMeasure};
use crate::report::{codes_json, q_json, restriction_json, Margin, Report};

/// Dense function tables are limited to this many entries.
pub const TABLE_LIMIT: u64 = 1 << 16;

/// Padding applied to inequalities evaluated in binary64.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Field in which function values live: exact rationals or binary64.
pub trait Scalar: Clone + PartialOrd + Num + Debug {
    fn from_q(x: &Q) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for Q {
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn to_f64(&self) -> f64 {
        to_f64(self)
    }
}

impl Scalar for f64 {
    fn from_q(x: &Q) -> Self {
        to_f64(x)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// A function on `[m]^n` tabulated in lexicographic order, with its measure.
#[derive(Clone, Debug, PartialEq)]
pub struct RealFunction<S> {
    measure: ProductMeasure,
    values: Vec<S>,
}

fn check_table(space: CodeBox) -> Result<()> {
    ensure!(
        space.size() <= TABLE_LIMIT,
        Budget,
        "{space} has more than {TABLE_LIMIT} codes"
    );
    Ok(())
}

impl<S: Scalar> RealFunction<S> {
    pub fn new(measure: ProductMeasure, values: Vec<S>) -> Result<Self> {
        check_table(measure.space())?;
        ensure!(
            values.len() as u64 == measure.space().size(),
            Dimension,
            "{} values for a box of {} codes",
            values.len(),
            measure.space().size()
        );
        Ok(RealFunction { measure, values })
    }

    pub fn indicator(f: &Family, measure: &ProductMeasure) -> Result<Self> {
        ensure!(
            f.space() == measure.space(),
            Dimension,
            "family and measure live in different boxes"
        );
        check_table(f.space())?;
        let mut values = vec![S::zero(); f.space().size() as usize];
        for i in f.indices() {
            values[i as usize] = S::one();
        }
        Ok(RealFunction {
            measure: measure.clone(),
            values,
        })
    }

    pub fn constant(c: S, measure: &ProductMeasure) -> Result<Self> {
        check_table(measure.space())?;
        Ok(RealFunction {
            measure: measure.clone(),
            values: vec![c; measure.space().size() as usize],
        })
    }

    pub fn measure(&self) -> &ProductMeasure {
        &self.measure
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn value(&self, code: &Code) -> &S {
        &self.values[self.measure.space().index_of(code) as usize]
    }

    pub fn scale(&self, c: &S) -> Self {
        RealFunction {
            measure: self.measure.clone(),
            values: self.values.iter().map(|v| v.clone() * c.clone()).collect(),
        }
    }

    fn weights(&self) -> Vec<S> {
        self.measure.table().iter().map(S::from_q).collect()
    }

    pub fn expectation(&self) -> S {
        self.weights()
            .into_iter()
            .zip(&self.values)
            .fold(S::zero(), |acc, (w, v)| acc + w * v.clone())
    }

    pub fn inner(&self, other: &RealFunction<S>) -> Result<S> {
        ensure!(
            self.measure == other.measure,
            Dimension,
            "functions carry different measures"
        );
        Ok(self
            .weights()
            .into_iter()
            .zip(self.values.iter().zip(&other.values))
            .fold(S::zero(), |acc, (w, (a, b))| {
                acc + w * a.clone() * b.clone()
            }))
    }

    /// `||f||_2^2 = E f^2`.
    pub fn norm2_sq(&self) -> S {
        self.inner(self).expect("same measure")
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }
}

/// `T_rho f`, applied one coordinate at a time as `rho Id + (1 - rho) E_{nu_i}`.
pub fn noise_apply<S: Scalar>(f: &RealFunction<S>, rho: &S) -> Result<RealFunction<S>> {
    ensure!(
        *rho >= S::zero() && *rho <= S::one(),
        Domain,
        "noise rate {:?} outside [0, 1]",
        rho
    );
    let space = f.measure.space();
    let m = space.m as usize;
    let keep = S::one() - rho.clone();
    let mut values = f.values.clone();
    for (k, factor) in f.measure.factors().iter().enumerate() {
        let w: Vec<S> = factor.iter().map(S::from_q).collect();
        let stride = (space.m as usize).pow((space.n - 1 - k) as u32);
        let block = stride * m;
        for base in (0..values.len()).step_by(block) {
            for off in 0..stride {
                let idx = |a: usize| base + a * stride + off;
                let mean = (0..m).fold(S::zero(), |acc, a| {
                    acc + w[a].clone() * values[idx(a)].clone()
                });
                let resample = keep.clone() * mean;
                for a in 0..m {
                    let v = rho.clone() * values[idx(a)].clone() + resample.clone();
                    values[idx(a)] = v;
                }
            }
        }
    }
    Ok(RealFunction {
        measure: f.measure.clone(),
        values,
    })
}

/// `Stab_rho(f) = <f, T_rho f>`.
pub fn stability_fn<S: Scalar>(f: &RealFunction<S>, rho: &S) -> Result<S> {
    f.inner(&noise_apply(f, rho)?)
}

/// `Stab_rho(F)`, exact.
pub fn stability(f: &Family, nu: &ProductMeasure, rho: &Q) -> Result<Q> {
    stability_fn(&RealFunction::<Q>::indicator(f, nu)?, rho)
}

/// `(E |f|^q)^(1/q)` in binary64.
pub fn q_norm<S: Scalar>(f: &RealFunction<S>, q: f64) -> Result<f64> {
    ensure!(q >= 1.0, Domain, "q-norm needs q >= 1, got {q}");
    let total: f64 = f
        .measure
        .table()
        .iter()
        .zip(&f.values)
        .map(|(w, v)| to_f64(w) * v.to_f64().abs().powf(q))
        .sum();
    Ok(total.powf(1.0 / q))
}

/// Maximal normalized restriction and where it is attained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extremum {
    pub value: RationalRoot,
    pub witness: Restriction,
}

/// Non-empty coordinate sets, ordered lexicographically as sorted lists.
fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (1u32..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    all.sort();
    all
}

fn sub_index(code: &[u32], coords: &[usize], m: u32) -> usize {
    coords
        .iter()
        .fold(0usize, |acc, &c| acc * m as usize + (code[c] - 1) as usize)
}

/// Minimal `tau` with `nu_{S->x}(F(S->x)) <= tau^|S| nu(F)` for all non-empty `S` and `x`.
pub fn homogeneity(f: &Family, nu: &ProductMeasure) -> Result<Extremum> {
    ensure!(
        f.space() == nu.space(),
        Dimension,
        "family and measure live in different boxes"
    );
    ensure!(!f.is_empty(), Undefined, "homogeneity of the empty family");
    let total = nu.measure_of(f)?;
    ensure!(
        total.is_positive(),
        Undefined,
        "homogeneity of a null family"
    );
    let space = f.space();
    let members: Vec<(Code, Q)> = f
        .iter()
        .map(|c| {
            let w = nu.weight(&c);
            (c, w)
        })
        .collect();
    let mut best: Option<Extremum> = None;
    for s in nonempty_subsets(space.n) {
        let sub = CodeBox::derived(space.m, s.len())?;
        let mut mass = vec![Q::zero(); sub.size() as usize];
        for (c, w) in &members {
            mass[sub_index(c.symbols(), &s, space.m)] += w;
        }
        for (xi, num) in mass.into_iter().enumerate() {
            let x = sub.code_at(xi as u64);
            let r = Restriction::new(s.clone(), x.0)?;
            let cyl = nu.cylinder(&r);
            if cyl.is_zero() {
                continue;
            }
            // nu_{S->x}(F(S->x)) / nu(F)
            let ratio = num / (cyl * &total);
            let cand = RationalRoot::new(ratio, s.len() as u32);
            if best.as_ref().is_none_or(|b| cand > b.value) {
                best = Some(Extremum {
                    value: cand,
                    witness: r,
                });
            }
        }
    }
    // On `[m]^0` there is no non-empty restriction and every family is 1-homogeneous.
    Ok(best.unwrap_or(Extremum {
        value: RationalRoot::rational(Q::one()),
        witness: Restriction::empty(),
    }))
}

/// Minimal `r >= 1` with `||f_{S->x}||_2 <= r^|S| ||f||_2` for all non-empty `S` and `x`.
pub fn globalness(f: &RealFunction<Q>) -> Result<Extremum> {
    ensure!(!f.is_zero(), Undefined, "globalness of the zero function");
    let nu = f.measure();
    let space = nu.space();
    let weights = nu.table();
    let norm = f.norm2_sq();
    ensure!(
        norm.is_positive(),
        Undefined,
        "globalness of a null function"
    );
    let mut best = Extremum {
        value: RationalRoot::rational(Q::one()),
        witness: Restriction::empty(),
    };
    for s in nonempty_subsets(space.n) {
        let sub = CodeBox::derived(space.m, s.len())?;
        let mut mass = vec![Q::zero(); sub.size() as usize];
        for (i, (w, v)) in weights.iter().zip(f.values()).enumerate() {
            if !v.is_zero() {
                let c = space.code_at(i as u64);
                mass[sub_index(c.symbols(), &s, space.m)] += w * v * v;
            }
        }
        for (xi, num) in mass.into_iter().enumerate() {
            let r = Restriction::new(s.clone(), sub.code_at(xi as u64).0)?;
            let cyl = nu.cylinder(&r);
            if cyl.is_zero() {
                continue;
            }
            let ratio = num / (cyl * &norm);
            let cand = RationalRoot::new(ratio, 2 * s.len() as u32);
            if cand > best.value {
                best = Extremum {
                    value: cand,
                    witness: r,
                };
            }
        }
    }
    Ok(best)
}

fn family_params(f: &Family) -> serde_json::Value {
    json!({ "m": f.space().m, "n": f.space().n, "size": f.len() })
}

/// `||T_rho* 1_F||_q <= ||1_F||_2` with `rho* = ln q / (32 r q)` and `r` the globalness of `1_F`.
pub fn check_hypercontractivity(f: &Family, nu: &ProductMeasure, q: f64) -> Result<Report> {
    ensure!(q >= 2.0, Domain, "hypercontractivity needs q >= 2, got {q}");
    let mut params = family_params(f);
    params["q"] = json!(q);
    if f.is_empty() {
        return Ok(Report::new(
            "hypercontractivity",
            params,
            true,
            Margin::Float(0.0),
        ));
    }
    let exact = RealFunction::<Q>::indicator(f, nu)?;
    let r = globalness(&exact)?.value.to_f64().max(1.0);
    let rho = q.ln() / (32.0 * r * q);
    let lhs = q_norm(
        &noise_apply(&RealFunction::<f64>::indicator(f, nu)?, &rho)?,
        q,
    )?;
    let rhs = to_f64(&nu.measure_of(f)?).sqrt();
    params["r"] = json!(r);
    params["rho"] = json!(rho);
    let margin = rhs - lhs;
    let report = Report::new(
        "hypercontractivity",
        params,
        margin >= -FLOAT_TOLERANCE,
        Margin::Float(margin),
    );
    Ok(report.with_witness(json!({ "lhs": lhs, "rhs": rhs })))
}

/// `Stab_rho(f) <= ||f||_2^{2(1-1/t)} Stab_{rho^t}(f)^{1/t}` for `t` a power of two,
/// compared exactly after raising both sides to the power `t`.
pub fn check_stab_interpolation(f: &RealFunction<Q>, rho: &Q, t: u32) -> Result<Report> {
    ensure!(
        t >= 2 && t.is_power_of_two(),
        Domain,
        "t = {t} is not a power of two >= 2"
    );
    let s_rho = stability_fn(f, rho)?;
    let s_rho_t = stability_fn(f, &pow(rho, t))?;
    let lhs = pow(&s_rho, t);
    let rhs = pow(&f.norm2_sq(), t - 1) * &s_rho_t;
    let params = json!({ "m": f.measure().space().m, "n": f.measure().space().n, "rho": fmt_q(rho), "t": t });
    let margin = &rhs - &lhs;
    Ok(Report::new(
        "stab-interpolation",
        params,
        !margin.is_negative(),
        Margin::Exact(margin),
    )
    .with_witness(json!({ "stab_rho": q_json(&s_rho), "stab_rho_t": q_json(&s_rho_t) })))
}

/// Cross-intersecting pairs satisfy `a1 a2 <= (l/(1-l))^2 (1-a1)(1-a2)` when every atom is at most `l <= 1/2`.
pub fn check_hoffman(g1: &Family, g2: &Family, nu: &ProductMeasure) -> Result<Report> {
    g1.same_box(g2)?;
    let lambda = nu.max_atom();
    ensure!(
        lambda <= q(1, 2),
        Precondition,
        "largest atom {} exceeds 1/2",
        fmt_q(&lambda)
    );
    for x in g1.iter() {
        for y in g2.iter() {
            if crate::codes::agr_unchecked(x.symbols(), y.symbols()) == 0 {
                return Err(Error::Precondition(format!("{x} and {y} do not intersect")));
            }
        }
    }
    let a1 = nu.measure_of(g1)?;
    let a2 = nu.measure_of(g2)?;
    let ratio = &lambda / (Q::one() - &lambda);
    let lhs = &a1 * &a2;
    let rhs = &ratio * &ratio * (Q::one() - &a1) * (Q::one() - &a2);
    let margin = &rhs - &lhs;
    let params = json!({ "m": g1.space().m, "n": g1.space().n, "lambda": fmt_q(&lambda) });
    Ok(Report::new("hoffman", params, !margin.is_negative(), Margin::Exact(margin))
        .with_witness(json!({ "alpha1": q_json(&a1), "alpha2": q_json(&a2), "lhs": q_json(&lhs), "rhs": q_json(&rhs) })))
}

/// `c(tau) = ln(6/5) / (8 ln(2^7 / ln 4) + 4 ln tau)`, defined for `tau >= 1`.
pub fn c_of_tau(tau: f64) -> f64 {
    (6.0f64 / 5.0).ln() / (8.0 * (128.0 / 4.0f64.ln()).ln() + 4.0 * tau.ln())
}

pub fn c1_of_tau(tau: f64) -> f64 {
    4.0 + 2.0 * 2.0f64.ln().ln() / (1.0 - c_of_tau(tau)).ln()
}

pub fn c2_of_tau(tau: f64) -> f64 {
    -2.0 / (1.0 - c_of_tau(tau)).ln()
}

/// Constants of the boosting lemmas at `(tau, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoostConstants {
    pub tau: f64,
    pub b: u32,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    /// `C1(b) = (4 / ln 2) b^{3 c1(2) + 4}`; may overflow to infinity, see `ln_big_c1`.
    pub big_c1: f64,
    pub ln_big_c1: f64,
    /// `C2(b) = 2 c2(2) ln b + 1`.
    pub big_c2: f64,
}

pub fn boost_constants(tau: f64, b: u32) -> Result<BoostConstants> {
    ensure!(
        tau > 1.0 && tau.is_finite(),
        Domain,
        "tau must exceed 1, got {tau}"
    );
    ensure!(b >= 2, Domain, "b must be at least 2, got {b}");
    let lb = (b as f64).ln();
    let ln_big_c1 = (4.0 / 2.0f64.ln()).ln() + (3.0 * c1_of_tau(2.0) + 4.0) * lb;
    Ok(BoostConstants {
        tau,
        b,
        c: c_of_tau(tau),
        c1: c1_of_tau(tau),
        c2: c2_of_tau(tau),
        big_c1: ln_big_c1.exp(),
        ln_big_c1,
        big_c2: 2.0 * c2_of_tau(2.0) * lb + 1.0,
    })
}

/// Explicit hypotheses of the two main-regime theorems at given `(t, m, n)`.
///
/// Bounds on `m` that involve `m` on both sides are evaluated at the given `m`;
/// the second bound is astronomically large and is kept in log form.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeThresholds {
    pub t: usize,
    pub m: u32,
    pub n: usize,
    /// `t + 6t^2 ln m / ln(9/8) + 2 + (6t ln m + 2 ln(32/3)) / ln 2`.
    pub n_bound: f64,
    /// `48 t^3 ln m / ln(9/8) + 16t`.
    pub m_bound1: f64,
    /// `ln` of `2 (3/2)^2 C1(2) (ln(32/3 m^{3t}))^{2 C2(2)}`.
    pub ln_m_bound2: f64,
    /// `48 (3 t^2 ln m / ln(9/8) + 1)`.
    pub m_bound3: f64,
    /// `50 t^2`.
    pub large_m_n_bound: f64,
    /// `ln` of `(2^22 n)^{4t}`.
    pub ln_large_m_bound: f64,
    /// Polynomials of the corollaries: `n0(t)`, `2^32 t^3 ln t` and `2^32 t^4`.
    pub n0_poly: f64,
    pub n0_tilde: f64,
    pub n0_quartic: f64,
    pub poly_log_regime: bool,
    pub large_m_regime: bool,
}

impl RegimeThresholds {
    pub fn inside(&self) -> bool {
        self.poly_log_regime || self.large_m_regime
    }
}

pub fn regime_thresholds(t: usize, m: u32, n: usize) -> Result<RegimeThresholds> {
    ensure!(t >= 1, Domain, "t must be at least 1");
    ensure!(m >= 2 && n >= 1, Domain, "need m >= 2 and n >= 1");
    let tf = t as f64;
    let lm = (m as f64).ln();
    let l98 = (9.0f64 / 8.0).ln();
    let l2 = 2.0f64.ln();
    let l323 = (32.0f64 / 3.0).ln();
    let n_bound = tf + 6.0 * tf * tf * lm / l98 + 2.0 + (6.0 * tf * lm + 2.0 * l323) / l2;
    let m_bound1 = 48.0 / l98 * tf.powi(3) * lm + 16.0 * tf;
    let k = boost_constants(2.0, 2)?;
    let ln_m_bound2 =
        2.0f64.ln() + 2.25f64.ln() + k.ln_big_c1 + 2.0 * k.big_c2 * (l323 + 3.0 * tf * lm).ln();
    let m_bound3 = 48.0 * (3.0 / l98 * tf * tf * lm + 1.0);
    let large_m_n_bound = 50.0 * tf * tf;
    let ln_large_m_bound = 4.0 * tf * ((1u64 << 22) as f64 * n as f64).ln();
    let nf = n as f64;
    let poly_log_regime = t >= 2
        && nf >= n_bound
        && m as f64 >= m_bound1
        && lm >= ln_m_bound2
        && m as f64 >= m_bound3;
    let large_m_regime = t <= n + 1 && nf >= large_m_n_bound && lm >= ln_large_m_bound;
    Ok(RegimeThresholds {
        t,
        m,
        n,
        n_bound,
        m_bound1,
        ln_m_bound2,
        m_bound3,
        large_m_n_bound,
        ln_large_m_bound,
        n0_poly: tf + 6.0 * tf * tf / l98 + 2.0 + (4.0 * tf + 2.0 * l323) / l2,
        n0_tilde: 2f64.powi(32) * tf.powi(3) * tf.ln(),
        n0_quartic: 2f64.powi(32) * tf.powi(4),
        poly_log_regime,
        large_m_regime,
    })
}

/// Outcome of the exhaustive single boosting step.
#[derive(Clone, Debug)]
pub struct BoostStep {
    pub best: Gluing,
    pub achieved: Q,
    /// `nu(F)^2 / Stab_{5/6}(F)`.
    pub stab_bound: Q,
    /// `nu(F)^{1 - c(tau)}` when the step lemma's hypotheses hold.
    pub lemma_bound: Option<f64>,
    pub gluings_checked: u64,
    pub report: Report,
}

/// Largest number of gluings an exhaustive step search will visit.
pub const GLUING_SEARCH_LIMIT: u64 = 1_000_000;

fn pushed_measure(g: &Gluing, f: &Family, nu: &ProductMeasure) -> Result<Q> {
    g.push(nu)?.measure_of(&g.apply(f)?)
}

/// Exhaustive argmax of `nu^pi(F^pi)`; ties go to the lexicographically first gluing.
fn best_gluing_exhaustive(
    space: &GluingSpace,
    f: &Family,
    nu: &ProductMeasure,
) -> Result<(Gluing, Q, u64)> {
    let mut best: Option<(Gluing, Q)> = None;
    let mut visited = 0u64;
    for g in space.iter()? {
        visited += 1;
        let v = pushed_measure(&g, f, nu)?;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((g, v));
        }
    }
    let (g, v) = best.ok_or_else(|| Error::Domain("no balanced gluing exists".into()))?;
    Ok((g, v, visited))
}

/// Best of `samples` seeded draws, then first-improvement symbol swaps within
/// each coordinate map (swaps keep every fiber size).
fn best_gluing_sampled(
    space: &GluingSpace,
    f: &Family,
    nu: &ProductMeasure,
    seed: u64,
    samples: u64,
) -> Result<(Gluing, Q, u64)> {
    let mut best: Option<(Gluing, Q)> = None;
    let mut visited = 0;
    for trial in 0..samples {
        let g = space.sample(&mut trial_rng(seed, trial));
        visited += 1;
        let v = pushed_measure(&g, f, nu)?;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((g, v));
        }
    }
    let (mut g, mut v) = best.ok_or_else(|| Error::Domain("empty gluing space".into()))?;
    let (m1, m2) = (g.m1(), g.m2());
    'climb: loop {
        for coord in 0..g.n() {
            for a in 0..m1 as usize {
                for b in a + 1..m1 as usize {
                    let map = &g.maps()[coord];
                    if map[a] == map[b] {
                        continue;
                    }
                    let mut maps = g.maps().to_vec();
                    maps[coord].swap(a, b);
                    let cand = Gluing::new(m1, m2, maps)?;
                    visited += 1;
                    let cv = pushed_measure(&cand, f, nu)?;
                    if cv > v {
                        g = cand;
                        v = cv;
                        continue 'climb;
                    }
                }
            }
        }
        break;
    }
    Ok((g, v, visited))
}

/// Exhaustively maximizes `nu^pi(F^pi)` over `Pi_{m, m/s, 1}^{⊗n}` and checks
/// the stability bound and, when it applies, the single-step boosting bound.
pub fn boost_step_search(f: &Family, nu: &ProductMeasure, s: u32) -> Result<BoostStep> {
    let space = f.space();
    ensure!(
        nu.space() == space,
        Dimension,
        "family and measure live in different boxes"
    );
    ensure!(
        s >= 1 && space.m % s == 0,
        Domain,
        "s = {s} does not divide m = {}",
        space.m
    );
    let gluings = enumerate_gluings(space.m, space.m / s, &Q::one(), space.n)?;
    let count = gluings.count();
    ensure!(
        count <= BigUint::from(GLUING_SEARCH_LIMIT),
        Budget,
        "{count} gluings exceed the exhaustive limit {GLUING_SEARCH_LIMIT}"
    );
    let (best, achieved, visited) = best_gluing_exhaustive(&gluings, f, nu)?;
    let alpha = nu.measure_of(f)?;
    let mut params = family_params(f);
    params["s"] = json!(s);
    if alpha.is_zero() {
        let report = Report::new(
            "gluing-boost",
            params,
            true,
            Margin::Exact(achieved.clone()),
        );
        return Ok(BoostStep {
            best,
            achieved,
            stab_bound: Q::zero(),
            lemma_bound: None,
            gluings_checked: visited,
            report,
        });
    }
    let stab = stability(f, nu, &q(5, 6))?;
    let stab_bound = &alpha * &alpha / &stab;
    let stab_margin = &achieved - &stab_bound;
    let mut pass = !stab_margin.is_negative();
    let tau = homogeneity(f, nu)?.value.to_f64().max(1.0);
    let lemma_applies = s >= 4 && nu.balancedness() <= qu(s as u64);
    let lemma_bound = lemma_applies.then(|| to_f64(&alpha).powf(1.0 - c_of_tau(tau)));
    let mut witness = json!({
        "gluing": best.maps(),
        "achieved": q_json(&achieved),
        "stab_bound": q_json(&stab_bound),
        "tau": tau,
        "gluings": visited,
    });
    if let Some(lb) = lemma_bound {
        pass &= to_f64(&achieved) >= lb - FLOAT_TOLERANCE;
        witness["lemma_bound"] = json!(lb);
    }
    let report =
        Report::new("gluing-boost", params, pass, Margin::Exact(stab_margin)).with_witness(witness);
    Ok(BoostStep {
        best,
        achieved,
        stab_bound,
        lemma_bound,
        gluings_checked: visited,
        report,
    })
}

/// Maximal `|Z|` (then lexicographically least `Z`, then `x`) with
/// `nu_{Z->x}(G(Z->x)) >= tau^|Z| nu(G)`, among `Z` inside `allowed`.
/// `Z = ∅` always qualifies.
pub fn maximal_boosting_restriction(
    g: &Family,
    nu: &ProductMeasure,
    tau: &Q,
    allowed: &[usize],
) -> Result<(Restriction, Q)> {
    let space = g.space();
    let total = nu.measure_of(g)?;
    let members: Vec<(Code, Q)> = g
        .iter()
        .map(|c| {
            let w = nu.weight(&c);
            (c, w)
        })
        .collect();
    let k = allowed.len();
    let mut subsets: Vec<Vec<usize>> = (0u32..1 << k)
        .map(|mask| {
            (0..k)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| allowed[i])
                .collect()
        })
        .collect();
    subsets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    for z in subsets {
        let sub = CodeBox::derived(space.m, z.len())?;
        let mut mass = vec![Q::zero(); sub.size() as usize];
        for (c, w) in &members {
            mass[sub_index(c.symbols(), &z, space.m)] += w;
        }
        let target = pow(tau, z.len() as u32) * &total;
        for (xi, num) in mass.into_iter().enumerate() {
            let r = Restriction::new(z.clone(), sub.code_at(xi as u64).0)?;
            let cyl = nu.cylinder(&r);
            if cyl.is_zero() {
                continue;
            }
            let restricted = num / cyl;
            if restricted >= target {
                return Ok((r, restricted));
            }
        }
    }
    unreachable!("the empty restriction always qualifies")
}

/// One row of a boosting trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub alphabet: u32,
    /// Fixed coordinates `Z_i` and values `r_i` in the current alphabet.
    pub restriction: Restriction,
    /// `nu_i(F_i)`.
    pub measure: Q,
    /// How the step's gluing was chosen.
    pub gluing_method: String,
}

#[derive(Clone, Debug)]
pub struct BoostTrace {
    pub steps: Vec<TraceStep>,
    /// Composite coordinate maps `[m] -> [m_i]` of the last step.
    pub gluing: Gluing,
    pub hypotheses_met: bool,
    pub report: Report,
}

/// Runs the iterative boosting procedure: glue onto a power of `b`, take a
/// maximal boosting restriction, then repeatedly glue by a factor `b^2` with
/// the best gluing found and restrict again, until the measure reaches 1/2 or
/// the alphabet is at most `b`.
pub fn boost_pipeline_trace(
    f: &Family,
    nu: &ProductMeasure,
    b: u32,
    tau: &Q,
    seed: u64,
) -> Result<BoostTrace> {
    let space = f.space();
    ensure!(
        nu.space() == space,
        Dimension,
        "family and measure live in different boxes"
    );
    ensure!(b >= 2, Domain, "b must be at least 2");
    ensure!(*tau > Q::one(), Domain, "tau must exceed 1");
    let n = space.n;
    let alpha = nu.measure_of(f)?;
    let tau_f = to_f64(tau);
    let mut m0 = 1u32;
    while m0 * b <= space.m {
        m0 *= b;
    }
    let pi0 = modular_gluing(space.m, m0, n)?;
    let params =
        json!({ "m": space.m, "n": n, "b": b, "tau": fmt_q(tau), "seed": seed, "size": f.len() });

    // Lemma hypotheses: tau > 1, nu b-balanced, m and n large enough.
    let consts = boost_constants(tau_f, b)?;
    let ln_inv_alpha = if alpha.is_positive() {
        -to_f64(&alpha).ln()
    } else {
        f64::INFINITY
    };
    let ln_m_needed = consts.c1 * (b as f64).ln() + consts.c2 * (b as f64).ln() * ln_inv_alpha.ln();
    let balanced = nu.balancedness() <= qu(b as u64);
    let m_ok = ln_inv_alpha.is_finite() && (space.m as f64).ln() > ln_m_needed;
    let n_ok = ln_inv_alpha.is_finite() && n as f64 > ln_inv_alpha / tau_f.ln();
    let hypotheses_met = balanced && m_ok && n_ok;

    let mut composite = pi0.clone();
    let mut fixed = Restriction::empty();
    let mut steps = Vec::new();
    let mut alphabet = m0;

    if f.is_empty() {
        steps.push(TraceStep {
            alphabet,
            restriction: fixed,
            measure: Q::zero(),
            gluing_method: "empty family".into(),
        });
        let report = Report::unmet("boost-trace", params, "empty family");
        return Ok(BoostTrace {
            steps,
            gluing: composite,
            hypotheses_met: false,
            report,
        });
    }

    // Step 0.
    let glued = composite.apply(f)?;
    let glued_nu = composite.push(nu)?;
    let all: Vec<usize> = (0..n).collect();
    let (r0, mu0) = maximal_boosting_restriction(&glued, &glued_nu, tau, &all)?;
    fixed = r0;
    let mut current_measure = mu0;
    steps.push(TraceStep {
        alphabet,
        restriction: fixed.clone(),
        measure: current_measure.clone(),
        gluing_method: "modular".into(),
    });

    while current_measure < q(1, 2) && alphabet > b {
        let next = alphabet / (b * b);
        let free: Vec<usize> = (0..n).filter(|c| fixed.value_at(*c).is_none()).collect();
        // Current restricted family and measure on the free coordinates.
        let glued = composite.apply(f)?;
        let glued_nu = composite.push(nu)?;
        let fi = glued.restrict(&fixed, RestrictMode::Quotient)?;
        let nui = glued_nu.restrict(fixed.coords())?;
        let (step_map, method) = if free.is_empty() {
            (
                Gluing::new(alphabet, next.max(1), vec![])?,
                "none".to_string(),
            )
        } else {
            let gspace = enumerate_gluings(alphabet, next, &Q::one(), free.len())?;
            if gspace.count() <= BigUint::from(GLUING_SEARCH_LIMIT) {
                let (g, _, _) = best_gluing_exhaustive(&gspace, &fi, &nui)?;
                (g, "exhaustive".to_string())
            } else {
                let (g, _, _) = best_gluing_sampled(
                    &gspace,
                    &fi,
                    &nui,
                    seed.wrapping_add(steps.len() as u64),
                    64,
                )?;
                (g, "sampled+swaps".to_string())
            }
        };
        // Fixed coordinates use the balanced modular map.
        let fixed_map = modular_gluing(alphabet, next, 1)?.maps()[0].clone();
        let mut maps = vec![Vec::new(); n];
        let mut free_iter = step_map.maps().iter();
        for (c, slot) in maps.iter_mut().enumerate() {
            *slot = if fixed.value_at(c).is_some() {
                fixed_map.clone()
            } else {
                free_iter
                    .next()
                    .expect("one map per free coordinate")
                    .clone()
            };
        }
        let layer = Gluing::new(alphabet, next, maps)?;
        composite = composite.then(&layer)?;
        let new_values: Vec<u32> = fixed
            .coords()
            .iter()
            .zip(fixed.values())
            .map(|(_, &v)| fixed_map[(v - 1) as usize])
            .collect();
        let fixed_glued = Restriction::new(fixed.coords().to_vec(), new_values)?;
        alphabet = next;

        let glued = composite.apply(f)?;
        let glued_nu = composite.push(nu)?;
        let f2 = glued.restrict(&fixed_glued, RestrictMode::Keep)?;
        // Work on F'' inside the full box with fixed coordinates pinned, so
        // restrictions on free coordinates keep their original indices.
        let nu2 = glued_nu.clone();
        let pinned_total = nu2.measure_of(&f2)? / nu2.cylinder(&fixed_glued);
        let (extra, _) = {
            let quotient = f2.restrict(&fixed_glued, RestrictMode::Quotient)?;
            let qnu = nu2.restrict(fixed_glued.coords())?;
            let free_local: Vec<usize> = (0..free.len()).collect();
            maximal_boosting_restriction(&quotient, &qnu, tau, &free_local)?
        };
        let _ = pinned_total;
        let extra_global = Restriction::new(
            extra.coords().iter().map(|&k| free[k]).collect(),
            extra.values().to_vec(),
        )?;
        fixed = fixed_glued.join(&extra_global).expect("disjoint supports");
        let fi = glued.restrict(&fixed, RestrictMode::Quotient)?;
        current_measure = glued_nu.restrict(fixed.coords())?.measure_of(&fi)?;
        steps.push(TraceStep {
            alphabet,
            restriction: fixed.clone(),
            measure: current_measure.clone(),
            gluing_method: method,
        });
    }

    let rows: Vec<serde_json::Value> = steps
        .iter()
        .map(|s| json!({ "m": s.alphabet, "restriction": restriction_json(&s.restriction), "measure": q_json(&s.measure), "gluing": s.gluing_method }))
        .collect();
    let witness = json!({ "trace": rows, "alpha": q_json(&alpha) });
    let report = if hypotheses_met {
        let last = steps.last().expect("non-empty trace");
        let half_ok = last.measure >= q(1, 2);
        let r_ok = (last.restriction.len() as f64) <= ln_inv_alpha / tau_f.ln() + FLOAT_TOLERANCE;
        let homog_ok = {
            let glued = composite.apply(f)?;
            let qf = glued.restrict(&last.restriction, RestrictMode::Quotient)?;
            let qnu = composite.push(nu)?.restrict(last.restriction.coords())?;
            qf.space().n == 0
                || homogeneity(&qf, &qnu)?.value <= RationalRoot::rational(tau.clone())
        };
        Report::new(
            "boost-trace",
            params,
            half_ok && r_ok && homog_ok,
            Margin::Exact(&last.measure - q(1, 2)),
        )
        .with_witness(witness)
    } else {
        let mut unmet = Vec::new();
        if !balanced {
            unmet.push("measure not b-balanced");
        }
        if !m_ok {
            unmet.push("m below b^c1 (ln 1/alpha)^(c2 ln b)");
        }
        if !n_ok {
            unmet.push("n below ln(1/alpha)/ln tau");
        }
        let mut r = Report::unmet("boost-trace", params, unmet.join("; "));
        r.witness.as_mut().expect("unmet reports carry a reason")["trace"] =
            witness["trace"].clone();
        r
    };
    Ok(BoostTrace {
        steps,
        gluing: composite,
        hypotheses_met,
        report,
    })
}

/// Family members as JSON, for reports.
pub fn family_witness(f: &Family) -> serde_json::Value {
    codes_json(f)
}

/// Uniform random rational in `[0, 1]` with the given denominator.
pub fn random_rational<R: Rng>(rng: &mut R, denom: i64) -> Q {
    q(rng.gen_range(0..=denom), denom)
}

/// Ratio `nu(F)^2 / Stab_{5/6}(F)` used by the stability bound.
pub fn stab_measure_bound(f: &Family, nu: &ProductMeasure) -> Result<Q> {
    let alpha = nu.measure_of(f)?;
    ensure!(alpha.is_positive(), Undefined, "null family");
    Ok(&alpha * &alpha / stability(f, nu, &q(5, 6))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::make_star;
    use crate::corpus::random_nonempty_family;
    use crate::exact::qi;

    fn bx(m: u32, n: usize) -> CodeBox {
        CodeBox::new(m, n).unwrap()
    }

    #[test]
    fn noise_examples() {
        let b = bx(3, 1);
        let nu = ProductMeasure::uniform(b);
        let f = RealFunction::<Q>::indicator(&make_star(b, &[0], &[1]).unwrap(), &nu).unwrap();
        let g = noise_apply(&f, &q(1, 2)).unwrap();
        assert_eq!(g.values(), &[q(2, 3), q(1, 6), q(1, 6)]);
        assert_eq!(noise_apply(&f, &qi(1)).unwrap(), f);
        assert_eq!(
            noise_apply(&f, &qi(0)).unwrap().values(),
            &[q(1, 3), q(1, 3), q(1, 3)]
        );
        assert!(noise_apply(&f, &q(3, 2)).is_err());
        let c = RealFunction::constant(q(5, 7), &nu).unwrap();
        assert_eq!(noise_apply(&c, &q(1, 3)).unwrap(), c);
    }

    #[test]
    fn stability_examples() {
        let b = bx(3, 1);
        let nu = ProductMeasure::uniform(b);
        let star = make_star(b, &[0], &[1]).unwrap();
        assert_eq!(stability(&star, &nu, &q(1, 2)).unwrap(), q(2, 9));
        assert_eq!(stability(&star, &nu, &qi(0)).unwrap(), q(1, 9));
        assert_eq!(stability(&star, &nu, &qi(1)).unwrap(), q(1, 3));
        assert_eq!(
            stability(
                &Family::full(bx(3, 2)),
                &ProductMeasure::uniform(bx(3, 2)),
                &q(2, 7)
            )
            .unwrap(),
            qi(1)
        );
    }

    #[test]
    fn norms_of_indicators() {
        let b = bx(3, 2);
        let nu = ProductMeasure::uniform(b);
        let f = Family::from_codes(b, [vec![1, 1], vec![2, 3], vec![3, 3]]).unwrap();
        let ind = RealFunction::<Q>::indicator(&f, &nu).unwrap();
        assert!((q_norm(&ind, 2.0).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((q_norm(&ind, 4.0 / 3.0).unwrap() - (1.0f64 / 3.0).powf(0.75)).abs() < 1e-12);
        let scaled = ind.scale(&q(-5, 2));
        assert!((q_norm(&scaled, 3.0).unwrap() - 2.5 * q_norm(&ind, 3.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn homogeneity_examples() {
        let b = bx(3, 2);
        let nu = ProductMeasure::uniform(b);
        assert_eq!(
            homogeneity(&Family::full(b), &nu).unwrap().value,
            RationalRoot::rational(qi(1))
        );
        for (m, n) in [(2, 2), (3, 2), (3, 3), (4, 2)] {
            let b = bx(m, n);
            let nu = ProductMeasure::uniform(b);
            let star = make_star(b, &[0], &[2]).unwrap();
            let h = homogeneity(&star, &nu).unwrap();
            assert_eq!(
                h.value.cmp(&RationalRoot::rational(qu(m as u64))),
                std::cmp::Ordering::Equal
            );
        }
        assert!(homogeneity(&Family::empty(b), &nu).is_err());
    }

    #[test]
    fn globalness_squares_to_homogeneity() {
        let b = bx(3, 2);
        let nu = ProductMeasure::uniform(b);
        let mut rng = trial_rng(11, 0);
        for _ in 0..30 {
            let f = random_nonempty_family(&mut rng, b);
            let h = homogeneity(&f, &nu).unwrap().value;
            let g = globalness(&RealFunction::<Q>::indicator(&f, &nu).unwrap())
                .unwrap()
                .value;
            assert_eq!(g.pow(2).cmp(&h), std::cmp::Ordering::Equal);
        }
    }

    #[test]
    fn hypercontractivity_examples() {
        let b = bx(3, 2);
        let nu = ProductMeasure::uniform(b);
        let full = check_hypercontractivity(&Family::full(b), &nu, 4.0).unwrap();
        assert!(full.pass);
        let star = check_hypercontractivity(&make_star(b, &[0], &[1]).unwrap(), &nu, 4.0).unwrap();
        assert!(star.pass);
        match star.margin {
            Margin::Float(x) => assert!(x > 0.0),
            _ => panic!("float margin expected"),
        }
    }

    #[test]
    fn stab_interpolation_examples() {
        let b = bx(3, 2);
        let nu = ProductMeasure::uniform(b);
        let c = RealFunction::constant(q(2, 3), &nu).unwrap();
        let r = check_stab_interpolation(&c, &q(5, 6), 2).unwrap();
        assert_eq!(r.margin, Margin::Exact(Q::zero()));
        let f = RealFunction::<Q>::indicator(&make_star(b, &[1], &[3]).unwrap(), &nu).unwrap();
        for t in [2, 4] {
            assert!(check_stab_interpolation(&f, &q(5, 6), t).unwrap().pass);
        }
        assert_eq!(
            check_stab_interpolation(&f, &qi(1), 2).unwrap().margin,
            Margin::Exact(Q::zero())
        );
        assert!(check_stab_interpolation(&f, &q(1, 2), 3).is_err());
    }

    #[test]
    fn hoffman_tight_cases() {
        let b = bx(3, 1);
        let nu = ProductMeasure::uniform(b);
        let g = Family::from_codes(b, [vec![1]]).unwrap();
        let r = check_hoffman(&g, &g, &nu).unwrap();
        assert!(r.pass);
        assert_eq!(r.margin, Margin::Exact(Q::zero()));
        let b2 = bx(3, 2);
        let star = make_star(b2, &[0], &[1]).unwrap();
        let r = check_hoffman(&star, &star, &ProductMeasure::uniform(b2)).unwrap();
        assert_eq!(r.margin, Margin::Exact(Q::zero()));
        let apart = Family::from_codes(b, [vec![2]]).unwrap();
        assert!(matches!(
            check_hoffman(&g, &apart, &nu),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn boost_constant_values() {
        let k = boost_constants(2.0, 2).unwrap();
        assert!((k.c - 0.004678).abs() < 1e-5, "c(2) = {}", k.c);
        assert!(k.c1 > 0.0 && k.c2 > 0.0 && k.big_c1 > 0.0 && k.big_c2 > 0.0);
        assert!(boost_constants(1.0, 2).is_err());
        let grid: Vec<f64> = (0..=89).map(|i| 1.1 + 0.1 * i as f64).collect();
        assert!(grid.windows(2).all(|w| c_of_tau(w[0]) > c_of_tau(w[1])));
    }

    #[test]
    fn thresholds_grow_with_t() {
        for (m, n) in [(5, 3), (100, 10), (1 << 20, 1000)] {
            let a = regime_thresholds(1, m, n).unwrap();
            let b = regime_thresholds(2, m, n).unwrap();
            assert!(
                b.n_bound >= a.n_bound
                    && b.m_bound1 >= a.m_bound1
                    && b.ln_m_bound2 >= a.ln_m_bound2
            );
            assert!(b.m_bound3 >= a.m_bound3 && b.large_m_n_bound >= a.large_m_n_bound);
            assert!(b.ln_large_m_bound >= a.ln_large_m_bound && b.n0_poly >= a.n0_poly);
            assert!(!a.inside() && !b.inside());
        }
    }

    #[test]
    fn boost_step_on_odd_symbols() {
        let b = bx(8, 1);
        let nu = ProductMeasure::uniform(b);
        let f = Family::from_codes(b, [vec![1], vec![3], vec![5], vec![7]]).unwrap();
        let step = boost_step_search(&f, &nu, 4).unwrap();
        assert_eq!(step.achieved, qi(1));
        assert_eq!(step.gluings_checked, 70);
        assert!(step.report.pass);
        let full = boost_step_search(&Family::full(b), &nu, 4).unwrap();
        assert_eq!(full.achieved, qi(1));
    }

    #[test]
    fn trace_stops_at_half() {
        let b = bx(16, 2);
        let nu = ProductMeasure::uniform(b);
        let big = Family::full(b).filter(|c| c.symbols()[0] <= 8);
        let t = boost_pipeline_trace(&big, &nu, 2, &qi(2), 1).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert!(!t.hypotheses_met);
        assert!(!t.report.hypotheses_met());
    }
}
