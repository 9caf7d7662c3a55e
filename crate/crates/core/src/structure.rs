//! Shadows and Kruskal–Katona bounds, spread approximation, restriction
//! tools, sunflowers, covering numbers and the refined stars built on them.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{homogeneity, maximal_boosting_restriction};
use crate::bitset::BitSet;
use crate::codes::{
    agr_on, binomial, embed_code, is_avoiding, CodeBox, Family, RestrictMode, Restriction,
};
use crate::error::{ensure, Error, Result};
use crate::exact::{fmt_q, pow, qu, to_f64, RationalRoot, Q};
use crate::measure::ProductMeasure;
use crate::report::{codes_json, q_json, restriction_json, Margin, Report};

/// Size-`k` subsets of `0..n` in lexicographic order.
pub(crate) fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// `∂_l F`: all size-`l` restrictions extendable to a member of `F`.
pub fn shadow(f: &Family, l: usize) -> Result<BTreeSet<Restriction>> {
    let n = f.space().n;
    ensure!(l <= n, Domain, "shadow level {l} exceeds n = {n}");
    let supports = subsets_of_size(n, l);
    let mut out = BTreeSet::new();
    for c in f.iter() {
        for z in &supports {
            out.insert(c.project(z));
        }
    }
    Ok(out)
}

/// `|∂_l [m]^n| = C(n, l) m^l`.
pub fn ambient_shadow_size(space: CodeBox, l: usize) -> BigUint {
    BigUint::from(binomial(space.n as u64, l as u64)) * BigUint::from(space.m).pow(l as u32)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShadowReport {
    pub level: usize,
    pub shadow_size: usize,
    pub ambient_size: String,
    /// `|F| / m^n`.
    pub density: String,
}

pub fn shadow_report(f: &Family, l: usize) -> Result<ShadowReport> {
    let size = shadow(f, l)?.len();
    Ok(ShadowReport {
        level: l,
        shadow_size: size,
        ambient_size: ambient_shadow_size(f.space(), l).to_string(),
        density: fmt_q(&(qu(f.len() as u64) / qu(f.space().size()))),
    })
}

/// `|∂_l F| >= δ^{l/n} |∂_l [m]^n|` with `δ = |F| / m^n`, checked as
/// `|∂_l F|^n (m^n)^l >= |F|^l |∂_l [m]^n|^n` in integers.
pub fn check_kk_direct(f: &Family, l: usize) -> Result<Report> {
    let space = f.space();
    let n = space.n;
    ensure!(l >= 1 && l <= n, Domain, "level {l} outside [1, {n}]");
    let sh = shadow(f, l)?.len();
    let ambient = ambient_shadow_size(space, l);
    let lhs = BigUint::from(sh).pow(n as u32) * BigUint::from(space.size()).pow(l as u32);
    let rhs = BigUint::from(f.len()).pow(l as u32) * ambient.pow(n as u32);
    let delta = f.len() as f64 / space.size() as f64;
    let bound = delta.powf(l as f64 / n as f64)
        * ambient.to_string().parse::<f64>().unwrap_or(f64::INFINITY);
    let params = json!({ "m": space.m, "n": n, "l": l, "size": f.len() });
    Ok(
        Report::new("kk", params, lhs >= rhs, Margin::Float(sh as f64 - bound))
            .with_witness(json!({ "shadow": sh, "ambient": ambient.to_string(), "bound": bound })),
    )
}

/// Rational interval containing `δ'^{n/l} m^n`, the largest family size whose
/// `l`-shadow fraction can be `δ'`.
pub fn kk_contrapositive_bound(delta: &Q, l: usize, space: CodeBox) -> Result<(Q, Q)> {
    ensure!(
        !delta.is_negative() && *delta <= Q::one(),
        Domain,
        "shadow fraction {} outside [0, 1]",
        fmt_q(delta)
    );
    ensure!(
        l >= 1 && l < space.n,
        Domain,
        "level {l} must lie in [1, n)"
    );
    let root = RationalRoot::new(pow(delta, space.n as u32), l as u32);
    let (lo, hi) = root.enclose(64);
    let scale = qu(space.size());
    Ok((lo * &scale, hi * scale))
}

/// Output of the spread approximation procedure.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadDecomposition {
    pub tau: Q,
    pub q: usize,
    pub restrictions: Vec<Restriction>,
    /// `F_i ⊆ F[Z_i -> x_i]`, in the ambient box.
    pub parts: Vec<Family>,
    pub remainder: Family,
}

impl SpreadDecomposition {
    pub fn to_json(&self) -> Value {
        let parts: Vec<Value> = self
            .restrictions
            .iter()
            .zip(&self.parts)
            .map(|(r, p)| {
                let mut v = restriction_json(r);
                v["codes"] = codes_json(p);
                v
            })
            .collect();
        json!({ "tau": fmt_q(&self.tau), "q": self.q, "parts": parts, "remainder": codes_json(&self.remainder) })
    }
}

/// Splits `F` (uniform measure) into `τ`-homogeneous restricted parts of base
/// measure at least `τ^{-q}` plus a remainder of measure at most `τ^{-q}`.
///
/// Each step takes a qualifying `(Z, x)` of maximal `|Z|`, lexicographically
/// least among those; `Z = ∅` always qualifies.
pub fn spread_approximation(f: &Family, tau: &Q, q: usize) -> Result<SpreadDecomposition> {
    ensure!(*tau > Q::one(), Domain, "tau must exceed 1");
    ensure!(q >= 1, Domain, "q must be at least 1");
    let space = f.space();
    let nu = ProductMeasure::uniform(space);
    let floor = Q::one() / pow(tau, q as u32);
    let all: Vec<usize> = (0..space.n).collect();
    let mut g = f.clone();
    let mut out = SpreadDecomposition {
        tau: tau.clone(),
        q,
        restrictions: Vec::new(),
        parts: Vec::new(),
        remainder: Family::empty(space),
    };
    while !g.is_empty() {
        let (r, restricted) = maximal_boosting_restriction(&g, &nu, tau, &all)?;
        if r.len() > q || restricted <= floor {
            out.remainder = g;
            return Ok(out);
        }
        let part = g.restrict(&r, RestrictMode::Keep)?;
        g = g.difference(&part)?;
        out.restrictions.push(r);
        out.parts.push(part);
    }
    Ok(out)
}

/// Re-derives the four decomposition invariants from scratch.
pub fn check_spread(f: &Family, d: &SpreadDecomposition) -> Result<Report> {
    let space = f.space();
    let nu = ProductMeasure::uniform(space);
    let floor = Q::one() / pow(&d.tau, d.q as u32);
    let mut failures = Vec::new();
    let mut union = d.remainder.clone();
    let mut total = d.remainder.len();
    for (i, (r, p)) in d.restrictions.iter().zip(&d.parts).enumerate() {
        total += p.len();
        union = union.union(p)?;
        if r.len() > d.q || !p.iter().all(|c| r.matches(&c)) {
            failures.push(format!("part {i} is not inside its restriction"));
        }
        let quotient = p.restrict(r, RestrictMode::Quotient)?;
        let qnu = nu.restrict(r.coords())?;
        let base = qnu.measure_of(&quotient)?;
        if base < floor {
            failures.push(format!("part {i} has base measure {}", fmt_q(&base)));
        }
        if !quotient.is_empty()
            && homogeneity(&quotient, &qnu)?.value > RationalRoot::rational(d.tau.clone())
        {
            failures.push(format!("part {i} is not tau-homogeneous"));
        }
    }
    if union != *f || total != f.len() {
        failures.push("parts and remainder do not partition the family".into());
    }
    let rem = nu.measure_of(&d.remainder)?;
    if rem > floor {
        failures.push(format!("remainder measure {} exceeds tau^-q", fmt_q(&rem)));
    }
    let params =
        json!({ "m": space.m, "n": space.n, "tau": fmt_q(&d.tau), "q": d.q, "size": f.len() });
    Ok(Report::new(
        "spread",
        params,
        failures.is_empty(),
        Margin::Exact(&floor - &rem),
    )
    .with_witness(json!({ "parts": d.parts.len(), "failures": failures })))
}

/// Restricted measures `ν_{H->x}(F(H->x))` for every `x ∈ [m]^H`, lexicographic in `x`,
/// paired with `ν_H(x)`. Values with `ν_H(x) = 0` are reported as zero.
fn restricted_measures(
    f: &Family,
    nu: &ProductMeasure,
    h: &[usize],
) -> Result<Vec<(Vec<u32>, Q, Q)>> {
    ensure!(
        f.space() == nu.space(),
        Dimension,
        "family and measure live in different boxes"
    );
    ensure!(
        h.windows(2).all(|w| w[0] < w[1]) && h.last().is_none_or(|&c| c < f.space().n),
        Domain,
        "bad coordinate set"
    );
    let sub = CodeBox::derived(f.space().m, h.len())?;
    let mut mass = vec![Q::zero(); sub.size() as usize];
    let m = f.space().m as usize;
    for c in f.iter() {
        let k = h
            .iter()
            .fold(0usize, |acc, &i| acc * m + (c.symbols()[i] - 1) as usize);
        mass[k] += nu.weight(&c);
    }
    let mut out = Vec::with_capacity(mass.len());
    for (k, num) in mass.into_iter().enumerate() {
        let x = sub.code_at(k as u64).0;
        let cyl = nu.cylinder(&Restriction::new(h.to_vec(), x.clone())?);
        let restricted = if cyl.is_zero() { Q::zero() } else { num / &cyl };
        out.push((x, cyl, restricted));
    }
    Ok(out)
}

/// An `x ∈ [m]^H` maximizing `ν_{H->x}(F(H->x))`, lexicographically least among maximizers.
pub fn averaging_restriction(
    f: &Family,
    nu: &ProductMeasure,
    h: &[usize],
) -> Result<(Vec<u32>, Q)> {
    let mut best: Option<(Vec<u32>, Q)> = None;
    for (x, _, v) in restricted_measures(f, nu, h)? {
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((x, v));
        }
    }
    Ok(best.expect("[m]^H is non-empty"))
}

/// `P_{x ~ ν_H}(ν_{H->x}(F(H->x)) >= threshold)`, with threshold `ν(F)/2` by default.
pub fn restriction_success_probability(
    f: &Family,
    nu: &ProductMeasure,
    h: &[usize],
    threshold: Option<&Q>,
) -> Result<Q> {
    let threshold = match threshold {
        Some(t) => t.clone(),
        None => nu.measure_of(f)? / Q::from_integer(2.into()),
    };
    Ok(restricted_measures(f, nu, h)?
        .into_iter()
        .filter(|(_, cyl, v)| !cyl.is_zero() && *v >= threshold)
        .fold(Q::zero(), |acc, (_, cyl, _)| acc + cyl))
}

/// When `τ(F)^{|H|} < (1+p)/(2p)`, asserts that the success probability exceeds `p`.
pub fn check_restriction_probability(
    f: &Family,
    nu: &ProductMeasure,
    h: &[usize],
    p: &Q,
) -> Result<Report> {
    ensure!(
        p.is_positive() && *p < Q::one(),
        Domain,
        "p = {} outside (0, 1)",
        fmt_q(p)
    );
    let params = json!({ "m": f.space().m, "n": f.space().n, "H": h.iter().map(|c| c + 1).collect::<Vec<_>>(), "p": fmt_q(p) });
    if f.is_empty() {
        return Ok(Report::unmet("restriction-prob", params, "empty family"));
    }
    let tau = homogeneity(f, nu)?.value;
    let cap = (Q::one() + p) / (Q::from_integer(2.into()) * p);
    if tau.pow(h.len() as u32) >= RationalRoot::rational(cap) {
        return Ok(Report::unmet(
            "restriction-prob",
            params,
            format!("homogeneity {tau} too large"),
        ));
    }
    let prob = restriction_success_probability(f, nu, h, None)?;
    let margin = &prob - p;
    Ok(Report::new(
        "restriction-prob",
        params,
        margin.is_positive(),
        Margin::Exact(margin),
    )
    .with_witness(json!({ "probability": q_json(&prob), "tau": tau.to_string() })))
}

/// Forbidden symbol sets on a coordinate set `R`: `(coordinate, symbols)` pairs.
pub type ForbiddenValues = Vec<(usize, Vec<u32>)>;

/// Sign of `expr(τ, h)` for rational-root inputs, via interval enclosures of
/// increasing precision. `expr` maps enclosures of its arguments to an
/// enclosure of the result and must be monotone in each argument.
fn certify_nonnegative(
    a: &RationalRoot,
    b: &RationalRoot,
    expr: impl Fn((&Q, &Q), (&Q, &Q)) -> (Q, Q),
) -> Option<bool> {
    let mut bits = 32;
    while bits <= 4096 {
        let (alo, ahi) = a.enclose(bits);
        let (blo, bhi) = b.enclose(bits);
        let (lo, hi) = expr((&alo, &ahi), (&blo, &bhi));
        if !lo.is_negative() {
            return Some(true);
        }
        if hi.is_negative() {
            return Some(false);
        }
        if lo == hi {
            return Some(!lo.is_negative());
        }
        bits *= 2;
    }
    None
}

/// Removes members agreeing with some `x ∈ X = ∏ X_i` on `R` and checks the
/// measure and homogeneity guarantees, with `τ` the homogeneity of `F` and `b`
/// the balancedness of `ν`.
pub fn avoid_values(
    f: &Family,
    nu: &ProductMeasure,
    forbidden: &ForbiddenValues,
) -> Result<(Family, Report)> {
    let space = f.space();
    ensure!(
        nu.space() == space,
        Dimension,
        "family and measure live in different boxes"
    );
    for (c, xs) in forbidden {
        ensure!(
            *c < space.n,
            Domain,
            "coordinate {} outside [1, {}]",
            c + 1,
            space.n
        );
        ensure!(
            xs.iter().all(|&v| v >= 1 && v <= space.m),
            Domain,
            "forbidden symbol outside [1, {}]",
            space.m
        );
    }
    let coords: BTreeSet<usize> = forbidden.iter().map(|(c, _)| *c).collect();
    ensure!(
        coords.len() == forbidden.len(),
        Domain,
        "coordinate listed twice"
    );
    let s: usize = forbidden
        .iter()
        .map(|(_, xs)| xs.iter().collect::<BTreeSet<_>>().len())
        .sum();
    let params = json!({
        "m": space.m, "n": space.n,
        "X": forbidden.iter().map(|(c, xs)| json!({ "coord": c + 1, "values": xs })).collect::<Vec<_>>(),
    });
    // An empty factor makes the product empty, so nothing is removed.
    let f2 = if forbidden.iter().any(|(_, xs)| xs.is_empty()) {
        f.clone()
    } else {
        f.filter(|y| {
            forbidden
                .iter()
                .all(|(c, xs)| !xs.contains(&y.symbols()[*c]))
        })
    };
    if f.is_empty() {
        return Ok((
            f2,
            Report::new("avoid", params, true, Margin::Exact(Q::zero())),
        ));
    }
    let tau = homogeneity(f, nu)?.value;
    let b = nu.balancedness();
    let m = qu(space.m as u64);
    let kappa = qu(s as u64) * &b / &m;
    // Precondition: s τ b < m, i.e. κ τ < 1.
    if !kappa.is_zero() && tau >= RationalRoot::rational(Q::one() / &kappa) {
        return Err(Error::Domain(format!(
            "sum |X_i| tau b = {s} * {tau} * {} is not below m",
            fmt_q(&b)
        )));
    }
    let a = nu.measure_of(f)?;
    let a2 = nu.measure_of(&f2)?;
    // ν(F') >= (1 - κτ) ν(F)  <=>  κ τ ν(F) >= ν(F) - ν(F').
    let lost = &a - &a2;
    let measure_ok = if kappa.is_zero() {
        lost.is_zero()
    } else {
        tau >= RationalRoot::rational(&lost / (&kappa * &a))
    };
    // τ' bound: τ(F') <= τ / (1 - κτ)  <=>  τ - h'(1 - κτ) >= 0.
    let (homog_ok, h2) = if f2.is_empty() {
        (true, None)
    } else {
        let h2 = homogeneity(&f2, nu)?.value;
        let ok = if kappa.is_zero() {
            Some(h2 <= tau)
        } else {
            certify_nonnegative(&tau, &h2, |(tlo, thi), (hlo, hhi)| {
                let lo = tlo - hhi * (Q::one() - &kappa * tlo);
                let hi = thi - hlo * (Q::one() - &kappa * thi);
                (lo, hi)
            })
        };
        (ok.unwrap_or(false), Some(h2))
    };
    let pass = measure_ok && homog_ok;
    let slack = to_f64(&a2) - (1.0 - to_f64(&kappa) * tau.to_f64()) * to_f64(&a);
    let report = Report::new("avoid", params, pass, Margin::Float(slack)).with_witness(json!({
        "tau": tau.to_string(),
        "balancedness": fmt_q(&b),
        "measure": q_json(&a),
        "measure_after": q_json(&a2),
        "tau_after": h2.map(|h| h.to_string()),
        "measure_bound": measure_ok,
        "homogeneity_bound": homog_ok,
    }));
    Ok((f2, report))
}

/// Indices of `s` sets forming a sunflower whose core has exactly `core_size`
/// elements (any core size when `None`). Returns the lexicographically first
/// index tuple.
pub fn find_sunflower(
    sets: &[Vec<usize>],
    s: usize,
    core_size: Option<usize>,
) -> Result<Option<Vec<usize>>> {
    ensure!(s >= 2, Domain, "a sunflower needs at least two petals");
    let sets: Vec<BTreeSet<usize>> = sets.iter().map(|v| v.iter().copied().collect()).collect();
    fn extend(
        sets: &[BTreeSet<usize>],
        core: &BTreeSet<usize>,
        chosen: &mut Vec<usize>,
        s: usize,
    ) -> bool {
        if chosen.len() == s {
            return true;
        }
        let start = chosen.last().map_or(0, |&i| i + 1);
        for k in start..sets.len() {
            if core.is_subset(&sets[k])
                && chosen
                    .iter()
                    .all(|&j| sets[j].intersection(&sets[k]).count() == core.len())
            {
                chosen.push(k);
                if extend(sets, core, chosen, s) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let core: BTreeSet<usize> = sets[i].intersection(&sets[j]).copied().collect();
            if core_size.is_some_and(|k| core.len() != k) {
                continue;
            }
            let mut chosen = vec![i, j];
            if extend(&sets, &core, &mut chosen, s) {
                return Ok(Some(chosen));
            }
        }
    }
    Ok(None)
}

/// Upper limit on the number of `s`-tuples of members examined by [`check_sst_system`].
pub const SST_TUPLE_LIMIT: u64 = 10_000_000;

/// Checks both conditions of an `(S, s, t)`-system on parts `B_S ⊆ [m]^n[S]`,
/// with sets taken in the embedded representation and `F_i` the image of a
/// member outside `S_i`.
pub fn check_sst_system(
    space: CodeBox,
    parts: &[(Restriction, Family)],
    s: usize,
    t: usize,
) -> Result<Report> {
    ensure!(s >= 2, Domain, "a sunflower needs at least two petals");
    ensure!(t >= 1, Domain, "t must be at least 1");
    let m = space.m;
    let mut keys = BTreeSet::new();
    let mut embedded: Vec<(BTreeSet<usize>, Vec<BTreeSet<usize>>)> = Vec::new();
    for (r, fam) in parts {
        r.check(&space)?;
        ensure!(fam.space() == space, Dimension, "part lives in another box");
        ensure!(
            keys.insert(r.clone()),
            Domain,
            "restriction {r} listed twice"
        );
        ensure!(
            fam.iter().all(|c| r.matches(&c)),
            Domain,
            "part of {r} has a member outside [m]^n[{r}]"
        );
        let core: BTreeSet<usize> = r.embed(m).into_iter().collect();
        let members = fam
            .iter()
            .map(|c| {
                embed_code(&c, m)
                    .into_iter()
                    .filter(|e| !core.contains(e))
                    .collect()
            })
            .collect();
        embedded.push((core, members));
    }
    let params = json!({ "m": m, "n": space.n, "s": s, "t": t, "parts": parts.len() });
    let mut tuples = 0u64;
    let mut violation: Option<Value> = None;
    for idx in subsets_of_size(embedded.len(), s) {
        let sets: Vec<&BTreeSet<usize>> = idx.iter().map(|&i| &embedded[i].0).collect();
        let core: BTreeSet<usize> = sets.iter().skip(1).fold(sets[0].clone(), |acc, x| {
            acc.intersection(x).copied().collect()
        });
        let sunflower = idx
            .iter()
            .enumerate()
            .all(|(a, _)| (a + 1..s).all(|b| sets[a].intersection(sets[b]).count() == core.len()));
        if !sunflower {
            continue;
        }
        if core.len() + 1 == t {
            violation = Some(json!({ "kind": "sunflower with core t-1", "parts": idx }));
            break;
        }
        if core.len() + 2 > t {
            continue;
        }
        let cap = t - core.len() - 2;
        let lists: Vec<&Vec<BTreeSet<usize>>> = idx.iter().map(|&i| &embedded[i].1).collect();
        let count: u64 = lists.iter().map(|l| l.len() as u64).product();
        tuples += count;
        ensure!(
            tuples <= SST_TUPLE_LIMIT,
            Budget,
            "more than {SST_TUPLE_LIMIT} member tuples"
        );
        let mut pick = vec![0usize; s];
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        loop {
            let inter = (1..s).fold(lists[0][pick[0]].clone(), |acc, k| {
                acc.intersection(&lists[k][pick[k]]).copied().collect()
            });
            if inter.len() > cap {
                violation = Some(
                    json!({ "kind": "member intersection too large", "parts": idx, "members": pick, "size": inter.len(), "cap": cap }),
                );
                break;
            }
            let mut k = s;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                pick[k] += 1;
                if pick[k] < lists[k].len() {
                    break;
                }
                pick[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
        if violation.is_some() {
            break;
        }
    }
    let pass = violation.is_none();
    Ok(Report::new(
        "sst",
        params,
        pass,
        Margin::Note(if pass {
            "no violation".into()
        } else {
            "violation".into()
        }),
    )
    .with_witness(violation.unwrap_or(json!({ "member_tuples": tuples }))))
}

/// Largest instance accepted by [`covering_number`].
pub const COVERING_LIMIT: usize = 10_000;

/// Minimum hitting set size of a set family, `None` when a member is empty
/// (nothing hits it). The empty family has covering number 0.
pub fn covering_number(sets: &[Vec<usize>]) -> Result<Option<usize>> {
    min_hitting_set(sets, usize::MAX)
}

/// As [`covering_number`], but only searches hitting sets of size below `limit`;
/// returns `Some(limit)` if there is none.
pub fn min_hitting_set(sets: &[Vec<usize>], limit: usize) -> Result<Option<usize>> {
    ensure!(
        sets.len() <= COVERING_LIMIT,
        Budget,
        "{} sets exceed the covering limit {COVERING_LIMIT}",
        sets.len()
    );
    if sets.iter().any(|s| s.is_empty()) {
        return Ok(None);
    }
    if sets.is_empty() {
        return Ok(Some(0));
    }
    let ground: Vec<usize> = sets
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |e: usize| ground.binary_search(&e).expect("element of the ground set");
    let rows: Vec<BitSet> = sets
        .iter()
        .map(|s| {
            let mut b = BitSet::new(ground.len());
            for &e in s {
                b.insert(pos(e));
            }
            b
        })
        .collect();
    // Sets containing each element.
    let mut hits: Vec<BitSet> = vec![BitSet::new(rows.len()); ground.len()];
    for (i, r) in rows.iter().enumerate() {
        for e in r.iter() {
            hits[e].insert(i);
        }
    }
    let mut best = greedy_hitting_set(&rows, &hits).min(limit);
    let mut unhit = BitSet::full(rows.len());
    branch_hitting(&rows, &hits, &mut unhit, 0, &mut best);
    Ok(Some(best))
}

fn greedy_hitting_set(rows: &[BitSet], hits: &[BitSet]) -> usize {
    let mut unhit = BitSet::full(rows.len());
    let mut used = 0;
    while !unhit.is_empty() {
        let e = (0..hits.len())
            .max_by_key(|&e| (hits[e].intersection_count(&unhit), std::cmp::Reverse(e)))
            .expect("non-empty ground");
        unhit.difference_with(&hits[e]);
        used += 1;
    }
    used
}

/// Lower bound: a greedy family of pairwise disjoint unhit sets needs one element each.
fn disjoint_lower_bound(rows: &[BitSet], unhit: &BitSet) -> usize {
    let mut covered = BitSet::new(rows.first().map_or(0, |r| r.capacity()));
    let mut order: Vec<usize> = unhit.iter().collect();
    order.sort_by_key(|&i| rows[i].count());
    let mut count = 0;
    for i in order {
        if rows[i].is_disjoint(&covered) {
            covered.union_with(&rows[i]);
            count += 1;
        }
    }
    count
}

fn branch_hitting(
    rows: &[BitSet],
    hits: &[BitSet],
    unhit: &mut BitSet,
    used: usize,
    best: &mut usize,
) {
    if unhit.is_empty() {
        *best = (*best).min(used);
        return;
    }
    if used + disjoint_lower_bound(rows, unhit) >= *best {
        return;
    }
    // Some element of the smallest unhit set must be chosen.
    let pivot = unhit
        .iter()
        .min_by_key(|&i| rows[i].count())
        .expect("non-empty");
    for e in rows[pivot].iter() {
        let saved = unhit.clone();
        unhit.difference_with(&hits[e]);
        branch_hitting(rows, hits, unhit, used + 1, best);
        *unhit = saved;
    }
}

/// Refined star `F*_T`: members `F` of the quotient `F_T(T)` such that for
/// every `X ⊆ F` (embedded image) with `|X| <= t - 1`, the family `F_T(T ∪ X)`
/// has covering number at least `n + 1`. `coords` names the original
/// coordinates of the quotient box so embedded images match across stars.
pub fn refine_star(quotient: &Family, coords: &[usize], t: usize, n: usize) -> Result<Family> {
    let qspace = quotient.space();
    ensure!(
        coords.len() == qspace.n,
        Dimension,
        "{} coordinate labels for a box of dimension {}",
        coords.len(),
        qspace.n
    );
    let m = qspace.m;
    let members = quotient.codes();
    let threshold = n + 1;
    let mut memo: std::collections::BTreeMap<Restriction, bool> = std::collections::BTreeMap::new();
    let mut survivors = Vec::new();
    for c in &members {
        let mut ok = true;
        'subsets: for k in 0..t.min(qspace.n + 1) {
            for x in subsets_of_size(qspace.n, k) {
                let r = c.project(&x);
                let good = match memo.get(&r) {
                    Some(&g) => g,
                    None => {
                        let link: Vec<Vec<usize>> = members
                            .iter()
                            .filter(|y| r.matches(y))
                            .map(|y| {
                                (0..qspace.n)
                                    .filter(|i| r.value_at(*i).is_none())
                                    .map(|i| coords[i] * m as usize + y.symbols()[i] as usize)
                                    .collect()
                            })
                            .collect();
                        let g = match min_hitting_set(&link, threshold)? {
                            None => true,
                            Some(k) => k >= threshold,
                        };
                        memo.insert(r, g);
                        g
                    }
                };
                if !good {
                    ok = false;
                    break 'subsets;
                }
            }
        }
        if ok {
            survivors.push(c.clone());
        }
    }
    Family::from_codes(qspace, survivors.into_iter().map(|c| c.0))
}

/// `|⋃_i [m]^n[Z_i -> x_i]|`, exact.
pub fn union_of_stars_size(space: CodeBox, stars: &[Restriction]) -> Result<u64> {
    for r in stars {
        r.check(&space)?;
    }
    if space.is_dense() && stars.len() > 20 {
        let mut acc = BitSet::new(space.size() as usize);
        for r in stars {
            let coords: Vec<usize> = r.coords().to_vec();
            for i in crate::codes::make_star(space, &coords, r.values())?.indices() {
                acc.insert(i as usize);
            }
        }
        return Ok(acc.count() as u64);
    }
    // Inclusion–exclusion over consistent joins; an inconsistent join kills its whole subtree.
    fn go(
        space: CodeBox,
        stars: &[Restriction],
        start: usize,
        cur: &Restriction,
        depth: usize,
        acc: &mut i128,
    ) {
        for i in start..stars.len() {
            if let Some(next) = cur.join(&stars[i]) {
                let size = (space.m as i128).pow((space.n - next.len()) as u32);
                if depth % 2 == 0 {
                    *acc += size;
                } else {
                    *acc -= size;
                }
                go(space, stars, i + 1, &next, depth + 1, acc);
            }
        }
    }
    let mut acc = 0i128;
    go(space, stars, 0, &Restriction::empty(), 0, &mut acc);
    Ok(acc as u64)
}

/// Checks `|[m]^n[S]| <= ε m^{n-t}` for a `t`-agreeing system `S` with no
/// common `t`-restriction, when `εm >= 24q` with `q = max |Z_i|`.
pub fn check_simplification(
    space: CodeBox,
    stars: &[Restriction],
    t: usize,
    eps: &Q,
) -> Result<Report> {
    ensure!(
        eps.is_positive() && *eps <= Q::one(),
        Domain,
        "epsilon {} outside (0, 1]",
        fmt_q(eps)
    );
    ensure!(t >= 1 && t <= space.n, Domain, "t = {t} outside [1, n]");
    let qmax = stars.iter().map(Restriction::len).max().unwrap_or(0);
    let params = json!({ "m": space.m, "n": space.n, "t": t, "eps": fmt_q(eps), "q": qmax, "stars": stars.len() });
    if stars.is_empty() {
        return Ok(Report::unmet("simplification", params, "empty system"));
    }
    let mut reasons = Vec::new();
    if eps * qu(space.m as u64) < qu(24 * qmax as u64) {
        reasons.push("eps m < 24 q".to_string());
    }
    'pairs: for a in stars {
        for b in stars {
            let common: Vec<usize> = a
                .coords()
                .iter()
                .copied()
                .filter(|c| b.value_at(*c).is_some())
                .collect();
            if agr_on(&common, a, b)? < t {
                reasons.push(format!("{a} and {b} are not {t}-agreeing"));
                break 'pairs;
            }
        }
    }
    let shared = stars[0]
        .coords()
        .iter()
        .filter(|&&c| {
            let v = stars[0].value_at(c);
            stars.iter().all(|r| r.value_at(c) == v)
        })
        .count();
    if shared >= t {
        reasons.push(format!("all restrictions share a common {t}-restriction"));
    }
    if !reasons.is_empty() {
        return Ok(Report::unmet("simplification", params, reasons.join("; ")));
    }
    let size = union_of_stars_size(space, stars)?;
    let bound = eps * qu(space.m as u64).pow((space.n - t) as i32);
    let margin = &bound - qu(size);
    Ok(Report::new(
        "simplification",
        params,
        !margin.is_negative(),
        Margin::Exact(margin),
    )
    .with_witness(json!({ "union": size, "bound": q_json(&bound) })))
}

/// For a `(t-1)`-avoiding `F` and distinct `T1, T2 ∈ ∂_t F`, checks that every
/// member of `F*_{T1}` meets every member of `F*_{T2}` in fewer than `t - 1`
/// embedded elements, with `F_T = F[T]`.
pub fn check_disjoint_shadows(
    f: &Family,
    t1: &Restriction,
    t2: &Restriction,
    t: usize,
) -> Result<Report> {
    let space = f.space();
    ensure!(t >= 1 && t <= space.n, Domain, "t = {t} outside [1, n]");
    let params = json!({ "m": space.m, "n": space.n, "t": t, "T1": restriction_json(t1), "T2": restriction_json(t2) });
    t1.check(&space)?;
    t2.check(&space)?;
    let mut reasons = Vec::new();
    if t1 == t2 {
        reasons.push("T1 = T2".to_string());
    }
    if t1.len() != t || t2.len() != t {
        reasons.push(format!("restrictions must have size {t}"));
    }
    if f.count_matching(t1) == 0 || f.count_matching(t2) == 0 {
        reasons.push("restriction outside the t-shadow".to_string());
    }
    if !is_avoiding(f, t)?.holds() {
        reasons.push(format!("family is not {}-avoiding", t - 1));
    }
    if !reasons.is_empty() {
        return Ok(Report::unmet(
            "shadows-disjoint",
            params,
            reasons.join("; "),
        ));
    }
    let refined = |r: &Restriction| -> Result<Vec<BTreeSet<usize>>> {
        let quotient = f.restrict(r, RestrictMode::Quotient)?;
        let coords: Vec<usize> = (0..space.n).filter(|c| r.value_at(*c).is_none()).collect();
        let star = refine_star(&quotient, &coords, t, space.n)?;
        Ok(star
            .iter()
            .map(|c| {
                coords
                    .iter()
                    .zip(c.symbols())
                    .map(|(&i, &s)| i * space.m as usize + s as usize)
                    .collect()
            })
            .collect())
    };
    let a = refined(t1)?;
    let b = refined(t2)?;
    let mut worst: Option<(usize, usize, usize)> = None;
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let k = x.intersection(y).count();
            if worst.is_none_or(|w| k > w.0) {
                worst = Some((k, i, j));
            }
        }
    }
    let witness = json!({ "refined_sizes": [a.len(), b.len()] });
    Ok(match worst {
        None => Report::new(
            "shadows-disjoint",
            params,
            true,
            Margin::Note("vacuous: a refined star is empty".into()),
        )
        .with_witness(witness),
        Some((k, i, j)) => {
            let margin = t as i64 - 1 - k as i64;
            let mut w = witness;
            w["closest"] = json!({ "members": [i, j], "intersection": k });
            Report::new(
                "shadows-disjoint",
                params,
                margin > 0,
                Margin::Exact(Q::from_integer(margin.into())),
            )
            .with_witness(w)
        }
    })
}

/// Quotient codes of `F(T)` as members of the quotient box, for callers that need `F_T(T)` directly.
pub fn star_quotient(f: &Family, t: &Restriction) -> Result<Family> {
    f.restrict(t, RestrictMode::Quotient)
}

/// `Σ_{H ∈ ∂_h [m]^{[n]∖Z}} |F(H ∪ Z)|`, the right side of the double-counting identity
/// `|F| C(n - |Z|, h) = Σ_H |F(H ∪ S)|` for `F ⊆ [m]^n[S]` with `S = (Z, x)`.
pub fn double_count(f: &Family, s: &Restriction, h: usize) -> Result<u64> {
    let space = f.space();
    let free: Vec<usize> = (0..space.n).filter(|c| s.value_at(*c).is_none()).collect();
    let mut total = 0u64;
    for pick in subsets_of_size(free.len(), h) {
        let coords: Vec<usize> = pick.iter().map(|&i| free[i]).collect();
        let sub = CodeBox::derived(space.m, h)?;
        for x in sub.codes() {
            let r = s
                .join(&Restriction::new(coords.clone(), x.0)?)
                .expect("disjoint supports");
            total += f.count_matching(&r) as u64;
        }
    }
    Ok(total)
}
