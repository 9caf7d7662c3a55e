//! Compressions toward symbol 1, the map to the Boolean cube, `p`-biased
//! measures and the unbalanced cross-matching lemma.

use std::collections::BTreeSet;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::codes::{agr_unchecked, Code, Family};
use crate::error::{ensure, Error, Result};
use crate::exact::{fmt_q, pow, q, to_f64, CertifiedSign, LogForm, LogTerm, Q};
use crate::measure::ProductMeasure;
use crate::report::{code_json, codes_json, q_json, Margin, Report};

/// Largest cube dimension supported (members are stored as bit masks).
pub const CUBE_MAX_N: usize = 24;

/// A family in `{0,1}^n`; bit `i` of a mask is coordinate `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CubeFamily {
    n: usize,
    members: BTreeSet<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeFamilyJson {
    pub n: usize,
    pub members: Vec<Vec<u8>>,
}

impl CubeFamily {
    pub fn new(n: usize) -> Self {
        assert!(n <= CUBE_MAX_N, "cube dimension {n} exceeds {CUBE_MAX_N}");
        CubeFamily {
            n,
            members: BTreeSet::new(),
        }
    }

    pub fn full(n: usize) -> Self {
        Self::from_masks(n, 0..1u32 << n)
    }

    /// Masks above `2^n` are ignored.
    pub fn from_masks(n: usize, masks: impl IntoIterator<Item = u32>) -> Self {
        let mut f = CubeFamily::new(n);
        f.members
            .extend(masks.into_iter().filter(|&x| (x as u64) < 1u64 << n));
        f
    }

    pub fn from_vectors(n: usize, vectors: &[Vec<u8>]) -> Result<Self> {
        ensure!(
            n <= CUBE_MAX_N,
            Budget,
            "cube dimension {n} exceeds {CUBE_MAX_N}"
        );
        let mut f = CubeFamily::new(n);
        for v in vectors {
            ensure!(
                v.len() == n,
                Dimension,
                "vector of length {} in {{0,1}}^{n}",
                v.len()
            );
            ensure!(
                v.iter().all(|&b| b <= 1),
                Domain,
                "cube vectors hold 0 or 1"
            );
            f.members.insert(
                v.iter()
                    .enumerate()
                    .fold(0, |acc, (i, &b)| acc | (b as u32) << i),
            );
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, mask: u32) -> bool {
        self.members.contains(&mask)
    }

    pub fn masks(&self) -> impl Iterator<Item = u32> + '_ {
        self.members.iter().copied()
    }

    pub fn vector(&self, mask: u32) -> Vec<u8> {
        (0..self.n).map(|i| (mask >> i & 1) as u8).collect()
    }

    /// `x ∈ A` and `x + e_i ∉ A`, if any; one-bit steps suffice for monotonicity.
    pub fn monotonicity_violation(&self) -> Option<(u32, u32)> {
        self.masks().find_map(|x| {
            (0..self.n)
                .map(|i| x | 1 << i)
                .find(|&y| y != x && !self.contains(y))
                .map(|y| (x, y))
        })
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violation().is_none()
    }

    pub fn to_json(&self) -> CubeFamilyJson {
        CubeFamilyJson {
            n: self.n,
            members: self.masks().map(|x| self.vector(x)).collect(),
        }
    }

    pub fn from_json(j: &CubeFamilyJson) -> Result<Self> {
        Self::from_vectors(j.n, &j.members)
    }
}

/// A pair `x ∈ A`, `y ∈ B` sharing no coordinate equal to 1, if any.
pub fn cross_agreement_violation(a: &CubeFamily, b: &CubeFamily) -> Result<Option<(u32, u32)>> {
    ensure!(
        a.n == b.n,
        Dimension,
        "cubes of dimension {} and {}",
        a.n,
        b.n
    );
    Ok(a.masks()
        .find_map(|x| b.masks().find(|&y| x & y == 0).map(|y| (x, y))))
}

pub fn are_cross_agreeing_cube(a: &CubeFamily, b: &CubeFamily) -> Result<bool> {
    Ok(cross_agreement_violation(a, b)?.is_none())
}

/// `μ_p(A) = Σ_{x ∈ A} p^{|x|} (1-p)^{n-|x|}`.
pub fn p_biased(a: &CubeFamily, p: &Q) -> Result<Q> {
    ensure!(
        !p.is_negative() && *p <= Q::one(),
        Domain,
        "p = {} outside [0, 1]",
        fmt_q(p)
    );
    let qq = Q::one() - p;
    let weights: Vec<Q> = (0..=a.n)
        .map(|k| pow(p, k as u32) * pow(&qq, (a.n - k) as u32))
        .collect();
    Ok(a.masks()
        .fold(Q::zero(), |acc, x| acc + &weights[x.count_ones() as usize]))
}

/// `T_{i,j}(x)`: symbol `j` at coordinate `i` becomes 1.
fn compress_code(x: &[u32], i: usize, j: u32) -> Vec<u32> {
    let mut y = x.to_vec();
    if y[i] == j {
        y[i] = 1;
    }
    y
}

/// `T_{i,j}(F) = {x ∈ F : T_{i,j}(x) ∈ F} ∪ {T_{i,j}(x) : x ∈ F}` for a
/// 0-based coordinate `i` and symbol `2 <= j <= m`.
pub fn compress(f: &Family, i: usize, j: u32) -> Result<Family> {
    let space = f.space();
    ensure!(
        i < space.n,
        Domain,
        "coordinate {} outside [1, {}]",
        i + 1,
        space.n
    );
    ensure!(
        j >= 2 && j <= space.m,
        Domain,
        "compression symbol {j} outside [2, {}]",
        space.m
    );
    let mut out: Vec<u64> = Vec::with_capacity(f.len());
    for idx in f.indices() {
        let x = space.code_at(idx);
        if x.symbols()[i] != j {
            out.push(idx);
            continue;
        }
        let y = Code(compress_code(x.symbols(), i, j));
        let yi = space.index_of(&y);
        out.push(yi);
        if f.contains_index(yi) {
            out.push(idx);
        }
    }
    Ok(Family::from_indices(space, out))
}

/// `T = T_1 ∘ ⋯ ∘ T_n` with `T_i = T_{i,2} ∘ ⋯ ∘ T_{i,m}`, applied right to left:
/// coordinate `n` first and, within a coordinate, symbol `m` first.
pub fn full_compress(f: &Family) -> Result<Family> {
    let space = f.space();
    let mut g = f.clone();
    for i in (0..space.n).rev() {
        for j in (2..=space.m).rev() {
            g = compress(&g, i, j)?;
        }
    }
    Ok(g)
}

/// `h^{⊗n}(F)` with `h(1) = 1` and `h(a) = 0` otherwise.
pub fn monotonize(f: &Family) -> Result<CubeFamily> {
    let n = f.space().n;
    ensure!(
        n <= CUBE_MAX_N,
        Budget,
        "cube dimension {n} exceeds {CUBE_MAX_N}"
    );
    Ok(CubeFamily::from_masks(
        n,
        f.iter().map(|c| {
            c.symbols()
                .iter()
                .enumerate()
                .fold(0u32, |acc, (i, &s)| acc | ((s == 1) as u32) << i)
        }),
    ))
}

/// Fully compresses `F` and checks that the image keeps its size, is fixed by
/// every `T_{i,j}`, and monotonizes to a monotone cube family whose
/// `1/m`-biased measure is at least `μ(F)`.
pub fn check_compression(f: &Family) -> Result<Report> {
    let space = f.space();
    let nu = ProductMeasure::uniform(space);
    let t = full_compress(f)?;
    let mut failures: Vec<String> = Vec::new();
    if t.len() != f.len() {
        failures.push(format!("size changed from {} to {}", f.len(), t.len()));
    }
    for i in 0..space.n {
        for j in 2..=space.m {
            if compress(&t, i, j)? != t {
                failures.push(format!("image is not fixed by T_{{{},{j}}}", i + 1));
            }
        }
    }
    let cube = monotonize(&t)?;
    if let Some((x, y)) = cube.monotonicity_violation() {
        failures.push(format!(
            "image is not monotone: {:?} in, {:?} out",
            cube.vector(x),
            cube.vector(y)
        ));
    }
    let mu = nu.measure_of(f)?;
    let biased = p_biased(&cube, &q(1, space.m as i64))?;
    if biased < mu {
        failures.push("mu_1/m of the image is below mu(F)".into());
    }
    let params = json!({ "m": space.m, "n": space.n, "size": f.len() });
    Ok(Report::new(
        "compress",
        params,
        failures.is_empty(),
        Margin::Exact(&biased - &mu),
    )
    .with_witness(json!({
        "compressed": codes_json(&t),
        "cube": cube.to_json(),
        "mu": q_json(&mu),
        "mu_1/m": q_json(&biased),
        "failures": failures,
    })))
}

/// `α` for the monotone-shift check: given exactly, or `log_p μ_p(A)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Exponent {
    Given(Q),
    Computed,
}

/// For monotone `A` and `0 <= p <= q <= 1`: `μ_p(A) >= p^α` implies `μ_q(A) >= q^α`.
pub fn check_monotone_shift(a: &CubeFamily, p: &Q, qv: &Q, alpha: &Exponent) -> Result<Report> {
    if let Some((x, y)) = a.monotonicity_violation() {
        return Err(Error::Precondition(format!(
            "family is not monotone: {:?} is a member but {:?} is not",
            a.vector(x),
            a.vector(y)
        )));
    }
    ensure!(
        !p.is_negative() && p <= qv && *qv <= Q::one(),
        Domain,
        "need 0 <= p <= q <= 1"
    );
    let mp = p_biased(a, p)?;
    let mq = p_biased(a, qv)?;
    let mut params = json!({ "n": a.n, "p": fmt_q(p), "q": fmt_q(qv), "mu_p": q_json(&mp), "mu_q": q_json(&mq) });
    match alpha {
        Exponent::Given(al) => {
            ensure!(!al.is_negative(), Domain, "alpha must be non-negative");
            params["alpha"] = json!(fmt_q(al));
            // x >= y^(a/b)  <=>  x^b >= y^a for x, y >= 0.
            let (num, den) = (al.numer().to_u32(), al.denom().to_u32());
            let (Some(num), Some(den)) = (num, den) else {
                return Err(Error::Budget(format!("exponent {} too large", fmt_q(al))));
            };
            if pow(&mp, den) < pow(p, num) {
                return Ok(Report::unmet("monotone-shift", params, "mu_p(A) < p^alpha"));
            }
            let holds = pow(&mq, den) >= pow(qv, num);
            let margin = to_f64(&mq) - to_f64(qv).powf(to_f64(al));
            Ok(Report::new(
                "monotone-shift",
                params,
                holds,
                Margin::Float(margin),
            ))
        }
        Exponent::Computed => {
            params["alpha"] = json!("log_p mu_p(A)");
            if mp.is_zero() || p.is_zero() || *p == Q::one() {
                return Ok(Report::unmet(
                    "monotone-shift",
                    params,
                    "log_p mu_p(A) is undefined or infinite",
                ));
            }
            if mq.is_zero() {
                return Ok(Report::new(
                    "monotone-shift",
                    params,
                    false,
                    Margin::Float(-1.0),
                ));
            }
            // μ_q >= q^{ln μ_p / ln p}  <=>  ln μ_p ln q - ln μ_q ln p >= 0 (as ln p < 0).
            let form = LogForm::new()
                .product(Q::one(), LogTerm::of(&mp)?, LogTerm::of(qv)?)
                .product(-Q::one(), LogTerm::of(&mq)?, LogTerm::of(p)?);
            let sign = form.sign(1 << 12);
            let holds = matches!(sign, CertifiedSign::Positive | CertifiedSign::Zero);
            let alpha_f = to_f64(&mp).ln() / to_f64(p).ln();
            params["alpha"] = json!(alpha_f);
            let margin = to_f64(&mq) - to_f64(qv).powf(alpha_f);
            let mut r = Report::new("monotone-shift", params, holds, Margin::Float(margin));
            if sign == CertifiedSign::Undecided {
                r = r.with_witness(json!({ "sign": "undecided" }));
            }
            Ok(r)
        }
    }
}

/// Certified sign of `μ(F1) + μ(F2)^{log_m 2} - 1`, as `ln 2 ln μ(F2) - ln m ln(1 - μ(F1))`.
pub fn unbalanced_hypothesis(mu1: &Q, mu2: &Q, m: u32) -> Result<CertifiedSign> {
    let c = Q::one() - mu1;
    if c.is_negative() || mu2.is_zero() {
        return Ok(if c.is_negative() {
            CertifiedSign::Positive
        } else {
            CertifiedSign::Negative
        });
    }
    if c.is_zero() {
        return Ok(CertifiedSign::Positive);
    }
    let form = LogForm::new()
        .product(Q::one(), LogTerm::of_int(2), LogTerm::of(mu2)?)
        .product(-Q::one(), LogTerm::of_int(m as u64), LogTerm::of(&c)?);
    Ok(form.sign(1 << 12))
}

/// Lexicographically least `(x1, x2) ∈ F1 × F2` with `agr(x1, x2) = 0`.
pub fn find_disagreement(f1: &Family, f2: &Family) -> Result<Option<(Code, Code)>> {
    f1.same_box(f2)?;
    let second = f2.codes();
    Ok(f1.iter().find_map(|x| {
        second
            .iter()
            .find(|y| agr_unchecked(x.symbols(), y.symbols()) == 0)
            .map(|y| (x.clone(), y.clone()))
    }))
}

/// Evaluates the unbalanced cross-matching hypothesis, asserts a disagreeing
/// pair when it holds, and cross-checks the cube pipeline: compressed images
/// stay within measure, are monotone and dominate in `μ_{1/m}`; cross-agreeing
/// inputs give cross-agreeing images with `μ_{1/2}` sum at most 1; and the
/// monotone shift from `1/m` to `1/2` holds on both images.
pub fn check_unbalanced_cross_matching(f1: &Family, f2: &Family) -> Result<Report> {
    f1.same_box(f2)?;
    let space = f1.space();
    let nu = ProductMeasure::uniform(space);
    let mu1 = nu.measure_of(f1)?;
    let mu2 = nu.measure_of(f2)?;
    let sign = unbalanced_hypothesis(&mu1, &mu2, space.m)?;
    let mut params =
        json!({ "m": space.m, "n": space.n, "mu1": q_json(&mu1), "mu2": q_json(&mu2) });
    params["hypothesis"] = json!(format!("{sign:?}"));

    let mut failures: Vec<String> = Vec::new();
    let inv_m = q(1, space.m as i64);
    let half = q(1, 2);
    let mut cubes = Vec::new();
    for (k, (f, mu)) in [(f1, &mu1), (f2, &mu2)].into_iter().enumerate() {
        let t = full_compress(f)?;
        if nu.measure_of(&t)? != *mu {
            failures.push(format!("compression changed the measure of F{}", k + 1));
        }
        let cube = monotonize(&t)?;
        if !cube.is_monotone() {
            failures.push(format!("image of F{} is not monotone", k + 1));
        } else {
            if p_biased(&cube, &inv_m)? < *mu {
                failures.push(format!("mu_1/m of image {} is below mu(F{})", k + 1, k + 1));
            }
            let shift = check_monotone_shift(&cube, &inv_m, &half, &Exponent::Computed)?;
            if !shift.pass {
                failures.push(format!("monotone shift fails on image {}", k + 1));
            }
        }
        cubes.push(cube);
    }
    let witness = find_disagreement(f1, f2)?;
    if witness.is_none() {
        if !are_cross_agreeing_cube(&cubes[0], &cubes[1])? {
            failures.push("images of cross-agreeing families are not cross-agreeing".into());
        }
        if p_biased(&cubes[0], &half)? + p_biased(&cubes[1], &half)? > Q::one() {
            failures.push("cross-agreeing images have mu_1/2 sum above 1".into());
        }
    }
    let w = json!({
        "disagreement": witness.as_ref().map(|(x, y)| json!([code_json(x), code_json(y)])),
        "pipeline_failures": failures,
        "mu_half": [q_json(&p_biased(&cubes[0], &half)?), q_json(&p_biased(&cubes[1], &half)?)],
    });
    let slack = to_f64(&mu1) + to_f64(&mu2).powf(2f64.ln() / (space.m as f64).ln()) - 1.0;
    Ok(match sign {
        CertifiedSign::Positive => Report::new(
            "unbalanced",
            params,
            witness.is_some() && failures.is_empty(),
            Margin::Float(slack),
        )
        .with_witness(w),
        CertifiedSign::Undecided => {
            let mut r = Report::unmet("unbalanced", params, "hypothesis sign undecided");
            r.pass = failures.is_empty();
            r.with_witness(w)
        }
        _ => {
            let mut r = Report::unmet("unbalanced", params, "mu(F1) + mu(F2)^log_m(2) <= 1");
            r.pass = failures.is_empty();
            r.witness.as_mut().expect("reason")["pipeline"] = w;
            r
        }
    })
}
