//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line
//! with its wall time; the test fails if any criterion fails or overruns.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use aglab_core::analysis::{
    boost_step_search, check_hoffman, check_hypercontractivity, check_stab_interpolation,
    globalness, homogeneity, stability, RealFunction,
};
use aglab_core::codes::{embed_to_sets, is_avoiding, make_star, srt_family, srt_size, StarSpec};
use aglab_core::compression::{
    are_cross_agreeing_cube, check_monotone_shift, check_unbalanced_cross_matching,
    find_disagreement, full_compress, monotonize, p_biased, unbalanced_hypothesis, Exponent,
};
use aglab_core::corpus::{
    random_avoiding_family, random_cross_intersecting, random_family, random_nonempty_family,
    trial_rng,
};
use aglab_core::exact::{q, qu, CertifiedSign, Q};
use aglab_core::measure::enumerate_gluings;
use aglab_core::search::{canonical_form, max_avoiding, Mode, SearchConfig};
use aglab_core::structure::{
    check_disjoint_shadows, check_kk_direct, covering_number, find_sunflower, shadow,
    spread_approximation,
};
use aglab_core::{CodeBox, Family, ProductMeasure, Restriction};
use num_traits::One;
use rand::Rng;

use common::{agree, all_codes, brute_max_avoiding, density, is_homogeneous, qpow};

const SEED: u64 = 20240917;

type Outcome = Result<(), String>;

macro_rules! require {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn bx(m: u32, n: usize) -> CodeBox {
    CodeBox::new(m, n).unwrap()
}

fn single_worker(mode: Mode) -> SearchConfig {
    let mut c = SearchConfig::new(mode);
    c.workers = Some(1);
    c
}

fn criterion_1() -> Outcome {
    for (m, n, t, opt) in [(3, 2, 1, 3), (4, 2, 1, 4), (3, 3, 1, 9)] {
        let c = max_avoiding(bx(m, n), t, &single_worker(Mode::All)).map_err(|e| e.to_string())?;
        require!(
            c.optimum == opt,
            "({m},{n},{t}): optimum {} != {opt}",
            c.optimum
        );
        require!(
            c.all_stars == Some(true),
            "({m},{n},{t}): a non-star optimum exists"
        );
        let stars = n * m as usize;
        require!(
            c.optima.len() == stars,
            "({m},{n},{t}): {} optima, expected {stars} stars",
            c.optima.len()
        );
    }
    for (m, n, t) in [(3, 2, 1), (2, 2, 1)] {
        let (best, sets) = brute_max_avoiding(m, n, t);
        let c = max_avoiding(bx(m, n), t, &single_worker(Mode::All)).map_err(|e| e.to_string())?;
        let found: Vec<Vec<u64>> = c.optima.iter().map(|f| f.indices().collect()).collect();
        require!(
            c.optimum == best,
            "({m},{n},{t}): B&B {} vs enumeration {best}",
            c.optimum
        );
        require!(found == sets, "({m},{n},{t}): optimum lists differ");
    }
    let mut wide = SearchConfig::new(Mode::All);
    wide.workers = Some(4);
    let a = max_avoiding(bx(3, 3), 1, &wide).map_err(|e| e.to_string())?;
    let b = max_avoiding(bx(3, 3), 1, &single_worker(Mode::All)).map_err(|e| e.to_string())?;
    require!(
        a.optima == b.optima && a.canonical == b.canonical,
        "results depend on the worker count"
    );
    Ok(())
}

fn criterion_2() -> Outcome {
    let c = max_avoiding(bx(2, 3), 1, &single_worker(Mode::All)).map_err(|e| e.to_string())?;
    require!(c.optimum == 4, "(2,3,1): optimum {}", c.optimum);
    let classes = c.classes.clone().unwrap();
    require!(
        classes.len() >= 2,
        "(2,3,1): only {} symmetry classes",
        classes.len()
    );
    let star = canonical_form(&make_star(bx(2, 3), &[0], &[1]).unwrap()).unwrap();
    let spec = StarSpec::new(bx(2, 3), 1, 1).unwrap();
    let srt = canonical_form(&srt_family(&spec)).unwrap();
    require!(
        classes.contains(&star) && classes.contains(&srt),
        "(2,3,1): star or S_11 class missing"
    );
    require!(srt_size(&spec) == 4, "S_11 size {}", srt_size(&spec));
    require!(!c.inside_regime, "(2,3,1) labeled inside the regime");
    let c = max_avoiding(bx(2, 2), 2, &single_worker(Mode::All)).map_err(|e| e.to_string())?;
    require!(c.optimum == 2, "(2,2,2): optimum {}", c.optimum);
    require!(!c.inside_regime, "(2,2,2) labeled inside the regime");
    Ok(())
}

fn criterion_3() -> Outcome {
    let (mut checked, mut violations) = (0u64, 0u64);
    // 2^16 families need a 16-code box, so the exhaustive pass runs over [2]^4.
    for b in [bx(2, 2), bx(2, 4)] {
        for mask in 0u64..1 << b.size() {
            let f = Family::from_indices(b, (0..b.size()).filter(|i| mask >> i & 1 == 1));
            checked += 1;
            violations += u64::from(!check_kk_direct(&f, 1).map_err(|e| e.to_string())?.pass);
        }
    }
    require!(checked == 16 + 65536, "checked {checked} families");
    for trial in 0..1000 {
        let mut rng = trial_rng(SEED ^ 3, trial);
        let f = random_nonempty_family(&mut rng, bx(3, 3));
        for l in [1, 2] {
            violations += u64::from(!check_kk_direct(&f, l).map_err(|e| e.to_string())?.pass);
        }
    }
    require!(violations == 0, "{violations} Kruskal-Katona violations");
    Ok(())
}

fn criterion_4() -> Outcome {
    let (m, n) = (4, 3);
    let tau = qu(2);
    let floor = Q::one() / qpow(&tau, 2);
    for trial in 0..200 {
        let mut rng = trial_rng(SEED ^ 4, trial);
        let f = random_nonempty_family(&mut rng, bx(m, n));
        let d = spread_approximation(&f, &tau, 2).map_err(|e| e.to_string())?;
        let mut covered: Vec<Vec<u32>> = d.remainder.iter().map(|c| c.0).collect();
        for (r, part) in d.restrictions.iter().zip(&d.parts) {
            let members: Vec<Vec<u32>> = part.iter().map(|c| c.0).collect();
            require!(
                members
                    .iter()
                    .all(|c| r.coords().iter().zip(r.values()).all(|(&i, &v)| c[i] == v)),
                "trial {trial}: part escapes its restriction"
            );
            let quotient: Vec<Vec<u32>> = members
                .iter()
                .map(|c| {
                    (0..n)
                        .filter(|i| !r.coords().contains(i))
                        .map(|i| c[i])
                        .collect()
                })
                .collect();
            let k = n - r.len();
            require!(
                density(&quotient, m, k) >= floor,
                "trial {trial}: part base measure below tau^-q"
            );
            require!(
                is_homogeneous(&quotient, m, k, &tau),
                "trial {trial}: part is not tau-homogeneous"
            );
            covered.extend(members);
        }
        let mut expected: Vec<Vec<u32>> = f.iter().map(|c| c.0).collect();
        let total = covered.len();
        covered.sort();
        covered.dedup();
        expected.sort();
        require!(
            covered == expected && total == expected.len(),
            "trial {trial}: not a partition"
        );
        let rem: Vec<Vec<u32>> = d.remainder.iter().map(|c| c.0).collect();
        require!(
            density(&rem, m, n) <= floor,
            "trial {trial}: remainder above tau^-q"
        );
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let b = bx(3, 2);
    let nu = ProductMeasure::uniform(b);
    let grid: Vec<Q> = (0..10).map(|k| q(k, 9)).collect();
    for trial in 0..500 {
        let mut rng = trial_rng(SEED ^ 5, trial);
        let f = random_nonempty_family(&mut rng, b);
        let hc = check_hypercontractivity(&f, &nu, 4.0).map_err(|e| e.to_string())?;
        require!(hc.pass, "trial {trial}: hypercontractivity fails");
        let ind = RealFunction::<Q>::indicator(&f, &nu).map_err(|e| e.to_string())?;
        let rho = q(rng.gen_range(1..20), 20);
        for t in [2, 4] {
            require!(
                check_stab_interpolation(&ind, &rho, t)
                    .map_err(|e| e.to_string())?
                    .pass,
                "trial {trial}: interpolation fails at t = {t}"
            );
        }
        let curve: Vec<Q> = grid
            .iter()
            .map(|r| stability(&f, &nu, r))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        require!(
            curve.windows(2).all(|w| w[0] <= w[1]),
            "trial {trial}: Stab not monotone in rho"
        );
        let g = globalness(&ind).map_err(|e| e.to_string())?.value.pow(2);
        let h = homogeneity(&f, &nu).map_err(|e| e.to_string())?.value;
        require!(
            g.cmp(&h).is_eq(),
            "trial {trial}: globalness^2 != homogeneity"
        );
    }
    Ok(())
}

fn criterion_6() -> Outcome {
    let gluings: Vec<_> = enumerate_gluings(4, 2, &Q::one(), 2)
        .map_err(|e| e.to_string())?
        .iter()
        .map_err(|e| e.to_string())?
        .collect();
    require!(
        gluings.len() == 36,
        "{} gluings in the 4 -> 2 balanced space",
        gluings.len()
    );
    let b = bx(4, 2);
    for trial in 0..100 {
        let mut rng = trial_rng(SEED ^ 6, trial);
        let p = rng.gen_range(0.05..0.95);
        let f = random_family(&mut rng, b, p);
        let w: Vec<Q> = (0..4).map(|_| qu(rng.gen_range(1..6))).collect();
        let sum: Q = w.iter().sum();
        let nu = ProductMeasure::iid(b, w.iter().map(|x| x / &sum).collect())
            .map_err(|e| e.to_string())?;
        let before = nu.measure_of(&f).map_err(|e| e.to_string())?;
        for g in &gluings {
            let after = g
                .push(&nu)
                .and_then(|p| p.measure_of(&g.apply(&f)?))
                .map_err(|e| e.to_string())?;
            require!(
                after >= before,
                "trial {trial}: a gluing lowered the measure"
            );
        }
    }
    let b = bx(8, 1);
    let nu = ProductMeasure::uniform(b);
    for trial in 0..100 {
        let mut rng = trial_rng(SEED ^ 66, trial);
        let f = random_nonempty_family(&mut rng, b);
        let step = boost_step_search(&f, &nu, 4).map_err(|e| e.to_string())?;
        require!(step.report.pass, "trial {trial}: boosting step fails");
        require!(
            step.gluings_checked == 70,
            "trial {trial}: visited {} gluings",
            step.gluings_checked
        );
        // Oracle: every balanced split of [8] into two blocks of four.
        let members: Vec<u32> = f.iter().map(|c| c.0[0]).collect();
        let best = (0u32..256)
            .filter(|s| s.count_ones() == 4)
            .map(|s| {
                let hit = |inside: bool| members.iter().any(|&x| (s >> (x - 1) & 1 == 1) == inside);
                q(i64::from(hit(true)) + i64::from(hit(false)), 2)
            })
            .max()
            .unwrap();
        require!(
            step.achieved == best,
            "trial {trial}: best pushed measure differs from the oracle"
        );
        require!(
            step.achieved >= step.stab_bound,
            "trial {trial}: stability bound exceeds the optimum"
        );
        if let Some(lb) = step.lemma_bound {
            require!(
                aglab_core::exact::to_f64(&step.achieved) >= lb - 1e-9,
                "trial {trial}: step lemma bound fails"
            );
        }
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    let b = bx(3, 1);
    let g = Family::from_codes(b, [vec![1]]).unwrap();
    let r = check_hoffman(&g, &g, &ProductMeasure::uniform(b)).map_err(|e| e.to_string())?;
    let w = r.witness.clone().unwrap();
    require!(
        r.pass && w["lhs"] == "1/9" && w["rhs"] == "1/9",
        "tight case: {}",
        r.to_json_line()
    );
    let b = bx(3, 2);
    let nu = ProductMeasure::uniform(b);
    for trial in 0..1000 {
        let mut rng = trial_rng(SEED ^ 7, trial);
        let (g1, g2) = random_cross_intersecting(&mut rng, b);
        require!(
            check_hoffman(&g1, &g2, &nu)
                .map_err(|e| e.to_string())?
                .pass,
            "trial {trial}: Hoffman bound fails"
        );
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let b = bx(3, 2);
    let nu = ProductMeasure::uniform(b);
    let (third, half) = (q(1, 3), q(1, 2));
    for trial in 0..500 {
        let mut rng = trial_rng(SEED ^ 8, trial);
        let (f1, f2) = random_cross_intersecting(&mut rng, b);
        let mut cubes = Vec::new();
        for f in [&f1, &f2] {
            let mu = nu.measure_of(f).map_err(|e| e.to_string())?;
            let c = full_compress(f).map_err(|e| e.to_string())?;
            require!(
                nu.measure_of(&c).map_err(|e| e.to_string())? == mu,
                "trial {trial}: compression changed the measure"
            );
            let cube = monotonize(&c).map_err(|e| e.to_string())?;
            require!(cube.is_monotone(), "trial {trial}: image not monotone");
            require!(
                p_biased(&cube, &third).map_err(|e| e.to_string())? >= mu,
                "trial {trial}: mu_1/3 below mu"
            );
            let shift = check_monotone_shift(&cube, &third, &half, &Exponent::Computed)
                .map_err(|e| e.to_string())?;
            require!(shift.pass, "trial {trial}: monotone shift fails");
            cubes.push(cube);
        }
        require!(
            are_cross_agreeing_cube(&cubes[0], &cubes[1]).map_err(|e| e.to_string())?,
            "trial {trial}: images not cross-agreeing"
        );
        let sum = p_biased(&cubes[0], &half).map_err(|e| e.to_string())?
            + p_biased(&cubes[1], &half).map_err(|e| e.to_string())?;
        require!(sum <= Q::one(), "trial {trial}: mu_1/2 sum exceeds 1");
    }
    let mut found = 0;
    let mut trial = 0;
    while found < 10_000 {
        let mut rng = trial_rng(SEED ^ 88, trial);
        trial += 1;
        let f1 = random_nonempty_family(&mut rng, b);
        let f2 = random_nonempty_family(&mut rng, b);
        let (mu1, mu2) = (nu.measure_of(&f1).unwrap(), nu.measure_of(&f2).unwrap());
        if unbalanced_hypothesis(&mu1, &mu2, 3).map_err(|e| e.to_string())?
            != CertifiedSign::Positive
        {
            continue;
        }
        found += 1;
        let r = check_unbalanced_cross_matching(&f1, &f2).map_err(|e| e.to_string())?;
        require!(r.pass, "pair {trial}: {}", r.to_json_line());
        let (x, y) = find_disagreement(&f1, &f2)
            .map_err(|e| e.to_string())?
            .ok_or("no witness")?;
        require!(
            agree(&x.0, &y.0) == 0,
            "pair {trial}: witness agrees somewhere"
        );
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    for m in 2..=4 {
        for k in 1..=3 {
            let full = Family::full(bx(m, k));
            let cover = covering_number(&embed_to_sets(&full)).map_err(|e| e.to_string())?;
            require!(
                cover == Some(m as usize),
                "covering number of [{m}]^{k} is {cover:?}"
            );
        }
    }
    let b = bx(3, 3);
    for trial in 0..200 {
        let mut rng = trial_rng(SEED ^ 9, trial);
        let t = rng.gen_range(1..=3);
        let f = if trial % 2 == 0 {
            random_avoiding_family(&mut rng, b, t)
        } else {
            random_family(&mut rng, b, 0.1)
        };
        let avoiding = is_avoiding(&f, t).map_err(|e| e.to_string())?.holds();
        let sunflower =
            find_sunflower(&embed_to_sets(&f), 2, Some(t - 1)).map_err(|e| e.to_string())?;
        require!(
            avoiding == sunflower.is_none(),
            "trial {trial}: avoidance and sunflower test disagree"
        );
    }
    let mut checks = 0;
    let optima = max_avoiding(bx(5, 3), 1, &single_worker(Mode::All)).map_err(|e| e.to_string())?;
    require!(
        optima.optimum == 25 && optima.all_stars == Some(true),
        "(5,3,1) optima are not the 25-stars"
    );
    let mut families = optima.optima.clone();
    for trial in 0..10 {
        families.push(random_avoiding_family(
            &mut trial_rng(SEED ^ 99, trial),
            bx(5, 3),
            2,
        ));
    }
    for f in &families {
        let t = if f.len() == 25 && optima.optima.contains(f) {
            1
        } else {
            2
        };
        let sh: Vec<Restriction> = shadow(f, t)
            .map_err(|e| e.to_string())?
            .into_iter()
            .collect();
        for (i, t1) in sh.iter().enumerate().step_by(3) {
            for t2 in sh.iter().skip(i + 1).step_by(5) {
                let r = check_disjoint_shadows(f, t1, t2, t).map_err(|e| e.to_string())?;
                require!(r.pass, "{}", r.to_json_line());
                checks += usize::from(r.hypotheses_met());
            }
        }
    }
    require!(
        checks > 0,
        "no disjoint-shadow check had its hypotheses met"
    );
    Ok(())
}

#[test]
fn acceptance_suite() {
    let criteria: [(&str, fn() -> Outcome, u64); 9] = [
        ("1 extremal searches", criterion_1, 60),
        ("2 boundary phenomena", criterion_2, 10),
        ("3 Kruskal-Katona", criterion_3, 60),
        ("4 spread approximation", criterion_4, 120),
        ("5 hypercontractivity and stability", criterion_5, 120),
        ("6 gluing and boosting", criterion_6, 300),
        ("7 Hoffman bound", criterion_7, 30),
        ("8 compression pipeline", criterion_8, 120),
        ("9 structural checkers", criterion_9, 60),
    ];
    let suite = Instant::now();
    let mut failed = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed > Duration::from_secs(limit) {
                Err(format!("took {elapsed:.1?}, limit {limit} s"))
            } else {
                Ok(())
            }
        });
        match &outcome {
            Ok(()) => println!("PASS criterion {name} ({elapsed:.2?})"),
            Err(why) => {
                println!("FAIL criterion {name} ({elapsed:.2?}): {why}");
                failed.push(name);
            }
        }
    }
    let total = suite.elapsed();
    println!("suite finished in {total:.2?}");
    assert!(
        total < Duration::from_secs(600),
        "suite exceeded 10 minutes"
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn oracle_codes_match_box_order() {
    let b = bx(3, 2);
    let listed: Vec<Vec<u32>> = b.codes().map(|c| c.0).collect();
    assert_eq!(listed, all_codes(3, 2));
}
