use std::fs;

use aglab_core::analysis::{
    boost_pipeline_trace, boost_step_search, check_hoffman, check_hypercontractivity,
    check_stab_interpolation, RealFunction,
};
use aglab_core::codes::{
    agr, embed_to_sets, is_avoiding, make_star, srt_family, FamilyJson, StarSpec,
};
use aglab_core::compression::{
    check_compression, check_monotone_shift, check_unbalanced_cross_matching, CubeFamily, Exponent,
};
use aglab_core::corpus::{random_monotone_cube, trial_rng};
use aglab_core::report::{restriction_json, Margin};
use aglab_core::search::{
    build_conflict_graph, max_avoiding, verify_main_theorem, Mode, SearchConfig,
};
use aglab_core::structure::{
    avoid_values, check_disjoint_shadows, check_kk_direct, check_restriction_probability,
    check_simplification, check_spread, check_sst_system, covering_number, find_sunflower, shadow,
    spread_approximation,
};
use aglab_core::{CodeBox, Error, Family, ProductMeasure, Report, Result};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{BoxT, Check, Cli, Command, ConvertArgs, Format, SearchArgs, Source};
use crate::input::{
    coords, cross_intersecting_draw, families, independent_draw, numbers, pairs, rational,
    read_cube, read_json, RestrictionJson,
};
use crate::output::{Outcome, Sink};

pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut sink = Sink::new(cli)?;
    match &cli.command {
        Command::Search(a) => search(cli, &mut sink, a),
        Command::VerifyTheorem(a) => verify(cli, &mut sink, a),
        Command::Spread(a) => {
            let tau = rational(&a.tau)?;
            for_families(&mut sink, &a.source, cli.seed, "spread", |f| {
                let d = spread_approximation(f, &tau, a.q)?;
                let mut r = check_spread(f, &d)?;
                if let Some(w) = r.witness.as_mut() {
                    w["decomposition"] = d.to_json();
                }
                Ok(r)
            })
        }
        Command::Check(c) => check(cli, &mut sink, c),
        Command::Star(a) => {
            let b = CodeBox::new(a.m, a.n)?;
            let f = make_star(b, &coords(&a.coords)?, &numbers(&a.values)?)?;
            sink.document(&json!(f.to_json()))?;
            Ok(Outcome::Clean)
        }
        Command::Srt(a) => {
            let f = srt_family(&StarSpec::new(CodeBox::new(a.m, a.n)?, a.t, a.r)?);
            sink.document(&json!(f.to_json()))?;
            Ok(Outcome::Clean)
        }
        Command::Convert(a) => convert(&mut sink, a),
    }
}

fn search_config(cli: &Cli, sink: &Sink, mode: Mode) -> SearchConfig {
    let mut c = SearchConfig::new(mode);
    c.workers = cli.workers;
    c.node_budget = cli.budget_nodes;
    c.deadline = sink.deadline();
    c
}

fn search(cli: &Cli, sink: &mut Sink, a: &SearchArgs) -> Result<Outcome> {
    let b = CodeBox::new(a.space.m, a.space.n)?;
    if let Some(path) = &a.dimacs {
        let g = build_conflict_graph(b, a.space.t)?;
        fs::write(path, g.complement_dimacs())
            .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))?;
    }
    let mode = if a.all { Mode::All } else { Mode::One };
    let cert = max_avoiding(b, a.space.t, &search_config(cli, sink, mode))?;
    let params =
        json!({ "m": b.m, "n": b.n, "t": a.space.t, "mode": if a.all { "all" } else { "one" } });
    let r = Report::new(
        "search",
        params,
        true,
        Margin::Note(format!("optimum {}", cert.optimum)),
    )
    .with_witness(cert.to_json());
    sink.single = true;
    sink.report(Value::Null, r)?;
    sink.finish("search", json!({ "optimum": cert.optimum }))
}

fn verify(cli: &Cli, sink: &mut Sink, a: &BoxT) -> Result<Outcome> {
    let b = CodeBox::new(a.m, a.n)?;
    let (cert, r) = verify_main_theorem(b, a.t, &search_config(cli, sink, Mode::All))?;
    sink.single = true;
    sink.report(Value::Null, r)?;
    sink.finish("verify-theorem", json!({ "optimum": cert.optimum }))
}

fn for_families(
    sink: &mut Sink,
    source: &Source,
    seed: u64,
    name: &str,
    mut check: impl FnMut(&Family) -> Result<Report>,
) -> Result<Outcome> {
    sink.single = source.input.len() == 1;
    for item in families(source, seed)? {
        let (label, f) = item?;
        let r = check(&f)?;
        sink.report(label, r)?;
    }
    sink.finish(name, json!({}))
}

fn uniform(f: &Family) -> ProductMeasure {
    ProductMeasure::uniform(f.space())
}

fn check(cli: &Cli, sink: &mut Sink, c: &Check) -> Result<Outcome> {
    let seed = cli.seed;
    match c {
        Check::Kk { source, l } => {
            for_families(sink, source, seed, "kk", |f| check_kk_direct(f, *l))
        }
        Check::Hyper { source, q } => for_families(sink, source, seed, "hypercontractivity", |f| {
            check_hypercontractivity(f, &uniform(f), *q)
        }),
        Check::StabInterp { source, rho, t } => {
            let rho = rational(rho)?;
            for_families(sink, source, seed, "stab-interpolation", |f| {
                check_stab_interpolation(&RealFunction::indicator(f, &uniform(f))?, &rho, *t)
            })
        }
        Check::Hoffman { source } => {
            let keep = |f: &Family, g: &Family| {
                f.iter().all(|x| {
                    g.iter()
                        .all(|y| agr(&x, &y).map(|k| k > 0).unwrap_or(false))
                })
            };
            sink.single = !source.input.is_empty();
            for item in pairs(source, seed, keep, cross_intersecting_draw)? {
                let (label, (f, g)) = item?;
                let r = check_hoffman(&f, &g, &uniform(&f))?;
                sink.report(label, r)?;
            }
            sink.finish("hoffman", json!({}))
        }
        Check::GluingBoost { source, s } => for_families(sink, source, seed, "gluing-boost", |f| {
            Ok(boost_step_search(f, &uniform(f), *s)?.report)
        }),
        Check::BoostTrace { source, b, tau } => {
            let tau = rational(tau)?;
            for_families(sink, source, seed, "boost-trace", |f| {
                Ok(boost_pipeline_trace(f, &uniform(f), *b, &tau, seed)?.report)
            })
        }
        Check::Avoid { source, forbid } => {
            let forbidden = forbidden_values(forbid)?;
            for_families(sink, source, seed, "avoid", |f| {
                let b = f.space();
                for (c, xs) in &forbidden {
                    ensure!(
                        *c < b.n,
                        Parse,
                        "--forbid coordinate {} outside [1, {}]",
                        c + 1,
                        b.n
                    );
                    ensure!(
                        xs.iter().all(|&v| v >= 1 && v <= b.m),
                        Parse,
                        "--forbid symbol outside [1, {}]",
                        b.m
                    );
                }
                // With valid coordinates and symbols the only domain error left is the
                // lemma's size precondition, which random families often miss.
                match avoid_values(f, &uniform(f), &forbidden) {
                    Ok((_, r)) => Ok(r),
                    Err(Error::Domain(reason)) => Ok(Report::unmet(
                        "avoid",
                        json!({ "m": b.m, "n": b.n }),
                        reason,
                    )),
                    Err(e) => Err(e),
                }
            })
        }
        Check::RestrictionProb { source, h, p } => {
            let (h, p) = (coords(h)?, rational(p)?);
            for_families(sink, source, seed, "restriction-prob", |f| {
                check_restriction_probability(f, &uniform(f), &h, &p)
            })
        }
        Check::Simplification { input, t, eps } => {
            #[derive(Deserialize)]
            struct Stars {
                m: u32,
                n: usize,
                stars: Vec<RestrictionJson>,
            }
            let s: Stars = read_json(input)?;
            let stars = s
                .stars
                .iter()
                .map(RestrictionJson::restriction)
                .collect::<Result<Vec<_>>>()?;
            let r = check_simplification(CodeBox::new(s.m, s.n)?, &stars, *t, &rational(eps)?)?;
            sink.single = true;
            sink.report(json!(input.display().to_string()), r)?;
            sink.finish("simplification", json!({}))
        }
        Check::ShadowsDisjoint {
            source,
            t,
            max_pairs,
        } => {
            for item in families(source, seed)? {
                let (label, f) = item?;
                let sh: Vec<_> = shadow(&f, *t)?.into_iter().collect();
                let mut done = 0;
                'pairs: for (i, t1) in sh.iter().enumerate() {
                    for t2 in &sh[i + 1..] {
                        if done == *max_pairs {
                            break 'pairs;
                        }
                        done += 1;
                        let r = check_disjoint_shadows(&f, t1, t2, *t)?;
                        sink.report(json!({ "family": label, "T1": restriction_json(t1), "T2": restriction_json(t2) }), r)?;
                    }
                }
            }
            sink.finish("shadows-disjoint", json!({}))
        }
        Check::Compress { source } => {
            for_families(sink, source, seed, "compress", check_compression)
        }
        Check::Unbalanced { source } => {
            sink.single = !source.input.is_empty();
            for item in pairs(source, seed, |_, _| true, independent_draw)? {
                let (label, (f, g)) = item?;
                sink.report(label, check_unbalanced_cross_matching(&f, &g)?)?;
            }
            sink.finish("unbalanced", json!({}))
        }
        Check::MonotoneShift {
            input,
            n,
            trials,
            p,
            p_high,
            alpha,
        } => {
            let (p, qv) = (rational(p)?, rational(p_high)?);
            let alpha = match alpha {
                Some(a) => Exponent::Given(rational(a)?),
                None => Exponent::Computed,
            };
            let cubes: Vec<(Value, CubeFamily)> = if input.is_empty() {
                let n = n.ok_or_else(|| Error::Parse("give --n or --input".into()))?;
                (0..*trials)
                    .map(|k| {
                        (
                            json!({ "trial": k }),
                            random_monotone_cube(&mut trial_rng(seed, k), n),
                        )
                    })
                    .collect()
            } else {
                input
                    .iter()
                    .map(|p| Ok((json!(p.display().to_string()), read_cube(p)?)))
                    .collect::<Result<_>>()?
            };
            sink.single = input.len() == 1;
            for (label, a) in cubes {
                sink.report(label, check_monotone_shift(&a, &p, &qv, &alpha)?)?;
            }
            sink.finish("monotone-shift", json!({}))
        }
        Check::Sunflower { source, s, core, t } => {
            for_families(sink, source, seed, "sunflower", |f| {
                let sets = embed_to_sets(f);
                let found = find_sunflower(&sets, *s, *core)?;
                let mut params = json!({ "m": f.space().m, "n": f.space().n, "size": f.len(), "s": s, "core": core });
                let witness = json!({ "sunflower": found.as_ref().map(|ix| ix.iter().map(|&i| &sets[i]).collect::<Vec<_>>()) });
                let Some(t) = t else {
                    let note = if found.is_some() {
                        "sunflower found"
                    } else {
                        "no sunflower"
                    };
                    return Ok(
                        Report::new("sunflower", params, true, Margin::Note(note.into()))
                            .with_witness(witness),
                    );
                };
                params["t"] = json!(t);
                ensure!(*t >= 1, Domain, "t must be at least 1");
                let avoiding = is_avoiding(f, *t)?.holds();
                let two = find_sunflower(&sets, 2, Some(t - 1))?;
                let agree = avoiding == two.is_none();
                Ok(Report::new(
                    "sunflower",
                    params,
                    agree,
                    Margin::Note(format!("avoiding: {avoiding}")),
                )
                .with_witness(witness))
            })
        }
        Check::Sst { input, s, t } => {
            #[derive(Deserialize)]
            struct Part {
                #[serde(flatten)]
                restriction: RestrictionJson,
                codes: Vec<Vec<u32>>,
            }
            #[derive(Deserialize)]
            struct System {
                m: u32,
                n: usize,
                parts: Vec<Part>,
            }
            let sys: System = read_json(input)?;
            let b = CodeBox::new(sys.m, sys.n)?;
            let parts = sys
                .parts
                .iter()
                .map(|p| {
                    Ok((
                        p.restriction.restriction()?,
                        Family::from_codes(b, p.codes.iter().cloned())?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            sink.single = true;
            sink.report(
                json!(input.display().to_string()),
                check_sst_system(b, &parts, *s, *t)?,
            )?;
            sink.finish("sst", json!({}))
        }
        Check::Covering { source, full } => {
            if *full {
                let b = CodeBox::new(
                    source
                        .m
                        .ok_or_else(|| Error::Parse("--full needs --m".into()))?,
                    source
                        .n
                        .ok_or_else(|| Error::Parse("--full needs --n".into()))?,
                )?;
                let cover = covering_number(&embed_to_sets(&Family::full(b)))?;
                let pass = cover == Some(b.m as usize);
                let r = Report::new(
                    "covering",
                    json!({ "m": b.m, "n": b.n, "full": true }),
                    pass,
                    Margin::Note(format!("{cover:?}")),
                )
                .with_witness(json!({ "covering_number": cover }));
                sink.single = true;
                sink.report(Value::Null, r)?;
                return sink.finish("covering", json!({}));
            }
            for_families(sink, source, seed, "covering", |f| {
                let cover = covering_number(&embed_to_sets(f))?;
                Ok(Report::new(
                    "covering",
                    json!({ "m": f.space().m, "n": f.space().n, "size": f.len() }),
                    true,
                    Margin::Note(format!("{cover:?}")),
                )
                .with_witness(json!({ "covering_number": cover })))
            })
        }
    }
}

/// `"1:2,3;2:1"`: coordinate 1 avoids symbols 2 and 3, coordinate 2 avoids 1.
fn forbidden_values(s: &str) -> Result<Vec<(usize, Vec<u32>)>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|part| {
            let (c, vals) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected coord:values, got {part:?}")))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate {c:?}")))?;
            ensure!(c >= 1, Parse, "coordinates are 1-based");
            Ok((c - 1, numbers(vals)?))
        })
        .collect()
}

fn convert(sink: &mut Sink, a: &ConvertArgs) -> Result<Outcome> {
    let v: Value = read_json(&a.input)?;
    let out = if v.get("codes").is_some() {
        let f = Family::from_json(
            &serde_json::from_value::<FamilyJson>(v).map_err(|e| Error::Parse(e.to_string()))?,
        )?;
        match a.to {
            Format::Family => json!(f.to_json()),
            Format::Sets => {
                json!({ "ground": f.space().m as usize * f.space().n, "sets": embed_to_sets(&f) })
            }
            Format::Cube => {
                ensure!(
                    f.space().m == 2,
                    Domain,
                    "only binary families convert to cube form"
                );
                // Symbol 1 is bit 1, symbol 2 is bit 0.
                let members: Vec<Vec<u8>> = f
                    .iter()
                    .map(|c| c.0.iter().map(|&s| u8::from(s == 1)).collect())
                    .collect();
                json!(CubeFamily::from_vectors(f.space().n, &members)?.to_json())
            }
        }
    } else if v.get("members").is_some() {
        let a_cube = CubeFamily::from_json(
            &serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?,
        )?;
        let f = Family::from_codes(
            CodeBox::new(2, a_cube.n())?,
            a_cube.masks().map(|x| {
                a_cube
                    .vector(x)
                    .into_iter()
                    .map(|b| if b == 1 { 1 } else { 2 })
                    .collect::<Vec<u32>>()
            }),
        )?;
        match a.to {
            Format::Cube => json!(a_cube.to_json()),
            Format::Family => json!(f.to_json()),
            Format::Sets => json!({ "ground": 2 * f.space().n, "sets": embed_to_sets(&f) }),
        }
    } else {
        return Err(Error::Parse(format!(
            "{}: neither a family nor a cube family",
            a.input.display()
        )));
    };
    sink.document(&out)?;
    Ok(Outcome::Clean)
}
