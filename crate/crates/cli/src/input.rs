use std::fs;
use std::path::Path;

use aglab_core::codes::FamilyJson;
use aglab_core::compression::{CubeFamily, CubeFamilyJson};
use aglab_core::corpus::{random_cross_intersecting, random_nonempty_family, trial_rng};
use aglab_core::exact::{parse_q, Q};
use aglab_core::{CodeBox, Error, Family, Restriction, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::Source;

/// Largest box whose subfamilies `--exhaustive` will enumerate.
pub const EXHAUSTIVE_CODES: u64 = 20;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_family(path: &Path) -> Result<Family> {
    Family::from_json(&read_json::<FamilyJson>(path)?)
}

pub fn read_cube(path: &Path) -> Result<CubeFamily> {
    CubeFamily::from_json(&read_json::<CubeFamilyJson>(path)?)
}

pub fn rational(s: &str) -> Result<Q> {
    parse_q(s)
}

/// Comma-separated 1-based coordinates to 0-based ones.
pub fn coords(s: &str) -> Result<Vec<usize>> {
    numbers(s)?
        .into_iter()
        .map(|c| {
            ensure!(c >= 1, Parse, "coordinates are 1-based, got {c}");
            Ok(c as usize - 1)
        })
        .collect()
}

pub fn numbers(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| Error::Parse(format!("not a number: {p:?}")))
        })
        .collect()
}

/// `{"Z": [1-based coords], "x": [symbols]}`.
#[derive(Deserialize)]
pub struct RestrictionJson {
    #[serde(rename = "Z")]
    pub z: Vec<usize>,
    pub x: Vec<u32>,
}

impl RestrictionJson {
    pub fn restriction(&self) -> Result<Restriction> {
        ensure!(
            self.z.iter().all(|&c| c >= 1),
            Parse,
            "coordinates are 1-based"
        );
        Restriction::new(self.z.iter().map(|c| c - 1).collect(), self.x.clone())
    }
}

fn space(source: &Source) -> Result<CodeBox> {
    match (source.m, source.n) {
        (Some(m), Some(n)) => CodeBox::new(m, n),
        _ => Err(Error::Parse("give --m and --n, or --input".into())),
    }
}

/// Families with a JSON label: every `--input` file, every subfamily of the
/// box under `--exhaustive`, or `--trials` seeded non-empty families.
pub fn families(
    source: &Source,
    seed: u64,
) -> Result<Box<dyn Iterator<Item = Result<(Value, Family)>>>> {
    if !source.input.is_empty() {
        let files = source.input.clone();
        return Ok(Box::new(
            files
                .into_iter()
                .map(|p| Ok((json!(p.display().to_string()), read_family(&p)?))),
        ));
    }
    let b = space(source)?;
    if source.exhaustive {
        ensure!(
            b.size() <= EXHAUSTIVE_CODES,
            Budget,
            "{b} has {} codes; exhaustive runs allow at most {EXHAUSTIVE_CODES}",
            b.size()
        );
        let size = b.size();
        return Ok(Box::new((0u64..1 << size).map(move |mask| {
            Ok((
                json!({ "mask": mask }),
                Family::from_indices(b, (0..size).filter(|i| mask >> i & 1 == 1)),
            ))
        })));
    }
    Ok(Box::new((0..source.trials).map(move |trial| {
        Ok((
            json!({ "trial": trial }),
            random_nonempty_family(&mut trial_rng(seed, trial), b),
        ))
    })))
}

/// Pairs of families: two `--input` files, all pairs under `--exhaustive`
/// filtered by `keep`, or seeded pairs from `draw`.
pub fn pairs(
    source: &Source,
    seed: u64,
    keep: fn(&Family, &Family) -> bool,
    draw: fn(u64, u64, CodeBox) -> (Family, Family),
) -> Result<Box<dyn Iterator<Item = Result<(Value, (Family, Family))>>>> {
    if !source.input.is_empty() {
        ensure!(
            source.input.len() == 2,
            Parse,
            "pair checks take exactly two --input files"
        );
        let label = json!([
            source.input[0].display().to_string(),
            source.input[1].display().to_string()
        ]);
        let pair = (
            read_family(&source.input[0])?,
            read_family(&source.input[1])?,
        );
        return Ok(Box::new(std::iter::once(Ok((label, pair)))));
    }
    let b = space(source)?;
    if source.exhaustive {
        ensure!(
            b.size() <= 5,
            Budget,
            "exhaustive pair runs allow at most 5 codes, {b} has {}",
            b.size()
        );
        let size = b.size();
        let all =
            move |mask: u64| Family::from_indices(b, (0..size).filter(|i| mask >> i & 1 == 1));
        return Ok(Box::new((1u64..1 << size).flat_map(move |a| {
            (1u64..1 << size).filter_map(move |c| {
                let (f, g) = (all(a), all(c));
                keep(&f, &g).then(|| Ok((json!({ "masks": [a, c] }), (f, g))))
            })
        })));
    }
    Ok(Box::new((0..source.trials).map(move |trial| {
        Ok((json!({ "trial": trial }), draw(seed, trial, b)))
    })))
}

pub fn cross_intersecting_draw(seed: u64, trial: u64, b: CodeBox) -> (Family, Family) {
    random_cross_intersecting(&mut trial_rng(seed, trial), b)
}

pub fn independent_draw(seed: u64, trial: u64, b: CodeBox) -> (Family, Family) {
    let mut rng = trial_rng(seed, trial);
    let f = random_nonempty_family(&mut rng, b);
    (f, random_nonempty_family(&mut rng, b))
}
