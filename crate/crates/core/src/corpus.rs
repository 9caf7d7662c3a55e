//! Seeded random families used by experiments and tests.
//!
//! Every run owns one ChaCha20 stream per trial: the run seed picks the key
//! and the trial counter picks the stream, so trials are independent of the
//! order in which workers execute them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::codes::{agr_unchecked, CodeBox, Family};
use crate::compression::CubeFamily;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Each code included independently with probability `p`.
pub fn random_family<R: Rng>(rng: &mut R, space: CodeBox, p: f64) -> Family {
    Family::from_indices(space, (0..space.size()).filter(|_| rng.gen_bool(p)))
}

/// Random non-empty family whose inclusion probability is itself random.
pub fn random_nonempty_family<R: Rng>(rng: &mut R, space: CodeBox) -> Family {
    loop {
        let p = rng.gen_range(0.05..0.95);
        let f = random_family(rng, space, p);
        if !f.is_empty() {
            return f;
        }
    }
}

/// Uniformly random family of exactly `k` codes.
pub fn random_family_of_size<R: Rng>(rng: &mut R, space: CodeBox, k: usize) -> Family {
    let mut idx: Vec<u64> = (0..space.size()).collect();
    idx.shuffle(rng);
    Family::from_indices(space, idx.into_iter().take(k))
}

/// Greedy random maximal family with no two members agreeing on exactly `t - 1` coordinates.
pub fn random_avoiding_family<R: Rng>(rng: &mut R, space: CodeBox, t: usize) -> Family {
    let mut order: Vec<u64> = (0..space.size()).collect();
    order.shuffle(rng);
    let mut chosen: Vec<Vec<u32>> = Vec::new();
    let mut kept = Vec::new();
    for i in order {
        let c = space.code_at(i);
        if chosen
            .iter()
            .all(|y| agr_unchecked(y, c.symbols()) != t - 1)
        {
            chosen.push(c.0);
            kept.push(i);
        }
    }
    Family::from_indices(space, kept)
}

/// Random pair with every cross pair agreeing somewhere: `G1` is random and
/// `G2` is a random subfamily of the codes meeting all of `G1`.
pub fn random_cross_intersecting<R: Rng>(rng: &mut R, space: CodeBox) -> (Family, Family) {
    loop {
        let g1 = random_nonempty_family(rng, space);
        let members = g1.codes();
        let compatible = Family::full(space).filter(|y| {
            members
                .iter()
                .all(|x| agr_unchecked(x.symbols(), y.symbols()) > 0)
        });
        if compatible.is_empty() {
            continue;
        }
        let p = rng.gen_range(0.2..1.0);
        let g2 = compatible.filter(|_| rng.gen_bool(p));
        if !g2.is_empty() {
            return (g1, g2);
        }
    }
}

/// Up-closure of a few random generators in `{0,1}^n`.
pub fn random_monotone_cube<R: Rng>(rng: &mut R, n: usize) -> CubeFamily {
    let generators = rng.gen_range(0..=3);
    let gens: Vec<u32> = (0..generators)
        .map(|_| rng.gen_range(0..1u32 << n))
        .collect();
    CubeFamily::from_masks(
        n,
        (0..1u32 << n).filter(|&x| gens.iter().any(|&g| x & g == g)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::is_avoiding;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let b = CodeBox::new(3, 2).unwrap();
        let a = random_family(&mut trial_rng(7, 1), b, 0.5);
        assert_eq!(a, random_family(&mut trial_rng(7, 1), b, 0.5));
        let others: Vec<Family> = (2..8)
            .map(|k| random_family(&mut trial_rng(7, k), b, 0.5))
            .collect();
        assert!(others.iter().any(|o| o != &a));
    }

    #[test]
    fn generators_meet_their_contracts() {
        let b = CodeBox::new(3, 2).unwrap();
        let mut rng = trial_rng(1, 0);
        for _ in 0..20 {
            assert!(is_avoiding(&random_avoiding_family(&mut rng, b, 2), 2)
                .unwrap()
                .holds());
            let (g1, g2) = random_cross_intersecting(&mut rng, b);
            for x in g1.iter() {
                for y in g2.iter() {
                    assert!(agr_unchecked(x.symbols(), y.symbols()) > 0);
                }
            }
            assert_eq!(random_family_of_size(&mut rng, b, 4).len(), 4);
            assert!(random_monotone_cube(&mut rng, 3).is_monotone());
        }
    }
}
