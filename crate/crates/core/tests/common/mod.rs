//! Shared fixtures for integration tests.
#![allow(dead_code)]

use fairuse::dataset::{Dataset, GroupAttribute, GroupId, GroupSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn two_by_two() -> GroupSpace {
    GroupSpace::new(vec![
        GroupAttribute::new("sex", &["female", "male"]),
        GroupAttribute::new("age", &["young", "old"]),
    ])
    .unwrap()
}

/// Random 2x2 instance with group-specific logistic label models and
/// uneven cell sizes. Deterministic in `seed`.
pub fn random_instance(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = two_by_two();
    let (mut x, mut y, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for cell in 0..4 {
        let n = rng.random_range(15..60);
        let w1: f64 = rng.random_range(-2.0..2.0);
        let w2: f64 = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-1.5..1.5);
        for _ in 0..n {
            let a: f64 = rng.random_range(-2.0..2.0);
            let c: f64 = rng.random_range(-2.0..2.0);
            let p = 1.0 / (1.0 + (-(w1 * a + w2 * c + b)).exp());
            x.push(vec![a, c]);
            y.push(if rng.random::<f64>() < p { 1 } else { -1 });
            g.push(space.group(cell));
        }
    }
    let groups: Vec<GroupId> = g;
    Dataset::new(vec!["x1".into(), "x2".into()], x, y, groups, space).unwrap()
}
