//! Random search used once to pick the frozen coordinates of the
//! group-specific-effects and surrogate-outlier generators.
//!
//! `cargo run --release -p fairuse-core --example search_constants -- gse|outlier`

use fairuse::dataset::{Dataset, GroupAttribute, GroupId, GroupSpace};
use fairuse::models::{train_personalized, train_zero_one_exhaustive, Loss, Predictor, Strategy, TrainConfig};
use rand::{Rng, SeedableRng};

fn errors(model: &dyn Predictor, data: &Dataset, cell: usize, report: Option<usize>) -> usize {
    data.rows_in_cell(cell)
        .into_iter()
        .filter(|&i| model.predict_cell(data.row(i), report).label != data.label(i))
        .count()
}

fn make(space: &GroupSpace, pts: &[(f64, f64, i8, usize)]) -> Dataset {
    Dataset::new(
        vec!["x1".into(), "x2".into()],
        pts.iter().map(|p| vec![p.0, p.1]).collect(),
        pts.iter().map(|p| p.2).collect(),
        pts.iter().map(|p| GroupId(vec![p.3])).collect(),
        space.clone(),
    )
    .unwrap()
}

fn gse() {
    let space = GroupSpace::new(vec![GroupAttribute::new("group", &["A", "B", "C"])]).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200_000 {
        let mut pts = Vec::new();
        for g in 0..3 {
            for y in [1i8, -1] {
                pts.push((rng.random_range(0..4) as f64, rng.random_range(0..4) as f64, y, g));
            }
        }
        let ds = make(&space, &pts);
        let Ok(dcp) = train_zero_one_exhaustive(&ds, Strategy::Decoupled) else { continue };
        if (0..3).any(|c| errors(&dcp, &ds, c, Some(c)) > 0) {
            continue;
        }
        let oh = train_zero_one_exhaustive(&ds, Strategy::OneHot).unwrap();
        let gen: Vec<usize> = (0..3).map(|c| errors(&oh, &ds, c, None)).collect();
        let per: Vec<usize> = (0..3).map(|c| errors(&oh, &ds, c, Some(c))).collect();
        if gen[0] > 0 && gen[2] > 0 && per[1] > gen[1] && per[0] == 0 && per[2] == 0 {
            println!("{pts:?} generic {gen:?} onehot {per:?}");
            return;
        }
    }
    println!("no configuration found");
}

fn outlier() {
    let space = GroupSpace::new(vec![GroupAttribute::new("group", &["A", "B"])]).unwrap();
    let hinge = TrainConfig { max_iterations: 200_000, ..TrainConfig::default().with_loss(Loss::Hinge).with_l2(1e-2) };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20_000 {
        let mut pts = Vec::new();
        for g in 0..2 {
            let shift = rng.random_range(-1..=1) as f64;
            for _ in 0..5 {
                for y in [1i8, -1] {
                    let x1 = rng.random_range(-3..=3) as f64 + if y > 0 { 1.0 } else { -1.0 };
                    let x2 = rng.random_range(-3..=3) as f64 + shift;
                    pts.push((x1, x2, y, g));
                }
            }
        }
        let ox = rng.random_range(-30..=30) as f64;
        let oy = rng.random_range(-30..=30) as f64;
        let oyl = if rng.random::<bool>() { 1 } else { -1 };
        pts.push((ox, oy, oyl, 1));
        let ds = make(&space, &pts);
        let Ok(h) = train_personalized(&ds, Strategy::OneHot, &hinge) else { println!("nonconv"); continue };
        let z = train_zero_one_exhaustive(&ds, Strategy::OneHot).unwrap();
        let eb = |m: &dyn Predictor, r| errors(m, &ds, 1, r);
        let tot = |m: &dyn Predictor, gen: bool| (0..2).map(|c| errors(m, &ds, c, if gen { None } else { Some(c) })).sum::<usize>();
        let hinge_viol = eb(&h, Some(1)) > eb(&h, None);
        let zero_ok = (0..2).all(|c| errors(&z, &ds, c, Some(c)) <= errors(&z, &ds, c, None));
        if !(hinge_viol && zero_ok && eb(&h, Some(1)) > eb(&z, Some(1)) && tot(&h, false) <= tot(&h, true)) {
            continue;
        }
        // Without the outlier, both trainers must agree on every label.
        let clean = make(&space, &pts[..pts.len() - 1]);
        let h2 = train_personalized(&clean, Strategy::OneHot, &hinge).unwrap();
        let z2 = train_zero_one_exhaustive(&clean, Strategy::OneHot).unwrap();
        let agree = (0..clean.n()).all(|i| {
            let c = Some(clean.cell(i));
            h2.predict_cell(clean.row(i), c).label == z2.predict_cell(clean.row(i), c).label
                && h2.predict_cell(clean.row(i), None).label == z2.predict_cell(clean.row(i), None).label
        });
        if agree {
            println!("{pts:?}");
            println!("hinge B pers {} gen {}; zero-one B pers {} gen {}", eb(&h, Some(1)), eb(&h, None), eb(&z, Some(1)), eb(&z, None));
            return;
        }
    }
    println!("no configuration found");
}

fn main() {
    match std::env::args().nth(1).as_deref() {
        Some("gse") => gse(),
        Some("outlier") => outlier(),
        _ => eprintln!("usage: search_constants gse|outlier"),
    }
}
