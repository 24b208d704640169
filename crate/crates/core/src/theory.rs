//! Training guarantees, opt-out compatibility and sample-size bounds for gains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroupSpace};
use crate::error::{Error, Result};
use crate::models::logistic::logistic_loss;
use crate::models::{
    CellSource, DecoupledCell, Encoding, FeatureMap, LinearModel, Loss, PersonalizedModel, Prediction, Predictor,
    Strategy, TrainConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n_g: usize,
    pub vc: usize,
    pub delta: f64,
    /// Empirical rationality gain or envy min-gain, as a rate.
    pub gain: f64,
    /// Number of groups; used by the envy bound only.
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub satisfied: bool,
    /// Smallest `n` with `n >= rhs(n)`.
    pub required_n: u64,
    pub rhs_at_n: f64,
}

/// `[4 vc ln(2n/vc + 1) + log_term] / gain^2`.
fn rhs(n: f64, vc: f64, log_term: f64, gain: f64) -> f64 {
    (4.0 * vc * (2.0 * n / vc + 1.0).ln() + log_term) / (gain * gain)
}

/// Smallest integer `n >= 1` with `n >= rhs(n)`.
///
/// `n - rhs(n)` is convex and negative at `n = 1` for any `gain <= 1`, so the
/// feasible set is a half-line; doubling finds a feasible point and bisection
/// the boundary.
fn required_n(vc: f64, log_term: f64, gain: f64) -> u64 {
    let ok = |n: u64| n as f64 >= rhs(n as f64, vc, log_term, gain);
    if ok(1) {
        return 1;
    }
    let mut hi = 2u64;
    while !ok(hi) {
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            return hi;
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn check_common(b: &BoundInputs) -> Result<Option<()>> {
    if b.vc < 1 {
        return Err(Error::Precondition("vc must be at least 1".into()));
    }
    if !(b.delta > 0.0 && b.delta < 1.0) {
        return Err(Error::Precondition("delta must lie in (0, 1)".into()));
    }
    if !(b.gain > 0.0) {
        return Ok(None);
    }
    Ok(Some(()))
}

fn verdict(b: &BoundInputs, log_term: f64) -> BoundVerdict {
    let vc = b.vc as f64;
    let required = required_n(vc, log_term, b.gain);
    BoundVerdict {
        satisfied: b.n_g as u64 >= required,
        required_n: required,
        rhs_at_n: rhs(b.n_g as f64, vc, log_term, b.gain),
    }
}

/// Sample size at which a positive rationality gain generalizes with probability `1 - delta`.
///
/// `Ok(None)` when the gain is not positive (the bound does not apply).
pub fn rationality_bound(b: &BoundInputs) -> Result<Option<BoundVerdict>> {
    if check_common(b)?.is_none() {
        return Ok(None);
    }
    Ok(Some(verdict(b, (8.0 / b.delta).ln())))
}

/// As [`rationality_bound`] for the envy min-gain, with `ln(8m/delta)`.
pub fn envy_bound(b: &BoundInputs) -> Result<Option<BoundVerdict>> {
    if b.m < 2 {
        return Err(Error::Precondition("envy bound needs m >= 2".into()));
    }
    if check_common(b)?.is_none() {
        return Ok(None);
    }
    Ok(Some(verdict(b, (8.0 * b.m as f64 / b.delta).ln())))
}

/// VC dimension of linear thresholds on `encoded_dim` inputs.
pub fn vc_linear(encoded_dim: usize) -> Result<usize> {
    if encoded_dim < 1 {
        return Err(Error::Precondition("encoded dimension must be at least 1".into()));
    }
    Ok(encoded_dim + 1)
}

/// Default VC convention for a trained model: `d' + 1` for shared linear models,
/// `m (d + 1)` for decoupled ones (one independent linear model per cell).
pub fn vc_of(model: &PersonalizedModel) -> usize {
    let per = model.encoded_dim().max(1) + 1;
    match model.strategy() {
        Strategy::Decoupled => model.space().len() * per,
        _ => per,
    }
}

/// Outcome of the opt-out compatibility check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptOutVerdict {
    pub compatible: bool,
    pub witness: String,
    /// Random `(x, g)` pairs on which the witness matched every sampled generic model.
    pub verified_pairs: usize,
}

/// A personalized hypothesis class, described by how it embeds generic models.
pub trait PersonalizedClass {
    fn describe(&self) -> String;

    /// A member of the class that predicts like `h0` for every reported group, if one exists.
    fn embed_generic(&self, h0: &LinearModel, space: &GroupSpace) -> Option<Box<dyn Predictor>>;
}

/// The linear class realized by a [`Strategy`].
pub struct StrategyClass(pub Strategy);

impl PersonalizedClass for StrategyClass {
    fn describe(&self) -> String {
        match self.0 {
            Strategy::Generic => "generic model is its own witness".into(),
            Strategy::OneHot | Strategy::Intersectional => {
                "copy feature weights and intercept of h0, set every group indicator weight to 0".into()
            }
            Strategy::Decoupled => "every cell model := h0".into(),
        }
    }

    fn embed_generic(&self, h0: &LinearModel, space: &GroupSpace) -> Option<Box<dyn Predictor>> {
        let cfg = TrainConfig::default();
        let model = match self.0 {
            Strategy::Generic => PersonalizedModel::from_shared(Strategy::Generic, space.clone(), h0.clone(), h0.clone(), cfg),
            Strategy::OneHot | Strategy::Intersectional => {
                let fm = FeatureMap::new(self.0.encoding(), &h0.feature_map.feature_names, space);
                let mut w = h0.feature_weights().to_vec();
                w.resize(fm.dim(), 0.0);
                w.push(h0.intercept());
                let shared = LinearModel::new(w, fm).ok()?;
                PersonalizedModel::from_shared(self.0, space.clone(), shared, h0.clone(), cfg)
            }
            Strategy::Decoupled => {
                let cells = (0..space.len())
                    .map(|_| DecoupledCell { model: h0.clone(), source: CellSource::Trained })
                    .collect();
                PersonalizedModel::from_cells(space.clone(), cells, h0.clone(), cfg)
            }
        };
        model.ok().map(|m| Box::new(m) as Box<dyn Predictor>)
    }
}

fn random_generic(rng: &mut ChaCha8Rng, d: usize, intercept_only: bool) -> LinearModel {
    let names: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    let space = GroupSpace::new(vec![crate::dataset::GroupAttribute::new("_", &["a", "b"])]).unwrap();
    let fm = FeatureMap::new(Encoding::Plain, &names, &space);
    let mut w: Vec<f64> = (0..d).map(|_| if intercept_only { 0.0 } else { rng.random_range(-2.0..2.0) }).collect();
    w.push(rng.random_range(-1.0..1.0));
    LinearModel::new(w, fm).unwrap()
}

/// Check that every generic model of a class is realizable by `class`.
///
/// Samples generic models (including intercept-only ones) and 100 random
/// `(x, g)` pairs, and requires the embedded witness to match `h0` on each.
pub fn check_optout_class(class: &dyn PersonalizedClass, space: &GroupSpace, seed: u64) -> OptOutVerdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 2;
    let mut verified = 0;
    for trial in 0..4 {
        let h0 = random_generic(&mut rng, d, trial == 0);
        let Some(h) = class.embed_generic(&h0, space) else {
            return OptOutVerdict {
                compatible: false,
                witness: format!("no member reproduces generic model with weights {:?}", h0.weights),
                verified_pairs: verified,
            };
        };
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let cell = rng.random_range(0..space.len());
            let expected = Prediction::from_margin(h0.margin(&x, 0, space));
            if h.predict_cell(&x, Some(cell)) != expected {
                return OptOutVerdict {
                    compatible: false,
                    witness: format!("witness differs from h0 at x={x:?}, group {}", space.label_of(cell)),
                    verified_pairs: verified,
                };
            }
        }
        verified += 100;
    }
    OptOutVerdict { compatible: true, witness: class.describe(), verified_pairs: verified }
}

pub fn check_optout(strategy: Strategy, space: &GroupSpace) -> OptOutVerdict {
    check_optout_class(&StrategyClass(strategy), space, 0)
}

/// Training loss of one linear model on a set of rows: the mean per-row loss
/// plus the model's own feature-weight penalty (logistic), or the 0-1 error rate.
pub fn rows_loss(
    model: &LinearModel,
    data: &Dataset,
    rows: &[usize],
    report_cell: usize,
    loss: Loss,
    l2_penalty: f64,
) -> f64 {
    let space = data.space();
    let n = rows.len() as f64;
    match loss {
        Loss::ZeroOneExhaustive => {
            let wrong = rows
                .iter()
                .filter(|&&i| (model.margin(data.row(i), report_cell, space) >= 0.0) != (data.label(i) > 0))
                .count();
            wrong as f64 / n
        }
        Loss::Logistic => {
            let s: f64 = rows
                .iter()
                .map(|&i| logistic_loss(data.label(i) as f64 * model.margin(data.row(i), report_cell, space)))
                .sum();
            s / n + model.penalty(l2_penalty)
        }
        Loss::Hinge => {
            let s: f64 = rows
                .iter()
                .map(|&i| (1.0 - data.label(i) as f64 * model.margin(data.row(i), report_cell, space)).max(0.0))
                .sum();
            let reg: f64 = model.weights.iter().map(|w| w * w).sum();
            s / n + 0.5 * l2_penalty * reg
        }
    }
}

/// Group-level training losses: `m` rows (true group) by `m + 1` columns
/// (reported group, then withheld). `None` for groups without training rows.
pub fn training_loss_matrix(model: &PersonalizedModel, train: &Dataset) -> Vec<Option<Vec<f64>>> {
    let cfg = model.config();
    let by_cell = train.rows_by_cell();
    let m = train.space().len();
    by_cell
        .iter()
        .map(|rows| {
            if rows.is_empty() {
                return None;
            }
            let mut row: Vec<f64> = (0..m)
                .map(|c| rows_loss(model.routed(Some(c)), train, rows, c, cfg.loss, cfg.l2_penalty))
                .collect();
            row.push(rows_loss(model.generic_linear(), train, rows, 0, cfg.loss, cfg.l2_penalty));
            Some(row)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PremiseCheck {
    pub group: String,
    pub personalized_loss: Option<f64>,
    pub decoupled_loss: Option<f64>,
    pub holds: bool,
}

/// Whether each group's truthful training loss under `personalized` matches
/// the decoupled minimizer's, within `10 * gradient_tolerance`.
///
/// For the 0-1 loss equality is exact. Groups without training rows hold vacuously.
pub fn check_prop2_premise(
    personalized: &PersonalizedModel,
    decoupled: &PersonalizedModel,
    train: &Dataset,
) -> Result<Vec<PremiseCheck>> {
    let cfg = personalized.config();
    if decoupled.strategy() != Strategy::Decoupled {
        return Err(Error::Precondition("decoupled_minimizers must be a decoupled model".into()));
    }
    if decoupled.config().loss != cfg.loss || decoupled.config().l2_penalty != cfg.l2_penalty {
        return Err(Error::Precondition("models were trained with different losses".into()));
    }
    let tol = if cfg.loss == Loss::ZeroOneExhaustive { 0.0 } else { 10.0 * cfg.gradient_tolerance };
    let space = train.space();
    Ok(train
        .rows_by_cell()
        .iter()
        .enumerate()
        .map(|(c, rows)| {
            if rows.is_empty() {
                return PremiseCheck { group: space.label_of(c), personalized_loss: None, decoupled_loss: None, holds: true };
            }
            let a = rows_loss(personalized.routed(Some(c)), train, rows, c, cfg.loss, cfg.l2_penalty);
            let b = rows_loss(decoupled.routed(Some(c)), train, rows, c, cfg.loss, cfg.l2_penalty);
            PremiseCheck { group: space.label_of(c), personalized_loss: Some(a), decoupled_loss: Some(b), holds: (a - b).abs() <= tol }
        })
        .collect())
}

/// Rationality and envy violations in a training-loss matrix beyond `slack`:
/// `(true group, reported column)` pairs with `entry(g, col) < entry(g, g) - slack`.
/// Column `m` is the withheld column.
pub fn loss_matrix_violations(matrix: &[Option<Vec<f64>>], slack: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (g, row) in matrix.iter().enumerate() {
        let Some(row) = row else { continue };
        for (col, v) in row.iter().enumerate() {
            if col != g && *v < row[g] - slack {
                out.push((g, col));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GroupAttribute;

    fn inputs(gain: f64, delta: f64, m: usize) -> BoundInputs {
        BoundInputs { n_g: 1_000_000, vc: 3, delta, gain, m }
    }

    #[test]
    fn large_sample_satisfies() {
        let v = rationality_bound(&inputs(0.5, 0.1, 1)).unwrap().unwrap();
        assert!(v.satisfied);
        let direct = (12.0 * (2e6f64 / 3.0 + 1.0).ln() + 80f64.ln()) / 0.25;
        assert!((v.rhs_at_n - direct).abs() < 1e-9);
    }

    #[test]
    fn required_n_is_the_crossing() {
        let v = rationality_bound(&inputs(0.5, 0.1, 1)).unwrap().unwrap();
        let n = v.required_n as f64;
        assert!(n >= rhs(n, 3.0, 80f64.ln(), 0.5));
        assert!(n - 1.0 < rhs(n - 1.0, 3.0, 80f64.ln(), 0.5));
    }

    #[test]
    fn non_positive_gain_is_not_applicable() {
        assert_eq!(rationality_bound(&inputs(0.0, 0.1, 1)).unwrap(), None);
        assert_eq!(envy_bound(&inputs(-0.2, 0.1, 4)).unwrap(), None);
    }

    #[test]
    fn envy_needs_two_groups() {
        assert!(envy_bound(&inputs(0.5, 0.1, 1)).is_err());
    }

    #[test]
    fn vc_convention() {
        assert_eq!(vc_linear(2).unwrap(), 3);
        assert_eq!(vc_linear(4).unwrap(), 5);
        assert_eq!(vc_linear(5).unwrap(), 6);
        assert!(vc_linear(0).is_err());
    }

    fn space() -> GroupSpace {
        GroupSpace::new(vec![GroupAttribute::new("sex", &["f", "m"]), GroupAttribute::new("age", &["y", "o"])]).unwrap()
    }

    #[test]
    fn strategies_are_opt_out_compatible() {
        for s in Strategy::ALL {
            let v = check_optout(s, &space());
            assert!(v.compatible, "{s}: {}", v.witness);
            assert_eq!(v.verified_pairs, 400);
        }
        assert!(check_optout(Strategy::Decoupled, &space()).witness.contains("every cell model := h0"));
    }

    /// A class of personalized linear models whose members must have a nonzero slope.
    struct SlopeRequired;

    impl PersonalizedClass for SlopeRequired {
        fn describe(&self) -> String {
            "linear models with at least one nonzero feature weight".into()
        }
        fn embed_generic(&self, h0: &LinearModel, space: &GroupSpace) -> Option<Box<dyn Predictor>> {
            if h0.feature_weights().iter().all(|w| *w == 0.0) {
                return None;
            }
            StrategyClass(Strategy::OneHot).embed_generic(h0, space)
        }
    }

    #[test]
    fn restricted_class_is_not_compatible() {
        let v = check_optout_class(&SlopeRequired, &space(), 7);
        assert!(!v.compatible);
        assert_eq!(v.verified_pairs, 0);
    }
}
