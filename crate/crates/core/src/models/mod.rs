//! Generic and personalized linear classifiers.
//!
//! A [`PersonalizedModel`] answers predictions for an arbitrary *reported*
//! group, including [`Reported::Withheld`], which routes to the paired
//! generic model trained on the same data with the same configuration.

mod encode;
mod exhaustive;
mod hinge;
pub(crate) mod logistic;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroupId, GroupSpace};
use crate::error::{Error, Result};

pub use encode::{encode, indicator_count, Encoding, FeatureMap};
pub use exhaustive::{MAX_ENCODED_DIM, MAX_ROWS};

/// Score threshold for the `+1` label.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Intercept magnitude of the constant predictor fitted to single-class data.
pub const CONSTANT_INTERCEPT: f64 = 30.0;

/// Training loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    Logistic,
    /// L2-regularized hinge loss; used to study surrogate-loss effects.
    Hinge,
    /// Exact empirical 0-1 risk minimization by enumeration (small inputs only).
    ZeroOneExhaustive,
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Logistic => "logistic",
            Loss::Hinge => "hinge",
            Loss::ZeroOneExhaustive => "zero-one-exhaustive",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Loss::Logistic),
            "hinge" => Ok(Loss::Hinge),
            "zero-one-exhaustive" | "zero-one" | "01" => Ok(Loss::ZeroOneExhaustive),
            other => Err(Error::Domain(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    /// Penalty on raw feature weights; intercepts and group indicators are never penalized.
    pub l2_penalty: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Settings for audits of real data.
    fn default() -> Self {
        Self {
            loss: Loss::Logistic,
            l2_penalty: 1e-4,
            max_iterations: 10_000,
            gradient_tolerance: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Unpenalized settings used when reproducing worked constructions.
    pub fn reproduction() -> Self {
        Self { l2_penalty: 0.0, ..Self::default() }
    }

    pub fn with_loss(mut self, loss: Loss) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_l2(mut self, l2_penalty: f64) -> Self {
        self.l2_penalty = l2_penalty;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::Precondition("gradient_tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Precondition("max_iterations must be at least 1".into()));
        }
        if !(self.l2_penalty >= 0.0) || !self.l2_penalty.is_finite() {
            return Err(Error::Precondition("l2_penalty must be a finite non-negative number".into()));
        }
        if self.loss == Loss::Hinge && self.l2_penalty == 0.0 {
            return Err(Error::Precondition("hinge loss requires a positive l2_penalty".into()));
        }
        Ok(())
    }
}

/// How group attributes are used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Generic,
    OneHot,
    Intersectional,
    Decoupled,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Generic, Strategy::OneHot, Strategy::Intersectional, Strategy::Decoupled];

    /// Encoding of the shared linear model (cell models of `Decoupled` see features only).
    pub fn encoding(self) -> Encoding {
        match self {
            Strategy::OneHot => Encoding::OneHot,
            Strategy::Intersectional => Encoding::Intersectional,
            Strategy::Generic | Strategy::Decoupled => Encoding::Plain,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Generic => "generic",
            Strategy::OneHot => "onehot",
            Strategy::Intersectional => "intersectional",
            Strategy::Decoupled => "decoupled",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "generic" => Ok(Strategy::Generic),
            "onehot" | "one-hot" | "1hot" => Ok(Strategy::OneHot),
            "intersectional" | "all" => Ok(Strategy::Intersectional),
            "decoupled" | "dcp" => Ok(Strategy::Decoupled),
            other => Err(Error::Domain(format!("unknown strategy `{other}`"))),
        }
    }
}

/// The group a person reports at prediction time.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reported {
    Group(GroupId),
    Withheld,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Probability-like score of the `+1` class.
    pub score: f64,
    pub label: i8,
}

impl Prediction {
    /// Score `sigmoid(margin)`; the label is `+1` iff `margin >= 0`, which is the
    /// `score >= 0.5` rule without rounding at tiny margins.
    pub fn from_margin(margin: f64) -> Self {
        Self { score: logistic::sigmoid(margin), label: if margin >= 0.0 { 1 } else { -1 } }
    }
}

/// Anything that maps `(x, reported group)` to a prediction.
pub trait Predictor: Sync {
    fn space(&self) -> &GroupSpace;

    /// `reported` is a cell index of [`Predictor::space`], `None` when withheld.
    fn predict_cell(&self, x: &[f64], reported: Option<usize>) -> Prediction;

    fn predict(&self, x: &[f64], reported: &Reported) -> Result<Prediction> {
        let cell = match reported {
            Reported::Withheld => None,
            Reported::Group(g) => {
                self.space().validate(g)?;
                Some(self.space().index(g))
            }
        };
        Ok(self.predict_cell(x, cell))
    }
}

/// A linear threshold model over an encoded input. The last weight is the intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub feature_map: FeatureMap,
    /// Fitted to single-class data: zero weights and a saturated intercept.
    #[serde(default)]
    pub constant: bool,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, feature_map: FeatureMap) -> Result<Self> {
        if weights.len() != feature_map.dim() + 1 {
            return Err(Error::Precondition(format!(
                "expected {} weights, got {}",
                feature_map.dim() + 1,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Precondition("weights must be finite".into()));
        }
        Ok(Self { weights, feature_map, constant: false })
    }

    pub(crate) fn constant(positive: bool, feature_map: FeatureMap) -> Self {
        let mut weights = vec![0.0; feature_map.dim() + 1];
        *weights.last_mut().unwrap() = if positive { CONSTANT_INTERCEPT } else { -CONSTANT_INTERCEPT };
        Self { weights, feature_map, constant: true }
    }

    pub fn intercept(&self) -> f64 {
        *self.weights.last().unwrap()
    }

    pub fn feature_weights(&self) -> &[f64] {
        &self.weights[..self.feature_map.n_features()]
    }

    /// Intercept plus the indicator contribution of `cell` (ignored for `Plain`).
    pub fn effective_intercept(&self, cell: usize, space: &GroupSpace) -> f64 {
        let d = self.feature_map.n_features();
        let mut b = self.intercept();
        match self.feature_map.encoding {
            Encoding::Plain => {}
            Encoding::OneHot => {
                let g = space.group(cell);
                let mut offset = d;
                for (v, attr) in g.0.iter().zip(space.attributes()) {
                    if *v > 0 {
                        b += self.weights[offset + v - 1];
                    }
                    offset += attr.values.len() - 1;
                }
            }
            Encoding::Intersectional => {
                if cell > 0 {
                    b += self.weights[d + cell - 1];
                }
            }
        }
        b
    }

    pub fn margin(&self, x: &[f64], cell: usize, space: &GroupSpace) -> f64 {
        let dot: f64 = self.feature_weights().iter().zip(x).map(|(w, v)| w * v).sum();
        dot + self.effective_intercept(cell, space)
    }

    /// `(l2/2) * ||feature weights||^2`.
    pub fn penalty(&self, l2: f64) -> f64 {
        0.5 * l2 * self.feature_weights().iter().map(|w| w * w).sum::<f64>()
    }
}

/// Provenance of a decoupled cell model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSource {
    Trained,
    /// Single-class cell.
    Constant,
    /// Empty cell; inherits the generic model.
    Generic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoupledCell {
    pub model: LinearModel,
    pub source: CellSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Body {
    Shared { model: LinearModel },
    Decoupled { cells: Vec<DecoupledCell> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonalizedModel {
    strategy: Strategy,
    space: GroupSpace,
    body: Body,
    generic: LinearModel,
    config: TrainConfig,
    flags: Vec<String>,
}

impl PersonalizedModel {
    /// Assemble a shared-weights model (`Generic`, `OneHot` or `Intersectional`).
    pub fn from_shared(
        strategy: Strategy,
        space: GroupSpace,
        model: LinearModel,
        generic: LinearModel,
        config: TrainConfig,
    ) -> Result<Self> {
        if strategy == Strategy::Decoupled {
            return Err(Error::Precondition("decoupled models are built with from_cells".into()));
        }
        if model.feature_map.encoding != strategy.encoding() {
            return Err(Error::Precondition(format!("{strategy} needs {:?} encoding", strategy.encoding())));
        }
        if generic.feature_map.encoding != Encoding::Plain {
            return Err(Error::Precondition("generic model must use the plain encoding".into()));
        }
        Ok(Self { strategy, space, body: Body::Shared { model }, generic, config, flags: Vec::new() })
    }

    /// Assemble a decoupled model from one cell model per group.
    pub fn from_cells(
        space: GroupSpace,
        cells: Vec<DecoupledCell>,
        generic: LinearModel,
        config: TrainConfig,
    ) -> Result<Self> {
        if cells.len() != space.len() {
            return Err(Error::Precondition(format!("expected {} cell models, got {}", space.len(), cells.len())));
        }
        if cells.iter().any(|c| c.model.feature_map.encoding != Encoding::Plain) {
            return Err(Error::Precondition("cell models must use the plain encoding".into()));
        }
        Ok(Self {
            strategy: Strategy::Decoupled,
            space,
            body: Body::Decoupled { cells },
            generic,
            config,
            flags: Vec::new(),
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Warnings raised during training (constant predictors, inherited cells).
    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    /// The paired generic model that serves withheld reports.
    pub fn generic_linear(&self) -> &LinearModel {
        &self.generic
    }

    /// The paired generic model as a standalone `Generic` model.
    pub fn generic(&self) -> PersonalizedModel {
        PersonalizedModel {
            strategy: Strategy::Generic,
            space: self.space.clone(),
            body: Body::Shared { model: self.generic.clone() },
            generic: self.generic.clone(),
            config: self.config.clone(),
            flags: self.flags.iter().filter(|f| f.starts_with("generic")).cloned().collect(),
        }
    }

    pub fn decoupled_cells(&self) -> Option<&[DecoupledCell]> {
        match &self.body {
            Body::Decoupled { cells } => Some(cells),
            Body::Shared { .. } => None,
        }
    }

    /// The linear model that answers a report of `cell` (`None` = withheld).
    pub fn routed(&self, reported: Option<usize>) -> &LinearModel {
        match (reported, &self.body) {
            (None, _) => &self.generic,
            (Some(_), Body::Shared { model }) => model,
            (Some(c), Body::Decoupled { cells }) => &cells[c].model,
        }
    }

    /// Input dimension `d'` of the hypothesis class (per cell model for `Decoupled`).
    pub fn encoded_dim(&self) -> usize {
        match &self.body {
            Body::Shared { model } => model.feature_map.dim(),
            Body::Decoupled { .. } => self.generic.feature_map.dim(),
        }
    }

    pub fn margin(&self, x: &[f64], reported: Option<usize>) -> f64 {
        let cell = reported.unwrap_or(0);
        self.routed(reported).margin(x, cell, &self.space)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("model serialization is infallible")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(value.clone())?)
    }
}

impl Predictor for PersonalizedModel {
    fn space(&self) -> &GroupSpace {
        &self.space
    }

    fn predict_cell(&self, x: &[f64], reported: Option<usize>) -> Prediction {
        Prediction::from_margin(self.margin(x, reported))
    }
}

/// Fit one linear model of `encoding` on `rows` of `data`. Returns the model and
/// an optional warning.
fn fit_linear(
    data: &Dataset,
    rows: &[usize],
    encoding: Encoding,
    cfg: &TrainConfig,
) -> Result<(LinearModel, Option<String>)> {
    let space = data.space();
    let fm = FeatureMap::new(encoding, data.feature_names(), space);
    let positives = rows.iter().filter(|&&i| data.label(i) > 0).count();
    if positives == 0 || positives == rows.len() {
        let positive = positives > 0;
        let msg = format!(
            "single-class training data ({} rows, all {}); fitted a constant predictor",
            rows.len(),
            if positive { "+1" } else { "-1" }
        );
        log::warn!("{msg}");
        return Ok((LinearModel::constant(positive, fm), Some(msg)));
    }
    let mut encoded = Vec::with_capacity(rows.len());
    for &i in rows {
        let mut z = Vec::with_capacity(fm.dim() + 1);
        z.extend_from_slice(data.row(i));
        encode::push_indicators(&mut z, &space.group(data.cell(i)), encoding, space);
        encoded.push(z);
    }
    let labels: Vec<i8> = rows.iter().map(|&i| data.label(i)).collect();
    let weights = match cfg.loss {
        Loss::Logistic => {
            let mut penalized: Vec<bool> = (0..fm.dim()).map(|j| fm.penalized(j)).collect();
            penalized.push(false);
            let design = logistic::Design {
                rows: encoded.into_iter().map(|mut z| {
                    z.push(1.0);
                    z
                }).collect(),
                targets: labels.iter().map(|&y| y as f64).collect(),
                weights: vec![1.0; rows.len()],
                penalized,
            };
            let fit = logistic::fit(&design, cfg.l2_penalty, cfg.max_iterations, cfg.gradient_tolerance)?;
            log::debug!("logistic fit: {} iterations, gradient norm {:e}", fit.iterations, fit.gradient_norm);
            fit.weights
        }
        Loss::Hinge => hinge::fit(&encoded, &labels, cfg)?,
        Loss::ZeroOneExhaustive => {
            let sol = exhaustive::fit(&encoded, &labels)?;
            log::debug!("0-1 search: {} training errors", sol.errors);
            sol.weights
        }
    };
    Ok((LinearModel::new(weights, fm)?, None))
}

fn check_trainable(train: &Dataset, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Precondition("training set is empty".into()));
    }
    Ok(())
}

/// Train the generic model `h0` on features only.
pub fn train_generic(train: &Dataset, cfg: &TrainConfig) -> Result<PersonalizedModel> {
    check_trainable(train, cfg)?;
    let rows: Vec<usize> = (0..train.n()).collect();
    let (model, warning) = fit_linear(train, &rows, Encoding::Plain, cfg)?;
    Ok(PersonalizedModel {
        strategy: Strategy::Generic,
        space: train.space().clone(),
        body: Body::Shared { model: model.clone() },
        generic: model,
        config: cfg.clone(),
        flags: warning.map(|w| format!("generic: {w}")).into_iter().collect(),
    })
}

/// Train a personalized model. `Strategy::Generic` delegates to [`train_generic`].
///
/// The paired generic model is trained alongside so withheld reports are answerable.
pub fn train_personalized(train: &Dataset, strategy: Strategy, cfg: &TrainConfig) -> Result<PersonalizedModel> {
    let generic = train_generic(train, cfg)?;
    if strategy == Strategy::Generic {
        return Ok(generic);
    }
    let mut flags = generic.flags.clone();
    let body = match strategy {
        Strategy::Generic => unreachable!(),
        Strategy::OneHot | Strategy::Intersectional => {
            let rows: Vec<usize> = (0..train.n()).collect();
            let (model, warning) = fit_linear(train, &rows, strategy.encoding(), cfg)?;
            flags.extend(warning.map(|w| format!("personalized: {w}")));
            Body::Shared { model }
        }
        Strategy::Decoupled => {
            let by_cell = train.rows_by_cell();
            let fitted: Vec<Result<(DecoupledCell, Option<String>)>> = by_cell
                .par_iter()
                .enumerate()
                .map(|(c, rows)| {
                    let label = train.space().label_of(c);
                    if rows.is_empty() {
                        let msg = format!("cell [{label}]: no training rows; inherits the generic model");
                        log::warn!("{msg}");
                        let cell = DecoupledCell { model: generic.generic.clone(), source: CellSource::Generic };
                        return Ok((cell, Some(msg)));
                    }
                    let (model, warning) = fit_linear(train, rows, Encoding::Plain, cfg)?;
                    let source = if model.constant { CellSource::Constant } else { CellSource::Trained };
                    Ok((DecoupledCell { model, source }, warning.map(|w| format!("cell [{label}]: {w}"))))
                })
                .collect();
            let mut cells = Vec::with_capacity(fitted.len());
            for item in fitted {
                let (cell, warning) = item?;
                flags.extend(warning);
                cells.push(cell);
            }
            Body::Decoupled { cells }
        }
    };
    Ok(PersonalizedModel {
        strategy,
        space: train.space().clone(),
        body,
        generic: generic.generic,
        config: cfg.clone(),
        flags,
    })
}

/// Exact empirical 0-1 risk minimizer over linear thresholds for `strategy`.
pub fn train_zero_one_exhaustive(train: &Dataset, strategy: Strategy) -> Result<PersonalizedModel> {
    train_personalized(train, strategy, &TrainConfig::reproduction().with_loss(Loss::ZeroOneExhaustive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GroupAttribute;

    fn two_by_two() -> GroupSpace {
        GroupSpace::new(vec![
            GroupAttribute::new("sex", &["female", "male"]),
            GroupAttribute::new("age", &["young", "old"]),
        ])
        .unwrap()
    }

    fn noisy(seed: u64) -> Dataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let space = two_by_two();
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut g = Vec::new();
        for i in 0..200 {
            let cell = i % 4;
            let a: f64 = rng.random_range(-2.0..2.0);
            let b: f64 = rng.random_range(-2.0..2.0);
            let p = logistic::sigmoid(a - 0.5 * b + 0.7 * cell as f64 - 1.0);
            x.push(vec![a, b]);
            y.push(if rng.random::<f64>() < p { 1 } else { -1 });
            g.push(space.group(cell));
        }
        Dataset::new(vec!["x1".into(), "x2".into()], x, y, g, space).unwrap()
    }

    #[test]
    fn separated_pair_is_fit_exactly() {
        let space = GroupSpace::new(vec![GroupAttribute::new("g", &["a", "b"])]).unwrap();
        let ds = Dataset::new(
            vec!["x".into()],
            vec![vec![-1.0], vec![1.0]],
            vec![-1, 1],
            vec![GroupId(vec![0]), GroupId(vec![1])],
            space,
        )
        .unwrap();
        for loss in [Loss::Logistic, Loss::ZeroOneExhaustive] {
            let m = train_generic(&ds, &TrainConfig::default().with_loss(loss)).unwrap();
            assert_eq!(m.predict_cell(&[-1.0], None).label, -1);
            assert_eq!(m.predict_cell(&[1.0], None).label, 1);
        }
    }

    #[test]
    fn generic_ignores_report() {
        let ds = noisy(1);
        let m = train_generic(&ds, &TrainConfig::default()).unwrap();
        let x = [0.3, -0.2];
        let a = m.predict_cell(&x, None);
        for c in 0..4 {
            assert_eq!(m.predict_cell(&x, Some(c)), a);
        }
    }

    #[test]
    fn decoupled_routes_to_cell_model() {
        let ds = noisy(2);
        let m = train_personalized(&ds, Strategy::Decoupled, &TrainConfig::default()).unwrap();
        let cells = m.decoupled_cells().unwrap();
        let x = [0.4, 1.1];
        for (c, cell) in cells.iter().enumerate() {
            let direct = Prediction::from_margin(cell.model.margin(&x, c, ds.space()));
            assert_eq!(m.predict_cell(&x, Some(c)), direct);
        }
    }

    #[test]
    fn nesting_of_onehot_over_generic() {
        let ds = noisy(3);
        let cfg = TrainConfig::default();
        for strategy in [Strategy::OneHot, Strategy::Intersectional] {
            let h = train_personalized(&ds, strategy, &cfg).unwrap();
            let obj = |m: &LinearModel| {
                let mut s = 0.0;
                for i in 0..ds.n() {
                    let y = ds.label(i) as f64;
                    s += logistic::logistic_loss(y * m.margin(ds.row(i), ds.cell(i), ds.space()));
                }
                s / ds.n() as f64 + m.penalty(cfg.l2_penalty)
            };
            assert!(obj(h.routed(Some(0))) <= obj(h.generic_linear()) + 10.0 * cfg.gradient_tolerance);
        }
    }

    #[test]
    fn single_class_cell_is_constant_and_flagged() {
        let space = GroupSpace::new(vec![GroupAttribute::new("g", &["a", "b", "c"])]).unwrap();
        let ds = Dataset::new(
            vec!["x".into()],
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![1, 1, -1, 1, -1],
            vec![GroupId(vec![0]), GroupId(vec![0]), GroupId(vec![1]), GroupId(vec![1]), GroupId(vec![1])],
            space,
        )
        .unwrap();
        let m = train_personalized(&ds, Strategy::Decoupled, &TrainConfig::default()).unwrap();
        let cells = m.decoupled_cells().unwrap();
        assert_eq!(cells[0].source, CellSource::Constant);
        assert_eq!(cells[1].source, CellSource::Trained);
        assert_eq!(cells[2].source, CellSource::Generic);
        assert_eq!(cells[2].model, *m.generic_linear());
        assert_eq!(m.flags().len(), 2);
        assert_eq!(m.predict_cell(&[100.0], Some(0)).label, 1);
    }

    #[test]
    fn json_round_trip() {
        let ds = noisy(4);
        for s in Strategy::ALL {
            let m = train_personalized(&ds, s, &TrainConfig::default()).unwrap();
            let back = PersonalizedModel::from_json(&m.to_json()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("OneHot".parse::<Strategy>().unwrap(), Strategy::OneHot);
        assert_eq!("zero-one-exhaustive".parse::<Loss>().unwrap(), Loss::ZeroOneExhaustive);
        assert!("forest".parse::<Strategy>().is_err());
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { gradient_tolerance: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { max_iterations: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig::reproduction().with_loss(Loss::Hinge).validate().is_err());
    }
}
