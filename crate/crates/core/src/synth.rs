//! Deterministic generators for the worked failure-mode datasets, plus random
//! instances for power and null-calibration studies.
//!
//! Counting examples are materialized as literal row repetitions. Geometric
//! examples use frozen coordinates validated by exact 0-1 training.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroupAttribute, GroupSpace};
use crate::error::{Error, Result};
use crate::models::{Loss, Prediction, Predictor, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Misspecification,
    GroupSpecificEffects,
    FeatureSelection,
    SurrogateOutlier,
    SamplingError,
    LabelShift,
    PlantedViolation,
    ExchangeableNull,
}

impl SynthKind {
    pub const ALL: [SynthKind; 8] = [
        SynthKind::Misspecification,
        SynthKind::GroupSpecificEffects,
        SynthKind::FeatureSelection,
        SynthKind::SurrogateOutlier,
        SynthKind::SamplingError,
        SynthKind::LabelShift,
        SynthKind::PlantedViolation,
        SynthKind::ExchangeableNull,
    ];

    /// Seedless worked examples with a fixed expected table.
    pub const WORKED: [SynthKind; 6] = [
        SynthKind::Misspecification,
        SynthKind::GroupSpecificEffects,
        SynthKind::FeatureSelection,
        SynthKind::SurrogateOutlier,
        SynthKind::SamplingError,
        SynthKind::LabelShift,
    ];

    pub fn is_worked(self) -> bool {
        Self::WORKED.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Misspecification => "misspecification",
            SynthKind::GroupSpecificEffects => "group-specific-effects",
            SynthKind::FeatureSelection => "feature-selection",
            SynthKind::SurrogateOutlier => "surrogate-outlier",
            SynthKind::SamplingError => "sampling-error",
            SynthKind::LabelShift => "label-shift",
            SynthKind::PlantedViolation => "planted-violation",
            SynthKind::ExchangeableNull => "exchangeable-null",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Domain(format!("unknown dataset kind `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Parameters of the random generators. Ignored by the worked examples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomParams {
    pub m: usize,
    pub n_per_group: usize,
    pub gap: f64,
    pub seed: u64,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self { m: 4, n_per_group: 250, gap: -0.15, seed: 0 }
    }
}

/// A generator request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub params: RandomParams,
}

/// Feature-use restriction attached to a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConstraint {
    pub max_features: usize,
    pub candidates: Vec<String>,
}

/// Generator output.
#[derive(Clone, Debug)]
pub struct Synth {
    pub kind: SynthKind,
    pub data: Dataset,
    /// Deployment distribution, for the shift examples.
    pub truth: Option<Dataset>,
    pub constraint: Option<FeatureConstraint>,
}

impl SynthSpec {
    pub fn worked(kind: SynthKind) -> Self {
        Self { kind, params: RandomParams::default() }
    }

    pub fn generate(&self) -> Result<Synth> {
        let p = &self.params;
        let (data, truth, constraint) = match self.kind {
            SynthKind::Misspecification => (gen_misspecification(), None, None),
            SynthKind::GroupSpecificEffects => (gen_group_specific_effects(), None, None),
            SynthKind::FeatureSelection => {
                let (d, c) = gen_feature_selection();
                (d, None, Some(c))
            }
            SynthKind::SurrogateOutlier => (gen_surrogate_outlier(), None, None),
            SynthKind::SamplingError => {
                let (a, b) = gen_sampling_error();
                (a, Some(b), None)
            }
            SynthKind::LabelShift => {
                let (a, b) = gen_label_shift();
                (a, Some(b), None)
            }
            SynthKind::PlantedViolation => (gen_planted_violation(p.m, p.n_per_group, p.gap, p.seed)?, None, None),
            SynthKind::ExchangeableNull => (gen_exchangeable_null(p.m, p.n_per_group, p.seed)?, None, None),
        };
        Ok(Synth { kind: self.kind, data, truth, constraint })
    }
}

fn space(attrs: &[(&str, &[&str])]) -> GroupSpace {
    GroupSpace::new(attrs.iter().map(|(n, v)| GroupAttribute::new(*n, v)).collect()).expect("generator spaces are valid")
}

/// Accumulates rows cell by cell.
struct Builder {
    names: Vec<String>,
    space: GroupSpace,
    features: Vec<f64>,
    labels: Vec<i8>,
    cells: Vec<usize>,
}

impl Builder {
    fn new(names: &[&str], space: GroupSpace) -> Self {
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            space,
            features: Vec::new(),
            labels: Vec::new(),
            cells: Vec::new(),
        }
    }

    fn push(&mut self, x: &[f64], y: i8, cell: usize) {
        debug_assert_eq!(x.len(), self.names.len());
        self.features.extend_from_slice(x);
        self.labels.push(y);
        self.cells.push(cell);
    }

    /// `pos` positives followed by `neg` negatives at `x`.
    fn repeat(&mut self, x: &[f64], cell: usize, pos: usize, neg: usize) {
        for _ in 0..pos {
            self.push(x, 1, cell);
        }
        for _ in 0..neg {
            self.push(x, -1, cell);
        }
    }

    fn build(self) -> Dataset {
        Dataset::from_cells(self.names, self.features, self.labels, self.cells, self.space)
    }
}

/// `(n_pos, n_neg)` per cell of the misspecification example, in cell order
/// (female,young), (male,young), (female,old), (male,old).
pub const MISSPECIFICATION_TALLY: [(usize, usize); 4] = [(0, 24), (25, 0), (25, 0), (0, 27)];

/// Two binary group attributes with constant features.
///
/// Labels depend on the cell only, in an interaction pattern that an additive
/// group encoding cannot fit. Every row sits at the origin of a 2D feature
/// space, so linear models reduce to group-dependent constants.
pub fn gen_misspecification() -> Dataset {
    let mut b = Builder::new(
        &["x1", "x2"],
        space(&[("sex", &["female", "male"]), ("age", &["young", "old"])]),
    );
    for (cell, &(pos, neg)) in MISSPECIFICATION_TALLY.iter().enumerate() {
        b.repeat(&[0.0, 0.0], cell, pos, neg);
    }
    b.build()
}

/// Frozen `(x1, x2, label, cell)` rows of the group-specific-effects example.
///
/// Groups A and C share a slope along `x1` with different intercepts; group B
/// runs the other way along `x1`.
pub const GROUP_SPECIFIC_EFFECTS_POINTS: [(f64, f64, i8, usize); 6] = [
    (3.0, 0.0, 1, 0),
    (0.0, 0.0, -1, 0),
    (1.0, 1.0, 1, 1),
    (3.0, 1.0, -1, 1),
    (2.0, 1.0, 1, 2),
    (1.0, 1.0, -1, 2),
];

pub fn gen_group_specific_effects() -> Dataset {
    let mut b = Builder::new(&["x1", "x2"], space(&[("group", &["A", "B", "C"])]));
    for &(x1, x2, y, c) in &GROUP_SPECIFIC_EFFECTS_POINTS {
        b.push(&[x1, x2], y, c);
    }
    b.build()
}

/// `(cell, x1, x2, n_pos, n_neg)` rows of the feature-selection table.
pub const FEATURE_SELECTION_TABLE: [(usize, f64, f64, usize, usize); 4] = [
    (0, 0.0, 0.0, 0, 30),
    (0, 1.0, 0.0, 0, 20),
    (1, 0.0, 0.0, 25, 0),
    (1, 1.0, 0.0, 15, 0),
];

/// Two groups with binary features `x1, x2`; a model may use at most one of them.
pub fn gen_feature_selection() -> (Dataset, FeatureConstraint) {
    let mut b = Builder::new(&["x1", "x2"], space(&[("group", &["A", "B"])]));
    for &(c, x1, x2, pos, neg) in &FEATURE_SELECTION_TABLE {
        b.repeat(&[x1, x2], c, pos, neg);
    }
    (b.build(), FeatureConstraint { max_features: 1, candidates: vec!["x1".into(), "x2".into()] })
}

/// Frozen `(x1, x2, label, cell)` rows of the surrogate-loss example. The last
/// row is the group-B outlier.
pub const SURROGATE_OUTLIER_POINTS: [(f64, f64, i8, usize); 21] = [
    (1.0, -3.0, 1, 0),
    (-1.0, -2.0, -1, 0),
    (-2.0, -1.0, 1, 0),
    (-3.0, 2.0, -1, 0),
    (-2.0, -1.0, 1, 0),
    (-2.0, 1.0, -1, 0),
    (4.0, -2.0, 1, 0),
    (-2.0, -1.0, -1, 0),
    (-2.0, -2.0, 1, 0),
    (-4.0, -2.0, -1, 0),
    (-2.0, -1.0, 1, 1),
    (-2.0, 2.0, -1, 1),
    (1.0, 4.0, 1, 1),
    (-3.0, 1.0, -1, 1),
    (1.0, 4.0, 1, 1),
    (-4.0, 4.0, -1, 1),
    (1.0, 3.0, 1, 1),
    (0.0, 2.0, -1, 1),
    (3.0, -1.0, 1, 1),
    (-3.0, 4.0, -1, 1),
    (14.0, 14.0, -1, 1),
];

/// Hinge-loss settings the surrogate-loss example is frozen against.
pub fn surrogate_hinge_config() -> TrainConfig {
    TrainConfig { max_iterations: 200_000, ..TrainConfig::default().with_loss(Loss::Hinge).with_l2(1e-2) }
}

pub fn gen_surrogate_outlier() -> Dataset {
    surrogate_rows(&SURROGATE_OUTLIER_POINTS)
}

/// The surrogate-loss example with its outlier removed.
pub fn gen_surrogate_outlier_clean() -> Dataset {
    surrogate_rows(&SURROGATE_OUTLIER_POINTS[..SURROGATE_OUTLIER_POINTS.len() - 1])
}

fn surrogate_rows(points: &[(f64, f64, i8, usize)]) -> Dataset {
    let mut b = Builder::new(&["x1", "x2"], space(&[("group", &["A", "B"])]));
    for &(x1, x2, y, c) in points {
        b.push(&[x1, x2], y, c);
    }
    b.build()
}

fn binary_pair_space() -> GroupSpace {
    space(&[("g1", &["0", "1"]), ("g2", &["0", "1"])])
}

fn tally_dataset(tally: &[(usize, usize)]) -> Dataset {
    let mut b = Builder::new(&["x"], binary_pair_space());
    for (cell, &(pos, neg)) in tally.iter().enumerate() {
        b.repeat(&[0.0], cell, pos, neg);
    }
    b.build()
}

/// Training and deployment tallies of the small-sample example, cells (0,0), (1,0), (0,1), (1,1).
pub const SAMPLING_ERROR_TRAIN: [(usize, usize); 4] = [(65, 60), (60, 65), (60, 65), (70, 55)];
pub const SAMPLING_ERROR_TRUTH: [(usize, usize); 4] = [(130, 120), (120, 130), (130, 120), (140, 110)];

/// Training and deployment tallies of the label-shift example.
pub const LABEL_SHIFT_TRAIN: [(usize, usize); 4] = [(20, 0), (5, 25), (5, 25), (20, 0)];
pub const LABEL_SHIFT_TRUTH: [(usize, usize); 4] = [(20, 0), (5, 25), (30, 20), (20, 0)];

/// A small training sample and its deployment distribution.
pub fn gen_sampling_error() -> (Dataset, Dataset) {
    (tally_dataset(&SAMPLING_ERROR_TRAIN), tally_dataset(&SAMPLING_ERROR_TRUTH))
}

/// Training data and a deployment distribution whose labels have shifted in one cell.
pub fn gen_label_shift() -> (Dataset, Dataset) {
    (tally_dataset(&LABEL_SHIFT_TRAIN), tally_dataset(&LABEL_SHIFT_TRUTH))
}

/// Group space of the random generators: a 2x2 product for `m = 4`, one
/// attribute with `m` values otherwise.
pub fn random_space(m: usize) -> Result<GroupSpace> {
    if m < 2 {
        return Err(Error::Precondition(format!("need at least 2 groups, got {m}")));
    }
    if m == 4 {
        return Ok(space(&[("a", &["0", "1"]), ("b", &["0", "1"])]));
    }
    let values: Vec<String> = (0..m).map(|i| i.to_string()).collect();
    let refs: Vec<&str> = values.iter().map(String::as_str).collect();
    Ok(space(&[("group", &refs)]))
}

/// Cell whose rationality gain is planted.
pub const PLANTED_CELL: usize = 0;

/// Positive-label rate of each cell in the planted design.
///
/// The planted cell gets `1/2 + gap/2`, the two cells sharing one attribute
/// value with it get `1/2 - gap/2`, and the opposite cell gets `1/2 + gap`
/// when `gap < 0` (else `1/2`). The fitted additive model then predicts `+1`
/// in the planted cell while the generic model predicts `-1` everywhere, so the
/// planted cell's population rationality gain in error rate is `gap`.
pub fn planted_rates(gap: f64) -> [f64; 4] {
    let opposite = if gap < 0.0 { 1.0 } else { 0.0 };
    [0.5 + 0.5 * gap, 0.5 - 0.5 * gap, 0.5 - 0.5 * gap, 0.5 + opposite * gap]
}

/// Random instance with a planted rationality gain of `gap` in cell 0 of a 2x2
/// space. Two standard-normal features are independent of labels and groups.
pub fn gen_planted_violation(m: usize, n_per_group: usize, gap: f64, seed: u64) -> Result<Dataset> {
    if m != 4 {
        return Err(Error::Precondition(format!("planted design needs m = 4 groups, got {m}")));
    }
    if !(gap > -0.5 && gap < 0.5) {
        return Err(Error::Domain(format!("gap must lie in (-0.5, 0.5), got {gap}")));
    }
    Ok(random_rows(random_space(m)?, &planted_rates(gap), n_per_group, seed))
}

/// Every group drawn from the same law: labels are fair coin flips and the two
/// features are independent standard normals. No predictor beats error 1/2.
pub fn gen_exchangeable_null(m: usize, n_per_group: usize, seed: u64) -> Result<Dataset> {
    let space = random_space(m)?;
    Ok(random_rows(space, &vec![0.5; m], n_per_group, seed))
}

fn random_rows(space: GroupSpace, rates: &[f64], n_per_group: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder::new(&["x1", "x2"], space);
    for (cell, &p) in rates.iter().enumerate() {
        for _ in 0..n_per_group {
            let x1: f64 = rng.sample(StandardNormal);
            let x2: f64 = rng.sample(StandardNormal);
            let y = if rng.random::<f64>() < p { 1 } else { -1 };
            b.push(&[x1, x2], y, cell);
        }
    }
    b.build()
}

/// A predictor given as lookup tables over binary features.
///
/// The key of a row is `sum_j x[inputs[j]] * 2^j`. Scores are 1 or 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TablePredictor {
    space: GroupSpace,
    inputs: Vec<usize>,
    generic: Vec<i8>,
    personalized: Vec<Vec<i8>>,
}

impl TablePredictor {
    pub fn new(space: GroupSpace, inputs: Vec<usize>, generic: Vec<i8>, personalized: Vec<Vec<i8>>) -> Result<Self> {
        let keys = 1usize << inputs.len();
        if generic.len() != keys || personalized.len() != space.len() || personalized.iter().any(|t| t.len() != keys) {
            return Err(Error::Schema(format!(
                "lookup tables need {keys} entries per group and one table per cell ({})",
                space.len()
            )));
        }
        Ok(Self { space, inputs, generic, personalized })
    }

    /// Predictions that depend on the reported group only.
    pub fn per_group(space: GroupSpace, generic: i8, personalized: Vec<i8>) -> Result<Self> {
        Self::new(space, Vec::new(), vec![generic], personalized.into_iter().map(|v| vec![v]).collect())
    }

    fn key(&self, x: &[f64]) -> usize {
        self.inputs.iter().enumerate().map(|(j, &f)| usize::from(x[f] != 0.0) << j).sum()
    }
}

impl Predictor for TablePredictor {
    fn space(&self) -> &GroupSpace {
        &self.space
    }

    fn predict_cell(&self, x: &[f64], reported: Option<usize>) -> Prediction {
        let k = self.key(x);
        let label = match reported {
            None => self.generic[k],
            Some(c) => self.personalized[c][k],
        };
        Prediction { score: if label > 0 { 1.0 } else { 0.0 }, label }
    }
}

/// Best one-feature models of the feature-selection example: `(h1, h2)`.
///
/// Both share the generic model that predicts `-1` everywhere. `h1` uses `x1`
/// (A: `+1` iff `x1 = 1`; B: `+1` iff `x1 = 0`). `h2` uses `x2` and predicts
/// `+1` iff `x2 = 0` for both groups.
pub fn feature_selection_models() -> (TablePredictor, TablePredictor) {
    let (data, _) = gen_feature_selection();
    let s = data.space().clone();
    let h1 = TablePredictor::new(s.clone(), vec![0], vec![-1, -1], vec![vec![-1, 1], vec![1, -1]]).expect("valid tables");
    let h2 = TablePredictor::new(s, vec![1], vec![-1, -1], vec![vec![1, -1], vec![1, -1]]).expect("valid tables");
    (h1, h2)
}

/// Models of the shift examples: generic `+1` everywhere; personalized `+1`
/// for cells (0,0) and (1,1), `-1` for (1,0) and (0,1).
pub fn shift_models() -> TablePredictor {
    TablePredictor::per_group(binary_pair_space(), 1, vec![1, -1, -1, 1]).expect("valid tables")
}

/// Number of misclassified rows of `cell` when they report `reported`.
pub fn count_errors(model: &dyn Predictor, data: &Dataset, cell: usize, reported: Option<usize>) -> usize {
    data.rows_in_cell(cell)
        .into_iter()
        .filter(|&i| model.predict_cell(data.row(i), reported).label != data.label(i))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tally;

    #[test]
    fn kinds_round_trip_names() {
        for k in SynthKind::ALL {
            assert_eq!(k.name().parse::<SynthKind>().unwrap(), k);
        }
        assert!("nope".parse::<SynthKind>().is_err());
    }

    #[test]
    fn worked_tallies() {
        assert_eq!(tally(&gen_misspecification()).pairs(), MISSPECIFICATION_TALLY.to_vec());
        let (fs, c) = gen_feature_selection();
        assert_eq!(fs.n(), 90);
        assert_eq!(c.max_features, 1);
        let (tr, truth) = gen_label_shift();
        assert_eq!(tally(&tr).pairs(), LABEL_SHIFT_TRAIN.to_vec());
        assert_eq!(tally(&truth).pairs(), LABEL_SHIFT_TRUTH.to_vec());
        assert_eq!(gen_surrogate_outlier().n(), gen_surrogate_outlier_clean().n() + 1);
    }

    #[test]
    fn random_generators_are_seeded() {
        let a = gen_exchangeable_null(4, 50, 3).unwrap();
        assert_eq!(a, gen_exchangeable_null(4, 50, 3).unwrap());
        assert_ne!(a, gen_exchangeable_null(4, 50, 4).unwrap());
        assert_eq!(gen_planted_violation(4, 50, 0.0, 3).unwrap(), a);
        assert!(gen_planted_violation(4, 50, 0.5, 3).is_err());
        assert!(gen_planted_violation(6, 50, -0.1, 3).is_err());
        assert_eq!(gen_exchangeable_null(3, 10, 0).unwrap().space().len(), 3);
    }

    #[test]
    fn planted_rates_shape() {
        let r = planted_rates(-0.15);
        assert!((r[0] - 0.425).abs() < 1e-12 && (r[3] - 0.35).abs() < 1e-12);
        assert_eq!(planted_rates(0.0), [0.5; 4]);
    }

    #[test]
    fn table_predictor_keys() {
        let (h1, h2) = feature_selection_models();
        assert_eq!(h1.predict_cell(&[1.0, 0.0], Some(0)).label, 1);
        assert_eq!(h1.predict_cell(&[1.0, 0.0], Some(1)).label, -1);
        assert_eq!(h2.predict_cell(&[1.0, 1.0], Some(1)).label, -1);
        assert_eq!(h2.predict_cell(&[0.0, 0.0], None).label, -1);
        assert!(TablePredictor::new(h1.space().clone(), vec![0], vec![1], vec![]).is_err());
    }
}
