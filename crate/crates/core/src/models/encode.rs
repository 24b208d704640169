//! Group-attribute encodings.

use serde::{Deserialize, Serialize};

use crate::dataset::{GroupId, GroupSpace};
use crate::error::Result;

/// How group membership enters a single linear model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Features only.
    Plain,
    /// One indicator per non-reference value of each attribute.
    OneHot,
    /// One indicator per non-reference intersectional cell.
    Intersectional,
}

/// Description of the inputs a [`super::LinearModel`] consumes.
///
/// The first value of each attribute domain (and cell 0 for the
/// intersectional encoding) is the dropped reference level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub encoding: Encoding,
    pub feature_names: Vec<String>,
    pub indicator_names: Vec<String>,
    pub reference: Vec<String>,
}

impl FeatureMap {
    pub fn new(encoding: Encoding, feature_names: &[String], space: &GroupSpace) -> Self {
        let (indicator_names, reference) = match encoding {
            Encoding::Plain => (Vec::new(), Vec::new()),
            Encoding::OneHot => {
                let mut names = Vec::new();
                let mut reference = Vec::new();
                for attr in space.attributes() {
                    reference.push(format!("{}={}", attr.name, attr.values[0]));
                    for v in &attr.values[1..] {
                        names.push(format!("{}={}", attr.name, v));
                    }
                }
                (names, reference)
            }
            Encoding::Intersectional => {
                let names = (1..space.len()).map(|c| format!("[{}]", space.label_of(c))).collect();
                (names, vec![format!("[{}]", space.label_of(0))])
            }
        };
        Self { encoding, feature_names: feature_names.to_vec(), indicator_names, reference }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Encoded dimension `d'` (intercept excluded).
    pub fn dim(&self) -> usize {
        self.feature_names.len() + self.indicator_names.len()
    }

    /// Whether weight `j` of a `dim() + 1` vector carries the L2 penalty.
    /// Only raw feature weights are penalized.
    pub fn penalized(&self, j: usize) -> bool {
        j < self.feature_names.len()
    }
}

/// Number of indicator entries the encoding appends for `space`.
pub fn indicator_count(encoding: Encoding, space: &GroupSpace) -> usize {
    match encoding {
        Encoding::Plain => 0,
        Encoding::OneHot => space.attributes().iter().map(|a| a.values.len() - 1).sum(),
        Encoding::Intersectional => space.len() - 1,
    }
}

/// Append the indicator block for `g` to `out`.
pub(crate) fn push_indicators(out: &mut Vec<f64>, g: &GroupId, encoding: Encoding, space: &GroupSpace) {
    match encoding {
        Encoding::Plain => {}
        Encoding::OneHot => {
            for (v, attr) in g.0.iter().zip(space.attributes()) {
                for level in 1..attr.values.len() {
                    out.push(if *v == level { 1.0 } else { 0.0 });
                }
            }
        }
        Encoding::Intersectional => {
            let cell = space.index(g);
            for c in 1..space.len() {
                out.push(if c == cell { 1.0 } else { 0.0 });
            }
        }
    }
}

/// Encode `(x, g)` as `x` followed by the indicator block.
pub fn encode(x: &[f64], g: &GroupId, encoding: Encoding, space: &GroupSpace) -> Result<Vec<f64>> {
    space.validate(g)?;
    let mut out = Vec::with_capacity(x.len() + indicator_count(encoding, space));
    out.extend_from_slice(x);
    push_indicators(&mut out, g, encoding, space);
    Ok(out)
}
