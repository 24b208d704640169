//! Recompute the worked example tables and diff them against embedded goldens.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{tally, Dataset};
use crate::error::{Error, Result};
use crate::models::{train_personalized, train_zero_one_exhaustive, Predictor, Strategy};
use crate::synth::{self, count_errors, SynthKind};

/// Integer cells keyed `group/column`, or `split/group/column` for the shift examples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub cells: BTreeMap<String, i64>,
}

impl Table {
    fn new(kind: SynthKind) -> Self {
        Self { name: kind.name().to_string(), cells: BTreeMap::new() }
    }

    fn set(&mut self, key: impl Into<String>, v: i64) {
        self.cells.insert(key.into(), v);
    }

    pub fn get(&self, key: &str) -> Option<i64> {
        self.cells.get(key).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub table: String,
    pub cell: String,
    pub expected: Option<i64>,
    pub actual: Option<i64>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<i64>| v.map_or("missing".to_string(), |v| v.to_string());
        write!(f, "{}: cell `{}` expected {} but got {}", self.table, self.cell, show(self.expected), show(self.actual))
    }
}

/// Regenerated tables plus any differences from the goldens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub tables: Vec<Table>,
    pub mismatches: Vec<Mismatch>,
}

impl Bundle {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serialization is infallible")
    }
}

fn golden_text(kind: SynthKind) -> Option<&'static str> {
    Some(match kind {
        SynthKind::Misspecification => include_str!("../golden/misspecification.json"),
        SynthKind::GroupSpecificEffects => include_str!("../golden/group-specific-effects.json"),
        SynthKind::FeatureSelection => include_str!("../golden/feature-selection.json"),
        SynthKind::SurrogateOutlier => include_str!("../golden/surrogate-outlier.json"),
        SynthKind::SamplingError => include_str!("../golden/sampling-error.json"),
        SynthKind::LabelShift => include_str!("../golden/label-shift.json"),
        SynthKind::PlantedViolation | SynthKind::ExchangeableNull => return None,
    })
}

/// The embedded expected table of a worked example.
pub fn golden(kind: SynthKind) -> Result<Table> {
    let text = golden_text(kind).ok_or_else(|| Error::Precondition(format!("{kind} has no fixed expected table")))?;
    serde_json::from_str(text).map_err(|e| Error::Schema(format!("golden table for {kind}: {e}")))
}

/// Cells that differ between `expected` and `actual`, in key order.
pub fn diff(expected: &Table, actual: &Table) -> Vec<Mismatch> {
    let mut keys: Vec<&String> = expected.cells.keys().chain(actual.cells.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|k| {
            let (e, a) = (expected.get(k), actual.get(k));
            (e != a).then(|| Mismatch { table: expected.name.clone(), cell: k.clone(), expected: e, actual: a })
        })
        .collect()
}

fn tally_cells(t: &mut Table, data: &Dataset, prefix: &str) {
    let tal = tally(data);
    let (mut pos, mut neg) = (0, 0);
    for (c, cell) in tal.cells().iter().enumerate() {
        let g = data.space().label_of(c);
        t.set(format!("{prefix}{g}/n_pos"), cell.positives as i64);
        t.set(format!("{prefix}{g}/n_neg"), cell.negatives as i64);
        pos += cell.positives as i64;
        neg += cell.negatives as i64;
    }
    t.set(format!("{prefix}total/n_pos"), pos);
    t.set(format!("{prefix}total/n_neg"), neg);
}

/// Per-group error counts of `model` reporting truthfully (`truthful`) or withholding,
/// plus the total under column `name`.
fn error_cells(t: &mut Table, model: &dyn Predictor, data: &Dataset, prefix: &str, name: &str, truthful: bool) -> Vec<i64> {
    let m = data.space().len();
    let errs: Vec<i64> =
        (0..m).map(|c| count_errors(model, data, c, truthful.then_some(c)) as i64).collect();
    for (c, e) in errs.iter().enumerate() {
        t.set(format!("{prefix}{}/{name}", data.space().label_of(c)), *e);
    }
    t.set(format!("{prefix}total/{name}"), errs.iter().sum());
    errs
}

fn gain_cells(t: &mut Table, data: &Dataset, prefix: &str, name: &str, generic: &[i64], personalized: &[i64]) {
    for c in 0..data.space().len() {
        t.set(format!("{prefix}{}/{name}", data.space().label_of(c)), generic[c] - personalized[c]);
    }
    t.set(format!("{prefix}total/{name}"), generic.iter().sum::<i64>() - personalized.iter().sum::<i64>());
}

/// Label each group receives at the first row of that group.
fn label_cells(t: &mut Table, model: &dyn Predictor, data: &Dataset, name: &str, truthful: bool) {
    for (c, rows) in data.rows_by_cell().iter().enumerate() {
        if let Some(&i) = rows.first() {
            let p = model.predict_cell(data.row(i), truthful.then_some(c));
            t.set(format!("{}/{name}", data.space().label_of(c)), p.label as i64);
        }
    }
}

fn misspecification() -> Result<Table> {
    let data = synth::gen_misspecification();
    let model = train_zero_one_exhaustive(&data, Strategy::OneHot)?;
    let mut t = Table::new(SynthKind::Misspecification);
    tally_cells(&mut t, &data, "");
    label_cells(&mut t, &model, &data, "personalized_label", true);
    label_cells(&mut t, &model, &data, "generic_label", false);
    let p = error_cells(&mut t, &model, &data, "", "personalized_errors", true);
    let g = error_cells(&mut t, &model, &data, "", "generic_errors", false);
    gain_cells(&mut t, &data, "", "gain", &g, &p);
    Ok(t)
}

fn group_specific_effects() -> Result<Table> {
    let data = synth::gen_group_specific_effects();
    let onehot = train_zero_one_exhaustive(&data, Strategy::OneHot)?;
    let decoupled = train_zero_one_exhaustive(&data, Strategy::Decoupled)?;
    let mut t = Table::new(SynthKind::GroupSpecificEffects);
    tally_cells(&mut t, &data, "");
    let g = error_cells(&mut t, &onehot, &data, "", "generic_errors", false);
    let p = error_cells(&mut t, &onehot, &data, "", "onehot_errors", true);
    error_cells(&mut t, &decoupled, &data, "", "decoupled_errors", true);
    gain_cells(&mut t, &data, "", "onehot_gain", &g, &p);
    Ok(t)
}

fn feature_selection() -> Result<Table> {
    let (data, _) = synth::gen_feature_selection();
    let (h1, h2) = synth::feature_selection_models();
    let mut t = Table::new(SynthKind::FeatureSelection);
    tally_cells(&mut t, &data, "");
    let h0 = error_cells(&mut t, &h1, &data, "", "h0_errors", false);
    let e1 = error_cells(&mut t, &h1, &data, "", "h1_errors", true);
    let e2 = error_cells(&mut t, &h2, &data, "", "h2_errors", true);
    gain_cells(&mut t, &data, "", "h1_gain", &h0, &e1);
    gain_cells(&mut t, &data, "", "h2_gain", &h0, &e2);
    Ok(t)
}

fn shift(kind: SynthKind, train: &Dataset, truth: &Dataset) -> Table {
    let model = synth::shift_models();
    let mut t = Table::new(kind);
    label_cells(&mut t, &model, train, "h0_label", false);
    label_cells(&mut t, &model, train, "hg_label", true);
    for (prefix, data) in [("train/", train), ("truth/", truth)] {
        tally_cells(&mut t, data, prefix);
        let g = error_cells(&mut t, &model, data, prefix, "h0_errors", false);
        let p = error_cells(&mut t, &model, data, prefix, "hg_errors", true);
        gain_cells(&mut t, data, prefix, "gain", &g, &p);
    }
    t
}

fn surrogate_outlier() -> Result<Table> {
    let data = synth::gen_surrogate_outlier();
    let cfg = synth::surrogate_hinge_config();
    let hinge = train_personalized(&data, Strategy::OneHot, &cfg)?;
    let zero_one = train_zero_one_exhaustive(&data, Strategy::OneHot)?;
    let mut t = Table::new(SynthKind::SurrogateOutlier);
    tally_cells(&mut t, &data, "");
    let hg = error_cells(&mut t, &hinge, &data, "", "hinge_generic_errors", false);
    let hp = error_cells(&mut t, &hinge, &data, "", "hinge_personalized_errors", true);
    let zg = error_cells(&mut t, &zero_one, &data, "", "zero_one_generic_errors", false);
    let zp = error_cells(&mut t, &zero_one, &data, "", "zero_one_personalized_errors", true);
    gain_cells(&mut t, &data, "", "hinge_gain", &hg, &hp);
    gain_cells(&mut t, &data, "", "zero_one_gain", &zg, &zp);

    let clean = synth::gen_surrogate_outlier_clean();
    let hinge = train_personalized(&clean, Strategy::OneHot, &cfg)?;
    let zero_one = train_zero_one_exhaustive(&clean, Strategy::OneHot)?;
    let disagree = (0..clean.n())
        .filter(|&i| {
            [Some(clean.cell(i)), None]
                .into_iter()
                .any(|r| hinge.predict_cell(clean.row(i), r).label != zero_one.predict_cell(clean.row(i), r).label)
        })
        .count();
    t.set("clean/label_disagreements", disagree as i64);
    Ok(t)
}

/// Recompute the table of one worked example.
pub fn compute(kind: SynthKind) -> Result<Table> {
    match kind {
        SynthKind::Misspecification => misspecification(),
        SynthKind::GroupSpecificEffects => group_specific_effects(),
        SynthKind::FeatureSelection => feature_selection(),
        SynthKind::SurrogateOutlier => surrogate_outlier(),
        SynthKind::SamplingError => {
            let (a, b) = synth::gen_sampling_error();
            Ok(shift(kind, &a, &b))
        }
        SynthKind::LabelShift => {
            let (a, b) = synth::gen_label_shift();
            Ok(shift(kind, &a, &b))
        }
        SynthKind::PlantedViolation | SynthKind::ExchangeableNull => {
            Err(Error::Precondition(format!("{kind} has no fixed expected table")))
        }
    }
}

/// Recompute every worked example and diff each against its golden.
pub fn replicate_all() -> Result<Bundle> {
    let mut tables = Vec::new();
    let mut mismatches = Vec::new();
    for kind in SynthKind::WORKED {
        let actual = compute(kind)?;
        mismatches.extend(diff(&golden(kind)?, &actual));
        tables.push(actual);
    }
    Ok(Bundle { tables, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_names_cells() {
        let mut a = Table::new(SynthKind::LabelShift);
        a.set("x/y", 1);
        let mut b = a.clone();
        assert!(diff(&a, &b).is_empty());
        b.set("x/y", 2);
        b.set("z", 0);
        let d = diff(&a, &b);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].cell, "x/y");
        assert_eq!(d[1].expected, None);
        assert!(d[0].to_string().contains("`x/y`"));
    }

    #[test]
    fn goldens_parse() {
        for k in SynthKind::WORKED {
            assert_eq!(golden(k).unwrap().name, k.name());
        }
        assert!(golden(SynthKind::ExchangeableNull).is_err());
    }
}
