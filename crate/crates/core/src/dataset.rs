//! Tabular classification data with categorical group attributes.
//!
//! A [`Dataset`] holds an `n x d` feature matrix, labels in `{-1, +1}` and one
//! intersectional group per row. Groups live in a [`GroupSpace`], the product
//! of every attribute's value domain. Cells are indexed in mixed radix with
//! the *first* attribute varying fastest, so for `sex x age` the order is
//! `(female,young), (male,young), (female,old), (male,old)`.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prefix marking group columns in CSV headers.
pub const GROUP_PREFIX: &str = "g:";
/// Default label column name.
pub const DEFAULT_LABEL: &str = "y";

/// One categorical attribute and its ordered value domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAttribute {
    pub name: String,
    pub values: Vec<String>,
}

impl GroupAttribute {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }
}

/// The product space of all group attributes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpace {
    attributes: Vec<GroupAttribute>,
}

/// An intersectional group, stored as one value index per attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupId(pub Vec<usize>);

impl GroupSpace {
    pub fn new(attributes: Vec<GroupAttribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("at least one group attribute is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate group attribute `{}`", attr.name)));
            }
            if attr.values.len() < 2 {
                return Err(Error::Domain(format!(
                    "attribute `{}` needs at least two values, found {}",
                    attr.name,
                    attr.values.len()
                )));
            }
            let mut vals = std::collections::HashSet::new();
            for v in &attr.values {
                if !vals.insert(v.as_str()) {
                    return Err(Error::Domain(format!(
                        "attribute `{}` lists value `{v}` twice",
                        attr.name
                    )));
                }
            }
        }
        Ok(Self { attributes })
    }

    pub fn attributes(&self) -> &[GroupAttribute] {
        &self.attributes
    }

    /// Number of intersectional cells `m`.
    pub fn len(&self) -> usize {
        self.attributes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn validate(&self, g: &GroupId) -> Result<()> {
        if g.0.len() != self.attributes.len() {
            return Err(Error::Domain(format!(
                "group has {} values but the space has {} attributes",
                g.0.len(),
                self.attributes.len()
            )));
        }
        for (v, attr) in g.0.iter().zip(&self.attributes) {
            if *v >= attr.values.len() {
                return Err(Error::Domain(format!(
                    "value index {v} outside the domain of `{}`",
                    attr.name
                )));
            }
        }
        Ok(())
    }

    /// Cell index of a (validated) group.
    pub fn index(&self, g: &GroupId) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (v, attr) in g.0.iter().zip(&self.attributes) {
            idx += v * stride;
            stride *= attr.values.len();
        }
        idx
    }

    pub fn group(&self, mut index: usize) -> GroupId {
        let mut values = Vec::with_capacity(self.attributes.len());
        for attr in &self.attributes {
            values.push(index % attr.values.len());
            index /= attr.values.len();
        }
        GroupId(values)
    }

    /// All cells in index order.
    pub fn groups(&self) -> Vec<GroupId> {
        (0..self.len()).map(|i| self.group(i)).collect()
    }

    /// Human-readable label, e.g. `female,young`.
    pub fn label(&self, g: &GroupId) -> String {
        g.0.iter()
            .zip(&self.attributes)
            .map(|(v, a)| a.values[*v].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn label_of(&self, index: usize) -> String {
        self.label(&self.group(index))
    }

    /// Resolve a group from attribute values given in attribute order.
    pub fn lookup(&self, values: &[&str]) -> Result<GroupId> {
        if values.len() != self.attributes.len() {
            return Err(Error::Domain(format!(
                "expected {} attribute values, got {}",
                self.attributes.len(),
                values.len()
            )));
        }
        let mut ids = Vec::with_capacity(values.len());
        for (v, attr) in values.iter().zip(&self.attributes) {
            let pos = attr
                .values
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| Error::Domain(format!("value `{v}` not in domain of `{}`", attr.name)))?;
            ids.push(pos);
        }
        Ok(GroupId(ids))
    }

    /// Parse a comma-separated label as produced by [`GroupSpace::label`].
    pub fn parse_label(&self, label: &str) -> Result<GroupId> {
        let parts: Vec<&str> = label.split(',').map(str::trim).collect();
        self.lookup(&parts)
    }
}

/// Per-cell label counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub positives: usize,
    pub negatives: usize,
}

impl CellCount {
    pub fn total(&self) -> usize {
        self.positives + self.negatives
    }
}

/// Exact label counts for every intersectional cell, zeros included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupTally {
    space: GroupSpace,
    cells: Vec<CellCount>,
}

#[derive(Serialize)]
struct TallyRow<'a> {
    group: String,
    values: &'a [usize],
    n: usize,
    n_pos: usize,
    n_neg: usize,
}

impl GroupTally {
    pub fn space(&self) -> &GroupSpace {
        &self.space
    }

    pub fn cells(&self) -> &[CellCount] {
        &self.cells
    }

    pub fn get(&self, g: &GroupId) -> CellCount {
        self.cells[self.space.index(g)]
    }

    /// `(n_pos, n_neg)` pairs in cell order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.cells.iter().map(|c| (c.positives, c.negatives)).collect()
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(CellCount::total).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let groups = self.space.groups();
        let rows: Vec<_> = groups
            .iter()
            .zip(&self.cells)
            .map(|(g, c)| TallyRow {
                group: self.space.label(g),
                values: &g.0,
                n: c.total(),
                n_pos: c.positives,
                n_neg: c.negatives,
            })
            .collect();
        serde_json::json!({ "space": self.space, "cells": rows })
    }
}

/// Validated tabular data. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: Vec<f64>,
    labels: Vec<i8>,
    cells: Vec<usize>,
    space: GroupSpace,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<i8>,
        groups: Vec<GroupId>,
        space: GroupSpace,
    ) -> Result<Self> {
        let n = rows.len();
        if labels.len() != n || groups.len() != n {
            return Err(Error::Schema(format!(
                "row count mismatch: {n} feature rows, {} labels, {} groups",
                labels.len(),
                groups.len()
            )));
        }
        let d = feature_names.len();
        let mut features = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Schema(format!("row {i} has {} features, expected {d}", row.len())));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: i,
                    column: feature_names[j].clone(),
                    message: "feature value is not finite".into(),
                });
            }
            features.extend_from_slice(row);
        }
        if let Some(i) = labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(Error::Domain(format!("label at row {i} is {} (expected -1 or +1)", labels[i])));
        }
        let mut cells = Vec::with_capacity(n);
        for g in &groups {
            space.validate(g)?;
            cells.push(space.index(g));
        }
        Ok(Self { feature_names, features, labels, cells, space })
    }

    /// Build from cell indices directly; used by generators that already hold them.
    pub(crate) fn from_cells(
        feature_names: Vec<String>,
        features: Vec<f64>,
        labels: Vec<i8>,
        cells: Vec<usize>,
        space: GroupSpace,
    ) -> Self {
        debug_assert_eq!(features.len(), labels.len() * feature_names.len());
        debug_assert_eq!(labels.len(), cells.len());
        Self { feature_names, features, labels, cells, space }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn space(&self) -> &GroupSpace {
        &self.space
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.d();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Cell index of row `i`.
    pub fn cell(&self, i: usize) -> usize {
        self.cells[i]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn group(&self, i: usize) -> GroupId {
        self.space.group(self.cells[i])
    }

    /// Row indices belonging to `cell`, in row order.
    pub fn rows_in_cell(&self, cell: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.cells[i] == cell).collect()
    }

    /// Row indices grouped by cell.
    pub fn rows_by_cell(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.space.len()];
        for (i, &c) in self.cells.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// A new dataset holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let d = self.d();
        let mut features = Vec::with_capacity(rows.len() * d);
        let mut labels = Vec::with_capacity(rows.len());
        let mut cells = Vec::with_capacity(rows.len());
        for &i in rows {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            cells.push(self.cells[i]);
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            features,
            labels,
            cells,
            space: self.space.clone(),
        }
    }

    pub fn has_both_labels(&self) -> bool {
        self.labels.contains(&1) && self.labels.contains(&-1)
    }
}

/// Count labels per intersectional cell.
pub fn tally(ds: &Dataset) -> GroupTally {
    let mut cells = vec![CellCount::default(); ds.space.len()];
    for (i, &c) in ds.cells.iter().enumerate() {
        if ds.labels[i] == 1 {
            cells[c].positives += 1;
        } else {
            cells[c].negatives += 1;
        }
    }
    GroupTally { space: ds.space.clone(), cells }
}

/// Column roles for CSV ingestion.
#[derive(Clone, Debug, Default)]
pub struct CsvSchema {
    /// Label column; defaults to `y`.
    pub label: Option<String>,
    /// Explicit group columns. When absent, columns prefixed `g:` are groups.
    pub groups: Option<Vec<String>>,
    /// Declared domains, keyed by attribute name. Allows empty cells.
    pub domains: Option<Vec<GroupAttribute>>,
}

impl CsvSchema {
    pub fn with_domains(space: &GroupSpace) -> Self {
        Self { domains: Some(space.attributes().to_vec()), ..Self::default() }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_name = schema.label.clone().unwrap_or_else(|| DEFAULT_LABEL.to_string());
    let label_col = header
        .iter()
        .position(|h| *h == label_name)
        .ok_or_else(|| Error::Schema(format!("missing label column `{label_name}`")))?;

    let group_cols: Vec<(usize, String)> = match &schema.groups {
        Some(names) => names
            .iter()
            .map(|name| {
                header
                    .iter()
                    .position(|h| h == name || h.strip_prefix(GROUP_PREFIX) == Some(name.as_str()))
                    .map(|i| (i, name.strip_prefix(GROUP_PREFIX).unwrap_or(name).to_string()))
                    .ok_or_else(|| Error::Schema(format!("missing group column `{name}`")))
            })
            .collect::<Result<_>>()?,
        None => header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.strip_prefix(GROUP_PREFIX).map(|n| (i, n.to_string())))
            .collect(),
    };
    if group_cols.is_empty() {
        return Err(Error::Schema("no group columns (prefix headers with `g:`)".into()));
    }
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|i| *i != label_col && !group_cols.iter().any(|(g, _)| g == i))
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }

    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    let mut raw_groups: Vec<Vec<String>> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("").trim();
            if cell.is_empty() {
                return Err(Error::Parse { row: r, column: header[c].clone(), message: "missing value".into() });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: r,
                column: header[c].clone(),
                message: format!("`{cell}` is not numeric"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { row: r, column: header[c].clone(), message: "value is not finite".into() });
            }
            row.push(v);
        }
        rows.push(row);
        let lab = record.get(label_col).unwrap_or("").trim();
        let y: f64 = lab.parse().map_err(|_| Error::Parse {
            row: r,
            column: label_name.clone(),
            message: format!("label `{lab}` is not numeric"),
        })?;
        raw_labels.push((r, y));
        raw_groups.push(
            group_cols
                .iter()
                .map(|(c, _)| record.get(*c).unwrap_or("").trim().to_string())
                .collect(),
        );
    }

    let labels = map_labels(&raw_labels, &label_name)?;

    let attributes: Vec<GroupAttribute> = match &schema.domains {
        Some(declared) => group_cols
            .iter()
            .map(|(_, name)| {
                declared
                    .iter()
                    .find(|a| &a.name == name)
                    .cloned()
                    .ok_or_else(|| Error::Schema(format!("no declared domain for group column `{name}`")))
            })
            .collect::<Result<_>>()?,
        None => group_cols
            .iter()
            .enumerate()
            .map(|(j, (_, name))| {
                let mut values: Vec<String> = Vec::new();
                for g in &raw_groups {
                    if !values.contains(&g[j]) {
                        values.push(g[j].clone());
                    }
                }
                GroupAttribute { name: name.clone(), values }
            })
            .collect(),
    };
    let space = GroupSpace::new(attributes)?;
    let mut groups = Vec::with_capacity(raw_groups.len());
    for (r, g) in raw_groups.iter().enumerate() {
        let refs: Vec<&str> = g.iter().map(String::as_str).collect();
        let id = space
            .lookup(&refs)
            .map_err(|e| Error::Domain(format!("data row {r}: {e}")))?;
        groups.push(id);
    }
    let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    Dataset::new(names, rows, labels, groups, space)
}

fn map_labels(raw: &[(usize, f64)], column: &str) -> Result<Vec<i8>> {
    let zero_one = raw.iter().all(|(_, y)| *y == 0.0 || *y == 1.0);
    let signed = raw.iter().all(|(_, y)| *y == -1.0 || *y == 1.0);
    if !zero_one && !signed {
        let (r, y) = raw
            .iter()
            .find(|(_, y)| *y != 0.0 && *y != 1.0 && *y != -1.0)
            .copied()
            .unwrap_or(raw[0]);
        return Err(Error::Parse {
            row: r,
            column: column.to_string(),
            message: format!("label {y} is outside {{0,1}} and {{-1,+1}} (or mixes them)"),
        });
    }
    Ok(raw.iter().map(|(_, y)| if *y > 0.0 { 1 } else { -1 }).collect())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv(ds, file)
}

/// Header layout: features, then `g:<attribute>` columns, then `y`.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ds.feature_names.clone();
    header.extend(ds.space.attributes().iter().map(|a| format!("{GROUP_PREFIX}{}", a.name)));
    header.push(DEFAULT_LABEL.to_string());
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.row(i).iter().map(|v| format!("{v}")).collect();
        let g = ds.group(i);
        for (v, a) in g.0.iter().zip(ds.space.attributes()) {
            rec.push(a.values[*v].clone());
        }
        rec.push(if ds.label(i) == 1 { "1".into() } else { "-1".into() });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Result of a stratified split.
#[derive(Clone, Debug)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub warnings: Vec<String>,
}

/// Stratified (group x label) split, deterministic given `seed`.
///
/// Each group sends `round(train_fraction * n_g)` rows to training,
/// apportioned across its label strata by largest remainder. Strata holding a
/// single row go to training and produce a warning. Empty strata are skipped.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Precondition(format!(
            "train_fraction must lie in (0,1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    let mut warnings = Vec::new();
    for (cell, rows) in ds.rows_by_cell().into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let strata: Vec<Vec<usize>> = [1i8, -1]
            .iter()
            .map(|&y| rows.iter().copied().filter(|&i| ds.label(i) == y).collect())
            .collect();
        let target = (train_fraction * rows.len() as f64).round() as usize;
        let mut alloc = vec![0usize; strata.len()];
        let mut forced = 0;
        for (s, stratum) in strata.iter().enumerate() {
            if stratum.len() == 1 {
                alloc[s] = 1;
                forced += 1;
                warnings.push(format!(
                    "group {} label {}: single-row stratum placed in training",
                    ds.space.label_of(cell),
                    if s == 0 { "+1" } else { "-1" }
                ));
            }
        }
        let free: Vec<usize> = (0..strata.len()).filter(|&s| strata[s].len() >= 2).collect();
        let capacity: usize = free.iter().map(|&s| strata[s].len()).sum();
        let remaining = target.saturating_sub(forced).min(capacity);
        let mut assigned = 0;
        let mut remainders = Vec::new();
        for &s in &free {
            let exact = train_fraction * strata[s].len() as f64;
            let base = (exact.floor() as usize).min(strata[s].len());
            alloc[s] = base;
            assigned += base;
            remainders.push((exact - base as f64, s));
        }
        remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        while assigned < remaining {
            let mut progressed = false;
            for &(_, s) in &remainders {
                if assigned < remaining && alloc[s] < strata[s].len() {
                    alloc[s] += 1;
                    assigned += 1;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        while assigned > remaining {
            let s = remainders
                .iter()
                .rev()
                .map(|&(_, s)| s)
                .find(|&s| alloc[s] > 0)
                .expect("allocation above zero");
            alloc[s] -= 1;
            assigned -= 1;
        }
        for (s, stratum) in strata.into_iter().enumerate() {
            let mut stratum = stratum;
            stratum.shuffle(&mut rng);
            train_rows.extend_from_slice(&stratum[..alloc[s]]);
            test_rows.extend_from_slice(&stratum[alloc[s]..]);
        }
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Split { train: ds.subset(&train_rows), test: ds.subset(&test_rows), warnings })
}

/// Number of `test` rows that also appear verbatim in `train`.
pub(crate) fn overlap_count(train: &Dataset, test: &Dataset) -> usize {
    let key = |ds: &Dataset, i: usize| {
        let mut k: Vec<u64> = ds.row(i).iter().map(|v| v.to_bits()).collect();
        k.push(ds.label(i) as u64);
        k.push(ds.cell(i) as u64);
        k
    };
    let mut counts: HashMap<Vec<u64>, usize> = HashMap::new();
    for i in 0..train.n() {
        *counts.entry(key(train, i)).or_default() += 1;
    }
    (0..test.n()).filter(|&i| counts.contains_key(&key(test, i))).count()
}

impl fmt::Display for GroupTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cells.iter().enumerate() {
            writeln!(f, "{:<24} n+={:<6} n-={:<6}", self.space.label_of(i), c.positives, c.negatives)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sex_age() -> GroupSpace {
        GroupSpace::new(vec![
            GroupAttribute::new("sex", &["female", "male"]),
            GroupAttribute::new("age", &["young", "old"]),
        ])
        .unwrap()
    }

    #[test]
    fn cell_order_first_attribute_fastest() {
        let s = sex_age();
        let labels: Vec<String> = (0..4).map(|i| s.label_of(i)).collect();
        assert_eq!(labels, ["female,young", "male,young", "female,old", "male,old"]);
        for i in 0..4 {
            assert_eq!(s.index(&s.group(i)), i);
        }
    }

    #[test]
    fn space_rejects_singleton_domain_and_duplicates() {
        assert!(GroupSpace::new(vec![GroupAttribute::new("a", &["x"])]).is_err());
        assert!(GroupSpace::new(vec![
            GroupAttribute::new("a", &["x", "y"]),
            GroupAttribute::new("a", &["u", "v"]),
        ])
        .is_err());
    }

    #[test]
    fn load_three_rows() {
        let text = "x1,x2,g:sex,y\n0.5,1,f,1\n1.5,2,m,0\n2,-1,f,0\n";
        let ds = read_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!((ds.n(), ds.d(), ds.space().len()), (3, 2, 2));
        assert_eq!(ds.labels(), &[1, -1, -1]);
    }

    #[test]
    fn all_positive_labels_accepted() {
        let text = "x,g:a,y\n1,p,1\n2,q,1\n";
        let ds = read_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert!(!ds.has_both_labels());
    }

    #[test]
    fn csv_errors() {
        let missing = "x,g:a\n1,p\n";
        assert!(matches!(read_csv(missing.as_bytes(), &CsvSchema::default()), Err(Error::Schema(_))));
        let bad = "x,g:a,y\n1,p,1\nabc,q,0\n";
        match read_csv(bad.as_bytes(), &CsvSchema::default()) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (1, "x")),
            other => panic!("unexpected {other:?}"),
        }
        let empty_cell = "x,g:a,y\n,p,1\n";
        assert!(matches!(read_csv(empty_cell.as_bytes(), &CsvSchema::default()), Err(Error::Parse { .. })));
        let unseen = "x,g:a,y\n1,p,1\n1,zz,0\n";
        let schema = CsvSchema { domains: Some(vec![GroupAttribute::new("a", &["p", "q"])]), ..Default::default() };
        assert!(matches!(read_csv(unseen.as_bytes(), &schema), Err(Error::Domain(_))));
        let mixed = "x,g:a,y\n1,p,-1\n1,q,0\n";
        assert!(read_csv(mixed.as_bytes(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn declared_domain_keeps_empty_cells() {
        let text = "x,g:a,y\n1,p,1\n";
        let schema = CsvSchema { domains: Some(vec![GroupAttribute::new("a", &["p", "q", "r"])]), ..Default::default() };
        let ds = read_csv(text.as_bytes(), &schema).unwrap();
        let t = tally(&ds);
        assert_eq!(t.pairs(), vec![(1, 0), (0, 0), (0, 0)]);
    }

    #[test]
    fn explicit_group_columns() {
        let text = "x,site,label\n1,a,1\n2,b,-1\n";
        let schema = CsvSchema {
            label: Some("label".into()),
            groups: Some(vec!["site".into()]),
            domains: None,
        };
        let ds = read_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(ds.space().attributes()[0].name, "site");
        assert_eq!(ds.d(), 1);
    }

    #[test]
    fn empty_dataset_tally_is_zero() {
        let ds = Dataset::new(vec!["x".into()], vec![], vec![], vec![], sex_age()).unwrap();
        let t = tally(&ds);
        assert_eq!(t.total(), 0);
        assert!(t.cells().iter().all(|c| c.total() == 0));
    }

    fn balanced(n: usize) -> Dataset {
        let space = GroupSpace::new(vec![GroupAttribute::new("g", &["a", "b"])]).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for i in 0..n {
            rows.push(vec![i as f64]);
            labels.push(if i % 4 < 2 { 1 } else { -1 });
            groups.push(GroupId(vec![i % 2]));
        }
        Dataset::new(vec!["x".into()], rows, labels, groups, space).unwrap()
    }

    #[test]
    fn split_fraction_per_group_and_determinism() {
        let ds = balanced(100);
        let a = split(&ds, 0.8, 7).unwrap();
        let b = split(&ds, 0.8, 7).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.train.n() + a.test.n(), 100);
        let t = tally(&a.train);
        for c in t.cells() {
            assert!((c.total() as i64 - 40).abs() <= 1);
        }
        let c = split(&ds, 0.8, 8).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn split_rejects_boundary_fractions() {
        let ds = balanced(10);
        assert!(matches!(split(&ds, 1.0, 0), Err(Error::Precondition(_))));
        assert!(matches!(split(&ds, 0.0, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn singleton_stratum_goes_to_train_with_warning() {
        let space = GroupSpace::new(vec![GroupAttribute::new("g", &["a", "b"])]).unwrap();
        let rows = vec![vec![0.0]; 6];
        let labels = vec![1, -1, -1, -1, 1, -1];
        let groups = vec![0, 0, 0, 0, 1, 1].into_iter().map(|c| GroupId(vec![c])).collect();
        let ds = Dataset::new(vec!["x".into()], rows, labels, groups, space).unwrap();
        let s = split(&ds, 0.5, 1).unwrap();
        assert_eq!(s.warnings.len(), 3);
        let t = tally(&s.train);
        assert_eq!(t.cells()[0].positives, 1);
        assert_eq!(t.cells()[1].total(), 2);
    }

    #[test]
    fn tally_json_lists_every_cell() {
        let ds = balanced(8);
        let v = tally(&ds).to_json();
        assert_eq!(v["cells"].as_array().unwrap().len(), 2);
        assert_eq!(v["cells"][0]["n"], 4);
    }
}
