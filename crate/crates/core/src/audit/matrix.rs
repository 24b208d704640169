//! Misreporting matrices and point-estimate fair use checks.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::metrics::{evaluate, MetricKind, RiskEstimate};
use crate::models::{Prediction, Predictor, Reported};

/// Predictions of every row under every report: `m` personalized columns plus
/// the generic (withheld) column last.
pub struct PredictionTable<'a> {
    pub data: &'a Dataset,
    columns: Vec<Vec<Prediction>>,
    by_cell: Vec<Vec<usize>>,
}

impl<'a> PredictionTable<'a> {
    pub fn new(personalized: &dyn Predictor, generic: &dyn Predictor, data: &'a Dataset) -> Self {
        let m = data.space().len();
        let mut columns: Vec<Vec<Prediction>> = (0..m)
            .map(|c| (0..data.n()).map(|i| personalized.predict_cell(data.row(i), Some(c))).collect())
            .collect();
        columns.push((0..data.n()).map(|i| generic.predict_cell(data.row(i), None)).collect());
        Self { data, columns, by_cell: data.rows_by_cell() }
    }

    pub fn m(&self) -> usize {
        self.by_cell.len()
    }

    /// Index of the withheld column.
    pub fn withheld(&self) -> usize {
        self.m()
    }

    pub fn rows(&self, cell: usize) -> &[usize] {
        &self.by_cell[cell]
    }

    pub fn column(&self, col: usize) -> &[Prediction] {
        &self.columns[col]
    }

    /// Predictions of `rows` under column `col`.
    pub fn gather(&self, col: usize, rows: &[usize]) -> Vec<Prediction> {
        rows.iter().map(|&i| self.columns[col][i]).collect()
    }

    /// Truthful predictions for every row (each row reports its own group).
    pub fn truthful(&self) -> Vec<Prediction> {
        (0..self.data.n()).map(|i| self.columns[self.data.cell(i)][i]).collect()
    }

    /// Whether columns `a` and `b` agree on every row of the data.
    pub fn identical_columns(&self, a: usize, b: usize) -> bool {
        self.columns[a].iter().zip(&self.columns[b]).all(|(p, q)| p.label == q.label && p.score == q.score)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisreportMatrix {
    pub metric: MetricKind,
    /// Display labels of the groups, in cell order.
    pub groups: Vec<String>,
    /// `entries[g][col]`; `col == m` is the withheld column.
    pub entries: Vec<Vec<RiskEstimate>>,
}

impl MisreportMatrix {
    pub fn m(&self) -> usize {
        self.groups.len()
    }

    pub fn entry(&self, g: usize, reported: Option<usize>) -> &RiskEstimate {
        &self.entries[g][reported.unwrap_or(self.m())]
    }

    /// Lower-is-better risk at `(g, col)`.
    pub fn risk(&self, g: usize, col: usize) -> Option<f64> {
        self.entries[g][col].risk()
    }

    /// `entry(g, col) - entry(g, g)` in lower-is-better orientation.
    pub fn gain(&self, g: usize, col: usize) -> Option<f64> {
        Some(self.risk(g, col)? - self.risk(g, g)?)
    }
}

pub fn matrix_from_table(table: &PredictionTable<'_>, metric: MetricKind, bins: usize) -> MisreportMatrix {
    let data = table.data;
    let space = data.space();
    let m = table.m();
    let entries = (0..m)
        .map(|g| {
            let rows = table.rows(g);
            let labels: Vec<i8> = rows.iter().map(|&i| data.label(i)).collect();
            (0..=m)
                .map(|col| RiskEstimate {
                    value: evaluate(metric, &table.gather(col, rows), &labels, bins),
                    n_effective: rows.len(),
                    metric,
                    group: Some(space.group(g)),
                    reported: if col == m { Reported::Withheld } else { Reported::Group(space.group(col)) },
                })
                .collect()
        })
        .collect();
    MisreportMatrix { metric, groups: (0..m).map(|c| space.label_of(c)).collect(), entries }
}

/// Matrix of `R_g(h_{g'})` for every true group `g` and report `g'`, plus `R_g(h0)`.
/// Groups without rows in `data`, and undefined metrics, give `None` values.
pub fn misreport_matrix(
    personalized: &dyn Predictor,
    generic: &dyn Predictor,
    data: &Dataset,
    metric: MetricKind,
    bins: usize,
) -> Result<MisreportMatrix> {
    let table = PredictionTable::new(personalized, generic, data);
    Ok(matrix_from_table(&table, metric, bins))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointGains {
    pub group: String,
    /// `entry(g, withheld) - entry(g, g)`.
    pub rationality_gain: Option<f64>,
    /// `min over g' != g of entry(g, g') - entry(g, g)`.
    pub envy_min_gain: Option<f64>,
    /// The report attaining the envy minimum.
    pub envy_argmin: Option<String>,
}

impl PointGains {
    pub fn holds(&self) -> bool {
        self.rationality_gain.is_none_or(|v| v >= 0.0) && self.envy_min_gain.is_none_or(|v| v >= 0.0)
    }
}

/// Point-estimate rationality and envy margins for every group.
pub fn check_fair_use_point(matrix: &MisreportMatrix) -> Vec<PointGains> {
    let m = matrix.m();
    (0..m)
        .map(|g| {
            let mut envy: Option<(f64, usize)> = None;
            for col in (0..m).filter(|&c| c != g) {
                if let Some(v) = matrix.gain(g, col) {
                    if envy.is_none_or(|(best, _)| v < best) {
                        envy = Some((v, col));
                    }
                }
            }
            PointGains {
                group: matrix.groups[g].clone(),
                rationality_gain: matrix.gain(g, m),
                envy_min_gain: envy.map(|e| e.0),
                envy_argmin: envy.map(|e| matrix.groups[e.1].clone()),
            }
        })
        .collect()
}

/// Whether fair use holds on this sample: every defined margin is non-negative.
pub fn fair_use_holds(gains: &[PointGains]) -> bool {
    gains.iter().all(PointGains::holds)
}
