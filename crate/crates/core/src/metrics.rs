//! Group-conditional error rate, AUC and calibration error, and the gain measure.
//!
//! Every metric is turned into a lower-is-better *risk*: error rate and ECE
//! as-is, AUC negated. A positive gain `risk(h') - risk(h)` always means the
//! group prefers `h`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroupId};
use crate::error::{Error, Result};
use crate::models::{Prediction, Predictor, Reported};

/// Default number of equal-width ECE bins.
pub const DEFAULT_ECE_BINS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    ErrorRate,
    Auc,
    Ece,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::ErrorRate, MetricKind::Auc, MetricKind::Ece];

    pub fn higher_is_better(self) -> bool {
        self == MetricKind::Auc
    }

    /// Convert a metric value into lower-is-better orientation.
    pub fn to_risk(self, value: f64) -> f64 {
        if self.higher_is_better() {
            -value
        } else {
            value
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::ErrorRate => "error",
            MetricKind::Auc => "auc",
            MetricKind::Ece => "ece",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "error" | "error_rate" | "error-rate" => Ok(MetricKind::ErrorRate),
            "auc" => Ok(MetricKind::Auc),
            "ece" => Ok(MetricKind::Ece),
            other => Err(Error::Domain(format!("unknown metric `{other}`"))),
        }
    }
}

/// One estimated risk cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    /// Metric value in its natural orientation; `None` when undefined.
    pub value: Option<f64>,
    pub n_effective: usize,
    pub metric: MetricKind,
    /// `None` means all rows.
    pub group: Option<GroupId>,
    pub reported: Reported,
}

impl RiskEstimate {
    /// Lower-is-better risk, `None` when undefined.
    pub fn risk(&self) -> Option<f64> {
        self.value.map(|v| self.metric.to_risk(v))
    }
}

/// Fraction of hard labels that disagree with `labels`.
pub fn error_rate(preds: &[Prediction], labels: &[i8]) -> f64 {
    let wrong = preds.iter().zip(labels).filter(|(p, &y)| p.label != y).count();
    wrong as f64 / preds.len() as f64
}

/// Mann-Whitney AUC with tied scores counted one half. `None` for single-class input.
pub fn auc(scores: &[f64], labels: &[i8]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y > 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean.
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k] > 0).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Right-closed equal-width bin of `s` in `[0, 1]`; `0` falls in the first bin.
pub fn ece_bin(s: f64, bins: usize) -> usize {
    if s <= 0.0 {
        return 0;
    }
    let b = bins as f64;
    let mut idx = ((s * b).ceil() as usize).clamp(1, bins) - 1;
    while idx > 0 && s <= idx as f64 / b {
        idx -= 1;
    }
    while idx + 1 < bins && s > (idx + 1) as f64 / b {
        idx += 1;
    }
    idx
}

/// Expected calibration error over `bins` equal-width bins of the `+1` score.
///
/// Per bin, confidence is the mean of `max(s, 1 - s)` and accuracy the fraction
/// of rows whose hard label is correct; empty bins contribute nothing.
pub fn ece(preds: &[Prediction], labels: &[i8], bins: usize) -> f64 {
    let mut conf = vec![0.0; bins];
    let mut correct = vec![0usize; bins];
    let mut count = vec![0usize; bins];
    for (p, &y) in preds.iter().zip(labels) {
        let b = ece_bin(p.score, bins);
        conf[b] += p.score.max(1.0 - p.score);
        correct[b] += usize::from(p.label == y);
        count[b] += 1;
    }
    let n = preds.len() as f64;
    (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let c = count[b] as f64;
            (c / n) * (correct[b] as f64 / c - conf[b] / c).abs()
        })
        .sum()
}

/// Metric value on already computed predictions; `None` when undefined.
pub fn evaluate(kind: MetricKind, preds: &[Prediction], labels: &[i8], bins: usize) -> Option<f64> {
    if preds.is_empty() {
        return None;
    }
    match kind {
        MetricKind::ErrorRate => Some(error_rate(preds, labels)),
        MetricKind::Auc => {
            let scores: Vec<f64> = preds.iter().map(|p| p.score).collect();
            auc(&scores, labels)
        }
        MetricKind::Ece => Some(ece(preds, labels, bins)),
    }
}

fn rows_of(data: &Dataset, g: Option<&GroupId>) -> Result<Vec<usize>> {
    match g {
        None => Ok((0..data.n()).collect()),
        Some(g) => {
            data.space().validate(g)?;
            Ok(data.rows_in_cell(data.space().index(g)))
        }
    }
}

/// Risk of `model` on the rows of group `g` (all rows for `None`) when they report `reported`.
pub fn group_risk(
    model: &dyn Predictor,
    data: &Dataset,
    g: Option<&GroupId>,
    reported: &Reported,
    metric: MetricKind,
) -> Result<RiskEstimate> {
    group_risk_binned(model, data, g, reported, metric, DEFAULT_ECE_BINS)
}

pub fn group_risk_binned(
    model: &dyn Predictor,
    data: &Dataset,
    g: Option<&GroupId>,
    reported: &Reported,
    metric: MetricKind,
    bins: usize,
) -> Result<RiskEstimate> {
    let rows = rows_of(data, g)?;
    if rows.is_empty() {
        return Err(Error::Precondition("group has no rows".into()));
    }
    let mut preds = Vec::with_capacity(rows.len());
    for &i in &rows {
        preds.push(model.predict(data.row(i), reported)?);
    }
    let labels: Vec<i8> = rows.iter().map(|&i| data.label(i)).collect();
    Ok(RiskEstimate {
        value: evaluate(metric, &preds, &labels, bins),
        n_effective: rows.len(),
        metric,
        group: g.cloned(),
        reported: reported.clone(),
    })
}

/// `Delta_g(h, h') = R_g(h') - R_g(h)` in lower-is-better orientation.
pub fn gain(
    g: &GroupId,
    h: (&dyn Predictor, &Reported),
    h_prime: (&dyn Predictor, &Reported),
    data: &Dataset,
    metric: MetricKind,
) -> Result<f64> {
    let a = group_risk(h.0, data, Some(g), h.1, metric)?;
    let b = group_risk(h_prime.0, data, Some(g), h_prime.1, metric)?;
    match (a.risk(), b.risk()) {
        (Some(ra), Some(rb)) => Ok(rb - ra),
        _ => Err(Error::UndefinedMetric(format!("{metric} undefined for group {:?}", g.0))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(scores: &[f64]) -> Vec<Prediction> {
        scores.iter().map(|&s| Prediction { score: s, label: if s >= 0.5 { 1 } else { -1 } }).collect()
    }

    #[test]
    fn perfect_predictor() {
        let labels = [1, -1, 1, -1];
        let p = preds(&[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(error_rate(&p, &labels), 0.0);
        assert_eq!(auc(&[1.0, 0.0, 1.0, 0.0], &labels), Some(1.0));
        assert_eq!(ece(&p, &labels, 10), 0.0);
    }

    #[test]
    fn constant_half_on_balanced_labels() {
        let labels = [1, -1, 1, -1];
        let p = preds(&[0.5; 4]);
        assert_eq!(error_rate(&p, &labels), 0.5);
        assert_eq!(auc(&[0.5; 4], &labels), Some(0.5));
        assert_eq!(ece(&p, &labels, 10), 0.0);
    }

    #[test]
    fn auc_undefined_on_single_class() {
        assert_eq!(auc(&[0.1, 0.9], &[1, 1]), None);
        assert_eq!(evaluate(MetricKind::Auc, &preds(&[0.1, 0.9]), &[-1, -1], 10), None);
    }

    #[test]
    fn auc_counts_pairs() {
        // Pairs (pos, neg): (0.8,0.3) win, (0.8,0.8) tie, (0.2,0.3) loss, (0.2,0.8) loss.
        let a = auc(&[0.8, 0.2, 0.3, 0.8], &[1, 1, -1, -1]).unwrap();
        assert!((a - 1.5 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn bins_are_right_closed() {
        assert_eq!(ece_bin(0.0, 10), 0);
        assert_eq!(ece_bin(0.1, 10), 0);
        assert_eq!(ece_bin(0.3, 10), 2);
        assert_eq!(ece_bin(0.30000001, 10), 3);
        assert_eq!(ece_bin(1.0, 10), 9);
        assert_eq!(ece_bin(0.7, 10), 6);
    }

    #[test]
    fn orientation() {
        assert_eq!(MetricKind::Auc.to_risk(0.8), -0.8);
        assert_eq!(MetricKind::Ece.to_risk(0.1), 0.1);
        assert_eq!("error".parse::<MetricKind>().unwrap(), MetricKind::ErrorRate);
    }
}
