//! Per-group model reassignment and data-minimization advice.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::audit::{FairUseReport, MetricReport, Verdict};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricKind};
use crate::models::{CellSource, PersonalizedModel, Predictor};

/// Which model serves a group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Personalized,
    Generic,
    Decoupled,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Personalized => "personalized",
            Source::Generic => "generic",
            Source::Decoupled => "decoupled",
        })
    }
}

/// When a rationality violation triggers reassignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    /// Negative point estimate.
    Point,
    /// Significant violation verdict from any test.
    Significant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub group: String,
    pub n: usize,
    pub source: Source,
    /// Risk of the group under the personalized truthful report.
    pub pre_risk: Option<f64>,
    /// Risk of the group under `source`.
    pub projected_risk: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub metric: MetricKind,
    pub assignments: Vec<GroupAssignment>,
    /// n-weighted population risk under the plan (error rate only).
    pub projected_population_risk: Option<f64>,
    /// Groups whose violation the plan resolves.
    pub resolved_violations: Vec<String>,
}

impl AssignmentPlan {
    pub fn source(&self, group: &str) -> Option<Source> {
        self.assignments.iter().find(|a| a.group == group).map(|a| a.source)
    }

    pub fn is_identity(&self) -> bool {
        self.assignments.iter().all(|a| a.source == Source::Personalized)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization is infallible")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Advice {
    /// Neither a significant gain nor a significant harm from personalization.
    NoSignal { group: String },
    /// Every cell with this attribute value is served without personalization.
    AvoidSoliciting { attribute: String, value: String, groups: Vec<String> },
    /// Two reports receive identical predictions; a coarser category would do.
    IdenticalPredictions { group: String, other: String },
}

impl fmt::Display for Advice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Advice::NoSignal { group } => {
                write!(f, "{group}: no significant gain or harm from personalization; the attributes may be unnecessary")
            }
            Advice::AvoidSoliciting { attribute, value, groups } => write!(
                f,
                "avoid soliciting group attributes from {attribute}={value}: every such cell ({}) is served without personalization",
                groups.join(", ")
            ),
            Advice::IdenticalPredictions { group, other } => {
                write!(f, "{group} and {other} receive identical predictions; one could personalize for the merged category")
            }
        }
    }
}

fn metric_report(report: &FairUseReport, metric: MetricKind) -> Result<&MetricReport> {
    report
        .metric(metric)
        .ok_or_else(|| Error::Precondition(format!("report has no {metric} results")))
}

fn weighted(metric: MetricKind, parts: &[(usize, Option<f64>)]) -> Option<f64> {
    if metric != MetricKind::ErrorRate {
        return None;
    }
    let n: usize = parts.iter().filter(|p| p.1.is_some()).map(|p| p.0).sum();
    if n == 0 {
        return None;
    }
    Some(parts.iter().filter_map(|(k, v)| v.map(|v| v * *k as f64)).sum::<f64>() / n as f64)
}

fn significant_rationality_violation(r: &MetricReport, group: &str) -> bool {
    r.hypotheses
        .iter()
        .any(|h| h.kind.is_rationality() && h.kind.group() == group && h.verdict == Verdict::SignificantViolation)
}

/// Serve every group with a rationality violation by the generic model.
///
/// On the evaluation sample, reassigned groups strictly improve and no group gets worse.
pub fn assign_generic_on_violation(report: &FairUseReport, metric: MetricKind, strictness: Strictness) -> Result<AssignmentPlan> {
    let r = metric_report(report, metric)?;
    let mut assignments = Vec::new();
    let mut resolved = Vec::new();
    for (g, s) in r.groups.iter().enumerate() {
        let pre = r.matrix.entry(g, Some(g)).value;
        let generic = r.matrix.entry(g, None).value;
        let violated = match strictness {
            Strictness::Point => s.rationality_gain.is_some_and(|v| v < 0.0),
            Strictness::Significant => significant_rationality_violation(r, &s.group),
        };
        // The generic column always exists, so a violating group can always be reassigned;
        // only do so when the generic risk is strictly lower on this sample.
        let improves = matches!((pre, generic), (Some(p), Some(q)) if metric.to_risk(q) < metric.to_risk(p));
        let (source, projected) = if violated && improves {
            resolved.push(s.group.clone());
            (Source::Generic, generic)
        } else {
            (Source::Personalized, pre)
        };
        assignments.push(GroupAssignment { group: s.group.clone(), n: s.n, source, pre_risk: pre, projected_risk: projected });
    }
    let parts: Vec<(usize, Option<f64>)> = assignments.iter().map(|a| (a.n, a.projected_risk)).collect();
    Ok(AssignmentPlan {
        metric,
        projected_population_risk: weighted(metric, &parts),
        assignments,
        resolved_violations: resolved,
    })
}

fn group_value(model: &dyn Predictor, data: &Dataset, rows: &[usize], report: Option<usize>, metric: MetricKind, bins: usize) -> Option<f64> {
    let preds: Vec<_> = rows.iter().map(|&i| model.predict_cell(data.row(i), report)).collect();
    let labels: Vec<i8> = rows.iter().map(|&i| data.label(i)).collect();
    evaluate(metric, &preds, &labels, bins)
}

/// Per group, serve the best of the generic, personalized and decoupled models
/// on `validation`. Ties prefer generic, then personalized, then decoupled.
///
/// Decoupled cells that inherited the generic model are not offered. `report`
/// supplies group order and the violations that the plan resolves.
pub fn assign_best_of_three(
    report: &FairUseReport,
    personalized: &PersonalizedModel,
    decoupled: &PersonalizedModel,
    validation: &Dataset,
    metric: MetricKind,
) -> Result<AssignmentPlan> {
    let r = metric_report(report, metric)?;
    let cells = decoupled
        .decoupled_cells()
        .ok_or_else(|| Error::Precondition("best-of-three needs a decoupled model".into()))?;
    if validation.space() != personalized.space() {
        return Err(Error::Schema("validation data uses a different group space".into()));
    }
    let bins = report.config.ece_bins;
    let by_cell = validation.rows_by_cell();
    let mut assignments = Vec::new();
    let mut resolved = Vec::new();
    for (g, s) in r.groups.iter().enumerate() {
        let rows = &by_cell[g];
        let pers = group_value(personalized, validation, rows, Some(g), metric, bins);
        let mut options = vec![
            (Source::Generic, group_value(personalized, validation, rows, None, metric, bins)),
            (Source::Personalized, pers),
        ];
        if cells[g].source != CellSource::Generic {
            options.push((Source::Decoupled, group_value(decoupled, validation, rows, Some(g), metric, bins)));
        }
        let mut best = (Source::Personalized, pers);
        let mut best_risk = pers.map(|v| metric.to_risk(v));
        for (src, v) in options {
            let Some(v) = v else { continue };
            let risk = metric.to_risk(v);
            // Earlier options win ties.
            let take = match best_risk {
                None => true,
                Some(b) => risk < b || (risk == b && rank(src) < rank(best.0)),
            };
            if take {
                best = (src, Some(v));
                best_risk = Some(risk);
            }
        }
        let violated = s.rationality_gain.is_some_and(|v| v < 0.0) || s.envy_min_gain.is_some_and(|v| v < 0.0);
        if violated && best.0 != Source::Personalized {
            resolved.push(s.group.clone());
        }
        assignments.push(GroupAssignment { group: s.group.clone(), n: rows.len(), source: best.0, pre_risk: pers, projected_risk: best.1 });
    }
    let parts: Vec<(usize, Option<f64>)> = assignments.iter().map(|a| (a.n, a.projected_risk)).collect();
    Ok(AssignmentPlan { metric, projected_population_risk: weighted(metric, &parts), assignments, resolved_violations: resolved })
}

fn rank(s: Source) -> u8 {
    match s {
        Source::Generic => 0,
        Source::Personalized => 1,
        Source::Decoupled => 2,
    }
}

/// Advice on which group attributes need not be solicited.
///
/// (a) groups with neither a significant gain nor a significant harm on
/// rationality; (b) attribute values all of whose cells the plan serves without
/// the personalized model; (c) report pairs with identical predictions.
pub fn data_minimization(report: &FairUseReport, plan: Option<&AssignmentPlan>, metric: MetricKind) -> Vec<Advice> {
    let mut out = Vec::new();
    if let Some(r) = report.metric(metric) {
        for s in &r.groups {
            let signal = r.hypotheses.iter().any(|h| {
                h.kind.is_rationality()
                    && h.kind.group() == s.group
                    && matches!(h.verdict, Verdict::SignificantGain | Verdict::SignificantViolation)
            });
            if !signal {
                out.push(Advice::NoSignal { group: s.group.clone() });
            }
        }
    }
    if let Some(plan) = plan {
        let space = &report.space;
        {
            for (a, attr) in space.attributes().iter().enumerate() {
                for (v, value) in attr.values.iter().enumerate() {
                    let cells: Vec<usize> = (0..space.len()).filter(|&c| space.group(c).0[a] == v).collect();
                    let all_away = cells
                        .iter()
                        .all(|&c| plan.source(&space.label_of(c)).is_some_and(|s| s != Source::Personalized));
                    if all_away && !cells.is_empty() {
                        out.push(Advice::AvoidSoliciting {
                            attribute: attr.name.clone(),
                            value: value.clone(),
                            groups: cells.iter().map(|&c| space.label_of(c)).collect(),
                        });
                    }
                }
            }
        }
    }
    for [a, b] in &report.identical_predictions {
        out.push(Advice::IdenticalPredictions { group: a.clone(), other: b.clone() });
    }
    out
}
