//! Fair use audits: misreporting matrices, hypothesis tests and the report.

mod inference;
mod matrix;
mod report;

use serde::{Deserialize, Serialize};

pub use inference::{
    binomial_upper_tail, bonferroni, bootstrap_test, decide, hypothesis_seed, mcnemar_test, Comparator,
    HypothesisKind, HypothesisResult, TestKind, Verdict, MAX_UNDEFINED_FRACTION,
};
pub use matrix::{
    check_fair_use_point, fair_use_holds, matrix_from_table, misreport_matrix, MisreportMatrix, PointGains,
    PredictionTable,
};

use crate::dataset::{overlap_count, Dataset, GroupSpace};
use crate::error::{Error, Result};
use crate::interventions::{self, Advice, AssignmentPlan, Strictness};
use crate::metrics::{evaluate, MetricKind, DEFAULT_ECE_BINS};
use crate::models::{train_personalized, PersonalizedModel, Predictor, Strategy, TrainConfig};
use crate::theory::{self, BoundInputs, BoundVerdict};

pub const DEFAULT_BOOTSTRAP: usize = 2000;
pub const DEFAULT_ALPHA: f64 = 0.10;
pub const DEFAULT_DELTA: f64 = 0.10;

/// Which test procedures to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSelection {
    Bootstrap,
    McNemar,
    /// Bootstrap for every metric plus McNemar for the error rate.
    Both,
}

impl std::str::FromStr for TestSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bootstrap" => Ok(TestSelection::Bootstrap),
            "mcnemar" => Ok(TestSelection::McNemar),
            "both" => Ok(TestSelection::Both),
            other => Err(Error::Domain(format!("unknown test selection `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub strategy: Strategy,
    pub metrics: Vec<MetricKind>,
    pub train: TrainConfig,
    pub bootstrap: usize,
    pub alpha: f64,
    pub seed: u64,
    pub ece_bins: usize,
    pub tests: TestSelection,
    /// Confidence parameter of the generalization bounds.
    pub delta: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::OneHot,
            metrics: vec![MetricKind::ErrorRate],
            train: TrainConfig::default(),
            bootstrap: DEFAULT_BOOTSTRAP,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            ece_bins: DEFAULT_ECE_BINS,
            tests: TestSelection::Both,
            delta: DEFAULT_DELTA,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.metrics.is_empty() {
            return Err(Error::Precondition("at least one metric is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Precondition("alpha must lie in (0, 1)".into()));
        }
        if self.bootstrap < 100 && self.tests != TestSelection::McNemar {
            return Err(Error::Precondition("bootstrap needs B >= 100".into()));
        }
        if self.ece_bins == 0 {
            return Err(Error::Precondition("ece_bins must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Precondition("delta must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn runs(&self, test: TestKind, metric: MetricKind) -> bool {
        match (self.tests, test) {
            (TestSelection::Bootstrap, TestKind::Bootstrap) | (TestSelection::Both, TestKind::Bootstrap) => true,
            (TestSelection::McNemar, TestKind::McNemar) | (TestSelection::Both, TestKind::McNemar) => {
                metric == MetricKind::ErrorRate
            }
            _ => false,
        }
    }
}

/// Metric values over all rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub personalized: Option<f64>,
    pub generic: Option<f64>,
    /// `risk(generic) - risk(personalized)`.
    pub gain: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub rationality_gains: usize,
    pub rationality_violations: usize,
    pub envy_gains: usize,
    pub envy_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub test: TestKind,
    pub counts: VerdictCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub n: usize,
    pub personalized: Option<f64>,
    pub generic: Option<f64>,
    pub rationality_gain: Option<f64>,
    /// Rationality gain in rows (`gain * n`).
    pub rationality_gain_count: Option<f64>,
    pub envy_min_gain: Option<f64>,
    pub envy_min_gain_count: Option<f64>,
    pub envy_argmin: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: MetricKind,
    pub matrix: MisreportMatrix,
    pub population: Population,
    pub groups: Vec<GroupSummary>,
    pub best_gain: Option<f64>,
    pub worst_gain: Option<f64>,
    /// Fair use holds on the point estimates for this metric.
    pub point_fair_use: bool,
    pub hypotheses: Vec<HypothesisResult>,
    pub summary: Vec<TestSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub metric: MetricKind,
    pub group: String,
    pub n_g: usize,
    pub vc: usize,
    pub delta: f64,
    pub rationality: Option<BoundVerdict>,
    pub envy: Option<BoundVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterventionSummary {
    pub metric: MetricKind,
    pub plan: AssignmentPlan,
    pub advice: Vec<Advice>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairUseReport {
    pub config: AuditConfig,
    pub space: GroupSpace,
    pub groups: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    /// Test rows that also occur in the training data.
    pub overlap_rows: usize,
    pub warnings: Vec<String>,
    pub metrics: Vec<MetricReport>,
    pub generalization: Vec<BoundCheck>,
    /// Pairs of reports that receive identical predictions on every test row.
    pub identical_predictions: Vec<[String; 2]>,
    /// Groups whose truthful predictions equal the generic model's on every test row.
    pub identical_to_generic: Vec<String>,
    /// Some hypothesis has verdict `SignificantViolation`.
    pub violation: bool,
    /// Some point estimate of a rationality or envy margin is negative.
    pub point_violation: bool,
    pub interventions: Option<InterventionSummary>,
}

impl FairUseReport {
    pub fn metric(&self, metric: MetricKind) -> Option<&MetricReport> {
        self.metrics.iter().find(|r| r.metric == metric)
    }

    /// The error-rate report if present, otherwise the first one.
    pub fn primary(&self) -> &MetricReport {
        self.metric(MetricKind::ErrorRate).unwrap_or(&self.metrics[0])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization is infallible")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_markdown(&self) -> String {
        report::markdown(self)
    }
}

fn counts(results: &[HypothesisResult], test: TestKind) -> VerdictCounts {
    let mut c = VerdictCounts::default();
    for r in results.iter().filter(|r| r.test == test) {
        match (r.kind.is_rationality(), r.verdict) {
            (true, Verdict::SignificantGain) => c.rationality_gains += 1,
            (true, Verdict::SignificantViolation) => c.rationality_violations += 1,
            (false, Verdict::SignificantGain) => c.envy_gains += 1,
            (false, Verdict::SignificantViolation) => c.envy_violations += 1,
            _ => {}
        }
    }
    c
}

fn run_hypotheses(table: &PredictionTable<'_>, metric: MetricKind, cfg: &AuditConfig) -> Result<Vec<HypothesisResult>> {
    let m = table.m();
    let mut out = Vec::new();
    for g in 0..m {
        let comparators =
            std::iter::once(Comparator::Generic).chain((0..m).filter(|&c| c != g).map(Comparator::Reported));
        for comp in comparators {
            if cfg.runs(TestKind::Bootstrap, metric) {
                let n = table.rows(g).len();
                let r = if n < 2 {
                    let kind = match comp {
                        Comparator::Generic => HypothesisKind::Rationality { group: table.data.space().label_of(g) },
                        Comparator::Reported(c) => HypothesisKind::EnvyFreeness {
                            group: table.data.space().label_of(g),
                            reported: table.data.space().label_of(c),
                        },
                    };
                    HypothesisResult {
                        kind,
                        metric,
                        test: TestKind::Bootstrap,
                        estimate: None,
                        n_g: n,
                        p_violation: 1.0,
                        p_gain: 1.0,
                        p_violation_adjusted: 1.0,
                        p_gain_adjusted: 1.0,
                        family_size: 1,
                        verdict: Verdict::NotTestable,
                        detail: Some(format!("{n} evaluation rows; bootstrap needs at least 2")),
                    }
                } else {
                    bootstrap_test(table, g, comp, metric, cfg.bootstrap, cfg.alpha, cfg.seed, cfg.ece_bins)?
                };
                out.push(r);
            }
            if cfg.runs(TestKind::McNemar, metric) {
                out.push(mcnemar_test(table, g, comp, cfg.alpha)?);
            }
        }
    }
    Ok(bonferroni(out, m, cfg.alpha))
}

fn metric_report(table: &PredictionTable<'_>, metric: MetricKind, cfg: &AuditConfig) -> Result<MetricReport> {
    let data = table.data;
    let matrix = matrix_from_table(table, metric, cfg.ece_bins);
    let gains = check_fair_use_point(&matrix);
    let labels = data.labels();
    let pers = evaluate(metric, &table.truthful(), labels, cfg.ece_bins);
    let gen = evaluate(metric, table.column(table.withheld()), labels, cfg.ece_bins);
    let population = Population {
        personalized: pers,
        generic: gen,
        gain: pers.zip(gen).map(|(p, g)| metric.to_risk(g) - metric.to_risk(p)),
    };
    let groups: Vec<GroupSummary> = gains
        .iter()
        .enumerate()
        .map(|(g, pg)| {
            let n = table.rows(g).len();
            GroupSummary {
                group: pg.group.clone(),
                n,
                personalized: matrix.entry(g, Some(g)).value,
                generic: matrix.entry(g, None).value,
                rationality_gain: pg.rationality_gain,
                rationality_gain_count: pg.rationality_gain.map(|v| v * n as f64),
                envy_min_gain: pg.envy_min_gain,
                envy_min_gain_count: pg.envy_min_gain.map(|v| v * n as f64),
                envy_argmin: pg.envy_argmin.clone(),
            }
        })
        .collect();
    let defined: Vec<f64> = gains.iter().filter_map(|g| g.rationality_gain).collect();
    let hypotheses = run_hypotheses(table, metric, cfg)?;
    let summary = [TestKind::Bootstrap, TestKind::McNemar]
        .into_iter()
        .filter(|t| cfg.runs(*t, metric))
        .map(|t| TestSummary { test: t, counts: counts(&hypotheses, t) })
        .collect();
    Ok(MetricReport {
        metric,
        point_fair_use: fair_use_holds(&gains),
        population,
        best_gain: defined.iter().cloned().reduce(f64::max),
        worst_gain: defined.iter().cloned().reduce(f64::min),
        groups,
        matrix,
        hypotheses,
        summary,
    })
}

/// Audit already trained models on `test`.
pub fn audit_models(
    personalized: &PersonalizedModel,
    generic: &dyn Predictor,
    test: &Dataset,
    cfg: &AuditConfig,
    n_train: usize,
    mut warnings: Vec<String>,
) -> Result<FairUseReport> {
    warnings.extend(personalized.flags().iter().cloned());
    audit_predictors(personalized, generic, test, cfg, theory::vc_of(personalized), n_train, warnings)
}

/// Audit arbitrary predictors on `test`. `vc` feeds the generalization bounds.
pub fn audit_predictors(
    personalized: &dyn Predictor,
    generic: &dyn Predictor,
    test: &Dataset,
    cfg: &AuditConfig,
    vc: usize,
    n_train: usize,
    warnings: Vec<String>,
) -> Result<FairUseReport> {
    cfg.validate()?;
    if test.is_empty() {
        return Err(Error::Precondition("evaluation set is empty".into()));
    }
    if personalized.space() != test.space() || generic.space() != test.space() {
        return Err(Error::Schema("model and evaluation data use different group spaces".into()));
    }
    let table = PredictionTable::new(personalized, generic, test);
    let m = table.m();
    let mut metrics = Vec::new();
    for &metric in &cfg.metrics {
        metrics.push(metric_report(&table, metric, cfg)?);
    }
    let mut generalization = Vec::new();
    for r in &metrics {
        for s in &r.groups {
            let base = BoundInputs { n_g: s.n, vc, delta: cfg.delta, gain: 0.0, m };
            let rationality = s
                .rationality_gain
                .map(|gain| theory::rationality_bound(&BoundInputs { gain, ..base.clone() }))
                .transpose()?
                .flatten();
            let envy = if m >= 2 {
                s.envy_min_gain.map(|gain| theory::envy_bound(&BoundInputs { gain, ..base.clone() })).transpose()?.flatten()
            } else {
                None
            };
            generalization.push(BoundCheck {
                metric: r.metric,
                group: s.group.clone(),
                n_g: s.n,
                vc,
                delta: cfg.delta,
                rationality,
                envy,
            });
        }
    }
    let space = test.space();
    let mut identical_predictions = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if table.identical_columns(a, b) {
                identical_predictions.push([space.label_of(a), space.label_of(b)]);
            }
        }
    }
    let identical_to_generic = (0..m)
        .filter(|&c| {
            table.rows(c).iter().all(|&i| {
                let p = table.column(c)[i];
                let q = table.column(table.withheld())[i];
                p.label == q.label && p.score == q.score
            })
        })
        .map(|c| space.label_of(c))
        .collect();
    let violation = metrics.iter().any(|r| r.hypotheses.iter().any(|h| h.verdict == Verdict::SignificantViolation));
    let point_violation = metrics.iter().any(|r| !r.point_fair_use);
    let mut report = FairUseReport {
        config: cfg.clone(),
        space: space.clone(),
        groups: (0..m).map(|c| space.label_of(c)).collect(),
        n_train,
        n_test: test.n(),
        overlap_rows: 0,
        warnings,
        metrics,
        generalization,
        identical_predictions,
        identical_to_generic,
        violation,
        point_violation,
        interventions: None,
    };
    let metric = report.primary().metric;
    let plan = interventions::assign_generic_on_violation(&report, metric, Strictness::Point)?;
    let advice = interventions::data_minimization(&report, Some(&plan), metric);
    report.interventions = Some(InterventionSummary { metric, plan, advice });
    Ok(report)
}

/// Train `h0` and `h` on `train` and audit them on `test`.
pub fn audit(train: &Dataset, test: &Dataset, cfg: &AuditConfig) -> Result<FairUseReport> {
    cfg.validate()?;
    if train.space() != test.space() {
        return Err(Error::Schema("training and evaluation data use different group spaces".into()));
    }
    let overlap = overlap_count(train, test);
    let mut warnings = Vec::new();
    if overlap > 0 {
        let msg = format!("{overlap} evaluation rows also appear in the training data; p-values assume disjoint samples");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let personalized = train_personalized(train, cfg.strategy, &cfg.train)?;
    let generic = personalized.generic();
    let mut report = audit_models(&personalized, &generic, test, cfg, train.n(), warnings)?;
    report.overlap_rows = overlap;
    Ok(report)
}
