//! One-sided tests of rationality and envy-freeness, and family-wise correction.
//!
//! Each hypothesis gets two one-sided tests on the gain `Delta = R(comparator) - R(h_g)`:
//! a violation test (`H0: Delta >= 0`) and a gain test (`H0: Delta <= 0`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::PredictionTable;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricKind};

/// Largest fraction of bootstrap replicates allowed to have an undefined metric.
pub const MAX_UNDEFINED_FRACTION: f64 = 0.10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HypothesisKind {
    Rationality { group: String },
    EnvyFreeness { group: String, reported: String },
}

impl HypothesisKind {
    pub fn is_rationality(&self) -> bool {
        matches!(self, HypothesisKind::Rationality { .. })
    }

    pub fn group(&self) -> &str {
        match self {
            HypothesisKind::Rationality { group } | HypothesisKind::EnvyFreeness { group, .. } => group,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Bootstrap,
    McNemar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SignificantGain,
    SignificantViolation,
    Inconclusive,
    NotTestable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub kind: HypothesisKind,
    pub metric: MetricKind,
    pub test: TestKind,
    /// Gain as a rate, lower-is-better orientation; `None` when undefined.
    pub estimate: Option<f64>,
    /// Rows of the group in the evaluation sample.
    pub n_g: usize,
    pub p_violation: f64,
    pub p_gain: f64,
    pub p_violation_adjusted: f64,
    pub p_gain_adjusted: f64,
    pub family_size: usize,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl HypothesisResult {
    /// Gain expressed in rows: `estimate * n_g`.
    pub fn estimate_count(&self) -> Option<f64> {
        self.estimate.map(|e| e * self.n_g as f64)
    }

    fn not_testable(kind: HypothesisKind, metric: MetricKind, test: TestKind, n_g: usize, detail: String) -> Self {
        Self {
            kind,
            metric,
            test,
            estimate: None,
            n_g,
            p_violation: 1.0,
            p_gain: 1.0,
            p_violation_adjusted: 1.0,
            p_gain_adjusted: 1.0,
            family_size: 1,
            verdict: Verdict::NotTestable,
            detail: Some(detail),
        }
    }

    fn testable(&self) -> bool {
        self.estimate.is_some() && self.verdict != Verdict::NotTestable
    }
}

/// Verdict from the estimate's sign and the adjusted p-values.
pub fn decide(estimate: Option<f64>, p_violation_adjusted: f64, p_gain_adjusted: f64, alpha: f64) -> Verdict {
    match estimate {
        None => Verdict::NotTestable,
        Some(e) if e < 0.0 && p_violation_adjusted <= alpha => Verdict::SignificantViolation,
        Some(e) if e > 0.0 && p_gain_adjusted <= alpha => Verdict::SignificantGain,
        Some(_) => Verdict::Inconclusive,
    }
}

/// What the truthful report of group `g` is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparator {
    Generic,
    /// Report of another cell.
    Reported(usize),
}

impl Comparator {
    fn column(self, table: &PredictionTable<'_>) -> usize {
        match self {
            Comparator::Generic => table.withheld(),
            Comparator::Reported(c) => c,
        }
    }

    fn kind(self, table: &PredictionTable<'_>, g: usize) -> HypothesisKind {
        let space = table.data.space();
        match self {
            Comparator::Generic => HypothesisKind::Rationality { group: space.label_of(g) },
            Comparator::Reported(c) => {
                HypothesisKind::EnvyFreeness { group: space.label_of(g), reported: space.label_of(c) }
            }
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one hypothesis, derived from the master seed and its coordinates.
pub fn hypothesis_seed(seed: u64, metric: MetricKind, g: usize, column: usize) -> u64 {
    let mut s = splitmix(seed);
    for part in [metric as u64, g as u64, column as u64] {
        s = splitmix(s ^ part);
    }
    s
}

/// Recentered percentile bootstrap over the rows of group `g`.
///
/// Replicate gains `d*` are compared with the estimate `d` through `d* - d`:
/// `p_violation = (1 + #{d* - d <= d}) / (B + 1)` and
/// `p_gain = (1 + #{d* - d >= d}) / (B + 1)`, over defined replicates.
/// Each replicate draws from its own RNG stream, so results do not depend on
/// thread count.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_test(
    table: &PredictionTable<'_>,
    g: usize,
    comparator: Comparator,
    metric: MetricKind,
    replicates: usize,
    alpha: f64,
    seed: u64,
    bins: usize,
) -> Result<HypothesisResult> {
    let rows = table.rows(g);
    let n = rows.len();
    if n < 2 {
        return Err(Error::Precondition(format!("bootstrap needs at least 2 rows in the group, got {n}")));
    }
    if replicates < 100 {
        return Err(Error::Precondition(format!("bootstrap needs B >= 100, got {replicates}")));
    }
    let col = comparator.column(table);
    let kind = comparator.kind(table, g);
    let labels: Vec<i8> = rows.iter().map(|&i| table.data.label(i)).collect();
    let own = table.gather(g, rows);
    let other = table.gather(col, rows);
    let gain_of = |idx: Option<&[usize]>| -> Option<f64> {
        let (a, b, y): (Vec<_>, Vec<_>, Vec<_>) = match idx {
            None => (own.clone(), other.clone(), labels.clone()),
            Some(ix) => (
                ix.iter().map(|&k| own[k]).collect(),
                ix.iter().map(|&k| other[k]).collect(),
                ix.iter().map(|&k| labels[k]).collect(),
            ),
        };
        let ra = metric.to_risk(evaluate(metric, &a, &y, bins)?);
        let rb = metric.to_risk(evaluate(metric, &b, &y, bins)?);
        Some(rb - ra)
    };
    let Some(estimate) = gain_of(None) else {
        return Ok(HypothesisResult::not_testable(kind, metric, TestKind::Bootstrap, n, format!("{metric} undefined for this group")));
    };
    let base = hypothesis_seed(seed, metric, g, col);
    let stream_rng = |r: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(base);
        rng.set_stream(r as u64);
        rng
    };
    let draws: Vec<Option<f64>> = if metric == MetricKind::ErrorRate {
        // The gain is the mean of per-row differences in {-1, 0, +1}; resampling rows
        // is equivalent to a multinomial draw over the three category counts.
        let mut minus = 0u64;
        let mut plus = 0u64;
        for k in 0..n {
            let d = i32::from(other[k].label != labels[k]) - i32::from(own[k].label != labels[k]);
            if d < 0 {
                minus += 1;
            } else if d > 0 {
                plus += 1;
            }
        }
        let nn = n as u64;
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(r);
                let km = Binomial::new(nn, minus as f64 / n as f64).unwrap().sample(&mut rng);
                let rest = nn - minus;
                let kp = if rest == 0 || plus == 0 {
                    0
                } else {
                    Binomial::new(nn - km, plus as f64 / rest as f64).unwrap().sample(&mut rng)
                };
                Some((kp as f64 - km as f64) / n as f64)
            })
            .collect()
    } else {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(r);
                let pick = Uniform::new(0, n).unwrap();
                let ix: Vec<usize> = (0..n).map(|_| pick.sample(&mut rng)).collect();
                gain_of(Some(&ix))
            })
            .collect()
    };
    let defined: Vec<f64> = draws.into_iter().flatten().collect();
    let undefined = replicates - defined.len();
    if undefined as f64 > MAX_UNDEFINED_FRACTION * replicates as f64 {
        return Ok(HypothesisResult::not_testable(
            kind,
            metric,
            TestKind::Bootstrap,
            n,
            format!("{metric} undefined on {undefined} of {replicates} replicates"),
        ));
    }
    let b = defined.len() as f64;
    let low = defined.iter().filter(|&&d| d - estimate <= estimate).count() as f64;
    let high = defined.iter().filter(|&&d| d - estimate >= estimate).count() as f64;
    let p_violation = (1.0 + low) / (b + 1.0);
    let p_gain = (1.0 + high) / (b + 1.0);
    Ok(HypothesisResult {
        kind,
        metric,
        test: TestKind::Bootstrap,
        estimate: Some(estimate),
        n_g: n,
        p_violation,
        p_gain,
        p_violation_adjusted: p_violation,
        p_gain_adjusted: p_gain,
        family_size: 1,
        verdict: decide(Some(estimate), p_violation, p_gain, alpha),
        detail: (undefined > 0).then(|| format!("{undefined} of {replicates} replicates undefined")),
    })
}

/// `P[X >= k]` for `X ~ Binomial(n, 1/2)`.
///
/// Exact (correctly rounded) for `n <= 120`; log-space summation beyond.
pub fn binomial_upper_tail(n: u64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if n <= 120 {
        let mut c: u128 = 1;
        let mut sum: u128 = 0;
        for j in 0..=n {
            if j >= k {
                sum += c;
            }
            c = c * (n - j) as u128 / (j + 1) as u128;
        }
        return sum as f64 / 2f64.powi(n as i32);
    }
    let ln2 = std::f64::consts::LN_2;
    let terms: Vec<f64> = (k..=n).map(|j| statrs::function::factorial::ln_binomial(n, j) - n as f64 * ln2).collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()).exp().min(1.0)
}

/// Exact one-sided McNemar test on the hard labels of group `g`.
///
/// `b` counts rows where `h_g` errs and the comparator is right, `c` the converse.
/// `p_violation = P[Bin(b + c, 1/2) >= b]`, `p_gain = P[Bin(b + c, 1/2) >= c]`.
pub fn mcnemar_test(table: &PredictionTable<'_>, g: usize, comparator: Comparator, alpha: f64) -> Result<HypothesisResult> {
    let rows = table.rows(g);
    let n = rows.len();
    let kind = comparator.kind(table, g);
    if n == 0 {
        return Ok(HypothesisResult::not_testable(kind, MetricKind::ErrorRate, TestKind::McNemar, 0, "group has no rows".into()));
    }
    let col = comparator.column(table);
    let (mut b, mut c) = (0u64, 0u64);
    for &i in rows {
        let y = table.data.label(i);
        let own_wrong = table.column(g)[i].label != y;
        let other_wrong = table.column(col)[i].label != y;
        match (own_wrong, other_wrong) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    let estimate = (c as f64 - b as f64) / n as f64;
    let (p_violation, p_gain) = if b + c == 0 {
        (1.0, 1.0)
    } else {
        (binomial_upper_tail(b + c, b), binomial_upper_tail(b + c, c))
    };
    Ok(HypothesisResult {
        kind,
        metric: MetricKind::ErrorRate,
        test: TestKind::McNemar,
        estimate: Some(estimate),
        n_g: n,
        p_violation,
        p_gain,
        p_violation_adjusted: p_violation,
        p_gain_adjusted: p_gain,
        family_size: 1,
        verdict: decide(Some(estimate), p_violation, p_gain, alpha),
        detail: Some(format!("discordant pairs b={b}, c={c}")),
    })
}

/// Bonferroni correction within families.
///
/// A family is one (metric, test, hypothesis type): rationality families have
/// size `m`, envy families `m (m - 1)`. Verdicts are recomputed at `alpha`.
pub fn bonferroni(mut results: Vec<HypothesisResult>, m: usize, alpha: f64) -> Vec<HypothesisResult> {
    for r in &mut results {
        let size = if r.kind.is_rationality() { m } else { m * (m - 1) }.max(1);
        r.family_size = size;
        r.p_violation_adjusted = (size as f64 * r.p_violation).min(1.0);
        r.p_gain_adjusted = (size as f64 * r.p_gain).min(1.0);
        r.verdict = if r.testable() {
            decide(r.estimate, r.p_violation_adjusted, r.p_gain_adjusted, alpha)
        } else {
            Verdict::NotTestable
        };
    }
    results
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_examples() {
        assert_eq!(binomial_upper_tail(10, 10), 2f64.powi(-10));
        assert_eq!(binomial_upper_tail(10, 0), 1.0);
        for n in 1..40 {
            for b in 0..=n {
                if 2 * b == n {
                    assert!(binomial_upper_tail(n, b) > 0.5);
                }
            }
        }
    }

    #[test]
    fn log_space_tail_is_close_to_exact() {
        // n = 120 uses the exact path; compare with the log-space formula at the same n.
        let ln2 = std::f64::consts::LN_2;
        let n = 120u64;
        for k in [0u64, 30, 60, 61, 90, 120] {
            let terms: Vec<f64> = (k..=n).map(|j| statrs::function::factorial::ln_binomial(n, j) - n as f64 * ln2).collect();
            let approx: f64 = terms.iter().map(|t| t.exp()).sum();
            let exact = binomial_upper_tail(n, k);
            assert!((approx - exact).abs() <= 1e-10 * exact.max(1e-300), "k={k}");
        }
        assert!(binomial_upper_tail(500, 250) > 0.5);
        assert!(binomial_upper_tail(500, 400) < 1e-30);
    }

    #[test]
    fn decide_needs_sign_and_level() {
        assert_eq!(decide(Some(-0.1), 0.05, 1.0, 0.1), Verdict::SignificantViolation);
        assert_eq!(decide(Some(0.1), 1.0, 0.05, 0.1), Verdict::SignificantGain);
        assert_eq!(decide(Some(0.1), 0.05, 0.5, 0.1), Verdict::Inconclusive);
        assert_eq!(decide(None, 0.0, 0.0, 0.1), Verdict::NotTestable);
    }

    #[test]
    fn seeds_differ_by_coordinate() {
        let a = hypothesis_seed(1, MetricKind::ErrorRate, 0, 1);
        assert_ne!(a, hypothesis_seed(1, MetricKind::ErrorRate, 1, 0));
        assert_ne!(a, hypothesis_seed(2, MetricKind::ErrorRate, 0, 1));
        assert_ne!(a, hypothesis_seed(1, MetricKind::Auc, 0, 1));
    }
}
