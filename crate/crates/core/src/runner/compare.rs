use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{row_bleu, MetricsReport, RunnerError, SentenceRow};
use crate::decoder::Strategy;
use crate::objectives::ObjectiveKind;

/// Sentence-level comparison of system A against system B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub threshold: f64,
    pub sentences: usize,
    /// Failures to translate in A.
    pub failures_a: usize,
    /// Failures to translate in B.
    pub failures_b: usize,
    /// Sentences failing in A, B or both; excluded from the BLEU comparison.
    pub failures_either: usize,
    pub compared: usize,
    pub better: usize,
    pub equal: usize,
    pub worse: usize,
    /// Proportions over compared sentences.
    pub better_rate: f64,
    pub equal_rate: f64,
    pub worse_rate: f64,
    /// Proportions over all sentences.
    pub failure_rate_a: f64,
    pub failure_rate_b: f64,
}

/// Picks the rows of one (objective, strategy) group. Either may be left
/// out when the report has only one choice.
pub fn select_group(
    report: &MetricsReport,
    objective: Option<ObjectiveKind>,
    strategy: Option<Strategy>,
) -> Result<Vec<&SentenceRow>, RunnerError> {
    let objective = match objective {
        Some(k) => k,
        None => match report.objectives.as_slice() {
            [only] => only.kind,
            _ => {
                return Err(RunnerError::Config(
                    "report has several objectives; choose one".into(),
                ))
            }
        },
    };
    let strategy = match strategy {
        Some(s) => s,
        None => match report.strategies.as_slice() {
            [only] => *only,
            _ => return Err(RunnerError::Config("report has several strategies; choose one".into())),
        },
    };
    let rows = report.group_rows(objective, strategy);
    if rows.is_empty() {
        return Err(RunnerError::Config(format!(
            "report has no rows for {objective} with {strategy} decoding"
        )));
    }
    Ok(rows)
}

/// Classifies every sentence that translated in both systems as better,
/// equal or worse for A. A difference counts only when it reaches
/// `threshold` sentence-BLEU points and is nonzero, so a zero threshold
/// leaves exact ties as the only equal cases.
pub fn compare_failures(
    a: &[&SentenceRow],
    b: &[&SentenceRow],
    threshold: f64,
) -> Result<Comparison, RunnerError> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(RunnerError::Config(format!("threshold {threshold} must be a non-negative number")));
    }
    let index = |rows: &[&SentenceRow]| -> Result<BTreeMap<String, SentenceRow>, RunnerError> {
        let mut map = BTreeMap::new();
        for r in rows {
            if map.insert(r.id.clone(), (*r).clone()).is_some() {
                return Err(RunnerError::Contract(format!("duplicate sentence id {:?}", r.id)));
            }
        }
        Ok(map)
    };
    let (a, b) = (index(a)?, index(b)?);
    if !a.keys().eq(b.keys()) {
        return Err(RunnerError::Contract("the reports cover different sentence ids".into()));
    }
    let n = a.len();
    let (mut failures_a, mut failures_b, mut either) = (0, 0, 0);
    let (mut better, mut equal, mut worse) = (0, 0, 0);
    for (id, ra) in &a {
        let rb = &b[id];
        let (fa, fb) = (ra.failure.is_failure(), rb.failure.is_failure());
        failures_a += usize::from(fa);
        failures_b += usize::from(fb);
        if fa || fb {
            either += 1;
            continue;
        }
        let delta = row_bleu(ra) - row_bleu(rb);
        if delta > 0.0 && delta >= threshold {
            better += 1;
        } else if delta < 0.0 && -delta >= threshold {
            worse += 1;
        } else {
            equal += 1;
        }
    }
    let compared = n - either;
    let rate = |x: usize, of: usize| if of == 0 { 0.0 } else { x as f64 / of as f64 };
    Ok(Comparison {
        threshold,
        sentences: n,
        failures_a,
        failures_b,
        failures_either: either,
        compared,
        better,
        equal,
        worse,
        better_rate: rate(better, compared),
        equal_rate: rate(equal, compared),
        worse_rate: rate(worse, compared),
        failure_rate_a: rate(failures_a, n),
        failure_rate_b: rate(failures_b, n),
    })
}
