use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{mean, Metric, PerQuery};
use crate::stats::{bonferroni, paired_t_test, SigResult, DEFAULT_ALPHA};
use crate::trec::{Judgments, RunList};

/// One metric of one condition against the baseline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricComparison {
    pub metric: Metric,
    pub mean: f64,
    pub baseline_mean: f64,
    /// Uncorrected until a family is assigned with [`SigResult::corrected`].
    pub sig: SigResult,
}

pub fn aggregate(run: &RunList, judg: &Judgments, metric: Metric) -> (f64, PerQuery) {
    let per = metric.evaluate(run, judg);
    (mean(&per), per)
}

/// Paired t-test of `run` against `baseline` for each metric, over the
/// queries of `baseline`.
pub fn compare(
    baseline: &RunList,
    run: &RunList,
    judg: &Judgments,
    metrics: &[Metric],
) -> Result<Vec<MetricComparison>> {
    metrics
        .iter()
        .map(|&metric| {
            let (baseline_mean, b) = aggregate(baseline, judg, metric);
            let (mean, r) = aggregate(run, judg, metric);
            let mut xs = Vec::with_capacity(b.len());
            let mut ys = Vec::with_capacity(b.len());
            for (qid, v) in &b {
                let other = r.get(qid).ok_or_else(|| {
                    Error::InvalidArgument(format!("query {qid} missing from run"))
                })?;
                xs.push(*other);
                ys.push(*v);
            }
            // a single query has no variance to test
            let sig = if xs.len() < 2 {
                bonferroni(&[1.0], DEFAULT_ALPHA)?[0]
            } else {
                paired_t_test(&xs, &ys)?
            };
            Ok(MetricComparison {
                metric,
                mean,
                baseline_mean,
                sig,
            })
        })
        .collect()
}

pub(crate) fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

pub(crate) fn fmt_p(v: f64) -> String {
    format!("{v:.6e}")
}

pub(crate) fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
