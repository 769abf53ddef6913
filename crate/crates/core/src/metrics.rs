//! trec_eval-style effectiveness metrics over a [`RunList`].
//!
//! Gains are linear in the grade with a `log2(rank + 1)` discount. Binary
//! metrics count a document as relevant when its grade is at least
//! `min_grade`. Unjudged documents are grade 0.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::trec::{Judgments, QueryId, RankedDoc, RunList};

/// Per-query metric values, keyed by query id.
pub type PerQuery = BTreeMap<QueryId, f64>;

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

pub fn ndcg_query(docs: &[RankedDoc], judg: &Judgments, qid: &str, k: usize) -> f64 {
    let mut ideal: Vec<u32> = judg
        .judged(qid)
        .map(|(_, g)| g)
        .filter(|g| *g > 0)
        .collect();
    if ideal.is_empty() {
        return 0.0;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| *g as f64 / discount(i + 1))
        .sum();
    let dcg: f64 = docs
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, d)| judg.grade(qid, d.doc_id) as f64 / discount(i + 1))
        .sum();
    dcg / idcg
}

pub fn mrr_query(docs: &[RankedDoc], judg: &Judgments, qid: &str, k: usize, min_grade: u32) -> f64 {
    docs.iter()
        .take(k)
        .position(|d| judg.grade(qid, d.doc_id) >= min_grade)
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

pub fn ap_query(docs: &[RankedDoc], judg: &Judgments, qid: &str, min_grade: u32) -> f64 {
    let total = judg.count_at_least(qid, min_grade);
    if total == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in docs.iter().enumerate() {
        if judg.grade(qid, d.doc_id) >= min_grade {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total as f64
}

pub fn recall_query(
    docs: &[RankedDoc],
    judg: &Judgments,
    qid: &str,
    k: usize,
    min_grade: u32,
) -> f64 {
    let total = judg.count_at_least(qid, min_grade);
    if total == 0 || k == 0 {
        return 0.0;
    }
    let found = docs
        .iter()
        .take(k)
        .filter(|d| judg.grade(qid, d.doc_id) >= min_grade)
        .count();
    found as f64 / total as f64
}

fn per_query(run: &RunList, f: impl Fn(&str, &[RankedDoc]) -> f64) -> PerQuery {
    run.iter()
        .map(|(q, docs)| (q.clone(), f(q, docs)))
        .collect()
}

pub fn ndcg_at_k(run: &RunList, judg: &Judgments, k: usize) -> PerQuery {
    per_query(run, |q, d| ndcg_query(d, judg, q, k))
}

pub fn mrr_at_k(run: &RunList, judg: &Judgments, k: usize, min_grade: u32) -> PerQuery {
    per_query(run, |q, d| mrr_query(d, judg, q, k, min_grade))
}

pub fn map_metric(run: &RunList, judg: &Judgments, min_grade: u32) -> PerQuery {
    per_query(run, |q, d| ap_query(d, judg, q, min_grade))
}

pub fn recall_at_k(run: &RunList, judg: &Judgments, k: usize, min_grade: u32) -> PerQuery {
    per_query(run, |q, d| recall_query(d, judg, q, k, min_grade))
}

/// A metric as named in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    Ndcg { k: usize },
    Mrr { k: usize, min_grade: u32 },
    Map { min_grade: u32 },
    Recall { k: usize, min_grade: u32 },
}

impl Metric {
    pub fn evaluate(&self, run: &RunList, judg: &Judgments) -> PerQuery {
        match *self {
            Metric::Ndcg { k } => ndcg_at_k(run, judg, k),
            Metric::Mrr { k, min_grade } => mrr_at_k(run, judg, k, min_grade),
            Metric::Map { min_grade } => map_metric(run, judg, min_grade),
            Metric::Recall { k, min_grade } => recall_at_k(run, judg, k, min_grade),
        }
    }

    /// The eight rows of the structural-remapping table.
    pub fn remap_table() -> Vec<Metric> {
        let mut out = Vec::new();
        for g in 1..=3 {
            out.push(Metric::Map { min_grade: g });
            out.push(Metric::Mrr {
                k: 10,
                min_grade: g,
            });
        }
        out.push(Metric::Ndcg { k: 10 });
        out.push(Metric::Ndcg { k: 1000 });
        out
    }

    /// Columns reported by the mask-count sweep.
    pub fn sweep_set() -> Vec<Metric> {
        vec![
            Metric::Ndcg { k: 10 },
            Metric::Ndcg { k: 1000 },
            Metric::Mrr {
                k: 10,
                min_grade: 2,
            },
            Metric::Map { min_grade: 2 },
        ]
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Metric::Ndcg { k } => write!(f, "nDCG@{k}"),
            Metric::Mrr { k, min_grade } => write!(f, "MRR(rel>={min_grade})@{k}"),
            Metric::Map { min_grade } => write!(f, "MAP(rel>={min_grade})"),
            Metric::Recall { k, min_grade } => write!(f, "R(rel>={min_grade})@{k}"),
        }
    }
}

/// Mean over queries, in query-id order.
pub fn mean(values: &PerQuery) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.values().sum::<f64>() / values.len() as f64
}
