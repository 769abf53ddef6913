//! TREC run and qrels files.
//!
//! Run lines are `qid Q0 docid rank score tag`; qrels lines are
//! `qid 0 docid grade`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub type QueryId = String;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankedDoc {
    pub doc_id: u32,
    pub score: f64,
}

/// Ranked results per query, best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunList {
    queries: BTreeMap<QueryId, Vec<RankedDoc>>,
}

impl RunList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: impl Into<QueryId>, docs: Vec<RankedDoc>) {
        self.queries.insert(qid.into(), docs);
    }

    pub fn get(&self, qid: &str) -> Option<&[RankedDoc]> {
        self.queries.get(qid).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QueryId, &[RankedDoc])> {
        self.queries.iter().map(|(q, d)| (q, d.as_slice()))
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &QueryId> {
        self.queries.keys()
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn to_trec(&self, tag: &str) -> String {
        let mut out = String::new();
        for (qid, docs) in &self.queries {
            for (rank, d) in docs.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{qid} Q0 {} {} {:.6} {tag}",
                    d.doc_id,
                    rank + 1,
                    d.score
                );
            }
        }
        out
    }

    pub fn parse_trec(text: &str) -> Result<Self> {
        let mut rows: BTreeMap<QueryId, Vec<(u64, RankedDoc)>> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() < 5 {
                return Err(parse_err(n, "expected `qid Q0 docid rank score [tag]`"));
            }
            let doc_id = fields[2]
                .parse()
                .map_err(|_| parse_err(n, "docid must be an unsigned integer"))?;
            let rank = fields[3]
                .parse()
                .map_err(|_| parse_err(n, "rank must be an integer"))?;
            let score = fields[4]
                .parse()
                .map_err(|_| parse_err(n, "score must be a number"))?;
            rows.entry(fields[0].to_string())
                .or_default()
                .push((rank, RankedDoc { doc_id, score }));
        }
        let mut run = RunList::new();
        for (qid, mut docs) in rows {
            docs.sort_by_key(|(rank, _)| *rank);
            run.insert(qid, docs.into_iter().map(|(_, d)| d).collect());
        }
        Ok(run)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_trec(&fs::read_to_string(path)?)
    }
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line: line + 1,
        message: message.to_string(),
    }
}

/// Graded relevance judgments. Unjudged pairs count as grade 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Judgments {
    by_query: BTreeMap<QueryId, BTreeMap<u32, u32>>,
}

impl Judgments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: impl Into<QueryId>, doc_id: u32, grade: u32) {
        self.by_query
            .entry(qid.into())
            .or_default()
            .insert(doc_id, grade);
    }

    pub fn grade(&self, qid: &str, doc_id: u32) -> u32 {
        self.by_query
            .get(qid)
            .and_then(|m| m.get(&doc_id))
            .copied()
            .unwrap_or(0)
    }

    /// All judged (doc, grade) pairs for a query, by doc id.
    pub fn judged(&self, qid: &str) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.by_query
            .get(qid)
            .into_iter()
            .flat_map(|m| m.iter().map(|(d, g)| (*d, *g)))
    }

    pub fn count_at_least(&self, qid: &str, min_grade: u32) -> usize {
        self.judged(qid).filter(|(_, g)| *g >= min_grade).count()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &QueryId> {
        self.by_query.keys()
    }

    pub fn to_qrels(&self) -> String {
        let mut out = String::new();
        for (qid, docs) in &self.by_query {
            for (doc, grade) in docs {
                let _ = writeln!(out, "{qid} 0 {doc} {grade}");
            }
        }
        out
    }

    /// Negative grades are read as 0.
    pub fn parse_qrels(text: &str) -> Result<Self> {
        let mut j = Judgments::new();
        for (n, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 4 {
                return Err(parse_err(n, "expected `qid 0 docid grade`"));
            }
            let doc_id = fields[2]
                .parse()
                .map_err(|_| parse_err(n, "docid must be an unsigned integer"))?;
            let grade: i64 = fields[3]
                .parse()
                .map_err(|_| parse_err(n, "grade must be an integer"))?;
            j.insert(fields[0], doc_id, grade.max(0) as u32);
        }
        Ok(j)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_qrels(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_format() {
        let mut run = RunList::new();
        run.insert(
            "q1",
            vec![
                RankedDoc {
                    doc_id: 4,
                    score: 2.5,
                },
                RankedDoc {
                    doc_id: 1,
                    score: 1.0,
                },
            ],
        );
        let text = run.to_trec("latemask");
        assert_eq!(
            text,
            "q1 Q0 4 1 2.500000 latemask\nq1 Q0 1 2 1.000000 latemask\n"
        );
        assert_eq!(RunList::parse_trec(&text).unwrap(), run);
    }

    #[test]
    fn qrels_format() {
        let j =
            Judgments::parse_qrels("19335 0 1017759 0\n19335 0 1082489 3\n\n42 0 7 -1\n").unwrap();
        assert_eq!(j.grade("19335", 1082489), 3);
        assert_eq!(j.grade("42", 7), 0);
        assert_eq!(j.grade("nope", 1), 0);
        assert_eq!(j.count_at_least("19335", 1), 1);
        assert!(Judgments::parse_qrels("a b\n").is_err());
    }
}
