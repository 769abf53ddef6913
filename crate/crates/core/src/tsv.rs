//! Pre-tokenized text files: `id<TAB>tok tok tok`, one record per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A pre-tokenized query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryText {
    pub qid: String,
    pub token_ids: Vec<u32>,
}

pub fn parse_token_tsv(text: &str) -> Result<Vec<(String, Vec<u32>)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, toks) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: n + 1,
            message: "expected `id<TAB>token ids`".into(),
        })?;
        let ids = toks
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>().map_err(|_| Error::Parse {
                    line: n + 1,
                    message: format!("bad token id {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((id.trim().to_string(), ids));
    }
    Ok(out)
}

pub fn format_token_tsv<'a>(records: impl IntoIterator<Item = (&'a str, &'a [u32])>) -> String {
    let mut out = String::new();
    for (id, toks) in records {
        out.push_str(id);
        out.push('\t');
        for (i, t) in toks.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{t}");
        }
        out.push('\n');
    }
    out
}

pub fn read_queries(path: impl AsRef<Path>) -> Result<Vec<QueryText>> {
    Ok(parse_token_tsv(&fs::read_to_string(path)?)?
        .into_iter()
        .map(|(qid, token_ids)| QueryText { qid, token_ids })
        .collect())
}

pub fn write_queries(queries: &[QueryText], path: impl AsRef<Path>) -> Result<()> {
    fs::write(
        path,
        format_token_tsv(
            queries
                .iter()
                .map(|q| (q.qid.as_str(), q.token_ids.as_slice())),
        ),
    )?;
    Ok(())
}

/// Documents keyed by numeric id.
pub fn read_documents(path: impl AsRef<Path>) -> Result<Vec<(u32, Vec<u32>)>> {
    parse_token_tsv(&fs::read_to_string(path)?)?
        .into_iter()
        .enumerate()
        .map(|(n, (id, toks))| {
            let id = id.parse::<u32>().map_err(|_| Error::Parse {
                line: n + 1,
                message: format!("document id {id:?} is not an unsigned integer"),
            })?;
            Ok((id, toks))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_formats() {
        let recs = parse_token_tsv("q1\t5 6 7\n\nq2\t8\n").unwrap();
        assert_eq!(
            recs,
            vec![
                ("q1".to_string(), vec![5, 6, 7]),
                ("q2".to_string(), vec![8])
            ]
        );
        let text = format_token_tsv(recs.iter().map(|(a, b)| (a.as_str(), b.as_slice())));
        assert_eq!(text, "q1\t5 6 7\nq2\t8\n");
        assert!(parse_token_tsv("q1 5 6").is_err());
        assert!(parse_token_tsv("q1\t5 x").is_err());
    }
}
