//! Seeded synthetic collection: topical documents, short queries drawn from
//! a source document, and graded judgments from token overlap.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::ToyEncoder;
use crate::error::Result;
use crate::store::CorpusStore;
use crate::trec::Judgments;
use crate::tsv::{format_token_tsv, write_queries, QueryText};
use crate::vocab::Vocab;

const SPECIAL: [&str; 5] = ["[PAD]", "[Q]", "[CLS]", "[SEP]", "[MASK]"];
const WHAT: u32 = SPECIAL.len() as u32;
const IS: u32 = WHAT + 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub docs: usize,
    pub doc_len: usize,
    /// Content words, including "what" and "is".
    pub vocab_size: usize,
    pub queries: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    /// Probability a document token is drawn from its topic.
    pub topic_affinity: f64,
    /// Probability a query is phrased "what is ...".
    pub what_is_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 1000,
            doc_len: 20,
            vocab_size: 500,
            queries: 100,
            topics: 25,
            words_per_topic: 20,
            topic_affinity: 0.75,
            what_is_rate: 0.3,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCollection {
    pub vocab: Vocab,
    pub documents: Vec<(u32, Vec<u32>)>,
    pub queries: Vec<QueryText>,
    pub qrels: Judgments,
}

fn build_vocab(size: usize) -> Vocab {
    let mut words: Vec<String> = SPECIAL.iter().map(|s| s.to_string()).collect();
    words.push("what".into());
    words.push("is".into());
    words.extend((2..size).map(|i| format!("w{i:03}")));
    Vocab::new(words)
}

impl SyntheticCollection {
    pub fn generate(cfg: &SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let vocab = build_vocab(cfg.vocab_size.max(3));
        let content: Vec<u32> = (IS + 1..vocab.len() as u32).collect();

        let topics: Vec<Vec<u32>> = (0..cfg.topics.max(1))
            .map(|_| {
                content
                    .choose_multiple(&mut rng, cfg.words_per_topic.min(content.len()))
                    .copied()
                    .collect()
            })
            .collect();

        let documents: Vec<(u32, Vec<u32>)> = (0..cfg.docs as u32)
            .map(|doc_id| {
                let topic = &topics[rng.random_range(0..topics.len())];
                let toks = (0..cfg.doc_len.max(1))
                    .map(|_| {
                        if rng.random_bool(cfg.topic_affinity) {
                            *topic.choose(&mut rng).expect("topic words")
                        } else {
                            *content.choose(&mut rng).expect("content words")
                        }
                    })
                    .collect();
                (doc_id, toks)
            })
            .collect();

        let mut queries = Vec::with_capacity(cfg.queries);
        let mut qrels = Judgments::new();
        for n in 0..cfg.queries {
            let qid = format!("{}", 1000 + n);
            let (src_id, src) = &documents[rng.random_range(0..documents.len())];
            let mut distinct: Vec<u32> = src
                .iter()
                .copied()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            distinct.shuffle(&mut rng);
            let what_is = rng.random_bool(cfg.what_is_rate);
            let len = rng.random_range(3..=8usize);
            let n_content = if what_is { len - 2 } else { len }.min(distinct.len());
            let picked: Vec<u32> = distinct[..n_content].to_vec();
            let mut token_ids = Vec::with_capacity(len);
            if what_is {
                token_ids.extend([WHAT, IS]);
            }
            token_ids.extend(&picked);

            let query_words: BTreeSet<u32> = picked.iter().copied().collect();
            for (doc_id, toks) in &documents {
                let grade = if doc_id == src_id {
                    3
                } else {
                    let overlap = query_words.iter().filter(|w| toks.contains(w)).count();
                    let frac = overlap as f64 / query_words.len().max(1) as f64;
                    if frac >= 2.0 / 3.0 {
                        2
                    } else if overlap >= 2 && frac >= 1.0 / 3.0 {
                        1
                    } else {
                        0
                    }
                };
                if grade > 0 {
                    qrels.insert(qid.clone(), *doc_id, grade);
                }
            }
            queries.push(QueryText { qid, token_ids });
        }

        SyntheticCollection {
            vocab,
            documents,
            queries,
            qrels,
        }
    }

    /// Encodes every document with the toy encoder.
    pub fn encode_corpus(&self, encoder: &ToyEncoder) -> Result<CorpusStore> {
        encode_documents(&self.documents, encoder)
    }

    /// Writes `vocab.txt`, `docs.tsv`, `queries.tsv` and `qrels.txt`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.vocab.write(dir.join("vocab.txt"))?;
        let ids: Vec<String> = self.documents.iter().map(|(d, _)| d.to_string()).collect();
        fs::write(
            dir.join("docs.tsv"),
            format_token_tsv(
                ids.iter()
                    .zip(&self.documents)
                    .map(|(id, (_, t))| (id.as_str(), t.as_slice())),
            ),
        )?;
        write_queries(&self.queries, dir.join("queries.tsv"))?;
        fs::write(dir.join("qrels.txt"), self.qrels.to_qrels())?;
        Ok(())
    }
}

pub fn encode_documents(
    documents: &[(u32, Vec<u32>)],
    encoder: &ToyEncoder,
) -> Result<CorpusStore> {
    #[cfg(feature = "parallel")]
    let it = documents.par_iter();
    #[cfg(not(feature = "parallel"))]
    let it = documents.iter();
    let encoded = it
        .map(|(id, toks)| encoder.encode_document(toks).map(|m| (*id, m)))
        .collect::<Result<Vec<_>>>()?;
    let mut store = CorpusStore::new(encoder.config.dim)?;
    for (id, m) in encoded {
        store.push(id, m)?;
    }
    Ok(store)
}
