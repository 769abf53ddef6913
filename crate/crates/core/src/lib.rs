//! Late-interaction retrieval with `[MASK]` query augmentation.
//!
//! Queries are built as `[CLS] [Q] text [SEP] [MASK]*`, encoded under an
//! attention mask that hides every mask column from all other positions,
//! retrieved against an exact token index, and reranked by MaxSim. The
//! [`harness`] module drives the remapping, reordering and mask-count
//! experiments on top of that.

pub mod analysis;
pub mod embedding;
pub mod encoder;
pub mod error;
pub mod harness;
pub mod index;
pub mod maxsim;
pub mod metrics;
pub mod remap;
pub mod stats;
pub mod store;
pub mod swap;
pub mod synth;
pub mod token;
pub mod trec;
pub mod tsv;
pub mod vocab;

pub use embedding::EmbeddingMatrix;
pub use encoder::{EncoderConfig, ToyEncoder};
pub use error::{Error, Result};
pub use index::{candidate_set, CandidateSet, TokenIndex};
pub use maxsim::{maxsim, rerank, weight_histogram, ScoredDoc};
pub use remap::{remap, RemapCondition};
pub use store::{read_store, write_store, CorpusStore, StoredPassage};
pub use token::{
    build_attention_mask, build_query_input, AttentionMask, MaskPolicy, TokenKind, TokenSeq,
};
pub use trec::{Judgments, RankedDoc, RunList};
