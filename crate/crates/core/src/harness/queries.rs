use crate::embedding::EmbeddingMatrix;
use crate::encoder::ToyEncoder;
use crate::error::{Error, Result};
use crate::remap::remap;
use crate::store::CorpusStore;
use crate::token::{MaskPolicy, STRUCTURAL_LEN};
use crate::tsv::QueryText;

use super::QueryForm;

/// The queries an experiment runs over.
///
/// Toy queries are encoded on demand. Stored queries come from an exported
/// store (one passage per query, query id = doc id) written with enough
/// trailing masks for every form requested; fewer masks are obtained by
/// truncation, which the attention contract makes exact.
#[derive(Clone, Debug)]
pub enum QuerySet {
    Toy {
        encoder: ToyEncoder,
        queries: Vec<QueryText>,
    },
    Stored {
        store: CorpusStore,
    },
}

impl QuerySet {
    pub fn toy(encoder: ToyEncoder, queries: Vec<QueryText>) -> Self {
        QuerySet::Toy { encoder, queries }
    }

    pub fn stored(store: CorpusStore) -> Result<Self> {
        for p in store.passages() {
            let kinds = p.rows.kinds();
            let first_mask = kinds
                .iter()
                .position(|k| k.is_mask())
                .unwrap_or(kinds.len());
            if kinds[first_mask..].iter().any(|k| !k.is_mask()) {
                return Err(Error::MalformedSequence(format!(
                    "stored query {} has non-mask rows after a mask",
                    p.doc_id
                )));
            }
        }
        Ok(QuerySet::Stored { store })
    }

    pub fn len(&self) -> usize {
        match self {
            QuerySet::Toy { queries, .. } => queries.len(),
            QuerySet::Stored { store } => store.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn qid(&self, i: usize) -> String {
        match self {
            QuerySet::Toy { queries, .. } => queries[i].qid.clone(),
            QuerySet::Stored { store } => store.passages()[i].doc_id.to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            QuerySet::Toy { encoder, .. } => encoder.config.dim,
            QuerySet::Stored { store } => store.dim(),
        }
    }

    /// Structural + text length.
    pub fn non_mask_len(&self, i: usize) -> usize {
        match self {
            QuerySet::Toy { queries, .. } => queries[i].token_ids.len() + STRUCTURAL_LEN,
            QuerySet::Stored { store } => {
                let rows = &store.passages()[i].rows;
                rows.len() - rows.mask_count()
            }
        }
    }

    pub fn text_ids(&self, i: usize) -> Option<&[u32]> {
        match self {
            QuerySet::Toy { queries, .. } => Some(&queries[i].token_ids),
            QuerySet::Stored { .. } => None,
        }
    }

    pub fn encoder(&self) -> Option<&ToyEncoder> {
        match self {
            QuerySet::Toy { encoder, .. } => Some(encoder),
            QuerySet::Stored { .. } => None,
        }
    }

    pub fn encode(&self, i: usize, policy: MaskPolicy) -> Result<EmbeddingMatrix> {
        match self {
            QuerySet::Toy { encoder, queries } => {
                Ok(encoder.encode_query(&queries[i].token_ids, policy)?.1)
            }
            QuerySet::Stored { store } => {
                let rows = &store.passages()[i].rows;
                let base = rows.len() - rows.mask_count();
                let want = policy.mask_count(base);
                if want > rows.mask_count() {
                    return Err(Error::InvalidArgument(format!(
                        "stored query {} has {} masks, {want} requested",
                        store.passages()[i].doc_id,
                        rows.mask_count()
                    )));
                }
                Ok(rows.prefix(base + want))
            }
        }
    }

    pub fn encode_form(&self, i: usize, form: QueryForm) -> Result<EmbeddingMatrix> {
        remap(&self.encode(i, form.policy)?, form.remap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::TokenKind;

    #[test]
    fn stored_truncates_trailing_masks() {
        let enc = ToyEncoder::default();
        let (_, full) = enc
            .encode_query(&[5, 6], MaskPolicy::FixedMaskCount(10))
            .unwrap();
        let mut store = CorpusStore::new(full.dim()).unwrap();
        store.push(77, full.clone()).unwrap();
        let set = QuerySet::stored(store).unwrap();
        assert_eq!(set.qid(0), "77");
        assert_eq!(set.non_mask_len(0), 5);
        let four = set.encode(0, MaskPolicy::FixedMaskCount(4)).unwrap();
        assert_eq!(four, full.prefix(9));
        assert_eq!(
            set.encode(0, MaskPolicy::PadToTotalLength(8))
                .unwrap()
                .len(),
            8
        );
        assert!(set.encode(0, MaskPolicy::FixedMaskCount(11)).is_err());
    }

    #[test]
    fn stored_rejects_interleaved_masks() {
        let mut m = EmbeddingMatrix::new(2);
        m.push_row(&[1.0, 0.0], TokenKind::Mask, 0).unwrap();
        m.push_row(&[0.0, 1.0], TokenKind::Text, 0).unwrap();
        let mut store = CorpusStore::new(2).unwrap();
        store.push(1, m).unwrap();
        assert!(QuerySet::stored(store).is_err());
    }
}
