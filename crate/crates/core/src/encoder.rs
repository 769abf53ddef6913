//! A deterministic, training-free stand-in for the BERT encoder.
//!
//! Each token gets a hashed base vector (token identity plus a weaker
//! position term). Contextualization is a single attention-style layer with
//! uniform weights over the positions the attention mask allows:
//!
//! ```text
//! row_i = normalize(base_i + mean_{j in A(i)} base_j)
//! ```
//!
//! Because `A(i)` never contains a mask column other than `i` itself, non-mask
//! rows are bit-identical for any number of appended masks, and every mask row
//! depends only on the non-mask tokens and its own (id, position).

use serde::{Deserialize, Serialize};

use crate::embedding::{normalize, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::token::{
    build_attention_mask, build_document_input, AttentionMask, MaskPolicy, QueryBuilder, TokenSeq,
};

const TOKEN_DOMAIN: u64 = 0x746f_6b65_6e00_0000;
const POSITION_DOMAIN: u64 = 0x706f_7369_7400_0000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub dim: usize,
    pub seed: u64,
    pub position_weight: f32,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            dim: 16,
            seed: 42,
            position_weight: 0.25,
        }
    }
}

impl EncoderConfig {
    pub fn with_seed(seed: u64) -> Self {
        EncoderConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "encoder dim must be >= 2, got {}",
                self.dim
            )));
        }
        if !self.position_weight.is_finite() {
            return Err(Error::InvalidArgument(
                "position_weight must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform value in [-1, 1) from a counter-based hash.
#[inline]
fn hashed_unit(seed: u64, domain: u64, key: u64, counter: u64) -> f32 {
    let h = mix64(mix64(mix64(seed ^ domain) ^ key) ^ counter.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let bits = (h >> 40) as f32; // 24 bits, exact in f32
    bits * (2.0 / 16_777_216.0) - 1.0
}

/// Unit-norm base vector for `token_id` at `position`.
pub fn base_vector(token_id: u32, position: usize, cfg: &EncoderConfig) -> Vec<f32> {
    let mut v: Vec<f32> = (0..cfg.dim as u64)
        .map(|c| {
            let tok = hashed_unit(cfg.seed, TOKEN_DOMAIN, token_id as u64, c);
            let pos = hashed_unit(cfg.seed, POSITION_DOMAIN, position as u64, c);
            tok + cfg.position_weight * pos
        })
        .collect();
    normalize(&mut v);
    v
}

pub fn contextualize(
    seq: &TokenSeq,
    mask: &AttentionMask,
    cfg: &EncoderConfig,
) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    if seq.len() != mask.len() {
        return Err(Error::DimMismatch {
            expected: seq.len(),
            actual: mask.len(),
        });
    }
    let bases: Vec<Vec<f32>> = seq
        .ids()
        .enumerate()
        .map(|(pos, id)| base_vector(id, pos, cfg))
        .collect();

    let mut out = EmbeddingMatrix::new(cfg.dim);
    let mut ctx = vec![0.0f32; cfg.dim];
    for (i, tok) in seq.tokens().iter().enumerate() {
        ctx.iter_mut().for_each(|x| *x = 0.0);
        let mut count = 0usize;
        for j in mask.attended(i) {
            for (c, b) in ctx.iter_mut().zip(&bases[j]) {
                *c += b;
            }
            count += 1;
        }
        let inv = 1.0 / count as f32;
        let mut row: Vec<f32> = bases[i]
            .iter()
            .zip(&ctx)
            .map(|(b, c)| b + c * inv)
            .collect();
        normalize(&mut row);
        out.push_row(&row, tok.kind, tok.id)?;
    }
    Ok(out)
}

/// Toy encoder bundled with a query builder.
#[derive(Clone, Copy, Debug, Default)]
pub struct ToyEncoder {
    pub config: EncoderConfig,
    pub builder: QueryBuilder,
}

impl ToyEncoder {
    pub fn new(config: EncoderConfig, builder: QueryBuilder) -> Result<Self> {
        config.validate()?;
        Ok(ToyEncoder { config, builder })
    }

    pub fn encode_seq(&self, seq: &TokenSeq) -> Result<EmbeddingMatrix> {
        contextualize(seq, &build_attention_mask(seq), &self.config)
    }

    pub fn encode_query(
        &self,
        text_ids: &[u32],
        policy: MaskPolicy,
    ) -> Result<(TokenSeq, EmbeddingMatrix)> {
        let seq = self.builder.build(text_ids, policy)?;
        let emb = self.encode_seq(&seq)?;
        Ok((seq, emb))
    }

    pub fn encode_document(&self, token_ids: &[u32]) -> Result<EmbeddingMatrix> {
        if token_ids.is_empty() {
            return Err(Error::EmptyDocument);
        }
        self.encode_seq(&build_document_input(token_ids))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{cosine, norm};
    use crate::token::{build_query_input, Token, TokenKind};

    #[test]
    fn base_vector_deterministic() {
        let cfg = EncoderConfig::with_seed(42);
        let a = base_vector(7, 3, &cfg);
        let b = base_vector(7, 3, &cfg);
        assert_eq!(a, b);
        assert!((norm(&a) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn position_term_matters() {
        let cfg = EncoderConfig::with_seed(42);
        let c = cosine(&base_vector(7, 3, &cfg), &base_vector(7, 4, &cfg));
        assert!(c < 1.0);
        assert!(c > 0.5, "token identity should dominate, got {c}");
    }

    #[test]
    fn single_token_is_its_base_vector() {
        let cfg = EncoderConfig::default();
        let seq = TokenSeq::from_tokens(vec![Token::new(11, TokenKind::Text)]);
        let m = contextualize(&seq, &build_attention_mask(&seq), &cfg).unwrap();
        let base = base_vector(11, 0, &cfg);
        for (a, b) in m.row(0).iter().zip(&base) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn appended_mask_leaves_prefix_rows() {
        let cfg = EncoderConfig::default();
        let enc = ToyEncoder::new(cfg, QueryBuilder::default()).unwrap();
        let (_, four) = enc
            .encode_query(&[2000], MaskPolicy::FixedMaskCount(0))
            .unwrap();
        let (_, five) = enc
            .encode_query(&[2000], MaskPolicy::FixedMaskCount(1))
            .unwrap();
        for i in 0..4 {
            assert_eq!(four.row(i), five.row(i));
        }
    }

    #[test]
    fn mask_row_ignores_later_masks() {
        let enc = ToyEncoder::default();
        let (_, one) = enc
            .encode_query(&[2000], MaskPolicy::FixedMaskCount(1))
            .unwrap();
        let (_, two) = enc
            .encode_query(&[2000], MaskPolicy::FixedMaskCount(2))
            .unwrap();
        assert_eq!(one.row(4), two.row(4));
    }

    #[test]
    fn rejects_mismatched_mask() {
        let cfg = EncoderConfig::default();
        let a = build_query_input(&[5], MaskPolicy::FixedMaskCount(0)).unwrap();
        let b = build_query_input(&[5], MaskPolicy::FixedMaskCount(1)).unwrap();
        assert!(matches!(
            contextualize(&a, &build_attention_mask(&b), &cfg),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = EncoderConfig {
            dim: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EncoderConfig {
            position_weight: f32::NAN,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
