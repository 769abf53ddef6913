//! Browser bindings: similarity heatmap, remap term weights, and a small
//! mask-count sweep over a seeded synthetic collection.
//!
//! Each binding returns a JSON string. The `*_json` functions hold the logic
//! so it can be exercised natively.

use latemask::analysis::similarity_heatmap;
use latemask::encoder::{EncoderConfig, ToyEncoder};
use latemask::harness::{mask_sweep, Engine, QuerySet, SweepSpec};
use latemask::synth::{SynthConfig, SyntheticCollection};
use latemask::token::QueryBuilder;
use latemask::{remap, weight_histogram, MaskPolicy, RemapCondition, TokenKind};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const FIRST_WORD_ID: u32 = 1000;
const WORD_ID_SPAN: u32 = 29_000;

/// Stable word id in the toy vocabulary (FNV-1a over the lowercased word).
pub fn word_id(word: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in word.to_lowercase().bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    FIRST_WORD_ID + h % WORD_ID_SPAN
}

fn words(text: &str) -> Result<Vec<&str>, String> {
    let w: Vec<&str> = text.split_whitespace().collect();
    if w.is_empty() {
        return Err("query is empty".into());
    }
    Ok(w)
}

fn encoder(seed: u64) -> Result<ToyEncoder, String> {
    ToyEncoder::new(EncoderConfig::with_seed(seed), QueryBuilder::default())
        .map_err(|e| e.to_string())
}

fn label(kind: TokenKind, word: Option<&str>) -> String {
    match kind {
        TokenKind::Cls => "[CLS]".into(),
        TokenKind::Q => "[Q]".into(),
        TokenKind::Sep => "[SEP]".into(),
        TokenKind::Mask => "[MASK]".into(),
        _ => word.unwrap_or("?").to_string(),
    }
}

#[derive(Serialize)]
struct HeatmapOut {
    labels: Vec<String>,
    columns: Vec<usize>,
    values: Vec<Vec<f32>>,
}

pub fn heatmap_json(text: &str, positions: usize, seed: u64) -> Result<String, String> {
    let w = words(text)?;
    let ids: Vec<u32> = w.iter().map(|s| word_id(s)).collect();
    let (_, m) = encoder(seed)?
        .encode_query(&ids, MaskPolicy::PadToTotalLength(positions))
        .map_err(|e| e.to_string())?;
    let h = similarity_heatmap(&m, positions).map_err(|e| e.to_string())?;
    let labels = (0..m.len())
        .map(|i| label(m.kind(i), i.checked_sub(2).and_then(|t| w.get(t).copied())))
        .collect();
    let out = HeatmapOut {
        labels,
        columns: h.columns,
        values: h.values,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Weight {
    row: usize,
    label: String,
    weight: u32,
}

pub fn term_weights_json(
    text: &str,
    masks: usize,
    condition: &str,
    seed: u64,
) -> Result<String, String> {
    let w = words(text)?;
    let cond: RemapCondition = condition
        .parse()
        .map_err(|e: latemask::Error| e.to_string())?;
    if cond == RemapCondition::None && masks > 0 {
        return Err("without remapping, masks are not copies of any token".into());
    }
    let ids: Vec<u32> = w.iter().map(|s| word_id(s)).collect();
    let (_, m) = encoder(seed)?
        .encode_query(&ids, MaskPolicy::FixedMaskCount(masks))
        .map_err(|e| e.to_string())?;
    let r = remap(&m, cond).map_err(|e| e.to_string())?;
    let hist = weight_histogram(&r).map_err(|e| e.to_string())?;
    let out: Vec<Weight> = hist
        .into_iter()
        .map(|(row, weight)| Weight {
            row,
            label: label(
                r.kind(row),
                row.checked_sub(2).and_then(|t| w.get(t).copied()),
            ),
            weight,
        })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurvePoint {
    mask_count: usize,
    metric: String,
    mean: f64,
    baseline: f64,
    p_value: f64,
    significant: bool,
}

/// nDCG@10 and the other sweep metrics over `0..=max_masks` in `step`s.
pub fn sweep_curve_json(
    docs: usize,
    queries: usize,
    max_masks: usize,
    step: usize,
    seed: u64,
) -> Result<String, String> {
    if step == 0 {
        return Err("step must be at least 1".into());
    }
    let coll = SyntheticCollection::generate(&SynthConfig {
        docs,
        queries,
        seed,
        ..Default::default()
    });
    let enc = ToyEncoder::new(
        EncoderConfig::default(),
        QueryBuilder::new(coll.vocab.special_tokens()),
    )
    .map_err(|e| e.to_string())?;
    let corpus = coll.encode_corpus(&enc).map_err(|e| e.to_string())?;
    let engine = Engine::new(&corpus);
    let set = QuerySet::toy(enc, coll.queries.clone());
    let spec = SweepSpec {
        mask_counts: (0..=max_masks).step_by(step).collect(),
        k_per_token: 50,
        rerank_cutoff: 100,
        ..Default::default()
    };
    let report = mask_sweep(&engine, &set, &coll.qrels, &spec, false).map_err(|e| e.to_string())?;
    let out: Vec<CurvePoint> = report
        .rows
        .iter()
        .flat_map(|row| {
            row.comparisons.iter().map(move |c| CurvePoint {
                mask_count: row.mask_count,
                metric: c.metric.to_string(),
                mean: c.mean,
                baseline: c.baseline_mean,
                p_value: c.sig.p_value,
                significant: c.sig.significant,
            })
        })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn heatmap(text: &str, positions: usize, seed: u64) -> Result<String, JsValue> {
    heatmap_json(text, positions, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn term_weights(
    text: &str,
    masks: usize,
    condition: &str,
    seed: u64,
) -> Result<String, JsValue> {
    term_weights_json(text, masks, condition, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sweep_curve(
    docs: usize,
    queries: usize,
    max_masks: usize,
    step: usize,
    seed: u64,
) -> Result<String, JsValue> {
    sweep_curve_json(docs, queries, max_masks, step, seed).map_err(|e| JsValue::from_str(&e))
}
