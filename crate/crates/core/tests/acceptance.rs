//! Acceptance gate: one pass/fail line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use common::*;
use latemask::encoder::{EncoderConfig, ToyEncoder};
use latemask::harness::{run_pipeline, Engine, PhaseConfig, PipelineParams, QueryForm, QuerySet};
use latemask::maxsim::{maxsim_score, weighted_maxsim};
use latemask::metrics::{ap_query, mrr_query, ndcg_query, recall_query};
use latemask::stats::paired_t_test;
use latemask::synth::{SynthConfig, SyntheticCollection};
use latemask::token::QueryBuilder;
use latemask::{
    candidate_set, maxsim, remap, rerank, weight_histogram, CandidateSet, MaskPolicy,
    RemapCondition, TokenIndex,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn toy_encoder() -> ToyEncoder {
    ToyEncoder::new(EncoderConfig::default(), QueryBuilder::default()).unwrap()
}

fn bits(row: &[f32]) -> Vec<u32> {
    row.iter().map(|x| x.to_bits()).collect()
}

fn attention_contract() -> Outcome {
    let start = Instant::now();
    let enc = toy_encoder();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let counts = [0usize, 8, 24, 64, 96];
    for q in 0..1000 {
        let text = random_text(&mut rng, 32);
        let encoded: Vec<_> = counts
            .iter()
            .map(|&n| {
                enc.encode_query(&text, MaskPolicy::FixedMaskCount(n))
                    .unwrap()
                    .1
            })
            .collect();
        let base = text.len() + 3;
        for (e, &n) in encoded.iter().zip(&counts) {
            check(
                e.len() == base + n,
                format!("query {q}: wrong length for {n} masks"),
            )?;
            for i in 0..base {
                check(
                    bits(e.row(i)) == bits(encoded[0].row(i)),
                    format!("query {q}: row {i} differs at {n} masks"),
                )?;
            }
        }
        let longest = encoded.last().unwrap();
        for (e, &n) in encoded.iter().zip(&counts) {
            for p in base..base + n {
                check(
                    bits(e.row(p)) == bits(longest.row(p)),
                    format!("query {q}: mask at {p} differs at {n} masks"),
                )?;
            }
        }
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(10), format!("took {t:.2?}"))?;
    Ok(format!(
        "1000 queries x {counts:?} masks bit-identical in {t:.2?}"
    ))
}

fn maxsim_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    for c in 0..200 {
        let n_docs = rng.random_range(1..=20);
        let corpus = random_corpus(&mut rng, n_docs, 8, 8);
        let rows = rng.random_range(1..=8);
        let q = random_matrix(&mut rng, rows, 8, latemask::TokenKind::Text);
        let ids: Vec<u32> = corpus.doc_ids().collect();
        for id in &ids {
            let doc = corpus.get(*id).unwrap();
            let d = (maxsim(&q, doc).unwrap().score - oracle_maxsim(&q, doc)).abs();
            worst = worst.max(d);
            check(d <= 1e-5, format!("corpus {c}: maxsim off by {d:e}"))?;
        }
        let cutoff = rng.random_range(1..=n_docs);
        let got = rerank(&q, &CandidateSet::from_ids(ids.clone()), &corpus, cutoff).unwrap();
        let want = oracle_rank(&q, &corpus, &ids, cutoff);
        check(
            got.len() == want.len(),
            format!("corpus {c}: {} results, want {}", got.len(), want.len()),
        )?;
        for (g, w) in got.iter().zip(&want) {
            check(g.doc_id == w.0, format!("corpus {c}: ordering differs"))?;
            check(
                (g.score - w.1).abs() <= 1e-5,
                format!("corpus {c}: rerank score off"),
            )?;
        }
    }
    Ok(format!(
        "200 corpora, exact ordering, max score error {worst:.1e}"
    ))
}

fn decomposition() -> Outcome {
    let enc = toy_encoder();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0f64;
    for p in 0..500 {
        let text = random_text(&mut rng, 12);
        let n = rng.random_range(0..=64);
        let q = enc
            .encode_query(&text, MaskPolicy::FixedMaskCount(n))
            .unwrap()
            .1;
        let r = remap(&q, RemapCondition::MaskToStructuralAndText).unwrap();
        let doc = enc.encode_document(&random_text(&mut rng, 30)).unwrap();

        let mut weights: BTreeMap<usize, u32> = BTreeMap::new();
        for i in 0..r.len() {
            let rep = (0..r.len())
                .find(|&t| !r.kind(t).is_mask() && bits(r.row(t)) == bits(r.row(i)))
                .ok_or(format!("pair {p}: row {i} has no non-mask twin"))?;
            *weights.entry(rep).or_default() += 1;
        }
        check(weights.values().all(|&w| w >= 1), "weight below 1")?;
        check(
            weights.values().sum::<u32>() as usize == r.len(),
            format!("pair {p}: weights do not sum to |E_q|"),
        )?;
        check(
            weight_histogram(&r).unwrap() == weights,
            format!("pair {p}: weight_histogram disagrees"),
        )?;

        let s = maxsim_score(&r, &doc).unwrap();
        let decomposed: f64 = weights
            .iter()
            .map(|(&t, &w)| w as f64 * oracle_row_max(r.row(t), &doc))
            .sum();
        let d = (s - decomposed)
            .abs()
            .max((weighted_maxsim(&r, &weights, &doc).unwrap() - s).abs());
        worst = worst.max(d);
        check(d <= 1e-5, format!("pair {p}: decomposition off by {d:e}"))?;
    }
    Ok(format!("500 pairs, max error {worst:.1e}"))
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0f64;
    for i in 0..100 {
        let qid = format!("q{i}");
        let n = rng.random_range(1..=60);
        let (docs, judg) = random_instance(&mut rng, &qid, n);
        let ranked = grades(&judg, &qid, &docs);
        let judged = judged_grades(&judg, &qid);
        for k in [1, 5, 10, 20, 1000] {
            worst = worst
                .max((ndcg_query(&docs, &judg, &qid, k) - oracle_ndcg(&ranked, &judged, k)).abs());
            for g in 1..=3 {
                worst = worst
                    .max((mrr_query(&docs, &judg, &qid, k, g) - oracle_rr(&ranked, k, g)).abs());
                worst = worst.max(
                    (recall_query(&docs, &judg, &qid, k, g)
                        - oracle_recall(&ranked, &judged, k, g))
                    .abs(),
                );
            }
        }
        for g in 1..=3 {
            worst =
                worst.max((ap_query(&docs, &judg, &qid, g) - oracle_ap(&ranked, &judged, g)).abs());
        }
    }
    check(worst <= 1e-9, format!("metric error {worst:e}"))?;
    let t = paired_t_test(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
    check(
        (t.p_value - 0.0305).abs() <= 1e-3,
        format!("t-test p = {}", t.p_value),
    )?;
    Ok(format!(
        "100 instances, max error {worst:.1e}; df=3 p = {:.4}",
        t.p_value
    ))
}

fn candidate_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus = random_corpus(&mut rng, 200, 12, 16);
    let index = TokenIndex::build(&corpus);
    let ks = [1, 2, 5, 10, 50, 200, 1000, index.len()];
    for q in 0..100 {
        let rows = rng.random_range(1..=40);
        let query = random_matrix(&mut rng, rows, 16, latemask::TokenKind::Text);
        let sets: Vec<_> = ks
            .iter()
            .map(|&k| candidate_set(&query, k, &index).unwrap())
            .collect();
        for w in sets.windows(2) {
            check(w[0].is_subset(&w[1]), format!("query {q}: not monotone"))?;
        }
        check(
            sets.last().unwrap().len() == corpus.len(),
            format!("query {q}: exhaustive k misses documents"),
        )?;
    }
    Ok(format!("100 queries, k in {ks:?}"))
}

fn sweep_run(bin: &str, dir: &Path, workers: usize) -> Result<(Vec<u8>, Duration), String> {
    let out = dir.join(format!("w{workers}"));
    let start = Instant::now();
    let status = Command::new(bin)
        .arg("mask-sweep")
        .arg("--store")
        .arg(dir.join("corpus.liv"))
        .arg("--queries")
        .arg(dir.join("queries.tsv"))
        .arg("--qrels")
        .arg(dir.join("qrels.txt"))
        .arg("--vocab")
        .arg(dir.join("vocab.txt"))
        .arg("--out-dir")
        .arg(&out)
        .arg("--workers")
        .arg(workers.to_string())
        .stderr(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    let t = start.elapsed();
    check(status.success(), format!("mask-sweep exited with {status}"))?;
    Ok((
        std::fs::read(out.join("mask_sweep.csv")).map_err(|e| e.to_string())?,
        t,
    ))
}

fn end_to_end_sweep() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_latemask");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = Command::new(bin)
        .args(["synth", "--out-dir"])
        .arg(dir.path())
        .stderr(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    check(status.success(), "synth failed")?;

    let (first, t1) = sweep_run(bin, dir.path(), 1)?;
    let (again, t2) = sweep_run(bin, dir.path(), 1)?;
    let (four, t4) = sweep_run(bin, dir.path(), 4)?;
    for t in [t1, t2, t4] {
        check(t < Duration::from_secs(60), format!("sweep took {t:.2?}"))?;
    }
    check(first == again, "reruns differ")?;
    check(first == four, "1 vs 4 workers differ")?;

    let mut reader = csv::Reader::from_reader(first.as_slice());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let metric_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("nDCG") || h.starts_with("MRR") || h.starts_with("MAP"))
        .map(|(i, _)| i)
        .collect();
    check(
        metric_cols.len() == 4,
        format!("expected 4 metric columns, got {headers:?}"),
    )?;
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        for &c in &metric_cols {
            let v: f64 = rec[c]
                .parse()
                .map_err(|_| format!("bad value {:?}", &rec[c]))?;
            check(
                (0.0..=1.0).contains(&v),
                format!("metric {} = {v} outside [0,1]", &headers[c]),
            )?;
        }
        rows += 1;
    }
    check(rows == 49, format!("{rows} rows"))?;
    Ok(format!(
        "49 rows, {t1:.1?} / {t2:.1?} / {t4:.1?} (1, 1, 4 workers), byte-identical"
    ))
}

fn phase_wiring() -> Outcome {
    let coll = SyntheticCollection::generate(&SynthConfig::default());
    let enc = toy_encoder();
    let corpus = coll.encode_corpus(&enc).unwrap();
    let engine = Engine::new(&corpus);
    let queries = QuerySet::toy(enc, coll.queries.clone());
    let params = PipelineParams {
        k_per_token: 20,
        ..Default::default()
    };
    let mut forms = vec![QueryForm::baseline()];
    forms.push(QueryForm::new(
        MaskPolicy::FixedMaskCount(24),
        RemapCondition::MaskToText,
    ));
    for form in forms {
        let runs: Vec<_> = [
            PhaseConfig::SetRetrievalOnly,
            PhaseConfig::RerankOnly,
            PhaseConfig::Both,
        ]
        .iter()
        .map(|&p| run_pipeline(&engine, &queries, form, form, p, &params).unwrap())
        .collect();
        check(
            runs[0] == runs[1] && runs[1] == runs[2],
            format!("phases differ for {form:?}"),
        )?;
        let cached = engine
            .evaluate(&queries, &[(form, form)], &params, false)
            .unwrap();
        check(
            cached[0] == runs[0],
            "cached evaluation differs from direct pipeline",
        )?;
    }
    Ok("3 phase configurations identical for 2 forms over 100 queries".into())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("attention contract", attention_contract),
        ("maxsim oracle", maxsim_oracle),
        ("term-weighting decomposition", decomposition),
        ("metric oracle", metric_oracle),
        ("candidate monotonicity", candidate_monotonicity),
        ("end-to-end sweep", end_to_end_sweep),
        ("phase wiring", phase_wiring),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
