use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::{shift_report, similarity_heatmap, Slot};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::remap::RemapCondition;
use crate::store::CorpusStore;
use crate::swap::{moved_positions, swap_first_two_to_end, swap_what_is};
use crate::token::{MaskPolicy, TokenKind};
use crate::trec::Judgments;
use crate::vocab::Vocab;

use super::report::{compare, csv_string, fmt_f, fmt_p, MetricComparison};
use super::{Engine, PhaseConfig, QueryForm, QuerySet, SweepSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub mask_count: usize,
    /// Mean structural + text + mask length over the queries.
    pub mean_total_len: f64,
    /// Point whose mean length is closest to the baseline length.
    pub baseline_nearest: bool,
    pub comparisons: Vec<MetricComparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub phase: PhaseConfig,
    pub remap: RemapCondition,
    pub baseline_total_len: usize,
    pub family_size: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> Result<String> {
        let metrics = Metric::sweep_set();
        let mut header: Vec<String> = ["mask_count", "mean_total_len", "baseline_nearest"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for m in &metrics {
            header.push(m.to_string());
            header.push(format!("p {m}"));
            header.push(format!("sig {m}"));
        }
        header.push("family_size".into());
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut rec = vec![
                    r.mask_count.to_string(),
                    format!("{:.3}", r.mean_total_len),
                    r.baseline_nearest.to_string(),
                ];
                for c in &r.comparisons {
                    rec.push(fmt_f(c.mean));
                    rec.push(fmt_p(c.sig.p_value));
                    rec.push(c.sig.significant.to_string());
                }
                rec.push(self.family_size.to_string());
                rec
            })
            .collect();
        csv_string(&header, &rows)
    }
}

fn mean_total_len(queries: &QuerySet, policy: MaskPolicy) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let total: usize = (0..queries.len())
        .map(|i| {
            let nm = queries.non_mask_len(i);
            nm + policy.mask_count(nm)
        })
        .sum();
    total as f64 / queries.len() as f64
}

/// Mask-count sweep: each point appends exactly `n` masks, significance is
/// against the padded-to-baseline query, corrected over all points.
pub fn mask_sweep(
    engine: &Engine<'_>,
    queries: &QuerySet,
    judg: &Judgments,
    spec: &SweepSpec,
    verify: bool,
) -> Result<SweepReport> {
    spec.validate()?;
    let baseline = spec.baseline_form();
    let mut plan = vec![(baseline, baseline)];
    for &n in &spec.mask_counts {
        let modified = QueryForm::new(MaskPolicy::FixedMaskCount(n), spec.remap);
        plan.push(spec.phase.split(baseline, modified));
    }
    let runs = engine.evaluate(queries, &plan, &spec.params(), verify)?;
    let metrics = Metric::sweep_set();
    let family_size = spec.mask_counts.len();

    let lens: Vec<f64> = spec
        .mask_counts
        .iter()
        .map(|&n| mean_total_len(queries, MaskPolicy::FixedMaskCount(n)))
        .collect();
    let target = spec.baseline_total_len as f64;
    let nearest = lens
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(i, _)| i);

    let mut rows = Vec::with_capacity(spec.mask_counts.len());
    for (i, &n) in spec.mask_counts.iter().enumerate() {
        let comparisons = compare(&runs[0], &runs[i + 1], judg, &metrics)?
            .into_iter()
            .map(|mut c| {
                c.sig = c.sig.corrected(spec.alpha, family_size);
                c
            })
            .collect();
        rows.push(SweepRow {
            mask_count: n,
            mean_total_len: lens[i],
            baseline_nearest: nearest == Some(i),
            comparisons,
        });
    }
    Ok(SweepReport {
        phase: spec.phase,
        remap: spec.remap,
        baseline_total_len: spec.baseline_total_len,
        family_size,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemapReport {
    pub phase: PhaseConfig,
    pub conditions: Vec<RemapCondition>,
    /// `cells[c][m]`: condition `c`, metric `m` of [`Metric::remap_table`].
    pub cells: Vec<Vec<MetricComparison>>,
    pub family_size: usize,
}

impl RemapReport {
    /// Long form: `metric,condition,mean,p,significant,family_size`.
    pub fn to_csv(&self) -> Result<String> {
        let header: Vec<String> = [
            "metric",
            "condition",
            "mean",
            "p",
            "significant",
            "family_size",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let mut rows = Vec::new();
        for (m, metric) in Metric::remap_table().iter().enumerate() {
            for (c, cond) in self.conditions.iter().enumerate() {
                let cell = &self.cells[c][m];
                rows.push(vec![
                    metric.to_string(),
                    cond.label().to_string(),
                    fmt_f(cell.mean),
                    fmt_p(cell.sig.p_value),
                    cell.sig.significant.to_string(),
                    self.family_size.to_string(),
                ]);
            }
        }
        csv_string(&header, &rows)
    }

    /// Metrics down, conditions across; significant cells carry a dagger.
    pub fn to_table_csv(&self) -> Result<String> {
        let mut header = vec!["metric".to_string()];
        header.extend(self.conditions.iter().map(|c| c.label().to_string()));
        let rows: Vec<Vec<String>> = Metric::remap_table()
            .iter()
            .enumerate()
            .map(|(m, metric)| {
                let mut rec = vec![metric.to_string()];
                for c in 0..self.conditions.len() {
                    let cell = &self.cells[c][m];
                    let dagger = if cell.sig.significant { "\u{2020}" } else { "" };
                    rec.push(format!("{dagger}{:.3}", cell.mean));
                }
                rec
            })
            .collect();
        csv_string(&header, &rows)
    }
}

/// The four remapping conditions on the baseline query.
pub fn remap_experiment(
    engine: &Engine<'_>,
    queries: &QuerySet,
    judg: &Judgments,
    spec: &SweepSpec,
) -> Result<RemapReport> {
    let baseline = spec.baseline_form();
    let conditions = RemapCondition::ALL.to_vec();
    let plan: Vec<_> = conditions
        .iter()
        .map(|&c| {
            spec.phase
                .split(baseline, QueryForm::new(baseline.policy, c))
        })
        .collect();
    let runs = engine.evaluate(queries, &plan, &spec.params(), false)?;
    let family_size = conditions.len() - 1;
    let metrics = Metric::remap_table();
    let cells = runs
        .iter()
        .map(|run| {
            Ok(compare(&runs[0], run, judg, &metrics)?
                .into_iter()
                .map(|mut c| {
                    c.sig = c.sig.corrected(spec.alpha, family_size);
                    c
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RemapReport {
        phase: spec.phase,
        conditions,
        cells,
        family_size,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxlenCell {
    pub phase: PhaseConfig,
    pub total_len: usize,
    pub comparison: MetricComparison,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxlenReport {
    pub cells: Vec<MaxlenCell>,
    pub family_size: usize,
}

impl MaxlenReport {
    pub fn to_csv(&self) -> Result<String> {
        let header: Vec<String> = [
            "phase",
            "total_len",
            "metric",
            "mean",
            "p",
            "significant",
            "family_size",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let rows: Vec<Vec<String>> = self
            .cells
            .iter()
            .map(|c| {
                vec![
                    c.phase.to_string(),
                    c.total_len.to_string(),
                    c.comparison.metric.to_string(),
                    fmt_f(c.comparison.mean),
                    fmt_p(c.comparison.sig.p_value),
                    c.comparison.sig.significant.to_string(),
                    self.family_size.to_string(),
                ]
            })
            .collect();
        csv_string(&header, &rows)
    }
}

/// nDCG@10 and nDCG@1000 for every total length under every phase
/// configuration, against the baseline length.
pub fn maxlen_experiment(
    engine: &Engine<'_>,
    queries: &QuerySet,
    judg: &Judgments,
    spec: &SweepSpec,
) -> Result<MaxlenReport> {
    spec.validate()?;
    let baseline = spec.baseline_form();
    let mut plan = vec![(baseline, baseline)];
    let mut keys = Vec::new();
    for phase in PhaseConfig::ALL {
        for &len in &spec.total_lengths {
            let modified = QueryForm::new(MaskPolicy::PadToTotalLength(len), spec.remap);
            plan.push(phase.split(baseline, modified));
            keys.push((phase, len));
        }
    }
    let runs = engine.evaluate(queries, &plan, &spec.params(), false)?;
    let metrics = [Metric::Ndcg { k: 10 }, Metric::Ndcg { k: 1000 }];
    let non_baseline = spec
        .total_lengths
        .iter()
        .filter(|&&l| l != spec.baseline_total_len)
        .count();
    let family_size = (non_baseline * PhaseConfig::ALL.len()).max(1);
    let mut cells = Vec::new();
    for (i, (phase, total_len)) in keys.into_iter().enumerate() {
        for mut comparison in compare(&runs[0], &runs[i + 1], judg, &metrics)? {
            comparison.sig = comparison.sig.corrected(spec.alpha, family_size);
            cells.push(MaxlenCell {
                phase,
                total_len,
                comparison,
            });
        }
    }
    Ok(MaxlenReport { cells, family_size })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftRow {
    pub qid: String,
    pub variant: String,
    pub slot: Slot,
    pub distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SwapReport {
    pub rows: Vec<ShiftRow>,
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl SwapReport {
    /// Appends rows for `(qid, original, perturbed)` triples. Text slots are
    /// tracked through the move-first-two-to-end permutation.
    pub fn add_pairs<'a>(
        &mut self,
        variant: &str,
        pairs: impl IntoIterator<Item = (String, &'a EmbeddingMatrix, &'a EmbeddingMatrix)>,
    ) -> Result<()> {
        for (qid, original, perturbed) in pairs {
            let text_len = original
                .kinds()
                .iter()
                .filter(|k| **k == TokenKind::Text)
                .count();
            let report = shift_report(original, perturbed, &moved_positions(text_len))?;
            self.rows.extend(
                report
                    .distances
                    .into_iter()
                    .map(|(slot, distance)| ShiftRow {
                        qid: qid.clone(),
                        variant: variant.to_string(),
                        slot,
                        distance,
                    }),
            );
        }
        Ok(())
    }

    /// `query_id,variant,slot,distance`.
    pub fn to_csv(&self) -> Result<String> {
        let header: Vec<String> = ["query_id", "variant", "slot", "distance"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.qid.clone(),
                    r.variant.clone(),
                    r.slot.to_string(),
                    fmt_f(r.distance),
                ]
            })
            .collect();
        csv_string(&header, &rows)
    }

    /// `variant,slot,n,mean,median`.
    pub fn summary_csv(&self) -> Result<String> {
        let mut groups: BTreeMap<(String, Slot), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            groups
                .entry((r.variant.clone(), r.slot))
                .or_default()
                .push(r.distance);
        }
        let header: Vec<String> = ["variant", "slot", "n", "mean", "median"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<String>> = groups
            .into_iter()
            .map(|((variant, slot), mut v)| {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                vec![
                    variant,
                    slot.to_string(),
                    v.len().to_string(),
                    fmt_f(mean),
                    fmt_f(median(&mut v)),
                ]
            })
            .collect();
        csv_string(&header, &rows)
    }
}

/// Reorders eligible toy queries two ways: "what-is" (only queries starting
/// with "what is") and "any" (every 3 to 8 token query), both padded to 32.
pub fn swap_experiment(queries: &QuerySet, vocab: &Vocab) -> Result<SwapReport> {
    let QuerySet::Toy {
        encoder,
        queries: texts,
    } = queries
    else {
        return Err(Error::InvalidArgument(
            "swap experiment on stored queries needs a perturbed store; use SwapReport::add_pairs"
                .into(),
        ));
    };
    let policy = MaskPolicy::PadToTotalLength(32);
    let mut report = SwapReport::default();
    for (variant, what_is_only) in [("what-is", true), ("any", false)] {
        let mut encoded = Vec::new();
        for q in texts {
            let surface: Vec<String> = q
                .token_ids
                .iter()
                .map(|&id| vocab.surface_or_id(id))
                .collect();
            let eligible = if what_is_only {
                swap_what_is(&surface).is_some()
            } else {
                swap_first_two_to_end(&surface).is_some()
            };
            if !eligible {
                continue;
            }
            let swapped = swap_first_two_to_end(&q.token_ids).expect("eligible");
            let (_, original) = encoder.encode_query(&q.token_ids, policy)?;
            let (_, perturbed) = encoder.encode_query(&swapped, policy)?;
            encoded.push((q.qid.clone(), original, perturbed));
        }
        report.add_pairs(variant, encoded.iter().map(|(q, a, b)| (q.clone(), a, b)))?;
    }
    Ok(report)
}

/// Same report for exported stores: `perturbed` holds the reordered form of
/// each query in `original` under the same id.
pub fn swap_experiment_stored(
    original: &CorpusStore,
    perturbed: &CorpusStore,
    variant: &str,
) -> Result<SwapReport> {
    let mut report = SwapReport::default();
    let mut pairs = Vec::new();
    for p in original.passages() {
        let other = perturbed
            .get(p.doc_id)
            .ok_or(Error::UnknownDocument(p.doc_id))?;
        pairs.push((p.doc_id.to_string(), &p.rows, other));
    }
    report.add_pairs(variant, pairs)?;
    Ok(report)
}

/// Similarity heatmap CSV for each query, padded to `positions` tokens.
pub fn heatmaps(
    queries: &QuerySet,
    vocab: &Vocab,
    positions: usize,
) -> Result<Vec<(String, String)>> {
    (0..queries.len())
        .map(|i| {
            let m = queries.encode(i, MaskPolicy::PadToTotalLength(positions))?;
            Ok((
                queries.qid(i),
                similarity_heatmap(&m, positions)?.to_csv(vocab)?,
            ))
        })
        .collect()
}
