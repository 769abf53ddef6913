use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use latemask::encoder::{EncoderConfig, ToyEncoder};
use latemask::harness::{
    self, Engine, PhaseConfig, PipelineParams, QueryForm, QuerySet, Reranker, SweepSpec,
    BASELINE_TOTAL_LEN,
};
use latemask::index::CandidateSet;
use latemask::metrics::{mean, Metric};
use latemask::remap::RemapCondition;
use latemask::store::{read_store, write_store, CorpusStore};
use latemask::synth::{encode_documents, SynthConfig, SyntheticCollection};
use latemask::token::{MaskPolicy, QueryBuilder};
use latemask::trec::{Judgments, RankedDoc, RunList};
use latemask::tsv::{read_documents, read_queries};
use latemask::vocab::Vocab;

#[derive(Parser, Debug)]
#[command(
    name = "latemask",
    version,
    about = "MaxSim retrieval and [MASK] augmentation experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Document embedding store (LIV1).
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Pre-tokenized queries, `qid<TAB>ids`, encoded with the toy encoder.
    #[arg(long, global = true)]
    queries: Option<PathBuf>,
    /// Exported query embeddings (LIV1), used instead of --queries.
    #[arg(long, global = true)]
    query_store: Option<PathBuf>,
    /// TREC qrels.
    #[arg(long, global = true)]
    qrels: Option<PathBuf>,
    /// Vocabulary side-file.
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
    /// Seed for the toy encoder and the synthetic collection.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Toy encoder dimensionality.
    #[arg(long, global = true, default_value_t = 16)]
    dim: usize,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// JSON sweep configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    k_per_token: Option<usize>,
    #[arg(long, global = true)]
    rerank_cutoff: Option<usize>,
    /// none, all-to-text, mask-to-text or mask-to-all.
    #[arg(long, global = true)]
    remap: Option<RemapCondition>,
    /// set-retrieval-only, rerank-only or both.
    #[arg(long, global = true)]
    phase: Option<PhaseConfig>,
}

#[derive(Args, Debug, Clone, Copy)]
struct FormArgs {
    /// Append exactly this many masks.
    #[arg(long, conflicts_with = "total_len")]
    mask_count: Option<usize>,
    /// Pad with masks to this total length (default 32).
    #[arg(long)]
    total_len: Option<usize>,
}

impl FormArgs {
    fn policy(self) -> MaskPolicy {
        match (self.mask_count, self.total_len) {
            (Some(n), _) => MaskPolicy::FixedMaskCount(n),
            (None, Some(l)) => MaskPolicy::PadToTotalLength(l),
            (None, None) => MaskPolicy::PadToTotalLength(BASELINE_TOTAL_LEN),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the seeded synthetic collection and its encoded corpus.
    Synth {
        #[arg(long, default_value_t = 1000)]
        docs: usize,
        #[arg(long, default_value_t = 20)]
        doc_len: usize,
        #[arg(long, default_value_t = 500)]
        vocab_size: usize,
        #[arg(long, default_value_t = 100)]
        num_queries: usize,
    },
    /// Encode documents (--docs) or queries (--queries) into --store.
    Encode {
        #[arg(long)]
        docs: Option<PathBuf>,
        #[command(flatten)]
        form: FormArgs,
    },
    /// Build the token index and print its statistics.
    Index,
    /// First-phase candidate sets as a TREC run.
    Retrieve {
        #[command(flatten)]
        form: FormArgs,
    },
    /// Set retrieval plus MaxSim reranking as a TREC run.
    Rerank {
        #[command(flatten)]
        form: FormArgs,
        /// Rank candidates by their best token hit instead of MaxSim.
        #[arg(long)]
        passthrough: bool,
    },
    /// Structural token remapping table.
    RemapExp,
    /// Embedding shift after moving "what is" to the end.
    SwapExp {
        /// Reordered query embeddings matching --query-store by id.
        #[arg(long)]
        perturbed_store: Option<PathBuf>,
    },
    /// Metrics as the number of appended masks varies.
    MaskSweep {
        /// Skip re-encoding every sweep point to check the attention contract.
        #[arg(long)]
        no_verify: bool,
    },
    /// nDCG for each maximum query length under each phase configuration.
    MaxlenExp,
    /// Cosine similarity of each position to the non-mask tokens.
    Heatmap {
        #[arg(long, default_value_t = 65)]
        positions: usize,
        /// Only this query.
        #[arg(long)]
        qid: Option<String>,
    },
    /// Evaluate a TREC run against --qrels.
    Eval {
        #[arg(long)]
        run: PathBuf,
    },
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().with_context(|| format!("{flag} is required"))
}

impl Global {
    fn corpus(&self) -> Result<CorpusStore> {
        let path = need(&self.store, "--store")?;
        read_store(path).with_context(|| format!("reading {}", path.display()))
    }

    fn vocab(&self) -> Result<Vocab> {
        match &self.vocab {
            Some(p) => Vocab::read(p).with_context(|| format!("reading {}", p.display())),
            None => Ok(Vocab::default()),
        }
    }

    fn encoder(&self, vocab: &Vocab) -> Result<ToyEncoder> {
        let cfg = EncoderConfig {
            dim: self.dim,
            seed: self.seed,
            ..Default::default()
        };
        Ok(ToyEncoder::new(
            cfg,
            QueryBuilder::new(vocab.special_tokens()),
        )?)
    }

    fn query_set(&self, vocab: &Vocab) -> Result<QuerySet> {
        if let Some(p) = &self.query_store {
            return Ok(QuerySet::stored(read_store(p)?)?);
        }
        let path = need(&self.queries, "--queries or --query-store")?;
        Ok(QuerySet::toy(self.encoder(vocab)?, read_queries(path)?))
    }

    fn qrels(&self) -> Result<Judgments> {
        let path = need(&self.qrels, "--qrels")?;
        Judgments::read(path).with_context(|| format!("reading {}", path.display()))
    }

    fn spec(&self) -> Result<SweepSpec> {
        let mut spec = match &self.config {
            Some(p) => SweepSpec::from_json(&fs::read_to_string(p)?)?,
            None => SweepSpec::default(),
        };
        if let Some(k) = self.k_per_token {
            spec.k_per_token = k;
        }
        if let Some(c) = self.rerank_cutoff {
            spec.rerank_cutoff = c;
        }
        if let Some(r) = self.remap {
            spec.remap = r;
        }
        if let Some(p) = self.phase {
            spec.phase = p;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Synth {
            docs,
            doc_len,
            vocab_size,
            num_queries,
        } => {
            let cfg = SynthConfig {
                docs,
                doc_len,
                vocab_size,
                queries: num_queries,
                seed: g.seed,
                ..Default::default()
            };
            let coll = SyntheticCollection::generate(&cfg);
            coll.write_to_dir(&g.out_dir)?;
            let store = coll.encode_corpus(&g.encoder(&coll.vocab)?)?;
            let path = g
                .store
                .clone()
                .unwrap_or_else(|| g.out_dir.join("corpus.liv"));
            write_store(&store, &path)?;
            eprintln!(
                "wrote {} and the collection files in {}",
                path.display(),
                g.out_dir.display()
            );
        }
        Command::Encode { docs, form } => {
            let out = need(&g.store, "--store")?;
            let vocab = g.vocab()?;
            let encoder = g.encoder(&vocab)?;
            let store = if let Some(docs) = docs {
                encode_documents(&read_documents(docs)?, &encoder)?
            } else {
                let queries = read_queries(need(&g.queries, "--docs or --queries")?)?;
                let mut store = CorpusStore::new(encoder.config.dim)?;
                for q in &queries {
                    let id: u32 = q.qid.parse().with_context(|| {
                        format!("query id {:?} must be numeric to be stored", q.qid)
                    })?;
                    store.push(id, encoder.encode_query(&q.token_ids, form.policy())?.1)?;
                }
                store
            };
            write_store(&store, out)?;
            eprintln!(
                "wrote {} ({} passages, {} tokens)",
                out.display(),
                store.len(),
                store.total_tokens()
            );
        }
        Command::Index => {
            let corpus = g.corpus()?;
            let engine = Engine::new(&corpus);
            let max_norm_error = corpus
                .passages()
                .iter()
                .map(|p| p.rows.max_norm_error())
                .fold(0.0f32, f32::max);
            let stats = serde_json::json!({
                "docs": corpus.len(),
                "tokens": engine.index().len(),
                "dim": engine.index().dim(),
                "max_norm_error": max_norm_error,
            });
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Retrieve { form } => {
            let corpus = g.corpus()?;
            let queries = g.query_set(&g.vocab()?)?;
            let spec = g.spec()?;
            let engine = Engine::new(&corpus);
            let qform = QueryForm::new(form.policy(), spec.remap);
            let mut run = RunList::new();
            for i in 0..queries.len() {
                let q = queries.encode_form(i, qform)?;
                let hits = engine.index().row_hits(&q, spec.k_per_token)?;
                let cands = CandidateSet::from_hits(hits.iter().map(Vec::as_slice));
                let mut docs: Vec<RankedDoc> = cands
                    .doc_ids()
                    .iter()
                    .map(|&doc_id| RankedDoc {
                        doc_id,
                        score: hits
                            .iter()
                            .flatten()
                            .filter(|h| h.doc_id == doc_id)
                            .map(|h| h.score as f64)
                            .fold(f64::NEG_INFINITY, f64::max),
                    })
                    .collect();
                latemask::maxsim::sort_ranked(&mut docs);
                run.insert(queries.qid(i), docs);
            }
            g.write("candidates.run", &run.to_trec("latemask-candidates"))?;
        }
        Command::Rerank { form, passthrough } => {
            let corpus = g.corpus()?;
            let queries = g.query_set(&g.vocab()?)?;
            let spec = g.spec()?;
            let engine = Engine::new(&corpus);
            let params = PipelineParams {
                reranker: if passthrough {
                    Reranker::CandidatePassthrough
                } else {
                    Reranker::MaxSim
                },
                ..spec.params()
            };
            let modified = QueryForm::new(form.policy(), spec.remap);
            let run = harness::run_pipeline(
                &engine,
                &queries,
                spec.baseline_form(),
                modified,
                spec.phase,
                &params,
            )?;
            g.write("run.trec", &run.to_trec("latemask"))?;
        }
        Command::RemapExp => {
            let corpus = g.corpus()?;
            let queries = g.query_set(&g.vocab()?)?;
            let report = harness::remap_experiment(
                &Engine::new(&corpus),
                &queries,
                &g.qrels()?,
                &g.spec()?,
            )?;
            g.write("remap_report.csv", &report.to_csv()?)?;
            g.write("remap_table.csv", &report.to_table_csv()?)?;
        }
        Command::SwapExp { perturbed_store } => {
            let report = match (&g.query_store, perturbed_store) {
                (Some(orig), Some(pert)) => harness::swap_experiment_stored(
                    &read_store(orig)?,
                    &read_store(pert)?,
                    "stored",
                )?,
                (Some(_), None) => bail!("--perturbed-store is required with --query-store"),
                _ => {
                    let vocab = g.vocab()?;
                    harness::swap_experiment(&g.query_set(&vocab)?, &vocab)?
                }
            };
            g.write("shift_report.csv", &report.to_csv()?)?;
            g.write("shift_summary.csv", &report.summary_csv()?)?;
        }
        Command::MaskSweep { no_verify } => {
            let corpus = g.corpus()?;
            let queries = g.query_set(&g.vocab()?)?;
            let verify = !no_verify && matches!(queries, QuerySet::Toy { .. });
            let report = harness::mask_sweep(
                &Engine::new(&corpus),
                &queries,
                &g.qrels()?,
                &g.spec()?,
                verify,
            )?;
            g.write("mask_sweep.csv", &report.to_csv()?)?;
        }
        Command::MaxlenExp => {
            let corpus = g.corpus()?;
            let queries = g.query_set(&g.vocab()?)?;
            let report = harness::maxlen_experiment(
                &Engine::new(&corpus),
                &queries,
                &g.qrels()?,
                &g.spec()?,
            )?;
            g.write("maxlen_report.csv", &report.to_csv()?)?;
        }
        Command::Heatmap { positions, qid } => {
            let vocab = g.vocab()?;
            let queries = g.query_set(&vocab)?;
            let mut written = 0;
            for (id, csv) in harness::heatmaps(&queries, &vocab, positions)? {
                if qid.as_ref().is_none_or(|q| *q == id) {
                    g.write(&format!("heatmap_{id}.csv"), &csv)?;
                    written += 1;
                }
            }
            if written == 0 {
                bail!("no matching query");
            }
        }
        Command::Eval { run } => {
            let run = RunList::read(&run).with_context(|| format!("reading {}", run.display()))?;
            let qrels = g.qrels()?;
            let mut metrics = Metric::remap_table();
            metrics.push(Metric::Recall {
                k: 50,
                min_grade: 1,
            });
            metrics.push(Metric::Recall {
                k: 1000,
                min_grade: 1,
            });
            let mut out = String::from("metric,mean,queries\n");
            for m in metrics {
                out.push_str(&format!(
                    "{m},{:.6},{}\n",
                    mean(&m.evaluate(&run, &qrels)),
                    run.len()
                ));
            }
            print!("{out}");
            g.write("eval.csv", &out)?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers)
        .build()?;
    pool.install(|| run(cli))
}
