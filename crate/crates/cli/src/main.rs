use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use logicclip::config::RunConfig;
use logicclip::service::{self, AppState};
use logicclip::ReviewStore;
use logicclip_core::corpus::{load_records, save_records, FORMAT_NAME, ImageRef, Manifest, SampleRecord, Scenario};
use logicclip_core::encoder::{load_model, save_model, train};
use logicclip_core::eval::{evaluate, EvalReport};
use logicclip_core::taxonomy::{filter_positive, AnnotatedCaption, RuleTable};
use logicclip_core::{corpus, ExecMode};
use logicclip_forge::{proposal, Forge, HttpBackend};

#[derive(Parser)]
#[command(name = "logicclip", version, about = "Logic-aware caption corpus, training, evaluation and review")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run data-parallel stages on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus and its manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scenes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        start_index: Option<u64>,
        #[arg(long)]
        d_img: Option<usize>,
        /// Weights for image,video,anomaly,medicine.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        scenario_weights: Option<Vec<f64>>,
    },
    /// Annotate caption records with logical categories, keeping those with any.
    Parse {
        /// JSON lines of {"image_ref", "caption"}.
        #[arg(long)]
        input: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propose hard negatives for a corpus or annotated caption file.
    Forge {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Scenario for annotated captions (corpus records carry their own).
        #[arg(long, default_value = "image")]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Also load the proposals into this review store.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Train an encoder; writes a checkpoint and a per-step log.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to `<checkpoint>.log.jsonl`.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on a corpus.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// One row per line.
        #[arg(long)]
        jsonl: Option<PathBuf>,
        #[arg(long)]
        shuffle_seed: Option<u64>,
    },
    /// Run the review service.
    Serve {
        #[arg(long)]
        store: PathBuf,
        /// Where finalize writes the reviewed corpus.
        #[arg(long)]
        out: PathBuf,
        /// Proposals to load before serving.
        #[arg(long)]
        proposals: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Print a stored evaluation report.
    Report {
        report: PathBuf,
        #[arg(long, value_parser = ["table", "json", "jsonl"], default_value = "table")]
        format: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": format!("{e:#}")}));
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mode = if cli.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    match cli.command {
        Command::Synth { out, scenes, seed, start_index, d_img, scenario_weights } => {
            let mut s = config.synth;
            s.scenes = scenes.unwrap_or(s.scenes);
            s.seed = seed.unwrap_or(s.seed);
            s.start_index = start_index.unwrap_or(s.start_index);
            s.d_img = d_img.unwrap_or(s.d_img);
            if let Some(w) = scenario_weights {
                s.scenario_weights = w.try_into().map_err(|_| anyhow::anyhow!("--scenario-weights takes 4 values"))?;
            }
            let corpus_config = s.corpus_config();
            let built = corpus::build_corpus(&corpus_config, mode)?;
            save_records(&out, &built.records)?;
            let manifest = Manifest::for_records(&corpus_config, &built.records);
            manifest.save(&Manifest::sidecar_path(&out))?;
            println!("{}", json!({"records": manifest.records, "captions": manifest.captions, "out": out}));
        }
        Command::Parse { input, out } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let lines = BufReader::new(file).lines().collect::<std::io::Result<Vec<_>>>()?;
            let (kept, summary) = filter_positive(lines, RuleTable::default_table());
            let mut sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            for a in &kept {
                serde_json::to_writer(&mut sink, a)?;
                sink.write_all(b"\n")?;
            }
            sink.flush()?;
            eprintln!("{}", serde_json::to_string(&summary)?);
        }
        Command::Forge { input, out, scenario, seed, workers, store } => {
            let f = config.forge;
            let records = forge_input(&input, &scenario)?;
            let mut forge = Forge::new(f.retry_policy(), seed.unwrap_or(f.seed));
            for profile in f.backends {
                let in_flight = profile.max_in_flight;
                forge = forge.with_backend(Arc::new(HttpBackend::new(profile)?), in_flight);
            }
            let proposals = forge.generate_all(&records, workers.unwrap_or(f.workers));
            proposal::write_proposals(BufWriter::new(File::create(&out)?), &proposals)?;
            let failed = proposals.iter().filter(|p| p.status == proposal::ProposalStatus::Failed).count();
            let added = match store {
                Some(dir) => ReviewStore::open(&dir, config.serve.snapshot_every)?.add(proposals.iter().cloned())?,
                None => 0,
            };
            println!("{}", json!({"proposals": proposals.len(), "failed": failed, "added_to_store": added}));
        }
        Command::Train { corpus, checkpoint, log, preset, epochs, seed } => {
            let mut t = config.train;
            t.preset = preset.unwrap_or(t.preset);
            t.epochs = epochs.or(t.epochs);
            t.seed = seed.or(t.seed);
            let train_config = t.resolve()?;
            let records = load_records(&corpus).with_context(|| format!("loading {}", corpus.display()))?;
            let outcome = train(&train_config, &records, mode)?;
            save_model(&checkpoint, &outcome.model, &train_config)?;
            let log_path = log.unwrap_or_else(|| suffixed(&checkpoint, ".log.jsonl"));
            let mut w = BufWriter::new(File::create(&log_path)?);
            for step in &outcome.log {
                serde_json::to_writer(&mut w, step)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            let last = outcome.log.last();
            println!(
                "{}",
                json!({"steps": outcome.log.len(), "final_loss": last.map(|s| s.l_total), "checkpoint": checkpoint, "log": log_path})
            );
        }
        Command::Eval { checkpoint, corpus, out, jsonl, shuffle_seed } => {
            let (model, _) = load_model(&checkpoint)?;
            let records = load_records(&corpus).with_context(|| format!("loading {}", corpus.display()))?;
            let mut eval_config = config.eval.eval_config();
            eval_config.shuffle_seed = shuffle_seed.unwrap_or(eval_config.shuffle_seed);
            let report = evaluate(&model, &records, &eval_config, mode)?;
            if let Some(path) = out {
                std::fs::write(path, report.to_json()? + "\n")?;
            }
            if let Some(path) = jsonl {
                report.write_jsonl(BufWriter::new(File::create(path)?))?;
            }
            print!("{}", report.table());
        }
        Command::Serve { store, out, proposals, bind, port } => {
            let s = config.serve;
            let mut review = ReviewStore::open(&store, s.snapshot_every)?;
            if let Some(path) = proposals {
                let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                let added = review.add(proposal::read_proposals(BufReader::new(file))?)?;
                log::info!("loaded {added} new proposals");
            }
            let token = match &s.token_env {
                Some(var) => Some(std::env::var(var).with_context(|| format!("review token variable {var} is not set"))?),
                None => None,
            };
            let addr = format!("{}:{}", bind.unwrap_or(s.bind), port.unwrap_or(s.port));
            let state = AppState::new(review, out, token);
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
                eprintln!("{}", json!({"listening": listener.local_addr()?.to_string()}));
                service::serve(listener, state, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Report { report, format } => {
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let parsed: EvalReport = serde_json::from_str(&text).context("not an evaluation report")?;
            match format.as_str() {
                "json" => println!("{}", parsed.to_json()?),
                "jsonl" => parsed.write_jsonl(std::io::stdout().lock())?,
                _ => print!("{}", parsed.table()),
            }
        }
    }
    Ok(())
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// A corpus file (detected by its header) or annotated caption lines from
/// `parse`.
fn forge_input(path: &Path, scenario: &str) -> Result<Vec<SampleRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.lines().next().is_some_and(|l| l.contains(FORMAT_NAME)) {
        return Ok(load_records(path)?);
    }
    let Some(scenario) = Scenario::ALL.into_iter().find(|s| s.name() == scenario) else {
        bail!("unknown scenario {scenario:?}");
    };
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let a: AnnotatedCaption = serde_json::from_str(line).with_context(|| format!("line {}", i + 1))?;
        records.push(SampleRecord {
            sample_id: format!("c{i:06}"),
            scenario,
            image_ref: ImageRef::Path(a.image_ref),
            positive: a.caption,
            negatives: Vec::new(),
            categories: a.categories,
            option_count: scenario.option_count(),
        });
    }
    Ok(records)
}
