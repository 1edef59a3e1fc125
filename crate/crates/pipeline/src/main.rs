use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ample_core::embed::fit_token_embeddings;
use ample_core::io::{load_corpus, read_graph, write_corpus, write_graph};
use ample_core::metrics::{report_csv, CorpusSummary, GraphReport};
use ample_core::simplify::gs;
use ample_core::MergeRuleTable;
use ample_model::gradcheck::{check_eagcn, check_model};
use ample_model::nn::Activation;
use ample_pipeline::prepare::{graph_inputs, labels_of, simplify_all};
use ample_pipeline::train::run_pipeline;
use ample_pipeline::{evaluate_model, explain_statements, generate_synthetic_corpus, PipelineConfig, PipelineError, PipelineModel};

/// Vulnerability detection over code structure graphs.
#[derive(Parser)]
#[command(name = "ample", version)]
struct Cli {
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration (training, model and embedding settings).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simplify a graph file, or every graph in a directory.
    Simplify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Merge rule table (JSON); the built-in table otherwise.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Where to write merge traces (file for a single graph, directory otherwise).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Per-graph simplification and distance statistics as CSV.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Fit skip-gram token vectors on a corpus (after simplification).
    EmbedFit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Vector width; the model width from the config otherwise.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Split a labeled corpus, train, and report test scores.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        /// Trained model bundle destination.
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch history as JSON lines.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Worker threads within a batch.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Score a trained bundle on a labeled corpus.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Scores and predictions as JSON; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the statements of one function by their contribution.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print only the heaviest statements.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Write a synthetic labeled corpus.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic gradients with finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_rules(path: Option<&Path>) -> Result<MergeRuleTable, PipelineError> {
    match path {
        Some(p) => Ok(MergeRuleTable::from_json(&std::fs::read(p).map_err(|source| PipelineError::Fs { path: p.into(), source })?)?),
        None => Ok(MergeRuleTable::default()),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| PipelineError::Fs { path: dir.into(), source })?;
            }
            std::fs::write(path, text).map_err(|source| PipelineError::Fs { path: path.into(), source })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_corpus_errors(corpus: &ample_core::Corpus) {
    for (path, err) in &corpus.errors {
        eprintln!("skipped {}: {err}", path.display());
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let cfg = load_config(&cli)?;
    let seed = cfg.train.seed;
    match cli.command {
        Command::Simplify { input, out, rules, trace } => {
            let rules = load_rules(rules.as_deref())?;
            if input.is_dir() {
                let corpus = load_corpus(&input)?;
                report_corpus_errors(&corpus);
                let done = simplify_all(&corpus.graphs, &rules);
                let mut simplified = corpus.clone();
                simplified.graphs = done.iter().map(|s| s.graph.clone()).collect();
                write_corpus(&out, &simplified)?;
                if let Some(dir) = trace {
                    for (s, name) in done.iter().zip(&corpus.names) {
                        write_or_print(Some(&dir.join(format!("{name}.trace.json"))), &serde_json::to_string_pretty(&s.trace).unwrap())?;
                    }
                }
                eprintln!("simplified {} graphs into {}", corpus.len(), out.display());
            } else {
                let g = read_graph(&input)?;
                let (simplified, t) = gs(&g, &rules);
                write_graph(&out, &simplified)?;
                if let Some(path) = trace {
                    write_or_print(Some(&path), &serde_json::to_string_pretty(&t).unwrap())?;
                }
                eprintln!("{} -> {} nodes, {} -> {} edges", g.num_nodes(), simplified.num_nodes(), g.num_edges(), simplified.num_edges());
            }
        }
        Command::Stats { input, out, rules } => {
            let rules = load_rules(rules.as_deref())?;
            let corpus = load_corpus(&input)?;
            report_corpus_errors(&corpus);
            let done = simplify_all(&corpus.graphs, &rules);
            let rows = corpus
                .graphs
                .iter()
                .zip(&done)
                .zip(&corpus.names)
                .map(|((g, s), name)| GraphReport::new(name.clone(), g, &s.graph))
                .collect::<Result<Vec<_>, _>>()?;
            write_or_print(out.as_deref(), &report_csv(&rows))?;
            eprintln!("{}", CorpusSummary::from_reports(&rows).describe());
        }
        Command::EmbedFit { input, out, dim } => {
            let corpus = load_corpus(&input)?;
            report_corpus_errors(&corpus);
            let done = simplify_all(&corpus.graphs, &MergeRuleTable::default());
            let d = dim.unwrap_or(cfg.dim());
            let table = fit_token_embeddings(done.iter().map(|s| &s.graph), d, seed, &cfg.embedding.skipgram)?;
            write_or_print(Some(&out), &table.to_json())?;
            eprintln!("{} tokens, dimension {d}", table.vocab.len());
        }
        Command::Train { input, out, history, jobs, max_epochs } => {
            let mut cfg = cfg;
            if let Some(j) = jobs {
                cfg.train.jobs = j;
            }
            if let Some(m) = max_epochs {
                cfg.train.max_epochs = m;
                cfg.train.patience = cfg.train.patience.min(m);
            }
            cfg.validate()?;
            let corpus = load_corpus(&input)?;
            report_corpus_errors(&corpus);
            let report = run_pipeline(&corpus, &cfg)?;
            report.bundle.save(&out)?;
            if let Some(path) = history {
                let lines: String = report.history.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
                write_or_print(Some(&path), &lines)?;
            }
            let (tr, va, te) = report.split.sizes();
            eprintln!("split {tr}/{va}/{te}; {} epochs, best epoch {}", report.history.len(), report.best_epoch);
            if let Some(ev) = report.test {
                let s = ev.scores;
                println!(
                    "test accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
                    s.accuracy, s.precision, s.recall, s.f1
                );
            }
        }
        Command::Eval { model, input, out } => {
            let bundle = PipelineModel::load(&model)?;
            let corpus = load_corpus(&input)?;
            report_corpus_errors(&corpus);
            let done = simplify_all(&corpus.graphs, &bundle.rules);
            let graphs: Vec<_> = done.iter().map(|s| &s.graph).collect();
            let inputs = graph_inputs(&graphs, &bundle.embedder, &bundle.model)?;
            let labels = labels_of(&graphs)?;
            let samples: Vec<_> = inputs.iter().zip(labels).collect();
            let ev = evaluate_model(&bundle.model, &samples)?;
            let json = serde_json::json!({
                "scores": ev.scores,
                "confusion": ev.confusion,
                "predictions": corpus.names.iter().zip(&ev.predictions).zip(&ev.probabilities)
                    .map(|((n, p), q)| serde_json::json!({"name": n, "prediction": p, "p_vulnerable": q}))
                    .collect::<Vec<_>>(),
            });
            write_or_print(out.as_deref(), &(serde_json::to_string_pretty(&json).unwrap() + "\n"))?;
        }
        Command::Explain { model, graph, out, top } => {
            let bundle = PipelineModel::load(&model)?;
            let g = read_graph(&graph)?;
            let (_, trace) = gs(&g, &bundle.rules);
            let attribution = explain_statements(&bundle, &g, &trace)?;
            if let Some(path) = out {
                write_or_print(Some(&path), &serde_json::to_string_pretty(&attribution).unwrap())?;
            }
            println!("p_vulnerable = {:.4}", attribution.p_vulnerable);
            let total = attribution.total();
            for s in attribution.statements.iter().take(top) {
                let share = if total > 0.0 { s.weight / total } else { 0.0 };
                let line = s.line.map_or("-".to_string(), |l| l.to_string());
                println!("{:>6.2}%  line {line:>4}  {}", share * 100.0, s.code);
            }
        }
        Command::Synth { n, out } => {
            let synth = generate_synthetic_corpus(n, seed)?;
            write_corpus(&out, &synth.corpus)?;
            let mut motifs = String::from("name\tmotif_statement\n");
            for (name, m) in synth.corpus.names.iter().zip(&synth.motif_statements) {
                motifs.push_str(&format!("{name}\t{}\n", m.map_or("-".to_string(), |id| id.to_string())));
            }
            write_or_print(Some(&out.join("motifs.tsv")), &motifs)?;
            eprintln!("wrote {n} graphs to {}", out.display());
        }
        Command::Gradcheck { tol } => {
            let mut layers = check_eagcn(seed, Activation::Relu)?;
            layers.tensors.retain(|t| t.name != "input");
            let smooth = check_eagcn(seed, Activation::Tanh)?;
            let full = check_model(seed, Activation::Relu)?;
            let mut ok = true;
            for (what, report) in [("graph layers (relu)", &layers), ("graph layers with input (tanh)", &smooth), ("full model (relu)", &full)] {
                println!("{what}:\n{}", report.describe());
                ok &= report.passed(tol);
            }
            if !ok {
                return Err(PipelineError::InvalidConfig(format!("gradient check exceeded tolerance {tol}")));
            }
            println!("all gradient checks within {tol}");
        }
    }
    Ok(())
}
