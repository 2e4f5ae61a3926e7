use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use hatectx::corpus::{cohen_kappa, convert_released, corpus_stats, load_corpus, make_folds, Corpus};
use hatectx::encoder::{self, load_embeddings, CharVocab, ContextNet};
use hatectx::eval::{
    cross_validate, emit_overlap, emit_report, ensemble_outcome, fold_seed, lr_suite, nn_suite, CvOutcome,
    MetricsReport, ModelSpec, ReportFormat, Resources, Suite, BASELINE_LR_ROW, BEST_LR_ROW, BEST_NN_ROW,
};
use hatectx::features::{
    build_vocabulary, featurize, load_category_lexicon, load_emotion_lexicon, Document, FeatureConfig, FeatureGroup,
    Lexicons,
};
use hatectx::logreg::train_logreg;
use hatectx::numcore::format_f64;

use crate::config::{Family, Layer, RunConfig};
use crate::files::{read_labels, read_metrics, read_scores, slug, write_scores};
use crate::{Failure, FailureExt, Outcome};

#[derive(Debug, Parser)]
#[command(name = "hatectx", version, about = "Context-aware hate speech classifiers and their evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print corpus counts.
    Stats(RunArgs),
    /// Train one model on the whole corpus and save it.
    Train(RunArgs),
    /// Cross-validate one configuration or a suite of them.
    Evaluate(RunArgs),
    /// Combine two pooled score files by max and average.
    Ensemble(EnsembleArgs),
    /// Cohen's kappa between two label files.
    Kappa { a: PathBuf, b: PathBuf },
    /// Convert the released comment dump into the corpus schema.
    Convert { input: PathBuf, output: PathBuf },
    /// Re-render a metrics CSV.
    Report {
        input: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat TOML configuration; a run manifest works too.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub layer: Layer,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Pooled logistic regression scores (`comment_id,score`).
    #[arg(long)]
    pub lr_scores: PathBuf,
    /// Pooled network scores (`comment_id,score`).
    #[arg(long)]
    pub nn_scores: PathBuf,
}

pub fn run(cli: Cli, out: &mut String) -> Outcome {
    match cli.command {
        Command::Stats(a) => stats(&resolve(&a)?, out),
        Command::Train(a) => train(&resolve(&a)?, out),
        Command::Evaluate(a) => evaluate(&resolve(&a)?, out),
        Command::Ensemble(a) => ensemble(&resolve(&a.run)?, &a.lr_scores, &a.nn_scores, out),
        Command::Kappa { a, b } => kappa(&a, &b, out),
        Command::Convert { input, output } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))
                .config()?;
            let corpus = convert_released(&text)
                .with_context(|| format!("converting {}", input.display()))
                .config()?;
            write_file(&output, &corpus.to_json_string())?;
            let s = corpus_stats(&corpus);
            let _ = writeln!(out, "{} comments in {} threads", s.n_comments, s.n_threads);
            Ok(())
        }
        Command::Report { input, format } => {
            let format: ReportFormat = format.parse().config()?;
            let reports = read_metrics(&input).config()?;
            out.push_str(&emit_report(&reports, format));
            Ok(())
        }
    }
}

fn resolve(args: &RunArgs) -> Result<RunConfig, Failure> {
    let file = match &args.config {
        Some(p) => Layer::from_file(p).config()?,
        None => Layer::default(),
    };
    let cfg = RunConfig::resolve(&[&file, &args.layer]).config()?;
    cfg.check_paths().config()?;
    Ok(cfg)
}

fn corpus(cfg: &RunConfig) -> Result<Corpus, Failure> {
    let path = cfg.corpus_path().config()?;
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display())).config()
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).runtime()
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, Failure> {
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))
        .runtime()?;
    Ok(&cfg.out)
}

fn stats(cfg: &RunConfig, out: &mut String) -> Outcome {
    let s = corpus_stats(&corpus(cfg)?);
    let _ = writeln!(out, "comments: {}", s.n_comments);
    let _ = writeln!(out, "hateful: {}", s.n_hateful);
    let _ = writeln!(out, "threads: {}", s.n_threads);
    let _ = writeln!(out, "users: {}", s.n_users);
    let _ = writeln!(out, "long_comments: {}", s.n_long_comments);
    Ok(())
}

fn kappa(a: &Path, b: &Path, out: &mut String) -> Outcome {
    let a = read_labels(a).config()?;
    let b = read_labels(b).config()?;
    let k = cohen_kappa(&a, &b).map_err(anyhow::Error::from).config()?;
    let _ = writeln!(out, "{k}");
    Ok(())
}

/// Lexicons and embeddings needed by the given feature configs and whether
/// any network runs.
fn resources(cfg: &RunConfig, features: &[&FeatureConfig], needs_net: bool) -> Result<Resources, Failure> {
    let needs = |g: FeatureGroup| features.iter().any(|f| f.has(g));
    let mut lexicons = Lexicons::default();
    if needs(FeatureGroup::CategoryLex) {
        let p = cfg.liwc.as_ref().ok_or_else(|| anyhow!("the liwc feature group needs --liwc")).config()?;
        lexicons.category = Some(load_category_lexicon(p).with_context(|| format!("loading {}", p.display())).config()?);
    }
    if needs(FeatureGroup::EmotionLex) {
        let p = cfg.nrc.as_ref().ok_or_else(|| anyhow!("the nrc feature group needs --nrc")).config()?;
        lexicons.emotion = Some(load_emotion_lexicon(p).with_context(|| format!("loading {}", p.display())).config()?);
    }
    let embeddings = if needs_net {
        let p = cfg
            .embeddings
            .as_ref()
            .ok_or_else(|| anyhow!("neural models need --embeddings"))
            .config()?;
        Some(load_embeddings(p, cfg.embed_dim).with_context(|| format!("loading {}", p.display())).config()?)
    } else {
        None
    };
    Ok(Resources { lexicons, embeddings })
}

fn docs(corpus: &Corpus) -> Vec<Document<'_>> {
    corpus
        .comments()
        .map(|(t, c)| Document {
            comment: &c.text,
            title: &t.news_title,
            username: &c.user,
        })
        .collect()
}

fn train(cfg: &RunConfig, out: &mut String) -> Outcome {
    let corpus = corpus(cfg)?;
    let labels = corpus.labels();
    let dir = out_dir(cfg)?;
    match cfg.family {
        Family::Lr => {
            let features = cfg.feature_config().config()?;
            let res = resources(cfg, &[&features], false)?;
            let docs = docs(&corpus);
            let vocab = build_vocabulary(&docs, &features, &res.lexicons).map_err(anyhow::Error::from).runtime()?;
            let x = docs
                .iter()
                .map(|d| featurize(d, &vocab, &res.lexicons, &features))
                .collect::<hatectx::Result<Vec<_>>>()
                .map_err(anyhow::Error::from)
                .runtime()?;
            let fit = train_logreg(&x, &labels, vocab.n_columns(), &cfg.logreg_config())
                .map_err(anyhow::Error::from)
                .runtime()?;
            write_file(&dir.join("model.json"), &fit.model.to_json())?;
            let vocab_json = serde_json::to_string_pretty(&vocab).map_err(anyhow::Error::from).runtime()?;
            write_file(&dir.join("vocabulary.json"), &vocab_json)?;
            let mut trace = String::from("step,loss\n");
            for (i, l) in fit.loss_trace.iter().enumerate() {
                let _ = writeln!(trace, "{i},{}", format_f64(*l));
            }
            write_file(&dir.join("loss_trace.csv"), &trace)?;
            let _ = writeln!(
                out,
                "logistic regression: {} columns, {} iterations, converged: {}, final objective {}",
                vocab.n_columns(),
                fit.iterations,
                fit.converged,
                fit.loss_trace.last().copied().unwrap_or(f64::NAN)
            );
        }
        Family::Nn => {
            let net_cfg = cfg.net_config().config()?;
            let res = resources(cfg, &[], true)?;
            let table = res.embeddings.as_ref().expect("loaded");
            let chars = net_cfg
                .username
                .then(|| CharVocab::from_texts(corpus.comments().map(|(_, c)| c.user.as_str())));
            let mut net = ContextNet::new(net_cfg, table.dim(), chars, fold_seed(cfg.seed, 0, 0)).config()?;
            let data = corpus
                .comments()
                .map(|(t, c)| net.encode(table, &c.text, &t.news_title, &c.user, c.label.is_hateful()))
                .collect::<hatectx::Result<Vec<_>>>()
                .map_err(anyhow::Error::from)
                .runtime()?;
            let report = encoder::train(&mut net, &data, fold_seed(cfg.seed, 0, 1))
                .map_err(anyhow::Error::from)
                .runtime()?;
            write_file(&dir.join("model.json"), &net.to_json())?;
            let mut trace = String::from("epoch,loss\n");
            for (i, l) in report.epoch_losses.iter().enumerate() {
                let _ = writeln!(trace, "{},{}", i + 1, format_f64(*l));
            }
            write_file(&dir.join("loss_trace.csv"), &trace)?;
            let _ = writeln!(
                out,
                "network: {} epochs, final mean loss {}",
                report.epoch_losses.len(),
                report.epoch_losses.last().copied().unwrap_or(f64::NAN)
            );
        }
    }
    write_file(&dir.join("manifest.toml"), &cfg.manifest())?;
    Ok(())
}

fn single_label(cfg: &RunConfig) -> String {
    match cfg.family {
        Family::Lr => format!("lr {} [{}]", cfg.features.join("+"), cfg.sources.join("+")),
        Family::Nn => format!("nn {} [{}]", cfg.encoder, cfg.branches.join("+")),
    }
}

fn evaluate(cfg: &RunConfig, out: &mut String) -> Outcome {
    let corpus = corpus(cfg)?;
    let folds = make_folds(&corpus, cfg.folds, cfg.seed).config()?;
    let lr_rows = lr_suite();
    let nn_rows = nn_suite(&cfg.net_config().config()?);
    let solver = cfg.logreg_config();
    let lr_spec = |f: &FeatureConfig| ModelSpec::LogReg {
        features: f.clone(),
        solver,
    };

    let mut runs: Vec<(String, ModelSpec)> = Vec::new();
    let suite = cfg.suite().config()?;
    match suite {
        None => {
            let spec = match cfg.family {
                Family::Lr => lr_spec(&cfg.feature_config().config()?),
                Family::Nn => ModelSpec::Net(cfg.net_config().config()?),
            };
            runs.push((single_label(cfg), spec));
        }
        Some(Suite::LogReg) => runs.extend(lr_rows.iter().map(|(l, f)| (l.clone(), lr_spec(f)))),
        Some(Suite::Net) => runs.extend(nn_rows.iter().map(|(l, c)| (l.clone(), ModelSpec::Net(c.clone())))),
        Some(Suite::Ensemble) => {
            let (bl, bf) = &lr_rows[BASELINE_LR_ROW];
            let (nl, nc) = &nn_rows[BEST_NN_ROW];
            let (ll, lf) = &lr_rows[BEST_LR_ROW];
            runs.push((bl.clone(), lr_spec(bf)));
            runs.push((format!("best NN: {nl}"), ModelSpec::Net(nc.clone())));
            runs.push((format!("best LR: {ll}"), lr_spec(lf)));
        }
    }

    let feature_sets: Vec<&FeatureConfig> = runs
        .iter()
        .filter_map(|(_, s)| match s {
            ModelSpec::LogReg { features, .. } => Some(features),
            ModelSpec::Net(_) => None,
        })
        .collect();
    let needs_net = runs.iter().any(|(_, s)| matches!(s, ModelSpec::Net(_)));
    let res = resources(cfg, &feature_sets, needs_net)?;

    let dir = out_dir(cfg)?;
    let scores_dir = dir.join("scores");
    std::fs::create_dir_all(&scores_dir)
        .with_context(|| format!("creating {}", scores_dir.display()))
        .runtime()?;

    let mut outcomes: Vec<CvOutcome> = Vec::new();
    for (label, spec) in &runs {
        let o = cross_validate(&corpus, &folds, label, spec, &res, cfg.seed, cfg.jobs)
            .with_context(|| format!("evaluating `{label}`"))
            .runtime()?;
        write_scores(&scores_dir.join(format!("{}.csv", slug(label))), &o.scores).runtime()?;
        outcomes.push(o);
    }

    let mut reports: Vec<MetricsReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    if suite == Some(Suite::Ensemble) {
        let gold: Vec<(String, bool)> = corpus.comments().map(|(_, c)| (c.id.clone(), c.label.is_hateful())).collect();
        let e = ensemble_outcome(&outcomes[2].scores, &outcomes[1].scores, &gold)
            .map_err(anyhow::Error::from)
            .runtime()?;
        for o in [&e.max, &e.avg] {
            write_scores(&scores_dir.join(format!("{}.csv", slug(&o.report.config))), &o.scores).runtime()?;
            reports.push(o.report.clone());
        }
        write_file(&dir.join("overlap.csv"), &emit_overlap(&e.overlap, ReportFormat::Csv))?;
        write_file(&dir.join("overlap.txt"), &emit_overlap(&e.overlap, ReportFormat::Text))?;
    }

    write_file(&dir.join("metrics.csv"), &emit_report(&reports, ReportFormat::Csv))?;
    write_file(&dir.join("metrics.txt"), &emit_report(&reports, ReportFormat::Text))?;
    write_file(&dir.join("manifest.toml"), &cfg.manifest())?;
    out.push_str(&emit_report(&reports, cfg.report_format().config()?));
    Ok(())
}

fn ensemble(cfg: &RunConfig, lr_path: &Path, nn_path: &Path, out: &mut String) -> Outcome {
    let corpus = corpus(cfg)?;
    let lr = read_scores(lr_path).config()?;
    let nn = read_scores(nn_path).config()?;
    let gold: Vec<(String, bool)> = corpus.comments().map(|(_, c)| (c.id.clone(), c.label.is_hateful())).collect();
    let e = ensemble_outcome(&lr, &nn, &gold).map_err(anyhow::Error::from).config()?;

    let labels: Vec<bool> = gold.iter().map(|(_, g)| *g).collect();
    let component = |name: &str, scores: &[(String, f64)]| -> Result<MetricsReport, Failure> {
        let by_id: std::collections::HashMap<&str, f64> = scores.iter().map(|(i, s)| (i.as_str(), *s)).collect();
        let ordered: Vec<f64> = gold.iter().map(|(id, _)| by_id[id.as_str()]).collect();
        MetricsReport::from_scores(name, &ordered, &labels)
            .map_err(anyhow::Error::from)
            .runtime()
    };
    let reports = vec![
        component("Logistic Regression", &lr)?,
        component("Neural Network", &nn)?,
        e.max.report.clone(),
        e.avg.report.clone(),
    ];
    let format = cfg.report_format().config()?;
    let dir = out_dir(cfg)?;
    write_file(&dir.join("ensemble.csv"), &emit_report(&reports, ReportFormat::Csv))?;
    write_file(&dir.join("overlap.csv"), &emit_overlap(&e.overlap, ReportFormat::Csv))?;
    write_scores(&dir.join("max_score_ensemble.csv"), &e.max.scores).runtime()?;
    write_scores(&dir.join("average_score_ensemble.csv"), &e.avg.scores).runtime()?;
    out.push_str(&emit_report(&reports, format));
    out.push('\n');
    out.push_str(&emit_overlap(&e.overlap, format));
    Ok(())
}
