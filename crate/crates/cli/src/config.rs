//! Run configuration: defaults, overridden by a flat TOML file, overridden by
//! command-line flags. A run manifest is the resolved configuration plus its
//! hash, and is itself a valid configuration file.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hatectx::encoder::{CommentEncoder, NetConfig};
use hatectx::eval::{ReportFormat, Suite};
use hatectx::features::{FeatureConfig, FeatureGroup, Source};
use hatectx::logreg::LogRegConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lr,
    Nn,
}

impl std::str::FromStr for Family {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logreg" => Ok(Family::Lr),
            "nn" | "net" => Ok(Family::Nn),
            other => bail!("unknown model family `{other}` (expected lr or nn)"),
        }
    }
}

/// Every setting, each optional. Used for the file layer and the flag layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    /// Corpus JSON file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Number of cross-validation folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seed for folds, initialization, shuffling and dropout.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model family for single-configuration runs: lr or nn.
    #[arg(long)]
    pub family: Option<String>,
    /// Logistic regression feature groups: char,word,liwc,nrc.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Logistic regression feature sources: comment,title,username.
    #[arg(long, value_delimiter = ',')]
    pub sources: Option<Vec<String>>,
    /// Network branches: comment,title,username.
    #[arg(long, value_delimiter = ',')]
    pub branches: Option<Vec<String>>,
    /// Comment encoder of the network: lstm, bilstm or bilstm_attention.
    #[arg(long)]
    pub encoder: Option<String>,
    /// Run a row set instead of one configuration: lr, nn or ensemble.
    #[arg(long)]
    pub suite: Option<String>,
    /// Category lexicon (`#categories N` header, `word<TAB>ids` lines).
    #[arg(long)]
    pub liwc: Option<PathBuf>,
    /// Emotion lexicon in word/emotion/flag triples.
    #[arg(long)]
    pub nrc: Option<PathBuf>,
    /// Word vectors in text format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Dimension of the word vectors.
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Inverse L2 strength of logistic regression.
    #[arg(long = "c")]
    pub c: Option<f64>,
    /// Gradient norm at which logistic regression stops.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap of logistic regression.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// LSTM state size per direction.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Width of the attention projection.
    #[arg(long)]
    pub attention_width: Option<usize>,
    /// Drop probability on the recurrent state.
    #[arg(long)]
    pub recurrent_dropout: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam step size.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Weights start uniform in [-bound, bound].
    #[arg(long)]
    pub init_bound: Option<f64>,
    /// Truncate comments and titles to this many tokens.
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for folds.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Table format printed to stdout: text or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Present in manifests; checked against the other keys when loaded.
    #[arg(skip)]
    pub config_hash: Option<String>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Layer {
    fn overlay(&mut self, top: &Layer) {
        overlay!(
            self, top, corpus, folds, seed, family, features, sources, branches, encoder, suite, liwc, nrc,
            embeddings, embed_dim, c, tol, max_iter, hidden, attention_width, recurrent_dropout, batch_size,
            epochs, learning_rate, init_bound, max_tokens, out, jobs, format
        );
    }

    pub fn from_file(path: &Path) -> Result<Layer> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let layer: Layer = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(expected) = &layer.config_hash {
            let actual = RunConfig::resolve(&[&layer])?.hash();
            if *expected != actual {
                bail!("config_hash mismatch in {}: file says {expected}, contents hash to {actual}", path.display());
            }
        }
        Ok(layer)
    }
}

/// Fully resolved settings. Serialized field order is fixed, so the TOML
/// text and its hash are stable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub folds: usize,
    pub seed: u64,
    pub family: Family,
    pub features: Vec<String>,
    pub sources: Vec<String>,
    pub branches: Vec<String>,
    pub encoder: String,
    pub suite: Option<String>,
    pub liwc: Option<PathBuf>,
    pub nrc: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub embed_dim: usize,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub hidden: usize,
    pub attention_width: usize,
    pub recurrent_dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub init_bound: f64,
    pub max_tokens: Option<usize>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let net = NetConfig::default();
        let lr = LogRegConfig::default();
        RunConfig {
            corpus: None,
            folds: 10,
            seed: 1,
            family: Family::Lr,
            features: vec!["char".into()],
            sources: vec!["comment".into()],
            branches: vec!["comment".into()],
            encoder: net.comment_encoder.name().into(),
            suite: None,
            liwc: None,
            nrc: None,
            embeddings: None,
            embed_dim: 300,
            c: lr.c,
            tol: lr.tol,
            max_iter: lr.max_iter,
            hidden: net.hidden,
            attention_width: net.attention_width,
            recurrent_dropout: net.recurrent_dropout,
            batch_size: net.batch_size,
            epochs: net.epochs,
            learning_rate: net.learning_rate,
            init_bound: net.init_bound,
            max_tokens: net.max_tokens,
            out: PathBuf::from("out"),
            jobs: None,
            format: "text".into(),
        }
    }
}

impl RunConfig {
    /// Applies `layers` lowest precedence first over the defaults.
    pub fn resolve(layers: &[&Layer]) -> Result<RunConfig> {
        let mut merged = Layer::default();
        for l in layers {
            merged.overlay(l);
        }
        let d = RunConfig::default();
        let cfg = RunConfig {
            corpus: merged.corpus,
            folds: merged.folds.unwrap_or(d.folds),
            seed: merged.seed.unwrap_or(d.seed),
            family: merged.family.as_deref().map(str::parse).transpose()?.unwrap_or(d.family),
            features: merged.features.unwrap_or(d.features),
            sources: merged.sources.unwrap_or(d.sources),
            branches: merged.branches.unwrap_or(d.branches),
            encoder: merged.encoder.unwrap_or(d.encoder),
            suite: merged.suite,
            liwc: merged.liwc,
            nrc: merged.nrc,
            embeddings: merged.embeddings,
            embed_dim: merged.embed_dim.unwrap_or(d.embed_dim),
            c: merged.c.unwrap_or(d.c),
            tol: merged.tol.unwrap_or(d.tol),
            max_iter: merged.max_iter.unwrap_or(d.max_iter),
            hidden: merged.hidden.unwrap_or(d.hidden),
            attention_width: merged.attention_width.unwrap_or(d.attention_width),
            recurrent_dropout: merged.recurrent_dropout.unwrap_or(d.recurrent_dropout),
            batch_size: merged.batch_size.unwrap_or(d.batch_size),
            epochs: merged.epochs.unwrap_or(d.epochs),
            learning_rate: merged.learning_rate.unwrap_or(d.learning_rate),
            init_bound: merged.init_bound.unwrap_or(d.init_bound),
            max_tokens: merged.max_tokens.or(d.max_tokens),
            out: merged.out.unwrap_or(d.out),
            jobs: merged.jobs.or(d.jobs),
            format: merged.format.unwrap_or(d.format),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Value checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            bail!("folds must be at least 2, got {}", self.folds);
        }
        if self.jobs == Some(0) {
            bail!("jobs must be positive");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            bail!("c must be positive and finite");
        }
        self.feature_config()?;
        self.net_config()?.validate()?;
        self.report_format()?;
        if let Some(s) = &self.suite {
            s.parse::<Suite>()?;
        }
        Ok(())
    }

    /// Checks that every referenced input file exists.
    pub fn check_paths(&self) -> Result<()> {
        for p in [&self.corpus, &self.liwc, &self.nrc, &self.embeddings].into_iter().flatten() {
            if !p.is_file() {
                bail!("file not found: {}", p.display());
            }
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus.as_deref().ok_or_else(|| anyhow!("--corpus is required"))
    }

    pub fn suite(&self) -> Result<Option<Suite>> {
        Ok(self.suite.as_deref().map(str::parse).transpose()?)
    }

    pub fn report_format(&self) -> Result<ReportFormat> {
        Ok(self.format.parse()?)
    }

    pub fn feature_config(&self) -> Result<FeatureConfig> {
        let groups = self
            .features
            .iter()
            .map(|s| s.trim().parse::<FeatureGroup>())
            .collect::<hatectx::Result<Vec<_>>>()?;
        let sources = self
            .sources
            .iter()
            .map(|s| s.trim().parse::<Source>())
            .collect::<hatectx::Result<Vec<_>>>()?;
        Ok(FeatureConfig::new(groups, sources)?)
    }

    pub fn logreg_config(&self) -> LogRegConfig {
        LogRegConfig {
            c: self.c,
            tol: self.tol,
            max_iter: self.max_iter,
            ..LogRegConfig::default()
        }
    }

    /// Network settings; branch flags come from `branches`.
    pub fn net_config(&self) -> Result<NetConfig> {
        let mut title = false;
        let mut username = false;
        for b in &self.branches {
            match b.trim().parse::<Source>()? {
                Source::Comment => {}
                Source::Title => title = true,
                Source::Username => username = true,
            }
        }
        Ok(NetConfig {
            hidden: self.hidden,
            attention_width: self.attention_width,
            recurrent_dropout: self.recurrent_dropout,
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            init_bound: self.init_bound,
            comment_encoder: self.encoder.parse::<CommentEncoder>()?,
            title,
            username,
            max_tokens: self.max_tokens,
        })
    }

    /// Canonical TOML of the resolved settings.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Manifest text: the resolved settings followed by their hash.
    pub fn manifest(&self) -> String {
        format!("{}config_hash = \"{}\"\n", self.to_toml(), self.hash())
    }
}
