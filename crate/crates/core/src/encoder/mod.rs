//! Three-branch recurrent classifier over comment words, title words and
//! screen-name characters, joined into a single sigmoid output.

mod chars;
mod embeddings;
mod lstm;
mod train;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::tokenize;
use crate::numcore::{NodeId, ParameterSet, SerializedTensor, Tape, Tensor};

pub use chars::CharVocab;
pub use embeddings::{load_embeddings, EmbeddingTable};
pub use lstm::{attention_pool, bilstm_encode, init_lstm, lstm_step, run_direction, BiStates, LstmNodes};
pub use train::{batch_loss, train, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentEncoder {
    Lstm,
    BiLstm,
    BiLstmAttention,
}

impl CommentEncoder {
    pub fn name(self) -> &'static str {
        match self {
            CommentEncoder::Lstm => "lstm",
            CommentEncoder::BiLstm => "bilstm",
            CommentEncoder::BiLstmAttention => "bilstm_attention",
        }
    }
}

impl fmt::Display for CommentEncoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CommentEncoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "lstm" => Ok(CommentEncoder::Lstm),
            "bilstm" | "bi_lstm" => Ok(CommentEncoder::BiLstm),
            "bilstm_attention" | "bilstm_attn" | "attention" => Ok(CommentEncoder::BiLstmAttention),
            other => Err(Error::InvalidArgument(format!("unknown comment encoder `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub hidden: usize,
    pub attention_width: usize,
    pub recurrent_dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub init_bound: f64,
    pub comment_encoder: CommentEncoder,
    pub title: bool,
    pub username: bool,
    /// Keep at most this many leading tokens of comment and title.
    pub max_tokens: Option<usize>,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden: 100,
            attention_width: 100,
            recurrent_dropout: 0.2,
            batch_size: 128,
            epochs: 30,
            learning_rate: 1e-3,
            init_bound: 0.08,
            comment_encoder: CommentEncoder::BiLstmAttention,
            title: true,
            username: true,
            max_tokens: None,
        }
    }
}

/// The six comparison rows, from a plain LSTM up to all three branches.
pub const VARIANTS: [(&str, CommentEncoder, bool, bool); 6] = [
    ("LSTM", CommentEncoder::Lstm, false, false),
    ("bi-LSTM", CommentEncoder::BiLstm, false, false),
    ("bi-LSTM+attention", CommentEncoder::BiLstmAttention, false, false),
    ("bi-LSTM+attention + username", CommentEncoder::BiLstmAttention, false, true),
    ("bi-LSTM+attention + title", CommentEncoder::BiLstmAttention, true, false),
    ("bi-LSTM+attention + title + username", CommentEncoder::BiLstmAttention, true, true),
];

impl NetConfig {
    pub fn variant(encoder: CommentEncoder, title: bool, username: bool) -> Self {
        NetConfig {
            comment_encoder: encoder,
            title,
            username,
            ..NetConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.attention_width == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "hidden, attention_width and batch_size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.recurrent_dropout) {
            return Err(Error::InvalidArgument(format!(
                "recurrent_dropout must be in [0, 1), got {}",
                self.recurrent_dropout
            )));
        }
        let lr_ok = self.learning_rate > 0.0 && self.learning_rate.is_finite();
        if !lr_ok || self.init_bound.is_nan() || self.init_bound < 0.0 {
            return Err(Error::InvalidArgument("learning_rate must be positive, init_bound non-negative".into()));
        }
        if self.max_tokens == Some(0) {
            return Err(Error::InvalidArgument("max_tokens must be positive".into()));
        }
        Ok(())
    }

    fn comment_width(&self) -> usize {
        match self.comment_encoder {
            CommentEncoder::Lstm => self.hidden,
            _ => 2 * self.hidden,
        }
    }

    /// Width of the concatenated branch outputs feeding the sigmoid head.
    pub fn output_width(&self) -> usize {
        self.comment_width() + 2 * self.hidden * (self.title as usize + self.username as usize)
    }
}

/// Shapes needed to run the network; kept apart from the parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub config: NetConfig,
    pub embed_dim: usize,
    /// One-hot width of username characters; 0 when that branch is off.
    pub char_width: usize,
}

/// Network inputs for one comment. `comment` and `title` are `[T, dim]`
/// embedding rows; `username` is `[L, char_width]` one-hot rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInstance {
    pub comment: Tensor,
    pub title: Option<Tensor>,
    pub username: Option<Tensor>,
    pub label: bool,
}

pub enum Mode<'a> {
    Eval,
    /// Samples fresh recurrent dropout masks from the generator.
    Train(&'a mut ChaCha8Rng),
}

fn embed_tokens(tokens: &[String], table: &EmbeddingTable, max_tokens: Option<usize>) -> Tensor {
    let n = max_tokens.map_or(tokens.len(), |m| tokens.len().min(m));
    if n == 0 {
        return Tensor::zeros(vec![1, table.dim()]);
    }
    let mut data = Vec::with_capacity(n * table.dim());
    for tok in &tokens[..n] {
        data.extend_from_slice(table.lookup(tok));
    }
    Tensor::new(vec![n, table.dim()], data).expect("finite embeddings")
}

/// Turns raw text into network inputs. Title and username are only encoded
/// for enabled branches.
pub fn encode_instance(
    arch: &Architecture,
    table: &EmbeddingTable,
    chars: Option<&CharVocab>,
    comment: &str,
    title: &str,
    username: &str,
    label: bool,
) -> Result<EncodedInstance> {
    if table.dim() != arch.embed_dim {
        return Err(Error::ConfigMismatch(format!(
            "embedding dim {} but model expects {}",
            table.dim(),
            arch.embed_dim
        )));
    }
    let cfg = &arch.config;
    let username = if cfg.username {
        let chars = chars.ok_or_else(|| Error::InvalidArgument("username branch needs a character vocabulary".into()))?;
        if chars.width() != arch.char_width {
            return Err(Error::ConfigMismatch("character vocabulary width differs from the model".into()));
        }
        Some(chars.encode(username))
    } else {
        None
    };
    Ok(EncodedInstance {
        comment: embed_tokens(&tokenize(comment), table, cfg.max_tokens),
        title: cfg.title.then(|| embed_tokens(&tokenize(title), table, cfg.max_tokens)),
        username,
        label,
    })
}

fn dropout_mask(rng: &mut ChaCha8Rng, h: usize, p: f64) -> Tensor {
    let keep = 1.0 - p;
    let data = (0..h).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
    Tensor::new(vec![1, h], data).expect("finite mask")
}

struct Masks {
    masks: Vec<Option<Tensor>>,
}

impl Masks {
    fn new(mode: &mut Mode<'_>, count: usize, h: usize, p: f64) -> Self {
        let masks = match mode {
            Mode::Train(rng) if p > 0.0 => (0..count).map(|_| Some(dropout_mask(rng, h, p))).collect(),
            _ => vec![None; count],
        };
        Masks { masks }
    }

    fn pair(&self, i: usize) -> [Option<&Tensor>; 2] {
        [self.masks[2 * i].as_ref(), self.masks[2 * i + 1].as_ref()]
    }
}

fn check_input(t: &Tensor, width: usize, what: &str) -> Result<()> {
    let (rows, cols) = t.dims2("network input")?;
    if rows == 0 || cols != width {
        return Err(Error::InvalidArgument(format!(
            "{what} input has shape {:?}, expected [T, {width}] with T > 0",
            t.shape()
        )));
    }
    Ok(())
}

/// Records the network on `tape` and returns the `[1, 1]` probability node.
pub fn forward_on(tape: &mut Tape, arch: &Architecture, params: &ParameterSet, x: &EncodedInstance, mut mode: Mode<'_>) -> Result<NodeId> {
    let cfg = &arch.config;
    let h = cfg.hidden;
    // Two masks per branch, drawn in a fixed order: comment, title, username.
    let masks = Masks::new(&mut mode, 6, h, cfg.recurrent_dropout);
    let mut parts = Vec::with_capacity(3);

    check_input(&x.comment, arch.embed_dim, "comment")?;
    let xc = tape.constant(x.comment.clone());
    let fwd = LstmNodes::bind(tape, params, "comment.fwd")?;
    match cfg.comment_encoder {
        CommentEncoder::Lstm => {
            let states = run_direction(tape, &fwd, xc, false, masks.pair(0)[0])?;
            parts.push(*states.last().expect("nonempty"));
        }
        CommentEncoder::BiLstm => {
            let bwd = LstmNodes::bind(tape, params, "comment.bwd")?;
            parts.push(bilstm_encode(tape, &fwd, &bwd, xc, masks.pair(0))?.summary);
        }
        CommentEncoder::BiLstmAttention => {
            let bwd = LstmNodes::bind(tape, params, "comment.bwd")?;
            let states = bilstm_encode(tape, &fwd, &bwd, xc, masks.pair(0))?;
            let w = tape.param(params, "comment.attn.w")?;
            let v = tape.param(params, "comment.attn.v")?;
            parts.push(attention_pool(tape, &states.per_step, w, v)?.0);
        }
    }

    for (i, (enabled, name, input, width)) in [
        (cfg.title, "title", &x.title, arch.embed_dim),
        (cfg.username, "username", &x.username, arch.char_width),
    ]
    .into_iter()
    .enumerate()
    {
        if !enabled {
            continue;
        }
        let t = input
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("missing {name} input for an enabled branch")))?;
        check_input(t, width, name)?;
        let xt = tape.constant(t.clone());
        let fwd = LstmNodes::bind(tape, params, &format!("{name}.fwd"))?;
        let bwd = LstmNodes::bind(tape, params, &format!("{name}.bwd"))?;
        parts.push(bilstm_encode(tape, &fwd, &bwd, xt, masks.pair(i + 1))?.summary);
    }

    let joined = tape.concat(&parts)?;
    let w = tape.param(params, "out.w")?;
    let b = tape.param(params, "out.b")?;
    let z = tape.matmul(joined, w)?;
    let logit = tape.add(z, b)?;
    Ok(tape.sigmoid(logit))
}

/// Per-instance loss node: BCE of the forward output.
pub fn loss_on(tape: &mut Tape, arch: &Architecture, params: &ParameterSet, x: &EncodedInstance, mode: Mode<'_>) -> Result<NodeId> {
    let p = forward_on(tape, arch, params, x, mode)?;
    tape.bce_mean(p, &[x.label as u8 as f64])
}

/// Binary cross-entropy of a single prediction.
pub fn bce_loss(p: f64, y: bool) -> f64 {
    crate::numcore::bce(p, y as u8 as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextNet {
    arch: Architecture,
    chars: Option<CharVocab>,
    params: ParameterSet,
}

#[derive(Serialize, Deserialize)]
struct StoredNet {
    architecture: Architecture,
    char_vocab: Option<CharVocab>,
    params: BTreeMap<String, SerializedTensor>,
}

impl ContextNet {
    /// Fresh network with seeded initialization. `chars` is required when
    /// the username branch is enabled.
    pub fn new(config: NetConfig, embed_dim: usize, chars: Option<CharVocab>, seed: u64) -> Result<Self> {
        config.validate()?;
        if embed_dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be positive".into()));
        }
        let chars = if config.username {
            Some(chars.ok_or_else(|| Error::InvalidArgument("username branch needs a character vocabulary".into()))?)
        } else {
            None
        };
        let arch = Architecture {
            char_width: chars.as_ref().map_or(0, CharVocab::width),
            embed_dim,
            config,
        };
        let cfg = &arch.config;
        let (h, bound) = (cfg.hidden, cfg.init_bound);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParameterSet::new();
        init_lstm(&mut params, "comment.fwd", embed_dim, h, bound, &mut rng);
        if cfg.comment_encoder != CommentEncoder::Lstm {
            init_lstm(&mut params, "comment.bwd", embed_dim, h, bound, &mut rng);
        }
        if cfg.comment_encoder == CommentEncoder::BiLstmAttention {
            params.insert_uniform("comment.attn.w", vec![2 * h, cfg.attention_width], bound, &mut rng);
            params.insert_uniform("comment.attn.v", vec![cfg.attention_width, 1], bound, &mut rng);
        }
        if cfg.title {
            init_lstm(&mut params, "title.fwd", embed_dim, h, bound, &mut rng);
            init_lstm(&mut params, "title.bwd", embed_dim, h, bound, &mut rng);
        }
        if cfg.username {
            init_lstm(&mut params, "username.fwd", arch.char_width, h, bound, &mut rng);
            init_lstm(&mut params, "username.bwd", arch.char_width, h, bound, &mut rng);
        }
        params.insert_uniform("out.w", vec![cfg.output_width(), 1], bound, &mut rng);
        params.insert("out.b", Tensor::zeros(vec![1]));
        Ok(ContextNet { arch, chars, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn config(&self) -> &NetConfig {
        &self.arch.config
    }

    pub fn char_vocab(&self) -> Option<&CharVocab> {
        self.chars.as_ref()
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }

    /// Disjoint borrows, for gradient checks that mutate parameters while
    /// reading the architecture.
    pub fn parts_mut(&mut self) -> (&Architecture, &mut ParameterSet) {
        (&self.arch, &mut self.params)
    }

    pub fn encode(&self, table: &EmbeddingTable, comment: &str, title: &str, username: &str, label: bool) -> Result<EncodedInstance> {
        encode_instance(&self.arch, table, self.chars.as_ref(), comment, title, username, label)
    }

    pub fn forward(&self, x: &EncodedInstance, mode: Mode<'_>) -> Result<f64> {
        let mut tape = Tape::new();
        let p = forward_on(&mut tape, &self.arch, &self.params, x, mode)?;
        Ok(tape.value(p).data()[0])
    }

    pub fn predict(&self, x: &EncodedInstance) -> Result<f64> {
        self.forward(x, Mode::Eval)
    }

    pub fn to_json(&self) -> String {
        let stored = StoredNet {
            architecture: self.arch.clone(),
            char_vocab: self.chars.clone(),
            params: self.params.to_serialized(),
        };
        serde_json::to_string_pretty(&stored).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let stored: StoredNet = serde_json::from_str(s).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))?;
        stored.architecture.config.validate()?;
        let params = ParameterSet::from_serialized(&stored.params)?;
        let net = ContextNet {
            arch: stored.architecture,
            chars: stored.char_vocab,
            params,
        };
        let fresh = ContextNet::new(net.arch.config.clone(), net.arch.embed_dim, net.chars.clone(), 0)?;
        if fresh.arch != net.arch
            || !fresh
                .params
                .names()
                .eq(net.params.names())
            || fresh
                .params
                .names()
                .any(|n| fresh.params.value(n).map(Tensor::shape) != net.params.value(n).map(Tensor::shape))
        {
            return Err(Error::ConfigMismatch("stored parameters do not match the architecture".into()));
        }
        Ok(net)
    }
}
