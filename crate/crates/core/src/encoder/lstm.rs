//! LSTM cells, bidirectional encoding and additive attention pooling on the
//! tape. Gates are packed as `[i | f | g | o]` along the last axis and all
//! vectors are rows, so input weights are stored `[d, 4h]`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numcore::{Axis, NodeId, ParameterSet, Tape, Tensor};

/// Tape handles for one LSTM direction: `w [d, 4h]`, `u [h, 4h]`, `b [4h]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmNodes {
    pub w: NodeId,
    pub u: NodeId,
    pub b: NodeId,
    pub hidden: usize,
}

impl LstmNodes {
    /// Binds `{prefix}.w`, `{prefix}.u` and `{prefix}.b`.
    pub fn bind(tape: &mut Tape, params: &ParameterSet, prefix: &str) -> Result<Self> {
        let w = tape.param(params, &format!("{prefix}.w"))?;
        let u = tape.param(params, &format!("{prefix}.u"))?;
        let b = tape.param(params, &format!("{prefix}.b"))?;
        let (h, four_h) = tape.value(u).dims2("lstm u")?;
        let (_, w_cols) = tape.value(w).dims2("lstm w")?;
        if four_h != 4 * h || w_cols != four_h || tape.value(b).shape() != [four_h] {
            return Err(Error::ShapeMismatch {
                op: "lstm params",
                left: tape.value(w).shape().to_vec(),
                right: tape.value(u).shape().to_vec(),
            });
        }
        Ok(LstmNodes { w, u, b, hidden: h })
    }
}

/// Registers one direction's parameters: weights uniform in `±bound`,
/// forget-gate bias 1, other biases 0.
pub fn init_lstm(params: &mut ParameterSet, prefix: &str, input_dim: usize, hidden: usize, bound: f64, rng: &mut impl Rng) {
    params.insert_uniform(format!("{prefix}.w"), vec![input_dim, 4 * hidden], bound, rng);
    params.insert_uniform(format!("{prefix}.u"), vec![hidden, 4 * hidden], bound, rng);
    let mut b = vec![0.0; 4 * hidden];
    b[hidden..2 * hidden].fill(1.0);
    params.insert(format!("{prefix}.b"), Tensor::new(vec![4 * hidden], b).expect("finite"));
}

/// One step from pre-activations `gates [1, 4h]`.
fn cell(tape: &mut Tape, gates: NodeId, c_prev: NodeId, h: usize) -> Result<(NodeId, NodeId)> {
    let i = tape.slice(gates, Axis::Cols, 0, h)?;
    let f = tape.slice(gates, Axis::Cols, h, h)?;
    let g = tape.slice(gates, Axis::Cols, 2 * h, h)?;
    let o = tape.slice(gates, Axis::Cols, 3 * h, h)?;
    let (i, f, g, o) = (tape.sigmoid(i), tape.sigmoid(f), tape.tanh(g), tape.sigmoid(o));
    let keep = tape.mul(f, c_prev)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let tc = tape.tanh(c);
    let h_t = tape.mul(o, tc)?;
    Ok((h_t, c))
}

/// `x_t [1, d]`, `h_prev` and `c_prev [1, h]` to `(h_t, c_t)`.
pub fn lstm_step(tape: &mut Tape, p: &LstmNodes, x_t: NodeId, h_prev: NodeId, c_prev: NodeId) -> Result<(NodeId, NodeId)> {
    let xw = tape.matmul(x_t, p.w)?;
    let hu = tape.matmul(h_prev, p.u)?;
    let s = tape.add(xw, hu)?;
    let gates = tape.add(s, p.b)?;
    cell(tape, gates, c_prev, p.hidden)
}

/// Runs one direction over `x [T, d]`. Hidden states come back in position
/// order whichever way the pass ran. `mask [1, h]` multiplies `h_prev` before
/// it enters the gates.
pub fn run_direction(tape: &mut Tape, p: &LstmNodes, x: NodeId, reverse: bool, mask: Option<&Tensor>) -> Result<Vec<NodeId>> {
    let (t_len, _) = tape.value(x).dims2("lstm input")?;
    if t_len == 0 {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    let h = p.hidden;
    let xw = tape.matmul(x, p.w)?;
    let proj = tape.add(xw, p.b)?;
    let mask = mask.map(|m| tape.constant(m.clone()));
    let mut h_prev = tape.constant(Tensor::zeros(vec![1, h]));
    let mut c_prev = tape.constant(Tensor::zeros(vec![1, h]));
    let mut states = vec![h_prev; t_len];
    let order: Vec<usize> = if reverse { (0..t_len).rev().collect() } else { (0..t_len).collect() };
    for t in order {
        let row = tape.slice(proj, Axis::Rows, t, 1)?;
        let h_in = match mask {
            Some(m) => tape.mul(h_prev, m)?,
            None => h_prev,
        };
        let hu = tape.matmul(h_in, p.u)?;
        let gates = tape.add(row, hu)?;
        let (h_t, c_t) = cell(tape, gates, c_prev, h)?;
        states[t] = h_t;
        h_prev = h_t;
        c_prev = c_t;
    }
    Ok(states)
}

#[derive(Debug, Clone)]
pub struct BiStates {
    /// `concat(fwd_t, bwd_t)`, each `[1, 2h]`.
    pub per_step: Vec<NodeId>,
    /// Last forward state joined with the backward pass's final state
    /// (position 0), `[1, 2h]`.
    pub summary: NodeId,
}

pub fn bilstm_encode(
    tape: &mut Tape,
    fwd: &LstmNodes,
    bwd: &LstmNodes,
    x: NodeId,
    masks: [Option<&Tensor>; 2],
) -> Result<BiStates> {
    let f = run_direction(tape, fwd, x, false, masks[0])?;
    let b = run_direction(tape, bwd, x, true, masks[1])?;
    let per_step = f
        .iter()
        .zip(&b)
        .map(|(&ft, &bt)| tape.concat(&[ft, bt]))
        .collect::<Result<Vec<_>>>()?;
    let summary = tape.concat(&[*f.last().expect("nonempty"), b[0]])?;
    Ok(BiStates { per_step, summary })
}

/// Additive attention: `e_t = v · tanh(W s_t)`, `α = softmax(e)`,
/// context `Σ α_t s_t`. Returns `(context [1, 2h], α [1, T])`.
pub fn attention_pool(tape: &mut Tape, states: &[NodeId], w: NodeId, v: NodeId) -> Result<(NodeId, NodeId)> {
    let s = tape.stack_rows(states)?;
    let proj = tape.matmul(s, w)?;
    let act = tape.tanh(proj);
    let scores = tape.matmul(act, v)?;
    let row = tape.transpose(scores)?;
    let alpha = tape.softmax(row);
    let context = tape.matmul(alpha, s)?;
    Ok((context, alpha))
}
