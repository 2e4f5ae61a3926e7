//! Binary logistic regression over sparse feature rows with L2 penalty and
//! per-class loss weights.
//!
//! The objective is
//!
//! ```text
//! L(w, b) = Σᵢ c(yᵢ) · BCE(σ(w·xᵢ + b), yᵢ) + ‖w‖² / (2C)
//! ```
//!
//! with the bias left unpenalized. It is minimized by full-batch gradient
//! descent from zero; each step starts from a Barzilai-Borwein step length
//! and backtracks until the Armijo condition holds, so every accepted step
//! strictly lowers the loss.

use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::numcore::{format_f64, parse_f64, sigmoid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub w_pos: f64,
    pub w_neg: f64,
}

impl ClassWeights {
    pub const UNIFORM: ClassWeights = ClassWeights { w_pos: 1.0, w_neg: 1.0 };

    fn of(&self, hateful: bool) -> f64 {
        if hateful {
            self.w_pos
        } else {
            self.w_neg
        }
    }
}

/// `n / (2 n_c)` per class.
pub fn balanced_class_weights(labels: &[bool]) -> Result<ClassWeights> {
    let n = labels.len();
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok(ClassWeights {
        w_pos: n as f64 / (2.0 * pos as f64),
        w_neg: n as f64 / (2.0 * neg as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    Balanced,
    Uniform,
    Explicit(ClassWeights),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// Inverse regularization strength.
    pub c: f64,
    /// Gradient ∞-norm at which training stops.
    pub tol: f64,
    pub max_iter: usize,
    pub weighting: ClassWeighting,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            c: 1.0,
            tol: 1e-6,
            max_iter: 5000,
            weighting: ClassWeighting::Balanced,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    weights: Vec<f64>,
    bias: f64,
    c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegFit {
    pub model: LogRegModel,
    /// Objective value at the start and after every accepted step.
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iter` ran out or the line search stalled before the
    /// gradient fell under `tol`. The model is still usable.
    pub converged: bool,
    pub final_grad_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct SerializedModel {
    width: usize,
    bias: String,
    #[serde(rename = "C")]
    c: String,
    weights: Vec<String>,
}

impl LogRegModel {
    pub fn zeros(width: usize, c: f64) -> Self {
        LogRegModel {
            weights: vec![0.0; width],
            bias: 0.0,
            c,
        }
    }

    pub fn from_parts(weights: Vec<f64>, bias: f64, c: f64) -> Result<Self> {
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("logistic regression coefficient".into()));
        }
        if c.is_nan() || c <= 0.0 {
            return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
        }
        Ok(LogRegModel { weights, bias, c })
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn to_json(&self) -> String {
        let s = SerializedModel {
            width: self.width(),
            bias: format_f64(self.bias),
            c: format_f64(self.c),
            weights: self.weights.iter().map(|&w| format_f64(w)).collect(),
        };
        serde_json::to_string_pretty(&s).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SerializedModel =
            serde_json::from_str(s).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))?;
        if raw.weights.len() != raw.width {
            return Err(Error::LengthMismatch {
                left: raw.width,
                right: raw.weights.len(),
            });
        }
        let weights = raw.weights.iter().map(|w| parse_f64(w)).collect::<Result<Vec<_>>>()?;
        LogRegModel::from_parts(weights, parse_f64(&raw.bias)?, parse_f64(&raw.c)?)
    }
}

fn check_width(x: &FeatureVector, width: usize) -> Result<()> {
    if x.min_width() > width {
        return Err(Error::LengthMismatch {
            left: width,
            right: x.min_width(),
        });
    }
    Ok(())
}

pub fn predict_proba(model: &LogRegModel, x: &FeatureVector) -> Result<f64> {
    check_width(x, model.width())?;
    Ok(sigmoid(x.dot(&model.weights) + model.bias))
}

/// Hateful iff `p >= threshold`.
pub fn classify(p: f64, threshold: f64) -> bool {
    p >= threshold
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Weighted cross-entropy of logit `z`: `softplus(z) - y z`.
fn weighted_bce(z: f64, y: bool, weight: f64) -> f64 {
    weight * (softplus(z) - if y { z } else { 0.0 })
}

/// Training problem with per-sample weights resolved.
struct Problem<'a> {
    x: &'a [FeatureVector],
    y: &'a [bool],
    sample_weight: Vec<f64>,
    width: usize,
    inv_c: f64,
}

impl Problem<'_> {
    fn data_loss(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(self.y)
            .zip(&self.sample_weight)
            .map(|((&z, &y), &w)| weighted_bce(z, y, w))
            .sum()
    }

    fn logits(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.x.iter().map(|x| x.dot(w) + b).collect()
    }

    /// `(∂L/∂w, ∂L/∂b)` given current logits.
    fn gradient(&self, w: &[f64], z: &[f64]) -> (Vec<f64>, f64) {
        let mut gw: Vec<f64> = w.iter().map(|&wj| wj * self.inv_c).collect();
        let mut gb = 0.0;
        for ((x, (&zi, &yi)), &si) in self.x.iter().zip(z.iter().zip(self.y)).zip(&self.sample_weight) {
            let r = si * (sigmoid(zi) - if yi { 1.0 } else { 0.0 });
            gb += r;
            for &(j, v) in x.pairs() {
                gw[j] += r * v;
            }
        }
        (gw, gb)
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Regularized weighted objective at `(w, b)`.
pub fn objective(x: &[FeatureVector], y: &[bool], weights: ClassWeights, c: f64, w: &[f64], b: f64) -> f64 {
    let sample_weight: Vec<f64> = y.iter().map(|&l| weights.of(l)).collect();
    let prob = Problem {
        x,
        y,
        sample_weight,
        width: w.len(),
        inv_c: 1.0 / c,
    };
    prob.data_loss(&prob.logits(w, b)) + 0.5 * prob.inv_c * sq_norm(w)
}

/// Analytic gradient of [`objective`].
pub fn objective_gradient(
    x: &[FeatureVector],
    y: &[bool],
    weights: ClassWeights,
    c: f64,
    w: &[f64],
    b: f64,
) -> (Vec<f64>, f64) {
    let sample_weight: Vec<f64> = y.iter().map(|&l| weights.of(l)).collect();
    let prob = Problem {
        x,
        y,
        sample_weight,
        width: w.len(),
        inv_c: 1.0 / c,
    };
    prob.gradient(w, &prob.logits(w, b))
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-300;

pub fn train_logreg(x: &[FeatureVector], y: &[bool], width: usize, config: &LogRegConfig) -> Result<LogRegFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", config.c)));
    }
    for row in x {
        check_width(row, width)?;
    }
    let weights = match config.weighting {
        ClassWeighting::Balanced => balanced_class_weights(y)?,
        ClassWeighting::Uniform => {
            if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
                return Err(Error::SingleClass);
            }
            ClassWeights::UNIFORM
        }
        ClassWeighting::Explicit(w) => {
            if !(w.w_pos > 0.0 && w.w_neg > 0.0) {
                return Err(Error::InvalidArgument("class weights must be positive".into()));
            }
            w
        }
    };
    let prob = Problem {
        x,
        y,
        sample_weight: y.iter().map(|&l| weights.of(l)).collect(),
        width,
        inv_c: 1.0 / config.c,
    };

    let mut w = vec![0.0; prob.width];
    let mut b = 0.0;
    let mut z = vec![0.0; x.len()];
    let mut loss = prob.data_loss(&z);
    let mut trace = vec![loss];
    let (mut gw, mut gb) = prob.gradient(&w, &z);
    let mut prev: Option<(Vec<f64>, f64, Vec<f64>, f64)> = None;
    let mut step = 1.0;
    let mut iterations = 0;
    let mut stalled = false;

    let grad_inf = |gw: &[f64], gb: f64| gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));

    while iterations < config.max_iter && grad_inf(&gw, gb) >= config.tol {
        // Barzilai-Borwein initial step from the last displacement.
        if let Some((pw, pb, pgw, pgb)) = &prev {
            let mut sy = (b - pb) * (gb - pgb);
            let mut ss = (b - pb) * (b - pb);
            for j in 0..w.len() {
                let s = w[j] - pw[j];
                sy += s * (gw[j] - pgw[j]);
                ss += s * s;
            }
            if sy > 0.0 && ss > 0.0 {
                step = (ss / sy).clamp(1e-12, 1e12);
            } else {
                step *= 2.0;
            }
        }
        let gg = sq_norm(&gw) + gb * gb;
        let mut t = step;
        let accepted = loop {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wj, gj)| wj - t * gj).collect();
            let cand_b = b - t * gb;
            let cand_z = prob.logits(&cand_w, cand_b);
            let cand = prob.data_loss(&cand_z) + 0.5 * prob.inv_c * sq_norm(&cand_w);
            if cand <= loss - ARMIJO * t * gg {
                break Some((cand_w, cand_b, cand_z, cand));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((cand_w, cand_b, cand_z, cand)) = accepted else {
            stalled = true;
            break;
        };
        prev = Some((std::mem::replace(&mut w, cand_w), b, gw, gb));
        b = cand_b;
        z = cand_z;
        loss = cand;
        trace.push(loss);
        let (ngw, ngb) = prob.gradient(&w, &z);
        gw = ngw;
        gb = ngb;
        step = t;
        iterations += 1;
    }

    let final_grad_norm = grad_inf(&gw, gb);
    let converged = !stalled && final_grad_norm < config.tol;
    if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
        return Err(Error::NonFinite("logistic regression diverged".into()));
    }
    Ok(LogRegFit {
        model: LogRegModel {
            weights: w,
            bias: b,
            c: config.c,
        },
        loss_trace: trace,
        iterations,
        converged,
        final_grad_norm,
    })
}
