use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{forward_on, loss_on, Architecture, ContextNet, EncodedInstance, Mode};
use crate::error::{Error, Result};
use crate::numcore::{Adam, AdamConfig, ParameterSet, Tape};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss of each epoch, measured as the batches ran.
    pub epoch_losses: Vec<f64>,
}

/// Mean eval-mode loss over `data`.
pub fn batch_loss(arch: &Architecture, params: &ParameterSet, data: &[EncodedInstance]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut total = 0.0;
    for x in data {
        let mut tape = Tape::new();
        let p = forward_on(&mut tape, arch, params, x, Mode::Eval)?;
        total += super::bce_loss(tape.value(p).data()[0], x.label);
    }
    Ok(total / data.len() as f64)
}

/// Mini-batch Adam on mean BCE. Each epoch reshuffles with the seeded
/// generator, which also draws every instance's dropout masks, so the whole
/// run is a function of `seed`.
pub fn train(net: &mut ContextNet, data: &[EncodedInstance], seed: u64) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let (arch, params) = net.parts_mut();
    let cfg = arch.config.clone();
    let mut adam = Adam::new(AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            params.zero_grads();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let mut tape = Tape::new();
                let loss = loss_on(&mut tape, arch, params, &data[i], Mode::Train(&mut rng))?;
                let value = tape.value(loss).data()[0];
                if !value.is_finite() {
                    return Err(Error::NonFinite(format!("loss at epoch {epoch}, instance {i}")));
                }
                total += value;
                let scaled = tape.scale(loss, scale);
                tape.backward(scaled, params)?;
            }
            adam.step(params);
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("mean loss at epoch {epoch}")));
        }
        epoch_losses.push(mean);
    }
    Ok(TrainReport { epoch_losses })
}
