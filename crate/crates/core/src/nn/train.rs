use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::softmax_cross_entropy;
use super::model::argmax;
use super::{evaluate, sgd_step, InputDims, Model, ModelConfig, Tensor};
use crate::error::{Error, Result};

/// One labeled example: the `(H, W, 3)` image and, for fused models, the
/// `(R, R, 3)` persistence image.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Tensor,
    pub pi: Option<Tensor>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub per_epoch: Vec<EpochRecord>,
}

fn with_context(err: Error, epoch: usize, batch: usize) -> Error {
    match err {
        Error::NonFiniteValue(msg) => {
            Error::NonFiniteValue(format!("epoch {epoch}, batch {batch}: {msg}"))
        }
        other => other,
    }
}

/// Mini-batch SGD on the mean cross-entropy. Batches come from a ChaCha8
/// shuffle seeded by `cfg.seed` (stream 1; stream 0 initializes weights).
/// Per-sample gradients are summed in batch order, so runs are bit-for-bit
/// reproducible.
pub fn train(
    cfg: &ModelConfig,
    dims: InputDims,
    train_set: &[Sample],
    val_set: &[Sample],
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    if let Some(s) = train_set
        .iter()
        .chain(val_set)
        .find(|s| s.label >= cfg.num_classes)
    {
        return Err(Error::InvalidConfig(format!(
            "label {} out of range for {} classes",
            s.label, cfg.num_classes
        )));
    }
    let mut model = Model::new(cfg, dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut per_epoch = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch_ix, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut step = || -> Result<(f64, usize)> {
                let mut sums: Vec<Tensor> = model
                    .params()
                    .iter()
                    .map(|p| Tensor::zeros(p.value.shape()))
                    .collect();
                let (mut loss, mut hits) = (0.0, 0usize);
                for &i in batch {
                    let s = &train_set[i];
                    let trace = model.forward(&s.image, s.pi.as_ref())?;
                    let (l, grad) = softmax_cross_entropy(&trace.logits, s.label)?;
                    loss += l;
                    hits += usize::from(argmax(trace.logits.data()) == s.label);
                    for (acc, g) in sums.iter_mut().zip(model.backward(&trace, &grad)?) {
                        acc.add_assign(&g);
                    }
                }
                let scale = 1.0 / batch.len() as f64;
                for (p, mut g) in model.params_mut().iter_mut().zip(sums) {
                    g.scale(scale);
                    p.grad = g;
                }
                Ok((loss, hits))
            };
            let (loss, hits) = step().map_err(|e| with_context(e, epoch, batch_ix))?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteValue(format!(
                    "epoch {epoch}, batch {batch_ix}: loss is {loss}"
                )));
            }
            sgd_step(model.params_mut(), cfg.learning_rate)
                .map_err(|e| with_context(e, epoch, batch_ix))?;
            loss_sum += loss;
            correct += hits;
        }
        let val_accuracy = if val_set.is_empty() {
            None
        } else {
            Some(evaluate(&model, val_set)?.accuracy)
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            val_accuracy,
        };
        log::debug!("{record:?}");
        per_epoch.push(record);
    }
    Ok(TrainOutcome { model, per_epoch })
}
