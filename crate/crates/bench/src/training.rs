//! Mini-batch training of the MLP classifier with a two-phase learning rate.

use mcopt_core::mlp::{accumulate_gradients, accuracy};
use mcopt_core::{Dataset, InitScheme, MlpSpec, Optimizer, OptimizerConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

/// Learning rate for a 1-based `epoch`: the base rate for the first
/// `floor(0.8 * epochs)` epochs, a tenth of it afterwards.
pub fn lr_for_epoch(base: f64, epoch: usize, epochs: usize) -> f64 {
    let boundary = epochs * 4 / 5;
    if epoch > boundary {
        base / 10.0
    } else {
        base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    /// Drives the train/test split and the per-epoch shuffles.
    pub seed: u64,
    /// Fraction of rows held out for test accuracy.
    pub test_fraction: f64,
    pub init: InitScheme,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            seed: 0,
            test_fraction: 0.2,
            init: InitScheme::ScaledNormal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Summed cross-entropy over the epoch divided by the training row count.
    pub mean_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
    pub config: OptimizerConfig,
    pub seed: u64,
}

impl TrainReport {
    pub fn final_record(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// Splits `dataset`, trains `spec` with `config` and logs every epoch.
///
/// The weights come from `spec.seed`; the split and the batch order come
/// from `settings.seed`. `config.alpha` is the phase-one learning rate.
pub fn run_training(
    dataset: &Dataset,
    spec: &MlpSpec,
    config: &OptimizerConfig,
    settings: &TrainSettings,
) -> Result<TrainReport> {
    if settings.epochs == 0 || settings.batch_size == 0 {
        return Err(HarnessError::Config(
            "epochs and batch size must be at least 1".into(),
        ));
    }
    if dataset.dim() != spec.input_dim() || dataset.classes() > spec.classes() {
        return Err(HarnessError::Config(format!(
            "dataset has {} features / {} classes, network is {:?}",
            dataset.dim(),
            dataset.classes(),
            spec.layer_widths
        )));
    }
    let (train, test) = dataset.split(settings.test_fraction, settings.seed)?;
    if train.is_empty() {
        return Err(HarnessError::Config(
            "no training rows after the split".into(),
        ));
    }

    let mut params = spec.init_params(settings.init)?;
    let mut opt = Optimizer::new(config.clone(), &params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(settings.epochs);

    for epoch in 1..=settings.epochs {
        let lr = lr_for_epoch(config.alpha, epoch, settings.epochs);
        opt.set_learning_rate(lr);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(settings.batch_size) {
            let batch = train.subset(chunk);
            let loss = accumulate_gradients(spec, &mut params, &batch)?;
            if !loss.is_finite() {
                return Err(HarnessError::Divergence {
                    stage: "epoch",
                    index: epoch,
                    reason: "loss is not finite".into(),
                });
            }
            total += loss;
            opt.step(&mut params)
                .map_err(|e| HarnessError::Divergence {
                    stage: "epoch",
                    index: epoch,
                    reason: e.to_string(),
                })?;
        }
        records.push(EpochRecord {
            epoch,
            mean_loss: total / train.len() as f64,
            train_acc: accuracy(spec, &params, &train)?,
            test_acc: accuracy(spec, &params, &test)?,
            lr,
        });
    }

    Ok(TrainReport {
        records,
        config: config.clone(),
        seed: settings.seed,
    })
}
