//! Training orchestration for the fusion model.

use crate::csiprep::BeamEnergy;
use crate::error::{Error, Result};
use crate::neural::{lr_schedule, smooth_l1, smooth_l1_with_grad, AdamState, TrainConfig};
use crate::num::Real;
use crate::rng::{derive_rng, Purpose};
use crate::scene::SensingFrame;
use rand::seq::SliceRandom;

use super::model::{CoordStats, InputDims, MmffGrads, MmffModel, ModelConfig, ProcessedInputs};
use super::preprocess::{minmax_normalize_depth, zscore_normalize};

/// One slot of a dataset: sensing inputs at slot `n`, ground truth of slot
/// `n + 1` as target and auxiliary truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSample<T> {
    pub realization: usize,
    pub slot: usize,
    pub beam_energy: BeamEnergy<T>,
    pub frame: SensingFrame<T>,
    /// Next-slot ground-truth position (x, y), metres.
    pub target: [T; 2],
    /// Next-slot ground-truth angle, radians.
    pub theta_next: T,
    /// Next-slot RSU-vehicle distance, metres.
    pub d_next: T,
}

/// Loss curves and split bookkeeping of one training run.
#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub train_loss: Vec<T>,
    pub test_loss: Vec<T>,
    pub lr: Vec<T>,
    /// First sample index of the test block.
    pub split_index: usize,
}

/// Normalize every sample's inputs once, with a seeded noise stream for the
/// depth maps. Samples must be in dataset order for reproducibility.
pub fn preprocess_all<T: Real>(samples: &[SlotSample<T>], seed: u64) -> Vec<ProcessedInputs<T>> {
    let mut rng = derive_rng(seed, Purpose::SensingNoise, 0);
    samples
        .iter()
        .map(|s| ProcessedInputs {
            slot: s.slot,
            beams: s.beam_energy.values.clone(),
            grid_flat: zscore_normalize(&s.frame.grid).into_vec(),
            depth_flat: minmax_normalize_depth(&s.frame.depth, s.frame.noise_var, &mut rng)
                .into_vec(),
        })
        .collect()
}

/// Chronological-block split point: the first test index.
///
/// The raw point is `round(train_fraction * n)`. When the dataset holds
/// several realizations the point snaps to the nearest realization
/// boundary, so no trajectory straddles the split.
pub fn split_point<T: Real>(samples: &[SlotSample<T>], train_fraction: T) -> usize {
    let n = samples.len();
    let raw = (train_fraction.to_f64_lossy() * n as f64).round() as usize;
    let raw = raw.clamp(1, n.saturating_sub(1));
    let mut boundaries: Vec<usize> = (1..n)
        .filter(|&i| samples[i].realization != samples[i - 1].realization)
        .collect();
    if boundaries.is_empty() {
        return raw;
    }
    boundaries.sort_by_key(|&b| (b as isize - raw as isize).unsigned_abs());
    boundaries[0]
}

/// Indices of samples usable as training examples: the previous sample must
/// exist in the same realization with a consecutive slot index.
pub fn example_indices<T: Real>(samples: &[SlotSample<T>], range: std::ops::Range<usize>) -> Vec<usize> {
    range
        .filter(|&i| {
            i > 0
                && samples[i].realization == samples[i - 1].realization
                && samples[i].slot == samples[i - 1].slot + 1
        })
        .collect()
}

fn eval_loss<T: Real>(
    model: &MmffModel<T>,
    samples: &[SlotSample<T>],
    processed: &[ProcessedInputs<T>],
    examples: &[usize],
) -> Result<T> {
    let mut total = T::zero();
    for &i in examples {
        let f_prev = model.extract_features(&processed[i - 1])?;
        let f_curr = model.extract_features(&processed[i])?;
        let pred = super::model::predict_position(model, &f_prev, &f_curr)?;
        let pred_norm = model.stats.normalize(pred);
        let target_norm = model.stats.normalize(samples[i].target);
        total += smooth_l1(&pred_norm, &target_norm)?;
    }
    Ok(total / T::cast(examples.len().max(1) as f64))
}

/// Fit a fusion model on a chronologically ordered sample list.
///
/// Applies the 70/30 (configurable) block split, normalizes coordinate
/// targets with training-block statistics, and runs mini-batch smooth-L1
/// descent under Adam with the step-decay schedule. Deterministic given
/// `cfg.seed`.
pub fn train_mmff<T: Real>(
    samples: &[SlotSample<T>],
    model_cfg: &ModelConfig<T>,
    cfg: &TrainConfig<T>,
) -> Result<(MmffModel<T>, TrainReport<T>)> {
    cfg.validate()?;
    if samples.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "training needs at least 10 samples, got {}",
            samples.len()
        )));
    }

    let processed = preprocess_all(samples, cfg.seed);
    let split = split_point(samples, cfg.train_fraction);
    let train_examples = example_indices(samples, 1..split);
    let test_examples = example_indices(samples, split..samples.len());
    if train_examples.is_empty() || test_examples.is_empty() {
        return Err(Error::InvalidArgument(
            "split leaves an empty train or test block".into(),
        ));
    }

    let targets: Vec<[T; 2]> = train_examples.iter().map(|&i| samples[i].target).collect();
    let stats = CoordStats::from_targets(&targets);

    let first = &samples[0];
    let dims = InputDims {
        n_beams: first.beam_energy.len(),
        grid: first.frame.grid.shape(),
        depth: first.frame.depth.shape(),
    };
    let mut init_rng = derive_rng(cfg.seed, Purpose::ModelInit, 0);
    let mut model = MmffModel::new(model_cfg.clone(), dims, &mut init_rng)?;
    model.stats = stats;

    let mut adam = AdamState::new(&model.params(), cfg.lr);
    let mut train_rng = derive_rng(cfg.seed, Purpose::Training, 0);

    let mut report = TrainReport {
        train_loss: Vec::with_capacity(cfg.epochs),
        test_loss: Vec::with_capacity(cfg.epochs),
        lr: Vec::with_capacity(cfg.epochs),
        split_index: split,
    };

    let mut order = train_examples.clone();
    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(epoch, cfg);
        adam.lr = lr;
        order.shuffle(&mut train_rng);

        let mut epoch_loss = T::zero();
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = MmffGrads::zeros_like(&model);
            let mut batch_loss = T::zero();
            for &i in batch {
                let (pred, cache) =
                    model.forward_train(&processed[i - 1], &processed[i], &mut train_rng)?;
                let target_norm = model.stats.normalize(samples[i].target);
                let (loss, dpred) = smooth_l1_with_grad(&pred, &target_norm)?;
                batch_loss += loss;
                let g = model.backward_train(&cache, [dpred[0], dpred[1]]);
                grads.add_assign(&g);
            }
            let scale = T::one() / T::cast(batch.len() as f64);
            grads.scale(scale);
            {
                let grad_slices = grads.slices();
                let mut param_slices = model.params_mut();
                adam.step(&mut param_slices, &grad_slices)?;
            }
            epoch_loss += batch_loss;
        }
        let train_loss = epoch_loss / T::cast(train_examples.len() as f64);
        let test_loss = eval_loss(&model, samples, &processed, &test_examples)?;
        if !train_loss.is_finite() || !test_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss at epoch {epoch}: train {train_loss}, test {test_loss}"
            )));
        }
        report.train_loss.push(train_loss);
        report.test_loss.push(test_loss);
        report.lr.push(lr);
    }

    Ok((model, report))
}

/// Inference over a sample range: predicted next-slot positions for every
/// valid example index, as `(example_index, position)`.
pub fn predict_range<T: Real>(
    model: &MmffModel<T>,
    processed: &[ProcessedInputs<T>],
    examples: &[usize],
) -> Result<Vec<(usize, [T; 2])>> {
    examples
        .iter()
        .map(|&i| {
            let f_prev = model.extract_features(&processed[i - 1])?;
            let f_curr = model.extract_features(&processed[i])?;
            Ok((i, super::model::predict_position(model, &f_prev, &f_curr)?))
        })
        .collect()
}

