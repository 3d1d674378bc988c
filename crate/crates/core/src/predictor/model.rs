//! The multi-modal fusion model: three feature extractors, concatenation
//! fusion, an MLP head for the along-road coordinate, and a two-layer GRU
//! branch for the lateral coordinate.
//!
//! Topology per slot pair (previous, current):
//!
//! ```text
//! beams  -> AFE MLP -> nu   \
//! grid   -> VFE MLP -> chi   } fused = nu (+) chi (+) tau
//! depth  -> DFE MLP -> tau  /
//!
//! fused(curr)               -> X head MLP          -> x_hat
//! [fused(prev), fused(curr)] -> GRU stack -> Y MLP -> y_hat
//! ```
//!
//! Predictions live in normalized coordinate space internally and are
//! de-normalized with the training-set statistics stored in the model.

use crate::error::{Error, Result};
use crate::neural::{
    Activation, GruCellCache, GruGrads, GruLayer, Mlp, MlpCache, MlpGrads, Mode,
};
use crate::num::Real;
use crate::scene::{angle_from_axis, SceneConfig};
use rand::Rng;

/// The lateral branch always consumes exactly the previous and current slot.
pub const SEQ_LEN: usize = 2;

/// Sizes and dropout rates of every network component.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig<T> {
    /// Angular / visual / distance feature lengths.
    pub l_a: usize,
    pub l_v: usize,
    pub l_d: usize,
    pub afe_hidden: Vec<usize>,
    pub afe_dropout: Vec<T>,
    pub vfe_hidden: Vec<usize>,
    pub vfe_dropout: Vec<T>,
    pub dfe_hidden: Vec<usize>,
    pub dfe_dropout: Vec<T>,
    pub x_hidden: Vec<usize>,
    pub x_dropout: Vec<T>,
    pub gru_hidden: usize,
    pub gru_layers: usize,
    pub y_hidden: Vec<usize>,
    pub y_dropout: Vec<T>,
}

impl<T: Real> Default for ModelConfig<T> {
    fn default() -> Self {
        let zero = T::zero();
        ModelConfig {
            l_a: 8,
            l_v: 256,
            l_d: 256,
            afe_hidden: vec![64, 32, 16],
            afe_dropout: vec![T::cast(0.2), T::cast(0.2), zero],
            vfe_hidden: vec![256, 256],
            vfe_dropout: vec![zero, zero],
            dfe_hidden: vec![256, 256],
            dfe_dropout: vec![zero, zero],
            x_hidden: vec![520, 256, 128, 64],
            x_dropout: vec![T::cast(0.1), zero, zero, zero],
            gru_hidden: 16,
            gru_layers: 2,
            y_hidden: vec![16, 32, 16],
            y_dropout: vec![T::cast(0.1), T::cast(0.1), zero],
        }
    }
}

impl<T: Real> ModelConfig<T> {
    /// Length of the fused feature vector.
    pub fn fused_dim(&self) -> usize {
        self.l_a + self.l_v + self.l_d
    }

    /// A small configuration for fast tests and desk-scale experiments,
    /// with the same topology as the default.
    pub fn tiny(l_a: usize, l_v: usize, l_d: usize, gru_hidden: usize) -> Self {
        let zero = T::zero();
        let fused = l_a + l_v + l_d;
        ModelConfig {
            l_a,
            l_v,
            l_d,
            afe_hidden: vec![16, 12, 8],
            afe_dropout: vec![T::cast(0.2), T::cast(0.2), zero],
            vfe_hidden: vec![24, 16],
            vfe_dropout: vec![zero, zero],
            dfe_hidden: vec![24, 16],
            dfe_dropout: vec![zero, zero],
            x_hidden: vec![fused, 24, 16, 8],
            x_dropout: vec![T::cast(0.1), zero, zero, zero],
            gru_hidden,
            gru_layers: 2,
            y_hidden: vec![gru_hidden, 12, 8],
            y_dropout: vec![T::cast(0.1), T::cast(0.1), zero],
        }
    }
}

/// Raster and beam-vector sizes the model was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputDims {
    pub n_beams: usize,
    pub grid: (usize, usize),
    pub depth: (usize, usize),
}

/// Mean/std of the coordinate targets over the training block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordStats<T> {
    pub mean: [T; 2],
    pub std: [T; 2],
}

impl<T: Real> CoordStats<T> {
    pub fn identity() -> Self {
        CoordStats { mean: [T::zero(); 2], std: [T::one(); 2] }
    }

    pub fn from_targets(targets: &[[T; 2]]) -> Self {
        let n = T::cast(targets.len().max(1) as f64);
        let mut mean = [T::zero(); 2];
        for t in targets {
            mean[0] += t[0];
            mean[1] += t[1];
        }
        mean[0] /= n;
        mean[1] /= n;
        let mut var = [T::zero(); 2];
        for t in targets {
            var[0] += (t[0] - mean[0]) * (t[0] - mean[0]);
            var[1] += (t[1] - mean[1]) * (t[1] - mean[1]);
        }
        let floor = T::cast(1e-8);
        CoordStats {
            mean,
            std: [(var[0] / n).sqrt().max(floor), (var[1] / n).sqrt().max(floor)],
        }
    }

    pub fn normalize(&self, xy: [T; 2]) -> [T; 2] {
        [(xy[0] - self.mean[0]) / self.std[0], (xy[1] - self.mean[1]) / self.std[1]]
    }

    pub fn denormalize(&self, xy: [T; 2]) -> [T; 2] {
        [xy[0] * self.std[0] + self.mean[0], xy[1] * self.std[1] + self.mean[1]]
    }
}

/// Per-slot modality features plus their concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVec<T> {
    /// Slot index the features were extracted at.
    pub slot: usize,
    /// Angular feature.
    pub nu: Vec<T>,
    /// Visual feature.
    pub chi: Vec<T>,
    /// Distance feature.
    pub tau: Vec<T>,
    /// `nu (+) chi (+) tau`, in that order.
    pub fused: Vec<T>,
}

/// Normalized per-slot inputs ready for the extractors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedInputs<T> {
    pub slot: usize,
    pub beams: Vec<T>,
    pub grid_flat: Vec<T>,
    pub depth_flat: Vec<T>,
}

/// The full fusion model.
#[derive(Debug, Clone, PartialEq)]
pub struct MmffModel<T> {
    pub cfg: ModelConfig<T>,
    pub dims: InputDims,
    pub afe: Mlp<T>,
    pub vfe: Mlp<T>,
    pub dfe: Mlp<T>,
    pub x_head: Mlp<T>,
    pub gru: Vec<GruLayer<T>>,
    pub y_head: Mlp<T>,
    pub stats: CoordStats<T>,
}

/// Parameter gradients mirroring [`MmffModel`].
#[derive(Debug, Clone)]
pub struct MmffGrads<T> {
    pub afe: MlpGrads<T>,
    pub vfe: MlpGrads<T>,
    pub dfe: MlpGrads<T>,
    pub x_head: MlpGrads<T>,
    pub gru: Vec<GruGrads<T>>,
    pub y_head: MlpGrads<T>,
}

/// Cached intermediates of one training forward pass.
pub struct TrainCache<T> {
    pub afe_prev: MlpCache<T>,
    pub vfe_prev: MlpCache<T>,
    pub dfe_prev: MlpCache<T>,
    pub afe_curr: MlpCache<T>,
    pub vfe_curr: MlpCache<T>,
    pub dfe_curr: MlpCache<T>,
    pub x_cache: MlpCache<T>,
    pub gru_caches: Vec<Vec<GruCellCache<T>>>,
    pub y_cache: MlpCache<T>,
}

fn dim_chain(in_dim: usize, hidden: &[usize], out: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(in_dim);
    dims.extend_from_slice(hidden);
    dims.push(out);
    dims
}

impl<T: Real> MmffModel<T> {
    /// Build and initialize all components.
    pub fn new<R: Rng + ?Sized>(cfg: ModelConfig<T>, dims: InputDims, rng: &mut R) -> Result<Self> {
        if cfg.gru_layers == 0 {
            return Err(Error::InvalidArgument("gru_layers must be >= 1".into()));
        }
        let afe = Mlp::new(
            &dim_chain(dims.n_beams, &cfg.afe_hidden, cfg.l_a),
            Activation::Relu,
            cfg.afe_dropout.clone(),
            rng,
        )?;
        let vfe = Mlp::new(
            &dim_chain(dims.grid.0 * dims.grid.1, &cfg.vfe_hidden, cfg.l_v),
            Activation::Relu,
            cfg.vfe_dropout.clone(),
            rng,
        )?;
        let dfe = Mlp::new(
            &dim_chain(dims.depth.0 * dims.depth.1, &cfg.dfe_hidden, cfg.l_d),
            Activation::Relu,
            cfg.dfe_dropout.clone(),
            rng,
        )?;
        let x_head = Mlp::new(
            &dim_chain(cfg.fused_dim(), &cfg.x_hidden, 1),
            Activation::Linear,
            cfg.x_dropout.clone(),
            rng,
        )?;
        let mut gru = Vec::with_capacity(cfg.gru_layers);
        for l in 0..cfg.gru_layers {
            let in_dim = if l == 0 { cfg.fused_dim() } else { cfg.gru_hidden };
            gru.push(GruLayer::init(in_dim, cfg.gru_hidden, SEQ_LEN, rng));
        }
        let y_head = Mlp::new(
            &dim_chain(cfg.gru_hidden, &cfg.y_hidden, 1),
            Activation::Linear,
            cfg.y_dropout.clone(),
            rng,
        )?;
        Ok(MmffModel {
            cfg,
            dims,
            afe,
            vfe,
            dfe,
            x_head,
            gru,
            y_head,
            stats: CoordStats::identity(),
        })
    }

    fn check_inputs(&self, p: &ProcessedInputs<T>) -> Result<()> {
        if p.beams.len() != self.dims.n_beams
            || p.grid_flat.len() != self.dims.grid.0 * self.dims.grid.1
            || p.depth_flat.len() != self.dims.depth.0 * self.dims.depth.1
        {
            return Err(Error::DimensionMismatch(format!(
                "inputs ({}, {}, {}) do not match model dims {:?}",
                p.beams.len(),
                p.grid_flat.len(),
                p.depth_flat.len(),
                self.dims
            )));
        }
        Ok(())
    }

    /// Inference-mode feature extraction for one slot.
    pub fn extract_features(&self, inputs: &ProcessedInputs<T>) -> Result<FeatureVec<T>> {
        self.check_inputs(inputs)?;
        let nu = self.afe.infer(&inputs.beams)?;
        let chi = self.vfe.infer(&inputs.grid_flat)?;
        let tau = self.dfe.infer(&inputs.depth_flat)?;
        let mut fused = Vec::with_capacity(self.cfg.fused_dim());
        fused.extend_from_slice(&nu);
        fused.extend_from_slice(&chi);
        fused.extend_from_slice(&tau);
        Ok(FeatureVec { slot: inputs.slot, nu, chi, tau, fused })
    }

    /// Normalized-space prediction from two fused feature vectors
    /// (inference mode, no dropout).
    fn predict_norm(&self, fused_prev: &[T], fused_curr: &[T]) -> Result<[T; 2]> {
        let x = self.x_head.infer(fused_curr)?[0];
        let mut seq = vec![fused_prev.to_vec(), fused_curr.to_vec()];
        for layer in &self.gru {
            let (ys, _) = layer.forward(&seq)?;
            seq = ys;
        }
        let y = self.y_head.infer(&seq[SEQ_LEN - 1])?[0];
        Ok([x, y])
    }

    /// Training-mode forward pass over a slot pair. Dropout masks come from
    /// `rng` and are recorded in the cache for the backward pass.
    pub fn forward_train<R: Rng + ?Sized>(
        &self,
        prev: &ProcessedInputs<T>,
        curr: &ProcessedInputs<T>,
        rng: &mut R,
    ) -> Result<([T; 2], TrainCache<T>)> {
        self.check_inputs(prev)?;
        self.check_inputs(curr)?;
        let (nu_p, afe_prev) = self.afe.forward(&prev.beams, Mode::Train, Some(rng))?;
        let (chi_p, vfe_prev) = self.vfe.forward(&prev.grid_flat, Mode::Train, Some(rng))?;
        let (tau_p, dfe_prev) = self.dfe.forward(&prev.depth_flat, Mode::Train, Some(rng))?;
        let (nu_c, afe_curr) = self.afe.forward(&curr.beams, Mode::Train, Some(rng))?;
        let (chi_c, vfe_curr) = self.vfe.forward(&curr.grid_flat, Mode::Train, Some(rng))?;
        let (tau_c, dfe_curr) = self.dfe.forward(&curr.depth_flat, Mode::Train, Some(rng))?;

        let mut fused_prev = Vec::with_capacity(self.cfg.fused_dim());
        fused_prev.extend(nu_p);
        fused_prev.extend(chi_p);
        fused_prev.extend(tau_p);
        let mut fused_curr = Vec::with_capacity(self.cfg.fused_dim());
        fused_curr.extend(nu_c);
        fused_curr.extend(chi_c);
        fused_curr.extend(tau_c);

        let (x_out, x_cache) = self.x_head.forward(&fused_curr, Mode::Train, Some(rng))?;

        let mut seq = vec![fused_prev, fused_curr];
        let mut gru_caches = Vec::with_capacity(self.gru.len());
        for layer in &self.gru {
            let (ys, caches) = layer.forward(&seq)?;
            gru_caches.push(caches);
            seq = ys;
        }
        let (y_out, y_cache) = self.y_head.forward(&seq[SEQ_LEN - 1], Mode::Train, Some(rng))?;

        Ok((
            [x_out[0], y_out[0]],
            TrainCache {
                afe_prev,
                vfe_prev,
                dfe_prev,
                afe_curr,
                vfe_curr,
                dfe_curr,
                x_cache,
                gru_caches,
                y_cache,
            },
        ))
    }

    /// Re-run a recorded training forward pass with its dropout masks held
    /// fixed. Finite-difference checks need this: the loss must be a
    /// deterministic function of the parameters while they are perturbed.
    pub fn forward_replay(
        &self,
        prev: &ProcessedInputs<T>,
        curr: &ProcessedInputs<T>,
        cache: &TrainCache<T>,
    ) -> Result<[T; 2]> {
        let nu_p = self.afe.forward_replay(&prev.beams, &cache.afe_prev.masks)?;
        let chi_p = self.vfe.forward_replay(&prev.grid_flat, &cache.vfe_prev.masks)?;
        let tau_p = self.dfe.forward_replay(&prev.depth_flat, &cache.dfe_prev.masks)?;
        let nu_c = self.afe.forward_replay(&curr.beams, &cache.afe_curr.masks)?;
        let chi_c = self.vfe.forward_replay(&curr.grid_flat, &cache.vfe_curr.masks)?;
        let tau_c = self.dfe.forward_replay(&curr.depth_flat, &cache.dfe_curr.masks)?;
        let mut fused_prev = nu_p;
        fused_prev.extend(chi_p);
        fused_prev.extend(tau_p);
        let mut fused_curr = nu_c;
        fused_curr.extend(chi_c);
        fused_curr.extend(tau_c);

        let x = self.x_head.forward_replay(&fused_curr, &cache.x_cache.masks)?[0];
        let mut seq = vec![fused_prev, fused_curr];
        for layer in &self.gru {
            let (ys, _) = layer.forward(&seq)?;
            seq = ys;
        }
        let y = self.y_head.forward_replay(&seq[SEQ_LEN - 1], &cache.y_cache.masks)?[0];
        Ok([x, y])
    }

    /// Reverse-mode pass through the whole topology, replaying the cached
    /// dropout masks. `dpred` is the loss gradient at the normalized
    /// `(x_hat, y_hat)` outputs.
    pub fn backward_train(&self, cache: &TrainCache<T>, dpred: [T; 2]) -> MmffGrads<T> {
        let mut grads = MmffGrads::zeros_like(self);

        // X branch.
        let (d_fused_x, x_grads) = self.x_head.backward(&cache.x_cache, &[dpred[0]]);
        grads.x_head = x_grads;

        // Y branch: head, then down the GRU stack.
        let (d_last, y_grads) = self.y_head.backward(&cache.y_cache, &[dpred[1]]);
        grads.y_head = y_grads;
        let zero = vec![T::zero(); self.cfg.gru_hidden];
        let mut dys = vec![zero, d_last];
        for (l, layer) in self.gru.iter().enumerate().rev() {
            dys = layer.backward(&cache.gru_caches[l], &dys, &mut grads.gru[l]);
        }
        let d_fused_prev = &dys[0];
        let d_fused_curr_gru = &dys[1];

        let (l_a, l_v) = (self.cfg.l_a, self.cfg.l_v);
        let split3 = |d: &[T]| -> (Vec<T>, Vec<T>, Vec<T>) {
            (d[..l_a].to_vec(), d[l_a..l_a + l_v].to_vec(), d[l_a + l_v..].to_vec())
        };

        // Current slot receives gradient from both branches.
        let d_fused_curr: Vec<T> = d_fused_x
            .iter()
            .zip(d_fused_curr_gru.iter())
            .map(|(a, b)| *a + *b)
            .collect();
        let (d_nu_c, d_chi_c, d_tau_c) = split3(&d_fused_curr);
        let (_, g) = self.afe.backward(&cache.afe_curr, &d_nu_c);
        grads.afe.add_assign(&g);
        let (_, g) = self.vfe.backward(&cache.vfe_curr, &d_chi_c);
        grads.vfe.add_assign(&g);
        let (_, g) = self.dfe.backward(&cache.dfe_curr, &d_tau_c);
        grads.dfe.add_assign(&g);

        // Previous slot only feeds the recurrent branch.
        let (d_nu_p, d_chi_p, d_tau_p) = split3(d_fused_prev);
        let (_, g) = self.afe.backward(&cache.afe_prev, &d_nu_p);
        grads.afe.add_assign(&g);
        let (_, g) = self.vfe.backward(&cache.vfe_prev, &d_chi_p);
        grads.vfe.add_assign(&g);
        let (_, g) = self.dfe.backward(&cache.dfe_prev, &d_tau_p);
        grads.dfe.add_assign(&g);

        grads
    }

    /// Parameter slices in canonical order: afe, vfe, dfe, x_head, gru
    /// layers, y_head.
    pub fn params(&self) -> Vec<&[T]> {
        let mut out = self.afe.params();
        out.extend(self.vfe.params());
        out.extend(self.dfe.params());
        out.extend(self.x_head.params());
        for layer in &self.gru {
            out.extend(layer.params());
        }
        out.extend(self.y_head.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = self.afe.params_mut();
        out.extend(self.vfe.params_mut());
        out.extend(self.dfe.params_mut());
        out.extend(self.x_head.params_mut());
        for layer in &mut self.gru {
            out.extend(layer.params_mut());
        }
        out.extend(self.y_head.params_mut());
        out
    }

    /// Total trainable parameter count.
    pub fn n_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

impl<T: Real> MmffGrads<T> {
    pub fn zeros_like(model: &MmffModel<T>) -> Self {
        MmffGrads {
            afe: MlpGrads::zeros_like(&model.afe),
            vfe: MlpGrads::zeros_like(&model.vfe),
            dfe: MlpGrads::zeros_like(&model.dfe),
            x_head: MlpGrads::zeros_like(&model.x_head),
            gru: model.gru.iter().map(GruGrads::zeros_like).collect(),
            y_head: MlpGrads::zeros_like(&model.y_head),
        }
    }

    pub fn add_assign(&mut self, other: &MmffGrads<T>) {
        self.afe.add_assign(&other.afe);
        self.vfe.add_assign(&other.vfe);
        self.dfe.add_assign(&other.dfe);
        self.x_head.add_assign(&other.x_head);
        for (a, b) in self.gru.iter_mut().zip(other.gru.iter()) {
            a.add_assign(b);
        }
        self.y_head.add_assign(&other.y_head);
    }

    pub fn scale(&mut self, s: T) {
        self.afe.scale(s);
        self.vfe.scale(s);
        self.dfe.scale(s);
        self.x_head.scale(s);
        for g in &mut self.gru {
            g.scale(s);
        }
        self.y_head.scale(s);
    }

    /// Gradient slices matching [`MmffModel::params`].
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = self.afe.slices();
        out.extend(self.vfe.slices());
        out.extend(self.dfe.slices());
        out.extend(self.x_head.slices());
        for g in &self.gru {
            out.extend(g.slices());
        }
        out.extend(self.y_head.slices());
        out
    }
}

/// Next-slot position in metres from the features of two consecutive slots.
pub fn predict_position<T: Real>(
    model: &MmffModel<T>,
    f_prev: &FeatureVec<T>,
    f_curr: &FeatureVec<T>,
) -> Result<[T; 2]> {
    if f_prev.slot + 1 != f_curr.slot {
        return Err(Error::InvalidArgument(format!(
            "features must come from consecutive slots, got {} then {}",
            f_prev.slot, f_curr.slot
        )));
    }
    let norm = model.predict_norm(&f_prev.fused, &f_curr.fused)?;
    Ok(model.stats.denormalize(norm))
}

/// Beamforming angle of a predicted position; same convention (and code
/// path) as the scene's ground-truth angle.
pub fn position_to_angle<T: Real>(xy: [T; 2], cfg: &SceneConfig<T>) -> Result<T> {
    angle_from_axis(cfg, xy)
}
