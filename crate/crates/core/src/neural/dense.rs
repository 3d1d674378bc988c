//! Fully-connected layers and MLP stacks with hand-written reverse-mode
//! gradients.
//!
//! Hidden layers are ReLU; the output layer is ReLU for feature heads and
//! linear for regression heads. Dropout follows each hidden layer with
//! inverted scaling (masks carry `1 / (1 - p)`), so inference needs no
//! rescaling and is completely deterministic.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::num::{sample_uniform, Real};
use rand::Rng;

/// Nonlinearity applied by a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

/// Forward-pass mode; dropout fires only in `Train`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// One dense layer `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `out x in` weight matrix.
    pub w: Mat<T>,
    pub b: Vec<T>,
    pub activation: Activation,
}

impl<T: Real> Dense<T> {
    /// Zero-initialized layer.
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Dense { w: Mat::zeros(out_dim, in_dim), b: vec![T::zero(); out_dim], activation }
    }

    /// Fan-in uniform init `U(-1/sqrt(in), 1/sqrt(in))`, zero bias.
    pub fn init<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = T::one() / T::cast(in_dim as f64).sqrt();
        let w = Mat::from_fn(out_dim, in_dim, |_, _| sample_uniform(rng, -bound, bound));
        Dense { w, b: vec![T::zero(); out_dim], activation }
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    fn activate(&self, z: &mut [T]) {
        if self.activation == Activation::Relu {
            for v in z.iter_mut() {
                if *v < T::zero() {
                    *v = T::zero();
                }
            }
        }
    }
}

/// Gradients of one dense layer.
#[derive(Debug, Clone)]
pub struct DenseGrad<T> {
    pub dw: Mat<T>,
    pub db: Vec<T>,
}

/// A stack of dense layers plus per-hidden-layer dropout rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
    /// Deactivation probability after each hidden layer; length
    /// `layers.len() - 1`.
    pub dropout: Vec<T>,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    /// Input vector each layer received.
    pub inputs: Vec<Vec<T>>,
    /// Pre-activation of each layer.
    pub preacts: Vec<Vec<T>>,
    /// Inverted-dropout masks per hidden layer (None outside train mode).
    pub masks: Vec<Option<Vec<T>>>,
}

/// Parameter gradients of an MLP, layer by layer.
#[derive(Debug, Clone)]
pub struct MlpGrads<T> {
    pub layers: Vec<DenseGrad<T>>,
}

impl<T: Real> MlpGrads<T> {
    pub fn zeros_like(mlp: &Mlp<T>) -> Self {
        MlpGrads {
            layers: mlp
                .layers
                .iter()
                .map(|l| DenseGrad {
                    dw: Mat::zeros(l.out_dim(), l.in_dim()),
                    db: vec![T::zero(); l.out_dim()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrads<T>) {
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            a.dw.add_assign(&b.dw);
            for (x, y) in a.db.iter_mut().zip(b.db.iter()) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for l in &mut self.layers {
            l.dw.scale(s);
            for v in &mut l.db {
                *v *= s;
            }
        }
    }
}

impl<T: Real> Mlp<T> {
    /// Build from a dimension chain `[in, h1, ..., out]`. Hidden layers are
    /// ReLU; `output_activation` selects the head kind. `dropout` gives one
    /// deactivation rate per hidden layer.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        output_activation: Activation,
        dropout: Vec<T>,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument("an MLP needs at least in/out dims".into()));
        }
        let n_layers = dims.len() - 1;
        if dropout.len() != n_layers - 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} dropout rates, got {}",
                n_layers - 1,
                dropout.len()
            )));
        }
        if dropout.iter().any(|p| *p < T::zero() || *p >= T::one()) {
            return Err(Error::InvalidArgument("dropout rates must lie in [0,1)".into()));
        }
        let layers = (0..n_layers)
            .map(|l| {
                let act = if l + 1 == n_layers { output_activation } else { Activation::Relu };
                Dense::init(dims[l], dims[l + 1], act, rng)
            })
            .collect();
        Ok(Mlp { layers, dropout })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    /// Forward pass. In train mode an RNG must be supplied for the dropout
    /// masks; in infer mode dropout is skipped entirely.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: &[T],
        mode: Mode,
        mut rng: Option<&mut R>,
    ) -> Result<(Vec<T>, MlpCache<T>)> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "mlp expects input of length {}, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        let n_layers = self.layers.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut preacts = Vec::with_capacity(n_layers);
        let mut masks = Vec::with_capacity(n_layers.saturating_sub(1));
        let mut h = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            inputs.push(h.clone());
            let mut z = layer.w.matvec(&h);
            for (zi, bi) in z.iter_mut().zip(layer.b.iter()) {
                *zi += *bi;
            }
            preacts.push(z.clone());
            layer.activate(&mut z);
            if l + 1 < n_layers {
                let p = self.dropout[l];
                let mask = if mode == Mode::Train && p > T::zero() {
                    let rng = rng
                        .as_deref_mut()
                        .ok_or_else(|| Error::InvalidArgument("train mode needs an RNG".into()))?;
                    let keep = T::one() - p;
                    let scale = T::one() / keep;
                    let m: Vec<T> = z
                        .iter()
                        .map(|_| {
                            let u: f64 = rng.gen();
                            if u < p.to_f64_lossy() {
                                T::zero()
                            } else {
                                scale
                            }
                        })
                        .collect();
                    for (zi, mi) in z.iter_mut().zip(m.iter()) {
                        *zi *= *mi;
                    }
                    Some(m)
                } else {
                    None
                };
                masks.push(mask);
            }
            h = z;
        }
        Ok((h, MlpCache { inputs, preacts, masks }))
    }

    /// Deterministic inference (no dropout, no cache bookkeeping kept).
    pub fn infer(&self, x: &[T]) -> Result<Vec<T>> {
        let (y, _) = self.forward::<rand_chacha::ChaCha12Rng>(x, Mode::Infer, None)?;
        Ok(y)
    }

    /// Replay a recorded forward pass with frozen dropout masks. Used by
    /// finite-difference checks that must hold masks fixed while parameters
    /// move.
    pub fn forward_replay(&self, x: &[T], masks: &[Option<Vec<T>>]) -> Result<Vec<T>> {
        let n_layers = self.layers.len();
        let mut h = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.w.matvec(&h);
            for (zi, bi) in z.iter_mut().zip(layer.b.iter()) {
                *zi += *bi;
            }
            layer.activate(&mut z);
            if l + 1 < n_layers {
                if let Some(m) = &masks[l] {
                    for (zi, mi) in z.iter_mut().zip(m.iter()) {
                        *zi *= *mi;
                    }
                }
            }
            h = z;
        }
        Ok(h)
    }

    /// Reverse-mode pass: gradient of the loss w.r.t. the input and every
    /// parameter, given `dy = dL/d(output)` and the forward cache (dropout
    /// masks are replayed from the cache).
    pub fn backward(&self, cache: &MlpCache<T>, dy: &[T]) -> (Vec<T>, MlpGrads<T>) {
        let n_layers = self.layers.len();
        let mut grads = MlpGrads::zeros_like(self);
        let mut d = dy.to_vec();
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            if l + 1 < n_layers {
                if let Some(m) = &cache.masks[l] {
                    for (di, mi) in d.iter_mut().zip(m.iter()) {
                        *di *= *mi;
                    }
                }
            }
            if layer.activation == Activation::Relu {
                for (di, zi) in d.iter_mut().zip(cache.preacts[l].iter()) {
                    if *zi <= T::zero() {
                        *di = T::zero();
                    }
                }
            }
            grads.layers[l].dw.add_outer(&d, &cache.inputs[l]);
            for (dbi, di) in grads.layers[l].db.iter_mut().zip(d.iter()) {
                *dbi += *di;
            }
            d = layer.w.matvec_t(&d);
        }
        (d, grads)
    }

    /// Parameter slices in canonical order (per layer: weights then bias).
    pub fn params(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.w.as_slice());
            out.push(l.b.as_slice());
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.w.as_mut_slice());
            out.push(l.b.as_mut_slice());
        }
        out
    }
}

impl<T: Real> MlpGrads<T> {
    /// Gradient slices in the same canonical order as [`Mlp::params`].
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.dw.as_slice());
            out.push(l.db.as_slice());
        }
        out
    }
}
