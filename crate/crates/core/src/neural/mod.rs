//! Self-contained neural building blocks with manual reverse-mode
//! gradients: dense/MLP stacks, GRU layers, smooth-L1 loss, Adam, and the
//! step-decay learning-rate schedule.
//!
//! Everything runs on plain vectors in the crate's generic scalar type;
//! there is no autodiff graph. Each block exposes `forward` (returning a
//! cache) and `backward` (consuming it), and the fixed fusion topology in
//! the `predictor` module composes them.

mod dense;
mod gru;
mod loss;
mod optim;

pub use dense::{Activation, Dense, DenseGrad, Mlp, MlpCache, MlpGrads, Mode};
pub use gru::{GruCellCache, GruGrads, GruLayer};
pub use loss::{smooth_l1, smooth_l1_with_grad};
pub use optim::{lr_schedule, AdamState, TrainConfig};
