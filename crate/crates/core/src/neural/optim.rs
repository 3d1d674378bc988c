//! Bias-corrected Adam and the step-decay learning-rate schedule.

use crate::error::{Error, Result};
use crate::num::Real;

/// Adam accumulators; one (m, v) pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    /// Completed steps.
    pub t: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> AdamState<T> {
    /// Fresh state with accumulators shaped like `params`.
    pub fn new(params: &[&[T]], lr: T) -> Self {
        AdamState {
            m: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            t: 0,
            lr,
            beta1: T::cast(0.9),
            beta2: T::cast(0.999),
            eps: T::cast(1e-8),
        }
    }

    /// One update over all tensors using the current `lr`.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch(format!(
                "adam tracks {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads.iter()).zip(self.m.iter()) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::DimensionMismatch("adam tensor shape drift".into()));
            }
        }
        self.t += 1;
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.t as i32);
        let bc2 = one - self.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let g = grads[k];
            let p = &mut *params[k];
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (one - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (one - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Training hyper-parameters shared by every fitting run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: T,
    pub lr_decay: T,
    pub lr_milestones: Vec<usize>,
    /// Fraction of samples in the training block.
    pub train_fraction: T,
    pub seed: u64,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            batch_size: 10,
            lr: T::cast(1e-3),
            lr_decay: T::cast(0.3),
            lr_milestones: vec![15, 30],
            train_fraction: T::cast(0.7),
            seed: 0,
        }
    }
}

impl<T: Real> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be positive".into()));
        }
        if self.lr <= T::zero() || self.lr_decay <= T::zero() {
            return Err(Error::InvalidArgument("lr and lr_decay must be positive".into()));
        }
        let f = self.train_fraction.to_f64_lossy();
        if !(0.0..1.0).contains(&f) || f == 0.0 {
            return Err(Error::InvalidArgument("train_fraction must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// Learning rate at `epoch`: base rate decayed once per milestone already
/// reached (`milestone <= epoch`).
pub fn lr_schedule<T: Real>(epoch: usize, cfg: &TrainConfig<T>) -> T {
    let hits = cfg.lr_milestones.iter().filter(|&&m| m <= epoch).count();
    cfg.lr * cfg.lr_decay.powi(hits as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = vec![1.0, -2.0, 3.0];
        let g = vec![0.0; 3];
        let mut st = AdamState::new(&[&p.clone()], 1e-3);
        let mut refs: Vec<&mut [f64]> = vec![&mut p];
        st.step(&mut refs, &[&g]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_matches_closed_form() {
        let g = 0.37f64;
        let lr = 1e-3;
        let mut p = vec![5.0];
        let mut st = AdamState::new(&[&p.clone()], lr);
        let mut refs: Vec<&mut [f64]> = vec![&mut p];
        st.step(&mut refs, &[&[g][..]]).unwrap();
        // m_hat = g, v_hat = g^2 after bias correction, so
        // delta = -lr * g / (|g| + eps): sign(g) up to the eps correction.
        let expected = 5.0 - lr * g / (g.abs() + 1e-8);
        assert_relative_eq!(p[0], expected, max_relative = 1e-12);
        assert!((p[0] - (5.0 - lr * g.signum())).abs() < 1e-9);
    }

    /// Five steps on a 1-D quadratic against an independent scalar Adam.
    #[test]
    fn quadratic_descent_matches_scalar_oracle() {
        let lr = 0.01;
        let mut p = vec![2.0f64];
        let mut st = AdamState::new(&[&p.clone()], lr);
        // Oracle state.
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let mut x = 2.0f64;
        for t in 1..=5 {
            let g = 2.0 * p[0]; // d/dx of x^2
            let mut refs: Vec<&mut [f64]> = vec![&mut p];
            st.step(&mut refs, &[&[g][..]]).unwrap();

            let og = 2.0 * x;
            m = b1 * m + (1.0 - b1) * og;
            v = b2 * v + (1.0 - b2) * og * og;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
            assert_relative_eq!(p[0], x, max_relative = 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = vec![1.0, 2.0];
        let mut st = AdamState::new(&[&p.clone()], 1e-3);
        let mut refs: Vec<&mut [f64]> = vec![&mut p];
        assert!(st.step(&mut refs, &[&[1.0][..]]).is_err());
    }

    #[test]
    fn schedule_hits_published_milestones() {
        let cfg = TrainConfig::<f64>::default();
        assert_relative_eq!(lr_schedule(0, &cfg), 1e-3);
        assert_relative_eq!(lr_schedule(14, &cfg), 1e-3);
        assert_relative_eq!(lr_schedule(15, &cfg), 3e-4, max_relative = 1e-12);
        assert_relative_eq!(lr_schedule(29, &cfg), 3e-4, max_relative = 1e-12);
        assert_relative_eq!(lr_schedule(30, &cfg), 9e-5, max_relative = 1e-12);
        assert_relative_eq!(lr_schedule(40, &cfg), 9e-5, max_relative = 1e-12);
    }
}
