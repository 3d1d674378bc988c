//! Gated recurrent unit with hand-written backward pass.
//!
//! Cell equations, with sigmoid gates and elementwise products:
//!
//! ```text
//! z = sigmoid(w_z x + u_z y_prev + b_z)        update gate
//! r = sigmoid(w_r x + u_r y_prev + b_r)        reset gate
//! o~ = tanh(w_o x + u_o (r . y_prev) + b_o)    candidate
//! o = (1 - z) . y_prev + z . o~                output
//! ```
//!
//! The output is a convex combination of the previous state and the
//! candidate, elementwise.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::num::{sample_uniform, Real};
use rand::Rng;

/// One GRU layer: three gates, each with input weights, recurrent weights,
/// and a bias. `t_u` is the number of time steps the layer unrolls over.
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer<T> {
    pub w_z: Mat<T>,
    pub u_z: Mat<T>,
    pub b_z: Vec<T>,
    pub w_r: Mat<T>,
    pub u_r: Mat<T>,
    pub b_r: Vec<T>,
    pub w_o: Mat<T>,
    pub u_o: Mat<T>,
    pub b_o: Vec<T>,
    pub t_u: usize,
}

/// Intermediate values of one cell evaluation, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GruCellCache<T> {
    pub x: Vec<T>,
    pub y_prev: Vec<T>,
    pub z: Vec<T>,
    pub r: Vec<T>,
    pub o_tilde: Vec<T>,
}

/// Parameter gradients of a GRU layer, same field layout as the layer.
#[derive(Debug, Clone)]
pub struct GruGrads<T> {
    pub w_z: Mat<T>,
    pub u_z: Mat<T>,
    pub b_z: Vec<T>,
    pub w_r: Mat<T>,
    pub u_r: Mat<T>,
    pub b_r: Vec<T>,
    pub w_o: Mat<T>,
    pub u_o: Mat<T>,
    pub b_o: Vec<T>,
}

fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Real> GruLayer<T> {
    /// Fan-in uniform init; biases start at zero.
    pub fn init<R: Rng + ?Sized>(in_dim: usize, hidden: usize, t_u: usize, rng: &mut R) -> Self {
        let mut w = |cols: usize| {
            let bound = T::one() / T::cast(cols as f64).sqrt();
            Mat::from_fn(hidden, cols, |_, _| sample_uniform(rng, -bound, bound))
        };
        let w_z = w(in_dim);
        let w_r = w(in_dim);
        let w_o = w(in_dim);
        let u_z = w(hidden);
        let u_r = w(hidden);
        let u_o = w(hidden);
        GruLayer {
            w_z,
            u_z,
            b_z: vec![T::zero(); hidden],
            w_r,
            u_r,
            b_r: vec![T::zero(); hidden],
            w_o,
            u_o,
            b_o: vec![T::zero(); hidden],
            t_u,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_z.rows()
    }

    /// One cell step.
    pub fn cell(&self, x: &[T], y_prev: &[T]) -> Result<(Vec<T>, GruCellCache<T>)> {
        if x.len() != self.in_dim() || y_prev.len() != self.hidden() {
            return Err(Error::DimensionMismatch(format!(
                "gru cell expects input {} and state {}, got {} and {}",
                self.in_dim(),
                self.hidden(),
                x.len(),
                y_prev.len()
            )));
        }
        let h = self.hidden();
        let mut z = self.w_z.matvec(x);
        let uz = self.u_z.matvec(y_prev);
        let mut r = self.w_r.matvec(x);
        let ur = self.u_r.matvec(y_prev);
        for i in 0..h {
            z[i] = sigmoid(z[i] + uz[i] + self.b_z[i]);
            r[i] = sigmoid(r[i] + ur[i] + self.b_r[i]);
        }
        let gated: Vec<T> = r.iter().zip(y_prev.iter()).map(|(a, b)| *a * *b).collect();
        let mut o_tilde = self.w_o.matvec(x);
        let uo = self.u_o.matvec(&gated);
        for i in 0..h {
            o_tilde[i] = (o_tilde[i] + uo[i] + self.b_o[i]).tanh();
        }
        let y: Vec<T> = (0..h)
            .map(|i| (T::one() - z[i]) * y_prev[i] + z[i] * o_tilde[i])
            .collect();
        let cache = GruCellCache { x: x.to_vec(), y_prev: y_prev.to_vec(), z, r, o_tilde };
        Ok((y, cache))
    }

    /// Unroll over a sequence of exactly `t_u` inputs, starting from the
    /// zero state. Returns one output per step.
    pub fn forward(&self, xs: &[Vec<T>]) -> Result<(Vec<Vec<T>>, Vec<GruCellCache<T>>)> {
        if xs.len() != self.t_u {
            return Err(Error::InvalidArgument(format!(
                "gru layer unrolls over {} steps, got a sequence of {}",
                self.t_u,
                xs.len()
            )));
        }
        let mut y = vec![T::zero(); self.hidden()];
        let mut ys = Vec::with_capacity(xs.len());
        let mut caches = Vec::with_capacity(xs.len());
        for x in xs {
            let (next, cache) = self.cell(x, &y)?;
            ys.push(next.clone());
            caches.push(cache);
            y = next;
        }
        Ok((ys, caches))
    }

    /// Backward through one cell. `dy` is the gradient at the cell output;
    /// returns gradients w.r.t. the input and the previous state, and
    /// accumulates parameter gradients into `grads`.
    pub fn cell_backward(
        &self,
        cache: &GruCellCache<T>,
        dy: &[T],
        grads: &mut GruGrads<T>,
    ) -> (Vec<T>, Vec<T>) {
        let h = self.hidden();
        let one = T::one();

        let mut dz = vec![T::zero(); h];
        let mut d_otilde = vec![T::zero(); h];
        let mut dy_prev = vec![T::zero(); h];
        for i in 0..h {
            dz[i] = dy[i] * (cache.o_tilde[i] - cache.y_prev[i]);
            d_otilde[i] = dy[i] * cache.z[i];
            dy_prev[i] = dy[i] * (one - cache.z[i]);
        }

        // Candidate branch.
        let da_o: Vec<T> = (0..h)
            .map(|i| d_otilde[i] * (one - cache.o_tilde[i] * cache.o_tilde[i]))
            .collect();
        let gated: Vec<T> = cache.r.iter().zip(cache.y_prev.iter()).map(|(a, b)| *a * *b).collect();
        grads.w_o.add_outer(&da_o, &cache.x);
        grads.u_o.add_outer(&da_o, &gated);
        for (g, d) in grads.b_o.iter_mut().zip(da_o.iter()) {
            *g += *d;
        }
        let d_gated = self.u_o.matvec_t(&da_o);
        let mut dr = vec![T::zero(); h];
        for i in 0..h {
            dr[i] = d_gated[i] * cache.y_prev[i];
            dy_prev[i] += d_gated[i] * cache.r[i];
        }
        let mut dx = self.w_o.matvec_t(&da_o);

        // Update gate.
        let da_z: Vec<T> = (0..h).map(|i| dz[i] * cache.z[i] * (one - cache.z[i])).collect();
        grads.w_z.add_outer(&da_z, &cache.x);
        grads.u_z.add_outer(&da_z, &cache.y_prev);
        for (g, d) in grads.b_z.iter_mut().zip(da_z.iter()) {
            *g += *d;
        }
        for (a, b) in dx.iter_mut().zip(self.w_z.matvec_t(&da_z)) {
            *a += b;
        }
        for (a, b) in dy_prev.iter_mut().zip(self.u_z.matvec_t(&da_z)) {
            *a += b;
        }

        // Reset gate.
        let da_r: Vec<T> = (0..h).map(|i| dr[i] * cache.r[i] * (one - cache.r[i])).collect();
        grads.w_r.add_outer(&da_r, &cache.x);
        grads.u_r.add_outer(&da_r, &cache.y_prev);
        for (g, d) in grads.b_r.iter_mut().zip(da_r.iter()) {
            *g += *d;
        }
        for (a, b) in dx.iter_mut().zip(self.w_r.matvec_t(&da_r)) {
            *a += b;
        }
        for (a, b) in dy_prev.iter_mut().zip(self.u_r.matvec_t(&da_r)) {
            *a += b;
        }

        (dx, dy_prev)
    }

    /// Backward through the unrolled sequence. `dys[t]` is the gradient at
    /// the step-`t` output (zero vectors for unused steps). Returns per-step
    /// input gradients.
    pub fn backward(
        &self,
        caches: &[GruCellCache<T>],
        dys: &[Vec<T>],
        grads: &mut GruGrads<T>,
    ) -> Vec<Vec<T>> {
        let steps = caches.len();
        let mut dxs = vec![Vec::new(); steps];
        let mut carry = vec![T::zero(); self.hidden()];
        for t in (0..steps).rev() {
            let mut dy = dys[t].clone();
            for (a, b) in dy.iter_mut().zip(carry.iter()) {
                *a += *b;
            }
            let (dx, dy_prev) = self.cell_backward(&caches[t], &dy, grads);
            dxs[t] = dx;
            carry = dy_prev;
        }
        dxs
    }

    /// Parameter slices in canonical order: per gate (z, r, o), w then u
    /// then b.
    pub fn params(&self) -> Vec<&[T]> {
        vec![
            self.w_z.as_slice(),
            self.u_z.as_slice(),
            self.b_z.as_slice(),
            self.w_r.as_slice(),
            self.u_r.as_slice(),
            self.b_r.as_slice(),
            self.w_o.as_slice(),
            self.u_o.as_slice(),
            self.b_o.as_slice(),
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        vec![
            self.w_z.as_mut_slice(),
            self.u_z.as_mut_slice(),
            self.b_z.as_mut_slice(),
            self.w_r.as_mut_slice(),
            self.u_r.as_mut_slice(),
            self.b_r.as_mut_slice(),
            self.w_o.as_mut_slice(),
            self.u_o.as_mut_slice(),
            self.b_o.as_mut_slice(),
        ]
    }
}

impl<T: Real> GruGrads<T> {
    pub fn zeros_like(layer: &GruLayer<T>) -> Self {
        let (h, i) = (layer.hidden(), layer.in_dim());
        GruGrads {
            w_z: Mat::zeros(h, i),
            u_z: Mat::zeros(h, h),
            b_z: vec![T::zero(); h],
            w_r: Mat::zeros(h, i),
            u_r: Mat::zeros(h, h),
            b_r: vec![T::zero(); h],
            w_o: Mat::zeros(h, i),
            u_o: Mat::zeros(h, h),
            b_o: vec![T::zero(); h],
        }
    }

    pub fn add_assign(&mut self, other: &GruGrads<T>) {
        self.w_z.add_assign(&other.w_z);
        self.u_z.add_assign(&other.u_z);
        self.w_r.add_assign(&other.w_r);
        self.u_r.add_assign(&other.u_r);
        self.w_o.add_assign(&other.w_o);
        self.u_o.add_assign(&other.u_o);
        for (a, b) in self.b_z.iter_mut().zip(other.b_z.iter()) {
            *a += *b;
        }
        for (a, b) in self.b_r.iter_mut().zip(other.b_r.iter()) {
            *a += *b;
        }
        for (a, b) in self.b_o.iter_mut().zip(other.b_o.iter()) {
            *a += *b;
        }
    }

    pub fn scale(&mut self, s: T) {
        self.w_z.scale(s);
        self.u_z.scale(s);
        self.w_r.scale(s);
        self.u_r.scale(s);
        self.w_o.scale(s);
        self.u_o.scale(s);
        for v in self.b_z.iter_mut().chain(self.b_r.iter_mut()).chain(self.b_o.iter_mut()) {
            *v *= s;
        }
    }

    /// Gradient slices matching [`GruLayer::params`].
    pub fn slices(&self) -> Vec<&[T]> {
        vec![
            self.w_z.as_slice(),
            self.u_z.as_slice(),
            self.b_z.as_slice(),
            self.w_r.as_slice(),
            self.u_r.as_slice(),
            self.b_r.as_slice(),
            self.w_o.as_slice(),
            self.u_o.as_slice(),
            self.b_o.as_slice(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, Purpose};
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn zero_parameters_halve_the_previous_state() {
        // z = r = sigmoid(0) = 0.5, candidate tanh(0) = 0,
        // so o = 0.5 * y_prev.
        let layer = GruLayer::<f64> {
            w_z: Mat::zeros(1, 1),
            u_z: Mat::zeros(1, 1),
            b_z: vec![0.0],
            w_r: Mat::zeros(1, 1),
            u_r: Mat::zeros(1, 1),
            b_r: vec![0.0],
            w_o: Mat::zeros(1, 1),
            u_o: Mat::zeros(1, 1),
            b_o: vec![0.0],
            t_u: 1,
        };
        let (y, cache) = layer.cell(&[0.0], &[0.4]).unwrap();
        assert_relative_eq!(cache.z[0], 0.5);
        assert_relative_eq!(cache.r[0], 0.5);
        assert_relative_eq!(cache.o_tilde[0], 0.0);
        assert_relative_eq!(y[0], 0.2);
    }

    #[test]
    fn zero_state_and_zero_params_give_zero_output() {
        let layer = GruLayer::<f64> {
            w_z: Mat::zeros(2, 3),
            u_z: Mat::zeros(2, 2),
            b_z: vec![0.0; 2],
            w_r: Mat::zeros(2, 3),
            u_r: Mat::zeros(2, 2),
            b_r: vec![0.0; 2],
            w_o: Mat::zeros(2, 3),
            u_o: Mat::zeros(2, 2),
            b_o: vec![0.0; 2],
            t_u: 2,
        };
        let (y, _) = layer.cell(&[1.0, -2.0, 0.5], &[0.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        let (ys, _) = layer.forward(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 1.0]]).unwrap();
        assert!(ys.iter().all(|y| y.iter().all(|&v| v == 0.0)));
    }

    /// Independent per-element evaluation of the gate equations.
    #[test]
    fn cell_matches_element_loop_oracle() {
        let mut rng = derive_rng(42, Purpose::ModelInit, 1);
        let layer = GruLayer::<f64>::init(4, 3, 1, &mut rng);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y_prev: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (y, _) = layer.cell(&x, &y_prev).unwrap();

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let gate = |w: &Mat<f64>, u: &Mat<f64>, b: &[f64], k: usize| {
            let mut a = b[k];
            for j in 0..4 {
                a += w[(k, j)] * x[j];
            }
            for j in 0..3 {
                a += u[(k, j)] * y_prev[j];
            }
            a
        };
        let r_full: Vec<f64> =
            (0..3).map(|k| sig(gate(&layer.w_r, &layer.u_r, &layer.b_r, k))).collect();
        for i in 0..3 {
            let z = sig(gate(&layer.w_z, &layer.u_z, &layer.b_z, i));
            let mut ao = layer.b_o[i];
            for j in 0..4 {
                ao += layer.w_o[(i, j)] * x[j];
            }
            for j in 0..3 {
                ao += layer.u_o[(i, j)] * (r_full[j] * y_prev[j]);
            }
            let o_tilde = ao.tanh();
            let expected = (1.0 - z) * y_prev[i] + z * o_tilde;
            assert_relative_eq!(y[i], expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn layer_of_length_one_equals_single_cell_from_zero_state() {
        let mut rng = derive_rng(7, Purpose::ModelInit, 2);
        let layer = GruLayer::<f64>::init(3, 4, 1, &mut rng);
        let x = vec![0.3, -0.6, 1.1];
        let (ys, _) = layer.forward(&[x.clone()]).unwrap();
        let (y, _) = layer.cell(&x, &[0.0; 4]).unwrap();
        assert_eq!(ys[0], y);
    }

    #[test]
    fn layer_of_length_two_equals_chained_cells() {
        let mut rng = derive_rng(8, Purpose::ModelInit, 3);
        let layer = GruLayer::<f64>::init(3, 4, 2, &mut rng);
        let x1 = vec![0.3, -0.6, 1.1];
        let x2 = vec![-0.2, 0.5, 0.8];
        let (ys, _) = layer.forward(&[x1.clone(), x2.clone()]).unwrap();
        let (y1, _) = layer.cell(&x1, &[0.0; 4]).unwrap();
        let (y2, _) = layer.cell(&x2, &y1).unwrap();
        assert_eq!(ys[0], y1);
        assert_eq!(ys[1], y2);
    }

    #[test]
    fn sequence_length_mismatch_is_rejected() {
        let mut rng = derive_rng(9, Purpose::ModelInit, 4);
        let layer = GruLayer::<f64>::init(2, 2, 2, &mut rng);
        assert!(layer.forward(&[vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn output_is_convex_combination_elementwise() {
        let mut rng = derive_rng(10, Purpose::ModelInit, 5);
        let layer = GruLayer::<f64>::init(3, 5, 1, &mut rng);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y_prev: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let (y, cache) = layer.cell(&x, &y_prev).unwrap();
            for i in 0..5 {
                let lo = y_prev[i].min(cache.o_tilde[i]) - 1e-12;
                let hi = y_prev[i].max(cache.o_tilde[i]) + 1e-12;
                assert!(y[i] >= lo && y[i] <= hi);
            }
        }
    }

    /// Finite differences over every GRU parameter through a 2-step unroll.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = derive_rng(11, Purpose::ModelInit, 6);
        let mut layer = GruLayer::<f64>::init(3, 4, 2, &mut rng);
        let xs = vec![
            (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>(),
            (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>(),
        ];
        let target: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let loss = |l: &GruLayer<f64>| -> f64 {
            let (ys, _) = l.forward(&xs).unwrap();
            let last = &ys[1];
            0.5 * last.iter().zip(target.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        };

        let (ys, caches) = layer.forward(&xs).unwrap();
        let dy_last: Vec<f64> = ys[1].iter().zip(target.iter()).map(|(a, b)| a - b).collect();
        let dys = vec![vec![0.0; 4], dy_last];
        let mut grads = GruGrads::zeros_like(&layer);
        layer.backward(&caches, &dys, &mut grads);

        let h = 1e-6;
        let n_tensors = layer.params().len();
        for t in 0..n_tensors {
            let len = layer.params()[t].len();
            for i in 0..len {
                let orig = layer.params()[t][i];
                layer.params_mut()[t][i] = orig + h;
                let lp = loss(&layer);
                layer.params_mut()[t][i] = orig - h;
                let lm = loss(&layer);
                layer.params_mut()[t][i] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let an = grads.slices()[t][i];
                let denom = an.abs().max(fd.abs()).max(1e-8);
                assert!(
                    (fd - an).abs() / denom <= 1e-4,
                    "tensor {t} elem {i}: fd {fd} vs analytic {an}"
                );
            }
        }
    }
}
