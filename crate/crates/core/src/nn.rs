//! Minimal MLP building blocks with explicit reverse-mode gradients.
//!
//! All model components are plain fully-connected stacks with LeakyReLU
//! hidden activations, so forward/backward passes are written out by hand
//! against `ndarray` (gemm-backed). Parameters carry their own gradient and
//! AdamW moment buffers; training loops accumulate gradients, apply global
//! norm clipping, and step each parameter.
//!
//! Generic over the float type: training runs in `f32`, numerical
//! verification tests run the same code in `f64`.

use ndarray::{Array, Array1, Array2, Axis, Dimension};
use rand_chacha::ChaCha8Rng;

use crate::rng;

/// Float scalar usable in network math.
pub trait Scalar: ndarray::NdFloat + serde::Serialize + for<'de> serde::Deserialize<'de> {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// AdamW hyperparameters (decoupled weight decay).
#[derive(Debug, Clone, Copy)]
pub struct AdamHp {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamHp {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamHp { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay }
    }
}

/// A tensor parameter with gradient and AdamW moment buffers.
#[derive(Debug, Clone)]
pub struct Param<F, D: Dimension> {
    pub value: Array<F, D>,
    pub grad: Array<F, D>,
    m: Array<F, D>,
    v: Array<F, D>,
}

impl<F: Scalar, D: Dimension> Param<F, D> {
    pub fn new(value: Array<F, D>) -> Self {
        let grad = Array::zeros(value.raw_dim());
        let m = Array::zeros(value.raw_dim());
        let v = Array::zeros(value.raw_dim());
        Param { value, grad, m, v }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }

    pub fn grad_sq_norm(&self) -> f64 {
        self.grad.iter().map(|g| { let g = g.to_f64().unwrap(); g * g }).sum()
    }

    pub fn scale_grad(&mut self, c: f64) {
        let c = F::from(c).unwrap();
        self.grad.mapv_inplace(|g| g * c);
    }

    /// One AdamW step. `t` is the 1-based global step count.
    pub fn adam_step(&mut self, hp: &AdamHp, t: u64) {
        let b1 = F::from(hp.beta1).unwrap();
        let b2 = F::from(hp.beta2).unwrap();
        let one = F::one();
        let bc1 = F::from(1.0 - hp.beta1.powi(t as i32)).unwrap();
        let bc2 = F::from(1.0 - hp.beta2.powi(t as i32)).unwrap();
        let lr = F::from(hp.lr).unwrap();
        let eps = F::from(hp.eps).unwrap();
        let wd = F::from(hp.weight_decay).unwrap();
        ndarray::Zip::from(&mut self.value)
            .and(&self.grad)
            .and(&mut self.m)
            .and(&mut self.v)
            .for_each(|p, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p = *p - lr * (mhat / (vhat.sqrt() + eps) + wd * *p);
            });
    }
}

/// LeakyReLU applied in place.
pub fn leaky_relu<F: Scalar, D: Dimension>(x: &mut Array<F, D>, slope: F) {
    x.mapv_inplace(|v| if v > F::zero() { v } else { slope * v });
}

/// Derivative of LeakyReLU given the pre-activation.
pub fn leaky_relu_deriv<F: Scalar, D: Dimension>(pre: &Array<F, D>, slope: F) -> Array<F, D> {
    pre.mapv(|v| if v > F::zero() { F::one() } else { slope })
}

/// Fully connected layer, weights stored `(out, in)`.
#[derive(Debug, Clone)]
pub struct Linear<F> {
    pub w: Param<F, ndarray::Ix2>,
    pub b: Param<F, ndarray::Ix1>,
}

impl<F: Scalar> Linear<F> {
    /// Uniform `(-1/sqrt(in), 1/sqrt(in))` init for weights and bias.
    pub fn new(inp: usize, out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (inp as f64).sqrt();
        Linear {
            w: Param::new(rng::uniform(rng, (out, inp), bound)),
            b: Param::new(rng::uniform(rng, out, bound)),
        }
    }

    /// `x (B, in) -> (B, out)`
    pub fn forward(&self, x: &Array2<F>) -> Array2<F> {
        x.dot(&self.w.value.t()) + &self.b.value
    }

    /// Accumulates parameter gradients, returns the input gradient.
    pub fn backward(&mut self, x: &Array2<F>, gy: &Array2<F>) -> Array2<F> {
        self.w.grad = &self.w.grad + &gy.t().dot(x);
        self.b.grad = &self.b.grad + &gy.sum_axis(Axis(0));
        gy.dot(&self.w.value)
    }

    /// Input gradient only; parameter gradients untouched.
    pub fn backward_input(&self, gy: &Array2<F>) -> Array2<F> {
        gy.dot(&self.w.value)
    }

    pub fn zero_grad(&mut self) {
        self.w.zero_grad();
        self.b.zero_grad();
    }

    pub fn grad_sq_norm(&self) -> f64 {
        self.w.grad_sq_norm() + self.b.grad_sq_norm()
    }

    pub fn scale_grads(&mut self, c: f64) {
        self.w.scale_grad(c);
        self.b.scale_grad(c);
    }

    pub fn adam_step(&mut self, hp: &AdamHp, t: u64) {
        self.w.adam_step(hp, t);
        self.b.adam_step(hp, t);
    }

    pub fn param_count(&self) -> usize {
        self.w.value.len() + self.b.value.len()
    }
}

/// Activations cached by [`Mlp::forward_cached`] for the backward pass.
pub struct MlpCache<F> {
    /// Input of every linear layer.
    pub inputs: Vec<Array2<F>>,
    /// Pre-activation output of every hidden layer.
    pub preacts: Vec<Array2<F>>,
}

/// Fully connected stack: LeakyReLU between layers, linear output.
#[derive(Debug, Clone)]
pub struct Mlp<F> {
    pub layers: Vec<Linear<F>>,
    pub slope: F,
}

impl<F: Scalar> Mlp<F> {
    pub fn new(dims: &[usize], slope: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "mlp needs at least one layer");
        let layers = dims.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Mlp { layers, slope: F::from(slope).unwrap() }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].w.value.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().w.value.nrows()
    }

    pub fn forward(&self, x: &Array2<F>) -> Array2<F> {
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            leaky_relu(&mut h, self.slope);
            h = layer.forward(&h);
        }
        h
    }

    pub fn forward_cached(&self, x: &Array2<F>) -> (Array2<F>, MlpCache<F>) {
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut preacts = Vec::with_capacity(n - 1);
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(h.clone());
            h = layer.forward(&h);
            if i + 1 < n {
                preacts.push(h.clone());
                leaky_relu(&mut h, self.slope);
            }
        }
        (h, MlpCache { inputs, preacts })
    }

    /// Accumulates parameter gradients, returns the gradient wrt the input.
    pub fn backward(&mut self, cache: &MlpCache<F>, gy: &Array2<F>) -> Array2<F> {
        let n = self.layers.len();
        let mut g = self.layers[n - 1].backward(&cache.inputs[n - 1], gy);
        for i in (0..n - 1).rev() {
            let d = leaky_relu_deriv(&cache.preacts[i], self.slope);
            g = g * &d;
            g = self.layers[i].backward(&cache.inputs[i], &g);
        }
        g
    }

    pub fn zero_grad(&mut self) {
        for l in &mut self.layers {
            l.zero_grad();
        }
    }

    pub fn grad_sq_norm(&self) -> f64 {
        self.layers.iter().map(Linear::grad_sq_norm).sum()
    }

    pub fn scale_grads(&mut self, c: f64) {
        for l in &mut self.layers {
            l.scale_grads(c);
        }
    }

    pub fn adam_step(&mut self, hp: &AdamHp, t: u64) {
        for l in &mut self.layers {
            l.adam_step(hp, t);
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }
}

/// Mean squared error summed over features, averaged over rows, with the
/// matching gradient `2 (pred - target) / B`.
pub fn mse_sum_features<F: Scalar>(pred: &Array2<F>, target: &Array2<F>) -> (F, Array2<F>) {
    let b = F::from(pred.nrows() as f64).unwrap();
    let diff = pred - target;
    let loss = diff.iter().map(|d| *d * *d).fold(F::zero(), |a, v| a + v) / b;
    let grad = diff.mapv(|d| d + d) / b;
    (loss, grad)
}

/// Collects squared gradient norms, applies global-norm clipping via the
/// returned scale (1.0 when under the limit).
pub fn clip_scale(total_sq_norm: f64, max_norm: f64) -> f64 {
    let norm = total_sq_norm.sqrt();
    if norm > max_norm {
        max_norm / norm
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn numeric_grad<G: FnMut(&Array2<f64>) -> f64>(x: &Array2<f64>, mut f: G) -> Array2<f64> {
        let mut g = Array2::zeros(x.raw_dim());
        let h = 1e-6;
        for idx in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.as_slice_mut().unwrap()[idx] += h;
            xm.as_slice_mut().unwrap()[idx] -= h;
            g.as_slice_mut().unwrap()[idx] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn linear_forward_matches_manual() {
        let mut rng = rng::stream(0, 0);
        let mut lin = Linear::<f64>::new(2, 2, &mut rng);
        lin.w.value = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        lin.b.value = ndarray::arr1(&[0.5, -0.5]);
        let x = arr2(&[[1.0, 1.0]]);
        let y = lin.forward(&x);
        assert_eq!(y, arr2(&[[3.5, 6.5]]));
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = rng::stream(42, 0);
        let mlp = Mlp::<f64>::new(&[5, 7, 3], 0.2, &mut rng);
        let x: Array2<f64> = rng::normal(&mut rng, (4, 5), 1.0);
        let coeff: Array2<f64> = rng::normal(&mut rng, (4, 3), 1.0);
        // Loss: sum(coeff * mlp(x)), linear in the output so gy = coeff.
        let loss_at = |net: &Mlp<f64>, x: &Array2<f64>| (net.forward(x) * &coeff).sum();

        let mut net = mlp.clone();
        let (_, cache) = net.forward_cached(&x);
        let gx = net.backward(&cache, &coeff);

        // Input gradient.
        let gx_num = numeric_grad(&x, |xp| loss_at(&mlp, xp));
        for (a, n) in gx.iter().zip(gx_num.iter()) {
            assert!((a - n).abs() <= 1e-6 * (1.0 + n.abs()), "input grad {a} vs {n}");
        }

        // Weight gradient of layer 0.
        let w0 = mlp.layers[0].w.value.clone();
        let gw_num = numeric_grad(&w0, |wp| {
            let mut m = mlp.clone();
            m.layers[0].w.value = wp.clone();
            loss_at(&m, &x)
        });
        for (a, n) in net.layers[0].w.grad.iter().zip(gw_num.iter()) {
            assert!((a - n).abs() <= 1e-6 * (1.0 + n.abs()), "w grad {a} vs {n}");
        }
    }

    #[test]
    fn adam_step_moves_against_gradient() {
        let mut p = Param::new(ndarray::arr1(&[1.0f64, -1.0]));
        p.grad = ndarray::arr1(&[1.0, -1.0]);
        p.adam_step(&AdamHp::new(0.1, 0.0), 1);
        assert!(p.value[0] < 1.0);
        assert!(p.value[1] > -1.0);
    }

    #[test]
    fn clip_scale_behaviour() {
        assert_eq!(clip_scale(4.0, 10.0), 1.0);
        let s = clip_scale(400.0, 10.0);
        assert!((s * 20.0 - 10.0).abs() < 1e-12);
    }
}
