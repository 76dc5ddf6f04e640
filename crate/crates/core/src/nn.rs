//! Small dense networks with hand-written reverse-mode gradients and Adam.
//!
//! Parameters of a [`DenseNet`] live in one flat vector (per layer: the
//! row-major `out x in` weight matrix followed by the bias), so optimizers
//! and checkpoints can treat them as a single array.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    #[inline]
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layer_dims: Vec<usize>,
    hidden: Activation,
    head: Activation,
    params: Vec<f64>,
}

/// Intermediate values kept by [`DenseNet::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    // layer inputs; the last entry is the network output
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }
}

impl DenseNet {
    /// All-zero parameters.
    pub fn zeros(layer_dims: &[usize], hidden: Activation, head: Activation) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::shape(format!(
                "a dense net needs at least two positive layer sizes, got {layer_dims:?}"
            )));
        }
        let count = layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            hidden,
            head,
            params: vec![0.0; count],
        })
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn new<R: Rng + ?Sized>(
        layer_dims: &[usize],
        hidden: Activation,
        head: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_dims, hidden, head)?;
        let mut offset = 0;
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    /// Rebuild from a flat parameter vector.
    pub fn from_params(
        layer_dims: &[usize],
        hidden: Activation,
        head: Activation,
        params: Vec<f64>,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_dims, hidden, head)?;
        if params.len() != net.params.len() {
            return Err(Error::shape(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn head_activation(&self) -> Activation {
        self.head
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 2 == self.layer_dims.len() {
            self.head
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache> {
        if input.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "network input has {} entries, expected {}",
                input.len(),
                self.input_dim()
            )));
        }
        let layers = self.layer_dims.len() - 1;
        let mut activations = Vec::with_capacity(layers + 1);
        let mut pre_activations = Vec::with_capacity(layers);
        activations.push(input.to_vec());
        let mut offset = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let bias = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let x = &activations[l];
            let z: Vec<f64> = weights
                .chunks_exact(fan_in)
                .zip(bias)
                .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
                .collect();
            let act = self.activation_for(l);
            let y = z.iter().map(|&zi| act.apply(zi)).collect();
            pre_activations.push(z);
            activations.push(y);
            offset += fan_in * fan_out + fan_out;
        }
        Ok(ForwardCache {
            activations,
            pre_activations,
        })
    }

    /// Accumulates parameter gradients into `param_grad` and returns the
    /// gradient with respect to the input.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64], param_grad: &mut [f64]) -> Result<Vec<f64>> {
        let layers = self.layer_dims.len() - 1;
        let cache_fits = cache.pre_activations.len() == layers
            && cache
                .activations
                .iter()
                .zip(&self.layer_dims)
                .all(|(a, &d)| a.len() == d);
        if !cache_fits {
            return Err(Error::shape("forward cache does not belong to this network"));
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::shape(format!(
                "output gradient has {} entries, expected {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        if param_grad.len() != self.params.len() {
            return Err(Error::shape("parameter gradient buffer has the wrong length"));
        }
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for w in self.layer_dims.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        let mut grad = output_grad.to_vec();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let act = self.activation_for(l);
            let z = &cache.pre_activations[l];
            let y = &cache.activations[l + 1];
            let x = &cache.activations[l];
            let dz: Vec<f64> = grad
                .iter()
                .zip(z.iter().zip(y))
                .map(|(g, (&zi, &yi))| g * act.derivative(zi, yi))
                .collect();
            let base = offsets[l];
            let (w_grad, b_grad) = param_grad[base..base + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            for (o, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (wg, xi) in w_grad[o * fan_in..(o + 1) * fan_in].iter_mut().zip(x) {
                    *wg += d * xi;
                }
                b_grad[o] += d;
            }
            let weights = &self.params[base..base + fan_in * fan_out];
            let mut dx = vec![0.0; fan_in];
            for (o, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (dxi, w) in dx.iter_mut().zip(&weights[o * fan_in..(o + 1) * fan_in]) {
                    *dxi += d * w;
                }
            }
            grad = dx;
        }
        Ok(grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::shape(format!(
                "adam state holds {} moments, got {} parameters and {} gradients",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn numeric_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
