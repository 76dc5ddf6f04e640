//! Encoder / decoder pair of the topological neural Poisson auto-regressive
//! model.
//!
//! For a target node the history is first aggregated per geodesic ring
//! (`[lag][type][distance]`). The encoder maps the current counts plus that
//! aggregate to Bernoulli scores over `A[k][cause][effect]`. A relaxed sample
//! of `A` then gates the aggregate, and the shared decoder turns the gated
//! history plus a one-hot target type into a Poisson intensity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CausalTensor, DistanceMasks};
use crate::ingest::{CountTensor, WindowSample};
use crate::nn::{Activation, DenseNet};

/// Lower clamp applied to probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-6;
/// Added to every decoded intensity.
pub const LAMBDA_FLOOR: f64 = 1e-6;

/// Sizes shared by encoder and decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub type_count: usize,
    pub k_max: usize,
    pub omega: usize,
}

impl ModelDims {
    /// Entries of one aggregated history: `omega * |V| * (K + 1)`.
    pub fn history_len(&self) -> usize {
        self.omega * self.type_count * (self.k_max + 1)
    }

    pub fn encoder_input_len(&self) -> usize {
        self.type_count + self.history_len()
    }

    pub fn decoder_input_len(&self) -> usize {
        self.history_len() + self.type_count
    }

    /// Entries of `A`: `(K + 1) * |V| * |V|`.
    pub fn edge_slots(&self) -> usize {
        (self.k_max + 1) * self.type_count * self.type_count
    }

    #[inline]
    pub fn history_index(&self, lag: usize, v: usize, k: usize) -> usize {
        (lag * self.type_count + v) * (self.k_max + 1) + k
    }

    #[inline]
    pub fn edge_index(&self, k: usize, cause: usize, effect: usize) -> usize {
        (k * self.type_count + cause) * self.type_count + effect
    }
}

/// What the encoder sees for one (node, bin).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderInput {
    pub node: usize,
    /// Counts of every type on `node` in the target bin.
    pub current: Vec<f64>,
    /// `[lag][type][distance]` sums over the ring at each distance.
    pub history: Vec<f64>,
}

impl EncoderInput {
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.current.len() + self.history.len());
        v.extend_from_slice(&self.current);
        v.extend_from_slice(&self.history);
        v
    }
}

pub fn build_encoder_input(
    sample: &WindowSample,
    node: usize,
    masks: &DistanceMasks,
    dims: &ModelDims,
) -> Result<EncoderInput> {
    let n_nodes = masks.node_count();
    let stride = dims.type_count * n_nodes;
    if sample.target.len() != stride || sample.history.len() != dims.omega || node >= n_nodes {
        return Err(Error::shape("window sample does not match masks and model sizes"));
    }
    if sample.history.iter().any(|h| h.len() != stride) {
        return Err(Error::shape("history slice does not match |V| x |N|"));
    }
    if masks.k_max() != dims.k_max {
        return Err(Error::shape(format!(
            "masks cover K = {}, model expects K = {}",
            masks.k_max(),
            dims.k_max
        )));
    }
    let current = (0..dims.type_count)
        .map(|v| f64::from(sample.target[v * n_nodes + node]))
        .collect();
    let mut history = vec![0.0; dims.history_len()];
    for (lag, slice) in sample.history.iter().enumerate() {
        for v in 0..dims.type_count {
            for k in 0..=dims.k_max {
                let sum: u32 = masks.ring(node, k).iter().map(|&m| slice[v * n_nodes + m]).sum();
                history[dims.history_index(lag, v, k)] = f64::from(sum);
            }
        }
    }
    Ok(EncoderInput {
        node,
        current,
        history,
    })
}

/// Same as building a [`WindowSample`] and calling [`build_encoder_input`],
/// without copying whole bins.
pub fn encoder_input_at(
    tensor: &CountTensor,
    t: usize,
    node: usize,
    masks: &DistanceMasks,
    dims: &ModelDims,
) -> EncoderInput {
    let current = (0..dims.type_count).map(|v| f64::from(tensor.get(t, v, node))).collect();
    let mut history = vec![0.0; dims.history_len()];
    for lag in 0..dims.omega.min(t) {
        let bin = t - 1 - lag;
        for v in 0..dims.type_count {
            for k in 0..=dims.k_max {
                let sum: u32 = masks.ring(node, k).iter().map(|&m| tensor.get(bin, v, m)).sum();
                history[dims.history_index(lag, v, k)] = f64::from(sum);
            }
        }
    }
    EncoderInput {
        node,
        current,
        history,
    }
}

/// `sigma_beta(z) = 1 / (1 + exp(-beta z))`.
#[inline]
pub fn sigmoid_beta(z: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (-beta * z).exp())
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Encoder scores for every `A[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorZ {
    pub values: Vec<f64>,
    pub beta: f64,
}

impl PosteriorZ {
    pub fn probability(&self, idx: usize) -> f64 {
        sigmoid_beta(self.values[idx], self.beta)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.values.iter().map(|&z| sigmoid_beta(z, self.beta)).collect()
    }
}

pub fn encode(phi: &DenseNet, input: &EncoderInput, dims: &ModelDims, beta: f64) -> Result<PosteriorZ> {
    if phi.output_dim() != dims.edge_slots() {
        return Err(Error::shape(format!(
            "encoder emits {} scores, model needs {}",
            phi.output_dim(),
            dims.edge_slots()
        )));
    }
    let cache = phi.forward(&input.flatten())?;
    Ok(PosteriorZ {
        values: cache.output().to_vec(),
        beta,
    })
}

/// Standard Gumbel noise for both classes of every entry.
#[derive(Debug, Clone, PartialEq)]
pub struct GumbelNoise {
    pub on: Vec<f64>,
    pub off: Vec<f64>,
}

impl GumbelNoise {
    pub fn sample<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut draw = || {
            // U in (0, 1]; -ln(-ln U) is standard Gumbel
            let u: f64 = 1.0 - rng.random::<f64>();
            -(-u.ln()).ln()
        };
        let mut on = Vec::with_capacity(len);
        let mut off = Vec::with_capacity(len);
        for _ in 0..len {
            on.push(draw());
            off.push(draw());
        }
        Self { on, off }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            on: vec![0.0; len],
            off: vec![0.0; len],
        }
    }
}

/// A relaxed sample of `A`.
///
/// `soft` is the class-1 coordinate of the two-class Gumbel-Softmax and is
/// used as a weight during training. `hard` is its rounding (argmax) and is
/// used as a mask at test time. When training in hard mode the forward pass
/// uses `hard` and gradients are taken through `soft` (straight-through).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledA {
    pub soft: Vec<f64>,
    pub hard: Vec<f64>,
    pub tau: f64,
    pub use_hard: bool,
}

impl SampledA {
    pub fn weights(&self) -> &[f64] {
        if self.use_hard {
            &self.hard
        } else {
            &self.soft
        }
    }
}

#[inline]
fn clamp_prob(q: f64) -> f64 {
    q.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Soft sample for one entry and its derivative with respect to `q`.
#[inline]
pub fn relaxed_bernoulli(q: f64, noise_on: f64, noise_off: f64, tau: f64) -> (f64, f64) {
    let qc = clamp_prob(q);
    let logit = (qc.ln() + noise_on - (1.0 - qc).ln() - noise_off) / tau;
    let soft = logistic(logit);
    let d_q = if q > PROB_EPS && q < 1.0 - PROB_EPS {
        soft * (1.0 - soft) / tau * (1.0 / qc + 1.0 / (1.0 - qc))
    } else {
        0.0
    };
    (soft, d_q)
}

pub fn gumbel_sample_with_noise(posterior: &PosteriorZ, tau: f64, noise: &GumbelNoise, use_hard: bool) -> Result<SampledA> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {tau}")));
    }
    if noise.on.len() != posterior.values.len() || noise.off.len() != posterior.values.len() {
        return Err(Error::shape("gumbel noise does not match the posterior"));
    }
    let soft: Vec<f64> = (0..posterior.values.len())
        .map(|i| relaxed_bernoulli(posterior.probability(i), noise.on[i], noise.off[i], tau).0)
        .collect();
    let hard = soft.iter().map(|&s| if s > 0.5 { 1.0 } else { 0.0 }).collect();
    Ok(SampledA {
        soft,
        hard,
        tau,
        use_hard,
    })
}

pub fn gumbel_sample<R: Rng + ?Sized>(posterior: &PosteriorZ, tau: f64, rng: &mut R, use_hard: bool) -> Result<SampledA> {
    let noise = GumbelNoise::sample(posterior.values.len(), rng);
    gumbel_sample_with_noise(posterior, tau, &noise, use_hard)
}

/// Scale history entry `[lag][i][k]` by `a[k][i][target_type]`.
pub fn causal_filter(history: &[f64], a: &[f64], target_type: usize, dims: &ModelDims) -> Result<Vec<f64>> {
    if history.len() != dims.history_len() || a.len() != dims.edge_slots() || target_type >= dims.type_count {
        return Err(Error::shape("causal filter inputs do not match model sizes"));
    }
    let mut out = history.to_vec();
    for lag in 0..dims.omega {
        for i in 0..dims.type_count {
            for k in 0..=dims.k_max {
                out[dims.history_index(lag, i, k)] *= a[dims.edge_index(k, i, target_type)];
            }
        }
    }
    Ok(out)
}

/// Decoder input: gated history followed by a one-hot target type.
pub fn decoder_input(filtered: &[f64], target_type: usize, dims: &ModelDims) -> Vec<f64> {
    let mut x = Vec::with_capacity(dims.decoder_input_len());
    x.extend_from_slice(filtered);
    x.extend((0..dims.type_count).map(|v| if v == target_type { 1.0 } else { 0.0 }));
    x
}

/// Intensity `softplus(raw) + LAMBDA_FLOOR`.
pub fn decode(theta: &DenseNet, filtered: &[f64], target_type: usize, dims: &ModelDims) -> Result<f64> {
    if filtered.len() != dims.history_len() || target_type >= dims.type_count {
        return Err(Error::shape("decoder input does not match model sizes"));
    }
    let cache = theta.forward(&decoder_input(filtered, target_type, dims))?;
    Ok(softplus(cache.output()[0]) + LAMBDA_FLOOR)
}

pub fn ln_factorial(o: u64) -> f64 {
    if o < 1024 {
        (2..=o).map(|k| (k as f64).ln()).sum()
    } else {
        // Stirling series, plenty accurate past 1000
        let n = o as f64;
        n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + 1.0 / (12.0 * n) - 1.0 / (360.0 * n.powi(3))
    }
}

/// `o ln(lambda delta) - lambda delta - ln(o!)`.
pub fn poisson_log_pmf(o: i64, lambda: f64, delta: f64) -> Result<f64> {
    if o < 0 {
        return Err(Error::invalid(format!("occurrence count {o} is negative")));
    }
    let rate = lambda * delta;
    if !(rate > 0.0) {
        return Err(Error::invalid(format!("lambda * delta = {rate} must be positive")));
    }
    Ok(o as f64 * rate.ln() - rate - ln_factorial(o as u64))
}

/// Hyperparameters of the relaxed posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    pub beta: f64,
    pub tau: f64,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self { beta: 1.0, tau: 0.5 }
    }
}

/// Encoder and decoder networks with their shared sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnparModel {
    pub dims: ModelDims,
    pub relaxation: RelaxationConfig,
    pub encoder: DenseNet,
    pub decoder: DenseNet,
}

impl TnparModel {
    pub fn new<R: Rng + ?Sized>(
        dims: ModelDims,
        hidden: &[usize],
        relaxation: RelaxationConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut enc_dims = vec![dims.encoder_input_len()];
        enc_dims.extend_from_slice(hidden);
        enc_dims.push(dims.edge_slots());
        let mut dec_dims = vec![dims.decoder_input_len()];
        dec_dims.extend_from_slice(hidden);
        dec_dims.push(1);
        Ok(Self {
            dims,
            relaxation,
            encoder: DenseNet::new(&enc_dims, Activation::Relu, Activation::Identity, rng)?,
            decoder: DenseNet::new(&dec_dims, Activation::Relu, Activation::Identity, rng)?,
        })
    }

    pub fn encode(&self, input: &EncoderInput) -> Result<PosteriorZ> {
        encode(&self.encoder, input, &self.dims, self.relaxation.beta)
    }

    /// Intensity for `target_type` given a fixed (typically hard) `A`.
    pub fn intensity(&self, input: &EncoderInput, a: &[f64], target_type: usize) -> Result<f64> {
        let filtered = causal_filter(&input.history, a, target_type, &self.dims)?;
        decode(&self.decoder, &filtered, target_type, &self.dims)
    }

    /// Posterior probabilities as a causal tensor.
    pub fn posterior_tensor(&self, input: &EncoderInput) -> Result<CausalTensor> {
        let z = self.encode(input)?;
        CausalTensor::from_flat(self.dims.k_max, self.dims.type_count, z.probabilities())
    }
}
