//! Constrained variational objective and the optimization loop.
//!
//! Per (node, bin) datum the loss is the negative Poisson log-likelihood of
//! the counts of every type under one relaxed sample of `A`, plus the KL
//! divergence of the amortized posterior from an independent Bernoulli prior.
//! Batch means of the posterior feed an l1 sparsity term and the
//! trace-exponential acyclicity term:
//!
//! `total = -(reconstruction - kl) + lambda_c * h(G(mean q)) + lambda_s * sum(mean q)`

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{acyclicity_h_with_grad, aggregate_g, geodesic_masks, CausalTensor, DistanceMasks, TopologyNetwork};
use crate::ingest::{merge_nodes, CountTensor};
use crate::model::{
    causal_filter, decoder_input, encoder_input_at, poisson_log_pmf, relaxed_bernoulli, sigmoid_beta, softplus,
    GumbelNoise, ModelDims, RelaxationConfig, TnparModel, LAMBDA_FLOOR, PROB_EPS,
};
use crate::nn::{AdamState, ForwardCache};

/// Ablation switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Topology-aware model with both regularizers.
    Full,
    /// Only the target node's own history is used.
    NoTopology,
    /// All nodes are summed into one sequence.
    Merged,
    /// Regularization weights forced to zero.
    NoConstraints,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "no_topology" => Ok(Mode::NoTopology),
            "merged" => Ok(Mode::Merged),
            "no_constraints" => Ok(Mode::NoConstraints),
            other => Err(Error::invalid(format!(
                "unknown mode `{other}` (expected full, no_topology, merged or no_constraints)"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::NoTopology => "no_topology",
            Mode::Merged => "merged",
            Mode::NoConstraints => "no_constraints",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda_c: f64,
    pub lambda_s: f64,
    pub prior_p: f64,
    pub mode: Mode,
    pub seed: u64,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub beta: f64,
    pub tau: f64,
    pub omega: usize,
    pub k_max: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 256,
            lambda_c: 1e-10,
            lambda_s: 1e-4,
            prior_p: 0.5,
            mode: Mode::Full,
            seed: 0,
            learning_rate: 1e-3,
            hidden: vec![64, 64],
            beta: 1.0,
            tau: 0.5,
            omega: 3,
            k_max: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                field: field.to_owned(),
                message,
            })
        };
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1".into());
        }
        if !(self.lambda_c >= 0.0) {
            return bad("lambda_c", format!("{} must be nonnegative", self.lambda_c));
        }
        if !(self.lambda_s >= 0.0) {
            return bad("lambda_s", format!("{} must be nonnegative", self.lambda_s));
        }
        if !(self.prior_p > 0.0 && self.prior_p < 1.0) {
            return bad("prior_p", format!("{} must lie in (0, 1)", self.prior_p));
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate", "must be positive".into());
        }
        if !(self.beta > 0.0) {
            return bad("beta", "must be positive".into());
        }
        if !(self.tau > 0.0) {
            return bad("tau", "must be positive".into());
        }
        if self.omega == 0 {
            return bad("omega", "must be at least 1".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden", "layer widths must be positive".into());
        }
        Ok(())
    }

    pub fn relaxation(&self) -> RelaxationConfig {
        RelaxationConfig {
            beta: self.beta,
            tau: self.tau,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub elbo: f64,
    pub reconstruction: f64,
    pub kl: f64,
    pub acyclicity_term: f64,
    pub sparsity_term: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn is_finite(&self) -> bool {
        [self.elbo, self.reconstruction, self.kl, self.acyclicity_term, self.sparsity_term, self.total]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// `KL(Bernoulli(q) || Bernoulli(p))` with both arguments clamped away from 0 and 1.
pub fn kl_bernoulli(q: f64, p: f64) -> f64 {
    let q = q.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    (q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln()).max(0.0)
}

fn kl_bernoulli_dq(q: f64, p: f64) -> f64 {
    if q <= PROB_EPS || q >= 1.0 - PROB_EPS {
        return 0.0;
    }
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    (q / (1.0 - q)).ln() - (p / (1.0 - p)).ln()
}

/// Count tensor plus distance masks, after any ablation routing.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub tensor: CountTensor,
    pub masks: DistanceMasks,
}

impl TrainingData {
    pub fn new(tensor: CountTensor, masks: DistanceMasks) -> Result<Self> {
        if tensor.node_count() != masks.node_count() {
            return Err(Error::shape(format!(
                "count tensor has {} nodes, masks cover {}",
                tensor.node_count(),
                masks.node_count()
            )));
        }
        Ok(Self { tensor, masks })
    }

    pub fn len(&self) -> usize {
        self.tensor.bin_count() * self.tensor.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (bin, node) of the `index`-th datum.
    pub fn datum(&self, index: usize) -> (usize, usize) {
        (index / self.tensor.node_count(), index % self.tensor.node_count())
    }

    pub fn dims(&self, omega: usize) -> ModelDims {
        ModelDims {
            type_count: self.tensor.type_count(),
            k_max: self.masks.k_max(),
            omega,
        }
    }
}

/// Route data and weights through an ablation mode.
pub fn apply_mode(config: &TrainConfig, masks: &DistanceMasks, tensor: &CountTensor) -> Result<(TrainConfig, TrainingData)> {
    let mut config = config.clone();
    let data = match config.mode {
        Mode::Full => TrainingData::new(tensor.clone(), masks.clone())?,
        Mode::NoTopology => TrainingData::new(tensor.clone(), masks.truncated(0))?,
        Mode::Merged => {
            let single = geodesic_masks(&TopologyNetwork::isolated(1)?, 0);
            TrainingData::new(merge_nodes(tensor), single)?
        }
        Mode::NoConstraints => {
            config.lambda_c = 0.0;
            config.lambda_s = 0.0;
            TrainingData::new(tensor.clone(), masks.clone())?
        }
    };
    config.k_max = data.masks.k_max();
    Ok((config, data))
}

/// Loss of one batch with gradients for both networks.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    pub loss: LossBreakdown,
    pub encoder: Vec<f64>,
    pub decoder: Vec<f64>,
}

struct DatumPass {
    cache: ForwardCache,
    q: Vec<f64>,
    // d total / d q through the reconstruction path only (already scaled)
    recon_dq: Vec<f64>,
    recon: f64,
    kl: f64,
}

/// Regularization weights and prior used by [`batch_loss`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_c: f64,
    pub lambda_s: f64,
    pub prior_p: f64,
}

impl From<&TrainConfig> for LossWeights {
    fn from(c: &TrainConfig) -> Self {
        Self {
            lambda_c: c.lambda_c,
            lambda_s: c.lambda_s,
            prior_p: c.prior_p,
        }
    }
}

// fixed so that gradient sums do not depend on the thread pool size
const REDUCTION_CHUNKS: usize = 8;

/// Loss (and gradients when `with_grad`) for `batch` under fixed Gumbel noise.
pub fn batch_loss(
    model: &TnparModel,
    data: &TrainingData,
    batch: &[usize],
    noise: &[GumbelNoise],
    weights: LossWeights,
    with_grad: bool,
) -> Result<BatchGradient> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if noise.len() != batch.len() {
        return Err(Error::shape("one noise draw per datum is required"));
    }
    let dims = model.dims;
    if data.masks.k_max() != dims.k_max || data.tensor.type_count() != dims.type_count {
        return Err(Error::shape("training data does not match the model"));
    }
    let scale = 1.0 / batch.len() as f64;
    let chunk = batch.len().div_ceil(REDUCTION_CHUNKS);
    let delta = data.tensor.delta();
    let beta = model.relaxation.beta;
    let tau = model.relaxation.tau;
    let slots = dims.edge_slots();

    // forward through encoder and decoder, decoder gradients per chunk
    let first: Vec<Result<(Vec<DatumPass>, Vec<f64>)>> = batch
        .par_chunks(chunk)
        .zip(noise.par_chunks(chunk))
        .map(|(items, noises)| {
            let mut dec_grad = if with_grad { vec![0.0; model.decoder.param_count()] } else { Vec::new() };
            let mut passes = Vec::with_capacity(items.len());
            for (&index, eps) in items.iter().zip(noises) {
                let (t, node) = data.datum(index);
                let input = encoder_input_at(&data.tensor, t, node, &data.masks, &dims);
                let cache = model.encoder.forward(&input.flatten())?;
                let q: Vec<f64> = cache.output().iter().map(|&z| sigmoid_beta(z, beta)).collect();
                let mut soft = vec![0.0; slots];
                let mut dsoft_dq = vec![0.0; slots];
                for i in 0..slots {
                    let (s, d) = relaxed_bernoulli(q[i], eps.on[i], eps.off[i], tau);
                    soft[i] = s;
                    dsoft_dq[i] = d;
                }
                let mut recon = 0.0;
                let mut recon_dq = vec![0.0; slots];
                for j in 0..dims.type_count {
                    let filtered = causal_filter(&input.history, &soft, j, &dims)?;
                    let dec_cache = model.decoder.forward(&decoder_input(&filtered, j, &dims))?;
                    let raw = dec_cache.output()[0];
                    let lambda = softplus(raw) + LAMBDA_FLOOR;
                    let o = data.tensor.get(t, j, node);
                    recon += poisson_log_pmf(i64::from(o), lambda, delta)?;
                    if with_grad {
                        let dlogp = f64::from(o) / lambda - delta;
                        let draw = -scale * dlogp / (1.0 + (-raw).exp());
                        let dx = model.decoder.backward(&dec_cache, &[draw], &mut dec_grad)?;
                        for lag in 0..dims.omega {
                            for i in 0..dims.type_count {
                                for k in 0..=dims.k_max {
                                    let h = dims.history_index(lag, i, k);
                                    if input.history[h] != 0.0 {
                                        let e = dims.edge_index(k, i, j);
                                        recon_dq[e] += dx[h] * input.history[h] * dsoft_dq[e];
                                    }
                                }
                            }
                        }
                    }
                }
                let kl = q.iter().map(|&qi| kl_bernoulli(qi, weights.prior_p)).sum();
                passes.push(DatumPass {
                    cache,
                    q,
                    recon_dq,
                    recon,
                    kl,
                });
            }
            Ok((passes, dec_grad))
        })
        .collect();

    let mut chunks = Vec::with_capacity(first.len());
    let mut decoder_grad = vec![0.0; if with_grad { model.decoder.param_count() } else { 0 }];
    for r in first {
        let (passes, g) = r?;
        for (acc, x) in decoder_grad.iter_mut().zip(&g) {
            *acc += x;
        }
        chunks.push(passes);
    }

    let mut mean_q = vec![0.0; slots];
    let mut recon = 0.0;
    let mut kl = 0.0;
    for p in chunks.iter().flatten() {
        for (m, q) in mean_q.iter_mut().zip(&p.q) {
            *m += q * scale;
        }
        recon += p.recon * scale;
        kl += p.kl * scale;
    }
    let expected = CausalTensor::from_flat(dims.k_max, dims.type_count, mean_q.iter().map(|q| q.clamp(0.0, 1.0)).collect())?;
    let (acyclicity, h_grad) = acyclicity_h_with_grad(&aggregate_g(&expected));
    let sparsity: f64 = mean_q.iter().sum();
    let elbo = recon - kl;
    let loss = LossBreakdown {
        elbo,
        reconstruction: recon,
        kl,
        acyclicity_term: acyclicity,
        sparsity_term: sparsity,
        total: -elbo + weights.lambda_c * acyclicity + weights.lambda_s * sparsity,
    };
    if !loss.is_finite() {
        return Err(Error::Diverged {
            epoch: 0,
            last_finite: None,
            detail: format!("non-finite loss {loss:?}"),
        });
    }
    if !with_grad {
        return Ok(BatchGradient {
            loss,
            encoder: Vec::new(),
            decoder: Vec::new(),
        });
    }

    // shared part of d total / d q for every datum
    let mut shared = vec![0.0; slots];
    for k in 0..=dims.k_max {
        for i in 0..dims.type_count {
            for j in 0..dims.type_count {
                let e = dims.edge_index(k, i, j);
                let acyc = if i != j { weights.lambda_c * h_grad.get(i, j) } else { 0.0 };
                shared[e] = scale * (weights.lambda_s + acyc);
            }
        }
    }
    let partial: Vec<Result<Vec<f64>>> = chunks
        .par_iter()
        .map(|passes| {
            let mut g = vec![0.0; model.encoder.param_count()];
            for p in passes {
                let dz: Vec<f64> = (0..slots)
                    .map(|e| {
                        let q = p.q[e];
                        let dq = p.recon_dq[e] + scale * kl_bernoulli_dq(q, weights.prior_p) + shared[e];
                        dq * beta * q * (1.0 - q)
                    })
                    .collect();
                model.encoder.backward(&p.cache, &dz, &mut g)?;
            }
            Ok(g)
        })
        .collect();
    let mut encoder_grad = vec![0.0; model.encoder.param_count()];
    for g in partial {
        for (acc, x) in encoder_grad.iter_mut().zip(&g?) {
            *acc += x;
        }
    }
    Ok(BatchGradient {
        loss,
        encoder: encoder_grad,
        decoder: decoder_grad,
    })
}

/// Deterministic per-datum stream derived from the run seed.
pub fn datum_rng(seed: u64, step: u64, position: u64) -> ChaCha8Rng {
    let mut x = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [step, position] {
        x = x.wrapping_add(v.wrapping_mul(0xBF58_476D_1CE4_E5B9));
        x ^= x >> 31;
        x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 29;
    }
    ChaCha8Rng::seed_from_u64(x)
}

/// One reparameterized sample of the batch loss.
pub fn elbo_batch(
    model: &TnparModel,
    data: &TrainingData,
    batch: &[usize],
    config: &TrainConfig,
    step: u64,
) -> Result<LossBreakdown> {
    let noise = batch_noise(model, config.seed, step, batch.len());
    Ok(batch_loss(model, data, batch, &noise, config.into(), false)?.loss)
}

fn batch_noise(model: &TnparModel, seed: u64, step: u64, len: usize) -> Vec<GumbelNoise> {
    (0..len)
        .map(|p| GumbelNoise::sample(model.dims.edge_slots(), &mut datum_rng(seed, step, p as u64)))
        .collect()
}

/// Mean posterior probability over every datum.
pub fn mean_posterior(model: &TnparModel, data: &TrainingData) -> Result<CausalTensor> {
    let dims = model.dims;
    let beta = model.relaxation.beta;
    let n = data.len();
    let chunk = n.div_ceil(REDUCTION_CHUNKS).max(1);
    let indices: Vec<usize> = (0..n).collect();
    let partial: Vec<Result<Vec<f64>>> = indices
        .par_chunks(chunk)
        .map(|items| {
            let mut sum = vec![0.0; dims.edge_slots()];
            for &index in items {
                let (t, node) = data.datum(index);
                let input = encoder_input_at(&data.tensor, t, node, &data.masks, &dims);
                let cache = model.encoder.forward(&input.flatten())?;
                for (s, &z) in sum.iter_mut().zip(cache.output()) {
                    *s += sigmoid_beta(z, beta);
                }
            }
            Ok(sum)
        })
        .collect();
    let mut total = vec![0.0; dims.edge_slots()];
    for p in partial {
        for (t, s) in total.iter_mut().zip(&p?) {
            *t += s;
        }
    }
    let mean = total.iter().map(|s| (s / n as f64).clamp(0.0, 1.0)).collect();
    CausalTensor::from_flat(dims.k_max, dims.type_count, mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: LossBreakdown,
}

/// Everything needed to resume or inspect a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub model: TnparModel,
    pub encoder_optimizer: AdamState,
    pub decoder_optimizer: AdamState,
    pub config: TrainConfig,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub posterior: CausalTensor,
    pub state: ModelState,
    pub log: Vec<EpochLog>,
}

/// Fit encoder and decoder jointly with Adam on shuffled mini-batches.
/// `config` must already have gone through [`apply_mode`].
pub fn train(data: &TrainingData, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training data is empty"));
    }
    let dims = data.dims(config.omega);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = TnparModel::new(dims, &config.hidden, config.relaxation(), &mut rng)?;
    let mut enc_opt = AdamState::new(model.encoder.param_count(), config.learning_rate);
    let mut dec_opt = AdamState::new(model.decoder.param_count(), config.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    let mut step = 0u64;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = LossBreakdown::default();
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let noise = batch_noise(&model, config.seed, step, batch.len());
            let grads = batch_loss(&model, data, batch, &noise, config.into(), true).map_err(|e| match e {
                Error::Diverged { detail, .. } => Error::Diverged {
                    epoch,
                    last_finite: epoch.checked_sub(1),
                    detail,
                },
                other => other,
            })?;
            enc_opt.step(model.encoder.params_mut(), &grads.encoder)?;
            dec_opt.step(model.decoder.params_mut(), &grads.decoder)?;
            let l = grads.loss;
            sum.elbo += l.elbo;
            sum.reconstruction += l.reconstruction;
            sum.kl += l.kl;
            sum.acyclicity_term += l.acyclicity_term;
            sum.sparsity_term += l.sparsity_term;
            sum.total += l.total;
            batches += 1;
            step += 1;
        }
        let b = batches as f64;
        let mean = LossBreakdown {
            elbo: sum.elbo / b,
            reconstruction: sum.reconstruction / b,
            kl: sum.kl / b,
            acyclicity_term: sum.acyclicity_term / b,
            sparsity_term: sum.sparsity_term / b,
            total: sum.total / b,
        };
        log.push(EpochLog { epoch, loss: mean });
    }
    let posterior = mean_posterior(&model, data)?;
    Ok(TrainOutcome {
        posterior,
        state: ModelState {
            model,
            encoder_optimizer: enc_opt,
            decoder_optimizer: dec_opt,
            config: config.clone(),
        },
        log,
    })
}
