//! Analytic gradients of the full regularized loss against central finite
//! differences, with the Gumbel noise frozen so the loss is deterministic.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnpar::graph::geodesic_masks;
use tnpar::ingest::discretize;
use tnpar::model::{GumbelNoise, TnparModel};
use tnpar::nn::relative_error;
use tnpar::sim::{simulate, SimConfig};
use tnpar::train::{batch_loss, datum_rng, LossWeights, TrainConfig, TrainingData};

fn main() -> tnpar::Result<()> {
    let sim = SimConfig {
        node_count: 4,
        type_count: 3,
        mu_range: [0.05, 0.08],
        alpha_range: [0.3, 0.3],
        horizon: 200.0,
        max_events: None,
        causal_edge_density: 0.5,
        seed: 4,
        ..SimConfig::default()
    };
    let data = simulate(&sim)?;
    let tensor = discretize(&data.events, 3, 4, sim.delta, sim.horizon)?;
    let training = TrainingData::new(tensor, geodesic_masks(&data.topology, 1))?;
    let config = TrainConfig {
        hidden: vec![16, 16],
        lambda_s: 0.05,
        lambda_c: 0.5,
        ..TrainConfig::default()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut model = TnparModel::new(training.dims(config.omega), &config.hidden, config.relaxation(), &mut rng)?;
    // move biases off zero so no ReLU sits exactly on its kink
    for p in model.encoder.params_mut().iter_mut().chain(model.decoder.params_mut()) {
        *p += rng.random_range(-0.1..0.1);
    }
    let batch: Vec<usize> = (0..32).map(|i| i * 7 % training.len()).collect();
    let noise: Vec<GumbelNoise> = (0..batch.len())
        .map(|p| GumbelNoise::sample(model.dims.edge_slots(), &mut datum_rng(9, 0, p as u64)))
        .collect();
    let weights = LossWeights::from(&config);
    let grads = batch_loss(&model, &training, &batch, &noise, weights, true)?;
    println!("total loss {:.6}", grads.loss.total);

    let n_enc = model.encoder.param_count();
    let n_all = n_enc + model.decoder.param_count();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for idx in sample(&mut rng, n_all, 100) {
        let eval = |delta: f64| -> tnpar::Result<f64> {
            let mut m = model.clone();
            if idx < n_enc {
                m.encoder.params_mut()[idx] += delta;
            } else {
                m.decoder.params_mut()[idx - n_enc] += delta;
            }
            Ok(batch_loss(&m, &training, &batch, &noise, weights, false)?.loss.total)
        };
        let numeric = (eval(h)? - eval(-h)?) / (2.0 * h);
        let analytic = if idx < n_enc { grads.encoder[idx] } else { grads.decoder[idx - n_enc] };
        worst = worst.max(relative_error(analytic, numeric, 1e-6));
    }
    println!("100 coordinates, worst relative error {worst:.2e}");
    Ok(())
}
