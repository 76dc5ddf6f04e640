//! The two probabilistic building blocks: the binned Poisson likelihood and
//! the relaxed Bernoulli (two-class Gumbel-Softmax) edge sampler.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tnpar::model::{gumbel_sample, poisson_log_pmf, PosteriorZ};

fn main() -> tnpar::Result<()> {
    for rate in [0.1, 1.0, 5.0, 20.0] {
        let mut total = 0.0;
        let mut o = 0;
        while o < 200 {
            total += poisson_log_pmf(o, rate, 1.0)?.exp();
            o += 1;
        }
        println!("lambda*delta = {rate:>4}: pmf mass over 0..200 = {total:.12}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws = 20_000;
    for q in [0.1f64, 0.5, 0.9] {
        let z = (q / (1.0 - q)).ln();
        let posterior = PosteriorZ { values: vec![z], beta: 1.0 };
        for tau in [1.0, 0.1] {
            let mut hard = 0.0;
            let mut soft = 0.0;
            for _ in 0..draws {
                let s = gumbel_sample(&posterior, tau, &mut rng, false)?;
                hard += s.hard[0];
                soft += s.soft[0];
            }
            println!(
                "q = {q}, tau = {tau}: hard mean {:.3}, soft mean {:.3}",
                hard / draws as f64,
                soft / draws as f64
            );
        }
    }
    Ok(())
}
