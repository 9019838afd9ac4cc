//! Prints per-subject R-hat spread for the recovery fit settings.

use cogfuse::inference::{sample_posterior, simulate_subject, FitSettings};
use cogfuse::env::IgtPayoffSchedule;
use cogfuse::types::{OrlParameters, PriorVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let warmup: usize = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let draws: usize = args.get(3).and_then(|a| a.parse().ok()).unwrap_or(2000);

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let schedule = IgtPayoffSchedule::default();
    for i in 0..n {
        let truth = OrlParameters {
            a_rew: rng.random_range(0.05..0.95),
            a_pun: rng.random_range(0.05..0.95),
            k: rng.random_range(0.2..4.5),
            beta_f: rng.random_range(-2.5..2.5),
            beta_p: rng.random_range(-2.5..2.5),
            theta: rng.random_range(0.5..2.5),
            omega: 0.0,
        };
        let data = simulate_subject(&truth, 100, &schedule, 42 + i as u64).unwrap();
        let settings = FitSettings {
            chains: 4,
            warmup,
            draws,
            seed: 0x1000_0000 + 42 + i as u64,
            ..FitSettings::default()
        };
        let post = sample_posterior(&data, &PriorVector::zeros(4), &settings).unwrap();
        let mut parts: Vec<String> = post
            .diagnostics
            .r_hat
            .iter()
            .map(|(k, v)| format!("{k}={v:.3}"))
            .collect();
        parts.push(format!("ok={}", post.converged));
        println!("subject {i}: {}", parts.join(" "));
        println!(
            "  truth: a_rew={:.2} a_pun={:.2} k={:.2} bf={:+.2} bp={:+.2} th={:.2}",
            truth.a_rew, truth.a_pun, truth.k, truth.beta_f, truth.beta_p, truth.theta
        );
    }
}
