//! Desk probe for recovery quality/timing at various settings.

use cogfuse::inference::{run_recovery, FitSettings, RecoveryConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let warmup: usize = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let draws: usize = args.get(3).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let seed: u64 = args.get(4).and_then(|a| a.parse().ok()).unwrap_or(42);

    let config = RecoveryConfig {
        n_subjects: n,
        trial_count: 100,
        seed,
        fit: FitSettings {
            chains: 4,
            warmup,
            draws,
            ..FitSettings::default()
        },
        ..RecoveryConfig::default()
    };
    let start = Instant::now();
    let report = run_recovery(&config).unwrap();
    let elapsed = start.elapsed();
    println!(
        "n={n} warmup={warmup} draws={draws} seed={seed} elapsed={:.1}s excluded={}",
        elapsed.as_secs_f64(),
        report.excluded_nonconverged
    );
    for row in &report.rows {
        match row.pearson_r {
            Some(r) => println!("  {:<7} r = {r:+.3}", row.parameter),
            None => println!("  {:<7} r = n/a", row.parameter),
        }
    }
}
