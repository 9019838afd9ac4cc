//! Convergence diagnostics: split potential-scale-reduction and effective
//! sample size, computed per parameter from the per-chain draws.

/// Splits each chain in half, dropping the middle element of odd-length
/// chains, and returns the sub-chains.
fn split_chains(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut halves = Vec::with_capacity(chains.len() * 2);
    for chain in chains {
        let n = chain.len();
        let half = n / 2;
        halves.push(&chain[..half]);
        halves.push(&chain[n - half..]);
    }
    halves
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Between/within variance decomposition over split chains.
fn variance_components(halves: &[&[f64]]) -> Option<(f64, f64, f64)> {
    let n = halves.iter().map(|h| h.len()).min()?;
    if n < 4 || halves.len() < 2 {
        return None;
    }
    let w = mean(&halves.iter().map(|h| sample_variance(&h[..n])).collect::<Vec<_>>());
    let means: Vec<f64> = halves.iter().map(|h| mean(&h[..n])).collect();
    let b = n as f64 * sample_variance(&means);
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    Some((w, b, var_plus))
}

/// Split potential-scale-reduction statistic. Returns 1.0 for constant
/// chains (nothing to mix) and `f64::INFINITY` when the within-chain
/// variance is zero but chains disagree.
pub fn split_r_hat(chains: &[Vec<f64>]) -> f64 {
    let halves = split_chains(chains);
    let Some((w, b, var_plus)) = variance_components(&halves) else {
        return f64::NAN;
    };
    if w <= 0.0 {
        return if b <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    (var_plus / w).sqrt()
}

/// Lag-`t` autocovariance (biased, divide-by-n convention).
fn autocovariance(values: &[f64], lag: usize) -> f64 {
    let n = values.len();
    let m = mean(values);
    (0..n - lag)
        .map(|i| (values[i] - m) * (values[i + lag] - m))
        .sum::<f64>()
        / n as f64
}

/// Multi-chain effective sample size with Geyer's initial monotone positive
/// sequence truncation. Capped at the total draw count.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let halves = split_chains(chains);
    let Some((w, _b, var_plus)) = variance_components(&halves) else {
        return f64::NAN;
    };
    let n = halves.iter().map(|h| h.len()).min().unwrap();
    let m = halves.len();
    let total = (m * n) as f64;
    if var_plus <= 0.0 {
        return total;
    }

    // rho_t = 1 - (W - mean_j autocov_{j,t}) / var_plus, combined in Geyer
    // pairs until a pair sum goes non-positive.
    let rho = |lag: usize| -> f64 {
        let mean_cov = mean(
            &halves
                .iter()
                .map(|h| autocovariance(&h[..n], lag))
                .collect::<Vec<_>>(),
        );
        1.0 - (w - mean_cov) / var_plus
    };

    let mut tau = 1.0; // 1 + 2 * sum of retained rho_t
    let mut previous_pair = f64::INFINITY;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        // Enforce monotone decrease of the pair sums.
        let pair = pair.min(previous_pair);
        previous_pair = pair;
        tau += 2.0 * pair;
        lag += 2;
    }
    (total / tau).min(total)
}
