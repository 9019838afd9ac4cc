//! Bijections between the six free parameters and unconstrained space.
//!
//! Sampling order: `a_rew` (logit), `a_pun` (logit), `k` (scaled logit onto
//! [0, 5]), `beta_f` (identity), `beta_p` (identity), `theta` (log). The
//! fusion weight is fixed during fitting and is not part of the vector.

use crate::types::OrlParameters;

/// Number of parameters estimated by the sampler.
pub const N_FREE_PARAMS: usize = 6;

/// Names of the free parameters in sampling order.
pub const FREE_PARAM_NAMES: [&str; N_FREE_PARAMS] =
    ["a_rew", "a_pun", "k", "beta_f", "beta_p", "theta"];

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// Maps a constrained parameter set (with `omega` supplied separately by
/// the fit config) into unconstrained space.
pub fn unconstrain(p: &OrlParameters) -> [f64; N_FREE_PARAMS] {
    [
        logit(p.a_rew),
        logit(p.a_pun),
        logit(p.k / 5.0),
        p.beta_f,
        p.beta_p,
        p.theta.ln(),
    ]
}

/// Inverse of [`unconstrain`]; `omega` is attached unchanged.
pub fn constrain(z: &[f64], omega: f64) -> OrlParameters {
    OrlParameters {
        a_rew: sigmoid(z[0]),
        a_pun: sigmoid(z[1]),
        k: 5.0 * sigmoid(z[2]),
        beta_f: z[3],
        beta_p: z[4],
        theta: z[5].exp(),
        omega,
    }
}

/// Log absolute determinant of the Jacobian of [`constrain`] at `z`.
/// Identity coordinates contribute nothing; each sigmoid contributes
/// `ln s + ln(1 - s)` (plus the constant `ln 5` for the scaled one, kept
/// for completeness), and the log transform contributes `z` itself.
pub fn log_jacobian(z: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &zi) in z.iter().enumerate().take(3) {
        let s = sigmoid(zi);
        total += s.ln() + (1.0 - s).ln();
        if i == 2 {
            total += 5.0f64.ln();
        }
    }
    total + z[5]
}
