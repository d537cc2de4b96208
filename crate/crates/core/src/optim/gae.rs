//! Generalized advantage estimation.

use crate::error::{Error, Result};

/// Advantages for one rollout. `terminal[t]` marks that the episode ended
/// after step `t`; `bootstrap` is the value of the state following the last
/// step and is ignored when that step is terminal.
///
/// `delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t` and
/// `A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    terminal: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    let n = rewards.len();
    if values.len() != n || terminal.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: values.len().min(terminal.len()),
        });
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let keep = if terminal[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 == n { bootstrap } else { values[t + 1] };
        let delta = rewards[t] + gamma * next_value * keep - values[t];
        next_adv = delta + gamma * lambda * keep * next_adv;
        adv[t] = next_adv;
    }
    Ok(adv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_zero_is_td_error() {
        let a = compute_gae(&[1.0, 2.0], &[0.5, 0.25], &[false, false], 4.0, 0.9, 0.0).unwrap();
        assert!((a[0] - (1.0 + 0.9 * 0.25 - 0.5)).abs() < 1e-12);
        assert!((a[1] - (2.0 + 0.9 * 4.0 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn terminal_cuts_bootstrap() {
        let a = compute_gae(&[1.0, 2.0], &[0.0, 0.0], &[true, true], 100.0, 0.9, 0.9).unwrap();
        assert_eq!(a, vec![1.0, 2.0]);
    }
}
