//! Generalized advantage estimation over `horizon × n_envs` rollouts.

/// Advantages and returns for rewards laid out `t * n_envs + e`.
/// `dones[i]` marks the last step of an episode; `last_values` bootstraps
/// the step after the horizon.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_values: &[f64],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = last_values.len();
    assert!(n > 0 && rewards.len() % n == 0);
    assert_eq!(rewards.len(), values.len());
    assert_eq!(rewards.len(), dones.len());
    let horizon = rewards.len() / n;
    let mut adv = vec![0.0; rewards.len()];
    for e in 0..n {
        let mut next_value = last_values[e];
        let mut running = 0.0;
        for t in (0..horizon).rev() {
            let i = t * n + e;
            let live = if dones[i] { 0.0 } else { 1.0 };
            let delta = rewards[i] + gamma * next_value * live - values[i];
            running = delta + gamma * lambda * live * running;
            adv[i] = running;
            next_value = values[i];
        }
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

/// Zero mean, unit standard deviation.
pub fn normalize(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt().max(1e-8);
    for x in v.iter_mut() {
        *x = (*x - mean) / sd;
    }
}
