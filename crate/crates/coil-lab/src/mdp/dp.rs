//! Exact dynamic programming: occupancy measures, values, advantages.

use super::{check_policy_shape, LayeredMdp, PolicyView};
use crate::error::Result;

/// State-occupancy measure of a policy.
#[derive(Debug, Clone)]
pub struct OccupancyProfile {
    /// `per_step[t][local]`: probability of being at the layer-local state at
    /// step `t`. Each inner vector sums to 1 up to input rounding.
    pub per_step: Vec<Vec<f64>>,
    /// Time-averaged occupancy over global state indices. Because layers are
    /// disjoint, `averaged[s]` equals `per_step[layer_of(s)][local(s)] / H`
    /// exactly (same floating-point operation, not a re-summation).
    pub averaged: Vec<f64>,
}

/// Exact forward pass for the state-occupancy measure of `pi`.
pub fn occupancy<P: PolicyView + ?Sized>(mdp: &LayeredMdp, pi: &P) -> Result<OccupancyProfile> {
    check_policy_shape(mdp, pi, "occupancy")?;
    let h = mdp.horizon();
    let a = mdp.num_actions();
    let mut per_step: Vec<Vec<f64>> = Vec::with_capacity(h);
    per_step.push(mdp.initial_distribution().to_vec());
    let mut dist = vec![0.0; a];
    for t in 0..h - 1 {
        let here = per_step[t].clone();
        let mut next = vec![0.0; mdp.layer_range(t + 1).len()];
        for (local, &mass) in here.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            pi.fill_action_dist(mdp.global_index(t, local), &mut dist);
            for (action, &p_a) in dist.iter().enumerate() {
                if p_a == 0.0 {
                    continue;
                }
                let row = mdp.transition_row(t, local, action);
                let w = mass * p_a;
                for (succ, &p_s) in row.iter().enumerate() {
                    next[succ] += w * p_s;
                }
            }
        }
        per_step.push(next);
    }

    let h_f = h as f64;
    let mut averaged = vec![0.0; mdp.num_states()];
    for t in 0..h {
        for (local, &mass) in per_step[t].iter().enumerate() {
            averaged[mdp.global_index(t, local)] = mass / h_f;
        }
    }
    Ok(OccupancyProfile { per_step, averaged })
}

/// Value functions of a policy, from one exact backward pass.
#[derive(Debug, Clone)]
pub struct ValueProfile {
    /// `v[s]`: expected cost-to-go from the global state `s` under the policy.
    pub v: Vec<f64>,
    /// `q[s][a]`: immediate cost plus expected cost-to-go after taking `a`.
    /// States on the last layer have `q[s][a] = cost(s, a)`.
    pub q: Vec<Vec<f64>>,
    /// `adv[s][a] = q[s][a] - v[s]`.
    pub adv: Vec<Vec<f64>>,
    /// Expected total cost of an episode, `J = E[rho] . v`.
    pub j: f64,
}

/// Exact backward pass for values, action values, and advantages.
pub fn evaluate<P: PolicyView + ?Sized>(mdp: &LayeredMdp, pi: &P) -> Result<ValueProfile> {
    check_policy_shape(mdp, pi, "evaluate")?;
    let h = mdp.horizon();
    let a = mdp.num_actions();
    let s_total = mdp.num_states();
    let mut v = vec![0.0; s_total];
    let mut q = vec![vec![0.0; a]; s_total];
    let mut dist = vec![0.0; a];

    for t in (0..h).rev() {
        for s in mdp.layer_range(t) {
            let local = s - mdp.layer_range(t).start;
            for action in 0..a {
                let mut value = mdp.cost(s, action);
                if t + 1 < h {
                    let row = mdp.transition_row(t, local, action);
                    for (succ, &p_s) in row.iter().enumerate() {
                        value += p_s * v[mdp.global_index(t + 1, succ)];
                    }
                }
                q[s][action] = value;
            }
            pi.fill_action_dist(s, &mut dist);
            v[s] = crate::numeric::dot(&dist, &q[s]);
        }
    }

    let adv: Vec<Vec<f64>> = q
        .iter()
        .enumerate()
        .map(|(s, row)| row.iter().map(|&qa| qa - v[s]).collect())
        .collect();
    let j = crate::numeric::dot(mdp.initial_distribution(), &v[mdp.layer_range(0)]);
    Ok(ValueProfile { v, q, adv, j })
}

/// Largest absolute advantage of the policy, `max_{s,a} |A(s, a)|`.
///
/// For an expert policy this is the recoverability constant: the worst-case
/// price of a single deviation, and the natural scale for disagreement-based
/// feedback.
pub fn recoverability<P: PolicyView + ?Sized>(mdp: &LayeredMdp, pi: &P) -> Result<f64> {
    let values = evaluate(mdp, pi)?;
    Ok(values
        .adv
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::tests::two_layer_spec;
    use crate::mdp::{DetPolicy, TabularPolicy};
    use crate::numeric::dot;
    use crate::synth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn occupancy_of_the_two_layer_chain() {
        let mdp = two_layer_spec().build().unwrap();
        let pi = DetPolicy::new(vec![0, 0, 0]);
        let occ = occupancy(&mdp, &pi).unwrap();
        assert_eq!(occ.per_step[0], vec![1.0]);
        assert_eq!(occ.per_step[1], vec![0.75, 0.25]);
        assert_eq!(occ.averaged, vec![0.5, 0.375, 0.125]);
    }

    #[test]
    fn evaluate_matches_hand_computation() {
        let mdp = two_layer_spec().build().unwrap();
        let pi = DetPolicy::new(vec![0, 0, 0]);
        let values = evaluate(&mdp, &pi).unwrap();
        // Terminal action values equal raw costs.
        assert_eq!(values.q[1], vec![0.0, 2.0]);
        assert_eq!(values.q[2], vec![5.0, -1.0]);
        // Q(start, 0) = 0 + 0.75*0 + 0.25*5.
        assert_eq!(values.q[0][0], 1.25);
        // Q(start, 1) = 1 + 0.25*0 + 0.75*5.
        assert_eq!(values.q[0][1], 4.75);
        assert_eq!(values.j, 1.25);
        assert_eq!(values.adv[0], vec![0.0, 3.5]);
    }

    #[test]
    fn policy_value_equals_horizon_scaled_average_occupancy_cost() {
        // J(pi) = H * E_{s ~ averaged} E_{a ~ pi} [cost(s, a)] on random instances.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let mdp = synth::random_mdp(&mut rng, 1..=5, 1..=4, 1..=3, -2.0, 3.0);
            let pi = synth::random_stochastic_policy(&mut rng, &mdp);
            let occ = occupancy(&mdp, &pi).unwrap();
            let values = evaluate(&mdp, &pi).unwrap();
            let mut dist = vec![0.0; mdp.num_actions()];
            let mut avg_cost = 0.0;
            for s in 0..mdp.num_states() {
                pi.fill_action_dist(s, &mut dist);
                avg_cost += occ.averaged[s] * dot(&dist, mdp.cost_row(s));
            }
            let lhs = mdp.horizon() as f64 * avg_cost;
            assert!((lhs - values.j).abs() <= 1e-9, "J mismatch: {lhs} vs {}", values.j);
        }
    }

    #[test]
    fn occupancy_layers_are_normalized_and_averaged_consistently() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..60 {
            let mdp = synth::random_mdp(&mut rng, 1..=6, 1..=5, 1..=3, 0.0, 1.0);
            let pi = synth::random_stochastic_policy(&mut rng, &mdp);
            let occ = occupancy(&mdp, &pi).unwrap();
            for step in &occ.per_step {
                let sum: f64 = step.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-9, "step mass {sum}");
            }
            let h = mdp.horizon() as f64;
            for t in 0..mdp.horizon() {
                for (local, &mass) in occ.per_step[t].iter().enumerate() {
                    // Bitwise equality: both sides are the same division.
                    assert_eq!(occ.averaged[mdp.global_index(t, local)], mass / h);
                }
            }
        }
    }

    #[test]
    fn performance_difference_decomposes_through_expert_advantages() {
        // J(pi) - J(ref) = H * E_{s ~ d_pi} E_{a ~ pi} [adv_ref(s, a)].
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..60 {
            let mdp = synth::random_mdp(&mut rng, 2..=5, 1..=4, 2..=3, -1.0, 2.0);
            let pi = synth::random_stochastic_policy(&mut rng, &mdp);
            let reference = synth::random_det_policy(&mut rng, mdp.num_states(), mdp.num_actions());
            let adv = evaluate(&mdp, &reference).unwrap();
            let occ = occupancy(&mdp, &pi).unwrap();
            let mut dist = vec![0.0; mdp.num_actions()];
            let mut mean_adv = 0.0;
            for s in 0..mdp.num_states() {
                pi.fill_action_dist(s, &mut dist);
                mean_adv += occ.averaged[s] * dot(&dist, &adv.adv[s]);
            }
            let rhs = mdp.horizon() as f64 * mean_adv;
            let lhs = evaluate(&mdp, &pi).unwrap().j - adv.j;
            assert!((lhs - rhs).abs() <= 1e-9, "decomposition gap: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn recoverability_of_the_two_layer_chain() {
        let mdp = two_layer_spec().build().unwrap();
        // Expert takes action 0 at start and t0, action 1 at t1.
        let expert = DetPolicy::new(vec![0, 0, 1]);
        // V(t1) = -1, so Q(start, .) = (0 + 0.75*0 + 0.25*-1, 1 + 0.25*0 + 0.75*-1),
        // advantages at start are (0, 0.5); at t0 (0, 2); at t1 (6, 0).
        assert_eq!(recoverability(&mdp, &expert).unwrap(), 6.0);
    }

    #[test]
    fn policy_shape_mismatch_is_an_error() {
        let mdp = two_layer_spec().build().unwrap();
        let short = DetPolicy::new(vec![0, 0]);
        assert!(occupancy(&mdp, &short).is_err());
        assert!(evaluate(&mdp, &short).is_err());
        let wide = TabularPolicy::new(vec![vec![1.0]; 3]).unwrap();
        assert!(evaluate(&mdp, &wide).is_err());
    }
}
