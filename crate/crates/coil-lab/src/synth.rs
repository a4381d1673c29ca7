//! Random instance generators for tests, check suites, and demo runs.
//!
//! All generators draw from a caller-supplied RNG, so a fixed seed pins the
//! produced instance exactly.

use crate::classes::{MixedWeight, PolicyClass};
use crate::gadgets::BimatrixGame;
use crate::mdp::{DetPolicy, LayeredMdp, MdpSpec, TabularPolicy};
use rand::Rng;
use std::ops::RangeInclusive;

fn positive_row<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    // Exponential draws normalized to the simplex: every entry is strictly
    // positive, so no transition is structurally unreachable.
    let raw: Vec<f64> = (0..len).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Random layered MDP with horizon, layer width, and action count drawn from
/// the given ranges and costs uniform in `[cost_lo, cost_hi]`.
pub fn random_mdp<R: Rng + ?Sized>(
    rng: &mut R,
    horizon: RangeInclusive<usize>,
    width: RangeInclusive<usize>,
    actions: RangeInclusive<usize>,
    cost_lo: f64,
    cost_hi: f64,
) -> LayeredMdp {
    let h = rng.gen_range(horizon);
    let a = rng.gen_range(actions);
    let sizes: Vec<usize> = (0..h).map(|_| rng.gen_range(width.clone())).collect();
    let layers: Vec<Vec<String>> = sizes
        .iter()
        .enumerate()
        .map(|(t, &n)| (0..n).map(|i| format!("s{t}_{i}")).collect())
        .collect();
    let rho = positive_row(rng, sizes[0]);
    let p: Vec<Vec<Vec<Vec<f64>>>> = (0..h.saturating_sub(1))
        .map(|t| {
            (0..sizes[t])
                .map(|_| (0..a).map(|_| positive_row(rng, sizes[t + 1])).collect())
                .collect()
        })
        .collect();
    let states: usize = sizes.iter().sum();
    let cost: Vec<Vec<f64>> = (0..states)
        .map(|_| (0..a).map(|_| rng.gen_range(cost_lo..=cost_hi)).collect())
        .collect();
    MdpSpec { h, layers, a, rho, p, cost }
        .build()
        .expect("generated description satisfies every invariant")
}

/// Random fully stochastic policy for the given MDP.
pub fn random_stochastic_policy<R: Rng + ?Sized>(rng: &mut R, mdp: &LayeredMdp) -> TabularPolicy {
    let rows: Vec<Vec<f64>> = (0..mdp.num_states())
        .map(|_| positive_row(rng, mdp.num_actions()))
        .collect();
    TabularPolicy::new(rows).expect("normalized rows are valid")
}

/// Random deterministic policy over `states` states and `actions` actions.
pub fn random_det_policy<R: Rng + ?Sized>(rng: &mut R, states: usize, actions: usize) -> DetPolicy {
    DetPolicy::new((0..states).map(|_| rng.gen_range(0..actions)).collect())
}

/// Random class of `b` deterministic policies (duplicates possible).
pub fn random_class<R: Rng + ?Sized>(rng: &mut R, b: usize, states: usize, actions: usize) -> PolicyClass {
    let members = (0..b).map(|_| random_det_policy(rng, states, actions)).collect();
    PolicyClass::new(members, actions).expect("generated members share the shape")
}

/// Random class of `b` pairwise distinct deterministic policies.
///
/// Requires `actions^states >= b`; the rejection loop would not terminate
/// otherwise.
pub fn distinct_class<R: Rng + ?Sized>(rng: &mut R, b: usize, states: usize, actions: usize) -> PolicyClass {
    let mut seen = std::collections::HashSet::new();
    let mut members = Vec::with_capacity(b);
    while members.len() < b {
        let candidate = random_det_policy(rng, states, actions);
        if seen.insert(candidate.actions().to_vec()) {
            members.push(candidate);
        }
    }
    PolicyClass::new(members, actions).expect("generated members share the shape")
}

/// Random point of the `b`-simplex (normalized exponential draws).
pub fn random_weight<R: Rng + ?Sized>(rng: &mut R, b: usize) -> MixedWeight {
    MixedWeight::new(positive_row(rng, b)).expect("normalized rows are valid weights")
}

/// Random bimatrix game with payoff entries uniform in `[0, 1)`.
pub fn random_game<R: Rng + ?Sized>(rng: &mut R, m: usize) -> BimatrixGame {
    let draw = |rng: &mut R| -> Vec<Vec<f64>> {
        (0..m).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect()
    };
    let v = draw(rng);
    let w = draw(rng);
    BimatrixGame::new(v, w).expect("entries are normalized by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_mdp_respects_requested_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..40 {
            let mdp = random_mdp(&mut rng, 2..=4, 1..=3, 2..=5, -1.0, 2.0);
            assert!((2..=4).contains(&mdp.horizon()));
            assert!((2..=5).contains(&mdp.num_actions()));
            assert!(mdp.layer_sizes().iter().all(|&n| (1..=3).contains(&n)));
            let (lo, hi) = mdp.cost_range();
            assert!(lo >= -1.0 && hi <= 2.0);
        }
    }

    #[test]
    fn distinct_class_members_are_pairwise_different() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let class = distinct_class(&mut rng, 8, 3, 2);
        for i in 0..8 {
            for j in (i + 1)..8 {
                assert_ne!(class.member(i).actions(), class.member(j).actions());
            }
        }
    }

    #[test]
    fn generation_is_reproducible_from_the_seed() {
        let make = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_mdp(&mut rng, 2..=4, 1..=3, 2..=3, 0.0, 1.0).to_spec().to_json_string()
        };
        assert_eq!(make(9), make(9));
        assert_ne!(make(9), make(10));
    }
}
