//! Online linear optimizers over the mixture simplex.
//!
//! Two families live here. The entropy family (Hedge and its optimistic
//! variant) manipulates the weight vector directly and needs no oracle. The
//! perturbed-leader family only ever talks to the cost-sensitive
//! classification oracle: it averages `T` one-hot answers to Gaussian-
//! perturbed followed-the-leader problems, which makes it implementable for
//! classes too large to enumerate, and sparsifies the played mixture to
//! multiples of `1/T`.

use crate::classes::{csc_oracle, verify_separator, MixedWeight, PolicyClass, SeparatorSet};
use crate::error::{Error, Result};
use crate::imitation::{sample_dataset, CscExample, Dataset, ExpertFeedback};
use crate::mdp::LayeredMdp;
use crate::numeric::derived_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Exponential-weights step on the cumulative loss vector.
///
/// `u[h]` is proportional to `exp(-eta * cum[h])`; the minimum is shifted out
/// of the exponent first, so overflow cannot occur for any finite input.
/// A zero history vector yields the uniform mixture.
pub fn hedge_step(cumulative: &[f64], eta: f64) -> Result<MixedWeight> {
    optimistic_ftrl_entropy_step(cumulative, None, eta)
}

/// Optimistic entropy-regularized FTRL step: exponential weights on the
/// cumulative loss plus a hint for the not-yet-seen round. A `None` (or
/// all-zero) hint reduces to [`hedge_step`] exactly.
pub fn optimistic_ftrl_entropy_step(
    cumulative: &[f64],
    hint: Option<&[f64]>,
    eta: f64,
) -> Result<MixedWeight> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParam(format!("learning rate must be positive, got {eta}")));
    }
    if cumulative.is_empty() {
        return Err(Error::InvalidParam("loss vector is empty".into()));
    }
    if let Some(hint) = hint {
        if hint.len() != cumulative.len() {
            return Err(Error::DimensionMismatch(format!(
                "hint has {} entries, cumulative loss has {}",
                hint.len(),
                cumulative.len()
            )));
        }
    }
    let z: Vec<f64> = cumulative
        .iter()
        .enumerate()
        .map(|(h, &g)| eta * (g + hint.map_or(0.0, |v| v[h])))
        .collect();
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParam("loss vector contains non-finite entries".into()));
    }
    let shift = z.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = z.iter().map(|&v| (-(v - shift)).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(MixedWeight::from_normalized(w.into_iter().map(|v| v / total).collect()))
}

/// One Gaussian perturbation: an independent `N(0, 1)` cost per separator
/// state and action.
#[derive(Debug, Clone)]
pub struct PerturbationDraw {
    /// `per_state[x][a]`, indexed by separator position, not global state.
    pub per_state: Vec<Vec<f64>>,
}

impl PerturbationDraw {
    pub fn sample<R: rand::Rng + ?Sized>(rng: &mut R, separator_len: usize, actions: usize) -> Self {
        let per_state = (0..separator_len)
            .map(|_| (0..actions).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        Self { per_state }
    }

    /// Total perturbation score of each class member: `q[h] = sum_x l_x(h(x))`.
    pub fn score(&self, class: &PolicyClass, separator: &SeparatorSet) -> Vec<f64> {
        (0..class.size())
            .map(|h| {
                separator
                    .states()
                    .iter()
                    .zip(&self.per_state)
                    .map(|(&x, row)| row[class.member(h).action(x)])
                    .sum()
            })
            .collect()
    }

    /// Renders the draw as oracle examples with costs scaled by `scale`.
    pub fn to_examples(&self, separator: &SeparatorSet, scale: f64) -> Vec<CscExample> {
        separator
            .states()
            .iter()
            .zip(&self.per_state)
            .map(|(&x, row)| CscExample { state: x, costs: row.iter().map(|&v| scale * v).collect() })
            .collect()
    }
}

/// Parameters of the sparsified perturbed-leader update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MftplParams {
    /// Learning rate; enters only through the perturbation scale `K / eta`.
    pub eta: f64,
    /// Number of perturbed oracle calls averaged into the played mixture.
    pub t: usize,
    /// Per-round sample budget the rate was tuned for.
    pub k: usize,
}

/// Parameters of the extragradient variant, plus the horizon precondition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MftplEgParams {
    pub eta: f64,
    pub t: usize,
    pub k: usize,
    /// Whether the round budget satisfies the schedule's lower bound
    /// `N >= mu * H * A * sqrt(X^3 * ln B)`. Advisory: the formulas are still
    /// returned when it fails.
    pub horizon_ok: bool,
}

/// Played mixture plus the exact oracle-call count that produced it.
#[derive(Debug, Clone)]
pub struct MftplOutcome {
    pub weight: MixedWeight,
    pub oracle_calls: u64,
}

fn check_perturbed_inputs(eta: f64, t: usize, k: usize) -> Result<()> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParam(format!("learning rate must be positive, got {eta}")));
    }
    if t == 0 {
        return Err(Error::InvalidParam("sparsification parameter must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParam("sample budget must be at least 1".into()));
    }
    Ok(())
}

/// Shared core of [`mftpl`] and [`mc_ftpl_reference`]: average of `t` one-hot
/// answers to independently perturbed leader problems.
fn perturbed_leader_average(
    datasets: &[&Dataset],
    class: &PolicyClass,
    separator: &SeparatorSet,
    eta: f64,
    t: usize,
    k: usize,
    seed: u64,
) -> Result<MixedWeight> {
    verify_separator(class, separator)?;
    check_perturbed_inputs(eta, t, k)?;
    let base: Vec<&CscExample> = datasets.iter().flat_map(|d| d.iter()).collect();
    let scale = k as f64 / eta;
    let actions = class.num_actions();

    // The t perturbed problems are independent; each gets its own derived
    // seed so the result does not depend on the parallel schedule.
    let indices: Vec<usize> = (0..t)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, 0x70_67, j as u64));
            let draw = PerturbationDraw::sample(&mut rng, separator.len(), actions);
            let z = draw.to_examples(separator, scale);
            csc_oracle(base.iter().copied().chain(z.iter()), class)
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut counts = vec![0u64; class.size()];
    for idx in indices {
        counts[idx] += 1;
    }
    let t_f = t as f64;
    MixedWeight::new(counts.into_iter().map(|c| c as f64 / t_f).collect())
}

/// Sparsified perturbed follow-the-leader over the accumulated datasets.
///
/// Each of the `t` oracle calls sees the full data union plus one fresh
/// perturbation set: for every separator state, a cost row of `(k / eta)`
/// times standard normal draws. The played mixture is the average of the
/// one-hot answers, so entries are multiples of `1/t` and exactly `t` oracle
/// calls are made.
pub fn mftpl(
    datasets: &[&Dataset],
    class: &PolicyClass,
    separator: &SeparatorSet,
    eta: f64,
    t: usize,
    k: usize,
    seed: u64,
) -> Result<MftplOutcome> {
    let weight = perturbed_leader_average(datasets, class, separator, eta, t, k, seed)?;
    Ok(MftplOutcome { weight, oracle_calls: t as u64 })
}

/// Monte-Carlo reference for the mixture the sparsified update concentrates
/// around. The exact target is the gradient of the Gaussian smoothing of the
/// leader objective, which has no closed form; by the smoothing identity it
/// equals the expectation of the perturbed one-hot answer, so an average of
/// `draws` independent answers (same sampling law as [`mftpl`]) converges to
/// it at rate `1/sqrt(draws)`.
pub fn mc_ftpl_reference(
    datasets: &[&Dataset],
    class: &PolicyClass,
    separator: &SeparatorSet,
    eta: f64,
    k: usize,
    draws: usize,
    seed: u64,
) -> Result<MixedWeight> {
    perturbed_leader_average(datasets, class, separator, eta, draws, k, seed)
}

fn check_schedule_inputs(n: usize, s: usize, a: usize, b: usize, x: usize, mu: f64) -> Result<()> {
    if n == 0 || s == 0 || a == 0 || x == 0 {
        return Err(Error::InvalidParam("schedule inputs must be positive".into()));
    }
    if b < 2 {
        return Err(Error::InvalidParam(
            "schedules need at least two policies (a single-member class has \
             zero entropy; pick any fixed learning rate instead)"
                .into(),
        ));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParam(format!("recoverability scale must be positive, got {mu}")));
    }
    Ok(())
}

fn clamp_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParam(format!("confidence level must be positive, got {delta}")));
    }
    Ok(delta.min(1.0))
}

/// Tuned exponential-weights rate over `n` rounds: `eta = sqrt(ln B / (2 N))`.
pub fn hedge_default_eta(n: usize, b: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParam("schedule inputs must be positive".into()));
    }
    if b < 2 {
        return Err(Error::InvalidParam(
            "schedules need at least two policies (a single-member class has \
             zero entropy; pick any fixed learning rate instead)"
                .into(),
        ));
    }
    Ok(((b as f64).ln() / (2.0 * n as f64)).sqrt())
}

/// Rate schedule for the sparsified update over `n` rounds:
/// `eta = (ln B / X)^(1/4) / (mu * sqrt(N A))`,
/// `T = ceil(N ln(2 N S / delta) / sqrt(X^3 ln B))`, `K = 1`.
pub fn mftpl_default_params(
    n: usize,
    s: usize,
    a: usize,
    b: usize,
    x: usize,
    mu: f64,
    delta: f64,
) -> Result<MftplParams> {
    check_schedule_inputs(n, s, a, b, x, mu)?;
    let delta = clamp_delta(delta)?;
    let (n_f, s_f, a_f, b_f, x_f) = (n as f64, s as f64, a as f64, b as f64, x as f64);
    let eta = (b_f.ln() / x_f).powf(0.25) / (mu * (n_f * a_f).sqrt());
    let t_raw = n_f * (2.0 * n_f * s_f / delta).ln() / (x_f.powi(3) * b_f.ln()).sqrt();
    Ok(MftplParams { eta, t: t_raw.ceil() as usize, k: 1 })
}

/// Rate schedule for the extragradient variant over `n` rounds:
/// `eta = 1 / (5 mu H A X)`,
/// `T = ceil(N^2 ln(8 N S / delta) / (mu H A X^3 ln B))`,
/// `K = ceil(N ln(8 N B / delta) / (H^2 A sqrt(X^3 ln B)))`.
///
/// The schedule's analysis assumes `N >= mu H A sqrt(X^3 ln B)`; below that
/// the formulas are still returned with `horizon_ok = false`.
#[allow(clippy::too_many_arguments)] // one argument per published schedule input
pub fn mftpl_eg_default_params(
    n: usize,
    s: usize,
    a: usize,
    b: usize,
    x: usize,
    mu: f64,
    h: usize,
    delta: f64,
) -> Result<MftplEgParams> {
    check_schedule_inputs(n, s, a, b, x, mu)?;
    if h == 0 {
        return Err(Error::InvalidParam("horizon must be positive".into()));
    }
    let delta = clamp_delta(delta)?;
    let (n_f, s_f, a_f, b_f, x_f, h_f) = (n as f64, s as f64, a as f64, b as f64, x as f64, h as f64);
    let eta = 1.0 / (5.0 * mu * h_f * a_f * x_f);
    let t_raw = n_f * n_f * (8.0 * n_f * s_f / delta).ln() / (mu * h_f * a_f * x_f.powi(3) * b_f.ln());
    let k_raw = n_f * (8.0 * n_f * b_f / delta).ln() / (h_f * h_f * a_f * (x_f.powi(3) * b_f.ln()).sqrt());
    let horizon_ok = n_f >= mu * h_f * a_f * (x_f.powi(3) * b_f.ln()).sqrt();
    Ok(MftplEgParams { eta, t: t_raw.ceil() as usize, k: k_raw.ceil() as usize, horizon_ok })
}

/// One extragradient round: provisional mixture, look-ahead dataset, final
/// mixture.
#[derive(Debug, Clone)]
pub struct EgRound {
    /// Provisional mixture computed from history alone.
    pub provisional: MixedWeight,
    /// Look-ahead dataset sampled under the provisional mixture.
    pub extra: Dataset,
    /// Played mixture, computed from history plus the look-ahead dataset.
    pub weight: MixedWeight,
    /// Exactly `2 t`: the provisional and final updates each make `t` calls.
    pub oracle_calls: u64,
    /// Expert annotations spent on the look-ahead dataset (`k`).
    pub annotations: u64,
}

/// Runs one round of the extragradient update: a provisional mixture from
/// history, `k` fresh annotated samples rolled under it, and the final
/// mixture from history plus those samples.
#[allow(clippy::too_many_arguments)]
pub fn mftpl_eg_round(
    datasets: &[&Dataset],
    mdp: &LayeredMdp,
    feedback: &ExpertFeedback,
    class: &PolicyClass,
    separator: &SeparatorSet,
    eta: f64,
    t: usize,
    k: usize,
    seed: u64,
) -> Result<EgRound> {
    let provisional = mftpl(datasets, class, separator, eta, t, k, derived_seed(seed, 0xE6_01, 0))?;
    let roll = class.mixture(&provisional.weight)?;
    let extra = sample_dataset(mdp, feedback, &roll, k, derived_seed(seed, 0xE6_02, 0))?;
    let mut with_extra: Vec<&Dataset> = datasets.to_vec();
    with_extra.push(&extra);
    let fin = mftpl(&with_extra, class, separator, eta, t, k, derived_seed(seed, 0xE6_03, 0))?;
    Ok(EgRound {
        provisional: provisional.weight,
        extra,
        weight: fin.weight,
        oracle_calls: provisional.oracle_calls + fin.oracle_calls,
        annotations: k as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{greedy_separator, PolicyClass};
    use crate::imitation::{linear_loss_of, theta_exact, theta_under, FeedbackKind};
    use crate::mdp::DetPolicy;
    use crate::synth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hedge_on_empty_history_is_uniform() {
        let u = hedge_step(&[0.0, 0.0, 0.0], 0.5).unwrap();
        for h in 0..3 {
            assert!((u.get(h) - 1.0 / 3.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn hedge_closed_form_on_two_arms() {
        // G = (1, 0), eta = ln 2: weights proportional to (1/2, 1).
        let u = hedge_step(&[1.0, 0.0], std::f64::consts::LN_2).unwrap();
        assert!((u.get(0) - 1.0 / 3.0).abs() <= 1e-12);
        assert!((u.get(1) - 2.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn hedge_is_shift_invariant_and_rejects_bad_rates() {
        let g = [0.3, -1.2, 4.0, 0.0];
        let u = hedge_step(&g, 0.7).unwrap();
        let shifted: Vec<f64> = g.iter().map(|v| v + 123.456).collect();
        let v = hedge_step(&shifted, 0.7).unwrap();
        for h in 0..4 {
            assert!((u.get(h) - v.get(h)).abs() <= 1e-12);
        }
        assert!(hedge_step(&g, 0.0).is_err());
        assert!(hedge_step(&g, -1.0).is_err());
        assert!(hedge_step(&[], 1.0).is_err());
        assert!(hedge_step(&[f64::INFINITY, 0.0], 1.0).is_err());
    }

    #[test]
    fn hedge_survives_extreme_loss_scales() {
        let u = hedge_step(&[1e6, 0.0], 1.0).unwrap();
        assert_eq!(u.get(1), 1.0);
        let v = hedge_step(&[-1e6, -1e6 + 1.0], 1.0).unwrap();
        assert!(v.get(0) > 0.7);
    }

    #[test]
    fn optimistic_step_with_zero_hint_equals_hedge() {
        let g = [0.5, 1.5, -0.25];
        let hint = [0.0; 3];
        let a = hedge_step(&g, 0.9).unwrap();
        let b = optimistic_ftrl_entropy_step(&g, Some(&hint), 0.9).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn optimistic_closed_form_hint_acts_like_observed_loss() {
        let u = optimistic_ftrl_entropy_step(&[0.0, 0.0], Some(&[1.0, 0.0]), std::f64::consts::LN_2)
            .unwrap();
        assert!((u.get(0) - 1.0 / 3.0).abs() <= 1e-12);
        assert!((u.get(1) - 2.0 / 3.0).abs() <= 1e-12);
        assert!(optimistic_ftrl_entropy_step(&[0.0, 0.0], Some(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn perfect_hints_keep_per_round_regret_at_the_comparator() {
        // Scripted 3-arm sequence whose overall best arm (index 2) is never a
        // per-round minimizer. With the true loss as hint and a sharp rate,
        // the played mixture tracks the per-round leader, so each round's
        // linear regret against the realized comparator stays nonpositive up
        // to exponentially small leakage.
        let losses: Vec<[f64; 3]> =
            (0..40).map(|n| if n % 2 == 0 { [0.0, 2.0, 0.9] } else { [2.0, 0.0, 1.0] }).collect();
        let eta = 250.0;
        let mut cum = [0.0f64; 3];
        let mut plays = Vec::new();
        for g in &losses {
            let u = optimistic_ftrl_entropy_step(&cum, Some(g), eta).unwrap();
            plays.push(u);
            for (c, v) in cum.iter_mut().zip(g) {
                *c += v;
            }
        }
        let comparator = crate::numeric::argmin(&cum).unwrap();
        assert_eq!(comparator, 2);
        for (g, u) in losses.iter().zip(&plays) {
            let regret = crate::numeric::dot(g, u.as_slice()) - g[comparator];
            assert!(regret <= 1e-9, "per-round regret {regret}");
        }

        // The hint can only help: tilting by the true loss lowers the
        // round's expected loss against the hint-free play, every round.
        let mut cum = [0.0f64; 3];
        for g in &losses {
            let with_hint = optimistic_ftrl_entropy_step(&cum, Some(g), 0.8).unwrap();
            let without = hedge_step(&cum, 0.8).unwrap();
            assert!(
                crate::numeric::dot(g, with_hint.as_slice())
                    <= crate::numeric::dot(g, without.as_slice()) + 1e-12
            );
            for (c, v) in cum.iter_mut().zip(g) {
                *c += v;
            }
        }
    }

    #[test]
    fn hedge_meets_the_classical_regret_bound_on_scripted_adversaries() {
        // 20 scripted sequences with losses in [-1, 1]; for the tuned rate
        // the linear regret stays within 1.2 * sqrt(2 N ln B).
        let n = 400;
        let b = 5;
        let eta = hedge_default_eta(n, b).unwrap();
        let bound = 1.2 * (2.0 * n as f64 * (b as f64).ln()).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for script in 0..20 {
            let losses: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..b)
                        .map(|h| match script % 4 {
                            // Alternating punisher of the current favorite.
                            0 => if (i + h) % b == 0 { 1.0 } else { 0.0 },
                            // Random signs.
                            1 => if rand::Rng::gen::<bool>(&mut rng) { 1.0 } else { -1.0 },
                            // Drifting favorite.
                            2 => ((i * (h + 1)) % 7) as f64 / 3.5 - 1.0,
                            // Uniform noise.
                            _ => rand::Rng::gen_range(&mut rng, -1.0..1.0),
                        })
                        .collect()
                })
                .collect();
            let mut cum = vec![0.0f64; b];
            let mut played = 0.0;
            for g in &losses {
                let u = hedge_step(&cum, eta).unwrap();
                played += crate::numeric::dot(g, u.as_slice());
                for (c, v) in cum.iter_mut().zip(g) {
                    *c += v;
                }
            }
            let best = cum.iter().cloned().fold(f64::INFINITY, f64::min);
            let regret = played - best;
            assert!(regret <= bound, "script {script}: regret {regret} > bound {bound}");
        }
    }

    fn two_constant_class(states: usize) -> (PolicyClass, SeparatorSet) {
        let class = PolicyClass::new(
            vec![DetPolicy::new(vec![0; states]), DetPolicy::new(vec![1; states])],
            2,
        )
        .unwrap();
        let sep = greedy_separator(&class, &(0..states).collect::<Vec<_>>()).unwrap();
        (class, sep)
    }

    #[test]
    fn mftpl_with_one_draw_is_one_hot() {
        let (class, sep) = two_constant_class(3);
        let out = mftpl(&[], &class, &sep, 0.5, 1, 1, 7).unwrap();
        assert_eq!(out.oracle_calls, 1);
        let w = out.weight.as_slice();
        assert!(w.contains(&1.0) && w.contains(&0.0));
    }

    #[test]
    fn mftpl_entries_are_multiples_of_one_over_t() {
        let (class, sep) = two_constant_class(2);
        for t in [1usize, 7, 64, 129] {
            let out = mftpl(&[], &class, &sep, 1.0, t, 1, 11).unwrap();
            assert_eq!(out.oracle_calls, t as u64);
            let mut total = 0.0;
            for &w in out.weight.as_slice() {
                let scaled = w * t as f64;
                assert!((scaled - scaled.round()).abs() <= 1e-6 * t as f64);
                total += w;
            }
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn mftpl_is_deterministic_in_the_seed_and_checks_inputs() {
        let (class, sep) = two_constant_class(2);
        let a = mftpl(&[], &class, &sep, 1.0, 50, 1, 3).unwrap();
        let b = mftpl(&[], &class, &sep, 1.0, 50, 1, 3).unwrap();
        assert_eq!(a.weight.as_slice(), b.weight.as_slice());

        assert!(mftpl(&[], &class, &sep, 0.0, 5, 1, 3).is_err());
        assert!(mftpl(&[], &class, &sep, 1.0, 0, 1, 3).is_err());
        assert!(mftpl(&[], &class, &sep, 1.0, 5, 0, 3).is_err());

        // Unverified separator: two members agreeing on the listed state.
        let class2 = PolicyClass::new(
            vec![DetPolicy::new(vec![0, 0]), DetPolicy::new(vec![0, 1])],
            2,
        )
        .unwrap();
        let bad = SeparatorSet::new(vec![0]).unwrap();
        assert!(matches!(
            mftpl(&[], &class2, &bad, 1.0, 5, 1, 3),
            Err(Error::SeparatorUnseparated { .. })
        ));
    }

    #[test]
    fn symmetric_empty_history_concentrates_near_uniform() {
        // No data and an action-symmetric class: the expectation is uniform,
        // and T draws concentrate at rate 1/sqrt(T).
        let (class, sep) = two_constant_class(4);
        let t = 4000;
        let out = mftpl(&[], &class, &sep, 1.0, t, 1, 13).unwrap();
        for &w in out.weight.as_slice() {
            assert!((w - 0.5).abs() <= 4.0 / (t as f64).sqrt(), "weight {w}");
        }
        let reference = mc_ftpl_reference(&[], &class, &sep, 1.0, 1, 4000, 14).unwrap();
        for &w in reference.as_slice() {
            assert!((w - 0.5).abs() <= 4.0 / 63.2, "reference weight {w}");
        }
    }

    #[test]
    fn strong_data_with_small_perturbation_pins_the_leader() {
        // One dataset heavily favoring member 1 and a tiny k/eta ratio: the
        // perturbation almost never overturns the data.
        let (class, sep) = two_constant_class(2);
        let data = Dataset::new(vec![
            CscExample { state: 0, costs: vec![100.0, 0.0] },
            CscExample { state: 1, costs: vec![100.0, 0.0] },
        ]);
        let out = mftpl(&[&data], &class, &sep, 1000.0, 500, 1, 17).unwrap();
        assert!(out.weight.get(1) >= 0.99, "mass on favored member: {}", out.weight.get(1));
    }

    #[test]
    fn mftpl_tracks_the_monte_carlo_reference() {
        // Same law, independent seeds: the played mixture and the reference
        // agree within the combined Monte-Carlo error.
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let class = synth::distinct_class(&mut rng, 4, 3, 3);
        let sep = greedy_separator(&class, &[0, 1, 2]).unwrap();
        let data = Dataset::new(vec![
            CscExample { state: 0, costs: vec![0.4, 0.1, 0.9] },
            CscExample { state: 2, costs: vec![0.2, 0.8, 0.1] },
        ]);
        let t = 6000;
        let out = mftpl(&[&data], &class, &sep, 0.8, t, 2, 19).unwrap();
        let reference = mc_ftpl_reference(&[&data], &class, &sep, 0.8, 2, 10 * t, 20).unwrap();
        for h in 0..class.size() {
            let diff = (out.weight.get(h) - reference.get(h)).abs();
            assert!(diff <= 5.0 / (t as f64).sqrt(), "member {h}: diff {diff}");
        }
    }

    #[test]
    fn default_schedule_matches_direct_formula_evaluation() {
        let p = mftpl_default_params(100, 10, 2, 2, 1, 1.0, 0.05).unwrap();
        assert!((p.eta - 0.06451955560749384).abs() <= 1e-15);
        assert_eq!(p.t, 1273);
        assert_eq!(p.k, 1);

        // Doubling N doubles the leading factor of T and shrinks eta by
        // sqrt(2); T also grows slightly through the ln(2NS/delta) term.
        let q = mftpl_default_params(200, 10, 2, 2, 1, 1.0, 0.05).unwrap();
        assert!((q.eta - p.eta / 2.0f64.sqrt()).abs() <= 1e-12);
        assert!(q.t >= 2 * p.t && q.t <= 2 * p.t + 200);

        // Doubling mu halves eta and leaves T unchanged.
        let r = mftpl_default_params(100, 10, 2, 2, 1, 2.0, 0.05).unwrap();
        assert!((r.eta - p.eta / 2.0).abs() <= 1e-15);
        assert_eq!(r.t, p.t);

        assert!(mftpl_default_params(100, 10, 2, 1, 1, 1.0, 0.05).is_err());
        assert!(mftpl_default_params(100, 10, 2, 2, 1, 1.0, 0.0).is_err());
        assert!(mftpl_default_params(100, 10, 2, 2, 1, 1.0, 7.0).unwrap().t >= 1);
    }

    #[test]
    fn extragradient_schedule_matches_direct_formula_evaluation() {
        let p = mftpl_eg_default_params(200, 13, 3, 2, 1, 1.0, 3, 0.1).unwrap();
        assert!((p.eta - 1.0 / 45.0).abs() <= 1e-15);
        assert_eq!(p.t, 78517);
        assert_eq!(p.k, 93);
        assert!(p.horizon_ok);

        // eta does not depend on N; K grows linearly in N up to the log term.
        let q = mftpl_eg_default_params(400, 13, 3, 2, 1, 1.0, 3, 0.1).unwrap();
        assert_eq!(q.eta, p.eta);
        assert!(q.k >= 2 * p.k - 2 && q.k <= 2 * p.k + 20);

        // Below the round-budget threshold the flag trips but values flow.
        let low = mftpl_eg_default_params(7, 13, 3, 2, 1, 1.0, 3, 0.1).unwrap();
        assert!(!low.horizon_ok);
        assert!(low.t >= 1 && low.k >= 1);

        assert!(mftpl_eg_default_params(200, 13, 3, 1, 1, 1.0, 3, 0.1).is_err());
        assert!(mftpl_eg_default_params(200, 13, 3, 2, 1, 1.0, 0, 0.1).is_err());
    }

    #[test]
    fn extragradient_round_accounts_resources_and_converges_with_budget() {
        // Small cover-style instance; generous T and K make the provisional
        // and final mixtures nearly equal and their exact losses close.
        let gadget = crate::gadgets::make_cover_mdp(3).unwrap();
        let fb = crate::imitation::make_feedback(
            &gadget.mdp,
            &gadget.expert,
            FeedbackKind::ZeroOne { mu: Some(1.0) },
        )
        .unwrap();
        let sep = greedy_separator(&gadget.class, &[0]).unwrap();
        let history = sample_dataset(
            &gadget.mdp,
            &fb,
            &gadget.class.mixture(&MixedWeight::uniform(2).unwrap()).unwrap(),
            40,
            23,
        )
        .unwrap();

        let (t, k) = (3000, 400);
        let round =
            mftpl_eg_round(&[&history], &gadget.mdp, &fb, &gadget.class, &sep, 0.8, t, k, 29).unwrap();
        assert_eq!(round.oracle_calls, 2 * t as u64);
        assert_eq!(round.annotations, k as u64);
        assert_eq!(round.extra.len(), k);

        // Look-ahead estimate vs exact provisional losses: within Monte-
        // Carlo error of the k samples.
        let g_hat = linear_loss_of(&round.extra, &gadget.class).unwrap();
        let theta_hat = theta_exact(&gadget.mdp, &fb, &gadget.class, &round.provisional).unwrap();
        for h in 0..2 {
            assert!((g_hat.get(h) - theta_hat.get(h)).abs() <= 5.0 / (k as f64).sqrt());
        }

        // Distributional continuity ties the two mixtures' exact losses.
        let theta_fin = theta_exact(&gadget.mdp, &fb, &gadget.class, &round.weight).unwrap();
        let drift = round.provisional.l1_distance(&round.weight);
        let bound = fb.mu() * gadget.mdp.horizon() as f64 * drift + 1e-9;
        for h in 0..2 {
            assert!((theta_hat.get(h) - theta_fin.get(h)).abs() <= bound);
        }
    }

    #[test]
    fn zero_cost_instance_contributes_zero_linear_loss() {
        // All-zero costs: any sampled dataset yields the zero loss vector.
        let spec = crate::mdp::MdpSpec {
            h: 2,
            layers: vec![vec!["a".into()], vec!["b".into(), "c".into()]],
            a: 2,
            rho: vec![1.0],
            p: vec![vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]]],
            cost: vec![vec![0.0, 0.0]; 3],
        };
        let mdp = spec.build().unwrap();
        let expert = DetPolicy::new(vec![0, 0, 0]);
        let fb = crate::imitation::make_feedback(&mdp, &expert, FeedbackKind::Advantage).unwrap();
        let class = PolicyClass::new(
            vec![DetPolicy::new(vec![0, 0, 0]), DetPolicy::new(vec![1, 1, 1])],
            2,
        )
        .unwrap();
        // Zero costs make every advantage zero, so sampled losses, exact
        // losses, and hence all regret contributions vanish identically.
        let theta = theta_under(&mdp, &fb, &class, &expert).unwrap();
        assert!(theta.as_slice().iter().all(|&v| v == 0.0));
        let data = sample_dataset(&mdp, &fb, &expert, 10, 3).unwrap();
        let g = linear_loss_of(&data, &class).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
        let u = hedge_step(g.as_slice(), 1.0).unwrap();
        assert_eq!(g.dot(&u), 0.0);
    }
}
