//! Named self-check suites behind the command-line `check` subcommand.
//!
//! Every suite is a deterministic function of its seed: it builds its own
//! random instances, runs a fixed battery of identities, bounds, or
//! statistical tests, and reports one pass/fail line per check.  Suites are
//! pure; running one twice with the same seed yields an identical report.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classes::{csc_oracle, greedy_separator, verify_separator, MixedWeight, PolicyClass};
use crate::error::{Error, Result};
use crate::gadgets::{make_cover_mdp, map_f, map_g, nash_gap, theta_closed_form, vi_gap};
use crate::imitation::{
    make_feedback, round_loss_exact, sample_dataset, theta_and_round_loss, theta_exact,
    theta_under, CscExample, Dataset, ExpertFeedback, FeedbackKind,
};
use crate::mdp::dp::{evaluate, occupancy};
use crate::mdp::rollout::rollout;
use crate::mdp::{DetPolicy, LayeredMdp, PolicyView};
use crate::numeric::{derived_seed, Neumaier};
use crate::online::{hedge_step, mc_ftpl_reference, mftpl, optimistic_ftrl_entropy_step};
use crate::runtime::{
    resolve, run_logger, ExperimentConfig, LearnerConfig, MdpSource,
};
use crate::synth::{
    distinct_class, random_class, random_det_policy, random_game, random_mdp,
    random_stochastic_policy, random_weight,
};

/// One pass/fail line of a suite report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Machine-readable result of one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64) -> Self {
        Self { suite: suite.to_string(), seed, checks: Vec::new(), passed: true }
    }

    fn record(&mut self, name: &str, passed: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(CheckOutcome { name: name.to_string(), passed, detail });
    }

    /// One line per check plus a verdict line, for terminal output.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            let mark = if check.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{mark} {}::{} — {}\n", self.suite, check.name, check.detail));
        }
        let verdict = if self.passed { "pass" } else { "FAIL" };
        out.push_str(&format!("suite {} (seed {}): {verdict}\n", self.suite, self.seed));
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Every suite name `run_suite` accepts.
pub const SUITE_NAMES: &[&str] = &[
    "exactness",
    "pdl",
    "occupancy",
    "continuity",
    "oracle",
    "separator",
    "sampling",
    "olo",
    "concentration",
    "reduction",
    "resources",
];

pub fn suite_names() -> &'static [&'static str] {
    SUITE_NAMES
}

/// Runs one named suite.  Unknown names are a configuration error; internal
/// failures (which would indicate a bug, not a failed check) propagate.
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "exactness" => suite_exactness(seed),
        "pdl" => suite_pdl(seed),
        "occupancy" => suite_occupancy(seed),
        "continuity" => suite_continuity(seed),
        "oracle" => suite_oracle(seed),
        "separator" => suite_separator(seed),
        "sampling" => suite_sampling(seed),
        "olo" => suite_olo(seed),
        "concentration" => suite_concentration(seed),
        "reduction" => suite_reduction(seed),
        "resources" => suite_resources(seed),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

const ROLE_EXACT: u64 = 0x5E01;
const ROLE_PDL: u64 = 0x5E02;
const ROLE_OCC: u64 = 0x5E03;
const ROLE_CONT: u64 = 0x5E04;
const ROLE_ORACLE: u64 = 0x5E05;
const ROLE_SEP: u64 = 0x5E06;
const ROLE_SAMP: u64 = 0x5E07;
const ROLE_OLO: u64 = 0x5E08;
const ROLE_CONC: u64 = 0x5E09;
const ROLE_RED: u64 = 0x5E0A;

fn srng(seed: u64, role: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derived_seed(seed, role, index))
}

/// Desk-scale random instance: 2–4 layers of 2–4 states, 2–3 actions, costs
/// in `[0, 1]`.
fn random_instance(rng: &mut ChaCha8Rng) -> LayeredMdp {
    random_mdp(rng, 2..=4, 2..=4, 2..=3, 0.0, 1.0)
}

/// Random expert plus feedback; alternates the two feedback kinds.
fn random_expert_feedback(
    rng: &mut ChaCha8Rng,
    mdp: &LayeredMdp,
    index: u64,
) -> Result<(DetPolicy, ExpertFeedback)> {
    let expert = random_det_policy(rng, mdp.num_states(), mdp.num_actions());
    let kind = if index.is_multiple_of(2) {
        FeedbackKind::ZeroOne { mu: None }
    } else {
        FeedbackKind::Advantage
    };
    let feedback = make_feedback(mdp, &expert, kind)?;
    Ok((expert, feedback))
}

/// `E_{s ~ avg occupancy} E_{a ~ pi(.|s)} [table(s, a)]` for an arbitrary
/// per-state-action table, computed from an explicit occupancy pass.
fn occupancy_expectation<P: PolicyView + ?Sized>(
    mdp: &LayeredMdp,
    pi: &P,
    table: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    let occ = occupancy(mdp, pi)?;
    let mut dist = vec![0.0; mdp.num_actions()];
    let mut acc = Neumaier::new();
    for (s, &mass) in occ.averaged.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        pi.fill_action_dist(s, &mut dist);
        for (a, &p_a) in dist.iter().enumerate() {
            if p_a != 0.0 {
                acc.add(mass * p_a * table(s, a));
            }
        }
    }
    Ok(acc.value())
}

// ---------------------------------------------------------------------------
// exactness
// ---------------------------------------------------------------------------

/// Four exact identities, 500 random instances each, absolute error ≤ 1e−9:
/// the performance-difference identity, cost/value consistency, bilinearity
/// of the round loss, and consistency of the loss vector with per-member
/// round losses.
fn suite_exactness(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("exactness", seed);
    let tol = 1e-9;

    let mut worst = 0.0f64;
    for i in 0..500 {
        let mut rng = srng(seed, ROLE_EXACT, i);
        let mdp = random_instance(&mut rng);
        let pi = random_stochastic_policy(&mut rng, &mdp);
        let expert = random_det_policy(&mut rng, mdp.num_states(), mdp.num_actions());
        let expert_values = evaluate(&mdp, &expert)?;
        let lhs = evaluate(&mdp, &pi)?.j - expert_values.j;
        let mean_adv = occupancy_expectation(&mdp, &pi, |s, a| expert_values.adv[s][a])?;
        let rhs = mdp.horizon() as f64 * mean_adv;
        worst = worst.max((lhs - rhs).abs());
    }
    report.record(
        "performance_difference",
        worst <= tol,
        format!("max |J(pi) - J(expert) - H*E[adv]| = {worst:.3e} over 500 random triples"),
    );

    let mut worst = 0.0f64;
    for i in 0..500 {
        let mut rng = srng(seed, ROLE_EXACT, 1_000 + i);
        let mdp = random_instance(&mut rng);
        let pi = random_stochastic_policy(&mut rng, &mdp);
        let j = evaluate(&mdp, &pi)?.j;
        let mean_cost = occupancy_expectation(&mdp, &pi, |s, a| mdp.cost(s, a))?;
        worst = worst.max((j - mdp.horizon() as f64 * mean_cost).abs());
    }
    report.record(
        "cost_consistency",
        worst <= tol,
        format!("max |J - H*E[cost]| = {worst:.3e} over 500 random pairs"),
    );

    let mut worst = 0.0f64;
    for i in 0..500 {
        let mut rng = srng(seed, ROLE_EXACT, 2_000 + i);
        let mdp = random_instance(&mut rng);
        let (_, feedback) = random_expert_feedback(&mut rng, &mdp, i)?;
        let b = rng.gen_range(2..=4);
        let class = distinct_class(&mut rng, b, mdp.num_states(), mdp.num_actions());
        let u = random_weight(&mut rng, b);
        let w = random_weight(&mut rng, b);
        let roll = class.mixture(&u)?;
        let eval = class.mixture(&w)?;
        let direct = round_loss_exact(&mdp, &feedback, &roll, &eval)?;
        let theta = theta_under(&mdp, &feedback, &class, &roll)?;
        worst = worst.max((direct - theta.dot(&w)).abs());
    }
    report.record(
        "bilinearity",
        worst <= tol,
        format!("max |F(roll u, eval w) - <theta(u), w>| = {worst:.3e} over 500 random (u, w)"),
    );

    let mut worst = 0.0f64;
    for i in 0..500 {
        let mut rng = srng(seed, ROLE_EXACT, 3_000 + i);
        let mdp = random_instance(&mut rng);
        let (_, feedback) = random_expert_feedback(&mut rng, &mdp, i)?;
        let b = rng.gen_range(2..=4);
        let class = distinct_class(&mut rng, b, mdp.num_states(), mdp.num_actions());
        let u = random_weight(&mut rng, b);
        let (theta, round_loss) = theta_and_round_loss(&mdp, &feedback, &class, &u)?;
        worst = worst.max((round_loss - theta.dot(&u)).abs());
        let h = rng.gen_range(0..b);
        let roll = class.mixture(&u)?;
        let vertex = round_loss_exact(&mdp, &feedback, &roll, class.member(h))?;
        worst = worst.max((theta.get(h) - vertex).abs());
    }
    report.record(
        "loss_vector_consistency",
        worst <= tol,
        format!(
            "max deviation of theta entries from per-member round losses = {worst:.3e} \
             over 500 random weights"
        ),
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// pdl
// ---------------------------------------------------------------------------

/// The performance-difference identity alone, on 500 random triples.
fn suite_pdl(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("pdl", seed);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let mut rng = srng(seed, ROLE_PDL, i);
        let mdp = random_instance(&mut rng);
        let pi = random_stochastic_policy(&mut rng, &mdp);
        let expert = random_det_policy(&mut rng, mdp.num_states(), mdp.num_actions());
        let expert_values = evaluate(&mdp, &expert)?;
        let lhs = evaluate(&mdp, &pi)?.j - expert_values.j;
        let mean_adv = occupancy_expectation(&mdp, &pi, |s, a| expert_values.adv[s][a])?;
        worst = worst.max((lhs - mdp.horizon() as f64 * mean_adv).abs());
    }
    report.record(
        "performance_difference",
        worst <= 1e-9,
        format!("max |J(pi) - J(expert) - H*E[adv]| = {worst:.3e} over 500 random triples"),
    );
    Ok(report)
}

// ---------------------------------------------------------------------------
// occupancy
// ---------------------------------------------------------------------------

/// Occupancy normalization, the averaged-occupancy identity, and agreement of
/// rollout frequencies with the dynamic-programming occupancy.
fn suite_occupancy(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("occupancy", seed);

    let mut worst_sum = 0.0f64;
    let mut worst_avg = 0.0f64;
    for i in 0..500 {
        let mut rng = srng(seed, ROLE_OCC, i);
        let mdp = random_instance(&mut rng);
        let pi = random_stochastic_policy(&mut rng, &mdp);
        let occ = occupancy(&mdp, &pi)?;
        for step in &occ.per_step {
            let total: f64 = step.iter().sum();
            worst_sum = worst_sum.max((total - 1.0).abs());
        }
        let h = mdp.horizon() as f64;
        for (t, step) in occ.per_step.iter().enumerate() {
            for (local, &mass) in step.iter().enumerate() {
                let diff = (occ.averaged[mdp.global_index(t, local)] - mass / h).abs();
                worst_avg = worst_avg.max(diff);
            }
        }
    }
    report.record(
        "per_step_normalization",
        worst_sum <= 1e-9,
        format!("max |sum(d_t) - 1| = {worst_sum:.3e} over 500 random pairs"),
    );
    report.record(
        "averaged_identity",
        worst_avg == 0.0,
        format!("max |averaged - per_step/H| = {worst_avg:.3e} (must be exactly 0)"),
    );

    // Rollout frequencies agree with the exact occupancy: per (step, state),
    // |empirical - exact| <= 4 * binomial sigma + a small-count cushion.
    let mut worst_sigma = 0.0f64;
    let trials = 20_000usize;
    for i in 0..3 {
        let mut rng = srng(seed, ROLE_OCC, 10_000 + i);
        let mdp = random_instance(&mut rng);
        let pi = random_stochastic_policy(&mut rng, &mdp);
        let occ = occupancy(&mdp, &pi)?;
        let mut counts = vec![0u64; mdp.num_states()];
        for _ in 0..trials {
            let trajectory = rollout(&mdp, &pi, &mut rng)?;
            for &s in &trajectory.states {
                counts[s] += 1;
            }
        }
        for (t, step) in occ.per_step.iter().enumerate() {
            for (local, &p) in step.iter().enumerate() {
                let s = mdp.global_index(t, local);
                let observed = counts[s] as f64 / trials as f64;
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                let slack = 4.0 * sigma + 4.0 / (3.0 * trials as f64);
                let scaled = (observed - p).abs() / slack.max(1e-12);
                worst_sigma = worst_sigma.max(scaled);
            }
        }
    }
    report.record(
        "rollout_frequency_agreement",
        worst_sigma <= 1.0,
        format!(
            "max |empirical - exact| / (4 sigma cushion) = {worst_sigma:.3} over 3 instances x \
             {trials} rollouts"
        ),
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// continuity
// ---------------------------------------------------------------------------

/// Distributional continuity of the loss map: `‖theta(u) − theta(v)‖_∞ ≤
/// mu·H·max_s ‖pi_u(·|s) − pi_v(·|s)‖_1 ≤ mu·H·‖u − v‖_1` on 500 random
/// triples, zero violations.
fn suite_continuity(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("continuity", seed);
    let mut violations = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    for i in 0..500 {
        let mut rng = srng(seed, ROLE_CONT, i);
        let mdp = random_instance(&mut rng);
        let (_, feedback) = random_expert_feedback(&mut rng, &mdp, i)?;
        let b = rng.gen_range(2..=4);
        let class = distinct_class(&mut rng, b, mdp.num_states(), mdp.num_actions());
        let u = random_weight(&mut rng, b);
        let v = random_weight(&mut rng, b);

        let theta_u = theta_exact(&mdp, &feedback, &class, &u)?;
        let theta_v = theta_exact(&mdp, &feedback, &class, &v)?;
        let lhs = theta_u
            .as_slice()
            .iter()
            .zip(theta_v.as_slice())
            .fold(0.0f64, |acc, (&x, &y)| acc.max((x - y).abs()));

        let pi_u = class.mixture(&u)?;
        let pi_v = class.mixture(&v)?;
        let mut dist_u = vec![0.0; mdp.num_actions()];
        let mut dist_v = vec![0.0; mdp.num_actions()];
        let mut state_l1 = 0.0f64;
        for s in 0..mdp.num_states() {
            pi_u.fill_action_dist(s, &mut dist_u);
            pi_v.fill_action_dist(s, &mut dist_v);
            let l1: f64 = dist_u.iter().zip(&dist_v).map(|(&x, &y)| (x - y).abs()).sum();
            state_l1 = state_l1.max(l1);
        }
        let weight_l1: f64 =
            u.as_slice().iter().zip(v.as_slice()).map(|(&x, &y)| (x - y).abs()).sum();

        let mu_h = feedback.mu() * mdp.horizon() as f64;
        let first = lhs - mu_h * state_l1;
        let second = mu_h * state_l1 - mu_h * weight_l1;
        worst_margin = worst_margin.max(first).max(second);
        if first > 1e-9 || second > 1e-9 {
            violations += 1;
        }
    }
    report.record(
        "loss_map_continuity",
        violations == 0,
        format!(
            "{violations} violations over 500 random triples; worst margin over the bound = \
             {worst_margin:.3e}"
        ),
    );
    Ok(report)
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

/// The classification oracle against an exhaustive scan, invariance under a
/// constant cost shift, and linearity of the mixed action distribution.
fn suite_oracle(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("oracle", seed);

    let mut mismatches = 0usize;
    for i in 0..1_000 {
        let mut rng = srng(seed, ROLE_ORACLE, i);
        let states = rng.gen_range(2..=5);
        let actions = rng.gen_range(2..=3);
        let b = rng.gen_range(2..=5);
        let class = random_class(&mut rng, b, states, actions);
        let k = rng.gen_range(1..=12);
        let examples: Vec<CscExample> = (0..k)
            .map(|_| CscExample {
                state: rng.gen_range(0..states),
                costs: (0..actions).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        let dataset = Dataset::new(examples.clone());
        let fast = csc_oracle(&dataset, &class)?;
        // Independent scan: mean cost per member, first minimum wins.
        let mut best: Option<(usize, f64)> = None;
        for (h, member) in class.members().iter().enumerate() {
            let total: f64 = examples.iter().map(|e| e.costs[member.action(e.state)]).sum();
            let mean = total / k as f64;
            if best.is_none_or(|(_, m)| mean < m) {
                best = Some((h, mean));
            }
        }
        if fast != best.expect("class nonempty").0 {
            mismatches += 1;
        }
    }
    report.record(
        "matches_exhaustive_scan",
        mismatches == 0,
        format!("{mismatches} mismatches over 1000 random datasets"),
    );

    let mut shifts_changed = 0usize;
    for i in 0..200 {
        let mut rng = srng(seed, ROLE_ORACLE, 10_000 + i);
        let states = rng.gen_range(2..=5);
        let actions = rng.gen_range(2..=3);
        let members = rng.gen_range(2..=5);
        let class = random_class(&mut rng, members, states, actions);
        let k = rng.gen_range(1..=10);
        let examples: Vec<CscExample> = (0..k)
            .map(|_| CscExample {
                state: rng.gen_range(0..states),
                costs: (0..actions).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        let shift: f64 = rng.gen_range(-8.0..8.0);
        let shifted: Vec<CscExample> = examples
            .iter()
            .map(|e| CscExample {
                state: e.state,
                costs: e.costs.iter().map(|&c| c + shift).collect(),
            })
            .collect();
        let before = csc_oracle(&Dataset::new(examples), &class)?;
        let after = csc_oracle(&Dataset::new(shifted), &class)?;
        if before != after {
            shifts_changed += 1;
        }
    }
    report.record(
        "constant_shift_invariance",
        shifts_changed == 0,
        format!("{shifts_changed} index changes under constant cost shifts over 200 datasets"),
    );

    let mut worst = 0.0f64;
    for i in 0..200 {
        let mut rng = srng(seed, ROLE_ORACLE, 20_000 + i);
        let states = rng.gen_range(2..=5);
        let actions = rng.gen_range(2..=3);
        let b = rng.gen_range(2..=5);
        let class = random_class(&mut rng, b, states, actions);
        let u = random_weight(&mut rng, b);
        let v = random_weight(&mut rng, b);
        let alpha: f64 = rng.gen_range(0.0..1.0);
        let blend: Vec<f64> = u
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(&x, &y)| alpha * x + (1.0 - alpha) * y)
            .collect();
        let blend = MixedWeight::new(blend)?;
        let pi_u = class.mixture(&u)?;
        let pi_v = class.mixture(&v)?;
        let pi_b = class.mixture(&blend)?;
        let mut du = vec![0.0; actions];
        let mut dv = vec![0.0; actions];
        let mut db = vec![0.0; actions];
        for s in 0..states {
            pi_u.fill_action_dist(s, &mut du);
            pi_v.fill_action_dist(s, &mut dv);
            pi_b.fill_action_dist(s, &mut db);
            for a in 0..actions {
                worst = worst.max((db[a] - (alpha * du[a] + (1.0 - alpha) * dv[a])).abs());
            }
        }
    }
    report.record(
        "mixture_distribution_linearity",
        worst <= 1e-12,
        format!("max |dist(blend) - blend(dist)| = {worst:.3e} over 200 random blends"),
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// separator
// ---------------------------------------------------------------------------

/// Greedy separator construction verifies, respects the information-theoretic
/// size floor `|X| ≥ ceil(log_A B)`, and rejects duplicate members.
fn suite_separator(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("separator", seed);

    let mut failures = 0usize;
    let mut floor_violations = 0usize;
    for i in 0..200 {
        let mut rng = srng(seed, ROLE_SEP, i);
        let states = rng.gen_range(3..=6);
        let actions = rng.gen_range(2..=3);
        let max_b = (actions as u32).pow(states as u32).min(8) as usize;
        let b = rng.gen_range(2..=max_b.max(2));
        let class = distinct_class(&mut rng, b, states, actions);
        let candidates: Vec<usize> = (0..states).collect();
        let separator = greedy_separator(&class, &candidates)?;
        if verify_separator(&class, &separator).is_err() {
            failures += 1;
        }
        // Smallest x with actions^x >= b.
        let mut floor = 0usize;
        let mut reach = 1usize;
        while reach < b {
            reach *= actions;
            floor += 1;
        }
        if separator.len() < floor {
            floor_violations += 1;
        }
    }
    report.record(
        "greedy_cover_verifies",
        failures == 0,
        format!("{failures} unverified greedy covers over 200 random distinct classes"),
    );
    report.record(
        "size_floor",
        floor_violations == 0,
        format!("{floor_violations} covers below ceil(log_A B) over 200 random classes"),
    );

    let mut rng = srng(seed, ROLE_SEP, 10_000);
    let member = random_det_policy(&mut rng, 4, 2);
    let dup = PolicyClass::new(vec![member.clone(), member], 2)?;
    let rejected = matches!(
        greedy_separator(&dup, &[0, 1, 2, 3]),
        Err(Error::InseparableClass { .. })
    );
    report.record(
        "duplicates_rejected",
        rejected,
        "a class with two identical members has no separator and must be rejected".to_string(),
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// sampling
// ---------------------------------------------------------------------------

/// Feedback sandwich bounds, unbiasedness of sampled loss vectors, and exact
/// agreement of sampled cost rows with the feedback table.
fn suite_sampling(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("sampling", seed);

    let mut sandwich_violations = 0usize;
    for i in 0..100 {
        let mut rng = srng(seed, ROLE_SAMP, i);
        let mdp = random_instance(&mut rng);
        let (expert, feedback) = random_expert_feedback(&mut rng, &mdp, i)?;
        let adv = evaluate(&mdp, &expert)?.adv;
        let mu = feedback.mu();
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let zeta = feedback.zeta(s, a);
                let upper = if a == expert.action(s) { 0.0 } else { mu };
                if zeta < adv[s][a] - 1e-12 || zeta > upper + 1e-12 {
                    sandwich_violations += 1;
                }
            }
        }
    }
    report.record(
        "feedback_sandwich",
        sandwich_violations == 0,
        format!(
            "{sandwich_violations} entries outside [advantage, mu*disagreement] over 100 \
             random instances"
        ),
    );

    // Unbiasedness: the sampled loss vector's mean over many datasets sits
    // within 4 standard errors of the exact loss vector, per coordinate.
    let mut worst_ratio = 0.0f64;
    for i in 0..2u64 {
        let mut rng = srng(seed, ROLE_SAMP, 10_000 + i);
        let (mdp, feedback, class) = if i == 0 {
            let gadget = make_cover_mdp(3)?;
            let feedback =
                make_feedback(&gadget.mdp, &gadget.expert, FeedbackKind::ZeroOne { mu: Some(1.0) })?;
            (gadget.mdp, feedback, gadget.class)
        } else {
            let mdp = random_instance(&mut rng);
            let (_, feedback) = random_expert_feedback(&mut rng, &mdp, 1)?;
            let class = distinct_class(&mut rng, 3, mdp.num_states(), mdp.num_actions());
            (mdp, feedback, class)
        };
        let u = random_weight(&mut rng, class.size());
        let theta = theta_exact(&mdp, &feedback, &class, &u)?;
        let pi = class.mixture(&u)?;
        let (m, k) = (400usize, 4usize);
        let mut mean = vec![Neumaier::new(); class.size()];
        for rep in 0..m {
            let data = sample_dataset(
                &mdp,
                &feedback,
                &pi,
                k,
                derived_seed(seed, ROLE_SAMP, 20_000 + i * 1_000 + rep as u64),
            )?;
            let g = crate::imitation::linear_loss_of(&data, &class)?;
            for (acc, &v) in mean.iter_mut().zip(g.as_slice()) {
                acc.add(v / m as f64);
            }
        }
        let standard_error = feedback.mu() / ((k * m) as f64).sqrt();
        for (h, acc) in mean.iter().enumerate() {
            let ratio = (acc.value() - theta.get(h)).abs() / (4.0 * standard_error + 1e-12);
            worst_ratio = worst_ratio.max(ratio);
        }
    }
    report.record(
        "estimate_unbiasedness",
        worst_ratio <= 1.0,
        format!(
            "max |mean(g) - theta| / (4 standard errors) = {worst_ratio:.3} over 2 instances x \
             400 datasets"
        ),
    );

    let mut cost_mismatches = 0usize;
    for i in 0..50 {
        let mut rng = srng(seed, ROLE_SAMP, 30_000 + i);
        let mdp = random_instance(&mut rng);
        let (_, feedback) = random_expert_feedback(&mut rng, &mdp, i)?;
        let pi = random_stochastic_policy(&mut rng, &mdp);
        let data = sample_dataset(&mdp, &feedback, &pi, 6, derived_seed(seed, ROLE_SAMP, 40_000 + i))?;
        if data.len() != 6 {
            cost_mismatches += 1;
        }
        for example in &data {
            let expected: Vec<f64> =
                (0..mdp.num_actions()).map(|a| feedback.zeta(example.state, a)).collect();
            if example.costs != expected {
                cost_mismatches += 1;
            }
        }
    }
    report.record(
        "sampled_costs_match_feedback",
        cost_mismatches == 0,
        format!("{cost_mismatches} sampled cost rows differing from the feedback table"),
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// olo
// ---------------------------------------------------------------------------

/// Online-optimizer basics: sparsified updates live on the `1/T` grid,
/// exponential-weight steps are invariant to constant loss shifts, and the
/// scripted-adversary regret stays under the classical bound.
fn suite_olo(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("olo", seed);

    // Support granularity.
    let gadget = make_cover_mdp(3)?;
    let feedback =
        make_feedback(&gadget.mdp, &gadget.expert, FeedbackKind::ZeroOne { mu: Some(1.0) })?;
    let separator = greedy_separator(&gadget.class, &[0, 1, 2, 3, 4])?;
    let uniform = MixedWeight::new(vec![0.5, 0.5])?;
    let pi = gadget.class.mixture(&uniform)?;
    let history =
        [sample_dataset(&gadget.mdp, &feedback, &pi, 3, derived_seed(seed, ROLE_OLO, 0))?];
    let refs: Vec<&Dataset> = history.iter().collect();
    let t = 37usize;
    let mut worst_grid = 0.0f64;
    let mut worst_sum = 0.0f64;
    for rep in 0..50 {
        let outcome = mftpl(
            &refs,
            &gadget.class,
            &separator,
            0.7,
            t,
            3,
            derived_seed(seed, ROLE_OLO, 100 + rep),
        )?;
        let mut total = Neumaier::new();
        for &w in outcome.weight.as_slice() {
            let scaled = w * t as f64;
            worst_grid = worst_grid.max((scaled - scaled.round()).abs());
            total.add(w);
        }
        worst_sum = worst_sum.max((total.value() - 1.0).abs());
    }
    report.record(
        "support_granularity",
        worst_grid <= 1e-9 && worst_sum <= 1e-12,
        format!(
            "max distance from the 1/T grid = {worst_grid:.3e}, max |sum - 1| = {worst_sum:.3e} \
             over 50 runs"
        ),
    );

    // Shift invariance of the exponential-weights step.
    let mut worst = 0.0f64;
    for i in 0..200 {
        let mut rng = srng(seed, ROLE_OLO, 1_000 + i);
        let b = rng.gen_range(2..=6);
        let cumulative: Vec<f64> = (0..b).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let hint: Vec<f64> = (0..b).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eta: f64 = rng.gen_range(0.05..1.5);
        let shift: f64 = rng.gen_range(-10.0..10.0);
        let shifted: Vec<f64> = cumulative.iter().map(|&x| x + shift).collect();
        let hint_shift: f64 = rng.gen_range(-10.0..10.0);
        let hint_shifted: Vec<f64> = hint.iter().map(|&x| x + hint_shift).collect();

        let base = hedge_step(&cumulative, eta)?;
        let moved = hedge_step(&shifted, eta)?;
        for (&x, &y) in base.as_slice().iter().zip(moved.as_slice()) {
            worst = worst.max((x - y).abs());
        }
        let base = optimistic_ftrl_entropy_step(&cumulative, Some(&hint), eta)?;
        let moved = optimistic_ftrl_entropy_step(&shifted, Some(&hint_shifted), eta)?;
        for (&x, &y) in base.as_slice().iter().zip(moved.as_slice()) {
            worst = worst.max((x - y).abs());
        }
    }
    report.record(
        "shift_invariance",
        worst <= 1e-12,
        format!("max weight change under constant loss shifts = {worst:.3e} over 200 draws"),
    );

    // Scripted adversaries: with the schedule rate, realized regret stays
    // under 1.2 * sqrt(2 N ln B) on every script.
    let (n, b) = (512usize, 4usize);
    let eta = ((b as f64).ln() / (2.0 * n as f64)).sqrt();
    let bound = 1.2 * (2.0 * n as f64 * (b as f64).ln()).sqrt();
    let mut scripts: Vec<Vec<Vec<f64>>> = Vec::new();
    // Rotating point losses.
    for offset in 0..4 {
        scripts.push(
            (0..n)
                .map(|round| {
                    let mut g = vec![0.0; b];
                    g[(round + offset) % b] = 1.0;
                    g
                })
                .collect(),
        );
    }
    // Block-alternating halves with doubling block lengths.
    for power in 0..4 {
        let block = 1usize << power;
        scripts.push(
            (0..n)
                .map(|round| {
                    let first = (round / block).is_multiple_of(2);
                    (0..b)
                        .map(|h| if (h < b / 2) == first { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect(),
        );
    }
    // Mild random scripts, coordinates uniform in [0, 1].
    for i in 0..8u64 {
        let mut rng = srng(seed, ROLE_OLO, 2_000 + i);
        scripts.push((0..n).map(|_| (0..b).map(|_| rng.gen_range(0.0..1.0)).collect()).collect());
    }
    // Sign-flip scripts, coordinates in {-1, +1}.
    for i in 0..4u64 {
        let mut rng = srng(seed, ROLE_OLO, 3_000 + i);
        scripts.push(
            (0..n)
                .map(|_| (0..b).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect())
                .collect(),
        );
    }
    let mut worst_regret = f64::NEG_INFINITY;
    for script in &scripts {
        let mut cumulative = vec![Neumaier::new(); b];
        let mut play = Neumaier::new();
        for g in script {
            let cum: Vec<f64> = cumulative.iter().map(Neumaier::value).collect();
            let u = hedge_step(&cum, eta)?;
            play.add(crate::numeric::dot(g, u.as_slice()));
            for (acc, &v) in cumulative.iter_mut().zip(g) {
                acc.add(v);
            }
        }
        let best = cumulative.iter().map(Neumaier::value).fold(f64::INFINITY, f64::min);
        worst_regret = worst_regret.max(play.value() - best);
    }
    report.record(
        "scripted_regret_bound",
        worst_regret <= bound,
        format!(
            "worst regret {worst_regret:.2} over {} scripts vs bound {bound:.2} at N = {n}, \
             B = {b}",
            scripts.len()
        ),
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// concentration
// ---------------------------------------------------------------------------

/// The sparsified update concentrates around its Monte-Carlo expectation: the
/// per-state L1 deviation exceeds the radius `sqrt(2A(ln S + ln(2/delta))/T)`
/// in at most a `delta` fraction of runs, plus three binomial sigmas of slack.
fn suite_concentration(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("concentration", seed);

    let gadget = make_cover_mdp(3)?;
    let feedback =
        make_feedback(&gadget.mdp, &gadget.expert, FeedbackKind::ZeroOne { mu: Some(1.0) })?;
    let separator = greedy_separator(&gadget.class, &[0, 1, 2, 3, 4])?;
    let (s, a) = (gadget.mdp.num_states() as f64, gadget.mdp.num_actions() as f64);
    let delta = 0.1f64;
    let radius = 0.1f64;
    let t = (2.0 * a * (s.ln() + (2.0 / delta).ln()) / (radius * radius)).ceil() as usize;

    // Two fixed datasets make the target a nondegenerate function of history.
    let uniform = MixedWeight::new(vec![0.5, 0.5])?;
    let pi = gadget.class.mixture(&uniform)?;
    let history = [
        sample_dataset(&gadget.mdp, &feedback, &pi, 1, derived_seed(seed, ROLE_CONC, 1))?,
        sample_dataset(&gadget.mdp, &feedback, &pi, 1, derived_seed(seed, ROLE_CONC, 2))?,
    ];
    let refs: Vec<&Dataset> = history.iter().collect();
    let eta = 0.3f64;

    let reference = mc_ftpl_reference(
        &refs,
        &gadget.class,
        &separator,
        eta,
        1,
        100 * t,
        derived_seed(seed, ROLE_CONC, 3),
    )?;
    let pi_ref = gadget.class.mixture(&reference)?;

    let runs = 80usize;
    let mut violations = 0usize;
    let mut dist_run = vec![0.0; gadget.mdp.num_actions()];
    let mut dist_ref = vec![0.0; gadget.mdp.num_actions()];
    for rep in 0..runs {
        let outcome = mftpl(
            &refs,
            &gadget.class,
            &separator,
            eta,
            t,
            1,
            derived_seed(seed, ROLE_CONC, 100 + rep as u64),
        )?;
        let pi_run = gadget.class.mixture(&outcome.weight)?;
        let mut deviation = 0.0f64;
        for state in 0..gadget.mdp.num_states() {
            pi_run.fill_action_dist(state, &mut dist_run);
            pi_ref.fill_action_dist(state, &mut dist_ref);
            let l1: f64 = dist_run.iter().zip(&dist_ref).map(|(&x, &y)| (x - y).abs()).sum();
            deviation = deviation.max(l1);
        }
        if deviation > radius {
            violations += 1;
        }
    }
    let rate = violations as f64 / runs as f64;
    let slack = 3.0 * (delta * (1.0 - delta) / runs as f64).sqrt();
    report.record(
        "sparsified_update_concentrates",
        rate <= delta + slack,
        format!(
            "violation rate {rate:.3} over {runs} runs (T = {t}, radius {radius}) vs budget \
             {:.3}",
            delta + slack
        ),
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// reduction
// ---------------------------------------------------------------------------

/// Game-embedding fidelity: closed-form and occupancy-route loss vectors
/// agree to 1e−12, imbalanced weights pay a gap of at least 1/3, and the
/// gap transfer into the game holds on balanced weights.
fn suite_reduction(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("reduction", seed);

    let mut worst_agree = 0.0f64;
    let mut imbalance_failures = 0usize;
    let mut transfer_failures = 0usize;
    let mut game_index = 0u64;
    for m in 1..=2usize {
        for _ in 0..5 {
            let mut rng = srng(seed, ROLE_RED, game_index);
            game_index += 1;
            let game = random_game(&mut rng, m);
            let instance = map_f(&game)?;
            let b = 2 * m;

            for _ in 0..20 {
                let u = random_weight(&mut rng, b);
                let direct = theta_exact(&instance.mdp, &instance.feedback, &instance.class, &u)?;
                let closed = theta_closed_form(&instance, &u)?;
                let gap = direct
                    .as_slice()
                    .iter()
                    .zip(closed.as_slice())
                    .fold(0.0f64, |acc, (&x, &y)| acc.max((x - y).abs()));
                worst_agree = worst_agree.max(gap);
            }

            for _ in 0..50 {
                // Target an x-half mass strictly outside [1/3, 2/3].
                let mass: f64 = if rng.gen::<bool>() {
                    rng.gen_range(0.01..0.32)
                } else {
                    rng.gen_range(0.68..0.99)
                };
                let x_raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
                let y_raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
                let x_sum: f64 = x_raw.iter().sum();
                let y_sum: f64 = y_raw.iter().sum();
                let mut entries = Vec::with_capacity(b);
                entries.extend(x_raw.iter().map(|&v| v / x_sum * mass));
                entries.extend(y_raw.iter().map(|&v| v / y_sum * (1.0 - mass)));
                let u = MixedWeight::new(entries)?;
                let theta = theta_closed_form(&instance, &u)?;
                if vi_gap(&theta, &u)? < 1.0 / 3.0 - 1e-9 {
                    imbalance_failures += 1;
                }
            }

            for _ in 0..30 {
                let u = random_weight(&mut rng, b);
                let theta = theta_closed_form(&instance, &u)?;
                let gap = vi_gap(&theta, &u)?;
                let check = crate::gadgets::balance_check(&u)?;
                let (x, y) = map_g(&u)?;
                let transferred = nash_gap(&game, &x, &y)?;
                if transferred > 3.0 / check.product * gap + 1e-8 {
                    transfer_failures += 1;
                }
            }
        }
    }
    report.record(
        "closed_form_agreement",
        worst_agree <= 1e-12,
        format!("max deviation from the closed form = {worst_agree:.3e} over 10 games x 20 weights"),
    );
    report.record(
        "imbalanced_weights_pay",
        imbalance_failures == 0,
        format!("{imbalance_failures} imbalanced weights with gap below 1/3 over 10 games x 50"),
    );
    report.record(
        "gap_transfer",
        transfer_failures == 0,
        format!("{transfer_failures} transfer violations over 10 games x 30 balanced weights"),
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// resources
// ---------------------------------------------------------------------------

/// Annotation and oracle counters equal their closed forms exactly, and the
/// emitted CSV has one row per round.
fn suite_resources(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("resources", seed);
    let base = |learner: LearnerConfig| ExperimentConfig {
        mdp: MdpSource::Cover { h: 3 },
        feedback: FeedbackKind::ZeroOne { mu: Some(1.0) },
        expert: None,
        class: None,
        separator: None,
        learner,
        n: 4,
        k: 2,
        delta: 0.05,
        seed: Some(seed),
        exact_losses: false,
        out: None,
    };

    let cases: [(&str, LearnerConfig, u64, u64); 3] = [
        ("hedge", LearnerConfig::Hedge { eta: None }, 4 * 2, 0),
        ("mftpl", LearnerConfig::Mftpl { eta: Some(0.5), t: Some(5) }, 4 * 2, 4 * 5),
        ("mftpl_eg", LearnerConfig::MftplEg { eta: Some(0.5), t: Some(5) }, 2 * 4 * 2, 2 * 4 * 5),
    ];
    for (name, learner, annotations, oracle_calls) in cases {
        let ledger = run_logger(&resolve(&base(learner))?)?;
        let counters_ok = ledger.total_annotations() == annotations
            && ledger.total_oracle_calls() == oracle_calls;
        let csv = ledger.to_csv_string();
        let rows = csv.lines().count();
        let header_ok = csv
            .lines()
            .next()
            .is_some_and(|h| h == "n,F_n,lin_loss,SReg,DReg,LReg,annotations,oracle_calls");
        report.record(
            &format!("counters_{name}"),
            counters_ok && rows == 5 && header_ok,
            format!(
                "annotations {} (want {annotations}), oracle calls {} (want {oracle_calls}), \
                 csv rows {rows} (want 5)",
                ledger.total_annotations(),
                ledger.total_oracle_calls()
            ),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_with_a_fixed_seed() {
        for &name in suite_names() {
            let report = run_suite(name, 7).unwrap();
            assert!(report.passed, "suite {name} failed:\n{}", report.render_text());
            assert!(!report.checks.is_empty());
        }
    }

    #[test]
    fn unknown_suites_are_rejected() {
        assert!(matches!(run_suite("no_such_suite", 1), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn reports_are_deterministic_given_the_seed() {
        let a = run_suite("olo", 3).unwrap().to_json_string();
        let b = run_suite("olo", 3).unwrap().to_json_string();
        assert_eq!(a, b);
    }

    #[test]
    fn reports_render_one_line_per_check() {
        let report = run_suite("pdl", 5).unwrap();
        let text = report.render_text();
        assert_eq!(text.lines().count(), report.checks.len() + 1);
        assert!(text.contains("pdl::performance_difference"));
        assert!(report.to_json_string().contains("\"suite\": \"pdl\""));
    }
}
