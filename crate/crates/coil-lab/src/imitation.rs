//! Expert feedback and the induced losses.
//!
//! The expert annotates state/action pairs with a cost `zeta(s, a)` that is
//! wedged between the expert-relative advantage and a scaled disagreement
//! indicator. Rolling a policy and evaluating another against `zeta` under
//! the roller's averaged occupancy gives the bilinear round loss; restricted
//! to a finite class this collapses to a vector `theta(u)` indexed by class
//! members, which is the exact object online learners see noisy estimates of.

use crate::classes::{MixedWeight, PolicyClass};
use crate::error::{Error, Result};
use crate::mdp::{evaluate, occupancy, rollout, DetPolicy, LayeredMdp, PolicyView};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Flavor of expert annotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeedbackKind {
    /// Scaled disagreement: `zeta(s, a) = mu * 1{a != expert(s)}`. When `mu`
    /// is omitted it defaults to the expert's recoverability constant.
    ZeroOne {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<f64>,
    },
    /// Exact expert advantage: `zeta(s, a) = Q_expert(s, a) - V_expert(s)`.
    Advantage,
}

/// Expert annotation table with its certifying quantities.
///
/// Constructed only through [`make_feedback`], which verifies the sandwich
/// `adv(s, a) <= zeta(s, a) <= mu * 1{a != expert(s)}` exhaustively.
#[derive(Debug, Clone)]
pub struct ExpertFeedback {
    expert: DetPolicy,
    kind: FeedbackKind,
    /// Scale of the sandwich upper bound: the disagreement scale for the
    /// zero-one kind, the recoverability constant for the advantage kind.
    mu: f64,
    recoverability: f64,
    zeta: Vec<Vec<f64>>,
}

impl ExpertFeedback {
    pub fn expert(&self) -> &DetPolicy {
        &self.expert
    }

    pub fn kind(&self) -> FeedbackKind {
        self.kind
    }

    /// Sandwich scale; bounds every annotation in absolute value.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Largest absolute expert advantage on this MDP.
    pub fn recoverability(&self) -> f64 {
        self.recoverability
    }

    pub fn zeta(&self, state: usize, action: usize) -> f64 {
        self.zeta[state][action]
    }

    pub fn zeta_row(&self, state: usize) -> &[f64] {
        &self.zeta[state]
    }

    pub fn num_states(&self) -> usize {
        self.zeta.len()
    }
}

/// Builds and verifies the annotation table for a deterministic expert.
pub fn make_feedback(mdp: &LayeredMdp, expert: &DetPolicy, kind: FeedbackKind) -> Result<ExpertFeedback> {
    crate::mdp::check_policy_shape(mdp, expert, "expert feedback")?;
    let values = evaluate(mdp, expert)?;
    let recoverability = values
        .adv
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));

    let (mu, zeta): (f64, Vec<Vec<f64>>) = match kind {
        FeedbackKind::ZeroOne { mu } => {
            let mu = mu.unwrap_or(recoverability);
            if !(mu > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "disagreement scale must be positive, got {mu}"
                )));
            }
            let table = (0..mdp.num_states())
                .map(|s| {
                    (0..mdp.num_actions())
                        .map(|a| if a == expert.action(s) { 0.0 } else { mu })
                        .collect()
                })
                .collect();
            (mu, table)
        }
        FeedbackKind::Advantage => (recoverability, values.adv.clone()),
    };

    // Exhaustive sandwich check: adv <= zeta <= mu * disagreement indicator.
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            let lower = values.adv[s][a];
            let upper = if a == expert.action(s) { 0.0 } else { mu };
            let z = zeta[s][a];
            if z < lower {
                return Err(Error::SandwichViolation {
                    state: s,
                    action: a,
                    detail: format!("annotation {z} below the expert advantage {lower}"),
                });
            }
            if z > upper {
                return Err(Error::SandwichViolation {
                    state: s,
                    action: a,
                    detail: format!("annotation {z} above the bound {upper}"),
                });
            }
        }
    }

    Ok(ExpertFeedback { expert: expert.clone(), kind, mu, recoverability, zeta })
}

/// Exact round loss: roll one policy to weight states, evaluate another
/// against the annotation table.
///
/// `F(roll, eval) = E_{s ~ avg occupancy of roll} E_{a ~ eval(.|s)} [zeta(s, a)]`.
pub fn round_loss_exact<P, Q>(
    mdp: &LayeredMdp,
    feedback: &ExpertFeedback,
    roll_policy: &P,
    eval_policy: &Q,
) -> Result<f64>
where
    P: PolicyView + ?Sized,
    Q: PolicyView + ?Sized,
{
    crate::mdp::check_policy_shape(mdp, eval_policy, "round loss evaluation policy")?;
    let occ = occupancy(mdp, roll_policy)?;
    let mut dist = vec![0.0; mdp.num_actions()];
    let mut total = 0.0;
    for (s, &mass) in occ.averaged.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        eval_policy.fill_action_dist(s, &mut dist);
        total += mass * crate::numeric::dot(&dist, feedback.zeta_row(s));
    }
    Ok(total)
}

/// Imitation loss of a policy: [`round_loss_exact`] with itself on both sides.
pub fn imitation_loss_exact<P>(mdp: &LayeredMdp, feedback: &ExpertFeedback, pi: &P) -> Result<f64>
where
    P: PolicyView + ?Sized,
{
    round_loss_exact(mdp, feedback, pi, pi)
}

/// Exact per-member losses under the occupancy of an arbitrary roll policy:
/// `out[h] = E_{s ~ avg occupancy} [zeta(s, h(s))]`.
pub fn theta_under<P>(
    mdp: &LayeredMdp,
    feedback: &ExpertFeedback,
    class: &PolicyClass,
    roll_policy: &P,
) -> Result<LinearLoss>
where
    P: PolicyView + ?Sized,
{
    if class.num_states() != mdp.num_states() || class.num_actions() != mdp.num_actions() {
        return Err(Error::DimensionMismatch(format!(
            "class over {} states / {} actions against an MDP with {} states / {} actions",
            class.num_states(),
            class.num_actions(),
            mdp.num_states(),
            mdp.num_actions()
        )));
    }
    let occ = occupancy(mdp, roll_policy)?;
    let mut values = vec![0.0; class.size()];
    for (s, &mass) in occ.averaged.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for (h, member) in class.members().iter().enumerate() {
            values[h] += mass * feedback.zeta(s, member.action(s));
        }
    }
    Ok(LinearLoss::new(values))
}

/// Exact loss vector of the mixture `u`: `theta(u)[h]` under the occupancy of
/// the mixed policy.
pub fn theta_exact(
    mdp: &LayeredMdp,
    feedback: &ExpertFeedback,
    class: &PolicyClass,
    u: &MixedWeight,
) -> Result<LinearLoss> {
    let mixed = class.mixture(u)?;
    theta_under(mdp, feedback, class, &mixed)
}

/// [`theta_exact`] and [`round_loss_exact`] of the same mixture from a single
/// occupancy pass. When `u` is a point mass on member `h`, the returned loss
/// is bitwise equal to `theta[h]`: both sides accumulate the identical
/// products in the identical order, which downstream regret comparisons with
/// zero tolerance rely on.
pub fn theta_and_round_loss(
    mdp: &LayeredMdp,
    feedback: &ExpertFeedback,
    class: &PolicyClass,
    u: &MixedWeight,
) -> Result<(LinearLoss, f64)> {
    if class.num_states() != mdp.num_states() || class.num_actions() != mdp.num_actions() {
        return Err(Error::DimensionMismatch(format!(
            "class over {} states / {} actions against an MDP with {} states / {} actions",
            class.num_states(),
            class.num_actions(),
            mdp.num_states(),
            mdp.num_actions()
        )));
    }
    let mixed = class.mixture(u)?;
    let occ = occupancy(mdp, &mixed)?;
    let mut values = vec![0.0; class.size()];
    let mut dist = vec![0.0; mdp.num_actions()];
    let mut loss = 0.0;
    for (s, &mass) in occ.averaged.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for (h, member) in class.members().iter().enumerate() {
            values[h] += mass * feedback.zeta(s, member.action(s));
        }
        mixed.fill_action_dist(s, &mut dist);
        loss += mass * crate::numeric::dot(&dist, feedback.zeta_row(s));
    }
    Ok((LinearLoss::new(values), loss))
}

/// One cost-sensitive classification example: a state and a full cost row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscExample {
    #[serde(rename = "s")]
    pub state: usize,
    #[serde(rename = "c")]
    pub costs: Vec<f64>,
}

/// Ordered multiset of examples; empirical expectations average uniformly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    examples: Vec<CscExample>,
}

impl Dataset {
    pub fn new(examples: Vec<CscExample>) -> Self {
        Self { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CscExample> {
        self.examples.iter()
    }

    pub fn examples(&self) -> &[CscExample] {
        &self.examples
    }

    /// One example per line, `{"s": state, "c": [costs]}`.
    pub fn to_jsonl_string(&self) -> String {
        let mut out = String::new();
        for example in &self.examples {
            out.push_str(&serde_json::to_string(example).expect("examples serialize infallibly"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl_str(text: &str) -> Result<Self> {
        let mut examples = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            examples.push(serde_json::from_str(line)?);
        }
        Ok(Self { examples })
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a CscExample;
    type IntoIter = std::slice::Iter<'a, CscExample>;
    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

/// Loss vector over a policy class, one entry per member.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLoss {
    values: Vec<f64>,
}

impl LinearLoss {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Inner product with a mixture weight of the same dimension.
    pub fn dot(&self, weight: &MixedWeight) -> f64 {
        debug_assert_eq!(self.dim(), weight.dim());
        crate::numeric::dot(&self.values, weight.as_slice())
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
    }
}

/// Draws `k` iid examples from the annotated occupancy of `roll_policy`.
///
/// Each example comes from a fresh trajectory: one step is selected uniformly
/// and the visited state is emitted with its full annotation row, so states
/// are exact iid draws from the averaged occupancy. Sampling more than one
/// state per trajectory would correlate examples within a round and break
/// the independence the concentration arguments rely on.
pub fn sample_dataset<P>(
    mdp: &LayeredMdp,
    feedback: &ExpertFeedback,
    roll_policy: &P,
    k: usize,
    seed: u64,
) -> Result<Dataset>
where
    P: PolicyView + ?Sized,
{
    if k == 0 {
        return Err(Error::InvalidParam("sample budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(k);
    for _ in 0..k {
        let trajectory = rollout(mdp, roll_policy, &mut rng)?;
        let t = rand::Rng::gen_range(&mut rng, 0..mdp.horizon());
        let state = trajectory.states[t];
        examples.push(CscExample { state, costs: feedback.zeta_row(state).to_vec() });
    }
    Ok(Dataset::new(examples))
}

/// Empirical loss vector of a dataset: `g[h] = mean cost of h's action`.
pub fn linear_loss_of(dataset: &Dataset, class: &PolicyClass) -> Result<LinearLoss> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("cannot form a loss vector from zero examples"));
    }
    let mut totals = vec![0.0f64; class.size()];
    for example in dataset {
        if example.state >= class.num_states() {
            return Err(Error::StateOutOfRange { state: example.state, states: class.num_states() });
        }
        if example.costs.len() != class.num_actions() {
            return Err(Error::DimensionMismatch(format!(
                "example at state {} carries {} costs, class acts over {} actions",
                example.state,
                example.costs.len(),
                class.num_actions()
            )));
        }
        for (h, member) in class.members().iter().enumerate() {
            totals[h] += example.costs[member.action(example.state)];
        }
    }
    let k = dataset.len() as f64;
    Ok(LinearLoss::new(totals.into_iter().map(|t| t / k).collect()))
}
