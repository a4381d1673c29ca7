//! Finite benchmark classes of deterministic policies, mixtures over them,
//! the cost-sensitive classification oracle, and separator-set tooling.

use crate::error::{Error, Result};
use crate::imitation::CscExample;
use crate::mdp::{DetPolicy, PolicyView};
use crate::numeric::argmin;
use serde::{Deserialize, Serialize};

/// Entries this far below zero are treated as rounding noise and clamped.
const WEIGHT_NEG_CLAMP: f64 = -1e-12;
/// Weight vectors must sum to 1 within this tolerance before renormalization.
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Ordered, finite class of deterministic policies. The index of a policy is
/// its identity everywhere in the crate (losses, weights, oracle answers).
#[derive(Debug, Clone)]
pub struct PolicyClass {
    members: Vec<DetPolicy>,
    states: usize,
    actions: usize,
    max_action: usize,
}

impl PolicyClass {
    /// Members must be nonempty, agree on the state count, and act within
    /// `actions`. Duplicate members are allowed (query [`duplicate_pair`]).
    ///
    /// [`duplicate_pair`]: PolicyClass::duplicate_pair
    pub fn new(members: Vec<DetPolicy>, actions: usize) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidParam("a policy class needs at least one member".into()));
        };
        let states = first.num_states();
        let mut max_action = 0;
        for (i, member) in members.iter().enumerate() {
            if member.num_states() != states {
                return Err(Error::DimensionMismatch(format!(
                    "class member {i} covers {} states, member 0 covers {states}",
                    member.num_states()
                )));
            }
            for (s, &a) in member.actions().iter().enumerate() {
                if a >= actions {
                    return Err(Error::DimensionMismatch(format!(
                        "class member {i} takes action {a} at state {s}, but only {actions} actions exist"
                    )));
                }
                max_action = max_action.max(a);
            }
        }
        Ok(Self { members, states, actions, max_action })
    }

    /// Number of member policies (the mixture dimension).
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn member(&self, index: usize) -> &DetPolicy {
        &self.members[index]
    }

    pub fn members(&self) -> &[DetPolicy] {
        &self.members
    }

    /// First pair of identical members, if any. Duplicates are legal for
    /// mixtures but make separator sets impossible.
    pub fn duplicate_pair(&self) -> Option<(usize, usize)> {
        for i in 0..self.members.len() {
            for j in (i + 1)..self.members.len() {
                if self.members[i] == self.members[j] {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// View of the mixture policy `sum_h u[h] * h`. Borrows both inputs.
    pub fn mixture<'a>(&'a self, weight: &'a MixedWeight) -> Result<MixedPolicy<'a>> {
        if weight.dim() != self.size() {
            return Err(Error::DimensionMismatch(format!(
                "weight has {} entries, class has {} members",
                weight.dim(),
                self.size()
            )));
        }
        Ok(MixedPolicy { class: self, weight })
    }

    /// Action distribution of the mixture at one state.
    pub fn mixed_action_dist(&self, weight: &MixedWeight, state: usize) -> Result<Vec<f64>> {
        let view = self.mixture(weight)?;
        if state >= self.states {
            return Err(Error::StateOutOfRange { state, states: self.states });
        }
        let mut buf = vec![0.0; self.actions];
        view.fill_action_dist(state, &mut buf);
        Ok(buf)
    }
}

/// Raw, serializable class description: one action list per member.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassSpec {
    pub policies: Vec<Vec<usize>>,
}

impl ClassSpec {
    pub fn build(&self, actions: usize) -> Result<PolicyClass> {
        let members = self.policies.iter().cloned().map(DetPolicy::new).collect();
        PolicyClass::new(members, actions)
    }

    pub fn from_class(class: &PolicyClass) -> Self {
        Self { policies: class.members().iter().map(|m| m.actions().to_vec()).collect() }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("class description serializes infallibly")
    }
}

/// Point of the mixture simplex over a class's members.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedWeight {
    w: Vec<f64>,
}

impl MixedWeight {
    /// Accepts vectors with rounding noise: entries in `[-1e-12, 0)` are
    /// clamped to zero, anything more negative (or NaN) is rejected, and a
    /// total within 1e-9 of 1 is renormalized by division.
    pub fn new(mut w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeight("weight vector is empty".into()));
        }
        for (i, v) in w.iter_mut().enumerate() {
            if !(*v >= WEIGHT_NEG_CLAMP) {
                return Err(Error::InvalidWeight(format!("entry {i} is {v}")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeight(format!("entries sum to {sum}, not 1")));
        }
        if sum != 1.0 {
            for v in &mut w {
                *v /= sum;
            }
        }
        Ok(Self { w })
    }

    /// Uniform mixture over `b` members.
    pub fn uniform(b: usize) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidWeight("weight vector is empty".into()));
        }
        Ok(Self { w: vec![1.0 / b as f64; b] })
    }

    /// Point mass on member `index`.
    pub fn one_hot(b: usize, index: usize) -> Result<Self> {
        if index >= b {
            return Err(Error::InvalidWeight(format!("index {index} out of range for dimension {b}")));
        }
        let mut w = vec![0.0; b];
        w[index] = 1.0;
        Ok(Self { w })
    }

    /// Internal constructor for vectors already known to lie on the simplex.
    pub(crate) fn from_normalized(w: Vec<f64>) -> Self {
        debug_assert!(!w.is_empty());
        debug_assert!(w.iter().all(|&v| v >= 0.0));
        debug_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        Self { w }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.w[index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// Convex combination `alpha * self + (1 - alpha) * other`.
    pub fn blend(&self, other: &MixedWeight, alpha: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "blending weights of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParam(format!("blend coefficient {alpha} outside [0, 1]")));
        }
        let w = self
            .w
            .iter()
            .zip(&other.w)
            .map(|(&a, &b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        MixedWeight::new(w)
    }

    pub fn l1_distance(&self, other: &MixedWeight) -> f64 {
        self.w.iter().zip(&other.w).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// Policy view of a weighted mixture of class members.
#[derive(Debug, Clone, Copy)]
pub struct MixedPolicy<'a> {
    class: &'a PolicyClass,
    weight: &'a MixedWeight,
}

impl PolicyView for MixedPolicy<'_> {
    fn num_states(&self) -> usize {
        self.class.num_states()
    }

    fn fill_action_dist(&self, state: usize, buf: &mut [f64]) {
        buf.fill(0.0);
        for (h, member) in self.class.members().iter().enumerate() {
            buf[member.action(state)] += self.weight.get(h);
        }
    }

    fn compatible_with(&self, states: usize, actions: usize) -> bool {
        self.class.num_states() == states && self.class.max_action < actions
    }
}

/// Set of distinct states witnessing every pairwise difference in a class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatorSet {
    states: Vec<usize>,
}

impl SeparatorSet {
    /// States must be pairwise distinct; order is preserved.
    pub fn new(states: Vec<usize>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &x in &states {
            if !seen.insert(x) {
                return Err(Error::InvalidParam(format!("separator lists state {x} twice")));
            }
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Raw, serializable separator description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatorSpec {
    pub states: Vec<usize>,
}

impl SeparatorSpec {
    pub fn build(&self) -> Result<SeparatorSet> {
        SeparatorSet::new(self.states.clone())
    }

    pub fn from_set(set: &SeparatorSet) -> Self {
        Self { states: set.states().to_vec() }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("separator description serializes infallibly")
    }
}

/// Cost-sensitive classification oracle: index of the class member with the
/// smallest total cost over the example multiset, ties broken toward the
/// lowest index so the oracle is a deterministic function of its input.
///
/// The argmin of the total equals the argmin of the empirical mean; the
/// division is skipped.
pub fn csc_oracle<'a, I>(examples: I, class: &PolicyClass) -> Result<usize>
where
    I: IntoIterator<Item = &'a CscExample>,
{
    let mut totals = vec![0.0f64; class.size()];
    let mut count = 0usize;
    for example in examples {
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
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyDataset("classification oracle needs at least one example"));
    }
    Ok(argmin(&totals).expect("class is nonempty"))
}

/// Checks that every pair of distinct members disagrees on some separator
/// state. Returns the first failing pair.
pub fn verify_separator(class: &PolicyClass, separator: &SeparatorSet) -> Result<()> {
    for &x in separator.states() {
        if x >= class.num_states() {
            return Err(Error::StateOutOfRange { state: x, states: class.num_states() });
        }
    }
    for i in 0..class.size() {
        for j in (i + 1)..class.size() {
            let (hi, hj) = (class.member(i), class.member(j));
            let separated = separator.states().iter().any(|&x| hi.action(x) != hj.action(x));
            if !separated {
                return Err(Error::SeparatorUnseparated { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Greedy set cover over unseparated pairs: repeatedly picks the candidate
/// state distinguishing the most still-unseparated pairs (ties toward the
/// earliest candidate). Fails on duplicate members, for which no separator
/// exists, and on candidate pools that cannot finish the cover.
pub fn greedy_separator(class: &PolicyClass, candidates: &[usize]) -> Result<SeparatorSet> {
    for &x in candidates {
        if x >= class.num_states() {
            return Err(Error::StateOutOfRange { state: x, states: class.num_states() });
        }
    }
    if let Some((first, second)) = class.duplicate_pair() {
        return Err(Error::InseparableClass { first, second });
    }

    let mut uncovered: Vec<(usize, usize)> = (0..class.size())
        .flat_map(|i| ((i + 1)..class.size()).map(move |j| (i, j)))
        .collect();
    let mut pool: Vec<usize> = candidates.to_vec();
    pool.dedup();
    let mut chosen = Vec::new();

    while !uncovered.is_empty() {
        let mut best: Option<(usize, usize)> = None; // (pool position, pairs covered)
        for (pos, &x) in pool.iter().enumerate() {
            let covered = uncovered
                .iter()
                .filter(|&&(i, j)| class.member(i).action(x) != class.member(j).action(x))
                .count();
            if covered > best.map_or(0, |(_, c)| c) {
                best = Some((pos, covered));
            }
        }
        let Some((pos, _)) = best else {
            // Some pair differs only outside the candidate pool.
            let (first, second) = uncovered[0];
            return Err(Error::SeparatorUnseparated { first, second });
        };
        let x = pool.remove(pos);
        uncovered.retain(|&(i, j)| class.member(i).action(x) == class.member(j).action(x));
        chosen.push(x);
    }
    SeparatorSet::new(chosen)
}
