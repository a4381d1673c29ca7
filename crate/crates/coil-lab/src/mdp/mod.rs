//! Layered episodic MDPs with dense tabular dynamics.
//!
//! A layered MDP with horizon `H` partitions its states into `H` disjoint
//! layers; every trajectory visits exactly one state per layer, so each state
//! belongs to a unique time step. Transition rows are stored per step with
//! layer-local indices (`P[t][s][a]` is a distribution over layer `t+1`),
//! which makes layering structural: an instance that type-checks cannot jump
//! layers. Costs are per global state/action pair and may take any finite
//! value; the observed range is recorded at construction.

pub(crate) mod dp;
pub(crate) mod rollout;

pub use dp::{evaluate, occupancy, recoverability, OccupancyProfile, ValueProfile};
pub use rollout::{rollout, rollout_seeded, Trajectory};

use serde::{Deserialize, Serialize};

/// Probability rows (initial distribution, transition rows, policy rows) must
/// sum to 1 within this tolerance.
pub const PROB_TOL: f64 = 1e-9;

/// First invariant violated by a raw MDP description.
///
/// Coordinates use the step index `t` (0-based), the layer-local state index
/// for transition rows, and the global state index for costs and the initial
/// distribution.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MdpViolation {
    #[error("horizon must be at least 1")]
    HorizonZero,
    #[error("expected {expected} layers, got {got}")]
    LayerCount { expected: usize, got: usize },
    #[error("layer {layer} is empty")]
    EmptyLayer { layer: usize },
    #[error("action count must be at least 1")]
    NoActions,
    #[error("initial distribution has length {got}, first layer has {expected} states")]
    InitialLength { expected: usize, got: usize },
    #[error("initial probability of state {state} is {value}")]
    NegativeInitial { state: usize, value: f64 },
    #[error("initial distribution sums to {sum}, not 1")]
    InitialSum { sum: f64 },
    #[error("expected {expected} transition steps, got {got}")]
    TransitionSteps { expected: usize, got: usize },
    #[error("step {step}: expected rows for {expected} states, got {got}")]
    TransitionStates { step: usize, expected: usize, got: usize },
    #[error("step {step}, local state {state}: expected {expected} action rows, got {got}")]
    TransitionActions { step: usize, state: usize, expected: usize, got: usize },
    #[error(
        "step {step}, local state {state}, action {action}: row targets {got} states, layer {next_layer} has {expected}"
    )]
    TransitionRowLength { step: usize, state: usize, action: usize, next_layer: usize, expected: usize, got: usize },
    #[error("step {step}, local state {state}, action {action}: probability of successor {next} is {value}")]
    NegativeTransition { step: usize, state: usize, action: usize, next: usize, value: f64 },
    #[error("step {step}, local state {state}, action {action}: row sums to {sum}, not 1")]
    TransitionRowSum { step: usize, state: usize, action: usize, sum: f64 },
    #[error("expected cost rows for {expected} states, got {got}")]
    CostStates { expected: usize, got: usize },
    #[error("state {state}: expected {expected} cost entries, got {got}")]
    CostRowLength { state: usize, expected: usize, got: usize },
    #[error("cost of state {state}, action {action} is {value}; costs must be finite")]
    NonFiniteCost { state: usize, action: usize, value: f64 },
}

/// Raw, serializable MDP description.
///
/// This is the on-disk JSON schema. Anything structurally representable can
/// be held here; [`MdpSpec::build`] validates and produces a [`LayeredMdp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpSpec {
    /// Horizon (number of layers).
    #[serde(rename = "H")]
    pub h: usize,
    /// State names per layer; global indices run layer by layer.
    pub layers: Vec<Vec<String>>,
    /// Number of actions, shared by every state.
    #[serde(rename = "A")]
    pub a: usize,
    /// Initial distribution over the first layer.
    pub rho: Vec<f64>,
    /// `p[t][s][a]` is the successor distribution over layer `t+1` for the
    /// layer-local state `s` of layer `t`; `t` ranges over `0..H-1`.
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<Vec<f64>>>>,
    /// `cost[s][a]` for the global state index `s`.
    pub cost: Vec<Vec<f64>>,
}

impl MdpSpec {
    /// Checks every structural and numeric invariant, reporting the first
    /// violation encountered.
    pub fn validate(&self) -> Result<(), MdpViolation> {
        if self.h == 0 {
            return Err(MdpViolation::HorizonZero);
        }
        if self.layers.len() != self.h {
            return Err(MdpViolation::LayerCount { expected: self.h, got: self.layers.len() });
        }
        for (t, layer) in self.layers.iter().enumerate() {
            if layer.is_empty() {
                return Err(MdpViolation::EmptyLayer { layer: t });
            }
        }
        if self.a == 0 {
            return Err(MdpViolation::NoActions);
        }

        if self.rho.len() != self.layers[0].len() {
            return Err(MdpViolation::InitialLength { expected: self.layers[0].len(), got: self.rho.len() });
        }
        for (s, &v) in self.rho.iter().enumerate() {
            if !(v >= 0.0) {
                return Err(MdpViolation::NegativeInitial { state: s, value: v });
            }
        }
        let rho_sum: f64 = self.rho.iter().sum();
        if !((rho_sum - 1.0).abs() <= PROB_TOL) {
            return Err(MdpViolation::InitialSum { sum: rho_sum });
        }

        if self.p.len() != self.h - 1 {
            return Err(MdpViolation::TransitionSteps { expected: self.h - 1, got: self.p.len() });
        }
        for (t, step_rows) in self.p.iter().enumerate() {
            let here = self.layers[t].len();
            let next = self.layers[t + 1].len();
            if step_rows.len() != here {
                return Err(MdpViolation::TransitionStates { step: t, expected: here, got: step_rows.len() });
            }
            for (s, action_rows) in step_rows.iter().enumerate() {
                if action_rows.len() != self.a {
                    return Err(MdpViolation::TransitionActions {
                        step: t,
                        state: s,
                        expected: self.a,
                        got: action_rows.len(),
                    });
                }
                for (a, row) in action_rows.iter().enumerate() {
                    if row.len() != next {
                        return Err(MdpViolation::TransitionRowLength {
                            step: t,
                            state: s,
                            action: a,
                            next_layer: t + 1,
                            expected: next,
                            got: row.len(),
                        });
                    }
                    for (n, &v) in row.iter().enumerate() {
                        if !(v >= 0.0) {
                            return Err(MdpViolation::NegativeTransition {
                                step: t,
                                state: s,
                                action: a,
                                next: n,
                                value: v,
                            });
                        }
                    }
                    let sum: f64 = row.iter().sum();
                    if !((sum - 1.0).abs() <= PROB_TOL) {
                        return Err(MdpViolation::TransitionRowSum { step: t, state: s, action: a, sum });
                    }
                }
            }
        }

        let states: usize = self.layers.iter().map(Vec::len).sum();
        if self.cost.len() != states {
            return Err(MdpViolation::CostStates { expected: states, got: self.cost.len() });
        }
        for (s, row) in self.cost.iter().enumerate() {
            if row.len() != self.a {
                return Err(MdpViolation::CostRowLength { state: s, expected: self.a, got: row.len() });
            }
            for (a, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MdpViolation::NonFiniteCost { state: s, action: a, value: v });
                }
            }
        }
        Ok(())
    }

    /// Validates and assembles the instance.
    pub fn build(&self) -> Result<LayeredMdp, MdpViolation> {
        self.validate()?;
        let mut layer_start = Vec::with_capacity(self.h + 1);
        let mut acc = 0;
        for layer in &self.layers {
            layer_start.push(acc);
            acc += layer.len();
        }
        layer_start.push(acc);
        let state_names: Vec<String> = self.layers.iter().flatten().cloned().collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &self.cost {
            for &v in row {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok(LayeredMdp {
            horizon: self.h,
            actions: self.a,
            layer_start,
            state_names,
            rho: self.rho.clone(),
            transitions: self.p.clone(),
            cost: self.cost.clone(),
            cost_range: (lo, hi),
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("MDP description serializes infallibly")
    }
}

/// Validated layered episodic MDP.
#[derive(Debug, Clone)]
pub struct LayeredMdp {
    horizon: usize,
    actions: usize,
    /// Global index of the first state of each layer, plus a final sentinel
    /// equal to the total state count.
    layer_start: Vec<usize>,
    state_names: Vec<String>,
    rho: Vec<f64>,
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
    cost: Vec<Vec<f64>>,
    cost_range: (f64, f64),
}

impl LayeredMdp {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        *self.layer_start.last().expect("layer_start always has a sentinel")
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        (0..self.horizon).map(|t| self.layer_start[t + 1] - self.layer_start[t]).collect()
    }

    /// Global index range of the states in layer `t`.
    pub fn layer_range(&self, t: usize) -> std::ops::Range<usize> {
        self.layer_start[t]..self.layer_start[t + 1]
    }

    /// Layer (time step) of a global state index.
    pub fn layer_of(&self, state: usize) -> usize {
        debug_assert!(state < self.num_states());
        // layer_start is sorted; partition_point finds the containing layer.
        self.layer_start.partition_point(|&start| start <= state) - 1
    }

    pub fn global_index(&self, layer: usize, local: usize) -> usize {
        self.layer_start[layer] + local
    }

    pub fn local_index(&self, state: usize) -> usize {
        state - self.layer_start[self.layer_of(state)]
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.state_names[state]
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.rho
    }

    /// Successor distribution over layer `t+1` for the layer-local state
    /// `local` of layer `t` under the given action.
    pub fn transition_row(&self, t: usize, local: usize, action: usize) -> &[f64] {
        &self.transitions[t][local][action]
    }

    pub fn cost(&self, state: usize, action: usize) -> f64 {
        self.cost[state][action]
    }

    pub fn cost_row(&self, state: usize) -> &[f64] {
        &self.cost[state]
    }

    /// Minimum and maximum cost entry, recorded at construction. Costs are
    /// not restricted to [0, 1]; consumers that assume a range must check it.
    pub fn cost_range(&self) -> (f64, f64) {
        self.cost_range
    }

    /// Round-trips back to the raw description.
    pub fn to_spec(&self) -> MdpSpec {
        let layers: Vec<Vec<String>> = (0..self.horizon)
            .map(|t| self.layer_range(t).map(|s| self.state_names[s].clone()).collect())
            .collect();
        MdpSpec {
            h: self.horizon,
            layers,
            a: self.actions,
            rho: self.rho.clone(),
            p: self.transitions.clone(),
            cost: self.cost.clone(),
        }
    }
}

/// Read access to a policy's per-state action distribution.
///
/// Policies are defined over global state indices. `fill_action_dist` writes
/// a probability vector of length `A` into the caller's buffer; callers check
/// [`PolicyView::compatible_with`] against the MDP shape first.
pub trait PolicyView {
    fn num_states(&self) -> usize;

    /// Writes the action distribution at the given global state into `buf`
    /// (length `A`, zero-initialized by the caller is not required: the
    /// implementation must overwrite every entry).
    fn fill_action_dist(&self, state: usize, buf: &mut [f64]);

    /// Structural check against an `(S, A)` shape.
    fn compatible_with(&self, states: usize, actions: usize) -> bool;
}

impl<P: PolicyView + ?Sized> PolicyView for &P {
    fn num_states(&self) -> usize {
        (**self).num_states()
    }
    fn fill_action_dist(&self, state: usize, buf: &mut [f64]) {
        (**self).fill_action_dist(state, buf)
    }
    fn compatible_with(&self, states: usize, actions: usize) -> bool {
        (**self).compatible_with(states, actions)
    }
}

/// Deterministic policy: one action per global state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DetPolicy {
    actions: Vec<usize>,
}

impl DetPolicy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self { actions }
    }

    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}

impl PolicyView for DetPolicy {
    fn num_states(&self) -> usize {
        self.actions.len()
    }

    fn fill_action_dist(&self, state: usize, buf: &mut [f64]) {
        buf.fill(0.0);
        buf[self.actions[state]] = 1.0;
    }

    fn compatible_with(&self, states: usize, actions: usize) -> bool {
        self.actions.len() == states && self.actions.iter().all(|&a| a < actions)
    }
}

/// Explicit stochastic policy: one probability row per global state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TabularPolicy {
    rows: Vec<Vec<f64>>,
}

impl TabularPolicy {
    /// Each row must be a probability vector (nonnegative, sums to 1 within
    /// the shared tolerance). Rows are stored as given, not renormalized.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, crate::Error> {
        for (s, row) in rows.iter().enumerate() {
            if row.iter().any(|&v| !(v >= 0.0)) {
                return Err(crate::Error::InvalidWeight(format!(
                    "policy row for state {s} has a negative or NaN entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(crate::Error::InvalidWeight(format!(
                    "policy row for state {s} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

impl PolicyView for TabularPolicy {
    fn num_states(&self) -> usize {
        self.rows.len()
    }

    fn fill_action_dist(&self, state: usize, buf: &mut [f64]) {
        buf.copy_from_slice(&self.rows[state]);
    }

    fn compatible_with(&self, states: usize, actions: usize) -> bool {
        self.rows.len() == states && self.rows.iter().all(|r| r.len() == actions)
    }
}

pub(crate) fn check_policy_shape<P: PolicyView + ?Sized>(
    mdp: &LayeredMdp,
    pi: &P,
    what: &str,
) -> Result<(), crate::Error> {
    if pi.compatible_with(mdp.num_states(), mdp.num_actions()) {
        Ok(())
    } else {
        Err(crate::Error::DimensionMismatch(format!(
            "{what}: policy covers {} states, MDP has {} states and {} actions",
            pi.num_states(),
            mdp.num_states(),
            mdp.num_actions()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-layer chain: one start state, two terminal states, two actions.
    /// Action 0 moves to T0 with probability 0.75, action 1 is the reverse.
    pub(crate) fn two_layer_spec() -> MdpSpec {
        MdpSpec {
            h: 2,
            layers: vec![vec!["start".into()], vec!["t0".into(), "t1".into()]],
            a: 2,
            rho: vec![1.0],
            p: vec![vec![vec![vec![0.75, 0.25], vec![0.25, 0.75]]]],
            cost: vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![5.0, -1.0]],
        }
    }

    #[test]
    fn builds_a_valid_instance_and_indexes_layers() {
        let mdp = two_layer_spec().build().unwrap();
        assert_eq!(mdp.horizon(), 2);
        assert_eq!(mdp.num_states(), 3);
        assert_eq!(mdp.num_actions(), 2);
        assert_eq!(mdp.layer_sizes(), vec![1, 2]);
        assert_eq!(mdp.layer_range(1), 1..3);
        assert_eq!(mdp.layer_of(0), 0);
        assert_eq!(mdp.layer_of(1), 1);
        assert_eq!(mdp.layer_of(2), 1);
        assert_eq!(mdp.local_index(2), 1);
        assert_eq!(mdp.global_index(1, 1), 2);
        assert_eq!(mdp.state_name(2), "t1");
        assert_eq!(mdp.cost_range(), (-1.0, 5.0));
    }

    #[test]
    fn rejects_bad_initial_distribution() {
        let mut spec = two_layer_spec();
        spec.rho = vec![0.9999];
        assert_eq!(spec.validate(), Err(MdpViolation::InitialSum { sum: 0.9999 }));

        spec.rho = vec![1.0, 0.0];
        assert_eq!(spec.validate(), Err(MdpViolation::InitialLength { expected: 1, got: 2 }));

        spec.rho = vec![-0.1];
        assert!(matches!(spec.validate(), Err(MdpViolation::NegativeInitial { state: 0, .. })));
    }

    #[test]
    fn rejects_bad_transition_rows_with_coordinates() {
        let mut spec = two_layer_spec();
        spec.p[0][0][1] = vec![0.5, 0.4];
        assert_eq!(
            spec.validate(),
            Err(MdpViolation::TransitionRowSum { step: 0, state: 0, action: 1, sum: 0.9 })
        );

        let mut spec = two_layer_spec();
        spec.p[0][0][0] = vec![1.1, -0.1];
        assert_eq!(
            spec.validate(),
            Err(MdpViolation::NegativeTransition { step: 0, state: 0, action: 0, next: 1, value: -0.1 })
        );

        let mut spec = two_layer_spec();
        spec.p[0][0][0] = vec![1.0];
        assert_eq!(
            spec.validate(),
            Err(MdpViolation::TransitionRowLength {
                step: 0,
                state: 0,
                action: 0,
                next_layer: 1,
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn rejects_bad_shapes_and_costs() {
        let mut spec = two_layer_spec();
        spec.h = 3;
        assert_eq!(spec.validate(), Err(MdpViolation::LayerCount { expected: 3, got: 2 }));

        let mut spec = two_layer_spec();
        spec.layers[1].clear();
        assert_eq!(spec.validate(), Err(MdpViolation::EmptyLayer { layer: 1 }));

        let mut spec = two_layer_spec();
        spec.cost.pop();
        assert_eq!(spec.validate(), Err(MdpViolation::CostStates { expected: 3, got: 2 }));

        let mut spec = two_layer_spec();
        spec.cost[1] = vec![0.0];
        assert_eq!(spec.validate(), Err(MdpViolation::CostRowLength { state: 1, expected: 2, got: 1 }));

        let mut spec = two_layer_spec();
        spec.cost[2][0] = f64::NAN;
        assert!(matches!(spec.validate(), Err(MdpViolation::NonFiniteCost { state: 2, action: 0, .. })));
    }

    #[test]
    fn tolerates_rounding_noise_in_probability_rows() {
        let mut spec = two_layer_spec();
        spec.p[0][0][0] = vec![0.75, 0.25 + 5e-10];
        assert!(spec.validate().is_ok());
        spec.p[0][0][0] = vec![0.75, 0.25 + 5e-9];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn json_round_trip_preserves_the_instance() {
        let spec = two_layer_spec();
        let text = spec.to_json_string();
        let back = MdpSpec::from_json_str(&text).unwrap();
        assert_eq!(back.to_json_string(), text);
        assert!(back.validate().is_ok());
    }

    #[test]
    fn json_schema_reads_external_field_names() {
        let text = r#"{
            "H": 1,
            "layers": [["only"]],
            "A": 1,
            "rho": [1.0],
            "P": [],
            "cost": [[0.5]]
        }"#;
        let spec = MdpSpec::from_json_str(text).unwrap();
        let mdp = spec.build().unwrap();
        assert_eq!(mdp.horizon(), 1);
        assert_eq!(mdp.cost(0, 0), 0.5);
    }

    #[test]
    fn det_policy_checks_action_range() {
        let mdp = two_layer_spec().build().unwrap();
        let ok = DetPolicy::new(vec![0, 1, 0]);
        assert!(ok.compatible_with(mdp.num_states(), mdp.num_actions()));
        let bad = DetPolicy::new(vec![0, 2, 0]);
        assert!(!bad.compatible_with(mdp.num_states(), mdp.num_actions()));
        let short = DetPolicy::new(vec![0, 1]);
        assert!(!short.compatible_with(mdp.num_states(), mdp.num_actions()));
    }

    #[test]
    fn tabular_policy_validates_rows() {
        assert!(TabularPolicy::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert!(TabularPolicy::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(TabularPolicy::new(vec![vec![1.5, -0.5]]).is_err());
    }
}
