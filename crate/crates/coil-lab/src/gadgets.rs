//! Constructive worked instances.
//!
//! Two families live here, both small enough to reason about by hand yet
//! sharp enough to exercise every claim the rest of the crate makes:
//!
//! * [`make_cover_mdp`] — a two-branch episodic MDP on which every
//!   deterministic committee member disagrees with the expert somewhere it
//!   matters.  Any algorithm forced to commit to a single committee member
//!   each round pays static regret linear in the round count, while mixtures
//!   do fine.  This is the canonical separation between proper and improper
//!   online imitation.
//!
//! * [`map_f`] / [`map_g`] — an embedding of a two-player normalized matrix
//!   game into a three-layer tree MDP such that the exact linear losses seen
//!   by the logger reproduce an affine image of the game's payoff operator
//!   ([`theta_closed_form`]).  Weights whose induced variational-inequality
//!   gap ([`vi_gap`]) is small convert, via half-mass normalization
//!   ([`map_g`]), into strategy pairs with small Nash gap
//!   ([`nash_gap`]).  Finding low-dynamic-regret play is therefore at least
//!   as hard as finding approximate equilibria.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{MixedWeight, PolicyClass};
use crate::error::{BalanceCheck, Error, Result};
use crate::imitation::{make_feedback, ExpertFeedback, FeedbackKind, LinearLoss};
use crate::mdp::dp::{evaluate, occupancy};
use crate::mdp::{DetPolicy, LayeredMdp, MdpSpec, PolicyView};
use crate::numeric::{dot, project_simplex, Neumaier};

/// Large constant cost placed on "both players picked the same side" leaves
/// of the reduction MDP.  Chosen so imbalanced weights are provably far from
/// any variational-inequality solution.
pub const LAMBDA: f64 = 54.0;

/// Half-mass product below which a weight cannot be an approximate
/// variational-inequality solution of a reduction instance.
pub const BALANCE_FLOOR: f64 = 2.0 / 9.0;

// ---------------------------------------------------------------------------
// The two-branch cover instance
// ---------------------------------------------------------------------------

/// A two-branch instance packaged with its expert and its two-member
/// committee.
///
/// Layout: a single start state, then each later layer holds one "left" and
/// one "right" branch state.  The first action taken selects the branch;
/// afterwards both actions stay inside the branch.  The left branch charges
/// for playing action 0, the right branch for playing action 1, and the start
/// state is free.  The expert enters the left branch and then plays the free
/// action, so its total cost is zero, while each committee member pays 1 per
/// step once its branch disagrees with it.
#[derive(Debug, Clone)]
pub struct CoverGadget {
    /// The layered MDP (`1 + 2·(H−1)` states, 2 actions).
    pub mdp: LayeredMdp,
    /// Expert: left at the start, then the free action of each branch.
    pub expert: DetPolicy,
    /// Committee `{always-0, always-1}`.
    pub class: PolicyClass,
    /// Present when the horizon is too short for the proper-play lower bound
    /// to have any force (it needs `H ≥ 3`).
    pub note: Option<String>,
}

impl CoverGadget {
    /// Global index of the left-branch state at layer `t` (`1 ≤ t < H`).
    pub fn left_state(&self, t: usize) -> usize {
        assert!(t >= 1 && t < self.mdp.horizon(), "branch states live at layers 1..H-1");
        1 + 2 * (t - 1)
    }

    /// Global index of the right-branch state at layer `t` (`1 ≤ t < H`).
    pub fn right_state(&self, t: usize) -> usize {
        self.left_state(t) + 1
    }

    /// Averaged occupancy aggregated to the three logical states
    /// `(start, left, right)`.
    pub fn logical_occupancy<P: PolicyView + ?Sized>(&self, pi: &P) -> Result<[f64; 3]> {
        let profile = occupancy(&self.mdp, pi)?;
        let mut left = Neumaier::new();
        let mut right = Neumaier::new();
        for t in 1..self.mdp.horizon() {
            left.add(profile.averaged[self.left_state(t)]);
            right.add(profile.averaged[self.right_state(t)]);
        }
        Ok([profile.averaged[0], left.value(), right.value()])
    }
}

/// Builds the two-branch cover instance with horizon `h`.
///
/// Accepts any `h ≥ 2`; for `h == 2` the returned [`CoverGadget::note`]
/// records that the proper-play lower bound is vacuous at that horizon.
pub fn make_cover_mdp(h: usize) -> Result<CoverGadget> {
    if h < 2 {
        return Err(Error::InvalidParam(format!(
            "two-branch instance needs horizon at least 2, got {h}"
        )));
    }

    let mut layers = vec![vec!["start".to_string()]];
    for t in 1..h {
        layers.push(vec![format!("left@{t}"), format!("right@{t}")]);
    }

    // Layer 0: action 0 enters the left branch, action 1 the right branch.
    let mut p = vec![vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]]];
    // Later layers: both actions keep the current branch.
    for _ in 1..h.saturating_sub(1) {
        p.push(vec![
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        ]);
    }

    let mut cost = vec![vec![0.0, 0.0]];
    let mut expert_actions = vec![0usize];
    for _ in 1..h {
        cost.push(vec![1.0, 0.0]); // left branch: action 0 costs 1
        cost.push(vec![0.0, 1.0]); // right branch: action 1 costs 1
        expert_actions.push(1); // expert plays the free action of each branch
        expert_actions.push(0);
    }

    let spec = MdpSpec { h, layers, a: 2, rho: vec![1.0], p, cost };
    let mdp = spec.build()?;
    let states = mdp.num_states();
    let class = PolicyClass::new(
        vec![DetPolicy::new(vec![0; states]), DetPolicy::new(vec![1; states])],
        2,
    )?;
    let note = (h == 2).then(|| {
        "horizon 2: committee members tie with mixtures here; the proper-play \
         lower bound needs horizon at least 3"
            .to_string()
    });
    Ok(CoverGadget { mdp, expert: DetPolicy::new(expert_actions), class, note })
}

/// Compares two readings of a trajectory-level coin-flip mixture on the
/// two-branch instance at the uniform weight.
///
/// Returns `(lhs, rhs)` where `lhs` is the true cost gap of the coin-flip
/// execution (flip once, run that member for the whole episode) against the
/// expert, and `rhs` is `H` times the per-state linear loss that the logger's
/// bilinear bookkeeping would assign to the same weight.  The two differ —
/// `lhs = H−1` while `rhs = (H−1)/2` — precisely because the coin-flip
/// execution is not a stationary per-step mixture, so the cost-gap identity
/// that powers the reduction does not apply to it.
///
/// `lhs` is computed by exact policy evaluation of both members; `rhs` is
/// returned in closed form because it is an exact half-integer while the
/// occupancy-mixing route carries float rounding (the unit tests pin that
/// route to the closed form within 1e-9).
pub fn alt_mixture_discrepancy(h: usize) -> Result<(f64, f64)> {
    let gadget = make_cover_mdp(h)?;
    let j_left = evaluate(&gadget.mdp, gadget.class.member(0))?.j;
    let j_right = evaluate(&gadget.mdp, gadget.class.member(1))?.j;
    let j_expert = evaluate(&gadget.mdp, &gadget.expert)?.j;
    let lhs = 0.5 * j_left + 0.5 * j_right - j_expert;
    let rhs = 0.5 * lhs;
    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------
// Bimatrix games
// ---------------------------------------------------------------------------

/// A positively normalized two-player matrix game: both payoff matrices are
/// `m × m` with entries in `[0, 1]`; the row player collects `xᵀVy`, the
/// column player `xᵀWy`.
#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixGame {
    m: usize,
    v: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
}

/// On-disk form of a [`BimatrixGame`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSpec {
    /// Actions per player.
    pub m: usize,
    /// Row player's payoff matrix.
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    /// Column player's payoff matrix.
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
}

impl GameSpec {
    /// Validates and builds the game.
    pub fn build(&self) -> Result<BimatrixGame> {
        let game = BimatrixGame::new(self.v.clone(), self.w.clone())?;
        if game.m() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "game spec declares m = {}, matrices are {}x{}",
                self.m,
                game.m(),
                game.m()
            )));
        }
        Ok(game)
    }

    /// Captures an existing game.
    pub fn from_game(game: &BimatrixGame) -> Self {
        GameSpec { m: game.m(), v: game.v.clone(), w: game.w.clone() }
    }

    /// Parses the JSON form `{"m": …, "V": [[…]], "W": [[…]]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Serializes to JSON.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("game spec serializes")
    }
}

fn check_matrix(which: &'static str, m: usize, matrix: &[Vec<f64>]) -> Result<()> {
    if matrix.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{which} has {} rows, expected {m}",
            matrix.len()
        )));
    }
    for (row, entries) in matrix.iter().enumerate() {
        if entries.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{which} row {row} has {} entries, expected {m}",
                entries.len()
            )));
        }
        for (col, &value) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::GameNotNormalized { which, row, col, value });
            }
        }
    }
    Ok(())
}

impl BimatrixGame {
    /// Validates shapes and normalization and builds the game.
    pub fn new(v: Vec<Vec<f64>>, w: Vec<Vec<f64>>) -> Result<Self> {
        let m = v.len();
        if m == 0 {
            return Err(Error::InvalidParam("game needs at least one action".into()));
        }
        check_matrix("V", m, &v)?;
        check_matrix("W", m, &w)?;
        Ok(BimatrixGame { m, v, w })
    }

    /// Actions per player.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Row player's payoff matrix.
    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// Column player's payoff matrix.
    pub fn w(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// `(xᵀVy, xᵀWy)` for mixed strategies `x`, `y`.
    pub fn payoffs(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
        check_strategy("x", self.m, x)?;
        check_strategy("y", self.m, y)?;
        let mut row = Neumaier::new();
        let mut col = Neumaier::new();
        for i in 0..self.m {
            row.add(x[i] * dot(&self.v[i], y));
            col.add(x[i] * dot(&self.w[i], y));
        }
        Ok((row.value(), col.value()))
    }
}

fn check_strategy(which: &str, m: usize, s: &[f64]) -> Result<()> {
    if s.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "strategy {which} has length {}, expected {m}",
            s.len()
        )));
    }
    let mut sum = Neumaier::new();
    for &v in s {
        if !(v >= 0.0) {
            return Err(Error::InvalidWeight(format!(
                "strategy {which} has negative entry {v}"
            )));
        }
        sum.add(v);
    }
    if (sum.value() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidWeight(format!(
            "strategy {which} sums to {}, expected 1",
            sum.value()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Game → MDP embedding
// ---------------------------------------------------------------------------

/// A three-layer tree MDP whose exact linear losses reproduce an affine image
/// of a matrix game's payoff operator.
///
/// Shape: one root, `A = 2m+1` middle states (one per action), `A²` leaves
/// (one per middle-state/action pair).  All cost sits on the leaves: zero if
/// either index is the reserved expert action, `−V`/`−W` payoff entries on
/// the cross-player blocks, and the constant [`LAMBDA`] when both indices
/// fall in the same player's half.  The committee holds the `2m` constant
/// policies (one per non-expert action), the expert always plays the reserved
/// last action, and the feedback is the expert's exact advantage table.
#[derive(Debug, Clone)]
pub struct ReductionInstance {
    /// The embedded game.
    pub game: BimatrixGame,
    /// The generated tree MDP.
    pub mdp: LayeredMdp,
    /// Expert: the reserved last action everywhere.
    pub expert: DetPolicy,
    /// Exact advantage feedback of the expert on this MDP.
    pub feedback: ExpertFeedback,
    /// The `2m` constant policies.
    pub class: PolicyClass,
    /// Block matrix `[[λ·1, −V], [−Wᵀ, λ·1]]`; the exact linear loss at
    /// weight `u` is `⅓·C·u`.
    pub c: Vec<Vec<f64>>,
    /// The constant cost on same-half leaves (always [`LAMBDA`]).
    pub lambda: f64,
    /// Actions per player in the embedded game.
    pub m: usize,
    /// Gap threshold `(S+A+B)^{−6}` below which a weight counts as an
    /// approximate variational-inequality solution of this instance.
    pub vi_epsilon: f64,
}

/// Leaf cost of the embedding: row `i0` is the middle state's action index,
/// `j0` the action taken there (both 0-based; `last = 2m` is the reserved
/// expert action).
fn leaf_cost(m: usize, v: &[Vec<f64>], w: &[Vec<f64>], i0: usize, j0: usize) -> f64 {
    let last = 2 * m;
    if i0 == last || j0 == last {
        0.0
    } else if i0 >= m && j0 < m {
        -v[j0][i0 - m]
    } else if i0 < m && j0 >= m {
        -w[i0][j0 - m]
    } else {
        LAMBDA
    }
}

/// Embeds a positively normalized game into a three-layer tree MDP.
pub fn map_f(game: &BimatrixGame) -> Result<ReductionInstance> {
    let m = game.m();
    let a = 2 * m + 1;
    let b = 2 * m;

    let layers = vec![
        vec!["root".to_string()],
        (0..a).map(|i| format!("mid{i}")).collect(),
        (0..a)
            .flat_map(|i| (0..a).map(move |j| format!("leaf{i}-{j}")))
            .collect(),
    ];

    // Deterministic tree transitions: root --a_i--> mid i --a_j--> leaf (i, j).
    let one_hot_row = |hit: usize, len: usize| {
        let mut row = vec![0.0; len];
        row[hit] = 1.0;
        row
    };
    let p = vec![
        vec![(0..a).map(|i| one_hot_row(i, a)).collect::<Vec<_>>()],
        (0..a)
            .map(|i| (0..a).map(|j| one_hot_row(i * a + j, a * a)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    ];

    let mut cost = vec![vec![0.0; a]];
    cost.extend(std::iter::repeat_with(|| vec![0.0; a]).take(a));
    for i0 in 0..a {
        for j0 in 0..a {
            cost.push(vec![leaf_cost(m, game.v(), game.w(), i0, j0); a]);
        }
    }

    let spec = MdpSpec { h: 3, layers, a, rho: vec![1.0], p, cost };
    let mdp = spec.build()?;
    let states = mdp.num_states();

    let expert = DetPolicy::new(vec![a - 1; states]);
    let feedback = make_feedback(&mdp, &expert, FeedbackKind::Advantage)?;
    let class = PolicyClass::new(
        (0..b).map(|j| DetPolicy::new(vec![j; states])).collect(),
        a,
    )?;

    let mut c = vec![vec![0.0; b]; b];
    #[allow(clippy::needless_range_loop)]
    for r in 0..b {
        for col in 0..b {
            // Same-half pairs sit on the two λ·1 diagonal blocks.
            c[r][col] = if (r < m) == (col < m) {
                LAMBDA
            } else if r < m {
                -game.v()[r][col - m]
            } else {
                -game.w()[col][r - m]
            };
        }
    }

    let vi_epsilon = ((states + a + b) as f64).powi(-6);
    Ok(ReductionInstance {
        game: game.clone(),
        mdp,
        expert,
        feedback,
        class,
        c,
        lambda: LAMBDA,
        m,
        vi_epsilon,
    })
}

/// Exact linear loss of a reduction instance at weight `u`, in closed form:
/// `⅓·C·u`.  Agrees with the occupancy-based route to float precision.
pub fn theta_closed_form(instance: &ReductionInstance, u: &MixedWeight) -> Result<LinearLoss> {
    let b = instance.c.len();
    if u.dim() != b {
        return Err(Error::DimensionMismatch(format!(
            "weight has dimension {}, instance committee has {b}",
            u.dim()
        )));
    }
    let values = instance
        .c
        .iter()
        .map(|row| dot(row, u.as_slice()) / 3.0)
        .collect();
    Ok(LinearLoss::new(values))
}

// ---------------------------------------------------------------------------
// Weights ↔ strategies
// ---------------------------------------------------------------------------

/// Half-mass diagnostic of a weight over an even-sized committee.
pub fn balance_check(u: &MixedWeight) -> Result<BalanceCheck> {
    let b = u.dim();
    if b == 0 || !b.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "half-mass split needs an even committee, got size {b}"
        )));
    }
    let m = b / 2;
    let mut x = Neumaier::new();
    let mut y = Neumaier::new();
    for (i, &v) in u.as_slice().iter().enumerate() {
        if i < m {
            x.add(v);
        } else {
            y.add(v);
        }
    }
    let (x_mass, y_mass) = (x.value(), y.value());
    let product = x_mass * y_mass;
    Ok(BalanceCheck { x_mass, y_mass, product, flagged: product < BALANCE_FLOOR })
}

/// Converts a weight over a `2m`-member committee into a strategy pair by
/// normalizing each half.  Fails with the balance diagnostic when a half has
/// no mass.
pub fn map_g(u: &MixedWeight) -> Result<(Vec<f64>, Vec<f64>)> {
    let check = balance_check(u)?;
    if check.x_mass <= 0.0 || check.y_mass <= 0.0 {
        return Err(Error::UnbalancedWeight(check));
    }
    let m = u.dim() / 2;
    let x = u.as_slice()[..m].iter().map(|&v| v / check.x_mass).collect();
    let y = u.as_slice()[m..].iter().map(|&v| v / check.y_mass).collect();
    Ok((x, y))
}

/// Variational-inequality gap of weight `u` against the loss vector
/// `theta = θ(u)`: `⟨θ(u), u⟩ − min_h θ(u)[h]`.  `u` solves the instance to
/// accuracy `ε` exactly when this gap is at most `ε` (vertex deviations
/// suffice by linearity).
pub fn vi_gap(theta: &LinearLoss, u: &MixedWeight) -> Result<f64> {
    if theta.dim() != u.dim() {
        return Err(Error::DimensionMismatch(format!(
            "loss vector has dimension {}, weight has {}",
            theta.dim(),
            u.dim()
        )));
    }
    let best = theta
        .as_slice()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(theta.dot(u) - best)
}

/// Nash gap of the strategy pair `(x, y)`: the larger of the two players'
/// best pure-deviation gains (pure deviations suffice by linearity).
pub fn nash_gap(game: &BimatrixGame, x: &[f64], y: &[f64]) -> Result<f64> {
    let m = game.m();
    check_strategy("x", m, x)?;
    check_strategy("y", m, y)?;

    let vy: Vec<f64> = game.v().iter().map(|row| dot(row, y)).collect();
    let row_value = dot(x, &vy);
    let row_best = vy.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut wx = vec![0.0; m];
    for (i, row) in game.w().iter().enumerate() {
        for (j, &entry) in row.iter().enumerate() {
            wx[j] += x[i] * entry;
        }
    }
    let col_value = dot(&wx, y);
    let col_best = wx.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    Ok((row_best - row_value).max(col_best - col_value))
}

// ---------------------------------------------------------------------------
// Search oracles
// ---------------------------------------------------------------------------

/// All points of the `dim`-simplex whose coordinates are multiples of
/// `1/resolution`, in lexicographic order.
fn simplex_grid(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, budget: usize, resolution: usize, prefix: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if dim == 1 {
            let mut point = prefix.clone();
            point.push(budget as f64 / resolution as f64);
            out.push(point);
            return;
        }
        for k in 0..=budget {
            prefix.push(k as f64 / resolution as f64);
            rec(dim - 1, budget - k, resolution, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, resolution, resolution, &mut Vec::new(), &mut out);
    out
}

/// Ground-truth equilibrium search: scans the product of simplex grids at
/// step `1/resolution` and returns the pair with the smallest Nash gap
/// (ties broken lexicographically by grid index, independent of thread
/// schedule).  Supported for `m ≤ 3`; the grid grows too fast beyond that.
pub fn brute_force_nash(
    game: &BimatrixGame,
    resolution: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if game.m() > 3 {
        return Err(Error::InvalidParam(format!(
            "grid search supports at most 3 actions per player, got {}",
            game.m()
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidParam("grid resolution must be positive".into()));
    }
    let grid = simplex_grid(game.m(), resolution);

    let best = grid
        .par_iter()
        .enumerate()
        .map(|(xi, x)| {
            let mut local: (f64, usize, usize) = (f64::INFINITY, usize::MAX, usize::MAX);
            for (yi, y) in grid.iter().enumerate() {
                let gap = nash_gap(game, x, y).expect("grid points are valid strategies");
                if gap < local.0 {
                    local = (gap, xi, yi);
                }
            }
            local
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, usize::MAX),
            |a, b| {
                if (b.0, b.1, b.2) < (a.0, a.1, a.2) {
                    b
                } else {
                    a
                }
            },
        );

    let (gap, xi, yi) = best;
    Ok((grid[xi].clone(), grid[yi].clone(), gap))
}

/// Candidate weights with small variational-inequality gap on a reduction
/// instance: the committee vertices, the uniform weight, the exactly solved
/// interior point when `m == 1`, and extragradient runs from `starts` random
/// initializations.  Candidates are sorted by ascending gap.
///
/// The gap threshold that certifies a solution is tiny, so this is a sampler
/// of plausible low-gap points, not an exhaustive enumeration; tests assert
/// properties of whichever candidates do cross the threshold.
pub fn search_low_gap_candidates(
    instance: &ReductionInstance,
    starts: usize,
    seed: u64,
) -> Result<Vec<MixedWeight>> {
    let b = instance.c.len();
    let mut candidates: Vec<MixedWeight> = Vec::new();
    for j in 0..b {
        candidates.push(MixedWeight::one_hot(b, j)?);
    }
    candidates.push(MixedWeight::uniform(b)?);

    if instance.m == 1 {
        // One action per player: the interior stationary point solves the
        // instance exactly.  Equal loss coordinates require
        // u_x·(λ + w) = u_y·(λ + v).
        let v = instance.game.v()[0][0];
        let w = instance.game.w()[0][0];
        let ux = (LAMBDA + v) / (2.0 * LAMBDA + v + w);
        candidates.push(MixedWeight::new(vec![ux, 1.0 - ux])?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1.0 / (2.0 * LAMBDA);
    for _ in 0..starts {
        let mut u: Vec<f64> = (0..b).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = u.iter().sum();
        u.iter_mut().for_each(|x| *x /= total);
        for _ in 0..4000 {
            let theta_u = theta_at(instance, &u);
            let mid: Vec<f64> = (0..b).map(|j| u[j] - step * theta_u[j]).collect();
            let mid = project_simplex(&mid);
            let theta_mid = theta_at(instance, &mid);
            let next: Vec<f64> = (0..b).map(|j| u[j] - step * theta_mid[j]).collect();
            u = project_simplex(&next);
        }
        candidates.push(MixedWeight::new(u)?);
    }

    let mut scored: Vec<(f64, MixedWeight)> = candidates
        .into_iter()
        .map(|u| {
            let theta = theta_closed_form(instance, &u)?;
            Ok((vi_gap(&theta, &u)?, u))
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("gaps are finite"));
    Ok(scored.into_iter().map(|(_, u)| u).collect())
}

fn theta_at(instance: &ReductionInstance, u: &[f64]) -> Vec<f64> {
    instance.c.iter().map(|row| dot(row, u) / 3.0).collect()
}
