//! Experiment configuration and the round loop.
//!
//! [`ExperimentConfig`] is the JSON-facing description of one run: where the
//! instance comes from, what feedback the expert gives, which learner plays,
//! and the round/sample budgets.  [`resolve`] turns it into a validated
//! [`ResolvedExperiment`]; [`run_logger`] plays the game and returns the
//! filled [`RegretLedger`].
//!
//! The loop itself is [`run_logger_with`], which also accepts a caller-made
//! [`Learner`] (including an arbitrary closure) for scripted experiments.
//! Each round: the learner proposes a weight from the observed loss history,
//! the exact loss vector and round loss are computed by dynamic programming,
//! and — unless the run is configured for exact losses — a fresh annotated
//! dataset is sampled under the played mixture and its empirical loss vector
//! is what the learner gets to see.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{csc_oracle, greedy_separator, verify_separator, ClassSpec, PolicyClass, SeparatorSet};
use crate::error::{Error, Result};
use crate::gadgets::{make_cover_mdp, map_f, GameSpec};
use crate::imitation::{
    linear_loss_of, make_feedback, sample_dataset, theta_and_round_loss, CscExample, Dataset,
    ExpertFeedback, FeedbackKind, LinearLoss,
};
use crate::ledger::{ProvisionalRecord, RegretLedger, RoundRecord};
use crate::mdp::dp::occupancy;
use crate::mdp::rollout::rollout;
use crate::mdp::{DetPolicy, LayeredMdp, MdpSpec, PolicyView};
use crate::numeric::{argmin, derived_seed, Neumaier};
use crate::online::{
    hedge_default_eta, hedge_step, mftpl, mftpl_default_params, mftpl_eg_default_params,
    mftpl_eg_round,
};
use crate::synth;

const ROLE_INSTANCE: u64 = 0x1A57;
const ROLE_LEARNER: u64 = 0x7EA8;
const ROLE_DATA: u64 = 0xDA7A;

/// Where the run's MDP (and, for generated instances, its expert and
/// committee defaults) comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MdpSource {
    /// Read an [`MdpSpec`] JSON file.
    File { path: String },
    /// Carry the spec inline.
    Inline { spec: MdpSpec },
    /// The two-branch cover instance; supplies expert and committee defaults.
    Cover { h: usize },
    /// The game embedding; supplies expert and committee defaults.
    Reduction { game: GameSpec },
    /// A seeded random layered MDP (uniform-ish transitions, costs in
    /// `[0, 1]`); expert and committee must be given explicitly.
    Random { horizon: usize, width: usize, actions: usize },
}

/// Learner selection with optional overrides; `None` fields fall back to the
/// published schedules at resolve time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum LearnerConfig {
    /// Exponential weights on cumulative observed losses.
    Hedge {
        #[serde(default)]
        eta: Option<f64>,
    },
    /// Sparsified perturbed-leader updates (needs a separator).
    Mftpl {
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        t: Option<usize>,
    },
    /// The extragradient variant (needs a separator).
    MftplEg {
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        t: Option<usize>,
    },
    /// Committed play: the single committee member with the best cumulative
    /// observed loss.
    FtlProper,
}

fn default_k() -> usize {
    1
}

fn default_delta() -> f64 {
    0.05
}

/// JSON-facing description of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Instance source.
    pub mdp: MdpSource,
    /// Expert feedback channel.
    pub feedback: FeedbackKind,
    /// Expert action per global state; defaults to the gadget expert for
    /// generated sources, required otherwise.
    #[serde(default)]
    pub expert: Option<Vec<usize>>,
    /// Committee; defaults to the gadget committee for generated sources,
    /// required otherwise.
    #[serde(default)]
    pub class: Option<ClassSpec>,
    /// Separator states; when omitted and the learner needs one, a greedy
    /// cover over all states is built.
    #[serde(default)]
    pub separator: Option<Vec<usize>>,
    /// Learner choice.
    pub learner: LearnerConfig,
    /// Number of rounds.
    #[serde(rename = "N")]
    pub n: usize,
    /// Annotated samples per round.
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    /// Failure probability budget fed to the parameter schedules.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Master seed; stochastic runs refuse to start without one.
    #[serde(default)]
    pub seed: Option<u64>,
    /// When set, the learner observes the exact loss vectors instead of
    /// sampled ones (no annotations are spent).  Only meaningful for
    /// learners that work from loss vectors alone.
    #[serde(default)]
    pub exact_losses: bool,
    /// Optional CSV output path (used by the command-line harness).
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    /// Parses a config from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Serializes to pretty JSON.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Learner with all parameters filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedLearner {
    Hedge { eta: f64 },
    Mftpl { eta: f64, t: usize },
    MftplEg { eta: f64, t: usize },
    FtlProper,
}

impl ResolvedLearner {
    fn needs_separator(&self) -> bool {
        matches!(self, ResolvedLearner::Mftpl { .. } | ResolvedLearner::MftplEg { .. })
    }

    fn dataset_free(&self) -> bool {
        matches!(self, ResolvedLearner::Hedge { .. } | ResolvedLearner::FtlProper)
    }
}

/// A validated, fully materialized experiment.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub mdp: LayeredMdp,
    pub expert: DetPolicy,
    pub feedback: ExpertFeedback,
    pub class: PolicyClass,
    /// Present exactly when the learner needs one (already verified).
    pub separator: Option<SeparatorSet>,
    pub learner: ResolvedLearner,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub exact_losses: bool,
}

fn check_policy_compat(what: &str, pi: &impl PolicyView, mdp: &LayeredMdp) -> Result<()> {
    if !pi.compatible_with(mdp.num_states(), mdp.num_actions()) {
        return Err(Error::Config(format!(
            "{what} does not fit the instance ({} states, {} actions)",
            mdp.num_states(),
            mdp.num_actions()
        )));
    }
    Ok(())
}

/// Validates a config and materializes every component.
pub fn resolve(config: &ExperimentConfig) -> Result<ResolvedExperiment> {
    if config.n == 0 {
        return Err(Error::Config("round count N must be at least 1".into()));
    }
    if config.k == 0 {
        return Err(Error::Config("per-round sample count K must be at least 1".into()));
    }
    let seed = config
        .seed
        .ok_or_else(|| Error::Config("a seed is required; refusing an implicit random one".into()))?;

    // Instance plus source-provided defaults.
    let (mdp, default_expert, default_class) = match &config.mdp {
        MdpSource::File { path } => {
            let text = std::fs::read_to_string(path)?;
            let spec = MdpSpec::from_json_str(&text).map_err(Error::Json)?;
            (spec.build()?, None, None)
        }
        MdpSource::Inline { spec } => (spec.build()?, None, None),
        MdpSource::Cover { h } => {
            let gadget = make_cover_mdp(*h)?;
            (gadget.mdp, Some(gadget.expert), Some(gadget.class))
        }
        MdpSource::Reduction { game } => {
            let instance = map_f(&game.build()?)?;
            (instance.mdp, Some(instance.expert), Some(instance.class))
        }
        MdpSource::Random { horizon, width, actions } => {
            let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, ROLE_INSTANCE, 0));
            let mdp = synth::random_mdp(
                &mut rng,
                *horizon..=*horizon,
                *width..=*width,
                *actions..=*actions,
                0.0,
                1.0,
            );
            (mdp, None, None)
        }
    };

    let expert = match (&config.expert, default_expert) {
        (Some(actions), _) => DetPolicy::new(actions.clone()),
        (None, Some(default)) => default,
        (None, None) => {
            return Err(Error::Config(
                "this instance source provides no expert; set `expert`".into(),
            ))
        }
    };
    check_policy_compat("expert", &expert, &mdp)?;

    let class = match (&config.class, default_class) {
        (Some(spec), _) => spec.build(mdp.num_actions())?,
        (None, Some(default)) => default,
        (None, None) => {
            return Err(Error::Config(
                "this instance source provides no committee; set `class`".into(),
            ))
        }
    };
    if class.num_states() != mdp.num_states() {
        return Err(Error::Config(format!(
            "committee is over {} states, instance has {}",
            class.num_states(),
            mdp.num_states()
        )));
    }

    let feedback = make_feedback(&mdp, &expert, config.feedback)?;

    let learner = resolve_learner(config, &mdp, &class, feedback.mu())?;
    if config.exact_losses && !learner.dataset_free() {
        return Err(Error::Config(
            "exact losses are only available to learners that work from loss \
             vectors; perturbed-leader learners need real datasets"
                .into(),
        ));
    }

    let separator = if learner.needs_separator() {
        let set = match &config.separator {
            Some(states) => SeparatorSet::new(states.clone())?,
            None => greedy_separator(&class, &(0..mdp.num_states()).collect::<Vec<_>>())?,
        };
        for &s in set.states() {
            if s >= mdp.num_states() {
                return Err(Error::StateOutOfRange { state: s, states: mdp.num_states() });
            }
        }
        verify_separator(&class, &set)?;
        Some(set)
    } else {
        None
    };

    Ok(ResolvedExperiment {
        mdp,
        expert,
        feedback,
        class,
        separator,
        learner,
        n: config.n,
        k: config.k,
        delta: config.delta,
        seed,
        exact_losses: config.exact_losses,
    })
}

fn resolve_learner(
    config: &ExperimentConfig,
    mdp: &LayeredMdp,
    class: &PolicyClass,
    mu: f64,
) -> Result<ResolvedLearner> {
    let (s, a, b) = (mdp.num_states(), mdp.num_actions(), class.size());
    // Separator size for schedule defaults: the greedy cover is a fine proxy
    // even when the run later uses an explicit separator.
    let x = match &config.separator {
        Some(states) => states.len(),
        None => greedy_separator(class, &(0..s).collect::<Vec<_>>())
            .map(|set| set.len())
            .unwrap_or(1)
            .max(1),
    };
    Ok(match &config.learner {
        LearnerConfig::Hedge { eta } => ResolvedLearner::Hedge {
            eta: match eta {
                Some(v) => *v,
                None => hedge_default_eta(config.n, b)?,
            },
        },
        LearnerConfig::Mftpl { eta, t } => {
            let defaults = mftpl_default_params(config.n, s, a, b, x, mu, config.delta)?;
            ResolvedLearner::Mftpl { eta: eta.unwrap_or(defaults.eta), t: t.unwrap_or(defaults.t) }
        }
        LearnerConfig::MftplEg { eta, t } => {
            let defaults =
                mftpl_eg_default_params(config.n, s, a, b, x, mu, mdp.horizon(), config.delta)?;
            ResolvedLearner::MftplEg { eta: eta.unwrap_or(defaults.eta), t: t.unwrap_or(defaults.t) }
        }
        LearnerConfig::FtlProper => ResolvedLearner::FtlProper,
    })
}

/// The fixed parts of one logger game, shared by every learner.
#[derive(Debug, Clone, Copy)]
pub struct LoggerGame<'a> {
    pub mdp: &'a LayeredMdp,
    pub feedback: &'a ExpertFeedback,
    pub class: &'a PolicyClass,
    /// Required by perturbed-leader learners, ignored by the rest.
    pub separator: Option<&'a SeparatorSet>,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Hand the learner exact loss vectors instead of sampled datasets.
    pub exact_losses: bool,
}

/// A learner for [`run_logger_with`]; the config-facing choices plus an
/// arbitrary scripted closure mapping observed loss history to a weight.
pub enum Learner<'a> {
    Hedge { eta: f64 },
    Mftpl { eta: f64, t: usize },
    MftplEg { eta: f64, t: usize },
    FtlProper,
    Custom(&'a mut dyn FnMut(&[LinearLoss]) -> Result<crate::classes::MixedWeight>),
}

/// Plays the resolved experiment and returns the filled ledger.
pub fn run_logger(exp: &ResolvedExperiment) -> Result<RegretLedger> {
    let mut learner = match exp.learner {
        ResolvedLearner::Hedge { eta } => Learner::Hedge { eta },
        ResolvedLearner::Mftpl { eta, t } => Learner::Mftpl { eta, t },
        ResolvedLearner::MftplEg { eta, t } => Learner::MftplEg { eta, t },
        ResolvedLearner::FtlProper => Learner::FtlProper,
    };
    let game = LoggerGame {
        mdp: &exp.mdp,
        feedback: &exp.feedback,
        class: &exp.class,
        separator: exp.separator.as_ref(),
        n: exp.n,
        k: exp.k,
        seed: exp.seed,
        exact_losses: exp.exact_losses,
    };
    run_logger_with(&game, &mut learner)
}

/// The round loop.
///
/// Per round `n`: the learner proposes `u_n` from the loss vectors observed
/// so far; the exact loss vector `θ(u_n)` and round loss `F_n` are recorded
/// from one dynamic-programming pass; then either the exact vector is handed
/// back to the learner (exact-loss runs) or `K` annotated samples are drawn
/// under the played mixture and their empirical loss vector is.  Annotation
/// and oracle counters record exactly what was spent.
pub fn run_logger_with(game: &LoggerGame<'_>, learner: &mut Learner<'_>) -> Result<RegretLedger> {
    if game.n == 0 {
        return Err(Error::Config("round count N must be at least 1".into()));
    }
    if game.k == 0 {
        return Err(Error::Config("per-round sample count K must be at least 1".into()));
    }
    let needs_separator = matches!(learner, Learner::Mftpl { .. } | Learner::MftplEg { .. });
    if needs_separator {
        if game.exact_losses {
            return Err(Error::Config(
                "exact losses are only available to learners that work from loss \
                 vectors; perturbed-leader learners need real datasets"
                    .into(),
            ));
        }
        if game.separator.is_none() {
            return Err(Error::Config("this learner needs a separator set".into()));
        }
    }

    let b = game.class.size();
    let mut ledger = RegretLedger::new(b);
    let mut datasets: Vec<Dataset> = Vec::new();
    let mut history: Vec<LinearLoss> = Vec::new();
    let mut cumulative = vec![Neumaier::new(); b];

    for round in 0..game.n {
        let learner_seed = derived_seed(game.seed, ROLE_LEARNER, round as u64);
        let refs: Vec<&Dataset> = datasets.iter().collect();
        let (weight, oracle_calls, extra_annotations, provisional) = match learner {
            Learner::Hedge { eta } => {
                let cum: Vec<f64> = cumulative.iter().map(Neumaier::value).collect();
                (hedge_step(&cum, *eta)?, 0, 0, None)
            }
            Learner::FtlProper => {
                let index = ftl_proper_baseline(&history);
                (crate::classes::MixedWeight::one_hot(b, index)?, 0, 0, None)
            }
            Learner::Mftpl { eta, t } => {
                let separator = game.separator.expect("checked above");
                let outcome =
                    mftpl(&refs, game.class, separator, *eta, *t, game.k, learner_seed)?;
                (outcome.weight, outcome.oracle_calls, 0, None)
            }
            Learner::MftplEg { eta, t } => {
                let separator = game.separator.expect("checked above");
                let eg = mftpl_eg_round(
                    &refs,
                    game.mdp,
                    game.feedback,
                    game.class,
                    separator,
                    *eta,
                    *t,
                    game.k,
                    learner_seed,
                )?;
                let estimate = linear_loss_of(&eg.extra, game.class)?;
                (
                    eg.weight,
                    eg.oracle_calls,
                    eg.annotations,
                    Some(ProvisionalRecord { weight: eg.provisional, estimate }),
                )
            }
            Learner::Custom(step) => (step(&history)?, 0, 0, None),
        };

        let (theta, round_loss) =
            theta_and_round_loss(game.mdp, game.feedback, game.class, &weight)?;
        let (observed, annotations) = if game.exact_losses {
            (theta.clone(), 0u64)
        } else {
            let pi = game.class.mixture(&weight)?;
            let data = sample_dataset(
                game.mdp,
                game.feedback,
                &pi,
                game.k,
                derived_seed(game.seed, ROLE_DATA, round as u64),
            )?;
            let g = linear_loss_of(&data, game.class)?;
            datasets.push(data);
            (g, game.k as u64)
        };

        for (acc, &v) in cumulative.iter_mut().zip(observed.as_slice()) {
            acc.add(v);
        }
        history.push(observed.clone());
        ledger.push(RoundRecord {
            weight,
            exact_theta: theta,
            round_loss,
            sampled_loss: observed,
            provisional,
            annotations: annotations + extra_annotations,
            oracle_calls,
        })?;
    }
    Ok(ledger)
}

/// Committed play: the index with the smallest cumulative observed loss,
/// lowest index on ties; index 0 on an empty history.
pub fn ftl_proper_baseline(history: &[LinearLoss]) -> usize {
    let Some(first) = history.first() else {
        return 0;
    };
    let mut columns = vec![Neumaier::new(); first.dim()];
    for g in history {
        for (acc, &v) in columns.iter_mut().zip(g.as_slice()) {
            acc.add(v);
        }
    }
    let totals: Vec<f64> = columns.iter().map(Neumaier::value).collect();
    argmin(&totals).unwrap_or(0)
}

/// Empirical risk minimization over the committee on `k` expert-labeled
/// states drawn from the expert's own occupancy (one uniform step per fresh
/// expert rollout); returns the committee index, lowest index on ties.
pub fn behavior_cloning(
    mdp: &LayeredMdp,
    expert: &DetPolicy,
    class: &PolicyClass,
    k: usize,
    seed: u64,
) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidParam("behavior cloning needs at least one sample".into()));
    }
    check_policy_compat("expert", expert, mdp)?;
    if class.num_states() != mdp.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "committee is over {} states, instance has {}",
            class.num_states(),
            mdp.num_states()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(k);
    for _ in 0..k {
        let trajectory = rollout(mdp, expert, &mut rng)?;
        let step = rng.gen_range(0..mdp.horizon());
        let state = trajectory.states[step];
        let costs = (0..mdp.num_actions())
            .map(|a| if a == expert.action(state) { 0.0 } else { 1.0 })
            .collect();
        examples.push(CscExample { state, costs });
    }
    csc_oracle(&Dataset::new(examples), class)
}

/// Exact disagreement of the best committee member against the expert under
/// the expert's own occupancy: `min_h E_{s∼d_expert}[1{h(s) ≠ expert(s)}]`.
pub fn bias_expert(mdp: &LayeredMdp, expert: &DetPolicy, class: &PolicyClass) -> Result<f64> {
    check_policy_compat("expert", expert, mdp)?;
    if class.num_states() != mdp.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "committee is over {} states, instance has {}",
            class.num_states(),
            mdp.num_states()
        )));
    }
    let occ = occupancy(mdp, expert)?.averaged;
    let mut best = f64::INFINITY;
    for h in class.members() {
        let mut acc = Neumaier::new();
        for (s, &mass) in occ.iter().enumerate() {
            if mass > 0.0 && h.action(s) != expert.action(s) {
                acc.add(mass);
            }
        }
        best = best.min(acc.value());
    }
    Ok(best)
}

/// Grid estimate of the worst-case mixed-play disagreement floor
/// `max_{u ∈ Δ(B)} min_h E_{s∼d_{π_u}}[1{h(s) ≠ expert(s)}]`, provided for
/// two-member committees only (the grid is one-dimensional there; the
/// general quantity is a maximum over products of simplices and is out of
/// scope).
pub fn bias_mixed_grid(
    mdp: &LayeredMdp,
    expert: &DetPolicy,
    class: &PolicyClass,
    resolution: usize,
) -> Result<f64> {
    if class.size() != 2 {
        return Err(Error::InvalidParam(format!(
            "the mixed-play disagreement grid is provided for committees of \
             size 2 only, got {}",
            class.size()
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidParam("grid resolution must be positive".into()));
    }
    check_policy_compat("expert", expert, mdp)?;
    let mut worst = 0.0f64;
    for i in 0..=resolution {
        let wl = i as f64 / resolution as f64;
        let u = crate::classes::MixedWeight::new(vec![wl, 1.0 - wl])?;
        let pi = class.mixture(&u)?;
        let occ = occupancy(mdp, &pi)?.averaged;
        let mut best = f64::INFINITY;
        for h in class.members() {
            let mut acc = Neumaier::new();
            for (s, &mass) in occ.iter().enumerate() {
                if mass > 0.0 && h.action(s) != expert.action(s) {
                    acc.add(mass);
                }
            }
            best = best.min(acc.value());
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imitation::imitation_loss_exact;
    use crate::mdp::dp::evaluate;

    fn cover_config(learner: LearnerConfig, n: usize, exact: bool) -> ExperimentConfig {
        ExperimentConfig {
            mdp: MdpSource::Cover { h: 3 },
            feedback: FeedbackKind::ZeroOne { mu: Some(1.0) },
            expert: None,
            class: None,
            separator: None,
            learner,
            n,
            k: 1,
            delta: 0.05,
            seed: Some(11),
            exact_losses: exact,
            out: None,
        }
    }

    #[test]
    fn resolve_fills_gadget_defaults_and_validates() {
        let exp = resolve(&cover_config(LearnerConfig::FtlProper, 8, true)).unwrap();
        assert_eq!(exp.mdp.num_states(), 5);
        assert_eq!(exp.class.size(), 2);
        assert_eq!(exp.expert.action(0), 0);
        assert!(exp.separator.is_none());

        // Perturbed-leader learners get a separator built for them.
        let mut config = cover_config(LearnerConfig::Mftpl { eta: Some(0.5), t: Some(4) }, 4, false);
        let exp = resolve(&config).unwrap();
        assert!(exp.separator.is_some());
        verify_separator(&exp.class, exp.separator.as_ref().unwrap()).unwrap();

        // ... but cannot run on exact losses.
        config.exact_losses = true;
        assert!(matches!(resolve(&config), Err(Error::Config(_))));

        // Missing seed is an error, not an implicit random run.
        let mut config = cover_config(LearnerConfig::FtlProper, 8, true);
        config.seed = None;
        assert!(matches!(resolve(&config), Err(Error::Config(_))));

        // Sources without gadget defaults demand explicit policies.
        let mut config = cover_config(LearnerConfig::FtlProper, 8, true);
        config.mdp = MdpSource::Random { horizon: 3, width: 2, actions: 2 };
        assert!(matches!(resolve(&config), Err(Error::Config(_))));

        let config = cover_config(LearnerConfig::FtlProper, 0, true);
        assert!(matches!(resolve(&config), Err(Error::Config(_))));
    }

    #[test]
    fn config_json_round_trips() {
        let config = cover_config(LearnerConfig::Hedge { eta: None }, 16, false);
        let text = config.to_json_string();
        assert!(text.contains("\"source\": \"cover\""));
        assert!(text.contains("\"algo\": \"hedge\""));
        assert!(text.contains("\"N\": 16"));
        let back = ExperimentConfig::from_json_str(&text).unwrap();
        let exp = resolve(&back).unwrap();
        // Default learning rate: sqrt(ln B / (2N)).
        match exp.learner {
            ResolvedLearner::Hedge { eta } => {
                assert!((eta - (2.0f64.ln() / 32.0).sqrt()).abs() <= 1e-15);
            }
            other => panic!("expected hedge, got {other:?}"),
        }
    }

    #[test]
    fn committed_play_matches_the_scripted_pattern_on_the_cover_instance() {
        let exp = resolve(&cover_config(LearnerConfig::FtlProper, 12, true)).unwrap();
        let ledger = run_logger(&exp).unwrap();
        let plays: Vec<usize> = ledger
            .rounds()
            .iter()
            .map(|r| {
                let w = r.weight.as_slice();
                assert!(w.contains(&1.0), "committed play must be one-hot");
                w.iter().position(|&x| x == 1.0).unwrap()
            })
            .collect();
        assert_eq!(plays, vec![0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0]);
        // Period-4 pattern: average per-round static regret is exactly 1/4.
        assert!((ledger.static_regret() / 12.0 - 0.25).abs() <= 1e-9);
        // Exact-loss runs spend nothing.
        assert_eq!(ledger.total_annotations(), 0);
        assert_eq!(ledger.total_oracle_calls(), 0);
    }

    #[test]
    fn single_member_committee_never_regrets() {
        let gadget = make_cover_mdp(3).unwrap();
        let class = PolicyClass::new(
            vec![DetPolicy::new(vec![0; gadget.mdp.num_states()])],
            2,
        )
        .unwrap();
        let feedback =
            make_feedback(&gadget.mdp, &gadget.expert, FeedbackKind::ZeroOne { mu: Some(1.0) })
                .unwrap();
        let game = LoggerGame {
            mdp: &gadget.mdp,
            feedback: &feedback,
            class: &class,
            separator: None,
            n: 9,
            k: 2,
            seed: 3,
            exact_losses: false,
        };
        for mut learner in [Learner::Hedge { eta: 0.5 }, Learner::FtlProper] {
            let ledger = run_logger_with(&game, &mut learner).unwrap();
            assert_eq!(ledger.static_regret(), 0.0);
            assert_eq!(ledger.dynamic_regret(), 0.0);
            assert_eq!(ledger.linear_regret(), 0.0);
            assert_eq!(ledger.total_annotations(), 18);
        }
    }

    #[test]
    fn resource_counters_match_closed_forms_exactly() {
        let mut config = cover_config(LearnerConfig::Mftpl { eta: Some(0.8), t: Some(7) }, 5, false);
        config.k = 3;
        let ledger = run_logger(&resolve(&config).unwrap()).unwrap();
        assert_eq!(ledger.total_annotations(), 5 * 3);
        assert_eq!(ledger.total_oracle_calls(), 5 * 7);
        assert!(ledger.rounds().iter().all(|r| r.provisional.is_none()));

        let mut config =
            cover_config(LearnerConfig::MftplEg { eta: Some(0.8), t: Some(7) }, 5, false);
        config.k = 3;
        let ledger = run_logger(&resolve(&config).unwrap()).unwrap();
        assert_eq!(ledger.total_annotations(), 2 * 5 * 3);
        assert_eq!(ledger.total_oracle_calls(), 2 * 5 * 7);
        assert!(ledger.rounds().iter().all(|r| r.provisional.is_some()));

        let config = cover_config(LearnerConfig::Hedge { eta: None }, 5, false);
        let ledger = run_logger(&resolve(&config).unwrap()).unwrap();
        assert_eq!(ledger.total_annotations(), 5);
        assert_eq!(ledger.total_oracle_calls(), 0);
    }

    #[test]
    fn recorded_round_loss_is_the_imitation_loss_of_the_played_mixture() {
        let mut config = cover_config(LearnerConfig::Hedge { eta: None }, 20, false);
        config.feedback = FeedbackKind::Advantage;
        let exp = resolve(&config).unwrap();
        let ledger = run_logger(&exp).unwrap();
        for record in ledger.rounds() {
            let pi = exp.class.mixture(&record.weight).unwrap();
            let direct = imitation_loss_exact(&exp.mdp, &exp.feedback, &pi).unwrap();
            assert!((record.round_loss - direct).abs() <= 1e-9);
        }
    }

    #[test]
    fn cost_gap_is_controlled_by_static_regret_when_the_expert_is_in_class() {
        // Committee contains the expert: the comparator term vanishes, so
        // the average cost gap is at most (H/N) · SReg, pathwise.
        let gadget = make_cover_mdp(4).unwrap();
        let expert = gadget.expert.clone();
        let class = PolicyClass::new(
            vec![
                expert.clone(),
                DetPolicy::new(vec![0; gadget.mdp.num_states()]),
                DetPolicy::new(vec![1; gadget.mdp.num_states()]),
            ],
            2,
        )
        .unwrap();
        let feedback = make_feedback(&gadget.mdp, &expert, FeedbackKind::Advantage).unwrap();
        let game = LoggerGame {
            mdp: &gadget.mdp,
            feedback: &feedback,
            class: &class,
            separator: None,
            n: 30,
            k: 2,
            seed: 17,
            exact_losses: false,
        };
        let mut learner = Learner::Hedge { eta: 0.4 };
        let ledger = run_logger_with(&game, &mut learner).unwrap();

        let j_expert = evaluate(&gadget.mdp, &expert).unwrap().j;
        let mut gap = Neumaier::new();
        for record in ledger.rounds() {
            let pi = class.mixture(&record.weight).unwrap();
            gap.add(evaluate(&gadget.mdp, &pi).unwrap().j - j_expert);
        }
        let avg_gap = gap.value() / 30.0;
        let h = gadget.mdp.horizon() as f64;
        assert!(avg_gap <= h / 30.0 * ledger.static_regret() + 1e-9);
    }

    #[test]
    fn identical_seeds_give_identical_ledgers() {
        let config = cover_config(LearnerConfig::Mftpl { eta: Some(0.6), t: Some(9) }, 6, false);
        let a = run_logger(&resolve(&config).unwrap()).unwrap();
        let b = run_logger(&resolve(&config).unwrap()).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn committed_baseline_picks_cumulative_minima() {
        assert_eq!(ftl_proper_baseline(&[]), 0);
        let history = vec![
            LinearLoss::new(vec![0.9, 0.2]),
            LinearLoss::new(vec![0.1, 0.3]),
        ];
        assert_eq!(ftl_proper_baseline(&history), 1);
        let tie = vec![LinearLoss::new(vec![0.5, 0.5])];
        assert_eq!(ftl_proper_baseline(&tie), 0);
    }

    #[test]
    fn cloning_recovers_a_realizable_expert() {
        let gadget = make_cover_mdp(3).unwrap();
        let expert = gadget.expert.clone();
        let states = gadget.mdp.num_states();
        let class = PolicyClass::new(
            vec![
                DetPolicy::new(vec![0; states]),
                expert.clone(),
                DetPolicy::new(vec![1; states]),
            ],
            2,
        )
        .unwrap();
        let picked = behavior_cloning(&gadget.mdp, &expert, &class, 200, 5).unwrap();
        let chosen = class.member(picked);
        // The chosen member agrees with the expert everywhere the expert goes.
        let occ = occupancy(&gadget.mdp, &expert).unwrap().averaged;
        for (s, &mass) in occ.iter().enumerate() {
            if mass > 0.0 {
                assert_eq!(chosen.action(s), expert.action(s));
            }
        }

        // Single-member committee: returned unconditionally.
        let only = PolicyClass::new(vec![expert.clone()], 2).unwrap();
        assert_eq!(behavior_cloning(&gadget.mdp, &expert, &only, 1, 9).unwrap(), 0);
        assert!(behavior_cloning(&gadget.mdp, &expert, &only, 0, 9).is_err());
    }

    #[test]
    fn expert_disagreement_floor_hand_values() {
        let gadget = make_cover_mdp(3).unwrap();
        // Expert path: start (1/3) then the left branch (2/3).  The always-0
        // member disagrees only on the left branch; the always-1 member only
        // at the start.
        let bias = bias_expert(&gadget.mdp, &gadget.expert, &gadget.class).unwrap();
        assert!((bias - 1.0 / 3.0).abs() <= 1e-12);

        // A realizable committee floors at zero.
        let with_expert = PolicyClass::new(
            vec![gadget.expert.clone(), DetPolicy::new(vec![0; 5])],
            2,
        )
        .unwrap();
        assert_eq!(bias_expert(&gadget.mdp, &gadget.expert, &with_expert).unwrap(), 0.0);

        // A member disagreeing everywhere reachable sits at one.
        let flipped: Vec<usize> = (0..5).map(|s| 1 - gadget.expert.action(s)).collect();
        let disagree = PolicyClass::new(vec![DetPolicy::new(flipped)], 2).unwrap();
        let bias = bias_expert(&gadget.mdp, &gadget.expert, &disagree).unwrap();
        assert!((bias - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn mixed_play_disagreement_grid_finds_the_interior_maximum() {
        // On the two-branch instance the min-disagreement of the two constant
        // members under mixture weight (w, 1−w) is min((2/3)w, 1/3+(2/3)(1−w));
        // the maximin sits at w = 3/4 with value 1/2 — strictly above both
        // committed plays, which is the point of mixed-play lower bounds.
        let gadget = make_cover_mdp(3).unwrap();
        let grid = bias_mixed_grid(&gadget.mdp, &gadget.expert, &gadget.class, 200).unwrap();
        assert!((grid - 0.5).abs() <= 0.01, "grid value {grid}");

        assert!(bias_mixed_grid(&gadget.mdp, &gadget.expert, &gadget.class, 0).is_err());
        let three = PolicyClass::new(
            vec![
                DetPolicy::new(vec![0; 5]),
                DetPolicy::new(vec![1; 5]),
                gadget.expert.clone(),
            ],
            2,
        )
        .unwrap();
        assert!(matches!(
            bias_mixed_grid(&gadget.mdp, &gadget.expert, &three, 10),
            Err(Error::InvalidParam(_))
        ));
    }
}
