//! A tabular laboratory for classification-based online imitation learning.
//!
//! The library plays the following repeated game on finite layered MDPs: each
//! round the learner commits to a mixture over a finite committee of
//! deterministic policies, rolls it out, and pays the expected expert-assigned
//! cost of its own action distribution under its own state occupancy.  Expert
//! feedback is a per-state cost row sandwiched between the expert's exact
//! advantage and a scaled disagreement indicator, so driving the accumulated
//! round losses down drives the learned policy's cost toward the expert's.
//!
//! What lives where:
//!
//! - [`mdp`]: layered MDPs, exact dynamic programming (occupancy, values,
//!   advantages), seeded rollouts, and the JSON instance format.
//! - [`classes`]: policy committees, mixture weights, the exact
//!   cost-sensitive classification oracle, and separator sets.
//! - [`imitation`]: expert feedback tables, exact round losses and loss
//!   vectors, and annotated dataset sampling.
//! - [`online`]: the online linear optimizers — exponential weights,
//!   optimistic entropy steps, sparsified perturbed-leader updates (plain and
//!   extragradient), their published parameter schedules, and a Monte-Carlo
//!   reference for the perturbed-leader expectation.
//! - [`ledger`]: per-round records and exact static/dynamic/linear regret
//!   accounting, with CSV emission.
//! - [`runtime`]: experiment configs, the round loop, the committed-play
//!   baseline, behavior cloning, and disagreement-floor oracles.
//! - [`gadgets`]: two constructive instances — the two-branch cover MDP on
//!   which every committed-play learner pays linear regret, and the bimatrix
//!   game embedding whose approximate equilibria correspond to low-regret
//!   weights.
//! - [`suites`]: named self-check batteries behind the command-line `check`
//!   subcommand.
//! - [`synth`]: seeded random instances for tests and demos.
//!
//! ```
//! use coil_lab::runtime::{resolve, run_logger, ExperimentConfig, LearnerConfig, MdpSource};
//! use coil_lab::imitation::FeedbackKind;
//!
//! let config = ExperimentConfig {
//!     mdp: MdpSource::Cover { h: 3 },
//!     feedback: FeedbackKind::ZeroOne { mu: Some(1.0) },
//!     expert: None,
//!     class: None,
//!     separator: None,
//!     learner: LearnerConfig::Hedge { eta: None },
//!     n: 64,
//!     k: 1,
//!     delta: 0.05,
//!     seed: Some(7),
//!     exact_losses: false,
//!     out: None,
//! };
//! let ledger = run_logger(&resolve(&config).unwrap()).unwrap();
//! assert_eq!(ledger.rounds().len(), 64);
//! assert!(ledger.static_regret() <= ledger.dynamic_regret() + 1e-12);
//! ```

// `if !(x > 0.0)` guards are deliberate: unlike `x <= 0.0`, they also reject
// NaN. Index-based loops are kept where one index drives several arrays at
// once (dynamic-programming kernels), which iterator chains would obscure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod classes;
pub mod error;
pub mod gadgets;
pub mod imitation;
pub mod ledger;
pub mod mdp;
pub mod numeric;
pub mod online;
pub mod runtime;
pub mod suites;
pub mod synth;

pub use classes::{ClassSpec, MixedPolicy, MixedWeight, PolicyClass, SeparatorSet};
pub use error::{Error, Result};
pub use gadgets::{BimatrixGame, CoverGadget, GameSpec, ReductionInstance};
pub use imitation::{Dataset, ExpertFeedback, FeedbackKind, LinearLoss};
pub use ledger::{RegretLedger, RoundRecord};
pub use mdp::{DetPolicy, LayeredMdp, MdpSpec, PolicyView, TabularPolicy};
pub use runtime::{ExperimentConfig, LearnerConfig, MdpSource, ResolvedExperiment};

// Keep every fenced code block in the guide compiling and passing: each
// chapter is attached here as a documentation test source.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/feedback.md")]
    mod feedback {}
    #[doc = include_str!("../../../book/src/committees.md")]
    mod committees {}
    #[doc = include_str!("../../../book/src/learners.md")]
    mod learners {}
    #[doc = include_str!("../../../book/src/logger.md")]
    mod logger {}
    #[doc = include_str!("../../../book/src/gadgets.md")]
    mod gadgets_chapter {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
