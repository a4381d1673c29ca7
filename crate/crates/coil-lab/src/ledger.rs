//! Per-round records of a logger run and the regret functionals over them.
//!
//! Three regrets are tracked. Static and dynamic regret are computed from the
//! exact per-round loss vectors (dynamic programming, no sampling noise);
//! linear regret is computed from the sampled loss vectors the learner
//! actually saw. Keeping both makes the sampling gap itself observable.
//!
//! All cumulative sums go through Neumaier compensation: acceptance checks
//! compare regrets against closed forms with tight tolerances, including one
//! exact tie, and naive summation error would otherwise dominate.

use crate::classes::MixedWeight;
use crate::error::{Error, Result};
use crate::imitation::LinearLoss;
use crate::numeric::{argmin, Neumaier};
use std::io::Write;

/// Provisional half-round of an extragradient learner.
#[derive(Debug, Clone)]
pub struct ProvisionalRecord {
    /// Mixture computed from history alone.
    pub weight: MixedWeight,
    /// Sampled loss estimate attached to the provisional mixture.
    pub estimate: LinearLoss,
}

/// Everything recorded about one round.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    /// Played mixture `u_n`.
    pub weight: MixedWeight,
    /// Exact loss vector `theta(u_n)` from dynamic programming.
    pub exact_theta: LinearLoss,
    /// Exact round loss `F_n` of playing and evaluating `u_n`.
    pub round_loss: f64,
    /// Loss vector the learner observed (sampled, or a copy of `exact_theta`
    /// in exact-loss runs).
    pub sampled_loss: LinearLoss,
    /// Optional provisional half-round (extragradient learners).
    pub provisional: Option<ProvisionalRecord>,
    /// Expert annotations spent this round.
    pub annotations: u64,
    /// Classification-oracle calls spent this round.
    pub oracle_calls: u64,
}

/// Ordered round records of one logger run.
#[derive(Debug, Clone)]
pub struct RegretLedger {
    dim: usize,
    rounds: Vec<RoundRecord>,
}

impl RegretLedger {
    /// `dim` is the class size every record must match.
    pub fn new(dim: usize) -> Self {
        Self { dim, rounds: Vec::new() }
    }

    pub fn push(&mut self, record: RoundRecord) -> Result<()> {
        let ok = record.weight.dim() == self.dim
            && record.exact_theta.dim() == self.dim
            && record.sampled_loss.dim() == self.dim
            && record
                .provisional
                .as_ref()
                .is_none_or(|p| p.weight.dim() == self.dim && p.estimate.dim() == self.dim);
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "round record dimensions do not match the ledger dimension {}",
                self.dim
            )));
        }
        self.rounds.push(record);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    /// Index of the exact-loss comparator: the member minimizing the summed
    /// exact loss vectors, ties toward the lowest index.
    pub fn exact_comparator(&self) -> Option<usize> {
        if self.rounds.is_empty() {
            return None;
        }
        let mut cum: Vec<Neumaier> = vec![Neumaier::new(); self.dim];
        for r in &self.rounds {
            for (acc, &v) in cum.iter_mut().zip(r.exact_theta.as_slice()) {
                acc.add(v);
            }
        }
        argmin(&cum.iter().map(Neumaier::value).collect::<Vec<_>>())
    }

    /// Static regret: played exact losses against the best fixed member.
    ///
    /// Two passes: the first finds the comparator from compensated column
    /// sums, the second folds the joint stream `F_1..F_N,
    /// -theta_1[h*]..-theta_N[h*]` through a single compensated accumulator,
    /// so a mathematically exact tie (`sum F_n == sum theta_n[h*]`) really
    /// produces zero-noise output.
    pub fn static_regret(&self) -> f64 {
        let Some(h_star) = self.exact_comparator() else { return 0.0 };
        let mut acc = Neumaier::new();
        for r in &self.rounds {
            acc.add(r.round_loss);
        }
        for r in &self.rounds {
            acc.add(-r.exact_theta.get(h_star));
        }
        acc.value()
    }

    /// Dynamic regret: played exact losses against the per-round best member.
    /// Always at least the static regret.
    pub fn dynamic_regret(&self) -> f64 {
        let mut acc = Neumaier::new();
        for r in &self.rounds {
            let best = r.exact_theta.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
            acc.add(r.round_loss - best);
        }
        if self.rounds.is_empty() {
            0.0
        } else {
            acc.value()
        }
    }

    /// Linear (online-learning) regret over the sampled loss vectors.
    pub fn linear_regret(&self) -> f64 {
        if self.rounds.is_empty() {
            return 0.0;
        }
        let mut cum: Vec<Neumaier> = vec![Neumaier::new(); self.dim];
        for r in &self.rounds {
            for (acc, &v) in cum.iter_mut().zip(r.sampled_loss.as_slice()) {
                acc.add(v);
            }
        }
        let sums: Vec<f64> = cum.iter().map(Neumaier::value).collect();
        let h_star = argmin(&sums).expect("dimension is positive");
        let mut acc = Neumaier::new();
        for r in &self.rounds {
            acc.add(r.sampled_loss.dot(&r.weight));
        }
        for r in &self.rounds {
            acc.add(-r.sampled_loss.get(h_star));
        }
        acc.value()
    }

    pub fn total_annotations(&self) -> u64 {
        self.rounds.iter().map(|r| r.annotations).sum()
    }

    pub fn total_oracle_calls(&self) -> u64 {
        self.rounds.iter().map(|r| r.oracle_calls).sum()
    }

    /// Writes the run as CSV, one row per round.
    ///
    /// Regret columns hold the prefix value: row `n` reports the regrets of
    /// rounds `1..=n`, so the last row matches the whole-run functionals up
    /// to compensation-order rounding. Counter columns are cumulative too.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,F_n,lin_loss,SReg,DReg,LReg,annotations,oracle_calls")?;
        let mut cum_f = Neumaier::new();
        let mut cum_lin = Neumaier::new();
        let mut cum_dyn = Neumaier::new();
        let mut cum_theta: Vec<Neumaier> = vec![Neumaier::new(); self.dim];
        let mut cum_g: Vec<Neumaier> = vec![Neumaier::new(); self.dim];
        let mut annotations = 0u64;
        let mut oracle_calls = 0u64;

        for (i, r) in self.rounds.iter().enumerate() {
            let lin = r.sampled_loss.dot(&r.weight);
            cum_f.add(r.round_loss);
            cum_lin.add(lin);
            let best_now =
                r.exact_theta.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
            cum_dyn.add(r.round_loss - best_now);
            for (acc, &v) in cum_theta.iter_mut().zip(r.exact_theta.as_slice()) {
                acc.add(v);
            }
            for (acc, &v) in cum_g.iter_mut().zip(r.sampled_loss.as_slice()) {
                acc.add(v);
            }
            annotations += r.annotations;
            oracle_calls += r.oracle_calls;

            let best_theta = cum_theta.iter().map(Neumaier::value).fold(f64::INFINITY, f64::min);
            let best_g = cum_g.iter().map(Neumaier::value).fold(f64::INFINITY, f64::min);
            let sreg = cum_f.value() - best_theta;
            let lreg = cum_lin.value() - best_g;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                i + 1,
                r.round_loss,
                lin,
                sreg,
                cum_dyn.value(),
                lreg,
                annotations,
                oracle_calls
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a vector cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}
