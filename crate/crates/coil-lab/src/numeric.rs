//! Small numeric helpers shared across the crate: compensated summation,
//! simplex projection, categorical sampling, and seed derivation.

use rand::Rng;

/// Neumaier-compensated accumulator.
///
/// Running sums of per-round losses feed regret comparisons with tight
/// tolerances, so plain left-to-right `f64` addition is not good enough:
/// the compensation term keeps the result within one rounding of the exact
/// sum regardless of stream length.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of addends.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Neumaier::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Plain inner product. Callers that need compensation sum the products
/// through [`Neumaier`] themselves.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the minimum entry, ties broken toward the lowest index.
///
/// Every argmin in the crate (oracle, leaders, comparators) routes through
/// this function so tie-breaking is uniform.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, bv)) if v >= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Draws an index from an unnormalized nonnegative weight row.
///
/// Rows are validated to sum to 1 within 1e-9 upstream; any leftover mass
/// from rounding is assigned to the last positive entry so the draw is total.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// Euclidean projection onto the probability simplex.
///
/// Standard sort-and-threshold algorithm; used by the equilibrium-candidate
/// search, not by any learner update.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("simplex projection input must not contain NaN"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if x - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Derives a stream-specific seed from a master seed and a role/index pair.
///
/// SplitMix64 finalizer over the mixed words; distinct (role, index) pairs
/// give statistically independent streams for any master seed.
pub fn derived_seed(master: u64, role: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(role.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        // 1e16 + 1 - 1e16 loses the 1 under naive f64 addition.
        let xs = [1e16, 1.0, -1e16];
        assert_eq!(xs.iter().sum::<f64>(), 0.0);
        assert_eq!(compensated_sum(xs.iter().copied()), 1.0);
    }

    #[test]
    fn compensated_sum_matches_plain_sum_on_benign_input() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(compensated_sum(xs.iter().copied()), 5050.0);
    }

    #[test]
    fn argmin_breaks_ties_low() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0, 3.0]), Some(1));
        assert_eq!(argmin(&[]), None);
        assert_eq!(argmin(&[5.0]), Some(0));
    }

    #[test]
    fn categorical_sampling_is_deterministic_given_seed() {
        let probs = [0.25, 0.5, 0.25];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..8).map(|_| sample_categorical(&mut rng, &probs)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn categorical_sampling_matches_frequencies() {
        let probs = [0.1, 0.6, 0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 3];
        let n = 200_000;
        for _ in 0..n {
            counts[sample_categorical(&mut rng, &probs)] += 1;
        }
        for (c, p) in counts.iter().zip(probs) {
            let freq = *c as f64 / n as f64;
            // 5 sigma on a Bernoulli(p) mean with n draws.
            let tol = 5.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < tol, "freq {freq} vs p {p}");
        }
    }

    #[test]
    fn simplex_projection_fixes_points_already_on_the_simplex() {
        let v = [0.2, 0.5, 0.3];
        let p = project_simplex(&v);
        for (a, b) in p.iter().zip(v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn simplex_projection_output_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p = project_simplex(&v);
            assert!(p.iter().all(|&x| x >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derived_seeds_differ_across_roles_and_indices() {
        let s = derived_seed(99, 0, 0);
        assert_ne!(s, derived_seed(99, 0, 1));
        assert_ne!(s, derived_seed(99, 1, 0));
        assert_ne!(s, derived_seed(100, 0, 0));
        assert_eq!(s, derived_seed(99, 0, 0));
    }
}
