//! Pairwise comparison of selection criteria: win/tie tallies and a Bayesian
//! Bradley-Terry posterior over per-method abilities.
//!
//! Each run contributes one pairing per unordered method pair; the method
//! whose selected expression has the lower test MSE wins, identical
//! selections (or identical MSE) are ties counted as half a win for both
//! sides. The posterior is sampled by random-walk Metropolis on log
//! abilities with independent Gamma(1, 1) priors on every ability. The
//! likelihood only sees ability ratios; the prior pins the overall scale,
//! keeps the posterior proper, and (unlike fixing one ability) leaves the
//! methods exactly exchangeable, so permuting labels permutes summaries.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::rng::rng_from_seed;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("tally needs at least two methods, got {0}")]
    TooFewMethods(usize),
    #[error("methods {a} and {b} have no pairings")]
    MissingPair { a: String, b: String },
    #[error("sampler did not stabilize: acceptance rate {rate:.3} outside [0.1, 0.6]")]
    NotConverged { rate: f64 },
}

/// What one method selected in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub method: String,
    /// Identity of the selected expression (its printed form).
    pub expr_id: String,
    pub test_mse: f64,
}

/// Win and tie counts per method pair. `wins[a][b]` holds the (possibly
/// half-integer) wins of `a` over `b`; ties contribute 0.5 to both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingTally {
    pub methods: Vec<String>,
    wins: Vec<f64>,
    ties: Vec<u32>,
    pub skipped_runs: usize,
}

impl PairingTally {
    pub fn new(methods: Vec<String>) -> Self {
        let k = methods.len();
        Self {
            methods,
            wins: vec![0.0; k * k],
            ties: vec![0; k * k],
            skipped_runs: 0,
        }
    }

    fn index(&self, a: usize, b: usize) -> usize {
        a * self.methods.len() + b
    }

    pub fn wins(&self, a: usize, b: usize) -> f64 {
        self.wins[self.index(a, b)]
    }

    pub fn ties(&self, a: usize, b: usize) -> u32 {
        self.ties[self.index(a, b)]
    }

    pub fn add_win(&mut self, winner: usize, loser: usize) {
        let idx = self.index(winner, loser);
        self.wins[idx] += 1.0;
    }

    pub fn add_tie(&mut self, a: usize, b: usize) {
        let i = self.index(a, b);
        let j = self.index(b, a);
        self.wins[i] += 0.5;
        self.wins[j] += 0.5;
        self.ties[i] += 1;
        self.ties[j] += 1;
    }

    /// Total pairings observed between `a` and `b`.
    pub fn pairings(&self, a: usize, b: usize) -> f64 {
        self.wins(a, b) + self.wins(b, a)
    }
}

/// Folds per-run selections into a tally. Runs missing any of the requested
/// methods are skipped and counted in `skipped_runs`.
pub fn tally_pairings(methods: &[String], runs: &[Vec<CriterionOutcome>]) -> PairingTally {
    let mut tally = PairingTally::new(methods.to_vec());
    let k = methods.len();
    for run in runs {
        let lookup: Vec<Option<&CriterionOutcome>> = methods
            .iter()
            .map(|m| run.iter().find(|o| &o.method == m))
            .collect();
        if lookup.iter().any(Option::is_none) {
            tally.skipped_runs += 1;
            continue;
        }
        for a in 0..k {
            for b in (a + 1)..k {
                let oa = lookup[a].unwrap();
                let ob = lookup[b].unwrap();
                // Identical expressions tie by definition; identical MSE from
                // different expressions almost surely means identical
                // predictions and ties as well.
                if oa.expr_id == ob.expr_id || oa.test_mse == ob.test_mse {
                    tally.add_tie(a, b);
                } else if oa.test_mse < ob.test_mse {
                    tally.add_win(a, b);
                } else {
                    tally.add_win(b, a);
                }
            }
        }
    }
    tally
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McmcConfig {
    /// Post-burn-in draws to keep (at least 2000).
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            samples: 4000,
            burn_in: 1000,
            seed: 0,
        }
    }
}

/// Posterior ability draws, S rows × K methods.
#[derive(Debug, Clone)]
pub struct BbtPosterior {
    pub methods: Vec<String>,
    abilities: Vec<f64>,
    samples: usize,
}

impl BbtPosterior {
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn ability(&self, sample: usize, method: usize) -> f64 {
        self.abilities[sample * self.methods.len() + method]
    }

    /// Posterior draws of P(a beats b) = λ_a / (λ_a + λ_b).
    pub fn win_prob_samples(&self, a: usize, b: usize) -> Vec<f64> {
        (0..self.samples)
            .map(|s| {
                let la = self.ability(s, a);
                let lb = self.ability(s, b);
                la / (la + lb)
            })
            .collect()
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == name)
    }
}

fn log_posterior(tally: &PairingTally, log_lambda: &[f64]) -> f64 {
    let k = log_lambda.len();
    let mut lp = 0.0;
    // Gamma(1,1) prior on λ with the log-space Jacobian: −λ + ln λ.
    for &ll in log_lambda {
        lp += -ll.exp() + ll;
    }
    for a in 0..k {
        for b in (a + 1)..k {
            let w_ab = tally.wins(a, b);
            let w_ba = tally.wins(b, a);
            if w_ab + w_ba == 0.0 {
                continue;
            }
            // log(λa/(λa+λb)) computed stably from the log abilities.
            let diff = log_lambda[a] - log_lambda[b];
            let log_p = -log1p_exp(-diff);
            let log_q = -log1p_exp(diff);
            lp += w_ab * log_p + w_ba * log_q;
        }
    }
    lp
}

/// ln(1 + e^x) without overflow.
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Samples the Bradley-Terry posterior by coordinate-wise random-walk
/// Metropolis on log abilities. Step sizes adapt during burn-in; a final
/// acceptance rate outside [0.1, 0.6] is reported as a convergence failure.
pub fn bbt_fit(tally: &PairingTally, cfg: &McmcConfig) -> Result<BbtPosterior, StatsError> {
    let k = tally.methods.len();
    if k < 2 {
        return Err(StatsError::TooFewMethods(k));
    }
    for a in 0..k {
        for b in (a + 1)..k {
            if tally.pairings(a, b) == 0.0 {
                return Err(StatsError::MissingPair {
                    a: tally.methods[a].clone(),
                    b: tally.methods[b].clone(),
                });
            }
        }
    }

    let samples = cfg.samples.max(2000);
    let mut rng = rng_from_seed(cfg.seed);
    let proposal = Normal::new(0.0, 1.0).unwrap();
    let mut log_lambda = vec![0.0; k];
    let mut step = vec![0.5; k];
    let mut lp = log_posterior(tally, &log_lambda);

    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let sweep = |log_lambda: &mut Vec<f64>,
                     lp: &mut f64,
                     step: &[f64],
                     rng: &mut crate::rng::SearchRng,
                     accepted: &mut usize,
                     proposed: &mut usize| {
        for coord in 0..k {
            let old = log_lambda[coord];
            log_lambda[coord] = old + step[coord] * proposal.sample(rng);
            let cand_lp = log_posterior(tally, log_lambda);
            *proposed += 1;
            if (cand_lp - *lp).exp() > rng.gen::<f64>() {
                *lp = cand_lp;
                *accepted += 1;
            } else {
                log_lambda[coord] = old;
            }
        }
    };

    // Burn-in with step adaptation toward a mid-range acceptance rate.
    let adapt_window = 50;
    let mut window_accepted = 0usize;
    let mut window_proposed = 0usize;
    for it in 0..cfg.burn_in {
        let before_a = accepted;
        let before_p = proposed;
        sweep(
            &mut log_lambda,
            &mut lp,
            &step,
            &mut rng,
            &mut accepted,
            &mut proposed,
        );
        window_accepted += accepted - before_a;
        window_proposed += proposed - before_p;
        if (it + 1) % adapt_window == 0 && window_proposed > 0 {
            let rate = window_accepted as f64 / window_proposed as f64;
            let factor = if rate > 0.45 {
                1.3
            } else if rate < 0.2 {
                0.7
            } else {
                1.0
            };
            for s in &mut step {
                *s = (*s * factor).clamp(1e-3, 10.0);
            }
            window_accepted = 0;
            window_proposed = 0;
        }
    }

    accepted = 0;
    proposed = 0;
    let mut abilities = Vec::with_capacity(samples * k);
    for _ in 0..samples {
        sweep(
            &mut log_lambda,
            &mut lp,
            &step,
            &mut rng,
            &mut accepted,
            &mut proposed,
        );
        abilities.extend(log_lambda.iter().map(|ll| ll.exp()));
    }

    let rate = if proposed == 0 {
        0.0
    } else {
        accepted as f64 / proposed as f64
    };
    if !(0.1..=0.6).contains(&rate) {
        return Err(StatsError::NotConverged { rate });
    }

    Ok(BbtPosterior {
        methods: tally.methods.clone(),
        abilities,
        samples,
    })
}

/// Posterior summary of P(A > B) against the practical-equivalence region
/// [0.45, 0.55].
#[derive(Debug, Clone, PartialEq)]
pub struct RopeSummary {
    pub median: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
    pub mass_above_half: f64,
    pub rope_mass: f64,
    /// At least 99% of the mass above 0.55 (outside ROPE on the winning side).
    pub dagger: bool,
}

pub fn rope_summary(posterior: &BbtPosterior, a: usize, b: usize) -> RopeSummary {
    let mut samples = posterior.win_prob_samples(a, b);
    samples.sort_by(|x, y| x.total_cmp(y));
    let s = samples.len();
    let median = if s % 2 == 1 {
        samples[s / 2]
    } else {
        0.5 * (samples[s / 2 - 1] + samples[s / 2])
    };

    // Narrowest contiguous interval holding 95% of the sorted draws.
    let window = ((0.95 * s as f64).ceil() as usize).clamp(1, s);
    let mut best = (samples[0], samples[s - 1]);
    for start in 0..=(s - window) {
        let lo = samples[start];
        let hi = samples[start + window - 1];
        if hi - lo < best.1 - best.0 {
            best = (lo, hi);
        }
    }

    let frac = |pred: &dyn Fn(f64) -> bool| {
        samples.iter().filter(|v| pred(**v)).count() as f64 / s as f64
    };
    let mass_above_half = frac(&|v| v > 0.5);
    let rope_mass = frac(&|v| (0.45..=0.55).contains(&v));
    let dagger = frac(&|v| v > 0.55) >= 0.99;

    RopeSummary {
        median,
        hpd_low: best.0,
        hpd_high: best.1,
        mass_above_half,
        rope_mass,
        dagger,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(method: &str, expr: &str, mse: f64) -> CriterionOutcome {
        CriterionOutcome {
            method: method.into(),
            expr_id: expr.into(),
            test_mse: mse,
        }
    }

    fn two_methods() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn single_run_win() {
        let runs = vec![vec![outcome("a", "e1", 1.0), outcome("b", "e2", 2.0)]];
        let t = tally_pairings(&two_methods(), &runs);
        assert_eq!(t.wins(0, 1), 1.0);
        assert_eq!(t.wins(1, 0), 0.0);
        assert_eq!(t.pairings(0, 1), 1.0);
    }

    #[test]
    fn identical_selection_is_a_tie() {
        let runs = vec![vec![outcome("a", "e", 1.0), outcome("b", "e", 1.0)]];
        let t = tally_pairings(&two_methods(), &runs);
        assert_eq!(t.wins(0, 1), 0.5);
        assert_eq!(t.wins(1, 0), 0.5);
        assert_eq!(t.ties(0, 1), 1);
    }

    #[test]
    fn hundred_ties_split_evenly() {
        let runs: Vec<_> = (0..100)
            .map(|_| vec![outcome("a", "e1", 3.0), outcome("b", "e2", 3.0)])
            .collect();
        let t = tally_pairings(&two_methods(), &runs);
        assert_eq!(t.wins(0, 1), 50.0);
        assert_eq!(t.wins(1, 0), 50.0);
    }

    #[test]
    fn missing_method_skips_run() {
        let runs = vec![
            vec![outcome("a", "e1", 1.0)],
            vec![outcome("a", "e1", 1.0), outcome("b", "e2", 0.5)],
        ];
        let t = tally_pairings(&two_methods(), &runs);
        assert_eq!(t.skipped_runs, 1);
        assert_eq!(t.wins(1, 0), 1.0);
    }

    #[test]
    fn symmetry_of_pairing_counts() {
        let runs: Vec<_> = (0..40)
            .map(|i| {
                vec![
                    outcome("a", "ea", (i % 5) as f64),
                    outcome("b", "eb", ((i + 2) % 5) as f64),
                ]
            })
            .collect();
        let t = tally_pairings(&two_methods(), &runs);
        assert_eq!(t.wins(0, 1) + t.wins(1, 0), 40.0);
        assert_eq!(t.wins(0, 0), 0.0);
    }

    fn tally_from_wins(wins_ab: f64, wins_ba: f64) -> PairingTally {
        let mut t = PairingTally::new(two_methods());
        for _ in 0..wins_ab as usize {
            t.add_win(0, 1);
        }
        for _ in 0..wins_ba as usize {
            t.add_win(1, 0);
        }
        t
    }

    #[test]
    fn symmetric_tally_centers_on_half() {
        let t = tally_from_wins(50.0, 50.0);
        let posterior = bbt_fit(&t, &McmcConfig::default()).unwrap();
        let summary = rope_summary(&posterior, 0, 1);
        assert!(
            (summary.median - 0.5).abs() < 0.02,
            "median {}",
            summary.median
        );
        assert!(!summary.dagger);
    }

    #[test]
    fn lopsided_tally_is_decisive() {
        let t = tally_from_wins(100.0, 0.0);
        let posterior = bbt_fit(&t, &McmcConfig::default()).unwrap();
        let summary = rope_summary(&posterior, 0, 1);
        assert!(summary.median > 0.95, "median {}", summary.median);
        assert!(summary.dagger);
    }

    #[test]
    fn transitive_strengths_order_abilities() {
        let methods: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let mut t = PairingTally::new(methods);
        for _ in 0..30 {
            t.add_win(0, 1);
            t.add_win(1, 2);
            t.add_win(0, 2);
        }
        for _ in 0..10 {
            t.add_win(1, 0);
            t.add_win(2, 1);
            t.add_win(2, 0);
        }
        let posterior = bbt_fit(&t, &McmcConfig::default()).unwrap();
        let med = |a, b| rope_summary(&posterior, a, b).median;
        assert!(med(0, 1) > 0.5);
        assert!(med(1, 2) > 0.5);
        assert!(med(0, 2) > med(0, 1));
    }

    #[test]
    fn win_prob_samples_sum_to_one() {
        let t = tally_from_wins(20.0, 10.0);
        let posterior = bbt_fit(&t, &McmcConfig::default()).unwrap();
        let ab = posterior.win_prob_samples(0, 1);
        let ba = posterior.win_prob_samples(1, 0);
        for (x, y) in ab.iter().zip(&ba) {
            assert!((x + y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn label_permutation_permutes_summaries() {
        let t = tally_from_wins(30.0, 10.0);
        let mut flipped = PairingTally::new(vec!["b".into(), "a".into()]);
        for _ in 0..10 {
            flipped.add_win(0, 1);
        }
        for _ in 0..30 {
            flipped.add_win(1, 0);
        }
        let p1 = bbt_fit(&t, &McmcConfig::default()).unwrap();
        let p2 = bbt_fit(&flipped, &McmcConfig::default()).unwrap();
        let s1 = rope_summary(&p1, 0, 1);
        let s2 = rope_summary(&p2, 1, 0);
        assert!((s1.median - s2.median).abs() < 0.02);
    }

    #[test]
    fn rope_summary_on_degenerate_samples() {
        let posterior = BbtPosterior {
            methods: two_methods(),
            abilities: vec![[1.0, 1.0]; 2000].into_iter().flatten().collect(),
            samples: 2000,
        };
        let s = rope_summary(&posterior, 0, 1);
        assert_eq!(s.median, 0.5);
        assert_eq!(s.rope_mass, 1.0);
        assert!(!s.dagger);

        let posterior = BbtPosterior {
            methods: two_methods(),
            abilities: vec![[9.0, 1.0]; 2000].into_iter().flatten().collect(),
            samples: 2000,
        };
        let s = rope_summary(&posterior, 0, 1);
        assert_eq!(s.median, 0.9);
        assert!(s.dagger);
    }

    #[test]
    fn pairless_tally_is_rejected() {
        let t = PairingTally::new(two_methods());
        assert!(matches!(
            bbt_fit(&t, &McmcConfig::default()),
            Err(StatsError::MissingPair { .. })
        ));
    }
}
