//! Memetic parameter optimization: Levenberg-Marquardt on the sum of squared
//! errors, noise-variance profiling, and the Gaussian negative log-likelihood.
//!
//! LM minimizes SSE directly; the profiled noise variance makes that optimum
//! identical to the joint NLL optimum, so σ̂² and the NLL are computed after
//! the fit. The iteration budget is deliberately small (memetic use inside a
//! population loop) and configurable.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::data::Dataset;
use crate::eval::EvalScratch;
use crate::expr::Expression;

/// Solver settings. All keys are exposed in the run configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub lm_max_iters: usize,
    pub lm_lambda0: f64,
    pub lm_tol: f64,
    pub sigma_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lm_max_iters: 10,
            lm_lambda0: 1e-3,
            lm_tol: 1e-9,
            sigma_floor: 1e-12,
        }
    }
}

/// Outcome of one memetic fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Optimized parameters (finite whenever the starting values were).
    pub theta: Vec<f64>,
    /// Profiled noise variance, floored at `sigma_floor`.
    pub sigma2: f64,
    /// Negative log-likelihood at (θ̂, σ̂²); `+inf` marks an invalid model.
    pub nll: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Mean squared residual, floored; `+inf` when any residual is non-finite.
pub fn profile_sigma(residuals: &[f64], floor: f64) -> f64 {
    let m = residuals.len();
    debug_assert!(m >= 1);
    let mut sum = 0.0;
    for r in residuals {
        if !r.is_finite() {
            return f64::INFINITY;
        }
        sum += r * r;
    }
    (sum / m as f64).max(floor)
}

/// Gaussian NLL: (m/2)·ln(2πσ²) + Σr²/(2σ²). Non-finite residuals give
/// `+inf` (worst model).
pub fn neg_log_lik(residuals: &[f64], sigma2: f64, m: usize) -> f64 {
    debug_assert!(sigma2 > 0.0);
    let mut sse = 0.0;
    for r in residuals {
        if !r.is_finite() {
            return f64::INFINITY;
        }
        sse += r * r;
    }
    (m as f64 / 2.0) * (2.0 * std::f64::consts::PI * sigma2).ln() + sse / (2.0 * sigma2)
}

fn sse_of(residuals: &[f64]) -> f64 {
    let mut sum = 0.0;
    for r in residuals {
        if !r.is_finite() {
            return f64::INFINITY;
        }
        sum += r * r;
    }
    sum
}

fn residuals_into(pred: &[f64], y: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(pred.iter().zip(y).map(|(f, y)| y - f));
}

/// Fits the expression's parameters on `train` by Levenberg-Marquardt,
/// starting from `theta0` (the values stored in the individual).
///
/// Accepted steps never increase the SSE, so the result satisfies
/// SSE(θ̂) ≤ SSE(θ0) or θ̂ = θ0 when no improving step was found. Singular
/// normal equations are treated as a rejected step (damping is raised).
pub fn fit_lm(expr: &Expression, theta0: &[f64], train: &Dataset, cfg: &FitConfig) -> FitResult {
    debug_assert_eq!(theta0.len(), expr.param_count());
    let m = train.rows();
    debug_assert!(m >= 1);
    let p = theta0.len();
    let mut scratch = EvalScratch::new();
    let mut residuals = Vec::with_capacity(m);

    let pred = scratch.evaluate(expr, theta0, &train.x);
    residuals_into(&pred, &train.y, &mut residuals);
    let mut sse = sse_of(&residuals);
    if !sse.is_finite() {
        return FitResult {
            theta: theta0.to_vec(),
            sigma2: f64::INFINITY,
            nll: f64::INFINITY,
            converged: false,
            iterations: 0,
        };
    }

    let mut theta = theta0.to_vec();
    let mut lambda = cfg.lm_lambda0;
    let mut converged = p == 0;
    let mut iterations = 0;

    if p > 0 {
        for _ in 0..cfg.lm_max_iters {
            iterations += 1;
            let (pred, jac) = scratch.evaluate_with_jacobian(expr, &theta, &train.x);
            if !jac.is_finite() {
                break;
            }
            residuals_into(&pred, &train.y, &mut residuals);

            // Normal equations JᵀJ δ = Jᵀr with Marquardt diagonal damping.
            let mut jtj = DMatrix::<f64>::zeros(p, p);
            let mut jtr = DVector::<f64>::zeros(p);
            for a in 0..p {
                let ca = jac.col(a);
                for b in a..p {
                    let cb = jac.col(b);
                    let mut dot = 0.0;
                    for i in 0..m {
                        dot += ca[i] * cb[i];
                    }
                    jtj[(a, b)] = dot;
                    jtj[(b, a)] = dot;
                }
                let mut dot = 0.0;
                for i in 0..m {
                    dot += ca[i] * residuals[i];
                }
                jtr[a] = dot;
            }

            let mut accepted = false;
            loop {
                let mut damped = jtj.clone();
                for d in 0..p {
                    damped[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
                }
                let step = Cholesky::new(damped).map(|ch| ch.solve(&jtr));
                let candidate = step.and_then(|delta| {
                    if delta.iter().all(|v| v.is_finite()) {
                        let cand: Vec<f64> =
                            theta.iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
                        Some(cand)
                    } else {
                        None
                    }
                });
                if let Some(cand) = candidate {
                    let pred = scratch.evaluate(expr, &cand, &train.x);
                    residuals_into(&pred, &train.y, &mut residuals);
                    let cand_sse = sse_of(&residuals);
                    if cand_sse < sse {
                        let improvement = (sse - cand_sse) / sse.max(f64::MIN_POSITIVE);
                        theta = cand;
                        sse = cand_sse;
                        lambda = (lambda / 10.0).max(1e-15);
                        accepted = true;
                        if improvement < cfg.lm_tol {
                            converged = true;
                        }
                        break;
                    }
                }
                lambda *= 10.0;
                if lambda > 1e12 {
                    break;
                }
            }
            if !accepted || converged {
                converged = converged || !accepted;
                break;
            }
        }
    }

    let pred = scratch.evaluate(expr, &theta, &train.x);
    residuals_into(&pred, &train.y, &mut residuals);
    let sigma2 = profile_sigma(&residuals, cfg.sigma_floor);
    let nll = if sigma2.is_finite() {
        neg_log_lik(&residuals, sigma2, m)
    } else {
        f64::INFINITY
    };

    FitResult {
        theta,
        sigma2,
        nll,
        converged,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, FeatureMatrix};
    use crate::expr::Expression;

    fn dataset(cols: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
        Dataset {
            column_names: (0..cols.len()).map(|j| format!("x{j}")).collect(),
            x: FeatureMatrix::from_columns(cols),
            y,
            provenance: "test".into(),
        }
    }

    #[test]
    fn profile_sigma_examples() {
        assert_eq!(profile_sigma(&[1.0, -1.0], 1e-12), 1.0);
        assert_eq!(profile_sigma(&[0.0, 0.0, 0.0], 1e-12), 1e-12);
        assert_eq!(profile_sigma(&[3.0, 4.0], 1e-12), 12.5);
        assert_eq!(profile_sigma(&[1.0, f64::NAN], 1e-12), f64::INFINITY);
    }

    #[test]
    fn neg_log_lik_examples() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let nll = neg_log_lik(&[1.0, -1.0], 1.0, 2);
        assert!((nll - (two_pi.ln() + 1.0)).abs() < 1e-12);
        assert!((nll - 2.837877).abs() < 1e-6);

        let nll = neg_log_lik(&[0.0], 1e-12, 1);
        assert!((nll - 0.5 * (two_pi * 1e-12).ln()).abs() < 1e-12);

        assert_eq!(neg_log_lik(&[f64::NAN], 1.0, 1), f64::INFINITY);
    }

    #[test]
    fn exact_linear_fit_reaches_floor() {
        let x: Vec<f64> = (1..=20).map(|i| i as f64 / 4.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let ds = dataset(vec![x], y);
        let e = Expression::parse("0.1{p} * x0").unwrap();
        let fit = fit_lm(&e, &[0.1], &ds, &FitConfig::default());
        assert!((fit.theta[0] - 2.0).abs() < 1e-10, "theta {:?}", fit.theta);
        assert_eq!(fit.sigma2, 1e-12);
    }

    #[test]
    fn matches_ordinary_least_squares() {
        // y = 3x + 1 + fixed pseudo-noise; closed form from the 2×2 normal
        // equations computed by hand below.
        let x: Vec<f64> = (0..30).map(|i| i as f64 / 7.0).collect();
        let noise: Vec<f64> = (0..30).map(|i| ((i * 37 % 11) as f64 - 5.0) / 13.0).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&noise)
            .map(|(v, n)| 3.0 * v + 1.0 + n)
            .collect();
        let m = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let det = m * sxx - sx * sx;
        let slope = (m * sxy - sx * sy) / det;
        let intercept = (sxx * sy - sx * sxy) / det;

        let ds = dataset(vec![x], y);
        let e = Expression::parse("0.5{p} * x0 + 0.5{p}").unwrap();
        let fit = fit_lm(&e, &[0.5, 0.5], &ds, &FitConfig::default());
        assert!((fit.theta[0] - slope).abs() < 1e-8 * slope.abs());
        assert!((fit.theta[1] - intercept).abs() < 1e-8 * intercept.abs());
    }

    #[test]
    fn parameterless_expression_short_circuits() {
        let x: Vec<f64> = vec![0.0, 1.0, 2.0];
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let ds = dataset(vec![x], y);
        let e = Expression::parse("sin(x0)").unwrap();
        let fit = fit_lm(&e, &[], &ds, &FitConfig::default());
        assert!(fit.theta.is_empty());
        assert_eq!(fit.iterations, 0);
        assert!(fit.converged);
        assert!(fit.nll.is_finite());
    }

    #[test]
    fn non_finite_start_is_flagged_not_fitted() {
        let ds = dataset(vec![vec![0.0, 1.0]], vec![1.0, 2.0]);
        let e = Expression::parse("logabs(x0) * 1{p}").unwrap();
        // logabs(0) = -inf makes the first prediction non-finite.
        let fit = fit_lm(&e, &[1.0], &ds, &FitConfig::default());
        assert_eq!(fit.nll, f64::INFINITY);
        assert!(!fit.converged);
        assert_eq!(fit.theta, vec![1.0]);
    }

    #[test]
    fn accepted_steps_never_increase_sse() {
        // Nonlinear fit; check SSE at the returned parameters is no worse
        // than at the start.
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| (1.7 * v).exp()).collect();
        let ds = dataset(vec![x.clone()], y.clone());
        let e = Expression::parse("exp(0.2{p} * x0)").unwrap();
        let start = [0.2];
        let fit = fit_lm(&e, &start, &ds, &FitConfig::default());
        let sse_at = |theta: &[f64]| -> f64 {
            crate::eval::evaluate(&e, theta, &ds.x)
                .iter()
                .zip(&ds.y)
                .map(|(f, y)| (y - f) * (y - f))
                .sum()
        };
        assert!(sse_at(&fit.theta) <= sse_at(&start));
        assert!(fit.theta.iter().all(|t| t.is_finite()));
    }

    #[test]
    fn refit_from_optimum_is_stable() {
        let x: Vec<f64> = (0..25).map(|i| i as f64 / 5.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v.sin() + 0.5).collect();
        let ds = dataset(vec![x], y);
        let e = Expression::parse("1{p} * sin(x0) + 0.1{p}").unwrap();
        let cfg = FitConfig::default();
        let first = fit_lm(&e, &[1.0, 0.1], &ds, &cfg);
        let second = fit_lm(&e, &first.theta, &ds, &cfg);
        assert!((second.nll - first.nll).abs() <= cfg.lm_tol.max(1e-9) * first.nll.abs().max(1.0));
    }
}
