//! Model-selection criteria: AIC, BIC, BIC-SR, description length, and
//! fractional Bayes factors. All values are in nats.
//!
//! The description length splits into the function complexity
//! `k·ln n + Σ ln|c_i|` (expression string plus integer constants) and the
//! parameter complexity, which prices fitted parameter values at the
//! precision demanded by the observed Fisher information. The FIM is
//! decomposed by SVD and the parameter vector rotated into the stiff/sloppy
//! coordinate system; sloppy directions are clamped to contribute nothing.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::data::Dataset;
use crate::eval::{self, JacobianBatch};
use crate::expr::Expression;
use crate::fit::FitResult;

#[derive(Debug, Error, PartialEq)]
pub enum CriteriaError {
    #[error("candidate has a non-finite Jacobian or Fisher information")]
    InvalidCandidate,
}

/// Stable string identifiers used in configs and output files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Aic,
    Bic,
    BicSr,
    Dl,
    Fbf,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Aic,
        Criterion::Bic,
        Criterion::BicSr,
        Criterion::Dl,
        Criterion::Fbf,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
            Criterion::BicSr => "bic_sr",
            Criterion::Dl => "dl",
            Criterion::Fbf => "fbf",
        }
    }

    pub fn from_id(id: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.id() == id)
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// All five criterion values plus the decomposed complexity terms for one
/// fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionScores {
    pub aic: f64,
    pub bic: f64,
    pub bic_sr: f64,
    pub dl: f64,
    pub fbf: f64,
    pub func_comp: f64,
    pub param_comp: f64,
    /// Parameter count entering AIC/BIC/BIC-SR/FBF: |θ̂| + 1, counting σ̂².
    pub p: usize,
    pub m: usize,
}

impl CriterionScores {
    pub fn get(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
            Criterion::BicSr => self.bic_sr,
            Criterion::Dl => self.dl,
            Criterion::Fbf => self.fbf,
        }
    }

    /// Worst-possible scores for candidates with a non-finite likelihood.
    pub fn invalid(p: usize, m: usize, func_comp: f64) -> Self {
        CriterionScores {
            aic: f64::INFINITY,
            bic: f64::INFINITY,
            bic_sr: f64::INFINITY,
            dl: f64::INFINITY,
            fbf: f64::INFINITY,
            func_comp,
            param_comp: f64::INFINITY,
            p,
            m,
        }
    }
}

/// `k·ln n + Σ ln|c_i|`. Constants of magnitude 1 contribute nothing; with
/// `n = 1` the string term vanishes.
pub fn function_complexity(k: usize, n: usize, constants: &[i64]) -> f64 {
    debug_assert!(k == 0 || n >= 1);
    let string_term = if k == 0 {
        0.0
    } else {
        (k as f64) * (n as f64).ln()
    };
    string_term
        + constants
            .iter()
            .map(|c| (c.unsigned_abs() as f64).ln())
            .sum::<f64>()
}

/// Gauss-Newton form of the observed Fisher information at the MLE:
/// `JᵀJ / σ̂²`. Exact at zero residuals and positive semidefinite by
/// construction.
pub fn fisher_information(jac: &JacobianBatch, sigma2: f64) -> Result<DMatrix<f64>, CriteriaError> {
    debug_assert!(sigma2 > 0.0);
    if !jac.is_finite() {
        return Err(CriteriaError::InvalidCandidate);
    }
    let p = jac.cols();
    let m = jac.rows();
    let mut fim = DMatrix::<f64>::zeros(p, p);
    for a in 0..p {
        let ca = jac.col(a);
        for b in a..p {
            let cb = jac.col(b);
            let mut dot = 0.0;
            for i in 0..m {
                dot += ca[i] * cb[i];
            }
            let v = dot / sigma2;
            fim[(a, b)] = v;
            fim[(b, a)] = v;
        }
    }
    if fim.iter().any(|v| !v.is_finite()) {
        return Err(CriteriaError::InvalidCandidate);
    }
    Ok(fim)
}

/// SVD of the Fisher information with the parameter vector mapped into the
/// rotated coordinate system.
#[derive(Debug, Clone)]
pub struct FimDecomposition {
    pub singular_values: Vec<f64>,
    /// Rotation V (columns are the rotated directions); orthogonal.
    pub rotation: DMatrix<f64>,
    /// Vᵀ θ̂.
    pub theta_rot: Vec<f64>,
}

pub fn decompose_fim(
    fim: &DMatrix<f64>,
    theta: &[f64],
) -> Result<FimDecomposition, CriteriaError> {
    let p = theta.len();
    debug_assert_eq!(fim.nrows(), p);
    debug_assert_eq!(fim.ncols(), p);
    if fim.iter().any(|v| !v.is_finite()) {
        return Err(CriteriaError::InvalidCandidate);
    }
    if p == 0 {
        return Ok(FimDecomposition {
            singular_values: vec![],
            rotation: DMatrix::zeros(0, 0),
            theta_rot: vec![],
        });
    }
    let svd = fim.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let theta_vec = DVector::from_column_slice(theta);
    let theta_rot = &v_t * theta_vec;
    Ok(FimDecomposition {
        singular_values: svd.singular_values.iter().copied().collect(),
        rotation: v_t.transpose(),
        theta_rot: theta_rot.iter().copied().collect(),
    })
}

/// Parameter complexity `½ Σ max(0, ln S_ii − ln 3 + ln|θ̂ʳᵒᵗ_i|)`.
/// Degenerate directions (zero singular value or zero rotated component)
/// contribute nothing via the clamp; `p = 0` gives 0.
pub fn param_complexity(fim: &DMatrix<f64>, theta: &[f64]) -> Result<f64, CriteriaError> {
    let dec = decompose_fim(fim, theta)?;
    let ln3 = 3.0_f64.ln();
    let mut sum = 0.0;
    for (s, t) in dec.singular_values.iter().zip(&dec.theta_rot) {
        let term = s.ln() - ln3 + t.abs().ln();
        sum += term.max(0.0);
    }
    Ok(0.5 * sum)
}

pub fn aic(nll: f64, p: usize) -> f64 {
    debug_assert!(p >= 1);
    2.0 * nll + 2.0 * p as f64
}

pub fn bic(nll: f64, p: usize, m: usize) -> f64 {
    debug_assert!(p >= 1 && m >= 1);
    2.0 * nll + (p as f64) * (m as f64).ln()
}

pub fn bic_sr(nll: f64, p: usize, m: usize, func_comp: f64) -> f64 {
    2.0 * nll + 2.0 * func_comp + (p as f64) * (m as f64).ln()
}

pub fn dl(nll: f64, func_comp: f64, param_comp: f64) -> f64 {
    nll + func_comp + param_comp
}

/// Lattice constant in the FBF parameter penalty: ln(2π·e^{1−ln 3}).
pub fn fbf_lattice_constant() -> f64 {
    (2.0 * std::f64::consts::PI).ln() + 1.0 - 3.0_f64.ln()
}

/// Fractional Bayes factor loss with calibration fraction b = m^{-1/2}:
/// `(1−b)·nll + func_comp + (p/2)·(ln(2π·e^{1−ln 3}) − ln b)`.
pub fn fbf(nll: f64, p: usize, m: usize, func_comp: f64) -> f64 {
    debug_assert!(m >= 2 && p >= 1);
    let b = 1.0 / (m as f64).sqrt();
    (1.0 - b) * nll + func_comp + (p as f64 / 2.0) * (fbf_lattice_constant() - b.ln())
}

/// Computes all five criteria for a fitted expression on its training data.
///
/// Candidates with non-finite NLL get `+inf` everywhere; candidates whose
/// Jacobian is non-finite at θ̂ keep their finite criteria but receive the
/// worst description length.
pub fn score_model(expr: &Expression, fit: &FitResult, train: &Dataset) -> CriterionScores {
    let counts = expr.complexity_counts();
    let func_comp = function_complexity(counts.k, counts.n, &counts.constants);
    let m = train.rows();
    let p = fit.theta.len() + 1;

    if !fit.nll.is_finite() {
        return CriterionScores::invalid(p, m, func_comp);
    }

    let param_comp = if fit.theta.is_empty() {
        0.0
    } else {
        let jac = eval::jacobian(expr, &fit.theta, &train.x);
        fisher_information(&jac, fit.sigma2)
            .and_then(|fim| param_complexity(&fim, &fit.theta))
            .unwrap_or(f64::INFINITY)
    };

    CriterionScores {
        aic: aic(fit.nll, p),
        bic: bic(fit.nll, p, m),
        bic_sr: bic_sr(fit.nll, p, m, func_comp),
        dl: dl(fit.nll, func_comp, param_comp),
        fbf: fbf(fit.nll, p, m, func_comp),
        func_comp,
        param_comp,
        p,
        m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureMatrix;

    #[test]
    fn function_complexity_examples() {
        let v = function_complexity(6, 4, &[2]);
        assert!((v - 9.0109133).abs() < 1e-6);
        assert_eq!(function_complexity(1, 1, &[]), 0.0);
        let v = function_complexity(4, 3, &[1]);
        assert!((v - 4.0 * 3.0_f64.ln()).abs() < 1e-12);
        // sign does not change the constant codelength
        assert_eq!(
            function_complexity(0, 1, &[-5]),
            function_complexity(0, 1, &[5])
        );
    }

    fn jac_from_cols(cols: Vec<Vec<f64>>) -> JacobianBatch {
        let x = FeatureMatrix::from_columns(cols.clone());
        // A linear model θᵀx has Jacobian equal to the data columns.
        let terms: Vec<String> = (0..cols.len())
            .map(|j| format!("0{{p}} * x{j}"))
            .collect();
        let e = Expression::parse(&terms.join(" + ")).unwrap();
        eval::jacobian(&e, &vec![0.0; cols.len()], &x)
    }

    #[test]
    fn fisher_information_examples() {
        let jac = jac_from_cols(vec![vec![1.0, 2.0]]);
        let fim = fisher_information(&jac, 1.0).unwrap();
        assert_eq!(fim[(0, 0)], 5.0);

        // p = 0: a parameterless expression has an m×0 Jacobian.
        let x = FeatureMatrix::from_columns(vec![vec![1.0, 2.0]]);
        let e = Expression::parse("x0").unwrap();
        let jac = eval::jacobian(&e, &[], &x);
        let fim = fisher_information(&jac, 1.0).unwrap();
        assert_eq!(fim.nrows(), 0);
    }

    #[test]
    fn fisher_information_matches_xtx_for_linear_model() {
        let cols = vec![vec![1.0, 2.0, 3.0], vec![0.5, -1.0, 2.0]];
        let jac = jac_from_cols(cols.clone());
        let sigma2 = 0.25;
        let fim = fisher_information(&jac, sigma2).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let dot: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
                assert!((fim[(a, b)] - dot / sigma2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn param_complexity_examples() {
        // p=1, S=[9], θ=1: ½·max(0, ln9 − ln3 + 0) = ½·ln3
        let fim = DMatrix::from_element(1, 1, 9.0);
        let v = param_complexity(&fim, &[1.0]).unwrap();
        assert!((v - 0.5 * 3.0_f64.ln()).abs() < 1e-12);
        assert!((v - 0.549306).abs() < 1e-6);

        // sloppy direction clamps to zero
        let fim = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(param_complexity(&fim, &[1.0]).unwrap(), 0.0);

        // only the stiff direction of a diagonal FIM contributes
        let fim = DMatrix::from_diagonal(&DVector::from_vec(vec![100.0, 1e-12]));
        let v = param_complexity(&fim, &[2.0, 5.0]).unwrap();
        let expect = 0.5 * (100.0_f64.ln() - 3.0_f64.ln() + 2.0_f64.ln());
        assert!((v - expect).abs() < 1e-10);
    }

    #[test]
    fn param_complexity_degenerate_terms() {
        assert_eq!(
            param_complexity(&DMatrix::zeros(0, 0), &[]).unwrap(),
            0.0
        );
        let fim = DMatrix::from_element(1, 1, 0.0);
        assert_eq!(param_complexity(&fim, &[1.0]).unwrap(), 0.0);
        let fim = DMatrix::from_element(1, 1, 9.0);
        assert_eq!(param_complexity(&fim, &[0.0]).unwrap(), 0.0);
        let fim = DMatrix::from_element(1, 1, f64::NAN);
        assert_eq!(
            param_complexity(&fim, &[1.0]),
            Err(CriteriaError::InvalidCandidate)
        );
    }

    #[test]
    fn information_criteria_examples() {
        assert!((aic(2.837877, 3) - 11.675754).abs() < 1e-9);
        let b = bic(2.837877, 3, 2);
        assert!((b - (5.675754 + 3.0 * 2.0_f64.ln())).abs() < 1e-9);
        let bsr = bic_sr(10.0, 2, 100, 9.0109);
        assert!((bsr - 47.2321).abs() < 1e-3);
    }

    #[test]
    fn dl_is_a_plain_sum() {
        assert_eq!(dl(0.0, 0.0, 0.0), 0.0);
        assert!((dl(-5.0, 9.0109, 0.5493) - 4.5602).abs() < 1e-9);
    }

    #[test]
    fn fbf_constant_and_examples() {
        // Two algebraic routes to the lattice constant must agree.
        let direct = (2.0 * std::f64::consts::PI * (1.0 - 3.0_f64.ln()).exp()).ln();
        assert!((fbf_lattice_constant() - direct).abs() < 1e-12);
        assert!((fbf_lattice_constant() - 1.7392647777).abs() < 1e-9);

        // b = m^{-1/2}
        assert_eq!(1.0 / (100.0_f64).sqrt(), 0.1);
        let v = fbf(10.0, 2, 100, 9.0109);
        // (1−0.1)·10 + func_comp + (2/2)·(C − ln 0.1)
        let expect = 0.9 * 10.0 + 9.0109 + fbf_lattice_constant() + 10.0_f64.ln();
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 22.0527).abs() < 1e-3);

        let v = fbf(0.0, 1, 4, 0.0);
        let expect = 0.5 * (fbf_lattice_constant() + 2.0_f64.ln());
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn bic_exceeds_aic_for_large_m() {
        for p in 1..4 {
            let nll = 3.21;
            assert!(bic(nll, p, 100) > aic(nll, p));
        }
    }

    #[test]
    fn function_complexity_monotone_in_k() {
        for n in 1..6 {
            let mut last = -1.0;
            for k in 0..20 {
                let v = function_complexity(k, n, &[]);
                assert!(v >= last);
                last = v;
            }
        }
    }

    #[test]
    fn nats_to_bits_preserves_the_argmin() {
        let scores = [4.2, 3.9, 5.5, 3.95];
        let argmin = |xs: &[f64]| {
            xs.iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        let bits: Vec<f64> = scores.iter().map(|v| v / 2.0_f64.ln()).collect();
        assert_eq!(argmin(&scores), argmin(&bits));
    }

    #[test]
    fn score_model_full_pipeline_matches_parts() {
        use crate::fit::{fit_lm, FitConfig};
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| 2.0 * v + ((i % 7) as f64 - 3.0) / 50.0)
            .collect();
        let train = crate::data::Dataset {
            x: FeatureMatrix::from_columns(vec![x]),
            y,
            column_names: vec!["x0".into()],
            provenance: "test".into(),
        };
        let e = Expression::parse("1{p} * x0").unwrap();
        let fit = fit_lm(&e, &[1.0], &train, &FitConfig::default());
        let scores = score_model(&e, &fit, &train);

        let counts = e.complexity_counts();
        let fc = function_complexity(counts.k, counts.n, &counts.constants);
        let jac = eval::jacobian(&e, &fit.theta, &train.x);
        let fim = fisher_information(&jac, fit.sigma2).unwrap();
        let pc = param_complexity(&fim, &fit.theta).unwrap();
        assert_eq!(scores.func_comp, fc);
        assert_eq!(scores.param_comp, pc);
        assert_eq!(scores.dl, fit.nll + fc + pc);
        assert_eq!(scores.aic, 2.0 * fit.nll + 4.0);
        assert_eq!(scores.p, 2);
        assert!(scores.dl >= fit.nll);
    }

    #[test]
    fn invalid_nll_scores_infinite() {
        let s = CriterionScores::invalid(2, 10, 1.5);
        for c in Criterion::ALL {
            assert_eq!(s.get(c), f64::INFINITY);
        }
        assert_eq!(s.func_comp, 1.5);
    }

    #[test]
    fn criterion_ids_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(Criterion::from_id(c.id()), Some(c));
        }
        assert_eq!(Criterion::from_id("mdl"), None);
    }
}
