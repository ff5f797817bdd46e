//! Standalone scoring of a single expression against a CSV dataset:
//! parse, fit, and report all five criteria with their components.

use std::path::Path;

use thiserror::Error;

use mdlgpsr::criteria::score_model;
use mdlgpsr::data::{self, DataError};
use mdlgpsr::expr::{Expression, ParseError};
use mdlgpsr::fit::{fit_lm, FitConfig};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("cannot parse expression: {0}")]
    Expr(#[from] ParseError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("expression uses x{used} but the dataset has only {cols} input column(s)")]
    VariableOutOfRange { used: usize, cols: usize },
}

#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub expression: String,
    pub fitted_expression: String,
    pub m: usize,
    pub p: usize,
    pub nll: f64,
    pub sigma2: f64,
    pub train_rmse: f64,
    pub func_comp: f64,
    pub param_comp: f64,
    pub aic: f64,
    pub bic: f64,
    pub bic_sr: f64,
    pub dl: f64,
    pub fbf: f64,
    pub converged: bool,
}

pub fn score_expression(
    expr_text: &str,
    csv_path: &Path,
    target: Option<&str>,
    fit_cfg: &FitConfig,
) -> Result<ScoreReport, ScoreError> {
    let expr = Expression::parse(expr_text)?;
    let ds = data::load_csv(csv_path, target)?;
    if let Some(used) = expr.max_variable() {
        if used >= ds.dims() {
            return Err(ScoreError::VariableOutOfRange {
                used,
                cols: ds.dims(),
            });
        }
    }
    let fit = fit_lm(&expr, expr.params(), &ds, fit_cfg);
    let fitted = expr
        .with_params(fit.theta.clone())
        .expect("fit preserves parameter count");
    let scores = score_model(&fitted, &fit, &ds);
    Ok(ScoreReport {
        expression: expr.to_string(),
        fitted_expression: fitted.to_string(),
        m: ds.rows(),
        p: scores.p,
        nll: fit.nll,
        sigma2: fit.sigma2,
        train_rmse: fit.sigma2.sqrt(),
        func_comp: scores.func_comp,
        param_comp: scores.param_comp,
        aic: scores.aic,
        bic: scores.bic,
        bic_sr: scores.bic_sr,
        dl: scores.dl,
        fbf: scores.fbf,
        converged: fit.converged,
    })
}

impl std::fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "expression        = {}", self.expression)?;
        writeln!(f, "fitted            = {}", self.fitted_expression)?;
        writeln!(f, "observations (m)  = {}", self.m)?;
        writeln!(f, "parameters (p)    = {} (incl. noise variance)", self.p)?;
        writeln!(f, "converged         = {}", self.converged)?;
        writeln!(f, "nll               = {}", self.nll)?;
        writeln!(f, "sigma2            = {}", self.sigma2)?;
        writeln!(f, "train_rmse        = {}", self.train_rmse)?;
        writeln!(f, "func_complexity   = {}", self.func_comp)?;
        writeln!(f, "param_complexity  = {}", self.param_comp)?;
        writeln!(f, "aic               = {}", self.aic)?;
        writeln!(f, "bic               = {}", self.bic)?;
        writeln!(f, "bic_sr            = {}", self.bic_sr)?;
        writeln!(f, "dl                = {}", self.dl)?;
        write!(f, "fbf               = {}", self.fbf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn scores_a_linear_expression() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("mdlgpsr_score_{}.csv", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "x0,y").unwrap();
        for i in 0..20 {
            let x = i as f64 / 5.0;
            writeln!(f, "{x},{}", 2.0 * x).unwrap();
        }
        drop(f);

        let report =
            score_expression("1{p} * x0", &path, None, &FitConfig::default()).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(report.m, 20);
        assert_eq!(report.p, 2);
        assert!(report.converged);
        assert!(report.fitted_expression.contains("* x0"));
        assert!((report.dl - (report.nll + report.func_comp + report.param_comp)).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_variables() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("mdlgpsr_score_bad_{}.csv", std::process::id()));
        std::fs::write(&path, "x0,y\n1,2\n").unwrap();
        let err = score_expression("x3", &path, None, &FitConfig::default()).unwrap_err();
        std::fs::remove_file(&path).unwrap();
        assert!(matches!(err, ScoreError::VariableOutOfRange { .. }));
    }
}
