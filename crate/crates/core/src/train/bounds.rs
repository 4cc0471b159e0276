//! Closed-form bound expressions with all hidden constants and log factors
//! set to 1. The numbers are only meaningful for comparing trends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be finite and positive, got {v}"
        )));
    }
    Ok(())
}

/// `η = (1/√T)·R/√(L² + β²R²)`.
pub fn theorem3_lr(r: f64, l: f64, beta: f64, t_sgd: u64) -> Result<f64> {
    check_nonneg("R", r)?;
    check_nonneg("L", l)?;
    check_nonneg("beta", beta)?;
    if t_sgd == 0 {
        return Err(Error::InvalidArgument("T_sgd must be at least 1".into()));
    }
    let denom = (l * l + beta * beta * r * r).sqrt();
    if denom == 0.0 {
        return Err(Error::InvalidArgument(
            "L² + β²R² is zero, the step size is undefined".into(),
        ));
    }
    Ok(r / denom / (t_sgd as f64).sqrt())
}

/// `βR² + R·√((L² + β²R²)/T)`.
pub fn opt_error_bound(r: f64, l: f64, beta: f64, t_sgd: u64) -> Result<f64> {
    check_nonneg("R", r)?;
    check_nonneg("L", l)?;
    check_nonneg("beta", beta)?;
    if t_sgd == 0 {
        return Err(Error::InvalidArgument("T_sgd must be at least 1".into()));
    }
    Ok(beta * r * r + r * ((l * l + beta * beta * r * r) / t_sgd as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub beta: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub t_sgd: u64,
    /// Shots per expectation.
    #[serde(rename = "M")]
    pub shots: u64,
    /// Qubits.
    #[serde(rename = "U")]
    pub qubits: u64,
    #[serde(rename = "C_FX")]
    pub c_fx: f64,
    #[serde(rename = "C_FV")]
    pub c_fv: f64,
    /// `|D_A|`, the pre-training source size.
    pub source_size: u64,
    /// `|D_B|`, the fine-tuning target size.
    pub target_size: u64,
    /// `|D|`, the training size of a VQC trained from scratch.
    pub dataset_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerm {
    pub formula: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundColumn {
    pub approximation: BoundTerm,
    pub estimation: BoundTerm,
    pub optimization: BoundTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub note: String,
    pub constants: BoundConstants,
    pub pretrained_vqc: BoundColumn,
    pub vqc_only: BoundColumn,
    pub theorem3_lr: Option<f64>,
}

fn term(formula: &str, value: f64) -> BoundTerm {
    BoundTerm {
        formula: formula.to_string(),
        value,
    }
}

/// Evaluates both columns of the bound comparison with unit constants.
pub fn bound_table(c: &BoundConstants) -> Result<BoundReport> {
    check_nonneg("beta", c.beta)?;
    check_nonneg("L", c.l)?;
    check_nonneg("R", c.r)?;
    check_positive("C_FX", c.c_fx)?;
    check_positive("C_FV", c.c_fv)?;
    for (name, v) in [
        ("T_sgd", c.t_sgd),
        ("M", c.shots),
        ("U", c.qubits),
        ("|D_A|", c.source_size),
        ("|D_B|", c.target_size),
        ("|D|", c.dataset_size),
    ] {
        if v == 0 {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
    }
    let shot_term = 1.0 / (c.shots as f64).sqrt();
    let pretrained = BoundColumn {
        approximation: term(
            "sqrt(C_FX/|D_A|) + 1/sqrt(M)",
            (c.c_fx / c.source_size as f64).sqrt() + shot_term,
        ),
        estimation: term("sqrt(C_FV/|D_B|)", (c.c_fv / c.target_size as f64).sqrt()),
        optimization: term(
            "beta*R^2 + R*sqrt((L^2 + beta^2*R^2)/T_sgd)",
            opt_error_bound(c.r, c.l, c.beta, c.t_sgd)?,
        ),
    };
    let vqc_only = BoundColumn {
        approximation: term("1/sqrt(U) + 1/sqrt(M)", 1.0 / (c.qubits as f64).sqrt() + shot_term),
        estimation: term("sqrt(C_FV/|D|)", (c.c_fv / c.dataset_size as f64).sqrt()),
        optimization: term("~0 under the PL condition", 0.0),
    };
    Ok(BoundReport {
        note: "unit-constant bound values; hidden constants and log factors set to 1, use for trend comparison only"
            .into(),
        constants: c.clone(),
        pretrained_vqc: pretrained,
        vqc_only,
        theorem3_lr: theorem3_lr(c.r, c.l, c.beta, c.t_sgd).ok(),
    })
}
