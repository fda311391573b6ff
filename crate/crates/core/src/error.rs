use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("D vanishes identically on [{from}, {to}]; its zero set must be finite")]
    Plateau { from: f64, to: f64 },
    #[error("grid doubling moved {constant} of interval {k} by {relative:e} (relative)")]
    GridNonConvergence {
        k: usize,
        constant: &'static str,
        relative: f64,
    },
    #[error("adaptive step fell to {step:e} at u = {u}")]
    StepUnderflow { u: f64, step: f64 },
    #[error("integration stopped after {steps} steps at u = {u}")]
    StepLimit { u: f64, steps: usize },
    #[error("no feasible speed found for interval {k} up to c = {c_max}")]
    BracketFailure { k: usize, c_max: f64 },
    #[error("hypothesis `{name}` fails at u = {u}: {detail}")]
    Hypothesis {
        name: String,
        u: f64,
        detail: String,
    },
    #[error("phi = z/D vanishes at the interior point u = {u}")]
    PhiSingular { u: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = WaveError> = std::result::Result<T, E>;
