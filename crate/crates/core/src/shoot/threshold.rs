use serde::Serialize;

use super::integrate::{integrate_z, ShootOptions};
use crate::error::{Result, WaveError};
use crate::model::{Problem, SignInterval};

const MAX_EXPANSIONS: u32 = 8;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub k: usize,
    pub c_star: f64,
    pub bracket_used: (f64, f64),
    pub iterations: usize,
    pub tol: f64,
    /// The lower end of the bracket was already feasible, so it is returned.
    pub bracket_degenerate: bool,
    pub expansions: u32,
}

/// Smallest feasible speed on one interval, by bisection on the shooting
/// predicate inside `bracket`.
pub fn threshold_for_interval(
    p: &Problem,
    iv: &SignInterval,
    bracket: (f64, f64),
    tol_c: f64,
    opts: &ShootOptions,
) -> Result<ThresholdResult> {
    let feasible = |c: f64| -> Result<bool> { Ok(integrate_z(p, iv, c, opts)?.is_feasible()) };
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo - 1e-9 {
        return Err(WaveError::InvalidInput(format!(
            "bracket ({lo}, {hi}) for interval {} is not ordered",
            iv.k
        )));
    }
    hi = hi.max(lo);

    let mut expansions = 0;
    while !feasible(hi)? {
        if expansions == MAX_EXPANSIONS {
            return Err(WaveError::BracketFailure { k: iv.k, c_max: hi });
        }
        let width = (hi - lo).max(1e-2 * lo.abs().max(1.0));
        hi = lo + 1.5 * width;
        expansions += 1;
    }
    let bracket_used = (lo, hi);

    if feasible(lo)? {
        return Ok(ThresholdResult {
            k: iv.k,
            c_star: lo,
            bracket_used,
            iterations: 0,
            tol: tol_c,
            bracket_degenerate: true,
            expansions,
        });
    }

    let mut iterations = 0;
    while hi - lo > tol_c && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdResult {
        k: iv.k,
        c_star: hi,
        bracket_used,
        iterations,
        tol: tol_c,
        bracket_degenerate: false,
        expansions,
    })
}
