//! Whether `z/D` extends continuously across the interior zeros of `D`, and
//! the single-sign-change criterion for existence at `ĉ`.

use serde::Serialize;

use super::{glue, GluedZ, Junction, SolverOptions, Threshold};
use crate::error::Result;
use crate::model::{Decomposition, HSign, Problem, ZeroSlope};
use crate::quad::{cumulative_trapezoid, uniform_grid};

/// `|ż|` below this counts as a vanishing one-sided derivative.
const DZ_ZERO: f64 = 1e-4;
/// Relative agreement required between the two one-sided quotients.
const QUOTIENT_MATCH: f64 = 1e-4;
/// Relative agreement required between sampled and predicted `z/D`.
const CROSS_CHECK_RTOL: f64 = 5e-2;
const CROSS_CHECK_DECADES: std::ops::RangeInclusive<i32> = 3..=6;
const COROLLARY_GRID: usize = 4096;
const F_VANISHES: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotientKind {
    SmoothQuotient,
    PLimiteLimit,
    Jump,
    InfiniteQuotient,
}

impl QuotientKind {
    pub fn extends(self) -> bool {
        matches!(
            self,
            QuotientKind::SmoothQuotient | QuotientKind::PLimiteLimit
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exists {
    Yes,
    No,
    UndeterminedAtCHat,
    /// The sampled quotient disagreed with the predicted limit.
    Undetermined,
}

/// Sampled `z/D` at `u0 ∓ 10^-j` on each side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub passed: bool,
    /// `(distance, z/D)` on the left, shallowest first.
    pub left: Vec<(f64, f64)>,
    pub right: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroVerdict {
    pub u0: f64,
    pub kind: QuotientKind,
    /// Continuous value of `z/D` at `u0`, when it exists.
    pub phi: Option<f64>,
    pub left_quotient: Option<f64>,
    pub right_quotient: Option<f64>,
    pub dz_left: f64,
    pub dz_right: f64,
    pub d_slope_left: f64,
    pub d_slope_right: f64,
    /// `f(u0) − c·g(u0)`.
    pub drift: f64,
    pub cross_check: CrossCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceVerdict {
    pub c: f64,
    /// Speed the interval problems were actually solved at.
    pub c_evaluated: f64,
    pub exists: Exists,
    pub reason: String,
    pub per_zero: Vec<ZeroVerdict>,
    pub infeasible_intervals: Vec<usize>,
}

impl ExistenceVerdict {
    pub fn phi_at_zero(&self, u0: f64) -> Option<f64> {
        self.per_zero
            .iter()
            .find(|z| z.u0 == u0)
            .and_then(|z| z.phi)
    }
}

/// Short decimal form of a point for messages.
pub(crate) fn fmt_u(u: f64) -> String {
    let s = format!("{u:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn slope_for(d: &Decomposition, u0: f64) -> ZeroSlope {
    d.slope_at(u0).copied().unwrap_or_else(|| {
        *d.d_slopes
            .iter()
            .min_by(|a, b| (a.u0 - u0).abs().total_cmp(&(b.u0 - u0).abs()))
            .expect("every junction is a zero of D")
    })
}

fn side_samples(p: &Problem, glued: &GluedZ, u0: f64, dir: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for j in CROSS_CHECK_DECADES {
        let dist = 10f64.powi(-j);
        if let Some(phi) = glued.phi_at(p, u0 + dir * dist)? {
            out.push((dist, phi));
        }
    }
    Ok(out)
}

/// Deepest sample within tolerance of `pred`, or shrinking towards zero.
fn approaches(samples: &[(f64, f64)], pred: f64) -> bool {
    let Some(&(_, deep)) = samples.last() else {
        return false;
    };
    if pred == 0.0 {
        return samples.len() >= 2 && deep.abs() < samples[0].1.abs();
    }
    (deep - pred).abs() <= CROSS_CHECK_RTOL * pred.abs()
}

fn grows(samples: &[(f64, f64)]) -> bool {
    samples.len() >= 2 && samples.last().unwrap().1.abs() > samples[0].1.abs()
}

fn judge_zero(p: &Problem, d: &Decomposition, glued: &GluedZ, j: &Junction) -> Result<ZeroVerdict> {
    let u0 = j.u0;
    let c = glued.c;
    let slope = slope_for(d, u0);
    let drift = p.f.eval(u0)? - c * p.g.eval(u0)?;
    let tol = d.tolerances.derivative;
    let left = side_samples(p, glued, u0, -1.0)?;
    let right = side_samples(p, glued, u0, 1.0)?;

    let (kind, phi, lq, rq, passed) = if !slope.is_degenerate(tol) {
        let lq = j.dz_left / slope.left;
        let rq = j.dz_right / slope.right;
        let mean = 0.5 * (lq + rq);
        let agree = (lq - rq).abs() <= QUOTIENT_MATCH * (1.0 + mean.abs());
        let passed = approaches(&left, lq) && approaches(&right, rq);
        if agree {
            (
                QuotientKind::SmoothQuotient,
                Some(mean),
                Some(lq),
                Some(rq),
                passed,
            )
        } else {
            (QuotientKind::Jump, None, Some(lq), Some(rq), passed)
        }
    } else {
        let flat_left = j.dz_left.abs() <= DZ_ZERO;
        let flat_right = j.dz_right.abs() <= DZ_ZERO;
        if drift.abs() <= tol {
            // D/z → 0 on any side where ż vanishes
            let passed = grows(&left) || grows(&right);
            (QuotientKind::InfiniteQuotient, None, None, None, passed)
        } else if flat_left && flat_right && drift < 0.0 {
            let v = p.rho.eval(u0)? / drift;
            let passed = approaches(&left, v) && approaches(&right, v);
            (
                QuotientKind::PLimiteLimit,
                Some(v),
                Some(v),
                Some(v),
                passed,
            )
        } else {
            let passed = (!flat_left && grows(&left))
                || (!flat_right && grows(&right))
                || (flat_left && flat_right && (grows(&left) || grows(&right)));
            (QuotientKind::InfiniteQuotient, None, None, None, passed)
        }
    };
    Ok(ZeroVerdict {
        u0,
        kind,
        phi,
        left_quotient: lq,
        right_quotient: rq,
        dz_left: j.dz_left,
        dz_right: j.dz_right,
        d_slope_left: slope.left,
        d_slope_right: slope.right,
        drift,
        cross_check: CrossCheck {
            passed,
            left,
            right,
        },
    })
}

fn infeasible_reason(glued: &GluedZ) -> String {
    let ks: Vec<String> = glued.infeasible().iter().map(|k| k.to_string()).collect();
    format!(
        "no interval solution on interval {} at c = {}",
        ks.join(", "),
        glued.c
    )
}

/// Continuous-extension test of `z/D` at every interior zero of `D`.
pub fn extension_check(p: &Problem, d: &Decomposition, glued: &GluedZ) -> Result<ExistenceVerdict> {
    let mut verdict = ExistenceVerdict {
        c: glued.c,
        c_evaluated: glued.c,
        exists: Exists::Yes,
        reason: String::new(),
        per_zero: Vec::new(),
        infeasible_intervals: glued.infeasible(),
    };
    if !glued.all_feasible() {
        verdict.exists = Exists::No;
        verdict.reason = infeasible_reason(glued);
        return Ok(verdict);
    }
    for j in &glued.junctions {
        verdict.per_zero.push(judge_zero(p, d, glued, j)?);
    }

    if let Some(z) = verdict.per_zero.iter().find(|z| !z.kind.extends()) {
        verdict.exists = Exists::No;
        verdict.reason = match z.kind {
            QuotientKind::Jump => format!("quotient jump at {}", fmt_u(z.u0)),
            _ => format!("infinite quotient at {}", fmt_u(z.u0)),
        };
    } else if let Some(z) = verdict.per_zero.iter().find(|z| !z.cross_check.passed) {
        verdict.exists = Exists::Undetermined;
        verdict.reason = format!(
            "sampled z/D near {} does not approach its predicted limit",
            fmt_u(z.u0)
        );
    } else if verdict.per_zero.is_empty() {
        verdict.reason = "D has no interior zeros".into();
    } else {
        verdict.reason = "z/D extends continuously across every zero of D".into();
    }
    Ok(verdict)
}

/// Existence at `c`, taking the position of `c` relative to `ĉ` into account.
/// Speeds within the guard of `ĉ` are solved at `max(c, ĉ)`.
pub fn existence_at(
    p: &Problem,
    d: &Decomposition,
    th: &Threshold,
    corollary: &CorollaryOutcome,
    c: f64,
    opts: &SolverOptions,
) -> Result<(GluedZ, ExistenceVerdict)> {
    let at_c_hat = th.is_at_c_hat(c);
    let c_eval = if at_c_hat { c.max(th.c_hat) } else { c };
    let glued = glue(p, d, c_eval, &opts.shoot)?;
    let mut v = extension_check(p, d, &glued)?;
    v.c = c;

    if at_c_hat {
        if !glued.all_feasible() {
            v.exists = Exists::Undetermined;
            v.reason = format!("at the threshold: {}", infeasible_reason(&glued));
        } else if d.d0.is_empty() {
            v.exists = Exists::Yes;
            v.reason = "at the threshold with no interior zeros of D".into();
        } else if corollary.status == CorollaryStatus::AppliesExists {
            if v.exists == Exists::Yes {
                v.reason = "at the threshold with a single sign change of D".into();
            } else {
                v.exists = Exists::Undetermined;
                v.reason = format!(
                    "existence holds at the threshold but the numerical check reports: {}",
                    v.reason
                );
            }
        } else {
            v.reason = format!(
                "undecided at the threshold; numerical evidence: {}",
                v.reason
            );
            v.exists = Exists::UndeterminedAtCHat;
        }
    } else if c < th.c_hat {
        if v.exists != Exists::No {
            v.reason = format!("speed below the threshold {}", th.c_hat);
        }
        v.exists = Exists::No;
    }
    Ok((glued, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryStatus {
    AppliesExists,
    AppliesConditionsFail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryCheck {
    pub name: String,
    pub passed: bool,
    /// False for checks reported only as information.
    pub required: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryOutcome {
    pub status: CorollaryStatus,
    pub u0: Option<f64>,
    pub checks: Vec<CorollaryCheck>,
}

fn check(name: &str, passed: bool, required: bool, detail: String) -> CorollaryCheck {
    CorollaryCheck {
        name: name.into(),
        passed,
        required,
        detail,
    }
}

/// Minimum over the grid of `∫ g` from `from` towards `to`, oriented positive.
fn min_running_integral(p: &Problem, from: f64, to: f64) -> Result<f64> {
    let x = uniform_grid(from, to, COROLLARY_GRID);
    let y: Vec<f64> = x.iter().map(|&u| p.g.eval(u)).collect::<Result<_, _>>()?;
    let sign = if to > from { 1.0 } else { -1.0 };
    Ok(cumulative_trapezoid(&x, &y)
        .iter()
        .skip(1)
        .map(|v| sign * v)
        .fold(f64::INFINITY, f64::min))
}

fn f_vanishes_on(p: &Problem, a: f64, b: f64) -> Result<bool> {
    for u in uniform_grid(a, b, COROLLARY_GRID) {
        if p.f.eval(u)?.abs() > F_VANISHES {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Existence at `ĉ` when `D` changes sign exactly once, from positive to
/// negative, under the accompanying conditions on `g` and `f`.
pub fn corollary_one_existence_at_c_hat(
    p: &Problem,
    d: &Decomposition,
) -> Result<CorollaryOutcome> {
    let shape = d.d0.len() == 1
        && d.intervals.len() == 2
        && d.intervals[0].h_sign == HSign::Positive
        && d.intervals[1].h_sign == HSign::Negative;
    let mut checks = vec![check(
        "single_sign_change_positive_to_negative",
        shape,
        true,
        format!("{} interior zeros of D", d.d0.len()),
    )];
    if !shape {
        return Ok(CorollaryOutcome {
            status: CorollaryStatus::NotApplicable,
            u0: None,
            checks,
        });
    }
    let u0 = d.d0[0];

    let diff = d.intervals.iter().all(|iv| iv.hdot_converged);
    checks.push(check("h_differentiable_at_ends", diff, true, String::new()));
    let (g0, g1) = (p.g.eval(0.0)?, p.g.eval(1.0)?);
    checks.push(check(
        "g_positive_at_ends",
        g0 > 0.0 && g1 > 0.0,
        true,
        format!("g(0) = {g0}, g(1) = {g1}"),
    ));
    let left = min_running_integral(p, 0.0, u0)?;
    checks.push(check(
        "g_integral_positive_left",
        left > 0.0,
        true,
        format!("minimum {left:e}"),
    ));
    let right = min_running_integral(p, 1.0, u0)?;
    checks.push(check(
        "g_integral_positive_right",
        right > 0.0,
        true,
        format!("minimum {right:e}"),
    ));

    let degenerate = d.is_degenerate_zero(u0);
    let gu0 = p.g.eval(u0)?;
    let ratio = p.f.eval(u0)? / gu0;
    let ends = (p.f.eval(0.0)? / g0).max(p.f.eval(1.0)? / g1);
    let ratio_ok = gu0 > 0.0 && ratio < ends;
    let f_zero = f_vanishes_on(p, 0.0, u0)? || f_vanishes_on(p, u0, 1.0)?;
    checks.push(check(
        "g_positive_at_zero",
        gu0 > 0.0,
        degenerate,
        format!("g({}) = {gu0}", fmt_u(u0)),
    ));
    checks.push(check(
        "zero_ratio_below_endpoint_max",
        ratio_ok,
        false,
        format!("f/g = {ratio} at the zero, {ends} at the ends"),
    ));
    checks.push(check(
        "f_vanishes_on_one_side",
        f_zero,
        false,
        String::new(),
    ));

    let base = checks.iter().all(|c| !c.required || c.passed);
    let status = if base && (!degenerate || ratio_ok || f_zero) {
        CorollaryStatus::AppliesExists
    } else {
        CorollaryStatus::AppliesConditionsFail
    };
    Ok(CorollaryOutcome {
        status,
        u0: Some(u0),
        checks,
    })
}
