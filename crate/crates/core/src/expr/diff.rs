//! Richardson-extrapolated difference quotients.

use super::{ExprError, ScalarFunction};

/// Magnitude beyond which a difference quotient is reported as infinite.
pub const DIVERGENCE_CAP: f64 = 1e12;

const BASE_STEP: f64 = 1e-3;
const HALVINGS: usize = 4;
/// Extra halvings used only to decide whether the quotient blows up.
const DIVERGENCE_HALVINGS: usize = 14;
const DIVERGENCE_RATIO: f64 = 1.1;
const SECANT_CONVERGENCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Central,
}

/// Result of [`secant_limit_at`]; `converged` is false when the last two
/// extrapolants disagree beyond `1e-6` of the largest quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecantLimit {
    pub value: f64,
    pub converged: bool,
}

/// Two-level Richardson tableau over a halving sequence.
///
/// `k1`, `k2` are the error-order factors `2^p` of the two leading terms.
fn richardson(q: &[f64], k1: f64, k2: f64) -> (f64, f64) {
    let l1: Vec<f64> = q
        .windows(2)
        .map(|w| (k1 * w[1] - w[0]) / (k1 - 1.0))
        .collect();
    let l2: Vec<f64> = l1
        .windows(2)
        .map(|w| (k2 * w[1] - w[0]) / (k2 - 1.0))
        .collect();
    let n = l2.len();
    (l2[n - 1], l2[n - 2])
}

/// Derivative of an arbitrary fallible function; `scale` is the length of
/// the interval the point belongs to (the base step is `1e-3·scale`).
pub fn derivative_of<F>(f: F, u0: f64, side: Side, scale: f64) -> Result<f64, ExprError>
where
    F: Fn(f64) -> Result<f64, ExprError>,
{
    let quotient = |h: f64| -> Result<f64, ExprError> {
        Ok(match side {
            Side::Central => (f(u0 + h)? - f(u0 - h)?) / (2.0 * h),
            Side::Right => (f(u0 + h)? - f(u0)?) / h,
            Side::Left => (f(u0)? - f(u0 - h)?) / h,
        })
    };
    let h0 = BASE_STEP * scale;
    let mut q = Vec::with_capacity(HALVINGS + 1);
    let mut h = h0;
    for _ in 0..=HALVINGS {
        q.push(quotient(h)?);
        h *= 0.5;
    }

    if side != Side::Central {
        let mut tail = q.clone();
        for _ in 0..(DIVERGENCE_HALVINGS - HALVINGS) {
            tail.push(quotient(h)?);
            h *= 0.5;
        }
        if let Some(inf) = divergence(&tail) {
            return Ok(inf);
        }
    }

    let (k1, k2) = match side {
        Side::Central => (4.0, 16.0),
        _ => (2.0, 4.0),
    };
    let (best, _) = richardson(&q, k1, k2);
    if best.abs() > DIVERGENCE_CAP {
        return Ok(f64::INFINITY.copysign(best));
    }
    Ok(best)
}

/// Signed infinity if the quotients grow geometrically over the whole tail
/// and end well above where they started.
fn divergence(q: &[f64]) -> Option<f64> {
    let last = *q.last()?;
    if last.abs() > DIVERGENCE_CAP {
        return Some(f64::INFINITY.copysign(last));
    }
    let sustained = q[HALVINGS..]
        .windows(2)
        .all(|w| w[1].abs() >= DIVERGENCE_RATIO * w[0].abs() && w[0].signum() == w[1].signum());
    if sustained && last.abs() >= 10.0 * q[0].abs().max(1.0) {
        Some(f64::INFINITY.copysign(last))
    } else {
        None
    }
}

/// Derivative of `f` at `u0`. One-sided at the endpoints of `[0, 1]`.
pub fn derivative_at(f: &ScalarFunction, u0: f64, side: Side) -> Result<f64, ExprError> {
    derivative_of(|u| f.eval(u), u0, side, 1.0)
}

/// Limit of `h(u)/(u - u0)` as `u → u0` from `side`, for an arbitrary function.
pub fn secant_limit_of<F>(h: F, u0: f64, side: Side, scale: f64) -> Result<SecantLimit, ExprError>
where
    F: Fn(f64) -> Result<f64, ExprError>,
{
    let sigma = match side {
        Side::Left => -1.0,
        _ => 1.0,
    };
    let h0 = BASE_STEP * scale;
    let mut q = Vec::with_capacity(HALVINGS + 1);
    let mut s = h0;
    for _ in 0..=HALVINGS {
        q.push(h(u0 + sigma * s)? / (sigma * s));
        s *= 0.5;
    }
    let (best, prev) = richardson(&q, 2.0, 4.0);
    // measured against the quotients themselves so that a vanishing limit counts
    let magnitude = q
        .iter()
        .fold(best.abs().max(prev.abs()), |m, v| m.max(v.abs()));
    let converged = (best - prev).abs() <= SECANT_CONVERGENCE * magnitude + 1e-12;

    // The quotient has the sign of h times the side; the limit cannot leave it.
    let expected = h(u0 + sigma * h0)?.signum() * sigma;
    let value = if expected > 0.0 {
        best.max(0.0)
    } else if expected < 0.0 {
        best.min(0.0)
    } else {
        best
    };
    Ok(SecantLimit { value, converged })
}

pub fn secant_limit_at(h: &ScalarFunction, u0: f64, side: Side) -> Result<SecantLimit, ExprError> {
    secant_limit_of(|u| h.eval(u), u0, side, 1.0)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn func(src: &str) -> ScalarFunction {
        ScalarFunction::parse(src, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn double_root_has_zero_slope() {
        let d = func("(1/2-u)^2");
        assert!(derivative_at(&d, 0.5, Side::Central).unwrap().abs() < 1e-12);
    }

    #[test]
    fn square_root_endpoint_diverges() {
        let d = func("(3/4-u)*sqrt(u-u^2)");
        assert_eq!(derivative_at(&d, 0.0, Side::Right).unwrap(), f64::INFINITY);
        assert_eq!(derivative_at(&d, 1.0, Side::Left).unwrap(), f64::INFINITY);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let one = func("1");
        for side in [Side::Left, Side::Right, Side::Central] {
            assert_eq!(derivative_at(&one, 0.4, side).unwrap(), 0.0);
        }
    }

    #[test]
    fn smooth_endpoints_stay_finite() {
        let d = func("(1/2-u)*(u-u^2)");
        assert!((derivative_at(&d, 0.0, Side::Right).unwrap() - 0.5).abs() < 1e-9);
        assert!((derivative_at(&d, 1.0, Side::Left).unwrap() - 0.5).abs() < 1e-9);
        let flat = func("(u-u^2)^2");
        assert!(derivative_at(&flat, 0.0, Side::Right).unwrap().abs() < 1e-9);
    }

    #[test]
    fn secant_limits_of_worked_examples() {
        let h3 = func("(1/2-u)^2*u*(1-u)");
        let l = secant_limit_at(&h3, 0.0, Side::Right).unwrap();
        assert!((l.value - 0.25).abs() < 1e-10 && l.converged);

        let h1 = func("u*(1-u)*(3/4-u)");
        let l = secant_limit_at(&h1, 1.0, Side::Left).unwrap();
        assert!((l.value - 0.25).abs() < 1e-10 && l.converged);

        let sq = func("u^2");
        let l = secant_limit_at(&sq, 0.0, Side::Right).unwrap();
        assert!(l.value.abs() < 1e-12 && l.converged);
    }

    #[test]
    fn secant_limit_respects_sign() {
        // h < 0 to the right of 3/4, so the right limit at 3/4 is <= 0
        let h1 = func("u*(1-u)*(3/4-u)");
        let l = secant_limit_at(&h1, 0.75, Side::Right).unwrap();
        assert!((l.value + 0.1875).abs() < 1e-10);
        // positive on the left: h/(u-3/4) is negative there too
        let l = secant_limit_at(&h1, 0.75, Side::Left).unwrap();
        assert!((l.value + 0.1875).abs() < 1e-10);
    }

    #[test]
    fn non_convergent_secant_is_flagged() {
        let h = func("sqrt(u)");
        let l = secant_limit_at(&h, 0.0, Side::Right).unwrap();
        assert!(!l.converged);
    }
}
