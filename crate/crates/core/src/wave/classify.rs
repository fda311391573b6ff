//! Classical or sharp: whether each equilibrium is reached in finite time.

use serde::Serialize;

use super::{ExistenceVerdict, Exists, Threshold};
use crate::error::Result;
use crate::expr::{derivative_of, Side};
use crate::model::{Decomposition, HSign, Problem, SignInterval};
use crate::shoot::slopes_from;

/// `|ż|` at an endpoint below this counts as zero.
const SLOPE_ZERO: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    #[serde(rename = "classical")]
    Classical,
    /// Reaches 0 in finite time.
    #[serde(rename = "sharp_type_1")]
    SharpType1,
    /// Reaches 1 in finite time.
    #[serde(rename = "sharp_type_2")]
    SharpType2,
    /// Reaches both equilibria in finite time.
    #[serde(rename = "sharp_type_3")]
    SharpType3,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl Classification {
    pub fn from_ends(a_finite: bool, b_finite: bool) -> Self {
        match (a_finite, b_finite) {
            (false, false) => Classification::Classical,
            (false, true) => Classification::SharpType1,
            (true, false) => Classification::SharpType2,
            (true, true) => Classification::SharpType3,
        }
    }

    pub fn is_sharp(self) -> bool {
        matches!(
            self,
            Classification::SharpType1 | Classification::SharpType2 | Classification::SharpType3
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Classical => "classical",
            Classification::SharpType1 => "sharp_type_1",
            Classification::SharpType2 => "sharp_type_2",
            Classification::SharpType3 => "sharp_type_3",
            Classification::Undetermined => "undetermined",
        }
    }
}

/// Data at one equilibrium and the resulting decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndBehaviour {
    pub u: f64,
    pub d_value: f64,
    /// One-sided `Ḋ`, possibly infinite.
    pub d_slope: f64,
    /// `f − c·g` at the equilibrium.
    pub drift: f64,
    /// `ż` at the equilibrium, when the slope rule was used.
    pub z_slope: Option<f64>,
    /// `None` when the data are degenerate.
    pub finite: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub classification: Classification,
    /// `u = 1` is reached at a finite time.
    pub a_finite: bool,
    /// `u = 0` is reached at a finite time.
    pub b_finite: bool,
    /// `endpoint_conditions` above the threshold, `endpoint_slopes` at it.
    pub rule: &'static str,
    pub at_zero: EndBehaviour,
    pub at_one: EndBehaviour,
    pub note: String,
}

fn end_data(p: &Problem, iv: &SignInterval, u: f64, c: f64) -> Result<EndBehaviour> {
    let side = if u == 0.0 { Side::Right } else { Side::Left };
    Ok(EndBehaviour {
        u,
        d_value: p.d.eval(u)?,
        d_slope: derivative_of(|x| p.d.eval(x), u, side, iv.len())?,
        drift: p.f.eval(u)? - c * p.g.eval(u)?,
        z_slope: None,
        finite: None,
    })
}

/// Finite-time arrival from the sign of `D` near the end and the values of
/// `D`, `Ḋ` and `f − c·g` there.
fn by_conditions(mut e: EndBehaviour, iv: &SignInterval, d: &Decomposition) -> EndBehaviour {
    // D > 0 next to 0, or D < 0 next to 1, keeps the end at infinity
    let inward_positive = iv.h_sign == HSign::Positive;
    let may_be_finite = if e.u == 0.0 {
        !inward_positive
    } else {
        inward_positive
    };
    let tol = d.tolerances;
    let d_zero = e.d_value.abs() <= tol.root;
    e.finite = if !may_be_finite {
        Some(false)
    } else if d_zero && e.d_slope.abs() <= tol.derivative && e.drift.abs() <= tol.derivative {
        None
    } else {
        Some(d_zero && e.d_slope > f64::NEG_INFINITY && e.drift > 0.0)
    };
    e
}

/// Finite-time arrival from the limit of `z/D`, using the slope of `z`
/// predicted at the threshold: `r₋` at the anchor of a critical interval,
/// `r₊` otherwise.
fn by_slopes(
    mut e: EndBehaviour,
    iv: &SignInterval,
    th: &Threshold,
    d: &Decomposition,
) -> EndBehaviour {
    let hdot = if e.u == iv.alpha {
        iv.hdot_alpha
    } else {
        iv.hdot_beta
    };
    let Some(r) = slopes_from(e.drift, hdot).real() else {
        return e;
    };
    let dz = if e.u == iv.anchor() && th.is_critical(iv.k) {
        r.r_minus
    } else {
        r.r_plus
    };
    e.z_slope = Some(dz);
    let tol = d.tolerances;
    e.finite = if e.d_value.abs() > tol.root || e.d_slope.is_infinite() {
        Some(false)
    } else if e.d_slope.abs() > tol.derivative {
        Some(dz.abs() > SLOPE_ZERO)
    } else if dz.abs() > SLOPE_ZERO {
        Some(true)
    } else if e.drift < -tol.derivative {
        Some(false)
    } else {
        None
    };
    e
}

/// Classifies the front at speed `c`. Above `ĉ` the endpoint conditions on
/// `D` and `f − c·g` decide; at `ĉ` the predicted endpoint slopes of `z` do.
pub fn classify(
    p: &Problem,
    d: &Decomposition,
    c: f64,
    verdict: &ExistenceVerdict,
    th: &Threshold,
) -> Result<ClassificationReport> {
    let first = &d.intervals[0];
    let last = d.intervals.last().expect("at least one interval");
    let e0 = end_data(p, first, 0.0, c)?;
    let e1 = end_data(p, last, 1.0, c)?;
    let at_c_hat = th.is_at_c_hat(c);
    let (at_zero, at_one, rule) = if at_c_hat {
        (
            by_slopes(e0, first, th, d),
            by_slopes(e1, last, th, d),
            "endpoint_slopes",
        )
    } else {
        (
            by_conditions(e0, first, d),
            by_conditions(e1, last, d),
            "endpoint_conditions",
        )
    };

    let mut note = String::new();
    let classification = if verdict.exists != Exists::Yes {
        note = "no wave to classify".into();
        Classification::Undetermined
    } else {
        match (at_one.finite, at_zero.finite) {
            (Some(a), Some(b)) => Classification::from_ends(a, b),
            _ => {
                note = "f − c·g, D and Ḋ vanish together at an equilibrium".into();
                Classification::Undetermined
            }
        }
    };
    Ok(ClassificationReport {
        classification,
        a_finite: at_one.finite.unwrap_or(false),
        b_finite: at_zero.finite.unwrap_or(false),
        rule,
        at_zero,
        at_one,
        note,
    })
}
