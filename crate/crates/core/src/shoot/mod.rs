//! Shooting for the singular problem `ż = f − c·g − h/z` on one sign
//! interval, and bisection for the interval's threshold speed.

mod integrate;
pub mod rosenbrock;
mod threshold;

use serde::Serialize;

use crate::expr::ExprError;
use crate::model::{HSign, Problem, SignInterval};

pub use integrate::{
    integrate_view, integrate_z, Feasibility, IntervalSolution, ShootOptions, ZSample,
};
pub use threshold::{threshold_for_interval, ThresholdResult};

/// Roots of `r² − (f − c·g)·r + ḣ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySlopes {
    pub r_plus: f64,
    pub r_minus: f64,
    pub discriminant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SlopeRoots {
    Real(BoundarySlopes),
    NoRealSlope { discriminant: f64 },
}

impl SlopeRoots {
    pub fn real(self) -> Option<BoundarySlopes> {
        match self {
            SlopeRoots::Real(s) => Some(s),
            SlopeRoots::NoRealSlope { .. } => None,
        }
    }
}

/// Slopes from the drift `a = f − c·g` and `ḣ` at one point. A discriminant
/// within rounding of zero is treated as a double root.
pub fn slopes_from(a: f64, hdot: f64) -> SlopeRoots {
    let disc = a * a - 4.0 * hdot;
    let scale = a * a + 4.0 * hdot.abs();
    if disc < 0.0 && disc < -1e-14 * scale {
        return SlopeRoots::NoRealSlope { discriminant: disc };
    }
    let root = disc.max(0.0).sqrt();
    SlopeRoots::Real(BoundarySlopes {
        r_plus: 0.5 * (a + root),
        r_minus: 0.5 * (a - root),
        discriminant: disc,
    })
}

/// Boundary slopes at `u0` for speed `c`.
pub fn r_pm(p: &Problem, u0: f64, c: f64, hdot: f64) -> Result<SlopeRoots, ExprError> {
    let a = p.f.eval(u0)? - c * p.g.eval(u0)?;
    Ok(slopes_from(a, hdot))
}

/// The coefficients `f`, `g`, `h` restricted to one sign interval, possibly
/// seen through the reflection `u ↦ α + β − u`, `h ↦ −h`.
#[derive(Debug, Clone, Copy)]
pub struct IntervalData<'a> {
    problem: &'a Problem,
    /// The interval as seen by this view; the sign and endpoint slopes of `h`
    /// are those of the reflected data when `reflected` is set.
    pub interval: SignInterval,
    reflected: bool,
}

impl<'a> IntervalData<'a> {
    pub fn new(problem: &'a Problem, interval: SignInterval) -> Self {
        Self {
            problem,
            interval,
            reflected: false,
        }
    }

    /// View with `h > 0`, reflecting negative intervals.
    pub fn positive_form(problem: &'a Problem, interval: SignInterval) -> Self {
        let v = Self::new(problem, interval);
        match interval.h_sign {
            HSign::Positive => v,
            HSign::Negative => v.reflect(),
        }
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    /// `f̃(u) = f(α+β−u)`, `g̃` alike, `h̃(u) = −h(α+β−u)`.
    pub fn reflect(&self) -> Self {
        let iv = self.interval;
        Self {
            problem: self.problem,
            interval: SignInterval {
                h_sign: match iv.h_sign {
                    HSign::Positive => HSign::Negative,
                    HSign::Negative => HSign::Positive,
                },
                hdot_alpha: iv.hdot_beta,
                hdot_beta: iv.hdot_alpha,
                ..iv
            },
            reflected: !self.reflected,
        }
    }

    /// Point of the original problem that `u` stands for.
    pub fn source_point(&self, u: f64) -> f64 {
        if self.reflected {
            self.interval.alpha + self.interval.beta - u
        } else {
            u
        }
    }

    pub fn f(&self, u: f64) -> Result<f64, ExprError> {
        self.problem.f.eval(self.source_point(u))
    }

    pub fn g(&self, u: f64) -> Result<f64, ExprError> {
        self.problem.g.eval(self.source_point(u))
    }

    pub fn h(&self, u: f64) -> Result<f64, ExprError> {
        let v = self.problem.h().eval(self.source_point(u))?;
        Ok(if self.reflected { -v } else { v })
    }

    /// Drift `f − c·g`.
    pub fn drift(&self, u: f64, c: f64) -> Result<f64, ExprError> {
        Ok(self.f(u)? - c * self.g(u)?)
    }
}

/// Reflected data for a negative interval; solutions map back through
/// `z(u) = −ζ(α + β − u)`.
pub fn reflect_interval<'a>(p: &'a Problem, iv: &SignInterval) -> (IntervalData<'a>, SignInterval) {
    let view = IntervalData::new(p, *iv).reflect();
    (view, view.interval)
}
