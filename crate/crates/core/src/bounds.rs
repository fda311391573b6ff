//! Mean-value functionals of `g`, `f` and `h` on each sign interval and the
//! analytic bracket they give for the threshold speed.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, WaveError};
use crate::model::{Decomposition, HSign, Problem, SignInterval};
use crate::quad::{cosine_grid, cumulative_trapezoid};
use crate::shoot::IntervalData;

pub const DEFAULT_GRID: usize = 8192;
const GRID_RTOL: f64 = 1e-6;
const GRID_ATOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalConstants {
    pub k: usize,
    /// Infimum of the running mean of `g` from the anchor.
    pub g_inf: f64,
    /// Supremum of the running mean of `f`.
    pub f_sup: f64,
    /// Supremum of the running mean of `h(s)/(s − anchor)`.
    pub h_sup: f64,
    pub hdot_endpoint: f64,
    pub f_endpoint: f64,
    pub g_endpoint: f64,
}

impl IntervalConstants {
    /// `(2√ḣ + f)/g` at the anchor.
    pub fn lower(&self) -> f64 {
        (2.0 * self.hdot_endpoint.max(0.0).sqrt() + self.f_endpoint) / self.g_endpoint
    }

    /// `(2√H + F)/G`.
    pub fn upper(&self) -> f64 {
        (2.0 * self.h_sup.max(0.0).sqrt() + self.f_sup) / self.g_inf
    }
}

/// Running means on a cosine grid of `n` cells from `anchor` towards `far`.
fn mean_extrema(
    view: &IntervalData<'_>,
    anchor: f64,
    far: f64,
    hdot: f64,
    n: usize,
) -> Result<(f64, f64, f64)> {
    let s = cosine_grid(anchor, far, n);
    let mut gv = Vec::with_capacity(n + 1);
    let mut fv = Vec::with_capacity(n + 1);
    let mut qv = Vec::with_capacity(n + 1);
    for (i, &x) in s.iter().enumerate() {
        gv.push(view.g(x)?);
        fv.push(view.f(x)?);
        qv.push(if i == 0 {
            hdot
        } else {
            view.h(x)? / (x - anchor)
        });
    }
    let ig = cumulative_trapezoid(&s, &gv);
    let iff = cumulative_trapezoid(&s, &fv);
    let iq = cumulative_trapezoid(&s, &qv);

    // the anchor limits are the values the means approach at the anchor
    let (mut g_inf, mut f_sup, mut h_sup) = (gv[0], fv[0], hdot);
    for i in 1..=n {
        let w = s[i] - anchor;
        g_inf = g_inf.min(ig[i] / w);
        f_sup = f_sup.max(iff[i] / w);
        h_sup = h_sup.max(iq[i] / w);
    }
    Ok((g_inf, f_sup, h_sup))
}

fn check_converged(k: usize, constant: &'static str, a: f64, b: f64) -> Result<()> {
    let diff = (a - b).abs();
    if diff > GRID_RTOL * a.abs().max(b.abs()) + GRID_ATOL {
        return Err(WaveError::GridNonConvergence {
            k,
            constant,
            relative: diff / a.abs().max(b.abs()).max(f64::MIN_POSITIVE),
        });
    }
    Ok(())
}

/// Constants of a view, anchored at `α` when `h > 0` and at `β` otherwise.
pub fn constants_of_view(view: &IntervalData<'_>, grid: usize) -> Result<IntervalConstants> {
    let iv = view.interval;
    let (anchor, far, hdot) = match iv.h_sign {
        HSign::Positive => (iv.alpha, iv.beta, iv.hdot_alpha),
        HSign::Negative => (iv.beta, iv.alpha, iv.hdot_beta),
    };
    let coarse = mean_extrema(view, anchor, far, hdot, grid)?;
    let fine = mean_extrema(view, anchor, far, hdot, 2 * grid)?;
    check_converged(iv.k, "G", coarse.0, fine.0)?;
    check_converged(iv.k, "F", coarse.1, fine.1)?;
    check_converged(iv.k, "H", coarse.2, fine.2)?;

    let c = IntervalConstants {
        k: iv.k,
        g_inf: fine.0,
        f_sup: fine.1,
        h_sup: fine.2,
        hdot_endpoint: hdot.max(0.0),
        f_endpoint: view.f(anchor)?,
        g_endpoint: view.g(anchor)?,
    };
    if !(c.g_inf > 0.0 && c.g_endpoint > 0.0) {
        return Err(WaveError::Hypothesis {
            name: "g_running_integral_positive".into(),
            u: anchor,
            detail: format!("mean of g on interval {} reaches {:e}", iv.k, c.g_inf),
        });
    }
    Ok(c)
}

pub fn interval_constants(
    p: &Problem,
    iv: &SignInterval,
    grid: usize,
) -> Result<IntervalConstants> {
    constants_of_view(&IntervalData::new(p, *iv), grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalBound {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub constants: IntervalConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedBracket {
    pub lower: f64,
    pub upper: f64,
    pub per_interval: Vec<IntervalBound>,
    /// `max f(α_k)/g(α_k)` over negative intervals starting at a degenerate zero.
    pub k0_term: Option<f64>,
}

/// Analytic lower and upper bounds for the threshold speed.
pub fn speed_bracket(p: &Problem, d: &Decomposition, grid: usize) -> Result<SpeedBracket> {
    let per_interval: Vec<IntervalBound> = d
        .intervals
        .par_iter()
        .map(|iv| {
            let constants = interval_constants(p, iv, grid)?;
            Ok(IntervalBound {
                k: iv.k,
                lower: constants.lower(),
                upper: constants.upper(),
                constants,
            })
        })
        .collect::<Result<_>>()?;

    let mut k0_term: Option<f64> = None;
    for &k in &d.k0_minus {
        let a = d.interval(k).alpha;
        let v = p.f.eval(a)? / p.g.eval(a)?;
        k0_term = Some(k0_term.map_or(v, |m| m.max(v)));
    }
    let k0 = k0_term.unwrap_or(f64::NEG_INFINITY);
    let lower = per_interval.iter().map(|b| b.lower).fold(k0, f64::max);
    let upper = per_interval.iter().map(|b| b.upper).fold(k0, f64::max);
    Ok(SpeedBracket {
        lower,
        upper,
        per_interval,
        k0_term,
    })
}
