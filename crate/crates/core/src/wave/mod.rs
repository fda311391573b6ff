//! Gluing of interval solutions, the threshold `ĉ`, existence at a given
//! speed, classification of the front and reconstruction of its profile.

mod classify;
mod extension;
mod profile;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{speed_bracket, SpeedBracket, DEFAULT_GRID};
use crate::error::{Result, WaveError};
use crate::model::{Decomposition, Problem, ZeroTolerances};
use crate::shoot::{
    integrate_z, threshold_for_interval, IntervalSolution, ShootOptions, ThresholdResult,
};

pub use classify::{classify, Classification, ClassificationReport, EndBehaviour};
pub use extension::{
    corollary_one_existence_at_c_hat, existence_at, extension_check, CorollaryCheck,
    CorollaryOutcome, CorollaryStatus, CrossCheck, ExistenceVerdict, Exists, QuotientKind,
    ZeroVerdict,
};
pub use profile::{profile_residual, reconstruct_profile, Profile, ProfilePoint, Tail};

/// Slack allowed between `ĉ` and the analytic bracket.
pub const BRACKET_SLACK: f64 = 1e-3;

/// Numerical settings shared by every stage of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub scan_cells: usize,
    pub tol_c: f64,
    pub grid: usize,
    pub t_span_cap: f64,
    pub tolerances: ZeroTolerances,
    #[serde(skip)]
    pub shoot: ShootOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            scan_cells: 2048,
            tol_c: 1e-5,
            grid: DEFAULT_GRID,
            t_span_cap: 50.0,
            tolerances: ZeroTolerances::default(),
            shoot: ShootOptions::default(),
        }
    }
}

impl SolverOptions {
    /// Speeds closer than this to `ĉ` are treated as `ĉ` itself.
    pub fn c_hat_guard(&self) -> f64 {
        (10.0 * self.tol_c).max(1e-4)
    }
}

/// The threshold speed with the data it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Threshold {
    pub c_hat: f64,
    /// Largest of the per-interval thresholds.
    pub c_star: f64,
    pub bracket: SpeedBracket,
    pub per_interval: Vec<ThresholdResult>,
    pub guard: f64,
}

impl Threshold {
    pub fn is_at_c_hat(&self, c: f64) -> bool {
        (c - self.c_hat).abs() <= self.guard
    }

    /// True when interval `k` attains its own threshold at `ĉ`.
    pub fn is_critical(&self, k: usize) -> bool {
        self.per_interval
            .iter()
            .any(|t| t.k == k && t.c_star >= self.c_hat - self.guard)
    }
}

/// `ĉ = max(c*, max f(α_k)/g(α_k))` with the per-interval thresholds found
/// by bisection inside each interval's analytic bounds.
pub fn compute_c_hat(p: &Problem, d: &Decomposition, opts: &SolverOptions) -> Result<Threshold> {
    let bracket = speed_bracket(p, d, opts.grid)?;
    let per_interval: Vec<ThresholdResult> = d
        .intervals
        .par_iter()
        .zip(bracket.per_interval.par_iter())
        .map(|(iv, b)| threshold_for_interval(p, iv, (b.lower, b.upper), opts.tol_c, &opts.shoot))
        .collect::<Result<_>>()?;
    let c_star = per_interval
        .iter()
        .map(|t| t.c_star)
        .fold(f64::NEG_INFINITY, f64::max);
    let c_hat = bracket.k0_term.map_or(c_star, |k0| c_star.max(k0));
    if c_hat < bracket.lower - BRACKET_SLACK || c_hat > bracket.upper + BRACKET_SLACK {
        return Err(WaveError::Inconsistent(format!(
            "threshold {c_hat} outside the analytic bracket [{}, {}]",
            bracket.lower, bracket.upper
        )));
    }
    Ok(Threshold {
        c_hat,
        c_star,
        bracket,
        per_interval,
        guard: opts.c_hat_guard(),
    })
}

/// One-sided slopes of the glued `z` at an interior zero of `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Junction {
    pub u0: f64,
    /// Interval on the left of `u0`.
    pub k_left: usize,
    pub dz_left: f64,
    pub dz_right: f64,
}

/// The interval solutions at one speed, glued into `z_c` on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GluedZ {
    pub c: f64,
    pub pieces: Vec<IntervalSolution>,
    pub junctions: Vec<Junction>,
    /// `(u, z/D)` at every sample where `D ≠ 0`.
    pub phi_samples: Vec<(f64, f64)>,
}

impl GluedZ {
    pub fn all_feasible(&self) -> bool {
        self.pieces.iter().all(|s| s.is_feasible())
    }

    pub fn infeasible(&self) -> Vec<usize> {
        self.pieces
            .iter()
            .filter(|s| !s.is_feasible())
            .map(|s| s.k)
            .collect()
    }

    /// Piece whose sampled range contains `u`.
    pub fn piece_at(&self, u: f64) -> Option<&IntervalSolution> {
        self.pieces.iter().find(|s| {
            matches!((s.samples.first(), s.samples.last()), (Some(a), Some(b)) if a.u <= u && u <= b.u)
        })
    }

    pub fn z_at(&self, u: f64) -> Option<f64> {
        self.piece_at(u)?.z_at(u)
    }

    /// `z/D` at `u`, if `u` is sampled and `D(u) ≠ 0`.
    pub fn phi_at(&self, p: &Problem, u: f64) -> Result<Option<f64>> {
        let Some(z) = self.z_at(u) else {
            return Ok(None);
        };
        let dv = p.d.eval(u)?;
        Ok((dv != 0.0).then(|| z / dv))
    }
}

/// Solves every interval at speed `c` and glues the results.
pub fn glue(p: &Problem, d: &Decomposition, c: f64, opts: &ShootOptions) -> Result<GluedZ> {
    let pieces: Vec<IntervalSolution> = d
        .intervals
        .par_iter()
        .map(|iv| integrate_z(p, iv, c, opts))
        .collect::<Result<_>>()?;

    let junctions = pieces
        .windows(2)
        .map(|w| Junction {
            u0: w[0].beta,
            k_left: w[0].k,
            dz_left: w[0].endpoint_slope_beta,
            dz_right: w[1].endpoint_slope_alpha,
        })
        .collect();

    let mut phi_samples = Vec::new();
    for s in pieces.iter().flat_map(|piece| piece.samples.iter()) {
        let dv = p.d.eval(s.u)?;
        if dv != 0.0 {
            phi_samples.push((s.u, s.z / dv));
        }
    }
    Ok(GluedZ {
        c,
        pieces,
        junctions,
        phi_samples,
    })
}

/// Everything known about the front at one speed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveReport {
    pub name: String,
    pub c: f64,
    pub c_evaluated: f64,
    pub c_hat: f64,
    pub bracket: SpeedBracket,
    pub thresholds: Vec<ThresholdResult>,
    pub corollary: CorollaryOutcome,
    pub verdict: ExistenceVerdict,
    pub classification: Classification,
    pub a_finite: bool,
    pub b_finite: bool,
    pub classification_detail: Option<ClassificationReport>,
    #[serde(skip)]
    pub glued: GluedZ,
    #[serde(skip)]
    pub profile: Option<Profile>,
    pub tails: Option<(Tail, Tail)>,
}

/// Runs existence, classification and profile reconstruction at speed `c`.
pub fn wave_report(
    p: &Problem,
    d: &Decomposition,
    th: &Threshold,
    c: f64,
    opts: &SolverOptions,
) -> Result<WaveReport> {
    let corollary = corollary_one_existence_at_c_hat(p, d)?;
    let (glued, verdict) = existence_at(p, d, th, &corollary, c, opts)?;
    let (classification, detail, profile) = if verdict.exists == Exists::Yes {
        let report = classify(p, d, verdict.c_evaluated, &verdict, th)?;
        let profile = reconstruct_profile(p, d, &glued, &verdict, opts.t_span_cap)?;
        (report.classification, Some(report), Some(profile))
    } else {
        (Classification::Undetermined, None, None)
    };
    let (a_finite, b_finite) = detail
        .as_ref()
        .map_or((false, false), |r| (r.a_finite, r.b_finite));
    Ok(WaveReport {
        name: p.name.clone(),
        c,
        c_evaluated: verdict.c_evaluated,
        c_hat: th.c_hat,
        bracket: th.bracket.clone(),
        thresholds: th.per_interval.clone(),
        corollary,
        tails: profile.as_ref().map(|pr| (pr.tail_at_one, pr.tail_at_zero)),
        verdict,
        classification,
        a_finite,
        b_finite,
        classification_detail: detail,
        glued,
        profile,
    })
}
