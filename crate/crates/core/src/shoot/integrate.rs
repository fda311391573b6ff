use serde::Serialize;

use super::rosenbrock::{step, step_factor, ScalarRhs};
use super::{slopes_from, IntervalData};
use crate::error::{Result, WaveError};
use crate::expr::ExprError;
use crate::model::{Problem, SignInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    InteriorZeroCrossing,
    TerminalMismatch,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Relative tolerance of the integrator.
    pub tol: f64,
    /// Launch offset as a fraction of the interval length.
    pub delta0_frac: f64,
    /// Halvings of `delta0_frac` allowed when the arrival is ambiguous.
    pub retries: u32,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            delta0_frac: 1e-6,
            retries: 4,
        }
    }
}

/// One sample of `z` with its derivative `ż`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZSample {
    pub u: f64,
    pub z: f64,
    pub dz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalSolution {
    pub k: usize,
    pub c: f64,
    /// Ordered by increasing `u`, in the coordinates of the original problem.
    pub samples: Vec<ZSample>,
    /// Estimated `ż(α⁺)`; NaN unless feasible.
    pub endpoint_slope_alpha: f64,
    /// Estimated `ż(β⁻)`; NaN unless feasible.
    pub endpoint_slope_beta: f64,
    pub feasibility: Feasibility,
    pub alpha: f64,
    pub beta: f64,
    /// Launch offset actually used.
    pub delta0: f64,
    /// `z` at the far end of the run, `δ₀` away from the endpoint.
    pub z_terminal: f64,
    /// Arrival corridor half-width the terminal value was tested against.
    pub corridor: f64,
    /// True when the speed lies below the endpoint bound, so no integration ran.
    pub below_endpoint_bound: bool,
}

impl IntervalSolution {
    pub fn is_feasible(&self) -> bool {
        self.feasibility == Feasibility::Feasible
    }

    /// Cubic Hermite interpolation of `z` inside the sampled range.
    pub fn z_at(&self, u: f64) -> Option<f64> {
        hermite(&self.samples, u)
    }
}

pub(crate) fn hermite(samples: &[ZSample], u: f64) -> Option<f64> {
    let first = samples.first()?;
    let last = samples.last()?;
    if u < first.u || u > last.u {
        return None;
    }
    let i = samples
        .partition_point(|s| s.u <= u)
        .clamp(1, samples.len() - 1);
    let (a, b) = (samples[i - 1], samples[i]);
    let h = b.u - a.u;
    if h == 0.0 {
        return Some(a.z);
    }
    let t = (u - a.u) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    Some(
        (2.0 * t3 - 3.0 * t2 + 1.0) * a.z
            + (t3 - 2.0 * t2 + t) * h * a.dz
            + (-2.0 * t3 + 3.0 * t2) * b.z
            + (t3 - t2) * h * b.dz,
    )
}

/// `dy/ds` for `y(s) = z(β − s)`.
struct Backward<'a> {
    view: &'a IntervalData<'a>,
    beta: f64,
    c: f64,
    /// Step of the central difference in `s`, relative to the distance
    /// from the nearer end of the interval.
    fd_rel: f64,
    len: f64,
}

impl Backward<'_> {
    fn parts(&self, s: f64) -> Result<(f64, f64), ExprError> {
        let u = self.beta - s;
        Ok((self.view.h(u)?, self.view.drift(u, self.c)?))
    }
}

impl ScalarRhs for Backward<'_> {
    type Error = ExprError;

    fn value(&self, s: f64, y: f64) -> Result<f64, ExprError> {
        let (h, a) = self.parts(s)?;
        Ok(h / y - a)
    }

    fn dy(&self, s: f64, y: f64) -> Result<f64, ExprError> {
        let (h, _) = self.parts(s)?;
        Ok(-h / (y * y))
    }

    fn ds(&self, s: f64, y: f64) -> Result<f64, ExprError> {
        let e = self.fd_rel * s.min(self.len - s).max(f64::MIN_POSITIVE);
        Ok((self.value(s + e, y)? - self.value(s - e, y)?) / (2.0 * e))
    }
}

/// Distances (in units of the interval length) at which endpoint slopes are
/// sampled before extrapolation.
const SLOPE_PROBES: [f64; 4] = [1e-3, 5e-4, 2.5e-4, 1.25e-4];
const Z_FLOOR: f64 = 1e-13;
const MAX_STEPS: usize = 2_000_000;
/// Largest step as a fraction of the interval length, keeping the cubic
/// Hermite interpolant of the samples as accurate as the samples.
const MAX_STEP_FRACTION: f64 = 1e-3;

struct Shot {
    samples: Vec<ZSample>,
    feasibility: Feasibility,
    delta0: f64,
    z_terminal: f64,
    corridor: f64,
}

fn shoot_once(view: &IntervalData<'_>, c: f64, tol: f64, delta0_frac: f64) -> Result<Shot> {
    let iv = view.interval;
    let (alpha, beta) = (iv.alpha, iv.beta);
    let len = beta - alpha;
    let delta0 = delta0_frac * len;

    let u_launch = beta - delta0;
    let h_launch = view.h(u_launch)?;
    // ż ≈ m on [u_launch, β] with the secant of h gives m² − a·m − h/δ₀ = 0;
    // the nonnegative root tends to r₊(β), or to h/(a·δ₀) where ḣ(β) = 0 and a < 0
    let a_beta = view.drift(beta, c)?;
    let q = h_launch / delta0;
    let root = (a_beta * a_beta + 4.0 * q).sqrt();
    let m = if a_beta < 0.0 {
        2.0 * q / (root - a_beta)
    } else {
        0.5 * (a_beta + root)
    };
    let z0 = -m * delta0;
    if z0.is_nan() || z0 >= 0.0 {
        return Err(WaveError::Inconsistent(format!(
            "launch value {z0:e} at u = {u_launch} is not negative"
        )));
    }

    let rhs = Backward {
        view,
        beta,
        c,
        fd_rel: 1e-4,
        len,
    };
    let s_end = len - delta0;
    let rtol = tol;
    let atol = 1e-2 * tol * z0.abs();
    let z_floor = Z_FLOOR.min(1e-3 * z0.abs());
    let h_min = 1e-15 * len;
    let h_max = MAX_STEP_FRACTION * len;

    let mut samples = Vec::with_capacity(1024);
    let mut s = delta0;
    let mut y = z0;
    let mut f0 = rhs.value(s, y)?;
    samples.push(ZSample {
        u: beta - s,
        z: y,
        dz: -f0,
    });
    let mut h = 0.1 * delta0;
    let mut crossed = false;
    let mut steps = 0;

    while s < s_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(WaveError::StepLimit { u: beta - s, steps });
        }
        let last = s + h >= s_end;
        let hh = if last { s_end - s } else { h };
        let st = step(&rhs, s, y, f0, hh)?;
        if !st.y.is_finite() || st.y >= 0.0 || !st.error.is_finite() {
            h = 0.25 * hh;
            if h < h_min {
                crossed = true;
                break;
            }
            continue;
        }
        let scale = atol + rtol * y.abs().max(st.y.abs());
        let ratio = st.error.abs() / scale;
        if ratio > 1.0 {
            h = hh * step_factor(ratio);
            if h < h_min {
                return Err(WaveError::StepUnderflow {
                    u: beta - s,
                    step: h,
                });
            }
            continue;
        }
        s = if last { s_end } else { s + hh };
        y = st.y;
        f0 = st.slope;
        samples.push(ZSample {
            u: beta - s,
            z: y,
            dz: -f0,
        });
        // near α the true solution is legitimately tiny when ḣ(α) = 0
        if !last && y > -z_floor && s < 0.99 * len {
            crossed = true;
            break;
        }
        h = (hh * step_factor(ratio)).min(h_max);
    }
    samples.reverse();
    repair_slopes(view, &mut samples)?;

    let a_alpha = view.drift(alpha, c)?;
    let r_minus_alpha = slopes_from(a_alpha, iv.hdot_alpha)
        .real()
        .map_or(a_alpha, |r| r.r_minus);
    let corridor = (r_minus_alpha.abs() + 1.0) * delta0 * 10.0;
    let feasibility = if crossed {
        Feasibility::InteriorZeroCrossing
    } else if y.abs() <= corridor {
        Feasibility::Feasible
    } else if y.abs() <= 4.0 * corridor {
        Feasibility::Ambiguous
    } else {
        Feasibility::TerminalMismatch
    };
    Ok(Shot {
        samples,
        feasibility,
        delta0,
        z_terminal: y,
        corridor,
    })
}

/// Replaces `ż = a − h/z` by a three-point difference of the neighbouring
/// samples wherever the subtraction cancels most of its digits, as happens
/// where `z ≈ h/a`.
fn repair_slopes(view: &IntervalData<'_>, samples: &mut [ZSample]) -> Result<()> {
    const CANCELLATION: f64 = 1e3;
    let n = samples.len();
    if n < 3 {
        return Ok(());
    }
    let fd: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b, c) = match i {
                0 => (0, 1, 2),
                _ if i == n - 1 => (n - 3, n - 2, n - 1),
                _ => (i - 1, i, i + 1),
            };
            let (x0, x1, x2) = (samples[a].u, samples[b].u, samples[c].u);
            let (y0, y1, y2) = (samples[a].z, samples[b].z, samples[c].z);
            let x = samples[i].u;
            // derivative of the quadratic through the three points
            y0 * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
                + y1 * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
                + y2 * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
        })
        .collect();
    for (s, d) in samples.iter_mut().zip(fd) {
        let ratio = (view.h(s.u)? / s.z).abs();
        if ratio > CANCELLATION * s.dz.abs() {
            s.dz = d;
        }
    }
    Ok(())
}

/// Two-level Richardson extrapolation of `z(e ± d)/(±d)` over [`SLOPE_PROBES`].
fn endpoint_slope(samples: &[ZSample], end: f64, inward: f64, len: f64) -> f64 {
    let mut q = [0.0; SLOPE_PROBES.len()];
    for (qi, frac) in q.iter_mut().zip(SLOPE_PROBES) {
        let d = frac * len;
        match hermite(samples, end + inward * d) {
            Some(z) => *qi = z / (inward * d),
            None => return f64::NAN,
        }
    }
    let l1: Vec<f64> = q.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let n = l1.len();
    (4.0 * l1[n - 1] - l1[n - 2]) / 3.0
}

/// Shoots on a view with `h > 0`, retrying ambiguous arrivals with smaller
/// launch offsets. Samples and slopes are in the view's coordinates.
pub fn integrate_view(
    view: &IntervalData<'_>,
    c: f64,
    opts: &ShootOptions,
) -> Result<IntervalSolution> {
    let iv = view.interval;
    let (alpha, beta) = (iv.alpha, iv.beta);
    let len = beta - alpha;

    // Below the endpoint bound the roots at α are complex or positive and no
    // negative solution can vanish there.
    let a_alpha = view.drift(alpha, c)?;
    let lead = a_alpha + 2.0 * iv.hdot_alpha.max(0.0).sqrt();
    if lead > 1e-12 * (1.0 + a_alpha.abs()) {
        return Ok(IntervalSolution {
            k: iv.k,
            c,
            samples: Vec::new(),
            endpoint_slope_alpha: f64::NAN,
            endpoint_slope_beta: f64::NAN,
            feasibility: Feasibility::TerminalMismatch,
            alpha,
            beta,
            delta0: opts.delta0_frac * len,
            z_terminal: f64::NAN,
            corridor: f64::NAN,
            below_endpoint_bound: true,
        });
    }

    let mut frac = opts.delta0_frac;
    let mut shot = shoot_once(view, c, opts.tol, frac)?;
    for _ in 0..opts.retries {
        if shot.feasibility != Feasibility::Ambiguous {
            break;
        }
        frac *= 0.5;
        shot = shoot_once(view, c, opts.tol, frac)?;
    }

    let (sa, sb) = if shot.feasibility == Feasibility::Feasible {
        (
            endpoint_slope(&shot.samples, alpha, 1.0, len),
            endpoint_slope(&shot.samples, beta, -1.0, len),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(IntervalSolution {
        k: iv.k,
        c,
        samples: shot.samples,
        endpoint_slope_alpha: sa,
        endpoint_slope_beta: sb,
        feasibility: shot.feasibility,
        alpha,
        beta,
        delta0: shot.delta0,
        z_terminal: shot.z_terminal,
        corridor: shot.corridor,
        below_endpoint_bound: false,
    })
}

/// Solves on one sign interval of `p`. Negative intervals are shot in
/// reflected form and mapped back, so the returned `z` has the sign of `−h`.
pub fn integrate_z(
    p: &Problem,
    iv: &SignInterval,
    c: f64,
    opts: &ShootOptions,
) -> Result<IntervalSolution> {
    let view = IntervalData::positive_form(p, *iv);
    let mut sol = integrate_view(&view, c, opts)?;
    if view.is_reflected() {
        let (alpha, beta) = (iv.alpha, iv.beta);
        sol.samples = sol
            .samples
            .iter()
            .rev()
            .map(|s| ZSample {
                u: alpha + beta - s.u,
                z: -s.z,
                dz: s.dz,
            })
            .collect();
        std::mem::swap(&mut sol.endpoint_slope_alpha, &mut sol.endpoint_slope_beta);
        sol.z_terminal = -sol.z_terminal;
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::model::{decompose, ZeroTolerances};

    fn kpp(d0: &str) -> Problem {
        Problem::parse("kpp", "1", "0", d0, "u-u^2", &BTreeMap::new()).unwrap()
    }

    fn first_interval(p: &Problem) -> SignInterval {
        decompose(p, 2048, ZeroTolerances::default())
            .unwrap()
            .intervals[0]
    }

    #[test]
    fn kpp_above_threshold_is_feasible() {
        let p = kpp("1");
        let iv = first_interval(&p);
        let sol = integrate_z(&p, &iv, 3.0, &ShootOptions::default()).unwrap();
        assert_eq!(sol.feasibility, Feasibility::Feasible);
        let r_plus = 0.5 * (-3.0 + 5f64.sqrt());
        assert!(
            (sol.endpoint_slope_alpha - r_plus).abs() < 1e-4,
            "{}",
            sol.endpoint_slope_alpha
        );
        // at β = 1: a = -3, ḣ(1) = -1
        let r_plus_beta = 0.5 * (-3.0 + 13f64.sqrt());
        assert!((sol.endpoint_slope_beta - r_plus_beta).abs() < 1e-4);
        assert!(sol.samples.iter().all(|s| s.z < 0.0));
        assert!(sol.samples.windows(2).all(|w| w[1].u > w[0].u));
    }

    #[test]
    fn kpp_below_threshold_is_infeasible() {
        let p = kpp("1");
        let iv = first_interval(&p);
        for c in [1.0, 1.9, 1.999] {
            let sol = integrate_z(&p, &iv, c, &ShootOptions::default()).unwrap();
            assert!(!sol.is_feasible(), "c = {c}");
        }
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |u: f64| u * u * u - u;
        let df = |u: f64| 3.0 * u * u - 1.0;
        let samples: Vec<ZSample> = [0.0, 0.3, 0.7, 1.0]
            .iter()
            .map(|&u| ZSample {
                u,
                z: f(u),
                dz: df(u),
            })
            .collect();
        for u in [0.1, 0.5, 0.95] {
            assert!((hermite(&samples, u).unwrap() - f(u)).abs() < 1e-14);
        }
        assert!(hermite(&samples, 1.5).is_none());
    }
}
