//! The profile `u(t)` from `u′ = φ(u)`, `φ = z/D`, and the behaviour of its
//! tails at the two equilibria.

use serde::Serialize;

use super::{ExistenceVerdict, GluedZ};
use crate::error::{Result, WaveError};
use crate::model::Problem;
use crate::quad::adaptive_simpson;

/// Half-width of the band around a zero of `D`, relative to the shorter
/// adjacent interval, inside which `φ` is interpolated towards its limit.
const BAND: f64 = 1e-4;
const PHI_FLOOR: f64 = 1e-13;
/// Nodes per decade of the grids graded towards the interval ends.
const PER_DECADE: i32 = 8;
const UNIFORM_NODES: usize = 64;
/// `|φ| ~ dist^p` with `p` below this reaches the end with nonzero speed.
const SHARP_EXPONENT: f64 = 0.2;
/// ... and with `p` at least this takes infinite time.
const ASYMPTOTIC_EXPONENT: f64 = 0.9;

/// How the profile approaches an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Reached at a finite time with `u′ ≠ 0`.
    Sharp,
    /// Reached at a finite time with `u′ → 0`, continued by the constant.
    Touchdown,
    /// Approached as `t → ±∞`.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub t: f64,
    pub u: f64,
    pub z: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    /// Increasing `t`, decreasing `u`.
    pub points: Vec<ProfilePoint>,
    pub u_ref: f64,
    /// Behaviour as `u → 1`, i.e. at the left end `a` of the time interval.
    pub tail_at_one: Tail,
    /// Behaviour as `u → 0`, at the right end `b`.
    pub tail_at_zero: Tail,
    /// Fitted exponent of `|φ|` against the distance to 1.
    pub exponent_at_one: f64,
    pub exponent_at_zero: f64,
}

impl Profile {
    pub fn a_finite(&self) -> bool {
        self.tail_at_one == Tail::Sharp
    }

    pub fn b_finite(&self) -> bool {
        self.tail_at_zero == Tail::Sharp
    }

    /// Cubic Hermite interpolant of `u(t)` using `u′ = φ`.
    pub fn u_of_t(&self, t: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.is_empty() || t < pts[0].t || t > pts[pts.len() - 1].t {
            return None;
        }
        let i = pts.partition_point(|q| q.t <= t).clamp(1, pts.len() - 1);
        let (a, b) = (pts[i - 1], pts[i]);
        let h = b.t - a.t;
        if h == 0.0 {
            return Some(a.u);
        }
        let s = (t - a.t) / h;
        let (s2, s3) = (s * s, s * s * s);
        Some(
            (2.0 * s3 - 3.0 * s2 + 1.0) * a.u
                + (s3 - 2.0 * s2 + s) * h * a.phi
                + (-2.0 * s3 + 3.0 * s2) * b.u
                + (s3 - s2) * h * b.phi,
        )
    }
}

struct Band {
    u0: f64,
    eta: f64,
    phi0: f64,
    left: f64,
    right: f64,
}

/// `φ = z/D` on `(0, 1)` with the limits at the zeros of `D` filled in.
pub(crate) struct PhiField<'a> {
    p: &'a Problem,
    glued: &'a GluedZ,
    bands: Vec<Band>,
}

impl<'a> PhiField<'a> {
    pub(crate) fn new(
        p: &'a Problem,
        glued: &'a GluedZ,
        verdict: &ExistenceVerdict,
    ) -> Result<Self> {
        let mut bands = Vec::new();
        for (j, w) in glued.junctions.iter().zip(glued.pieces.windows(2)) {
            let len = (w[0].beta - w[0].alpha).min(w[1].beta - w[1].alpha);
            let eta = BAND * len;
            let sampled = |u: f64| -> Result<f64> {
                glued
                    .phi_at(p, u)?
                    .ok_or_else(|| WaveError::Inconsistent(format!("z is not sampled at {u}")))
            };
            let left = sampled(j.u0 - eta)?;
            let right = sampled(j.u0 + eta)?;
            let phi0 = verdict.phi_at_zero(j.u0).unwrap_or(0.5 * (left + right));
            bands.push(Band {
                u0: j.u0,
                eta,
                phi0,
                left,
                right,
            });
        }
        Ok(Self { p, glued, bands })
    }

    pub(crate) fn phi(&self, u: f64) -> Result<f64> {
        for b in &self.bands {
            let r = (u - b.u0) / b.eta;
            if r.abs() <= 1.0 {
                let edge = if r < 0.0 { b.left } else { b.right };
                return Ok(b.phi0 + r.abs() * (edge - b.phi0));
            }
        }
        let phi = self
            .glued
            .phi_at(self.p, u)?
            .ok_or_else(|| WaveError::Inconsistent(format!("z is not sampled at {u}")))?;
        if phi.abs() < PHI_FLOOR || !phi.is_finite() {
            return Err(WaveError::PhiSingular { u });
        }
        Ok(phi)
    }

    fn z(&self, u: f64) -> f64 {
        if self.bands.iter().any(|b| b.u0 == u) {
            return 0.0;
        }
        self.glued.z_at(u).unwrap_or(0.0)
    }
}

/// Nodes of one piece, graded geometrically towards both ends down to the
/// given distances.
fn piece_nodes(alpha: f64, beta: f64, min_left: f64, min_right: f64, out: &mut Vec<f64>) {
    let len = beta - alpha;
    for i in 1..UNIFORM_NODES {
        out.push(alpha + len * i as f64 / UNIFORM_NODES as f64);
    }
    for (end, dir, min) in [(alpha, 1.0, min_left), (beta, -1.0, min_right)] {
        let mut j = PER_DECADE;
        loop {
            let dist = len * 10f64.powf(-(j as f64) / PER_DECADE as f64);
            if dist <= min {
                break;
            }
            out.push(end + dir * dist);
            j += 1;
        }
        out.push(end + dir * min);
    }
}

/// Fitted `p` in `|φ| ~ dist^p` over the deepest sampled decade.
fn tail_exponent(field: &PhiField<'_>, end: f64, dir: f64, len: f64, min: f64) -> Result<f64> {
    let far = (10.0 * min).min(0.5 * len);
    let near = (0.1 * far).max(min);
    let pf = field.phi(end + dir * far)?.abs();
    let pn = field.phi(end + dir * near)?.abs();
    Ok((pf / pn).ln() / (far / near).ln())
}

fn tail_from(p_exp: f64, diverged: bool) -> Tail {
    if diverged || p_exp >= ASYMPTOTIC_EXPONENT {
        Tail::Asymptotic
    } else if p_exp <= SHARP_EXPONENT {
        Tail::Sharp
    } else {
        Tail::Touchdown
    }
}

/// Integrates `t(u) = ∫_{u_ref}^u ds/φ(s)` over a graded grid, with `u_ref`
/// the midpoint of the widest sign interval, and decides each tail from the
/// decay of `φ` at the end.
pub fn reconstruct_profile(
    p: &Problem,
    d: &crate::model::Decomposition,
    glued: &GluedZ,
    verdict: &ExistenceVerdict,
    t_span_cap: f64,
) -> Result<Profile> {
    if !glued.all_feasible() {
        return Err(WaveError::Inconsistent(
            "profile requested without a solution".into(),
        ));
    }
    let field = PhiField::new(p, glued, verdict)?;
    let widest = d
        .intervals
        .iter()
        .max_by(|a, b| a.len().total_cmp(&b.len()))
        .expect("at least one interval");
    let u_ref = 0.5 * (widest.alpha + widest.beta);

    let n = glued.pieces.len();
    let first = &glued.pieces[0];
    let last = &glued.pieces[n - 1];
    let min0 = first.samples[0].u - first.alpha;
    let min1 = last.beta - last.samples[last.samples.len() - 1].u;

    let mut nodes = vec![u_ref];
    for (i, piece) in glued.pieces.iter().enumerate() {
        let band_l = if i > 0 { field.bands[i - 1].eta } else { min0 };
        let band_r = if i + 1 < n { field.bands[i].eta } else { min1 };
        piece_nodes(piece.alpha, piece.beta, band_l, band_r, &mut nodes);
        if i > 0 {
            nodes.push(piece.alpha);
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    let phis: Vec<f64> = nodes.iter().map(|&u| field.phi(u)).collect::<Result<_>>()?;
    let mut t = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        let (a, b) = (nodes[i - 1], nodes[i]);
        let scale = (b - a) / phis[i - 1].abs().min(phis[i].abs());
        let seg = adaptive_simpson(
            |u| Ok::<_, WaveError>(1.0 / field.phi(u)?),
            a,
            b,
            1e-10 * scale,
        )?;
        t[i] = t[i - 1] + seg;
    }
    let i_ref = nodes
        .iter()
        .position(|&u| u == u_ref)
        .expect("u_ref is a node");
    let t_ref = t[i_ref];
    t.iter_mut().for_each(|v| *v -= t_ref);

    let exponent_at_zero = tail_exponent(&field, 0.0, 1.0, first.beta - first.alpha, min0)?;
    let exponent_at_one = tail_exponent(&field, 1.0, -1.0, last.beta - last.alpha, min1)?;
    let tail_at_zero = tail_from(exponent_at_zero, t[0] > t_span_cap);
    let tail_at_one = tail_from(exponent_at_one, t[t.len() - 1] < -t_span_cap);

    let mut points: Vec<ProfilePoint> = nodes
        .iter()
        .zip(&t)
        .zip(&phis)
        .map(|((&u, &t), &phi)| ProfilePoint {
            t,
            u,
            z: field.z(u),
            phi,
        })
        .collect();

    // finite-time ends: remaining time ∫ ds/φ with |φ| ~ s^p over (0, min)
    if tail_at_zero != Tail::Asymptotic {
        let q = points[0];
        let dt = min0 / ((1.0 - exponent_at_zero) * q.phi.abs());
        let phi = if tail_at_zero == Tail::Sharp {
            q.phi
        } else {
            0.0
        };
        points.insert(
            0,
            ProfilePoint {
                t: q.t + dt,
                u: 0.0,
                z: 0.0,
                phi,
            },
        );
    }
    if tail_at_one != Tail::Asymptotic {
        let q = points[points.len() - 1];
        let dt = min1 / ((1.0 - exponent_at_one) * q.phi.abs());
        let phi = if tail_at_one == Tail::Sharp {
            q.phi
        } else {
            0.0
        };
        points.push(ProfilePoint {
            t: q.t - dt,
            u: 1.0,
            z: 0.0,
            phi,
        });
    }
    points.reverse();
    points.retain(|q| q.t.abs() <= t_span_cap);

    Ok(Profile {
        points,
        u_ref,
        tail_at_one,
        tail_at_zero,
        exponent_at_one,
        exponent_at_zero,
    })
}

/// Residual of `(D u′)′ + (c·g − f)u′ + ρ` at the point of the profile where
/// `u = u_mid`. The profile is advanced by `±delta` in `t` with RK4 on
/// `u′ = φ(u)` and the derivatives are taken by central differences.
pub fn profile_residual(
    p: &Problem,
    glued: &GluedZ,
    verdict: &ExistenceVerdict,
    u_mid: f64,
    delta: f64,
) -> Result<f64> {
    let field = PhiField::new(p, glued, verdict)?;
    let advance = |u0: f64, dt: f64| -> Result<f64> {
        const SUB: usize = 16;
        let h = dt / SUB as f64;
        let mut u = u0;
        for _ in 0..SUB {
            let k1 = field.phi(u)?;
            let k2 = field.phi(u + 0.5 * h * k1)?;
            let k3 = field.phi(u + 0.5 * h * k2)?;
            let k4 = field.phi(u + h * k3)?;
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        Ok(u)
    };
    let up = advance(u_mid, delta)?;
    let um = advance(u_mid, -delta)?;
    let flux = |u: f64| -> Result<f64> { Ok(p.d.eval(u)? * field.phi(u)?) };
    let du = (up - um) / (2.0 * delta);
    let dflux = (flux(up)? - flux(um)?) / (2.0 * delta);
    let c = glued.c;
    Ok(dflux + (c * p.g.eval(u_mid)? - p.f.eval(u_mid)?) * du + p.rho.eval(u_mid)?)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{extension_check, glue};
    use super::*;
    use crate::shoot::ShootOptions;

    fn profile_of(p: &Problem, c: f64) -> (Profile, GluedZ, ExistenceVerdict) {
        let d = dec(p);
        let glued = glue(p, &d, c, &ShootOptions::default()).unwrap();
        let v = extension_check(p, &d, &glued).unwrap();
        let pr = reconstruct_profile(p, &d, &glued, &v, 50.0).unwrap();
        (pr, glued, v)
    }

    #[test]
    fn kpp_profile_is_classical_and_monotone() {
        let p = kpp();
        let (pr, glued, v) = profile_of(&p, 3.0);
        assert_eq!(pr.tail_at_zero, Tail::Asymptotic);
        assert_eq!(pr.tail_at_one, Tail::Asymptotic);
        assert!(pr
            .points
            .windows(2)
            .all(|w| w[1].t > w[0].t && w[1].u < w[0].u));
        let r = pr.points.iter().find(|q| q.t == 0.0).unwrap();
        assert_eq!(r.u, 0.5);
        for u in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let res = profile_residual(&p, &glued, &v, u, 1e-3).unwrap();
            assert!(res.abs() < 1e-5, "u = {u}: {res:e}");
        }
    }

    #[test]
    fn backward_profile_is_sharp_at_zero() {
        let p = backward();
        let (pr, ..) = profile_of(&p, 2.5);
        assert_eq!(pr.tail_at_zero, Tail::Sharp, "{}", pr.exponent_at_zero);
        assert_eq!(pr.tail_at_one, Tail::Asymptotic);
        let end = pr.points.last().unwrap();
        assert_eq!(end.u, 0.0);
    }

    #[test]
    fn example_one_touches_down_with_zero_speed() {
        let p = ex1(1.0);
        let (pr, ..) = profile_of(&p, 2.5);
        assert_eq!(pr.tail_at_zero, Tail::Touchdown, "{}", pr.exponent_at_zero);
        assert!(!pr.a_finite() && !pr.b_finite());
    }

    #[test]
    fn hermite_profile_interpolates_nodes() {
        let p = kpp();
        let (pr, ..) = profile_of(&p, 3.0);
        for q in pr.points.iter().step_by(7) {
            assert!((pr.u_of_t(q.t).unwrap() - q.u).abs() < 1e-14);
        }
    }
}
