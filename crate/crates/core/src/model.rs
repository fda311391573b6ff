//! The problem `(g, f, D, ρ)`, the sign-interval decomposition of `h = D·ρ`
//! and the hypothesis checks the existence theory relies on.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Result, WaveError};
use crate::expr::{
    derivative_of, secant_limit_of, BinaryOp, Expression, Node, ScalarFunction, Side,
};
use crate::quad::{adaptive_simpson, chebyshev_points, cumulative_trapezoid, uniform_grid};

/// Points used to confirm `ρ > 0` on `(0, 1)`.
const RHO_GRID: usize = 1024;
const RHO_BOUNDARY_TOL: f64 = 1e-10;
const HYPOTHESIS_GRID: usize = 512;

/// Zero thresholds for `D` and its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroTolerances {
    /// `|D(u)| ≤ root` counts as a zero.
    pub root: f64,
    /// `|Ḋ(u)| ≤ derivative` counts as a degenerate zero.
    pub derivative: f64,
}

impl Default for ZeroTolerances {
    fn default() -> Self {
        Self {
            root: 1e-12,
            derivative: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub g: ScalarFunction,
    pub f: ScalarFunction,
    pub d: ScalarFunction,
    pub rho: ScalarFunction,
    h: ScalarFunction,
}

fn product(a: &ScalarFunction, b: &ScalarFunction) -> ScalarFunction {
    let node = Node::Binary(
        BinaryOp::Mul,
        Box::new(Node::Group(Box::new(a.expression().root().clone()))),
        Box::new(Node::Group(Box::new(b.expression().root().clone()))),
    );
    ScalarFunction::with_clamp(Expression::from_node(node), a.eval_clamp())
        .expect("product of functions valid on [0, 1]")
}

impl Problem {
    /// Builds a problem, rejecting reactions that are not monostable.
    pub fn new(
        name: impl Into<String>,
        g: ScalarFunction,
        f: ScalarFunction,
        d: ScalarFunction,
        rho: ScalarFunction,
    ) -> Result<Self> {
        let h = product(&d, &rho);
        let p = Self {
            name: name.into(),
            g,
            f,
            d,
            rho,
            h,
        };
        for check in p.rho_checks()? {
            if !check.passed {
                return Err(WaveError::Hypothesis {
                    name: check.name,
                    u: check.violating_u.unwrap_or(f64::NAN),
                    detail: check.detail,
                });
            }
        }
        Ok(p)
    }

    /// Parses the four coefficient expressions with a shared parameter map.
    pub fn parse(
        name: &str,
        g: &str,
        f: &str,
        d: &str,
        rho: &str,
        params: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        Self::new(
            name,
            ScalarFunction::parse(g, params)?,
            ScalarFunction::parse(f, params)?,
            ScalarFunction::parse(d, params)?,
            ScalarFunction::parse(rho, params)?,
        )
    }

    pub fn h(&self) -> &ScalarFunction {
        &self.h
    }

    fn rho_checks(&self) -> Result<Vec<HypothesisCheck>> {
        let r0 = self.rho.eval(0.0)?;
        let r1 = self.rho.eval(1.0)?;
        let boundary = if r0.abs() > RHO_BOUNDARY_TOL {
            HypothesisCheck::fail(
                "rho_vanishes_at_equilibria",
                0.0,
                format!("rho(0) = {r0:e}"),
            )
        } else if r1.abs() > RHO_BOUNDARY_TOL {
            HypothesisCheck::fail(
                "rho_vanishes_at_equilibria",
                1.0,
                format!("rho(1) = {r1:e}"),
            )
        } else {
            HypothesisCheck::pass("rho_vanishes_at_equilibria")
        };
        let mut positive = HypothesisCheck::pass("rho_positive_inside");
        for i in 1..RHO_GRID {
            let u = i as f64 / RHO_GRID as f64;
            let r = self.rho.eval(u)?;
            if r <= 0.0 {
                positive = HypothesisCheck::fail("rho_positive_inside", u, format!("rho = {r:e}"));
                break;
            }
        }
        Ok(vec![boundary, positive])
    }
}

/// `g ↦ −g`; thresholds of the result map back through `c ↦ −c`.
pub fn negate_g_transform(p: &Problem) -> Problem {
    Problem {
        name: p.name.clone(),
        g: p.g.negated(),
        f: p.f.clone(),
        d: p.d.clone(),
        rho: p.rho.clone(),
        h: p.h.clone(),
    }
}

/// True iff `∫₀¹ (c·g − f) > 0`, a necessary condition on admissible speeds.
pub fn necessary_speed_condition(p: &Problem, c: f64) -> Result<bool> {
    let v = adaptive_simpson(
        |u| Ok::<_, WaveError>(c * p.g.eval(u)? - p.f.eval(u)?),
        0.0,
        1.0,
        1e-10,
    )?;
    Ok(v > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HSign {
    Positive,
    Negative,
}

/// Maximal open interval on which `h` keeps a strict sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignInterval {
    /// 1-based position from the left.
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub h_sign: HSign,
    /// `lim h(u)/(u − α)` as `u → α⁺`.
    pub hdot_alpha: f64,
    /// `lim h(u)/(u − β)` as `u → β⁻`.
    pub hdot_beta: f64,
    /// False when either endpoint limit failed to settle.
    pub hdot_converged: bool,
}

impl SignInterval {
    pub fn len(&self) -> f64 {
        self.beta - self.alpha
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    /// Endpoint where the mean-value functionals are anchored: `α` for
    /// positive `h`, `β` for negative `h`.
    pub fn anchor(&self) -> f64 {
        match self.h_sign {
            HSign::Positive => self.alpha,
            HSign::Negative => self.beta,
        }
    }

    pub fn anchor_hdot(&self) -> f64 {
        match self.h_sign {
            HSign::Positive => self.hdot_alpha,
            HSign::Negative => self.hdot_beta,
        }
    }
}

/// One-sided slopes of `D` at an interior zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroSlope {
    pub u0: f64,
    pub left: f64,
    pub right: f64,
}

impl ZeroSlope {
    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.left.abs() <= tol && self.right.abs() <= tol
    }

    /// Two-sided value; the mean of the one-sided slopes.
    pub fn value(&self) -> f64 {
        0.5 * (self.left + self.right)
    }
}

/// A local minimum of `|D|` below `1e-9` that did not refine to a zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentZeroWarning {
    pub u: f64,
    pub d_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub intervals: Vec<SignInterval>,
    /// Interior zeros of `D`, increasing.
    pub d0: Vec<f64>,
    /// Zeros where `Ḋ` vanishes as well.
    pub d00: Vec<f64>,
    /// Indexes `k ≥ 2` of negative intervals whose left end is in `d00`.
    pub k0_minus: Vec<usize>,
    pub d_slopes: Vec<ZeroSlope>,
    pub warnings: Vec<TangentZeroWarning>,
    pub tolerances: ZeroTolerances,
}

impl Decomposition {
    pub fn interval(&self, k: usize) -> &SignInterval {
        &self.intervals[k - 1]
    }

    pub fn slope_at(&self, u0: f64) -> Option<&ZeroSlope> {
        self.d_slopes.iter().find(|s| s.u0 == u0)
    }

    pub fn is_degenerate_zero(&self, u0: f64) -> bool {
        self.d00.contains(&u0)
    }
}

const TANGENT_DIP: f64 = 1e-9;
const BISECT_WIDTH: f64 = 1e-12;

fn bisect_zero(d: &ScalarFunction, mut a: f64, mut b: f64) -> Result<f64> {
    let mut fa = d.eval(a)?;
    while b - a > BISECT_WIDTH {
        let m = 0.5 * (a + b);
        let fm = d.eval(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section search for the minimum of `|D|` on `[a, b]`.
fn golden_min_abs(d: &ScalarFunction, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = d.eval(x1)?.abs();
    let mut f2 = d.eval(x2)?.abs();
    for _ in 0..200 {
        if b - a <= BISECT_WIDTH {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = d.eval(x1)?.abs();
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = d.eval(x2)?.abs();
        }
    }
    let (u, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Ok((u, v))
}

/// Locates the interior zeros of `D` and splits `(0, 1)` into sign intervals
/// of `h = D·ρ`.
pub fn decompose(p: &Problem, scan_cells: usize, tol: ZeroTolerances) -> Result<Decomposition> {
    if scan_cells < 64 {
        return Err(WaveError::InvalidInput(format!(
            "scan_cells must be at least 64, got {scan_cells}"
        )));
    }
    let n = scan_cells;
    let x = uniform_grid(0.0, 1.0, n);
    let dv: Vec<f64> = x.iter().map(|&u| p.d.eval(u)).collect::<Result<_, _>>()?;
    let near_zero = |i: usize| dv[i].abs() <= tol.root;

    // three consecutive vanishing nodes span two cells
    for i in 1..n.saturating_sub(2) {
        if near_zero(i) && near_zero(i + 1) && near_zero(i + 2) {
            return Err(WaveError::Plateau {
                from: x[i],
                to: x[i + 2],
            });
        }
    }

    let mut zeros = Vec::new();
    let mut warnings = Vec::new();
    for i in 1..n {
        if near_zero(i) {
            let (l, r) = (dv[i - 1], dv[i + 1]);
            let z = if l * r < 0.0 {
                bisect_zero(&p.d, x[i - 1], x[i + 1])?
            } else {
                let (u, v) = golden_min_abs(&p.d, x[i - 1], x[i + 1])?;
                if v <= dv[i].abs() {
                    u
                } else {
                    x[i]
                }
            };
            zeros.push(z);
        }
    }
    for i in 0..n {
        if near_zero(i) || near_zero(i + 1) {
            continue;
        }
        if dv[i] * dv[i + 1] < 0.0 {
            zeros.push(bisect_zero(&p.d, x[i], x[i + 1])?);
        }
    }
    // even-order zeros show up as local minima of |D| without a sign change
    for i in 1..n {
        if near_zero(i) || near_zero(i - 1) || near_zero(i + 1) {
            continue;
        }
        let (a, m, b) = (dv[i - 1].abs(), dv[i].abs(), dv[i + 1].abs());
        let same_sign = dv[i - 1] * dv[i] > 0.0 && dv[i] * dv[i + 1] > 0.0;
        if !(same_sign && m <= a && m <= b) {
            continue;
        }
        let (u, v) = golden_min_abs(&p.d, x[i - 1], x[i + 1])?;
        if v < TANGENT_DIP {
            if v <= tol.root {
                zeros.push(u);
            } else {
                warnings.push(TangentZeroWarning { u, d_value: v });
            }
        }
    }
    zeros.retain(|&z| z > 0.0 && z < 1.0);
    zeros.sort_by(|a, b| a.total_cmp(b));
    zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut ends = vec![0.0];
    ends.extend(zeros.iter().copied());
    ends.push(1.0);

    let mut intervals = Vec::with_capacity(ends.len() - 1);
    for (j, w) in ends.windows(2).enumerate() {
        let (alpha, beta) = (w[0], w[1]);
        let mid = p.h.eval(0.5 * (alpha + beta))?;
        let h_sign = if mid > 0.0 {
            HSign::Positive
        } else if mid < 0.0 {
            HSign::Negative
        } else {
            return Err(WaveError::Inconsistent(format!(
                "h vanishes at the midpoint of ({alpha}, {beta})"
            )));
        };
        let len = beta - alpha;
        let hf = |u: f64| p.h.eval(u);
        let la = secant_limit_of(hf, alpha, Side::Right, len)?;
        let lb = secant_limit_of(hf, beta, Side::Left, len)?;
        intervals.push(SignInterval {
            k: j + 1,
            alpha,
            beta,
            h_sign,
            hdot_alpha: la.value,
            hdot_beta: lb.value,
            hdot_converged: la.converged && lb.converged,
        });
    }

    let mut d_slopes = Vec::with_capacity(zeros.len());
    let mut d00 = Vec::new();
    for (j, &u0) in zeros.iter().enumerate() {
        let scale = intervals[j].len().min(intervals[j + 1].len());
        let df = |u: f64| p.d.eval(u);
        let slope = ZeroSlope {
            u0,
            left: derivative_of(df, u0, Side::Left, scale)?,
            right: derivative_of(df, u0, Side::Right, scale)?,
        };
        if slope.is_degenerate(tol.derivative) {
            d00.push(u0);
        }
        d_slopes.push(slope);
    }
    let k0_minus = intervals
        .iter()
        .filter(|iv| iv.k >= 2 && iv.h_sign == HSign::Negative && d00.contains(&iv.alpha))
        .map(|iv| iv.k)
        .collect();

    Ok(Decomposition {
        intervals,
        d0: zeros,
        d00,
        k0_minus,
        d_slopes,
        warnings,
        tolerances: tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    /// Interval the check refers to, if any.
    pub k: Option<usize>,
    pub passed: bool,
    pub violating_u: Option<f64>,
    pub detail: String,
}

impl HypothesisCheck {
    fn pass(name: &str) -> Self {
        Self {
            name: name.into(),
            k: None,
            passed: true,
            violating_u: None,
            detail: String::new(),
        }
    }

    fn fail(name: &str, u: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            k: None,
            passed: false,
            violating_u: Some(u),
            detail,
        }
    }

    fn on(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn find(&self, name: &str, k: Option<usize>) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name && c.k == k)
    }
}

/// Minimum of the running integral of `g` away from `anchor`, over a uniform
/// grid of `cells` cells; returns `(min, argmin)`.
fn running_integral_min(g: &ScalarFunction, iv: &SignInterval, cells: usize) -> Result<(f64, f64)> {
    let anchor = iv.anchor();
    let far = if anchor == iv.alpha {
        iv.beta
    } else {
        iv.alpha
    };
    let s = uniform_grid(anchor, far, cells);
    let y: Vec<f64> = s.iter().map(|&u| g.eval(u)).collect::<Result<_, _>>()?;
    // oriented so that values are integrals over a positive-length segment
    let sign = if far > anchor { 1.0 } else { -1.0 };
    let acc = cumulative_trapezoid(&s, &y);
    let (i, v) = acc
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &v)| (i, sign * v))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid has interior points");
    Ok((v, s[i]))
}

/// Checks every hypothesis of the existence theory and reports each one.
pub fn validate_hypotheses(p: &Problem, d: &Decomposition) -> Result<ValidationReport> {
    let mut checks = p.rho_checks()?;

    for iv in &d.intervals {
        let anchor = iv.anchor();
        let ga = p.g.eval(anchor)?;
        checks.push(
            if ga > 0.0 {
                HypothesisCheck::pass("g_positive_at_anchor")
            } else {
                HypothesisCheck::fail("g_positive_at_anchor", anchor, format!("g = {ga:e}"))
            }
            .on(iv.k),
        );

        let coarse = running_integral_min(&p.g, iv, HYPOTHESIS_GRID)?;
        let fine = running_integral_min(&p.g, iv, 2 * HYPOTHESIS_GRID)?;
        let worst = if fine.0 <= coarse.0 { fine } else { coarse };
        checks.push(
            if worst.0 > 0.0 {
                HypothesisCheck::pass("g_running_integral_positive")
            } else {
                HypothesisCheck::fail(
                    "g_running_integral_positive",
                    worst.1,
                    format!("integral of g from the anchor is {:e}", worst.0),
                )
            }
            .on(iv.k),
        );

        let want = match iv.h_sign {
            HSign::Positive => 1.0,
            HSign::Negative => -1.0,
        };
        let mut sign = HypothesisCheck::pass("h_strict_sign");
        for u in chebyshev_points(iv.alpha, iv.beta, 33) {
            let hv = p.h.eval(u)?;
            if hv * want <= 0.0 {
                sign = HypothesisCheck::fail("h_strict_sign", u, format!("h = {hv:e}"));
                break;
            }
        }
        checks.push(sign.on(iv.k));

        checks.push(
            if iv.hdot_converged {
                HypothesisCheck::pass("h_differentiable_at_ends")
            } else {
                HypothesisCheck::fail(
                    "h_differentiable_at_ends",
                    iv.alpha,
                    "secant quotient of h does not settle at an endpoint".into(),
                )
            }
            .on(iv.k),
        );
    }

    let mut deg = HypothesisCheck::pass("g_positive_on_degenerate_zeros");
    for &u0 in &d.d00 {
        let gv = p.g.eval(u0)?;
        if gv <= 0.0 {
            deg =
                HypothesisCheck::fail("g_positive_on_degenerate_zeros", u0, format!("g = {gv:e}"));
            break;
        }
    }
    checks.push(deg);

    Ok(ValidationReport { checks })
}
