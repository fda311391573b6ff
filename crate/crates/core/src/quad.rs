//! Quadrature helpers: adaptive Simpson, clustered grids and running integrals.

use std::f64::consts::PI;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F, E>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    /// A panel with its end and midpoint values and its Simpson estimate.
    #[derive(Clone, Copy)]
    struct Panel {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
    }

    fn recurse<F, E>(f: &F, p: Panel, tol: f64, depth: u32) -> Result<f64, E>
    where
        F: Fn(f64) -> Result<f64, E>,
    {
        let Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
        } = p;
        let m = 0.5 * (a + b);
        let flm = f(0.5 * (a + m))?;
        let frm = f(0.5 * (m + b))?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        let lp = Panel {
            a,
            b: m,
            fa,
            fm: flm,
            fb: fm,
            whole: left,
        };
        let rp = Panel {
            a: m,
            b,
            fa: fm,
            fm: frm,
            fb,
            whole: right,
        };
        Ok(recurse(f, lp, 0.5 * tol, depth + 1)? + recurse(f, rp, 0.5 * tol, depth + 1)?)
    }

    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let fm = f(0.5 * (a + b))?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(
        &f,
        Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
        },
        tol,
        0,
    )
}

/// `n + 1` points on `[a, b]` clustered at both ends (Chebyshev–Lobatto).
pub fn cosine_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..=n)
        .map(|i| a + (b - a) * 0.5 * (1.0 - (PI * i as f64 / n as f64).cos()))
        .collect();
    x[0] = a;
    x[n] = b;
    x
}

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    x[n] = b;
    x
}

/// Running trapezoid integral; `out[i] = ∫_{x[0]}^{x[i]} y`.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// Interior Chebyshev points of the first kind on `(a, b)`.
pub fn chebyshev_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = ((2 * i + 1) as f64 * PI / (2 * n) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::convert::Infallible;

    use super::*;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|x| Ok::<_, Infallible>(x.exp()), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(|x| Ok::<_, Infallible>(x.sqrt()), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_on_cosine_grid() {
        let x = cosine_grid(0.0, 2.0, 4000);
        let y: Vec<f64> = x.iter().map(|t| t * t).collect();
        let i = cumulative_trapezoid(&x, &y);
        assert!((i.last().unwrap() - 8.0 / 3.0).abs() < 1e-6);
        assert_eq!(x[0], 0.0);
        assert_eq!(x[4000], 2.0);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn chebyshev_points_are_interior() {
        let p = chebyshev_points(0.25, 0.5, 33);
        assert!(p.iter().all(|&t| t > 0.25 && t < 0.5));
    }
}
