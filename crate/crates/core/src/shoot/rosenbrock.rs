//! Linearly implicit 2(3) Rosenbrock pair for a scalar ODE `y' = F(s, y)`.
//!
//! The second-order solution is advanced; the embedded third-order stage
//! only feeds the error estimate.

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Stage data needed by one step: the right-hand side and its partials.
pub trait ScalarRhs {
    type Error;

    fn value(&self, s: f64, y: f64) -> Result<f64, Self::Error>;
    /// `∂F/∂y`.
    fn dy(&self, s: f64, y: f64) -> Result<f64, Self::Error>;
    /// `∂F/∂s`.
    fn ds(&self, s: f64, y: f64) -> Result<f64, Self::Error>;
}

#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub y: f64,
    /// Local error estimate of `y`.
    pub error: f64,
    /// `F(s + h, y)`, reusable as the next step's first stage.
    pub slope: f64,
}

/// One step of size `h` from `(s, y)` with `f0 = F(s, y)` known.
pub fn step<R: ScalarRhs>(rhs: &R, s: f64, y: f64, f0: f64, h: f64) -> Result<Step, R::Error> {
    let d = 1.0 / (2.0 + SQRT2);
    let e32 = 6.0 + SQRT2;
    let j = rhs.dy(s, y)?;
    let t = rhs.ds(s, y)?;
    let w = 1.0 - h * d * j;

    let k1 = (f0 + h * d * t) / w;
    let f1 = rhs.value(s + 0.5 * h, y + 0.5 * h * k1)?;
    let k2 = (f1 - k1) / w + k1;
    let y_new = y + h * k2;
    let f2 = rhs.value(s + h, y_new)?;
    let k3 = (f2 - e32 * (k2 - f1) - 2.0 * (k1 - f0) + h * d * t) / w;
    Ok(Step {
        y: y_new,
        error: h / 6.0 * (k1 - 2.0 * k2 + k3),
        slope: f2,
    })
}

/// Step-size factor for an error ratio `err/tol` of a second-order method.
pub fn step_factor(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        return 5.0;
    }
    (0.8 * ratio.powf(-1.0 / 3.0)).clamp(0.2, 5.0)
}
