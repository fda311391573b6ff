#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavekit::cli::{Loaded, ProblemFile};
use wavekit::model::{decompose, validate_hypotheses, Decomposition, Problem};
use wavekit::wave::{compute_c_hat, wave_report, Exists, SolverOptions, Threshold, WaveReport};

pub const SHIPPED: [&str; 5] = ["ex1", "ex2", "ex3", "kpp", "backward"];

pub fn problem_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(format!("{name}.toml"))
}

pub fn file(name: &str) -> ProblemFile {
    ProblemFile::read(&problem_path(name)).unwrap()
}

pub fn load_file(pf: &ProblemFile, params: &[(&str, f64)]) -> Loaded {
    let overrides: BTreeMap<String, f64> =
        params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    pf.load(Path::new("problem.toml"), &overrides).unwrap()
}

pub fn load(name: &str, params: &[(&str, f64)]) -> Loaded {
    let overrides: BTreeMap<String, f64> =
        params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let path = problem_path(name);
    ProblemFile::read(&path)
        .unwrap()
        .load(&path, &overrides)
        .unwrap()
}

pub struct Solved {
    pub loaded: Loaded,
    pub d: Decomposition,
    pub th: Threshold,
}

impl Solved {
    pub fn new(loaded: Loaded) -> Self {
        let p = &loaded.problem;
        let d = decompose(p, loaded.options.scan_cells, loaded.options.tolerances).unwrap();
        let th = compute_c_hat(p, &d, &loaded.options).unwrap();
        Self { loaded, d, th }
    }

    pub fn p(&self) -> &Problem {
        &self.loaded.problem
    }

    pub fn opts(&self) -> &SolverOptions {
        &self.loaded.options
    }

    pub fn report(&self, c: f64) -> WaveReport {
        wave_report(self.p(), &self.d, &self.th, c, self.opts()).unwrap()
    }
}

/// Replaces the variable `u` by `(1-u)` in an expression.
pub fn mirror_expr(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let ident = |c: Option<&char>| c.is_some_and(|c| c.is_alphanumeric() || *c == '_');
    let mut out = String::new();
    for (i, &ch) in chars.iter().enumerate() {
        let before = if i == 0 { None } else { chars.get(i - 1) };
        if ch == 'u' && !ident(before) && !ident(chars.get(i + 1)) {
            out.push_str("(1-u)");
        } else {
            out.push(ch);
        }
    }
    out
}

/// The problem seen through `u ↦ 1 − u` with `D` negated; sign intervals of
/// `h` swap sign and order.
pub fn mirror_file(pf: &ProblemFile) -> ProblemFile {
    ProblemFile {
        name: pf.name.as_ref().map(|n| format!("{n}_mirror")),
        g: mirror_expr(&pf.g),
        f: mirror_expr(&pf.f),
        d: format!("-({})", mirror_expr(&pf.d)),
        rho: mirror_expr(&pf.rho),
        params: pf.params.clone(),
        options: pf.options,
    }
}

fn poly(coeffs: &[f64]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| match i {
            0 => format!("({c})"),
            1 => format!("({c})*u"),
            _ => format!("({c})*u^{i}"),
        })
        .collect();
    format!("({})", terms.join(" + "))
}

/// `count` polynomial problems satisfying the hypotheses, drawn from a fixed seed.
pub fn random_polynomial_problems(seed: u64, count: usize) -> Vec<Loaded> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 50 * count, "could not draw admissible problems");
        let g = poly(&[rng.random_range(0.5..2.0), rng.random_range(-0.4..0.4)]);
        let f = poly(&[rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]);
        let rho = format!("(u - u^2)*{}", poly(&[1.0, rng.random_range(-0.5..1.0)]));
        let d = if rng.random_bool(0.5) {
            poly(&[
                rng.random_range(0.2..1.5),
                rng.random_range(-0.1..0.5),
                rng.random_range(0.0..0.5),
            ])
        } else {
            let u0: f64 = rng.random_range(0.3..0.7);
            format!(
                "({u0} - u)*{}",
                poly(&[rng.random_range(0.5..1.5), rng.random_range(0.0..0.5)])
            )
        };
        let pf = ProblemFile {
            name: Some(format!("random_{}", out.len())),
            g,
            f,
            d,
            rho,
            params: BTreeMap::new(),
            options: Default::default(),
        };
        let Ok(loaded) = pf.load(Path::new("random.toml"), &BTreeMap::new()) else {
            continue;
        };
        let p = &loaded.problem;
        let Ok(d) = decompose(p, loaded.options.scan_cells, loaded.options.tolerances) else {
            continue;
        };
        if validate_hypotheses(p, &d).is_ok_and(|r| r.passed()) {
            out.push(loaded);
        }
    }
    out
}

/// Largest mixed residual `|ż − (a − h/z)| / (1 + |a| + |h/z|)` of the
/// Hermite interpolant at midpoints between samples, away from the ends.
pub fn z_ode_residual(s: &Solved, r: &WaveReport) -> f64 {
    let p = s.p();
    let c = r.c_evaluated;
    let mut worst: f64 = 0.0;
    for piece in &r.glued.pieces {
        let len = piece.beta - piece.alpha;
        let e = 1e-6 * len;
        let step = (piece.samples.len() / 400).max(1);
        for w in piece.samples.windows(2).step_by(step) {
            let u = 0.5 * (w[0].u + w[1].u);
            if u - piece.alpha < 1e-3 * len || piece.beta - u < 1e-3 * len {
                continue;
            }
            let z = piece.z_at(u).unwrap();
            let dz = (piece.z_at(u + e).unwrap() - piece.z_at(u - e).unwrap()) / (2.0 * e);
            let a = p.f.eval(u).unwrap() - c * p.g.eval(u).unwrap();
            let q = p.h().eval(u).unwrap() / z;
            worst = worst.max((dz - (a - q)).abs() / (1.0 + a.abs() + q.abs()));
        }
    }
    worst
}

/// Largest `|(D u′)′ + (c·g − f)u′ + ρ|` over checkpoints away from the zeros of `D`.
pub fn profile_residual_max(s: &Solved, r: &WaveReport) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..20 {
        let u = i as f64 / 20.0;
        if s.d.d0.iter().any(|z| (z - u).abs() < 0.02) {
            continue;
        }
        let res = wavekit::wave::profile_residual(s.p(), &r.glued, &r.verdict, u, 1e-3).unwrap();
        worst = worst.max(res.abs());
    }
    worst
}

pub fn z_h_opposite(s: &Solved, r: &WaveReport) -> bool {
    r.glued
        .pieces
        .iter()
        .flat_map(|piece| piece.samples.iter())
        .all(|q| q.z * s.p().h().eval(q.u).unwrap() < 0.0)
}

/// `|D(u)u′|` at the first and last profile points.
pub fn boundary_flux(r: &WaveReport) -> f64 {
    let pr = r.profile.as_ref().unwrap();
    let (a, b) = (pr.points.first().unwrap(), pr.points.last().unwrap());
    a.z.abs().max(b.z.abs())
}

pub fn strictly_decreasing(r: &WaveReport) -> bool {
    r.profile
        .as_ref()
        .unwrap()
        .points
        .windows(2)
        .all(|w| w[1].t > w[0].t && w[1].u < w[0].u)
}

pub fn tails_agree(r: &WaveReport) -> bool {
    let pr = r.profile.as_ref().unwrap();
    pr.a_finite() == r.a_finite && pr.b_finite() == r.b_finite
}

/// Feasibility of interval `k` along increasing speeds never goes from
/// feasible back to infeasible.
pub fn monotone(flags: &[bool]) -> bool {
    flags.windows(2).all(|w| !w[0] || w[1])
}

/// Shipped problems with the parameters the worked examples use.
pub fn shipped(name: &str) -> Loaded {
    match name {
        "ex1" => load("ex1", &[("K", 1.0)]),
        other => load(other, &[]),
    }
}

pub fn exists(r: &WaveReport) -> bool {
    r.verdict.exists == Exists::Yes
}
