//! TOML problem files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::CliError;
use crate::expr::ScalarFunction;
use crate::model::Problem;
use crate::wave::SolverOptions;

/// Points at which every coefficient must evaluate when a file is loaded.
const EVAL_CHECK_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: Option<String>,
    pub g: String,
    pub f: String,
    #[serde(rename = "D", alias = "d")]
    pub d: String,
    pub rho: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub options: FileOptions,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOptions {
    pub scan_cells: Option<usize>,
    pub tol_c: Option<f64>,
    pub grid: Option<usize>,
    pub t_span_cap: Option<f64>,
    pub root_tol: Option<f64>,
    pub derivative_tol: Option<f64>,
}

impl FileOptions {
    pub fn apply(&self, mut o: SolverOptions) -> SolverOptions {
        if let Some(v) = self.scan_cells {
            o.scan_cells = v;
        }
        if let Some(v) = self.tol_c {
            o.tol_c = v;
        }
        if let Some(v) = self.grid {
            o.grid = v;
        }
        if let Some(v) = self.t_span_cap {
            o.t_span_cap = v;
        }
        if let Some(v) = self.root_tol {
            o.tolerances.root = v;
        }
        if let Some(v) = self.derivative_tol {
            o.tolerances.derivative = v;
        }
        o
    }
}

/// A parsed problem with its solver settings.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub problem: Problem,
    pub options: SolverOptions,
    pub params: BTreeMap<String, f64>,
}

impl ProblemFile {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::ProblemFile {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// Binds parameters, with `overrides` taking precedence over `[params]`,
    /// and builds the problem.
    pub fn load(
        &self,
        origin: &Path,
        overrides: &BTreeMap<String, f64>,
    ) -> Result<Loaded, CliError> {
        let mut params = self.params.clone();
        params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        let name = self.name.clone().unwrap_or_else(|| {
            origin
                .file_stem()
                .map_or_else(|| "problem".into(), |s| s.to_string_lossy().into_owned())
        });

        let parse = |key: &str, src: &str| {
            ScalarFunction::parse(src, &params).map_err(|e| CliError::Expression {
                key: key.into(),
                source: e,
            })
        };
        let funcs = [
            ("g", parse("g", &self.g)?),
            ("f", parse("f", &self.f)?),
            ("D", parse("D", &self.d)?),
            ("rho", parse("rho", &self.rho)?),
        ];
        for (key, func) in &funcs {
            for i in 0..=EVAL_CHECK_POINTS {
                let u = i as f64 / EVAL_CHECK_POINTS as f64;
                func.eval(u).map_err(|e| CliError::Expression {
                    key: (*key).into(),
                    source: e,
                })?;
            }
        }
        let [(_, g), (_, f), (_, d), (_, rho)] = funcs;
        let problem = Problem::new(name, g, f, d, rho)?;
        Ok(Loaded {
            problem,
            options: self.options.apply(SolverOptions::default()),
            params,
        })
    }
}
