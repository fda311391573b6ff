//! Coefficient expressions: parsing, evaluation on `[0, 1]`, and numeric
//! differentiation with endpoint limits.

mod ast;
mod diff;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use ast::{BinaryOp, Node, UnaryFn};
pub use diff::{
    derivative_at, derivative_of, secant_limit_at, secant_limit_of, SecantLimit, Side,
    DIVERGENCE_CAP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes exactly one argument, got {got}")]
    Arity {
        name: String,
        got: usize,
        offset: usize,
    },
    #[error("{func} argument {arg} is outside its domain")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
    #[error("cannot evaluate at u = {u}: {source}")]
    At {
        u: f64,
        #[source]
        source: Box<ExprError>,
    },
}

/// A parsed expression in the variable `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(source: &str, params: &BTreeMap<String, f64>) -> Result<Self, ExprError> {
        Ok(Self {
            root: parser::parse_node(source, params)?,
        })
    }

    pub fn from_node(root: Node) -> Self {
        Self { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn negated(&self) -> Self {
        Self::from_node(self.root.negated())
    }

    /// Parameters referenced by the tree, with their bound values.
    pub fn params(&self) -> BTreeMap<String, f64> {
        fn walk(node: &Node, out: &mut BTreeMap<String, f64>) {
            match node {
                Node::Param { name, value } => {
                    out.insert(name.clone(), *value);
                }
                Node::Unary(_, a) | Node::Group(a) => walk(a, out),
                Node::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Node::Const(_) | Node::Var => {}
            }
        }
        let mut out = BTreeMap::new();
        walk(&self.root, &mut out);
        out
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Default window below zero inside which `sqrt` and fractional powers
/// clamp their argument to zero.
pub const DEFAULT_EVAL_CLAMP: f64 = 1e-12;

/// Points used to confirm a function evaluates on all of `[0, 1]`.
const VALIDATION_POINTS: usize = 257;

/// A real function on `[0, 1]` backed by an [`Expression`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFunction {
    expr: Expression,
    eval_clamp: f64,
}

impl ScalarFunction {
    /// Wraps an expression after checking it evaluates on a grid over `[0, 1]`.
    pub fn new(expr: Expression) -> Result<Self, ExprError> {
        Self::with_clamp(expr, DEFAULT_EVAL_CLAMP)
    }

    pub fn with_clamp(expr: Expression, eval_clamp: f64) -> Result<Self, ExprError> {
        let f = Self { expr, eval_clamp };
        for i in 0..VALIDATION_POINTS {
            let u = i as f64 / (VALIDATION_POINTS - 1) as f64;
            f.eval(u)?;
        }
        Ok(f)
    }

    pub fn parse(source: &str, params: &BTreeMap<String, f64>) -> Result<Self, ExprError> {
        Self::new(Expression::parse(source, params)?)
    }

    /// Constant function, mostly for tests and synthetic problems.
    pub fn constant(value: f64) -> Self {
        Self {
            expr: Expression::from_node(Node::Const(value)),
            eval_clamp: DEFAULT_EVAL_CLAMP,
        }
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn eval_clamp(&self) -> f64 {
        self.eval_clamp
    }

    pub fn eval(&self, u: f64) -> Result<f64, ExprError> {
        self.expr
            .root
            .eval(u, self.eval_clamp)
            .map_err(|e| ExprError::At {
                u,
                source: Box::new(e),
            })
    }

    /// `-f`, evaluating bit-identically to `-(f(u))`.
    pub fn negated(&self) -> Self {
        Self {
            expr: self.expr.negated(),
            eval_clamp: self.eval_clamp,
        }
    }

    pub fn derivative(&self, u: f64) -> Result<f64, ExprError> {
        let side = if u <= 0.0 {
            Side::Right
        } else if u >= 1.0 {
            Side::Left
        } else {
            Side::Central
        };
        derivative_at(self, u, side)
    }
}
