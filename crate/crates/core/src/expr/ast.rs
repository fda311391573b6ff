use std::fmt;

use super::ExprError;

/// Built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Neg,
    Sqrt,
    Abs,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl UnaryFn {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sqrt" => Some(Self::Sqrt),
            "abs" => Some(Self::Abs),
            "exp" => Some(Self::Exp),
            "ln" => Some(Self::Ln),
            "sin" => Some(Self::Sin),
            "cos" => Some(Self::Cos),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Neg => "-",
            Self::Sqrt => "sqrt",
            Self::Abs => "abs",
            Self::Exp => "exp",
            Self::Ln => "ln",
            Self::Sin => "sin",
            Self::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            Self::Add => '+',
            Self::Sub => '-',
            Self::Mul => '*',
            Self::Div => '/',
            Self::Pow => '^',
        }
    }
}

/// Expression tree over the single variable `u`.
///
/// Named parameters are bound at parse time and carry their value, so a
/// tree can always be evaluated without an environment.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Param { name: String, value: f64 },
    Unary(UnaryFn, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Group(Box<Node>),
}

impl Node {
    pub fn eval(&self, u: f64, clamp: f64) -> Result<f64, ExprError> {
        let v = match self {
            Node::Const(c) => *c,
            Node::Var => u,
            Node::Param { value, .. } => *value,
            Node::Group(inner) => inner.eval(u, clamp)?,
            Node::Unary(op, arg) => {
                let x = arg.eval(u, clamp)?;
                match op {
                    UnaryFn::Neg => -x,
                    UnaryFn::Abs => x.abs(),
                    UnaryFn::Exp => x.exp(),
                    UnaryFn::Sin => x.sin(),
                    UnaryFn::Cos => x.cos(),
                    UnaryFn::Sqrt => {
                        if x >= 0.0 {
                            x.sqrt()
                        } else if x >= -clamp {
                            0.0
                        } else {
                            return Err(ExprError::Domain {
                                func: "sqrt",
                                arg: x,
                            });
                        }
                    }
                    UnaryFn::Ln => {
                        if x > 0.0 {
                            x.ln()
                        } else {
                            return Err(ExprError::Domain { func: "ln", arg: x });
                        }
                    }
                }
            }
            Node::Binary(op, lhs, rhs) => {
                let a = lhs.eval(u, clamp)?;
                let b = rhs.eval(u, clamp)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::DivisionByZero);
                        }
                        a / b
                    }
                    BinaryOp::Pow => power(a, b, clamp)?,
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Structural negation: `-(expr)`.
    pub fn negated(&self) -> Node {
        Node::Unary(UnaryFn::Neg, Box::new(Node::Group(Box::new(self.clone()))))
    }
}

fn power(base: f64, exponent: f64, clamp: f64) -> Result<f64, ExprError> {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        if base == 0.0 && exponent < 0.0 {
            return Err(ExprError::DivisionByZero);
        }
        return Ok(base.powi(exponent as i32));
    }
    if base < 0.0 {
        if base >= -clamp {
            return Ok(0.0);
        }
        return Err(ExprError::Domain {
            func: "^",
            arg: base,
        });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(ExprError::DivisionByZero);
    }
    Ok(base.powf(exponent))
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var => f.write_str("u"),
            Node::Param { name, .. } => f.write_str(name),
            Node::Group(inner) => write!(f, "({inner})"),
            Node::Unary(UnaryFn::Neg, arg) => write!(f, "-{arg}"),
            Node::Unary(func, arg) => write!(f, "{}({arg})", func.name()),
            Node::Binary(op, lhs, rhs) => write!(f, "{lhs}{}{rhs}", op.symbol()),
        }
    }
}
