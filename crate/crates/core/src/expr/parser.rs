//! Recursive-descent parser for the coefficient grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := power
//! power  := atom ('^' power)?
//! atom   := number | 'u' | name | func '(' expr ')' | '(' expr ')' | '-' atom
//! ```
//!
//! Unary minus binds to the following atom, so `-u^2` reads as `(-u)^2`.

use std::collections::BTreeMap;

use super::ast::{BinaryOp, Node, UnaryFn};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent only when followed by digits, so `2e` stays a syntax error
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(value), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::RParen) => Ok(()),
            _ => Err(ExprError::Syntax {
                offset,
                message: "expected `)`".into(),
            }),
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' {
                BinaryOp::Add
            } else {
                BinaryOp::Sub
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.power()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' {
                BinaryOp::Mul
            } else {
                BinaryOp::Div
            };
            self.pos += 1;
            let rhs = self.power()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.power()?;
            return Ok(Node::Binary(
                BinaryOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Node::Const(v)),
            Some(Tok::Op('-')) => Ok(Node::Unary(UnaryFn::Neg, Box::new(self.atom()?))),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(Node::Group(Box::new(inner)))
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.pos += 1;
                    return self.call(name, offset);
                }
                if name == "u" {
                    return Ok(Node::Var);
                }
                if UnaryFn::from_name(&name).is_some() {
                    return Err(ExprError::Arity {
                        name,
                        got: 0,
                        offset,
                    });
                }
                match self.params.get(&name) {
                    Some(&value) => Ok(Node::Param { name, value }),
                    None => Err(ExprError::UnknownIdentifier { name, offset }),
                }
            }
            Some(tok) => Err(ExprError::Syntax {
                offset,
                message: format!("unexpected token {tok:?}"),
            }),
            None => Err(ExprError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Node, ExprError> {
        let Some(func) = UnaryFn::from_name(&name) else {
            return Err(ExprError::UnknownIdentifier { name, offset });
        };
        if let Some(Tok::RParen) = self.peek() {
            return Err(ExprError::Arity {
                name,
                got: 0,
                offset,
            });
        }
        let arg = self.expr()?;
        let mut extra = 0;
        while let Some(Tok::Comma) = self.peek() {
            self.pos += 1;
            self.expr()?;
            extra += 1;
        }
        self.expect_rparen()?;
        if extra > 0 {
            return Err(ExprError::Arity {
                name,
                got: extra + 1,
                offset,
            });
        }
        Ok(Node::Unary(func, Box::new(arg)))
    }
}

pub(super) fn parse_node(src: &str, params: &BTreeMap<String, f64>) -> Result<Node, ExprError> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(ExprError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: src.len(),
        params,
    };
    let node = parser.expr()?;
    if parser.pos < parser.toks.len() {
        return Err(ExprError::Syntax {
            offset: parser.offset(),
            message: "trailing input".into(),
        });
    }
    Ok(node)
}
