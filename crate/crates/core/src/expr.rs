//! A small arithmetic expression language for user-supplied functions.
//!
//! Expressions are functions of a single real argument, written either as
//! `x` or `t`. The grammar is:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! so `^` is right-associative and binds tighter than unary minus
//! (`-x^2` is `-(x^2)`). Functions: `exp ln abs sqrt` (one argument) and
//! `min max pow` (two arguments). Any other identifier must be bound as a
//! named parameter at parse time and is substituted by its value.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("expression evaluated to a non-finite value at {arg}")]
    NonFinite { arg: f64 },
}

/// The argument symbol used by an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Abs,
    Sqrt,
    Min,
    Max,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Parses `src` with no named parameters.
pub fn parse_expression(src: &str) -> Result<Expr, ExprError> {
    parse_expression_with(src, &BTreeMap::new())
}

/// Parses `src`, substituting each identifier found in `params` by its value.
pub fn parse_expression_with(src: &str, params: &BTreeMap<String, f64>) -> Result<Expr, ExprError> {
    let tokens = lex(src)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        params,
        end: src.len(),
    };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ExprError::Syntax {
            offset: tok.offset,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(expr)
}

impl Expr {
    /// Evaluates with the argument bound to `arg`. IEEE semantics throughout.
    pub fn eval(&self, arg: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(_) => arg,
            Expr::Neg(e) => -e.eval(arg),
            Expr::Binary(op, l, r) => {
                let (l, r) = (l.eval(arg), r.eval(arg));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => pow(l, r),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(arg);
                match f {
                    Func::Exp => a.exp(),
                    Func::Ln => a.ln(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => a.sqrt(),
                    Func::Min => a.min(args[1].eval(arg)),
                    Func::Max => a.max(args[1].eval(arg)),
                    Func::Pow => pow(a, args[1].eval(arg)),
                }
            }
        }
    }

    /// Like [`Expr::eval`] but rejects NaN and infinite results.
    pub fn eval_checked(&self, arg: f64) -> Result<f64, ExprError> {
        let v = self.eval(arg);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite { arg })
        }
    }
}

fn pow(base: f64, exp: f64) -> f64 {
    if exp == 2.0 {
        base * base
    } else if exp == exp.trunc() && exp.abs() < 64.0 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "({v})"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Op(c) => format!("operator `{c}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
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
                let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push(Token {
                    kind: TokenKind::Num(v),
                    offset: start,
                });
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => TokenKind::Op(c as char),
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b',' => TokenKind::Comma,
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push(Token { kind, offset: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next_offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c), ..
            }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ExprError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ExprError::Syntax {
                offset: t.offset,
                message: format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            }),
            None => Err(ExprError::Syntax {
                offset: self.end,
                message: format!("expected {}, found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op(&['-']).is_some() {
            // literal negation folds into the number so printing round-trips
            return Ok(match self.unary()? {
                Expr::Num(v) => Expr::Num(-v),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ExprError::Syntax {
                offset: self.end,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => self.ident(name, tok.offset),
            other => Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn ident(&mut self, name: String, offset: usize) -> Result<Expr, ExprError> {
        if let Some(func) = Func::from_name(&name) {
            self.expect(TokenKind::LParen)?;
            let mut args = vec![self.expr()?];
            while matches!(self.peek(), Some(t) if t.kind == TokenKind::Comma) {
                self.pos += 1;
                args.push(self.expr()?);
            }
            let close = self.next_offset();
            self.expect(TokenKind::RParen)?;
            if args.len() != func.arity() {
                return Err(ExprError::Syntax {
                    offset: close,
                    message: format!(
                        "`{}` takes {} argument(s), got {}",
                        func.name(),
                        func.arity(),
                        args.len()
                    ),
                });
            }
            return Ok(Expr::Call(func, args));
        }
        match name.as_str() {
            "x" => Ok(Expr::Var(Var::X)),
            "t" => Ok(Expr::Var(Var::T)),
            _ => match self.params.get(&name) {
                Some(v) => Ok(Expr::Num(*v)),
                None => Err(ExprError::UnknownIdentifier { offset, name }),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn linear_minus_log_formula() {
        let e = parse_expression("x - ln(x+1)").unwrap();
        assert!((e.eval(1.0) - (1.0 - 2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn power_ratio_with_bound_params() {
        let e = parse_expression_with("x^(p1)/(1+x^(p2))", &params(&[("p1", 2.0), ("p2", 1.0)])).unwrap();
        assert_eq!(e.eval(1.0), 0.5);
    }

    #[test]
    fn dangling_operator_reports_offset() {
        match parse_expression("2*+") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            parse_expression("2*y"),
            Err(ExprError::UnknownIdentifier {
                offset: 2,
                name: "y".into()
            })
        );
    }

    #[test]
    fn precedence() {
        let e = parse_expression("-x^2").unwrap();
        assert_eq!(e.eval(3.0), -9.0);
        let e = parse_expression("2^3^2").unwrap();
        assert_eq!(e.eval(0.0), 512.0);
        let e = parse_expression("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(0.0), -4.0);
        let e = parse_expression("2^-1").unwrap();
        assert_eq!(e.eval(0.0), 0.5);
        let e = parse_expression("8 / 4 / 2").unwrap();
        assert_eq!(e.eval(0.0), 1.0);
    }

    #[test]
    fn functions_and_arity() {
        let e = parse_expression("max(min(t, 1), 0.5) + pow(t, 2) + sqrt(abs(-4)) + exp(0)").unwrap();
        assert_eq!(e.eval(3.0), 1.0 + 9.0 + 2.0 + 1.0);
        assert!(matches!(parse_expression("min(1)"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expression("exp(1, 2)"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn unterminated_input() {
        assert!(matches!(
            parse_expression("(x + 1"),
            Err(ExprError::Syntax { offset: 6, .. })
        ));
        assert!(matches!(parse_expression(""), Err(ExprError::Syntax { offset: 0, .. })));
        assert!(matches!(
            parse_expression("x $ 1"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
    }

    #[test]
    fn scientific_literals() {
        let e = parse_expression("1.5e-3 + 2E2 + .25").unwrap();
        assert!((e.eval(0.0) - 200.2515).abs() < 1e-12);
    }

    #[test]
    fn checked_eval_rejects_nan() {
        let e = parse_expression("ln(x)").unwrap();
        assert!(e.eval_checked(-1.0).is_err());
        assert!(e.eval_checked(0.0).is_err());
        assert!(e.eval_checked(1.0).is_ok());
        // x*exp(-1/x) is finite at zero through IEEE infinities
        let e = parse_expression("x*exp(-1/x)").unwrap();
        assert_eq!(e.eval_checked(0.0), Ok(0.0));
    }

    mod roundtrip {
        use super::super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (-1.0e6..1.0e6f64).prop_map(Expr::Num),
                Just(Expr::Var(Var::X)),
                Just(Expr::Var(Var::T)),
            ];
            leaf.prop_recursive(5, 48, 3, |inner| {
                prop_oneof![
                    inner.clone().prop_filter_map("negated literal", |e| match e {
                        Expr::Num(_) => None,
                        e => Some(Expr::Neg(Box::new(e))),
                    }),
                    (
                        prop_oneof![
                            Just(BinOp::Add),
                            Just(BinOp::Sub),
                            Just(BinOp::Mul),
                            Just(BinOp::Div),
                            Just(BinOp::Pow)
                        ],
                        inner.clone(),
                        inner.clone()
                    )
                        .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
                    (
                        prop_oneof![Just(Func::Exp), Just(Func::Ln), Just(Func::Abs), Just(Func::Sqrt)],
                        inner.clone()
                    )
                        .prop_map(|(f, a)| Expr::Call(f, vec![a])),
                    (
                        prop_oneof![Just(Func::Min), Just(Func::Max), Just(Func::Pow)],
                        inner.clone(),
                        inner
                    )
                        .prop_map(|(f, a, b)| Expr::Call(f, vec![a, b])),
                ]
            })
        }

        proptest! {
            #[test]
            fn print_then_parse_is_identity(e in arb_expr()) {
                let printed = e.to_string();
                let reparsed = parse_expression(&printed).unwrap();
                prop_assert_eq!(reparsed, e);
            }
        }
    }
}
