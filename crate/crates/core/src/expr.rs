//! Arithmetic expressions over `x1..xn`, `p1..pn` for user-defined Hamiltonians.
//!
//! Grammar (precedence climbing, lowest first):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right associative
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{name}` at byte {offset} exceeds dimension {dim}")]
    VariableOutOfRange {
        name: String,
        offset: usize,
        dim: usize,
    },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        offset: usize,
        expected: &'static str,
        got: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("non-finite result in `{0}`")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    P(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Sin,
    Cos,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A parsed expression together with the dimension it was validated against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Expr,
    dim: usize,
    source: String,
}

impl Expression {
    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        let tokens = lex(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            dim,
        };
        if parser.tokens.is_empty() {
            return Err(ParseError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected `{}`", tok.kind),
            });
        }
        Ok(Self {
            root,
            dim,
            source: text.to_string(),
        })
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn evaluate(&self, x: &[f64], p: &[f64]) -> Result<f64, EvalError> {
        eval(&self.root, x, p)
    }

    pub fn uses_x(&self) -> bool {
        uses(&self.root, &|v| matches!(v, Var::X(_)))
    }

    pub fn uses_p(&self) -> bool {
        uses(&self.root, &|v| matches!(v, Var::P(_)))
    }

    /// Fully parenthesized rendering; parsing it back yields the same tree.
    pub fn render(&self) -> String {
        self.root.to_string()
    }
}

fn uses(e: &Expr, pred: &dyn Fn(&Var) -> bool) -> bool {
    match e {
        Expr::Num(_) => false,
        Expr::Var(v) => pred(v),
        Expr::Neg(a) => uses(a, pred),
        Expr::Bin(_, a, b) => uses(a, pred) || uses(b, pred),
        Expr::Call(_, args) => args.iter().any(|a| uses(a, pred)),
    }
}

pub fn eval(e: &Expr, x: &[f64], p: &[f64]) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Num(v) => *v,
        Expr::Var(Var::X(i)) => x[i - 1],
        Expr::Var(Var::P(i)) => p[i - 1],
        Expr::Neg(a) => -eval(a, x, p)?,
        Expr::Bin(op, a, b) => {
            let l = eval(a, x, p)?;
            let r = eval(b, x, p)?;
            match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    l / r
                }
                BinOp::Pow => {
                    let v = pow(l, r);
                    if !v.is_finite() {
                        return Err(EvalError::NonFinite(e.to_string()));
                    }
                    v
                }
            }
        }
        Expr::Call(f, args) => {
            let first = eval(&args[0], x, p)?;
            match f {
                Func::Abs => first.abs(),
                Func::Sqrt => {
                    if first < 0.0 {
                        return Err(EvalError::SqrtDomain(first));
                    }
                    first.sqrt()
                }
                Func::Sin => first.sin(),
                Func::Cos => first.cos(),
                Func::Min | Func::Max => {
                    let mut acc = first;
                    for a in &args[1..] {
                        let v = eval(a, x, p)?;
                        acc = if *f == Func::Min { acc.min(v) } else { acc.max(v) };
                    }
                    acc
                }
            }
        }
    })
}

// Integer exponents use repeated multiplication so `p1^2` is exactly `p1*p1`.
fn pow(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() <= 64.0 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::X(i)) => write!(f, "x{i}"),
            Expr::Var(Var::P(i)) => write!(f, "p{i}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}{sym}{b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
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

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(v) => write!(f, "{v}"),
            TokenKind::Ident(s) => write!(f, "{s}"),
            TokenKind::Op(c) => write!(f, "{c}"),
            TokenKind::LParen => write!(f, "("),
            TokenKind::RParen => write!(f, ")"),
            TokenKind::Comma => write!(f, ","),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
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
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("bad number `{lit}`"),
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
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => out.push(Token {
                kind: TokenKind::Op(c as char),
                offset: start,
            }),
            b'(' => out.push(Token {
                kind: TokenKind::LParen,
                offset: start,
            }),
            b')' => out.push(Token {
                kind: TokenKind::RParen,
                offset: start,
            }),
            b',' => out.push(Token {
                kind: TokenKind::Comma,
                offset: start,
            }),
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", text[start..].chars().next().unwrap()),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn end_offset(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.offset + t.kind.to_string().len())
            .unwrap_or(0)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ParseError::Syntax {
                offset: t.offset,
                message: format!("expected `{kind}`, found `{}`", t.kind),
            }),
            None => Err(ParseError::Syntax {
                offset: self.end_offset(),
                message: format!("expected `{kind}`, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::Syntax {
                offset: self.end_offset(),
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
            TokenKind::Ident(name) => {
                if let Some(func) = function(&name) {
                    self.expect(TokenKind::LParen)?;
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek(), Some(t) if t.kind == TokenKind::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(TokenKind::RParen)?;
                    let ok = match func {
                        Func::Min | Func::Max => args.len() >= 2,
                        _ => args.len() == 1,
                    };
                    if !ok {
                        return Err(ParseError::Arity {
                            name,
                            offset: tok.offset,
                            expected: if matches!(func, Func::Min | Func::Max) {
                                "at least 2"
                            } else {
                                "exactly 1"
                            },
                            got: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                self.variable(&name, tok.offset).map(Expr::Var)
            }
            other => Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected `{other}`"),
            }),
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Var, ParseError> {
        let unknown = || ParseError::UnknownIdentifier {
            name: name.to_string(),
            offset,
        };
        let (head, digits) = name.split_at(1);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(unknown());
        }
        let index: usize = digits.parse().map_err(|_| unknown())?;
        let var = match head {
            "x" => Var::X(index),
            "p" => Var::P(index),
            _ => return Err(unknown()),
        };
        if index == 0 || index > self.dim {
            return Err(ParseError::VariableOutOfRange {
                name: name.to_string(),
                offset,
                dim: self.dim,
            });
        }
        Ok(var)
    }
}

fn function(name: &str) -> Option<Func> {
    Some(match name {
        "abs" => Func::Abs,
        "sqrt" => Func::Sqrt,
        "sin" => Func::Sin,
        "cos" => Func::Cos,
        "min" => Func::Min,
        "max" => Func::Max,
        _ => return None,
    })
}
