//! Arithmetic expressions in one variable `r`.
//!
//! Grammar, loosest first: `+ -`, `* /`, unary `-`, right-associative `^`.
//! Functions are `exp log sqrt sinh cosh` of one argument and `pow(a, b)`.

use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, r: f64) -> f64 {
        match self {
            Node::Num(x) => *x,
            Node::Var => r,
            Node::Neg(a) => -a.eval(r),
            Node::Add(a, b) => a.eval(r) + b.eval(r),
            Node::Sub(a, b) => a.eval(r) - b.eval(r),
            Node::Mul(a, b) => a.eval(r) * b.eval(r),
            Node::Div(a, b) => a.eval(r) / b.eval(r),
            Node::Pow(a, b) => pow(a.eval(r), b.eval(r)),
            Node::Call(f, a) => f.apply(a.eval(r)),
        }
    }
}

fn pow(x: f64, y: f64) -> f64 {
    if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
        x.powi(y as i32)
    } else {
        x.powf(y)
    }
}

/// Parse failure at a 1-based character column of the source.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let x = text.parse::<f64>().map_err(|_| ExprError {
                column: col,
                message: format!("malformed number '{text}'"),
            })?;
            out.push((Tok::Num(x), col));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        let tok = match c {
            '+' | '*' | '/' | '^' => Tok::Op(c),
            '-' | '−' => Tok::Op('-'),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => {
                return Err(ExprError {
                    column: col,
                    message: format!("unexpected character '{c}'"),
                })
            }
        };
        out.push((tok, col));
        i += 1;
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            return Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let col = self.column();
        match self.bump() {
            Tok::Num(x) => Ok(Node::Num(x)),
            Tok::LParen => {
                let inner = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) if name == "r" => Ok(Node::Var),
            Tok::Ident(name) if name == "pow" => {
                self.expect(Tok::LParen, "'(' after pow")?;
                let a = self.sum()?;
                self.expect(Tok::Comma, "',' between the arguments of pow")?;
                let b = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Node::Pow(Box::new(a), Box::new(b)))
            }
            Tok::Ident(name) => match Func::from_name(&name) {
                Some(f) => {
                    self.expect(Tok::LParen, &format!("'(' after {name}"))?;
                    let a = self.sum()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Node::Call(f, Box::new(a)))
                }
                None => Err(ExprError {
                    column: col,
                    message: format!("unknown name '{name}'"),
                }),
            },
            Tok::End => Err(ExprError {
                column: col,
                message: "unexpected end of expression".into(),
            }),
            t => Err(ExprError {
                column: col,
                message: format!("unexpected {}", describe(&t)),
            }),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("name '{s}'"),
        Tok::Op(c) => format!("'{c}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::End => "end of expression".into(),
    }
}

/// A parsed expression, cheap to clone and share across threads.
#[derive(Clone, Debug)]
pub struct Expr {
    source: String,
    root: Arc<Node>,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser {
            toks: tokenize(src)?,
            pos: 0,
        };
        let root = p.sum()?;
        if *p.peek() != Tok::End {
            let t = p.peek().clone();
            return p.fail(format!("unexpected {}", describe(&t)));
        }
        Ok(Self {
            source: src.trim().to_string(),
            root: Arc::new(root),
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.root.eval(r)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_constant(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Num(_) => true,
                Node::Var => false,
                Node::Neg(a) | Node::Call(_, a) => walk(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => walk(a) && walk(b),
            }
        }
        walk(&self.root)
    }
}

/// Fourth-order central difference of `f` at `r`, with Richardson
/// extrapolation over the steps `h` and `h/2`.
pub fn finite_difference(f: impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
    let d = |h: f64| (f(r - 2.0 * h) - 8.0 * f(r - h) + 8.0 * f(r + h) - f(r + 2.0 * h)) / (12.0 * h);
    let (a, b) = (d(h), d(h / 2.0));
    b + (b - a) / 15.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, r: f64) -> f64 {
        Expr::parse(s).unwrap().eval(r)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0), -4.0);
        assert_eq!(ev("2 ^ -1", 0.0), 0.5);
        assert_eq!(ev("(1 + r) / 2", 3.0), 2.0);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("1e-3 * 2E2", 0.0), 0.2);
    }

    #[test]
    fn functions() {
        assert_eq!(ev("exp(log(r))", 2.5), 2.5f64.ln().exp());
        assert_eq!(ev("pow(r, 0.5)", 4.0), 2.0);
        assert_eq!(ev("cosh(r)^2 - sinh(r)^2", 0.3), 0.3f64.cosh().powi(2) - 0.3f64.sinh().powi(2));
        assert_eq!(ev("sqrt(r)", 9.0), 3.0);
        assert_eq!(ev("(log(2 + r))^0.25", 1.0), 3f64.ln().powf(0.25));
        assert_eq!(ev("2 − r", 1.0), 1.0);
    }

    #[test]
    fn error_columns() {
        let e = Expr::parse("1 + * 2").unwrap_err();
        assert_eq!(e.column, 5);
        let e = Expr::parse("sin(r)").unwrap_err();
        assert_eq!((e.column, e.message.as_str()), (1, "unknown name 'sin'"));
        let e = Expr::parse("(1 + r").unwrap_err();
        assert_eq!(e.column, 7);
        let e = Expr::parse("pow(r)").unwrap_err();
        assert!(e.message.contains("','"));
        let e = Expr::parse("r $ 2").unwrap_err();
        assert_eq!(e.column, 3);
        let e = Expr::parse("r r").unwrap_err();
        assert_eq!(e.column, 3);
    }

    #[test]
    fn constants_are_detected() {
        assert!(Expr::parse("2 * exp(1)").unwrap().is_constant());
        assert!(!Expr::parse("2 * r").unwrap().is_constant());
    }

    proptest! {
        #[test]
        fn difference_matches_closed_form(r in 0.1f64..20.0) {
            let f = Expr::parse("r^3 * exp(-sqrt(r))").unwrap();
            let exact = (3.0 * r * r - 0.5 * r.powf(2.5)) * (-r.sqrt()).exp();
            let fd = finite_difference(|x| f.eval(x), r, 1e-2 * r);
            prop_assert!((fd - exact).abs() <= 1e-8 * exact.abs().max(1e-3));
        }
    }
}
