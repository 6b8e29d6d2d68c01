//! A small expression language for measure densities.
//!
//! Densities in measure specs are written as strings such as
//! `"1 + 0.5*cos(theta)"` or `"1/(t*sqrt(-log(t)))"`. They are parsed once into
//! an immutable tree and then evaluated at quadrature nodes.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = unary , { ("*" | "/") , unary } ;
//! unary   = ("-" | "+") , unary | power ;
//! power   = primary , [ "^" , unary ] ;          (* right-associative *)
//! primary = number | ident | ident , "(" , expr , ")" | "(" , expr , ")" ;
//! number  = digit , { digit } , [ "." , { digit } ] , [ ("e" | "E") , [ "+" | "-" ] , digit , { digit } ]
//!         | "." , digit , { digit } , [ exponent ] ;
//! ```
//!
//! So `-2^2` is `-4`, `2^3^2` is `512` and `2^-1` is `0.5`. Identifiers are the
//! declared variables (a subset of `t`, `r`, `theta`), the constants `pi` and
//! `e`, and the functions `exp`, `log`, `sqrt`, `abs`, `sin`, `cos`.
//!
//! Evaluation never returns NaN or an infinity: a domain violation is an
//! [`EvalError`] carrying the bindings it happened at.

use std::fmt;

use thiserror::Error;

/// Variables a density may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    R,
    Theta,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::R => "r",
            Var::Theta => "theta",
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        match name {
            "t" => Some(Var::T),
            "r" => Some(Var::R),
            "theta" => Some(Var::Theta),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Values for the variables of an expression.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    slots: [Option<f64>; 3],
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn t(t: f64) -> Self {
        Self::new().with(Var::T, t)
    }

    pub fn theta(theta: f64) -> Self {
        Self::new().with(Var::Theta, theta)
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new().with(Var::R, r).with(Var::Theta, theta)
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.slots[var.slot()] = Some(value);
        self
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.slots[var.slot()]
    }
}

impl fmt::Display for Bindings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        f.write_str("{")?;
        for var in [Var::T, Var::R, Var::Theta] {
            if let Some(v) = self.get(var) {
                if !first {
                    f.write_str(", ")?;
                }
                write!(f, "{var} = {v:e}")?;
                first = false;
            }
        }
        f.write_str("}")
    }
}

/// Failure to parse a density expression. Positions are byte offsets into the
/// source string.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("function `{name}` at position {pos} takes {expected} argument(s), got {found}")]
    Arity {
        pos: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

/// Failure to evaluate a parsed expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{var}` is not bound")]
    Unbound { var: Var },
    #[error("{what} at {bindings}")]
    Domain { what: String, bindings: Bindings },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Sin,
    Cos,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed density expression.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityExpr {
    source: String,
    root: Node,
    variables: Vec<Var>,
}

impl DensityExpr {
    /// Parses `source`, accepting only the variables in `allowed`.
    pub fn parse(source: &str, allowed: &[Var]) -> Result<Self, ParseError> {
        let tokens = lex(source)?;
        if tokens.is_empty() {
            return Err(ParseError::Empty);
        }
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            allowed,
            used: Vec::new(),
            end: source.len(),
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ParseError::Syntax {
                pos: tok.pos,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        let mut variables = parser.used;
        variables.sort();
        variables.dedup();
        Ok(Self {
            source: source.to_string(),
            root,
            variables,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Variables that actually occur in the expression.
    pub fn variables(&self) -> &[Var] {
        &self.variables
    }

    /// True when the expression does not depend on any variable.
    pub fn is_constant(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn eval(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        let v = eval_node(&self.root, bindings)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain {
                what: format!("non-finite result {v}"),
                bindings: *bindings,
            })
        }
    }
}

impl fmt::Display for DensityExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn domain(what: impl Into<String>, bindings: &Bindings) -> EvalError {
    EvalError::Domain {
        what: what.into(),
        bindings: *bindings,
    }
}

fn eval_node(node: &Node, b: &Bindings) -> Result<f64, EvalError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Var(var) => b.get(*var).ok_or(EvalError::Unbound { var: *var })?,
        Node::Neg(inner) => -eval_node(inner, b)?,
        Node::Bin(op, lhs, rhs) => {
            let x = eval_node(lhs, b)?;
            let y = eval_node(rhs, b)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(domain("division by zero", b));
                    }
                    x / y
                }
                BinOp::Pow => {
                    if x < 0.0 && y.fract() != 0.0 {
                        return Err(domain(
                            format!("negative base {x:e} raised to non-integer power {y:e}"),
                            b,
                        ));
                    }
                    if x == 0.0 && y < 0.0 {
                        return Err(domain("zero raised to a negative power", b));
                    }
                    x.powf(y)
                }
            }
        }
        Node::Call(func, arg) => {
            let x = eval_node(arg, b)?;
            match func {
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain(format!("log of nonpositive value {x:e}"), b));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain(format!("sqrt of negative value {x:e}"), b));
                    }
                    x.sqrt()
                }
                Func::Abs => x.abs(),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
            }
        }
    })
    .and_then(|v: f64| {
        if v.is_nan() {
            Err(domain("NaN produced", b))
        } else {
            Ok(v)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier `{s}`"),
            TokKind::Plus => "`+`".into(),
            TokKind::Minus => "`-`".into(),
            TokKind::Star => "`*`".into(),
            TokKind::Slash => "`/`".into(),
            TokKind::Caret => "`^`".into(),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
            TokKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
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
            b'+' => TokKind::Plus,
            b'-' => TokKind::Minus,
            b'*' => TokKind::Star,
            b'/' => TokKind::Slash,
            b'^' => TokKind::Caret,
            b'(' => TokKind::LParen,
            b')' => TokKind::RParen,
            b',' => TokKind::Comma,
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i);
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push(Token {
                    kind: TokKind::Num(v),
                    pos: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokKind::Ident(src[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push(Token { kind, pos: start });
        i += 1;
    }
    Ok(out)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    // exponent only if followed by a digit (optionally signed), so `2e` stays
    // a number followed by the constant `e`
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
    i
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    allowed: &'a [Var],
    used: Vec<Var>,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next_if(&mut self, kind: &TokKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.next_if(&TokKind::Plus) {
                BinOp::Add
            } else if self.next_if(&TokKind::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.next_if(&TokKind::Star) {
                BinOp::Mul
            } else if self.next_if(&TokKind::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.next_if(&TokKind::Minus) {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.next_if(&TokKind::Plus) {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.next_if(&TokKind::Caret) {
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::Syntax {
                pos: self.end,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(Node::Num(v)),
            TokKind::LParen => {
                let inner = self.expr()?;
                if !self.next_if(&TokKind::RParen) {
                    return Err(ParseError::Syntax {
                        pos: self.here(),
                        message: "expected `)`".into(),
                    });
                }
                Ok(inner)
            }
            TokKind::Ident(name) => self.identifier(&name, tok.pos),
            other => Err(ParseError::Syntax {
                pos: tok.pos,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn identifier(&mut self, name: &str, pos: usize) -> Result<Node, ParseError> {
        if let Some(func) = Func::from_name(name) {
            if !self.next_if(&TokKind::LParen) {
                return Err(ParseError::Syntax {
                    pos: self.here(),
                    message: format!("expected `(` after function `{name}`"),
                });
            }
            let mut args = Vec::new();
            if !self.next_if(&TokKind::RParen) {
                loop {
                    args.push(self.expr()?);
                    if self.next_if(&TokKind::Comma) {
                        continue;
                    }
                    if self.next_if(&TokKind::RParen) {
                        break;
                    }
                    return Err(ParseError::Syntax {
                        pos: self.here(),
                        message: "expected `,` or `)` in argument list".into(),
                    });
                }
            }
            if args.len() != 1 {
                return Err(ParseError::Arity {
                    pos,
                    name: func.name().into(),
                    expected: 1,
                    found: args.len(),
                });
            }
            let arg = args.pop().expect("one argument");
            return Ok(Node::Call(func, Box::new(arg)));
        }
        match name {
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            _ => {}
        }
        match Var::from_name(name) {
            Some(var) if self.allowed.contains(&var) => {
                self.used.push(var);
                Ok(Node::Var(var))
            }
            _ => Err(ParseError::UnknownIdentifier {
                pos,
                name: name.into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, b: Bindings) -> f64 {
        DensityExpr::parse(src, &[Var::T, Var::R, Var::Theta])
            .unwrap()
            .eval(&b)
            .unwrap()
    }

    #[test]
    fn cosine_density() {
        assert_eq!(eval("1 + 0.5*cos(theta)", Bindings::theta(0.0)), 1.5);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval("2^3^2", Bindings::new()), 512.0);
        assert_eq!(eval("(2^3)^2", Bindings::new()), 64.0);
    }

    #[test]
    fn power_binds_tighter_than_negation() {
        assert_eq!(eval("-2^2", Bindings::new()), -4.0);
        assert_eq!(eval("(-2)^2", Bindings::new()), 4.0);
        assert_eq!(eval("2^-1", Bindings::new()), 0.5);
        assert_eq!(eval("-3*2", Bindings::new()), -6.0);
        assert_eq!(eval("1-2-3", Bindings::new()), -4.0);
        assert_eq!(eval("8/4/2", Bindings::new()), 1.0);
    }

    #[test]
    fn log_density_at_inverse_e() {
        let t = (-1.0f64).exp();
        let v = eval("1/(t*sqrt(-log(t)))", Bindings::t(t));
        assert!((v - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn gaussian_at_zero() {
        assert_eq!(eval("exp(-t^2)", Bindings::t(0.0)), 1.0);
    }

    #[test]
    fn constants() {
        assert_eq!(eval("pi", Bindings::new()), 3.141592653589793);
        assert_eq!(eval("e", Bindings::new()), std::f64::consts::E);
        assert_eq!(eval("2e-1", Bindings::new()), 0.2);
        assert_eq!(eval(".5 + 1.", Bindings::new()), 1.5);
    }

    #[test]
    fn log_of_negative_is_domain_error() {
        let e = DensityExpr::parse("log(t)", &[Var::T]).unwrap();
        match e.eval(&Bindings::t(-1.0)) {
            Err(EvalError::Domain { bindings, .. }) => assert_eq!(bindings.get(Var::T), Some(-1.0)),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn other_domain_errors() {
        let parse = |s| DensityExpr::parse(s, &[Var::T]).unwrap();
        assert!(parse("sqrt(t)").eval(&Bindings::t(-0.5)).is_err());
        assert!(parse("1/t").eval(&Bindings::t(0.0)).is_err());
        assert!(parse("t^0.5").eval(&Bindings::t(-2.0)).is_err());
        assert!(parse("exp(t)").eval(&Bindings::t(1000.0)).is_err());
        assert!(parse("t").eval(&Bindings::new()).is_err());
    }

    #[test]
    fn undeclared_variable_is_rejected() {
        let err = DensityExpr::parse("t + theta", &[Var::Theta]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                pos: 0,
                name: "t".into()
            }
        );
        assert!(matches!(
            DensityExpr::parse("foo(1)", &[Var::T]),
            Err(ParseError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = DensityExpr::parse("1 + * 2", &[]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 4, .. }), "{err:?}");
        let err = DensityExpr::parse("(1 + 2", &[]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 6, .. }), "{err:?}");
        let err = DensityExpr::parse("1 2", &[]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 2, .. }), "{err:?}");
        assert_eq!(DensityExpr::parse("   ", &[]), Err(ParseError::Empty));
        assert!(matches!(
            DensityExpr::parse("1 $ 2", &[]),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
    }

    #[test]
    fn arity_is_checked() {
        let err = DensityExpr::parse("sin(1, 2)", &[]).unwrap_err();
        assert!(matches!(
            err,
            ParseError::Arity {
                expected: 1,
                found: 2,
                ..
            }
        ));
        assert!(matches!(
            DensityExpr::parse("cos()", &[]),
            Err(ParseError::Arity { found: 0, .. })
        ));
    }

    #[test]
    fn whitespace_and_parentheses_do_not_matter() {
        let a = eval("1+t*2", Bindings::t(0.3));
        let b = eval("  ( 1 ) + ( (t) * 2 )  ", Bindings::t(0.3));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn variables_are_recorded() {
        let e = DensityExpr::parse("r*cos(theta) + r", &[Var::R, Var::Theta]).unwrap();
        assert_eq!(e.variables(), &[Var::R, Var::Theta]);
        assert!(DensityExpr::parse("2*pi", &[]).unwrap().is_constant());
    }
}
