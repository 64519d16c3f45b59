//! Scalar expression language shared by field files, germ curves, reference
//! trajectories and approximating families.
//!
//! Expressions are parsed by a small recursive-descent parser into an AST and
//! evaluated by direct tree walking in `f64`. There is no simplification:
//! what is written is what gets evaluated, and [`std::fmt::Display`] prints
//! the canonical form (single spaces, parentheses only where the parse tree
//! needs them).

use std::fmt;

use thiserror::Error;

/// Error raised while lexing or parsing, positioned at a 1-based line/column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Self {
            line,
            col,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl RelOp {
    fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
        }
    }

    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sign,
    Sqrt,
    Sin,
    Cos,
    Min,
    Max,
    Norm,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            "norm" => Func::Norm,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
            Func::Norm => "norm",
            Func::Pow => "pow",
        }
    }

    /// (min, max) argument count; `None` max means variadic.
    fn arity(self) -> (usize, Option<usize>) {
        match self {
            Func::Abs | Func::Sign | Func::Sqrt | Func::Sin | Func::Cos => (1, Some(1)),
            Func::Pow => (2, Some(2)),
            Func::Min | Func::Max | Func::Norm => (1, None),
        }
    }
}

/// `sign(0) = 0`, unlike [`f64::signum`].
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based coordinate index (`x1` is `Var(0)`).
    Var(usize),
    Eps,
    Time,
    Index,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    If(Box<Predicate>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub lhs: Expr,
    pub op: RelOp,
    pub rhs: Expr,
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub x: &'a [f64],
    pub eps: f64,
    pub t: f64,
    pub j: f64,
}

impl<'a> Scope<'a> {
    pub fn point(x: &'a [f64]) -> Self {
        Self {
            x,
            eps: 0.0,
            t: 0.0,
            j: 0.0,
        }
    }
}

/// Identifiers referenced by an expression tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Symbols {
    /// Highest 1-based coordinate index used (0 when none).
    pub max_x: usize,
    pub eps: bool,
    pub t: bool,
    pub j: bool,
}

impl Symbols {
    fn merge(&mut self, o: Symbols) {
        self.max_x = self.max_x.max(o.max_x);
        self.eps |= o.eps;
        self.t |= o.t;
        self.j |= o.j;
    }
}

impl Expr {
    pub fn eval(&self, s: &Scope<'_>) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => s.x[*i],
            Expr::Eps => s.eps,
            Expr::Time => s.t,
            Expr::Index => s.j,
            Expr::Neg(e) => -e.eval(s),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(s), b.eval(s));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Call(f, args) => match f {
                Func::Abs => args[0].eval(s).abs(),
                Func::Sign => sign(args[0].eval(s)),
                Func::Sqrt => args[0].eval(s).sqrt(),
                Func::Sin => args[0].eval(s).sin(),
                Func::Cos => args[0].eval(s).cos(),
                Func::Pow => args[0].eval(s).powf(args[1].eval(s)),
                Func::Min => args.iter().map(|a| a.eval(s)).fold(f64::INFINITY, f64::min),
                Func::Max => args
                    .iter()
                    .map(|a| a.eval(s))
                    .fold(f64::NEG_INFINITY, f64::max),
                Func::Norm => args
                    .iter()
                    .map(|a| {
                        let v = a.eval(s);
                        v * v
                    })
                    .sum::<f64>()
                    .sqrt(),
            },
            Expr::If(c, a, b) => {
                if c.holds(s) {
                    a.eval(s)
                } else {
                    b.eval(s)
                }
            }
        }
    }

    pub fn symbols(&self) -> Symbols {
        let mut out = Symbols::default();
        self.collect(&mut out);
        out
    }

    /// Whether the coordinate `x<k+1>` occurs anywhere in the expression.
    pub fn uses_var(&self, k: usize) -> bool {
        match self {
            Expr::Var(i) => *i == k,
            Expr::Num(_) | Expr::Eps | Expr::Time | Expr::Index => false,
            Expr::Neg(a) => a.uses_var(k),
            Expr::Bin(_, a, b) => a.uses_var(k) || b.uses_var(k),
            Expr::Call(_, args) => args.iter().any(|a| a.uses_var(k)),
            Expr::If(p, a, b) => {
                p.lhs.uses_var(k) || p.rhs.uses_var(k) || a.uses_var(k) || b.uses_var(k)
            }
        }
    }

    fn collect(&self, out: &mut Symbols) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(i) => out.max_x = out.max_x.max(i + 1),
            Expr::Eps => out.eps = true,
            Expr::Time => out.t = true,
            Expr::Index => out.j = true,
            Expr::Neg(e) => e.collect(out),
            Expr::Bin(_, a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect(out)),
            Expr::If(c, a, b) => {
                out.merge(c.symbols());
                a.collect(out);
                b.collect(out);
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.prec(),
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            _ => 4,
        }
    }

    /// Parses a standalone expression.
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        let mut p = Parser::new(text)?;
        let e = p.expr()?;
        p.expect_end()?;
        Ok(e)
    }
}

impl Predicate {
    pub fn holds(&self, s: &Scope<'_>) -> bool {
        self.op.apply(self.lhs.eval(s), self.rhs.eval(s))
    }

    /// `lhs - rhs`, the signed level function of the predicate.
    pub fn level(&self, s: &Scope<'_>) -> f64 {
        self.lhs.eval(s) - self.rhs.eval(s)
    }

    pub fn symbols(&self) -> Symbols {
        let mut out = self.lhs.symbols();
        out.merge(self.rhs.symbols());
        out
    }

    pub fn parse(text: &str) -> Result<Predicate, ParseError> {
        let mut p = Parser::new(text)?;
        let e = p.predicate()?;
        p.expect_end()?;
        Ok(e)
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // Debug formatting of f64 is the shortest string that round-trips.
    write!(f, "{v:?}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write_num(f, *v),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Eps => f.write_str("eps"),
            Expr::Time => f.write_str("t"),
            Expr::Index => f.write_str("j"),
            Expr::Neg(e) => {
                if e.prec() < 3 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Bin(op, a, b) => {
                let p = op.prec();
                if a.prec() < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                // Equal precedence on the right must keep its parentheses:
                // floating-point addition and multiplication do not associate.
                if b.prec() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
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
            Expr::If(c, a, b) => write!(f, "if({c}, {a}, {b})"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

/// Writes `(a, b, ...)`.
pub fn fmt_vector(exprs: &[Expr]) -> String {
    let parts: Vec<String> = exprs.iter().map(|e| e.to_string()).collect();
    format!("({})", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Assign,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Rel(RelOp),
    End,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (l0, c0) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: l0,
                col: c0,
            })
        };
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    i = k;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s
                .parse()
                .map_err(|_| ParseError::new(l0, c0, format!("invalid number '{s}'")))?;
            col += i - start;
            push(&mut out, Tok::Num(v));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('=', Some('>')) => (Tok::Arrow, 2),
            ('=', Some('=')) => (Tok::Rel(RelOp::Eq), 2),
            ('!', Some('=')) => (Tok::Rel(RelOp::Ne), 2),
            ('<', Some('=')) => (Tok::Rel(RelOp::Le), 2),
            ('>', Some('=')) => (Tok::Rel(RelOp::Ge), 2),
            ('<', _) => (Tok::Rel(RelOp::Lt), 1),
            ('>', _) => (Tok::Rel(RelOp::Gt), 1),
            ('=', _) => (Tok::Assign, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            _ => {
                return Err(ParseError::new(
                    l0,
                    c0,
                    format!("unexpected character '{c}'"),
                ))
            }
        };
        i += width;
        col += width;
        push(&mut out, tok);
    }
    out.push(Token {
        tok: Tok::End,
        line,
        col,
    });
    Ok(out)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Semi => "';'".into(),
        Tok::Assign => "'='".into(),
        Tok::Arrow => "'=>'".into(),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Rel(r) => format!("'{}'", r.symbol()),
        Tok::End => "end of input".into(),
    }
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
        })
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn err_here(&self, msg: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::new(t.line, t.col, msg)
    }

    pub(crate) fn expect(&mut self, want: Tok) -> Result<Token, ParseError> {
        if self.peek().tok == want {
            Ok(self.bump())
        } else {
            Err(self.err_here(format!(
                "expected {}, found {}",
                describe(&want),
                describe(&self.peek().tok)
            )))
        }
    }

    pub(crate) fn expect_end(&mut self) -> Result<(), ParseError> {
        self.expect(Tok::End).map(|_| ())
    }

    pub(crate) fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    pub(crate) fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(format!(
                "expected '{kw}', found {}",
                describe(&self.peek().tok)
            )))
        }
    }

    pub(crate) fn integer(&mut self) -> Result<usize, ParseError> {
        match self.peek().tok {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e9 => {
                self.bump();
                Ok(v as usize)
            }
            _ => Err(self.err_here(format!(
                "expected integer, found {}",
                describe(&self.peek().tok)
            ))),
        }
    }

    pub(crate) fn vector(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut out = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            out.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    pub(crate) fn predicate(&mut self) -> Result<Predicate, ParseError> {
        let lhs = self.expr()?;
        let op = match self.peek().tok {
            Tok::Rel(r) => r,
            _ => {
                return Err(self.err_here(format!(
                    "expected comparison operator, found {}",
                    describe(&self.peek().tok)
                )))
            }
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Predicate { lhs, op, rhs })
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        match tok.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(ref name) => {
                self.bump();
                match name.as_str() {
                    "eps" => return Ok(Expr::Eps),
                    "t" => return Ok(Expr::Time),
                    "j" => return Ok(Expr::Index),
                    "if" => {
                        self.expect(Tok::LParen)?;
                        let c = self.predicate()?;
                        self.expect(Tok::Comma)?;
                        let a = self.expr()?;
                        self.expect(Tok::Comma)?;
                        let b = self.expr()?;
                        self.expect(Tok::RParen)?;
                        return Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)));
                    }
                    _ => {}
                }
                if let Some(func) = Func::from_name(name) {
                    let args = self.vector().map_err(|e| {
                        if e.msg.starts_with("expected '('") {
                            ParseError::new(tok.line, tok.col, format!("'{name}' needs arguments"))
                        } else {
                            e
                        }
                    })?;
                    let (lo, hi) = func.arity();
                    if args.len() < lo || hi.is_some_and(|h| args.len() > h) {
                        return Err(ParseError::new(
                            tok.line,
                            tok.col,
                            format!("arity mismatch: '{name}' got {} arguments", args.len()),
                        ));
                    }
                    return Ok(Expr::Call(func, args));
                }
                if let Some(idx) = name.strip_prefix('x') {
                    if let Ok(k) = idx.parse::<usize>() {
                        if k >= 1 && !idx.starts_with('0') {
                            return Ok(Expr::Var(k - 1));
                        }
                    }
                }
                Err(ParseError::new(
                    tok.line,
                    tok.col,
                    format!("unknown identifier '{name}'"),
                ))
            }
            ref other => Err(ParseError::new(
                tok.line,
                tok.col,
                format!("expected expression, found {}", describe(other)),
            )),
        }
    }
}
