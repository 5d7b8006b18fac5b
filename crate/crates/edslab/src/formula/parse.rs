use num_bigint::BigInt;

use super::{Formula, FormulaError, Quant, Signature, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Forall,
    Exists,
    Div,
    LParen,
    RParen,
    Comma,
    Dot,
    Plus,
    Minus,
    Star,
    Caret,
    Eq,
    Neq,
    Amp,
    Bar,
    Arrow,
    Bang,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::Eof => "end of input".to_string(),
            Tok::Forall => "'forall'".to_string(),
            Tok::Exists => "'exists'".to_string(),
            Tok::Div => "'div'".to_string(),
            other => format!("'{}'", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Caret => "^",
            Tok::Eq => "=",
            Tok::Neq => "!=",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Arrow => "->",
            Tok::Bang => "!",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
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
        let next = chars.get(i + 1).copied();
        let (tok, len) = if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let len = i - start;
            i = start;
            (Tok::Int(digits.parse().expect("digits")), len)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            let tok = match word.as_str() {
                "forall" => Tok::Forall,
                "exists" => Tok::Exists,
                "div" => Tok::Div,
                _ => Tok::Ident(word),
            };
            (tok, j - start)
        } else {
            match (c, next) {
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('!', Some('=')) => (Tok::Neq, 2),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('^', _) => (Tok::Caret, 1),
                ('=', _) => (Tok::Eq, 1),
                ('&', _) => (Tok::Amp, 1),
                ('|', _) => (Tok::Bar, 1),
                ('!', _) => (Tok::Bang, 1),
                _ => {
                    return Err(FormulaError::Syntax { line, col, msg: format!("unexpected character '{c}'") });
                }
            }
        };
        out.push(Spanned { tok, line: l0, col: c0 });
        i += len;
        col += len;
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Parses one formula of the DSL. Precedence from loosest: quantifier bodies
/// (extend to the right), `->` (right associative), `|`, `&`, `!`.
pub fn parse_formula(text: &str, signature: Signature) -> Result<Formula, FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, signature };
    let f = p.formula().map_err(|e| p.to_error(e))?;
    if p.peek() != &Tok::Eof {
        let e = p.unexpected("a connective or end of input");
        return Err(p.to_error(e));
    }
    Ok(f)
}

#[derive(Debug, Clone)]
enum Fail {
    Msg { pos: usize, msg: String },
    DivInRing { pos: usize },
}

impl Fail {
    fn pos(&self) -> usize {
        match self {
            Fail::Msg { pos, .. } | Fail::DivInRing { pos } => *pos,
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    signature: Signature,
}

type PResult<T> = Result<T, Fail>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> Fail {
        Fail::Msg { pos: self.pos, msg: format!("expected {wanted}, found {}", self.peek().describe()) }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{}'", t.symbol())))
        }
    }

    fn to_error(&self, f: Fail) -> FormulaError {
        let s = &self.toks[f.pos()];
        match f {
            Fail::Msg { msg, .. } => FormulaError::Syntax { line: s.line, col: s.col, msg },
            Fail::DivInRing { .. } => FormulaError::DivInRing { line: s.line, col: s.col },
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(&Tok::Bar) {
            parts.push(self.conjunction()?);
        }
        Ok(Formula::or(parts))
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            parts.push(self.unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Forall | Tok::Exists => {
                let q = if self.bump() == Tok::Forall { Quant::Forall } else { Quant::Exists };
                let mut vars = Vec::new();
                while let Tok::Ident(v) = self.peek() {
                    vars.push(v.clone());
                    self.bump();
                }
                if vars.is_empty() {
                    return Err(self.unexpected("a variable name"));
                }
                self.expect(Tok::Dot)?;
                let body = self.formula()?;
                Ok(Formula::quantify(q, &vars, body))
            }
            Tok::Div => self.div_atom(),
            _ => self.primary(),
        }
    }

    fn div_atom(&mut self) -> PResult<Formula> {
        if self.signature == Signature::Ring {
            return Err(Fail::DivInRing { pos: self.pos });
        }
        self.bump();
        self.expect(Tok::LParen)?;
        let a = self.sum()?;
        self.expect(Tok::Comma)?;
        let b = self.sum()?;
        self.expect(Tok::RParen)?;
        Ok(Formula::Div(a, b))
    }

    /// An atomic comparison, or a parenthesized formula when the input does
    /// not read as a term followed by a relation.
    fn primary(&mut self) -> PResult<Formula> {
        let start = self.pos;
        let as_atom = self.comparison();
        match as_atom {
            Ok(f) => Ok(f),
            Err(e1) => {
                if matches!(e1, Fail::DivInRing { .. }) || self.toks[start].tok != Tok::LParen {
                    return Err(e1);
                }
                let after_atom = self.pos;
                self.pos = start + 1;
                let inner = self.formula().and_then(|f| self.expect(Tok::RParen).map(|_| f));
                match inner {
                    Ok(f) => Ok(f),
                    Err(e2) => {
                        if e2.pos() >= e1.pos() {
                            Err(e2)
                        } else {
                            self.pos = after_atom;
                            Err(e1)
                        }
                    }
                }
            }
        }
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let lhs = self.sum()?;
        match self.peek() {
            Tok::Eq => {
                self.bump();
                Ok(Formula::Eq(lhs, self.sum()?))
            }
            Tok::Neq => {
                self.bump();
                Ok(Formula::Neq(lhs, self.sum()?))
            }
            Tok::Bar if self.signature == Signature::Divisibility => {
                self.bump();
                Ok(Formula::Div(lhs, self.sum()?))
            }
            Tok::Bar => Err(Fail::DivInRing { pos: self.pos }),
            _ => Err(self.unexpected("'=' or '!='")),
        }
    }

    fn sum(&mut self) -> PResult<Term> {
        let mut acc = self.product()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = Term::add(acc, self.product()?);
            } else if self.eat(&Tok::Minus) {
                acc = Term::sub(acc, self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut acc = self.factor()?;
        while self.eat(&Tok::Star) {
            acc = Term::mul(acc, self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Term> {
        if self.eat(&Tok::Minus) {
            return Ok(Term::neg(self.factor()?));
        }
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            return match self.bump() {
                Tok::Int(v) => match u32::try_from(v) {
                    Ok(e) => Ok(Term::pow(base, e)),
                    Err(_) => {
                        self.pos -= 1;
                        Err(Fail::Msg { pos: self.pos, msg: "exponent too large".into() })
                    }
                },
                _ => {
                    self.pos -= 1;
                    Err(self.unexpected("a non-negative integer exponent"))
                }
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Term::Int(v))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Term::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let t = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected("a term")),
        }
    }
}
