//! Lexer and recursive-descent parser for the ASCII formula syntax.
//!
//! ```text
//! formula := ("E"|"A") ident+ "." formula | iff
//! iff     := imp ("<->" imp)*
//! imp     := disj ("->" formula)?
//! disj    := conj ("||" conj)*
//! conj    := lit ("&&" lit)*
//! lit     := "!" lit | "(" formula ")" | "true" | "false" | quantifier | atom
//! atom    := term ("=" | "!=") term | "D" nat "(" term ")"
//!          | val cmp (val | int)          cmp in <= < >= > = !=
//! val     := "v" nat "(" term ")" (("+" | "-") nat)?
//! ```

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::formula::{canonicalize, Atom, Formula};
use crate::primes::PrimeSet;
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(BigInt),
    LParen,
    RParen,
    Dot,
    Comma,
    Plus,
    Minus,
    Star,
    Eq,
    Ne,
    Le,
    Lt,
    Ge,
    Gt,
    Bang,
    And,
    Or,
    Implies,
    Iff,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let err = |msg: String| Error::Syntax {
            line: l0,
            column: c0,
            message: msg,
        };
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
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            Tok::Nat(s.parse().expect("digits"))
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            let next = chars.get(i + 1).copied();
            let next2 = chars.get(i + 2).copied();
            let (t, len) = match (c, next, next2) {
                ('<', Some('-'), Some('>')) => (Tok::Iff, 3),
                ('-', Some('>'), _) => (Tok::Implies, 2),
                ('&', Some('&'), _) => (Tok::And, 2),
                ('|', Some('|'), _) => (Tok::Or, 2),
                ('!', Some('='), _) => (Tok::Ne, 2),
                ('<', Some('='), _) => (Tok::Le, 2),
                ('>', Some('='), _) => (Tok::Ge, 2),
                ('=', Some('='), _) => (Tok::Eq, 2),
                ('<', _, _) => (Tok::Lt, 1),
                ('>', _, _) => (Tok::Gt, 1),
                ('=', _, _) => (Tok::Eq, 1),
                ('!', _, _) => (Tok::Bang, 1),
                ('(', _, _) => (Tok::LParen, 1),
                (')', _, _) => (Tok::RParen, 1),
                ('.', _, _) => (Tok::Dot, 1),
                (',', _, _) => (Tok::Comma, 1),
                ('+', _, _) => (Tok::Plus, 1),
                ('-', _, _) => (Tok::Minus, 1),
                ('*', _, _) => (Tok::Star, 1),
                _ => return Err(err(format!("unexpected character `{c}`"))),
            };
            i += len;
            t
        };
        col += i - start;
        out.push(Token { tok, line: l0, col: c0 });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        col,
    });
    Ok(out)
}

fn indexed(name: &str, prefix: char) -> Option<BigInt> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    primes: &'a PrimeSet,
}

/// A valuation side `v_p(t) + offset`; constants are `v_p(1) + c`.
struct ValSide {
    p: Option<u64>,
    term: Term,
    offset: i64,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let t = &self.toks[self.pos];
        Err(Error::Syntax {
            line: t.line,
            column: t.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn at_quantifier(&self) -> bool {
        match (self.peek(), self.peek_at(1)) {
            (Tok::Ident(q), Tok::Ident(_)) => {
                matches!(q.as_str(), "E" | "A" | "exists" | "forall")
            }
            _ => false,
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        if self.at_quantifier() {
            return self.quantifier();
        }
        self.iff()
    }

    fn quantifier(&mut self) -> Result<Formula> {
        let universal = matches!(self.bump(), Tok::Ident(q) if q == "A" || q == "forall");
        let mut vars = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(v) => {
                    self.bump();
                    vars.push(v);
                }
                Tok::Comma if !vars.is_empty() => {
                    self.bump();
                }
                Tok::Dot if !vars.is_empty() => {
                    self.bump();
                    break;
                }
                _ => return self.error("expected a variable or `.` after quantifier"),
            }
        }
        let mut body = self.formula()?;
        for v in vars.iter().rev() {
            body = if universal {
                Formula::forall(v, body)
            } else {
                Formula::exists(v, body)
            };
        }
        Ok(body)
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut lhs = self.imp()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.imp()?;
            lhs = Formula::And(vec![
                Formula::implies(lhs.clone(), rhs.clone()),
                Formula::implies(rhs, lhs),
            ]);
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula> {
        let lhs = self.disj()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = if self.at_quantifier() {
                self.quantifier()?
            } else {
                self.imp()?
            };
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conj()?];
        while *self.peek() == Tok::Or {
            self.bump();
            parts.push(self.conj()?);
        }
        Ok(Formula::or(parts))
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.lit()?];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.lit()?);
        }
        Ok(Formula::and(parts))
    }

    fn lit(&mut self) -> Result<Formula> {
        if self.at_quantifier() {
            return self.quantifier();
        }
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.lit()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(s) if s == "true" && *self.peek_at(1) != Tok::LParen => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "false" && *self.peek_at(1) != Tok::LParen => {
                self.bump();
                Ok(Formula::False)
            }
            _ => self.atom(),
        }
    }

    fn prime_of(&self, p: &BigInt) -> Result<u64> {
        let pu: u64 = p.try_into().map_err(|_| Error::UnknownPrime(u64::MAX))?;
        if !self.primes.contains(pu) {
            return Err(Error::UnknownPrime(pu));
        }
        Ok(pu)
    }

    fn atom(&mut self) -> Result<Formula> {
        if let Tok::Ident(name) = self.peek().clone() {
            if *self.peek_at(1) == Tok::LParen {
                if let Some(m) = indexed(&name, 'D') {
                    if m < BigInt::one() {
                        return Err(Error::BadModulus(m.to_string()));
                    }
                    self.bump();
                    self.bump();
                    let t = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Formula::Atom(Atom::Div(m, t)));
                }
                if indexed(&name, 'v').is_some() {
                    return self.valuation_atom();
                }
            }
        }
        let lhs = self.term()?;
        let op = self.bump();
        let rhs = self.term()?;
        let diff = &lhs - &rhs;
        match op {
            Tok::Eq => Ok(Formula::Atom(Atom::Eq(diff))),
            Tok::Ne => Ok(Formula::not(Formula::Atom(Atom::Eq(diff)))),
            _ => {
                self.pos -= 1;
                self.error("expected `=` or `!=` between terms")
            }
        }
    }

    fn small_int(&self, n: BigInt) -> Result<i64> {
        match i64::try_from(&n) {
            Ok(v) if v.abs() < (1 << 40) => Ok(v),
            _ => self.error("valuation offset out of range"),
        }
    }

    fn val_side(&mut self) -> Result<ValSide> {
        match self.peek().clone() {
            Tok::Ident(name) if *self.peek_at(1) == Tok::LParen => {
                let Some(p) = indexed(&name, 'v') else {
                    return self.error("expected a valuation `vP(...)`");
                };
                let p = self.prime_of(&p)?;
                self.bump();
                self.bump();
                let term = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                let offset = match (self.peek().clone(), self.peek_at(1).clone()) {
                    (Tok::Plus, Tok::Nat(n)) => {
                        self.bump();
                        self.bump();
                        self.small_int(n)?
                    }
                    (Tok::Minus, Tok::Nat(n)) => {
                        self.bump();
                        self.bump();
                        -self.small_int(n)?
                    }
                    _ => 0,
                };
                Ok(ValSide {
                    p: Some(p),
                    term,
                    offset,
                })
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Nat(n) => Ok(ValSide {
                        p: None,
                        term: Term::one(),
                        offset: -self.small_int(n)?,
                    }),
                    _ => {
                        self.pos -= 1;
                        self.error("expected an integer")
                    }
                }
            }
            Tok::Nat(n) => {
                self.bump();
                Ok(ValSide {
                    p: None,
                    term: Term::one(),
                    offset: self.small_int(n)?,
                })
            }
            _ => self.error("expected a valuation or an integer"),
        }
    }

    fn valuation_atom(&mut self) -> Result<Formula> {
        let lhs = self.val_side()?;
        let op = self.bump();
        if !matches!(op, Tok::Le | Tok::Lt | Tok::Ge | Tok::Gt | Tok::Eq | Tok::Ne) {
            self.pos -= 1;
            return self.error("expected a comparison after valuation");
        }
        let rhs = self.val_side()?;
        let p = lhs.p.expect("left side is a valuation");
        if let Some(q) = rhs.p {
            if q != p {
                return self.error("valuations of different primes cannot be compared");
            }
        }
        // v(a) + i <= v(b) + j  is  ValLe(p, i - j, a, b)
        let le = |a: &ValSide, b: &ValSide| {
            Formula::Atom(Atom::val_le(p, a.offset - b.offset, a.term.clone(), b.term.clone()))
        };
        Ok(match op {
            Tok::Le => le(&lhs, &rhs),
            Tok::Ge => le(&rhs, &lhs),
            Tok::Lt => Formula::not(le(&rhs, &lhs)),
            Tok::Gt => Formula::not(le(&lhs, &rhs)),
            Tok::Eq => Formula::And(vec![le(&lhs, &rhs), le(&rhs, &lhs)]),
            _ => Formula::not(Formula::And(vec![le(&lhs, &rhs), le(&rhs, &lhs)])),
        })
    }

    fn term(&mut self) -> Result<Term> {
        let mut acc = Term::zero();
        let mut sign = BigInt::one();
        if *self.peek() == Tok::Minus {
            self.bump();
            sign = -sign;
        } else if *self.peek() == Tok::Plus {
            self.bump();
        }
        loop {
            let f = self.factor()?;
            acc = &acc + &f.scale(&sign);
            match self.peek() {
                Tok::Plus => sign = BigInt::one(),
                Tok::Minus => sign = -BigInt::one(),
                _ => return Ok(acc),
            }
            self.bump();
        }
    }

    /// A product of integers and at most one variable; `3x` is `3*x`.
    fn factor(&mut self) -> Result<Term> {
        let mut coeff = BigInt::one();
        let mut var: Option<String> = None;
        loop {
            match self.peek().clone() {
                Tok::Nat(n) => {
                    self.bump();
                    coeff *= n;
                }
                Tok::Ident(name) if !matches!(self.peek_at(1), Tok::LParen) => {
                    if var.is_some() {
                        return self.error("terms must be linear: a product has two variables");
                    }
                    if matches!(name.as_str(), "true" | "false") {
                        return self.error("expected a term");
                    }
                    self.bump();
                    var = Some(name);
                }
                _ => return self.error("expected a term"),
            }
            match (self.peek(), var.is_some()) {
                (Tok::Star, _) => {
                    self.bump();
                }
                (Tok::Ident(_), false) if !matches!(self.peek_at(1), Tok::LParen | Tok::Dot) => {}
                _ => break,
            }
        }
        Ok(match var {
            Some(v) => Term::monomial(&v, coeff),
            None => Term::constant(coeff),
        })
    }
}

/// Renames bound variables that clash with free variables or with an
/// earlier binder, so every binder in the result is distinct.
pub fn alpha_rename(f: &Formula) -> Formula {
    let mut taken: BTreeSet<String> = f.free_vars();
    let all = f.all_vars();
    rename_binders(f, &mut taken, &all)
}

fn fresh(base: &str, taken: &BTreeSet<String>, all: &BTreeSet<String>) -> String {
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|c| !taken.contains(c) && !all.contains(c))
        .expect("an unused name exists")
}

fn rename_binders(f: &Formula, taken: &mut BTreeSet<String>, all: &BTreeSet<String>) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => Formula::not(rename_binders(g, taken, all)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename_binders(g, taken, all)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename_binders(g, taken, all)).collect()),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let (name, body) = if taken.contains(v) {
                let n = fresh(v, taken, all);
                let body = g.rename_var(v, &n);
                (n, body)
            } else {
                (v.clone(), (**g).clone())
            };
            taken.insert(name.clone());
            let body = rename_binders(&body, taken, all);
            match f {
                Formula::Exists(..) => Formula::Exists(name, Box::new(body)),
                _ => Formula::Forall(name, Box::new(body)),
            }
        }
    }
}

/// Parses without canonicalizing; used by tests that inspect raw sugar.
pub fn parse_raw(text: &str, primes: &PrimeSet) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        primes,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(alpha_rename(&f))
}

/// Parses a formula and returns its canonical form.
pub fn parse(text: &str, primes: &PrimeSet) -> Result<Formula> {
    Ok(canonicalize(&parse_raw(text, primes)?))
}

/// Parses a bare affine term.
pub fn parse_term(text: &str) -> Result<Term> {
    let primes = PrimeSet::new(vec![2])?;
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        primes: &primes,
    };
    let t = p.term()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(t)
}
