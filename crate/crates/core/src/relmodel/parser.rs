//! Concrete syntax:
//!
//! ```text
//! formula := "exists" IDENT ":" formula | "forall" IDENT ":" formula | disj
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" unary)*
//! unary   := "!" unary | atom | "(" formula ")"
//! atom    := RELNAME "(" [term ("," term)*] ")" | term "=" term
//! term    := IDENT | INT | STRING | "_bot" | "_copy" DIGITS
//! ```
//!
//! Relation names start with an uppercase letter, variables with a lowercase
//! one. `R()` denotes a nullary atom.

use thiserror::Error;

use super::atom::{Atom, Schema};
use super::formula::{Formula, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown relation `{name}` at offset {pos}")]
    UnknownRelation { pos: usize, name: String },
    #[error("relation `{name}` at offset {pos} expects {expected} arguments, found {found}")]
    Arity {
        pos: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Rel(String),
    Ident(String),
    Int(i64),
    Str(String),
    Bot,
    Copy(u32),
    Exists,
    Forall,
    LParen,
    RParen,
    Comma,
    Colon,
    Eq,
    Bang,
    Amp,
    Pipe,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let err = |pos: usize, msg: &str| ParseError::Syntax {
        pos,
        msg: msg.to_string(),
    };
    let bytes: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    // Offsets are reported in characters.
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let word = |i: &mut usize| {
            let s = *i;
            while *i < bytes.len() && (bytes[*i].is_ascii_alphanumeric() || bytes[*i] == '_' || bytes[*i] == '\'') {
                *i += 1;
            }
            bytes[s..*i].iter().collect::<String>()
        };
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => { out.push((start, Tok::LParen)); i += 1 }
            ')' => { out.push((start, Tok::RParen)); i += 1 }
            ',' => { out.push((start, Tok::Comma)); i += 1 }
            ':' => { out.push((start, Tok::Colon)); i += 1 }
            '=' => { out.push((start, Tok::Eq)); i += 1 }
            '!' => { out.push((start, Tok::Bang)); i += 1 }
            '&' => { out.push((start, Tok::Amp)); i += 1 }
            '|' => { out.push((start, Tok::Pipe)); i += 1 }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match bytes.get(i) {
                        None => return Err(err(start, "unterminated string")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match bytes.get(i + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                _ => return Err(err(i, "bad escape")),
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((start, Tok::Str(s)));
            }
            c if c == '-' || c.is_ascii_digit() => {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                let v = s.parse::<i64>().map_err(|_| err(start, "bad integer literal"))?;
                out.push((start, Tok::Int(v)));
            }
            c if c.is_ascii_uppercase() => {
                let w = word(&mut i);
                out.push((start, Tok::Rel(w)));
            }
            c if c.is_ascii_lowercase() || c == '_' => {
                let w = word(&mut i);
                let tok = match w.as_str() {
                    "exists" => Tok::Exists,
                    "forall" => Tok::Forall,
                    "_bot" => Tok::Bot,
                    _ if w.starts_with("_copy") => {
                        let n = w[5..]
                            .parse::<u32>()
                            .ok()
                            .filter(|&n| n >= 1)
                            .ok_or_else(|| err(start, "bad copy identifier"))?;
                        Tok::Copy(n)
                    }
                    _ if w.starts_with('_') || w.contains('\'') => {
                        return Err(err(start, "invalid identifier"))
                    }
                    _ => Tok::Ident(w),
                };
                out.push((start, tok));
            }
            _ => return Err(err(start, &format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser<'s> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    schema: Option<&'s Schema>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Exists) | Some(Tok::Forall) => {
                let is_exists = self.peek() == Some(&Tok::Exists);
                self.pos += 1;
                let var = match self.peek() {
                    Some(Tok::Ident(v)) => v.clone(),
                    _ => return self.error("expected variable after quantifier"),
                };
                self.pos += 1;
                self.expect(Tok::Colon, "`:`")?;
                let body = self.formula()?;
                Ok(if is_exists {
                    Formula::exists(var, body)
                } else {
                    Formula::forall(var, body)
                })
            }
            _ => self.disj(),
        }
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conj()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Rel(_)) => self.rel_atom(),
            Some(Tok::Exists) | Some(Tok::Forall) => {
                self.error("quantified operand must be parenthesised")
            }
            _ => {
                let a = self.term()?;
                self.expect(Tok::Eq, "`=`")?;
                let b = self.term()?;
                Ok(Formula::eq(a, b))
            }
        }
    }

    fn rel_atom(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        let name = match self.peek() {
            Some(Tok::Rel(n)) => n.clone(),
            _ => unreachable!(),
        };
        self.pos += 1;
        self.expect(Tok::LParen, "`(` after relation name")?;
        let mut terms = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            terms.push(self.term()?);
            while self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
                terms.push(self.term()?);
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        if let Some(schema) = self.schema {
            match schema.arity(&name) {
                None => return Err(ParseError::UnknownRelation { pos: at, name }),
                Some(a) if a != terms.len() => {
                    return Err(ParseError::Arity {
                        pos: at,
                        name,
                        expected: a,
                        found: terms.len(),
                    })
                }
                _ => {}
            }
        }
        Ok(Formula::Rel(name, terms))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let t = match self.peek() {
            Some(Tok::Ident(v)) => Term::Var(v.clone()),
            Some(Tok::Int(v)) => Term::Const(Atom::Int(*v)),
            Some(Tok::Str(s)) => Term::Const(Atom::Str(s.clone())),
            Some(Tok::Bot) => Term::Const(Atom::Bot),
            Some(Tok::Copy(i)) => Term::Const(Atom::CopyIdx(*i)),
            _ => return self.error("expected term"),
        };
        self.pos += 1;
        Ok(t)
    }
}

fn parse_with(text: &str, schema: Option<&Schema>) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
        schema,
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(f)
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse_with(text, None)
}

/// Parses and checks every relational atom against `schema`.
pub fn parse_formula_checked(text: &str, schema: &Schema) -> Result<Formula, ParseError> {
    parse_with(text, Some(schema))
}

/// Parses a head term list such as `x`, `3` or `"a"`.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
        schema: None,
    };
    let t = p.term()?;
    if p.pos != p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(t)
}

/// Canonical rendering; `parse_formula(&format_formula(f)) == f`.
pub fn format_formula(f: &Formula) -> String {
    f.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn rs_example() {
        let f = parse_formula("exists y: R(x,y) & S(y)").unwrap();
        assert_eq!(
            f,
            Formula::exists(
                "y",
                Formula::and(
                    Formula::rel("R", vec![v("x"), v("y")]),
                    Formula::rel("S", vec![v("y")])
                )
            )
        );
    }

    #[test]
    fn symmetric_union() {
        let f = parse_formula("E(x,y) | E(y,x)").unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::rel("E", vec![v("x"), v("y")]),
                Formula::rel("E", vec![v("y"), v("x")])
            )
        );
    }

    #[test]
    fn equality_atom() {
        assert_eq!(parse_formula("x = x").unwrap(), Formula::eq(v("x"), v("x")));
    }

    #[test]
    fn precedence_and_binds_tighter() {
        let f = parse_formula("A() | B() & C()").unwrap();
        assert!(matches!(f, Formula::Or(..)));
        let g = parse_formula("!A() & B()").unwrap();
        assert!(matches!(g, Formula::And(..)));
    }

    #[test]
    fn constants_and_reserved() {
        let f = parse_formula("R(-3, \"a b\", _bot, _copy2)").unwrap();
        assert_eq!(
            f,
            Formula::rel(
                "R",
                vec![
                    Term::int(-3),
                    Term::Const(Atom::str("a b")),
                    Term::Const(Atom::Bot),
                    Term::Const(Atom::CopyIdx(2))
                ]
            )
        );
    }

    #[test]
    fn errors_carry_positions() {
        match parse_formula("R(x) & ").unwrap_err() {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 7),
            e => panic!("{e}"),
        }
        match parse_formula("R(x) & exists y: S(y)").unwrap_err() {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 7),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn schema_checks() {
        let s = Schema::new([("R", 2)]).unwrap();
        assert!(matches!(
            parse_formula_checked("S(x)", &s),
            Err(ParseError::UnknownRelation { pos: 0, .. })
        ));
        assert!(matches!(
            parse_formula_checked("x = y | R(x)", &s),
            Err(ParseError::Arity { pos: 8, expected: 2, found: 1, .. })
        ));
    }

    #[test]
    fn format_is_canonical() {
        let text = "exists y:   (R(x,y)&S(y))|  !(x=y)";
        let f = parse_formula(text).unwrap();
        let canon = format_formula(&f);
        assert_eq!(canon, "exists y: R(x,y) & S(y) | !(x = y)");
        assert_eq!(parse_formula(&canon).unwrap(), f);
    }
}
