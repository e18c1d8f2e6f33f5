//! Boolean formulas over named inputs.
//!
//! Grammar, loosest binding first: `a | b`, `a ^ b`, `a & b`, `!a`, atoms
//! (identifiers, `0`, `1`, parenthesised formulas). `~`, `¬`, `∧`, `∨` and
//! `⊕` are accepted as synonyms.

use std::collections::BTreeSet;

use super::VerifyError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(bool),
    Var(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Const(bool),
    Not,
    And,
    Or,
    Xor,
    Open,
    Close,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, VerifyError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' | '~' | '¬' => Tok::Not,
            '&' | '∧' | '*' => Tok::And,
            '|' | '∨' | '+' => Tok::Or,
            '^' | '⊕' => Tok::Xor,
            '(' => Tok::Open,
            ')' => Tok::Close,
            '0' => Tok::Const(false),
            '1' => Tok::Const(true),
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '.')) {
                    i += 1;
                }
                out.push((pos, Tok::Ident(chars[start..i].iter().collect())));
                continue;
            }
            other => {
                return Err(VerifyError::Expression {
                    position: pos,
                    message: format!("unexpected `{other}`"),
                })
            }
        };
        // a doubled operator (`&&`, `||`) reads as a single one
        let doubled = matches!(tok, Tok::And | Tok::Or) && chars.get(i + 1) == Some(&c);
        i += if doubled { 2 } else { 1 };
        out.push((pos, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err(&self, message: &str) -> VerifyError {
        VerifyError::Expression {
            position: self.pos(),
            message: message.to_string(),
        }
    }

    fn binary(
        &mut self,
        op: Tok,
        next: fn(&mut Parser) -> Result<Expr, VerifyError>,
        build: fn(Box<Expr>, Box<Expr>) -> Expr,
    ) -> Result<Expr, VerifyError> {
        let mut lhs = next(self)?;
        while self.peek() == Some(&op) {
            self.at += 1;
            let rhs = next(self)?;
            lhs = build(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, VerifyError> {
        self.binary(Tok::Or, Parser::xor, Expr::Or)
    }

    fn xor(&mut self) -> Result<Expr, VerifyError> {
        self.binary(Tok::Xor, Parser::and, Expr::Xor)
    }

    fn and(&mut self) -> Result<Expr, VerifyError> {
        self.binary(Tok::And, Parser::unary, Expr::And)
    }

    fn unary(&mut self) -> Result<Expr, VerifyError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.at += 1;
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Open) => {
                self.at += 1;
                let e = self.or()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(self.err("expected `)`"));
                }
                self.at += 1;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                Ok(Expr::Var(name))
            }
            Some(Tok::Const(b)) => {
                self.at += 1;
                Ok(Expr::Const(b))
            }
            _ => Err(self.err("expected a variable, constant, `!` or `(`")),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, VerifyError> {
        let mut p = Parser {
            toks: lex(src)?,
            at: 0,
            end: src.chars().count() + 1,
        };
        let e = p.or()?;
        if p.at != p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Not(e) => e.collect(out),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    /// Evaluates with `lookup` supplying variable values.
    pub fn eval(&self, lookup: &impl Fn(&str) -> Option<bool>) -> Result<bool, VerifyError> {
        Ok(match self {
            Expr::Const(b) => *b,
            Expr::Var(v) => lookup(v).ok_or_else(|| VerifyError::UnknownVariable(v.clone()))?,
            Expr::Not(e) => !e.eval(lookup)?,
            Expr::And(a, b) => a.eval(lookup)? & b.eval(lookup)?,
            Expr::Or(a, b) => a.eval(lookup)? | b.eval(lookup)?,
            Expr::Xor(a, b) => a.eval(lookup)? ^ b.eval(lookup)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, a: bool, b: bool) -> bool {
        Expr::parse(src)
            .unwrap()
            .eval(&|v| match v {
                "A" => Some(a),
                "B" => Some(b),
                _ => None,
            })
            .unwrap()
    }

    #[test]
    fn precedence() {
        for a in [false, true] {
            for b in [false, true] {
                assert_eq!(eval("!(A|B)", a, b), !(a || b));
                assert_eq!(eval("!A&B", a, b), !a && b);
                assert_eq!(eval("A|B&0", a, b), a);
                assert_eq!(eval("A^B", a, b), a != b);
                assert_eq!(eval("¬(A ∧ B)", a, b), !(a && b));
                assert_eq!(eval("A && !B || 1 & 0", a, b), a && !b);
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            Expr::parse("A &"),
            Err(VerifyError::Expression { position: 4, .. })
        ));
        assert!(matches!(Expr::parse("(A"), Err(VerifyError::Expression { .. })));
        assert!(matches!(Expr::parse("A B"), Err(VerifyError::Expression { position: 3, .. })));
        assert!(matches!(Expr::parse("A % B"), Err(VerifyError::Expression { position: 3, .. })));
        let e = Expr::parse("A & C").unwrap();
        assert_eq!(
            e.eval(&|v| (v == "A").then_some(true)),
            Err(VerifyError::UnknownVariable("C".into()))
        );
    }

    #[test]
    fn variables_listed() {
        let vars = Expr::parse("!(A|B) ^ C & A").unwrap().variables();
        assert_eq!(vars.into_iter().collect::<Vec<_>>(), ["A", "B", "C"]);
    }
}
