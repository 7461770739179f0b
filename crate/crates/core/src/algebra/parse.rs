//! Text grammar for operator expressions.
//!
//! ```text
//! expr    := ['+'|'-'] term (('+'|'-') term)*
//! term    := unary (('*' | '/' | <juxtaposition>) unary)*
//! unary   := ('-'|'+') unary | primary
//! primary := number ['i'] | 'i' | symbol | '(' expr ')'
//! symbol  := ('a' | 'ad' | 'x' | 'p' | 'n') index      (index is 1-based)
//! ```
//!
//! Products are applied left to right in the written order; nothing is
//! symmetrized implicitly. Division is only allowed by constants.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

use num_complex::Complex64;

use super::OperatorExpr;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Imag(f64),
    Symbol(String, usize),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn syntax(&self, position: usize, message: &str) -> Error {
        Error::Syntax {
            position,
            message: message.to_string(),
        }
    }

    fn tokens(mut self) -> Result<alloc::vec::Vec<(usize, Token)>> {
        let mut out = alloc::vec::Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let ch = self.src[self.pos];
            let tok = match ch {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    self.pos += 1;
                    continue;
                }
                b'+' => {
                    self.pos += 1;
                    Token::Plus
                }
                b'-' | 0xE2 => {
                    // accept U+2212 MINUS SIGN as well as ASCII '-'
                    if ch == 0xE2 {
                        if self.src.get(start..start + 3) != Some("\u{2212}".as_bytes()) {
                            return Err(self.syntax(start, "unexpected character"));
                        }
                        self.pos += 3;
                    } else {
                        self.pos += 1;
                    }
                    Token::Minus
                }
                b'*' => {
                    self.pos += 1;
                    Token::Star
                }
                b'/' => {
                    self.pos += 1;
                    Token::Slash
                }
                b'(' => {
                    self.pos += 1;
                    Token::LParen
                }
                b')' => {
                    self.pos += 1;
                    Token::RParen
                }
                b'0'..=b'9' | b'.' => self.number(start)?,
                b'a'..=b'z' | b'A'..=b'Z' => self.word(start)?,
                _ => return Err(self.syntax(start, "unexpected character")),
            };
            out.push((start, tok));
        }
        Ok(out)
    }

    fn number(&mut self, start: usize) -> Result<Token> {
        let digits = |lex: &mut Self| {
            let s = lex.pos;
            while lex.pos < lex.src.len() && lex.src[lex.pos].is_ascii_digit() {
                lex.pos += 1;
            }
            lex.pos - s
        };
        let mut count = digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(self.syntax(start, "malformed number"));
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.syntax(save, "malformed exponent"));
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let value: f64 = text
            .parse()
            .map_err(|_| self.syntax(start, "malformed number"))?;
        if self.pos < self.src.len()
            && self.src[self.pos] == b'i'
            && !self
                .src
                .get(self.pos + 1)
                .is_some_and(|c| c.is_ascii_alphanumeric())
        {
            self.pos += 1;
            return Ok(Token::Imag(value));
        }
        Ok(Token::Number(value))
    }

    fn word(&mut self, start: usize) -> Result<Token> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let idx_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if idx_start == self.pos {
            if name == "i" {
                return Ok(Token::Imag(1.0));
            }
            return Err(self.syntax(start, "expected a mode index after symbol"));
        }
        if !matches!(name, "a" | "ad" | "x" | "p" | "n") {
            return Err(self.syntax(start, "unknown symbol"));
        }
        let index: usize = core::str::from_utf8(&self.src[idx_start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|_| self.syntax(idx_start, "malformed mode index"))?;
        Ok(Token::Symbol(name.to_string(), index))
    }
}

struct Parser {
    tokens: alloc::vec::Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    mode_count: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.end)
    }

    fn err(&self, message: &str) -> Error {
        Error::Syntax {
            position: self.offset(),
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<OperatorExpr> {
        let mut acc = match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                -self.term()?
            }
            Some(Token::Plus) => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<OperatorExpr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    acc = acc * self.unary()?;
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    let at = self.offset();
                    let rhs = self.unary()?;
                    let divisor = constant_value(&rhs).ok_or(Error::Syntax {
                        position: at,
                        message: "division is only defined by constants".to_string(),
                    })?;
                    if divisor.norm() == 0.0 {
                        return Err(Error::Syntax {
                            position: at,
                            message: "division by zero".to_string(),
                        });
                    }
                    acc = acc.scale(divisor.inv());
                }
                Some(Token::Number(_))
                | Some(Token::Imag(_))
                | Some(Token::Symbol(..))
                | Some(Token::LParen) => {
                    acc = acc * self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<OperatorExpr> {
        match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Token::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<OperatorExpr> {
        let m = self.mode_count;
        let Some((at, tok)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.err("unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Token::Number(v) => Ok(OperatorExpr::scalar(m, Complex64::new(v, 0.0))),
            Token::Imag(v) => Ok(OperatorExpr::scalar(m, Complex64::new(0.0, v))),
            Token::Symbol(name, index) => {
                if index == 0 || index > m {
                    return Err(Error::ModeOutOfRange {
                        index,
                        mode_count: m,
                    });
                }
                let j = index - 1;
                match name.as_str() {
                    "a" => OperatorExpr::annihilation(j, m),
                    "ad" => OperatorExpr::creation(j, m),
                    "x" => OperatorExpr::position(j, m),
                    "p" => OperatorExpr::momentum(j, m),
                    "n" => OperatorExpr::number(j, m),
                    _ => unreachable!("lexer only emits known symbols"),
                }
            }
            Token::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.err("expected ')'")),
                }
            }
            _ => Err(Error::Syntax {
                position: at,
                message: "expected an operand".to_string(),
            }),
        }
    }
}

fn constant_value(e: &OperatorExpr) -> Option<Complex64> {
    if e.terms().all(|(m, _)| m.is_identity()) {
        Some(e.constant_term())
    } else {
        None
    }
}

/// Parses `text` into the canonical normal-ordered expression on
/// `mode_count` modes.
pub fn parse_operator(text: &str, mode_count: usize) -> Result<OperatorExpr> {
    let tokens = Lexer {
        src: text.as_bytes(),
        pos: 0,
    }
    .tokens()?;
    if tokens.is_empty() {
        return Err(Error::Syntax {
            position: 0,
            message: "empty expression".to_string(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        mode_count,
    };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.err("unexpected token"));
    }
    Ok(expr)
}

pub(crate) fn fmt_real(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{}", v)
    } else {
        format!("{:e}", v)
    }
}

fn fmt_imag(v: f64) -> String {
    if v == 1.0 {
        "i".to_string()
    } else {
        format!("{}i", fmt_real(v))
    }
}

pub(crate) fn fmt_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        fmt_real(c.re)
    } else if c.re == 0.0 {
        if c.im == -1.0 {
            "-i".to_string()
        } else {
            fmt_imag(c.im)
        }
    } else {
        let sign = if c.im < 0.0 { '-' } else { '+' };
        format!("({}{}{})", fmt_real(c.re), sign, fmt_imag(c.im.abs()))
    }
}

fn is_negative(c: Complex64) -> bool {
    (c.im == 0.0 && c.re < 0.0) || (c.re == 0.0 && c.im < 0.0)
}

/// Writes one signed term `c * f1 * f2 * ...` of a sum.
pub(crate) fn write_term<S: AsRef<str>>(
    f: &mut fmt::Formatter<'_>,
    first: bool,
    c: Complex64,
    factors: &[S],
) -> fmt::Result {
    let (neg, mag) = if is_negative(c) {
        (true, -c)
    } else {
        (false, c)
    };
    match (first, neg) {
        (true, true) => f.write_str("-")?,
        (true, false) => {}
        (false, true) => f.write_str(" - ")?,
        (false, false) => f.write_str(" + ")?,
    }
    if factors.is_empty() {
        return f.write_str(&fmt_complex(mag));
    }
    if mag != Complex64::new(1.0, 0.0) {
        write!(f, "{}*", fmt_complex(mag))?;
    }
    for (k, fac) in factors.iter().enumerate() {
        if k > 0 {
            f.write_str("*")?;
        }
        f.write_str(fac.as_ref())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{commutator, Monomial};
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn x1_is_two_terms() {
        let e = parse_operator("x1", 3).unwrap();
        let expected =
            OperatorExpr::creation(0, 3).unwrap() + OperatorExpr::annihilation(0, 3).unwrap();
        assert_eq!(e, expected);
        assert_eq!(e.len(), 2);
    }

    #[test]
    fn x1_p1_product() {
        let e = parse_operator("x1*p1", 1).unwrap();
        let expected = OperatorExpr::from_terms(
            1,
            [
                (Monomial::from_exponents(vec![(0, 2)]), c(0.0, -1.0)),
                (Monomial::from_exponents(vec![(2, 0)]), c(0.0, 1.0)),
                (Monomial::from_exponents(vec![(0, 0)]), c(0.0, 1.0)),
            ],
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn number_aliases() {
        let e = parse_operator("n1 + n2 + n3", 3).unwrap();
        assert_eq!(e, OperatorExpr::total_number(3));
        let ladder = parse_operator("ad1 a1 + ad2*a2 + ad3*a3", 3).unwrap();
        assert_eq!(e, ladder);
    }

    #[test]
    fn complex_literals_and_division() {
        let e = parse_operator("(1+2i)*a1 - 3i*ad1/2", 1).unwrap();
        assert_eq!(
            e.coefficient(&Monomial::from_exponents(vec![(0, 1)])),
            c(1.0, 2.0)
        );
        assert_eq!(
            e.coefficient(&Monomial::from_exponents(vec![(1, 0)])),
            c(0.0, -1.5)
        );
        assert_eq!(
            parse_operator("2.5e-3", 1).unwrap().constant_term(),
            c(2.5e-3, 0.0)
        );
        assert_eq!(
            parse_operator("-i", 1).unwrap().constant_term(),
            c(0.0, -1.0)
        );
    }

    #[test]
    fn operator_order_is_respected() {
        let ap = parse_operator("a1*ad1", 1).unwrap();
        let pa = parse_operator("ad1*a1", 1).unwrap();
        assert_eq!(ap - pa, OperatorExpr::identity(1));
    }

    #[test]
    fn juxtaposition_matches_star() {
        let a = parse_operator("2 x1 (p1 + 1)", 1).unwrap();
        let b = parse_operator("2*x1*(p1+1)", 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unicode_minus_is_accepted() {
        let a = parse_operator("x1 \u{2212} p1", 1).unwrap();
        let b = parse_operator("x1 - p1", 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_operator("x1 + * p1", 1) {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 5),
            other => panic!("unexpected {:?}", other),
        }
        match parse_operator("(x1 + p1", 1) {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 8),
            other => panic!("unexpected {:?}", other),
        }
        assert!(matches!(
            parse_operator("q1", 1),
            Err(Error::Syntax { position: 0, .. })
        ));
        assert!(matches!(
            parse_operator("x1 / a1", 1),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(parse_operator("", 1), Err(Error::Syntax { .. })));
    }

    #[test]
    fn mode_index_out_of_range() {
        assert_eq!(
            parse_operator("x4", 3),
            Err(Error::ModeOutOfRange {
                index: 4,
                mode_count: 3
            })
        );
        assert!(matches!(
            parse_operator("a0", 3),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "x1*x2*x3 - x1*p2*p3",
            "(0.25-1e-9i)*ad1*a2 + 3i - a3*a3*ad3",
            "x1*p1*x1 + 1e20*n2",
            "0",
        ] {
            let e = parse_operator(text, 3).unwrap();
            let back = parse_operator(&format!("{}", e), 3).unwrap();
            assert_eq!(e, back, "{}", text);
        }
    }

    #[test]
    fn commutator_of_parsed_quadratures() {
        let x = parse_operator("x1", 1).unwrap();
        let p = parse_operator("p1", 1).unwrap();
        assert_eq!(format!("{}", commutator(&x, &p).unwrap()), "2i");
    }
}
