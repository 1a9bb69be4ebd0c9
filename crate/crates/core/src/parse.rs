//! Recursive-descent parser for polynomial expressions.
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := number | variable | 'i' | '(' expr ')'
//! number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits] | digits '/' digits
//! ```
//!
//! Implicit multiplication is rejected. Rationals are rounded to the nearest
//! double once, when the token is read.

use crate::error::{Error, Result};
use crate::poly::{Polynomial, C64};

const MAX_EXPONENT: u64 = 1 << 16;

pub fn parse_polynomial(text: &str, variables: &[String]) -> Result<Polynomial> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars: variables,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let poly = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.syntax(format!("unexpected `{}`", p.peek_char())));
    }
    Ok(poly)
}

/// Parses a constant expression such as `-3/4`, `2.5` or `(1-2*i)`.
pub fn parse_constant(text: &str) -> Result<C64> {
    let p = parse_polynomial(text, &[])?;
    Ok(p.coefficient(&crate::poly::Monomial::one(0)))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn nvars(&self) -> usize {
        self.vars.len()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_char(&self) -> char {
        std::str::from_utf8(&self.src[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
            .unwrap_or(self.src[self.pos] as char)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn syntax(&self, message: String) -> Error {
        Error::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Polynomial> {
        self.skip_ws();
        let negate = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        let first = self.term()?;
        let mut acc = if negate { -&first } else { first };
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            acc = &acc * &self.factor()?;
        }
        self.skip_ws();
        if let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'(' || b == b'_' || b == b'.' {
                return Err(self.syntax("implicit multiplication is not allowed; use `*`".into()));
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial> {
        let base = self.base()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.syntax("expected an unsigned integer exponent".into()));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
            let value = digits.parse::<u64>().unwrap_or(u64::MAX);
            if value > MAX_EXPONENT {
                return Err(Error::ExponentOverflow {
                    value: digits.to_string(),
                    offset: start,
                });
            }
            return Ok(base.pow(value as u32));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Polynomial> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.syntax("unexpected end of input; expected a term".into())),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`".into()));
                }
                Ok(inner)
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => {
                let c = self.number()?;
                Ok(Polynomial::constant(self.nvars(), C64::new(c, 0.0)))
            }
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if name == "i" {
                    return Ok(Polynomial::constant(self.nvars(), C64::new(0.0, 1.0)));
                }
                match self.vars.iter().position(|v| v == name) {
                    Some(idx) => Ok(Polynomial::var(self.nvars(), idx)),
                    None => Err(Error::UnknownVariable {
                        name: name.to_string(),
                        offset: start,
                    }),
                }
            }
            Some(_) => Err(self.syntax(format!("unexpected `{}`", self.peek_char()))),
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let int_digits = self.digits();
        if self.peek() == Some(b'/') && int_digits > 0 {
            let num = self.slice_f64(start, self.pos)?;
            self.pos += 1;
            let den_start = self.pos;
            if self.digits() == 0 {
                return Err(self.syntax("expected denominator digits".into()));
            }
            let den = self.slice_f64(den_start, self.pos)?;
            if den == 0.0 {
                return Err(Error::Syntax {
                    offset: den_start,
                    message: "zero denominator".into(),
                });
            }
            return Ok(num / den);
        }
        let mut frac_digits = 0;
        if self.peek() == Some(b'.') {
            self.pos += 1;
            frac_digits = self.digits();
        }
        if int_digits + frac_digits == 0 {
            return Err(Error::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                self.pos = save;
            }
        }
        self.slice_f64(start, self.pos)
    }

    fn slice_f64(&self, start: usize, end: usize) -> Result<f64> {
        let s = std::str::from_utf8(&self.src[start..end]).expect("ascii");
        s.parse::<f64>().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{s}`"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hyperelliptic_has_degree_eleven() {
        let p = parse_polynomial("(y-2)^2 - (x-1)*(x^5+2*x+5)^2", &names(&["x", "y"])).unwrap();
        assert_eq!(p.total_degree(), Some(11));
    }

    #[test]
    fn hankel_sum_constraint() {
        let vars = names(&["x1", "x2", "x3", "x4", "x5"]);
        let p = parse_polynomial("x1+x2+x3+x4+x5-1", &vars).unwrap();
        assert_eq!(p.total_degree(), Some(1));
        assert_eq!(p.num_terms(), 6);
    }

    #[test]
    fn trailing_operator_reports_offset() {
        let err = parse_polynomial("x + ", &names(&["x"])).unwrap_err();
        assert!(matches!(err, Error::Syntax { offset: 4, .. }), "{err}");
    }

    #[test]
    fn unknown_variable() {
        let err = parse_polynomial("x + z", &names(&["x", "y"])).unwrap_err();
        assert!(matches!(err, Error::UnknownVariable { offset: 4, .. }), "{err}");
    }

    #[test]
    fn exponent_limit() {
        let vars = names(&["x"]);
        assert!(parse_polynomial("x^65536", &vars).is_ok());
        let err = parse_polynomial("x^65537", &vars).unwrap_err();
        assert!(matches!(err, Error::ExponentOverflow { offset: 2, .. }));
        let err = parse_polynomial("x^99999999999999999999999", &vars).unwrap_err();
        assert!(matches!(err, Error::ExponentOverflow { .. }));
    }

    #[test]
    fn implicit_multiplication_rejected() {
        let vars = names(&["x", "y"]);
        assert!(matches!(
            parse_polynomial("2x", &vars),
            Err(Error::Syntax { offset: 1, .. })
        ));
        assert!(matches!(
            parse_polynomial("x y", &vars),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_polynomial("(x)(y)", &vars),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn rationals_and_imaginary_unit() {
        let c = parse_constant("1/4 - 3*i").unwrap();
        assert_eq!(c, C64::new(0.25, -3.0));
        assert_eq!(parse_constant("-2.5e1").unwrap(), C64::new(-25.0, 0.0));
        assert_eq!(parse_constant("i^2").unwrap(), C64::new(-1.0, 0.0));
        assert!(parse_constant("1/0").is_err());
    }

    #[test]
    fn parsing_is_pure() {
        let vars = names(&["x", "y"]);
        let a = parse_polynomial("(x-1/3)^3*(y+i)", &vars).unwrap();
        let b = parse_polynomial("(x-1/3)^3*(y+i)", &vars).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unbalanced_parenthesis() {
        assert!(matches!(
            parse_polynomial("(x+1", &names(&["x"])),
            Err(Error::Syntax { offset: 4, .. })
        ));
    }
}
