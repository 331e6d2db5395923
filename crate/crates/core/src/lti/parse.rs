//! Text form of transfer functions.
//!
//! Two notations are accepted:
//!
//! * coefficient lists, `[3.31, 195.26] / [1, 174.66, 3.12]` (descending powers);
//! * rational expressions in `s`, e.g. `-(0.1374 s + 0.0021)/s`,
//!   `(s+1)(s+2)/(s^3 + 2s)`, with implicit multiplication.

use super::{poly, RationalTF};
use crate::error::{Error, Result};

/// Longest accepted input, in bytes.
pub const MAX_INPUT: usize = 4096;
/// Highest polynomial degree an expression may build.
pub const MAX_DEGREE: usize = 64;
const MAX_DEPTH: usize = 64;

fn err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn parse_tf(text: &str) -> Result<RationalTF> {
    if text.len() > MAX_INPUT {
        return Err(err(format!("input longer than {MAX_INPUT} bytes")));
    }
    let t = text.trim();
    if t.is_empty() {
        return Err(err("empty transfer function"));
    }
    let (num, den) = if t.starts_with('[') {
        parse_lists(t)?
    } else {
        let mut p = Parser::new(t)?;
        let r = p.expr(0)?;
        if p.pos != p.tokens.len() {
            return Err(err(format!("unexpected {:?}", p.tokens[p.pos])));
        }
        (r.num, r.den)
    };
    let den = poly::trim(&den);
    if poly::is_zero(&den) {
        return Err(err("denominator is identically zero"));
    }
    RationalTF::new(&num, &den).map_err(|e| err(e.to_string()))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| err(format!("expected a bracketed list, got '{s}'")))?;
    let out: Vec<f64> = inner
        .split(',')
        .map(|c| {
            let c = c.trim();
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad coefficient '{c}'")))
        })
        .collect::<Result<_>>()?;
    if out.len() > MAX_DEGREE + 1 {
        return Err(err("too many coefficients"));
    }
    Ok(out)
}

fn parse_lists(t: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let close = t.find(']').ok_or_else(|| err("unterminated '['"))?;
    let (num, rest) = t.split_at(close + 1);
    let rest = rest.trim_start();
    let den = match rest.strip_prefix('/') {
        Some(d) => parse_list(d)?,
        None if rest.is_empty() => vec![1.0],
        None => return Err(err(format!("expected '/' after numerator, got '{rest}'"))),
    };
    Ok((parse_list(num)?, den))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    S,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

fn tokenize(t: &str) -> Result<Vec<Tok>> {
    let b = t.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b's' => Tok::S,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::Open,
            b')' => Tok::Close,
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                // Exponent only when digits follow, so "2e" is rejected below.
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        while j < b.len() && b[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &t[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| err(format!("bad number '{lit}'")))?;
                if !v.is_finite() {
                    return Err(err(format!("number out of range '{lit}'")));
                }
                out.push(Tok::Num(v));
                continue;
            }
            _ => {
                let ch = t[i..].chars().next().unwrap_or('?');
                return Err(err(format!("unexpected character '{ch}'")));
            }
        };
        out.push(tok);
        i += 1;
    }
    Ok(out)
}

/// `num / den` during parsing.
#[derive(Debug, Clone)]
struct Ratio {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl Ratio {
    fn constant(v: f64) -> Self {
        Self {
            num: vec![v],
            den: vec![1.0],
        }
    }

    fn check(self) -> Result<Self> {
        if poly::degree(&self.num) > MAX_DEGREE || poly::degree(&self.den) > MAX_DEGREE {
            return Err(err(format!("degree above {MAX_DEGREE}")));
        }
        if self.num.iter().chain(&self.den).any(|c| !c.is_finite()) {
            return Err(err("coefficient overflow"));
        }
        Ok(self)
    }

    fn add(self, o: Ratio, sign: f64) -> Result<Self> {
        Ratio {
            num: poly::add(
                &poly::mul(&self.num, &o.den),
                &poly::scale(&poly::mul(&o.num, &self.den), sign),
            ),
            den: poly::mul(&self.den, &o.den),
        }
        .check()
    }

    fn mul(self, o: Ratio) -> Result<Self> {
        Ratio {
            num: poly::mul(&self.num, &o.num),
            den: poly::mul(&self.den, &o.den),
        }
        .check()
    }

    fn div(self, o: Ratio) -> Result<Self> {
        if poly::is_zero(&o.num) {
            return Err(err("division by zero"));
        }
        Ratio {
            num: poly::mul(&self.num, &o.den),
            den: poly::mul(&self.den, &o.num),
        }
        .check()
    }
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn new(t: &str) -> Result<Self> {
        Ok(Self {
            tokens: tokenize(t)?,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<Tok> {
        self.tokens.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn expr(&mut self, depth: usize) -> Result<Ratio> {
        if depth > MAX_DEPTH {
            return Err(err("expression nested too deeply"));
        }
        let mut acc = self.term(depth)?;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = self.peek() {
            self.pos += 1;
            let rhs = self.term(depth)?;
            acc = acc.add(rhs, if t == Tok::Plus { 1.0 } else { -1.0 })?;
        }
        Ok(acc)
    }

    fn term(&mut self, depth: usize) -> Result<Ratio> {
        let mut acc = self.unary(depth)?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(self.unary(depth)?)?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = acc.div(self.unary(depth)?)?;
                }
                // Implicit multiplication: "3s", "s(s+1)", "(s+1)(s+2)".
                Some(Tok::Num(_) | Tok::S | Tok::Open) => acc = acc.mul(self.power(depth)?)?,
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self, depth: usize) -> Result<Ratio> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                self.guard(depth)?;
                let r = self.unary(depth + 1)?;
                Ok(Ratio {
                    num: poly::scale(&r.num, -1.0),
                    den: r.den,
                })
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.guard(depth)?;
                self.unary(depth + 1)
            }
            _ => self.power(depth),
        }
    }

    fn guard(&self, depth: usize) -> Result<()> {
        if depth > MAX_DEPTH {
            Err(err("expression nested too deeply"))
        } else {
            Ok(())
        }
    }

    fn power(&mut self, depth: usize) -> Result<Ratio> {
        let base = self.primary(depth)?;
        if self.peek() != Some(Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let n = match self.bump() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && (0.0..=MAX_DEGREE as f64).contains(&v) => {
                v as usize
            }
            other => {
                return Err(err(format!(
                    "exponent must be an integer 0..={MAX_DEGREE}, got {other:?}"
                )))
            }
        };
        Ratio {
            num: poly::pow(&base.num, n),
            den: poly::pow(&base.den, n),
        }
        .check()
    }

    fn primary(&mut self, depth: usize) -> Result<Ratio> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Ratio::constant(v)),
            Some(Tok::S) => Ok(Ratio {
                num: vec![1.0, 0.0],
                den: vec![1.0],
            }),
            Some(Tok::Open) => {
                let r = self.expr(depth + 1)?;
                match self.bump() {
                    Some(Tok::Close) => Ok(r),
                    _ => Err(err("missing ')'")),
                }
            }
            Some(t) => Err(err(format!("unexpected {t:?}"))),
            None => Err(err("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn same(a: &RationalTF, b: &RationalTF) -> bool {
        let close = |x: &[f64], y: &[f64]| {
            x.len() == y.len()
                && x.iter()
                    .zip(y)
                    .all(|(p, q)| (p - q).abs() <= 1e-12 * q.abs().max(1.0))
        };
        close(a.num(), b.num()) && close(a.den(), b.den())
    }

    #[test]
    fn expression_and_list_forms_agree() {
        let want = RationalTF::new(&[3.31, 195.26], &[1.0, 174.66, 3.12]).unwrap();
        assert!(same(
            &parse_tf("(3.31s+195.26)/(s^2+174.66s+3.12)").unwrap(),
            &want
        ));
        assert!(same(
            &parse_tf("[3.31, 195.26] / [1, 174.66, 3.12]").unwrap(),
            &want
        ));
        assert!(same(
            &parse_tf("(3.31*s + 195.26) / (s*s + 174.66*s + 3.12)").unwrap(),
            &want
        ));
    }

    #[test]
    fn signs_products_and_constants() {
        let t = parse_tf("-1/(s+1)").unwrap();
        assert_eq!(t, RationalTF::new(&[-1.0], &[1.0, 1.0]).unwrap());
        let t = parse_tf("-(0.1374s+0.0021)/s").unwrap();
        assert_eq!(
            t,
            RationalTF::new(&[-0.1374, -0.0021], &[1.0, 0.0]).unwrap()
        );
        let t = parse_tf("(s+1)(s+2)").unwrap();
        assert_eq!(t.num(), &[1.0, 3.0, 2.0]);
        assert_eq!(parse_tf("2.5").unwrap(), RationalTF::gain(2.5).unwrap());
        assert_eq!(parse_tf("[4]").unwrap(), RationalTF::gain(4.0).unwrap());
        let t = parse_tf("1e-3/(2e1 s + 1)").unwrap();
        assert!(same(&t, &RationalTF::new(&[5e-5], &[1.0, 0.05]).unwrap()));
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "1/",
            "(s+1",
            "s+)",
            "1/0",
            "[1,2",
            "[1,x]/[1]",
            "[1]/[0]",
            "s^1.5",
            "s^99",
            "2e",
            "q",
            "1/(s-s)",
            "[1] [2]",
        ] {
            assert!(parse_tf(bad).is_err(), "{bad:?} should fail");
        }
        let deep = "(".repeat(200) + "1" + &")".repeat(200);
        assert!(parse_tf(&deep).is_err());
        let neg = "-".repeat(500) + "1";
        assert!(parse_tf(&neg).is_err());
    }
}
