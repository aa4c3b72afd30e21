//! Prefix notation for superfunctions on C^{1|1}.
//!
//! ```text
//! expr  := atom | "(" op expr* ")"
//! op    := "+" | "*" | "-" | "D" | "dz" | "dth"
//! atom  := "th" | "e1" .. "eN" | "z" | "i" | integer | integer "/" integer
//! ```
//!
//! `+` and `*` take any number of arguments (empty sum 0, empty product 1), `-` negates one
//! argument or subtracts the rest from the first, `D`, `dz` and `dth` take one argument.
//! Products are ordered as written. Example: `(+ (* th e1) (* 1/2 z z))`.

use num_traits::{One, Zero};

use crate::error::{Result, SuperError};
use crate::poly::Poly;
use crate::scalar::{imag_unit, int, real, Q};
use crate::superfn::{self, SuperFn};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open(usize),
    Close(usize),
    Atom(usize, String),
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut out = vec![];
    let mut cur = String::new();
    let mut start = 0;
    let flush = |cur: &mut String, start: usize, out: &mut Vec<Tok>| {
        if !cur.is_empty() {
            out.push(Tok::Atom(start, std::mem::take(cur)));
        }
    };
    for (pos, ch) in text.char_indices() {
        match ch {
            '(' | ')' => {
                flush(&mut cur, start, &mut out);
                out.push(if ch == '(' {
                    Tok::Open(pos)
                } else {
                    Tok::Close(pos)
                });
            }
            c if c.is_whitespace() => flush(&mut cur, start, &mut out),
            c => {
                if cur.is_empty() {
                    start = pos;
                }
                cur.push(c);
            }
        }
    }
    flush(&mut cur, start, &mut out);
    out
}

struct Parser {
    toks: Vec<Tok>,
    at: usize,
    params: usize,
    end: usize,
}

fn err(pos: usize, msg: impl Into<String>) -> SuperError {
    SuperError::Parse {
        pos,
        msg: msg.into(),
    }
}

impl Parser {
    fn expr(&mut self) -> Result<SuperFn> {
        let tok = self
            .toks
            .get(self.at)
            .cloned()
            .ok_or_else(|| err(self.end, "unexpected end of input"))?;
        self.at += 1;
        match tok {
            Tok::Atom(pos, s) => self.atom(pos, &s),
            Tok::Close(pos) => Err(err(pos, "unexpected `)`")),
            Tok::Open(pos) => {
                let (opos, op) = match self.toks.get(self.at).cloned() {
                    Some(Tok::Atom(p, s)) => (p, s),
                    _ => return Err(err(pos, "expected an operator after `(`")),
                };
                self.at += 1;
                let mut args = vec![];
                loop {
                    match self.toks.get(self.at) {
                        Some(Tok::Close(_)) => {
                            self.at += 1;
                            break;
                        }
                        Some(_) => args.push(self.expr()?),
                        None => return Err(err(self.end, format!("unclosed `(` at {pos}"))),
                    }
                }
                self.apply(opos, &op, args)
            }
        }
    }

    fn apply(&self, pos: usize, op: &str, args: Vec<SuperFn>) -> Result<SuperFn> {
        let n = superfn::generators(self.params);
        let unary = |args: &[SuperFn]| -> Result<SuperFn> {
            if args.len() == 1 {
                Ok(args[0].clone())
            } else {
                Err(err(
                    pos,
                    format!("`{op}` takes one argument, got {}", args.len()),
                ))
            }
        };
        match op {
            "+" => Ok(args.iter().fold(SuperFn::zero(n), |a, b| &a + b)),
            "*" => Ok(args
                .iter()
                .fold(SuperFn::scalar(n, Poly::one()), |a, b| &a * b)),
            "-" => match args.split_first() {
                None => Err(err(pos, "`-` needs an argument")),
                Some((a, [])) => Ok(-a),
                Some((a, rest)) => Ok(rest.iter().fold(a.clone(), |x, y| &x - y)),
            },
            "D" => Ok(superfn::d_op(&unary(&args)?)),
            "dz" => Ok(superfn::d_z(&unary(&args)?)),
            "dth" => Ok(superfn::d_theta(&unary(&args)?)),
            _ => Err(err(pos, format!("unknown operator `{op}`"))),
        }
    }

    fn atom(&self, pos: usize, s: &str) -> Result<SuperFn> {
        let p = self.params;
        match s {
            "th" => return Ok(superfn::theta(p)),
            "z" => return Ok(superfn::z(p)),
            "i" => return Ok(superfn::constant(p, imag_unit())),
            _ => {}
        }
        if let Some(k) = s.strip_prefix('e') {
            let k: usize = k.parse().map_err(|_| err(pos, format!("bad atom `{s}`")))?;
            return superfn::param(p, k)
                .map_err(|_| err(pos, format!("parameter e{k} outside e1..e{p}")));
        }
        let q: Q = match s.split_once('/') {
            Some((a, b)) => {
                let a: i64 = a
                    .parse()
                    .map_err(|_| err(pos, format!("bad number `{s}`")))?;
                let b: i64 = b
                    .parse()
                    .map_err(|_| err(pos, format!("bad number `{s}`")))?;
                if b == 0 {
                    return Err(err(pos, "zero denominator"));
                }
                crate::scalar::rat(a, b)
            }
            None => {
                let a: i64 = s.parse().map_err(|_| err(pos, format!("bad atom `{s}`")))?;
                int(a).re
            }
        };
        if q.is_zero() {
            return Ok(SuperFn::zero(superfn::generators(p)));
        }
        Ok(superfn::constant(p, real(q)))
    }
}

/// Parse an expression with odd parameters e1..e`params`.
pub fn parse(text: &str, params: usize) -> Result<SuperFn> {
    let mut parser = Parser {
        toks: tokenize(text),
        at: 0,
        params,
        end: text.len(),
    };
    let v = parser.expr()?;
    if let Some(t) = parser.toks.get(parser.at) {
        let pos = match t {
            Tok::Open(p) | Tok::Close(p) | Tok::Atom(p, _) => *p,
        };
        return Err(err(pos, "trailing input"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn parses_and_evaluates() {
        let f = parse("(+ (* th e1) (* 1/2 z z))", 2).unwrap();
        let expect = &(&superfn::theta(2) * &superfn::param(2, 1).unwrap())
            + &superfn::even(2, Poly::monomial(real(rat(1, 2)), 2));
        assert_eq!(f, expect);
        assert_eq!(parse("(D (D z))", 0).unwrap(), superfn::one(0));
        assert_eq!(parse("(- th)", 0).unwrap(), -&superfn::theta(0));
        assert_eq!(parse("(- 3 1)", 0).unwrap(), superfn::constant(0, int(2)));
        assert_eq!(parse("(* e1 e1)", 1).unwrap(), SuperFn::zero(2));
    }

    #[test]
    fn reports_errors_with_positions() {
        for (text, pos) in [
            ("(+ 1", 4),
            ("(foo 1)", 1),
            ("e5", 0),
            ("(+ 1) 2", 6),
            ("1/0", 0),
            (")", 0),
        ] {
            match parse(text, 2) {
                Err(SuperError::Parse { pos: p, .. }) => assert_eq!(p, pos, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
