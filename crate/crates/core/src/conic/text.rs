//! Plain-text standard form for SOCP fixtures.
//!
//! ```text
//! socp v1
//! dim <n>
//! center <p values>
//! linear <n values>
//! cone <r>
//! a <n values>        (r lines)
//! b <r values>
//! c <n values>
//! d <value>
//! ...                 (one block per cone)
//! end
//! ```
//!
//! Numbers are whitespace separated and written with shortest round-trip
//! formatting; lines starting with `#` are ignored.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{Objective, SocCone, SocpProblem};
use crate::{Error, Result};

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
}

pub fn to_text(problem: &SocpProblem) -> String {
    let mut out = String::from("socp v1\n");
    let _ = writeln!(out, "dim {}", problem.dim());
    let _ = writeln!(out, "center {}", join(problem.objective.center.iter().copied()));
    let _ = writeln!(out, "linear {}", join(problem.objective.linear.iter().copied()));
    for cone in &problem.cones {
        let _ = writeln!(out, "cone {}", cone.a.nrows());
        for row in cone.a.row_iter() {
            let _ = writeln!(out, "a {}", join(row.iter().copied()));
        }
        let _ = writeln!(out, "b {}", join(cone.b.iter().copied()));
        let _ = writeln!(out, "c {}", join(cone.c.iter().copied()));
        let _ = writeln!(out, "d {:e}", cone.d);
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Lines { inner: it.peekable() }
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (no, line) = self
            .inner
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of input, expected `{key}`")))?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some(k) if k == key => Ok((no, toks.collect())),
            other => Err(Error::Parse(format!("line {no}: expected `{key}`, found {other:?}"))),
        }
    }

    fn numbers(&mut self, key: &str, expect: Option<usize>) -> Result<Vec<f64>> {
        let (no, toks) = self.keyed(key)?;
        let vals = toks
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("line {no}: `{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(n) = expect {
            if vals.len() != n {
                return Err(Error::Parse(format!(
                    "line {no}: `{key}` has {} values, expected {n}",
                    vals.len()
                )));
            }
        }
        Ok(vals)
    }

    fn peek_key(&mut self) -> Option<&'a str> {
        self.inner.peek().and_then(|(_, l)| l.split_whitespace().next())
    }
}

pub fn from_text(text: &str) -> Result<SocpProblem> {
    let mut lines = Lines::new(text);
    let (_, ver) = lines.keyed("socp")?;
    if ver != ["v1"] {
        return Err(Error::Parse(format!("unsupported version {ver:?}")));
    }
    let n = lines.numbers("dim", Some(1))?[0];
    if n < 0.0 || n.fract() != 0.0 {
        return Err(Error::Parse(format!("bad dimension {n}")));
    }
    let n = n as usize;
    let center = DVector::from_vec(lines.numbers("center", None)?);
    let linear = DVector::from_vec(lines.numbers("linear", Some(n))?);
    let mut cones = Vec::new();
    loop {
        match lines.peek_key() {
            Some("cone") => {
                let r = lines.numbers("cone", Some(1))?[0] as usize;
                let mut a = DMatrix::zeros(r, n);
                for i in 0..r {
                    let row = lines.numbers("a", Some(n))?;
                    for (j, v) in row.into_iter().enumerate() {
                        a[(i, j)] = v;
                    }
                }
                let b = DVector::from_vec(lines.numbers("b", Some(r))?);
                let c = DVector::from_vec(lines.numbers("c", Some(n))?);
                let d = lines.numbers("d", Some(1))?[0];
                cones.push(SocCone { a, b, c, d });
            }
            Some("end") => break,
            other => return Err(Error::Parse(format!("expected `cone` or `end`, found {other:?}"))),
        }
    }
    let problem = SocpProblem {
        objective: Objective { center, linear },
        cones,
    };
    problem.validate()?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SocpProblem {
        SocpProblem::proximal(
            DVector::from_row_slice(&[0.1, -2.0]),
            vec![
                SocCone {
                    a: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.25, 3.0]),
                    b: DVector::from_row_slice(&[1e-9, 0.0]),
                    c: DVector::from_row_slice(&[0.0, 1.0]),
                    d: 2.5,
                },
                SocCone {
                    a: DMatrix::zeros(0, 2),
                    b: DVector::zeros(0),
                    c: DVector::from_row_slice(&[1.0, 0.0]),
                    d: 0.0,
                },
            ],
        )
    }

    #[test]
    fn round_trip() {
        let p = sample();
        let text = to_text(&p);
        assert!(text.starts_with("socp v1\ndim 2\n"));
        assert_eq!(from_text(&text).unwrap(), p);
    }

    #[test]
    fn rejects_wrong_counts() {
        let text = to_text(&sample()).replace("c 0e0 1e0", "c 0e0");
        assert!(matches!(from_text(&text), Err(Error::Parse(_))));
        assert!(from_text("socp v2\n").is_err());
    }
}
