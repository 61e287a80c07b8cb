//! Tau functions on a finite charge window.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::charge::ChargeVector;
use crate::series::{Aux, AuxLaurent, FormalSeries, Monomial, SeriesError, Var, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TauError {
    #[error("charge {0} outside the window")]
    OutsideWindow(ChargeVector),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("invalid tau model: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauFunction {
    n: usize,
    max_time_index: u32,
    cutoff: i32,
    radius: i32,
    window: BTreeMap<ChargeVector, FormalSeries>,
}

impl TauFunction {
    /// Builds a model; every series must have constant term 1 after scaling.
    pub fn new(
        n: usize,
        max_time_index: u32,
        cutoff: i32,
        radius: i32,
        window: BTreeMap<ChargeVector, FormalSeries>,
    ) -> Result<TauFunction, TauError> {
        for (s, f) in &window {
            if s.n() != n || s.radius() > radius {
                return Err(TauError::Invalid(format!(
                    "charge {s} does not fit N={n}, radius {radius}"
                )));
            }
            if f.constant_term().is_zero() {
                return Err(TauError::Series(SeriesError::NonUnit(format!(
                    "tau at {s}"
                ))));
            }
            if f.cutoff() != cutoff {
                return Err(TauError::Invalid(format!("cutoff mismatch at {s}")));
            }
            for (m, _) in f.terms() {
                for (v, _) in m.vars() {
                    match v {
                        Var::Time { comp, index } if comp < n && index <= max_time_index => {}
                        _ => {
                            return Err(TauError::Invalid(format!(
                                "variable {v} outside the model at {s}"
                            )))
                        }
                    }
                }
            }
        }
        Ok(TauFunction {
            n,
            max_time_index,
            cutoff,
            radius,
            window,
        })
    }

    /// Same series at every charge of the box.
    pub fn uniform(
        n: usize,
        max_time_index: u32,
        cutoff: i32,
        radius: i32,
        f: &FormalSeries,
    ) -> TauFunction {
        let window = ChargeVector::box_of(n, radius)
            .into_iter()
            .map(|s| (s, f.clone()))
            .collect();
        TauFunction {
            n,
            max_time_index,
            cutoff,
            radius,
            window,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_time_index(&self) -> u32 {
        self.max_time_index
    }

    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    pub fn radius(&self) -> i32 {
        self.radius
    }

    pub fn charges(&self) -> impl Iterator<Item = &ChargeVector> {
        self.window.keys()
    }

    pub fn contains(&self, s: &ChargeVector) -> bool {
        self.window.contains_key(s)
    }

    pub fn tau_at(&self, s: &ChargeVector) -> Result<&FormalSeries, TauError> {
        self.window
            .get(s)
            .ok_or_else(|| TauError::OutsideWindow(s.clone()))
    }

    /// `τ(s, t + sign·[var^{-1}]_γ)` as a flat series.
    pub fn shifted(
        &self,
        s: &ChargeVector,
        gamma: usize,
        var: Aux,
        sign: i32,
    ) -> Result<FormalSeries, TauError> {
        Ok(self.tau_at(s)?.miwa_shifted(gamma, var, sign))
    }

    pub fn tau_miwa(
        &self,
        s: &ChargeVector,
        gamma: usize,
        var: Aux,
        sign: i32,
    ) -> Result<AuxLaurent, TauError> {
        Ok(AuxLaurent::from_series(
            &self.shifted(s, gamma, var, sign)?,
            var,
        ))
    }

    /// `∂_{t_{κ1}} log τ(s)`.
    pub fn dlog_t1(&self, s: &ChargeVector, kappa: usize) -> Result<FormalSeries, TauError> {
        let f = self.tau_at(s)?;
        Ok(&f.derive(Var::t(kappa, 1)) * &f.inverse()?)
    }

    /// Replaces the series at one charge.
    pub fn with_series(&self, s: &ChargeVector, f: FormalSeries) -> Result<TauFunction, TauError> {
        if !self.contains(s) {
            return Err(TauError::OutsideWindow(s.clone()));
        }
        let mut out = self.clone();
        out.window.insert(s.clone(), f);
        Ok(out)
    }

    /// Adds `delta` to one coefficient; the standard fault injection.
    pub fn perturbed(
        &self,
        s: &ChargeVector,
        m: &Monomial,
        delta: &Q,
    ) -> Result<TauFunction, TauError> {
        let f = self.tau_at(s)?.perturbed(m, delta);
        self.with_series(s, f)
    }

    pub fn truncated(&self, cutoff: i32) -> TauFunction {
        TauFunction {
            n: self.n,
            max_time_index: self.max_time_index,
            cutoff,
            radius: self.radius,
            window: self
                .window
                .iter()
                .map(|(s, f)| (s.clone(), f.with_cutoff(cutoff)))
                .collect(),
        }
    }

    /// Text serialization: header, then one block per charge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mkp-tau 1");
        let _ = writeln!(out, "N {}", self.n);
        let _ = writeln!(out, "J {}", self.max_time_index);
        let _ = writeln!(out, "d {}", self.cutoff);
        let _ = writeln!(out, "S_box {}", self.radius);
        for (s, f) in &self.window {
            let entries: Vec<String> = s.0.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "charge {}", entries.join(" "));
            for (m, c) in f.terms() {
                let _ = writeln!(out, "{m} {c}");
            }
            let _ = writeln!(out, "end");
        }
        out
    }

    pub fn parse(text: &str) -> Result<TauFunction, TauError> {
        let mut p = Parser {
            lines: text.lines().enumerate().collect(),
            pos: 0,
        };
        p.expect_words(&["mkp-tau", "1"])?;
        let n = p.header("N")? as usize;
        let j = p.header("J")? as u32;
        let d = p.header("d")? as i32;
        let radius = p.header("S_box")? as i32;
        if n == 0 || n > 16 || j == 0 || j > 255 {
            return Err(p.err(1, "header values out of range"));
        }
        let mut window = BTreeMap::new();
        while let Some((ln, line)) = p.next_nonempty() {
            let mut words = line.split_whitespace();
            if words.next() != Some("charge") {
                return Err(TauError::Parse {
                    line: ln + 1,
                    col: 1,
                    msg: "expected 'charge'".into(),
                });
            }
            let mut s = Vec::new();
            for w in words {
                let col = column_of(line, w);
                s.push(w.parse::<i32>().map_err(|_| TauError::Parse {
                    line: ln + 1,
                    col,
                    msg: format!("bad charge entry '{w}'"),
                })?);
            }
            if s.len() != n || s.iter().sum::<i32>() != 0 {
                return Err(TauError::Parse {
                    line: ln + 1,
                    col: 1,
                    msg: "charge must have N entries summing to 0".into(),
                });
            }
            let mut terms = Vec::new();
            loop {
                let Some((ln, line)) = p.next_nonempty() else {
                    return Err(TauError::Parse {
                        line: p.lines.len() + 1,
                        col: 1,
                        msg: "unexpected end of input inside a charge block".into(),
                    });
                };
                let trimmed = line.trim();
                if trimmed == "end" {
                    break;
                }
                let mut parts = trimmed.split_whitespace();
                let (Some(mw), Some(cw), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(TauError::Parse {
                        line: ln + 1,
                        col: 1,
                        msg: "expected '<monomial> <p/q>'".into(),
                    });
                };
                let m = parse_monomial(mw, n, j).map_err(|msg| TauError::Parse {
                    line: ln + 1,
                    col: column_of(line, mw),
                    msg,
                })?;
                let c: Q = cw.parse().map_err(|_| TauError::Parse {
                    line: ln + 1,
                    col: column_of(line, cw),
                    msg: format!("bad rational '{cw}'"),
                })?;
                terms.push((m, c));
            }
            window.insert(ChargeVector(s), FormalSeries::from_terms(terms, d, d));
        }
        TauFunction::new(n, j, d, radius, window)
    }

    /// One line per charge with its lowest-weight nonzero coefficients.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "N={} J={} d={} S_box={} charges={}",
            self.n,
            self.max_time_index,
            self.cutoff,
            self.radius,
            self.window.len()
        );
        if self
            .window
            .values()
            .all(|f| f.len() == 1 && f.constant_term().is_one())
        {
            let _ = writeln!(out, "all charges: 1");
            return out;
        }
        for (s, f) in &self.window {
            let shown: Vec<String> = f
                .terms()
                .filter(|(m, _)| !m.is_one())
                .take(4)
                .map(|(m, c)| format!("{c}*{m}"))
                .collect();
            let _ = writeln!(out, "{s}: {} terms; {}", f.len(), shown.join(", "));
        }
        out
    }
}

fn column_of(line: &str, word: &str) -> usize {
    word.as_ptr() as usize - line.as_ptr() as usize + 1
}

fn parse_monomial(w: &str, n: usize, j_max: u32) -> Result<Monomial, String> {
    if w == "1" {
        return Ok(Monomial::one());
    }
    let mut m = Monomial::one();
    for factor in w.split('*') {
        let (base, exp) = match factor.split_once('^') {
            Some((b, e)) => (
                b,
                e.parse::<i32>()
                    .map_err(|_| format!("bad exponent in '{factor}'"))?,
            ),
            None => (factor, 1),
        };
        let rest = base
            .strip_prefix('t')
            .ok_or_else(|| format!("unknown variable '{base}'"))?;
        let (a, j) = rest
            .split_once('_')
            .ok_or_else(|| format!("bad variable '{base}'"))?;
        let a: usize = a
            .parse()
            .map_err(|_| format!("bad component in '{base}'"))?;
        let j: u32 = j.parse().map_err(|_| format!("bad index in '{base}'"))?;
        if a == 0 || a > n || j == 0 || j > j_max || exp <= 0 {
            return Err(format!("variable '{factor}' outside the model"));
        }
        m = m.mul(&Monomial::var(Var::t(a - 1, j), exp));
    }
    Ok(m)
}

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn next_nonempty(&mut self) -> Option<(usize, &'a str)> {
        while self.pos < self.lines.len() {
            let (ln, line) = self.lines[self.pos];
            self.pos += 1;
            if !line.trim().is_empty() && !line.trim_start().starts_with('#') {
                return Some((ln, line));
            }
        }
        None
    }

    fn err(&self, line: usize, msg: &str) -> TauError {
        TauError::Parse {
            line,
            col: 1,
            msg: msg.into(),
        }
    }

    fn expect_words(&mut self, words: &[&str]) -> Result<(), TauError> {
        let Some((ln, line)) = self.next_nonempty() else {
            return Err(self.err(1, "empty input"));
        };
        let got: Vec<&str> = line.split_whitespace().collect();
        if got != words {
            return Err(self.err(ln + 1, &format!("expected '{}'", words.join(" "))));
        }
        Ok(())
    }

    fn header(&mut self, key: &str) -> Result<i64, TauError> {
        let Some((ln, line)) = self.next_nonempty() else {
            return Err(self.err(self.lines.len() + 1, &format!("missing header '{key}'")));
        };
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(ln + 1, &format!("expected header '{key}'")));
        }
        let v = it.next().ok_or_else(|| self.err(ln + 1, "missing value"))?;
        v.parse::<i64>().map_err(|_| TauError::Parse {
            line: ln + 1,
            col: column_of(line, v),
            msg: format!("bad integer '{v}'"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::q;

    fn cv(v: &[i32]) -> ChargeVector {
        ChargeVector(v.to_vec())
    }

    #[test]
    fn vacuum_lookups() {
        let t = TauFunction::uniform(2, 3, 3, 1, &FormalSeries::one(3));
        assert_eq!(t.tau_at(&cv(&[1, -1])).unwrap(), &FormalSeries::one(3));
        assert_eq!(
            t.tau_at(&cv(&[2, -2])),
            Err(TauError::OutsideWindow(cv(&[2, -2])))
        );
        assert_eq!(
            t.shifted(&cv(&[0, 0]), 0, Aux::Z, -1).unwrap(),
            FormalSeries::one(3)
        );
        assert!(t.dlog_t1(&cv(&[0, 0]), 1).unwrap().is_empty());
    }

    #[test]
    fn single_shift() {
        let d = 3;
        let f = &FormalSeries::one(d) + &FormalSeries::var(Var::t(0, 1), d);
        let t = TauFunction::uniform(1, 3, d, 0, &f);
        let shifted = t.shifted(&cv(&[0]), 0, Aux::Z, -1).unwrap();
        let expect = &f - &FormalSeries::aux_power(Aux::Z, -1, d);
        assert_eq!(shifted, expect);
        // setting z^{-1} -> 0 recovers τ
        assert_eq!(shifted.coeff_of(Aux::Z, 0), f);
    }

    #[test]
    fn dlog_of_exponential() {
        let d = 4;
        let f = FormalSeries::var(Var::t(0, 1), d).exp_jet().unwrap();
        let t = TauFunction::uniform(2, 2, d, 0, &f);
        let one = t.dlog_t1(&cv(&[0, 0]), 0).unwrap();
        assert_eq!(one.trusted_terms(), vec![(Monomial::one(), q(1))]);
        assert!(t.dlog_t1(&cv(&[0, 0]), 1).unwrap().is_empty());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let d = 3;
        let f = &FormalSeries::one(d)
            + &(&FormalSeries::var(Var::t(0, 1), d) * &FormalSeries::var(Var::t(1, 2), d))
                .scale(&crate::series::qf(-3, 4));
        let t = TauFunction::uniform(2, 2, d, 1, &f);
        let text = t.to_text();
        assert_eq!(TauFunction::parse(&text).unwrap(), t);
        let cut = &text[..text.len() - 5];
        assert!(matches!(
            TauFunction::parse(cut),
            Err(TauError::Parse { .. })
        ));
        let bad = text.replace("t2_2", "t5_2");
        match TauFunction::parse(&bad) {
            Err(TauError::Parse { col, .. }) => assert_eq!(col, 1),
            other => panic!("{other:?}"),
        }
        let vac = TauFunction::uniform(2, 2, d, 1, &FormalSeries::one(d));
        assert!(vac.describe().contains("all charges: 1"));
    }
}
