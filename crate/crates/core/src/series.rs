//! Truncated formal series over the rationals.
//!
//! A single graded ring carries the time variables `t_{αj}` (weight `j`) and
//! the auxiliary spectral variables `z, λ, μ, ν` together with the symbol `D`
//! of the pseudodifferential calculus. Auxiliary exponents may be negative and
//! every auxiliary exponent `e` contributes weight `-e`, so a Miwa shift
//! `t_{γj} -> t_{γj} ∓ z^{-j}/j` is homogeneous.
//!
//! Terms of total weight above the cutoff `d` are dropped. The trusted order
//! `T` records the weight up to which stored coefficients are exact.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("series is not a unit: constant term {0}")]
    NonUnit(String),
    #[error("bad constant term for {0}")]
    BadConstantTerm(&'static str),
    #[error("exponent range too narrow for residue (floor {0})")]
    RangeTooNarrow(i32),
}

/// Auxiliary spectral variables and the operator symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Aux {
    Z,
    Lambda,
    Mu,
    Nu,
    D,
}

impl Aux {
    pub const ALL: [Aux; 5] = [Aux::Z, Aux::Lambda, Aux::Mu, Aux::Nu, Aux::D];

    fn id(self) -> u16 {
        self as u16
    }

    fn from_id(id: u16) -> Aux {
        Aux::ALL[id as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            Aux::Z => "z",
            Aux::Lambda => "lambda",
            Aux::Mu => "mu",
            Aux::Nu => "nu",
            Aux::D => "D",
        }
    }
}

/// A ring variable. Components are zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Aux(Aux),
    Time { comp: usize, index: u32 },
}

impl Var {
    pub fn t(comp: usize, index: u32) -> Var {
        Var::Time { comp, index }
    }

    fn id(self) -> u16 {
        match self {
            Var::Aux(a) => a.id(),
            Var::Time { comp, index } => {
                debug_assert!(comp < 255 && (1..256).contains(&index));
                (((comp + 1) as u16) << 8) | index as u16
            }
        }
    }

    fn from_id(id: u16) -> Var {
        if id < 256 {
            Var::Aux(Aux::from_id(id))
        } else {
            Var::Time {
                comp: (id >> 8) as usize - 1,
                index: (id & 0xff) as u32,
            }
        }
    }

    fn weight_of_id(id: u16) -> i32 {
        if id < 256 {
            -1
        } else {
            (id & 0xff) as i32
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Aux(a) => write!(f, "{}", a.name()),
            Var::Time { comp, index } => write!(f, "t{}_{}", comp + 1, index),
        }
    }
}

/// Sparse exponent vector, sorted by variable id, no zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(u16, i32)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn var(v: Var, e: i32) -> Monomial {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v.id(), e)])
        }
    }

    pub fn from_vars<I: IntoIterator<Item = (Var, i32)>>(vars: I) -> Monomial {
        let mut m = Monomial::one();
        for (v, e) in vars {
            m = m.mul(&Monomial::var(v, e));
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> i32 {
        self.0
            .iter()
            .map(|&(id, e)| Var::weight_of_id(id) * e)
            .sum()
    }

    pub fn exponent(&self, v: Var) -> i32 {
        let id = v.id();
        self.0.iter().find(|(i, _)| *i == id).map_or(0, |&(_, e)| e)
    }

    pub fn vars(&self) -> impl Iterator<Item = (Var, i32)> + '_ {
        self.0.iter().map(|&(id, e)| (Var::from_id(id), e))
    }

    pub fn has_aux(&self) -> bool {
        self.0.iter().any(|&(id, _)| id < 256)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Sets the exponent of `v`, removing it when zero.
    pub fn with_exponent(&self, v: Var, e: i32) -> Monomial {
        let id = v.id();
        let mut out: Vec<(u16, i32)> = self.0.iter().copied().filter(|(i, _)| *i != id).collect();
        if e != 0 {
            let pos = out.partition_point(|(i, _)| *i < id);
            out.insert(pos, (id, e));
        }
        Monomial(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        // time variables first, then auxiliaries, for readability
        let ordered = self
            .vars()
            .filter(|(v, _)| matches!(v, Var::Time { .. }))
            .chain(self.vars().filter(|(v, _)| matches!(v, Var::Aux(_))));
        for (v, e) in ordered {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Truncated series with exact rational coefficients and a trusted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalSeries {
    terms: BTreeMap<Monomial, Q>,
    trusted: i32,
    cutoff: i32,
}

fn lower_bound(s: &FormalSeries) -> i32 {
    s.min_weight()
        .map_or(s.trusted + 1, |w| w.min(s.trusted + 1))
}

impl FormalSeries {
    pub fn zero(cutoff: i32) -> FormalSeries {
        FormalSeries {
            terms: BTreeMap::new(),
            trusted: cutoff,
            cutoff,
        }
    }

    pub fn one(cutoff: i32) -> FormalSeries {
        FormalSeries::constant(Q::one(), cutoff)
    }

    pub fn constant(c: Q, cutoff: i32) -> FormalSeries {
        FormalSeries::term(Monomial::one(), c, cutoff)
    }

    /// Exact single term; dropped if its weight exceeds the cutoff.
    pub fn term(m: Monomial, c: Q, cutoff: i32) -> FormalSeries {
        let mut s = FormalSeries::zero(cutoff);
        if !c.is_zero() && m.weight() <= cutoff {
            s.terms.insert(m, c);
        }
        s
    }

    pub fn var(v: Var, cutoff: i32) -> FormalSeries {
        FormalSeries::term(Monomial::var(v, 1), Q::one(), cutoff)
    }

    pub fn aux_power(a: Aux, e: i32, cutoff: i32) -> FormalSeries {
        FormalSeries::term(Monomial::var(Var::Aux(a), e), Q::one(), cutoff)
    }

    /// Builds a series from terms; terms above the cutoff are dropped.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, Q)>>(
        terms: I,
        cutoff: i32,
        trusted: i32,
    ) -> FormalSeries {
        let mut s = FormalSeries {
            terms: BTreeMap::new(),
            trusted: trusted.min(cutoff),
            cutoff,
        };
        for (m, c) in terms {
            if m.weight() <= cutoff {
                s.add_term(m, c);
            }
        }
        s
    }

    fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    pub fn trusted_order(&self) -> i32 {
        self.trusted
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&Monomial::one())
    }

    pub fn min_weight(&self) -> Option<i32> {
        self.terms.keys().map(Monomial::weight).min()
    }

    /// Lowers the trusted order to at most `t`.
    pub fn cap_trust(mut self, t: i32) -> FormalSeries {
        self.trusted = self.trusted.min(t);
        self
    }

    /// Re-truncates at a smaller cutoff.
    pub fn with_cutoff(&self, cutoff: i32) -> FormalSeries {
        FormalSeries::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.weight() <= cutoff)
                .map(|(m, c)| (m.clone(), c.clone())),
            cutoff,
            self.trusted.min(cutoff),
        )
    }

    /// Nonzero coefficients at weight ≤ trusted order.
    pub fn trusted_terms(&self) -> Vec<(Monomial, Q)> {
        self.terms
            .iter()
            .filter(|(m, _)| m.weight() <= self.trusted)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect()
    }

    /// Terms of exactly weight `w`.
    pub fn weight_part(&self, w: i32) -> Vec<(Monomial, Q)> {
        self.terms
            .iter()
            .filter(|(m, _)| m.weight() == w)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect()
    }

    pub fn scale(&self, c: &Q) -> FormalSeries {
        if c.is_zero() {
            return FormalSeries::zero(self.cutoff).cap_trust(self.trusted);
        }
        FormalSeries {
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
            trusted: self.trusted,
            cutoff: self.cutoff,
        }
    }

    /// Multiplies by an exact monomial.
    pub fn mul_monomial(&self, m: &Monomial) -> FormalSeries {
        let w = m.weight();
        FormalSeries::from_terms(
            self.terms.iter().map(|(k, c)| (k.mul(m), c.clone())),
            self.cutoff,
            (self.trusted + w).min(self.cutoff),
        )
    }

    pub fn mul_aux(&self, a: Aux, e: i32) -> FormalSeries {
        self.mul_monomial(&Monomial::var(Var::Aux(a), e))
    }

    fn combine(&self, other: &FormalSeries, sign: bool) -> FormalSeries {
        let cutoff = self.cutoff.min(other.cutoff);
        let mut out = if cutoff == self.cutoff {
            self.clone()
        } else {
            self.with_cutoff(cutoff)
        };
        out.trusted = self.trusted.min(other.trusted).min(cutoff);
        for (m, c) in &other.terms {
            if m.weight() <= cutoff {
                out.add_term(m.clone(), if sign { c.clone() } else { -c.clone() });
            }
        }
        out
    }

    /// Trusted order of `self · other` under the product rule.
    pub fn product_trust(&self, other: &FormalSeries) -> i32 {
        (self.trusted + lower_bound(other))
            .min(other.trusted + lower_bound(self))
            .min(self.cutoff.min(other.cutoff))
    }

    fn product(&self, other: &FormalSeries) -> FormalSeries {
        let cutoff = self.cutoff.min(other.cutoff);
        let trusted = self.product_trust(other);
        let mut b: Vec<(i32, &Monomial, &Q)> = other
            .terms
            .iter()
            .map(|(m, c)| (m.weight(), m, c))
            .collect();
        b.sort_by_key(|x| x.0);
        let mut acc: HashMap<Monomial, Q> = HashMap::new();
        for (ma, ca) in &self.terms {
            let wa = ma.weight();
            for &(wb, mb, cb) in &b {
                if wa + wb > cutoff {
                    break;
                }
                let m = ma.mul(mb);
                let c = ca * cb;
                match acc.get_mut(&m) {
                    Some(x) => *x += c,
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        FormalSeries {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            trusted,
            cutoff,
        }
    }

    /// Multiplicative inverse of a unit: nonzero constant plus terms of weight ≥ 1.
    pub fn inverse(&self) -> Result<FormalSeries, SeriesError> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(SeriesError::NonUnit(c0.to_string()));
        }
        let mut rest = self.clone();
        rest.terms.remove(&Monomial::one());
        if rest.min_weight().is_some_and(|w| w < 1) {
            return Err(SeriesError::NonUnit(format!("{c0} with weight ≤ 0 terms")));
        }
        let inv0 = c0.recip();
        // r = rest / c0; 1/(c0 (1 + r)) = inv0 Σ (-r)^k
        let neg_r = rest.scale(&-inv0.clone());
        let mut sum = FormalSeries::one(self.cutoff);
        let mut power = FormalSeries::one(self.cutoff);
        for _ in 0..self.cutoff.max(0) {
            power = &power * &neg_r;
            if power.is_empty() {
                break;
            }
            sum = &sum + &power;
        }
        let mut out = sum.scale(&inv0);
        out.trusted = self.trusted.min(self.cutoff);
        Ok(out)
    }

    /// Partial derivative in one variable. Time variables lower trust by their
    /// weight; auxiliary variables raise weight by one.
    pub fn derive(&self, v: Var) -> FormalSeries {
        let mut out = FormalSeries::zero(self.cutoff);
        out.trusted = (self.trusted - Var::weight_of_id(v.id())).min(self.cutoff);
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e != 0 {
                let nm = m.with_exponent(v, e - 1);
                if nm.weight() <= self.cutoff {
                    out.add_term(nm, c * q(e as i64));
                }
            }
        }
        out
    }

    /// `∂ = Σ_κ ∂/∂t_{κ1}` acting on time variables only.
    pub fn d_total(&self) -> FormalSeries {
        let mut out = FormalSeries::zero(self.cutoff);
        out.trusted = (self.trusted - 1).min(self.cutoff);
        for (m, c) in &self.terms {
            for (v, e) in m.vars() {
                if let Var::Time { index: 1, .. } = v {
                    out.add_term(m.with_exponent(v, e - 1), c * q(e as i64));
                }
            }
        }
        out
    }

    pub fn exp_jet(&self) -> Result<FormalSeries, SeriesError> {
        if !self.constant_term().is_zero() || self.min_weight().is_some_and(|w| w < 1) {
            return Err(SeriesError::BadConstantTerm("exp"));
        }
        let mut sum = FormalSeries::one(self.cutoff);
        let mut power = FormalSeries::one(self.cutoff);
        for k in 1..=self.cutoff.max(0) {
            power = (&power * self).scale(&qf(1, k as i64));
            if power.is_empty() {
                break;
            }
            sum = &sum + &power;
        }
        sum.trusted = self.trusted.min(self.cutoff);
        Ok(sum)
    }

    pub fn log_jet(&self) -> Result<FormalSeries, SeriesError> {
        let mut g = self.clone();
        if !g.constant_term().is_one() {
            return Err(SeriesError::BadConstantTerm("log"));
        }
        g.terms.remove(&Monomial::one());
        if g.min_weight().is_some_and(|w| w < 1) {
            return Err(SeriesError::BadConstantTerm("log"));
        }
        let mut sum = FormalSeries::zero(self.cutoff);
        let mut power = FormalSeries::one(self.cutoff);
        for k in 1..=self.cutoff.max(0) {
            power = &power * &g;
            if power.is_empty() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            sum = &sum + &power.scale(&qf(sign, k as i64));
        }
        sum.trusted = self.trusted.min(self.cutoff);
        Ok(sum)
    }

    /// Substitutes `t_{γj} -> t_{γj} + sign·var^{-j}/j` for every `j`.
    pub fn miwa_shifted(&self, gamma: usize, var: Aux, sign: i32) -> FormalSeries {
        let mut acc: HashMap<Monomial, Q> = HashMap::new();
        for (m, c) in &self.terms {
            // split m into the γ-time part and the rest
            let mut rest = Monomial::one();
            let mut shifted: Vec<(u32, i32)> = Vec::new();
            for (v, e) in m.vars() {
                match v {
                    Var::Time { comp, index } if comp == gamma => shifted.push((index, e)),
                    _ => rest = rest.mul(&Monomial::var(v, e)),
                }
            }
            let mut partial: Vec<(Monomial, Q)> = vec![(rest, c.clone())];
            for (j, e) in shifted {
                let tv = Var::t(gamma, j);
                let delta = qf(sign as i64, j as i64);
                let mut next = Vec::new();
                let mut binom = BigInt::one();
                for k in 0..=e {
                    let factor = Q::from_integer(binom.clone()) * pow_q(&delta, k as u32);
                    let mono = Monomial::var(tv, e - k)
                        .mul(&Monomial::var(Var::Aux(var), -(j as i32) * k));
                    for (pm, pc) in &partial {
                        next.push((pm.mul(&mono), pc * &factor));
                    }
                    binom = binom * BigInt::from(e - k) / BigInt::from(k + 1);
                }
                partial = next;
            }
            for (pm, pc) in partial {
                *acc.entry(pm).or_insert_with(Q::zero) += pc;
            }
        }
        FormalSeries {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            trusted: self.trusted,
            cutoff: self.cutoff,
        }
    }

    /// Coefficient of `var^e`, with `var` removed.
    pub fn coeff_of(&self, var: Aux, e: i32) -> FormalSeries {
        let v = Var::Aux(var);
        FormalSeries::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.exponent(v) == e)
                .map(|(m, c)| (m.with_exponent(v, 0), c.clone())),
            self.cutoff,
            (self.trusted + e).min(self.cutoff),
        )
    }

    /// Splits by powers of `var`.
    pub fn split(&self, var: Aux) -> BTreeMap<i32, FormalSeries> {
        let v = Var::Aux(var);
        let mut out: BTreeMap<i32, FormalSeries> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            out.entry(e)
                .or_insert_with(|| {
                    FormalSeries::zero(self.cutoff).cap_trust((self.trusted + e).min(self.cutoff))
                })
                .add_term(m.with_exponent(v, 0), c.clone());
        }
        out
    }

    pub fn aux_range(&self, var: Aux) -> Option<(i32, i32)> {
        let v = Var::Aux(var);
        let mut it = self.terms.keys().map(|m| m.exponent(v));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), e| (lo.min(e), hi.max(e))))
    }

    /// Renames one auxiliary variable to another.
    pub fn rename_aux(&self, from: Aux, to: Aux) -> FormalSeries {
        let (vf, vt) = (Var::Aux(from), Var::Aux(to));
        FormalSeries::from_terms(
            self.terms.iter().map(|(m, c)| {
                let e = m.exponent(vf);
                let base = m.with_exponent(vf, 0);
                (base.mul(&Monomial::var(vt, e)), c.clone())
            }),
            self.cutoff,
            self.trusted,
        )
    }

    /// Maps every coefficient through `f`, keeping cutoff and trust.
    pub fn map_terms<F: Fn(&Monomial, &Q) -> Option<(Monomial, Q)>>(&self, f: F) -> FormalSeries {
        FormalSeries::from_terms(
            self.terms.iter().filter_map(|(m, c)| f(m, c)),
            self.cutoff,
            self.trusted,
        )
    }

    /// Mutates one coefficient in place; used to inject faults.
    pub fn perturbed(&self, m: &Monomial, delta: &Q) -> FormalSeries {
        let mut out = self.clone();
        out.add_term(m.clone(), delta.clone());
        out
    }
}

pub fn pow_q(x: &Q, k: u32) -> Q {
    let mut r = Q::one();
    for _ in 0..k {
        r *= x;
    }
    r
}

/// Generalized binomial coefficient C(m, k) for integer `m`.
pub fn binomial(m: i64, k: u32) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k as i64 {
        num *= BigInt::from(m - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

impl<'a> Add<&'a FormalSeries> for &'a FormalSeries {
    type Output = FormalSeries;
    fn add(self, rhs: &FormalSeries) -> FormalSeries {
        self.combine(rhs, true)
    }
}

impl<'a> Sub<&'a FormalSeries> for &'a FormalSeries {
    type Output = FormalSeries;
    fn sub(self, rhs: &FormalSeries) -> FormalSeries {
        self.combine(rhs, false)
    }
}

impl<'a> Mul<&'a FormalSeries> for &'a FormalSeries {
    type Output = FormalSeries;
    fn mul(self, rhs: &FormalSeries) -> FormalSeries {
        self.product(rhs)
    }
}

impl Neg for &FormalSeries {
    type Output = FormalSeries;
    fn neg(self) -> FormalSeries {
        self.scale(&-Q::one())
    }
}

impl Add for FormalSeries {
    type Output = FormalSeries;
    fn add(self, rhs: FormalSeries) -> FormalSeries {
        &self + &rhs
    }
}

impl Sub for FormalSeries {
    type Output = FormalSeries;
    fn sub(self, rhs: FormalSeries) -> FormalSeries {
        &self - &rhs
    }
}

impl Mul for FormalSeries {
    type Output = FormalSeries;
    fn mul(self, rhs: FormalSeries) -> FormalSeries {
        &self * &rhs
    }
}

impl fmt::Display for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let (sign, mag) = if c.is_negative() {
                ("-", -c)
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Sum of products, each factor a series; a convenience for identity assembly.
pub fn sum_of_products(cutoff: i32, terms: &[(Q, Vec<&FormalSeries>)]) -> FormalSeries {
    let mut acc = FormalSeries::zero(cutoff);
    for (c, factors) in terms {
        let mut p = FormalSeries::constant(c.clone(), cutoff);
        for f in factors {
            p = &p * f;
        }
        acc = &acc + &p;
    }
    acc
}

/// Laurent view of a series in one auxiliary variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxLaurent {
    pub var: Aux,
    pub floor: i32,
    pub ceiling: i32,
    pub coeffs: BTreeMap<i32, FormalSeries>,
}

impl AuxLaurent {
    /// Exponents are kept in `[-floor, ceiling]`; the floor defaults to the
    /// deepest exponent a weight-bounded series can reach.
    pub fn from_series(s: &FormalSeries, var: Aux) -> AuxLaurent {
        let coeffs = s.split(var);
        let lo = coeffs.keys().next().copied().unwrap_or(0);
        let hi = coeffs.keys().last().copied().unwrap_or(0);
        AuxLaurent {
            var,
            floor: (-lo).max(s.cutoff()).max(0),
            ceiling: hi.max(0),
            coeffs,
        }
    }

    pub fn with_range(mut self, floor: i32, ceiling: i32) -> AuxLaurent {
        self.floor = floor;
        self.ceiling = ceiling;
        self.coeffs.retain(|e, _| -floor <= *e && *e <= ceiling);
        self
    }

    pub fn coeff(&self, e: i32) -> Option<&FormalSeries> {
        self.coeffs.get(&e)
    }

    pub fn to_series(&self, cutoff: i32) -> FormalSeries {
        let mut acc = FormalSeries::zero(cutoff);
        for (e, c) in &self.coeffs {
            acc = &acc + &c.mul_aux(self.var, *e);
        }
        acc
    }

    pub fn residue(&self, cutoff: i32) -> Result<FormalSeries, SeriesError> {
        if self.floor < 1 {
            return Err(SeriesError::RangeTooNarrow(self.floor));
        }
        Ok(self
            .coeffs
            .get(&-1)
            .cloned()
            .unwrap_or_else(|| FormalSeries::zero(cutoff)))
    }
}

/// Miwa shift returned in the Laurent view of `var`.
pub fn miwa_shift(a: &FormalSeries, gamma: usize, var: Aux, sign: i32) -> AuxLaurent {
    AuxLaurent::from_series(&a.miwa_shifted(gamma, var, sign), var)
}

/// `(1 - small/big)^{power}` for `power = ±1`, the geometric side summed to `k_max`.
pub fn binomial_expand(small: Aux, big: Aux, power: i32, k_max: u32, cutoff: i32) -> FormalSeries {
    let ratio = |k: i32| Monomial::var(Var::Aux(small), k).mul(&Monomial::var(Var::Aux(big), -k));
    if power == 1 {
        return FormalSeries::from_terms(
            [(Monomial::one(), q(1)), (ratio(1), q(-1))],
            cutoff,
            cutoff,
        );
    }
    assert_eq!(power, -1, "binomial_expand supports power ±1");
    FormalSeries::from_terms((0..=k_max as i32).map(|k| (ratio(k), q(1))), cutoff, cutoff)
}

/// Residue in `z`: the coefficient of `z^{-1}`.
pub fn residue_z(s: &FormalSeries) -> FormalSeries {
    s.coeff_of(Aux::Z, -1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: usize, j: u32, d: i32) -> FormalSeries {
        FormalSeries::var(Var::t(a, j), d)
    }

    fn c(n: i64, d: i32) -> FormalSeries {
        FormalSeries::constant(q(n), d)
    }

    #[test]
    fn product_of_conjugates() {
        let d = 4;
        let a = &c(1, d) + &t(0, 1, d);
        let b = &c(1, d) - &t(0, 1, d);
        let t2 = &t(0, 1, d) * &t(0, 1, d);
        assert_eq!(&a * &b, &c(1, d) - &t2);
        assert_eq!(&a + &FormalSeries::zero(d), a);
    }

    #[test]
    fn truncation_drops_heavy_terms() {
        let p = &t(0, 2, 2) * &t(1, 1, 2);
        assert!(p.is_empty());
    }

    #[test]
    fn geometric_inverse() {
        let d = 4;
        let a = &c(1, d) + &t(0, 1, d);
        let inv = a.inverse().unwrap();
        for k in 0..=4u32 {
            let m = Monomial::var(Var::t(0, 1), k as i32);
            let expect = if k % 2 == 0 { q(1) } else { q(-1) };
            assert_eq!(inv.coeff(&m), expect);
        }
        assert!(matches!(
            FormalSeries::zero(d).inverse(),
            Err(SeriesError::NonUnit(_))
        ));
    }

    #[test]
    fn exp_taylor() {
        let e = t(0, 1, 3).exp_jet().unwrap();
        let x = Var::t(0, 1);
        assert_eq!(e.coeff(&Monomial::var(x, 3)), qf(1, 6));
        assert_eq!(e.coeff(&Monomial::var(x, 2)), qf(1, 2));
        assert_eq!(e.len(), 4);
        assert_eq!(c(1, 3).exp_jet(), Err(SeriesError::BadConstantTerm("exp")));
        assert_eq!(c(2, 3).log_jet(), Err(SeriesError::BadConstantTerm("log")));
    }

    #[test]
    fn derivative_lowers_trust() {
        let d = 5;
        let s = &t(0, 1, d) * &t(0, 1, d);
        let ds = s.derive(Var::t(0, 1));
        assert_eq!(ds, t(0, 1, d).scale(&q(2)).cap_trust(4));
        assert_eq!(ds.trusted_order(), 4);
        assert_eq!(s.derive(Var::t(1, 2)).trusted_order(), 3);
    }

    #[test]
    fn miwa_examples() {
        let d = 4;
        let s = t(0, 2, d).miwa_shifted(0, Aux::Lambda, -1);
        let lam2 = FormalSeries::aux_power(Aux::Lambda, -2, d).scale(&qf(-1, 2));
        assert_eq!(s, &t(0, 2, d) + &lam2);
        assert_eq!(t(1, 1, d).miwa_shifted(0, Aux::Z, -1), t(1, 1, d));
        let sq = &t(0, 1, d) * &t(0, 1, d);
        let shifted = sq.miwa_shifted(0, Aux::Mu, -1);
        let mu1 = FormalSeries::aux_power(Aux::Mu, -1, d);
        let expect = &(&sq - &(&t(0, 1, d) * &mu1).scale(&q(2))) + &(&mu1 * &mu1);
        assert_eq!(shifted, expect);
        let view = miwa_shift(&sq, 0, Aux::Mu, -1);
        assert_eq!(view.coeff(-2).unwrap(), &c(1, d).cap_trust(2));
    }

    #[test]
    fn binomial_and_residue() {
        let d = 3;
        let g = binomial_expand(Aux::Z, Aux::Mu, -1, 2, d);
        assert_eq!(g.len(), 3);
        let one_minus = binomial_expand(Aux::Z, Aux::Mu, 1, 0, d);
        let prod = &g * &one_minus;
        // 1 - z^3 μ^{-3}
        assert_eq!(prod.len(), 2);
        let integrand = g.mul_aux(Aux::Z, -2);
        let r = AuxLaurent::from_series(&integrand, Aux::Z)
            .residue(d)
            .unwrap();
        assert_eq!(r, FormalSeries::aux_power(Aux::Mu, -1, d).cap_trust(2));
        let zinv = FormalSeries::aux_power(Aux::Z, -1, d);
        assert_eq!(residue_z(&zinv), c(1, d).cap_trust(d - 1));
        let narrow = AuxLaurent::from_series(&c(1, d), Aux::Z).with_range(0, 0);
        assert_eq!(narrow.residue(d), Err(SeriesError::RangeTooNarrow(0)));
    }

    #[test]
    fn generalized_binomials() {
        assert_eq!(binomial(-1, 3), BigInt::from(-1));
        assert_eq!(binomial(-2, 2), BigInt::from(3));
        assert_eq!(binomial(3, 4), BigInt::from(0));
        assert_eq!(binomial(5, 2), BigInt::from(10));
    }

    #[test]
    fn laurent_round_trip() {
        let d = 4;
        let s = (&t(0, 1, d) + &c(1, d)).miwa_shifted(0, Aux::Z, -1);
        let view = AuxLaurent::from_series(&s, Aux::Z);
        assert_eq!(view.to_series(d), s);
        assert_eq!(s.coeff_of(Aux::Z, 0), &t(0, 1, d) + &c(1, d));
    }
}
