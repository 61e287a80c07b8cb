//! N×N matrix pseudodifferential operators.
//!
//! An operator is a matrix of series in which the auxiliary variable `D`
//! stands for `∂ = Σ_κ ∂/∂t_{κ1}`, written to the right of its coefficient:
//! `Σ_m a_m D^m` means `Σ_m a_m ∘ ∂^m`. Composition uses the Leibniz rule
//! `∂^m ∘ b = Σ_k C(m,k) b^{(k)} ∂^{m-k}` with generalized binomials.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::series::{binomial, Aux, FormalSeries, Monomial, Var, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PsdoError {
    #[error("operator power {power} exceeds the band {band}")]
    BandOverflow { power: i32, band: i32 },
    #[error("operator is not of the form I + O(∂^-1)")]
    NotUnitShape,
    #[error("dimension mismatch")]
    Dimension,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixPsdo {
    n: usize,
    band: i32,
    cutoff: i32,
    entries: Vec<FormalSeries>,
}

fn split_d(a: &FormalSeries) -> Vec<(i32, FormalSeries)> {
    a.split(Aux::D).into_iter().collect()
}

/// `Σ_k C(m,k) b^{(k)} ∂^{m-k}`, with `b` possibly containing `D`.
fn leibniz(m: i32, b: &FormalSeries) -> FormalSeries {
    let mut acc = FormalSeries::zero(b.cutoff()).cap_trust(b.trusted_order());
    let mut deriv = b.clone();
    let mut k: u32 = 0;
    loop {
        let c = binomial(m as i64, k);
        if c.is_zero() || deriv.is_empty() {
            break;
        }
        let term = deriv
            .scale(&Q::from_integer(c))
            .mul_aux(Aux::D, m - k as i32);
        acc = &acc + &term;
        deriv = deriv.d_total();
        k += 1;
    }
    acc
}

/// Action of `Σ_m a_m ∂^m` on `f·e^{ξ(t,z)}`, returned without the exponential:
/// `Σ_m a_m Σ_k C(m,k) z^{m-k} ∂^k f`.
fn act_on_reduced(a: &FormalSeries, f: &FormalSeries) -> FormalSeries {
    let mut derivs: Vec<FormalSeries> = vec![f.clone()];
    let mut acc = FormalSeries::zero(f.cutoff().min(a.cutoff())).cap_trust(a.product_trust(f));
    for (m, am) in split_d(a) {
        let mut inner = FormalSeries::zero(f.cutoff()).cap_trust(f.trusted_order());
        let mut k: u32 = 0;
        loop {
            let c = binomial(m as i64, k);
            if c.is_zero() {
                break;
            }
            if derivs.len() <= k as usize {
                let next = derivs.last().unwrap().d_total();
                derivs.push(next);
            }
            let dk = &derivs[k as usize];
            if dk.is_empty() {
                break;
            }
            inner = &inner + &dk.scale(&Q::from_integer(c)).mul_aux(Aux::Z, m - k as i32);
            k += 1;
        }
        acc = &acc + &(&am * &inner);
    }
    acc.cap_trust(a.product_trust(f))
}

impl MatrixPsdo {
    pub fn zero(n: usize, band: i32, cutoff: i32) -> MatrixPsdo {
        MatrixPsdo {
            n,
            band,
            cutoff,
            entries: vec![FormalSeries::zero(cutoff); n * n],
        }
    }

    pub fn identity(n: usize, band: i32, cutoff: i32) -> MatrixPsdo {
        MatrixPsdo::diag_unit(n, band, cutoff, None)
    }

    /// `E_α`, the matrix unit on the diagonal.
    pub fn unit(n: usize, alpha: usize, band: i32, cutoff: i32) -> MatrixPsdo {
        MatrixPsdo::diag_unit(n, band, cutoff, Some(alpha))
    }

    fn diag_unit(n: usize, band: i32, cutoff: i32, only: Option<usize>) -> MatrixPsdo {
        let mut out = MatrixPsdo::zero(n, band, cutoff);
        for i in 0..n {
            if only.is_none_or(|a| a == i) {
                out.entries[i * n + i] = FormalSeries::one(cutoff);
            }
        }
        out
    }

    pub fn from_entries(
        n: usize,
        band: i32,
        entries: Vec<FormalSeries>,
    ) -> Result<MatrixPsdo, PsdoError> {
        if entries.len() != n * n || n == 0 {
            return Err(PsdoError::Dimension);
        }
        let cutoff = entries.iter().map(FormalSeries::cutoff).min().unwrap();
        let out = MatrixPsdo {
            n,
            band,
            cutoff,
            entries,
        };
        out.check_band()?;
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn band(&self) -> i32 {
        self.band
    }

    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    pub fn entry(&self, i: usize, j: usize) -> &FormalSeries {
        &self.entries[i * self.n + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, f: FormalSeries) {
        self.entries[i * self.n + j] = f;
    }

    pub fn entries(&self) -> &[FormalSeries] {
        &self.entries
    }

    pub fn trusted_order(&self) -> i32 {
        self.entries
            .iter()
            .map(FormalSeries::trusted_order)
            .min()
            .unwrap_or(self.cutoff)
    }

    /// Coefficient matrix of `∂^m`.
    pub fn power_coeff(&self, m: i32) -> Vec<FormalSeries> {
        self.entries.iter().map(|e| e.coeff_of(Aux::D, m)).collect()
    }

    pub fn max_power(&self) -> Option<i32> {
        self.entries
            .iter()
            .filter_map(|e| e.aux_range(Aux::D))
            .map(|(_, hi)| hi)
            .max()
    }

    fn check_band(&self) -> Result<(), PsdoError> {
        match self.max_power() {
            Some(p) if p > self.band => Err(PsdoError::BandOverflow {
                power: p,
                band: self.band,
            }),
            _ => Ok(()),
        }
    }

    /// Drops powers below `-band`, lowering trust to cover what was dropped.
    fn clip(mut self) -> Result<MatrixPsdo, PsdoError> {
        self.check_band()?;
        let band = self.band;
        for e in self.entries.iter_mut() {
            if e.aux_range(Aux::D).is_some_and(|(lo, _)| lo < -band) {
                let dropped_min = e
                    .terms()
                    .filter(|(m, _)| m.exponent(Var::Aux(Aux::D)) < -band)
                    .map(|(m, _)| m.weight())
                    .min()
                    .unwrap();
                let t = e.trusted_order().min(dropped_min - 1);
                *e = e
                    .map_terms(|m, c| {
                        (m.exponent(Var::Aux(Aux::D)) >= -band).then(|| (m.clone(), c.clone()))
                    })
                    .cap_trust(t);
            }
        }
        Ok(self)
    }

    fn zip(
        &self,
        other: &MatrixPsdo,
        f: impl Fn(&FormalSeries, &FormalSeries) -> FormalSeries,
    ) -> MatrixPsdo {
        assert_eq!(self.n, other.n, "dimension mismatch");
        MatrixPsdo {
            n: self.n,
            band: self.band.min(other.band),
            cutoff: self.cutoff.min(other.cutoff),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&FormalSeries) -> FormalSeries) -> MatrixPsdo {
        MatrixPsdo {
            n: self.n,
            band: self.band,
            cutoff: self.cutoff,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &MatrixPsdo) -> MatrixPsdo {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &MatrixPsdo) -> MatrixPsdo {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Q) -> MatrixPsdo {
        self.map(|e| e.scale(c))
    }

    /// Right multiplication by `∂^m` (exact: no coefficient is differentiated).
    pub fn times_d(&self, m: i32) -> Result<MatrixPsdo, PsdoError> {
        self.map(|e| e.mul_aux(Aux::D, m)).clip()
    }

    pub fn compose(&self, other: &MatrixPsdo) -> Result<MatrixPsdo, PsdoError> {
        if self.n != other.n {
            return Err(PsdoError::Dimension);
        }
        let n = self.n;
        let cutoff = self.cutoff.min(other.cutoff);
        let split_a: Vec<Vec<(i32, FormalSeries)>> = self.entries.iter().map(split_d).collect();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = FormalSeries::zero(cutoff);
                for l in 0..n {
                    let a = &self.entries[i * n + l];
                    let b = &other.entries[l * n + j];
                    let mut part = FormalSeries::zero(cutoff).cap_trust(a.product_trust(b));
                    if !b.is_empty() {
                        for (m, am) in &split_a[i * n + l] {
                            part = &part + &(am * &leibniz(*m, b));
                        }
                    }
                    acc = &acc + &part.cap_trust(a.product_trust(b));
                }
                entries.push(acc);
            }
        }
        MatrixPsdo {
            n,
            band: self.band.min(other.band),
            cutoff,
            entries,
        }
        .clip()
    }

    pub fn power(&self, j: u32) -> Result<MatrixPsdo, PsdoError> {
        let mut out = MatrixPsdo::identity(self.n, self.band, self.cutoff);
        for _ in 0..j {
            out = out.compose(self)?;
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &MatrixPsdo) -> Result<MatrixPsdo, PsdoError> {
        Ok(self.compose(other)?.sub(&other.compose(self)?))
    }

    fn restrict(&self, keep: impl Fn(i32) -> bool) -> MatrixPsdo {
        self.map(|e| {
            e.map_terms(|m, c| keep(m.exponent(Var::Aux(Aux::D))).then(|| (m.clone(), c.clone())))
        })
    }

    pub fn plus_part(&self) -> MatrixPsdo {
        self.restrict(|p| p >= 0)
    }

    pub fn minus_part(&self) -> MatrixPsdo {
        self.restrict(|p| p < 0)
    }

    /// Coefficient-wise derivative in a time variable.
    pub fn derive(&self, v: Var) -> MatrixPsdo {
        self.map(|e| e.derive(v))
    }

    /// Inverse of `I + (negative powers)` by the Neumann series.
    pub fn invert_unit(&self) -> Result<MatrixPsdo, PsdoError> {
        let n = self.n;
        let ident = MatrixPsdo::identity(n, self.band, self.cutoff);
        let rest = self.sub(&ident);
        for e in &rest.entries {
            if e.terms().any(|(m, _)| m.exponent(Var::Aux(Aux::D)) >= 0) {
                return Err(PsdoError::NotUnitShape);
            }
            if e.min_weight().is_some_and(|w| w < 1) {
                return Err(PsdoError::NotUnitShape);
            }
        }
        let neg = rest.scale(&-Q::one());
        let mut sum = ident.clone();
        let mut term = ident;
        for _ in 0..=self.cutoff.max(0) {
            term = term.compose(&neg)?;
            if term.entries.iter().all(FormalSeries::is_empty) {
                break;
            }
            sum = sum.add(&term);
        }
        let t = self.trusted_order();
        Ok(sum.map(|e| e.clone().cap_trust(t)))
    }

    /// Applies the operator to a reduced wave matrix, columns acted on
    /// independently with `∂ -> ∂ + z`.
    pub fn apply_to_wave(&self, wave: &[FormalSeries]) -> Result<Vec<FormalSeries>, PsdoError> {
        let n = self.n;
        if wave.len() != n * n {
            return Err(PsdoError::Dimension);
        }
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = FormalSeries::zero(self.cutoff);
                for l in 0..n {
                    acc = &acc + &act_on_reduced(&self.entries[i * n + l], &wave[l * n + j]);
                }
                out.push(acc);
            }
        }
        Ok(out)
    }

    /// Nonzero trusted coefficients, tagged by matrix entry.
    pub fn trusted_discrepancies(&self) -> Vec<(usize, usize, Monomial, Q)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                for (m, c) in self.entry(i, j).trusted_terms() {
                    out.push((i, j, m, c));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::q;

    const D: i32 = 4;

    fn scalar(e: FormalSeries) -> MatrixPsdo {
        MatrixPsdo::from_entries(1, 8, vec![e]).unwrap()
    }

    fn dpow(m: i32) -> FormalSeries {
        FormalSeries::aux_power(Aux::D, m, D)
    }

    fn t11() -> FormalSeries {
        FormalSeries::var(Var::t(0, 1), D)
    }

    #[test]
    fn leibniz_examples() {
        let r = scalar(dpow(1)).compose(&scalar(t11())).unwrap();
        assert_eq!(
            r.entry(0, 0),
            &(&(&t11() * &dpow(1)) + &FormalSeries::one(D))
        );
        let r = scalar(dpow(-1)).compose(&scalar(t11())).unwrap();
        assert_eq!(r.entry(0, 0), &(&(&t11() * &dpow(-1)) - &dpow(-2)));
        let back = scalar(dpow(1)).compose(&r).unwrap();
        assert_eq!(
            back.entry(0, 0).trusted_terms(),
            vec![(Monomial::var(Var::t(0, 1), 1), q(1))]
        );
    }

    #[test]
    fn units_annihilate() {
        let e1 = MatrixPsdo::unit(2, 0, 8, D).times_d(1).unwrap();
        let e2 = MatrixPsdo::unit(2, 1, 8, D).times_d(1).unwrap();
        let p = e1.compose(&e2).unwrap();
        assert!(p.entries().iter().all(FormalSeries::is_empty));
        let c = MatrixPsdo::unit(2, 0, 8, D)
            .commutator(&MatrixPsdo::unit(2, 1, 8, D))
            .unwrap();
        assert!(c.entries().iter().all(FormalSeries::is_empty));
    }

    #[test]
    fn projections() {
        let u = FormalSeries::var(Var::t(0, 2), D);
        let op = scalar(&dpow(1) + &(&u * &dpow(-1)));
        assert_eq!(op.plus_part(), scalar(dpow(1)));
        assert_eq!(op.plus_part().add(&op.minus_part()), op);
        assert!(scalar(dpow(-2)).plus_part().entry(0, 0).is_empty());
    }

    #[test]
    fn unit_inverse() {
        let w1 = t11();
        let op = scalar(&FormalSeries::one(D) + &(&w1 * &dpow(-1)));
        let inv = op.invert_unit().unwrap();
        // I − w₁∂^{-1} + w₁²∂^{-2} + (2w₁w₁' − w₁³)∂^{-3} + ...
        let c2 = inv.entry(0, 0).coeff_of(Aux::D, -2);
        let expect = &w1 * &w1;
        assert_eq!(c2.trusted_terms(), expect.trusted_terms());
        let prod = op.compose(&inv).unwrap();
        let diff = prod.sub(&MatrixPsdo::identity(1, 8, D));
        assert!(diff.trusted_discrepancies().is_empty());
        assert_eq!(scalar(dpow(1)).invert_unit(), Err(PsdoError::NotUnitShape));
    }

    #[test]
    fn band_overflow() {
        let op = MatrixPsdo::from_entries(1, 2, vec![dpow(1)]).unwrap();
        assert_eq!(
            op.power(3),
            Err(PsdoError::BandOverflow { power: 3, band: 2 })
        );
    }

    #[test]
    fn wave_action() {
        let f = &FormalSeries::one(D) + &t11();
        let out = scalar(dpow(1))
            .apply_to_wave(std::slice::from_ref(&f))
            .unwrap();
        let expect = &f.mul_aux(Aux::Z, 1) + &FormalSeries::one(D);
        assert_eq!(out[0], expect);
        let same = MatrixPsdo::identity(1, 8, D)
            .apply_to_wave(std::slice::from_ref(&f))
            .unwrap();
        assert_eq!(same[0], f);
    }
}
