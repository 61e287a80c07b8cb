//! Exact sparse linear systems over the rationals.
//!
//! Row selection and rank are found modulo a large prime; the selected
//! square block is then solved exactly by fraction-free (Bareiss)
//! elimination and the full system is re-verified over `Q`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::series::Q;

const P: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64) -> u64 {
    powmod(a, P - 2)
}

fn int_mod(n: &BigInt) -> u64 {
    let r = n.mod_floor(&BigInt::from(P));
    r.to_u64().unwrap_or(0)
}

/// `None` when the denominator vanishes modulo the prime.
fn rat_mod(x: &Q) -> Option<u64> {
    let d = int_mod(x.denom());
    if d == 0 {
        return None;
    }
    Some(mulmod(int_mod(x.numer()), inv_mod(d)))
}

/// One equation `Σ coeffs[j]·x_j = rhs`.
#[derive(Clone, Debug, Default)]
pub struct Row {
    pub coeffs: BTreeMap<usize, Q>,
    pub rhs: Q,
}

impl Row {
    pub fn residual(&self, x: &[Q]) -> Q {
        let lhs: Q = self.coeffs.iter().map(|(j, c)| c * &x[*j]).sum();
        lhs - &self.rhs
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Solved {
        x: Vec<Q>,
        free: Vec<usize>,
    },
    /// Index of a row no assignment satisfies.
    Inconsistent(usize),
}

/// Independent rows and their pivot columns, chosen greedily in row order.
fn select(rows: &[Row], ncols: usize) -> (Vec<usize>, Vec<usize>, Option<usize>) {
    // echelon basis: pivot column -> reduced dense row (with rhs at ncols)
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut chosen = Vec::new();
    let mut pivots = Vec::new();
    for (ri, row) in rows.iter().enumerate() {
        let mut v = vec![0u64; ncols + 1];
        let mut ok = true;
        for (j, c) in &row.coeffs {
            match rat_mod(c) {
                Some(m) => v[*j] = m,
                None => ok = false,
            }
        }
        match rat_mod(&row.rhs) {
            Some(m) => v[ncols] = m,
            None => ok = false,
        }
        if !ok {
            continue;
        }
        for (pc, b) in &basis {
            let f = v[*pc];
            if f != 0 {
                for (x, y) in v.iter_mut().zip(b) {
                    if *y != 0 {
                        *x = (*x + P - mulmod(f, *y)) % P;
                    }
                }
            }
        }
        match v[..ncols].iter().position(|&x| x != 0) {
            Some(pc) => {
                let inv = inv_mod(v[pc]);
                for x in v.iter_mut() {
                    *x = mulmod(*x, inv);
                }
                for (_, b) in basis.iter_mut() {
                    let f = b[pc];
                    if f != 0 {
                        for (x, y) in b.iter_mut().zip(&v) {
                            if *y != 0 {
                                *x = (*x + P - mulmod(f, *y)) % P;
                            }
                        }
                    }
                }
                basis.push((pc, v));
                chosen.push(ri);
                pivots.push(pc);
            }
            None if v[ncols] != 0 => return (chosen, pivots, Some(ri)),
            None => {}
        }
    }
    (chosen, pivots, None)
}

/// Solves the square system `a·x = b` exactly by Bareiss elimination.
/// `a` must be nonsingular.
pub fn bareiss_solve(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    // scale each row to integers
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for (row, rhs) in a.iter().zip(b) {
        let l = row
            .iter()
            .chain(std::iter::once(rhs))
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        m.push(
            row.iter()
                .chain(std::iter::once(rhs))
                .map(|x| x.numer() * (&l / x.denom()))
                .collect(),
        );
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        let p = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, p);
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x = vec![Q::zero(); n];
    for k in (0..n).rev() {
        let mut acc = Q::from_integer(m[k][n].clone());
        for j in k + 1..n {
            acc -= Q::from_integer(m[k][j].clone()) * &x[j];
        }
        x[k] = acc / Q::from_integer(m[k][k].clone());
    }
    Some(x)
}

/// Solves `rows` for `ncols` unknowns; `fill` supplies the free unknowns in
/// increasing column order.
pub fn solve(rows: &[Row], ncols: usize, mut fill: impl FnMut(usize) -> Q) -> Outcome {
    let (chosen, pivots, bad) = select(rows, ncols);
    if let Some(r) = bad {
        return Outcome::Inconsistent(r);
    }
    let mut is_pivot = vec![false; ncols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let free: Vec<usize> = (0..ncols).filter(|j| !is_pivot[*j]).collect();
    let mut x = vec![Q::zero(); ncols];
    for &j in &free {
        x[j] = fill(j);
    }
    let col_of: BTreeMap<usize, usize> = pivots.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let r = pivots.len();
    let mut a = vec![vec![Q::zero(); r]; r];
    let mut b = vec![Q::zero(); r];
    for (i, &ri) in chosen.iter().enumerate() {
        let row = &rows[ri];
        let mut rhs = row.rhs.clone();
        for (j, c) in &row.coeffs {
            match col_of.get(j) {
                Some(&k) => a[i][k] = c.clone(),
                None => rhs -= c * &x[*j],
            }
        }
        b[i] = rhs;
    }
    let Some(sol) = bareiss_solve(&a, &b) else {
        return Outcome::Inconsistent(chosen.first().copied().unwrap_or(0));
    };
    for (k, &p) in pivots.iter().enumerate() {
        x[p] = sol[k].clone();
    }
    if let Some(bad) = rows.iter().position(|row| !row.residual(&x).is_zero()) {
        return Outcome::Inconsistent(bad);
    }
    Outcome::Solved { x, free }
}
