//! Charge vectors and the sign function ε.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChargeError {
    #[error("component index {index} out of range for N = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("indices must be distinct")]
    IndicesNotDistinct,
    #[error("charge entries must sum to zero")]
    NonZeroSum,
}

/// Integer N-tuple with zero sum. Components are zero-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChargeVector(pub Vec<i32>);

impl ChargeVector {
    pub fn new(s: Vec<i32>) -> Result<ChargeVector, ChargeError> {
        if s.iter().sum::<i32>() != 0 {
            return Err(ChargeError::NonZeroSum);
        }
        Ok(ChargeVector(s))
    }

    pub fn zero(n: usize) -> ChargeVector {
        ChargeVector(vec![0; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn radius(&self) -> i32 {
        self.0.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// `s + e_α − e_β`; with `α = β` this is `s` itself.
    pub fn shifted(&self, alpha: usize, beta: usize) -> ChargeVector {
        let mut v = self.0.clone();
        v[alpha] += 1;
        v[beta] -= 1;
        ChargeVector(v)
    }

    /// All charges with `|s_α| ≤ radius` and zero sum, in lexicographic order.
    pub fn box_of(n: usize, radius: i32) -> Vec<ChargeVector> {
        let mut out = Vec::new();
        let mut cur = vec![-radius; n];
        if n == 0 {
            return out;
        }
        loop {
            if cur.iter().sum::<i32>() == 0 {
                out.push(ChargeVector(cur.clone()));
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < radius {
                    cur[i] += 1;
                    for x in cur.iter_mut().skip(i + 1) {
                        *x = -radius;
                    }
                    break;
                }
            }
        }
    }
}

impl fmt::Display for ChargeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

fn check_index(s: &ChargeVector, i: usize) -> Result<(), ChargeError> {
    if i >= s.n() {
        Err(ChargeError::IndexOutOfRange { index: i, n: s.n() })
    } else {
        Ok(())
    }
}

fn parity_sign(sum: i32) -> i32 {
    if sum.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// ε_{αγ}(s) for zero-based `alpha`, `gamma`.
pub fn epsilon(s: &ChargeVector, alpha: usize, gamma: usize) -> Result<i32, ChargeError> {
    check_index(s, alpha)?;
    check_index(s, gamma)?;
    Ok(eps(s, alpha, gamma))
}

pub(crate) fn eps(s: &ChargeVector, alpha: usize, gamma: usize) -> i32 {
    use std::cmp::Ordering::*;
    match alpha.cmp(&gamma) {
        Equal => 1,
        Less => parity_sign(s.0[alpha + 1..=gamma].iter().sum()),
        Greater => -parity_sign(s.0[gamma + 1..=alpha].iter().sum()),
    }
}

pub fn shift_charge(
    s: &ChargeVector,
    alpha: usize,
    beta: usize,
) -> Result<ChargeVector, ChargeError> {
    check_index(s, alpha)?;
    check_index(s, beta)?;
    if alpha == beta {
        return Err(ChargeError::IndicesNotDistinct);
    }
    Ok(s.shifted(alpha, beta))
}

/// Sign rule with an optional single flipped value, for fault injection.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signs {
    flip: Option<(ChargeVector, usize, usize)>,
}

impl Signs {
    pub fn standard() -> Signs {
        Signs { flip: None }
    }

    pub fn with_flip(s: ChargeVector, alpha: usize, gamma: usize) -> Signs {
        Signs {
            flip: Some((s, alpha, gamma)),
        }
    }

    pub fn eps(&self, s: &ChargeVector, alpha: usize, gamma: usize) -> i32 {
        let base = eps(s, alpha, gamma);
        match &self.flip {
            Some((fs, fa, fg)) if fs == s && *fa == alpha && *fg == gamma => -base,
            _ => base,
        }
    }
}

/// Shift rules: (i) `ε_{αβ}(s+e_α−e_β) = ε_{βα}(s)` and, when γ is given,
/// (ii) `ε_{αγ}(s+e_α−e_β) = ε_{βγ}(s) ε_{βα}(s)`.
pub fn lemma1_holds(
    s: &ChargeVector,
    alpha: usize,
    beta: usize,
    gamma: Option<usize>,
) -> Result<(bool, Option<bool>), ChargeError> {
    lemma1_with(&Signs::standard(), s, alpha, beta, gamma)
}

pub fn lemma1_with(
    sg: &Signs,
    s: &ChargeVector,
    alpha: usize,
    beta: usize,
    gamma: Option<usize>,
) -> Result<(bool, Option<bool>), ChargeError> {
    check_index(s, alpha)?;
    check_index(s, beta)?;
    if alpha == beta {
        return Err(ChargeError::IndicesNotDistinct);
    }
    let sp = s.shifted(alpha, beta);
    let first = sg.eps(&sp, alpha, beta) == sg.eps(s, beta, alpha);
    let second = match gamma {
        None => None,
        Some(g) => {
            check_index(s, g)?;
            if g == alpha || g == beta {
                return Err(ChargeError::IndicesNotDistinct);
            }
            Some(sg.eps(&sp, alpha, g) == sg.eps(s, beta, g) * sg.eps(s, beta, alpha))
        }
    };
    Ok((first, second))
}

pub fn antisymmetry_check(
    s: &ChargeVector,
    alpha: usize,
    beta: usize,
) -> Result<bool, ChargeError> {
    check_index(s, alpha)?;
    check_index(s, beta)?;
    if alpha == beta {
        return Err(ChargeError::IndicesNotDistinct);
    }
    Ok(eps(s, beta, alpha) == -eps(s, alpha, beta))
}

/// Auxiliary sign identities used when the linear problems are assembled.
/// Each is stated over distinct indices; `idx` holds them in the listed order.
#[derive(Clone, Copy, Debug)]
pub struct SignIdentity {
    pub name: &'static str,
    pub arity: usize,
    pub statement: &'static str,
    eval: fn(&Signs, &ChargeVector, &[usize]) -> bool,
}

impl SignIdentity {
    pub fn holds(&self, sg: &Signs, s: &ChargeVector, idx: &[usize]) -> bool {
        (self.eval)(sg, s, idx)
    }
}

pub const SIGN_IDENTITIES: [SignIdentity; 9] = [
    SignIdentity {
        name: "cf_chain_ratio",
        arity: 4,
        statement: "ε_κα(s+e_λ−e_κ) ε_βκ(s+e_λ−e_κ) = ε_βλ(s) ε_λα(s)  [α,β,λ,κ]",
        eval: |sg, s, i| {
            let (a, b, l, k) = (i[0], i[1], i[2], i[3]);
            let sp = s.shifted(l, k);
            sg.eps(&sp, k, a) * sg.eps(&sp, b, k) == sg.eps(s, b, l) * sg.eps(s, l, a)
        },
    },
    SignIdentity {
        name: "cf_third_term",
        arity: 3,
        statement: "ε_ακ(s) ε_λα(s+e_λ−e_κ) = −ε_λκ(s+e_λ−e_κ)  [α,λ,κ]",
        eval: |sg, s, i| {
            let (a, l, k) = (i[0], i[1], i[2]);
            let sp = s.shifted(l, k);
            sg.eps(s, a, k) * sg.eps(&sp, l, a) == -sg.eps(&sp, l, k)
        },
    },
    SignIdentity {
        name: "charge_shift_offdiag",
        arity: 3,
        statement: "−ε_βα(s')ε_γα(s')/ε_βγ(s') = ε_αγ(s+e_α−e_β)/ε_αγ(s), s'=s+e_α−e_γ  [α,β,γ]",
        eval: |sg, s, i| {
            let (a, b, g) = (i[0], i[1], i[2]);
            let sp = s.shifted(a, g);
            let lhs = -sg.eps(&sp, b, a) * sg.eps(&sp, g, a) * sg.eps(&sp, b, g);
            lhs == sg.eps(&s.shifted(a, b), a, g) * sg.eps(s, a, g)
        },
    },
    SignIdentity {
        name: "charge_shift_factor",
        arity: 3,
        statement: "ε_βγ(s+e_α−e_β) = ε_βα(s+e_α−e_β) ε_αγ(s)  [α,β,γ]",
        eval: |sg, s, i| {
            let (a, b, g) = (i[0], i[1], i[2]);
            let sp = s.shifted(a, b);
            sg.eps(&sp, b, g) == sg.eps(&sp, b, a) * sg.eps(s, a, g)
        },
    },
    SignIdentity {
        name: "quotient_spectator_a",
        arity: 3,
        statement: "ε_βα(s)/ε_λβ(s) = 1/ε_λα(s+e_α−e_β)  [α,β,λ]",
        eval: |sg, s, i| {
            let (a, b, l) = (i[0], i[1], i[2]);
            sg.eps(s, b, a) * sg.eps(s, l, b) * sg.eps(&s.shifted(a, b), l, a) == 1
        },
    },
    SignIdentity {
        name: "quotient_spectator_b",
        arity: 3,
        statement: "ε_λα(s+e_α−e_β) ε_αβ(s) = −ε_λβ(s)  [α,β,λ]",
        eval: |sg, s, i| {
            let (a, b, l) = (i[0], i[1], i[2]);
            sg.eps(&s.shifted(a, b), l, a) * sg.eps(s, a, b) == -sg.eps(s, l, b)
        },
    },
    SignIdentity {
        name: "quotient_spectator_c",
        arity: 3,
        statement: "ε_λβ(s+e_α−e_β)/ε_λβ(s) = ε_αβ(s'')ε_λβ(s'')/ε_λα(s''), s''=s+e_λ−e_β  [α,β,λ]",
        eval: |sg, s, i| {
            let (a, b, l) = (i[0], i[1], i[2]);
            let s2 = s.shifted(l, b);
            sg.eps(&s.shifted(a, b), l, b) * sg.eps(s, l, b)
                == sg.eps(&s2, a, b) * sg.eps(&s2, l, b) * sg.eps(&s2, l, a)
        },
    },
    SignIdentity {
        name: "quotient_double_a",
        arity: 4,
        statement:
            "ε_λα(s')/ε_λγ(s') = −ε_βγ(s'')/ε_βα(s''), s'=s+e_α−e_β, s''=s+e_λ−e_γ  [α,β,λ,γ]",
        eval: |sg, s, i| {
            let (a, b, l, g) = (i[0], i[1], i[2], i[3]);
            let s1 = s.shifted(a, b);
            let s2 = s.shifted(l, g);
            sg.eps(&s1, l, a) * sg.eps(&s1, l, g) == -sg.eps(&s2, b, g) * sg.eps(&s2, b, a)
        },
    },
    SignIdentity {
        name: "quotient_double_b",
        arity: 4,
        statement: "ε_λγ(s)/ε_λγ(s+e_α−e_β) = −ε_αβ(s)/ε_βα(s+e_λ−e_γ)  [α,β,λ,γ]",
        eval: |sg, s, i| {
            let (a, b, l, g) = (i[0], i[1], i[2], i[3]);
            sg.eps(s, l, g) * sg.eps(&s.shifted(a, b), l, g)
                == -sg.eps(s, a, b) * sg.eps(&s.shifted(l, g), b, a)
        },
    },
];

/// All ordered tuples of `k` distinct indices below `n`.
pub fn distinct_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !cur.contains(&i) {
                cur.push(i);
                rec(n, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[i32]) -> ChargeVector {
        ChargeVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon(&cv(&[3, -3]), 0, 0).unwrap(), 1);
        assert_eq!(epsilon(&cv(&[1, -1]), 0, 1).unwrap(), -1);
        assert_eq!(epsilon(&cv(&[0, 1, -1]), 2, 0).unwrap(), -1);
        assert_eq!(
            epsilon(&cv(&[0, 0]), 0, 2),
            Err(ChargeError::IndexOutOfRange { index: 2, n: 2 })
        );
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_charge(&cv(&[0, 0]), 0, 1).unwrap(), cv(&[1, -1]));
        assert_eq!(shift_charge(&cv(&[1, -1]), 1, 0).unwrap(), cv(&[0, 0]));
        assert_eq!(
            shift_charge(&cv(&[0, 1, -1]), 2, 1).unwrap(),
            cv(&[0, 0, 0])
        );
        assert!(ChargeVector::new(vec![1, 0]).is_err());
    }

    #[test]
    fn lemma_examples() {
        assert_eq!(
            lemma1_holds(&cv(&[0, 0]), 0, 1, None).unwrap(),
            (true, None)
        );
        assert_eq!(
            lemma1_holds(&cv(&[0, 0, 0]), 0, 1, Some(2)).unwrap(),
            (true, Some(true))
        );
        assert_eq!(
            lemma1_holds(&cv(&[0, 0, 0]), 0, 1, Some(1)),
            Err(ChargeError::IndicesNotDistinct)
        );
        assert!(antisymmetry_check(&cv(&[0, 0]), 0, 1).unwrap());
        assert!(antisymmetry_check(&cv(&[0, 0]), 1, 1).is_err());
        for (a, b) in [(0, 1), (0, 2), (1, 2), (2, 0)] {
            assert!(antisymmetry_check(&cv(&[2, -1, -1]), a, b).unwrap());
        }
    }

    #[test]
    fn box_enumeration() {
        assert_eq!(ChargeVector::box_of(2, 2).len(), 5);
        assert_eq!(ChargeVector::box_of(3, 1).len(), 7);
        assert_eq!(ChargeVector::box_of(1, 3), vec![cv(&[0])]);
    }

    #[test]
    fn sign_identities_on_box() {
        let sg = Signs::standard();
        for n in 2..=4 {
            for s in ChargeVector::box_of(n, 3) {
                for id in SIGN_IDENTITIES.iter() {
                    for idx in distinct_tuples(n, id.arity) {
                        assert!(id.holds(&sg, &s, &idx), "{} at {s} {idx:?}", id.name);
                    }
                }
            }
        }
    }

    #[test]
    fn flipped_sign_breaks_lemma() {
        let s = cv(&[0, 0]);
        let sg = Signs::with_flip(s.clone(), 1, 0);
        assert!(!lemma1_with(&sg, &s, 0, 1, None).unwrap().0);
    }
}
