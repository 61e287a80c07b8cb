//! Concrete tau functions: the vacuum, the one-component soliton and jets
//! obtained by imposing the differential Fay identities order by order.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charge::{eps, ChargeVector};
use crate::linsolve::{self, Outcome, Row};
use crate::series::{pow_q, Aux, FormalSeries, Monomial, SeriesError, Var, Q};
use crate::tau::{TauError, TauFunction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolutionError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("no solution at weight {level}: {constraint}")]
    Inconsistent { level: i32, constraint: String },
    #[error("weight {level} has {unknowns} unknowns, budget is {budget}")]
    BudgetExceeded {
        level: i32,
        unknowns: usize,
        budget: usize,
    },
    #[error(transparent)]
    Tau(#[from] TauError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreePolicy {
    /// Small pseudo-random integers from the seed.
    #[default]
    Random,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolutionKind {
    Vacuum,
    SolitonN1 {
        p: Q,
        q: Q,
        a: Q,
    },
    Jet {
        seed: u64,
        free: FreePolicy,
        budget: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSpec {
    pub kind: SolutionKind,
    pub n: usize,
    pub max_time_index: u32,
    pub cutoff: i32,
    pub radius: i32,
}

pub const DEFAULT_BUDGET: usize = 4000;

pub fn vacuum_tau(spec: &SolutionSpec) -> TauFunction {
    TauFunction::uniform(
        spec.n,
        spec.max_time_index,
        spec.cutoff,
        spec.radius,
        &FormalSeries::one(spec.cutoff),
    )
}

/// `(1 + a·exp Σ_j t_j(p^j − q^j)) / (1 + a)` as a jet.
pub fn soliton_tau_n1(
    spec: &SolutionSpec,
    p: &Q,
    q: &Q,
    a: &Q,
) -> Result<TauFunction, SolutionError> {
    if spec.n != 1 {
        return Err(SolutionError::BadParams(format!(
            "soliton needs N = 1, got {}",
            spec.n
        )));
    }
    if p == q {
        return Err(SolutionError::BadParams("p = q".into()));
    }
    let norm = Q::one() + a;
    if norm.is_zero() {
        return Err(SolutionError::BadParams("1 + a = 0".into()));
    }
    let d = spec.cutoff;
    let phase = FormalSeries::from_terms(
        (1..=spec.max_time_index)
            .map(|j| (Monomial::var(Var::t(0, j), 1), pow_q(p, j) - pow_q(q, j))),
        d,
        d,
    );
    let f = (FormalSeries::one(d) + phase.exp_jet()?.scale(a)).scale(&(Q::one() / norm));
    Ok(TauFunction::uniform(
        1,
        spec.max_time_index,
        d,
        spec.radius,
        &f,
    ))
}

/// Monomials in `t_{αj}`, `j ≤ j_max`, of weight exactly `k`, in a fixed order.
pub fn monomials_of_weight(n: usize, j_max: u32, k: i32) -> Vec<Monomial> {
    let vars: Vec<Var> = (0..n)
        .flat_map(|c| (1..=j_max).map(move |j| Var::t(c, j)))
        .collect();
    let mut out = Vec::new();
    fn rec(vars: &[Var], rest: i32, acc: Monomial, out: &mut Vec<Monomial>) {
        if rest == 0 {
            out.push(acc);
            return;
        }
        let Some((&v, tail)) = vars.split_first() else {
            return;
        };
        let w = match v {
            Var::Time { index, .. } => index as i32,
            Var::Aux(_) => unreachable!(),
        };
        let mut e = 0;
        while e * w <= rest {
            rec(tail, rest - e * w, acc.mul(&Monomial::var(v, e)), out);
            e += 1;
        }
    }
    rec(&vars, k, Monomial::one(), &mut out);
    out
}

/// One differential Fay instance, evaluated in quotient form with jet
/// inverses. Multiplying through by the unit denominator gives the
/// cross-multiplied identity.
#[allow(clippy::upper_case_acronyms)]
#[derive(Clone, Debug, PartialEq, Eq)]
enum FayInstance {
    I {
        s: ChargeVector,
        a: usize,
    },
    II {
        s: ChargeVector,
        a: usize,
        b: usize,
    },
    III {
        s: ChargeVector,
        a: usize,
        b: usize,
    },
    IV {
        s: ChargeVector,
        a: usize,
        b: usize,
        k: usize,
    },
}

type Window = BTreeMap<ChargeVector, FormalSeries>;

fn shifted(w: &Window, s: &ChargeVector, shifts: &[(usize, Aux)]) -> FormalSeries {
    let mut f = w[s].clone();
    for &(g, v) in shifts {
        f = f.miwa_shifted(g, v, -1);
    }
    f
}

fn log_derivative(f: &FormalSeries, k: usize) -> Result<FormalSeries, SeriesError> {
    Ok(&f.derive(Var::t(k, 1)) * &f.inverse()?)
}

impl FayInstance {
    fn charges(&self) -> Vec<ChargeVector> {
        match self {
            FayInstance::I { s, .. } => vec![s.clone()],
            FayInstance::II { s, a, b } => vec![s.clone(), s.shifted(*a, *b), s.shifted(*b, *a)],
            FayInstance::III { s, a, b } => vec![s.clone(), s.shifted(*a, *b)],
            FayInstance::IV { s, a, b, k } => vec![
                s.clone(),
                s.shifted(*a, *b),
                s.shifted(*a, *k),
                s.shifted(*k, *b),
            ],
        }
    }

    fn label(&self) -> String {
        match self {
            FayInstance::I { s, a } => format!("DFI s={s} alpha={}", a + 1),
            FayInstance::II { s, a, b } => format!("DFII s={s} alpha={} beta={}", a + 1, b + 1),
            FayInstance::III { s, a, b } => format!("DFIII s={s} alpha={} beta={}", a + 1, b + 1),
            FayInstance::IV { s, a, b, k } => {
                format!("DFIV s={s} alpha={} beta={} kappa={}", a + 1, b + 1, k + 1)
            }
        }
    }

    fn eval(&self, w: &Window) -> Result<FormalSeries, SeriesError> {
        use Aux::{Mu, Nu};
        match self {
            FayInstance::I { s, a } => {
                let (a, t0) = (*a, &w[s]);
                let tm = shifted(w, s, &[(a, Mu)]);
                let tn = shifted(w, s, &[(a, Nu)]);
                let tmn = shifted(w, s, &[(a, Mu), (a, Nu)]);
                let ratio = &(t0 * &tmn) * &(&tm * &tn).inverse()? - FormalSeries::one(t0.cutoff());
                Ok(
                    log_derivative(&tm, a)? - log_derivative(&tn, a)? - ratio.mul_aux(Mu, 1)
                        + ratio.mul_aux(Nu, 1),
                )
            }
            FayInstance::II { s, a, b } => {
                let (a, b) = (*a, *b);
                let tm = shifted(w, s, &[(a, Mu)]);
                let tn = shifted(w, s, &[(a, Nu)]);
                let far = shifted(w, &s.shifted(b, a), &[(a, Mu), (a, Nu)]);
                let ratio = &(&w[&s.shifted(a, b)] * &far) * &(&tm * &tn).inverse()?;
                Ok(
                    log_derivative(&tm, b)? - log_derivative(&tn, b)? + ratio.mul_aux(Mu, -1)
                        - ratio.mul_aux(Nu, -1),
                )
            }
            FayInstance::III { s, a, b } => {
                let (a, b) = (*a, *b);
                let up = s.shifted(a, b);
                let x = shifted(w, &up, &[(b, Nu)]);
                let y = shifted(w, s, &[(a, Mu)]);
                let z = shifted(w, &up, &[(a, Mu), (b, Nu)]);
                let ratio = &(&w[s] * &z) * &(&x * &y).inverse()? - FormalSeries::one(x.cutoff());
                Ok(log_derivative(&x, a)? - log_derivative(&y, a)? + ratio.mul_aux(Mu, 1))
            }
            FayInstance::IV { s, a, b, k } => {
                let (a, b, k) = (*a, *b, *k);
                let up = s.shifted(a, b);
                let x = shifted(w, &up, &[(b, Nu)]);
                let y = shifted(w, s, &[(a, Mu)]);
                let far = shifted(w, &s.shifted(k, b), &[(a, Mu), (b, Nu)]);
                let c = eps(s, a, k) * eps(s, b, k) * eps(s, b, a);
                let ratio = &(&w[&s.shifted(a, k)] * &far) * &(&x * &y).inverse()?;
                Ok(log_derivative(&y, k)? - log_derivative(&x, k)?
                    + ratio.scale(&Q::from_integer(c.into())))
            }
        }
    }
}

/// Every instance whose charges all lie in the window.
fn instances(n: usize, charges: &[ChargeVector]) -> Vec<FayInstance> {
    let mut out = Vec::new();
    for s in charges {
        for a in 0..n {
            out.push(FayInstance::I { s: s.clone(), a });
            for b in (0..n).filter(|b| *b != a) {
                out.push(FayInstance::II { s: s.clone(), a, b });
                out.push(FayInstance::III { s: s.clone(), a, b });
                for k in (0..n).filter(|k| *k != a && *k != b) {
                    out.push(FayInstance::IV {
                        s: s.clone(),
                        a,
                        b,
                        k,
                    });
                }
            }
        }
    }
    out.retain(|i| i.charges().iter().all(|c| charges.contains(c)));
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LevelStats {
    pub level: i32,
    pub unknowns: usize,
    pub equations: usize,
    pub free: usize,
}

fn weight_rows(f: &FormalSeries, w: i32) -> BTreeMap<Monomial, Q> {
    f.weight_part(w).into_iter().collect()
}

/// Builds the tau coefficients weight by weight. At weight `k` the unknowns
/// are the weight-`k` coefficients of every in-window τ; they enter the
/// weight `k−1` coefficients of each identity linearly, with coefficients
/// read off from the unit background.
pub fn jet_solve(
    spec: &SolutionSpec,
    seed: u64,
    free: FreePolicy,
    budget: usize,
) -> Result<(TauFunction, Vec<LevelStats>), SolutionError> {
    let (n, d, j_max) = (spec.n, spec.cutoff, spec.max_time_index);
    if n == 0 {
        return Err(SolutionError::BadParams("N must be positive".into()));
    }
    let charges = ChargeVector::box_of(n, spec.radius);
    let insts = instances(n, &charges);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut window: Window = charges
        .iter()
        .map(|s| (s.clone(), FormalSeries::one(d)))
        .collect();
    let mut stats = Vec::new();
    for k in 1..=d {
        let monos = monomials_of_weight(n, j_max, k);
        let unknowns: Vec<(usize, &Monomial)> = (0..charges.len())
            .flat_map(|c| monos.iter().map(move |m| (c, m)))
            .collect();
        if unknowns.len() > budget {
            return Err(SolutionError::BudgetExceeded {
                level: k,
                unknowns: unknowns.len(),
                budget,
            });
        }
        let current: Window = window
            .iter()
            .map(|(s, f)| (s.clone(), f.with_cutoff(k)))
            .collect();
        let unit: Window = charges
            .iter()
            .map(|s| (s.clone(), FormalSeries::one(k)))
            .collect();
        let blocks: Vec<Result<Vec<Row>, SeriesError>> = insts
            .par_iter()
            .map(|inst| {
                let base = weight_rows(&inst.eval(&current)?, k - 1);
                let unit_val = inst.eval(&unit)?;
                let mut rows: BTreeMap<Monomial, Row> = base
                    .into_iter()
                    .map(|(m, c)| {
                        (
                            m,
                            Row {
                                coeffs: BTreeMap::new(),
                                rhs: -c,
                            },
                        )
                    })
                    .collect();
                let touched = inst.charges();
                for (col, (ci, mono)) in unknowns.iter().enumerate() {
                    let s = &charges[*ci];
                    if !touched.contains(s) {
                        continue;
                    }
                    let mut probe = unit.clone();
                    probe.insert(s.clone(), FormalSeries::one(k).perturbed(mono, &Q::one()));
                    let delta = &inst.eval(&probe)? - &unit_val;
                    for (m, c) in delta.weight_part(k - 1) {
                        rows.entry(m).or_default().coeffs.insert(col, c);
                    }
                }
                Ok(rows.into_values().collect())
            })
            .collect();
        let mut rows = Vec::new();
        let mut owners = Vec::new();
        for (i, b) in blocks.into_iter().enumerate() {
            let b = b?;
            owners.extend(std::iter::repeat_n(i, b.len()));
            rows.extend(b);
        }
        let fill = |_: usize| match free {
            FreePolicy::Random => Q::from_integer(rng.gen_range(-2i64..=2).into()),
            FreePolicy::Zero => Q::zero(),
        };
        match linsolve::solve(&rows, unknowns.len(), fill) {
            Outcome::Solved { x, free: fr } => {
                stats.push(LevelStats {
                    level: k,
                    unknowns: unknowns.len(),
                    equations: rows.len(),
                    free: fr.len(),
                });
                for ((ci, mono), v) in unknowns.iter().zip(x) {
                    if !v.is_zero() {
                        let s = &charges[*ci];
                        let f = window[s].perturbed(mono, &v);
                        window.insert(s.clone(), f);
                    }
                }
            }
            Outcome::Inconsistent(r) => {
                return Err(SolutionError::Inconsistent {
                    level: k,
                    constraint: insts[owners[r]].label(),
                });
            }
        }
    }
    let tau = TauFunction::new(n, j_max, d, spec.radius, window)?;
    Ok((tau, stats))
}

pub fn build(spec: &SolutionSpec) -> Result<TauFunction, SolutionError> {
    match &spec.kind {
        SolutionKind::Vacuum => Ok(vacuum_tau(spec)),
        SolutionKind::SolitonN1 { p, q, a } => soliton_tau_n1(spec, p, q, a),
        SolutionKind::Jet { seed, free, budget } => Ok(jet_solve(spec, *seed, *free, *budget)?.0),
    }
}
