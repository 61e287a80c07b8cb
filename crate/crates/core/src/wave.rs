//! Wave and adjoint wave matrices, the dressing operator, and the bilinear
//! residue identity.
//!
//! Wave entries are stored reduced: `Ψ̂_{αβ}` is `Ψ_{αβ}` with the factor
//! `z^{s_β} e^{ξ(t_β,z)}` removed (resp. `z^{-s_β} e^{-ξ(t_β,z)}` for Ψ*).

use crate::charge::{eps, ChargeVector};
use crate::psdo::MatrixPsdo;
use crate::report::{idx, params, CheckError, IdentityReport, Params};
use crate::series::{binomial_expand, Aux, FormalSeries, Monomial, Var, Q};
use crate::tau::TauFunction;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WaveMatrix {
    pub s: ChargeVector,
    pub var: Aux,
    pub n: usize,
    pub entries: Vec<FormalSeries>,
}

impl WaveMatrix {
    pub fn entry(&self, a: usize, b: usize) -> &FormalSeries {
        &self.entries[a * self.n + b]
    }
}

fn build_wave(
    tau: &TauFunction,
    s: &ChargeVector,
    var: Aux,
    adjoint: bool,
) -> Result<WaveMatrix, CheckError> {
    let n = tau.n();
    let inv = tau.tau_at(s)?.inverse()?;
    let mut entries = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let (charge, sign) = if adjoint {
                (s.shifted(b, a), 1)
            } else {
                (s.shifted(a, b), -1)
            };
            let shifted = tau.shifted(&charge, b, var, sign)?;
            let sgn = Q::from_integer(eps(s, a, b).into());
            let z_pow = if a == b { 0 } else { -1 };
            entries.push((&shifted * &inv).scale(&sgn).mul_aux(var, z_pow));
        }
    }
    Ok(WaveMatrix {
        s: s.clone(),
        var,
        n,
        entries,
    })
}

/// `Ψ̂_{αβ} = ε_{αβ}(s) τ(s+e_α−e_β, t−[var^{-1}]_β) τ(s,t)^{-1} var^{δ_{αβ}−1}`.
pub fn reduced_wave(
    tau: &TauFunction,
    s: &ChargeVector,
    var: Aux,
) -> Result<WaveMatrix, CheckError> {
    build_wave(tau, s, var, false)
}

pub fn wave_matrix(tau: &TauFunction, s: &ChargeVector) -> Result<WaveMatrix, CheckError> {
    build_wave(tau, s, Aux::Z, false)
}

/// `Ψ̂*_{αβ} = ε_{αβ}(s) τ(s−e_α+e_β, t+[z^{-1}]_β) τ(s,t)^{-1} z^{δ_{αβ}−1}`.
pub fn adjoint_wave_matrix(tau: &TauFunction, s: &ChargeVector) -> Result<WaveMatrix, CheckError> {
    build_wave(tau, s, Aux::Z, true)
}

/// `w_j`, the coefficient matrices of `z^{-j}` for `j = 1..=cutoff`.
pub fn w_coefficients(w: &WaveMatrix) -> Vec<Vec<FormalSeries>> {
    let depth = w
        .entries
        .iter()
        .map(FormalSeries::cutoff)
        .max()
        .unwrap_or(0);
    (1..=depth)
        .map(|j| w.entries.iter().map(|e| e.coeff_of(w.var, -j)).collect())
        .collect()
}

/// `Ŵ = I + Σ_j w_j ∂^{-j}` and its inverse.
pub fn sato_operators(w: &WaveMatrix, band: i32) -> Result<(MatrixPsdo, MatrixPsdo), CheckError> {
    let entries: Vec<FormalSeries> = w
        .entries
        .iter()
        .map(|e| e.rename_aux(w.var, Aux::D))
        .collect();
    let what = MatrixPsdo::from_entries(w.n, band, entries)?;
    let inv = what.invert_unit()?;
    Ok((what, inv))
}

/// The reduced wave of the trivial dressing: the identity matrix.
pub fn identity_wave(n: usize, cutoff: i32) -> Vec<FormalSeries> {
    let mut v = vec![FormalSeries::zero(cutoff); n * n];
    for i in 0..n {
        v[i * n + i] = FormalSeries::one(cutoff);
    }
    v
}

/// Corrupts one coefficient of `Ŵ`: adds `delta·∂^{-j}` at entry `(a, b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DressingFault {
    pub a: usize,
    pub b: usize,
    pub j: i32,
    pub delta: Q,
}

/// Compares `Ψ̂` with `Ŵ` applied to the identity wave.
pub fn verify_wave_factorization(
    tau: &TauFunction,
    s: &ChargeVector,
    band: i32,
    fault: Option<&DressingFault>,
) -> IdentityReport {
    let p = params(&[("s", s.to_string())]);
    let run = || -> Result<Vec<(String, FormalSeries)>, CheckError> {
        let wave = wave_matrix(tau, s)?;
        let (mut what, _) = sato_operators(&wave, band)?;
        if let Some(f) = fault {
            let bump = FormalSeries::term(
                Monomial::var(Var::Aux(Aux::D), -f.j),
                f.delta.clone(),
                what.cutoff(),
            );
            let e = what.entry(f.a, f.b) + &bump;
            what.set_entry(f.a, f.b, e);
        }
        let applied = what.apply_to_wave(&identity_wave(tau.n(), tau.cutoff()))?;
        Ok(entry_differences(tau.n(), &applied, &wave.entries))
    };
    IdentityReport::from_result("WAVE_FACTORIZATION", p, run())
}

pub(crate) fn entry_differences(
    n: usize,
    a: &[FormalSeries],
    b: &[FormalSeries],
) -> Vec<(String, FormalSeries)> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((
                format!("({},{})", i + 1, j + 1),
                &a[i * n + j] - &b[i * n + j],
            ));
        }
    }
    out
}

/// One instance of the bilinear identity: charges `s, s'`, indices `α, β`
/// and `t' = t − Σ [var^{-1}]_γ` over at most two shifts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilinearSpec {
    pub s: ChargeVector,
    pub s2: ChargeVector,
    pub alpha: usize,
    pub beta: usize,
    pub shifts: Vec<(usize, Aux)>,
}

impl BilinearSpec {
    pub fn params(&self) -> Params {
        let shifts: Vec<String> = self
            .shifts
            .iter()
            .map(|(g, v)| format!("{}@{}", v.name(), g + 1))
            .collect();
        params(&[
            ("s", self.s.to_string()),
            ("s2", self.s2.to_string()),
            ("alpha", idx(self.alpha)),
            ("beta", idx(self.beta)),
            ("shifts", format!("[{}]", shifts.join(","))),
        ])
    }
}

/// Every admissible shift list: none, one μ-shift, or μ- and ν-shifts.
pub fn shift_specs(n: usize) -> Vec<Vec<(usize, Aux)>> {
    let mut out = vec![Vec::new()];
    for g in 0..n {
        out.push(vec![(g, Aux::Mu)]);
    }
    for g in 0..n {
        for h in 0..n {
            out.push(vec![(g, Aux::Mu), (h, Aux::Nu)]);
        }
    }
    out
}

/// The residue `Σ_γ ε_{αγ}(s) ε_{βγ}(s') Res_z z^{n_γ} e^{ξ(t_γ−t'_γ,z)} τ(…) τ(…)`.
pub fn bilinear_residue(
    tau: &TauFunction,
    spec: &BilinearSpec,
) -> Result<FormalSeries, CheckError> {
    let n = tau.n();
    let d = tau.cutoff();
    let (s, s2) = (&spec.s, &spec.s2);
    let mut total = FormalSeries::zero(d);
    // window check first so that partial evaluation never masks a skip
    for g in 0..n {
        tau.tau_at(&s.shifted(spec.alpha, g))?;
        tau.tau_at(&s2.shifted(g, spec.beta))?;
    }
    for g in 0..n {
        let left = tau.shifted(&s.shifted(spec.alpha, g), g, Aux::Z, -1)?;
        let mut right = tau.tau_at(&s2.shifted(g, spec.beta))?.clone();
        for (h, v) in &spec.shifts {
            right = right.miwa_shifted(*h, *v, -1);
        }
        right = right.miwa_shifted(g, Aux::Z, 1);
        let n_g = s.0[g] - s2.0[g] + (spec.alpha == g) as i32 + (spec.beta == g) as i32 - 2;
        let mut body = (&left * &right).mul_aux(Aux::Z, n_g);
        // the geometric factors only need enough terms to reach z^{-1}
        let depth = body.aux_range(Aux::Z).map_or(0, |(lo, _)| -lo);
        let k_max = (depth - 1).max(0) as u32;
        for (h, v) in &spec.shifts {
            if *h == g {
                body = &body * &binomial_expand(Aux::Z, *v, -1, k_max, d);
            }
        }
        let sign = eps(s, spec.alpha, g) * eps(s2, spec.beta, g);
        let res = body.coeff_of(Aux::Z, -1);
        total = &total + &res.scale(&Q::from_integer(sign.into()));
    }
    Ok(total)
}

pub fn bilinear_check(tau: &TauFunction, spec: &BilinearSpec) -> IdentityReport {
    IdentityReport::from_series("BILINEAR", spec.params(), bilinear_residue(tau, spec))
}

/// All bilinear instances over the window.
pub fn all_bilinear_specs(tau: &TauFunction) -> Vec<BilinearSpec> {
    let n = tau.n();
    let charges: Vec<ChargeVector> = tau.charges().cloned().collect();
    let mut out = Vec::new();
    for s in &charges {
        for s2 in &charges {
            for alpha in 0..n {
                for beta in 0..n {
                    for shifts in shift_specs(n) {
                        out.push(BilinearSpec {
                            s: s.clone(),
                            s2: s2.clone(),
                            alpha,
                            beta,
                            shifts,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Wave entries evaluated at `var^{-1} = 0`.
pub fn at_infinity(w: &WaveMatrix) -> Vec<FormalSeries> {
    w.entries.iter().map(|e| e.coeff_of(w.var, 0)).collect()
}
