//! Lax operators, the linear problems for the wave matrix in the time and
//! charge directions, and the Lax equations.

use crate::charge::{eps, ChargeVector};
use crate::fay::check_indices;
use crate::psdo::{MatrixPsdo, PsdoError};
use crate::report::{idx, params, CheckError, IdentityReport, Params};
use crate::series::{Aux, FormalSeries, Monomial, Var, Q};
use crate::tau::TauFunction;
use crate::wave::{entry_differences, sato_operators, wave_matrix, WaveMatrix};

type Parts = Vec<(String, FormalSeries)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaxBundle {
    pub s: ChargeVector,
    pub band: i32,
    pub wave: WaveMatrix,
    pub l: MatrixPsdo,
    pub r: Vec<MatrixPsdo>,
    pub w: MatrixPsdo,
    pub w_inv: MatrixPsdo,
}

/// Adds `delta·∂^{-1}` to the diagonal entry `(α, α)` of `R_α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaxFault {
    pub alpha: usize,
    pub delta: Q,
}

fn sq(e: i32) -> Q {
    Q::from_integer(e.into())
}

fn psdo_parts(label: &str, m: &MatrixPsdo) -> Parts {
    let n = m.n();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((
                format!("{label}({},{})", i + 1, j + 1),
                m.entry(i, j).clone(),
            ));
        }
    }
    out
}

/// `L = Ŵ∂Ŵ^{-1}` and `R_α = ŴE_αŴ^{-1}` at one charge.
pub fn build_lax(tau: &TauFunction, s: &ChargeVector, band: i32) -> Result<LaxBundle, CheckError> {
    let wave = wave_matrix(tau, s)?;
    let (w, w_inv) = sato_operators(&wave, band)?;
    let n = tau.n();
    let l = w.times_d(1)?.compose(&w_inv)?;
    let r = (0..n)
        .map(|a| {
            w.compose(&MatrixPsdo::unit(n, a, band, w.cutoff()))?
                .compose(&w_inv)
        })
        .collect::<Result<Vec<_>, PsdoError>>()?;
    Ok(LaxBundle {
        s: s.clone(),
        band,
        wave,
        l,
        r,
        w,
        w_inv,
    })
}

impl LaxBundle {
    pub fn with_fault(mut self, f: &LaxFault) -> LaxBundle {
        let r = &mut self.r[f.alpha];
        let bump = FormalSeries::term(
            Monomial::var(Var::Aux(Aux::D), -1),
            f.delta.clone(),
            r.cutoff(),
        );
        let e = r.entry(f.alpha, f.alpha) + &bump;
        r.set_entry(f.alpha, f.alpha, e);
        self
    }

    fn n(&self) -> usize {
        self.l.n()
    }

    /// `(L^j R_α)_+`.
    pub fn b_from_lax(&self, a: usize, j: u32) -> Result<MatrixPsdo, CheckError> {
        Ok(self.l.power(j)?.compose(&self.r[a])?.plus_part())
    }

    /// `(Ŵ E_α ∂^j Ŵ^{-1})_+`.
    pub fn b_from_dressing(&self, a: usize, j: u32) -> Result<MatrixPsdo, CheckError> {
        Ok(self.dressed_power(a, j)?.plus_part())
    }

    fn dressed_power(&self, a: usize, j: u32) -> Result<MatrixPsdo, CheckError> {
        let unit = MatrixPsdo::unit(self.n(), a, self.band, self.w.cutoff()).times_d(j as i32)?;
        Ok(self.w.compose(&unit)?.compose(&self.w_inv)?)
    }
}

/// `B_{αj}`, computed both from `L, R_α` and from the dressing operator;
/// the two must agree at every trusted coefficient.
pub fn build_b(bundle: &LaxBundle, a: usize, j: u32) -> Result<MatrixPsdo, CheckError> {
    if j as i32 + 2 > bundle.band {
        return Err(PsdoError::BandOverflow {
            power: j as i32 + 2,
            band: bundle.band,
        }
        .into());
    }
    let via_lax = bundle.b_from_lax(a, j)?;
    let via_dressing = bundle.b_from_dressing(a, j)?;
    let diff = via_lax.sub(&via_dressing).trusted_discrepancies();
    if let Some((r, c, m, v)) = diff.first() {
        return Err(CheckError::Internal(format!(
            "InternalMismatch: B constructions differ at ({},{}) {m} by {v}",
            r + 1,
            c + 1
        )));
    }
    Ok(via_lax)
}

/// Reports the agreement of the two `B` constructions.
pub fn check_b_constructions(bundle: &LaxBundle, a: usize, j: u32) -> IdentityReport {
    let p = params(&[
        ("s", bundle.s.to_string()),
        ("alpha", idx(a)),
        ("j", j.to_string()),
    ]);
    let r = (|| {
        Ok(psdo_parts(
            "",
            &bundle.b_from_lax(a, j)?.sub(&bundle.b_from_dressing(a, j)?),
        ))
    })();
    IdentityReport::from_result("B_CONSTRUCTIONS", p, r)
}

/// `LR_α = R_αL`, `R_αR_β = δ_{αβ}R_α` and `Σ_α R_α = I`, one report each.
pub fn check_algebra(bundle: &LaxBundle) -> Vec<IdentityReport> {
    let n = bundle.n();
    let p = params(&[("s", bundle.s.to_string())]);
    let commute = (|| {
        let mut parts = Vec::new();
        for (a, r) in bundle.r.iter().enumerate() {
            parts.extend(psdo_parts(
                &format!("R{} ", a + 1),
                &bundle.l.commutator(r)?,
            ));
        }
        Ok(parts)
    })();
    let idempotent = (|| {
        let mut parts = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let mut prod = bundle.r[a].compose(&bundle.r[b])?;
                if a == b {
                    prod = prod.sub(&bundle.r[a]);
                }
                parts.extend(psdo_parts(&format!("R{}R{} ", a + 1, b + 1), &prod));
            }
        }
        Ok(parts)
    })();
    let ident = MatrixPsdo::identity(n, bundle.band, bundle.l.cutoff());
    let total = bundle
        .r
        .iter()
        .fold(ident.scale(&Q::from_integer((-1).into())), |acc, r| {
            acc.add(r)
        });
    vec![
        IdentityReport::from_result("ALGEBRA_COMMUTE", p.clone(), commute),
        IdentityReport::from_result("ALGEBRA_IDEMPOTENT", p.clone(), idempotent),
        IdentityReport::from_result("ALGEBRA_PARTITION", p, Ok(psdo_parts("", &total))),
    ]
}

fn dlog(f: &FormalSeries, k: usize) -> Result<FormalSeries, CheckError> {
    Ok(&f.derive(Var::t(k, 1)) * &f.inverse()?)
}

/// The operators `𝔅`, `ℭ`, `𝔇 = 𝔅E_α + E_αℭ` of the Miwa-shift linear
/// problem, with spectral parameter `λ`. Only column α of `𝔅` and row α of
/// `ℭ` enter `𝔇`; the other entries are left zero.
pub fn frak_operators(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    band: i32,
) -> Result<(MatrixPsdo, MatrixPsdo, MatrixPsdo), CheckError> {
    let n = tau.n();
    let d = tau.cutoff();
    let t0 = tau.tau_at(s)?;
    let inv = t0.inverse()?;
    let t_lam = tau.shifted(s, a, Aux::Lambda, -1)?;
    let lam_inv = |f: FormalSeries| f.mul_aux(Aux::Lambda, -1);
    let mut b = vec![FormalSeries::zero(d); n * n];
    let mut c = vec![FormalSeries::zero(d); n * n];
    for beta in 0..n {
        let jump = dlog(&t_lam, beta)? - dlog(t0, beta)?;
        if beta == a {
            let op = FormalSeries::aux_power(Aux::D, 1, d) - jump;
            b[a * n + a] = lam_inv(op);
        } else {
            let ratio = t0 * &tau.tau_at(&s.shifted(a, beta))?.inverse()?;
            b[beta * n + a] = (&ratio * &jump).scale(&sq(-eps(s, beta, a)));
            let off = tau.tau_at(&s.shifted(a, beta))? * &inv;
            c[a * n + beta] = lam_inv(off.scale(&sq(-eps(s, a, beta))));
        }
    }
    let b = MatrixPsdo::from_entries(n, band, b)?;
    let c = MatrixPsdo::from_entries(n, band, c)?;
    let e = MatrixPsdo::unit(n, a, band, d);
    let frak_d = b.compose(&e)?.add(&e.compose(&c)?);
    Ok((b, c, frak_d))
}

fn component_group(a: usize, i: usize, j: usize) -> &'static str {
    match (i == a, j == a) {
        (true, true) => "diagonal",
        (false, true) => "column",
        (true, false) => "row",
        (false, false) => "spectator",
    }
}

/// `Ψ̂ − (Ψ̂ shifted by −[λ^{-1}]_α)·(1 − z/λ)^{δ_{κα}} = 𝔇Ψ̂`, reported in the
/// four component groups.
pub fn check_miwa_linear(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    band: i32,
) -> Vec<IdentityReport> {
    const GROUPS: [&str; 4] = ["diagonal", "column", "row", "spectator"];
    let p = params(&[("s", s.to_string()), ("alpha", idx(a))]);
    let run = || -> Result<Vec<Parts>, CheckError> {
        check_indices(tau, 1, &[a])?;
        let n = tau.n();
        let d = tau.cutoff();
        let wave = wave_matrix(tau, s)?;
        let (_, _, frak_d) = frak_operators(tau, s, a, band)?;
        let rhs = frak_d.apply_to_wave(&wave.entries)?;
        let factor = FormalSeries::one(d)
            - FormalSeries::term(
                Monomial::from_vars([(Var::Aux(Aux::Z), 1), (Var::Aux(Aux::Lambda), -1)]),
                Q::from_integer(1.into()),
                d,
            );
        let mut groups: Vec<Parts> = vec![Vec::new(); 4];
        for i in 0..n {
            for j in 0..n {
                let psi = wave.entry(i, j);
                let mut moved = psi.miwa_shifted(a, Aux::Lambda, -1);
                if j == a {
                    moved = &moved * &factor;
                }
                let diff = psi - &moved - rhs[i * n + j].clone();
                let g = GROUPS
                    .iter()
                    .position(|x| *x == component_group(a, i, j))
                    .unwrap();
                groups[g].push((format!("({},{})", i + 1, j + 1), diff));
            }
        }
        Ok(groups)
    };
    match run() {
        Ok(groups) => GROUPS
            .iter()
            .zip(groups)
            .filter(|(_, parts)| !parts.is_empty())
            .map(|(g, parts)| {
                let mut q = p.clone();
                q.insert("group".into(), g.to_string());
                IdentityReport::from_parts("LINEAR_MIWA", q, &parts)
            })
            .collect(),
        Err(e) => vec![IdentityReport::from_error("LINEAR_MIWA", p, &e)],
    }
}

/// `∂Ψ̂_{·β}/∂t_{αj} + δ_{αβ} z^j Ψ̂_{·β} = B_{αj}Ψ̂`.
pub fn check_time_flow(tau: &TauFunction, bundle: &LaxBundle, a: usize, j: u32) -> IdentityReport {
    let p = params(&[
        ("s", bundle.s.to_string()),
        ("alpha", idx(a)),
        ("j", j.to_string()),
    ]);
    let run = || -> Result<Parts, CheckError> {
        check_indices(tau, 1, &[a])?;
        let n = tau.n();
        let b = build_b(bundle, a, j)?;
        let psi = &bundle.wave.entries;
        let rhs = b.apply_to_wave(psi)?;
        let lhs: Vec<FormalSeries> = (0..n * n)
            .map(|k| {
                let mut e = psi[k].derive(Var::t(a, j));
                if k % n == a {
                    e = e + psi[k].mul_aux(Aux::Z, j as i32);
                }
                e
            })
            .collect();
        Ok(entry_differences(n, &lhs, &rhs))
    };
    IdentityReport::from_result("LINEAR_TIME", p, run())
}

/// `∂_{t_{αj}}Ŵ · Ŵ^{-1} = −(ŴE_α∂^jŴ^{-1})_−`.
pub fn check_sato(bundle: &LaxBundle, a: usize, j: u32) -> IdentityReport {
    let p = params(&[
        ("s", bundle.s.to_string()),
        ("alpha", idx(a)),
        ("j", j.to_string()),
    ]);
    let run = || -> Result<Parts, CheckError> {
        let lhs = bundle.w.derive(Var::t(a, j)).compose(&bundle.w_inv)?;
        let rhs = bundle.dressed_power(a, j)?.minus_part();
        Ok(psdo_parts("", &lhs.add(&rhs)))
    };
    IdentityReport::from_result("SATO", p, run())
}

/// `ℌ(s)` restricted to the entries read by `P`: column α when `column`,
/// otherwise row α.
fn frak_h(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    column: bool,
) -> Result<Vec<FormalSeries>, CheckError> {
    let n = tau.n();
    let t0 = tau.tau_at(s)?;
    let inv = t0.inverse()?;
    let mut out = vec![FormalSeries::zero(tau.cutoff()); n * n];
    for k in 0..n {
        let (row, col) = if column { (k, a) } else { (a, k) };
        out[row * n + col] = if row == col {
            -&dlog(t0, col)?
        } else {
            (tau.tau_at(&s.shifted(row, col))? * &inv).scale(&sq(eps(s, row, col)))
        };
    }
    Ok(out)
}

/// `P_{α,β} = E_α∂ + ℌ(s+e_α−e_β)E_α − E_αℌ(s) + Σ_{γ≠α,β} E_γ`.
pub fn build_p(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    band: i32,
) -> Result<MatrixPsdo, CheckError> {
    check_indices(tau, 2, &[a, b])?;
    let n = tau.n();
    let d = tau.cutoff();
    let up = s.shifted(a, b);
    let h_up = frak_h(tau, &up, a, true)?;
    let h_s = frak_h(tau, s, a, false)?;
    let mut entries: Vec<FormalSeries> = h_up.iter().zip(&h_s).map(|(x, y)| x - y).collect();
    entries[a * n + a] = &entries[a * n + a] + &FormalSeries::aux_power(Aux::D, 1, d);
    for g in (0..n).filter(|g| *g != a && *g != b) {
        entries[g * n + g] = &entries[g * n + g] + &FormalSeries::one(d);
    }
    Ok(MatrixPsdo::from_entries(n, band, entries)?)
}

/// `Ψ̂(s+e_α−e_β)_{·γ} z^{δ_{γα}−δ_{γβ}} = P_{α,β}Ψ̂(s)`.
pub fn check_charge_shift(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    band: i32,
) -> IdentityReport {
    let p = params(&[("s", s.to_string()), ("alpha", idx(a)), ("beta", idx(b))]);
    let run = || -> Result<Parts, CheckError> {
        check_indices(tau, 2, &[a, b])?;
        let n = tau.n();
        let pm = build_p(tau, s, a, b, band)?;
        let rhs = pm.apply_to_wave(&wave_matrix(tau, s)?.entries)?;
        let up = wave_matrix(tau, &s.shifted(a, b))?;
        let lhs: Vec<FormalSeries> = (0..n * n)
            .map(|k| {
                let g = k % n;
                let pow = (g == a) as i32 - (g == b) as i32;
                up.entries[k].mul_aux(Aux::Z, pow)
            })
            .collect();
        Ok(entry_differences(n, &lhs, &rhs))
    };
    IdentityReport::from_result("LINEAR_CHARGE", p, run())
}

/// Which Lax equation family to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaxFamily {
    /// `∂L/∂t_{γj} = [B_{γj}, L]`
    TimeL,
    /// `∂R_β/∂t_{γj} = [B_{γj}, R_β]` for every β
    TimeR,
    /// `L(s+e_α−e_β)P = PL(s)`
    ChargeL,
    /// `R_γ(s+e_α−e_β)P = PR_γ(s)` for every γ
    ChargeR,
    /// `∂P/∂t_{γj} = B_{γj}(s+e_α−e_β)P − PB_{γj}(s)`
    TimeP,
}

impl LaxFamily {
    pub const ALL: [LaxFamily; 5] = [
        LaxFamily::TimeL,
        LaxFamily::TimeR,
        LaxFamily::ChargeL,
        LaxFamily::ChargeR,
        LaxFamily::TimeP,
    ];

    pub fn id(self) -> &'static str {
        match self {
            LaxFamily::TimeL => "LAX_TIME_L",
            LaxFamily::TimeR => "LAX_TIME_R",
            LaxFamily::ChargeL => "LAX_CHARGE_L",
            LaxFamily::ChargeR => "LAX_CHARGE_R",
            LaxFamily::TimeP => "LAX_TIME_P",
        }
    }

    fn needs_shift(self) -> bool {
        !matches!(self, LaxFamily::TimeL | LaxFamily::TimeR)
    }
}

/// One Lax equation instance. Time flows use `(γ, j)`; the charge families
/// use the shift `s → s+e_α−e_β`. `here` must be the bundle at `s` and
/// `there` the bundle at `s+e_α−e_β` when the family needs it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaxInstance {
    pub family: LaxFamily,
    pub gamma: usize,
    pub j: u32,
    pub alpha: usize,
    pub beta: usize,
}

impl LaxInstance {
    pub fn params(&self, s: &ChargeVector) -> Params {
        let mut p = params(&[("s", s.to_string())]);
        match self.family {
            LaxFamily::TimeL | LaxFamily::TimeR => {
                p.insert("gamma".into(), idx(self.gamma));
                p.insert("j".into(), self.j.to_string());
            }
            LaxFamily::ChargeL | LaxFamily::ChargeR => {
                p.insert("alpha".into(), idx(self.alpha));
                p.insert("beta".into(), idx(self.beta));
            }
            LaxFamily::TimeP => {
                p.insert("alpha".into(), idx(self.alpha));
                p.insert("beta".into(), idx(self.beta));
                p.insert("gamma".into(), idx(self.gamma));
                p.insert("j".into(), self.j.to_string());
            }
        }
        p
    }
}

pub fn check_lax(
    tau: &TauFunction,
    here: &LaxBundle,
    there: Option<&LaxBundle>,
    inst: &LaxInstance,
) -> IdentityReport {
    let p = inst.params(&here.s);
    let band = here.band;
    let run = || -> Result<Parts, CheckError> {
        let time = Var::t(inst.gamma, inst.j);
        let pm = if inst.family.needs_shift() {
            let up = here.s.shifted(inst.alpha, inst.beta);
            match there {
                Some(t) if t.s == up => {}
                _ => return Err(CheckError::OutsideWindow(up)),
            }
            Some(build_p(tau, &here.s, inst.alpha, inst.beta, band)?)
        } else {
            None
        };
        let there = || there.expect("checked above");
        let pm = || pm.as_ref().expect("built above");
        Ok(match inst.family {
            LaxFamily::TimeL => {
                let b = build_b(here, inst.gamma, inst.j)?;
                psdo_parts("", &here.l.derive(time).sub(&b.commutator(&here.l)?))
            }
            LaxFamily::TimeR => {
                let b = build_b(here, inst.gamma, inst.j)?;
                let mut parts = Vec::new();
                for (k, r) in here.r.iter().enumerate() {
                    parts.extend(psdo_parts(
                        &format!("R{} ", k + 1),
                        &r.derive(time).sub(&b.commutator(r)?),
                    ));
                }
                parts
            }
            LaxFamily::ChargeL => {
                psdo_parts("", &there().l.compose(pm())?.sub(&pm().compose(&here.l)?))
            }
            LaxFamily::ChargeR => {
                let mut parts = Vec::new();
                for (k, (r_up, r)) in there().r.iter().zip(&here.r).enumerate() {
                    let diff = r_up.compose(pm())?.sub(&pm().compose(r)?);
                    parts.extend(psdo_parts(&format!("R{} ", k + 1), &diff));
                }
                parts
            }
            LaxFamily::TimeP => {
                let b_up = build_b(there(), inst.gamma, inst.j)?;
                let b = build_b(here, inst.gamma, inst.j)?;
                let rhs = b_up.compose(pm())?.sub(&pm().compose(&b)?);
                psdo_parts("", &pm().derive(time).sub(&rhs))
            }
        })
    };
    IdentityReport::from_result(inst.family.id(), p, run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Status;
    use crate::series::q;

    fn same(a: &FormalSeries, b: &FormalSeries) -> bool {
        (a - b).trusted_terms().is_empty()
    }

    fn flat(n: usize, d: i32) -> TauFunction {
        TauFunction::uniform(n, d as u32, d, 1, &FormalSeries::one(d))
    }

    #[test]
    fn single_component_flat_lax_is_bare_derivative() {
        let tau = flat(1, 3);
        let bundle = build_lax(&tau, &ChargeVector::zero(1), 4).unwrap();
        assert!(same(
            bundle.l.entry(0, 0),
            &FormalSeries::aux_power(Aux::D, 1, 3)
        ));
        let b = build_b(&bundle, 0, 2).unwrap();
        assert!(same(b.entry(0, 0), &FormalSeries::aux_power(Aux::D, 2, 3)));
        assert_eq!(check_time_flow(&tau, &bundle, 0, 1).status, Status::Pass);
        assert_eq!(check_sato(&bundle, 0, 1).status, Status::Pass);
        assert!(check_algebra(&bundle)
            .iter()
            .all(|r| r.status == Status::Pass));
    }

    #[test]
    fn two_component_flat_partition_holds_and_fault_breaks_it() {
        let tau = flat(2, 3);
        let bundle = build_lax(&tau, &ChargeVector::zero(2), 4).unwrap();
        let sum = bundle.r[0].add(&bundle.r[1]);
        assert!(sum
            .sub(&MatrixPsdo::identity(2, 4, 3))
            .trusted_discrepancies()
            .is_empty());
        let bad = bundle.with_fault(&LaxFault {
            alpha: 0,
            delta: q(1),
        });
        let reps = check_algebra(&bad);
        assert_eq!(reps[2].status, Status::Fail);
    }

    #[test]
    fn band_budget_for_b() {
        let tau = flat(1, 2);
        let bundle = build_lax(&tau, &ChargeVector::zero(1), 3).unwrap();
        assert!(matches!(
            build_b(&bundle, 0, 2),
            Err(CheckError::Psdo(PsdoError::BandOverflow {
                power: 4,
                band: 3
            }))
        ));
    }

    #[test]
    fn flat_vacuum_miwa_operators() {
        let tau = flat(2, 3);
        let (b, c, _) = frak_operators(&tau, &ChargeVector::zero(2), 0, 4).unwrap();
        let lam_d = FormalSeries::term(
            Monomial::from_vars([(Var::Aux(Aux::D), 1), (Var::Aux(Aux::Lambda), -1)]),
            q(1),
            3,
        );
        assert!(same(b.entry(0, 0), &lam_d));
        assert!(c.entry(0, 0).is_empty());
        assert!(same(
            c.entry(0, 1),
            &FormalSeries::aux_power(Aux::Lambda, -1, 3).scale(&q(-1))
        ));
    }
}
