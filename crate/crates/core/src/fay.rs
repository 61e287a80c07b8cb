//! Differential and difference Fay identities, checked as exact jet
//! identities after clearing every non-unit denominator.
//!
//! Notation in comments: `τ_μ = τ(s, t−[μ^{-1}]_α)`, `τ_{μν}` likewise with
//! both shifts, and `∂_κ = ∂/∂t_{κ1}`.

use crate::charge::{ChargeError, ChargeVector, Signs};
use crate::report::{idx, params, CheckError, IdentityReport, Params};
use crate::series::{Aux, FormalSeries, Var, Q};
use crate::tau::TauFunction;

type Parts = Vec<(String, FormalSeries)>;

/// Validates N, index range and distinctness, in that order.
pub(crate) fn check_indices(
    tau: &TauFunction,
    need: usize,
    ix: &[usize],
) -> Result<(), CheckError> {
    let n = tau.n();
    if n < need {
        return Err(CheckError::InsufficientN { need, have: n });
    }
    if let Some(&index) = ix.iter().find(|&&i| i >= n) {
        return Err(CheckError::Charge(ChargeError::IndexOutOfRange {
            index,
            n,
        }));
    }
    for (k, i) in ix.iter().enumerate() {
        if ix[..k].contains(i) {
            return Err(CheckError::IndicesNotDistinct);
        }
    }
    Ok(())
}

/// Fails with `OutsideWindow` unless every charge is present.
fn require(tau: &TauFunction, charges: &[&ChargeVector]) -> Result<(), CheckError> {
    for s in charges {
        tau.tau_at(s)?;
    }
    Ok(())
}

/// `τ(s, t − Σ[var^{-1}]_γ)`.
fn sh(
    tau: &TauFunction,
    s: &ChargeVector,
    shifts: &[(usize, Aux)],
) -> Result<FormalSeries, CheckError> {
    let mut f = tau.tau_at(s)?.clone();
    for &(g, v) in shifts {
        f = f.miwa_shifted(g, v, -1);
    }
    Ok(f)
}

fn dt(f: &FormalSeries, k: usize) -> FormalSeries {
    f.derive(Var::t(k, 1))
}

fn dlog(f: &FormalSeries, k: usize) -> Result<FormalSeries, CheckError> {
    Ok(&dt(f, k) * &f.inverse()?)
}

fn sq(e: i32) -> Q {
    Q::from_integer(e.into())
}

fn single(f: FormalSeries) -> Parts {
    vec![(String::new(), f)]
}

fn base_params(s: &ChargeVector, names: &[&str], ix: &[usize]) -> Params {
    let mut p = params(&[("s", s.to_string())]);
    for (n, i) in names.iter().zip(ix) {
        p.insert(n.to_string(), idx(*i));
    }
    p
}

/// `∂τ_μ·τ_ν − ∂τ_ν·τ_μ + (μ−ν)(τ_μτ_ν − τ·τ_{μν})`, all shifts and `∂` at α.
pub fn dfi_expr(tau: &TauFunction, s: &ChargeVector, a: usize) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 1, &[a])?;
    let t0 = tau.tau_at(s)?;
    let tm = sh(tau, s, &[(a, Aux::Mu)])?;
    let tn = sh(tau, s, &[(a, Aux::Nu)])?;
    let tmn = sh(tau, s, &[(a, Aux::Mu), (a, Aux::Nu)])?;
    let diff = &tm * &tn - t0 * &tmn;
    Ok(&dt(&tm, a) * &tn - &dt(&tn, a) * &tm + diff.mul_aux(Aux::Mu, 1) - diff.mul_aux(Aux::Nu, 1))
}

/// `∂_βτ_μ·τ_ν − ∂_βτ_ν·τ_μ + (μ^{-1}−ν^{-1})·τ(s+e_α−e_β)·τ(s−e_α+e_β)_{μν}`.
pub fn dfii_expr(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 2, &[a, b])?;
    let (up, down) = (s.shifted(a, b), s.shifted(b, a));
    require(tau, &[s, &up, &down])?;
    let tm = sh(tau, s, &[(a, Aux::Mu)])?;
    let tn = sh(tau, s, &[(a, Aux::Nu)])?;
    let cross = tau.tau_at(&up)? * &sh(tau, &down, &[(a, Aux::Mu), (a, Aux::Nu)])?;
    Ok(
        &dt(&tm, b) * &tn - &dt(&tn, b) * &tm + cross.mul_aux(Aux::Mu, -1)
            - cross.mul_aux(Aux::Nu, -1),
    )
}

/// With `X = τ(s+e_α−e_β)_{ν@β}`, `Y = τ_{μ@α}`, `Z = τ(s+e_α−e_β)_{μ@α,ν@β}`:
/// `∂_αX·Y − ∂_αY·X − μXY + μτZ`.
pub fn dfiii_expr(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 2, &[a, b])?;
    let up = s.shifted(a, b);
    require(tau, &[s, &up])?;
    let x = sh(tau, &up, &[(b, Aux::Nu)])?;
    let y = sh(tau, s, &[(a, Aux::Mu)])?;
    let z = sh(tau, &up, &[(a, Aux::Mu), (b, Aux::Nu)])?;
    let tail = (tau.tau_at(s)? * &z - &x * &y).mul_aux(Aux::Mu, 1);
    Ok(&dt(&x, a) * &y - &dt(&y, a) * &x + tail)
}

/// `∂_κY·X − ∂_κX·Y + c·τ(s+e_α−e_κ)·τ(s−e_β+e_κ)_{μ@α,ν@β}` with
/// `c = ε_{ακ}(s)ε_{βκ}(s)/ε_{βα}(s)` and `X`, `Y` as in [`dfiii_expr`].
pub fn dfiv_expr(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    k: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 3, &[a, b, k])?;
    let sg = Signs::standard();
    let (up, ak, kb) = (s.shifted(a, b), s.shifted(a, k), s.shifted(k, b));
    require(tau, &[s, &up, &ak, &kb])?;
    let x = sh(tau, &up, &[(b, Aux::Nu)])?;
    let y = sh(tau, s, &[(a, Aux::Mu)])?;
    let c = sg.eps(s, a, k) * sg.eps(s, b, k) * sg.eps(s, b, a);
    let tail = (tau.tau_at(&ak)? * &sh(tau, &kb, &[(a, Aux::Mu), (b, Aux::Nu)])?).scale(&sq(c));
    Ok(&dt(&y, k) * &x - &dt(&x, k) * &y + tail)
}

/// CFI left-hand side for distinct `α, β, λ, κ`, with `s' = s+e_λ−e_κ`.
pub fn cfi_expr_with(
    sg: &Signs,
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    l: usize,
    k: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 4, &[a, b, l, k])?;
    let sp = s.shifted(l, k);
    let (c1, c2, c3, c4) = (
        sp.shifted(a, b),
        s.shifted(a, b),
        s.shifted(a, k),
        s.shifted(l, b),
    );
    require(tau, &[s, &sp, &c1, &c2, &c3, &c4])?;
    let mu = [(k, Aux::Mu)];
    let t0 = tau.tau_at(s)?;
    let first = (t0 * &sh(tau, &c1, &mu)?).scale(&sq(sg.eps(&sp, b, a)));
    let second = (tau.tau_at(&c2)? * &sh(tau, &sp, &mu)?).scale(&sq(sg.eps(s, a, b)));
    let third =
        (&sh(tau, &c3, &mu)? * tau.tau_at(&c4)?).scale(&sq(sg.eps(s, a, k) * sg.eps(&sp, b, k)));
    Ok(first + second + third)
}

/// CFII left-hand side for distinct `α, β, λ`.
pub fn cfii_expr_with(
    sg: &Signs,
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    l: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 3, &[a, b, l])?;
    let (ab, al, lb) = (s.shifted(a, b), s.shifted(a, l), s.shifted(l, b));
    require(tau, &[s, &ab, &al, &lb])?;
    let mu = [(l, Aux::Mu)];
    let t0 = tau.tau_at(s)?;
    let first = (t0 * &sh(tau, &ab, &mu)?).scale(&sq(sg.eps(s, b, a)));
    let second = (tau.tau_at(&ab)? * &sh(tau, s, &mu)?).scale(&sq(sg.eps(s, a, b)));
    let third = (&sh(tau, &al, &mu)? * tau.tau_at(&lb)?)
        .mul_aux(Aux::Mu, -1)
        .scale(&sq(sg.eps(s, a, l) * sg.eps(s, b, l)));
    Ok(first + second + third)
}

pub fn check_dfi(tau: &TauFunction, s: &ChargeVector, a: usize) -> IdentityReport {
    IdentityReport::from_series("DFI", base_params(s, &["alpha"], &[a]), dfi_expr(tau, s, a))
}

pub fn check_dfii(tau: &TauFunction, s: &ChargeVector, a: usize, b: usize) -> IdentityReport {
    IdentityReport::from_series(
        "DFII",
        base_params(s, &["alpha", "beta"], &[a, b]),
        dfii_expr(tau, s, a, b),
    )
}

pub fn check_dfiii(tau: &TauFunction, s: &ChargeVector, a: usize, b: usize) -> IdentityReport {
    IdentityReport::from_series(
        "DFIII",
        base_params(s, &["alpha", "beta"], &[a, b]),
        dfiii_expr(tau, s, a, b),
    )
}

pub fn check_dfiv(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    k: usize,
) -> IdentityReport {
    IdentityReport::from_series(
        "DFIV",
        base_params(s, &["alpha", "beta", "kappa"], &[a, b, k]),
        dfiv_expr(tau, s, a, b, k),
    )
}

pub fn check_cfi(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    l: usize,
    k: usize,
) -> IdentityReport {
    IdentityReport::from_series(
        "CFI",
        base_params(s, &["alpha", "beta", "lambda", "kappa"], &[a, b, l, k]),
        cfi_expr_with(&Signs::standard(), tau, s, a, b, l, k),
    )
}

pub fn check_cfii(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    l: usize,
) -> IdentityReport {
    IdentityReport::from_series(
        "CFII",
        base_params(s, &["alpha", "beta", "lambda"], &[a, b, l]),
        cfii_expr_with(&Signs::standard(), tau, s, a, b, l),
    )
}

/// The large-parameter limits of DFII–DFIV, assembled from the `ν^0` (or
/// `μ^0`) coefficients of the shifted ingredients.
struct LimitIngredients {
    t0: FormalSeries,
    tm: FormalSeries,
    up: FormalSeries,
    up_mu: FormalSeries,
}

fn limit_ingredients(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
) -> Result<LimitIngredients, CheckError> {
    let upc = s.shifted(a, b);
    require(tau, &[s, &upc])?;
    let tn = sh(tau, s, &[(a, Aux::Nu)])?;
    let x = sh(tau, &upc, &[(b, Aux::Nu)])?;
    let z = sh(tau, &upc, &[(a, Aux::Mu), (b, Aux::Nu)])?;
    Ok(LimitIngredients {
        t0: tn.coeff_of(Aux::Nu, 0),
        tm: sh(tau, s, &[(a, Aux::Mu)])?,
        up: x.coeff_of(Aux::Nu, 0),
        up_mu: z.coeff_of(Aux::Nu, 0),
    })
}

/// `μ(∂_βτ_μ·τ − ∂_βτ·τ_μ) + τ(s+e_α−e_β)·τ(s−e_α+e_β)_μ`.
pub fn lim1_expr(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 2, &[a, b])?;
    let down = s.shifted(b, a);
    require(tau, &[&down])?;
    let g = limit_ingredients(tau, s, a, b)?;
    let down_mn = sh(tau, &down, &[(a, Aux::Mu), (a, Aux::Nu)])?.coeff_of(Aux::Nu, 0);
    let head = (&dt(&g.tm, b) * &g.t0 - &dt(&g.t0, b) * &g.tm).mul_aux(Aux::Mu, 1);
    Ok(head + &g.up * &down_mn)
}

/// `∂_αX'·τ_μ − ∂_ατ_μ·X' − μX'τ_μ + μτZ'` with `X' = τ(s+e_α−e_β)`,
/// `Z' = τ(s+e_α−e_β)_μ`.
pub fn lim2_expr(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 2, &[a, b])?;
    let g = limit_ingredients(tau, s, a, b)?;
    let tail = (&g.t0 * &g.up_mu - &g.up * &g.tm).mul_aux(Aux::Mu, 1);
    Ok(&dt(&g.up, a) * &g.tm - &dt(&g.tm, a) * &g.up + tail)
}

fn kappa_sign(s: &ChargeVector, a: usize, b: usize, k: usize) -> Q {
    let sg = Signs::standard();
    sq(sg.eps(s, a, k) * sg.eps(s, b, k) * sg.eps(s, b, a))
}

/// `∂_κτ_μ·X' − ∂_κX'·τ_μ + c·τ(s+e_α−e_κ)·τ(s−e_β+e_κ)_μ`.
pub fn lim3_expr(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    k: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 3, &[a, b, k])?;
    let (ak, kb) = (s.shifted(a, k), s.shifted(k, b));
    require(tau, &[&ak, &kb])?;
    let g = limit_ingredients(tau, s, a, b)?;
    let far = sh(tau, &kb, &[(a, Aux::Mu), (b, Aux::Nu)])?.coeff_of(Aux::Nu, 0);
    let tail = (tau.tau_at(&ak)? * &far).scale(&kappa_sign(s, a, b, k));
    Ok(&dt(&g.tm, k) * &g.up - &dt(&g.up, k) * &g.tm + tail)
}

/// `∂_κτ·X_ν − ∂_κX_ν·τ + c·τ(s+e_α−e_κ)·τ(s−e_β+e_κ)_{ν@β}`, from the `μ^0` coefficients.
pub fn lim4_expr(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    k: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 3, &[a, b, k])?;
    let (up, ak, kb) = (s.shifted(a, b), s.shifted(a, k), s.shifted(k, b));
    require(tau, &[s, &up, &ak, &kb])?;
    let y = sh(tau, s, &[(a, Aux::Mu)])?.coeff_of(Aux::Mu, 0);
    let x = sh(tau, &up, &[(b, Aux::Nu)])?;
    let far = sh(tau, &kb, &[(a, Aux::Mu), (b, Aux::Nu)])?.coeff_of(Aux::Mu, 0);
    let tail = (tau.tau_at(&ak)? * &far).scale(&kappa_sign(s, a, b, k));
    Ok(&dt(&y, k) * &x - &dt(&x, k) * &y + tail)
}

/// `∂_κτ·X' − ∂_κX'·τ + c·τ(s+e_α−e_κ)·τ(s−e_β+e_κ)`.
pub fn lim5_expr(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    k: usize,
) -> Result<FormalSeries, CheckError> {
    check_indices(tau, 3, &[a, b, k])?;
    let (ak, kb) = (s.shifted(a, k), s.shifted(k, b));
    require(tau, &[&ak, &kb])?;
    let g = limit_ingredients(tau, s, a, b)?;
    let t0 = g.tm.coeff_of(Aux::Mu, 0);
    let tail = (tau.tau_at(&ak)? * tau.tau_at(&kb)?).scale(&kappa_sign(s, a, b, k));
    Ok(&dt(&t0, k) * &g.up - &dt(&g.up, k) * &t0 + tail)
}

/// All limit identities for one `(s, α, β)` and optional third index κ.
/// The last report confirms that the `ν→∞` limit of the `μ→∞` form is the
/// double limit.
pub fn check_limits(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    k: Option<usize>,
) -> Vec<IdentityReport> {
    let p2 = base_params(s, &["alpha", "beta"], &[a, b]);
    let mut out = vec![
        IdentityReport::from_series("LIM1", p2.clone(), lim1_expr(tau, s, a, b)),
        IdentityReport::from_series("LIM2", p2.clone(), lim2_expr(tau, s, a, b)),
    ];
    let kappa = match k {
        Some(k) => k,
        None => {
            let e = CheckError::InsufficientN {
                need: 3,
                have: tau.n(),
            };
            for id in ["LIM3", "LIM4", "LIM5", "LIM_DOUBLE"] {
                out.push(IdentityReport::from_error(id, p2.clone(), &e));
            }
            return out;
        }
    };
    let p3 = base_params(s, &["alpha", "beta", "kappa"], &[a, b, kappa]);
    out.push(IdentityReport::from_series(
        "LIM3",
        p3.clone(),
        lim3_expr(tau, s, a, b, kappa),
    ));
    out.push(IdentityReport::from_series(
        "LIM4",
        p3.clone(),
        lim4_expr(tau, s, a, b, kappa),
    ));
    out.push(IdentityReport::from_series(
        "LIM5",
        p3.clone(),
        lim5_expr(tau, s, a, b, kappa),
    ));
    let double = lim4_expr(tau, s, a, b, kappa)
        .and_then(|l4| Ok(l4.coeff_of(Aux::Nu, 0) - lim5_expr(tau, s, a, b, kappa)?));
    out.push(IdentityReport::from_series("LIM_DOUBLE", p3, double));
    out
}

/// `D = ∂_α log τ(s) − ∂_α log τ(s+e_λ−e_β)`, the common denominator of the
/// chain below.
fn chain_delta(
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    l: usize,
) -> Result<FormalSeries, CheckError> {
    Ok(dlog(tau.tau_at(s)?, a)? - dlog(tau.tau_at(&s.shifted(l, b))?, a)?)
}

fn cfii_chain(
    sg: &Signs,
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    l: usize,
) -> Result<Vec<Parts>, CheckError> {
    check_indices(tau, 3, &[a, b, l])?;
    let (ab, al, lb, la) = (
        s.shifted(a, b),
        s.shifted(a, l),
        s.shifted(l, b),
        s.shifted(l, a),
    );
    require(tau, &[s, &ab, &al, &lb, &la])?;
    let mu = [(l, Aux::Mu)];
    let t0 = tau.tau_at(s)?;
    let big_a = tau.tau_at(&ab)?;
    let tm = sh(tau, s, &mu)?;
    let ab_mu = sh(tau, &ab, &mu)?;
    let al_mu = sh(tau, &al, &mu)?;
    let t_lb = tau.tau_at(&lb)?;
    let e_ba = sg.eps(s, b, a);
    let k = e_ba * sg.eps(s, a, l) * sg.eps(s, b, l);

    let lhs = cfii_expr_with(sg, tau, s, a, b, l)?;
    let rewritten = (t0 * &ab_mu - big_a * &tm
        + (&al_mu * t_lb).mul_aux(Aux::Mu, -1).scale(&sq(k)))
    .scale(&sq(e_ba));
    let step0 = lhs - rewritten;

    let inv_at = (big_a * &tm).inverse()?;
    let q = &(t0 * &ab_mu) * &inv_at;
    let r = (&(&al_mu * t_lb) * &inv_at)
        .mul_aux(Aux::Mu, -1)
        .scale(&sq(k));
    let d1 = dlog(&tm, a)? - dlog(t_lb, a)?;
    let d2 = dlog(&tm, a)? - dlog(t0, a)?;
    let ratio = &(t0 * t_lb) * &(big_a * tau.tau_at(&la)?).inverse()?;
    let c1 = -sg.eps(s, l, a) * sg.eps(s, b, a) * sg.eps(s, b, l);
    let step1_q = &q - &(&ratio * &d1).scale(&sq(c1));
    let step1_r = &r + &(&ratio * &d2).scale(&sq(k));

    let delta = chain_delta(tau, s, a, b, l)?;
    let bracket = &q - &FormalSeries::one(q.cutoff()) + r;
    let collapsed = &d1 - &delta - d2.clone();
    let step2 = &delta * &bracket - collapsed.clone();
    Ok(vec![
        single(step0),
        vec![("quotient".into(), step1_q), ("remainder".into(), step1_r)],
        single(step2),
        single(collapsed),
    ])
}

#[allow(clippy::too_many_arguments)]
fn cfi_chain(
    sg: &Signs,
    tau: &TauFunction,
    s: &ChargeVector,
    a: usize,
    b: usize,
    l: usize,
    k: usize,
) -> Result<Vec<Parts>, CheckError> {
    check_indices(tau, 4, &[a, b, l, k])?;
    let sp = s.shifted(l, k);
    let (c1, ab, ak, lb, la) = (
        sp.shifted(a, b),
        s.shifted(a, b),
        s.shifted(a, k),
        s.shifted(l, b),
        s.shifted(l, a),
    );
    require(tau, &[s, &sp, &c1, &ab, &ak, &lb, &la])?;
    let mu = [(k, Aux::Mu)];
    let t0 = tau.tau_at(s)?;
    let big_a = tau.tau_at(&ab)?;
    let tpm = sh(tau, &sp, &mu)?;
    let c1_mu = sh(tau, &c1, &mu)?;
    let ak_mu = sh(tau, &ak, &mu)?;
    let t_lb = tau.tau_at(&lb)?;
    let e_ba = sg.eps(s, b, a);
    let rr = sg.eps(&sp, b, a) * e_ba;
    let kk = sg.eps(s, a, k) * sg.eps(&sp, b, k) * e_ba;

    let lhs = cfi_expr_with(sg, tau, s, a, b, l, k)?;
    let rewritten = ((t0 * &c1_mu).scale(&sq(rr)) - big_a * &tpm + (&ak_mu * t_lb).scale(&sq(kk)))
        .scale(&sq(e_ba));
    let step0 = lhs - rewritten;

    let inv_at = (big_a * &tpm).inverse()?;
    let q = (&(t0 * &c1_mu) * &inv_at).scale(&sq(rr));
    let r = (&(&ak_mu * t_lb) * &inv_at).scale(&sq(kk));
    let d1 = dlog(&tpm, a)? - dlog(t_lb, a)?;
    let d2 = dlog(&tpm, a)? - dlog(t0, a)?;
    let ratio = &(t0 * t_lb) * &(big_a * tau.tau_at(&la)?).inverse()?;
    let c = sg.eps(&sp, k, a) * sg.eps(&sp, b, k) * e_ba;
    let step1_q = &q + &(&ratio * &d1).scale(&sq(c));
    let step1_r = &r - &(&ratio * &d2).scale(&sq(c));

    let delta = chain_delta(tau, s, a, b, l)?;
    let bracket = &q - &FormalSeries::one(q.cutoff()) + r;
    let collapsed = &d1 - &delta - d2.clone();
    let step2 = &delta * &bracket - collapsed.clone();
    Ok(vec![
        single(step0),
        vec![("quotient".into(), step1_q), ("remainder".into(), step1_r)],
        single(step2),
        single(collapsed),
    ])
}

pub const CHAIN_STEPS: [&str; 4] = [
    "rewrite_lhs",
    "limit_substitution",
    "common_denominator",
    "cancellation",
];

/// Re-derives a difference Fay identity from the limit forms of the
/// differential ones, one report per intermediate equality. Three indices
/// select the CFII chain, four the CFI chain.
pub fn derive_cf_from_df(
    sg: &Signs,
    tau: &TauFunction,
    s: &ChargeVector,
    ix: &[usize],
) -> Vec<IdentityReport> {
    let (id, names, result): (&str, &[&str], _) = match ix.len() {
        3 => (
            "CFII_CHAIN",
            &["alpha", "beta", "lambda"],
            cfii_chain(sg, tau, s, ix[0], ix[1], ix[2]),
        ),
        4 => (
            "CFI_CHAIN",
            &["alpha", "beta", "lambda", "kappa"],
            cfi_chain(sg, tau, s, ix[0], ix[1], ix[2], ix[3]),
        ),
        _ => (
            "CF_CHAIN",
            &[],
            Err(CheckError::Internal(format!(
                "expected 3 or 4 indices, got {}",
                ix.len()
            ))),
        ),
    };
    let p = base_params(s, names, ix);
    match result {
        Ok(steps) => steps
            .into_iter()
            .zip(CHAIN_STEPS)
            .map(|(parts, name)| {
                let mut q = p.clone();
                q.insert("step".into(), name.into());
                IdentityReport::from_parts(id, q, &parts)
            })
            .collect(),
        Err(e) => vec![IdentityReport::from_error(id, p, &e)],
    }
}

/// Compares the division form of DFI, evaluated with jet-ring inverses,
/// against the cross-multiplied form.
pub fn dfi_division_agreement(tau: &TauFunction, s: &ChargeVector, a: usize) -> IdentityReport {
    let p = base_params(s, &["alpha"], &[a]);
    let r = (|| {
        let t0 = tau.tau_at(s)?;
        let tm = sh(tau, s, &[(a, Aux::Mu)])?;
        let tn = sh(tau, s, &[(a, Aux::Nu)])?;
        let tmn = sh(tau, s, &[(a, Aux::Mu), (a, Aux::Nu)])?;
        let prod = &tm * &tn;
        let ratio = &(t0 * &tmn) * &prod.inverse()? - FormalSeries::one(tau.cutoff());
        let division =
            dlog(&tm, a)? - dlog(&tn, a)? - ratio.mul_aux(Aux::Mu, 1) + ratio.mul_aux(Aux::Nu, 1);
        Ok(&division * &prod - dfi_expr(tau, s, a)?)
    })();
    IdentityReport::from_series("DFI_DIVISION", p, r)
}
