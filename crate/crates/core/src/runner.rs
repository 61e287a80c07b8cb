//! Batch verification: obtains a tau function, runs the configured suites
//! on a worker pool and assembles a deterministic report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::charge::{
    antisymmetry_check, distinct_tuples, lemma1_with, ChargeVector, Signs, SIGN_IDENTITIES,
};
use crate::config::{ConfigError, RunConfig, Suite};
use crate::fay;
use crate::lax::{
    build_lax, check_algebra, check_b_constructions, check_charge_shift, check_lax,
    check_miwa_linear, check_sato, check_time_flow, LaxBundle, LaxFamily, LaxFault, LaxInstance,
};
use crate::report::{params, CheckError, IdentityReport, Status};
use crate::series::{q, Monomial, Var};
use crate::solutions::{self, LevelStats, SolutionError, SolutionKind};
use crate::tau::{TauError, TauFunction};
use crate::wave::{
    all_bilinear_specs, bilinear_check, verify_wave_factorization, BilinearSpec, DressingFault,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solution: {0}")]
    Solution(#[from] SolutionError),
    #[error("tau file: {0}")]
    Tau(#[from] TauError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Record {
    pub suite: Suite,
    #[serde(flatten)]
    pub report: IdentityReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlOutcome {
    /// At least one check failed under the fault.
    Detected,
    /// Every applicable check still passed.
    Missed,
    /// No check could be evaluated.
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ControlRecord {
    pub suite: Suite,
    pub fault: String,
    pub checks: usize,
    pub failing: usize,
    pub outcome: ControlOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
    pub vacuous: usize,
    pub skipped: usize,
}

impl Counts {
    fn add(&mut self, s: Status) {
        match s {
            Status::Pass => self.pass += 1,
            Status::Fail => self.fail += 1,
            Status::Error => self.error += 1,
            Status::Vacuous => self.vacuous += 1,
            Status::SkippedOutsideWindow | Status::SkippedInsufficientN => self.skipped += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub checks: Counts,
    pub by_suite: BTreeMap<Suite, Counts>,
    pub controls_detected: usize,
    pub controls_missed: usize,
    pub controls_not_applicable: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolutionInfo {
    pub source: String,
    pub n: usize,
    pub max_time_index: u32,
    pub cutoff: i32,
    pub radius: i32,
    pub charges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LevelStats>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub solution_ms: f64,
    pub suites_ms: BTreeMap<Suite, f64>,
    /// Aligned with `records`.
    pub records_ms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub solution: SolutionInfo,
    pub records: Vec<Record>,
    pub controls: Vec<ControlRecord>,
    pub summary: Summary,
    #[serde(skip)]
    pub timings: Timings,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.summary.ok {
            0
        } else {
            1
        }
    }

    /// The report without timings; identical across runs of one config.
    pub fn payload_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["timings"] = serde_json::to_value(&self.timings).expect("timings serialize");
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn text_summary(&self) -> String {
        let mut out = String::new();
        let sol = &self.solution;
        let _ = writeln!(
            out,
            "solution {} N={} J={} d={} S_box={} charges={}",
            sol.source, sol.n, sol.max_time_index, sol.cutoff, sol.radius, sol.charges
        );
        for (suite, c) in &self.summary.by_suite {
            let _ = writeln!(
                out,
                "{:<18} pass {:>6}  fail {:>5}  error {:>4}  vacuous {:>4}  skipped {:>5}",
                suite.name(),
                c.pass,
                c.fail,
                c.error,
                c.vacuous,
                c.skipped
            );
        }
        for c in &self.controls {
            let _ = writeln!(
                out,
                "control {:<10} {:?}: {} ({}/{} failing)",
                c.suite.name(),
                c.outcome,
                c.fault,
                c.failing,
                c.checks
            );
        }
        let failures: Vec<&Record> = self
            .records
            .iter()
            .filter(|r| r.report.status.is_failure())
            .collect();
        for r in failures.iter().take(10) {
            let p: Vec<String> = r
                .report
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let first = r
                .report
                .discrepancies
                .first()
                .cloned()
                .or_else(|| r.report.detail.clone())
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "  {:?} {} [{}] {}",
                r.report.status,
                r.report.identity,
                p.join(" "),
                first
            );
        }
        if failures.len() > 10 {
            let _ = writeln!(out, "  ... {} more failing checks", failures.len() - 10);
        }
        let _ = writeln!(out, "{}", if self.summary.ok { "OK" } else { "FAILED" });
        out
    }
}

/// The tau function named by the config, with solver statistics for jets.
pub fn obtain_tau(cfg: &RunConfig) -> Result<(TauFunction, SolutionInfo), RunError> {
    let (tau, levels, source) = match cfg.solution_spec()? {
        None => {
            let path = cfg.solution.path.as_ref().expect("validated");
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            let tau = TauFunction::parse(&text)?;
            let want = (cfg.n_components, cfg.weighted_degree, cfg.charge_radius);
            if (tau.n(), tau.cutoff(), tau.radius()) != want {
                return Err(ConfigError::Invalid(format!(
                    "tau file has N={} d={} S_box={}, config asks for N={} d={} S_box={}",
                    tau.n(),
                    tau.cutoff(),
                    tau.radius(),
                    want.0,
                    want.1,
                    want.2
                ))
                .into());
            }
            (tau, None, "file".to_string())
        }
        Some(spec) => match spec.kind {
            SolutionKind::Jet { seed, free, budget } => {
                let (tau, levels) = solutions::jet_solve(&spec, seed, free, budget)?;
                (tau, Some(levels), "jet".to_string())
            }
            SolutionKind::Vacuum => (solutions::build(&spec)?, None, "vacuum".to_string()),
            SolutionKind::SolitonN1 { .. } => {
                (solutions::build(&spec)?, None, "soliton_n1".to_string())
            }
        },
    };
    let info = SolutionInfo {
        source,
        n: tau.n(),
        max_time_index: tau.max_time_index(),
        cutoff: tau.cutoff(),
        radius: tau.radius(),
        charges: tau.charges().count(),
        levels,
    };
    Ok((tau, info))
}

pub fn run(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let start = Instant::now();
    let (tau, info) = obtain_tau(cfg)?;
    let solution_ms = ms(start);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.worker_count() {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| ConfigError::Invalid(format!("worker pool: {e}")))?;
    let (records, controls, records_ms) = pool.install(|| run_suites(cfg, &tau));
    let summary = summarize(&records, &controls);
    let mut suites_ms = BTreeMap::new();
    for (r, t) in records.iter().zip(&records_ms) {
        *suites_ms.entry(r.suite).or_insert(0.0) += t;
    }
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        solution: info,
        records,
        controls,
        summary,
        timings: Timings {
            total_ms: ms(start),
            solution_ms,
            suites_ms,
            records_ms,
        },
    })
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

fn summarize(records: &[Record], controls: &[ControlRecord]) -> Summary {
    let mut checks = Counts::default();
    let mut by_suite: BTreeMap<Suite, Counts> = BTreeMap::new();
    for r in records {
        checks.add(r.report.status);
        by_suite.entry(r.suite).or_default().add(r.report.status);
    }
    let count = |o| controls.iter().filter(|c| c.outcome == o).count();
    let missed = count(ControlOutcome::Missed);
    Summary {
        ok: checks.fail == 0 && checks.error == 0 && missed == 0,
        checks,
        by_suite,
        controls_detected: count(ControlOutcome::Detected),
        controls_missed: missed,
        controls_not_applicable: count(ControlOutcome::NotApplicable),
    }
}

type Job<'a> = Box<dyn Fn() -> Vec<IdentityReport> + Send + Sync + 'a>;

/// Everything the suites read, shared by all jobs.
struct Ctx<'a> {
    cfg: &'a RunConfig,
    tau: &'a TauFunction,
    charges: Vec<ChargeVector>,
    bundles: BTreeMap<ChargeVector, Result<LaxBundle, CheckError>>,
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.tau.n()
    }

    fn band(&self) -> i32 {
        self.cfg.psdo_band
    }

    fn flows(&self) -> std::ops::RangeInclusive<u32> {
        1..=self.cfg.max_flow_index
    }

    fn bundle(&self, s: &ChargeVector) -> Result<&LaxBundle, CheckError> {
        match self.bundles.get(s) {
            Some(Ok(b)) => Ok(b),
            Some(Err(e)) => Err(e.clone()),
            None => Err(CheckError::OutsideWindow(s.clone())),
        }
    }
}

fn needs_bundles(cfg: &RunConfig) -> bool {
    [
        Suite::Prop2,
        Suite::Sato,
        Suite::Lax,
        Suite::Algebra,
        Suite::NegativeControls,
    ]
    .iter()
    .any(|s| cfg.runs(*s))
}

fn bundles_for(
    tau: &TauFunction,
    charges: &[ChargeVector],
    band: i32,
) -> BTreeMap<ChargeVector, Result<LaxBundle, CheckError>> {
    charges
        .par_iter()
        .map(|s| (s.clone(), build_lax(tau, s, band)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn run_suites(cfg: &RunConfig, tau: &TauFunction) -> (Vec<Record>, Vec<ControlRecord>, Vec<f64>) {
    let charges: Vec<ChargeVector> = tau.charges().cloned().collect();
    let bundles = if needs_bundles(cfg) {
        bundles_for(tau, &charges, cfg.psdo_band)
    } else {
        BTreeMap::new()
    };
    let ctx = Ctx {
        cfg,
        tau,
        charges,
        bundles,
    };
    let mut jobs: Vec<(Suite, Job)> = Vec::new();
    for suite in Suite::ALL
        .iter()
        .filter(|s| cfg.runs(**s) && **s != Suite::NegativeControls)
    {
        for job in suite_jobs(&ctx, *suite) {
            jobs.push((*suite, job));
        }
    }
    let results: Vec<(Vec<IdentityReport>, f64)> = jobs
        .par_iter()
        .map(|(_, job)| {
            let t = Instant::now();
            let reps = job();
            let per = if reps.is_empty() {
                0.0
            } else {
                ms(t) / reps.len() as f64
            };
            (reps, per)
        })
        .collect();
    let mut records = Vec::new();
    let mut times = Vec::new();
    for ((suite, _), (reps, per)) in jobs.iter().zip(results) {
        for report in reps {
            records.push(Record {
                suite: *suite,
                report,
            });
            times.push(per);
        }
    }
    let controls = if cfg.runs(Suite::NegativeControls) {
        negative_controls(&ctx)
    } else {
        Vec::new()
    };
    (records, controls, times)
}

fn suite_jobs<'a>(ctx: &'a Ctx<'a>, suite: Suite) -> Vec<Job<'a>> {
    let n = ctx.n();
    let mut jobs: Vec<Job<'a>> = Vec::new();
    match suite {
        Suite::Signs => {
            for s in ChargeVector::box_of(n, ctx.cfg.charge_radius) {
                jobs.push(Box::new(move || sign_reports(&Signs::standard(), &s, true)));
            }
        }
        Suite::Bilinear => {
            for spec in all_bilinear_specs(ctx.tau) {
                jobs.push(Box::new(move || vec![bilinear_check(ctx.tau, &spec)]));
            }
        }
        Suite::Fay => {
            for s in &ctx.charges {
                jobs.push(Box::new(move || fay_reports(ctx.tau, s)));
            }
        }
        Suite::Limits => {
            for s in &ctx.charges {
                jobs.push(Box::new(move || limit_reports(ctx.tau, s)));
            }
        }
        Suite::Prop1 => {
            for s in &ctx.charges {
                for a in 0..n {
                    jobs.push(Box::new(move || {
                        check_miwa_linear(ctx.tau, s, a, ctx.band())
                    }));
                }
            }
        }
        Suite::Prop2 => {
            for s in &ctx.charges {
                jobs.push(Box::new(move || {
                    time_flow_reports(ctx, ctx.tau, s, ctx.bundle(s))
                }));
            }
        }
        Suite::Prop3 => {
            for s in &ctx.charges {
                jobs.push(Box::new(move || {
                    charge_shift_reports(ctx.tau, s, ctx.band())
                }));
            }
        }
        Suite::Sato => {
            for s in &ctx.charges {
                jobs.push(Box::new(move || {
                    sato_reports(ctx, ctx.tau, s, ctx.bundle(s))
                }));
            }
        }
        Suite::Lax => {
            for s in &ctx.charges {
                jobs.push(Box::new(move || {
                    lax_reports(ctx, ctx.tau, s, &|c| ctx.bundle(c))
                }));
            }
        }
        Suite::Algebra => {
            for s in &ctx.charges {
                jobs.push(Box::new(move || match ctx.bundle(s) {
                    Ok(b) => check_algebra(b),
                    Err(e) => vec![IdentityReport::from_error(
                        "ALGEBRA",
                        params(&[("s", s.to_string())]),
                        &e,
                    )],
                }));
            }
        }
        Suite::NegativeControls => {}
    }
    jobs
}

/// Sign identities at one charge, one report per identity listing the
/// failing index tuples.
fn sign_reports(sg: &Signs, s: &ChargeVector, with_antisymmetry: bool) -> Vec<IdentityReport> {
    let n = s.n();
    let p = params(&[("s", s.to_string())]);
    let mut out = Vec::new();
    let mut collect = |id: &str, results: Vec<(String, bool)>| {
        if results.is_empty() {
            return;
        }
        let bad: Vec<String> = results
            .into_iter()
            .filter(|(_, ok)| !ok)
            .map(|(t, _)| t)
            .collect();
        let mut rep = IdentityReport::new(
            id,
            p.clone(),
            if bad.is_empty() {
                Status::Pass
            } else {
                Status::Fail
            },
        );
        rep.discrepancy_count = bad.len();
        rep.discrepancies = bad.into_iter().take(crate::report::MAX_LISTED).collect();
        out.push(rep);
    };
    let label = |ix: &[usize]| {
        ix.iter()
            .map(|i| (i + 1).to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let pairs = distinct_tuples(n, 2);
    let triples = distinct_tuples(n, 3);
    collect(
        "SIGN_LEMMA_I",
        pairs
            .iter()
            .map(|ix| {
                (
                    label(ix),
                    lemma1_with(sg, s, ix[0], ix[1], None).is_ok_and(|r| r.0),
                )
            })
            .collect(),
    );
    collect(
        "SIGN_LEMMA_II",
        triples
            .iter()
            .map(|ix| {
                (
                    label(ix),
                    lemma1_with(sg, s, ix[0], ix[1], Some(ix[2])).is_ok_and(|r| r.1 == Some(true)),
                )
            })
            .collect(),
    );
    if with_antisymmetry {
        collect(
            "SIGN_ANTISYMMETRY",
            pairs
                .iter()
                .map(|ix| {
                    (
                        label(ix),
                        antisymmetry_check(s, ix[0], ix[1]).unwrap_or(false),
                    )
                })
                .collect(),
        );
    }
    for id in SIGN_IDENTITIES.iter() {
        let tuples = distinct_tuples(n, id.arity);
        collect(
            &format!("SIGN_{}", id.name.to_uppercase()),
            tuples
                .iter()
                .map(|ix| (label(ix), id.holds(sg, s, ix)))
                .collect(),
        );
    }
    out
}

/// Index tuples for an identity of arity `k`; a single placeholder tuple
/// when `N < k` so that the skip is reported.
fn tuples_or_placeholder(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n >= k {
        distinct_tuples(n, k)
    } else {
        vec![(0..k).collect()]
    }
}

fn fay_reports(tau: &TauFunction, s: &ChargeVector) -> Vec<IdentityReport> {
    let n = tau.n();
    let sg = Signs::standard();
    let mut out = Vec::new();
    for a in 0..n {
        out.push(fay::check_dfi(tau, s, a));
        out.push(fay::dfi_division_agreement(tau, s, a));
    }
    for ix in tuples_or_placeholder(n, 2) {
        out.push(fay::check_dfii(tau, s, ix[0], ix[1]));
        out.push(fay::check_dfiii(tau, s, ix[0], ix[1]));
    }
    for ix in tuples_or_placeholder(n, 3) {
        out.push(fay::check_dfiv(tau, s, ix[0], ix[1], ix[2]));
        out.push(fay::check_cfii(tau, s, ix[0], ix[1], ix[2]));
        out.extend(fay::derive_cf_from_df(&sg, tau, s, &ix));
    }
    for ix in tuples_or_placeholder(n, 4) {
        out.push(fay::check_cfi(tau, s, ix[0], ix[1], ix[2], ix[3]));
        out.extend(fay::derive_cf_from_df(&sg, tau, s, &ix));
    }
    out
}

fn limit_reports(tau: &TauFunction, s: &ChargeVector) -> Vec<IdentityReport> {
    let n = tau.n();
    let mut out = Vec::new();
    if n < 3 {
        for ix in tuples_or_placeholder(n, 2) {
            out.extend(fay::check_limits(tau, s, ix[0], ix[1], None));
        }
    } else {
        for ix in distinct_tuples(n, 3) {
            out.extend(fay::check_limits(tau, s, ix[0], ix[1], Some(ix[2])));
        }
    }
    out
}

fn time_flow_reports(
    ctx: &Ctx,
    tau: &TauFunction,
    s: &ChargeVector,
    bundle: Result<&LaxBundle, CheckError>,
) -> Vec<IdentityReport> {
    let mut out = Vec::new();
    for a in 0..tau.n() {
        for j in ctx.flows() {
            out.push(match &bundle {
                Ok(b) => check_time_flow(tau, b, a, j),
                Err(e) => IdentityReport::from_error("LINEAR_TIME", flow_params(s, a, j), e),
            });
        }
    }
    out
}

fn flow_params(s: &ChargeVector, a: usize, j: u32) -> crate::report::Params {
    params(&[
        ("s", s.to_string()),
        ("alpha", crate::report::idx(a)),
        ("j", j.to_string()),
    ])
}

fn charge_shift_reports(tau: &TauFunction, s: &ChargeVector, band: i32) -> Vec<IdentityReport> {
    tuples_or_placeholder(tau.n(), 2)
        .into_iter()
        .map(|ix| check_charge_shift(tau, s, ix[0], ix[1], band))
        .collect()
}

fn sato_reports(
    ctx: &Ctx,
    tau: &TauFunction,
    s: &ChargeVector,
    bundle: Result<&LaxBundle, CheckError>,
) -> Vec<IdentityReport> {
    let mut out = vec![verify_wave_factorization(tau, s, ctx.band(), None)];
    for a in 0..tau.n() {
        for j in ctx.flows() {
            match &bundle {
                Ok(b) => {
                    out.push(check_sato(b, a, j));
                    out.push(check_b_constructions(b, a, j));
                }
                Err(e) => {
                    out.push(IdentityReport::from_error("SATO", flow_params(s, a, j), e));
                    out.push(IdentityReport::from_error(
                        "B_CONSTRUCTIONS",
                        flow_params(s, a, j),
                        e,
                    ));
                }
            }
        }
    }
    out
}

fn lax_reports<'b>(
    ctx: &Ctx,
    tau: &TauFunction,
    s: &ChargeVector,
    bundle: &dyn Fn(&ChargeVector) -> Result<&'b LaxBundle, CheckError>,
) -> Vec<IdentityReport> {
    let n = tau.n();
    let mut instances = Vec::new();
    for gamma in 0..n {
        for j in ctx.flows() {
            for family in [LaxFamily::TimeL, LaxFamily::TimeR] {
                instances.push(LaxInstance {
                    family,
                    gamma,
                    j,
                    alpha: 0,
                    beta: 0,
                });
            }
        }
    }
    for ix in tuples_or_placeholder(n, 2) {
        let (alpha, beta) = (ix[0], ix[1]);
        for family in [LaxFamily::ChargeL, LaxFamily::ChargeR] {
            instances.push(LaxInstance {
                family,
                gamma: 0,
                j: 1,
                alpha,
                beta,
            });
        }
        for gamma in 0..n {
            for j in ctx.flows() {
                instances.push(LaxInstance {
                    family: LaxFamily::TimeP,
                    gamma,
                    j,
                    alpha,
                    beta,
                });
            }
        }
    }
    instances
        .iter()
        .map(|inst| {
            let here = match bundle(s) {
                Ok(b) => b,
                Err(e) => return IdentityReport::from_error(inst.family.id(), inst.params(s), &e),
            };
            if inst.family != LaxFamily::TimeL && inst.family != LaxFamily::TimeR {
                if let Err(e) = crate::fay::check_indices(tau, 2, &[inst.alpha, inst.beta]) {
                    return IdentityReport::from_error(inst.family.id(), inst.params(s), &e);
                }
            }
            let there = match inst.family {
                LaxFamily::TimeL | LaxFamily::TimeR => None,
                _ => match bundle(&s.shifted(inst.alpha, inst.beta)) {
                    Ok(b) => Some(b),
                    Err(e) => {
                        return IdentityReport::from_error(inst.family.id(), inst.params(s), &e)
                    }
                },
            };
            check_lax(tau, here, there, inst)
        })
        .collect()
}

/// The coefficient perturbed by the tau fault: `t_{1,1}^2`, or `t_{1,1}`
/// when the cutoff is below two.
fn fault_monomial(d: i32) -> Monomial {
    Monomial::var(Var::t(0, 1), d.clamp(1, 2))
}

fn control(suite: Suite, fault: String, reps: Vec<IdentityReport>) -> ControlRecord {
    let applicable: Vec<&IdentityReport> = reps.iter().filter(|r| !r.status.is_skip()).collect();
    let failing: Vec<&&IdentityReport> = applicable
        .iter()
        .filter(|r| r.status == Status::Fail)
        .collect();
    let outcome = if applicable.is_empty() {
        ControlOutcome::NotApplicable
    } else if failing.is_empty() {
        ControlOutcome::Missed
    } else {
        ControlOutcome::Detected
    };
    ControlRecord {
        suite,
        fault,
        checks: applicable.len(),
        failing: failing.len(),
        outcome,
        first_failure: failing.first().map(|r| {
            let p: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{} [{}]", r.identity, p.join(" "))
        }),
    }
}

/// One injected fault per selected suite, evaluated at the zero charge.
fn negative_controls(ctx: &Ctx) -> Vec<ControlRecord> {
    let n = ctx.n();
    let s0 = ChargeVector::zero(n);
    let m = fault_monomial(ctx.tau.cutoff());
    let bad_tau = match ctx.tau.perturbed(&s0, &m, &q(1)) {
        Ok(t) => t,
        Err(_) => return Vec::new(),
    };
    let tau_fault = format!("tau(0) coefficient of {m} shifted by 1");
    let near: Vec<ChargeVector> = std::iter::once(s0.clone())
        .chain(
            distinct_tuples(n, 2)
                .into_iter()
                .map(|ix| s0.shifted(ix[0], ix[1])),
        )
        .filter(|c| ctx.tau.contains(c))
        .collect();
    let bad_bundles = if needs_bundles(ctx.cfg) {
        bundles_for(&bad_tau, &near, ctx.band())
    } else {
        BTreeMap::new()
    };
    let bad_bundle = |c: &ChargeVector| match bad_bundles.get(c) {
        Some(Ok(b)) => Ok(b),
        Some(Err(e)) => Err(e.clone()),
        None => Err(CheckError::OutsideWindow(c.clone())),
    };
    let flip = Signs::with_flip(s0.clone(), 0, 1.min(n - 1));
    let flip_fault = "sign eps_12(0) flipped".to_string();

    type ControlJob<'a> = (
        Suite,
        String,
        Box<dyn Fn() -> Vec<IdentityReport> + Send + Sync + 'a>,
    );
    let selected: Vec<Suite> = Suite::ALL
        .iter()
        .copied()
        .filter(|s| ctx.cfg.runs(*s) && *s != Suite::NegativeControls)
        .collect();
    let tasks: Vec<ControlJob<'_>> = selected
        .iter()
        .flat_map(|&suite| {
            let bt = &bad_tau;
            let s0 = &s0;
            let flip = &flip;
            let bad_bundle = &bad_bundle;
            let mut v: Vec<ControlJob<'_>> = Vec::new();
            match suite {
                Suite::Signs => {
                    v.push((
                        suite,
                        flip_fault.clone(),
                        Box::new(move || {
                            if n < 2 {
                                return Vec::new();
                            }
                            ChargeVector::box_of(n, ctx.cfg.charge_radius.max(1))
                                .iter()
                                .flat_map(|s| sign_reports(flip, s, false))
                                .collect()
                        }),
                    ));
                }
                Suite::Bilinear => v.push((
                    suite,
                    tau_fault.clone(),
                    Box::new(move || {
                        if n == 1 {
                            // with one component the residues at the two shift
                            // poles cancel for any tau
                            let p = params(&[("s", s0.to_string())]);
                            return vec![IdentityReport::new(
                                "BILINEAR",
                                p,
                                Status::SkippedInsufficientN,
                            )
                            .with_detail(
                                "two-shift bilinear identity holds identically for N = 1",
                            )];
                        }
                        all_bilinear_specs(bt)
                            .into_iter()
                            .filter(|b: &BilinearSpec| b.s == *s0 && b.s2 == *s0)
                            .map(|b| bilinear_check(bt, &b))
                            .collect()
                    }),
                )),
                Suite::Fay => {
                    v.push((
                        suite,
                        tau_fault.clone(),
                        Box::new(move || fay_reports(bt, s0)),
                    ));
                    v.push((
                        suite,
                        format!("{flip_fault} in the difference Fay derivation"),
                        Box::new(move || {
                            let mut out = Vec::new();
                            for k in [3, 4] {
                                if n >= k {
                                    for ix in distinct_tuples(n, k) {
                                        out.extend(fay::derive_cf_from_df(flip, ctx.tau, s0, &ix));
                                    }
                                }
                            }
                            out
                        }),
                    ));
                }
                Suite::Limits => v.push((
                    suite,
                    tau_fault.clone(),
                    Box::new(move || limit_reports(bt, s0)),
                )),
                Suite::Prop1 => v.push((
                    suite,
                    tau_fault.clone(),
                    Box::new(move || {
                        (0..n)
                            .flat_map(|a| check_miwa_linear(bt, s0, a, ctx.band()))
                            .collect()
                    }),
                )),
                Suite::Prop2 => v.push((
                    suite,
                    tau_fault.clone(),
                    Box::new(move || time_flow_reports(ctx, bt, s0, bad_bundle(s0))),
                )),
                Suite::Prop3 => v.push((
                    suite,
                    tau_fault.clone(),
                    Box::new(move || charge_shift_reports(bt, s0, ctx.band())),
                )),
                Suite::Sato => {
                    v.push((
                        suite,
                        "dressing coefficient w_2 at (1,1) shifted by 1".to_string(),
                        Box::new(move || {
                            let f = DressingFault {
                                a: 0,
                                b: 0,
                                j: 2,
                                delta: q(1),
                            };
                            vec![verify_wave_factorization(ctx.tau, s0, ctx.band(), Some(&f))]
                        }),
                    ));
                    v.push((
                        suite,
                        tau_fault.clone(),
                        Box::new(move || sato_reports(ctx, bt, s0, bad_bundle(s0))),
                    ));
                }
                Suite::Lax => v.push((
                    suite,
                    tau_fault.clone(),
                    Box::new(move || lax_reports(ctx, bt, s0, bad_bundle)),
                )),
                Suite::Algebra => v.push((
                    suite,
                    "coefficient u_{1,1} of R_1 shifted by 1".to_string(),
                    Box::new(move || match ctx.bundle(s0) {
                        Ok(b) => check_algebra(&b.clone().with_fault(&LaxFault {
                            alpha: 0,
                            delta: q(1),
                        })),
                        Err(e) => vec![IdentityReport::from_error(
                            "ALGEBRA",
                            params(&[("s", s0.to_string())]),
                            &e,
                        )],
                    }),
                )),
                Suite::NegativeControls => {}
            }
            v
        })
        .collect();
    tasks
        .par_iter()
        .map(|(suite, fault, job)| control(*suite, fault.clone(), job()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn cfg(extra: &str) -> RunConfig {
        RunConfig::parse(&format!(
            "n_components = 1\nmax_time_index = 6\nweighted_degree = 6\naux_order = 6\npsdo_band = 7\n\
             charge_radius = 0\nworkers = 2\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn soliton_run_is_clean_and_controls_fire() {
        let c = cfg("solution.kind = \"soliton_n1\"\nsolution.p = \"2\"\nsolution.q = \"3\"\nsolution.a = \"1\"\n");
        let rep = run(&c).unwrap();
        assert!(rep.summary.ok, "{}", rep.text_summary());
        assert_eq!(rep.exit_code(), 0);
        assert!(rep.summary.controls_detected > 0);
        assert_eq!(rep.summary.controls_missed, 0);
    }

    #[test]
    fn payload_excludes_timings() {
        let c = cfg("checks = [\"fay\"]\nsolution.kind = \"vacuum\"\n");
        let rep = run(&c).unwrap();
        assert!(!rep.payload_json().contains("timings"));
        assert!(rep.to_json().contains("\"timings\""));
        assert_eq!(rep.payload_json(), run(&c).unwrap().payload_json());
    }

    #[test]
    fn records_do_not_depend_on_worker_count() {
        let c = cfg("solution.kind = \"soliton_n1\"\nsolution.p = \"1/2\"\nsolution.q = \"-1\"\nsolution.a = \"2\"\n");
        let one = run(&RunConfig {
            workers: Some(1),
            ..c.clone()
        })
        .unwrap();
        let four = run(&RunConfig {
            workers: Some(4),
            ..c
        })
        .unwrap();
        assert_eq!(one.records, four.records);
        assert_eq!(one.controls, four.controls);
        assert_eq!(one.summary, four.summary);
    }

    #[test]
    fn narrow_band_is_reported_per_check() {
        let c = cfg("max_flow_index = 1\nchecks = [\"lax\"]\nsolution.kind = \"vacuum\"\n");
        let c = RunConfig { psdo_band: 2, ..c };
        let rep = run(&c).unwrap();
        assert_eq!(rep.exit_code(), 1);
        assert!(rep.records.iter().any(|r| r
            .report
            .detail
            .as_deref()
            .is_some_and(|d| d.contains("band"))));
    }
}
