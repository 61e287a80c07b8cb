//! Identity reports shared by every checker.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::charge::{ChargeError, ChargeVector};
use crate::psdo::PsdoError;
use crate::series::{FormalSeries, SeriesError};
use crate::tau::TauError;

/// Discrepancies kept per report before truncation by the runner.
pub const MAX_LISTED: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("charge {0} outside the window")]
    OutsideWindow(ChargeVector),
    #[error("needs N ≥ {need}, have {have}")]
    InsufficientN { need: usize, have: usize },
    #[error("indices must be distinct")]
    IndicesNotDistinct,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Psdo(#[from] PsdoError),
    #[error(transparent)]
    Charge(ChargeError),
    #[error("{0}")]
    Internal(String),
}

impl From<TauError> for CheckError {
    fn from(e: TauError) -> CheckError {
        match e {
            TauError::OutsideWindow(s) => CheckError::OutsideWindow(s),
            TauError::Series(s) => CheckError::Series(s),
            other => CheckError::Internal(other.to_string()),
        }
    }
}

impl From<ChargeError> for CheckError {
    fn from(e: ChargeError) -> CheckError {
        match e {
            ChargeError::IndicesNotDistinct => CheckError::IndicesNotDistinct,
            other => CheckError::Charge(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Trusted order below zero: nothing could be compared.
    Vacuous,
    SkippedOutsideWindow,
    SkippedInsufficientN,
    Error,
}

impl Status {
    pub fn is_skip(self) -> bool {
        matches!(
            self,
            Status::Vacuous | Status::SkippedOutsideWindow | Status::SkippedInsufficientN
        )
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Status::Fail | Status::Error)
    }
}

pub type Params = BTreeMap<String, String>;

pub fn params(items: &[(&str, String)]) -> Params {
    items
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// One-based display of a component index.
pub fn idx(i: usize) -> String {
    (i + 1).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub params: Params,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub discrepancy_count: usize,
    pub discrepancies: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trusted_order: Option<i32>,
}

impl IdentityReport {
    pub fn new(identity: &str, params: Params, status: Status) -> IdentityReport {
        IdentityReport {
            identity: identity.to_string(),
            params,
            status,
            detail: None,
            discrepancy_count: 0,
            discrepancies: Vec::new(),
            trusted_order: None,
        }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> IdentityReport {
        self.detail = Some(d.into());
        self
    }

    pub fn from_error(identity: &str, params: Params, e: &CheckError) -> IdentityReport {
        let status = match e {
            CheckError::OutsideWindow(_) => Status::SkippedOutsideWindow,
            CheckError::InsufficientN { .. } => Status::SkippedInsufficientN,
            _ => Status::Error,
        };
        IdentityReport::new(identity, params, status).with_detail(e.to_string())
    }

    /// Pass iff every labelled series vanishes at weights within its trust.
    pub fn from_parts(
        identity: &str,
        params: Params,
        parts: &[(String, FormalSeries)],
    ) -> IdentityReport {
        let trusted = parts.iter().map(|(_, f)| f.trusted_order()).min();
        let mut rep = IdentityReport::new(identity, params, Status::Pass);
        rep.trusted_order = trusted;
        if trusted.is_some_and(|t| t < 0) {
            rep.status = Status::Vacuous;
            return rep;
        }
        for (label, f) in parts {
            for (m, c) in f.trusted_terms() {
                rep.discrepancy_count += 1;
                if rep.discrepancies.len() < MAX_LISTED {
                    let prefix = if label.is_empty() {
                        String::new()
                    } else {
                        format!("{label}: ")
                    };
                    rep.discrepancies.push(format!("{prefix}{m} -> {c}"));
                }
            }
        }
        if rep.discrepancy_count > 0 {
            rep.status = Status::Fail;
        }
        rep
    }

    pub fn from_result(
        identity: &str,
        params: Params,
        r: Result<Vec<(String, FormalSeries)>, CheckError>,
    ) -> IdentityReport {
        match r {
            Ok(parts) => IdentityReport::from_parts(identity, params, &parts),
            Err(e) => IdentityReport::from_error(identity, params, &e),
        }
    }

    pub fn from_series(
        identity: &str,
        params: Params,
        r: Result<FormalSeries, CheckError>,
    ) -> IdentityReport {
        IdentityReport::from_result(identity, params, r.map(|f| vec![(String::new(), f)]))
    }

    pub fn from_bool(identity: &str, params: Params, ok: bool, what: &str) -> IdentityReport {
        let mut rep = IdentityReport::new(
            identity,
            params,
            if ok { Status::Pass } else { Status::Fail },
        );
        if !ok {
            rep.discrepancy_count = 1;
            rep.discrepancies.push(what.to_string());
        }
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{q, Monomial, Var};

    #[test]
    fn trusted_terms_decide_status() {
        let d = 3;
        let heavy = FormalSeries::term(Monomial::var(Var::t(0, 3), 1), q(1), d).cap_trust(2);
        let rep = IdentityReport::from_series("X", Params::new(), Ok(heavy));
        assert_eq!(rep.status, Status::Pass);
        let light = FormalSeries::var(Var::t(0, 1), d);
        let rep = IdentityReport::from_series("X", Params::new(), Ok(light));
        assert_eq!(rep.status, Status::Fail);
        assert_eq!(rep.discrepancies, vec!["t1_1 -> 1".to_string()]);
        let neg = FormalSeries::zero(d).cap_trust(-1);
        assert_eq!(
            IdentityReport::from_series("X", Params::new(), Ok(neg)).status,
            Status::Vacuous
        );
        let out = IdentityReport::from_series(
            "X",
            Params::new(),
            Err(CheckError::OutsideWindow(ChargeVector(vec![3, -3]))),
        );
        assert_eq!(out.status, Status::SkippedOutsideWindow);
    }
}
