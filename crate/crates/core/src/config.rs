//! Run configuration: a TOML file with flat keys and a dotted `solution.*`
//! section.
//!
//! ```toml
//! n_components = 2
//! max_time_index = 5
//! weighted_degree = 5
//! aux_order = 5
//! psdo_band = 6
//! charge_radius = 2
//! max_flow_index = 2
//! checks = ["fay", "prop2", "lax", "negative_controls"]
//! seed = 1
//! workers = 4
//! output = "report.json"
//! solution.kind = "jet"
//! solution.free = "random"
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::Q;
use crate::solutions::{FreePolicy, SolutionKind, SolutionSpec, DEFAULT_BUDGET};

pub const WORKERS_ENV: &str = "MKP_WORKERS";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Signs,
    Bilinear,
    Fay,
    Limits,
    Prop1,
    Prop2,
    Prop3,
    Sato,
    Lax,
    Algebra,
    NegativeControls,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Signs,
        Suite::Bilinear,
        Suite::Fay,
        Suite::Limits,
        Suite::Prop1,
        Suite::Prop2,
        Suite::Prop3,
        Suite::Sato,
        Suite::Lax,
        Suite::Algebra,
        Suite::NegativeControls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Signs => "signs",
            Suite::Bilinear => "bilinear",
            Suite::Fay => "fay",
            Suite::Limits => "limits",
            Suite::Prop1 => "prop1",
            Suite::Prop2 => "prop2",
            Suite::Prop3 => "prop3",
            Suite::Sato => "sato",
            Suite::Lax => "lax",
            Suite::Algebra => "algebra",
            Suite::NegativeControls => "negative_controls",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionSource {
    Vacuum,
    SolitonN1,
    Jet,
    File,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSection {
    pub kind: SolutionSource,
    /// Soliton parameters as rational literals such as `"3/2"`.
    pub p: Option<String>,
    pub q: Option<String>,
    pub a: Option<String>,
    #[serde(default)]
    pub free: FreePolicy,
    pub budget: Option<usize>,
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_components: usize,
    pub max_time_index: u32,
    pub weighted_degree: i32,
    pub aux_order: i32,
    pub psdo_band: i32,
    pub charge_radius: i32,
    /// Largest flow index `j` used by the time-flow, Sato and Lax checks.
    #[serde(default = "default_flow")]
    pub max_flow_index: u32,
    #[serde(default = "all_suites")]
    pub checks: Vec<Suite>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub solution: SolutionSection,
}

fn default_flow() -> u32 {
    2
}

fn default_seed() -> u64 {
    1
}

fn all_suites() -> Vec<Suite> {
    Suite::ALL.to_vec()
}

fn rational(name: &str, v: &Option<String>) -> Result<Q, ConfigError> {
    let text = v
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid(format!("solution.{name} is required")))?;
    Q::from_str(text.trim())
        .map_err(|_| ConfigError::Invalid(format!("solution.{name}: not a rational: {text}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = RunConfig::parse(&text)?;
        if let (Some(p), Some(dir)) = (&cfg.solution.path, path.parent()) {
            if p.is_relative() {
                cfg.solution.path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    /// Structural checks. A band too narrow for the requested flows is not
    /// rejected here; the affected checks report it individually.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.n_components == 0 {
            return bad("n_components must be at least 1".into());
        }
        if self.max_time_index == 0 {
            return bad("max_time_index must be at least 1".into());
        }
        if self.weighted_degree < 0 {
            return bad("weighted_degree must be nonnegative".into());
        }
        if self.aux_order < self.weighted_degree {
            return bad(format!(
                "aux_order {} is below weighted_degree {}",
                self.aux_order, self.weighted_degree
            ));
        }
        if self.psdo_band < 1 {
            return bad("psdo_band must be at least 1".into());
        }
        if self.charge_radius < 0 {
            return bad("charge_radius must be nonnegative".into());
        }
        if self.max_flow_index == 0 {
            return bad("max_flow_index must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        match self.solution.kind {
            SolutionSource::File if self.solution.path.is_none() => {
                bad("solution.path is required".into())
            }
            SolutionSource::SolitonN1 => self.solution_spec().map(|_| ()),
            _ => Ok(()),
        }
    }

    /// The generated solution, or `None` when the tau function is read from
    /// a file.
    pub fn solution_spec(&self) -> Result<Option<SolutionSpec>, ConfigError> {
        let sol = &self.solution;
        let kind = match sol.kind {
            SolutionSource::File => return Ok(None),
            SolutionSource::Vacuum => SolutionKind::Vacuum,
            SolutionSource::SolitonN1 => SolutionKind::SolitonN1 {
                p: rational("p", &sol.p)?,
                q: rational("q", &sol.q)?,
                a: rational("a", &sol.a)?,
            },
            SolutionSource::Jet => SolutionKind::Jet {
                seed: self.seed,
                free: sol.free,
                budget: sol.budget.unwrap_or(DEFAULT_BUDGET),
            },
        };
        Ok(Some(SolutionSpec {
            kind,
            n: self.n_components,
            max_time_index: self.max_time_index,
            cutoff: self.weighted_degree,
            radius: self.charge_radius,
        }))
    }

    /// Worker count: the environment override, then the file, then rayon's
    /// default.
    pub fn worker_count(&self) -> Option<usize> {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|n| *n > 0)
            .or(self.workers)
    }

    pub fn runs(&self, s: Suite) -> bool {
        self.checks.contains(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
n_components = 2
max_time_index = 3
weighted_degree = 3
aux_order = 3
psdo_band = 4
charge_radius = 1
"#;

    #[test]
    fn dotted_solution_keys() {
        let cfg = RunConfig::parse(&format!(
            "{BASE}solution.kind = \"jet\"\nsolution.free = \"zero\"\n"
        ))
        .unwrap();
        assert_eq!(cfg.checks, Suite::ALL.to_vec());
        assert_eq!(cfg.max_flow_index, 2);
        match cfg.solution_spec().unwrap().unwrap().kind {
            SolutionKind::Jet { seed, free, budget } => {
                assert_eq!((seed, free, budget), (1, FreePolicy::Zero, DEFAULT_BUDGET));
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn rejects_short_aux_order_and_unknown_keys() {
        let low = BASE.replace("aux_order = 3", "aux_order = 2");
        assert!(matches!(
            RunConfig::parse(&format!("{low}solution.kind = \"vacuum\"\n")),
            Err(ConfigError::Invalid(m)) if m.contains("aux_order")
        ));
        assert!(
            RunConfig::parse(&format!("{BASE}colour = 1\nsolution.kind = \"vacuum\"\n")).is_err()
        );
        assert!(RunConfig::parse(&format!(
            "{BASE}checks = [\"bogus\"]\nsolution.kind = \"vacuum\"\n"
        ))
        .is_err());
    }

    #[test]
    fn soliton_parameters_are_rationals() {
        let ok = format!("{BASE}solution.kind = \"soliton_n1\"\nsolution.p = \"2\"\nsolution.q = \"3/2\"\nsolution.a = \"1\"\n");
        let cfg = RunConfig::parse(&ok).unwrap();
        assert!(matches!(
            cfg.solution_spec().unwrap().unwrap().kind,
            SolutionKind::SolitonN1 { .. }
        ));
        let bad = ok.replace("\"3/2\"", "\"x\"");
        assert!(RunConfig::parse(&bad).is_err());
    }
}
