//! Exact formal-series engine for the multicomponent KP hierarchy: tau
//! functions on a charge window, wave matrices, matrix pseudodifferential
//! operators and checkers for the bilinear, Fay, linear-problem and Lax
//! identities.

pub mod charge;
pub mod config;
pub mod fay;
pub mod lax;
pub mod linsolve;
pub mod psdo;
pub mod report;
pub mod runner;
pub mod series;
pub mod solutions;
pub mod tau;
pub mod wave;
