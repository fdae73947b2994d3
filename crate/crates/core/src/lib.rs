//! Abstract (LP-type) optimization and constraints consensus over synchronous
//! networks, with a Monte Carlo completion-time harness and two applications:
//! set-membership target localization and optimal formation control.
//!
//! The crate is organized around a small number of building blocks:
//!
//! - [`opt`]: the abstract-optimization contract ([`opt::Problem`]), fixed-size
//!   candidate bases, the randomized `SUBEX_lp` solver, brute-force oracles and
//!   axiom/persistency checkers.
//! - [`lp`]: linear programs as abstract programs (exact small-dimension
//!   lexicographic solving) plus two stochastic LP generators.
//! - [`geometry`]: smallest enclosing ball, stripe and annulus as abstract
//!   programs over planar point sets.
//! - [`network`]: time-varying digraphs, graph generators and connectivity
//!   queries.
//! - [`consensus`]: the nominal, multi-round and cycling constraints-consensus
//!   algorithms with trace instrumentation, halting and memory accounting.
//! - [`montecarlo`]: seeded experiment sweeps, completion-time statistics,
//!   Student t-test and Chernoff sample sizing.
//! - [`localization`]: moving-target simulation, half-plane sensing, the
//!   eight-half-planes projection and its distributed consensus algorithm.
//! - [`formation`]: disk-graph robotic network running move-to-consensus-shape
//!   for point, line and circle formations.
//!
//! All randomized entry points take explicit seeds (or seeded RNGs) and are
//! deterministic per seed.

pub mod checks;
pub mod consensus;
pub mod formation;
pub mod geometry;
pub mod localization;
pub mod lp;
pub mod montecarlo;
pub mod network;
pub mod opt;
pub mod util;

pub use opt::{Basis, Problem};
