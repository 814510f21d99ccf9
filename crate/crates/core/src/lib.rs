//! Desk-scale simulator of a frequency-fractal computing model.
//!
//! The crate is `no_std` with `alloc`. Everything here is pure computation;
//! file formats, persistence and the command line live in the `ajo` crate.
//!
//! - [`chain`]: hierarchical resonance chains (layers of triplet bands) and the
//!   bundled 12-level brain table.
//! - [`dynamics`]: phase/energy oscillator network over every chain peak.
//! - [`fractal`]: 2D pattern decomposition into primitive seeds (CubeNet and
//!   friends) plus pulse and colour encoders.
//! - [`column`]: if-then argument column, self-assembled coupling rules and
//!   phase-transition rules.
//! - [`query`]: one-round reply-back matching and the cyclic answer loop.
//! - [`clique`]: reply-back vs brute-force labelled subgraph search bench.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod chain;
pub mod clique;
pub mod column;
pub mod dynamics;
pub mod fractal;
pub mod math;
pub mod query;

pub use chain::{build_chain, chain_metrics, load_brain_model, validate_chain, ChainError, ChainOptions, ChainSpec, PeakRef, ResonanceChain};
pub use clique::{run_bench, solve_bruteforce, solve_reply_back, BenchConfig, CliqueError, PatternGraph};
pub use column::{Argument, ArgumentColumn, ColumnConfig, ColumnError, WriteMode};
pub use dynamics::{build_network, DynamicsError, NetworkConfig, OscillatorNetwork};
pub use fractal::{decompose, Channel, FractalError, GridImage, PrimitiveKind, SeedGraph};
pub use query::{ask, Answer, Query, QueryConfig, QueryEngine, QueryError, SeedMap};
