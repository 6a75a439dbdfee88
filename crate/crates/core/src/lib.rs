//! Influence maximization over a Markovian graph process.
//!
//! A fixed node set is connected by a graph that switches among a finite set
//! of states as a Markov chain whose transition matrix depends on how seeds
//! are sampled. The crate estimates node influences under a continuous-time
//! independent cascade with a reduced-variance sketch estimator, tracks the
//! best seed-sampling parameter with SPSA, and handles partially observed
//! graph states with an HMM filter.
//!
//! Module map:
//!
//! - [`graph`]: directed graphs, SBM sampling, induced subgraphs, edge lists
//! - [`process`]: parameterized Markov chain over graph states, observation model
//! - [`diffusion`]: cascade simulation by shortest paths and the Monte-Carlo oracle
//! - [`estimator`]: antithetic delay pairs and the exponential-label sketch
//! - [`spsa`]: the stochastic-approximation loop
//! - [`evaluator`]: path-averaged and HMM-filtered influence evaluators
//! - [`hmm`]: posterior filtering and the time-averaged influence estimate
//! - [`experiment`], [`config`]: scenario files, traces and reports

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diffusion;
pub mod error;
pub mod estimator;
pub mod evaluator;
pub mod experiment;
pub mod graph;
pub mod hmm;
pub mod process;
pub mod seeds;
pub mod spsa;

pub use error::{Error, Result};
