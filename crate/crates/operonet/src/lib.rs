//! Operator-learning benchmark library: a small reverse-mode autodiff core,
//! six DeepONet-family architectures, synthetic operator datasets with
//! independent PDE oracles, Adam training with inverse-time decay, and a
//! benchmark harness that reproduces published error/parameter tables at
//! desk scale.

pub mod bench;
pub mod cli;
pub mod datasets;
pub mod diffcore;
pub mod models;
pub mod rng;
pub mod training;
