//! Collective dynamics of lattice networks of threshold current-controlled
//! memristive devices.
//!
//! A square grid of nodes is joined by basic units of two antiparallel
//! bipolar memristive devices. Driving a constant voltage pulse across two
//! terminals makes the most-conducting route self-reinforce: above-threshold
//! unit currents push one device of each carrying unit toward its low
//! resistance, attracting more current, until the terminals are joined by a
//! chain of ON units — the shortest path between them. The crate covers the
//! device model, the lattice, the per-step Kirchhoff solve, pulse-driven time
//! evolution, observables (network entropy over a cut, switching rates, path
//! extraction) and config-driven experiment presets with file outputs.

pub mod analysis;
pub mod config;
pub mod device;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod output;
pub mod solver;

pub use error::{Error, Result};
