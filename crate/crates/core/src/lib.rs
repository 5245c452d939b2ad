//! Exact and Monte Carlo simulator for a coarse-grained random access code
//! (CRAC) played over two sequential measurements of a single qubit.
//!
//! Alice holds a two-bit database and encodes it as the quadrant of a phase
//! angle on the Bloch equator. Through a shared singlet and a one-bit
//! announcement she steers the encoding state to Bob, who gains partial
//! information about *both* bits by first letting the qubit interact with a
//! probe (a partial cloning machine) and then measuring the disturbed qubit
//! itself. The crate computes the exact quadrant-guessing statistics of that
//! chain, the per-bit information gains, and the trade-off bounds they must
//! obey; a Monte Carlo engine and a TCP two-endpoint mode reproduce the same
//! statistics trial by trial.
//!
//! Layering, lowest first:
//!
//! * [`qcore`] — dense complex linear algebra for one and two qubits.
//! * [`geometry`] — Bloch-equator angles, quadrants, encoding map.
//! * [`machines`] — the probe interactions (identity, swap, partial cloner).
//! * [`ozawa`] — root-mean-square noise and disturbance of a machine.
//! * [`protocol`] — the CRAC game itself, exact and sampled.
//! * [`infotheory`] — binary channels, mutual information, the bounds.
//! * [`analysis`] — parameter sweeps, optimisation, witness scans, reports.
//! * [`netsim`] — the protocol split over a framed TCP connection.
//! * [`cli`] — command-line front end (`crac` binary).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod infotheory;
pub mod machines;
pub mod netsim;
pub mod ozawa;
pub mod protocol;
pub mod qcore;

mod quad;
mod rng;

pub use error::{CracError, Result};
