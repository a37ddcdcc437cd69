//! Simulation and verification laboratory for the symmetric exclusion process
//! on a discrete torus with `k` evenly spaced slow bonds.
//!
//! The torus has `n*k` sites split into `k` boxes of `n` consecutive sites.
//! Particles perform symmetric exclusion: each edge `(x, x+1)` rings at its
//! conductance and swaps the two occupations. Edges interior to a box have
//! conductance 1; the `k` edges joining consecutive boxes are slowed down to
//! `alpha * n^(-beta)`. Run under suitable time accelerations, the box
//! occupation profile freezes, follows a discrete heat equation with `k`
//! nodes, or follows the heat equation on the continuous torus.
//!
//! The crate has three layers:
//!
//! * a Gillespie simulator ([`simulate`]) with empirical measures, density
//!   profiles and Monte Carlo statistics ([`measure`], [`profile`]);
//! * heat-equation reference solvers on the `k`-node ring and on the torus
//!   ([`pde`]);
//! * an exact small-system oracle ([`oracle`]) that builds the full generator
//!   over all `2^(n*k)` configurations and certifies the entropy-method
//!   machinery (Dirichlet forms, relative entropy, the entropy-production
//!   inequality) together with moment-bound checks ([`stats`]).
//!
//! The [`harness`] module binds these into reproducible convergence
//! experiments with CSV output.

// The numeric kernels index lattice sites and boxes directly so the code
// lines up with the formulas it implements.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod lattice;
pub mod measure;
pub mod oracle;
pub mod pde;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{Configuration, LatticeSpec, TimeScaleRegime};
