//! Global-in-time asymptotic solutions u ≈ exp(−S/ε)·√ρ_reg to
//! Kolmogorov–Feller-type parabolic equations, constructed by Hamiltonian
//! characteristics and validated against exact and finite-difference oracles.
//!
//! The crate is organized along the pipeline:
//!
//! * [`symbol`] — the operator symbol family H(x,p), its derivatives, and the
//!   structural checks (dissipativity inequality, moment condition, convexity);
//! * [`hamilton`] — bundle integration of the Hamilton system with its
//!   variational equations, caustic detection, and time reversal;
//! * [`manifold`] — Lagrangian curve snapshots, fold location, and
//!   single-valued branch decomposition with projection inversion;
//! * [`hjb`] — min-branch value function, Rankine–Hugoniot and equal-area
//!   shock locators, and the Heaviside product algebra used for weak
//!   asymptotics;
//! * [`density`] — density transport along characteristics, delta-mass
//!   bookkeeping on shocks, and assembly of the asymptotic solution;
//! * [`backward`] — backward-in-time reconstruction with terra-incognita
//!   regions, the no-interior-minimum check, and normalized weak-limit tests;
//! * [`oracle`] — heat-kernel and finite-difference reference solvers,
//!   Laplace/saddle integral evaluation, and logarithmic-limit extraction;
//! * [`scenario`] / [`pipeline`] / [`verify`] — JSON scenario parsing, the
//!   forward/backward orchestration with CSV/JSON artifacts, and the
//!   machine-readable acceptance battery.

pub mod backward;
pub mod density;
pub mod error;
pub mod hamilton;
pub mod hjb;
pub mod interp;
pub mod linalg;
pub mod manifold;
pub mod oracle;
pub mod pipeline;
pub mod poly;
pub mod quad;
pub mod scenario;
pub mod symbol;
pub mod verify;

pub use error::{Error, Result};
