//! Numerical laboratory for centred co-circular central configurations of
//! power-law `n`-body potentials.
//!
//! For an ordered mass vector on the unit circle the potential
//! `U_α = Σ m_i m_j r_ij^(−α)` has a unique minimizer `θ_m` in the gauge-fixed
//! configuration space. The crate computes it, evaluates the dihedral
//! quadratic-form certificates `H_m(gm − m)` that rule out centred
//! configurations, and runs the exact sign calculus for three special masses.

pub mod analysis;
pub mod certificate;
pub mod energy;
pub mod error;
pub mod optimizer;
pub mod scan;
pub mod suites;
pub mod symmetry;
pub mod types;

mod sum;

pub use certificate::{classify, Tolerances, Verdict, VerdictTag};
pub use error::{Error, Result};
pub use optimizer::{minimize_potential, MinimizeOptions, MinimizeResult};
pub use symmetry::{DihedralElement, SpecialMassPattern};
pub use types::{AngleConfig, MassVector};
