//! Bound-state spectra of a quantum particle confined to the surface of a
//! curved nanotube (a "tubular arc" whose axis is a hyperbolic cosine).
//!
//! The pipeline is:
//!
//! 1. [`geometry`] describes the tube and its closed-form curvatures.
//! 2. [`basis`] supplies the primitive functions `e^{imθ} sin(nπs/L)` and the
//!    analytic action of the surface Hamiltonian on them.
//! 3. [`quadrature`] integrates over the surface with the area element
//!    `a·λ(θ,s) dθ ds`.
//! 4. [`assembly`] builds overlap, kinetic + distortion and delta-site
//!    matrices, orthonormalizes the basis with [`linalg::gram_schmidt`] and
//!    transforms the Hamiltonian.
//! 5. [`linalg`] diagonalizes it; [`analysis`] classifies and tabulates
//!    the resulting states.
//!
//! [`solver`] strings these together for the common case.
//!
//! Units are fixed throughout: lengths in nm, energies in meV, curvatures
//! in 1/nm.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
