//! Discriminant forms, Weil representations, Kudla–Millson polynomials,
//! Siegel theta functions and the unfolded Fourier expansion of the
//! Kudla–Millson lift, with numerical checks for every identity involved.

pub mod field;
pub mod lattice_core;
pub mod linalg;
pub mod grassmannian;
pub mod km_polynomials;
pub mod weil_rep;
pub mod theta;
pub mod lift;
pub mod verify;
pub mod cli;
