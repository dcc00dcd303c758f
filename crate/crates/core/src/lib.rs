//! Finite-level vector analysis, Dirac operators and magnetic Schrödinger
//! operators on the Sierpinski gasket.

pub mod dirac;
pub mod energy;
pub mod error;
pub mod exact;
pub mod forms;
pub mod io;
pub mod kusuoka;
pub mod magnetic;
pub mod operator;
pub mod quadrature;
pub mod spectral;
pub mod structure;
pub mod verify;

pub use error::{Result, SgError};
pub use num_complex::Complex64;
