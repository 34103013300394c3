//! Density-matrix simulation of singlet-state initialization for coupled
//! spin-1/2 registers.
//!
//! The crate follows a register from thermal equilibrium through singlet
//! preparation, spin-lock purification and conversion into a pseudopure
//! computational-basis state, and reads the result out with the usual NMR
//! metrics (correlation, diagonal tomography, small-flip-angle spectra).
//!
//! Conventions used everywhere:
//!
//! * Spins are labelled `1..=n`. Spin 1 is the leftmost tensor factor, so the
//!   ket `|010⟩` has basis index 2.
//! * `|0⟩` is the `m = +1/2` eigenstate of `I_z`.
//! * Hamiltonians are stored as `H/h` in Hz and propagators are
//!   `exp(-i 2π (H/h) t)`.
//! * States carry the identity background explicitly; deviation parts are
//!   computed on demand.

pub mod analysis;
pub mod cli;
pub mod dynamics;
mod error;
mod linalg;
pub mod protocols;
pub mod relaxation;
pub mod spincore;

pub use error::{Error, Result};

/// Complex scalar used by every matrix in the crate.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

/// Largest register the dense representation accepts.
pub const MAX_SPINS: usize = 8;
