//! Simultaneous weak measurement of σz and σx with two Gaussian pointers.
//!
//! * [`specfun`]: Dawson's integral and Gaussian pointer amplitudes.
//! * [`quadrature`]: periodic, adaptive and plane integration.
//! * [`continuous`]: exact simultaneous coupling via Dawson-kernel integrals,
//!   with a brute-force momentum-space oracle.
//! * [`trotter`]: alternating σz / σx displacement steps on a lattice of
//!   Gaussian beams, with orthogonal or 45° geometry.
//! * [`estimation`]: direction guessing, average fidelities, weakness sweeps.
//! * [`density_map`] and [`cli`]: CSV / PGM output and the command-line tool.
//!
//! Positive σ eigenvalues displace their pointer toward the positive axis.

pub mod cli;
pub mod continuous;
pub mod density_map;
pub mod error;
pub mod estimation;
pub mod model;
pub mod quadrature;
pub mod specfun;
pub mod trotter;

pub use error::{Error, Result};
pub use model::{DiagonalSign, Geometry, MeasurementConfig, QubitState, UnnormalizedQubit};
