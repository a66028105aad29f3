//! Joint transmit-beamforming and reflection-coefficient design for a
//! multi-cluster MISO-NOMA downlink assisted by an intelligent reflecting
//! surface (IRS).
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] draws seeded channel realizations (path loss times
//!   correlated Rayleigh fading).
//! * [`model`] evaluates effective channels, NOMA SINRs, rates and
//!   feasibility of a candidate design.
//! * [`conic`] is a second-order cone programming front end over real
//!   variables, with the complex-to-real lifting used by the solvers.
//! * [`admm`] is the SOCP-ADMM design: alternating SOCP updates of the
//!   reflection vector and beamformers, closed-form auxiliary updates,
//!   projection onto the reflection set and a scaled dual update.
//! * [`zf`] is the low-complexity zero-forcing design with closed-form
//!   per-cluster beamformers and a fixed-point reflection update.
//! * [`sim`] runs Monte Carlo sweeps and writes CSV results and traces.

pub mod admm;
pub mod channel;
pub mod conic;
pub mod error;
pub mod model;
pub mod sim;
pub mod trace;
pub mod zf;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
