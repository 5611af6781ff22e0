//! Models for resonant inertial electromagnetic vibration energy harvesters.
//!
//! A harvester is treated as a base-excited spring-mass-damper whose damping
//! splits into a parasitic part and an electrical part extracted through a
//! coil moving in a magnetic field. The crate is organised as:
//!
//! * [`model`]: closed-form steady-state response, power and damping relations.
//! * [`transient`]: fixed-step RK4 integration of the equation of motion,
//!   used as an independent check on the closed forms.
//! * [`analysis`]: measurement post-processing (half-power Q, damping
//!   decomposition, load optimum, acceleration-normalised power density).
//! * [`beam`]: Euler-Bernoulli cantilever frequency estimates for design tables.
//!
//! All quantities are SI unless a name says otherwise (`_mm3`, `_nw_per_mm3`).

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod beam;
mod error;
pub mod model;
pub mod transient;

pub use error::{Error, Result};
