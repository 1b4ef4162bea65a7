//! Numerical machinery for singular constant Q-curvature metrics: Delaunay-type
//! orbits of the fourth-order radial ODE, biharmonic mode operators with Navier
//! data, linearized cylinder operators, and a flat-model Cauchy-data gluing harness.

pub mod acceptance;
pub mod band;
pub mod conformal;
pub mod cylinder;
pub mod delaunay;
pub mod error;
pub mod gluing;
pub mod jet;
pub mod modes;
pub mod norms;
pub mod ode;
pub mod params;
pub mod vop;

pub use error::{QflowError, Result};
