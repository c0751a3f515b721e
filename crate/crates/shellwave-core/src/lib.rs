//! Dirac operators with electrostatic and Lorentz-scalar shell interactions:
//! the spinor-matrix algebra of the transmission condition, the nonlinear
//! coupling rescaling that squeezed regular potentials converge to, the
//! tubular geometry and twist fields realizing that convergence, and a
//! sphere-restricted spectral solver with a sweep harness.

pub mod checks;
pub mod clifford;
pub mod convergence;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod mollifier;
pub mod quad;
pub mod radial;
pub mod report;
pub mod shell_field;
pub(crate) mod sampling;

pub use clifford::{CouplingPair, SpinorMatrix};
pub use convergence::SweepRecord;
pub use coupling::Renormalized;
pub use error::{Error, Result};
pub use geometry::{Surface, TubularPoint};
pub use mollifier::{Primitive, Profile};
pub use radial::{Channel, RadialSpinor, Window};
