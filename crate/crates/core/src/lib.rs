//! Leafwise Ricci-type flows on fibers of foliated manifolds: grids and
//! fields along a one-dimensional fiber, parabolic solvers, the Cole-Hopf
//! correspondence, Schrödinger spectra, mixed-curvature diagnostics and the
//! scenario drivers built on top of them.

pub mod colehopf;
pub mod error;
pub mod fiber;
pub mod linalg;
pub mod mixed_curvature;
pub mod parabolic;
pub mod scenarios;
pub mod schrodinger;
pub mod torus;

pub use error::{FlowError, Result};
pub use fiber::{Differentiation, FiberGrid, ScalarField, Topology, VectorAlongFiber};
pub use parabolic::{RunControl, Trajectory};
