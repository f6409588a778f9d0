//! Simulation and analysis of a squeezed-light entanglement-distribution
//! link.
//!
//! A bright squeezed probe picks up a qubit-conditional phase at each of two
//! stations, loses power in the fiber between them, and is measured by
//! homodyne detection of its `p` quadrature. Accepting outcomes inside a
//! window `[−p_c, p_c]` heralds an entangled qubit pair.
//!
//! * [`gaussian`]: single-mode Gaussian states, loss, phase shifts, Wigner function.
//! * [`link`]: the three probe branches and the postselected two-qubit state.
//! * [`analytic`]: closed-form success probability and fidelity.
//! * [`oracle`]: Monte Carlo and quadrature cross-checks.
//! * [`sweep`]: parameter grids, fiber law, run records and config files.

pub mod analytic;
pub mod error;
pub mod gaussian;
pub mod link;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod sweep;

pub use analytic::{average_fidelity, link_figures, success_probability, LinkFigures};
pub use error::{Error, Result};
pub use gaussian::{GaussianState, SqueezedState};
pub use link::{LinkParams, QubitPairDensity};
pub use oracle::{estimate_link, LinkEstimate};
pub use special::erf;
