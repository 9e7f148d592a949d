//! Enhanced random sequential adsorption on the octagon/diamond lattice:
//! simulation, crossing estimates, pivotality, and the Fourier toolkit used for
//! sharp-threshold arguments.

pub mod critical_surface;
pub mod discrete_torus;
pub mod error;
pub mod lattice;
pub mod percolation;
pub mod pivotal;
pub mod poly;
pub mod rsa_process;
pub mod sharp_threshold;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
