//! Greedy and randomized quasi-Newton methods from the Broyden family,
//! with the measures needed to check their convergence rates.

pub mod error;
pub mod linalg;
pub mod measures;
pub mod rng;
pub mod updates;
pub mod directions;
pub mod objectives;
pub mod envelope;
pub mod solvers;
pub mod parallel;
pub mod bench;

pub use error::{Error, Result};
