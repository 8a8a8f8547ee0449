//! Identifiability of homogeneous linear ODE systems `x′ = Ax` from a single trajectory.
//!
//! The crate covers the exact question (is `A` determined by `x(t)` started at `x₀`, and if
//! not, which matrices share the trajectory), the practical one (how well can `A` be estimated
//! from noisy samples), and the simulation studies that compare identifiability scores.

pub mod dynamics;
pub mod error;
pub mod expm;
pub mod harness;
pub mod identcore;
pub mod io;
pub mod linalg;
pub mod randgen;
pub mod realjordan;
pub mod scores;
pub mod selftest;
pub mod twostage;

pub use dynamics::{Observations, TimeGrid, Trajectory};
pub use error::{IdentError, Result};
pub use harness::RocResult;
pub use identcore::{
    AffinePrior, BlockCoefficients, PriorVerdict, UnidentifiableClass, Verdict,
};
pub use randgen::SeededRng;
pub use realjordan::{BlockKind, EigenBlock, RealJordanForm};
pub use scores::IdentReport;
pub use twostage::{EstimateReport, SmootherOperators};

pub use nalgebra::{DMatrix, DVector};
