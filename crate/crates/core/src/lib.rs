pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod moments;
pub mod ode;
pub mod quadrature;
pub mod spde;
pub mod spectral;
pub mod verify;
pub mod volterra;

pub use error::{Error, Result};
pub use grid::Grid;
pub use kernel::{Alpha, EnvelopeReport, KernelCache, KernelEval};
pub use moments::{EnsembleConfig, EnsembleResult, FunctionalSeries, MomentEstimate, PhaseCell, PhaseConfig, PhaseVerdict};
pub use ode::{BlowupVerdict, Condition, OdeSpec, ReductionSpec};
pub use spde::{CoeffSpec, FieldState, InitSpec, SpdeConfig, TrajectoryResult, TrajectoryStatus};
