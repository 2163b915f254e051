//! Simulation of an LC circuit shunted by a quantum memristor.
//!
//! The memristor is modelled as a continuous weak charge measurement whose
//! record drives a state variable `mu`, which in turn sets the damping rate
//! of a Caldeira-Leggett environment. For Gaussian states the conditioned
//! dynamics close on the first and second moments ([`dynamics`]); these are
//! integrated with Euler-Maruyama ([`sde`]), averaged over noise
//! realizations ([`ensemble`]) and turned into hysteresis loops and related
//! diagnostics ([`analysis`]).

pub mod analysis;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod presets;
pub mod sde;
pub mod types;

pub use dynamics::{damping_rate, diffusion, drift, mean_energy, CosineDamping, DampingLaw};
pub use ensemble::{factorization_deviation, run_ensemble, run_ensemble_with_options, EnsembleOptions};
pub use error::{AnalysisError, ParamError, SimError};
pub use sde::{euler_step, integrate_classical, integrate_trajectory, NoiseStream};
pub use types::{
    ClassicalState, CurveSample, EnsembleStats, GaussianState, HysteresisCurve, Lobe, SimParams, TrajectoryRecord,
};
