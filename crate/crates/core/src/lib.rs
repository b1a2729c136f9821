//! Exponential functionals `I = ∫₀^∞ e^{ξ_s} ds` of Lévy processes drifting
//! to −∞: exact path simulation, the ladder/excursion decomposition of `I`,
//! moments, and the three regimes of right-tail asymptotics
//! (convolution equivalent, subexponential, Cramér) with the statistics
//! needed to check them against simulation.

pub mod asymptotics;
pub mod error;
pub mod ladder;
pub mod levy;
pub mod par;
pub mod pathsim;
pub mod quad;
pub mod rng;
pub mod scenario;
pub mod special;
pub mod tailstats;

pub use error::{Error, Result};
pub use levy::{JumpLaw, LevyModel, ModelSpec};
