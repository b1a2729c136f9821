//! Lévy process models: Laplace exponents, Lévy tails, jump laws and
//! convolution-equivalence diagnostics.

mod jump;
mod model;
mod salpha;

pub use jump::{InverseTailTable, JumpLaw, JumpSampler, MomentDomain, TABLE_POINTS, TABLE_TOLERANCE};
pub use model::{LevyModel, ModelSpec};
pub use salpha::{
    convolution_ratio, s_alpha_diagnostic, IntegratedTail, SAlphaDiagnostic, TailDistribution,
    CONVERGENCE_TOLERANCE,
};
