//! Structured distributional kernels and the quadrature that smears them.

pub mod functions;
pub mod identities;
pub mod interp;
pub mod kernel;
pub mod quadrature;

pub use functions::{probes, Smoothness, TestFunction1D, TestSpinor};
pub use quadrature::QuadratureSpec;
pub use kernel::{KernelSample, PvPart, Singularity, SingularKernel1D, SmearResult};
pub use identities::{flow_integral_pointwise, flow_integral_smeared, lemma_limit_eval, sokhotski_split, CauchyFamily, EpsKernel};
