//! Random-matrix predictions: MP laws, quantiles, free multiplicative
//! convolution and its Monte-Carlo oracle.

pub mod convolution;
pub mod measure;
pub mod monte_carlo;
pub mod scalars;

pub use convolution::{free_multiplicative_convolution, subordination, ConvolutionResult, SolverOptions, SubordinationDiagnostics};
pub use measure::{GridDensity, Measure, MpConvention};
pub use monte_carlo::{haar_orthogonal, mc_free_conv, mc_product_spectrum};
pub use scalars::ModelScalars;
