//! Dense complex linear algebra and comparison metrics.

mod decomp;
mod lasso;
mod matrix;
mod metrics;

pub use decomp::{
    hermitian_eigen, hermitian_inv_sqrt, hermitian_inv_sqrt_report, pinv, pinv_with_rank,
    singular_values, solve, svd, HermitianEigen, InvSqrt, LuFactor, SvdResult,
    DEFAULT_EIG_FLOOR_REL, DEFAULT_PINV_RTOL,
};
pub use lasso::{complex_lasso, LassoGram, LassoResult};
pub use matrix::{dot_conj, norm2, ComplexMatrix};
pub use metrics::{cosine_similarity, mse, spectral_norm};

pub use num_complex::Complex64;

/// Condition estimates above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;
