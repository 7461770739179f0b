//! Truncated multimode Fock spaces, operator matrices, states and moments.

mod space;
mod sparse;
mod state;
mod stats;

pub use space::{TruncatedSpace, DEFAULT_MAX_DIM};
pub use sparse::{realize, SparseMatrix};
pub use state::{PureState, StateEnsemble, NORM_TOL, OVERLAP_TOL, WEIGHT_TOL};
pub use stats::{
    covariance_matrix, expectation, expectation_matrix, product_state_covariance, second_moments,
    variance, SecondMoments,
};

pub(crate) use state::{inner, norm_sqr};
pub(crate) use stats::realize_hermitian;
