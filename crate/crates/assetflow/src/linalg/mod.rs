//! Dense linear algebra kernels.

pub mod eigen;

pub use eigen::eigenvalues;
