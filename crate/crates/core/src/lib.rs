//! Active learning for subspace clustering.
//!
//! The crate fits K affine subspaces to a point cloud ([`ksc`]), ranks
//! unlabelled points by closed-form PCA perturbation scores ([`influence`],
//! [`strategies`]), and refits the clustering under the class information
//! gathered so far with a monotone constrained solver ([`kscc`]). The
//! [`harness`] module drives the query/update loop against a ground-truth or
//! human oracle and writes result files.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod influence;
pub mod ksc;
pub mod kscc;
pub mod metrics;
pub mod model;
pub mod numkit;
pub mod spectral;
pub mod strategies;

pub use error::{Error, Result};
pub use model::{Centering, Clustering, Dataset, LabelStore, PayloadKind, SubspaceModel};
pub use numkit::{EigenDecomposition, Matrix};
pub use strategies::Strategy;
