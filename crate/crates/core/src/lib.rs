//! Clustering two-component high-dimensional mixtures by scanning random
//! one-dimensional projections, with calculators for the accompanying
//! error and projection-count bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod clusterer;
pub mod datagen;
pub mod error;
pub mod experiment;
pub mod io;
pub mod learner1d;
pub mod mathkit;
pub mod model;
pub mod projection;

pub use error::{Error, Result};
pub use mathkit::RngStream;
pub use model::{
    c_separability, lambda_max, Boundary1D, ClusterOutcome, CovarianceSpec, Dataset, Matrix,
    Mixture1D, MixtureSpec, Orientation, Provenance,
};
