//! Networks of feature predictors learned from unlabeled text, and feature
//! expansion of sparse short-text instances over them.
//!
//! The pipeline: [`corpus`] turns documents into sparse vectors;
//! [`predictor`] trains one binary predictor per vertex feature; [`graph`]
//! links predictors whose firing patterns overlap, weighting edge i→j by how
//! often j fires when i does; [`expand`] adds predicted features to
//! instances; [`classify`] trains and evaluates downstream models.

pub mod classify;
pub mod corpus;
pub mod error;
pub mod expand;
pub mod graph;
pub mod logistic;
pub mod predictor;
pub mod rng;
pub mod sparse;

pub use error::{Error, Result};
pub use graph::ClassiNet;
pub use predictor::{BinaryPredictor, FeaturePredictor, PredictorBank};
pub use sparse::SparseVector;
