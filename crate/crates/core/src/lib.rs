//! Role-typed query expansion and concept-based retrieval.
//!
//! The scoring, evaluation and tuning code is generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the scalar for common use.

pub mod cli;
pub mod corpus_index;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod ga_tuner;
pub mod lexical_kb;
pub mod linguistics;
pub mod retrieval;
pub mod scalar;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RoleWeights = retrieval::RoleWeights<f64>;
pub type SmoothingConfig = retrieval::SmoothingConfig<f64>;
pub type ScoredDocument = retrieval::ScoredDocument<f64>;
pub type Chromosome = ga_tuner::Chromosome<f64>;
pub type EvalContext = ga_tuner::EvalContext<f64>;
pub type GaOutcome = ga_tuner::GaOutcome<f64>;
pub type EvalRun = eval::EvalRun<f64>;

pub type RoleWeightsF32 = retrieval::RoleWeights<f32>;
pub type SmoothingConfigF32 = retrieval::SmoothingConfig<f32>;
pub type ScoredDocumentF32 = retrieval::ScoredDocument<f32>;
pub type ChromosomeF32 = ga_tuner::Chromosome<f32>;
pub type EvalContextF32 = ga_tuner::EvalContext<f32>;
pub type GaOutcomeF32 = ga_tuner::GaOutcome<f32>;
pub type EvalRunF32 = eval::EvalRun<f32>;
