//! Multi-objective counterfactual search for black-box prediction models.

pub mod baselines;
pub mod benchmark;
pub mod error;
pub mod evolution;
pub mod export;
pub mod feature;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod sampler;
pub mod tree;

pub use error::{Error, ModelError, Result};
pub use evolution::{run_moc, Candidate, EvolutionConfig, MocProblem, MocResult, ParetoArchive};
pub use feature::{DataPoint, FeatureDescriptor, FeatureKind, FeatureSchema, ObservedDataset, Value};
pub use model::{load_model, ExternalModel, LinearModel, ModelSpec, PredictionModel};
pub use objectives::{DesiredOutcome, EvalContext, ObjectiveVector, ReferencePoint};
pub use sampler::ConditionalSampler;
