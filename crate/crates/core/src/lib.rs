//! Token-level decision summarization for meeting transcripts.
//!
//! Topic models over dialogue acts ([`topic_models`]) supply `P(T|DA)` and
//! `P(w|T)`; [`summarize`] turns them into per-decision summaries and
//! [`rouge`] scores those against gold abstracts. [`experiment`] wires the
//! stages into reproducible batch runs.
//!
//! Numeric code is generic over [`num::Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod num;
pub mod rouge;
pub mod stem;
pub mod summarize;
pub mod textstats;
pub mod topic_models;

pub use corpus::{load_corpus, true_clusters, Corpus, DaRef, PreprocessConfig};
pub use error::{Error, Result};
pub use summarize::{DecisionCluster, Method, SummaryResult};
pub use topic_models::{train, ModelKind};

pub type Posterior = topic_models::TopicModelPosterior<f64>;
pub type Posterior32 = topic_models::TopicModelPosterior<f32>;
pub type ModelConfig = topic_models::ModelConfig<f64>;
pub type ModelConfig32 = topic_models::ModelConfig<f32>;
pub type TfIdfVector = textstats::TfIdfVector<f64>;
pub type ClusteringResult = textstats::ClusteringResult<f64>;
