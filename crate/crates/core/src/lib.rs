//! Affective event polarity learned from a seed lexicon and discourse-linked event pairs.
//!
//! Pipeline: [`extraction`] turns sentences into Cause/Concession event pairs,
//! [`dataset`] sorts them into AL/CA/CO using the [`lexicon`], [`training`]
//! fits a [`model::PolarityModel`] on the composite objective, and
//! [`evaluation`] scores it with sign-threshold accuracy.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pick `f64`, which the command-line tool uses.

pub mod dataset;
pub mod evaluation;
pub mod extraction;
pub mod io;
pub mod lexicon;
pub mod model;
pub mod scalar;
pub mod synthetic;
pub mod training;

pub use dataset::{
    build_bundle, classify_pair, AlPair, BalanceConfig, DatasetBundle, LabeledEvent, PairClass,
};
pub use evaluation::{classify, evaluate, EvalResult, Sign};
pub use extraction::{extract_pairs, ConnectiveTable, DiscourseRelation, Event, EventPair};
pub use lexicon::{Polarity, SeedLexicon};
pub use model::{EncoderKind, Parameters, PolarityModel, Vocabulary};
pub use scalar::Scalar;
pub use training::{train, ModelConfig, Objective, TrainConfig, TrainingLog};

pub type PolarityModelF64 = PolarityModel<f64>;
pub type PolarityModelF32 = PolarityModel<f32>;
pub type ParametersF64 = Parameters<f64>;
pub type ParametersF32 = Parameters<f32>;
