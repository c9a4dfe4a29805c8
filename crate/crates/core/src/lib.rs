//! Predicting viewers' video-induced emotions (pleasure, arousal, dominance) from
//! audiovisual content features fused with affect features extracted from
//! descriptions of the personal memories a video triggered.
//!
//! Modules follow the processing chain: [`model`] holds the dataset schema,
//! [`text`] and [`av`] turn raw inputs into feature vectors, [`regress`] provides
//! the regression kernels, [`fusion`] combines modalities, [`eval`] runs nested
//! leave-persons-out experiments, [`variance`] fits mixed-effects models and
//! [`synth`] generates datasets with planted effects.

pub mod cv;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod av;
pub mod cli;
pub mod matrix;
pub mod model;
pub mod regress;
pub mod seed;
pub mod synth;
pub mod text;
pub mod variance;

pub use error::{Error, Result};
