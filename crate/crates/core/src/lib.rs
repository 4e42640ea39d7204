//! Core library for converting recorded glove manipulation demonstrations
//! into robot-embodiment demonstrations: kinematic models, tactile-aware
//! retargeting, metric scene alignment, stream synchronization, arm IK, and
//! dataset packaging.

pub mod armik;
pub mod config;
pub mod datastore;
pub mod evalsuite;
pub mod frames;
pub mod kinmodel;
pub mod retargeter;
pub mod sync;
pub mod tactile;
pub mod transform;

mod xmlmini;

pub use transform::RigidTransform;
