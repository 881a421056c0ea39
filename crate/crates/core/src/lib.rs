//! Time-varying block codes for channels with insertions, deletions and
//! substitutions, with a MAP decoder over the drift state space.

pub mod channel;
pub mod code;
pub mod drift;
pub mod rng;
pub mod decoder;
pub mod stream;
