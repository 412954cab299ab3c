//! Analysis toolkit for sparse-graph codes under message-passing decoding.
//!
//! The crate models binary-input memoryless symmetric channels, samples LDPC
//! and LDGM Tanner graphs, runs sum-product decoding with operation
//! accounting, and measures how much the observed neighborhood of a bit
//! lowers its conditional output entropy. Those measurements feed a chain of
//! converse bounds: an upper bound on the per-symbol output entropy, an upper
//! bound on the achievable rate, a lower bound on the residual error
//! probability, and a lower bound on the operations per information bit
//! needed to operate at a given gap from capacity. Small codes are
//! cross-checked against exact brute-force entropy enumeration.

pub mod bounds;
pub mod channels;
pub mod cli;
pub mod decoder;
pub mod density_evolution;
pub mod ensembles;
pub mod math;
pub mod oracle;
