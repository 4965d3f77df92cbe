//! Simulation and verification toolkit for the BB84-INFO-z quantum key
//! distribution protocol under collective attacks.
//!
//! * [`gf2`]: bit strings, parity checks, syndromes, `d_{r,m}` and exhaustive
//!   coset decoding.
//! * [`quantum`]: dense complex matrices, density matrices, Jacobi
//!   eigenvalues, trace distance and partial trace.
//! * [`attack`]: collective attacks, induced error rates, Eve's conditioned
//!   states `ρ̂_k`, exact binomial tails.
//! * [`protocol`]: the Alice/Bob exchange, transcripts, channel noise.
//! * [`bounds`]: entropy, key rate, exponential bounds, threshold curve.
//! * [`experiments`]: trial sweeps, bound verification and CSV output used by
//!   the `bb84z` binary.

pub mod attack;
pub mod bounds;
pub mod config;
pub mod error;
pub mod experiments;
pub mod gf2;
pub mod protocol;
pub mod quantum;
pub mod rng;

pub use attack::{binomial_tail, error_rate, eve_probe_state, rho_hat_k, CollectiveAttackSpec, InducedChannelStats};
pub use bounds::{BlockLength, BoundParams, BoundReport};
pub use error::{Error, Result};
pub use gf2::{BitString, Gf2Matrix, LinearCodeSpec};
pub use protocol::{run_protocol, run_trial, Partition, ProtocolConfig, ProtocolTranscript, Threshold};
pub use quantum::{trace_distance, Basis, ComplexMatrix, DensityMatrix};
