//! Streaming-code laboratory for low-latency packet erasure protection.
//!
//! The crate models a transmitter that protects a stream of data packets
//! X_1, X_2, ... against erasures and a receiver that must deliver X_t by a
//! hard per-packet deadline. Three schemes are covered:
//!
//! * K-repetition: every data packet is sent K times back to back.
//! * Sliding network coding (SNC): each block of K slots carries the fresh
//!   packet, a delayed copy, and field combinations of the packets in
//!   between, described by an [`design::SncDesign`].
//! * Block random linear network coding: M data packets are buffered and N
//!   random combinations are sent.
//!
//! [`gf`] supplies the GF(2^w) arithmetic, [`design`] the SNC code designs,
//! [`codec`] the encoders and deadline decoders, [`channel`] the erasure
//! models (fixed rate, finite-blocklength AWGN, grant-free random access),
//! [`analysis`] the closed-form error and delay formulas, and [`sim`] a
//! deterministic, parallel Monte Carlo engine that estimates the same
//! quantities empirically.

pub mod analysis;
pub mod channel;
pub mod codec;
pub mod design;
pub mod error;
pub mod gf;
pub mod sim;

pub use error::{Error, Result};
