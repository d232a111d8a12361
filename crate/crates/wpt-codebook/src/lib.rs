//! Limited-feedback waveform codebook design for multi-antenna multi-sine
//! wireless power transfer (WPT).
//!
//! An energy transmitter with `M` antennas sends a superposition of `N`
//! sinewaves toward an energy receiver carrying `Q` rectennas. The rectenna
//! DC output voltage is a quartic function of the waveform precoder, so the
//! precoder that maximizes harvested voltage depends on the channel at every
//! antenna/tone pair. When the transmitter only has access to a few feedback
//! bits per frame instead of full channel knowledge, it must pick its
//! waveform from a codebook designed offline.
//!
//! This crate provides the full pipeline:
//!
//! * [`model`] — the nonlinear rectenna voltage model in compact and
//!   brute-force (oracle) forms, plus the channel/precoder domain types.
//! * [`saa`] — a sample-average-approximation optimizer whose inner step is
//!   a minimum-eigenvector problem; it produces near-optimal precoders for a
//!   set of channel realizations.
//! * [`codebook`] — flat codebook design by alternating partition and
//!   codeword optimization (a generalized Lloyd iteration).
//! * [`tree`] — binary tree-structured codebooks supporting one-bit
//!   successive refinement.
//! * [`channel`] — a seeded tapped-delay-line Rayleigh channel simulator
//!   with calibrated log-distance path loss.
//! * [`protocol`] — the waveform-selection (WS) and waveform-refinement
//!   (WR) over-the-air procedures, frame-averaged voltage accounting, and
//!   baseline precoders.
//! * [`harness`] — configuration, experiment jobs and CSV/JSON persistence
//!   used by the `wpt-codebook` binary.
//!
//! Every random quantity in the crate is drawn from seeded, stream-separated
//! generators, so any experiment re-run with the same configuration
//! reproduces its outputs exactly. See the `examples/` directory for one
//! runnable walkthrough per capability.

pub mod channel;
pub mod codebook;
pub mod error;
pub mod harness;
pub mod model;
pub mod protocol;
pub mod saa;
pub mod tree;

pub use error::Error;
pub use model::{
    ChannelRealization, CouplingMatrix, FrequencyGrid, Precoder, RectennaParams, SystemDims,
};
