//! Precision limits and optimal measurements for estimating the loss of a
//! bosonic channel probed by Gaussian states.
//!
//! The crate has two layers that check each other:
//!
//! * closed-form: [`gaussian`] evolves probe parameters through the channel,
//!   [`qfi`] evaluates the quantum Fisher information and Cramér-Rao bounds,
//!   [`sld`] the optimal-measurement coefficients, [`optimize`] the
//!   squeezing/displacement energy split;
//! * ground truth: [`fock`] realizes everything in a truncated photon-number
//!   basis and solves for the symmetric logarithmic derivative directly.
//!
//! [`sim`] closes the loop with a Monte-Carlo one-step adaptive
//! maximum-likelihood estimator that attains the quantum bound.

pub mod fock;
pub mod gaussian;
mod linalg;
pub mod optimize;
pub mod qfi;
pub mod sim;
pub mod sld;

pub use gaussian::{
    evolve, make_channel_point, make_probe, mean_photon, ChannelParam, ChannelPoint,
    GaussianState, ProbeSpec,
};
pub use qfi::{qfi_coherent, qfi_dilation_bound, qfi_general, qfi_squeezed_vacuum, Qfi};
