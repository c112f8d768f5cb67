//! Sparse delay-Doppler sensing over a prime-length digital grid.
//!
//! The signal space is `C[Z_N]` for an odd prime `N`; the parameter space is
//! the plane `Z_N x Z_N` whose axes are delay (tau) and Doppler (omega).  A
//! sparse channel applies a handful of delay-Doppler shifts with attenuation,
//! plus additive noise, and the task is to read the shifts back off the
//! ambiguity function of a transmitted waveform and its echo.
//!
//! Pipeline:
//!
//! ```text
//!   chirp ids ──> signal::chirp ──> channel::apply_channel ──> echo
//!                                                               │
//!        modarith lines ──> ambiguity::ambiguity_on_line <──────┘
//!                                      │
//!                 detect::{detect_incidence, detect_cross, ...}
//!                                      │
//!                              DetectionReport
//! ```
//!
//! The crate is `no_std` (with `alloc`); anything involving files, clocks, or
//! command lines lives in the companion CLI crate.
//!
//! Modules:
//! - [`modarith`]: arithmetic mod `N`, plane points, lines, incidence.
//! - [`signal`]: sequences, chirps, characters, pseudo-random waveforms.
//! - [`ambiguity`]: Heisenberg shifts and fast ambiguity-function slices.
//! - [`channel`]: sparse delay-Doppler channels, genericity, perfectness.
//! - [`detect`]: thresholding plus the incidence, cross, and full-matrix
//!   detection methods.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ambiguity;
pub mod channel;
pub mod detect;
pub mod modarith;
pub mod signal;

pub(crate) mod randext;

pub use channel::{ChannelSpec, Snr, Target};
pub use detect::{DetectionReport, Method, Thresholds};
pub use modarith::{Modulus, PlaneLine, PlanePoint, ShiftedLine};
pub use signal::{ChirpId, Sequence};

