//! Robust background-noise PSD estimation with universal order-statistics
//! filters.
//!
//! Mean-based spectral estimators (Welch averaging) are biased upward by
//! loud transients such as broadband clicks. Fixed-rank order-statistics
//! filters reject transients by discarding the loudest window entries, but
//! the right threshold rank depends on how often transients occur. The
//! universal filters here blend all fixed-rank filters with
//! exponential-weights updates driven by each filter's recent sample second
//! moment, tracking the best rank in hindsight without choosing one up
//! front.
//!
//! Modules:
//! * [`spectral`] — tapered periodograms and Welch averaging.
//! * [`osf`] — fixed-rank filters (SAWP, TLOSF) and their exact moments
//!   under exponential statistics.
//! * [`universal`] — the blended filters, their loss windows, and the
//!   per-sample regret bound checker.
//! * [`simulate`] — mixture-noise Monte Carlo harness.
//! * [`pipeline`] — WAV ingestion, click injection, per-bin spectrogram
//!   estimation, and CSV/JSON emission.

pub mod error;
pub mod osf;
pub mod pipeline;
pub mod simulate;
pub mod spectral;
pub mod universal;

pub use error::{Error, Result};
