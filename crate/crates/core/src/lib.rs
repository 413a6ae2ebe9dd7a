//! Link-level simulator and analytic calculator for two-hop opportunistic
//! amplify-and-forward LoRa relaying over Nakagami-m fading.
//!
//! The crate is split along the signal chain:
//!
//! * [`lora_phy`]: chirp spread spectrum modulation and DFT detection.
//! * [`channel`]: Nakagami-m gains, path loss, AWGN and link SNR bookkeeping.
//! * [`relay_link`]: amplification, end-to-end SNR, best-relay selection and
//!   the full source → relay → destination waveform path.
//! * [`perf_analysis`]: the deterministic numerical engine (special functions,
//!   quadrature, BER integrals, asymptotics, coverage, throughput).
//! * [`montecarlo`]: seeded, shard-invariant estimators that cross-check the
//!   analysis.
//! * [`scenario`] and [`sweeps`]: the key-value scenario format and the
//!   CSV-producing sweeps behind the command-line tool.

pub mod channel;
pub mod error;
pub mod lora_phy;
pub mod montecarlo;
pub mod perf_analysis;
pub mod relay_link;
pub mod rng;
pub mod scenario;
pub mod sweeps;

pub use error::{Error, Result};
