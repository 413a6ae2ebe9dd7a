//! Deterministic performance engine.
//!
//! Everything here is a pure function of its arguments: Nakagami SNR
//! statistics, the exact end-to-end SNR distribution of an AF branch and of
//! the best of `N` branches, the averaged BER integral, its high-SNR
//! asymptote and diversity order, coverage probability and throughput.

mod asymptotic;
mod ber;
mod branch;
pub mod quadrature;
pub mod special;
mod throughput;

pub use asymptotic::{
    asymptotic_ber, asymptotic_ber_with_form, asymptotic_integral, asymptotic_terms,
    diversity_order, maclaurin_coefficient, min_bound_cdf, AsymptoticBer, AsymptoticEvaluation,
    AsymptoticForm, AsymptoticTerms,
};
pub use ber::{
    analytical_ber, ber_from_cdf, conditional_ber, detection_offset, single_link_ber,
};
pub use branch::{
    branch_cdf_exact, coverage_probability, max_cdf, max_pdf, single_link_cdf,
    single_link_coverage,
};
pub use special::{harmonic_number, incomplete_gammas, q_function};
pub use throughput::{packet_error_rate, throughput, SystemKind, ThroughputParams};

use crate::error::{domain, Result};

/// Fading parameters and average SNRs of one source → relay → destination
/// branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchParams {
    pub m_sr: f64,
    pub m_rd: f64,
    pub gbar_sr: f64,
    pub gbar_rd: f64,
}

impl BranchParams {
    pub fn new(m_sr: f64, m_rd: f64, gbar_sr: f64, gbar_rd: f64) -> Result<Self> {
        let p = Self {
            m_sr,
            m_rd,
            gbar_sr,
            gbar_rd,
        };
        p.validate()?;
        Ok(p)
    }

    /// Both hops with the same fading and average SNR.
    pub fn symmetric(m: f64, gbar: f64) -> Result<Self> {
        Self::new(m, m, gbar, gbar)
    }

    pub fn validate(&self) -> Result<()> {
        for m in [self.m_sr, self.m_rd] {
            if !(m.is_finite() && m >= 0.5) {
                return domain(format!("fading parameter must be >= 0.5, got {m}"));
            }
        }
        for g in [self.gbar_sr, self.gbar_rd] {
            if !(g.is_finite() && g > 0.0) {
                return domain(format!("average SNR must be positive, got {g}"));
            }
        }
        Ok(())
    }

    /// Fading parameter of the more severely faded hop.
    pub fn min_m(&self) -> f64 {
        self.m_sr.min(self.m_rd)
    }
}

pub(crate) fn validate_branches(branches: &[BranchParams]) -> Result<()> {
    if branches.is_empty() {
        return domain("at least one relay branch is required");
    }
    branches.iter().try_for_each(BranchParams::validate)
}
