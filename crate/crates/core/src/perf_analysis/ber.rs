//! Conditional and fading-averaged bit error rate.
//!
//! Averaging `½·Q(√(2r) − V)` against the SNR density is integrated by parts
//! and substituted with `s = √(2r)`, which leaves
//!
//! ```text
//! P_b = ½ ∫_0^∞ φ(s − V)·F(s²/2) ds
//! ```
//!
//! so only the CDF `F` of the SNR is needed.

use super::quadrature::{integrate_breaks, Tolerance};
use super::special::{harmonic_number, normal_pdf, q_function};
use super::{branch::max_cdf, branch::single_link_cdf, validate_branches, BranchParams};
use crate::error::{domain, Result};
use crate::lora_phy::{MAX_SF, MIN_SF};

const BER_TOL: Tolerance = Tolerance::new(1e-15, 1e-8);

/// Tail points are dropped once the integrand is this far below its peak.
const TRUNCATION: f64 = 1e-16;

/// `V = √(2·H_{2^SF − 1})`, the normalized magnitude of the largest noise bin.
pub fn detection_offset(sf: u32) -> Result<f64> {
    if !(MIN_SF..=MAX_SF).contains(&sf) {
        return domain(format!("spreading factor {sf} outside {MIN_SF}..={MAX_SF}"));
    }
    Ok((2.0 * harmonic_number((1u64 << sf) - 1)?).sqrt())
}

/// `½·Q(√(2γ) − V)`.
pub fn conditional_ber(gamma: f64, sf: u32) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return domain(format!("SNR must be non-negative, got {gamma}"));
    }
    Ok(0.5 * q_function((2.0 * gamma).sqrt() - detection_offset(sf)?))
}

/// Averages the conditional BER over an SNR law given by its CDF.
pub fn ber_from_cdf<F>(mut cdf: F, sf: u32) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let v = detection_offset(sf)?;
    let mut integrand = |s: f64| -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        Ok(normal_pdf(s - v) * cdf(0.5 * s * s)?)
    };

    // Coarse look for the peak; F is non-decreasing and bounded by one, so
    // beyond the cut the integrand stays below TRUNCATION times the peak.
    let mut peak = (v, 0.0);
    for k in -3..=10 {
        let s = v + k as f64;
        if s > 0.0 {
            let g = integrand(s)?;
            if g > peak.1 {
                peak = (s, g);
            }
        }
    }
    let cut = if peak.1 > 0.0 {
        let arg = TRUNCATION * peak.1 * (2.0 * std::f64::consts::PI).sqrt();
        v + (-2.0 * arg.ln()).max(0.0).sqrt()
    } else {
        v + 40.0
    };

    let mut points = vec![0.0, v.min(peak.0), v.max(peak.0), cut];
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut failure = None;
    let result = integrate_breaks(
        |s| match integrand(s) {
            Ok(g) => g,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        &points,
        BER_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(0.5 * result?.value)
}

/// Average BER of best-relay selection over the exact end-to-end SNR law.
pub fn analytical_ber(branches: &[BranchParams], sf: u32) -> Result<f64> {
    validate_branches(branches)?;
    ber_from_cdf(|r| max_cdf(r, branches), sf)
}

/// Average BER of a direct Nakagami-m link.
pub fn single_link_ber(m: f64, gbar: f64, sf: u32) -> Result<f64> {
    ber_from_cdf(|r| single_link_cdf(r, m, gbar), sf)
}
