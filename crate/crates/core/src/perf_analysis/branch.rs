//! Distribution of the end-to-end SNR of AF branches and of their maximum.
//!
//! For a single branch `γ_t = γ₁γ₂/(γ₁ + γ₂ + 1)`, the event `γ_t ≤ r` holds
//! whenever `γ₁ ≤ r`, and for `γ₁ = x > r` exactly when
//! `γ₂ ≤ r(x + 1)/(x − r)`. Conditioning on `γ₁` gives
//!
//! ```text
//! F(r) = P₁(r) + ∫_r^∞ f₁(x)·P₂(r(x+1)/(x−r)) dx
//!      = 1     − ∫_r^∞ f₁(x)·S₂(r(x+1)/(x−r)) dx
//! ```
//!
//! with `P`/`S` the Gamma CDF/survival. The first form is summed from
//! non-negative terms and keeps relative accuracy in the lower tail; the
//! second is used once `F > ½` so the upper tail keeps it too.

use super::quadrature::{integrate_to_infinity, Tolerance};
use super::special::{ln_gamma, regularized_gammas, regularized_lower_gamma, regularized_upper_gamma};
use super::{validate_branches, BranchParams};
use crate::error::{domain, Result};

const CDF_TOL: Tolerance = Tolerance::new(1e-300, 1e-11);
const PDF_TOL: Tolerance = Tolerance::new(1e-300, 1e-13);

fn gamma_log_density(x: f64, m: f64, rate: f64) -> f64 {
    m * rate.ln() + (m - 1.0) * x.ln() - rate * x - ln_gamma(m)
}

fn branch_cdf_tol(r: f64, p: &BranchParams, tol: Tolerance) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return domain(format!("SNR threshold must be non-negative, got {r}"));
    }
    p.validate()?;
    if r == 0.0 {
        return Ok(0.0);
    }
    if r.is_infinite() {
        return Ok(1.0);
    }
    let (m1, rate1) = (p.m_sr, p.m_sr / p.gbar_sr);
    let (m2, rate2) = (p.m_rd, p.m_rd / p.gbar_rd);
    let span = r * (r + 1.0);
    let threshold = |u: f64| rate2 * (r + span / u);
    let density = |u: f64| gamma_log_density(r + u, m1, rate1).exp();

    // u = x − r; the second-hop factor switches over near span·rate2/m2.
    let u_switch = span * rate2 / m2.max(1.0);
    let scale = 1.0 / rate1;
    let breaks = [u_switch * 0.1, u_switch, u_switch * 10.0, scale];

    let (p1, _) = regularized_gammas(m1, rate1 * r)?;
    let lower = integrate_to_infinity(
        |u| density(u) * regularized_lower_gamma(m2, threshold(u)).unwrap_or(f64::NAN),
        0.0,
        scale,
        &breaks,
        tol,
    )?;
    let direct = p1 + lower.value;
    if direct <= 0.5 {
        return Ok(direct.clamp(0.0, 1.0));
    }
    let survival = integrate_to_infinity(
        |u| density(u) * regularized_upper_gamma(m2, threshold(u)).unwrap_or(f64::NAN),
        0.0,
        scale,
        &breaks,
        tol,
    )?;
    Ok((1.0 - survival.value).clamp(0.0, 1.0))
}

/// `Pr(γ_t ≤ r)` for one AF branch, by quadrature over the first hop's SNR.
pub fn branch_cdf_exact(r: f64, p: &BranchParams) -> Result<f64> {
    branch_cdf_tol(r, p, CDF_TOL)
}

/// Groups identical branches so each distinct CDF is evaluated once.
fn distinct(branches: &[BranchParams]) -> Vec<(BranchParams, i32)> {
    let mut groups: Vec<(BranchParams, i32)> = Vec::new();
    for b in branches {
        match groups.iter_mut().find(|(p, _)| p == b) {
            Some((_, n)) => *n += 1,
            None => groups.push((*b, 1)),
        }
    }
    groups
}

fn max_cdf_tol(r: f64, branches: &[BranchParams], tol: Tolerance) -> Result<f64> {
    validate_branches(branches)?;
    let mut prod = 1.0;
    for (p, n) in distinct(branches) {
        prod *= branch_cdf_tol(r, &p, tol)?.powi(n);
    }
    Ok(prod)
}

/// CDF of the best-branch SNR: the product of the branch CDFs.
pub fn max_cdf(r: f64, branches: &[BranchParams]) -> Result<f64> {
    max_cdf_tol(r, branches, CDF_TOL)
}

/// Branch density by Richardson-extrapolated finite differences of the CDF.
fn branch_pdf(r: f64, p: &BranchParams) -> Result<f64> {
    let h = (1e-6 * r).max(1e-6);
    let cdf = |x: f64| branch_cdf_tol(x, p, PDF_TOL);
    if r >= 2.0 * h {
        let d1 = (cdf(r + h)? - cdf(r - h)?) / (2.0 * h);
        let d2 = (cdf(r + h / 2.0)? - cdf(r - h / 2.0)?) / h;
        Ok((4.0 * d2 - d1) / 3.0)
    } else {
        let f0 = cdf(r)?;
        let d1 = (cdf(r + h)? - f0) / h;
        let d2 = (cdf(r + h / 2.0)? - f0) / (h / 2.0);
        Ok(2.0 * d2 - d1)
    }
}

/// Density of the best-branch SNR, `Σ_k f_k(r)·Π_{l≠k} F_l(r)`.
pub fn max_pdf(r: f64, branches: &[BranchParams]) -> Result<f64> {
    validate_branches(branches)?;
    if r.is_nan() || r < 0.0 {
        return domain(format!("SNR must be non-negative, got {r}"));
    }
    let groups = distinct(branches);
    let cdfs = groups
        .iter()
        .map(|(p, _)| branch_cdf_tol(r, p, PDF_TOL))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for (k, (p, nk)) in groups.iter().enumerate() {
        let mut others = cdfs[k].powi(nk - 1);
        for (l, (_, nl)) in groups.iter().enumerate() {
            if l != k {
                others *= cdfs[l].powi(*nl);
            }
        }
        if others > 0.0 {
            total += *nk as f64 * branch_pdf(r, p)? * others;
        }
    }
    Ok(total.max(0.0))
}

/// `1 − F_max(ψ)`.
pub fn coverage_probability(psi: f64, branches: &[BranchParams]) -> Result<f64> {
    Ok(1.0 - max_cdf(psi, branches)?)
}

/// Gamma CDF of a single Nakagami-m hop.
pub fn single_link_cdf(r: f64, m: f64, gbar: f64) -> Result<f64> {
    if !(m >= 0.5 && gbar > 0.0) {
        return domain(format!("invalid Nakagami parameters m={m}, mean={gbar}"));
    }
    if r.is_nan() || r < 0.0 {
        return domain(format!("SNR threshold must be non-negative, got {r}"));
    }
    regularized_lower_gamma(m, m * r / gbar)
}

/// Coverage of a direct single-hop link.
pub fn single_link_coverage(psi: f64, m: f64, gbar: f64) -> Result<f64> {
    if !(m >= 0.5 && gbar > 0.0) {
        return domain(format!("invalid Nakagami parameters m={m}, mean={gbar}"));
    }
    if psi.is_nan() || psi < 0.0 {
        return domain(format!("SNR threshold must be non-negative, got {psi}"));
    }
    regularized_upper_gamma(m, m * psi / gbar)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rayleigh(g: f64) -> BranchParams {
        BranchParams::symmetric(1.0, g).unwrap()
    }

    #[test]
    fn cdf_endpoints() {
        let p = rayleigh(10.0);
        assert_eq!(branch_cdf_exact(0.0, &p).unwrap(), 0.0);
        let far = branch_cdf_exact(1e7, &p).unwrap();
        assert!((far - 1.0).abs() < 1e-6);
        assert!(branch_cdf_exact(-1.0, &p).is_err());
    }

    #[test]
    fn cdf_is_monotone_and_above_min_link_cdf() {
        let p = BranchParams::new(1.5, 0.7, 8.0, 20.0).unwrap();
        let mut last = 0.0;
        for i in 1..40 {
            let r = 0.25 * i as f64 * i as f64 / 10.0;
            let f = branch_cdf_exact(r, &p).unwrap();
            assert!(f >= last - 1e-12);
            let s1 = single_link_coverage(r, p.m_sr, p.gbar_sr).unwrap();
            let s2 = single_link_coverage(r, p.m_rd, p.gbar_rd).unwrap();
            assert!(f >= 1.0 - s1 * s2 - 1e-10, "r={r}");
            last = f;
        }
    }

    #[test]
    fn single_branch_max_equals_branch() {
        let p = rayleigh(10.0);
        for r in [0.5, 3.0, 17.0] {
            let a = max_cdf(r, &[p]).unwrap();
            let b = branch_cdf_exact(r, &p).unwrap();
            assert_eq!(a, b);
            let c = max_cdf(r, &[p, p, p]).unwrap();
            assert!((c - b.powi(3)).abs() < 1e-15);
        }
    }

    #[test]
    fn coverage_limits() {
        let bs = [rayleigh(100.0), rayleigh(50.0)];
        assert_eq!(coverage_probability(0.0, &bs).unwrap(), 1.0);
        assert!(coverage_probability(1e9, &bs).unwrap() < 1e-12);
    }

    #[test]
    fn empty_branch_list_rejected() {
        assert!(max_cdf(1.0, &[]).is_err());
        assert!(max_pdf(1.0, &[]).is_err());
    }

    #[test]
    fn pdf_matches_finite_difference_of_max_cdf_for_unequal_branches() {
        let bs = [rayleigh(10.0), BranchParams::new(2.0, 1.0, 30.0, 15.0).unwrap()];
        let r = 7.0;
        let h = 1e-3;
        let fd = (max_cdf(r + h, &bs).unwrap() - max_cdf(r - h, &bs).unwrap()) / (2.0 * h);
        let pdf = max_pdf(r, &bs).unwrap();
        assert!((pdf - fd).abs() < 1e-6 * fd.abs().max(1.0), "{pdf} vs {fd}");
    }
}
