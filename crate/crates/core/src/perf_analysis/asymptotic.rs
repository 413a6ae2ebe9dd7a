//! High-SNR behaviour: Maclaurin expansion of the min-hop bound, the
//! closed-form asymptotic BER and the diversity order.
//!
//! Near zero the min-hop bound of branch `l` has density `a_l·r^{t_l}` with
//! `t_l = min(m_sr, m_rd) − 1`. Multiplying the per-branch expansions gives
//! the best-branch density `C·r^Δ` with
//!
//! ```text
//! C = Σ_k Π_l a_l / Π_{l≠k} min_l,     Δ = Σ_l min_l − 1,
//! ```
//!
//! and bounding `Q(x) ≤ ½e^{−x²/2}` turns the BER average into
//! `¼·C·∫_0^∞ e^{−(√(2r) − V)²/2}·r^Δ dr`. With `x = √(2r) − V` the integral
//! becomes `2^{−Δ} Σ_j C(2Δ+1, j)·V^{2Δ+1−j}·∫_{−V}^∞ x^j e^{−x²/2} dx`,
//! and each Gaussian moment over `[−V, ∞)` is
//! `2^{(j−1)/2}·(Γ((j+1)/2) + (−1)^j·γ((j+1)/2, V²/2))`.

use super::ber::detection_offset;
use super::quadrature::{integrate_breaks, Tolerance};
use super::special::{binomial, gamma, incomplete_gammas};
use super::{validate_branches, BranchParams};
use crate::error::{domain, Result};

/// Ingredients of the asymptotic BER for a set of branches.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticTerms {
    pub a_coeffs: Vec<f64>,
    pub t_orders: Vec<f64>,
    pub delta: f64,
    pub v_const: f64,
}

/// Which grouping of the branch coefficient to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AsymptoticForm {
    /// `Σ_k Π_l a_l / Π_{l≠k} min_l`, as obtained from the product of the
    /// per-branch expansions, with exact Gaussian moments.
    #[default]
    Canonical,
    /// The sum over `k` moved into the denominator and the moment written as
    /// `(−1)^j·2^{1−v}·(γ(v, V²/2) + Γ(v))`. Kept only for comparison; it
    /// disagrees with direct integration.
    AsPrinted,
}

/// How the `r^Δ` integral was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticEvaluation {
    /// Binomial expansion; requires `2Δ + 1` to be an integer.
    ClosedForm,
    /// Adaptive quadrature, used for non-integer `2Δ + 1`.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticBer {
    pub value: f64,
    pub evaluation: AsymptoticEvaluation,
}

/// First non-zero Maclaurin coefficient `a_l` and order `t_l` of the min-hop
/// density of one branch.
pub fn maclaurin_coefficient(p: &BranchParams) -> Result<(f64, f64)> {
    p.validate()?;
    let term = |m: f64, g: f64| (m / g).powf(m) / gamma(m);
    let a = if p.m_sr < p.m_rd {
        term(p.m_sr, p.gbar_sr)
    } else if p.m_sr > p.m_rd {
        term(p.m_rd, p.gbar_rd)
    } else {
        term(p.m_sr, p.gbar_sr) + term(p.m_rd, p.gbar_rd)
    };
    Ok((a, p.min_m() - 1.0))
}

/// Small-SNR approximation `a_l·r^{t_l+1}/min(m_sr, m_rd)` of the min-hop CDF.
pub fn min_bound_cdf(r: f64, p: &BranchParams) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return domain(format!("SNR must be non-negative, got {r}"));
    }
    let (a, t) = maclaurin_coefficient(p)?;
    Ok(a * r.powf(t + 1.0) / p.min_m())
}

/// `G_d = Σ_l min(m_sr, m_rd)`.
pub fn diversity_order(branches: &[BranchParams]) -> Result<f64> {
    validate_branches(branches)?;
    Ok(branches.iter().map(BranchParams::min_m).sum())
}

pub fn asymptotic_terms(branches: &[BranchParams], sf: u32) -> Result<AsymptoticTerms> {
    validate_branches(branches)?;
    let (a_coeffs, t_orders): (Vec<f64>, Vec<f64>) = branches
        .iter()
        .map(maclaurin_coefficient)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(AsymptoticTerms {
        a_coeffs,
        t_orders,
        delta: diversity_order(branches)? - 1.0,
        v_const: detection_offset(sf)?,
    })
}

fn integer_order(delta: f64) -> Option<u64> {
    let n = 2.0 * delta + 1.0;
    let rounded = n.round();
    ((n - rounded).abs() < 1e-9 && rounded >= 0.0).then_some(rounded as u64)
}

fn closed_form_integral(n: u64, delta: f64, v: f64, form: AsymptoticForm) -> Result<f64> {
    let mut sum = 0.0;
    for j in 0..=n {
        let order = 0.5 * (j as f64 + 1.0);
        let (lower, _) = incomplete_gammas(order, 0.5 * v * v)?;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let moment = match form {
            AsymptoticForm::Canonical => 2f64.powf(order - 1.0) * (gamma(order) + sign * lower),
            AsymptoticForm::AsPrinted => sign * 0.5f64.powf(order - 1.0) * (lower + gamma(order)),
        };
        sum += binomial(n, j) * v.powi((n - j) as i32) * moment;
    }
    Ok(2f64.powf(-delta) * sum)
}

fn quadrature_integral(delta: f64, v: f64) -> Result<f64> {
    // ∫_0^∞ e^{−(s−V)²/2} (s²/2)^Δ s ds after s = √(2r)
    let integrand = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            (-0.5 * (s - v) * (s - v)).exp() * (0.5 * s * s).powf(delta) * s
        }
    };
    let peak = 0.5 * (v + (v * v + 4.0 * (2.0 * delta + 1.0)).sqrt());
    let cut = peak + 40.0;
    Ok(integrate_breaks(integrand, &[0.0, v.min(peak), peak, cut], Tolerance::new(0.0, 1e-12))?.value)
}

/// `∫_0^∞ e^{−(√(2r) − V)²/2}·r^Δ dr`, in closed form when `2Δ + 1` is a
/// non-negative integer and by quadrature otherwise.
pub fn asymptotic_integral(delta: f64, v: f64) -> Result<(f64, AsymptoticEvaluation)> {
    if !(delta >= -0.5) || !(v >= 0.0) {
        return domain(format!("invalid asymptotic integral parameters Δ={delta}, V={v}"));
    }
    match integer_order(delta) {
        Some(n) => Ok((
            closed_form_integral(n, delta, v, AsymptoticForm::Canonical)?,
            AsymptoticEvaluation::ClosedForm,
        )),
        None => Ok((quadrature_integral(delta, v)?, AsymptoticEvaluation::Quadrature)),
    }
}

/// Closed-form high-SNR BER of best-relay selection.
pub fn asymptotic_ber(branches: &[BranchParams], sf: u32) -> Result<AsymptoticBer> {
    asymptotic_ber_with_form(branches, sf, AsymptoticForm::Canonical)
}

pub fn asymptotic_ber_with_form(
    branches: &[BranchParams],
    sf: u32,
    form: AsymptoticForm,
) -> Result<AsymptoticBer> {
    let terms = asymptotic_terms(branches, sf)?;
    let mins: Vec<f64> = branches.iter().map(BranchParams::min_m).collect();
    let prod_a: f64 = terms.a_coeffs.iter().product();
    let prod_min_except = |k: usize| -> f64 {
        mins.iter()
            .enumerate()
            .filter(|&(l, _)| l != k)
            .map(|(_, m)| m)
            .product()
    };
    let n = branches.len();
    match form {
        AsymptoticForm::Canonical => {
            let coeff: f64 = (0..n).map(|k| prod_a / prod_min_except(k)).sum();
            let (integral, evaluation) = asymptotic_integral(terms.delta, terms.v_const)?;
            Ok(AsymptoticBer {
                value: 0.25 * coeff * integral,
                evaluation,
            })
        }
        AsymptoticForm::AsPrinted => {
            let coeff = prod_a / (0..n).map(prod_min_except).sum::<f64>();
            let Some(order) = integer_order(terms.delta) else {
                return domain("printed closed form needs an integer 2Δ + 1");
            };
            let integral = closed_form_integral(order, terms.delta, terms.v_const, form)?;
            Ok(AsymptoticBer {
                value: 0.25 * coeff * integral,
                evaluation: AsymptoticEvaluation::ClosedForm,
            })
        }
    }
}
