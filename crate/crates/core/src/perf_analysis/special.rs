//! Special functions used by the BER, coverage and asymptotic expressions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{domain, Error, Result};

const MAX_ITER: usize = 500;

pub fn gamma(a: f64) -> f64 {
    libm::tgamma(a)
}

pub fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

/// `H_x = Σ_{k=1}^{x} 1/k`, summed smallest term first.
pub fn harmonic_number(x: u64) -> Result<f64> {
    if x < 1 {
        return domain("harmonic number needs x >= 1");
    }
    Ok((1..=x).rev().map(|k| 1.0 / k as f64).sum())
}

/// Gaussian tail probability `Q(x) = ½·erfc(x/√2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Regularized incomplete gammas `(P(a, x), Q(a, x))`.
///
/// The series gives `P` for `x < a + 1`, a Lentz continued fraction gives `Q`
/// otherwise; the other member is the complement, so the small tail is
/// always computed directly.
pub fn regularized_gammas(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a.is_finite()) {
        return domain(format!("incomplete gamma needs a > 0, got {a}"));
    }
    if x.is_nan() || x < 0.0 {
        return domain(format!("incomplete gamma needs x >= 0, got {x}"));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let p = lower_series(a, x)? * log_prefactor.exp();
        Ok((p, 1.0 - p))
    } else {
        let q = upper_continued_fraction(a, x)? * log_prefactor.exp();
        Ok((1.0 - q, q))
    }
}

/// Unregularized `(γ(a, x), Γ(a, x))`.
pub fn incomplete_gammas(a: f64, x: f64) -> Result<(f64, f64)> {
    let (p, q) = regularized_gammas(a, x)?;
    let g = gamma(a);
    Ok((p * g, q * g))
}

pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    regularized_gammas(a, x).map(|(p, _)| p)
}

pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64> {
    regularized_gammas(a, x).map(|(_, q)| q)
}

// Σ x^n / (a (a+1) ... (a+n))
fn lower_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!("incomplete gamma series (a={a}, x={x})")))
}

// Modified Lentz evaluation of 1/(x+1-a- 1·(1-a)/(x+3-a- ...)).
fn upper_continued_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::Convergence(format!("incomplete gamma continued fraction (a={a}, x={x})")))
}

/// Binomial coefficient as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_small_values() {
        assert_eq!(harmonic_number(1).unwrap(), 1.0);
        assert!((harmonic_number(3).unwrap() - 11.0 / 6.0).abs() < 1e-15);
        assert!(harmonic_number(0).is_err());
    }

    #[test]
    fn harmonic_127_near_asymptotic_expansion() {
        let h = harmonic_number(127).unwrap();
        let approx = 127f64.ln() + 0.577_215_664_901_532_9 + 1.0 / 254.0;
        assert!((h - approx).abs() < 1e-4);
        assert!((h - 5.425_334_592_589_174).abs() < 1e-13);
    }

    #[test]
    fn q_function_basics() {
        assert_eq!(q_function(0.0), 0.5);
        for x in [0.1, 0.7, 1.3, 2.9, 5.5, 7.9] {
            assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-15);
        }
        assert!(q_function(40.0) >= 0.0);
    }

    #[test]
    fn exponential_case_of_lower_gamma() {
        for x in [0.01, 0.5, 2.0, 9.0, 40.0] {
            let (lo, up) = incomplete_gammas(1.0, x).unwrap();
            assert!((lo - (1.0 - (-x).exp())).abs() < 1e-14);
            assert!((up - (-x).exp()).abs() < 1e-14 * (-x).exp().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn zero_argument() {
        let (lo, up) = incomplete_gammas(2.5, 0.0).unwrap();
        assert_eq!(lo, 0.0);
        assert!((up - gamma(2.5)).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(incomplete_gammas(0.0, 1.0).is_err());
        assert!(incomplete_gammas(1.0, -1.0).is_err());
    }

    #[test]
    fn half_integer_against_erfc() {
        // P(1/2, x) = erf(√x)
        for x in [0.05, 0.8, 3.0, 12.0] {
            let p = regularized_lower_gamma(0.5, x).unwrap();
            assert!((p - libm::erf(x.sqrt())).abs() < 1e-14);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(11, 0), 1.0);
        assert_eq!(binomial(11, 11), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }
}
