mod common;

use common::{harmonic, q_oracle, rayleigh_af_cdf, rel, simpson};
use lora_relay_core::perf_analysis::special::{regularized_gammas, regularized_lower_gamma};
use lora_relay_core::perf_analysis::*;

#[test]
fn incomplete_gamma_complementarity() {
    for a in [0.5, 1.0, 1.7, 2.0, 3.0, 7.5, 20.0] {
        for x in [1e-6, 0.01, 0.3, 1.0, 2.5, 9.0, 30.0, 150.0] {
            let (p, q) = regularized_gammas(a, x).unwrap();
            assert!((p + q - 1.0).abs() < 1e-10, "a={a} x={x}");
            let (lo, up) = incomplete_gammas(a, x).unwrap();
            assert!(rel(lo + up, libm::tgamma(a)) < 1e-10);
        }
    }
}

#[test]
fn incomplete_gamma_closed_forms() {
    for x in [1e-3f64, 0.2, 1.0, 4.0, 12.0] {
        let p1 = regularized_lower_gamma(1.0, x).unwrap();
        assert!(rel(p1, -(-x).exp_m1()) < 1e-12);
        let p2 = regularized_lower_gamma(2.0, x).unwrap();
        assert!((p2 - (1.0 - (-x).exp() * (1.0 + x))).abs() < 1e-13);
        let (_, q_half) = regularized_gammas(0.5, x).unwrap();
        assert!(rel(q_half, libm::erfc(x.sqrt())) < 1e-11);
    }
}

#[test]
fn q_function_against_integral() {
    for x in [-2.0, 0.0, 0.7, 3.0, 6.0] {
        assert!((q_function(x) - q_oracle(x)).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn harmonic_numbers_by_summation() {
    for sf in 7..=12u32 {
        let n = (1u64 << sf) - 1;
        assert!(rel(harmonic_number(n).unwrap(), harmonic(n)) < 1e-14);
        let v = detection_offset(sf).unwrap();
        assert!(rel(v * v / 2.0, harmonic(n)) < 1e-14);
    }
}

#[test]
fn rayleigh_branch_cdf_matches_bessel_form() {
    for (g1, g2) in [(10.0, 30.0), (100.0, 100.0), (3.0, 1000.0)] {
        let p = BranchParams::new(1.0, 1.0, g1, g2).unwrap();
        for r in [1e-4, 0.01, 0.5, 2.0, 10.0, 40.0] {
            let exact = rayleigh_af_cdf(r, g1, g2);
            let f = branch_cdf_exact(r, &p).unwrap();
            assert!((f - exact).abs() < 1e-9 * exact.max(1e-3), "g=({g1},{g2}) r={r}: {f} vs {exact}");
        }
    }
}

#[test]
fn max_pdf_integrates_to_one() {
    let sets = [
        vec![BranchParams::symmetric(1.0, 20.0).unwrap()],
        vec![BranchParams::symmetric(1.0, 20.0).unwrap(); 3],
        vec![
            BranchParams::new(2.0, 1.0, 15.0, 40.0).unwrap(),
            BranchParams::new(0.5, 3.0, 60.0, 10.0).unwrap(),
        ],
    ];
    for bs in &sets {
        // map r = t/(1-t) onto [0, 1)
        let total = simpson(
            |t| {
                if t >= 1.0 {
                    return 0.0;
                }
                let scale = 20.0;
                let r = scale * t / (1.0 - t);
                max_pdf(r, bs).unwrap() * scale / ((1.0 - t) * (1.0 - t))
            },
            0.0,
            1.0,
            4000,
        );
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }
}

#[test]
fn single_link_ber_against_simpson_average() {
    let v = detection_offset(7).unwrap();
    for (m, g) in [(1.0f64, 30.0f64), (2.0, 100.0), (3.0, 20.0)] {
        let pdf = |r: f64| {
            if r <= 0.0 {
                return 0.0;
            }
            let rate = m / g;
            (m * rate.ln() + (m - 1.0) * r.ln() - rate * r - libm::lgamma(m)).exp()
        };
        // s = √(2r) removes the square-root kink at the origin
        let oracle = simpson(
            |s| 0.5 * q_function(s - v) * pdf(0.5 * s * s) * s,
            0.0,
            (80.0 * g).sqrt(),
            400_000,
        );
        let b = single_link_ber(m, g, 7).unwrap();
        assert!(rel(b, oracle) < 1e-6, "m={m} g={g}: {b} vs {oracle}");
    }
}

#[test]
fn rayleigh_relay_ber_against_simpson_average() {
    // BER = ½∫ φ(s − V)·F(s²/2) ds with the Bessel-form CDF
    let v = detection_offset(7).unwrap();
    for n in [1, 2] {
        let g = 50.0;
        let oracle = 0.5
            * simpson(
                |s| {
                    let r = 0.5 * s * s;
                    let f = if r == 0.0 { 0.0 } else { rayleigh_af_cdf(r, g, g).powi(n) };
                    (-0.5 * (s - v) * (s - v)).exp() / (2.0 * std::f64::consts::PI).sqrt() * f
                },
                0.0,
                v + 12.0,
                2_000,
            );
        let b = analytical_ber(&vec![BranchParams::symmetric(1.0, g).unwrap(); n as usize], 7).unwrap();
        assert!(rel(b, oracle) < 1e-6, "N={n}: {b} vs {oracle}");
    }
}

#[test]
fn asymptotic_closed_form_against_quadrature() {
    let v = detection_offset(7).unwrap();
    for n in [1usize, 2, 3] {
        let g = 1e4;
        let bs = vec![BranchParams::symmetric(1.0, g).unwrap(); n];
        let delta = n as f64 - 1.0;
        // ∫_0^∞ e^{−(√(2r) − V)²/2} r^Δ dr by Simpson over s = √(2r)
        let integral = simpson(
            |s| (-0.5 * (s - v) * (s - v)).exp() * (0.5 * s * s).powf(delta) * s,
            0.0,
            v + 60.0,
            200_000,
        );
        let (closed, how) = asymptotic_integral(delta, v).unwrap();
        assert_eq!(how, AsymptoticEvaluation::ClosedForm);
        assert!(rel(closed, integral) < 1e-6, "N={n}: {closed} vs {integral}");

        // C = Π(1/g²)·Σ_k 1/Π_{l≠k} 1 for Rayleigh branches: a_l = 2/g
        let coeff = n as f64 * (2.0 / g).powi(n as i32);
        let full = asymptotic_ber(&bs, 7).unwrap().value;
        assert!(rel(full, 0.25 * coeff * integral) < 1e-6);
    }
}

#[test]
fn fractional_order_falls_back_to_quadrature() {
    let v = detection_offset(7).unwrap();
    let (val, how) = asymptotic_integral(0.25, v).unwrap();
    assert_eq!(how, AsymptoticEvaluation::Quadrature);
    let oracle = simpson(
        |s| (-0.5 * (s - v) * (s - v)).exp() * (0.5 * s * s).powf(0.25) * s,
        0.0,
        v + 60.0,
        200_000,
    );
    assert!(rel(val, oracle) < 1e-8);
}

#[test]
fn printed_form_differs_from_canonical() {
    let bs = vec![BranchParams::symmetric(1.0, 1e3).unwrap(); 2];
    let canonical = asymptotic_ber_with_form(&bs, 7, AsymptoticForm::Canonical).unwrap().value;
    let printed = asymptotic_ber_with_form(&bs, 7, AsymptoticForm::AsPrinted).unwrap().value;
    assert!(printed.is_finite());
    assert!(rel(printed, canonical) > 1e-3);
}

#[test]
fn asymptote_tracks_exact_at_high_snr() {
    for n in [1, 2, 3] {
        let ratio = |g: f64| {
            let bs = vec![BranchParams::symmetric(1.0, g).unwrap(); n];
            asymptotic_ber(&bs, 7).unwrap().value / analytical_ber(&bs, 7).unwrap()
        };
        let (r1, r2) = (ratio(1e4), ratio(1e5));
        assert!(rel(r2, r1) < 0.1, "N={n}: {r1} → {r2}");
    }
}

#[test]
fn asymptotic_slope_equals_diversity_order() {
    for (m1, m2, gd) in [(1.0, 1.0, 2.0), (1.0, 2.0, 2.0), (2.0, 1.0, 2.0), (2.0, 2.0, 4.0)] {
        let bs = |g: f64| vec![BranchParams::new(m1, m2, g, g).unwrap(); 2];
        assert_eq!(diversity_order(&bs(1.0)).unwrap(), gd);
        let lo = asymptotic_ber(&bs(1e4), 7).unwrap().value.log10();
        let hi = asymptotic_ber(&bs(1e5), 7).unwrap().value.log10();
        assert!(((lo - hi) - gd).abs() < 0.05, "({m1},{m2}): slope {}", lo - hi);
    }
}

#[test]
fn coverage_single_link_closed_form() {
    for (psi, g) in [(10.0, 100.0), (1000.0, 7186.0)] {
        let c = single_link_coverage(psi, 1.0, g).unwrap();
        assert!(rel(c, (-psi / g).exp()) < 1e-13);
        assert!((single_link_cdf(psi, 1.0, g).unwrap() + c - 1.0).abs() < 1e-15);
    }
}

#[test]
fn throughput_relay_is_half_conventional_at_equal_ber() {
    let modem = lora_relay_core::lora_phy::ModemConfig::new(9, 125e3).unwrap();
    let conv = ThroughputParams::new(20, &modem, SystemKind::Conventional).unwrap();
    let relay = ThroughputParams::new(20, &modem, SystemKind::Relay).unwrap();
    for pb in [0.0, 1e-4, 0.01, 0.2] {
        let c = throughput(pb, &conv).unwrap();
        let r = throughput(pb, &relay).unwrap();
        assert!((r - c / 2.0).abs() <= 1e-12 * c.max(1.0));
        let expected = 20.0 * 9.0 * (1.0 - 2.0 * pb).powi(20) / conv.transmission_period_s();
        assert!((c - expected).abs() <= 1e-9 * expected.max(1.0));
    }
}
