#![allow(dead_code)]

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Q function from its integral form, `∫_x^∞ φ(t) dt`.
pub fn q_oracle(x: f64) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x >= 0.0 {
        simpson(phi, x, x + 40.0, 40_000)
    } else {
        1.0 - simpson(phi, -x, -x + 40.0, 40_000)
    }
}

/// `K₁(z) = ∫_0^∞ e^{−z·cosh t}·cosh t dt`.
pub fn bessel_k1(z: f64) -> f64 {
    let upper = (750.0 / z).acosh();
    simpson(|t| (-z * t.cosh()).exp() * t.cosh(), 0.0, upper, 200_000)
}

/// Exact CDF of `γ₁γ₂/(γ₁+γ₂+1)` for exponential `γ₁`, `γ₂`.
pub fn rayleigh_af_cdf(r: f64, g1: f64, g2: f64) -> f64 {
    let z = 2.0 * (r * (r + 1.0) / (g1 * g2)).sqrt();
    1.0 - z * (-r * (1.0 / g1 + 1.0 / g2)).exp() * bessel_k1(z)
}

pub fn harmonic(n: u64) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
