//! Nakagami-m fading, path loss and additive white Gaussian noise.
//!
//! The per-sample noise variance of every receiver is `N₀/2^SF`. With the
//! unnormalized DFT used by [`crate::lora_phy`], that variance is also the
//! variance of each DFT bin, so the bin SNR of a symbol received over gain
//! `h` at power `P` equals the link SNR `γ = P·|h|²·2^SF/N₀`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{domain, Result};
use crate::perf_analysis::special::ln_gamma;

/// One hop: fading severity, geometry, transmit power and receiver noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub m_fading: f64,
    pub distance_m: f64,
    pub tx_power_w: f64,
    pub path_loss_exp: f64,
    pub noise_psd_w: f64,
}

impl LinkSpec {
    pub fn new(
        m_fading: f64,
        distance_m: f64,
        tx_power_w: f64,
        path_loss_exp: f64,
        noise_psd_w: f64,
    ) -> Result<Self> {
        let link = Self {
            m_fading,
            distance_m,
            tx_power_w,
            path_loss_exp,
            noise_psd_w,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m_fading.is_finite() && self.m_fading >= 0.5) {
            return domain(format!("Nakagami m must be >= 0.5, got {}", self.m_fading));
        }
        if !(self.distance_m.is_finite() && self.distance_m > 0.0) {
            return domain(format!("distance must be positive, got {}", self.distance_m));
        }
        if !(self.tx_power_w.is_finite() && self.tx_power_w > 0.0) {
            return domain(format!("transmit power must be positive, got {}", self.tx_power_w));
        }
        if !(2.0..=6.0).contains(&self.path_loss_exp) {
            return domain(format!(
                "path-loss exponent must lie in [2, 6], got {}",
                self.path_loss_exp
            ));
        }
        if !(self.noise_psd_w.is_finite() && self.noise_psd_w > 0.0) {
            return domain(format!("noise PSD must be positive, got {}", self.noise_psd_w));
        }
        Ok(())
    }

    /// Mean power gain `d^-α`.
    pub fn mean_gain(&self) -> f64 {
        self.distance_m.powf(-self.path_loss_exp)
    }

    /// Per-sample complex noise variance `N₀/2^SF`.
    pub fn noise_variance(&self, sf: u32) -> f64 {
        self.noise_psd_w / (1u64 << sf) as f64
    }

    /// Instantaneous SNR for a drawn power gain `|h|²`.
    pub fn snr_for_gain(&self, gain_sq: f64, sf: u32) -> f64 {
        self.tx_power_w * gain_sq / self.noise_variance(sf)
    }

    pub fn avg_snr(&self, sf: u32) -> f64 {
        self.snr_for_gain(self.mean_gain(), sf)
    }

    pub fn with_noise_psd(mut self, noise_psd_w: f64) -> Self {
        self.noise_psd_w = noise_psd_w;
        self
    }
}

/// Average link SNR `P·d^-α·2^SF/N₀`.
pub fn avg_link_snr(link: &LinkSpec, sf: u32) -> f64 {
    link.avg_snr(sf)
}

/// One complex fading coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadeDraw {
    pub h: Complex64,
    pub gain_sq: f64,
    pub phase: f64,
}

/// Nakagami-m gain generator with mean power `omega`.
#[derive(Debug, Clone, Copy)]
pub struct NakagamiFading {
    power: Gamma<f64>,
}

impl NakagamiFading {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        if !(m.is_finite() && m >= 0.5) {
            return domain(format!("Nakagami m must be >= 0.5, got {m}"));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return domain(format!("mean power must be positive, got {omega}"));
        }
        let power = Gamma::new(m, omega / m)
            .map_err(|e| crate::Error::Domain(format!("gamma law: {e}")))?;
        Ok(Self { power })
    }

    /// Draws `|h|² ~ Gamma(m, omega/m)` and then a uniform phase.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FadeDraw {
        let gain_sq = self.power.sample(rng);
        let phase = rng.random::<f64>() * 2.0 * PI;
        FadeDraw {
            h: Complex64::from_polar(gain_sq.sqrt(), phase),
            gain_sq,
            phase,
        }
    }
}

pub fn sample_nakagami_gain<R: Rng + ?Sized>(m: f64, omega: f64, rng: &mut R) -> Result<FadeDraw> {
    Ok(NakagamiFading::new(m, omega)?.sample(rng))
}

/// Gamma density of the instantaneous SNR of a Nakagami-m link.
pub fn nakagami_snr_pdf(r: f64, m: f64, gbar: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return domain(format!("SNR must be non-negative, got {r}"));
    }
    if !(m >= 0.5 && gbar > 0.0) {
        return domain(format!("invalid Nakagami parameters m={m}, mean={gbar}"));
    }
    if r == 0.0 {
        return Ok(match m.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0 / gbar,
            _ => 0.0,
        });
    }
    let rate = m / gbar;
    Ok((m * rate.ln() + (m - 1.0) * r.ln() - rate * r - ln_gamma(m)).exp())
}

/// Circularly-symmetric complex Gaussian sample of variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `output(n) = h·input(n) + z(n)` with `z` of per-sample variance `noise_var`.
pub fn apply_fading_and_awgn<R: Rng + ?Sized>(
    frame: &[Complex64],
    h: Complex64,
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if noise_var.is_nan() || noise_var < 0.0 {
        return domain(format!("noise variance must be non-negative, got {noise_var}"));
    }
    if noise_var == 0.0 {
        return Ok(frame.iter().map(|x| h * x).collect());
    }
    Ok(frame
        .iter()
        .map(|x| h * x + complex_gaussian(noise_var, rng))
        .collect())
}

/// How often the channel gains are redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingMode {
    /// Constant over a packet, independent across packets.
    PerPacket,
    /// Independent for every symbol.
    PerSymbol,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn link_validation() {
        assert!(LinkSpec::new(0.4, 1.0, 1.0, 2.0, 1.0).is_err());
        assert!(LinkSpec::new(1.0, 0.0, 1.0, 2.0, 1.0).is_err());
        assert!(LinkSpec::new(1.0, 1.0, 1.0, 1.5, 1.0).is_err());
        assert!(LinkSpec::new(1.0, 1.0, 1.0, 6.5, 1.0).is_err());
        assert!(LinkSpec::new(1.0, 1.0, 1.0, 2.0, 0.0).is_err());
        assert!(LinkSpec::new(0.5, 1.0, 1.0, 6.0, 1.0).is_ok());
    }

    #[test]
    fn avg_snr_substitution() {
        let link = LinkSpec::new(1.0, 1.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(avg_link_snr(&link, 7), 128.0);
    }

    #[test]
    fn avg_snr_power_law_in_distance() {
        let a = LinkSpec::new(1.0, 700.0, 0.01, 2.65, 1e-12).unwrap();
        let b = LinkSpec { distance_m: 1400.0, ..a };
        let ratio = b.avg_snr(7) / a.avg_snr(7);
        assert!((ratio - 2f64.powf(-2.65)).abs() < 1e-14);
    }

    #[test]
    fn default_relay_leg_snr() {
        // 100 dB P_T/N0 split equally, 1 km leg, alpha 2.65, SF7
        let p_t = 10f64.powf(1.4) * 1e-3;
        let n0 = p_t / 1e10;
        let link = LinkSpec::new(1.0, 1000.0, p_t / 2.0, 2.65, n0).unwrap();
        let expected = 0.5e10 * 1000f64.powf(-2.65) * 128.0;
        assert!((link.avg_snr(7) / expected - 1.0).abs() < 1e-14);
        assert!((10.0 * link.avg_snr(7).log10() - 38.561_799_739_838_9).abs() < 1e-9);
    }

    #[test]
    fn pdf_reduces_to_exponential_for_rayleigh() {
        for r in [0.0, 0.3, 4.0, 25.0] {
            let f = nakagami_snr_pdf(r, 1.0, 5.0).unwrap();
            assert!((f - (-r / 5.0f64).exp() / 5.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_matches_gamma_density() {
        // Gamma(shape 2, scale 5) at 5: x e^{-x/5} / 25
        let f = nakagami_snr_pdf(5.0, 2.0, 10.0).unwrap();
        assert!((f - 5.0 * (-1.0f64).exp() / 25.0).abs() < 1e-15);
        assert!(nakagami_snr_pdf(-1.0, 2.0, 10.0).is_err());
    }

    #[test]
    fn rejects_bad_fading_parameters() {
        let mut rng = stream(0, 0, 0);
        assert!(sample_nakagami_gain(0.3, 1.0, &mut rng).is_err());
        assert!(sample_nakagami_gain(1.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn zero_noise_is_pure_scaling() {
        let mut rng = stream(0, 0, 0);
        let x = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)];
        let h = Complex64::new(0.5, -1.0);
        let y = apply_fading_and_awgn(&x, h, 0.0, &mut rng).unwrap();
        assert_eq!(y, vec![h * x[0], h * x[1]]);
        assert!(apply_fading_and_awgn(&x, h, -1.0, &mut rng).is_err());
    }

    #[test]
    fn gains_are_non_negative() {
        let mut rng = stream(1, 0, 0);
        let fading = NakagamiFading::new(0.5, 2.0).unwrap();
        for _ in 0..10_000 {
            let d = fading.sample(&mut rng);
            assert!(d.gain_sq >= 0.0);
            assert!((0.0..2.0 * PI).contains(&d.phase));
            assert!((d.h.norm_sqr() - d.gain_sq).abs() <= 1e-12 * d.gain_sq.max(1.0));
        }
    }
}
