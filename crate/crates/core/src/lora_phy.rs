//! Baseband LoRa chirp spread spectrum modem.
//!
//! A symbol `m` is the basic up-chirp `x_0` cyclically advanced by `m` chips,
//! critically sampled (one sample per chip) and scaled to unit energy.
//! Detection de-chirps with `conj(x_0)`, takes an unnormalized `2^SF`-point
//! forward DFT and picks the strongest bin. With this convention a clean
//! symbol received with amplitude `|h|·√P` lands in bin `m` with magnitude
//! exactly `|h|·√P`, and complex white noise of per-sample variance `σ²`
//! produces bin noise of variance `σ²`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, Result};

pub const MIN_SF: u32 = 7;
pub const MAX_SF: u32 = 12;

/// Spreading factor and bandwidth of a LoRa link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModemConfig {
    sf: u32,
    bandwidth_hz: f64,
}

impl ModemConfig {
    pub fn new(sf: u32, bandwidth_hz: f64) -> Result<Self> {
        if !(MIN_SF..=MAX_SF).contains(&sf) {
            return domain(format!("spreading factor {sf} outside {MIN_SF}..={MAX_SF}"));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return domain(format!("bandwidth must be positive, got {bandwidth_hz}"));
        }
        Ok(Self { sf, bandwidth_hz })
    }

    pub fn sf(&self) -> u32 {
        self.sf
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// Chips per symbol, `2^SF`.
    pub fn samples_per_symbol(&self) -> usize {
        1usize << self.sf
    }

    pub fn sample_interval_s(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.samples_per_symbol() as f64 * self.sample_interval_s()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.samples_per_symbol() {
            return domain(format!(
                "expected {} samples for SF{}, got {len}",
                self.samples_per_symbol(),
                self.sf
            ));
        }
        Ok(())
    }
}

/// A symbol value `m` in `0..2^SF`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolIndex(u32);

impl SymbolIndex {
    pub fn new(m: u32, cfg: &ModemConfig) -> Result<Self> {
        if (m as usize) >= cfg.samples_per_symbol() {
            return domain(format!("symbol {m} out of range for SF{}", cfg.sf()));
        }
        Ok(Self(m))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

/// Sample `n` of the unit-energy base chirp.
///
/// The phase `k²/2^(SF+1)` turns is reduced modulo one turn in integer
/// arithmetic so large SF keeps full precision.
fn base_chirp_sample(k: usize, sf: u32) -> Complex64 {
    let n = 1usize << sf;
    let period = 2 * n;
    let k = (k % n) as u64;
    let turns = (k * k) % period as u64;
    let phase = 2.0 * PI * turns as f64 / period as f64;
    Complex64::from_polar(1.0 / (n as f64).sqrt(), phase)
}

/// The unit-energy up-chirp `x_0`.
pub fn base_chirp(cfg: &ModemConfig) -> Vec<Complex64> {
    (0..cfg.samples_per_symbol())
        .map(|k| base_chirp_sample(k, cfg.sf))
        .collect()
}

/// Modulates one symbol: `x_m(n) = x_0((n + m) mod 2^SF)`.
pub fn modulate(m: SymbolIndex, cfg: &ModemConfig) -> Vec<Complex64> {
    let n = cfg.samples_per_symbol();
    let m = m.value() as usize;
    (0..n)
        .map(|i| base_chirp_sample((i + m) % n, cfg.sf))
        .collect()
}

/// Concatenates the waveforms of a symbol sequence.
pub fn modulate_frame(symbols: &[SymbolIndex], cfg: &ModemConfig) -> Vec<Complex64> {
    let mut frame = Vec::with_capacity(symbols.len() * cfg.samples_per_symbol());
    for &m in symbols {
        frame.extend(modulate(m, cfg));
    }
    frame
}

/// Multiplies the received symbol by the conjugate base chirp.
pub fn dechirp(received: &[Complex64], cfg: &ModemConfig) -> Result<Vec<Complex64>> {
    cfg.check_len(received.len())?;
    Ok(received
        .iter()
        .enumerate()
        .map(|(k, r)| r * base_chirp_sample(k, cfg.sf).conj())
        .collect())
}

/// Outcome of symbol detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub symbol: SymbolIndex,
    pub magnitudes: Vec<f64>,
}

/// De-chirps, transforms and picks the strongest bin (lowest index on ties).
pub fn detect(received: &[Complex64], cfg: &ModemConfig) -> Result<Detection> {
    Demodulator::new(*cfg).detect(received)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Reusable detector holding the FFT plan, down-chirp and scratch buffers.
pub struct Demodulator {
    cfg: ModemConfig,
    downchirp: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Demodulator {
    pub fn new(cfg: ModemConfig) -> Self {
        let n = cfg.samples_per_symbol();
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Self {
            cfg,
            downchirp: base_chirp(&cfg).iter().map(|c| c.conj()).collect(),
            fft,
            buffer: vec![Complex64::default(); n],
            scratch,
        }
    }

    pub fn config(&self) -> &ModemConfig {
        &self.cfg
    }

    /// Complex DFT bins of the de-chirped symbol.
    pub fn bins(&mut self, received: &[Complex64]) -> Result<&[Complex64]> {
        self.cfg.check_len(received.len())?;
        for ((b, r), d) in self.buffer.iter_mut().zip(received).zip(&self.downchirp) {
            *b = r * d;
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        Ok(&self.buffer)
    }

    pub fn detect(&mut self, received: &[Complex64]) -> Result<Detection> {
        let magnitudes: Vec<f64> = self.bins(received)?.iter().map(|b| b.norm()).collect();
        let symbol = SymbolIndex(argmax(&magnitudes) as u32);
        Ok(Detection { symbol, magnitudes })
    }

    /// Detected symbol only; compares squared magnitudes to skip the square roots.
    pub fn demodulate(&mut self, received: &[Complex64]) -> Result<SymbolIndex> {
        let bins = self.bins(received)?;
        let mut best = 0;
        let mut best_power = bins[0].norm_sqr();
        for (i, b) in bins.iter().enumerate().skip(1) {
            let p = b.norm_sqr();
            if p > best_power {
                best = i;
                best_power = p;
            }
        }
        Ok(SymbolIndex(best as u32))
    }
}

/// Packs each run of SF bits, most significant first, into a symbol.
pub fn bits_to_symbols(bits: &[bool], cfg: &ModemConfig) -> Result<Vec<SymbolIndex>> {
    let sf = cfg.sf() as usize;
    if bits.len() % sf != 0 {
        return domain(format!(
            "bit count {} is not a multiple of SF{}",
            bits.len(),
            sf
        ));
    }
    Ok(bits
        .chunks(sf)
        .map(|chunk| SymbolIndex(chunk.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32)))
        .collect())
}

pub fn symbols_to_bits(symbols: &[SymbolIndex], cfg: &ModemConfig) -> Vec<bool> {
    let sf = cfg.sf();
    symbols
        .iter()
        .flat_map(|s| (0..sf).rev().map(move |i| (s.value() >> i) & 1 == 1))
        .collect()
}

/// Hamming distance between the natural-binary labels of two symbols.
pub fn count_bit_errors(sent: SymbolIndex, detected: SymbolIndex) -> u32 {
    (sent.value() ^ detected.value()).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sf: u32) -> ModemConfig {
        ModemConfig::new(sf, 125e3).unwrap()
    }

    #[test]
    fn rejects_out_of_range_sf() {
        assert!(ModemConfig::new(6, 125e3).is_err());
        assert!(ModemConfig::new(13, 125e3).is_err());
        assert!(ModemConfig::new(7, 0.0).is_err());
        assert_eq!(cfg(9).samples_per_symbol(), 512);
    }

    #[test]
    fn first_sample_of_symbol_zero() {
        let c = cfg(7);
        let x = modulate(SymbolIndex::new(0, &c).unwrap(), &c);
        assert!((x[0].re - 1.0 / 128f64.sqrt()).abs() < 1e-15);
        assert!(x[0].im.abs() < 1e-15);
    }

    #[test]
    fn symbols_have_unit_energy() {
        for sf in MIN_SF..=MAX_SF {
            let c = cfg(sf);
            for m in [0, 1, 77, (1 << sf) - 1] {
                let x = modulate(SymbolIndex::new(m, &c).unwrap(), &c);
                let e: f64 = x.iter().map(|v| v.norm_sqr()).sum();
                assert!((e - 1.0).abs() < 1e-12, "SF{sf} m={m}: {e}");
            }
        }
    }

    #[test]
    fn invalid_symbol_rejected() {
        let c = cfg(7);
        assert!(SymbolIndex::new(128, &c).is_err());
        assert!(dechirp(&[Complex64::default(); 127], &c).is_err());
        assert!(detect(&[Complex64::default(); 129], &c).is_err());
    }

    #[test]
    fn dechirped_base_chirp_is_flat_tone_at_bin_zero() {
        let c = cfg(7);
        let y = dechirp(&modulate(SymbolIndex(0), &c), &c).unwrap();
        for v in &y {
            assert!((v.norm() - 1.0 / 128.0).abs() < 1e-15);
        }
        let d = detect(&modulate(SymbolIndex(0), &c), &c).unwrap();
        assert_eq!(d.symbol.value(), 0);
        let off_peak: f64 = d.magnitudes[1..].iter().cloned().fold(0.0, f64::max);
        assert!(off_peak < 1e-12);
    }

    #[test]
    fn dechirp_of_zeros_is_zero() {
        let c = cfg(7);
        let y = dechirp(&vec![Complex64::default(); 128], &c).unwrap();
        assert!(y.iter().all(|v| *v == Complex64::default()));
    }

    #[test]
    fn noiseless_loopback_recovers_every_symbol() {
        let c = cfg(7);
        let mut demod = Demodulator::new(c);
        for m in 0..128 {
            let s = SymbolIndex(m);
            assert_eq!(demod.demodulate(&modulate(s, &c)).unwrap(), s);
        }
    }

    #[test]
    fn bin_magnitude_tracks_channel_amplitude() {
        let c = cfg(8);
        let h = Complex64::new(0.3, -1.1);
        let p: f64 = 4.0;
        for m in [0u32, 5, 200, 255] {
            let rx: Vec<_> = modulate(SymbolIndex(m), &c)
                .into_iter()
                .map(|x| x * h * p.sqrt())
                .collect();
            let d = detect(&rx, &c).unwrap();
            assert_eq!(d.symbol.value(), m);
            assert!((d.magnitudes[m as usize] - h.norm() * p.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn bit_mapping_examples() {
        let c = cfg(7);
        assert_eq!(bits_to_symbols(&[false; 7], &c).unwrap(), vec![SymbolIndex(0)]);
        assert_eq!(bits_to_symbols(&[true; 7], &c).unwrap(), vec![SymbolIndex(127)]);
        let bits = [false, false, false, false, true, false, true];
        assert_eq!(bits_to_symbols(&bits, &c).unwrap(), vec![SymbolIndex(5)]);
        assert!(bits_to_symbols(&[true; 8], &c).is_err());
    }

    #[test]
    fn bit_error_counts() {
        assert_eq!(count_bit_errors(SymbolIndex(9), SymbolIndex(9)), 0);
        assert_eq!(count_bit_errors(SymbolIndex(0), SymbolIndex(127)), 7);
        assert_eq!(count_bit_errors(SymbolIndex(5), SymbolIndex(6)), 2);
    }

    #[test]
    fn ties_resolve_to_lowest_bin() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.5]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }
}
