//! Two-hop amplify-and-forward relaying with best-relay selection.
//!
//! The source broadcasts to `N` relays; the branch with the largest
//! instantaneous end-to-end SNR `γ₁γ₂/(γ₁ + γ₂ + 1)` is selected and its
//! relay scales what it received by `A = √(P_R/(|h_SR|²·P_S + N_SR))` before
//! forwarding it to the destination.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_gaussian, FadeDraw, FadingMode, LinkSpec, NakagamiFading};
use crate::error::{domain, Result};
use crate::lora_phy::{self, Demodulator, ModemConfig, SymbolIndex};
use crate::perf_analysis::BranchParams;
use crate::rng::{Lane, PacketStreams, SimRng};

/// Source → relay and relay → destination links for `N` candidate relays.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayTopology {
    source_links: Vec<LinkSpec>,
    dest_links: Vec<LinkSpec>,
    sf: u32,
}

impl RelayTopology {
    pub fn new(source_links: Vec<LinkSpec>, dest_links: Vec<LinkSpec>, sf: u32) -> Result<Self> {
        if source_links.is_empty() {
            return domain("at least one relay is required");
        }
        if source_links.len() != dest_links.len() {
            return domain(format!(
                "{} source links but {} destination links",
                source_links.len(),
                dest_links.len()
            ));
        }
        ModemConfig::new(sf, 1.0)?;
        for link in source_links.iter().chain(&dest_links) {
            link.validate()?;
        }
        Ok(Self {
            source_links,
            dest_links,
            sf,
        })
    }

    /// `n` co-located relays sharing the same two links.
    pub fn symmetric(n: usize, source_link: LinkSpec, dest_link: LinkSpec, sf: u32) -> Result<Self> {
        Self::new(vec![source_link; n], vec![dest_link; n], sf)
    }

    pub fn n_relays(&self) -> usize {
        self.source_links.len()
    }

    pub fn sf(&self) -> u32 {
        self.sf
    }

    pub fn source_links(&self) -> &[LinkSpec] {
        &self.source_links
    }

    pub fn dest_links(&self) -> &[LinkSpec] {
        &self.dest_links
    }

    /// Same geometry and powers with every receiver at noise PSD `n0`.
    pub fn with_noise_psd(&self, n0: f64) -> Result<Self> {
        Self::new(
            self.source_links.iter().map(|l| l.with_noise_psd(n0)).collect(),
            self.dest_links.iter().map(|l| l.with_noise_psd(n0)).collect(),
            self.sf,
        )
    }

    /// The first `n` relays only.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_relays() {
            return domain(format!("cannot keep {n} of {} relays", self.n_relays()));
        }
        Self::new(
            self.source_links[..n].to_vec(),
            self.dest_links[..n].to_vec(),
            self.sf,
        )
    }

    /// Per-branch fading parameters and average SNRs for the analysis.
    pub fn branch_params(&self) -> Result<Vec<BranchParams>> {
        self.source_links
            .iter()
            .zip(&self.dest_links)
            .map(|(s, d)| BranchParams::new(s.m_fading, d.m_fading, s.avg_snr(self.sf), d.avg_snr(self.sf)))
            .collect()
    }
}

/// One realization of all link SNRs and the selection outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrDraw {
    pub gamma_sr: Vec<f64>,
    pub gamma_rd: Vec<f64>,
    pub gamma_branch: Vec<f64>,
    pub best_index: usize,
    pub gamma_best: f64,
}

pub fn amplification_factor(p_relay: f64, gain_sq_sr: f64, p_source: f64, noise_var: f64) -> Result<f64> {
    if !(p_relay > 0.0 && p_source > 0.0 && noise_var > 0.0) {
        return domain("relay power, source power and noise variance must be positive");
    }
    if gain_sq_sr.is_nan() || gain_sq_sr < 0.0 {
        return domain(format!("power gain must be non-negative, got {gain_sq_sr}"));
    }
    Ok((p_relay / (gain_sq_sr * p_source + noise_var)).sqrt())
}

/// `γ₁γ₂/(γ₁ + γ₂ + 1)`.
pub fn end_to_end_snr(g1: f64, g2: f64) -> Result<f64> {
    if g1.is_nan() || g2.is_nan() || g1 < 0.0 || g2 < 0.0 {
        return domain(format!("link SNRs must be non-negative, got ({g1}, {g2})"));
    }
    Ok(branch_snr(g1, g2))
}

#[inline]
fn branch_snr(g1: f64, g2: f64) -> f64 {
    match (g1.is_infinite(), g2.is_infinite()) {
        (true, true) => f64::INFINITY,
        (true, false) => g2,
        (false, true) => g1,
        (false, false) => g1 * g2 / (g1 + g2 + 1.0),
    }
}

/// Largest value and its index; the lowest index wins ties.
pub fn select_best(branch_snrs: &[f64]) -> Result<(usize, f64)> {
    let Some(&first) = branch_snrs.first() else {
        return domain("cannot select from an empty branch list");
    };
    let mut best = (0, first);
    for (i, &g) in branch_snrs.iter().enumerate().skip(1) {
        if g > best.1 {
            best = (i, g);
        }
    }
    Ok(best)
}

/// Per-link Nakagami generators of a topology.
#[derive(Debug, Clone)]
pub struct TopologySampler {
    topology: RelayTopology,
    source: Vec<NakagamiFading>,
    dest: Vec<NakagamiFading>,
}

/// Independent fading streams of one packet, one per link.
pub struct FadeStreams {
    source: Vec<SimRng>,
    dest: Vec<SimRng>,
}

impl FadeStreams {
    pub fn new(streams: &PacketStreams, n_relays: usize) -> Self {
        Self {
            source: (0..n_relays).map(|l| streams.lane(Lane::SourceFade(l))).collect(),
            dest: (0..n_relays).map(|l| streams.lane(Lane::DestFade(l))).collect(),
        }
    }
}

/// Fading coefficients of every link at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFades {
    pub source: Vec<FadeDraw>,
    pub dest: Vec<FadeDraw>,
}

impl TopologySampler {
    pub fn new(topology: &RelayTopology) -> Result<Self> {
        let make = |links: &[LinkSpec]| {
            links
                .iter()
                .map(|l| NakagamiFading::new(l.m_fading, l.mean_gain()))
                .collect::<Result<Vec<_>>>()
        };
        Ok(Self {
            source: make(&topology.source_links)?,
            dest: make(&topology.dest_links)?,
            topology: topology.clone(),
        })
    }

    pub fn topology(&self) -> &RelayTopology {
        &self.topology
    }

    pub fn draw_fades(&self, streams: &mut FadeStreams) -> LinkFades {
        LinkFades {
            source: self
                .source
                .iter()
                .zip(&mut streams.source)
                .map(|(f, r)| f.sample(r))
                .collect(),
            dest: self
                .dest
                .iter()
                .zip(&mut streams.dest)
                .map(|(f, r)| f.sample(r))
                .collect(),
        }
    }

    pub fn snrs(&self, fades: &LinkFades) -> SnrDraw {
        let sf = self.topology.sf;
        let gamma_sr: Vec<f64> = fades
            .source
            .iter()
            .zip(&self.topology.source_links)
            .map(|(f, l)| l.snr_for_gain(f.gain_sq, sf))
            .collect();
        let gamma_rd: Vec<f64> = fades
            .dest
            .iter()
            .zip(&self.topology.dest_links)
            .map(|(f, l)| l.snr_for_gain(f.gain_sq, sf))
            .collect();
        let gamma_branch: Vec<f64> = gamma_sr
            .iter()
            .zip(&gamma_rd)
            .map(|(&a, &b)| branch_snr(a, b))
            .collect();
        let (best_index, gamma_best) = select_best(&gamma_branch).expect("topology has relays");
        SnrDraw {
            gamma_sr,
            gamma_rd,
            gamma_branch,
            best_index,
            gamma_best,
        }
    }

    /// Best end-to-end SNR of one packet without building an [`SnrDraw`].
    ///
    /// Consumes the fading lanes exactly as [`Self::draw_fades`] does.
    pub fn best_snr(&self, streams: &PacketStreams) -> f64 {
        let sf = self.topology.sf;
        let mut best = f64::NEG_INFINITY;
        for l in 0..self.source.len() {
            let mut rs = streams.lane(Lane::SourceFade(l));
            let mut rd = streams.lane(Lane::DestFade(l));
            let g1 = self.topology.source_links[l].snr_for_gain(self.source[l].sample(&mut rs).gain_sq, sf);
            let g2 = self.topology.dest_links[l].snr_for_gain(self.dest[l].sample(&mut rd).gain_sq, sf);
            best = best.max(branch_snr(g1, g2));
        }
        best
    }
}

/// Draws all `2N` link SNRs of a packet and applies best-relay selection.
pub fn draw_end_to_end_snr(topology: &RelayTopology, streams: &PacketStreams) -> Result<SnrDraw> {
    let sampler = TopologySampler::new(topology)?;
    let mut lanes = FadeStreams::new(streams, topology.n_relays());
    Ok(sampler.snrs(&sampler.draw_fades(&mut lanes)))
}

/// Channel state along the selected branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedHop {
    pub h_sr: Complex64,
    pub h_rd: Complex64,
    pub p_source: f64,
    pub p_relay: f64,
    pub noise_relay: f64,
    pub noise_dest: f64,
}

impl SelectedHop {
    pub fn amplification(&self) -> Result<f64> {
        amplification_factor(self.p_relay, self.h_sr.norm_sqr(), self.p_source, self.noise_relay)
    }
}

/// Carries one unit-energy symbol waveform from the source to the destination
/// through the selected relay.
pub fn forward_symbol<R: Rng + ?Sized>(
    tx: &[Complex64],
    hop: &SelectedHop,
    relay_noise: &mut R,
    dest_noise: &mut R,
) -> Result<Vec<Complex64>> {
    let a = hop.amplification()?;
    let source_gain = hop.h_sr * hop.p_source.sqrt();
    let relay_gain = hop.h_rd * a;
    Ok(tx
        .iter()
        .map(|x| {
            let at_relay = source_gain * x + complex_gaussian(hop.noise_relay, relay_noise);
            relay_gain * at_relay + complex_gaussian(hop.noise_dest, dest_noise)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketOutcome {
    pub decoded_bits: Vec<bool>,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub symbols: u64,
}

/// Reusable waveform simulator for one topology.
pub struct PacketSimulator {
    sampler: TopologySampler,
    modem: ModemConfig,
    chirp: Vec<Complex64>,
    demod: Demodulator,
}

impl PacketSimulator {
    pub fn new(topology: &RelayTopology, modem: ModemConfig) -> Result<Self> {
        if topology.sf() != modem.sf() {
            return domain(format!(
                "topology is SF{} but modem is SF{}",
                topology.sf(),
                modem.sf()
            ));
        }
        Ok(Self {
            sampler: TopologySampler::new(topology)?,
            modem,
            chirp: lora_phy::base_chirp(&modem),
            demod: Demodulator::new(modem),
        })
    }

    pub fn modem(&self) -> &ModemConfig {
        &self.modem
    }

    pub fn sampler(&self) -> &TopologySampler {
        &self.sampler
    }

    fn hop(&self, fades: &LinkFades, l: usize) -> SelectedHop {
        let topo = self.sampler.topology();
        let (src, dst) = (&topo.source_links[l], &topo.dest_links[l]);
        SelectedHop {
            h_sr: fades.source[l].h,
            h_rd: fades.dest[l].h,
            p_source: src.tx_power_w,
            p_relay: dst.tx_power_w,
            noise_relay: src.noise_variance(topo.sf),
            noise_dest: dst.noise_variance(topo.sf),
        }
    }

    pub fn simulate(
        &mut self,
        payload_bits: &[bool],
        streams: &PacketStreams,
        fading_mode: FadingMode,
    ) -> Result<PacketOutcome> {
        let symbols = lora_phy::bits_to_symbols(payload_bits, &self.modem)?;
        let n_relays = self.sampler.topology().n_relays();
        let mut fade_lanes = FadeStreams::new(streams, n_relays);
        let mut relay_lanes: Vec<SimRng> = (0..n_relays)
            .map(|l| streams.lane(Lane::RelayNoise(l)))
            .collect();
        let mut dest_lane = streams.lane(Lane::DestNoise);

        let n = self.modem.samples_per_symbol();
        let mut tx = vec![Complex64::default(); n];
        let mut decoded = Vec::with_capacity(symbols.len());
        let mut state: Option<(LinkFades, usize)> = None;
        let (mut bit_errors, mut symbol_errors) = (0u64, 0u64);

        for &sym in &symbols {
            if state.is_none() || fading_mode == FadingMode::PerSymbol {
                let fades = self.sampler.draw_fades(&mut fade_lanes);
                let best = self.sampler.snrs(&fades).best_index;
                state = Some((fades, best));
            }
            let (fades, best) = state.as_ref().expect("fades drawn");
            let hop = self.hop(fades, *best);

            let m = sym.value() as usize;
            for (i, t) in tx.iter_mut().enumerate() {
                *t = self.chirp[(i + m) % n];
            }
            let rx = forward_symbol(&tx, &hop, &mut relay_lanes[*best], &mut dest_lane)?;
            let detected: SymbolIndex = self.demod.demodulate(&rx)?;
            let flips = lora_phy::count_bit_errors(sym, detected) as u64;
            bit_errors += flips;
            symbol_errors += (flips > 0) as u64;
            decoded.push(detected);
        }

        Ok(PacketOutcome {
            decoded_bits: lora_phy::symbols_to_bits(&decoded, &self.modem),
            bit_errors,
            symbol_errors,
            symbols: symbols.len() as u64,
        })
    }
}

/// Full waveform path for one packet: modulate, relay, detect and count.
pub fn simulate_packet(
    topology: &RelayTopology,
    modem: ModemConfig,
    payload_bits: &[bool],
    streams: &PacketStreams,
    fading_mode: FadingMode,
) -> Result<PacketOutcome> {
    PacketSimulator::new(topology, modem)?.simulate(payload_bits, streams, fading_mode)
}
