//! Seeded Monte Carlo estimators for BER, coverage and packet error rate.
//!
//! Trials are grouped into fixed blocks of [`BLOCK_TRIALS`]. Each block is
//! tallied sequentially from counter-based streams and the block tallies are
//! merged in block order, so results do not depend on the shard count or on
//! how many threads run the shards.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_gaussian, FadingMode};
use crate::error::{domain, Error, Result};
use crate::lora_phy::{self, Demodulator, ModemConfig, SymbolIndex};
use crate::perf_analysis::{
    analytical_ber, asymptotic_ber, conditional_ber, coverage_probability, throughput, SystemKind,
    ThroughputParams,
};
use crate::relay_link::{FadeStreams, PacketSimulator, RelayTopology, TopologySampler};
use crate::rng::{self, Lane, PacketStreams};

/// Trials per deterministic accumulation block.
pub const BLOCK_TRIALS: u64 = 4096;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "LORA_RELAY_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Chirps, fading, AWGN, amplification and DFT detection per symbol.
    Waveform,
    /// Draws of the selected end-to-end SNR averaged through the conditional BER.
    SnrDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    /// Links at their reference noise level; `snr_db` arguments override it.
    pub topology: RelayTopology,
    pub modem: ModemConfig,
    pub packet_symbols: u32,
    pub fading_mode: FadingMode,
    pub mode: SimMode,
    /// Total transmit power `P_T` that `snr_db = P_T/N₀` refers to.
    pub total_power_w: f64,
    /// Work partitions; results are identical for every value.
    pub shards: usize,
}

impl SimScenario {
    pub fn new(
        topology: RelayTopology,
        modem: ModemConfig,
        packet_symbols: u32,
        fading_mode: FadingMode,
        mode: SimMode,
        total_power_w: f64,
    ) -> Result<Self> {
        let s = Self {
            topology,
            modem,
            packet_symbols,
            fading_mode,
            mode,
            total_power_w,
            shards: 1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.topology.sf() != self.modem.sf() {
            return domain(format!(
                "topology is SF{} but modem is SF{}",
                self.topology.sf(),
                self.modem.sf()
            ));
        }
        if self.packet_symbols < 1 {
            return domain("a packet needs at least one symbol");
        }
        if !(self.total_power_w > 0.0 && self.total_power_w.is_finite()) {
            return domain(format!("total power must be positive, got {}", self.total_power_w));
        }
        if self.shards < 1 {
            return domain("shard count must be at least one");
        }
        Ok(())
    }

    /// Noise PSD giving `P_T/N₀ = snr_db`.
    pub fn noise_psd_for(&self, snr_db: f64) -> Result<f64> {
        if snr_db.is_nan() {
            return domain("SNR must be a number");
        }
        Ok(self.total_power_w / 10f64.powf(snr_db / 10.0))
    }

    /// The topology with every receiver at the noise level of `snr_db`.
    pub fn topology_at(&self, snr_db: f64) -> Result<RelayTopology> {
        self.topology.with_noise_psd(self.noise_psd_for(snr_db)?)
    }

    fn bits_per_packet(&self) -> u64 {
        self.packet_symbols as u64 * self.modem.sf() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub point_estimate: f64,
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub trials: u64,
    pub errors_observed: u64,
    pub seed: u64,
}

const Z95: f64 = 1.959_963_984_540_054;

impl EstimateResult {
    /// `events` out of `units` Bernoulli outcomes with a Wilson score interval.
    fn proportion(events: u64, units: u64, trials: u64, seed: u64) -> Self {
        let n = units as f64;
        let p = events as f64 / n;
        let z2 = Z95 * Z95;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            point_estimate: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            ci95_low: (centre - half).clamp(0.0, p),
            ci95_high: (centre + half).clamp(p, 1.0),
            trials,
            errors_observed: events,
            seed,
        }
    }

    /// Sample mean of bounded per-trial values with a normal interval.
    fn mean(tally: &Tally, errors_observed: u64, seed: u64) -> Self {
        let n = tally.trials as f64;
        let mean = tally.sum.value() / n;
        let var = if tally.trials > 1 {
            ((tally.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let se = (var / n).sqrt();
        Self {
            point_estimate: mean,
            stderr: se,
            ci95_low: (mean - Z95 * se).max(0.0).min(mean),
            ci95_high: (mean + Z95 * se).min(1.0).max(mean),
            trials: tally.trials,
            errors_observed,
            seed,
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    trials: u64,
    sum: Compensated,
    sum_sq: Compensated,
    events: u64,
    units: u64,
}

impl Tally {
    fn record(&mut self, x: f64) {
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    fn merge(&mut self, other: &Tally) {
        self.trials += other.trials;
        self.sum.add(other.sum.value());
        self.sum_sq.add(other.sum_sq.value());
        self.events += other.events;
        self.units += other.units;
    }
}

/// Worker count: `LORA_RELAY_LAB_THREADS` if set, else the available cores.
pub fn worker_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `trials` trials split into blocks and shards; `make` builds one
/// per-thread worker that tallies trial `i` into the block tally.
fn run_trials<W, M>(trials: u64, shards: usize, make: M) -> Result<Tally>
where
    M: Fn() -> Result<W> + Sync,
    W: FnMut(u64, &mut Tally) -> Result<()>,
{
    if trials < 1 {
        return domain("at least one trial is required");
    }
    if shards < 1 {
        return domain("shard count must be at least one");
    }
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let shards = shards.min(blocks as usize);
    let block_range = |s: usize| {
        let lo = blocks * s as u64 / shards as u64;
        let hi = blocks * (s as u64 + 1) / shards as u64;
        lo..hi
    };
    let run_shard = |worker: &mut W, s: usize| -> Result<Vec<Tally>> {
        block_range(s)
            .map(|b| {
                let mut tally = Tally::default();
                let start = b * BLOCK_TRIALS;
                for i in start..(start + BLOCK_TRIALS).min(trials) {
                    worker(i, &mut tally)?;
                    tally.trials += 1;
                }
                Ok(tally)
            })
            .collect()
    };

    let mut per_shard: Vec<Option<Vec<Tally>>> = vec![None; shards];
    let workers = worker_cap().min(shards);
    if workers <= 1 {
        let mut w = make()?;
        for (s, slot) in per_shard.iter_mut().enumerate() {
            *slot = Some(run_shard(&mut w, s)?);
        }
    } else {
        let next = AtomicUsize::new(0);
        let results = Mutex::new(Vec::with_capacity(shards));
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| {
                    let mut w = match make() {
                        Ok(w) => w,
                        Err(e) => {
                            failure.lock().unwrap().get_or_insert(e);
                            return;
                        }
                    };
                    loop {
                        let s = next.fetch_add(1, Ordering::Relaxed);
                        if s >= shards || failure.lock().unwrap().is_some() {
                            return;
                        }
                        match run_shard(&mut w, s) {
                            Ok(t) => results.lock().unwrap().push((s, t)),
                            Err(e) => {
                                failure.lock().unwrap().get_or_insert(e);
                                return;
                            }
                        }
                    }
                });
            }
        });
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        for (s, t) in results.into_inner().unwrap() {
            per_shard[s] = Some(t);
        }
    }

    let mut total = Tally::default();
    for block in per_shard.into_iter().flatten().flatten() {
        total.merge(&block);
    }
    Ok(total)
}

fn random_bits<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Smoothed per-packet BER and PER from SNR draws alone.
struct SnrDomainPacket {
    sampler: TopologySampler,
    sf: u32,
    symbols: u32,
    mode: FadingMode,
}

impl SnrDomainPacket {
    fn new(topology: &RelayTopology, symbols: u32, mode: FadingMode) -> Result<Self> {
        Ok(Self {
            sampler: TopologySampler::new(topology)?,
            sf: topology.sf(),
            symbols,
            mode,
        })
    }

    /// `(mean conditional BER, packet error probability)` of one packet.
    fn evaluate(&self, streams: &PacketStreams) -> Result<(f64, f64)> {
        match self.mode {
            FadingMode::PerPacket => {
                let pb = conditional_ber(self.sampler.best_snr(streams), self.sf)?;
                let pe = (2.0 * pb).min(1.0);
                Ok((pb, 1.0 - (1.0 - pe).powi(self.symbols as i32)))
            }
            FadingMode::PerSymbol => {
                let mut lanes = FadeStreams::new(streams, self.sampler.topology().n_relays());
                let (mut sum, mut ok) = (0.0, 1.0);
                for _ in 0..self.symbols {
                    let best = self.sampler.snrs(&self.sampler.draw_fades(&mut lanes)).gamma_best;
                    let pb = conditional_ber(best, self.sf)?;
                    sum += pb;
                    ok *= 1.0 - (2.0 * pb).min(1.0);
                }
                Ok((sum / self.symbols as f64, 1.0 - ok))
            }
        }
    }
}

/// Bit error rate at `P_T/N₀ = snr_db`; a trial is one packet.
pub fn estimate_ber(scenario: &SimScenario, snr_db: f64, trials: u64, seed: u64) -> Result<EstimateResult> {
    scenario.validate()?;
    let topology = scenario.topology_at(snr_db)?;
    let bits = scenario.bits_per_packet();
    match scenario.mode {
        SimMode::Waveform => {
            let tally = run_trials(trials, scenario.shards, || {
                let mut sim = PacketSimulator::new(&topology, scenario.modem)?;
                Ok(move |i: u64, t: &mut Tally| {
                    let streams = PacketStreams::new(seed, i);
                    let payload = random_bits(bits, &mut streams.lane(Lane::Payload));
                    let out = sim.simulate(&payload, &streams, scenario.fading_mode)?;
                    t.events += out.bit_errors;
                    t.units += bits;
                    Ok(())
                })
            })?;
            Ok(EstimateResult::proportion(tally.events, tally.units, tally.trials, seed))
        }
        SimMode::SnrDomain => {
            let packet = SnrDomainPacket::new(&topology, scenario.packet_symbols, scenario.fading_mode)?;
            let tally = run_trials(trials, scenario.shards, || {
                Ok(|i: u64, t: &mut Tally| {
                    let (pb, _) = packet.evaluate(&PacketStreams::new(seed, i))?;
                    t.record(pb);
                    Ok(())
                })
            })?;
            let implied = (tally.sum.value() * bits as f64).round() as u64;
            Ok(EstimateResult::mean(&tally, implied, seed))
        }
    }
}

/// Fraction of packets whose selected end-to-end SNR exceeds `psi_db`, with
/// the scenario's own noise level.
pub fn estimate_coverage(scenario: &SimScenario, psi_db: f64, trials: u64, seed: u64) -> Result<EstimateResult> {
    scenario.validate()?;
    if psi_db.is_nan() {
        return domain("threshold must be a number");
    }
    let psi = 10f64.powf(psi_db / 10.0);
    let sampler = TopologySampler::new(&scenario.topology)?;
    let tally = run_trials(trials, scenario.shards, || {
        Ok(|i: u64, t: &mut Tally| {
            t.events += (sampler.best_snr(&PacketStreams::new(seed, i)) > psi) as u64;
            t.units += 1;
            Ok(())
        })
    })?;
    Ok(EstimateResult::proportion(tally.events, tally.units, tally.trials, seed))
}

/// Packet error rate and relay throughput at `P_T/N₀ = snr_db`.
pub fn estimate_per_and_throughput(
    scenario: &SimScenario,
    snr_db: f64,
    trials: u64,
    seed: u64,
) -> Result<(EstimateResult, f64)> {
    scenario.validate()?;
    let topology = scenario.topology_at(snr_db)?;
    let per = match scenario.mode {
        SimMode::Waveform => {
            let bits = scenario.bits_per_packet();
            let tally = run_trials(trials, scenario.shards, || {
                let mut sim = PacketSimulator::new(&topology, scenario.modem)?;
                Ok(move |i: u64, t: &mut Tally| {
                    let streams = PacketStreams::new(seed, i);
                    let payload = random_bits(bits, &mut streams.lane(Lane::Payload));
                    let out = sim.simulate(&payload, &streams, scenario.fading_mode)?;
                    t.events += (out.symbol_errors > 0) as u64;
                    t.units += 1;
                    Ok(())
                })
            })?;
            EstimateResult::proportion(tally.events, tally.units, tally.trials, seed)
        }
        SimMode::SnrDomain => {
            let packet = SnrDomainPacket::new(&topology, scenario.packet_symbols, scenario.fading_mode)?;
            let tally = run_trials(trials, scenario.shards, || {
                Ok(|i: u64, t: &mut Tally| {
                    let (_, per) = packet.evaluate(&PacketStreams::new(seed, i))?;
                    t.record(per);
                    Ok(())
                })
            })?;
            let implied = tally.sum.value().round() as u64;
            EstimateResult::mean(&tally, implied, seed)
        }
    };
    let params = ThroughputParams::new(scenario.packet_symbols, &scenario.modem, SystemKind::Relay)?;
    Ok((per, throughput_from_per(per.point_estimate, &params)))
}

/// `L·SF·(1 − PER)/T_t`.
pub fn throughput_from_per(per: f64, params: &ThroughputParams) -> f64 {
    params.packet_symbols as f64 * params.sf as f64 * (1.0 - per) / params.transmission_period_s()
}

/// Uncoded single-link BER over a fixed AWGN channel at bin SNR `gamma`;
/// a trial is one uniformly drawn symbol.
pub fn estimate_awgn_ber(
    modem: ModemConfig,
    gamma: f64,
    trials: u64,
    seed: u64,
    shards: usize,
) -> Result<EstimateResult> {
    if !(gamma > 0.0) {
        return domain(format!("SNR must be positive, got {gamma}"));
    }
    let n = modem.samples_per_symbol();
    let variance = 1.0 / gamma;
    let chirp = lora_phy::base_chirp(&modem);
    let tally = run_trials(trials, shards, || {
        let mut demod = Demodulator::new(modem);
        let mut rx = vec![Complex64::default(); n];
        let chirp = &chirp;
        Ok(move |i: u64, t: &mut Tally| {
            let mut r = rng::stream(seed, i, 0);
            let sym = SymbolIndex::new(r.random_range(0..n as u32), &modem)?;
            let m = sym.value() as usize;
            for (k, y) in rx.iter_mut().enumerate() {
                *y = chirp[(k + m) % n] + complex_gaussian(variance, &mut r);
            }
            let detected = demod.demodulate(&rx)?;
            t.events += lora_phy::count_bit_errors(sym, detected) as u64;
            t.units += modem.sf() as u64;
            Ok(())
        })
    })?;
    Ok(EstimateResult::proportion(tally.events, tally.units, tally.trials, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Ber,
    Coverage,
    Throughput,
}

/// One plotted point: Monte Carlo estimate plus analytic companions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub mc_value: f64,
    pub mc_ci95_low: f64,
    pub mc_ci95_high: f64,
    pub analytical: f64,
    /// BER sweeps only.
    pub asymptotic: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

/// Runs `estimator` at every abscissa with per-point seed `seed ^ index`.
pub fn sweep(
    scenario: &SimScenario,
    abscissa: &[f64],
    estimator: Estimator,
    trials: u64,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if abscissa.is_empty() {
        return domain("sweep needs at least one abscissa value");
    }
    let sf = scenario.modem.sf();
    abscissa
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let point_seed = seed ^ i as u64;
            match estimator {
                Estimator::Ber => {
                    let est = estimate_ber(scenario, x, trials, point_seed)?;
                    let branches = scenario.topology_at(x)?.branch_params()?;
                    Ok(CurvePoint {
                        abscissa: x,
                        mc_value: est.point_estimate,
                        mc_ci95_low: est.ci95_low,
                        mc_ci95_high: est.ci95_high,
                        analytical: analytical_ber(&branches, sf)?,
                        asymptotic: Some(asymptotic_ber(&branches, sf)?.value),
                        trials,
                        seed: point_seed,
                    })
                }
                Estimator::Coverage => {
                    let est = estimate_coverage(scenario, x, trials, point_seed)?;
                    let branches = scenario.topology.branch_params()?;
                    Ok(CurvePoint {
                        abscissa: x,
                        mc_value: est.point_estimate,
                        mc_ci95_low: est.ci95_low,
                        mc_ci95_high: est.ci95_high,
                        analytical: coverage_probability(10f64.powf(x / 10.0), &branches)?,
                        asymptotic: None,
                        trials,
                        seed: point_seed,
                    })
                }
                Estimator::Throughput => {
                    let (per, tp) = estimate_per_and_throughput(scenario, x, trials, point_seed)?;
                    let params =
                        ThroughputParams::new(scenario.packet_symbols, &scenario.modem, SystemKind::Relay)?;
                    let branches = scenario.topology_at(x)?.branch_params()?;
                    let pb = analytical_ber(&branches, sf)?.clamp(0.0, 0.5);
                    Ok(CurvePoint {
                        abscissa: x,
                        mc_value: tp,
                        mc_ci95_low: throughput_from_per(per.ci95_high, &params),
                        mc_ci95_high: throughput_from_per(per.ci95_low, &params),
                        analytical: throughput(pb, &params)?,
                        asymptotic: None,
                        trials,
                        seed: point_seed,
                    })
                }
            }
        })
        .collect()
}
