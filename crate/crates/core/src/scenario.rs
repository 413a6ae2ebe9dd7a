//! Flat `key = value` scenario files.
//!
//! ```text
//! # three relays, the second one closer to the destination
//! n_relays = 3
//! m_sr = 1
//! d_rd_m[2] = 600
//! ```
//!
//! A per-relay key without an index sets every relay; `key[l]` overrides
//! relay `l` (1-based). Unknown keys, duplicates and out-of-range indices are
//! rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::channel::{FadingMode, LinkSpec};
use crate::error::{Error, Result};
use crate::lora_phy::ModemConfig;
use crate::montecarlo::{SimMode, SimScenario};
use crate::relay_link::RelayTopology;

const SCALAR_KEYS: &[&str] = &[
    "sf",
    "bandwidth_hz",
    "n_relays",
    "alpha",
    "total_power_dbm",
    "power_split",
    "noise_psd",
    "packet_symbols",
    "fading_mode",
    "mode",
    "trials",
    "seed",
];
const RELAY_KEYS: &[&str] = &["m_sr", "m_rd", "d_sr_m", "d_rd_m"];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub sf: u32,
    pub bandwidth_hz: f64,
    pub m_sr: Vec<f64>,
    pub m_rd: Vec<f64>,
    pub d_sr_m: Vec<f64>,
    pub d_rd_m: Vec<f64>,
    pub alpha: f64,
    pub total_power_dbm: f64,
    /// Fraction of the total power spent by the source.
    pub power_split: f64,
    pub noise_psd: f64,
    pub packet_symbols: u32,
    pub fading_mode: FadingMode,
    pub mode: SimMode,
    pub trials: u64,
    pub seed: u64,
}

impl Default for Scenario {
    /// Midpoint relay on a 2 km path, 14 dBm total, α = 2.65, Rayleigh,
    /// `P_T/N₀ = 100 dB`.
    fn default() -> Self {
        let total_power_dbm = 14.0;
        Self {
            sf: 7,
            bandwidth_hz: 125e3,
            m_sr: vec![1.0],
            m_rd: vec![1.0],
            d_sr_m: vec![1000.0],
            d_rd_m: vec![1000.0],
            alpha: 2.65,
            total_power_dbm,
            power_split: 0.5,
            noise_psd: dbm_to_w(total_power_dbm) / 1e10,
            packet_symbols: 20,
            fading_mode: FadingMode::PerPacket,
            mode: SimMode::SnrDomain,
            trials: 100_000,
            seed: 0,
        }
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} = {raw:?}")))
}

fn split_key(key: &str, line: usize) -> Result<(&str, Option<usize>)> {
    let Some(open) = key.find('[') else {
        return Ok((key, None));
    };
    let Some(inner) = key[open + 1..].strip_suffix(']') else {
        return config(format!("line {line}: malformed index in {key:?}"));
    };
    let idx: usize = parse_num(key, inner.trim(), line)?;
    if idx == 0 {
        return config(format!("line {line}: relay indices start at 1"));
    }
    Ok((key[..open].trim_end(), Some(idx)))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let mut scalars: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
        let mut relay_all: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        let mut relay_one: BTreeMap<(&str, usize), (f64, usize)> = BTreeMap::new();

        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return config(format!("line {line}: expected key = value"));
            };
            let (key, value) = (key.trim(), value.trim());
            let (name, index) = split_key(key, line)?;
            if RELAY_KEYS.contains(&name) {
                let v: f64 = parse_num(name, value, line)?;
                let dup = match index {
                    None => relay_all.insert(name, (v, line)).is_some(),
                    Some(l) => relay_one.insert((name, l), (v, line)).is_some(),
                };
                if dup {
                    return config(format!("line {line}: duplicate key {key}"));
                }
            } else if SCALAR_KEYS.contains(&name) {
                if index.is_some() {
                    return config(format!("line {line}: {name} is not a per-relay key"));
                }
                if scalars.insert(name, (value, line)).is_some() {
                    return config(format!("line {line}: duplicate key {key}"));
                }
            } else {
                return config(format!("line {line}: unknown key {name:?}"));
            }
        }

        let mut s = Scenario::default();
        let mut n_relays = 1usize;
        let mut noise_given = false;
        for (&key, &(raw, line)) in &scalars {
            match key {
                "sf" => s.sf = parse_num(key, raw, line)?,
                "bandwidth_hz" => s.bandwidth_hz = parse_num(key, raw, line)?,
                "n_relays" => n_relays = parse_num(key, raw, line)?,
                "alpha" => s.alpha = parse_num(key, raw, line)?,
                "total_power_dbm" => s.total_power_dbm = parse_num(key, raw, line)?,
                "power_split" => s.power_split = parse_num(key, raw, line)?,
                "noise_psd" => {
                    s.noise_psd = parse_num(key, raw, line)?;
                    noise_given = true;
                }
                "packet_symbols" => s.packet_symbols = parse_num(key, raw, line)?,
                "fading_mode" => {
                    s.fading_mode = match raw {
                        "per_packet" => FadingMode::PerPacket,
                        "per_symbol" => FadingMode::PerSymbol,
                        _ => return config(format!("line {line}: fading_mode must be per_packet or per_symbol")),
                    }
                }
                "mode" => {
                    s.mode = parse_mode(raw)
                        .ok_or_else(|| Error::Config(format!("line {line}: mode must be waveform or snr")))?
                }
                "trials" => s.trials = parse_num(key, raw, line)?,
                "seed" => s.seed = parse_num(key, raw, line)?,
                _ => unreachable!("key list checked above"),
            }
        }
        if !noise_given {
            s.noise_psd = dbm_to_w(s.total_power_dbm) / 1e10;
        }
        if n_relays < 1 {
            return config("n_relays must be at least 1");
        }

        let defaults = Scenario::default();
        for name in RELAY_KEYS {
            let base = relay_all
                .get(name)
                .map(|&(v, _)| v)
                .unwrap_or_else(|| defaults.relay_values(name)[0]);
            let mut values = vec![base; n_relays];
            for (&(key, l), &(v, line)) in &relay_one {
                if key == *name {
                    if l > n_relays {
                        return config(format!("line {line}: relay index {l} exceeds n_relays = {n_relays}"));
                    }
                    values[l - 1] = v;
                }
            }
            *s.relay_values_mut(name) = values;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn relay_values(&self, name: &str) -> &Vec<f64> {
        match name {
            "m_sr" => &self.m_sr,
            "m_rd" => &self.m_rd,
            "d_sr_m" => &self.d_sr_m,
            _ => &self.d_rd_m,
        }
    }

    fn relay_values_mut(&mut self, name: &str) -> &mut Vec<f64> {
        match name {
            "m_sr" => &mut self.m_sr,
            "m_rd" => &mut self.m_rd,
            "d_sr_m" => &mut self.d_sr_m,
            _ => &mut self.d_rd_m,
        }
    }

    pub fn n_relays(&self) -> usize {
        self.m_sr.len()
    }

    /// Keeps the first `n` relays, repeating the last one when growing.
    pub fn with_relays(&self, n: usize) -> Result<Self> {
        if n < 1 {
            return config("at least one relay is required");
        }
        let mut s = self.clone();
        for name in RELAY_KEYS {
            let v = s.relay_values_mut(name);
            let last = *v.last().expect("validated scenario has relays");
            v.resize(n, last);
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let lens: Vec<usize> = RELAY_KEYS.iter().map(|k| self.relay_values(k).len()).collect();
        if lens[0] == 0 || lens.iter().any(|&l| l != lens[0]) {
            return config("per-relay lists must be non-empty and of equal length");
        }
        if !(self.power_split > 0.0 && self.power_split < 1.0) {
            return config(format!("power_split must lie in (0, 1), got {}", self.power_split));
        }
        if !self.total_power_dbm.is_finite() {
            return config("total_power_dbm must be finite");
        }
        if !(self.noise_psd > 0.0 && self.noise_psd.is_finite()) {
            return config(format!("noise_psd must be positive, got {}", self.noise_psd));
        }
        if self.packet_symbols < 1 {
            return config("packet_symbols must be at least 1");
        }
        if self.trials < 1 {
            return config("trials must be at least 1");
        }
        self.modem()?;
        self.topology()?;
        self.conventional_link()?;
        Ok(())
    }

    pub fn modem(&self) -> Result<ModemConfig> {
        ModemConfig::new(self.sf, self.bandwidth_hz).map_err(as_config)
    }

    pub fn total_power_w(&self) -> f64 {
        dbm_to_w(self.total_power_dbm)
    }

    pub fn source_power_w(&self) -> f64 {
        self.power_split * self.total_power_w()
    }

    pub fn relay_power_w(&self) -> f64 {
        (1.0 - self.power_split) * self.total_power_w()
    }

    pub fn topology(&self) -> Result<RelayTopology> {
        let links = |m: &[f64], d: &[f64], p: f64| -> Result<Vec<LinkSpec>> {
            m.iter()
                .zip(d)
                .map(|(&m, &d)| LinkSpec::new(m, d, p, self.alpha, self.noise_psd).map_err(as_config))
                .collect()
        };
        RelayTopology::new(
            links(&self.m_sr, &self.d_sr_m, self.source_power_w())?,
            links(&self.m_rd, &self.d_rd_m, self.relay_power_w())?,
            self.sf,
        )
        .map_err(as_config)
    }

    /// Direct baseline: full power over `d_sr + d_rd` of relay 1, fading
    /// `m_sr` of relay 1.
    pub fn conventional_link(&self) -> Result<LinkSpec> {
        LinkSpec::new(
            self.m_sr[0],
            self.d_sr_m[0] + self.d_rd_m[0],
            self.total_power_w(),
            self.alpha,
            self.noise_psd,
        )
        .map_err(as_config)
    }

    pub fn sim_scenario(&self) -> Result<SimScenario> {
        SimScenario::new(
            self.topology()?,
            self.modem()?,
            self.packet_symbols,
            self.fading_mode,
            self.mode,
            self.total_power_w(),
        )
        .map_err(as_config)
    }

    /// Same scenario with `N₀` set from `P_T/N₀` in dB.
    pub fn with_ptn0_db(&self, ptn0_db: f64) -> Result<Self> {
        let mut s = self.clone();
        s.noise_psd = self.total_power_w() / 10f64.powf(ptn0_db / 10.0);
        s.validate()?;
        Ok(s)
    }

    /// Canonical text form; parses back to an equal scenario.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sf = {}", self.sf);
        let _ = writeln!(out, "bandwidth_hz = {:?}", self.bandwidth_hz);
        let _ = writeln!(out, "n_relays = {}", self.n_relays());
        for name in RELAY_KEYS {
            for (l, v) in self.relay_values(name).iter().enumerate() {
                let _ = writeln!(out, "{name}[{}] = {v:?}", l + 1);
            }
        }
        let _ = writeln!(out, "alpha = {:?}", self.alpha);
        let _ = writeln!(out, "total_power_dbm = {:?}", self.total_power_dbm);
        let _ = writeln!(out, "power_split = {:?}", self.power_split);
        let _ = writeln!(out, "noise_psd = {:?}", self.noise_psd);
        let _ = writeln!(out, "packet_symbols = {}", self.packet_symbols);
        let fading = match self.fading_mode {
            FadingMode::PerPacket => "per_packet",
            FadingMode::PerSymbol => "per_symbol",
        };
        let _ = writeln!(out, "fading_mode = {fading}");
        let mode = match self.mode {
            SimMode::Waveform => "waveform",
            SimMode::SnrDomain => "snr",
        };
        let _ = writeln!(out, "mode = {mode}");
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }
}

pub fn parse_mode(raw: &str) -> Option<SimMode> {
    match raw {
        "waveform" => Some(SimMode::Waveform),
        "snr" | "snr_domain" => Some(SimMode::SnrDomain),
        _ => None,
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Scenario::parse("# nothing\n\n").unwrap(), Scenario::default());
    }

    #[test]
    fn default_relay_leg_snr() {
        let s = Scenario::default();
        let g = s.topology().unwrap().source_links()[0].avg_snr(7);
        assert!((10.0 * g.log10() - 38.561_799_739_838_9).abs() < 1e-9);
    }

    #[test]
    fn per_relay_overrides() {
        let s = Scenario::parse("n_relays = 3\nm_sr = 2\nd_rd_m[2] = 600 # closer\nm_rd[3]=0.5\n").unwrap();
        assert_eq!(s.m_sr, vec![2.0; 3]);
        assert_eq!(s.d_rd_m, vec![1000.0, 600.0, 1000.0]);
        assert_eq!(s.m_rd, vec![1.0, 1.0, 0.5]);
    }

    #[test]
    fn rejections() {
        for bad in [
            "colour = blue",
            "sf = 7\nsf = 8",
            "n_relays = 2\nm_sr[3] = 1",
            "m_sr[0] = 1",
            "sf[1] = 7",
            "sf = seven",
            "power_split = 1.5",
            "sf = 13",
            "mode = fast",
            "no equals sign",
            "m_sr = 0.2",
        ] {
            assert!(matches!(Scenario::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn text_round_trip() {
        let s = Scenario::parse("n_relays = 2\nd_sr_m[1] = 700\nmode = waveform\nfading_mode = per_symbol\nseed = 5")
            .unwrap();
        assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn resizing_repeats_last_relay() {
        let s = Scenario::parse("n_relays = 2\nd_sr_m[2] = 400").unwrap();
        let grown = s.with_relays(4).unwrap();
        assert_eq!(grown.d_sr_m, vec![1000.0, 400.0, 400.0, 400.0]);
        assert_eq!(s.with_relays(1).unwrap().d_sr_m, vec![1000.0]);
    }

    #[test]
    fn ptn0_sets_noise() {
        let s = Scenario::default().with_ptn0_db(100.0).unwrap();
        assert!((s.noise_psd / Scenario::default().noise_psd - 1.0).abs() < 1e-12);
    }
}
