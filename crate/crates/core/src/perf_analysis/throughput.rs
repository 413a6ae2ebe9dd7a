use crate::error::{domain, Result};
use crate::lora_phy::ModemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Direct source → destination transmission, one period per packet.
    Conventional,
    /// Two-hop relaying; two periods per packet whatever the relay count.
    Relay,
}

impl SystemKind {
    fn periods(self) -> f64 {
        match self {
            SystemKind::Conventional => 1.0,
            SystemKind::Relay => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputParams {
    pub packet_symbols: u32,
    pub sf: u32,
    pub t_sam_s: f64,
    pub system_kind: SystemKind,
}

impl ThroughputParams {
    pub fn new(packet_symbols: u32, modem: &ModemConfig, system_kind: SystemKind) -> Result<Self> {
        if packet_symbols < 1 {
            return domain("a packet needs at least one symbol");
        }
        Ok(Self {
            packet_symbols,
            sf: modem.sf(),
            t_sam_s: modem.sample_interval_s(),
            system_kind,
        })
    }

    /// Time to deliver one packet end to end.
    pub fn transmission_period_s(&self) -> f64 {
        let t_sym = (1u64 << self.sf) as f64 * self.t_sam_s;
        self.system_kind.periods() * self.packet_symbols as f64 * t_sym
    }
}

/// Packet error rate with `P_e = min(2·P_b, 1)` and independent symbol errors.
pub fn packet_error_rate(pb: f64, packet_symbols: u32) -> f64 {
    let pe = (2.0 * pb).min(1.0);
    1.0 - (1.0 - pe).powi(packet_symbols as i32)
}

/// Correctly delivered bits per second.
pub fn throughput(pb: f64, params: &ThroughputParams) -> Result<f64> {
    if !(0.0..=0.5).contains(&pb) {
        return domain(format!("bit error rate must lie in [0, 0.5], got {pb}"));
    }
    if params.packet_symbols < 1 {
        return domain("a packet needs at least one symbol");
    }
    let per = packet_error_rate(pb, params.packet_symbols);
    Ok(params.packet_symbols as f64 * params.sf as f64 * (1.0 - per) / params.transmission_period_s())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kind: SystemKind, l: u32) -> ThroughputParams {
        ThroughputParams::new(l, &ModemConfig::new(7, 125e3).unwrap(), kind).unwrap()
    }

    #[test]
    fn error_free_plateaus() {
        let conv = throughput(0.0, &params(SystemKind::Conventional, 20)).unwrap();
        let relay = throughput(0.0, &params(SystemKind::Relay, 20)).unwrap();
        assert!((conv - 6835.9375).abs() < 1e-9);
        assert!((relay - 3417.96875).abs() < 1e-9);
    }

    #[test]
    fn half_symbol_error_rate() {
        let p = params(SystemKind::Conventional, 20);
        let t = throughput(0.25, &p).unwrap();
        let expected = 20.0 * 7.0 * 0.5f64.powi(20) / p.transmission_period_s();
        assert!((t - expected).abs() < 1e-15 * expected);
    }

    #[test]
    fn out_of_range_ber() {
        let p = params(SystemKind::Relay, 4);
        assert!(throughput(-0.1, &p).is_err());
        assert!(throughput(0.6, &p).is_err());
        assert_eq!(throughput(0.5, &p).unwrap(), 0.0);
    }
}
