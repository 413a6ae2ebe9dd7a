//! Figure-style sweeps rendered as CSV.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), integers
//! verbatim, one header row, comma-delimited. Lines starting with `#` carry
//! metadata and precede the header.

use std::fmt::Write as _;

use crate::error::{domain, Result};
use crate::lora_phy::{self, Demodulator, ModemConfig, SymbolIndex, MAX_SF, MIN_SF};
use crate::montecarlo::{estimate_coverage, sweep, Estimator};
use crate::perf_analysis::{
    analytical_ber, coverage_probability, single_link_ber, single_link_coverage, throughput,
    SystemKind, ThroughputParams,
};
use crate::scenario::Scenario;

pub const BER_COLUMNS: &str = "snr_db,ber_mc,ber_ci_lo,ber_ci_hi,ber_analytical,ber_asymptotic,trials,seed";
pub const COVERAGE_COLUMNS: &str =
    "psi_db,pcov_mc,pcov_ci_lo,pcov_ci_hi,pcov_analytical,pcov_conventional,ratio,trials,seed";

/// Relay counts of the throughput sweep when none are given.
pub const DEFAULT_RELAY_COUNTS: [usize; 2] = [1, 3];

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelftestLine {
    pub sf: u32,
    pub symbols: u32,
    pub failures: u32,
}

/// Noiseless round trip of every symbol at each spreading factor.
pub fn modem_selftest(sfs: &[u32]) -> Result<Vec<SelftestLine>> {
    sfs.iter()
        .map(|&sf| {
            if !(MIN_SF..=MAX_SF).contains(&sf) {
                return domain(format!("spreading factor {sf} outside {MIN_SF}..={MAX_SF}"));
            }
            let cfg = ModemConfig::new(sf, 125e3)?;
            let mut demod = Demodulator::new(cfg);
            let symbols = 1u32 << sf;
            let mut failures = 0;
            for m in 0..symbols {
                let sym = SymbolIndex::new(m, &cfg)?;
                if demod.demodulate(&lora_phy::modulate(sym, &cfg))? != sym {
                    failures += 1;
                }
            }
            Ok(SelftestLine { sf, symbols, failures })
        })
        .collect()
}

pub fn format_selftest(lines: &[SelftestLine]) -> String {
    let mut out = String::new();
    for l in lines {
        if l.failures == 0 {
            let _ = writeln!(out, "SF{}: all {} symbols pass", l.sf, l.symbols);
        } else {
            let _ = writeln!(out, "SF{}: {} of {} symbols FAIL", l.sf, l.failures, l.symbols);
        }
    }
    out
}

/// BER versus `P_T/N₀` with Monte Carlo, exact and asymptotic columns.
pub fn ber_sweep_csv(scenario: &Scenario, snr_db: &[f64], trials: u64, seed: u64, shards: usize) -> Result<String> {
    let sim = scenario.sim_scenario()?.with_shards(shards);
    let points = sweep(&sim, snr_db, Estimator::Ber, trials, seed)?;
    let mut out = format!("{BER_COLUMNS}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            real(p.abscissa),
            real(p.mc_value),
            real(p.mc_ci95_low),
            real(p.mc_ci95_high),
            real(p.analytical),
            real(p.asymptotic.unwrap_or(f64::NAN)),
            p.trials,
            p.seed
        );
    }
    Ok(out)
}

/// Coverage versus threshold at the scenario's `N₀` (or `ptn0_db`), with
/// the direct-link baseline and the proposed/conventional ratio.
pub fn coverage_csv(
    scenario: &Scenario,
    psi_db: &[f64],
    ptn0_db: Option<f64>,
    trials: u64,
    seed: u64,
    shards: usize,
) -> Result<String> {
    if psi_db.is_empty() {
        return domain("coverage sweep needs at least one threshold");
    }
    let scenario = match ptn0_db {
        Some(db) => scenario.with_ptn0_db(db)?,
        None => scenario.clone(),
    };
    let sim = scenario.sim_scenario()?.with_shards(shards);
    let branches = sim.topology.branch_params()?;
    let conv = scenario.conventional_link()?;
    let conv_gbar = conv.avg_snr(scenario.sf);

    let mut out = String::new();
    let _ = writeln!(out, "# ptn0_db={}", real(10.0 * (scenario.total_power_w() / scenario.noise_psd).log10()));
    let _ = writeln!(out, "# conventional_distance_m={}", real(conv.distance_m));
    let _ = writeln!(out, "# conventional_power_w={}", real(conv.tx_power_w));
    let _ = writeln!(out, "# conventional_m={}", real(conv.m_fading));
    let _ = writeln!(out, "{COVERAGE_COLUMNS}");
    for (i, &x) in psi_db.iter().enumerate() {
        let point_seed = seed ^ i as u64;
        let psi = 10f64.powf(x / 10.0);
        let mc = estimate_coverage(&sim, x, trials, point_seed)?;
        let analytic = coverage_probability(psi, &branches)?;
        let baseline = single_link_coverage(psi, conv.m_fading, conv_gbar)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            real(x),
            real(mc.point_estimate),
            real(mc.ci95_low),
            real(mc.ci95_high),
            real(analytic),
            real(baseline),
            real(analytic / baseline),
            trials,
            point_seed
        );
    }
    Ok(out)
}

pub fn throughput_columns(relay_counts: &[usize]) -> String {
    let mut header = String::from("snr_db,throughput_conv");
    for n in relay_counts {
        let _ = write!(header, ",throughput_relay_N{n}");
    }
    header
}

/// Analytic throughput versus `P_T/N₀` for the direct link and for each
/// relay count.
pub fn throughput_csv(scenario: &Scenario, snr_db: &[f64], relay_counts: &[usize]) -> Result<String> {
    if snr_db.is_empty() {
        return domain("throughput sweep needs at least one SNR value");
    }
    if relay_counts.is_empty() || relay_counts.contains(&0) {
        return domain("relay counts must be positive");
    }
    let modem = scenario.modem()?;
    let conv_params = ThroughputParams::new(scenario.packet_symbols, &modem, SystemKind::Conventional)?;
    let relay_params = ThroughputParams::new(scenario.packet_symbols, &modem, SystemKind::Relay)?;
    let variants = relay_counts
        .iter()
        .map(|&n| scenario.with_relays(n))
        .collect::<Result<Vec<_>>>()?;

    let mut out = format!("{}\n", throughput_columns(relay_counts));
    for &x in snr_db {
        let at = scenario.with_ptn0_db(x)?;
        let conv = at.conventional_link()?;
        let pb_conv = single_link_ber(conv.m_fading, conv.avg_snr(at.sf), at.sf)?.clamp(0.0, 0.5);
        let _ = write!(out, "{},{}", real(x), real(throughput(pb_conv, &conv_params)?));
        for v in &variants {
            let branches = v.with_ptn0_db(x)?.topology()?.branch_params()?;
            let pb = analytical_ber(&branches, at.sf)?.clamp(0.0, 0.5);
            let _ = write!(out, ",{}", real(throughput(pb, &relay_params)?));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parses the data rows of a sweep CSV back into numbers, skipping metadata.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let Some(header) = lines.next() else {
        return domain("CSV has no header");
    };
    let columns: Vec<String> = header.split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| {
            let row = l
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|_| crate::Error::Domain(format!("bad CSV cell {c:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != columns.len() {
                return domain("CSV row width differs from header");
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((columns, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_small_sf() {
        let lines = modem_selftest(&[7, 8]).unwrap();
        assert!(lines.iter().all(|l| l.failures == 0));
        assert!(format_selftest(&lines).contains("SF8: all 256 symbols pass"));
        assert!(modem_selftest(&[6]).is_err());
    }

    #[test]
    fn real_format_has_17_digits() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn ber_csv_shape() {
        let csv = ber_sweep_csv(&Scenario::default(), &[90.0, 100.0], 500, 3, 1).unwrap();
        let (cols, rows) = parse_csv(&csv).unwrap();
        assert_eq!(cols.join(","), BER_COLUMNS);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][7], 2.0);
    }

    #[test]
    fn throughput_plateaus() {
        let csv = throughput_csv(&Scenario::default(), &[400.0], &[1, 3]).unwrap();
        let (cols, rows) = parse_csv(&csv).unwrap();
        assert_eq!(cols, ["snr_db", "throughput_conv", "throughput_relay_N1", "throughput_relay_N3"]);
        assert!((rows[0][1] - 6835.9375).abs() < 1e-9);
        assert!((rows[0][2] - 3417.96875).abs() < 1e-9);
        assert!((rows[0][3] - 3417.96875).abs() < 1e-9);
    }

    #[test]
    fn empty_lists_rejected() {
        let s = Scenario::default();
        assert!(ber_sweep_csv(&s, &[], 10, 0, 1).is_err());
        assert!(coverage_csv(&s, &[], None, 10, 0, 1).is_err());
        assert!(throughput_csv(&s, &[], &[1]).is_err());
    }
}
