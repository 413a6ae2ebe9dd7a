use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lora_relay_core::montecarlo::SimMode;
use lora_relay_core::scenario::Scenario;
use lora_relay_core::{sweeps, Error};

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;

/// Simulator and analytic calculator for two-hop AF LoRa relaying.
#[derive(Parser)]
#[command(name = "lora-relay-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noiseless round trip of every symbol for each spreading factor.
    ModemSelftest {
        #[arg(long, default_value_t = 7)]
        sf_min: u32,
        #[arg(long, default_value_t = 12)]
        sf_max: u32,
    },
    /// BER versus P_T/N0: Monte Carlo, exact and asymptotic.
    BerSweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated P_T/N0 values in dB.
        #[arg(long)]
        snr_db_list: String,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Coverage probability versus threshold.
    Coverage {
        #[command(flatten)]
        common: Common,
        /// Comma-separated thresholds in dB.
        #[arg(long)]
        psi_db_list: String,
        /// P_T/N0 in dB; defaults to the scenario's noise_psd.
        #[arg(long)]
        ptn0_db: Option<f64>,
    },
    /// Analytic throughput versus P_T/N0 for the direct link and relay counts.
    Throughput {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snr_db_list: String,
        /// Comma-separated relay counts.
        #[arg(long, default_value = "1,3")]
        relay_counts: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    shards: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Waveform,
    Snr,
}

enum Failure {
    Usage(String),
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>, Failure> {
    let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Failure::Usage(format!("--{flag} needs at least one value")));
    }
    items
        .iter()
        .map(|s| s.parse().map_err(|_| Failure::Usage(format!("--{flag}: cannot parse {s:?}"))))
        .collect()
}

impl Common {
    fn load(&self) -> Result<(Scenario, u64, u64, usize), Failure> {
        let scenario = match &self.scenario {
            Some(p) => Scenario::from_file(p)?,
            None => Scenario::default(),
        };
        let trials = self.trials.unwrap_or(scenario.trials);
        if trials == 0 {
            return Err(Failure::Usage("--trials must be at least 1".into()));
        }
        let seed = self.seed.unwrap_or(scenario.seed);
        Ok((scenario, trials, seed, self.shards as usize))
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ModemSelftest { sf_min, sf_max } => {
            if sf_min > sf_max {
                return Err(Failure::Usage("--sf-min exceeds --sf-max".into()));
            }
            let sfs: Vec<u32> = (sf_min..=sf_max).collect();
            let lines = sweeps::modem_selftest(&sfs)?;
            print!("{}", sweeps::format_selftest(&lines));
            if lines.iter().any(|l| l.failures > 0) {
                return Err(Failure::Lib(Error::Domain("modem self-test failed".into())));
            }
            Ok(())
        }
        Command::BerSweep { common, snr_db_list, mode } => {
            let snr = parse_list("snr-db-list", &snr_db_list)?;
            let (mut scenario, trials, seed, shards) = common.load()?;
            if let Some(m) = mode {
                scenario.mode = match m {
                    ModeArg::Waveform => SimMode::Waveform,
                    ModeArg::Snr => SimMode::SnrDomain,
                };
            }
            common.emit(&sweeps::ber_sweep_csv(&scenario, &snr, trials, seed, shards)?)
        }
        Command::Coverage { common, psi_db_list, ptn0_db } => {
            let psi = parse_list("psi-db-list", &psi_db_list)?;
            let (scenario, trials, seed, shards) = common.load()?;
            common.emit(&sweeps::coverage_csv(&scenario, &psi, ptn0_db, trials, seed, shards)?)
        }
        Command::Throughput { common, snr_db_list, relay_counts } => {
            let snr = parse_list("snr-db-list", &snr_db_list)?;
            let counts: Vec<usize> = parse_list("relay-counts", &relay_counts)?;
            if counts.contains(&0) {
                return Err(Failure::Usage("--relay-counts must be positive".into()));
            }
            let (scenario, _, _, _) = common.load()?;
            common.emit(&sweeps::throughput_csv(&scenario, &snr, &counts)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, format!("usage error: {m}")),
                Failure::Io(m) => (EXIT_CONFIG, m),
                Failure::Lib(Error::Config(m)) => (EXIT_CONFIG, format!("configuration error: {m}")),
                Failure::Lib(Error::Domain(m)) => (EXIT_CONFIG, format!("invalid input: {m}")),
                Failure::Lib(Error::Convergence(m)) => (EXIT_CONVERGENCE, format!("numerical failure: {m}")),
            };
            eprintln!("lora-relay-lab: {msg}");
            ExitCode::from(code)
        }
    }
}
