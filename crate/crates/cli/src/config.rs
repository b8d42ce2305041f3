use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ilrd_core::{GammaParam, StatKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Density,
    Limit,
    Covdecay,
    Beta,
    Maxineq,
    Trend,
    Reversal,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Density => "density",
            Command::Limit => "limit",
            Command::Covdecay => "covdecay",
            Command::Beta => "beta",
            Command::Maxineq => "maxineq",
            Command::Trend => "trend",
            Command::Reversal => "reversal",
            Command::Report => "report",
        }
    }

    fn default_n(self) -> usize {
        match self {
            Command::Simulate => 10_000,
            Command::Density | Command::Trend => 10_000_000,
            Command::Limit => 100_000,
            Command::Covdecay => 100_000_000,
            Command::Beta => 0,
            Command::Maxineq => 10_000,
            Command::Reversal => 1_000_000,
            Command::Report => 0,
        }
    }

    fn default_replicates(self) -> usize {
        match self {
            Command::Limit => 1000,
            Command::Maxineq | Command::Reversal => 500,
            Command::Trend => 20,
            _ => 0,
        }
    }

    fn default_bins(self) -> usize {
        match self {
            Command::Beta | Command::Maxineq => 4096,
            _ => 1 << 16,
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the same key in the
/// `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_parser = parse_stat)]
    pub stat: Option<StatKind>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub plot: bool,
    /// Flat JSON file with any of the keys above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Largest lag for `beta`, and the audit's q for `maxineq`.
    #[arg(long = "k-max")]
    pub k_max: Option<usize>,
    /// Comma-separated x grid for `maxineq`.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    /// Comma-separated checkpoints for `trend`.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<usize>>,
}

fn parse_stat(s: &str) -> Result<StatKind, String> {
    s.parse().map_err(|e: ilrd_core::Error| e.to_string())
}

/// Fully resolved parameters of one run. Serializes to a canonical JSON
/// form that parses back to the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub gamma: f64,
    pub n: usize,
    pub burn_in: u64,
    pub replicates: usize,
    pub seed: u64,
    pub bins: usize,
    pub stat: Option<StatKind>,
    pub delta: f64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub plot: bool,
    pub k_max: usize,
    pub x: Vec<f64>,
    pub checkpoints: Vec<usize>,
}

/// The config file: every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    gamma: Option<f64>,
    n: Option<usize>,
    burn_in: Option<u64>,
    replicates: Option<usize>,
    seed: Option<u64>,
    bins: Option<usize>,
    stat: Option<StatKind>,
    delta: Option<f64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    plot: Option<bool>,
    k_max: Option<usize>,
    x: Option<Vec<f64>>,
    checkpoints: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => read_config_file(p)?,
            None => FileConfig::default(),
        };
        if let Some(c) = file.command {
            if c != command {
                return Err(CliError::Usage(format!(
                    "--config: file is for `{}`, not `{}`",
                    c.name(),
                    command.name()
                )));
            }
        }
        let out = flags
            .out
            .clone()
            .or(file.out)
            .or_else(|| std::env::var_os("ILRD_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let default_q = if command == Command::Maxineq { 32 } else { 256 };
        let cfg = RunConfig {
            command,
            gamma: flags.gamma.or(file.gamma).unwrap_or(0.75),
            n: flags.n.or(file.n).unwrap_or(command.default_n()),
            burn_in: flags.burn_in.or(file.burn_in).unwrap_or(ilrd_core::orbit::DEFAULT_BURN_IN),
            replicates: flags.replicates.or(file.replicates).unwrap_or(command.default_replicates()),
            seed: flags.seed.or(file.seed).unwrap_or(7),
            bins: flags.bins.or(file.bins).unwrap_or(command.default_bins()),
            stat: flags.stat.or(file.stat),
            delta: flags.delta.or(file.delta).unwrap_or(1.0),
            out,
            threads: flags.threads.or(file.threads),
            plot: flags.plot || file.plot.unwrap_or(false),
            k_max: flags.k_max.or(file.k_max).unwrap_or(default_q),
            x: flags
                .x
                .clone()
                .or(file.x)
                .unwrap_or_else(|| vec![32.0, 64.0, 128.0, 256.0]),
            checkpoints: flags
                .checkpoints
                .clone()
                .or(file.checkpoints)
                .unwrap_or_else(|| vec![1_000, 10_000, 100_000, 1_000_000, 10_000_000]),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before any work or output.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |flag: &str, msg: String| Err(CliError::Usage(format!("{flag}: {msg}")));
        if self.command == Command::Report {
            return Ok(());
        }
        let gamma = match GammaParam::new(self.gamma) {
            Ok(g) => g,
            Err(e) => return usage("--gamma", e.to_string()),
        };
        let long_range = matches!(
            self.command,
            Command::Limit | Command::Trend | Command::Maxineq | Command::Reversal
        );
        if long_range && !gamma.is_long_range() {
            return usage("--gamma", format!("{} needs gamma in [0.5, 1)", self.command.name()));
        }
        if self.command != Command::Beta && self.n == 0 {
            return usage("--n", "must be at least 1".into());
        }
        if !self.bins.is_power_of_two() || self.bins < 16 {
            return usage("--bins", format!("{} is not a power of two ≥ 16", self.bins));
        }
        if self.threads == Some(0) {
            return usage("--threads", "must be at least 1".into());
        }
        match self.command {
            Command::Limit if self.replicates < 100 => usage("--replicates", "limit needs at least 100".into()),
            Command::Limit if gamma.is_boundary() && self.n < 3 => usage("--n", "must be at least 3".into()),
            Command::Maxineq | Command::Reversal if self.replicates < 2 => {
                usage("--replicates", "need at least 2".into())
            }
            Command::Trend if self.replicates == 0 => usage("--replicates", "need at least one seed".into()),
            Command::Trend if !(self.delta > self.gamma) => {
                usage("--delta", format!("must exceed gamma = {}", self.gamma))
            }
            Command::Trend
                if self.checkpoints.is_empty()
                    || self.checkpoints[0] < 3
                    || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) =>
            {
                usage("--checkpoints", "must be increasing and at least 3".into())
            }
            Command::Maxineq if self.k_max == 0 || self.k_max > self.n => {
                usage("--k-max", format!("q must lie in 1..={}", self.n))
            }
            Command::Maxineq if self.x.is_empty() || self.x.iter().any(|&x| x < self.k_max as f64) => {
                usage("--x", format!("every x must be at least q = {}", self.k_max))
            }
            Command::Covdecay if self.n < 100 * 1001 => usage("--n", "covdecay needs n ≥ 100100".into()),
            Command::Beta if self.k_max < 10 => usage("--k-max", "must be at least 10".into()),
            _ => Ok(()),
        }
    }

    pub fn gamma(&self) -> GammaParam {
        GammaParam::new(self.gamma).expect("validated")
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    #[cfg(test)]
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// `<command>_g<gamma>_n<n>_s<seed>`, the stem shared by a run's outputs.
    pub fn stem(&self) -> String {
        format!("{}_g{}_n{}_s{}", self.command.name(), self.gamma, self.n, self.seed)
    }
}

fn read_config_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config: cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("--config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_round_trips() {
        let flags = Flags {
            gamma: Some(0.6),
            stat: Some(StatKind::Cvm),
            out: Some("/tmp/x".into()),
            ..Flags::default()
        };
        let cfg = RunConfig::resolve(Command::Limit, &flags).unwrap();
        let text = cfg.to_canonical_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"gamma": 0.6, "n": 123, "seed": 4}"#).unwrap();
        let flags = Flags {
            config: Some(p),
            seed: Some(9),
            out: Some(dir.path().into()),
            ..Flags::default()
        };
        let cfg = RunConfig::resolve(Command::Simulate, &flags).unwrap();
        assert_eq!((cfg.gamma, cfg.n, cfg.seed), (0.6, 123, 9));
    }

    #[test]
    fn validation_names_the_flag() {
        let flags = Flags {
            gamma: Some(0.3),
            ..Flags::default()
        };
        let err = RunConfig::resolve(Command::Limit, &flags).unwrap_err();
        assert!(err.to_string().contains("--gamma"));
        let flags = Flags {
            bins: Some(1000),
            ..Flags::default()
        };
        assert!(RunConfig::resolve(Command::Density, &flags).unwrap_err().to_string().contains("--bins"));
    }

    #[test]
    fn stem_embeds_identity() {
        let flags = Flags {
            gamma: Some(0.5),
            n: Some(500),
            seed: Some(7),
            ..Flags::default()
        };
        let cfg = RunConfig::resolve(Command::Simulate, &flags).unwrap();
        assert_eq!(cfg.stem(), "simulate_g0.5_n500_s7");
    }
}
