use std::path::PathBuf;

use clap::{ArgMatches, Args, FromArgMatches, Parser, Subcommand, ValueEnum};
use heralded::fockspace::SpaceConfig;
use heralded::protocol::ProtocolConfig;
use heralded::trajectories::{DetectorModel, RoundTiming, SystemParams};
use serde::{Deserialize, Serialize};

use crate::units::{hz_to_per_ns, Scale, Unit};
use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "heralded", version, about = "Double-heralded entangling operations and cluster-state growth")]
pub struct Cli {
    /// Worker threads for sweeps and Monte Carlo runs (default: one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// One entangling attempt: exact outcome table, or counts over sampled trials.
    Eo(EoArgs),
    /// Exact success probability and fidelity along a parameter axis.
    Sweep(SweepArgs),
    /// Chain-growth cost: Monte Carlo against the analytic expectation.
    Grow(GrowArgs),
    /// Cross-check closed forms, enumeration, sampling and graph bookkeeping.
    Verify(VerifyArgs),
    /// Error-budget estimates for a physical parameter set.
    Budget(BudgetArgs),
    /// Run a command described by a TOML or JSON file.
    #[serde(skip)]
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eo(_) => "eo",
            Command::Sweep(_) => "sweep",
            Command::Grow(_) => "grow",
            Command::Verify(_) => "verify",
            Command::Budget(_) => "budget",
            Command::Run(_) => "run",
        }
    }
}

/// Defaults of a flag group as clap would fill them from an empty command line,
/// so that config files and flags agree on every unspecified value.
fn clap_default<T: Args + FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("defaults").no_binary_name(true));
    let matches: ArgMatches = cmd.get_matches_from(Vec::<String>::new());
    T::from_arg_matches(&matches).expect("flag defaults parse")
}

macro_rules! clap_defaults {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                clap_default()
            }
        }
    )*};
}

clap_defaults!(PhysicsArgs, OutputArgs, EoArgs, SweepArgs, GrowArgs, VerifyArgs, BudgetArgs);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Write to this path instead of stdout.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsArgs {
    /// Cavity coupling on both arms.
    #[arg(long, default_value_t = 0.3)]
    pub g: f64,
    #[arg(long)]
    pub g_a: Option<f64>,
    #[arg(long)]
    pub g_b: Option<f64>,
    /// Cavity decay rate on both arms.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long)]
    pub kappa_a: Option<f64>,
    #[arg(long)]
    pub kappa_b: Option<f64>,
    /// Spontaneous emission rate on both arms.
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long)]
    pub gamma_a: Option<f64>,
    #[arg(long)]
    pub gamma_b: Option<f64>,
    /// Spontaneous emission on both arms as a multiple of Γ_slow; overrides --gamma.
    #[arg(long)]
    pub gamma_over_slow: Option<f64>,
    /// Detector efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Dark counts per unit time, per detector.
    #[arg(long, default_value_t = 0.0)]
    pub dark_rate: f64,
    /// Detection window per round (default 20/Γ_slow).
    #[arg(long)]
    pub t_wait: Option<f64>,
    /// Relaxation period after each window (default 20/Γ_slow).
    #[arg(long)]
    pub t_relax: Option<f64>,
    /// Photon-number cutoff per cavity.
    #[arg(long, default_value_t = 1)]
    pub n_max: usize,
    #[arg(long, value_enum, default_value_t)]
    pub unit: Unit,
    /// Reference cavity decay rate in s⁻¹ (with --unit ns).
    #[arg(long)]
    pub kappa_hz: Option<f64>,
}

impl PhysicsArgs {
    pub fn scale(&self) -> Result<Scale, CliError> {
        let kappa_ref = match self.unit {
            Unit::Kappa => {
                if self.kappa_hz.is_some() {
                    return Err(CliError::validation("--kappa-hz needs --unit ns"));
                }
                return Ok(Scale::IDENTITY);
            }
            Unit::Ns => match self.kappa_hz {
                Some(hz) => hz_to_per_ns(hz),
                None => self.kappa_b.unwrap_or(self.kappa),
            },
        };
        if !(kappa_ref > 0.0) || !kappa_ref.is_finite() {
            return Err(CliError::validation(format!("reference cavity decay rate must be > 0 (got {kappa_ref})")));
        }
        Ok(Scale { kappa_ref })
    }

    /// Simulator configuration in `κ_ref = 1` units.
    pub fn to_config(&self) -> Result<ProtocolConfig, CliError> {
        let s = self.scale()?;
        let mut params = SystemParams {
            g_a: s.rate(self.g_a.unwrap_or(self.g)),
            g_b: s.rate(self.g_b.unwrap_or(self.g)),
            kappa_a: s.rate(self.kappa_a.unwrap_or(self.kappa)),
            kappa_b: s.rate(self.kappa_b.unwrap_or(self.kappa)),
            gamma_a: s.rate(self.gamma_a.unwrap_or(self.gamma)),
            gamma_b: s.rate(self.gamma_b.unwrap_or(self.gamma)),
        };
        if let Some(x) = self.gamma_over_slow {
            let slow = params.slowest_decay();
            params.gamma_a = x * slow;
            params.gamma_b = x * slow;
        }
        let detectors = DetectorModel { eta: self.eta, dark_rate: s.rate(self.dark_rate), resolves_photon_number: false };
        let timing = match (self.t_wait, self.t_relax) {
            (None, None) => None,
            (w, r) => {
                let d = RoundTiming::default_for(&params)?;
                Some(RoundTiming {
                    t_wait: w.map_or(d.t_wait, |t| s.time(t)),
                    t_relax: r.map_or(d.t_relax, |t| s.time(t)),
                })
            }
        };
        let config = ProtocolConfig {
            params,
            detectors,
            timing,
            space: SpaceConfig::with_n_max(self.n_max),
            ..ProtocolConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub physics: PhysicsArgs,
    /// Sample trajectories instead of enumerating outcomes exactly.
    #[arg(long)]
    pub sampled: bool,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Success probability against η for γ ∈ {0, 0.1, 0.2}·Γ_slow.
    Fig2a,
    /// Fidelity against κ_A/κ_B.
    #[value(name = "fig2b-kappa")]
    #[serde(rename = "fig2b-kappa")]
    Fig2bKappa,
    /// Fidelity against g_A/g_B.
    #[value(name = "fig2b-g")]
    #[serde(rename = "fig2b-g")]
    Fig2bG,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    #[arg(long, value_enum, conflicts_with = "axis")]
    pub preset: Option<Preset>,
    /// eta, gamma-over-slow, kappa-ratio or g-ratio.
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Vec<f64>,
    /// Evenly spaced grid: first value (with --to and --points).
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipeArg {
    #[default]
    Sequential,
    Pairwise,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyArg {
    #[default]
    Discard,
    Shrink,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowArgs {
    /// p = 0.36125 with 4-chains grown one qubit at a time.
    #[arg(long, conflicts_with = "paper_c5")]
    pub paper_c4: bool,
    /// p = 0.245 with 5-chains made from two joined 3-chains.
    #[arg(long)]
    pub paper_c5: bool,
    /// EO success probability; derived from the physics flags when omitted.
    #[arg(long)]
    pub p: Option<f64>,
    /// Short-chain length.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t)]
    pub recipe: RecipeArg,
    #[arg(long, value_enum, default_value_t)]
    pub policy: PolicyArg,
    /// Report the cost of one m-chain instead of the per-qubit join cost.
    #[arg(long)]
    pub single_chain: bool,
    /// Join attempts (or single chains) to simulate [default: 10⁷ with a
    /// preset, 10⁵ otherwise].
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the smallest usable m and both analytic costs at these p values instead.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[default]
    Fast,
    Full,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t)]
    pub level: Level,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetArgs {
    /// Spontaneous emission lifetime γ⁻¹ in ns.
    #[arg(long, default_value_t = 25.0)]
    pub gamma_inv_ns: f64,
    /// Coupling in units of γ.
    #[arg(long, default_value_t = 100.0)]
    pub g_over_gamma: f64,
    /// Cavity decay in units of g.
    #[arg(long, default_value_t = 1.0)]
    pub kappa_over_g: f64,
    /// Spin coherence time in μs.
    #[arg(long, default_value_t = 32.0)]
    pub t_d_us: f64,
    /// Longest chain kept waiting.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// Dark counts per second.
    #[arg(long, default_value_t = 500.0)]
    pub dark_rate_hz: f64,
    /// Detection window in units of 1/Γ_slow.
    #[arg(long, default_value_t = 3.0)]
    pub window_slow: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// TOML (.toml) or JSON file with a `command` field and that command's flags.
    #[arg(long)]
    pub config: PathBuf,
}

/// Reads a run configuration; the file extension picks the format.
pub fn load_config(path: &std::path::Path) -> Result<Command, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed: Command = if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
    };
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_flag_defaults() {
        let p = PhysicsArgs::default();
        assert_eq!((p.g, p.kappa, p.gamma, p.eta, p.n_max), (0.3, 1.0, 0.0, 1.0, 1));
        assert_eq!(EoArgs::default().trials, 1000);
        assert_eq!(GrowArgs::default().m, 4);
    }

    #[test]
    fn toml_config_fills_missing_fields() {
        let c: Command = toml::from_str("command = \"eo\"\neta = 0.5\nsampled = true\n").unwrap();
        let Command::Eo(a) = c else { panic!("wrong command") };
        assert_eq!(a.physics.eta, 0.5);
        assert!(a.sampled);
        assert_eq!(a.physics.g, 0.3);
    }

    #[test]
    fn ns_units_scale_to_reference_kappa() {
        let p = PhysicsArgs { unit: Unit::Ns, g: 0.6, kappa: 2.0, t_wait: Some(10.0), ..Default::default() };
        let c = p.to_config().unwrap();
        assert!((c.params.g_a - 0.3).abs() < 1e-15);
        assert!((c.params.kappa_b - 1.0).abs() < 1e-15);
        assert!((c.timing.unwrap().t_wait - 20.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_hz_requires_ns() {
        let p = PhysicsArgs { kappa_hz: Some(1e9), ..Default::default() };
        assert!(p.to_config().is_err());
    }
}
