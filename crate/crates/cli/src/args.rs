use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use pdp_core::dataset::{DEFAULT_LOWER, DEFAULT_UPPER};
use pdp_core::explain::ProviderKind;
use pdp_core::mcda::PreferenceProfile;

pub fn canonical_profiles_help() -> String {
    let row = |name: &str, p: PreferenceProfile| {
        format!(
            "  {name:<15} privacy={} accuracy={} compliance_required={} sensitivity={}",
            p.privacy, p.accuracy, p.compliance_required, p.sensitivity
        )
    };
    [
        "Canonical profiles:".to_string(),
        row("privacy-first", PreferenceProfile::privacy_first()),
        row("balanced", PreferenceProfile::balanced()),
        row("utility-first", PreferenceProfile::utility_first()),
        String::new(),
        "Exit codes: 0 success, 1 usage error, 2 pipeline error.".to_string(),
    ]
    .join("\n")
}

#[derive(Debug, Parser)]
#[command(
    name = "pdp",
    version,
    about = "Participatory differential privacy for household time series",
    after_help = canonical_profiles_help()
)]
pub struct Cli {
    /// Output format for stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic household-consumption CSV (144 ten-minute readings per day).
    Generate(GenerateArgs),
    /// Select ε from preferences, release noisy data and write reports.
    #[command(after_help = canonical_profiles_help())]
    Run(RunArgs),
    /// Measure MAE over an ε grid without spending budget.
    Sweep(SweepArgs),
    /// Compare the canonical profiles side by side.
    #[command(after_help = canonical_profiles_help())]
    Profiles(ProfilesArgs),
    /// Drive a running pdp-server instead of computing locally.
    Remote(RemoteArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub households: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub days: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV with a `timestamp` column followed by one column per series.
    #[arg(long)]
    pub input: PathBuf,
    /// Lower clamp bound.
    #[arg(long, default_value_t = DEFAULT_LOWER, allow_negative_numbers = true)]
    pub lower: f64,
    /// Upper clamp bound; Δf = upper − lower.
    #[arg(long, default_value_t = DEFAULT_UPPER, allow_negative_numbers = true)]
    pub upper: f64,
    /// Fill empty cells with the series mean instead of rejecting the file.
    #[arg(long)]
    pub fill_missing: bool,
    /// Unit label used in reports.
    #[arg(long, default_value = "W")]
    pub unit: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    PrivacyFirst,
    Balanced,
    UtilityFirst,
}

impl Preset {
    pub fn profile(self) -> PreferenceProfile {
        match self {
            Self::PrivacyFirst => PreferenceProfile::privacy_first(),
            Self::Balanced => PreferenceProfile::balanced(),
            Self::UtilityFirst => PreferenceProfile::utility_first(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Starting preset; individual sliders override it.
    #[arg(long, value_enum, default_value_t = Preset::Balanced)]
    pub profile: Preset,
    /// Privacy priority, 1-5.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub privacy: Option<u8>,
    /// Accuracy priority, 1-5.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub accuracy: Option<u8>,
    /// Whether the compliance policy cap must hold (true/false).
    #[arg(long, action = ArgAction::Set)]
    pub compliance_required: Option<bool>,
    /// Data sensitivity, 1-3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub sensitivity: Option<u8>,
}

impl ProfileArgs {
    pub fn resolve(&self) -> PreferenceProfile {
        let base = self.profile.profile();
        PreferenceProfile {
            privacy: self.privacy.unwrap_or(base.privacy),
            accuracy: self.accuracy.unwrap_or(base.accuracy),
            compliance_required: self.compliance_required.unwrap_or(base.compliance_required),
            sensitivity: self.sensitivity.unwrap_or(base.sensitivity),
        }
    }
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// Compliance policy name (strict, standard, open, or from --policy-file).
    #[arg(long)]
    pub policy: Option<String>,
    /// TOML file with `[[policy]]` entries replacing the bundled set.
    #[arg(long)]
    pub policy_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// Explanation provider. The external one reads PDP_LLM_ENDPOINT,
    /// PDP_LLM_MODEL and PDP_LLM_API_KEY.
    #[arg(long, default_value = "template")]
    pub provider: ProviderKind,
    /// Fail instead of falling back to the template when the external
    /// provider is unavailable.
    #[arg(long)]
    pub no_fallback: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Noise seed; random (and reported) when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total ε budget for this run.
    #[arg(long, default_value_t = pdp_core::dp::DEFAULT_TOTAL_BUDGET)]
    pub budget: f64,
    /// Directory for noisy.csv, utility.json and impact.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated ε values in [0.1, 2.0], strictly increasing.
    #[arg(long, value_delimiter = ',', default_values_t = pdp_core::mcda::DEFAULT_GRID)]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = pdp_core::analysis::DEFAULT_SEEDS_PER_POINT)]
    pub seeds_per_point: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Chart JSON path; the CSV is written next to it with a `.csv` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfilesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the comparison JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RemoteArgs {
    /// Server base URL.
    #[arg(long, env = "PDP_SERVER_URL", default_value = "http://127.0.0.1:8080")]
    pub url: String,
    #[command(subcommand)]
    pub command: RemoteCommand,
}

#[derive(Debug, Subcommand)]
pub enum RemoteCommand {
    /// List the server's compliance policies.
    Policies,
    /// Create a session, upload, select and release in one go.
    Run(RemoteRunArgs),
    /// Show a session's event log and ledger.
    History {
        #[arg(long)]
        session: String,
    },
}

#[derive(Debug, Args)]
pub struct RemoteRunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also download the noisy CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
