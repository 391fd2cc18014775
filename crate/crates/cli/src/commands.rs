use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use pdp_core::analysis::{chart_data, sweep_epsilon, ChartDocument};
use pdp_core::api::ApiError;
use pdp_core::dataset::{
    generate_synthetic, ingest_csv_with, ClampBounds, DatasetVersion, IngestOptions, VersionId,
    VersionStore,
};
use pdp_core::dp::BudgetLedger;
use pdp_core::explain::{LlmConfig, LlmProvider, ProviderKind, ReportGenerator};
use pdp_core::mcda::{select_epsilon, CompliancePolicy, PolicySet, PreferenceProfile};
use pdp_core::pipeline::{execute_release, ReleaseParams};

use crate::args::{
    Format, GenerateArgs, InputArgs, PolicyArgs, Preset, ProfilesArgs, ProviderArgs, RunArgs,
    SweepArgs,
};
use crate::output::{fmt_eps, table, to_json_pretty, write_all_atomic, CliError};

pub type Result<T> = std::result::Result<T, CliError>;

pub const NOISY_CSV: &str = "noisy.csv";
pub const UTILITY_JSON: &str = "utility.json";
pub const IMPACT_JSON: &str = "impact.json";

pub fn load_dataset(input: &InputArgs) -> Result<(DatasetVersion, ClampBounds)> {
    let raw = fs::read(&input.input).map_err(|e| CliError::io(&input.input, e))?;
    let bounds = ClampBounds::new(input.lower, input.upper).map_err(ApiError::from)?;
    let options = IngestOptions {
        fill_missing: input.fill_missing,
        unit_label: input.unit.clone(),
    };
    let root = ingest_csv_with(&raw, bounds, &options).map_err(ApiError::from)?;
    Ok((root, bounds))
}

fn resolve_policy(args: &PolicyArgs) -> Result<Option<CompliancePolicy>> {
    let Some(name) = &args.policy else {
        return Ok(None);
    };
    let set = match &args.policy_file {
        Some(path) => PolicySet::load(path).map_err(ApiError::from)?,
        None => PolicySet::default(),
    };
    Ok(Some(set.get(name).map_err(ApiError::from)?.clone()))
}

fn generator(args: &ProviderArgs) -> ReportGenerator {
    let llm = match args.provider {
        ProviderKind::ExternalLlm => LlmConfig::from_env().map(LlmProvider::new),
        ProviderKind::Template => None,
    };
    ReportGenerator::new(llm, !args.no_fallback)
}

pub fn generate(args: &GenerateArgs, format: Format) -> Result<String> {
    let ds = generate_synthetic(args.households as usize, args.days as usize, args.seed)
        .map_err(ApiError::from)?;
    write_all_atomic(&[(args.out.clone(), ds.to_csv_bytes())])?;
    let (series, steps) = ds.shape();
    Ok(match format {
        Format::Json => to_json_pretty(&serde_json::json!({
            "path": args.out,
            "series": series,
            "timestamps": steps,
            "seed": args.seed,
        })) + "\n",
        Format::Csv => format!("path,series,timestamps,seed\n{},{series},{steps},{}\n", args.out.display(), args.seed),
        Format::Table => format!(
            "wrote {} ({series} series x {steps} timestamps, seed {})\n",
            args.out.display(),
            args.seed
        ),
    })
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub profile: PreferenceProfile,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap_applied: Option<f64>,
    pub closeness: Vec<f64>,
    pub delta_f: f64,
    pub mae: f64,
    pub expected_mae: f64,
    pub units: String,
    pub privacy_score: f64,
    pub seed: u64,
    pub version_id: VersionId,
    pub remaining_budget: f64,
    pub outputs: Vec<PathBuf>,
}

pub fn run(args: &RunArgs, format: Format) -> Result<String> {
    let (root, bounds) = load_dataset(&args.input)?;
    let profile = args.profile.resolve();
    let policy = resolve_policy(&args.policy)?;
    let delta_f = bounds.delta_f();
    let selection = select_epsilon(&profile, delta_f, policy.as_ref()).map_err(ApiError::from)?;
    let mut store = VersionStore::new(root);
    let mut ledger = BudgetLedger::new(args.budget).map_err(ApiError::from)?;
    let seed = args.seed.unwrap_or_else(rand::random);
    let outcome = execute_release(
        &mut store,
        &mut ledger,
        &generator(&args.provider),
        ReleaseParams {
            source: 0,
            delta_f,
            seed,
            profile: &profile,
            selection: &selection,
            provider: args.provider.provider,
        },
    )
    .map_err(ApiError::from)?;

    let noisy = store.get(outcome.version_id).map_err(ApiError::from)?;
    let outputs = vec![
        (args.out_dir.join(NOISY_CSV), noisy.payload().to_csv_bytes()),
        (args.out_dir.join(UTILITY_JSON), (to_json_pretty(&outcome.utility) + "\n").into_bytes()),
        (args.out_dir.join(IMPACT_JSON), (to_json_pretty(&outcome.impact) + "\n").into_bytes()),
    ];
    write_all_atomic(&outputs)?;

    let summary = RunSummary {
        profile,
        epsilon: outcome.epsilon,
        cap_applied: selection.cap_applied,
        closeness: selection.closeness.clone(),
        delta_f,
        mae: outcome.utility.mae,
        expected_mae: outcome.utility.expected_mae,
        units: outcome.utility.units.clone(),
        privacy_score: outcome.impact.privacy_score,
        seed,
        version_id: outcome.version_id,
        remaining_budget: outcome.remaining_budget,
        outputs: outputs.into_iter().map(|(p, _)| p).collect(),
    };
    Ok(render_run(&summary, format))
}

fn render_run(s: &RunSummary, format: Format) -> String {
    match format {
        Format::Json => to_json_pretty(s) + "\n",
        Format::Csv => format!(
            "epsilon,mae,expected_mae,privacy_score,seed\n{},{},{},{},{}\n",
            s.epsilon, s.mae, s.expected_mae, s.privacy_score, s.seed
        ),
        Format::Table => {
            let mut out = format!("epsilon*       {}\n", fmt_eps(s.epsilon));
            if let Some(cap) = s.cap_applied {
                out.push_str(&format!("cap applied    {}\n", fmt_eps(cap)));
            }
            out.push_str(&format!(
                "MAE            {:.4} {} (expected {:.4})\n",
                s.mae, s.units, s.expected_mae
            ));
            out.push_str(&format!("privacy score  {:.2}/5\n", s.privacy_score));
            out.push_str(&format!("seed           {}\n", s.seed));
            out.push_str(&format!("budget left    {}\n", s.remaining_budget));
            for p in &s.outputs {
                out.push_str(&format!("wrote          {}\n", p.display()));
            }
            out
        }
    }
}

pub fn sweep(args: &SweepArgs, format: Format) -> Result<String> {
    let (root, bounds) = load_dataset(&args.input)?;
    let result = sweep_epsilon(
        &root,
        &args.grid,
        bounds.delta_f(),
        args.seeds_per_point,
        args.seed,
    )
    .map_err(ApiError::from)?;
    let doc = chart_data(&result);
    let csv_path = args.out.with_extension("csv");
    write_all_atomic(&[
        (args.out.clone(), (doc.to_json() + "\n").into_bytes()),
        (csv_path, doc.to_csv().into_bytes()),
    ])?;
    Ok(render_sweep(&doc, format))
}

fn fmt_corr(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |r| r.to_string())
}

fn render_sweep(doc: &ChartDocument, format: Format) -> String {
    match format {
        Format::Json => doc.to_json() + "\n",
        Format::Csv => doc.to_csv(),
        Format::Table => {
            let headers = ["epsilon", "mae", "expected_mae"].map(String::from);
            let rows: Vec<Vec<String>> = doc
                .grid
                .iter()
                .zip(&doc.mae)
                .zip(&doc.expected_mae)
                .map(|((e, m), x)| vec![fmt_eps(*e), format!("{m:.4}"), format!("{x:.4}")])
                .collect();
            let mut out = table(&headers, &rows);
            out.push_str(&format!("pearson   {}\n", fmt_corr(doc.pearson)));
            out.push_str(&format!("spearman  {}\n", fmt_corr(doc.spearman)));
            out
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ProfileRow {
    pub name: String,
    pub profile: PreferenceProfile,
    pub epsilon: f64,
    pub mae: f64,
    pub expected_mae: f64,
    pub privacy_score: f64,
    pub closeness: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ProfilesReport {
    pub delta_f: f64,
    pub units: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<CompliancePolicy>,
    pub profiles: Vec<ProfileRow>,
}

pub fn profiles(args: &ProfilesArgs, format: Format) -> Result<String> {
    let (root, bounds) = load_dataset(&args.input)?;
    let policy = resolve_policy(&args.policy)?;
    let delta_f = bounds.delta_f();
    let generator = ReportGenerator::template_only();
    let units = root.payload().unit_label().to_string();
    let mut rows = Vec::new();
    for (name, preset) in [
        ("privacy-first", Preset::PrivacyFirst),
        ("balanced", Preset::Balanced),
        ("utility-first", Preset::UtilityFirst),
    ] {
        let profile = preset.profile();
        let selection =
            select_epsilon(&profile, delta_f, policy.as_ref()).map_err(ApiError::from)?;
        // each profile is an independent release of the same upload
        let mut store = VersionStore::new(root.clone());
        let mut ledger = BudgetLedger::default();
        let outcome = execute_release(
            &mut store,
            &mut ledger,
            &generator,
            ReleaseParams {
                source: 0,
                delta_f,
                seed: args.seed,
                profile: &profile,
                selection: &selection,
                provider: ProviderKind::Template,
            },
        )
        .map_err(ApiError::from)?;
        rows.push(ProfileRow {
            name: name.to_string(),
            profile,
            epsilon: outcome.epsilon,
            mae: outcome.utility.mae,
            expected_mae: outcome.utility.expected_mae,
            privacy_score: outcome.impact.privacy_score,
            closeness: selection.closeness,
        });
    }
    let report = ProfilesReport {
        delta_f,
        units,
        seed: args.seed,
        policy,
        profiles: rows,
    };
    if let Some(out) = &args.out {
        write_all_atomic(&[(out.clone(), (to_json_pretty(&report) + "\n").into_bytes())])?;
    }
    Ok(render_profiles(&report, format))
}

fn render_profiles(r: &ProfilesReport, format: Format) -> String {
    match format {
        Format::Json => to_json_pretty(r) + "\n",
        Format::Csv => {
            let mut out = String::from("profile,epsilon,mae,expected_mae,privacy_score\n");
            for p in &r.profiles {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.name, p.epsilon, p.mae, p.expected_mae, p.privacy_score
                ));
            }
            out
        }
        Format::Table => {
            let mut headers = vec![String::new()];
            headers.extend(r.profiles.iter().map(|p| p.name.clone()));
            let row = |label: String, f: &dyn Fn(&ProfileRow) -> String| {
                let mut cells = vec![label];
                cells.extend(r.profiles.iter().map(f));
                cells
            };
            let rows = vec![
                row("Selected ε".into(), &|p| fmt_eps(p.epsilon)),
                row(format!("MAE ({})", r.units), &|p| format!("{:.2}", p.mae)),
                row("Privacy score".into(), &|p| format!("{:.1}", p.privacy_score)),
            ];
            table(&headers, &rows)
        }
    }
}
