use std::fs;

use pdp_client::{Client, CreateSessionRequest, UploadOptions};

use crate::args::{Format, RemoteArgs, RemoteCommand, RemoteRunArgs};
use crate::output::{fmt_eps, table, to_json_pretty, write_all_atomic, CliError};

pub fn remote(args: &RemoteArgs, format: Format) -> Result<String, CliError> {
    let client = Client::new(&args.url).map_err(|e| CliError::Usage(e.to_string()))?;
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))?;
    rt.block_on(async {
        match &args.command {
            RemoteCommand::Policies => {
                let p = client.policies().await?;
                Ok(match format {
                    Format::Json => to_json_pretty(&p) + "\n",
                    Format::Csv => {
                        let mut out = String::from("name,epsilon_cap\n");
                        for x in &p.policies {
                            out.push_str(&format!("{},{}\n", x.name, x.epsilon_cap));
                        }
                        out
                    }
                    Format::Table => {
                        let rows: Vec<Vec<String>> = p
                            .policies
                            .iter()
                            .map(|x| vec![x.name.clone(), fmt_eps(x.epsilon_cap), x.description.clone()])
                            .collect();
                        table(&["name", "cap", "description"].map(String::from), &rows)
                    }
                })
            }
            RemoteCommand::Run(run) => remote_run(&client, run, format).await,
            RemoteCommand::History { session } => {
                Ok(to_json_pretty(&client.history(session).await?) + "\n")
            }
        }
    })
}

async fn remote_run(client: &Client, args: &RemoteRunArgs, format: Format) -> Result<String, CliError> {
    let raw = fs::read(&args.input.input).map_err(|e| CliError::io(&args.input.input, e))?;
    let session = client
        .create_session(&CreateSessionRequest {
            total_budget: args.budget,
            policy_name: args.policy.clone(),
        })
        .await?;
    let id = &session.session_id;
    let options = UploadOptions {
        lower: Some(args.input.lower),
        upper: Some(args.input.upper),
        fill_missing: args.input.fill_missing,
        unit: Some(args.input.unit.clone()),
    };
    client.upload_csv(id, raw, &options).await?;
    client.set_preferences(id, &args.profile.resolve()).await?;
    let release = client.release(id, args.seed).await?;
    if let Some(out) = &args.out {
        let csv = client.export(id, release.version.version_id).await?;
        write_all_atomic(&[(out.clone(), csv)])?;
    }
    Ok(match format {
        Format::Json => to_json_pretty(&serde_json::json!({
            "session_id": id,
            "release": release,
        })) + "\n",
        Format::Csv => format!(
            "session_id,epsilon,mae,privacy_score,seed\n{id},{},{},{},{}\n",
            release.utility.epsilon, release.utility.mae, release.impact.privacy_score, release.seed
        ),
        Format::Table => format!(
            "session        {id}\nepsilon*       {}\nMAE            {:.4} {}\nprivacy score  {:.2}/5\nseed           {}\nbudget left    {}\n",
            fmt_eps(release.utility.epsilon),
            release.utility.mae,
            release.utility.units,
            release.impact.privacy_score,
            release.seed,
            release.ledger.remaining
        ),
    })
}
