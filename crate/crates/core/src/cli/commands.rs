use super::*;
use crate::metrics::{
    cohort_report, render_tables, MetricsError, MostConfidentMode, RaterLabels, ReportOptions,
    SorLabels, SwarmOutcomes, VoteSet,
};
use crate::server::{
    read_trace_file, recorded_outcomes, replay as replay_trace, swarm_outcomes, Server,
    ServerError, SessionConfig, TraceTarget,
};
use crate::sim::{run_plan, run_plan_embedded, RunStatus, SimError, SimPlan};
use log::info;
use serde_json::json;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new(EXIT_FAILED, format!("cannot start runtime: {e}")))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::new(EXIT_FAILED, format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::new(EXIT_FAILED, format!("{}: {e}", path.display())))
}

fn metrics_code(e: &MetricsError) -> i32 {
    match e {
        MetricsError::Misaligned(_) => EXIT_MISALIGNED,
        MetricsError::Parse { .. } | MetricsError::Io(..) | MetricsError::InvalidValue(_) => {
            EXIT_PARSE
        }
        _ => EXIT_FAILED,
    }
}

fn metrics_err(e: MetricsError) -> CliError {
    CliError::new(metrics_code(&e), e.to_string())
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

pub(super) fn serve(a: ServeArgs, json: bool) -> Result<i32, CliError> {
    let config = SessionConfig::from_path(&a.config)
        .map_err(|e| CliError::new(EXIT_BAD_CONFIG, e.to_string()))?;
    create_dir(&a.trace_dir)?;
    let rt = runtime()?;
    rt.block_on(async {
        let running = Server::new(TraceTarget::Dir(a.trace_dir.clone()))
            .bind(&a.bind)
            .await
            .map_err(|e| CliError::new(EXIT_BIND, e.to_string()))?;
        let handle = running.server.open_session(config).map_err(|e| {
            let code = match e {
                ServerError::InvalidConfig(_) | ServerError::ConfigSyntax { .. } => EXIT_BAD_CONFIG,
                _ => EXIT_FAILED,
            };
            CliError::new(code, e.to_string())
        })?;
        let endpoint = running.endpoint();
        if json {
            println!(
                "{}",
                json!({
                    "status": "ready",
                    "session_id": handle.session_id,
                    "endpoint": endpoint,
                    "join_token": handle.join_token,
                })
            );
        } else {
            println!(
                "ready session={} endpoint={} join_token={}",
                handle.session_id, endpoint, handle.join_token
            );
        }
        info!("serving session {} on {endpoint}", handle.session_id);
        let session_id = handle.session_id.clone();
        tokio::spawn(async move {
            match handle.wait().await {
                Ok(outcomes) => info!("session {session_id} complete: {} outcomes", outcomes.len()),
                Err(e) => log::error!("session {session_id}: {e}"),
            }
        });
        shutdown_signal().await;
        info!("shutting down");
        running.shutdown().await;
        Ok(EXIT_OK)
    })
}

pub(super) fn simulate(a: SimulateArgs, json: bool) -> Result<i32, CliError> {
    let plan =
        SimPlan::from_path(&a.plan).map_err(|e| CliError::new(EXIT_BAD_PLAN, e.to_string()))?;
    create_dir(&a.out)?;
    let rt = runtime()?;
    let summary = rt
        .block_on(async {
            match &a.endpoint {
                Some(endpoint) => run_plan(&plan, endpoint).await,
                None => {
                    let traces = a.out.join("traces");
                    std::fs::create_dir_all(&traces)
                        .map_err(|e| SimError::Io(traces.display().to_string(), e))?;
                    run_plan_embedded(&plan, TraceTarget::Dir(traces)).await
                }
            }
        })
        .map_err(|e| {
            let code = match &e {
                SimError::Connect { .. } => EXIT_CONNECT,
                SimError::InvalidPlan(_) | SimError::PlanSyntax { .. } => EXIT_BAD_PLAN,
                SimError::Server(ServerError::Bind(..)) => EXIT_BIND,
                _ => EXIT_FAILED,
            };
            CliError::new(code, e.to_string())
        })?;

    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&a.out.join("outcomes.json"), &text)?;
    for run in summary
        .runs
        .iter()
        .filter(|r| r.status == RunStatus::Completed)
    {
        write_file(
            &a.out.join(format!("{}.swarm.csv", run.session_id)),
            &run.swarm_outcomes().to_csv(),
        )?;
    }
    if json {
        println!(
            "{}",
            serde_json::to_string(&summary).expect("summary serializes")
        );
    } else {
        for run in &summary.runs {
            match run.status {
                RunStatus::Completed => {
                    let decided = run
                        .outcomes
                        .iter()
                        .filter(|o| o.choice_id.is_some())
                        .count();
                    println!(
                        "{}: {decided}/{} questions reached consensus",
                        run.session_id,
                        run.outcomes.len()
                    );
                }
                RunStatus::Failed => println!(
                    "{}: failed: {}",
                    run.session_id,
                    run.error.as_deref().unwrap_or("unknown error")
                ),
            }
        }
        println!(
            "{} of {} runs completed",
            summary.completed,
            summary.runs.len()
        );
    }
    Ok(if summary.failed > 0 {
        EXIT_FAILED
    } else {
        EXIT_OK
    })
}

pub(super) fn replay(a: ReplayArgs, json: bool) -> Result<i32, CliError> {
    let events =
        read_trace_file(&a.trace).map_err(|e| CliError::new(EXIT_FAILED, e.to_string()))?;
    let report = replay_trace(&events).map_err(|e| CliError::new(EXIT_FAILED, e.to_string()))?;
    if json {
        println!(
            "{}",
            json!({
                "status": "ok",
                "session_id": report.session_id,
                "events": events.len(),
                "outcomes": report.outcomes,
            })
        );
    } else {
        println!(
            "trace ok: session {}, {} events, {} outcomes reproduced",
            report.session_id,
            events.len(),
            report.outcomes.len()
        );
    }
    Ok(EXIT_OK)
}

fn load_swarm(path: &Path) -> Result<SwarmOutcomes, CliError> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let events = read_trace_file(path)
            .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
        let outcomes = recorded_outcomes(&events);
        Ok(swarm_outcomes(
            outcomes
                .iter()
                .map(|o| (o.question_id.as_str(), o.result, o.choice_id)),
        ))
    } else {
        let file = File::open(path)
            .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
        SwarmOutcomes::from_csv(&path.display().to_string(), file).map_err(metrics_err)
    }
}

pub(super) fn report(a: ReportArgs, json: bool) -> Result<i32, CliError> {
    let raters = a
        .labels
        .iter()
        .map(|p| RaterLabels::from_path(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(metrics_err)?;
    let swarm = a.swarm.as_deref().map(load_swarm).transpose()?;
    let mut sors = vec![SorLabels::from_path(&a.sor).map_err(metrics_err)?];
    if let Some(p) = &a.sor2 {
        sors.push(SorLabels::from_path(p).map_err(metrics_err)?);
    }
    let votes = VoteSet::from_raters(a.cohort.clone(), &raters).map_err(metrics_err)?;
    let opts = ReportOptions {
        seed: a.seed,
        resamples: a.resamples,
        most_confident: match a.most_confident {
            MostConfidentArg::PerExam => MostConfidentMode::PerExam,
            MostConfidentArg::CohortOverall => MostConfidentMode::CohortOverall,
        },
    };
    let report = cohort_report(&votes, swarm.as_ref(), &sors, &opts).map_err(metrics_err)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(out) = &a.out {
        write_file(out, &text)?;
    }
    if json {
        println!(
            "{}",
            serde_json::to_string(&report).expect("report serializes")
        );
    } else {
        print!("{}", render_tables(&report));
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LabelKind {
    Rater,
    Reference,
    Swarm,
}

impl LabelKind {
    fn name(self) -> &'static str {
        match self {
            LabelKind::Rater => "rater",
            LabelKind::Reference => "reference",
            LabelKind::Swarm => "swarm",
        }
    }
}

fn sniff(path: &Path) -> Result<LabelKind, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::new(EXIT_FAILED, format!("{}: {e}", path.display())))?;
    let mut header = String::new();
    BufReader::new(file)
        .read_line(&mut header)
        .map_err(|e| CliError::new(EXIT_FAILED, format!("{}: {e}", path.display())))?;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    match cols.as_slice() {
        ["exam_id", "class3"] => Ok(LabelKind::Reference),
        ["exam_id", "result", "choice"] => Ok(LabelKind::Swarm),
        // rater files are the default; a bad header is reported by the parser
        _ => Ok(LabelKind::Rater),
    }
}

pub(super) fn validate(a: ValidateArgs, json: bool) -> Result<i32, CliError> {
    let mut checked = Vec::new();
    for path in &a.labels {
        let kind = sniff(path)?;
        let records = match kind {
            LabelKind::Rater => RaterLabels::from_path(path).map(|r| r.records.len()),
            LabelKind::Reference => SorLabels::from_path(path).map(|r| r.records.len()),
            LabelKind::Swarm => File::open(path)
                .map_err(|e| MetricsError::Io(path.display().to_string(), e))
                .and_then(|f| SwarmOutcomes::from_csv(&path.display().to_string(), f))
                .map(|s| s.records.len()),
        }
        .map_err(|e| CliError::new(EXIT_FAILED, e.to_string()))?;
        checked.push(
            json!({ "file": path.display().to_string(), "kind": kind.name(), "records": records }),
        );
        if !json {
            println!(
                "{}: {} file, {records} records ok",
                path.display(),
                kind.name()
            );
        }
    }
    if json {
        println!("{}", json!({ "status": "ok", "files": checked }));
    }
    Ok(EXIT_OK)
}
