//! Command implementations and terminal rendering.

use crate::api::{encode_segment, Api};
use crate::pefile::parse_pe_source;
use crate::session::{self, Session};
use anyhow::{bail, Context as _, Result};
use base64::Engine as _;
use laminar_core::dataflow::WorkflowGraph;
use laminar_core::registry::{PERecord, RemovalReport, WorkflowRecord};
use laminar_core::server::wire::*;
use laminar_core::server::{deserialize_payload, serialize_payload};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub fn register(addr: &str, user: &str, password: &str) -> Result<()> {
    let api = Api::new(addr, None);
    let record: UserWire = api.post(
        "/auth/register",
        &json!({"user_name": user, "user_password": password}),
    )?;
    println!("registered user {} (id {})", record.user_name, record.user_id);
    Ok(())
}

pub fn login(addr: &str, user: &str, password: &str) -> Result<()> {
    let api = Api::new(addr, None);
    let response: LoginResponse = api.post(
        "/auth/login",
        &json!({"user_name": user, "user_password": password}),
    )?;
    session::save(&Session {
        addr: addr.to_string(),
        user: response.user_name.clone(),
        token: response.token,
    })?;
    println!("logged in as {}", response.user_name);
    Ok(())
}

/// Session-backed client for everything after login.
pub fn client(addr_override: Option<&str>) -> Result<(Api, Session)> {
    let session = session::load()?;
    let addr = addr_override.unwrap_or(&session.addr);
    Ok((Api::new(addr, Some(session.token.clone())), session))
}

pub fn register_pe(api: &Api, session: &Session, file: &Path, description: Option<&str>) -> Result<()> {
    let text = std::fs::read_to_string(file)
        .with_context(|| format!("cannot read {}", file.display()))?;
    let descriptor = parse_pe_source(&text)?;
    let mut body = json!({
        "name": descriptor.name(),
        "code": serialize_payload(&text),
        "imports": descriptor.imports(),
        "descriptor": descriptor,
    });
    if let Some(description) = description {
        body["description"] = json!(description);
    }
    let record: PERecord =
        api.post(&format!("/registry/{}/pe/add", session.user), &body)?;
    println!("registered PE {} (peId {})", record.pe_name, record.pe_id);
    println!("description: {}", record.description);
    Ok(())
}

pub fn register_workflow(
    api: &Api,
    session: &Session,
    file: &Path,
    name: Option<&str>,
    description: Option<&str>,
) -> Result<()> {
    let text = std::fs::read_to_string(file)
        .with_context(|| format!("cannot read {}", file.display()))?;
    let graph: WorkflowGraph =
        serde_json::from_str(&text).context("graph document is invalid")?;
    let name = name.unwrap_or_else(|| graph.name());
    let mut body = json!({"name": name, "graph": graph});
    if let Some(description) = description.or(graph.description()) {
        body["description"] = json!(description);
    }
    let record: WorkflowRecord =
        api.post(&format!("/registry/{}/workflow/add", session.user), &body)?;
    println!(
        "registered workflow {} (workflowId {}, entryPoint {})",
        record.workflow_name, record.workflow_id, record.entry_point
    );
    Ok(())
}

fn keyed_path(prefix: &str, reference: &str) -> String {
    if reference.parse::<u64>().is_ok() {
        format!("{prefix}/id/{reference}")
    } else {
        format!("{prefix}/name/{}", encode_segment(reference))
    }
}

pub fn remove_pe(api: &Api, session: &Session, reference: &str) -> Result<()> {
    let path = keyed_path(&format!("/registry/{}/pe/remove", session.user), reference);
    let report: RemovalReport = api.delete(&path)?;
    if report.record_deleted {
        println!("removed PE {reference} (record deleted)");
    } else {
        println!("removed PE {reference} (still owned by other users)");
    }
    Ok(())
}

pub fn remove_workflow(api: &Api, session: &Session, reference: &str) -> Result<()> {
    let path = keyed_path(&format!("/registry/{}/workflow/remove", session.user), reference);
    let report: RemovalReport = api.delete(&path)?;
    if report.record_deleted {
        println!("removed workflow {reference} (record deleted)");
    } else {
        println!("removed workflow {reference} (still owned by other users)");
    }
    Ok(())
}

pub fn get_pe(api: &Api, session: &Session, reference: &str, out_dir: &Path) -> Result<()> {
    let path = keyed_path(&format!("/registry/{}/pe", session.user), reference);
    let record: PERecord = api.get(&path)?;
    let source = deserialize_payload(&record.pe_code)
        .map_err(|e| anyhow::anyhow!("stored code is unreadable: {}", e.details))?;
    std::fs::create_dir_all(out_dir)?;
    let target = out_dir.join(format!("{}.pe", record.pe_name));
    std::fs::write(&target, source)?;
    println!("PE {} (peId {}) written to {}", record.pe_name, record.pe_id, target.display());
    println!("description: {}", record.description);
    Ok(())
}

pub fn get_workflow(api: &Api, session: &Session, reference: &str, out_dir: &Path) -> Result<()> {
    let path = keyed_path(&format!("/registry/{}/workflow", session.user), reference);
    let record: WorkflowRecord = api.get(&path)?;
    let doc = deserialize_payload(&record.workflow_code)
        .map_err(|e| anyhow::anyhow!("stored graph is unreadable: {}", e.details))?;
    std::fs::create_dir_all(out_dir)?;
    let target = out_dir.join(format!("{}.graph.json", record.entry_point));
    std::fs::write(&target, doc)?;
    println!(
        "workflow {} (workflowId {}) written to {}",
        record.workflow_name,
        record.workflow_id,
        target.display()
    );
    Ok(())
}

pub fn pes_by_workflow(api: &Api, session: &Session, reference: &str) -> Result<()> {
    let path = keyed_path(&format!("/registry/{}/workflow/pes", session.user), reference);
    let response: PeRecordsResponse = api.get(&path)?;
    println!("{:<6} {:<24} description", "peId", "peName");
    for pe in response.pes {
        println!("{:<6} {:<24} {}", pe.pe_id, pe.pe_name, pe.description);
    }
    Ok(())
}

pub fn search(
    api: &Api,
    session: &Session,
    text: &str,
    scope: &str,
    query_type: &str,
) -> Result<()> {
    let path = format!(
        "/registry/{}/search/{}/type/{}?query_type={}",
        session.user,
        encode_segment(text),
        scope,
        query_type
    );
    let response: SearchResponse = api.get(&path)?;
    println!("{:<9} {:<5} {:<24} {:<8} description", "kind", "id", "name", "score");
    for hit in response.hits {
        let kind = match hit.kind {
            laminar_core::search::HitKind::Pe => "pe",
            laminar_core::search::HitKind::Workflow => "workflow",
        };
        println!(
            "{:<9} {:<5} {:<24} {:<8.5} {}",
            kind, hit.id, hit.name, hit.score, hit.description
        );
    }
    Ok(())
}

pub fn describe(api: &Api, session: &Session, reference: &str) -> Result<()> {
    let pe_path = keyed_path(&format!("/registry/{}/pe", session.user), reference);
    if let Ok(record) = api.get::<PERecord>(&pe_path) {
        println!("{} ({})", record.pe_name, record.descriptor.kind().as_str());
        println!("description: {}", record.description);
        let inputs: Vec<&str> =
            record.descriptor.inputs().iter().map(|i| i.port.name.as_str()).collect();
        let outputs: Vec<&str> =
            record.descriptor.outputs().iter().map(|o| o.name.as_str()).collect();
        println!("inputs: [{}] outputs: [{}]", inputs.join(", "), outputs.join(", "));
        return Ok(());
    }
    let wf_path = keyed_path(&format!("/registry/{}/workflow", session.user), reference);
    let record: WorkflowRecord = api
        .get(&wf_path)
        .with_context(|| format!("no PE or workflow named `{reference}`"))?;
    println!("{} (workflow, entryPoint {})", record.workflow_name, record.entry_point);
    println!("description: {}", record.description.unwrap_or_else(|| "(none)".into()));
    Ok(())
}

pub fn list(api: &Api, session: &Session) -> Result<()> {
    let response: ListAllResponse = api.get(&format!("/registry/{}/all", session.user))?;
    println!("{} PEs / {} workflows", response.pes.len(), response.workflows.len());
    for pe in &response.pes {
        println!("pe       {:<5} {:<24} {}", pe.pe_id, pe.pe_name, pe.description);
    }
    for workflow in &response.workflows {
        println!(
            "workflow {:<5} {:<24} {}",
            workflow.workflow_id,
            workflow.entry_point,
            workflow.description.as_deref().unwrap_or("")
        );
    }
    Ok(())
}

pub struct RunArgs<'a> {
    pub reference: &'a str,
    pub input: u64,
    pub process: &'a str,
    pub num: Option<u64>,
    pub seed: Option<u64>,
    pub resources: bool,
}

/// Runs a workflow and prints the captured stdout and terminal outputs.
/// Returns whether the run completed, for the process exit code.
pub fn run(api: &Api, session: &Session, args: &RunArgs<'_>) -> Result<bool> {
    let workflow: Value = if Path::new(args.reference).is_file() {
        let text = std::fs::read_to_string(args.reference)?;
        let graph: WorkflowGraph =
            serde_json::from_str(&text).context("graph document is invalid")?;
        serde_json::to_value(&graph)?
    } else if let Ok(id) = args.reference.parse::<u64>() {
        json!(id)
    } else {
        json!(args.reference)
    };

    let mut run_args = serde_json::Map::new();
    if let Some(num) = args.num {
        run_args.insert("num".into(), json!(num));
    }
    if let Some(seed) = args.seed {
        run_args.insert("seed".into(), json!(seed));
    }
    let mut body = json!({
        "workflow": workflow,
        "input": args.input,
        "process": args.process,
        "args": run_args,
    });
    if args.resources {
        body["resources"] = json!(bundle_resources(Path::new("resources"))?);
    }

    let result: laminar_core::engine::RunResult =
        api.post(&format!("/execution/{}/run", session.user), &body)?;
    for line in &result.stdout {
        println!("{line}");
    }
    if !result.outputs.is_empty() {
        println!("outputs:");
        for (node, values) in &result.outputs {
            println!("  {node}: {}", serde_json::to_string(values)?);
        }
    }
    match result.status {
        laminar_core::engine::RunStatus::Completed => Ok(true),
        laminar_core::engine::RunStatus::Failed => {
            eprintln!("run failed: {}", result.error.unwrap_or_else(|| "unknown".into()));
            Ok(false)
        }
    }
}

/// Recursively encodes `./resources` as base64 bundle entries with
/// forward-slash relative paths.
pub fn bundle_resources(root: &Path) -> Result<Vec<Value>> {
    if !root.is_dir() {
        bail!("--resources requires a ./resources directory");
    }
    let mut entries = Vec::new();
    let mut paths: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.file_type().is_file())
        .map(|entry| entry.into_path())
        .collect();
    paths.sort();
    for path in paths {
        let relative = path
            .strip_prefix(root)
            .expect("walkdir yields children of root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let bytes = std::fs::read(&path)?;
        entries.push(json!({
            "path": relative,
            "content": base64::engine::general_purpose::STANDARD.encode(&bytes),
        }));
    }
    Ok(entries)
}
