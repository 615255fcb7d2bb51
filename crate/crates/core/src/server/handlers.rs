//! Route handlers. Registry and engine work is blocking, so every handler
//! body runs on the blocking pool; the registry lock serializes store
//! access per the store's single-owner model.

use super::error::ApiError;
use super::payload::deserialize_payload;
use super::wire::*;
use super::AppState;
use crate::dataflow::{compile, MappingId, WorkflowGraph};
use crate::engine::RunOptions;
use crate::registry::{RecordKey, Registry};
use crate::search::{
    code_completion_search, semantic_search, text_search, SearchError, SearchScope,
};
use crate::Value;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;

type Handler = Result<Response, ApiError>;

async fn blocking<T, F>(task: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(task)
        .await
        .map_err(|e| ApiError::new("Internal", StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn body<T>(extracted: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    match extracted {
        Ok(Json(value)) => Ok(value),
        Err(rejection) => Err(ApiError::validation(rejection.to_string())),
    }
}

fn bearer_token(headers: &HeaderMap) -> Option<String> {
    let raw = headers.get(axum::http::header::AUTHORIZATION)?.to_str().ok()?;
    Some(raw.strip_prefix("Bearer ").unwrap_or(raw).trim().to_string())
}

/// Resolves the caller's token and checks it against the `{user}` path
/// segment. Any mismatch is a 401 and leaves the store untouched.
fn authorize(registry: &Registry, headers: &HeaderMap, path_user: &str) -> Result<u64, ApiError> {
    let token =
        bearer_token(headers).ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
    let user = registry.resolve_token(&token)?;
    if user.user_name != path_user {
        return Err(ApiError::unauthorized(format!(
            "token does not belong to user `{path_user}`"
        )));
    }
    Ok(user.user_id)
}

pub async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

// ---- user controller -------------------------------------------------------

pub async fn auth_register(
    State(state): State<AppState>,
    payload: Result<Json<CredentialsBody>, JsonRejection>,
) -> Handler {
    let credentials = body(payload)?;
    let user = blocking(move || {
        let mut registry = state.registry.lock().expect("registry lock");
        Ok(registry.register_user(&credentials.user_name, &credentials.user_password)?)
    })
    .await?;
    let wire = UserWire { user_id: user.user_id, user_name: user.user_name };
    Ok((StatusCode::CREATED, Json(wire)).into_response())
}

pub async fn auth_login(
    State(state): State<AppState>,
    payload: Result<Json<CredentialsBody>, JsonRejection>,
) -> Handler {
    let credentials = body(payload)?;
    let response = blocking(move || {
        let mut registry = state.registry.lock().expect("registry lock");
        let token = registry.authenticate(&credentials.user_name, &credentials.user_password)?;
        let user = registry.user_by_name(&credentials.user_name).expect("user just verified");
        Ok(LoginResponse { token, user_id: user.user_id, user_name: user.user_name.clone() })
    })
    .await?;
    Ok(Json(response).into_response())
}

pub async fn auth_all(State(state): State<AppState>, headers: HeaderMap) -> Handler {
    let users = blocking(move || {
        let registry = state.registry.lock().expect("registry lock");
        let token =
            bearer_token(&headers).ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        registry.resolve_token(&token)?;
        Ok(registry
            .users()
            .iter()
            .map(|u| UserWire { user_id: u.user_id, user_name: u.user_name.clone() })
            .collect::<Vec<_>>())
    })
    .await?;
    Ok(Json(UsersResponse { users }).into_response())
}

// ---- PE controller -----------------------------------------------------------

pub async fn pe_add(
    State(state): State<AppState>,
    Path(user): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<PeAddBody>, JsonRejection>,
) -> Handler {
    let request = body(payload)?;
    let record = blocking(move || {
        let source = deserialize_payload(&request.code)?;
        if request.descriptor.name() != request.name {
            return Err(ApiError::validation(format!(
                "descriptor name `{}` does not match `{}`",
                request.descriptor.name(),
                request.name
            ))
            .with_parameter("name", "must match descriptor.name"));
        }
        let mut descriptor = request.descriptor.clone().with_source(source);
        if !request.imports.is_empty() {
            descriptor = descriptor.with_imports(request.imports.clone());
        }
        let mut registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry.add_pe(user_id, descriptor, request.description.clone())?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

pub async fn pe_all(
    State(state): State<AppState>,
    Path(user): Path<String>,
    headers: HeaderMap,
) -> Handler {
    let pes = blocking(move || {
        let registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry.pes_for(user_id).into_iter().map(PeSummary::from).collect::<Vec<_>>())
    })
    .await?;
    Ok(Json(PesResponse { pes }).into_response())
}

async fn pe_get(state: AppState, user: String, key: RecordKey, headers: HeaderMap) -> Handler {
    let record = blocking(move || {
        let registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry.get_pe(user_id, &key)?.clone())
    })
    .await?;
    Ok(Json(record).into_response())
}

pub async fn pe_by_id(
    State(state): State<AppState>,
    Path((user, id)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    let id = parse_id(&id)?;
    pe_get(state, user, RecordKey::Id(id), headers).await
}

pub async fn pe_by_name(
    State(state): State<AppState>,
    Path((user, name)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    pe_get(state, user, RecordKey::Name(name), headers).await
}

async fn pe_remove(state: AppState, user: String, key: RecordKey, headers: HeaderMap) -> Handler {
    let report = blocking(move || {
        let mut registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry.remove_pe(user_id, &key)?)
    })
    .await?;
    Ok(Json(report).into_response())
}

pub async fn pe_remove_by_id(
    State(state): State<AppState>,
    Path((user, id)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    let id = parse_id(&id)?;
    pe_remove(state, user, RecordKey::Id(id), headers).await
}

pub async fn pe_remove_by_name(
    State(state): State<AppState>,
    Path((user, name)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    pe_remove(state, user, RecordKey::Name(name), headers).await
}

// ---- workflow controller -----------------------------------------------------

pub async fn workflow_add(
    State(state): State<AppState>,
    Path(user): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<WorkflowAddBody>, JsonRejection>,
) -> Handler {
    let request = body(payload)?;
    let record = blocking(move || {
        let mut registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry.add_workflow(
            user_id,
            &request.graph,
            &request.name,
            request.description.clone(),
        )?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

pub async fn workflow_all(
    State(state): State<AppState>,
    Path(user): Path<String>,
    headers: HeaderMap,
) -> Handler {
    let workflows = blocking(move || {
        let registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry
            .workflows_for(user_id)
            .into_iter()
            .map(WorkflowSummary::from)
            .collect::<Vec<_>>())
    })
    .await?;
    Ok(Json(WorkflowsResponse { workflows }).into_response())
}

async fn workflow_get(
    state: AppState,
    user: String,
    key: RecordKey,
    headers: HeaderMap,
) -> Handler {
    let record = blocking(move || {
        let registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry.get_workflow(user_id, &key)?.clone())
    })
    .await?;
    Ok(Json(record).into_response())
}

pub async fn workflow_by_id(
    State(state): State<AppState>,
    Path((user, id)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    let id = parse_id(&id)?;
    workflow_get(state, user, RecordKey::Id(id), headers).await
}

pub async fn workflow_by_name(
    State(state): State<AppState>,
    Path((user, name)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    workflow_get(state, user, RecordKey::Name(name), headers).await
}

async fn workflow_pes(
    state: AppState,
    user: String,
    key: RecordKey,
    headers: HeaderMap,
) -> Handler {
    let pes = blocking(move || {
        let registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry
            .pes_by_workflow(user_id, &key)?
            .into_iter()
            .cloned()
            .collect::<Vec<_>>())
    })
    .await?;
    Ok(Json(PeRecordsResponse { pes }).into_response())
}

pub async fn workflow_pes_by_id(
    State(state): State<AppState>,
    Path((user, id)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    let id = parse_id(&id)?;
    workflow_pes(state, user, RecordKey::Id(id), headers).await
}

pub async fn workflow_pes_by_name(
    State(state): State<AppState>,
    Path((user, name)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    workflow_pes(state, user, RecordKey::Name(name), headers).await
}

async fn workflow_remove(
    state: AppState,
    user: String,
    key: RecordKey,
    headers: HeaderMap,
) -> Handler {
    let report = blocking(move || {
        let mut registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry.remove_workflow(user_id, &key)?)
    })
    .await?;
    Ok(Json(report).into_response())
}

pub async fn workflow_remove_by_id(
    State(state): State<AppState>,
    Path((user, id)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    let id = parse_id(&id)?;
    workflow_remove(state, user, RecordKey::Id(id), headers).await
}

pub async fn workflow_remove_by_name(
    State(state): State<AppState>,
    Path((user, name)): Path<(String, String)>,
    headers: HeaderMap,
) -> Handler {
    workflow_remove(state, user, RecordKey::Name(name), headers).await
}

pub async fn workflow_link_pe(
    State(state): State<AppState>,
    Path((user, workflow_id, pe_id)): Path<(String, String, String)>,
    headers: HeaderMap,
) -> Handler {
    let workflow_id = parse_id(&workflow_id)?;
    let pe_id = parse_id(&pe_id)?;
    let linked = blocking(move || {
        let mut registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(registry.link_pe_workflow(user_id, workflow_id, pe_id)?)
    })
    .await?;
    Ok(Json(LinkResponse { workflow_id, pe_id, linked }).into_response())
}

// ---- registry controller -------------------------------------------------------

pub async fn registry_all(
    State(state): State<AppState>,
    Path(user): Path<String>,
    headers: HeaderMap,
) -> Handler {
    let response = blocking(move || {
        let registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        Ok(ListAllResponse {
            pes: registry.pes_for(user_id).into_iter().map(PeSummary::from).collect(),
            workflows: registry
                .workflows_for(user_id)
                .into_iter()
                .map(WorkflowSummary::from)
                .collect(),
        })
    })
    .await?;
    Ok(Json(response).into_response())
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    #[serde(default)]
    query_type: Option<String>,
}

pub async fn registry_search(
    State(state): State<AppState>,
    Path((user, search, scope)): Path<(String, String, String)>,
    Query(params): Query<SearchParams>,
    headers: HeaderMap,
) -> Handler {
    let hits = blocking(move || {
        let registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, &headers, &user)?;
        let scope = SearchScope::parse(&scope).map_err(ApiError::from)?;
        let views = registry.views_for(user_id);
        let provider = registry.provider().as_ref();
        let query_type = params.query_type.as_deref().unwrap_or("text");
        let hits = match (query_type, scope) {
            // Code snippet queries rank PE code embeddings.
            ("code", SearchScope::Pe | SearchScope::Both) => {
                code_completion_search(&views, provider, &search).map_err(ApiError::from)?
            }
            ("code", SearchScope::Workflow) => {
                return Err(ApiError::from(SearchError::InvalidScope(
                    "code queries apply to PEs".into(),
                )))
            }
            // Natural-language PE queries rank description embeddings;
            // workflow and mixed scopes match text on names/descriptions.
            ("text", SearchScope::Pe) => {
                semantic_search(&views, provider, &search).map_err(ApiError::from)?
            }
            ("text", scope) => text_search(&views, &search, scope),
            (other, _) => {
                return Err(ApiError::validation(format!(
                    "query_type must be `text` or `code`, got `{other}`"
                ))
                .with_parameter("query_type", other))
            }
        };
        Ok(hits)
    })
    .await?;
    Ok(Json(SearchResponse { hits }).into_response())
}

// ---- execution controller --------------------------------------------------------

pub async fn execution_run(
    State(state): State<AppState>,
    Path(user): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<RunBody>, JsonRejection>,
) -> Handler {
    let request = body(payload)?;
    let result = blocking(move || run_workflow(&state, &user, &headers, request)).await?;
    Ok(Json(result).into_response())
}

fn run_workflow(
    state: &AppState,
    user: &str,
    headers: &HeaderMap,
    request: RunBody,
) -> Result<crate::engine::RunResult, ApiError> {
    let mapping = MappingId::parse(request.process.as_deref().unwrap_or("SIMPLE"))
        .map_err(ApiError::from)?;
    let args = request.args.clone().unwrap_or_default();

    let total_processes = match mapping {
        MappingId::Simple => 1,
        _ => args
            .get("num")
            .and_then(Value::as_u64)
            .ok_or_else(|| {
                ApiError::validation("parallel mappings require args.num (process count)")
                    .with_parameter("args.num", "missing or not a positive integer")
            })? as usize,
    };

    // Resolve the workflow: registered name or id, or an inline graph that
    // gets registered (workflow and PEs) as a side effect of the run.
    let graph: WorkflowGraph = {
        let mut registry = state.registry.lock().expect("registry lock");
        let user_id = authorize(&registry, headers, user)?;
        match &request.workflow {
            Value::Number(id) => {
                let id = id.as_u64().ok_or_else(|| {
                    ApiError::validation("workflow id must be a nonnegative integer")
                })?;
                registry.get_workflow(user_id, &RecordKey::Id(id))?.graph()?
            }
            Value::String(reference) => {
                registry.get_workflow(user_id, &RecordKey::parse(reference))?.graph()?
            }
            inline @ Value::Object(_) => {
                let graph: WorkflowGraph = serde_json::from_value(inline.clone())
                    .map_err(|e| ApiError::validation(format!("invalid inline graph: {e}")))?;
                let name =
                    if graph.name().trim().is_empty() { "workflow" } else { graph.name() };
                let doc = serde_json::to_string(&graph)
                    .map_err(|e| ApiError::validation(e.to_string()))?;
                let code = super::payload::serialize_payload(&doc);
                if registry.find_workflow_by_code(user_id, &code).is_none() {
                    let description = graph.description().map(String::from);
                    registry.add_workflow(user_id, &graph, name, description)?;
                }
                graph
            }
            _ => {
                return Err(ApiError::validation(
                    "workflow must be a name, an id, or an inline graph object",
                ))
            }
        }
    };

    // `num` must cover the node count whenever it is supplied, even for
    // mappings that do not consume it.
    if let Some(num) = args.get("num").and_then(Value::as_u64) {
        if (num as usize) < graph.node_count() {
            return Err(ApiError::from(crate::dataflow::GraphError::TooFewProcesses {
                required: graph.node_count(),
                given: num as usize,
            }));
        }
    }

    let plan = compile(&graph, mapping, total_processes).map_err(ApiError::from)?;
    let seed = args.get("seed").and_then(Value::as_u64).unwrap_or(0);
    let options = RunOptions { seed, args, ..RunOptions::default() };
    let iterations = request.input.unwrap_or(0);
    let result = state
        .engine
        .execute(&plan, iterations, request.resources.as_ref(), &options)
        .map_err(ApiError::from)?;
    Ok(result)
}

fn parse_id(raw: &str) -> Result<u64, ApiError> {
    raw.parse::<u64>().map_err(|_| {
        ApiError::validation(format!("`{raw}` is not a numeric id")).with_parameter("id", raw)
    })
}
