//! Request and response bodies shared between the server and clients.

use crate::dataflow::PEDescriptor;
use crate::engine::ResourceBundle;
use crate::registry::{PERecord, WorkflowRecord};
use crate::search::SearchHit;
use crate::Value;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CredentialsBody {
    pub user_name: String,
    pub user_password: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserWire {
    pub user_id: u64,
    pub user_name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LoginResponse {
    pub token: String,
    pub user_id: u64,
    pub user_name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsersResponse {
    pub users: Vec<UserWire>,
}

/// Body of `pe/add`: the payload travels base64-encoded in `code`, the
/// descriptor carries shape (kind, ports, groupings, stateful).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeAddBody {
    pub name: String,
    pub code: String,
    #[serde(default)]
    pub imports: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub descriptor: PEDescriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PeSummary {
    pub pe_id: u64,
    pub pe_name: String,
    pub description: String,
}

impl From<&PERecord> for PeSummary {
    fn from(record: &PERecord) -> Self {
        PeSummary {
            pe_id: record.pe_id,
            pe_name: record.pe_name.clone(),
            description: record.description.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PesResponse {
    pub pes: Vec<PeSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeRecordsResponse {
    pub pes: Vec<PERecord>,
}

/// Body of `workflow/add`. `code`, when present, must be the base64 graph
/// document; the server re-derives it from `graph` otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkflowAddBody {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub graph: crate::dataflow::WorkflowGraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkflowSummary {
    pub workflow_id: u64,
    pub workflow_name: String,
    pub entry_point: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl From<&WorkflowRecord> for WorkflowSummary {
    fn from(record: &WorkflowRecord) -> Self {
        WorkflowSummary {
            workflow_id: record.workflow_id,
            workflow_name: record.workflow_name.clone(),
            entry_point: record.entry_point.clone(),
            description: record.description.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkflowsResponse {
    pub workflows: Vec<WorkflowSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ListAllResponse {
    pub pes: Vec<PeSummary>,
    pub workflows: Vec<WorkflowSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkResponse {
    pub workflow_id: u64,
    pub pe_id: u64,
    pub linked: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResponse {
    pub hits: Vec<SearchHit>,
}

/// Execution envelope: `workflow` is a registered name, a numeric id, or an
/// inline graph document; `input` is the iteration count; `args` must carry
/// `num` (the process count) for parallel mappings and may carry `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunBody {
    pub workflow: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<serde_json::Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resources: Option<ResourceBundle>,
}
