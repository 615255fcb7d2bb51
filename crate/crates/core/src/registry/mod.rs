//! Central repository of users, PEs, and workflows with ownership and
//! composition associations.
//!
//! The store is one logical owner: callers serialize access through a lock
//! and every mutating operation can be persisted as a single JSON document
//! written atomically. Records are private to their owners: lookups only
//! range over the calling user's associated records.

mod auth;
mod persist;

pub use persist::StoreDoc;

use crate::dataflow::{PEDescriptor, WorkflowGraph};
use crate::hash::content_digest;
use crate::search::{
    summarize, Embedding, EmbeddingProvider, HitKind, RecordView, SearchError,
};
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, SystemTime};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("record not found")]
    NotFound,
    #[error("unauthorized")]
    Unauthorized,
    #[error("user name `{0}` already registered")]
    DuplicateUser(String),
    #[error("invalid login credentials")]
    InvalidCredentials,
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("store i/o failure: {0}")]
    Io(String),
}

/// Session lifetime for authentication tokens.
pub const TOKEN_TTL: Duration = Duration::from_secs(24 * 60 * 60);

/// A registered user. The password digest never leaves the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserRecord {
    pub user_id: u64,
    pub user_name: String,
    #[serde(rename = "passwordDigest")]
    pub(crate) password_digest: String,
}

/// A registered PE. `pe_code` is the base64 source payload; the stored
/// descriptor carries shape only (its source lives in `pe_code`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PERecord {
    pub pe_id: u64,
    pub pe_name: String,
    pub pe_code: String,
    pub pe_imports: Vec<String>,
    pub description: String,
    pub desc_embedding: Embedding,
    pub code_embedding: Embedding,
    pub descriptor: PEDescriptor,
}

impl PERecord {
    /// Decoded source payload.
    pub fn source_text(&self) -> Result<String, RegistryError> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(self.pe_code.as_bytes())
            .map_err(|_| RegistryError::InvalidDescriptor("peCode is not valid base64".into()))?;
        String::from_utf8(bytes)
            .map_err(|_| RegistryError::InvalidDescriptor("peCode is not valid UTF-8".into()))
    }

    /// Content digest of the source payload, the dedup identity together
    /// with `pe_name`.
    pub fn digest(&self) -> Result<String, RegistryError> {
        Ok(content_digest(self.source_text()?.as_bytes()))
    }
}

/// A registered workflow; `workflow_code` is the base64 graph document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkflowRecord {
    pub workflow_id: u64,
    pub workflow_name: String,
    pub entry_point: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub workflow_code: String,
}

impl WorkflowRecord {
    /// Decodes and validates the stored graph document.
    pub fn graph(&self) -> Result<WorkflowGraph, RegistryError> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(self.workflow_code.as_bytes())
            .map_err(|_| RegistryError::InvalidGraph("workflowCode is not valid base64".into()))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| RegistryError::InvalidGraph(format!("stored graph is invalid: {e}")))
    }
}

/// Many-to-many association tables, insertion ordered. On the wire this
/// is one flat array of tagged link rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Links {
    pub user_pes: Vec<(u64, u64)>,
    pub user_workflows: Vec<(u64, u64)>,
    pub workflow_pes: Vec<(u64, u64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
enum LinkRow {
    #[serde(rename_all = "camelCase")]
    UserPe { user_id: u64, pe_id: u64 },
    #[serde(rename_all = "camelCase")]
    UserWorkflow { user_id: u64, workflow_id: u64 },
    #[serde(rename_all = "camelCase")]
    WorkflowPe { workflow_id: u64, pe_id: u64 },
}

impl Serialize for Links {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut rows = Vec::with_capacity(
            self.user_pes.len() + self.user_workflows.len() + self.workflow_pes.len(),
        );
        rows.extend(
            self.user_pes.iter().map(|&(u, p)| LinkRow::UserPe { user_id: u, pe_id: p }),
        );
        rows.extend(self.user_workflows.iter().map(|&(u, w)| LinkRow::UserWorkflow {
            user_id: u,
            workflow_id: w,
        }));
        rows.extend(self.workflow_pes.iter().map(|&(w, p)| LinkRow::WorkflowPe {
            workflow_id: w,
            pe_id: p,
        }));
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Links {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<LinkRow>::deserialize(deserializer)?;
        let mut links = Links::default();
        for row in rows {
            match row {
                LinkRow::UserPe { user_id, pe_id } => links.user_pes.push((user_id, pe_id)),
                LinkRow::UserWorkflow { user_id, workflow_id } => {
                    links.user_workflows.push((user_id, workflow_id))
                }
                LinkRow::WorkflowPe { workflow_id, pe_id } => {
                    links.workflow_pes.push((workflow_id, pe_id))
                }
            }
        }
        Ok(links)
    }
}

fn link(table: &mut Vec<(u64, u64)>, pair: (u64, u64)) -> bool {
    if table.contains(&pair) {
        return false;
    }
    table.push(pair);
    true
}

/// Outcome of a removal: whether the record itself was deleted or only the
/// caller's ownership link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RemovalReport {
    pub id: u64,
    pub record_deleted: bool,
}

/// Lookup key accepted wherever a record reference is taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordKey {
    Id(u64),
    Name(String),
}

impl RecordKey {
    /// Numeric strings become id keys, everything else a name key.
    pub fn parse(raw: &str) -> Self {
        match raw.parse::<u64>() {
            Ok(id) => RecordKey::Id(id),
            Err(_) => RecordKey::Name(raw.to_string()),
        }
    }
}

struct Session {
    user_id: u64,
    expires_at: SystemTime,
}

/// The registry store.
pub struct Registry {
    users: Vec<UserRecord>,
    pes: Vec<PERecord>,
    workflows: Vec<WorkflowRecord>,
    links: Links,
    sessions: HashMap<String, Session>,
    next_user_id: u64,
    next_pe_id: u64,
    next_workflow_id: u64,
    provider: Arc<dyn EmbeddingProvider>,
    store_path: Option<PathBuf>,
}

impl Registry {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Registry {
            users: Vec::new(),
            pes: Vec::new(),
            workflows: Vec::new(),
            links: Links::default(),
            sessions: HashMap::new(),
            next_user_id: 1,
            next_pe_id: 1,
            next_workflow_id: 1,
            provider,
            store_path: None,
        }
    }

    /// Binds the registry to a store file; existing content is loaded,
    /// subsequent mutations are persisted.
    pub fn with_store_path(
        provider: Arc<dyn EmbeddingProvider>,
        path: impl Into<PathBuf>,
    ) -> Result<Self, RegistryError> {
        let path = path.into();
        let mut registry = Registry::new(provider);
        if path.exists() {
            let doc = persist::load(&path)?;
            registry.restore(doc);
        }
        registry.store_path = Some(path);
        Ok(registry)
    }

    pub fn provider(&self) -> &Arc<dyn EmbeddingProvider> {
        &self.provider
    }

    // ---- users & sessions ------------------------------------------------

    pub fn register_user(
        &mut self,
        user_name: &str,
        password: &str,
    ) -> Result<UserRecord, RegistryError> {
        if user_name.trim().is_empty() {
            return Err(RegistryError::InvalidDescriptor("user name must be nonempty".into()));
        }
        if self.users.iter().any(|u| u.user_name == user_name) {
            return Err(RegistryError::DuplicateUser(user_name.into()));
        }
        let record = UserRecord {
            user_id: self.next_user_id,
            user_name: user_name.into(),
            password_digest: auth::digest_password(password),
        };
        self.next_user_id += 1;
        self.users.push(record.clone());
        self.persist()?;
        Ok(record)
    }

    /// Verifies credentials and opens a session, returning the opaque token.
    pub fn authenticate(
        &mut self,
        user_name: &str,
        password: &str,
    ) -> Result<String, RegistryError> {
        let user = self
            .users
            .iter()
            .find(|u| u.user_name == user_name)
            .ok_or(RegistryError::InvalidCredentials)?;
        if !auth::verify_password(password, &user.password_digest) {
            return Err(RegistryError::InvalidCredentials);
        }
        let token = auth::fresh_token();
        self.sessions.insert(
            token.clone(),
            Session { user_id: user.user_id, expires_at: SystemTime::now() + TOKEN_TTL },
        );
        Ok(token)
    }

    /// Resolves a session token to its user, enforcing expiry.
    pub fn resolve_token(&self, token: &str) -> Result<&UserRecord, RegistryError> {
        let session = self.sessions.get(token).ok_or(RegistryError::Unauthorized)?;
        if session.expires_at < SystemTime::now() {
            return Err(RegistryError::Unauthorized);
        }
        self.users
            .iter()
            .find(|u| u.user_id == session.user_id)
            .ok_or(RegistryError::Unauthorized)
    }

    pub fn user_by_name(&self, user_name: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_name == user_name)
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    // ---- PEs ---------------------------------------------------------------

    /// Registers a PE for `user_id`. If a record with the same name and
    /// source digest already exists, no new record is created: the user is
    /// linked as an additional owner and the existing record returned.
    pub fn add_pe(
        &mut self,
        user_id: u64,
        descriptor: PEDescriptor,
        description: Option<String>,
    ) -> Result<PERecord, RegistryError> {
        self.require_user(user_id)?;
        let source = descriptor.source_text().to_string();
        let digest = content_digest(source.as_bytes());

        if let Some(existing) = self
            .pes
            .iter()
            .find(|pe| pe.pe_name == descriptor.name() && pe.digest().ok().as_deref() == Some(&digest))
            .map(|pe| pe.pe_id)
        {
            link(&mut self.links.user_pes, (user_id, existing));
            self.persist()?;
            return Ok(self.pe_by_id(existing).expect("record just found").clone());
        }

        let description = match description.filter(|d| !d.trim().is_empty()) {
            Some(d) => d,
            None => summarize(self.provider.as_ref(), &source, &descriptor)?,
        };
        let desc_embedding = self.provider.desc_embed(&description)?;
        let code_embedding = self.provider.code_embed(&source)?;

        let record = PERecord {
            pe_id: self.next_pe_id,
            pe_name: descriptor.name().to_string(),
            pe_code: base64::engine::general_purpose::STANDARD.encode(source.as_bytes()),
            pe_imports: descriptor.imports().to_vec(),
            description,
            desc_embedding,
            code_embedding,
            descriptor: descriptor.with_source(""),
        };
        self.next_pe_id += 1;
        link(&mut self.links.user_pes, (user_id, record.pe_id));
        self.pes.push(record.clone());
        self.persist()?;
        Ok(record)
    }

    fn pe_by_id(&self, pe_id: u64) -> Option<&PERecord> {
        self.pes.iter().find(|pe| pe.pe_id == pe_id)
    }

    fn owns_pe(&self, user_id: u64, pe_id: u64) -> bool {
        self.links.user_pes.contains(&(user_id, pe_id))
    }

    /// Resolves a PE among the caller's associated records; name lookup is
    /// exact after normalization.
    pub fn get_pe(&self, user_id: u64, key: &RecordKey) -> Result<&PERecord, RegistryError> {
        self.require_user(user_id)?;
        let found = match key {
            RecordKey::Id(id) => self
                .pes
                .iter()
                .find(|pe| pe.pe_id == *id && self.owns_pe(user_id, pe.pe_id)),
            RecordKey::Name(name) => {
                let wanted = crate::search::normalize_text(name);
                self.pes.iter().find(|pe| {
                    self.owns_pe(user_id, pe.pe_id)
                        && crate::search::normalize_text(&pe.pe_name) == wanted
                })
            }
        };
        found.ok_or(RegistryError::NotFound)
    }

    /// PEs associated with the caller, registration order.
    pub fn pes_for(&self, user_id: u64) -> Vec<&PERecord> {
        self.links
            .user_pes
            .iter()
            .filter(|(u, _)| *u == user_id)
            .filter_map(|(_, p)| self.pe_by_id(*p))
            .collect()
    }

    /// Drops the caller's ownership link; the record itself is deleted only
    /// when no owners remain, cascading workflow composition links.
    pub fn remove_pe(
        &mut self,
        user_id: u64,
        key: &RecordKey,
    ) -> Result<RemovalReport, RegistryError> {
        let pe_id = self.get_pe(user_id, key)?.pe_id;
        self.links.user_pes.retain(|&(u, p)| !(u == user_id && p == pe_id));
        let orphaned = !self.links.user_pes.iter().any(|&(_, p)| p == pe_id);
        if orphaned {
            self.pes.retain(|pe| pe.pe_id != pe_id);
            self.links.workflow_pes.retain(|&(_, p)| p != pe_id);
        }
        self.persist()?;
        Ok(RemovalReport { id: pe_id, record_deleted: orphaned })
    }

    // ---- workflows ---------------------------------------------------------

    /// Registers a workflow. Every node's PE is resolved or auto-registered
    /// first, then linked to the new record. Entry points are unique
    /// registry-wide; collisions get a `-k` suffix.
    pub fn add_workflow(
        &mut self,
        user_id: u64,
        graph: &WorkflowGraph,
        workflow_name: &str,
        description: Option<String>,
    ) -> Result<WorkflowRecord, RegistryError> {
        self.require_user(user_id)?;
        graph
            .validate()
            .map_err(|e| RegistryError::InvalidGraph(e.to_string()))?;
        if workflow_name.trim().is_empty() {
            return Err(RegistryError::InvalidGraph("workflow name must be nonempty".into()));
        }

        let mut pe_ids = Vec::new();
        for (_, descriptor) in graph.nodes() {
            let pe_id = if descriptor.source_text().is_empty() {
                // No payload shipped: the PE must already be registered.
                self.get_pe(user_id, &RecordKey::Name(descriptor.name().into()))
                    .map_err(|_| {
                        RegistryError::InvalidGraph(format!(
                            "node `{}` has no code and no registered PE with that name",
                            descriptor.name()
                        ))
                    })?
                    .pe_id
            } else {
                self.add_pe(user_id, descriptor.clone(), None)?.pe_id
            };
            pe_ids.push(pe_id);
        }

        let entry_point = self.unique_entry_point(workflow_name);
        let doc = serde_json::to_vec(graph)
            .map_err(|e| RegistryError::InvalidGraph(e.to_string()))?;
        let record = WorkflowRecord {
            workflow_id: self.next_workflow_id,
            workflow_name: workflow_name.into(),
            entry_point,
            description: description.filter(|d| !d.trim().is_empty()),
            workflow_code: base64::engine::general_purpose::STANDARD.encode(doc),
        };
        self.next_workflow_id += 1;
        link(&mut self.links.user_workflows, (user_id, record.workflow_id));
        for pe_id in pe_ids {
            link(&mut self.links.workflow_pes, (record.workflow_id, pe_id));
        }
        self.workflows.push(record.clone());
        self.persist()?;
        Ok(record)
    }

    fn unique_entry_point(&self, base: &str) -> String {
        if !self.workflows.iter().any(|w| w.entry_point == base) {
            return base.to_string();
        }
        let mut k = 2;
        loop {
            let candidate = format!("{base}-{k}");
            if !self.workflows.iter().any(|w| w.entry_point == candidate) {
                return candidate;
            }
            k += 1;
        }
    }

    fn workflow_by_id(&self, workflow_id: u64) -> Option<&WorkflowRecord> {
        self.workflows.iter().find(|w| w.workflow_id == workflow_id)
    }

    fn owns_workflow(&self, user_id: u64, workflow_id: u64) -> bool {
        self.links.user_workflows.contains(&(user_id, workflow_id))
    }

    pub fn get_workflow(
        &self,
        user_id: u64,
        key: &RecordKey,
    ) -> Result<&WorkflowRecord, RegistryError> {
        self.require_user(user_id)?;
        let found = match key {
            RecordKey::Id(id) => self
                .workflows
                .iter()
                .find(|w| w.workflow_id == *id && self.owns_workflow(user_id, w.workflow_id)),
            RecordKey::Name(name) => {
                let wanted = crate::search::normalize_text(name);
                self.workflows.iter().find(|w| {
                    self.owns_workflow(user_id, w.workflow_id)
                        && (crate::search::normalize_text(&w.workflow_name) == wanted
                            || crate::search::normalize_text(&w.entry_point) == wanted)
                })
            }
        };
        found.ok_or(RegistryError::NotFound)
    }

    /// Finds a workflow of the caller whose stored document matches `code`
    /// exactly; used to avoid re-registering identical inline graphs.
    pub fn find_workflow_by_code(&self, user_id: u64, code: &str) -> Option<&WorkflowRecord> {
        self.workflows
            .iter()
            .find(|w| self.owns_workflow(user_id, w.workflow_id) && w.workflow_code == code)
    }

    pub fn workflows_for(&self, user_id: u64) -> Vec<&WorkflowRecord> {
        self.links
            .user_workflows
            .iter()
            .filter(|(u, _)| *u == user_id)
            .filter_map(|(_, w)| self.workflow_by_id(*w))
            .collect()
    }

    pub fn remove_workflow(
        &mut self,
        user_id: u64,
        key: &RecordKey,
    ) -> Result<RemovalReport, RegistryError> {
        let workflow_id = self.get_workflow(user_id, key)?.workflow_id;
        self.links
            .user_workflows
            .retain(|&(u, w)| !(u == user_id && w == workflow_id));
        let orphaned = !self.links.user_workflows.iter().any(|&(_, w)| w == workflow_id);
        if orphaned {
            self.workflows.retain(|w| w.workflow_id != workflow_id);
            self.links.workflow_pes.retain(|&(w, _)| w != workflow_id);
        }
        self.persist()?;
        Ok(RemovalReport { id: workflow_id, record_deleted: orphaned })
    }

    /// PEs linked to a workflow, registration (link) order.
    pub fn pes_by_workflow(
        &self,
        user_id: u64,
        key: &RecordKey,
    ) -> Result<Vec<&PERecord>, RegistryError> {
        let workflow_id = self.get_workflow(user_id, key)?.workflow_id;
        Ok(self
            .links
            .workflow_pes
            .iter()
            .filter(|(w, _)| *w == workflow_id)
            .filter_map(|(_, p)| self.pe_by_id(*p))
            .collect())
    }

    /// Creates a workflow-PE composition link; idempotent.
    pub fn link_pe_workflow(
        &mut self,
        user_id: u64,
        workflow_id: u64,
        pe_id: u64,
    ) -> Result<bool, RegistryError> {
        self.get_workflow(user_id, &RecordKey::Id(workflow_id))?;
        self.get_pe(user_id, &RecordKey::Id(pe_id))?;
        let created = link(&mut self.links.workflow_pes, (workflow_id, pe_id));
        self.persist()?;
        Ok(created)
    }

    // ---- views -------------------------------------------------------------

    /// The caller's associated records as search views.
    pub fn views_for(&self, user_id: u64) -> Vec<RecordView<'_>> {
        let mut views = Vec::new();
        for pe in self.pes_for(user_id) {
            views.push(RecordView {
                kind: HitKind::Pe,
                id: pe.pe_id,
                name: &pe.pe_name,
                description: &pe.description,
                desc_embedding: Some(&pe.desc_embedding),
                code_embedding: Some(&pe.code_embedding),
            });
        }
        for workflow in self.workflows_for(user_id) {
            views.push(RecordView {
                kind: HitKind::Workflow,
                id: workflow.workflow_id,
                name: &workflow.workflow_name,
                description: workflow.description.as_deref().unwrap_or(""),
                desc_embedding: None,
                code_embedding: None,
            });
        }
        views
    }

    fn require_user(&self, user_id: u64) -> Result<(), RegistryError> {
        if self.users.iter().any(|u| u.user_id == user_id) {
            Ok(())
        } else {
            Err(RegistryError::Unauthorized)
        }
    }

    // ---- persistence -------------------------------------------------------

    fn persist(&self) -> Result<(), RegistryError> {
        if let Some(path) = &self.store_path {
            persist::save(path, &self.snapshot())?;
        }
        Ok(())
    }

    /// Serializable view of the full store (sessions excluded).
    pub fn snapshot(&self) -> StoreDoc {
        StoreDoc {
            users: self.users.clone(),
            pes: self.pes.clone(),
            workflows: self.workflows.clone(),
            links: self.links.clone(),
        }
    }

    /// Replaces store content from a snapshot; id counters resume past the
    /// highest persisted ids.
    pub fn restore(&mut self, doc: StoreDoc) {
        self.next_user_id = doc.users.iter().map(|u| u.user_id).max().unwrap_or(0) + 1;
        self.next_pe_id = doc.pes.iter().map(|p| p.pe_id).max().unwrap_or(0) + 1;
        self.next_workflow_id = doc.workflows.iter().map(|w| w.workflow_id).max().unwrap_or(0) + 1;
        self.users = doc.users;
        self.pes = doc.pes;
        self.workflows = doc.workflows;
        self.links = doc.links;
        self.sessions.clear();
    }
}
