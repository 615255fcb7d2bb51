//! The served route table. The router registers handlers from these
//! constants, so the golden conformance test and the live routes cannot
//! drift apart.

pub const PE_ADD: (&str, &str) = ("POST", "/registry/{user}/pe/add");
pub const PE_ALL: (&str, &str) = ("GET", "/registry/{user}/pe/all");
pub const PE_BY_ID: (&str, &str) = ("GET", "/registry/{user}/pe/id/{id}");
pub const PE_BY_NAME: (&str, &str) = ("GET", "/registry/{user}/pe/name/{name}");
pub const PE_REMOVE_BY_ID: (&str, &str) = ("DELETE", "/registry/{user}/pe/remove/id/{id}");
pub const PE_REMOVE_BY_NAME: (&str, &str) = ("DELETE", "/registry/{user}/pe/remove/name/{name}");
pub const WORKFLOW_ADD: (&str, &str) = ("POST", "/registry/{user}/workflow/add");
pub const WORKFLOW_ALL: (&str, &str) = ("GET", "/registry/{user}/workflow/all");
pub const WORKFLOW_BY_ID: (&str, &str) = ("GET", "/registry/{user}/workflow/id/{id}");
pub const WORKFLOW_BY_NAME: (&str, &str) = ("GET", "/registry/{user}/workflow/name/{name}");
pub const WORKFLOW_PES_BY_ID: (&str, &str) = ("GET", "/registry/{user}/workflow/pes/id/{id}");
pub const WORKFLOW_PES_BY_NAME: (&str, &str) =
    ("GET", "/registry/{user}/workflow/pes/name/{name}");
pub const WORKFLOW_REMOVE_BY_ID: (&str, &str) =
    ("DELETE", "/registry/{user}/workflow/remove/id/{id}");
pub const WORKFLOW_REMOVE_BY_NAME: (&str, &str) =
    ("DELETE", "/registry/{user}/workflow/remove/name/{name}");
pub const WORKFLOW_LINK_PE: (&str, &str) =
    ("PUT", "/registry/{user}/workflow/{workflowId}/pe/{peId}");
pub const EXECUTION_RUN: (&str, &str) = ("POST", "/execution/{user}/run");
pub const REGISTRY_ALL: (&str, &str) = ("GET", "/registry/{user}/all");
pub const REGISTRY_SEARCH: (&str, &str) = ("GET", "/registry/{user}/search/{search}/type/{type}");
pub const AUTH_ALL: (&str, &str) = ("GET", "/auth/all");
pub const AUTH_LOGIN: (&str, &str) = ("POST", "/auth/login");
pub const AUTH_REGISTER: (&str, &str) = ("POST", "/auth/register");

/// Every route as `(method, path template)`, grouped by controller:
/// PE, workflow, execution, registry, user.
pub const ENDPOINTS: &[(&str, &str)] = &[
    PE_ADD,
    PE_ALL,
    PE_BY_ID,
    PE_BY_NAME,
    PE_REMOVE_BY_ID,
    PE_REMOVE_BY_NAME,
    WORKFLOW_ADD,
    WORKFLOW_ALL,
    WORKFLOW_BY_ID,
    WORKFLOW_BY_NAME,
    WORKFLOW_PES_BY_ID,
    WORKFLOW_PES_BY_NAME,
    WORKFLOW_REMOVE_BY_ID,
    WORKFLOW_REMOVE_BY_NAME,
    WORKFLOW_LINK_PE,
    EXECUTION_RUN,
    REGISTRY_ALL,
    REGISTRY_SEARCH,
    AUTH_ALL,
    AUTH_LOGIN,
    AUTH_REGISTER,
];
