//! Command-to-endpoint map: every CLI command drives exactly one route.
//! Commands that accept a name-or-id reference use the name variant here
//! and switch to the id variant when the reference is numeric.

use laminar_core::server::endpoints;

pub const COMMAND_ROUTES: &[(&str, (&str, &str))] = &[
    ("register", endpoints::AUTH_REGISTER),
    ("login", endpoints::AUTH_LOGIN),
    ("register-pe", endpoints::PE_ADD),
    ("register-workflow", endpoints::WORKFLOW_ADD),
    ("remove-pe", endpoints::PE_REMOVE_BY_NAME),
    ("remove-workflow", endpoints::WORKFLOW_REMOVE_BY_NAME),
    ("get-pe", endpoints::PE_BY_NAME),
    ("get-workflow", endpoints::WORKFLOW_BY_NAME),
    ("pes-by-workflow", endpoints::WORKFLOW_PES_BY_NAME),
    ("search", endpoints::REGISTRY_SEARCH),
    ("describe", endpoints::PE_BY_NAME),
    ("list", endpoints::REGISTRY_ALL),
    ("run", endpoints::EXECUTION_RUN),
];
