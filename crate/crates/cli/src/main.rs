//! `laminar` — command-line client for the execution server.

use clap::{Parser, Subcommand};
use laminar_cli::commands::{self, RunArgs};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "laminar", about = "Client for the laminar registry and execution server")]
struct Cli {
    /// Server address; defaults to the session's address, then
    /// $LAMINAR_ADDR, then 127.0.0.1:8080.
    #[arg(long, global = true)]
    addr: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create an account.
    Register { user: String, password: String },
    /// Log in and cache the session token.
    Login { user: String, password: String },
    /// Register a PE from a source file with a #@pe header block.
    #[command(name = "register-pe")]
    RegisterPe {
        file: PathBuf,
        #[arg(long)]
        description: Option<String>,
    },
    /// Register a workflow from a graph document.
    #[command(name = "register-workflow")]
    RegisterWorkflow {
        file: PathBuf,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        description: Option<String>,
    },
    /// Remove a PE by name or id.
    #[command(name = "remove-pe")]
    RemovePe { reference: String },
    /// Remove a workflow by name or id.
    #[command(name = "remove-workflow")]
    RemoveWorkflow { reference: String },
    /// Fetch a PE and write its source next to you.
    #[command(name = "get-pe")]
    GetPe {
        reference: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fetch a workflow and write its graph document.
    #[command(name = "get-workflow")]
    GetWorkflow {
        reference: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// List the PEs composing a workflow.
    #[command(name = "pes-by-workflow")]
    PesByWorkflow { reference: String },
    /// Search registered components.
    Search {
        text: String,
        /// pe, workflow, or both.
        #[arg(long = "type", default_value = "both")]
        scope: String,
        /// text or code.
        #[arg(long = "query", default_value = "text")]
        query_type: String,
    },
    /// Show name, kind, description, and ports of a record.
    Describe { reference: String },
    /// List everything you registered.
    List,
    /// Execute a workflow: a registered name/id or a graph document file.
    Run {
        reference: String,
        /// Number of producer iterations.
        #[arg(long, default_value_t = 1)]
        input: u64,
        /// Mapping: SIMPLE, MULTI, or REDIS (SIMPLE when omitted).
        #[arg(long, default_value = "SIMPLE")]
        process: String,
        /// Total process count for parallel mappings.
        #[arg(long)]
        num: Option<u64>,
        /// Base seed for seeded behaviors.
        #[arg(long)]
        seed: Option<u64>,
        /// Bundle ./resources and ship it with the run.
        #[arg(long)]
        resources: bool,
    },
}

fn default_addr() -> String {
    std::env::var("LAMINAR_ADDR").unwrap_or_else(|_| "127.0.0.1:8080".into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = dispatch(cli);
    match outcome {
        Ok(completed) if completed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::FAILURE,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    let addr_flag = cli.addr.clone();
    match cli.command {
        Command::Register { user, password } => {
            let addr = addr_flag.unwrap_or_else(default_addr);
            commands::register(&addr, &user, &password)?;
        }
        Command::Login { user, password } => {
            let addr = addr_flag.unwrap_or_else(default_addr);
            commands::login(&addr, &user, &password)?;
        }
        Command::RegisterPe { file, description } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::register_pe(&api, &session, &file, description.as_deref())?;
        }
        Command::RegisterWorkflow { file, name, description } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::register_workflow(
                &api,
                &session,
                &file,
                name.as_deref(),
                description.as_deref(),
            )?;
        }
        Command::RemovePe { reference } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::remove_pe(&api, &session, &reference)?;
        }
        Command::RemoveWorkflow { reference } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::remove_workflow(&api, &session, &reference)?;
        }
        Command::GetPe { reference, out } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::get_pe(&api, &session, &reference, &out)?;
        }
        Command::GetWorkflow { reference, out } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::get_workflow(&api, &session, &reference, &out)?;
        }
        Command::PesByWorkflow { reference } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::pes_by_workflow(&api, &session, &reference)?;
        }
        Command::Search { text, scope, query_type } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::search(&api, &session, &text, &scope, &query_type)?;
        }
        Command::Describe { reference } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::describe(&api, &session, &reference)?;
        }
        Command::List => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            commands::list(&api, &session)?;
        }
        Command::Run { reference, input, process, num, seed, resources } => {
            let (api, session) = commands::client(addr_flag.as_deref())?;
            let completed = commands::run(
                &api,
                &session,
                &RunArgs {
                    reference: &reference,
                    input,
                    process: &process,
                    num,
                    seed,
                    resources,
                },
            )?;
            return Ok(completed);
        }
    }
    Ok(true)
}
