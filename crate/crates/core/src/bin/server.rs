//! Server binary. Configuration through the environment:
//! `LAMINAR_ADDR` (default `127.0.0.1:8080`), `LAMINAR_STORE` (store file
//! path, in-memory when unset), `LAMINAR_PROVIDER_URL` (external embedding
//! provider, deterministic fallback when unset).

use laminar_core::server::AppState;
use std::net::SocketAddr;

fn main() {
    let addr: SocketAddr = std::env::var("LAMINAR_ADDR")
        .unwrap_or_else(|_| "127.0.0.1:8080".into())
        .parse()
        .unwrap_or_else(|e| {
            eprintln!("invalid LAMINAR_ADDR: {e}");
            std::process::exit(2);
        });
    let store_path = std::env::var("LAMINAR_STORE").ok().map(Into::into);
    let provider_url = std::env::var("LAMINAR_PROVIDER_URL").ok();

    // State (and any blocking provider client) is built before the runtime
    // starts.
    let state = AppState::build(store_path, provider_url).unwrap_or_else(|e| {
        eprintln!("failed to open store: {e}");
        std::process::exit(2);
    });

    let runtime = tokio::runtime::Runtime::new().expect("runtime");
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.unwrap_or_else(|e| {
            eprintln!("cannot bind {addr}: {e}");
            std::process::exit(2);
        });
        eprintln!("laminar server listening on {addr}");
        if let Err(e) = laminar_core::server::serve(listener, state).await {
            eprintln!("server error: {e}");
            std::process::exit(1);
        }
    });
}
