//! Live teaching sessions over HTTP with a server-sent snapshot stream.

pub mod api;
mod error;
mod executor;
mod live;
mod replay;
mod routes;

use std::net::SocketAddr;

pub use error::ApiError;
pub use replay::{replay, ReplayError};
pub use routes::{router, AppState};

/// Serve until the process is stopped.
pub fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        axum::serve(listener, router(AppState::default())).await
    })
}
