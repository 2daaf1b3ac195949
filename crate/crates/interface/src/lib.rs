//! Command-line and HTTP front ends over a workanno store directory.
//!
//! [`workspace::Workspace`] holds the operations; [`cli`] and
//! [`service`] are thin adapters that both call into it, so the same
//! request through either path produces the same store files.

pub mod cli;
pub mod error;
pub mod http;
pub mod service;
pub mod workspace;

pub use cli::run_cli;
pub use error::ApiError;
pub use service::{ApiRequest, ApiResponse, Service};
pub use workspace::Workspace;
