//! HTTP transport for [`Service`] over axum.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use tokio::sync::oneshot;

use crate::error::ApiError;
use crate::service::{ApiRequest, ApiResponse, Service};

async fn dispatch(State(service): State<Arc<Service>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let response = match String::from_utf8(body.to_vec()) {
        Ok(body) => {
            let target = uri.path_and_query().map_or(uri.path(), |pq| pq.as_str()).to_string();
            let request = ApiRequest::new(method.as_str(), &target, body);
            tokio::task::spawn_blocking(move || service.handle(&request))
                .await
                .unwrap_or_else(|e| ApiResponse::error(&ApiError::new(500, "internal", e.to_string())))
        }
        Err(_) => ApiResponse::error(&ApiError::bad_request("malformed_body", "body is not UTF-8")),
    };
    let status = StatusCode::from_u16(response.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], response.body_text()).into_response()
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new().fallback(dispatch).with_state(service)
}

/// A server running on its own thread until [`RunningServer::stop`].
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl RunningServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> io::Result<()> {
        self.shutdown_now()
    }

    fn shutdown_now(&mut self) -> io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        let _ = self.shutdown_now();
    }
}

fn runtime() -> io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build()
}

/// Bind `addr` (port 0 picks a free port) and serve in the background.
pub fn spawn(service: Arc<Service>, addr: SocketAddr) -> io::Result<RunningServer> {
    let rt = runtime()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            axum::serve(listener, router(service))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        })
    });
    Ok(RunningServer {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Serve in the foreground until the process is stopped.
pub fn serve_forever(service: Arc<Service>, addr: SocketAddr, ready: impl FnOnce(SocketAddr)) -> io::Result<()> {
    let rt = runtime()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        ready(listener.local_addr()?);
        axum::serve(listener, router(service)).await
    })
}
