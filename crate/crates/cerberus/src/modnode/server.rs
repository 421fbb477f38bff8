//! HTTP/1.1 front end for [`ModeratorCore`].
//!
//! A small pool of worker threads shares one listener; crypto is pure and
//! the session store is the only contended state, so request handling is
//! freely concurrent. Responses are JSON; rejections are
//! `{"error": "<code>"}` with status 400.

use super::{ModeratorCore, NodeError, Rejection};
use crate::group::Suite;
use crate::wire::{ErrorResponse, ReportRequestWire, Round1Request, Round2Request};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::Read;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;
use tiny_http::{Header, Method, Response, Server};

const WORKERS: usize = 4;
const MAX_BODY_BYTES: u64 = 16 * 1024 * 1024;

/// A running daemon; dropping it (or calling [`DaemonHandle::shutdown`])
/// stops the workers.
pub struct DaemonHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
}

impl DaemonHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_workers();
    }

    fn stop_workers(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }

    /// Block until the process dies; for running as a foreground daemon.
    pub fn wait(mut self) {
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for DaemonHandle {
    fn drop(&mut self) {
        self.stop_workers();
    }
}

/// Bind `listen` and serve the core until shutdown.
pub fn serve<S: Suite>(
    core: Arc<ModeratorCore<S>>,
    listen: &str,
) -> Result<DaemonHandle, NodeError> {
    let server = Server::http(listen).map_err(|e| NodeError::Bind {
        listen: listen.to_string(),
        reason: e.to_string(),
    })?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| NodeError::Bind {
            listen: listen.to_string(),
            reason: "no ip listener".into(),
        })?;
    let server = Arc::new(server);
    let stop = Arc::new(AtomicBool::new(false));
    let workers = (0..WORKERS)
        .map(|_| {
            let server = Arc::clone(&server);
            let core = Arc::clone(&core);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || worker_loop(server, core, stop))
        })
        .collect();
    Ok(DaemonHandle { addr, stop, workers })
}

fn worker_loop<S: Suite>(
    server: Arc<Server>,
    core: Arc<ModeratorCore<S>>,
    stop: Arc<AtomicBool>,
) {
    while !stop.load(Ordering::SeqCst) {
        match server.recv_timeout(Duration::from_millis(50)) {
            Ok(Some(request)) => handle(request, &core),
            Ok(None) => continue,
            Err(_) => break,
        }
    }
}

fn handle<S: Suite>(mut request: tiny_http::Request, core: &ModeratorCore<S>) {
    let method = request.method().clone();
    let path = request.url().to_string();

    let mut body = String::new();
    if request
        .as_reader()
        .take(MAX_BODY_BYTES)
        .read_to_string(&mut body)
        .is_err()
    {
        respond(request, 400, &ErrorResponse { error: "malformed-body".into() });
        return;
    }

    match (method, path.as_str()) {
        (Method::Get, "/v1/health") => {
            respond(request, 200, &serde_json::json!({ "status": "ok" }));
        }
        (Method::Post, "/v1/token/round1") => {
            dispatch(request, &body, |b: &Round1Request| core.handle_round1(b));
        }
        (Method::Post, "/v1/token/round2") => {
            dispatch(request, &body, |b: &Round2Request| core.handle_round2(b));
        }
        (Method::Post, "/v1/report") => {
            dispatch(request, &body, |b: &ReportRequestWire| core.handle_report(b));
        }
        _ => {
            respond(request, 404, &ErrorResponse { error: "not-found".into() });
        }
    }
}

fn dispatch<B: DeserializeOwned, R: Serialize>(
    request: tiny_http::Request,
    body: &str,
    handler: impl FnOnce(&B) -> Result<R, Rejection>,
) {
    // Unknown fields fail deserialization here, which is the schema's
    // strictness guarantee.
    let parsed: B = match serde_json::from_str(body) {
        Ok(b) => b,
        Err(_) => {
            respond(request, 400, &ErrorResponse { error: "malformed-body".into() });
            return;
        }
    };
    match handler(&parsed) {
        Ok(response) => respond(request, 200, &response),
        Err(rejection) => respond(request, 400, &ErrorResponse { error: rejection.code }),
    }
}

fn respond<T: Serialize>(request: tiny_http::Request, status: u16, body: &T) {
    let json = serde_json::to_string(body).expect("response serialization cannot fail");
    let response = Response::from_string(json)
        .with_status_code(status)
        .with_header(
            Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                .expect("static header"),
        );
    // A client that hung up mid-response is its own problem.
    let _ = request.respond(response);
}
