use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::sync::broadcast::error::RecvError;
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::api::{CreateSession, EventLog, FieldError, Mode, Snapshot, Teaching};
use crate::error::ApiError;
use crate::executor::{Command, Executor};
use crate::live;

const QUEUE_DEPTH: usize = 64;
const EVENT_BUFFER: usize = 256;

/// Shared registry of live sessions.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Handle>>>,
}

#[derive(Clone)]
struct Handle {
    id: String,
    commands: mpsc::Sender<Command>,
    events: broadcast::Sender<Snapshot>,
}

impl Handle {
    async fn request<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, ApiError> {
        let gone = || ApiError::NotFound(self.id.clone());
        let (tx, rx) = oneshot::channel();
        self.commands.send(make(tx)).await.map_err(|_| gone())?;
        rx.await.map_err(|_| gone())
    }
}

impl AppState {
    fn get(&self, id: &str) -> Result<Handle, ApiError> {
        self.sessions
            .lock()
            .expect("registry poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    fn remove(&self, id: &str) -> Result<Handle, ApiError> {
        self.sessions
            .lock()
            .expect("registry poisoned")
            .remove(id)
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    fn spawn(&self, req: CreateSession) -> Result<Handle, ApiError> {
        let session = live::build(&req).map_err(|m| ApiError::Invalid(FieldError::new("model", m)))?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let (commands, rx) = mpsc::channel(QUEUE_DEPTH);
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        let executor = Executor::new(id.clone(), req, session, events.clone());
        tokio::spawn(executor.run(rx));
        let handle = Handle { id: id.clone(), commands, events };
        self.sessions
            .lock()
            .expect("registry poisoned")
            .insert(id, handle.clone());
        Ok(handle)
    }
}

/// Deserialize a body, naming the offending field on failure.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        if path == "." {
            ApiError::Malformed(message)
        } else {
            ApiError::Invalid(FieldError::new(&path, message))
        }
    })
}

type Reply<T> = Result<Json<T>, ApiError>;

async fn create(State(app): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<Snapshot>), ApiError> {
    let req: CreateSession = parse(&body)?;
    req.validate().map_err(ApiError::Invalid)?;
    let handle = app.spawn(req)?;
    let snap = handle.request(Command::Snapshot).await?;
    Ok((StatusCode::CREATED, Json(snap)))
}

async fn snapshot(State(app): State<AppState>, Path(id): Path<String>) -> Reply<Snapshot> {
    Ok(Json(app.get(&id)?.request(Command::Snapshot).await?))
}

async fn teaching(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Reply<Snapshot> {
    let t: Teaching = parse(&body)?;
    Ok(Json(app.get(&id)?.request(|r| Command::Teach(t, r)).await??))
}

async fn step(State(app): State<AppState>, Path(id): Path<String>) -> Reply<Snapshot> {
    Ok(Json(app.get(&id)?.request(Command::Step).await??))
}

async fn mode(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Reply<Snapshot> {
    let m: Mode = parse(&body)?;
    Ok(Json(app.get(&id)?.request(|r| Command::SetMode(m, r)).await??))
}

async fn log(State(app): State<AppState>, Path(id): Path<String>) -> Reply<EventLog> {
    Ok(Json(app.get(&id)?.request(Command::Log).await?))
}

/// Removes the session and hands back its event log.
async fn delete(State(app): State<AppState>, Path(id): Path<String>) -> Reply<EventLog> {
    let handle = app.remove(&id)?;
    Ok(Json(handle.request(Command::Log).await?))
}

fn event<T: Serialize>(name: &'static str, value: &T) -> Result<Event, Infallible> {
    let data = serde_json::to_string(value).expect("snapshots serialize");
    Ok(Event::default().event(name).data(data))
}

/// The current snapshot, then one per change until the session is deleted.
async fn events(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let handle = app.get(&id)?;
    let rx = handle.events.subscribe();
    let first = handle.request(Command::Snapshot).await?;
    drop(handle);
    let updates = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(snap) => return Some((snap, rx)),
                // A slow reader skips to the newest snapshots.
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    let stream = stream::once(async { first })
        .chain(updates)
        .map(|snap| event("snapshot", &snap));
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", axum::routing::delete(delete))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/teaching", post(teaching))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/mode", post(mode))
        .route("/sessions/{id}/log", get(log))
        .route("/sessions/{id}/events", get(events))
        .with_state(state)
}
