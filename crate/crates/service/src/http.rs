use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use tokio_stream::wrappers::BroadcastStream;

use crate::model::{CreateSession, PostText, ServerEvent};
use crate::service::ChatService;
use crate::ServiceError;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Forbidden(_) => StatusCode::FORBIDDEN,
            ServiceError::Ordering(_) => StatusCode::CONFLICT,
            ServiceError::UnsupportedPair(_) | ServiceError::Invalid(_) => StatusCode::BAD_REQUEST,
            ServiceError::Backend(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Storage(_) | ServiceError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

type AppState = Arc<ChatService>;

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    from: u64,
    /// For clients that cannot set headers (e.g. browser EventSource).
    token: Option<String>,
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(|t| t.trim().to_string())
}

fn require_bearer(headers: &HeaderMap) -> Result<String, ServiceError> {
    bearer(headers).ok_or(ServiceError::Unauthorized)
}

async fn create_session(
    State(svc): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<impl IntoResponse, ServiceError> {
    let created = svc.create_session(req).await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn post_message(
    State(svc): State<AppState>,
    Path(session_id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<PostText>,
) -> Result<impl IntoResponse, ServiceError> {
    let token = require_bearer(&headers)?;
    let m = svc.post_message(&session_id, &token, &body.text).await?;
    Ok((StatusCode::CREATED, Json(m)))
}

async fn revise_message(
    State(svc): State<AppState>,
    Path((session_id, message_id)): Path<(String, String)>,
    headers: HeaderMap,
    Json(body): Json<PostText>,
) -> Result<impl IntoResponse, ServiceError> {
    let token = require_bearer(&headers)?;
    let m = svc.revise_message(&session_id, &token, &message_id, &body.text).await?;
    Ok((StatusCode::CREATED, Json(m)))
}

async fn transcript(
    State(svc): State<AppState>,
    Path(session_id): Path<String>,
    headers: HeaderMap,
) -> Result<impl IntoResponse, ServiceError> {
    let token = require_bearer(&headers)?;
    Ok(Json(svc.transcript(&session_id, &token).await?))
}

fn to_sse(e: &ServerEvent) -> Event {
    Event::default()
        .event(match e.kind {
            crate::model::EventType::Message => "message",
            crate::model::EventType::Revision => "revision",
            crate::model::EventType::Degraded => "degraded",
        })
        .id(e.message.seq.to_string())
        .data(serde_json::to_string(e).expect("events serialize"))
}

async fn events(
    State(svc): State<AppState>,
    Path(session_id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ServiceError> {
    let token = bearer(&headers).or(q.token).ok_or(ServiceError::Unauthorized)?;
    let sub = svc.subscribe(&session_id, &token, q.from).await?;
    let next = sub.next_seq;
    let backlog = stream::iter(sub.backlog.into_iter().map(|e| Ok(to_sse(&e))));
    let live = BroadcastStream::new(sub.live).filter_map(move |r| async move {
        match r {
            Ok(e) if e.message.seq >= next => Some(Ok(to_sse(&e))),
            Ok(_) => None,
            Err(e) => {
                // a lagging client resubscribes from its last seen seq
                tracing::warn!(error = %e, "event subscriber lagged");
                None
            }
        }
    });
    Ok(Sse::new(backlog.chain(live)).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

pub fn router(service: Arc<ChatService>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/messages/{mid}/revision", post(revise_message))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/events", get(events))
        .with_state(service)
}
