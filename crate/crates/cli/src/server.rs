//! HTTP front of a labelling session.
//!
//! `GET /next` returns the point awaiting a label (204 when none), `POST
//! /label` answers it, and `GET /status` reports progress. Classes are
//! 1-based on the wire.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scal_core::harness::session::{Session, SubmitError};
use scal_core::{Dataset, PayloadKind};

#[derive(Clone)]
pub struct AppState {
    pub session: Arc<Session>,
    pub data: Arc<Dataset>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/next", get(next))
        .route("/label", post(label))
        .route("/status", get(status))
        .with_state(state)
}

#[derive(Debug, Serialize)]
struct ProgressBody {
    queried: usize,
    budget: usize,
    objective: Option<f64>,
}

#[derive(Debug, Serialize)]
struct StatusBody {
    queried: usize,
    budget: usize,
    objective: Option<f64>,
    finished: bool,
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    point_id: usize,
    class: i64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Grey levels scaled linearly so the darkest pixel is 0 and the brightest 255.
pub fn image_bytes(pixels: &[f64]) -> Vec<u8> {
    let lo = pixels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    pixels
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span * 255.0).round() as u8 } else { 0 })
        .collect()
}

fn payload(data: &Dataset, id: usize) -> (Value, Vec<usize>) {
    let row: Vec<f64> = data.points.row(id).to_vec();
    match data.payload {
        PayloadKind::GrayscaleImage { height, width } => {
            (Value::String(STANDARD.encode(image_bytes(&row))), vec![height, width])
        }
        PayloadKind::Trajectory { frames } => {
            let per_frame = row.len() / frames.max(1);
            (json!(row), vec![frames, per_frame])
        }
        PayloadKind::Features => {
            let len = row.len();
            (json!(row), vec![len])
        }
    }
}

fn error(code: StatusCode, reason: impl Into<String>) -> Response {
    (code, Json(json!({ "error": reason.into() }))).into_response()
}

async fn next(State(state): State<AppState>) -> Response {
    let Some(id) = state.session.pending() else {
        return StatusCode::NO_CONTENT.into_response();
    };
    let progress = state.session.progress();
    let (payload, shape) = payload(&state.data, id);
    Json(json!({
        "point_id": id,
        "payload_kind": state.data.payload.name(),
        "payload": payload,
        "shape": shape,
        "classes": (1..=state.session.k()).collect::<Vec<_>>(),
        "progress": ProgressBody {
            queried: progress.queried,
            budget: progress.budget,
            objective: finite(progress.objective),
        },
    }))
    .into_response()
}

async fn label(State(state): State<AppState>, body: Bytes) -> Response {
    let body: LabelBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed label request: {e}")),
    };
    let k = state.session.k();
    if body.class < 1 || body.class > k as i64 {
        return error(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("class {} is outside 1..={k}", body.class),
        );
    }
    match state.session.submit(body.point_id, body.class as usize) {
        Ok(()) => Json(json!({ "accepted": true })).into_response(),
        Err(SubmitError::Stale) => error(
            StatusCode::CONFLICT,
            format!("point {} is not awaiting a label", body.point_id),
        ),
        Err(SubmitError::BadClass) => error(StatusCode::UNPROCESSABLE_ENTITY, "class out of range"),
    }
}

async fn status(State(state): State<AppState>) -> Json<StatusBody> {
    let p = state.session.progress();
    Json(StatusBody {
        queried: p.queried,
        budget: p.budget,
        objective: finite(p.objective),
        finished: p.finished,
    })
}
