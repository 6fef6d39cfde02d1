//! Read-only HTTP service over a loaded zoo.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use memplan_core::evalmetrics::feature_importance;
use memplan_core::modelzoo::Zoo;
use memplan_core::optimizer::{optimize, OptimizationRequest};
use memplan_core::paramspace::CompilerSpec;
use memplan_core::reliability::{ranking_reliability, ResampleConfig, Sharing, TestSets, DEFAULT_DRAWS};
use memplan_core::{Error, ErrorCategory};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone)]
pub struct AppState {
    pub zoo: Arc<Zoo>,
    pub specs: Arc<Vec<CompilerSpec>>,
    pub tests: Arc<TestSets>,
}

impl AppState {
    pub fn new(zoo: Zoo, specs: Vec<CompilerSpec>) -> Self {
        let tests = zoo.test_sets();
        AppState {
            zoo: Arc::new(zoo),
            specs: Arc::new(specs),
            tests: Arc::new(tests),
        }
    }
}

pub struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &Error) -> StatusCode {
    match e.category() {
        ErrorCategory::Validation | ErrorCategory::Malformed => StatusCode::BAD_REQUEST,
        ErrorCategory::NotFound => StatusCode::NOT_FOUND,
        ErrorCategory::NotApplicable => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorCategory::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// Machine-readable error body shared with the command line.
pub fn error_body(e: &Error) -> Value {
    let field = match e {
        Error::InvalidField { field, .. } => Some(field.clone()),
        _ => None,
    };
    json!({
        "schema_version": SCHEMA_VERSION,
        "error": {
            "category": format!("{:?}", e.category()).to_lowercase(),
            "field": field,
            "message": e.to_string(),
        }
    })
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_of(&self.0), Json(error_body(&self.0))).into_response()
    }
}

fn body<T>(payload: std::result::Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError(Error::Malformed(e.body_text())))
}

fn envelope(key: &str, value: impl Serialize) -> Result<Json<Value>, ApiError> {
    let mut out = json!({ "schema_version": SCHEMA_VERSION });
    out[key] = serde_json::to_value(value).map_err(Error::from)?;
    Ok(Json(out))
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> memplan_core::Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(Error::Io(std::io::Error::other(format!("worker failed: {e}")))))?
        .map_err(ApiError)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompilerEntry {
    pub compiler_id: String,
    pub version: String,
    pub port_config: String,
    pub corners: Vec<String>,
    pub params: Vec<String>,
    pub has_model: bool,
}

async fn list_compilers(State(s): State<AppState>) -> Result<Json<Value>, ApiError> {
    let entries: Vec<CompilerEntry> = s
        .specs
        .iter()
        .map(|spec| CompilerEntry {
            compiler_id: spec.compiler_id.clone(),
            version: spec.version.clone(),
            port_config: spec.port_config.to_string(),
            corners: spec.corner_names(),
            params: spec.params.iter().map(|p| p.name.clone()).collect(),
            has_model: s.zoo.get_spec(spec).is_ok(),
        })
        .collect();
    envelope("compilers", entries)
}

async fn model_metrics(
    State(s): State<AppState>,
    Path((compiler, version)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let m = s.zoo.get(&compiler, &version)?;
    envelope(
        "model",
        json!({
            "key": m.key(),
            "architecture": m.architecture(),
            "frozen": m.is_frozen(),
            "meta": m.meta(),
        }),
    )
}

async fn run_optimize(
    State(s): State<AppState>,
    payload: std::result::Result<Json<OptimizationRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let request = body(payload)?;
    let results = blocking(move || optimize(&request, &s.zoo, &s.specs)).await?;
    envelope("results", results)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityRequest {
    pub request: OptimizationRequest,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sharing: Sharing,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

async fn run_reliability(
    State(s): State<AppState>,
    payload: std::result::Result<Json<ReliabilityRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let r = body(payload)?;
    let report = blocking(move || {
        let results = optimize(&r.request, &s.zoo, &s.specs)?;
        let config = ResampleConfig {
            draws: r.draws,
            seed: r.seed,
            sharing: r.sharing,
        };
        ranking_reliability(&r.request, &results, &s.zoo, &s.specs, &s.tests, &config)
    })
    .await?;
    envelope("reliability", report)
}

async fn model_importance(
    State(s): State<AppState>,
    Path((compiler, version)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let importance = blocking(move || {
        let model = s.zoo.get(&compiler, &version)?;
        let test = s
            .zoo
            .test_set(&compiler, &version)
            .ok_or_else(|| Error::Empty(format!("stored observations of {compiler}@{version}")))?;
        feature_importance(model, test)
    })
    .await?;
    envelope("importance", importance)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/compilers", get(list_compilers))
        .route("/v1/models/{compiler}/{version}/metrics", get(model_metrics))
        .route("/v1/models/{compiler}/{version}/importance", get(model_importance))
        .route("/v1/optimize", post(run_optimize))
        .route("/v1/reliability", post(run_reliability))
        .with_state(state)
}

pub async fn serve(state: AppState, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!(address = %listener.local_addr()?, "serving");
    axum::serve(listener, router(state)).await
}
