//! HTTP/JSON service driving live episodes.
//!
//! | route                               | body                 | reply                    |
//! |-------------------------------------|----------------------|--------------------------|
//! | `POST /episodes`                    | `{scenario?, env?}`  | `{episode_id, observation}` |
//! | `GET /episodes/{id}`                |                      | full named state         |
//! | `POST /episodes/{id}/step`          | `{action}`           | step result              |
//! | `POST /episodes/{id}/simulate`      | `{action}`           | predicted step result    |
//! | `POST /episodes/{id}/agent-suggest` | `{agent}`            | `{agent, action}`        |
//! | `DELETE /episodes/{id}`             |                      | 204                      |
//!
//! Errors are `{"error": ..., "detail": ...}` with 404 for unknown episodes
//! or scenarios, 409 for actions on a finished episode and 422 for
//! malformed requests.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gridmdp_core::env::{EnvConfig, Environment, Scenario, StepInfo};
use gridmdp_core::scoring::{normalize_score, partial_costs, worst_cost, ScenarioRefs, ScoreConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::defaults::{default_scenario, generated_scenario};
use crate::runner::{build_agent, score_config_for, AgentSpec};
use crate::scenario_dir::load_scenario;
use crate::view::{ObservationView, StepResultView, TopologyView};
use crate::wire::WireAction;

pub const DATA_DIR_VAR: &str = "GRIDMDP_DATA_DIR";

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    error: &'static str,
    detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, detail: impl Into<Value>) -> Self {
        Self { status, error, detail: detail.into() }
    }
    fn unknown_episode(id: u64) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown episode", format!("no episode {id}"))
    }
    fn finished(id: u64) -> Self {
        Self::new(StatusCode::CONFLICT, "episode finished", format!("episode {id} is over"))
    }
    fn unprocessable(error: &'static str, detail: impl Into<Value>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, error, detail)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::unprocessable("malformed request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.error, "detail": self.detail}))).into_response()
    }
}

/// Do-nothing run of a scenario, kept for the running score.
struct Baseline {
    records: Vec<StepInfo>,
    worst: f64,
}

struct Episode {
    env: Environment,
    records: Vec<StepInfo>,
    total_reward: f64,
    scoring: ScoreConfig,
    baseline: Arc<Baseline>,
}

impl Episode {
    /// Score of the steps played so far against do-nothing over the same
    /// steps; the final score once the episode is over.
    fn score_so_far(&self) -> f64 {
        let grid = self.env.grid();
        let t = self.records.len();
        let dn = &self.baseline.records;
        let prefix = if self.env.is_done() { dn.len() } else { t.min(dn.len()) };
        let dn_costs = partial_costs(&dn[..prefix], grid, &self.scoring);
        let refs = ScenarioRefs {
            c_dn: dn_costs.total,
            c_best: self.scoring.best_fraction * dn_costs.losses_cost,
            c_worst: self.baseline.worst,
        };
        normalize_score(partial_costs(&self.records, grid, &self.scoring).total, &refs)
    }
}

#[derive(Default)]
pub struct AppState {
    data_dir: Option<PathBuf>,
    next_id: AtomicU64,
    episodes: Mutex<HashMap<u64, Arc<Mutex<Episode>>>>,
    baselines: Mutex<HashMap<String, Arc<Baseline>>>,
}

impl AppState {
    pub fn new(data_dir: Option<PathBuf>) -> Self {
        Self { data_dir, ..Self::default() }
    }

    pub fn from_env() -> Self {
        Self::new(std::env::var_os(DATA_DIR_VAR).map(PathBuf::from))
    }

    fn episode(&self, id: u64) -> Result<Arc<Mutex<Episode>>, ApiError> {
        self.episodes
            .lock()
            .expect("episode table poisoned")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_episode(id))
    }

    /// `default`, `seed-<n>` (a generated week), or a directory name under
    /// the data directory.
    fn scenario(&self, name: &str) -> Result<Scenario, ApiError> {
        if let Some(dir) = &self.data_dir {
            let path = dir.join(name);
            if !name.contains(['/', '\\']) && name != ".." && path.is_dir() {
                return load_scenario(&path).map_err(|e| ApiError::unprocessable("invalid scenario", e.to_string()));
            }
        }
        let generated = if name == "default" {
            default_scenario()
        } else if let Some(seed) = name.strip_prefix("seed-").and_then(|s| s.parse().ok()) {
            generated_scenario(&Default::default(), seed)
        } else {
            return Err(ApiError::new(StatusCode::NOT_FOUND, "unknown scenario", format!("no scenario {name:?}")));
        };
        generated.map_err(|e| ApiError::unprocessable("invalid scenario", e.to_string()))
    }

    fn baseline(&self, scenario: &Scenario, env: &EnvConfig, scoring: &ScoreConfig) -> Result<Arc<Baseline>, ApiError> {
        let key = format!("{}\n{}", scenario.id, serde_json::to_string(env).expect("config serializes"));
        if let Some(b) = self.baselines.lock().expect("baseline cache poisoned").get(&key) {
            return Ok(b.clone());
        }
        let records = gridmdp_core::scoring::do_nothing_records(scenario, env)
            .map_err(|e| ApiError::unprocessable("invalid scenario", e.to_string()))?;
        let b = Arc::new(Baseline { records, worst: worst_cost(scenario, scoring) });
        self.baselines.lock().expect("baseline cache poisoned").insert(key, b.clone());
        Ok(b)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub env: Option<EnvConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub episode_id: u64,
    pub scenario: String,
    pub horizon: usize,
    pub observation: ObservationView,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EpisodeState {
    pub episode_id: u64,
    pub scenario: String,
    pub step: usize,
    pub horizon: usize,
    pub done: bool,
    pub total_reward: f64,
    pub score_so_far: f64,
    pub observation: ObservationView,
    pub topology: TopologyView,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRequest {
    pub action: WireAction,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestRequest {
    pub agent: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub agent: String,
    pub action: WireAction,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/episodes", post(create))
        .route("/episodes/{id}", get(read).delete(remove))
        .route("/episodes/{id}/step", post(step))
        .route("/episodes/{id}/simulate", post(simulate))
        .route("/episodes/{id}/agent-suggest", post(suggest))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not found", "no such route") })
        .with_state(state)
}

async fn create(State(app): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let req: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::unprocessable("malformed request", e.to_string()))?
    };
    let scenario = app.scenario(req.scenario.as_deref().unwrap_or("default"))?;
    let env_cfg = req.env.unwrap_or_default();
    let scoring = score_config_for(&env_cfg);
    let env = Environment::new(scenario.clone(), env_cfg.clone())
        .map_err(|e| ApiError::unprocessable("invalid episode", e.to_string()))?;
    let baseline = app.baseline(&scenario, &env_cfg, &scoring)?;
    let id = app.next_id.fetch_add(1, Ordering::Relaxed) + 1;
    let response = CreateResponse {
        episode_id: id,
        scenario: scenario.id.clone(),
        horizon: env.horizon(),
        observation: ObservationView::new(env.grid(), &env.observation(), env.time()),
    };
    let episode = Episode { env, records: Vec::new(), total_reward: 0.0, scoring, baseline };
    app.episodes.lock().expect("episode table poisoned").insert(id, Arc::new(Mutex::new(episode)));
    Ok((StatusCode::CREATED, Json(response)))
}

async fn read(State(app): State<Arc<AppState>>, Path(id): Path<u64>) -> Result<Json<EpisodeState>, ApiError> {
    let ep = app.episode(id)?;
    let ep = ep.lock().expect("episode poisoned");
    let env = &ep.env;
    Ok(Json(EpisodeState {
        episode_id: id,
        scenario: env.scenario().id.clone(),
        step: env.time(),
        horizon: env.horizon(),
        done: env.is_done(),
        total_reward: ep.total_reward,
        score_so_far: ep.score_so_far(),
        observation: ObservationView::new(env.grid(), &env.observation(), env.time()),
        topology: TopologyView::new(env.grid(), env.state()),
    }))
}

async fn remove(State(app): State<Arc<AppState>>, Path(id): Path<u64>) -> Result<StatusCode, ApiError> {
    match app.episodes.lock().expect("episode table poisoned").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::unknown_episode(id)),
    }
}

fn parse_action(
    ep: &Episode,
    body: Result<Json<ActionRequest>, JsonRejection>,
) -> Result<gridmdp_core::env::Action, ApiError> {
    let Json(req) = body?;
    req.action.resolve(ep.env.grid()).map_err(|e| ApiError::unprocessable("malformed action", e.to_string()))
}

async fn step(
    State(app): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Result<Json<ActionRequest>, JsonRejection>,
) -> Result<Json<StepResultView>, ApiError> {
    let ep = app.episode(id)?;
    let mut ep = ep.lock().expect("episode poisoned");
    if ep.env.is_done() {
        return Err(ApiError::finished(id));
    }
    let action = parse_action(&ep, body)?;
    let r = ep
        .env
        .step(&action)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "step failed", e.to_string()))?;
    ep.records.push(r.info.clone());
    ep.total_reward += r.reward;
    Ok(Json(StepResultView::new(ep.env.grid(), &r)))
}

async fn simulate(
    State(app): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Result<Json<ActionRequest>, JsonRejection>,
) -> Result<Json<StepResultView>, ApiError> {
    let ep = app.episode(id)?;
    let ep = ep.lock().expect("episode poisoned");
    if ep.env.is_done() {
        return Err(ApiError::finished(id));
    }
    let action = parse_action(&ep, body)?;
    let r = ep
        .env
        .simulate(&action)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "simulate failed", e.to_string()))?;
    Ok(Json(StepResultView::new(ep.env.grid(), &r)))
}

async fn suggest(
    State(app): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Result<Json<SuggestRequest>, JsonRejection>,
) -> Result<Json<SuggestResponse>, ApiError> {
    let ep = app.episode(id)?;
    let ep = ep.lock().expect("episode poisoned");
    if ep.env.is_done() {
        return Err(ApiError::finished(id));
    }
    let Json(req) = body?;
    let spec: AgentSpec = req.agent.parse().map_err(|e: String| ApiError::unprocessable("unknown agent", e))?;
    let mut agent =
        build_agent(&spec, ep.env.scenario()).map_err(|e| ApiError::unprocessable("unusable agent", e.to_string()))?;
    let action = agent.act(&ep.env.observation(), &ep.env);
    Ok(Json(SuggestResponse {
        agent: agent.name().to_string(),
        action: WireAction::from_action(&action, ep.env.grid()),
    }))
}

pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(state))).await
}
