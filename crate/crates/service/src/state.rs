//! In-memory study and session state behind per-study locks.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use jodkit::active::{next_pair, ActiveConfig, PairHistory};
use jodkit::consistency::{analyze, AnalysisConfig};
use jodkit::scaling::DEFAULT_INITIAL_VARIANCE;
use jodkit::seed::{labeled_seed, sub_seed};
use jodkit::{ComparisonRecord, GaussianBelief, ObserverPartition};

use crate::api::*;
use crate::clock::{Clock, SystemClock};
use crate::error::{ApiError, RevisionedError};
use crate::store::{study_dirs, Snapshot, StudyStore};

#[derive(Clone)]
pub struct ServiceConfig {
    /// Persist studies under this directory; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub clock: Arc<dyn Clock>,
    pub active: ActiveConfig,
    pub initial_variance: f64,
    /// Defaults for report requests.
    pub analysis: AnalysisConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: None,
            clock: Arc::new(SystemClock),
            active: ActiveConfig::default(),
            initial_variance: DEFAULT_INITIAL_VARIANCE,
            analysis: AnalysisConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SessionState {
    Active,
    Expired,
    Closed,
}

#[derive(Debug, Clone)]
struct Session {
    observer_id: String,
    expires_at: DateTime<Utc>,
    state: SessionState,
    pending: Option<(String, String, f64)>,
    answered: u64,
}

impl Session {
    /// Moves an active session past its deadline to `Expired`, dropping its pending pair.
    fn refresh(&mut self, now: DateTime<Utc>) {
        if self.state == SessionState::Active && now >= self.expires_at {
            self.state = SessionState::Expired;
            self.pending = None;
        }
    }
}

struct Study {
    definition: StudyDefinition,
    beliefs: GaussianBelief,
    history: PairHistory,
    records: Vec<ComparisonRecord>,
    sessions: BTreeMap<String, Session>,
    selections: u64,
    store: Option<StudyStore>,
}

impl Study {
    /// One for the creation plus one per accepted choice.
    fn revision(&self) -> u64 {
        1 + self.records.len() as u64
    }

    fn pending(&self, now: DateTime<Utc>) -> u64 {
        self.sessions
            .values()
            .filter(|s| s.state == SessionState::Active && now < s.expires_at && s.pending.is_some())
            .count() as u64
    }

    fn fail(&self, e: ApiError) -> RevisionedError {
        e.with_revision(Some(self.revision()))
    }
}

pub struct Service {
    config: ServiceConfig,
    studies: RwLock<BTreeMap<String, Arc<Mutex<Study>>>>,
    session_index: RwLock<HashMap<String, String>>,
    next_study: AtomicU64,
    next_session: AtomicU64,
}

type Reply<T> = Result<T, RevisionedError>;

fn valid_identifier(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn validate_label(what: &str, value: &str) -> Result<(), ApiError> {
    if value.is_empty() || value.trim() != value {
        return Err(ApiError::Unprocessable(format!(
            "{what} must be non-empty without surrounding whitespace"
        )));
    }
    Ok(())
}

impl Service {
    /// Opens the service, replaying every persisted study.
    pub fn open(config: ServiceConfig) -> Result<Self, ApiError> {
        let service = Service {
            config,
            studies: RwLock::new(BTreeMap::new()),
            session_index: RwLock::new(HashMap::new()),
            next_study: AtomicU64::new(1),
            next_session: AtomicU64::new(1),
        };
        if let Some(root) = service.config.data_dir.clone() {
            std::fs::create_dir_all(&root)?;
            for dir in study_dirs(&root)? {
                let study = service.load_study(StudyStore::open(dir))?;
                log::info!("loaded study `{}` with {} records", study.definition.id, study.records.len());
                service.studies_mut().insert(study.definition.id.clone(), Arc::new(Mutex::new(study)));
            }
        }
        Ok(service)
    }

    fn studies_mut(&self) -> std::sync::RwLockWriteGuard<'_, BTreeMap<String, Arc<Mutex<Study>>>> {
        self.studies.write().expect("study table lock")
    }

    fn fresh_beliefs(&self, definition: &StudyDefinition) -> Result<GaussianBelief, ApiError> {
        Ok(GaussianBelief::new(definition.assets.keys().cloned(), self.config.initial_variance)?)
    }

    fn load_study(&self, store: StudyStore) -> Result<Study, ApiError> {
        let definition = store.load_definition()?;
        let records = store.load_records()?;
        let mut beliefs = self.fresh_beliefs(&definition)?;
        let mut history = PairHistory::new();
        for r in &records {
            beliefs.update(&r.winner, r.loser(), self.config.active.beta)?;
            history.record(&r.item_a, &r.item_b);
        }
        match store.load_snapshot()? {
            Some(s) if s.records == records.len() && s.beliefs != beliefs => {
                log::warn!("study `{}`: belief snapshot differs from replay; using replay", definition.id)
            }
            Some(s) if s.records != records.len() => log::warn!(
                "study `{}`: snapshot covers {} of {} records; using replay",
                definition.id,
                s.records,
                records.len()
            ),
            _ => {}
        }
        Ok(Study {
            selections: records.len() as u64,
            definition,
            beliefs,
            history,
            records,
            sessions: BTreeMap::new(),
            store: Some(store),
        })
    }

    fn study(&self, id: &str) -> Reply<Arc<Mutex<Study>>> {
        self.studies
            .read()
            .expect("study table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no study `{id}`")).into())
    }

    fn study_of_session(&self, session_id: &str) -> Reply<Arc<Mutex<Study>>> {
        let study_id = self
            .session_index
            .read()
            .expect("session index lock")
            .get(session_id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no session `{session_id}`")))?;
        self.study(&study_id)
    }

    pub fn create_study(&self, request: CreateStudy) -> Reply<StudyCreated> {
        validate_label("condition", &request.condition)?;
        if request.items.len() < 2 {
            return Err(ApiError::Unprocessable("a study needs at least 2 items".into()).into());
        }
        if request.budget < 1 {
            return Err(ApiError::Unprocessable("budget must be at least 1".into()).into());
        }
        if request.session_duration_limit < 1 {
            return Err(ApiError::Unprocessable("session_duration_limit must be at least 1 second".into()).into());
        }
        let mut assets = BTreeMap::new();
        for item in request.items {
            validate_label("item id", &item.id)?;
            let url = match item.url {
                Some(u) if !u.trim().is_empty() => u,
                _ => return Err(ApiError::Unprocessable(format!("item `{}` has no asset URL", item.id)).into()),
            };
            if assets.insert(item.id.clone(), url).is_some() {
                return Err(ApiError::Unprocessable(format!("duplicate item id `{}`", item.id)).into());
            }
        }

        let mut studies = self.studies_mut();
        let id = match request.id {
            Some(id) => {
                if !valid_identifier(&id) {
                    return Err(ApiError::Unprocessable(format!(
                        "study id `{id}` must be 1-64 characters of [A-Za-z0-9_-]"
                    ))
                    .into());
                }
                if studies.contains_key(&id) {
                    return Err(ApiError::Conflict {
                        message: format!("study `{id}` already exists"),
                        complete: false,
                    }
                    .into());
                }
                id
            }
            None => loop {
                let candidate = format!("study-{}", self.next_study.fetch_add(1, Ordering::Relaxed));
                if !studies.contains_key(&candidate) {
                    break candidate;
                }
            },
        };
        let definition = StudyDefinition {
            id: id.clone(),
            condition: request.condition,
            assets,
            budget: request.budget,
            session_duration_limit: request.session_duration_limit,
            seed: request.seed,
        };
        let store = match &self.config.data_dir {
            Some(root) => Some(StudyStore::create(root, &definition).map_err(ApiError::from)?),
            None => None,
        };
        let study = Study {
            beliefs: self.fresh_beliefs(&definition)?,
            history: PairHistory::new(),
            records: Vec::new(),
            sessions: BTreeMap::new(),
            selections: 0,
            store,
            definition,
        };
        if let Some(store) = &study.store {
            store
                .write_snapshot(&Snapshot {
                    records: 0,
                    beliefs: study.beliefs.clone(),
                })
                .map_err(ApiError::from)?;
        }
        let created = StudyCreated {
            study_id: id.clone(),
            items: study.definition.assets.keys().cloned().collect(),
            budget: study.definition.budget,
            session_duration_limit: study.definition.session_duration_limit,
            revision: study.revision(),
        };
        studies.insert(id, Arc::new(Mutex::new(study)));
        Ok(created)
    }

    pub fn create_session(&self, study_id: &str, request: CreateSession) -> Reply<SessionCreated> {
        let study = self.study(study_id)?;
        let mut study = study.lock().expect("study lock");
        validate_label("observer_id", &request.observer_id).map_err(|e| study.fail(e))?;
        let n = self.next_session.fetch_add(1, Ordering::Relaxed);
        let session_id = format!("{study_id}-s{n}");
        let expires_at = self.config.clock.now() + Duration::seconds(study.definition.session_duration_limit as i64);
        study.sessions.insert(
            session_id.clone(),
            Session {
                observer_id: request.observer_id.clone(),
                expires_at,
                state: SessionState::Active,
                pending: None,
                answered: 0,
            },
        );
        self.session_index
            .write()
            .expect("session index lock")
            .insert(session_id.clone(), study_id.to_string());
        Ok(SessionCreated {
            session_id,
            study_id: study_id.to_string(),
            observer_id: request.observer_id,
            expires_at,
            revision: study.revision(),
        })
    }

    pub fn next_pair(&self, session_id: &str) -> Reply<PairResponse> {
        let study = self.study_of_session(session_id)?;
        let mut guard = study.lock().expect("study lock");
        let study = &mut *guard;
        let now = self.config.clock.now();
        let revision = study.revision();
        let pending_elsewhere = study.pending(now);
        let session = study.sessions.get_mut(session_id).expect("indexed session exists");
        session.refresh(now);
        match session.state {
            SessionState::Expired => {
                return Err(ApiError::Gone(format!("session `{session_id}` has expired")).with_revision(Some(revision)))
            }
            SessionState::Closed => {
                return Err(ApiError::Conflict {
                    message: "study budget exhausted".into(),
                    complete: true,
                }
                .with_revision(Some(revision)))
            }
            SessionState::Active => {}
        }
        let remaining = |open: u64| study.definition.budget.saturating_sub(study.records.len() as u64 + open);
        if let Some((a, b, gain)) = session.pending.clone() {
            return Ok(PairResponse {
                session_id: session_id.to_string(),
                asset_a: study.definition.assets[&a].clone(),
                asset_b: study.definition.assets[&b].clone(),
                item_a: a,
                item_b: b,
                expected_gain: gain,
                answered: session.answered,
                budget_remaining: remaining(pending_elsewhere),
                revision,
            });
        }
        if study.records.len() as u64 + pending_elsewhere >= study.definition.budget {
            session.state = SessionState::Closed;
            return Err(ApiError::Conflict {
                message: "study budget exhausted".into(),
                complete: true,
            }
            .with_revision(Some(revision)));
        }
        let seed = sub_seed(labeled_seed(study.definition.seed, "next-pair"), study.selections);
        let pick = next_pair(&study.beliefs, &study.history, seed, &self.config.active)
            .map_err(|e| ApiError::from(e).with_revision(Some(revision)))?;
        study.selections += 1;
        let session = study.sessions.get_mut(session_id).expect("indexed session exists");
        session.pending = Some((pick.item_i.clone(), pick.item_j.clone(), pick.expected_gain));
        let answered = session.answered;
        Ok(PairResponse {
            session_id: session_id.to_string(),
            asset_a: study.definition.assets[&pick.item_i].clone(),
            asset_b: study.definition.assets[&pick.item_j].clone(),
            item_a: pick.item_i,
            item_b: pick.item_j,
            expected_gain: pick.expected_gain,
            answered,
            budget_remaining: remaining(pending_elsewhere + 1),
            revision,
        })
    }

    pub fn submit_choice(&self, session_id: &str, choice: Choice) -> Reply<ChoiceAccepted> {
        let study = self.study_of_session(session_id)?;
        let mut guard = study.lock().expect("study lock");
        let study = &mut *guard;
        let now = self.config.clock.now();
        let revision = study.revision();
        let session = study.sessions.get_mut(session_id).expect("indexed session exists");
        session.refresh(now);
        if session.state == SessionState::Expired {
            return Err(ApiError::Gone(format!("session `{session_id}` has expired")).with_revision(Some(revision)));
        }
        let Some((a, b, _)) = session.pending.clone() else {
            return Err(ApiError::Conflict {
                message: "no pending pair for this session".into(),
                complete: false,
            }
            .with_revision(Some(revision)));
        };
        if choice.winner != a && choice.winner != b {
            return Err(ApiError::Unprocessable(format!(
                "winner `{}` is not in the pending pair ({a}, {b})",
                choice.winner
            ))
            .with_revision(Some(revision)));
        }
        let record = ComparisonRecord::new(
            study.definition.id.clone(),
            study.definition.condition.clone(),
            session.observer_id.clone(),
            a.clone(),
            b.clone(),
            choice.winner.clone(),
            Some(now),
        )
        .map_err(|e| ApiError::from(e).with_revision(Some(revision)))?;

        // durable first, then visible
        if let Some(store) = &study.store {
            store
                .append(&record)
                .map_err(|e| ApiError::from(e).with_revision(Some(revision)))?;
        }
        study
            .beliefs
            .update(&record.winner, record.loser(), self.config.active.beta)
            .map_err(|e| ApiError::from(e).with_revision(Some(revision)))?;
        study.history.record(&a, &b);
        study.records.push(record);
        let session = study.sessions.get_mut(session_id).expect("indexed session exists");
        session.pending = None;
        session.answered += 1;
        let answered = session.answered;
        if let Some(store) = &study.store {
            let snapshot = Snapshot {
                records: study.records.len(),
                beliefs: study.beliefs.clone(),
            };
            if let Err(e) = store.write_snapshot(&snapshot) {
                // the log already holds the record; replay recovers the beliefs
                log::warn!("study `{}`: snapshot write failed: {e}", study.definition.id);
            }
        }
        Ok(ChoiceAccepted {
            session_id: session_id.to_string(),
            record_index: study.records.len() as u64 - 1,
            answered,
            revision: study.revision(),
        })
    }

    /// Current beliefs and the revision they reflect.
    pub fn beliefs(&self, study_id: &str) -> Reply<(u64, GaussianBelief)> {
        let study = self.study(study_id)?;
        let study = study.lock().expect("study lock");
        Ok((study.revision(), study.beliefs.clone()))
    }

    /// The study's records as pwc-core CSV, with the revision they reflect.
    pub fn export(&self, study_id: &str) -> Reply<(u64, Vec<u8>)> {
        let study = self.study(study_id)?;
        let study = study.lock().expect("study lock");
        let mut out = Vec::new();
        jodkit::records::write_records(&mut out, &study.records, jodkit::RecordFormat::Csv)
            .map_err(|e| ApiError::from(e).with_revision(Some(study.revision())))?;
        Ok((study.revision(), out))
    }

    /// Consistent copy of what a report needs.
    pub fn report_input(&self, study_id: &str, query: &ReportQuery) -> Reply<ReportInput> {
        let study = self.study(study_id)?;
        let study = study.lock().expect("study lock");
        if study.records.is_empty() {
            return Err(ApiError::NotFound(format!("study `{study_id}` has no records yet"))
                .with_revision(Some(study.revision())));
        }
        let defaults = &self.config.analysis;
        let config = AnalysisConfig {
            seed: query.seed.unwrap_or(defaults.seed),
            replicates: query.replicates.unwrap_or(defaults.replicates),
            level: query.level.unwrap_or(defaults.level),
            alpha: query.alpha.unwrap_or(defaults.alpha),
            resolution: query.resolution.unwrap_or(defaults.resolution),
            ..defaults.clone()
        };
        config
            .validate()
            .map_err(|e| ApiError::from(e).with_revision(Some(study.revision())))?;
        Ok(ReportInput {
            study_id: study_id.to_string(),
            revision: study.revision(),
            items: study.definition.assets.keys().cloned().collect(),
            records: study.records.clone(),
            config,
        })
    }
}

pub struct ReportInput {
    pub study_id: String,
    pub revision: u64,
    pub items: Vec<String>,
    pub records: Vec<ComparisonRecord>,
    pub config: AnalysisConfig,
}

impl ReportInput {
    /// Runs the analysis, or explains why only a partial report is possible.
    pub fn run(self) -> Result<ReportResponse, ApiError> {
        let partition = ObserverPartition::from_records(&self.records)?;
        let connectivity = partition.pooled().reindexed(&self.items)?.connectivity();
        let partial = |reason: String| ReportResponse {
            study_id: self.study_id.clone(),
            revision: self.revision,
            complete: false,
            report: None,
            diagnostics: Some(PartialDiagnostics {
                reason,
                records: self.records.len(),
                observers: partition.len(),
                connected: connectivity.connected,
                components: connectivity.components.clone(),
            }),
        };
        if partition.len() < 2 {
            return Ok(partial(format!("{} observer(s); at least 2 are needed", partition.len())));
        }
        if !connectivity.connected {
            return Ok(partial(format!(
                "comparison design has {} components",
                connectivity.components.len()
            )));
        }
        match analyze(&partition, &self.config) {
            Ok(report) => Ok(ReportResponse {
                study_id: self.study_id.clone(),
                revision: self.revision,
                complete: true,
                report: Some(report),
                diagnostics: None,
            }),
            Err(e) if e.is_statistical_error() => Ok(partial(e.to_string())),
            Err(e) => Err(e.into()),
        }
    }
}
