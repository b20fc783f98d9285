use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use spineplan_core::{Session, SessionError};

use crate::config::Config;
use crate::error::ApiError;

/// Shared service state: the configuration and every open session.
///
/// Each session sits behind its own mutex, so writes to one session are
/// serialized while different sessions proceed independently.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: Config,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

fn lock(m: &Mutex<Session>) -> MutexGuard<'_, Session> {
    // Session operations never leave partial state behind, so a panic in
    // another request does not make the session unusable.
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl AppState {
    pub fn new(config: Config) -> Self {
        AppState { inner: Arc::new(Inner { config, sessions: RwLock::new(HashMap::new()) }) }
    }

    pub fn config(&self) -> &Config {
        &self.inner.config
    }

    pub(crate) fn insert(&self, session: Session) -> Result<(), ApiError> {
        let mut map = self.inner.sessions.write().unwrap_or_else(|p| p.into_inner());
        if map.contains_key(session.id()) {
            return Err(ApiError::session_exists(session.id()));
        }
        map.insert(session.id().to_string(), Arc::new(Mutex::new(session)));
        Ok(())
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let map = self.inner.sessions.read().unwrap_or_else(|p| p.into_inner());
        map.get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))
    }

    /// Runs `f` on a consistent view of the session.
    pub(crate) fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> T) -> Result<T, ApiError> {
        let entry = self.entry(id)?;
        let guard = lock(&entry);
        Ok(f(&guard))
    }

    /// Runs `f` as the sole writer of the session.
    pub(crate) fn write<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, SessionError>) -> Result<T, ApiError> {
        let entry = self.entry(id)?;
        let mut guard = lock(&entry);
        Ok(f(&mut guard)?)
    }

    /// A copy of the session as it is now.
    pub fn snapshot(&self, id: &str) -> Option<Session> {
        self.read(id, Session::clone).ok()
    }

    pub fn session_ids(&self) -> Vec<String> {
        let map = self.inner.sessions.read().unwrap_or_else(|p| p.into_inner());
        let mut ids: Vec<String> = map.keys().cloned().collect();
        ids.sort();
        ids
    }
}
