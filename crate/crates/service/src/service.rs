use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use chrono::Utc;
use tokio::sync::{broadcast, Mutex};
use xlchat_core::backends::{translate_utterance, TranslationBackend};
use xlchat_core::detector::ErrorDetector;
use xlchat_core::{ChatQuad, Direction, Origin};

use crate::model::{
    CreateSession, Message, MessageStatus, Participant, ServerEvent, Session, SessionCreated,
};
use crate::store::Store;
use crate::ServiceError;

const EVENT_BUFFER: usize = 256;

struct SessionState {
    session: Session,
    /// token -> participant id
    tokens: BTreeMap<String, String>,
}

struct SessionHandle {
    state: Mutex<SessionState>,
    events: broadcast::Sender<ServerEvent>,
}

/// The chat relay: sessions, the translate-then-check pipeline, and event
/// fan-out. Admission is serialized per session.
pub struct ChatService {
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    backends: Vec<Arc<dyn TranslationBackend>>,
    detector: Option<Arc<dyn ErrorDetector>>,
    threshold: f64,
    store: Option<Store>,
}

/// A live subscription: the replayed backlog, then the live receiver.
pub struct Subscription {
    pub backlog: Vec<ServerEvent>,
    pub live: broadcast::Receiver<ServerEvent>,
    /// Live events with a seq below this were already replayed.
    pub next_seq: u64,
}

impl ChatService {
    /// `backends` are tried in order; the first serving a direction wins.
    /// Without a detector every message is delivered unchecked.
    pub fn new(
        backends: Vec<Arc<dyn TranslationBackend>>,
        detector: Option<Arc<dyn ErrorDetector>>,
        threshold: f64,
        store: Option<Store>,
    ) -> Result<Self, ServiceError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ServiceError::Config(format!("threshold {threshold} outside [0, 1]")));
        }
        let svc = ChatService {
            sessions: RwLock::new(HashMap::new()),
            backends,
            detector,
            threshold,
            store,
        };
        if let Some(store) = &svc.store {
            let mut map = svc.sessions.write().expect("session map poisoned");
            for r in store.load_all()? {
                let (events, _) = broadcast::channel(EVENT_BUFFER);
                map.insert(
                    r.session.session_id.clone(),
                    Arc::new(SessionHandle {
                        state: Mutex::new(SessionState {
                            session: r.session,
                            tokens: r.tokens,
                        }),
                        events,
                    }),
                );
            }
        }
        Ok(svc)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    fn handle(&self, session_id: &str) -> Result<Arc<SessionHandle>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(session_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session `{session_id}`")))
    }

    pub async fn create_session(&self, req: CreateSession) -> Result<SessionCreated, ServiceError> {
        let [a, b] = req.participants;
        if a.lang == b.lang {
            return Err(ServiceError::UnsupportedPair(format!(
                "both participants write `{}`",
                a.lang
            )));
        }
        for p in [&a, &b] {
            if p.display_name.trim().is_empty() {
                return Err(ServiceError::Invalid("display_name must not be empty".into()));
            }
        }
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let participants = [
            Participant {
                participant_id: "p1".into(),
                display_name: a.display_name,
                lang: a.lang,
            },
            Participant {
                participant_id: "p2".into(),
                display_name: b.display_name,
                lang: b.lang,
            },
        ];
        let session = Session {
            session_id: session_id.clone(),
            participants,
            created_at: Utc::now(),
            transcript: Vec::new(),
        };
        let mut by_participant = BTreeMap::new();
        let mut tokens = BTreeMap::new();
        for p in &session.participants {
            let token = uuid::Uuid::new_v4().simple().to_string();
            tokens.insert(token.clone(), p.participant_id.clone());
            by_participant.insert(p.participant_id.clone(), token);
        }
        if let Some(store) = &self.store {
            store.create(&session, &tokens)?;
        }
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        let handle = Arc::new(SessionHandle {
            state: Mutex::new(SessionState {
                session: session.clone(),
                tokens,
            }),
            events,
        });
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(session_id, handle);
        Ok(SessionCreated {
            session,
            tokens: by_participant,
        })
    }

    fn authenticate(state: &SessionState, token: &str) -> Result<String, ServiceError> {
        state
            .tokens
            .get(token)
            .cloned()
            .ok_or(ServiceError::Unauthorized)
    }

    /// Resolves a bearer token to its participant id.
    pub async fn participant_for(&self, session_id: &str, token: &str) -> Result<String, ServiceError> {
        let h = self.handle(session_id)?;
        let state = h.state.lock().await;
        Self::authenticate(&state, token)
    }

    pub async fn post_message(&self, session_id: &str, token: &str, text: &str) -> Result<Message, ServiceError> {
        self.admit(session_id, token, text, None).await
    }

    pub async fn revise_message(
        &self,
        session_id: &str,
        token: &str,
        message_id: &str,
        text: &str,
    ) -> Result<Message, ServiceError> {
        self.admit(session_id, token, text, Some(message_id)).await
    }

    async fn admit(
        &self,
        session_id: &str,
        token: &str,
        text: &str,
        supersedes: Option<&str>,
    ) -> Result<Message, ServiceError> {
        let h = self.handle(session_id)?;
        let mut state = h.state.lock().await;
        let sender = Self::authenticate(&state, token)?;
        if text.trim().is_empty() {
            return Err(ServiceError::Invalid("message text must not be empty".into()));
        }
        let session = &state.session;
        if let Some(target) = supersedes {
            let original = session
                .message(target)
                .ok_or_else(|| ServiceError::NotFound(format!("message `{target}`")))?;
            if original.sender != sender {
                return Err(ServiceError::Forbidden(format!(
                    "message `{target}` belongs to another participant"
                )));
            }
            let latest = session.latest_from(&sender).map(|m| m.message_id.as_str());
            if latest != Some(target) {
                return Err(ServiceError::Ordering(format!(
                    "message `{target}` is not your latest message"
                )));
            }
        }
        let me = session.participant(&sender).expect("token maps to a participant").clone();
        let other = session.other(&sender).expect("two participants").clone();
        let direction = Direction::new(me.lang, other.lang).expect("languages differ");
        // context: the other participant's most recent message
        let context = session
            .latest_from(&other.participant_id)
            .and_then(|m| m.translated_text.clone().map(|t| (m.src_text.clone(), t)));

        let translated = self.translate(direction, text).await;
        let mut message = Message {
            message_id: uuid::Uuid::new_v4().simple().to_string(),
            sender: sender.clone(),
            seq: session.transcript.len() as u64,
            src_lang: me.lang,
            src_text: text.to_string(),
            translated_text: None,
            prob_erroneous: None,
            warning: false,
            status: MessageStatus::Unchecked,
            supersedes: supersedes.map(str::to_string),
            translation_error: false,
            created_at: Utc::now(),
        };
        match translated {
            Err(e) => {
                tracing::warn!(session = session_id, error = %e, "translation failed; delivering degraded");
                message.translation_error = true;
            }
            Ok(translation) => {
                if let Some((ctx_src, ctx_tgt)) = context {
                    let quad = ChatQuad {
                        chat_id: session_id.to_string(),
                        index: message.seq as usize,
                        direction,
                        origin: Origin::MtHigh,
                        ctx_src,
                        ctx_tgt,
                        resp_src: text.to_string(),
                        resp_tgt: translation.clone(),
                    };
                    if let Some(prob) = self.detect(quad).await {
                        message.prob_erroneous = Some(prob);
                        message.warning = prob >= self.threshold;
                        message.status = if supersedes.is_some() {
                            MessageStatus::Revised
                        } else {
                            MessageStatus::Checked
                        };
                    }
                }
                message.translated_text = Some(translation);
            }
        }
        if let Some(store) = &self.store {
            store.append_message(session_id, &message)?;
        }
        state.session.transcript.push(message.clone());
        // no subscribers is fine
        let _ = h.events.send(ServerEvent::for_message(&message));
        Ok(message)
    }

    async fn translate(&self, direction: Direction, text: &str) -> Result<String, ServiceError> {
        let backend = self
            .backends
            .iter()
            .find(|b| b.info().serves(direction))
            .cloned()
            .ok_or_else(|| ServiceError::Backend(format!("no backend serves {direction}")))?;
        let text = text.to_string();
        tokio::task::spawn_blocking(move || translate_utterance(backend.as_ref(), direction, None, &text))
            .await
            .map_err(|e| ServiceError::Backend(e.to_string()))?
            .map_err(|e| ServiceError::Backend(e.to_string()))
    }

    /// Scores the quad; `None` when no detector is configured or it failed.
    async fn detect(&self, quad: ChatQuad) -> Option<f64> {
        let detector = self.detector.clone()?;
        let result = tokio::task::spawn_blocking(move || detector.predict(&quad)).await;
        match result {
            Ok(Ok(p)) => Some(p.prob_erroneous),
            Ok(Err(e)) => {
                tracing::error!(error = %e, "detector failed; delivering unchecked");
                None
            }
            Err(e) => {
                tracing::error!(error = %e, "detector task failed; delivering unchecked");
                None
            }
        }
    }

    pub async fn transcript(&self, session_id: &str, token: &str) -> Result<Session, ServiceError> {
        let h = self.handle(session_id)?;
        let state = h.state.lock().await;
        Self::authenticate(&state, token)?;
        Ok(state.session.clone())
    }

    /// Events for messages with `seq >= from`, then live ones.
    pub async fn subscribe(&self, session_id: &str, token: &str, from: u64) -> Result<Subscription, ServiceError> {
        let h = self.handle(session_id)?;
        // Holding the lock while subscribing means no message slips between
        // the backlog and the live stream.
        let state = h.state.lock().await;
        Self::authenticate(&state, token)?;
        let live = h.events.subscribe();
        let backlog: Vec<ServerEvent> = state
            .session
            .transcript
            .iter()
            .filter(|m| m.seq >= from)
            .map(ServerEvent::for_message)
            .collect();
        let next_seq = (state.session.transcript.len() as u64).max(from);
        Ok(Subscription {
            backlog,
            live,
            next_seq,
        })
    }
}
