//! Append-only per-session logs: `<dir>/sessions/<session_id>.jsonl`, a
//! header line followed by one line per message.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::{Message, Participant, Session};
use crate::ServiceError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Session {
        session_id: String,
        participants: [Participant; 2],
        created_at: DateTime<Utc>,
        /// token -> participant id
        tokens: BTreeMap<String, String>,
    },
    Message(Message),
}

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

/// A session recovered from disk with its access tokens.
pub struct Restored {
    pub session: Session,
    pub tokens: BTreeMap<String, String>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Storage(format!("{}: {e}", path.display()))
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into().join("sessions");
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        Ok(Store { dir })
    }

    fn path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.jsonl"))
    }

    fn append(&self, session_id: &str, record: &Record, create: bool) -> Result<(), ServiceError> {
        let path = self.path(session_id);
        let mut f = OpenOptions::new()
            .create_new(create)
            .append(true)
            .open(&path)
            .map_err(|e| io(&path, e))?;
        let mut line = serde_json::to_string(record).map_err(|e| io(&path, e))?;
        line.push('\n');
        f.write_all(line.as_bytes()).map_err(|e| io(&path, e))?;
        f.sync_data().map_err(|e| io(&path, e))
    }

    pub fn create(&self, session: &Session, tokens: &BTreeMap<String, String>) -> Result<(), ServiceError> {
        let header = Record::Session {
            session_id: session.session_id.clone(),
            participants: session.participants.clone(),
            created_at: session.created_at,
            tokens: tokens.clone(),
        };
        self.append(&session.session_id, &header, true)?;
        for m in &session.transcript {
            self.append_message(&session.session_id, m)?;
        }
        Ok(())
    }

    pub fn append_message(&self, session_id: &str, message: &Message) -> Result<(), ServiceError> {
        self.append(session_id, &Record::Message(message.clone()), false)
    }

    /// Replays every session log in the directory.
    pub fn load_all(&self) -> Result<Vec<Restored>, ServiceError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(|e| io(&self.dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        paths.iter().map(|p| Self::load(p)).collect()
    }

    fn load(path: &Path) -> Result<Restored, ServiceError> {
        let f = File::open(path).map_err(|e| io(path, e))?;
        let mut restored: Option<Restored> = None;
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record =
                serde_json::from_str(&line).map_err(|e| io(path, format!("line {}: {e}", n + 1)))?;
            match (record, restored.as_mut()) {
                (
                    Record::Session {
                        session_id,
                        participants,
                        created_at,
                        tokens,
                    },
                    None,
                ) => {
                    restored = Some(Restored {
                        session: Session {
                            session_id,
                            participants,
                            created_at,
                            transcript: Vec::new(),
                        },
                        tokens,
                    })
                }
                (Record::Message(m), Some(r)) => {
                    if m.seq != r.session.transcript.len() as u64 {
                        return Err(io(path, format!("line {}: seq {} out of order", n + 1, m.seq)));
                    }
                    r.session.transcript.push(m);
                }
                _ => return Err(io(path, format!("line {}: unexpected record", n + 1))),
            }
        }
        restored.ok_or_else(|| io(path, "empty session log"))
    }
}
