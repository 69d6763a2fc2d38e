use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use xlchat_core::Lang;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: String,
    pub display_name: String,
    pub lang: Lang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageStatus {
    /// The detector scored the message.
    Checked,
    /// No score: no usable context, or translation or detection failed.
    Unchecked,
    /// A scored replacement of an earlier message.
    Revised,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub message_id: String,
    pub sender: String,
    pub seq: u64,
    pub src_lang: Lang,
    pub src_text: String,
    /// Absent when translation failed.
    pub translated_text: Option<String>,
    pub prob_erroneous: Option<f64>,
    pub warning: bool,
    pub status: MessageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersedes: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub translation_error: bool,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub participants: [Participant; 2],
    pub created_at: DateTime<Utc>,
    pub transcript: Vec<Message>,
}

impl Session {
    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.participant_id == id)
    }

    pub fn other(&self, id: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.participant_id != id)
    }

    pub fn message(&self, id: &str) -> Option<&Message> {
        self.transcript.iter().find(|m| m.message_id == id)
    }

    /// The most recent message sent by `participant`.
    pub fn latest_from(&self, participant: &str) -> Option<&Message> {
        self.transcript.iter().rev().find(|m| m.sender == participant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    Message,
    Revision,
    Degraded,
}

/// What subscribers receive; one per stored message, in seq order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerEvent {
    #[serde(rename = "type")]
    pub kind: EventType,
    pub message: Message,
}

impl ServerEvent {
    pub fn for_message(message: &Message) -> Self {
        let kind = if message.translation_error {
            EventType::Degraded
        } else if message.supersedes.is_some() {
            EventType::Revision
        } else {
            EventType::Message
        };
        ServerEvent {
            kind,
            message: message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewParticipant {
    pub display_name: String,
    pub lang: Lang,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    pub participants: [NewParticipant; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session: Session,
    /// Bearer token per participant id.
    pub tokens: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostText {
    pub text: String,
}
