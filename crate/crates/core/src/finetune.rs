//! Conversational JSONL export for fine-tuning.
//!
//! Each line is `{"messages":[{"role":..,"content":..},..]}`. With
//! [`ExportStyle::WithSystem`] the roles are system, user, assistant. With
//! [`ExportStyle::MergedSystem`] the system text is prepended to the user
//! turn, separated by one `\n`, for models that have no system role.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::prompt::{PromptExchange, SYSTEM_PROMPT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportStyle {
    #[default]
    WithSystem,
    MergedSystem,
}

impl FromStr for ExportStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "with-system" | "with_system" => Ok(ExportStyle::WithSystem),
            "merged-system" | "merged_system" => Ok(ExportStyle::MergedSystem),
            other => Err(format!("unknown export style {other:?}")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("conversation {0} has no assistant turn")]
    MissingAssistant(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineTuneRecord {
    pub messages: Vec<ChatMessage>,
}

impl FineTuneRecord {
    pub fn from_exchange(ex: &PromptExchange, style: ExportStyle) -> Option<Self> {
        let answer = ex.expected_assistant.as_ref()?;
        let messages = match style {
            ExportStyle::WithSystem => vec![
                ChatMessage::new(Role::System, ex.system_text.clone()),
                ChatMessage::new(Role::User, ex.user_text.clone()),
                ChatMessage::new(Role::Assistant, answer.clone()),
            ],
            ExportStyle::MergedSystem => vec![
                ChatMessage::new(Role::User, format!("{}\n{}", ex.system_text, ex.user_text)),
                ChatMessage::new(Role::Assistant, answer.clone()),
            ],
        };
        Some(Self { messages })
    }

    /// Recovers the exchange. A merged user turn is split back only when it
    /// starts with the standard system prompt.
    pub fn to_exchange(&self) -> Option<PromptExchange> {
        let find = |role| self.messages.iter().find(|m| m.role == role).map(|m| m.content.clone());
        let user = find(Role::User)?;
        let assistant = find(Role::Assistant);
        let (system_text, user_text) = match find(Role::System) {
            Some(s) => (s, user),
            None => match user.strip_prefix(SYSTEM_PROMPT).and_then(|r| r.strip_prefix('\n')) {
                Some(rest) => (SYSTEM_PROMPT.to_string(), rest.to_string()),
                None => (String::new(), user),
            },
        };
        Some(PromptExchange {
            system_text,
            user_text,
            expected_assistant: assistant,
        })
    }
}

pub fn write_jsonl<W: Write>(
    writer: W,
    conversations: &[PromptExchange],
    style: ExportStyle,
) -> Result<(), ExportError> {
    let records = conversations
        .iter()
        .enumerate()
        .map(|(i, ex)| FineTuneRecord::from_exchange(ex, style).ok_or(ExportError::MissingAssistant(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let io = |source| ExportError::Io {
        path: PathBuf::from("<jsonl output>"),
        source,
    };
    let mut w = BufWriter::new(writer);
    for r in &records {
        serde_json::to_writer(&mut w, r).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes the file only after every conversation is validated.
pub fn export_jsonl(
    conversations: &[PromptExchange],
    style: ExportStyle,
    path: &Path,
) -> Result<(), ExportError> {
    if let Some(i) = conversations.iter().position(|c| c.expected_assistant.is_none()) {
        return Err(ExportError::MissingAssistant(i));
    }
    let file = File::create(path).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_jsonl(file, conversations, style).map_err(|e| match e {
        ExportError::Io { source, .. } => ExportError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_jsonl<R: Read>(reader: R) -> Result<Vec<FineTuneRecord>, ExportError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| ExportError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ExportError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exchange(answer: Option<&str>) -> PromptExchange {
        PromptExchange {
            system_text: SYSTEM_PROMPT.into(),
            user_text: "Drug1: A\nCLASSIFICATION:".into(),
            expected_assistant: answer.map(str::to_string),
        }
    }

    #[test]
    fn with_system_has_three_roles() {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[exchange(Some("interaction"))], ExportStyle::WithSystem).unwrap();
        let recs = read_jsonl(buf.as_slice()).unwrap();
        let roles: Vec<_> = recs[0].messages.iter().map(|m| m.role).collect();
        assert_eq!(roles, [Role::System, Role::User, Role::Assistant]);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(r#"{"messages":[{"role":"system","content":"You are an expert"#));
    }

    #[test]
    fn merged_style_drops_system_role() {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[exchange(Some("no interaction"))], ExportStyle::MergedSystem).unwrap();
        let recs = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(recs[0].messages.len(), 2);
        assert_eq!(recs[0].messages[0].content, format!("{SYSTEM_PROMPT}\nDrug1: A\nCLASSIFICATION:"));
        assert_eq!(recs[0].to_exchange().unwrap(), exchange(Some("no interaction")));
    }

    #[test]
    fn missing_assistant_fails() {
        let mut buf = Vec::new();
        let err = write_jsonl(&mut buf, &[exchange(Some("interaction")), exchange(None)], ExportStyle::WithSystem)
            .unwrap_err();
        assert!(matches!(err, ExportError::MissingAssistant(1)));
        assert!(buf.is_empty());
    }

    #[test]
    fn empty_list_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        export_jsonl(&[], ExportStyle::WithSystem, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing-dir").join("x.jsonl");
        assert!(matches!(
            export_jsonl(&[exchange(Some("interaction"))], ExportStyle::WithSystem, &path),
            Err(ExportError::Io { .. })
        ));
    }
}
