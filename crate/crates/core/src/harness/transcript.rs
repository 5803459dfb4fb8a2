//! JSON-Lines transcripts: one event per line, no wall-clock fields.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::engine::Event;

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt transcript at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

/// Canonical bytes of an event list: compact JSON, one record per line.
pub fn canonical_bytes(events: &[Event]) -> Vec<u8> {
    let mut out = Vec::new();
    for event in events {
        serde_json::to_writer(&mut out, event).expect("events serialize");
        out.push(b'\n');
    }
    out
}

/// Lowercase hex SHA-256.
pub fn canonical_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_transcript(path: impl AsRef<Path>, events: &[Event]) -> Result<String, TranscriptError> {
    let path = path.as_ref();
    let bytes = canonical_bytes(events);
    let io = |source| TranscriptError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(&bytes).map_err(io)?;
    file.flush().map_err(io)?;
    Ok(canonical_hash(&bytes))
}

/// Parses a transcript, checking that seqs are dense from 0.
pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<Event>, TranscriptError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| TranscriptError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_transcript(BufReader::new(file))
}

pub fn parse_transcript(reader: impl BufRead) -> Result<Vec<Event>, TranscriptError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| TranscriptError::Corrupt {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|e| TranscriptError::Corrupt {
            line: line_no,
            reason: e.to_string(),
        })?;
        let expected = events.len() as u64;
        if event.seq != expected {
            return Err(TranscriptError::Corrupt {
                line: line_no,
                reason: format!("seq {} where {expected} was expected", event.seq),
            });
        }
        events.push(event);
    }
    Ok(events)
}
