//! The text-generation backend contract plus transcript recording and replay.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResponderError {
    #[error("http transport: {0}")]
    Transport(String),
    #[error("http status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion payload: {0}")]
    Payload(String),
    #[error("no transcript entry for sample {sample_index} of prompt starting {preview:?}")]
    MissingTranscriptEntry { sample_index: u32, preview: String },
    #[error("unrecognized prompt")]
    UnrecognizedPrompt,
    #[error("transcript {path}: {message}")]
    Transcript { path: PathBuf, message: String },
    #[error("{0}")]
    Other(String),
}

/// A text-generation backend. `sample_index` distinguishes the independent
/// samples drawn for one prompt.
pub trait Responder: Send + Sync {
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError>;
}

impl<R: Responder + ?Sized> Responder for &R {
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError> {
        (**self).complete(prompt, sample_index)
    }
}

impl<R: Responder + ?Sized> Responder for Box<R> {
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError> {
        (**self).complete(prompt, sample_index)
    }
}

impl<R: Responder + ?Sized> Responder for Arc<R> {
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError> {
        (**self).complete(prompt, sample_index)
    }
}

/// One recorded completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt: String,
    pub sample_index: u32,
    pub response: String,
}

/// Wraps a responder and records every successful completion.
///
/// Entries are keyed by `(prompt, sample_index)` and written sorted by that
/// key, so the transcript does not depend on completion timing.
pub struct RecordingResponder<R> {
    inner: R,
    entries: Mutex<BTreeMap<(String, u32), String>>,
}

impl<R: Responder> RecordingResponder<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries
            .lock()
            .expect("transcript lock poisoned")
            .iter()
            .map(|((prompt, sample_index), response)| TranscriptEntry {
                prompt: prompt.clone(),
                sample_index: *sample_index,
                response: response.clone(),
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("transcript lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_jsonl(&self, path: &Path) -> std::io::Result<u64> {
        write_transcript(path, &self.entries())
    }
}

impl<R: Responder> Responder for RecordingResponder<R> {
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError> {
        let response = self.inner.complete(prompt, sample_index)?;
        self.entries
            .lock()
            .expect("transcript lock poisoned")
            .insert((prompt.to_string(), sample_index), response.clone());
        Ok(response)
    }
}

pub fn write_transcript(path: &Path, entries: &[TranscriptEntry]) -> std::io::Result<u64> {
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e)?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(buf.len() as u64)
}

/// Serves completions from recorded transcripts. Bit-deterministic: the same
/// `(prompt, sample_index)` always yields the same string.
#[derive(Debug, Default)]
pub struct ReplayResponder {
    entries: HashMap<(String, u32), String>,
}

impl ReplayResponder {
    pub fn from_entries(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        Self {
            entries: entries
                .into_iter()
                .map(|e| ((e.prompt, e.sample_index), e.response))
                .collect(),
        }
    }

    /// Loads and merges one or more JSONL transcripts.
    pub fn from_files<P: AsRef<Path>>(paths: &[P]) -> Result<Self, ResponderError> {
        let mut all = Vec::new();
        for p in paths {
            let p = p.as_ref();
            let err = |message: String| ResponderError::Transcript {
                path: p.to_path_buf(),
                message,
            };
            let file = fs::File::open(p).map_err(|e| err(e.to_string()))?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| err(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: TranscriptEntry = serde_json::from_str(&line)
                    .map_err(|e| err(format!("line {}: {e}", lineno + 1)))?;
                all.push(entry);
            }
        }
        Ok(Self::from_entries(all))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Responder for ReplayResponder {
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError> {
        self.entries
            .get(&(prompt.to_string(), sample_index))
            .cloned()
            .ok_or_else(|| ResponderError::MissingTranscriptEntry {
                sample_index,
                preview: prompt.chars().take(60).collect(),
            })
    }
}

/// Adapts a closure into a responder; handy for tests and embedding.
pub struct FnResponder<F>(pub F);

impl<F> Responder for FnResponder<F>
where
    F: Fn(&str, u32) -> Result<String, ResponderError> + Send + Sync,
{
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError> {
        (self.0)(prompt, sample_index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recording_then_replay_is_identical() {
        let echo = FnResponder(|p: &str, i: u32| Ok(format!("{p}#{i}")));
        let rec = RecordingResponder::new(echo);
        for i in (0..5).rev() {
            rec.complete("b", i).unwrap();
            rec.complete("a", i).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        rec.write_jsonl(&path).unwrap();
        let first = fs::read(&path).unwrap();
        let lines: Vec<_> = std::str::from_utf8(&first).unwrap().lines().collect();
        assert_eq!(lines.len(), 10);
        assert!(lines[0].contains("\"prompt\":\"a\"") && lines[0].contains("\"sample_index\":0"));

        let replay = ReplayResponder::from_files(&[&path]).unwrap();
        let rec2 = RecordingResponder::new(&replay);
        for i in 0..5 {
            assert_eq!(rec2.complete("a", i).unwrap(), format!("a#{i}"));
            rec2.complete("b", i).unwrap();
        }
        let path2 = dir.path().join("t2.jsonl");
        rec2.write_jsonl(&path2).unwrap();
        assert_eq!(fs::read(&path2).unwrap(), first);
    }

    #[test]
    fn replay_miss_is_an_error() {
        let replay = ReplayResponder::default();
        assert!(matches!(
            replay.complete("nothing", 3),
            Err(ResponderError::MissingTranscriptEntry { sample_index: 3, .. })
        ));
    }

    #[test]
    fn malformed_transcript_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(&path, "{\"prompt\":\"a\",\"sample_index\":0,\"response\":\"x\"}\nnot json\n").unwrap();
        let err = ReplayResponder::from_files(&[&path]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
