//! Append-only JSONL progress journal for batch classification.
//!
//! Line 1 is a header binding the journal to one batch (model and requests,
//! by CRC-64 fingerprint); each further line records one completed request.
//! An unterminated final line is an interrupted write and is discarded on
//! resume; anything else that fails to parse makes the journal corrupt.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crc::{Crc, CRC_64_XZ};
use serde::{Deserialize, Serialize};

use super::client::ClassificationResult;
use super::prompt::ClassificationRequest;
use crate::error::{Error, Result};

const MAGIC: &str = "displace-classify";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JournalMode {
    /// Continue an existing journal, creating it if absent.
    Resume,
    /// Discard any existing journal.
    Restart,
}

#[derive(Serialize, Deserialize)]
struct Header {
    journal: String,
    version: u32,
    fingerprint: String,
    n_requests: usize,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    index: usize,
    result: ClassificationResult,
}

pub fn fingerprint(model: &str, requests: &[ClassificationRequest]) -> u64 {
    let crc = Crc::<u64>::new(&CRC_64_XZ);
    let mut d = crc.digest();
    d.update(model.as_bytes());
    d.update(b"\0");
    for r in requests {
        d.update(serde_json::to_string(r).expect("request serializes").as_bytes());
        d.update(b"\n");
    }
    d.finalize()
}

pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens the journal at `path` and returns the results it already holds.
    pub fn open(
        path: &Path,
        fingerprint: u64,
        n_requests: usize,
        mode: JournalMode,
    ) -> Result<(Journal, BTreeMap<usize, ClassificationResult>)> {
        let existing = match (mode, path.exists()) {
            (JournalMode::Resume, true) => {
                let mut s = String::new();
                File::open(path)?.read_to_string(&mut s)?;
                Some(s)
            }
            _ => None,
        };
        let corrupt = |reason: String| Error::JournalCorrupt {
            path: path.to_path_buf(),
            reason,
        };

        let Some(text) = existing.filter(|s| !s.is_empty()) else {
            let mut file = File::create(path)?;
            let header = Header {
                journal: MAGIC.into(),
                version: VERSION,
                fingerprint: format!("{fingerprint:016x}"),
                n_requests,
            };
            writeln!(file, "{}", serde_json::to_string(&header).expect("header serializes"))?;
            file.sync_data()?;
            return Ok((
                Journal {
                    path: path.to_path_buf(),
                    file,
                },
                BTreeMap::new(),
            ));
        };

        let complete_len = text.rfind('\n').map_or(0, |i| i + 1);
        let mut lines = text[..complete_len].lines().enumerate();
        let header: Header = lines
            .next()
            .and_then(|(_, l)| serde_json::from_str(l).ok())
            .ok_or_else(|| corrupt("missing or unreadable header".into()))?;
        if header.journal != MAGIC || header.version != VERSION {
            return Err(corrupt(format!("not a version {VERSION} classification journal")));
        }
        if header.fingerprint != format!("{fingerprint:016x}") || header.n_requests != n_requests {
            return Err(corrupt("journal belongs to a different model or request list".into()));
        }
        let mut done = BTreeMap::new();
        for (i, line) in lines {
            let entry: Entry = serde_json::from_str(line).map_err(|e| corrupt(format!("line {}: {e}", i + 1)))?;
            if entry.index >= n_requests {
                return Err(corrupt(format!("line {}: index {} out of range", i + 1, entry.index)));
            }
            if done.insert(entry.index, entry.result).is_some() {
                return Err(corrupt(format!("line {}: duplicate index {}", i + 1, entry.index)));
            }
        }

        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(complete_len as u64)?;
        let mut file = file;
        std::io::Seek::seek(&mut file, std::io::SeekFrom::End(0))?;
        Ok((
            Journal {
                path: path.to_path_buf(),
                file,
            },
            done,
        ))
    }

    pub fn append(&mut self, index: usize, result: &ClassificationResult) -> Result<()> {
        let mut line = serde_json::to_string(&Entry {
            index,
            result: result.clone(),
        })
        .expect("entry serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::super::prompt::PromptMode;
    use super::*;

    fn result(p: f64) -> ClassificationResult {
        ClassificationResult {
            p_theory: p,
            chosen_option: 1,
            raw_token_logprobs: BTreeMap::from([("1".to_string(), p.ln())]),
            model_id: "m".into(),
        }
    }

    #[test]
    fn round_trip_and_partial_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        {
            let (mut j, done) = Journal::open(&path, 7, 3, JournalMode::Resume).unwrap();
            assert!(done.is_empty());
            j.append(2, &result(0.3)).unwrap();
            j.append(0, &result(0.1 + 0.2)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "{{\"index\":1,\"res").unwrap();
        drop(f);

        let (mut j, done) = Journal::open(&path, 7, 3, JournalMode::Resume).unwrap();
        assert_eq!(done.keys().copied().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(done[&0].p_theory, 0.1 + 0.2);
        j.append(1, &result(0.5)).unwrap();
        drop(j);
        let (_, done) = Journal::open(&path, 7, 3, JournalMode::Resume).unwrap();
        assert_eq!(done.len(), 3);
    }

    #[test]
    fn corruption_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        drop(Journal::open(&path, 7, 3, JournalMode::Resume).unwrap());
        assert!(matches!(
            Journal::open(&path, 8, 3, JournalMode::Resume),
            Err(Error::JournalCorrupt { .. })
        ));

        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        writeln!(f, "not json").unwrap();
        drop(f);
        assert!(matches!(
            Journal::open(&path, 7, 3, JournalMode::Resume),
            Err(Error::JournalCorrupt { .. })
        ));
        let (_, done) = Journal::open(&path, 7, 3, JournalMode::Restart).unwrap();
        assert!(done.is_empty());
        assert!(Journal::open(&path, 7, 3, JournalMode::Resume).is_ok());

        std::fs::write(&path, "garbage\n").unwrap();
        assert!(matches!(
            Journal::open(&path, 7, 3, JournalMode::Resume),
            Err(Error::JournalCorrupt { .. })
        ));
    }

    #[test]
    fn fingerprint_tracks_inputs() {
        let a = ClassificationRequest::new("A", "a", "B", "b", PromptMode::ZeroShot);
        let mut b = a.clone();
        b.prompt_mode = PromptMode::FewShot;
        let one = std::slice::from_ref(&a);
        let copy = vec![a.clone()];
        assert_eq!(fingerprint("m", one), fingerprint("m", &copy));
        assert_ne!(fingerprint("m", one), fingerprint("m", &[b]));
        assert_ne!(fingerprint("m", one), fingerprint("n", one));
    }
}
