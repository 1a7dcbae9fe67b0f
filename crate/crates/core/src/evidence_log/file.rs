use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{LeafRecord, LogError, MmrLog};
use crate::Hash32;

/// File magic of the append-only leaf log.
pub const LOG_MAGIC: &[u8; 8] = b"WTNSMMR1";

/// Bytes per leaf record (content hash ‖ metadata hash).
pub const RECORD_LEN: usize = 64;

/// Append-only on-disk leaf log: the magic followed by 64-byte records.
///
/// Opening an existing file rebuilds the MMR from its records; a partial
/// trailing record is reported rather than silently dropped.
#[derive(Debug)]
pub struct LogFile {
    path: PathBuf,
    file: File,
    records: Vec<LeafRecord>,
    log: MmrLog,
}

impl LogFile {
    /// Creates a new log file; fails if `path` already exists.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path)?;
        file.write_all(LOG_MAGIC)?;
        file.sync_data()?;
        Ok(Self {
            path,
            file,
            records: Vec::new(),
            log: MmrLog::new(),
        })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let mut bytes = Vec::new();
        File::open(&path)?.read_to_end(&mut bytes)?;
        let body = bytes.strip_prefix(LOG_MAGIC.as_slice()).ok_or(LogError::BadMagic)?;
        let chunks = body.chunks_exact(RECORD_LEN);
        if !chunks.remainder().is_empty() {
            return Err(LogError::TruncatedRecord(chunks.remainder().len()));
        }
        let records: Vec<LeafRecord> = chunks
            .map(|c| LeafRecord::from_bytes(c.try_into().expect("exact chunk")))
            .collect();
        let log = MmrLog::from_leaves(records.iter().map(LeafRecord::leaf_hash));
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(Self {
            path,
            file,
            records,
            log,
        })
    }

    /// Opens the log and checks the rebuilt root against `expected`.
    pub fn open_verified(path: impl AsRef<Path>, expected: &Hash32) -> Result<Self, LogError> {
        let log = Self::open(path)?;
        let actual = log.log.root()?;
        if &actual != expected {
            return Err(LogError::RootMismatch {
                expected: hex::encode(expected),
                actual: hex::encode(actual),
            });
        }
        Ok(log)
    }

    pub fn append(&mut self, record: LeafRecord) -> Result<(), LogError> {
        self.file.write_all(&record.to_bytes())?;
        self.file.sync_data()?;
        self.records.push(record);
        self.log.append(record.leaf_hash());
        Ok(())
    }

    pub fn records(&self) -> &[LeafRecord] {
        &self.records
    }

    pub fn log(&self) -> &MmrLog {
        &self.log
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: u8) -> LeafRecord {
        LeafRecord {
            content_hash: [i; 32],
            metadata_hash: [i.wrapping_mul(3); 32],
        }
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("evidence.mmr");
        let root = {
            let mut f = LogFile::create(&path).unwrap();
            for i in 0..9 {
                f.append(rec(i)).unwrap();
            }
            f.log().root().unwrap()
        };
        let mut reopened = LogFile::open_verified(&path, &root).unwrap();
        assert_eq!(reopened.records().len(), 9);
        reopened.append(rec(9)).unwrap();
        drop(reopened);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 8 + 10 * RECORD_LEN);
        assert_eq!(&bytes[..8], LOG_MAGIC);
        assert!(matches!(LogFile::open_verified(&path, &root), Err(LogError::RootMismatch { .. })));
    }

    #[test]
    fn create_refuses_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.mmr");
        LogFile::create(&path).unwrap();
        assert!(matches!(LogFile::create(&path), Err(LogError::Io(_))));
    }

    #[test]
    fn damaged_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let bad_magic = dir.path().join("a.mmr");
        std::fs::write(&bad_magic, b"NOTMAGIC").unwrap();
        assert!(matches!(LogFile::open(&bad_magic), Err(LogError::BadMagic)));

        let partial = dir.path().join("b.mmr");
        let mut bytes = LOG_MAGIC.to_vec();
        bytes.extend_from_slice(&rec(1).to_bytes());
        bytes.extend_from_slice(&[0u8; 10]);
        std::fs::write(&partial, bytes).unwrap();
        assert!(matches!(LogFile::open(&partial), Err(LogError::TruncatedRecord(10))));
    }
}
