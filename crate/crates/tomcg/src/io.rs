//! Line-delimited JSON readers and writers for corpora, benchmarks and
//! predictions.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;
use tomcg_core::corpus::{self, CorpusError, CorpusRecord, Dialog};
use tomcg_core::eval::Prediction;
use tomcg_core::querygen::Query;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("read failure: {0}")]
    Read(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("serialization failure: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Parses every non-blank line as a `T`, tagging each with its 1-based
/// line number.
pub fn read_jsonl<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<(usize, T)>, IoError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| IoError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(
    mut out: W,
    items: impl IntoIterator<Item = T>,
) -> Result<(), IoError> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Assembles dialogs without checking invariants (see [`parse_corpus`]).
pub fn read_corpus_unvalidated<R: Read>(input: R) -> Result<Vec<Dialog>, IoError> {
    let records: Vec<(usize, CorpusRecord)> = read_jsonl(input)?;
    Ok(corpus::assemble(records)?)
}

/// Parses and validates a corpus; any invariant violation is an error.
pub fn parse_corpus<R: Read>(input: R) -> Result<Vec<Dialog>, IoError> {
    let records: Vec<(usize, CorpusRecord)> = read_jsonl(input)?;
    Ok(corpus::assemble_validated(records)?)
}

pub fn write_corpus<W: Write>(out: W, dialogs: &[Dialog]) -> Result<(), IoError> {
    write_jsonl(out, dialogs.iter().flat_map(Dialog::to_records))
}

pub fn read_benchmark<R: Read>(input: R) -> Result<Vec<Query>, IoError> {
    Ok(read_jsonl(input)?.into_iter().map(|(_, q)| q).collect())
}

pub fn read_predictions<R: Read>(input: R) -> Result<Vec<Prediction>, IoError> {
    Ok(read_jsonl(input)?.into_iter().map(|(_, p)| p).collect())
}

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a whole file, mapping failures to an error naming the path.
pub fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn create_file(path: &Path) -> Result<std::io::BufWriter<fs::File>, IoError> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| IoError::File {
            path: path.display().to_string(),
            source,
        })
}
