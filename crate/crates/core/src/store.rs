//! Random-access binary file of embedding records.
//!
//! Layout, all little-endian with no padding:
//!
//! ```text
//! magic "CBEM" | version u16 = 1 | dim u32 | record count u64
//! per record: example_id u64 | sentence_count u8 | (1 + sentence_count) x dim x f32
//! ```
//!
//! The whole-text vector precedes the sentence vectors in each record.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

use crate::encoder::{EmbeddingRecord, EmbeddingVector};

pub const STORE_MAGIC: [u8; 4] = *b"CBEM";
pub const STORE_VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 4 + 2 + 4 + 8;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: bad magic {found:?}", path.display())]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("{}: unsupported version {found}", path.display())]
    VersionMismatch { path: PathBuf, found: u16 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("example id {0} not in store")]
    IdNotFound(u64),
    #[error("{}: file truncated", path.display())]
    TruncatedFile { path: PathBuf },
    #[error("invalid record {example_id}: {reason}")]
    InvalidRecord { example_id: u64, reason: String },
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T> = std::result::Result<T, StoreError>;

fn io_error(path: &Path, source: io::Error) -> StoreError {
    if source.kind() == io::ErrorKind::UnexpectedEof {
        StoreError::TruncatedFile {
            path: path.to_path_buf(),
        }
    } else {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Header fields of an opened store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreHeader {
    pub version: u16,
    pub dim: usize,
    pub count: u64,
}

fn record_len(dim: usize, sentence_count: u8) -> u64 {
    8 + 1 + (1 + sentence_count as u64) * dim as u64 * 4
}

/// Writes `records` to `path`, replacing any existing file.
pub fn store_write(path: &Path, records: &[EmbeddingRecord], dim: usize) -> Result<()> {
    if dim == 0 || dim > u32::MAX as usize {
        return Err(StoreError::DimMismatch {
            expected: 1,
            found: dim,
        });
    }
    for r in records {
        check_record(r, dim)?;
    }
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    write_all(&mut w, records, dim).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

fn check_record(r: &EmbeddingRecord, dim: usize) -> Result<()> {
    let invalid = |reason: String| StoreError::InvalidRecord {
        example_id: r.example_id,
        reason,
    };
    if r.sentence_vectors.is_empty() || r.sentence_vectors.len() > u8::MAX as usize {
        return Err(invalid(format!(
            "sentence count {} outside 1..=255",
            r.sentence_vectors.len()
        )));
    }
    for v in std::iter::once(&r.whole_text).chain(&r.sentence_vectors) {
        if v.dim() != dim {
            return Err(StoreError::DimMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        if v.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite value".into()));
        }
    }
    Ok(())
}

fn write_all<W: Write>(w: &mut W, records: &[EmbeddingRecord], dim: usize) -> io::Result<()> {
    w.write_all(&STORE_MAGIC)?;
    w.write_all(&STORE_VERSION.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        w.write_all(&r.example_id.to_le_bytes())?;
        w.write_all(&[r.sentence_vectors.len() as u8])?;
        for v in std::iter::once(&r.whole_text).chain(&r.sentence_vectors) {
            for x in v.as_slice() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    offset: u64,
    sentence_count: u8,
}

/// An open store. Opening scans record headers once to build an id index;
/// lookups afterwards seek straight to the record.
#[derive(Debug)]
pub struct EmbeddingStore {
    path: PathBuf,
    header: StoreHeader,
    ids: Vec<u64>,
    index: HashMap<u64, Slot>,
    file: Mutex<File>,
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

impl EmbeddingStore {
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = File::open(path).map_err(|e| io_error(path, e))?;
        let file_len = file.metadata().map_err(|e| io_error(path, e))?.len();
        let err = |e| io_error(path, e);

        let magic: [u8; 4] = read_array(&mut file).map_err(err)?;
        if magic != STORE_MAGIC {
            return Err(StoreError::BadMagic {
                path: path.to_path_buf(),
                found: magic,
            });
        }
        let version = u16::from_le_bytes(read_array(&mut file).map_err(err)?);
        if version != STORE_VERSION {
            return Err(StoreError::VersionMismatch {
                path: path.to_path_buf(),
                found: version,
            });
        }
        let dim = u32::from_le_bytes(read_array(&mut file).map_err(err)?) as usize;
        if dim == 0 {
            return Err(StoreError::DimMismatch { expected: 1, found: 0 });
        }
        let count = u64::from_le_bytes(read_array(&mut file).map_err(err)?);

        let truncated = || StoreError::TruncatedFile {
            path: path.to_path_buf(),
        };
        let mut ids = Vec::new();
        let mut index = HashMap::new();
        let mut offset = HEADER_LEN;
        for _ in 0..count {
            if offset + 9 > file_len {
                return Err(truncated());
            }
            file.seek(SeekFrom::Start(offset)).map_err(err)?;
            let id = u64::from_le_bytes(read_array(&mut file).map_err(err)?);
            let [sentence_count] = read_array::<1, _>(&mut file).map_err(err)?;
            if sentence_count == 0 {
                return Err(StoreError::InvalidRecord {
                    example_id: id,
                    reason: "zero sentences".into(),
                });
            }
            let len = record_len(dim, sentence_count);
            if offset + len > file_len {
                return Err(truncated());
            }
            ids.push(id);
            index.entry(id).or_insert(Slot { offset, sentence_count });
            offset += len;
        }
        if offset != file_len {
            return Err(StoreError::InvalidRecord {
                example_id: ids.last().copied().unwrap_or_default(),
                reason: format!("{} trailing bytes after last record", file_len - offset),
            });
        }

        Ok(Self {
            path: path.to_path_buf(),
            header: StoreHeader { version, dim, count },
            ids,
            index,
            file: Mutex::new(file),
        })
    }

    /// Opens a store and checks its dimension.
    pub fn open_expecting(path: &Path, dim: usize) -> Result<Self> {
        let store = Self::open(path)?;
        if store.header.dim != dim {
            return Err(StoreError::DimMismatch {
                expected: dim,
                found: store.header.dim,
            });
        }
        Ok(store)
    }

    pub fn header(&self) -> StoreHeader {
        self.header
    }

    pub fn dim(&self) -> usize {
        self.header.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Example ids in file order.
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn contains(&self, example_id: u64) -> bool {
        self.index.contains_key(&example_id)
    }

    pub fn get(&self, example_id: u64) -> Result<EmbeddingRecord> {
        let slot = *self.index.get(&example_id).ok_or(StoreError::IdNotFound(example_id))?;
        let dim = self.header.dim;
        let body = (1 + slot.sentence_count as usize) * dim * 4;
        let mut buf = vec![0u8; body];
        {
            let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
            file.seek(SeekFrom::Start(slot.offset + 9))
                .and_then(|_| file.read_exact(&mut buf))
                .map_err(|e| io_error(&self.path, e))?;
        }
        let mut vectors = buf.chunks_exact(dim * 4).map(|chunk| {
            let values: Vec<f32> = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            EmbeddingVector::new(values).map_err(|_| StoreError::InvalidRecord {
                example_id,
                reason: "non-finite value".into(),
            })
        });
        let whole_text = vectors.next().expect("record has a whole-text vector")?;
        let sentence_vectors = vectors.collect::<Result<Vec<_>>>()?;
        Ok(EmbeddingRecord {
            example_id,
            whole_text,
            sentence_vectors,
        })
    }

    /// Reads every record in file order.
    pub fn read_all(&self) -> Result<Vec<EmbeddingRecord>> {
        self.ids.iter().map(|&id| self.get(id)).collect()
    }
}
