//! Face embeddings and the owner enrollment database.
//!
//! Embeddings are 128-dimensional unit-norm vectors compared by cosine
//! similarity. An [`OwnerDatabase`] holds every enrollment embedding for one
//! identity; a probe matches when its best similarity against the enrolled
//! set reaches the decision threshold.
//!
//! Databases persist in a small self-describing binary format (`EMBDB1`):
//!
//! ```text
//! offset  size  field
//! 0       7     magic b"EMBDB1\n"
//! 7       4     format_version  u32 LE
//! 11      8     created_at      u64 LE (unix seconds, 0 = unset)
//! 19      4     identity length u32 LE
//! 23      n     identity        UTF-8
//! 23+n    4     embedding count u32 LE
//! ...           count x 128 components, f64 LE each
//! ```
//!
//! All multi-byte values are little-endian. Components round-trip
//! bit-exactly.

use std::io::{self, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dimensionality of every embedding vector.
pub const EMBEDDING_DIM: usize = 128;

/// Magic bytes opening a database file.
pub const DB_MAGIC: &[u8; 7] = b"EMBDB1\n";

/// Database layout revision written by [`OwnerDatabase::save`].
pub const DB_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("embedding must have {EMBEDDING_DIM} components, got {0}")]
    WrongDimension(usize),
    #[error("embedding component {index} is not finite")]
    NonFinite { index: usize },
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("enrollment requires at least one embedding")]
    EmptyEnrollment,
}

#[derive(Debug, Error)]
pub enum DatabaseError {
    #[error("not an embedding database (bad magic bytes)")]
    NotEmbeddingDatabase,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("database file is truncated")]
    Truncated,
    #[error("database file has {0} trailing bytes after the last embedding")]
    TrailingData(usize),
    #[error("database identity is not valid UTF-8")]
    InvalidIdentity,
    #[error("stored embedding is invalid: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A 128-dimensional embedding with finite components and nonzero norm.
///
/// Construction checks the invariants once, which keeps every similarity
/// computation downstream infallible.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    components: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Result<Self, EmbeddingError> {
        if components.len() != EMBEDDING_DIM {
            return Err(EmbeddingError::WrongDimension(components.len()));
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(EmbeddingError::NonFinite { index });
        }
        let vector = Self { components };
        if vector.norm() == 0.0 {
            return Err(EmbeddingError::ZeroNorm);
        }
        Ok(vector)
    }

    /// Construct and scale to unit norm.
    pub fn unit(components: Vec<f64>) -> Result<Self, EmbeddingError> {
        Ok(Self::new(components)?.normalized())
    }

    /// Standard basis vector along `axis`. Handy for exact-arithmetic tests.
    pub fn basis(axis: usize) -> Self {
        assert!(axis < EMBEDDING_DIM, "axis {axis} out of range");
        let mut components = vec![0.0; EMBEDDING_DIM];
        components[axis] = 1.0;
        Self { components }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let norm = self.norm();
        Self { components: self.components.iter().map(|c| c / norm).collect() }
    }
}

/// Cosine similarity between two embeddings, in `[-1, 1]` up to rounding.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let dot: f64 = a.components.iter().zip(&b.components).map(|(x, y)| x * y).sum();
    dot / (a.norm() * b.norm())
}

/// Outcome of matching one probe against the enrolled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Best cosine similarity over all enrolled embeddings.
    pub similarity: f64,
    /// Whether `similarity` reached the decision threshold.
    pub is_owner: bool,
    /// Enrolled identity when matched, `None` otherwise.
    pub matched_identity: Option<String>,
}

/// Enrollment database for a single identity.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnerDatabase {
    identity: String,
    embeddings: Vec<EmbeddingVector>,
    created_at: u64,
    format_version: u32,
}

impl OwnerDatabase {
    /// Build a database from raw enrollment embeddings.
    ///
    /// Every embedding is normalized on the way in, so matching reduces to a
    /// dot product against unit vectors.
    pub fn enroll(
        identity: impl Into<String>,
        embeddings: Vec<EmbeddingVector>,
    ) -> Result<Self, EmbeddingError> {
        if embeddings.is_empty() {
            return Err(EmbeddingError::EmptyEnrollment);
        }
        Ok(Self {
            identity: identity.into(),
            embeddings: embeddings.iter().map(EmbeddingVector::normalized).collect(),
            created_at: 0,
            format_version: DB_FORMAT_VERSION,
        })
    }

    pub fn with_created_at(mut self, created_at: u64) -> Self {
        self.created_at = created_at;
        self
    }

    pub fn identity(&self) -> &str {
        &self.identity
    }

    pub fn embeddings(&self) -> &[EmbeddingVector] {
        &self.embeddings
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    /// Match a probe embedding against the enrolled set.
    ///
    /// The similarity reported is the maximum over all enrolled embeddings;
    /// the owner decision is `similarity >= threshold`.
    pub fn match_probe(&self, probe: &EmbeddingVector, threshold: f64) -> MatchResult {
        let similarity = self
            .embeddings
            .iter()
            .map(|e| cosine_similarity(probe, e))
            .fold(f64::NEG_INFINITY, f64::max);
        let is_owner = similarity >= threshold;
        MatchResult {
            similarity,
            is_owner,
            matched_identity: is_owner.then(|| self.identity.clone()),
        }
    }

    /// Serialize to the `EMBDB1` binary layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            DB_MAGIC.len() + 16 + 4 + self.identity.len() + 4
                + self.embeddings.len() * EMBEDDING_DIM * 8,
        );
        out.extend_from_slice(DB_MAGIC);
        out.extend_from_slice(&self.format_version.to_le_bytes());
        out.extend_from_slice(&self.created_at.to_le_bytes());
        out.extend_from_slice(&(self.identity.len() as u32).to_le_bytes());
        out.extend_from_slice(self.identity.as_bytes());
        out.extend_from_slice(&(self.embeddings.len() as u32).to_le_bytes());
        for embedding in &self.embeddings {
            for component in embedding.components() {
                out.extend_from_slice(&component.to_le_bytes());
            }
        }
        out
    }

    /// Parse the `EMBDB1` binary layout.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DatabaseError> {
        let mut cursor = io::Cursor::new(bytes);

        let mut magic = [0u8; 7];
        read_exact(&mut cursor, &mut magic)?;
        if &magic != DB_MAGIC {
            return Err(DatabaseError::NotEmbeddingDatabase);
        }

        let format_version = read_u32(&mut cursor)?;
        if format_version != DB_FORMAT_VERSION {
            return Err(DatabaseError::UnsupportedVersion(format_version));
        }

        let created_at = read_u64(&mut cursor)?;

        let identity_len = read_u32(&mut cursor)? as usize;
        let mut identity_bytes = vec![0u8; identity_len];
        read_exact(&mut cursor, &mut identity_bytes)?;
        let identity =
            String::from_utf8(identity_bytes).map_err(|_| DatabaseError::InvalidIdentity)?;

        let count = read_u32(&mut cursor)? as usize;
        let mut embeddings = Vec::with_capacity(count);
        let mut component_bytes = [0u8; 8];
        for _ in 0..count {
            let mut components = Vec::with_capacity(EMBEDDING_DIM);
            for _ in 0..EMBEDDING_DIM {
                read_exact(&mut cursor, &mut component_bytes)?;
                components.push(f64::from_le_bytes(component_bytes));
            }
            embeddings.push(EmbeddingVector::new(components)?);
        }

        let consumed = cursor.position() as usize;
        if consumed != bytes.len() {
            return Err(DatabaseError::TrailingData(bytes.len() - consumed));
        }
        if embeddings.is_empty() {
            return Err(DatabaseError::Embedding(EmbeddingError::EmptyEnrollment));
        }
        Ok(Self { identity, embeddings, created_at, format_version })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DatabaseError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatabaseError> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<(), DatabaseError> {
    reader.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            DatabaseError::Truncated
        } else {
            DatabaseError::Io(e)
        }
    })
}

fn read_u32<R: Read>(reader: &mut R) -> Result<u32, DatabaseError> {
    let mut buf = [0u8; 4];
    read_exact(reader, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(reader: &mut R) -> Result<u64, DatabaseError> {
    let mut buf = [0u8; 8];
    read_exact(reader, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
