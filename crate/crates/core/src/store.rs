//! The `LIV1` embedding store.
//!
//! Little-endian, single flat file:
//!
//! ```text
//! magic "LIV1"         4 bytes
//! dim                  u32
//! passage count        u64
//! per passage:
//!   doc_id             u32
//!   row count          u32
//!   per row:
//!     kind code        u8   (0 Cls, 1 Q, 2 Sep, 3 Text, 4 Mask, 5 DocText)
//!     token_id         u32
//!     dim x f32
//! ```
//!
//! Rows are never renormalized on load.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::token::TokenKind;

pub const MAGIC: &[u8; 4] = b"LIV1";
pub const HEADER_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct StoredPassage {
    pub doc_id: u32,
    pub rows: EmbeddingMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusStore {
    dim: usize,
    passages: Vec<StoredPassage>,
    by_id: HashMap<u32, usize>,
    total_tokens: usize,
}

impl CorpusStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        Ok(CorpusStore {
            dim,
            passages: Vec::new(),
            by_id: HashMap::new(),
            total_tokens: 0,
        })
    }

    pub fn push(&mut self, doc_id: u32, rows: EmbeddingMatrix) -> Result<()> {
        if rows.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: rows.dim(),
            });
        }
        if rows.is_empty() {
            return Err(Error::EmptyDocument);
        }
        if self.by_id.contains_key(&doc_id) {
            return Err(Error::DuplicateDocument(doc_id));
        }
        self.by_id.insert(doc_id, self.passages.len());
        self.total_tokens += rows.len();
        self.passages.push(StoredPassage { doc_id, rows });
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn passages(&self) -> &[StoredPassage] {
        &self.passages
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    pub fn get(&self, doc_id: u32) -> Option<&EmbeddingMatrix> {
        self.by_id.get(&doc_id).map(|&i| &self.passages[i].rows)
    }

    /// Position of `doc_id` in insertion order.
    pub fn ordinal(&self, doc_id: u32) -> Option<usize> {
        self.by_id.get(&doc_id).copied()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.passages.iter().map(|p| p.doc_id)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.passages.len() as u64).to_le_bytes())?;
        for p in &self.passages {
            w.write_all(&p.doc_id.to_le_bytes())?;
            w.write_all(&(p.rows.len() as u32).to_le_bytes())?;
            for (i, row) in p.rows.rows().enumerate() {
                w.write_all(&[p.rows.kind(i).code()])?;
                w.write_all(&p.rows.token_ids()[i].to_le_bytes())?;
                for x in row {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader(r);
        let mut magic = [0u8; 4];
        r.exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::BadMagic);
        }
        let dim = r.u32()? as usize;
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        let count = r.u64()?;
        let mut store = CorpusStore::new(dim)?;
        let mut row = vec![0.0f32; dim];
        for _ in 0..count {
            let doc_id = r.u32()?;
            let n_rows = r.u32()? as usize;
            let mut m = EmbeddingMatrix::new(dim);
            for _ in 0..n_rows {
                let mut code = [0u8; 1];
                r.exact(&mut code)?;
                let kind = TokenKind::from_code(code[0]).ok_or_else(|| Error::Parse {
                    line: 0,
                    message: format!("unknown kind code {} in passage {doc_id}", code[0]),
                })?;
                let token_id = r.u32()?;
                for x in row.iter_mut() {
                    *x = f32::from_bits(r.u32()?);
                }
                m.push_row(&row, kind, token_id)?;
            }
            store.push(doc_id, m)?;
        }
        Ok(store)
    }
}

struct Reader<R>(R);

impl<R: Read> Reader<R> {
    fn exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.0.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Truncated,
            _ => Error::Io(e),
        })
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
}

pub fn write_store(store: &CorpusStore, path: impl AsRef<Path>) -> Result<()> {
    store.write_to(BufWriter::new(File::create(path)?))
}

pub fn read_store(path: impl AsRef<Path>) -> Result<CorpusStore> {
    CorpusStore::read_from(BufReader::new(File::open(path)?))
}
