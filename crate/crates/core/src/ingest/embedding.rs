//! Binary embedding file (`DVBE`).
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DVBE"
//! 4       4     format_version (u32, currently 1)
//! 8       4     frame_count (u32, >= 1)
//! 12      4     dim (u32, >= 1)
//! 16      4     sample_stride (u32, >= 1)
//! 20      4*frame_count*dim   f32 rows, row-major, temporal order
//! ```
//!
//! Row `r` holds raw frame number `r * sample_stride`.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::model::FrameEmbedding;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"DVBE";
pub const EMBEDDING_VERSION: u32 = 1;
pub const EMBEDDING_HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub sample_stride: u32,
    pub dim: usize,
    pub rows: Vec<Vec<f32>>,
}

impl EmbeddingFile {
    pub fn new(sample_stride: u32, rows: Vec<Vec<f32>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let file = EmbeddingFile {
            sample_stride,
            dim,
            rows,
        };
        file.validate(Path::new("<memory>"))?;
        Ok(file)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::format(path, "frame_count must be at least 1"));
        }
        if self.dim == 0 {
            return Err(Error::format(path, "dim must be at least 1"));
        }
        if self.sample_stride == 0 {
            return Err(Error::format(path, "sample_stride must be at least 1"));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != self.dim {
                return Err(Error::format(
                    path,
                    format!("row {r} has {} values, expected {}", row.len(), self.dim),
                ));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::format(path, format!("row {r} contains a non-finite value")));
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        self.rows.len()
    }

    /// Raw frame numbers of the stored rows.
    pub fn frame_indices(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.rows.len() as u64).map(move |r| r * u64::from(self.sample_stride))
    }

    pub fn to_frames(&self) -> Vec<FrameEmbedding> {
        self.frame_indices()
            .zip(&self.rows)
            .map(|(frame_index, row)| FrameEmbedding {
                frame_index,
                vector: row.clone(),
            })
            .collect()
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < EMBEDDING_HEADER_LEN {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                expected: EMBEDDING_HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        let mut cur = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != EMBEDDING_MAGIC {
            return Err(Error::format(path, format!("bad magic {magic:?}, expected \"DVBE\"")));
        }
        let header = |cur: &mut Cursor<&[u8]>| cur.read_u32::<LittleEndian>().map_err(|e| Error::io(path, e));
        let version = header(&mut cur)?;
        if version != EMBEDDING_VERSION {
            return Err(Error::format(path, format!("unsupported format version {version}")));
        }
        let frame_count = header(&mut cur)? as usize;
        let dim = header(&mut cur)? as usize;
        let sample_stride = header(&mut cur)?;

        let expected = EMBEDDING_HEADER_LEN as u64 + 4 * frame_count as u64 * dim as u64;
        if bytes.len() as u64 != expected {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                expected,
                actual: bytes.len() as u64,
            });
        }

        let mut rows = Vec::with_capacity(frame_count);
        for _ in 0..frame_count {
            let mut row = vec![0f32; dim];
            cur.read_f32_into::<LittleEndian>(&mut row)
                .map_err(|e| Error::io(path, e))?;
            rows.push(row);
        }
        let file = EmbeddingFile {
            sample_stride,
            dim,
            rows,
        };
        file.validate(path)?;
        Ok(file)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(EMBEDDING_HEADER_LEN + 4 * self.rows.len() * self.dim);
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.write_u32::<LittleEndian>(EMBEDDING_VERSION).unwrap();
        out.write_u32::<LittleEndian>(self.rows.len() as u32).unwrap();
        out.write_u32::<LittleEndian>(self.dim as u32).unwrap();
        out.write_u32::<LittleEndian>(self.sample_stride).unwrap();
        for row in &self.rows {
            for &x in row {
                out.write_f32::<LittleEndian>(x).unwrap();
            }
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}
