//! Sparse vectors and a compressed-sparse-row matrix with a little-endian
//! binary encoding.
//!
//! Layout of a CSR file:
//!
//! ```text
//! magic    8 bytes  "XLNKCSR1"
//! rows     u64
//! cols     u64
//! nnz      u64
//! offsets  (rows + 1) x u64
//! columns  nnz x u32
//! values   nnz x f64
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const CSR_MAGIC: &[u8; 8] = b"XLNKCSR1";

/// Sparse vector with strictly increasing indexes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVec {
    /// Builds from unsorted pairs, summing duplicates and dropping zeros.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_unstable_by_key(|p| p.0);
        let mut out = SparseVec::default();
        for (i, v) in pairs {
            if out.indices.last() == Some(&i) {
                *out.values.last_mut().unwrap() += v;
            } else {
                out.indices.push(i);
                out.values.push(v);
            }
        }
        out.retain_nonzero();
        out
    }

    fn retain_nonzero(&mut self) {
        let mut k = 0;
        for j in 0..self.indices.len() {
            if self.values[j] != 0.0 {
                self.indices[k] = self.indices[j];
                self.values[k] = self.values[j];
                k += 1;
            }
        }
        self.indices.truncate(k);
        self.values.truncate(k);
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales to unit L2 norm; the zero vector stays zero.
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for v in &mut self.values {
                *v /= n;
            }
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        sparse_dot(&self.indices, &self.values, &other.indices, &other.values)
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter()
            .map(|(i, v)| dense.get(i as usize).map_or(0.0, |w| v * w))
            .sum()
    }

    /// Sum of several sparse vectors.
    pub fn sum<'a>(vectors: impl IntoIterator<Item = &'a SparseVec>) -> SparseVec {
        let pairs = vectors.into_iter().flat_map(|v| v.iter()).collect();
        SparseVec::from_pairs(pairs)
    }
}

/// Merge-join dot product of two sorted sparse index/value lists.
pub fn sparse_dot(ai: &[u32], av: &[f64], bi: &[u32], bv: &[f64]) -> f64 {
    let (mut x, mut y, mut acc) = (0, 0, 0.0);
    while x < ai.len() && y < bi.len() {
        match ai[x].cmp(&bi[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                acc += av[x] * bv[y];
                x += 1;
                y += 1;
            }
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_offsets: Vec<u64>,
    pub col_indexes: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(rows: &[SparseVec], cols: usize) -> Self {
        let mut m = CsrMatrix {
            rows: rows.len(),
            cols,
            row_offsets: Vec::with_capacity(rows.len() + 1),
            col_indexes: Vec::new(),
            values: Vec::new(),
        };
        m.row_offsets.push(0);
        for r in rows {
            m.col_indexes.extend_from_slice(&r.indices);
            m.values.extend_from_slice(&r.values);
            m.row_offsets.push(m.col_indexes.len() as u64);
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.row_offsets[r] as usize, self.row_offsets[r + 1] as usize);
        (&self.col_indexes[s..e], &self.values[s..e])
    }

    pub fn row_vec(&self, r: usize) -> SparseVec {
        let (i, v) = self.row(r);
        SparseVec {
            indices: i.to_vec(),
            values: v.to_vec(),
        }
    }

    pub fn row_dot(&self, r: usize, x: &SparseVec) -> f64 {
        let (i, v) = self.row(r);
        sparse_dot(i, v, &x.indices, &x.values)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CSR_MAGIC)?;
        for n in [self.rows as u64, self.cols as u64, self.nnz() as u64] {
            out.write_all(&n.to_le_bytes())?;
        }
        for o in &self.row_offsets {
            out.write_all(&o.to_le_bytes())?;
        }
        for c in &self.col_indexes {
            out.write_all(&c.to_le_bytes())?;
        }
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R, file: &str) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CSR_MAGIC {
            return Err(Error::format(file, "bad CSR magic header"));
        }
        let rows = read_u64(&mut input)? as usize;
        let cols = read_u64(&mut input)? as usize;
        let nnz = read_u64(&mut input)? as usize;
        let row_offsets = (0..=rows).map(|_| read_u64(&mut input)).collect::<Result<Vec<_>>>()?;
        let col_indexes = (0..nnz)
            .map(|_| {
                let mut b = [0u8; 4];
                input.read_exact(&mut b)?;
                Ok(u32::from_le_bytes(b))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = (0..nnz)
            .map(|_| {
                let mut b = [0u8; 8];
                input.read_exact(&mut b)?;
                Ok(f64::from_le_bytes(b))
            })
            .collect::<Result<Vec<_>>>()?;

        if row_offsets.first() != Some(&0)
            || row_offsets.last().copied() != Some(nnz as u64)
            || row_offsets.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::format(file, "inconsistent row offsets"));
        }
        if col_indexes.iter().any(|&c| c as usize >= cols) {
            return Err(Error::format(file, "column index out of range"));
        }
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(Error::format(file, "trailing bytes after CSR payload"));
        }
        Ok(CsrMatrix {
            rows,
            cols,
            row_offsets,
            col_indexes,
            values,
        })
    }
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
