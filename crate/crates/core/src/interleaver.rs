//! Row-column block interleaver over an n₂ × n₂ matrix of RS symbols.
//!
//! Rows are codewords; the stream is read out column by column, so stream
//! index `c·n₂ + r` carries matrix element (r, c). A burst of n₂ consecutive
//! stream symbols touches every codeword exactly once.

use crate::error::{CcnError, Result};

/// n₂ codewords stored row-major: row i is codeword i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterleaverBlock<T = u8> {
    n2: usize,
    symbols: Vec<T>,
}

impl<T: Copy> InterleaverBlock<T> {
    pub fn new(n2: usize, symbols: Vec<T>) -> Result<Self> {
        if symbols.len() != n2 * n2 {
            return Err(CcnError::InvalidInput(format!(
                "interleaver block needs {} symbols, got {}",
                n2 * n2,
                symbols.len()
            )));
        }
        Ok(InterleaverBlock { n2, symbols })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n2 = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n2) {
            return Err(CcnError::InvalidInput(format!(
                "row of length {} in a {n2}x{n2} interleaver block",
                bad.len()
            )));
        }
        Ok(InterleaverBlock { n2, symbols: rows.concat() })
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn symbols(&self) -> &[T] {
        &self.symbols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.symbols[i * self.n2..(i + 1) * self.n2]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.symbols.chunks(self.n2.max(1))
    }

    pub fn into_symbols(self) -> Vec<T> {
        self.symbols
    }
}

/// Matrix position (row, column) of stream index `p`.
#[inline]
pub fn stream_position(p: usize, n2: usize) -> (usize, usize) {
    (p % n2, p / n2)
}

/// Column-wise readout of the matrix.
pub fn interleave<T: Copy>(block: &InterleaverBlock<T>) -> Vec<T> {
    let n2 = block.n2;
    let mut out = Vec::with_capacity(n2 * n2);
    for c in 0..n2 {
        for r in 0..n2 {
            out.push(block.symbols[r * n2 + c]);
        }
    }
    out
}

/// Inverse of [`interleave`]. Works for any per-symbol payload, e.g. erasure flags.
pub fn deinterleave<T: Copy>(stream: &[T], n2: usize) -> Result<InterleaverBlock<T>> {
    if stream.len() != n2 * n2 {
        return Err(CcnError::InvalidInput(format!(
            "stream of {} symbols cannot fill a {n2}x{n2} block",
            stream.len()
        )));
    }
    let mut symbols = stream.to_vec();
    for (p, &s) in stream.iter().enumerate() {
        let (r, c) = stream_position(p, n2);
        symbols[r * n2 + c] = s;
    }
    Ok(InterleaverBlock { n2, symbols })
}
