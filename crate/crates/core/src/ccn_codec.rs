//! The concatenated pipeline: RS encode, interleave, neural encode, and back.
//!
//! Inner encoding and decoding work on one interleaver column (n₂ symbols) at
//! a time, which is also the batch over which power normalization is taken.

use ndarray::{Array2, ArrayView2};

use crate::error::{CcnError, Result};
use crate::interleaver::{deinterleave, interleave, InterleaverBlock};
use crate::neural_net::NeuralCodeModel;
use crate::reed_solomon::{RsCode, RsDecodeOutcome};
use crate::scalar::Scalar;

/// (n, k, R) of the concatenation of `rs` with `inner`.
pub fn ccn_rate_and_length<T: Scalar>(rs: &RsCode, inner: &NeuralCodeModel<T>) -> Result<(usize, usize, f64)> {
    let m = rs.field().m() as usize;
    if m != inner.k1() {
        return Err(CcnError::InvalidInput(format!(
            "RS symbols carry {m} bits but the inner code takes k1 = {}",
            inner.k1()
        )));
    }
    let n = rs.n2() * inner.n1();
    let k = rs.k2() * inner.k1();
    Ok((n, k, k as f64 / n as f64))
}

/// Big-endian bit expansion of `m`-bit symbols.
pub fn symbols_to_bits(symbols: &[u8], m: usize) -> Vec<u8> {
    symbols.iter().flat_map(|&s| (0..m).rev().map(move |b| (s >> b) & 1)).collect()
}

/// Inverse of [`symbols_to_bits`].
pub fn bits_to_symbols(bits: &[u8], m: usize) -> Result<Vec<u8>> {
    if m == 0 || m > 8 || !bits.len().is_multiple_of(m) {
        return Err(CcnError::InvalidInput(format!("{} bits do not split into {m}-bit symbols", bits.len())));
    }
    bits.chunks(m)
        .map(|c| {
            c.iter().try_fold(0u8, |acc, &b| match b {
                0 | 1 => Ok((acc << 1) | b),
                _ => Err(CcnError::InvalidInput(format!("bit value {b}"))),
            })
        })
        .collect()
}

/// Hard inner decisions for one interleaver block, in channel (stream) order.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerDecisions {
    pub n2: usize,
    /// Argmax symbol per channel block.
    pub symbols: Vec<u8>,
    /// Softmax probability of that symbol.
    pub confidence: Vec<f64>,
}

/// Ground truth of a transmitted block, for error accounting.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTruth {
    /// Message symbols, one row per codeword.
    pub messages: Vec<Vec<u8>>,
    pub codewords: Vec<Vec<u8>>,
}

/// Outcome for one RS codeword of a decoded block.
#[derive(Clone, Debug, PartialEq)]
pub struct CcnDecodeReport {
    /// Estimated message symbols (the received systematic part on failure).
    pub message: Vec<u8>,
    pub bits_per_symbol: usize,
    /// Against the ground truth when given, otherwise whether RS decoding succeeded.
    pub block_ok: bool,
    /// Wrong argmax symbols in this codeword; known only with ground truth.
    pub inner_symbol_errors: Option<usize>,
    pub erasures_declared: usize,
    pub rs_outcome: RsDecodeOutcome,
}

impl CcnDecodeReport {
    pub fn message_bits(&self) -> Vec<u8> {
        symbols_to_bits(&self.message, self.bits_per_symbol)
    }

    /// Differing message bits relative to `truth` (message symbols).
    pub fn bit_errors(&self, truth: &[u8]) -> u64 {
        self.message.iter().zip(truth).map(|(a, b)| u64::from((a ^ b).count_ones())).sum()
    }
}

#[derive(Clone, Debug)]
pub struct CcnCode<T> {
    rs: RsCode,
    inner: NeuralCodeModel<T>,
    threshold: f64,
    table: Array2<T>,
}

impl<T: Scalar> CcnCode<T> {
    pub fn new(rs: RsCode, inner: NeuralCodeModel<T>, threshold: f64) -> Result<Self> {
        ccn_rate_and_length(&rs, &inner)?;
        check_threshold(threshold)?;
        let table = inner.encoder_table();
        Ok(CcnCode { rs, inner, threshold, table })
    }

    pub fn rs(&self) -> &RsCode {
        &self.rs
    }

    pub fn inner(&self) -> &NeuralCodeModel<T> {
        &self.inner
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<()> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(())
    }

    pub fn n2(&self) -> usize {
        self.rs.n2()
    }

    pub fn n(&self) -> usize {
        self.rs.n2() * self.inner.n1()
    }

    /// Message bits per RS codeword.
    pub fn k(&self) -> usize {
        self.rs.k2() * self.inner.k1()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    /// RS-encodes `n2` message bit vectors and maps the block to channel inputs.
    pub fn encode_block(&self, messages: &[Vec<u8>]) -> Result<Array2<T>> {
        let truth = self.encode_messages_bits(messages)?;
        self.transmit(&truth.codewords)
    }

    /// RS-encodes `n2` bit messages, keeping symbols for later comparison.
    pub fn encode_messages_bits(&self, messages: &[Vec<u8>]) -> Result<BlockTruth> {
        let m = self.inner.k1();
        let symbols = messages
            .iter()
            .map(|b| {
                if b.len() != self.k() {
                    return Err(CcnError::InvalidInput(format!("message has {} bits, expected {}", b.len(), self.k())));
                }
                bits_to_symbols(b, m)
            })
            .collect::<Result<Vec<_>>>()?;
        self.encode_messages(symbols)
    }

    /// RS-encodes `n2` messages given as symbols.
    pub fn encode_messages(&self, messages: Vec<Vec<u8>>) -> Result<BlockTruth> {
        if messages.len() != self.n2() {
            return Err(CcnError::InvalidInput(format!(
                "an interleaver block holds {} codewords, got {}",
                self.n2(),
                messages.len()
            )));
        }
        let codewords = messages.iter().map(|msg| self.rs.encode(msg)).collect::<Result<Vec<_>>>()?;
        Ok(BlockTruth { messages, codewords })
    }

    /// Channel inputs (n₂² × n₁) for a block of RS codewords.
    pub fn transmit(&self, codewords: &[Vec<u8>]) -> Result<Array2<T>> {
        let block = InterleaverBlock::from_rows(codewords)?;
        if block.n2() != self.n2() {
            return Err(CcnError::InvalidInput(format!("block of {} codewords, expected {}", block.n2(), self.n2())));
        }
        let stream = interleave(&block);
        let n2 = self.n2();
        let n1 = self.inner.n1();
        let mut out = Array2::<T>::zeros((n2 * n2, n1));
        let mut batch = Array2::<T>::zeros((n2, n1));
        for (c, column) in stream.chunks(n2).enumerate() {
            for (r, &sym) in column.iter().enumerate() {
                batch.row_mut(r).assign(&self.table.row(sym as usize));
            }
            let x = self.inner.normalize(batch.view())?;
            out.slice_mut(ndarray::s![c * n2..(c + 1) * n2, ..]).assign(&x);
        }
        Ok(out)
    }

    /// Runs the neural decoder over a received block.
    pub fn inner_decode(&self, y: ArrayView2<'_, T>) -> Result<InnerDecisions> {
        let n2 = self.n2();
        if y.dim() != (n2 * n2, self.inner.n1()) {
            return Err(CcnError::InvalidInput(format!(
                "received block is {:?}, expected ({}, {})",
                y.dim(),
                n2 * n2,
                self.inner.n1()
            )));
        }
        let (symbols, confidence) = self.inner.decode_top(y).into_iter().map(|(s, p)| (s as u8, p)).unzip();
        Ok(InnerDecisions { n2, symbols, confidence })
    }

    /// Thresholds, deinterleaves and RS-decodes inner decisions.
    ///
    /// With τ = 0, or when no symbol of a codeword is erased, the errors-only
    /// decoder is used.
    pub fn outer_decode(
        &self,
        inner: &InnerDecisions,
        threshold: f64,
        truth: Option<&BlockTruth>,
    ) -> Result<Vec<CcnDecodeReport>> {
        check_threshold(threshold)?;
        let n2 = self.n2();
        if inner.n2 != n2 || inner.symbols.len() != n2 * n2 || inner.confidence.len() != n2 * n2 {
            return Err(CcnError::InvalidInput("inner decisions do not match the code".into()));
        }
        if let Some(t) = truth {
            if t.messages.len() != n2 || t.codewords.len() != n2 {
                return Err(CcnError::InvalidInput("ground truth does not match the block".into()));
            }
        }
        let symbols = deinterleave(&inner.symbols, n2)?;
        let confidence = deinterleave(&inner.confidence, n2)?;
        let k2 = self.rs.k2();
        let mut reports = Vec::with_capacity(n2);
        for i in 0..n2 {
            let received = symbols.row(i);
            let erasures: Vec<usize> = if threshold > 0.0 {
                confidence.row(i).iter().enumerate().filter(|(_, &p)| p <= threshold).map(|(j, _)| j).collect()
            } else {
                Vec::new()
            };
            let outcome = if erasures.is_empty() {
                self.rs.decode_errors(received)?
            } else {
                self.rs.decode_errors_erasures(received, &erasures)?
            };
            let message = match outcome.message() {
                Some(m) => m.to_vec(),
                None => received[..k2].to_vec(),
            };
            let (block_ok, inner_symbol_errors) = match truth {
                Some(t) => (
                    message == t.messages[i],
                    Some(received.iter().zip(&t.codewords[i]).filter(|(a, b)| a != b).count()),
                ),
                None => (outcome.is_corrected(), None),
            };
            reports.push(CcnDecodeReport {
                message,
                bits_per_symbol: self.inner.k1(),
                block_ok,
                inner_symbol_errors,
                erasures_declared: erasures.len(),
                rs_outcome: outcome,
            });
        }
        Ok(reports)
    }

    /// Full receiver at the code's own threshold.
    pub fn decode_block(&self, y: ArrayView2<'_, T>, truth: Option<&BlockTruth>) -> Result<Vec<CcnDecodeReport>> {
        let inner = self.inner_decode(y)?;
        self.outer_decode(&inner, self.threshold, truth)
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(CcnError::InvalidInput(format!("threshold {threshold} outside [0, 1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::substream;
    use crate::neural_net::normalize_power;
    use rand::Rng;

    fn model(k1: usize, n1: usize, seed: u64) -> NeuralCodeModel<f64> {
        NeuralCodeModel::new(k1, n1, 15, &mut substream(seed, 0, 0)).unwrap()
    }

    fn random_messages<R: Rng>(code: &CcnCode<f64>, rng: &mut R) -> Vec<Vec<u8>> {
        let q = code.rs().field().q() as u32;
        (0..code.n2()).map(|_| (0..code.rs().k2()).map(|_| rng.random_range(0..q) as u8).collect()).collect()
    }

    #[test]
    fn rate_and_length() {
        let small = model(4, 7, 1);
        let (n, k, r) = ccn_rate_and_length(&RsCode::rs_15_11(), &small).unwrap();
        assert_eq!((n, k), (105, 44));
        assert!((r - 0.419).abs() < 1e-3);
        let large = model(8, 12, 1);
        let (n, k, r) = ccn_rate_and_length(&RsCode::rs_255_223(), &large).unwrap();
        assert_eq!((n, k), (3060, 1784));
        assert!((r - 0.583).abs() < 1e-3);
        assert!(ccn_rate_and_length(&RsCode::rs_255_223(), &small).is_err());
        assert!(CcnCode::new(RsCode::rs_255_223(), small, 0.5).is_err());
    }

    #[test]
    fn bit_packing_is_big_endian() {
        assert_eq!(symbols_to_bits(&[0b1010, 0b0001], 4), vec![1, 0, 1, 0, 0, 0, 0, 1]);
        assert_eq!(bits_to_symbols(&[1, 0, 1, 0, 0, 0, 0, 1], 4).unwrap(), vec![0b1010, 1]);
        assert!(bits_to_symbols(&[1, 0, 1], 4).is_err());
        assert!(bits_to_symbols(&[2, 0, 0, 0], 4).is_err());
        let syms: Vec<u8> = (0..=255).collect();
        assert_eq!(bits_to_symbols(&symbols_to_bits(&syms, 8), 8).unwrap(), syms);
    }

    #[test]
    fn encoded_block_shape_and_power() {
        let code = CcnCode::new(RsCode::rs_15_11(), model(4, 7, 2), 0.0).unwrap();
        let mut rng = substream(5, 0, 0);
        let bits: Vec<Vec<u8>> = (0..15).map(|_| (0..44).map(|_| rng.random_range(0..2u8)).collect()).collect();
        let x = code.encode_block(&bits).unwrap();
        assert_eq!(x.dim(), (225, 7));
        for c in 0..15 {
            let batch = x.slice(ndarray::s![c * 15..(c + 1) * 15, ..]);
            let (again, _) = normalize_power(batch).unwrap();
            for (a, b) in again.iter().zip(batch.iter()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
        assert!(code.encode_block(&bits[..14]).is_err());
        let mut short = bits.clone();
        short[3].pop();
        assert!(code.encode_block(&short).is_err());
    }

    /// Inner decisions equal to the transmitted stream with chosen corruptions.
    fn decisions_with_errors(truth: &BlockTruth, corrupt: &[(usize, usize)], q: u8) -> InnerDecisions {
        let mut rows = truth.codewords.clone();
        for &(r, c) in corrupt {
            rows[r][c] = (rows[r][c] + 1) % q;
        }
        let stream = interleave(&InterleaverBlock::from_rows(&rows).unwrap());
        let n2 = rows.len();
        InnerDecisions { n2, confidence: vec![0.99; stream.len()], symbols: stream }
    }

    #[test]
    fn within_radius_every_block_decodes() {
        let code = CcnCode::new(RsCode::rs_15_11(), model(4, 7, 3), 0.0).unwrap();
        let mut rng = substream(6, 0, 0);
        for _ in 0..50 {
            let truth = code.encode_messages(random_messages(&code, &mut rng)).unwrap();
            let mut corrupt = Vec::new();
            for r in 0..15 {
                let e = rng.random_range(0..=2);
                let mut cols: Vec<usize> = (0..15).collect();
                for j in 0..e {
                    let pick = rng.random_range(j..15);
                    cols.swap(j, pick);
                    corrupt.push((r, cols[j]));
                }
            }
            let d = decisions_with_errors(&truth, &corrupt, 16);
            let reports = code.outer_decode(&d, 0.0, Some(&truth)).unwrap();
            assert!(reports.iter().all(|r| r.block_ok && r.erasures_declared == 0));
        }
    }

    #[test]
    fn t_plus_one_errors_fail_only_their_codeword() {
        let code = CcnCode::new(RsCode::rs_15_11(), model(4, 7, 4), 0.0).unwrap();
        let mut rng = substream(7, 0, 0);
        for trial in 0..30 {
            let truth = code.encode_messages(random_messages(&code, &mut rng)).unwrap();
            let victim = trial % 15;
            let corrupt = [(victim, 0), (victim, 5), (victim, 11)];
            let d = decisions_with_errors(&truth, &corrupt, 16);
            let reports = code.outer_decode(&d, 0.0, Some(&truth)).unwrap();
            for (i, r) in reports.iter().enumerate() {
                if i == victim {
                    assert!(!r.block_ok);
                    assert_eq!(r.inner_symbol_errors, Some(3));
                    if let Some(cw) = r.rs_outcome.codeword() {
                        // a miscorrection lands on a genuine codeword
                        assert!(code.rs().is_codeword(cw));
                    }
                } else {
                    assert!(r.block_ok);
                }
            }
        }
    }

    #[test]
    fn low_confidence_symbols_become_erasures() {
        let code = CcnCode::new(RsCode::rs_15_11(), model(4, 7, 5), 0.5).unwrap();
        let mut rng = substream(8, 0, 0);
        let truth = code.encode_messages(random_messages(&code, &mut rng)).unwrap();
        // four wrong symbols in row 2, all flagged unreliable: beyond t = 2 but 2e + r = 4
        let corrupt = [(2, 1), (2, 4), (2, 7), (2, 13)];
        let mut d = decisions_with_errors(&truth, &corrupt, 16);
        for &(r, c) in &corrupt {
            d.confidence[c * 15 + r] = 0.3;
        }
        let with = code.outer_decode(&d, 0.5, Some(&truth)).unwrap();
        assert!(with[2].block_ok);
        assert_eq!(with[2].erasures_declared, 4);
        assert_eq!(with[2].rs_outcome.erasures(), 4);
        let without = code.outer_decode(&d, 0.0, Some(&truth)).unwrap();
        assert!(!without[2].block_ok);
        assert!(without.iter().all(|r| r.erasures_declared == 0));
    }

    #[test]
    fn failure_emits_received_systematic_symbols() {
        let code = CcnCode::new(RsCode::rs_15_11(), model(4, 7, 6), 0.0).unwrap();
        let messages: Vec<Vec<u8>> = (0..15).map(|_| vec![0u8; 11]).collect();
        let truth = code.encode_messages(messages).unwrap();
        let mut rows = truth.codewords.clone();
        rows[0] = vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
        let stream = interleave(&InterleaverBlock::from_rows(&rows).unwrap());
        let d = InnerDecisions { n2: 15, confidence: vec![1.0; 225], symbols: stream };
        let r = &code.outer_decode(&d, 0.0, Some(&truth)).unwrap()[0];
        if !r.rs_outcome.is_corrected() {
            assert_eq!(r.message, rows[0][..11].to_vec());
        }
        assert!(!r.block_ok);
        assert_eq!(r.bit_errors(&truth.messages[0]), r.message.iter().map(|s| s.count_ones() as u64).sum::<u64>());
        assert_eq!(r.message_bits().len(), 44);
    }

    #[test]
    fn decode_block_shape_checks() {
        let code = CcnCode::new(RsCode::rs_15_11(), model(4, 7, 7), 0.0).unwrap();
        assert!(code.decode_block(Array2::<f64>::zeros((224, 7)).view(), None).is_err());
        assert!(code.decode_block(Array2::<f64>::zeros((225, 7)).view(), None).is_ok());
        assert!(CcnCode::new(RsCode::rs_15_11(), model(4, 7, 7), 1.0).is_err());
    }
}
