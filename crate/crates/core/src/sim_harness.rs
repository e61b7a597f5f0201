//! Monte Carlo BLER/BER sweeps over Eb/N0.
//!
//! Work is split into units (one interleaver block for a CCN code, a fixed
//! number of batches for a stand-alone autoencoder). Every unit draws its
//! messages and noise from its own sub-stream keyed by (seed, point, unit).
//! Units are evaluated in rounds whose size depends only on the results so far,
//! and merged in unit order, so the output does not depend on the number of
//! worker threads.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccn_codec::CcnCode;
use crate::channels::{ebn0_to_sigma, substream, ChannelKind};
use crate::error::{CcnError, Result};
use crate::galois::GfField;
use crate::neural_net::{load_model, NeuralCodeModel};
use crate::reed_solomon::RsCode;
use crate::scalar::Scalar;
use crate::stats::wilson95;

/// Environment variable overriding the number of worker threads.
pub const WORKERS_ENV: &str = "CCN_WORKERS";

/// Batches per unit when simulating a stand-alone autoencoder.
pub const REFERENCE_UNIT_BATCHES: usize = 64;

const MAX_ROUND: usize = 16;
const MESSAGE_STREAM: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageMode {
    /// New random messages for every unit.
    #[default]
    Fresh,
    /// One message block per grid point, fresh noise for every unit.
    Fixed,
}

#[derive(Clone, Debug)]
pub enum CodeUnderTest<T> {
    Ccn(CcnCode<T>),
    /// Stand-alone inner autoencoder; one block is one k₁-bit message.
    Reference(NeuralCodeModel<T>),
}

impl<T: Scalar> CodeUnderTest<T> {
    pub fn rate(&self) -> f64 {
        match self {
            CodeUnderTest::Ccn(c) => c.rate(),
            CodeUnderTest::Reference(m) => m.k1() as f64 / m.n1() as f64,
        }
    }

    /// Information bits per block.
    pub fn block_bits(&self) -> usize {
        match self {
            CodeUnderTest::Ccn(c) => c.k(),
            CodeUnderTest::Reference(m) => m.k1(),
        }
    }

    /// Blocks simulated per unit of work.
    pub fn blocks_per_unit(&self) -> usize {
        match self {
            CodeUnderTest::Ccn(c) => c.n2(),
            CodeUnderTest::Reference(m) => m.batch_size() * REFERENCE_UNIT_BATCHES,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig<T> {
    pub code: CodeUnderTest<T>,
    pub channel: ChannelKind,
    pub ebn0_grid_db: Vec<f64>,
    pub min_block_errors: u64,
    pub max_blocks: u64,
    pub seed: u64,
    pub message_mode: MessageMode,
    /// Rate for Eb/N0 accounting; the code's own rate when absent.
    pub rate: Option<f64>,
}

impl<T: Scalar> SweepConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CcnError::Config(m));
        if self.ebn0_grid_db.is_empty() {
            return bad("empty Eb/N0 grid".into());
        }
        if self.ebn0_grid_db.windows(2).any(|w| w[1] <= w[0]) || self.ebn0_grid_db.iter().any(|v| !v.is_finite()) {
            return bad("Eb/N0 grid must be strictly increasing".into());
        }
        if self.min_block_errors < 1 {
            return bad("min_block_errors must be at least 1".into());
        }
        if self.max_blocks < 1 {
            return bad("max_blocks must be at least 1".into());
        }
        self.channel.validate().map_err(|e| CcnError::Config(e.to_string()))
    }

    pub fn accounting_rate(&self) -> f64 {
        self.rate.unwrap_or_else(|| self.code.rate())
    }
}

/// One Monte Carlo measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub ebn0_db: f64,
    pub bler: f64,
    pub ber: f64,
    pub blocks: u64,
    pub block_errors: u64,
    pub bit_errors: u64,
    pub bler_ci_lo: f64,
    pub bler_ci_hi: f64,
    /// Wrong inner symbol decisions (before outer decoding).
    pub symbol_errors: u64,
    pub symbols: u64,
    pub erasures: u64,
}

impl CurvePoint {
    fn from_counts(ebn0_db: f64, c: &Counts, block_bits: usize) -> Self {
        let (lo, hi) = wilson95(c.block_errors, c.blocks);
        let bits = c.blocks * block_bits as u64;
        CurvePoint {
            ebn0_db,
            bler: ratio(c.block_errors, c.blocks),
            ber: ratio(c.bit_errors, bits),
            blocks: c.blocks,
            block_errors: c.block_errors,
            bit_errors: c.bit_errors,
            bler_ci_lo: lo,
            bler_ci_hi: hi,
            symbol_errors: c.symbol_errors,
            symbols: c.symbols,
            erasures: c.erasures,
        }
    }

    /// Half-width of the 95% BLER interval.
    pub fn bler_half_width(&self) -> f64 {
        (self.bler_ci_hi - self.bler_ci_lo) / 2.0
    }

    pub fn symbol_error_rate(&self) -> f64 {
        ratio(self.symbol_errors, self.symbols)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Counts {
    blocks: u64,
    block_errors: u64,
    bit_errors: u64,
    symbol_errors: u64,
    symbols: u64,
    erasures: u64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.blocks += o.blocks;
        self.block_errors += o.block_errors;
        self.bit_errors += o.bit_errors;
        self.symbol_errors += o.symbol_errors;
        self.symbols += o.symbols;
        self.erasures += o.erasures;
    }
}

pub const CSV_HEADER: &str = "ebn0_db,bler,ber,blocks,block_errors,bit_errors,bler_ci_lo,bler_ci_hi";

pub fn write_csv<W: Write>(points: &[CurvePoint], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{:.9e},{:.9e},{},{},{},{:.9e},{:.9e}",
            p.ebn0_db, p.bler, p.ber, p.blocks, p.block_errors, p.bit_errors, p.bler_ci_lo, p.bler_ci_hi
        )?;
    }
    Ok(())
}

/// Runs the sweep at the code's own threshold.
pub fn run_sweep<T: Scalar>(config: &SweepConfig<T>) -> Result<Vec<CurvePoint>> {
    let tau = match &config.code {
        CodeUnderTest::Ccn(c) => c.threshold(),
        CodeUnderTest::Reference(_) => 0.0,
    };
    Ok(run_sweep_thresholds(config, &[tau])?.remove(0))
}

/// Runs one sweep and decodes the same inner outputs at every threshold.
///
/// A grid point stops once every threshold has seen `min_block_errors` block
/// errors, or after `max_blocks` blocks. For a stand-alone autoencoder the
/// threshold has no effect and all curves coincide.
pub fn run_sweep_thresholds<T: Scalar>(config: &SweepConfig<T>, thresholds: &[f64]) -> Result<Vec<Vec<CurvePoint>>> {
    run_sweep_thresholds_with(config, thresholds, |_, _| {})
}

/// As [`run_sweep_thresholds`], reporting each finished grid point.
pub fn run_sweep_thresholds_with<T: Scalar>(
    config: &SweepConfig<T>,
    thresholds: &[f64],
    mut on_point: impl FnMut(usize, &[CurvePoint]),
) -> Result<Vec<Vec<CurvePoint>>> {
    config.validate()?;
    if thresholds.is_empty() || thresholds.iter().any(|t| !(0.0..1.0).contains(t)) {
        return Err(CcnError::Config("thresholds must lie in [0, 1)".into()));
    }
    let rate = config.accounting_rate();
    let fixed_messages = config.message_mode == MessageMode::Fixed;
    let per_unit = config.code.blocks_per_unit() as u64;
    let mut curves = vec![Vec::with_capacity(config.ebn0_grid_db.len()); thresholds.len()];
    for (p, &db) in config.ebn0_grid_db.iter().enumerate() {
        let sigma = ebn0_to_sigma(db, rate)?;
        let mut totals = vec![Counts::default(); thresholds.len()];
        let mut unit = 0usize;
        'point: loop {
            let done = |t: &[Counts]| {
                t[0].blocks >= config.max_blocks || t.iter().all(|c| c.block_errors >= config.min_block_errors)
            };
            if done(&totals) {
                break;
            }
            let round = round_size(&totals, unit, config, per_unit);
            let results = (unit..unit + round)
                .into_par_iter()
                .map(|u| simulate_unit(config, thresholds, p, u, sigma, fixed_messages))
                .collect::<Result<Vec<_>>>()?;
            for r in results {
                for (t, c) in totals.iter_mut().zip(&r) {
                    t.add(c);
                }
                unit += 1;
                if done(&totals) {
                    break 'point;
                }
            }
        }
        let block_bits = config.code.block_bits();
        let points: Vec<CurvePoint> = totals.iter().map(|c| CurvePoint::from_counts(db, c, block_bits)).collect();
        on_point(p, &points);
        for (curve, point) in curves.iter_mut().zip(points) {
            curve.push(point);
        }
    }
    Ok(curves)
}

/// Units to launch next: a guess at what is still needed, capped.
fn round_size<T: Scalar>(totals: &[Counts], done_units: usize, config: &SweepConfig<T>, per_unit: u64) -> usize {
    let remaining_blocks = config.max_blocks.saturating_sub(totals[0].blocks);
    let cap = (remaining_blocks.div_ceil(per_unit) as usize).clamp(1, MAX_ROUND);
    let errors = totals.iter().map(|c| c.block_errors).min().unwrap_or(0);
    let guess = if done_units == 0 {
        1
    } else if errors == 0 {
        done_units
    } else {
        let missing = config.min_block_errors.saturating_sub(errors) as f64;
        (done_units as f64 * missing / errors as f64).ceil() as usize
    };
    guess.clamp(1, cap)
}

fn random_symbols<R: Rng>(rng: &mut R, count: usize, q: usize) -> Vec<u8> {
    (0..count).map(|_| rng.random_range(0..q) as u8).collect()
}

fn simulate_unit<T: Scalar>(
    config: &SweepConfig<T>,
    thresholds: &[f64],
    point: usize,
    unit: usize,
    sigma: f64,
    fixed_messages: bool,
) -> Result<Vec<Counts>> {
    let mut rng = substream(config.seed, point as u64, unit as u64);
    // Messages come from their own stream; in fixed mode every unit of a point shares it.
    let message_index = if fixed_messages { 0 } else { unit as u64 + 1 };
    let mut message_rng = substream(config.seed, MESSAGE_STREAM | point as u64, message_index);
    let mut draw = |count: usize, q: usize| random_symbols(&mut message_rng, count, q);
    match &config.code {
        CodeUnderTest::Ccn(code) => {
            let n2 = code.n2();
            let q = code.rs().field().q();
            let k2 = code.rs().k2();
            let messages: Vec<Vec<u8>> = (0..n2).map(|_| draw(k2, q)).collect();
            let truth = code.encode_messages(messages)?;
            let x = code.transmit(&truth.codewords)?;
            let y = config.channel.apply_matrix(x.view(), sigma, &mut rng);
            let inner = code.inner_decode(y.view())?;
            thresholds
                .iter()
                .map(|&tau| {
                    let reports = code.outer_decode(&inner, tau, Some(&truth))?;
                    let mut c = Counts { blocks: n2 as u64, symbols: (n2 * n2) as u64, ..Counts::default() };
                    for (r, msg) in reports.iter().zip(&truth.messages) {
                        c.block_errors += u64::from(!r.block_ok);
                        c.bit_errors += r.bit_errors(msg);
                        c.symbol_errors += r.inner_symbol_errors.unwrap_or(0) as u64;
                        c.erasures += r.erasures_declared as u64;
                    }
                    Ok(c)
                })
                .collect()
        }
        CodeUnderTest::Reference(model) => {
            let m = model.batch_size();
            let q = model.num_symbols();
            let mut c = Counts::default();
            let mut idx = vec![0usize; m];
            for _ in 0..REFERENCE_UNIT_BATCHES {
                let syms = draw(m, q);
                for (d, s) in idx.iter_mut().zip(&syms) {
                    *d = *s as usize;
                }
                let x = model.transmit(&idx)?;
                let y = config.channel.apply_matrix(x.view(), sigma, &mut rng);
                for ((sym, _), &truth) in model.decode_top(y.view()).into_iter().zip(&idx) {
                    let wrong = (sym ^ truth).count_ones() as u64;
                    c.block_errors += u64::from(wrong > 0);
                    c.bit_errors += wrong;
                    c.symbol_errors += u64::from(wrong > 0);
                }
                c.blocks += m as u64;
                c.symbols += m as u64;
            }
            Ok(vec![c; thresholds.len()])
        }
    }
}

/// Eb/N0 where a curve first falls to `target` BLER, by log-linear interpolation.
///
/// A point with no observed errors is taken at half an error (0.5/blocks),
/// which is only used if that is already below the target.
pub fn ebn0_at_bler(curve: &[CurvePoint], target: f64) -> Option<f64> {
    let level = |p: &CurvePoint| {
        if p.block_errors == 0 {
            0.5 / p.blocks.max(1) as f64
        } else {
            p.bler
        }
    };
    for w in curve.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (la, lb) = (level(a), level(b));
        if la > target && lb <= target {
            let (ya, yb, yt) = (la.log10(), lb.log10(), target.log10());
            return Some(a.ebn0_db + (ya - yt) / (ya - yb) * (b.ebn0_db - a.ebn0_db));
        }
    }
    curve.first().filter(|p| level(p) <= target).map(|p| p.ebn0_db)
}

/// Sets the global worker pool size from [`WORKERS_ENV`], if present.
pub fn configure_workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CcnError::Config(format!("{WORKERS_ENV}={v} is not a positive integer")))?;
            // Only the first configuration of the global pool takes effect.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Which code a sweep file describes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeSpec {
    Ccn {
        rs_n: usize,
        rs_k: usize,
        #[serde(default)]
        threshold: f64,
    },
    Reference,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    #[default]
    PerBatch,
    /// Population statistics over all 2^k₁ encoder outputs.
    Frozen,
}

/// JSON schema of a sweep configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub code: CodeSpec,
    /// Inner model file, relative to the configuration file.
    pub model: PathBuf,
    #[serde(default)]
    pub normalization: NormalizationMode,
    pub channel: ChannelKind,
    pub ebn0_db: Vec<f64>,
    #[serde(default = "default_min_errors")]
    pub min_block_errors: u64,
    pub max_blocks: u64,
    pub seed: u64,
    #[serde(default)]
    pub message_mode: MessageMode,
    #[serde(default)]
    pub rate: Option<f64>,
}

fn default_min_errors() -> u64 {
    100
}

impl SweepFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CcnError::Config(e.to_string()))
    }

    /// Model path resolved against the directory holding the configuration.
    pub fn model_path(&self, config_path: &Path) -> PathBuf {
        match config_path.parent() {
            Some(dir) if self.model.is_relative() => dir.join(&self.model),
            _ => self.model.clone(),
        }
    }

    /// Loads the model and assembles a runnable sweep.
    pub fn resolve(&self, config_path: &Path) -> Result<SweepConfig<f64>> {
        let mut model: NeuralCodeModel<f64> = load_model(self.model_path(config_path))?;
        if self.normalization == NormalizationMode::Frozen {
            model.freeze_normalization()?;
        }
        let code = match self.code {
            CodeSpec::Ccn { rs_n, rs_k, threshold } => {
                let m = (rs_n + 1).trailing_zeros();
                if !(rs_n + 1).is_power_of_two() || !(m == 4 || m == 8) {
                    return Err(CcnError::Config(format!("rs_n = {rs_n} is not 15 or 255")));
                }
                let rs = RsCode::new(GfField::with_bits(m)?, rs_k).map_err(|e| CcnError::Config(e.to_string()))?;
                CodeUnderTest::Ccn(CcnCode::new(rs, model, threshold).map_err(|e| CcnError::Config(e.to_string()))?)
            }
            CodeSpec::Reference => CodeUnderTest::Reference(model),
        };
        let cfg = SweepConfig {
            code,
            channel: self.channel,
            ebn0_grid_db: self.ebn0_db.clone(),
            min_block_errors: self.min_block_errors,
            max_blocks: self.max_blocks,
            seed: self.seed,
            message_mode: self.message_mode,
            rate: self.rate,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
