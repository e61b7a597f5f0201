//! End-to-end training of the inner autoencoder through a sampled channel.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{substream, ChannelKind, ChannelRealization, SnrSpec};
use crate::error::{CcnError, Result};
use crate::neural_net::{Nadam, NadamConfig, NeuralCodeModel};
use crate::scalar::Scalar;
use crate::stats::half_width95;

const STREAM_INIT: u64 = 0;
const STREAM_DATA: u64 = 1;
const STREAM_VALIDATION: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub k1: usize,
    pub n1: usize,
    pub channel: ChannelKind,
    pub train_ebn0_db: f64,
    /// Rate used to turn `train_ebn0_db` into a noise level.
    pub rate: f64,
    pub samples_per_epoch: usize,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    pub seed: u64,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default = "default_eval_symbols")]
    pub eval_symbols: usize,
    /// Steps between rows of the CSV log.
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

fn default_lr() -> f64 {
    5e-4
}
fn default_eval_every() -> usize {
    10_000
}
fn default_eval_symbols() -> usize {
    10_000
}
fn default_log_every() -> usize {
    100
}

/// Training Eb/N0 for each channel family.
pub fn default_train_ebn0_db(channel: &ChannelKind) -> f64 {
    match channel {
        ChannelKind::Awgn => 5.0,
        ChannelKind::RayleighFast => 10.0,
        ChannelKind::Bursty { .. } => 3.0,
    }
}

/// Nearest positive multiple of `m` to `samples`.
pub fn round_samples(samples: usize, m: usize) -> usize {
    ((samples + m / 2) / m).max(1) * m
}

impl TrainConfig {
    /// Inner (12, 8) code of the (255, 223) CCN.
    pub fn ccn_large_inner(channel: ChannelKind, seed: u64) -> Self {
        let m = 255;
        TrainConfig {
            k1: 8,
            n1: 12,
            channel,
            train_ebn0_db: default_train_ebn0_db(&channel),
            rate: (223.0 * 8.0) / (255.0 * 12.0),
            samples_per_epoch: round_samples(1_000_000, m),
            epochs: 5,
            batch_size: m,
            learning_rate: default_lr(),
            seed,
            eval_every: default_eval_every(),
            eval_symbols: default_eval_symbols(),
            log_every: default_log_every(),
        }
    }

    /// The (7, 4) reference autoencoder, also the inner code of the (15, 11) CCN.
    pub fn reference_ae(channel: ChannelKind, seed: u64) -> Self {
        let m = 15;
        TrainConfig {
            k1: 4,
            n1: 7,
            channel,
            train_ebn0_db: default_train_ebn0_db(&channel),
            rate: 4.0 / 7.0,
            samples_per_epoch: round_samples(50_000_000, m),
            epochs: 10,
            batch_size: m,
            learning_rate: default_lr(),
            seed,
            eval_every: default_eval_every(),
            eval_symbols: default_eval_symbols(),
            log_every: default_log_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CcnError::Config(m));
        if self.batch_size < 2 {
            return bad(format!("batch_size {} < 2", self.batch_size));
        }
        if !self.samples_per_epoch.is_multiple_of(self.batch_size) {
            return bad(format!(
                "samples_per_epoch {} is not a multiple of batch_size {}",
                self.samples_per_epoch, self.batch_size
            ));
        }
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return bad(format!("rate {} outside (0, 1]", self.rate));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {}", self.learning_rate));
        }
        if self.k1 == 0 || self.k1 > 16 || self.n1 == 0 {
            return bad(format!("unsupported inner code ({}, {})", self.n1, self.k1));
        }
        if self.eval_every == 0 || self.log_every == 0 {
            return bad("eval_every and log_every must be positive".into());
        }
        self.channel.validate().map_err(|e| CcnError::Config(e.to_string()))
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.samples_per_epoch / self.batch_size
    }

    pub fn total_steps(&self) -> usize {
        self.steps_per_epoch() * self.epochs
    }

    pub fn snr(&self) -> Result<SnrSpec> {
        SnrSpec::new(self.train_ebn0_db, self.rate)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text).map_err(|e| CcnError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One CSV row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    /// Steps completed.
    pub step: usize,
    /// Mean loss over the steps since the previous row.
    pub loss: f64,
    pub val_ser: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    /// Loss of every step, in order.
    pub losses: Vec<f64>,
    pub records: Vec<LogRecord>,
}

impl TrainingLog {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,loss,val_ser")?;
        for r in &self.records {
            match r.val_ser {
                Some(s) => writeln!(w, "{},{:.9e},{:.9e}", r.step, r.loss, s)?,
                None => writeln!(w, "{},{:.9e},", r.step, r.loss)?,
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Mean of the first `n` step losses.
    pub fn head_mean(&self, n: usize) -> Option<f64> {
        let n = n.min(self.losses.len());
        (n > 0).then(|| self.losses[..n].iter().sum::<f64>() / n as f64)
    }

    /// Mean of the last `n` step losses.
    pub fn tail_mean(&self, n: usize) -> Option<f64> {
        let n = n.min(self.losses.len());
        (n > 0).then(|| self.losses[self.losses.len() - n..].iter().sum::<f64>() / n as f64)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput<T> {
    pub model: NeuralCodeModel<T>,
    pub log: TrainingLog,
}

#[derive(Debug)]
pub enum TrainError<T> {
    /// Rejected before any step ran.
    Setup(CcnError),
    /// A step produced a non-finite loss or gradient; `last_good` holds the
    /// model as it was before that step.
    Fault { error: CcnError, step: usize, last_good: Box<TrainOutput<T>> },
}

impl<T> From<TrainError<T>> for CcnError {
    fn from(e: TrainError<T>) -> Self {
        match e {
            TrainError::Setup(e) => e,
            TrainError::Fault { error, step, .. } => CcnError::NumericalFault(format!("step {step}: {error}")),
        }
    }
}

impl<T> std::fmt::Display for TrainError<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainError::Setup(e) => write!(f, "{e}"),
            TrainError::Fault { error, step, .. } => write!(f, "training stopped at step {step}: {error}"),
        }
    }
}

/// Freshly initialized model for `config`.
pub fn initial_model<T: Scalar>(config: &TrainConfig) -> Result<NeuralCodeModel<T>> {
    let mut rng = substream(config.seed, STREAM_INIT, 0);
    NeuralCodeModel::new(config.k1, config.n1, config.batch_size, &mut rng)
}

/// Trains with Nadam on uniformly drawn symbols; `on_record` sees each log row as it is produced.
pub fn train_inner_with<T: Scalar>(
    config: &TrainConfig,
    mut on_record: impl FnMut(&LogRecord),
) -> std::result::Result<TrainOutput<T>, TrainError<T>> {
    config.validate().map_err(TrainError::Setup)?;
    let snr = config.snr().map_err(TrainError::Setup)?;
    let sigma = snr.sigma();
    let mut model = initial_model::<T>(config).map_err(TrainError::Setup)?;
    let opt_cfg = NadamConfig { learning_rate: config.learning_rate, ..NadamConfig::default() };
    let shapes: Vec<usize> = model.param_slices_mut().iter().map(|s| s.len()).collect();
    let mut opt = Nadam::<T>::new(opt_cfg, shapes);
    let mut log = TrainingLog::default();
    let mut rng = substream(config.seed, STREAM_DATA, 0);
    let m = config.batch_size;
    let q = model.num_symbols();
    let total = config.total_steps();
    log.losses.reserve(total);
    let mut indices = vec![0usize; m];
    let mut window = 0.0;
    let mut window_len = 0usize;

    for step in 1..=total {
        for j in indices.iter_mut() {
            *j = rng.random_range(0..q);
        }
        let channel = ChannelRealization::<T>::sample(&config.channel, m, config.n1, sigma, &mut rng);
        let fault = |error: CcnError, model: &NeuralCodeModel<T>, log: &TrainingLog| TrainError::Fault {
            error,
            step,
            last_good: Box::new(TrainOutput { model: model.clone(), log: log.clone() }),
        };
        let (loss, grads) = match model.loss_and_grads(&indices, &channel) {
            Ok(v) => v,
            Err(e) => return Err(fault(e, &model, &log)),
        };
        let loss = loss.as_f64();
        if !loss.is_finite() {
            return Err(fault(CcnError::NumericalFault(format!("loss {loss}")), &model, &log));
        }
        let g = grads.slices();
        if let Err(e) = opt.step(&mut model.param_slices_mut(), &g) {
            return Err(fault(e, &model, &log));
        }
        log.losses.push(loss);
        window += loss;
        window_len += 1;

        let eval_now = step % config.eval_every == 0 || step == total;
        if step % config.log_every == 0 || eval_now {
            let val_ser = if eval_now {
                let mut vrng = substream(config.seed, STREAM_VALIDATION, step as u64);
                let est = estimate_symbol_error_rate_sigma(&model, &config.channel, sigma, config.eval_symbols, &mut vrng)
                    .map_err(|e| fault(e, &model, &log))?;
                Some(est.rate)
            } else {
                None
            };
            let rec = LogRecord { step, loss: window / window_len as f64, val_ser };
            on_record(&rec);
            log.records.push(rec);
            window = 0.0;
            window_len = 0;
        }
    }
    Ok(TrainOutput { model, log })
}

/// [`train_inner_with`] without a progress callback.
pub fn train_inner<T: Scalar>(config: &TrainConfig) -> std::result::Result<TrainOutput<T>, TrainError<T>> {
    train_inner_with(config, |_| {})
}

/// Monte Carlo symbol error rate with its 95% half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SerEstimate {
    pub errors: u64,
    pub trials: u64,
    pub rate: f64,
    pub half_width: f64,
}

/// Symbol error rate of argmax decoding at the given operating point.
pub fn estimate_symbol_error_rate<T: Scalar, R: Rng + ?Sized>(
    model: &NeuralCodeModel<T>,
    channel: &ChannelKind,
    snr: SnrSpec,
    trials: usize,
    rng: &mut R,
) -> Result<SerEstimate> {
    estimate_symbol_error_rate_sigma(model, channel, snr.sigma(), trials, rng)
}

/// As [`estimate_symbol_error_rate`] with the noise standard deviation given directly.
///
/// Symbols are sent in batches of the model's batch size, so the trial count
/// is rounded up to a whole number of batches.
pub fn estimate_symbol_error_rate_sigma<T: Scalar, R: Rng + ?Sized>(
    model: &NeuralCodeModel<T>,
    channel: &ChannelKind,
    sigma: f64,
    trials: usize,
    rng: &mut R,
) -> Result<SerEstimate> {
    if trials == 0 {
        return Err(CcnError::InvalidInput("trials must be at least 1".into()));
    }
    let m = model.batch_size();
    let q = model.num_symbols();
    let batches = trials.div_ceil(m);
    let mut errors = 0u64;
    let mut indices = vec![0usize; m];
    for _ in 0..batches {
        for j in indices.iter_mut() {
            *j = rng.random_range(0..q);
        }
        let x = model.transmit(&indices)?;
        let y = channel.apply_matrix(x.view(), sigma, rng);
        for ((sym, _), &truth) in model.decode_top(y.view()).into_iter().zip(&indices) {
            errors += u64::from(sym != truth);
        }
    }
    let n = (batches * m) as u64;
    Ok(SerEstimate { errors, trials: n, rate: errors as f64 / n as f64, half_width: half_width95(errors, n) })
}
