//! Memoryless real-valued channels and Eb/N0 bookkeeping.
//!
//! With unit signal power, N₀ = 1/(R · Eb/N0) and the noise variance per real
//! channel use is σ² = N₀/2.
//!
//! Randomness comes from ChaCha8 with one independent stream per
//! (seed, stream, index) triple, see [`substream`]. Gaussian samples use the
//! ziggurat sampler of `rand_distr::StandardNormal`. Per channel use the draw
//! order is fixed: AWGN takes one normal; Rayleigh takes two normals for the
//! fading amplitude then one for the noise; bursty takes the noise normal, the
//! burst normal, then one uniform for the burst indicator.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CcnError, Result};
use crate::scalar::Scalar;

/// Independent ChaCha8 stream keyed by `(seed, stream)` with word stream `index`.
pub fn substream(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Eb/N0 operating point for a code of overall rate R.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub ebn0_db: f64,
    pub rate: f64,
}

impl SnrSpec {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(CcnError::InvalidInput(format!("code rate {rate} outside (0, 1]")));
        }
        if !ebn0_db.is_finite() {
            return Err(CcnError::InvalidInput(format!("Eb/N0 {ebn0_db} dB is not finite")));
        }
        Ok(SnrSpec { ebn0_db, rate })
    }

    pub fn n0(&self) -> f64 {
        1.0 / (self.rate * db_to_linear(self.ebn0_db))
    }

    pub fn sigma2(&self) -> f64 {
        self.n0() / 2.0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2().sqrt()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noise standard deviation σ = √(1 / (2 R · 10^(Eb/N0 / 10))).
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> Result<f64> {
    Ok(SnrSpec::new(ebn0_db, rate)?.sigma())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    /// y = x + n
    Awgn,
    /// y = h·x + n with fresh Rayleigh h per use, E[h²] = 1.
    RayleighFast,
    /// y = x + n + c·d, c ~ N(0, 2σ²), d ~ Bernoulli(p).
    Bursty { p: f64 },
}

impl ChannelKind {
    pub fn validate(&self) -> Result<()> {
        if let ChannelKind::Bursty { p } = *self {
            if !(0.0..=1.0).contains(&p) {
                return Err(CcnError::InvalidInput(format!("burst probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// (multiplicative gain, additive noise) for one channel use.
    #[inline]
    fn sample_use<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> (f64, f64) {
        match *self {
            ChannelKind::Awgn => (1.0, sigma * normal(rng)),
            ChannelKind::RayleighFast => {
                let a = normal(rng);
                let b = normal(rng);
                let h = ((a * a + b * b) / 2.0).sqrt();
                (h, sigma * normal(rng))
            }
            ChannelKind::Bursty { p } => {
                let n = sigma * normal(rng);
                let c = std::f64::consts::SQRT_2 * sigma * normal(rng);
                let d = rng.random::<f64>() < p;
                (1.0, if d { n + c } else { n })
            }
        }
    }

    fn has_gain(&self) -> bool {
        matches!(self, ChannelKind::RayleighFast)
    }

    /// Passes `x` through the channel in place.
    pub fn apply_in_place<T: Scalar, R: Rng + ?Sized>(&self, x: &mut [T], sigma: f64, rng: &mut R) {
        for v in x.iter_mut() {
            let (h, n) = self.sample_use(sigma, rng);
            *v = if self.has_gain() { T::lit(h) * *v + T::lit(n) } else { *v + T::lit(n) };
        }
    }

    /// Channel output for a matrix of channel inputs (row-major order of uses).
    pub fn apply_matrix<T: Scalar, R: Rng + ?Sized>(&self, x: ArrayView2<'_, T>, sigma: f64, rng: &mut R) -> Array2<T> {
        let mut y = x.as_standard_layout().into_owned();
        self.apply_in_place(y.as_slice_mut().expect("standard layout"), sigma, rng);
        y
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::RayleighFast => "rayleigh",
            ChannelKind::Bursty { .. } => "bursty",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelKind::Bursty { p } => write!(f, "bursty(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ChannelKind {
    type Err = CcnError;

    /// `awgn`, `rayleigh`, `bursty` (p = 0.1) or `bursty:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "awgn" => ChannelKind::Awgn,
            "rayleigh" | "rayleigh_fast" => ChannelKind::RayleighFast,
            "bursty" => ChannelKind::Bursty { p: 0.1 },
            other => match other.strip_prefix("bursty:") {
                Some(p) => ChannelKind::Bursty {
                    p: p.parse().map_err(|_| CcnError::InvalidInput(format!("bad burst probability {p:?}")))?,
                },
                None => return Err(CcnError::InvalidInput(format!("unknown channel {other:?}"))),
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[inline]
fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// y = x + z, z ~ N(0, σ²) i.i.d.
pub fn apply_awgn<T: Scalar, R: Rng + ?Sized>(x: &[T], sigma: f64, rng: &mut R) -> Vec<T> {
    let mut y = x.to_vec();
    ChannelKind::Awgn.apply_in_place(&mut y, sigma, rng);
    y
}

/// y = h·x + n with h Rayleigh of scale 1/√2 drawn fresh per use.
pub fn apply_rayleigh<T: Scalar, R: Rng + ?Sized>(x: &[T], sigma: f64, rng: &mut R) -> Vec<T> {
    let mut y = x.to_vec();
    ChannelKind::RayleighFast.apply_in_place(&mut y, sigma, rng);
    y
}

/// y = x + n + c·d with n ~ N(0, σ²), c ~ N(0, 2σ²), d ~ Bernoulli(p).
pub fn apply_bursty<T: Scalar, R: Rng + ?Sized>(x: &[T], sigma: f64, p: f64, rng: &mut R) -> Vec<T> {
    let mut y = x.to_vec();
    ChannelKind::Bursty { p }.apply_in_place(&mut y, sigma, rng);
    y
}

/// A frozen draw of channel randomness for one batch, so the channel becomes
/// a differentiable node y = g ⊙ x + n in the training graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization<T> {
    gain: Option<Array2<T>>,
    noise: Array2<T>,
}

impl<T: Scalar> ChannelRealization<T> {
    /// Noiseless, unit-gain channel.
    pub fn identity(rows: usize, cols: usize) -> Self {
        ChannelRealization { gain: None, noise: Array2::zeros((rows, cols)) }
    }

    pub fn from_parts(gain: Option<Array2<T>>, noise: Array2<T>) -> Result<Self> {
        if gain.as_ref().is_some_and(|g| g.dim() != noise.dim()) {
            return Err(CcnError::InvalidInput("gain and noise shapes differ".into()));
        }
        Ok(ChannelRealization { gain, noise })
    }

    /// Draws a realization with the same sampling order as [`ChannelKind::apply_in_place`].
    pub fn sample<R: Rng + ?Sized>(kind: &ChannelKind, rows: usize, cols: usize, sigma: f64, rng: &mut R) -> Self {
        let mut noise = Array2::zeros((rows, cols));
        let mut gain = kind.has_gain().then(|| Array2::zeros((rows, cols)));
        for (i, n) in noise.iter_mut().enumerate() {
            let (h, z) = kind.sample_use(sigma, rng);
            *n = T::lit(z);
            if let Some(g) = gain.as_mut() {
                g.as_slice_mut().expect("standard layout")[i] = T::lit(h);
            }
        }
        ChannelRealization { gain, noise }
    }

    pub fn noise(&self) -> &Array2<T> {
        &self.noise
    }

    pub fn gain(&self) -> Option<&Array2<T>> {
        self.gain.as_ref()
    }

    pub fn apply(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if x.dim() != self.noise.dim() {
            return Err(CcnError::InvalidInput(format!(
                "channel realization is {:?}, input is {:?}",
                self.noise.dim(),
                x.dim()
            )));
        }
        let mut y = match &self.gain {
            Some(g) => &x * g,
            None => x.to_owned(),
        };
        y += &self.noise;
        Ok(y)
    }

    /// Gradient with respect to the channel input.
    pub fn backward(&self, d_y: Array2<T>) -> Array2<T> {
        match &self.gain {
            Some(g) => d_y * g,
            None => d_y,
        }
    }
}
