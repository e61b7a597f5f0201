//! Finite-blocklength normal approximation
//! ε ≈ Q((nC − nR + ½ log₂ n) / √(nV)).

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::channels::{db_to_linear, SnrSpec};
use crate::error::{CcnError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NaChannel {
    /// Binary input ±1 with Gaussian noise.
    BiAwgn,
    /// Gaussian input, real AWGN.
    RealAwgn,
}

impl FromStr for NaChannel {
    type Err = CcnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "biawgn" | "bi-awgn" => Ok(NaChannel::BiAwgn),
            "awgn" | "real-awgn" => Ok(NaChannel::RealAwgn),
            _ => Err(CcnError::InvalidInput(format!("unknown channel `{s}` (biawgn, awgn)"))),
        }
    }
}

impl fmt::Display for NaChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NaChannel::BiAwgn => "biawgn",
            NaChannel::RealAwgn => "awgn",
        })
    }
}

/// Nodes and weights of n-point Gauss–Hermite quadrature (weight e^{−x²}).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^(−1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const GH_POINTS: usize = 160;

fn gh_table() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| gauss_hermite(GH_POINTS))
}

/// log(1 + e^{−a}) without overflow.
fn softplus_neg(a: f64) -> f64 {
    if a > 0.0 {
        (-a).exp().ln_1p()
    } else {
        -a + a.exp().ln_1p()
    }
}

/// Information density (bits) of output y given input +1, noise variance σ².
pub fn biawgn_information_density(y: f64, sigma2: f64) -> f64 {
    1.0 - softplus_neg(2.0 * y / sigma2) / LN_2
}

/// Capacity and dispersion (bits, bits²) of BI-AWGN with unit-power inputs.
pub fn biawgn_capacity_dispersion(sigma2: f64) -> (f64, f64) {
    let (x, w) = gh_table();
    let sigma = sigma2.sqrt();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (&t, &wt) in x.iter().zip(w) {
        let i = biawgn_information_density(1.0 + sigma * std::f64::consts::SQRT_2 * t, sigma2);
        m1 += wt * i;
        m2 += wt * i * i;
    }
    let norm = 1.0 / PI.sqrt();
    let c = m1 * norm;
    let v = (m2 * norm - c * c).max(0.0);
    (c, v)
}

/// Capacity and dispersion of real AWGN at signal-to-noise ratio `snr` = P/σ².
pub fn awgn_capacity_dispersion(snr: f64) -> (f64, f64) {
    let c = 0.5 * (1.0 + snr).log2();
    let log2e = std::f64::consts::LOG2_E;
    let v = snr * (snr + 2.0) / (2.0 * (snr + 1.0).powi(2)) * log2e * log2e;
    (c, v)
}

/// Gaussian tail Q(x) = Pr[N(0,1) > x].
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaPoint {
    pub ebn0_db: f64,
    pub epsilon: f64,
    pub capacity: f64,
    pub dispersion: f64,
    /// False when R ≥ C; ε is then at or near the ½ regime.
    pub reliable: bool,
}

/// Normal-approximation block error probability for blocklength `n`, rate `rate`.
pub fn normal_approximation(n: usize, rate: f64, channel: NaChannel, ebn0_db: f64) -> Result<NaPoint> {
    if n == 0 {
        return Err(CcnError::InvalidInput("blocklength must be positive".into()));
    }
    let snr = SnrSpec::new(ebn0_db, rate)?;
    let sigma2 = snr.sigma2();
    let (capacity, dispersion) = match channel {
        NaChannel::BiAwgn => biawgn_capacity_dispersion(sigma2),
        NaChannel::RealAwgn => awgn_capacity_dispersion(1.0 / sigma2),
    };
    let nf = n as f64;
    let num = nf * (capacity - rate) + 0.5 * nf.log2();
    let den = (nf * dispersion).sqrt();
    let epsilon = if den > 0.0 {
        q_function(num / den)
    } else if num > 0.0 {
        0.0
    } else {
        1.0
    };
    Ok(NaPoint { ebn0_db, epsilon, capacity, dispersion, reliable: rate < capacity })
}

/// Eb/N0 (dB) at which the approximation reaches `target` ε, by bisection.
pub fn ebn0_for_epsilon(n: usize, rate: f64, channel: NaChannel, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 0.5) {
        return Err(CcnError::InvalidInput(format!("target ε {target} outside (0, 0.5)")));
    }
    let eps = |db: f64| normal_approximation(n, rate, channel, db).map(|p| p.epsilon);
    let (mut lo, mut hi) = (-10.0, 30.0);
    if eps(lo)? < target || eps(hi)? > target {
        return Err(CcnError::InvalidInput("target ε not bracketed by [−10, 30] dB".into()));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if eps(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Linear SNR P/σ² at an Eb/N0 for rate R (unit signal power).
pub fn snr_linear(ebn0_db: f64, rate: f64) -> f64 {
    2.0 * rate * db_to_linear(ebn0_db)
}
