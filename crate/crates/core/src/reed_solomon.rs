//! Systematic narrow-sense Reed-Solomon codes of primitive length n₂ = q − 1.
//!
//! Codeword layout is message first, parity last. Position `i` of a codeword
//! is the coefficient of x^(n₂−1−i), so its error locator is α^(n₂−1−i).
//! The generator has roots α¹ … α^(n₂−k₂).
//!
//! Decoding is bounded-distance: syndromes, Berlekamp–Massey (on
//! Forney-modified syndromes when erasures are present), Chien search, then
//! Forney's formula for the errata magnitudes. A decoded word is always
//! re-checked against the parity-check equations before it is reported.

use std::collections::BTreeSet;

use crate::error::{CcnError, Result};
use crate::galois::{FieldElement, GfField, GfPoly};

#[derive(Clone, Debug)]
pub struct RsCode {
    field: GfField,
    n2: usize,
    k2: usize,
    generator: GfPoly,
    // Generator coefficients below the leading 1, highest degree first.
    gen_high_first: Vec<FieldElement>,
}

/// Result of one decoding attempt. Failures are values, not errors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RsDecodeOutcome {
    Corrected {
        message: Vec<u8>,
        codeword: Vec<u8>,
        /// Symbol errors corrected outside the erased positions.
        errors: usize,
        /// Erased positions filled in.
        erasures: usize,
    },
    Failure,
}

impl RsDecodeOutcome {
    pub fn is_corrected(&self) -> bool {
        matches!(self, RsDecodeOutcome::Corrected { .. })
    }

    pub fn message(&self) -> Option<&[u8]> {
        match self {
            RsDecodeOutcome::Corrected { message, .. } => Some(message),
            RsDecodeOutcome::Failure => None,
        }
    }

    pub fn codeword(&self) -> Option<&[u8]> {
        match self {
            RsDecodeOutcome::Corrected { codeword, .. } => Some(codeword),
            RsDecodeOutcome::Failure => None,
        }
    }

    pub fn errors(&self) -> usize {
        match self {
            RsDecodeOutcome::Corrected { errors, .. } => *errors,
            RsDecodeOutcome::Failure => 0,
        }
    }

    pub fn erasures(&self) -> usize {
        match self {
            RsDecodeOutcome::Corrected { erasures, .. } => *erasures,
            RsDecodeOutcome::Failure => 0,
        }
    }
}

impl RsCode {
    /// An (q−1, k2) code over `field`.
    pub fn new(field: GfField, k2: usize) -> Result<Self> {
        let n2 = field.order();
        if k2 == 0 || k2 >= n2 {
            return Err(CcnError::InvalidInput(format!(
                "message length k2 = {k2} must satisfy 0 < k2 < {n2}"
            )));
        }
        let mut generator = GfPoly::one();
        for i in 1..=(n2 - k2) {
            // (x - α^i) = (x + α^i) in characteristic 2
            let root = field.exp(i as i64);
            generator = generator.mul(&GfPoly::from_coeffs(vec![root, FieldElement::ONE]), &field);
        }
        let nk = n2 - k2;
        let gen_high_first = (0..nk).map(|j| generator.coeff(nk - 1 - j)).collect();
        Ok(RsCode { field, n2, k2, generator, gen_high_first })
    }

    /// (15, 11) over GF(16).
    pub fn rs_15_11() -> Self {
        Self::new(GfField::gf16(), 11).expect("valid parameters")
    }

    /// (255, 223) over GF(256).
    pub fn rs_255_223() -> Self {
        Self::new(GfField::gf256(), 223).expect("valid parameters")
    }

    pub fn field(&self) -> &GfField {
        &self.field
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn k2(&self) -> usize {
        self.k2
    }

    /// Number of parity symbols, n₂ − k₂.
    pub fn redundancy(&self) -> usize {
        self.n2 - self.k2
    }

    /// Errors-only correction radius ⌊(n₂ − k₂)/2⌋.
    pub fn t(&self) -> usize {
        self.redundancy() / 2
    }

    pub fn generator(&self) -> &GfPoly {
        &self.generator
    }

    fn check_symbols(&self, symbols: &[u8], what: &str) -> Result<()> {
        if let Some(&bad) = symbols.iter().find(|&&s| s as usize >= self.field.q()) {
            return Err(CcnError::InvalidInput(format!(
                "{what} symbol {bad} outside GF({})",
                self.field.q()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.k2 {
            return Err(CcnError::InvalidInput(format!(
                "message has {} symbols, expected {}",
                msg.len(),
                self.k2
            )));
        }
        self.check_symbols(msg, "message")?;
        let f = &self.field;
        let nk = self.redundancy();
        let mut rem = vec![FieldElement::ZERO; nk];
        for &s in msg {
            let fb = FieldElement::new(s) + rem[0];
            for j in 0..nk - 1 {
                rem[j] = rem[j + 1] + f.mul(fb, self.gen_high_first[j]);
            }
            rem[nk - 1] = f.mul(fb, self.gen_high_first[nk - 1]);
        }
        let mut out = Vec::with_capacity(self.n2);
        out.extend_from_slice(msg);
        out.extend(rem.iter().map(|c| c.value()));
        Ok(out)
    }

    /// S_j = c(α^j) for j = 1 … n₂ − k₂, returned as S(x) = Σ S_{j+1} x^j.
    pub fn syndromes(&self, word: &[u8]) -> Vec<FieldElement> {
        let f = &self.field;
        (1..=self.redundancy())
            .map(|j| {
                let x = f.exp(j as i64);
                word.iter()
                    .fold(FieldElement::ZERO, |acc, &c| f.mul(acc, x) + FieldElement::new(c))
            })
            .collect()
    }

    /// True when `word` satisfies every parity check.
    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n2 && self.syndromes(word).iter().all(|s| s.is_zero())
    }

    #[inline]
    fn locator(&self, position: usize) -> FieldElement {
        self.field.exp((self.n2 - 1 - position) as i64)
    }

    /// Errors-only bounded-distance decoding up to t symbol errors.
    pub fn decode_errors(&self, received: &[u8]) -> Result<RsDecodeOutcome> {
        self.decode_inner(received, &BTreeSet::new())
    }

    /// Errors-and-erasures decoding; succeeds whenever 2e + r ≤ n₂ − k₂.
    ///
    /// Values at erased positions are ignored.
    pub fn decode_errors_erasures(&self, received: &[u8], erasures: &[usize]) -> Result<RsDecodeOutcome> {
        let set: BTreeSet<usize> = erasures.iter().copied().collect();
        if let Some(&p) = set.iter().find(|&&p| p >= self.n2) {
            return Err(CcnError::InvalidInput(format!(
                "erasure position {p} outside codeword of length {}",
                self.n2
            )));
        }
        self.decode_inner(received, &set)
    }

    fn decode_inner(&self, received: &[u8], erasures: &BTreeSet<usize>) -> Result<RsDecodeOutcome> {
        if received.len() != self.n2 {
            return Err(CcnError::InvalidInput(format!(
                "received word has {} symbols, expected {}",
                received.len(),
                self.n2
            )));
        }
        let mut word = received.to_vec();
        for &p in erasures {
            word[p] = 0;
        }
        self.check_symbols(&word, "received")?;

        let nk = self.redundancy();
        let r = erasures.len();
        if r > nk {
            return Ok(RsDecodeOutcome::Failure);
        }
        let f = &self.field;
        let synd = self.syndromes(&word);
        if synd.iter().all(|s| s.is_zero()) {
            return Ok(self.corrected(word, 0, r));
        }
        let s_poly = GfPoly::from_coeffs(synd.clone());

        let mut gamma = GfPoly::one();
        for &p in erasures {
            gamma = gamma.mul(&GfPoly::from_coeffs(vec![FieldElement::ONE, self.locator(p)]), f);
        }
        let forney_synd = gamma.mul(&s_poly, f).truncate(nk);
        let seq: Vec<FieldElement> = (r..nk).map(|j| forney_synd.coeff(j)).collect();
        let (sigma, l) = berlekamp_massey(&seq, f);
        if 2 * l + r > nk || sigma.degree() != Some(l) {
            return Ok(RsDecodeOutcome::Failure);
        }

        let lambda = sigma.mul(&gamma, f);
        let deg = lambda.degree().unwrap_or(0);
        let roots: Vec<usize> = (0..self.n2)
            .filter(|&i| {
                let x_inv = f.exp(-((self.n2 - 1 - i) as i64));
                lambda.eval(x_inv, f).is_zero()
            })
            .collect();
        if roots.len() != deg {
            return Ok(RsDecodeOutcome::Failure);
        }

        let omega = s_poly.mul(&lambda, f).truncate(nk);
        let lambda_prime = lambda.derivative();
        let mut errors = 0;
        for &i in &roots {
            let x_inv = f.exp(-((self.n2 - 1 - i) as i64));
            let denom = lambda_prime.eval(x_inv, f);
            if denom.is_zero() {
                return Ok(RsDecodeOutcome::Failure);
            }
            let magnitude = f.div(omega.eval(x_inv, f), denom)?;
            word[i] ^= magnitude.value();
            if !erasures.contains(&i) {
                errors += 1;
            }
        }
        if 2 * errors + r > nk || !self.is_codeword(&word) {
            return Ok(RsDecodeOutcome::Failure);
        }
        Ok(self.corrected(word, errors, r))
    }

    fn corrected(&self, codeword: Vec<u8>, errors: usize, erasures: usize) -> RsDecodeOutcome {
        RsDecodeOutcome::Corrected {
            message: codeword[..self.k2].to_vec(),
            codeword,
            errors,
            erasures,
        }
    }
}

/// Shortest LFSR generating `seq`: returns the connection polynomial
/// C(x) = 1 + c₁x + … + c_L x^L and its length L.
pub fn berlekamp_massey(seq: &[FieldElement], f: &GfField) -> (GfPoly, usize) {
    let mut c = vec![FieldElement::ONE];
    let mut b = vec![FieldElement::ONE];
    let mut l = 0usize;
    let mut shift = 1usize;
    let mut last_d = FieldElement::ONE;
    for n in 0..seq.len() {
        let mut d = seq[n];
        for i in 1..=l.min(c.len() - 1) {
            d += f.mul(c[i], seq[n - i]);
        }
        if d.is_zero() {
            shift += 1;
            continue;
        }
        let coef = f.div(d, last_d).expect("last discrepancy is nonzero");
        let prev = c.clone();
        if c.len() < b.len() + shift {
            c.resize(b.len() + shift, FieldElement::ZERO);
        }
        for (i, &bi) in b.iter().enumerate() {
            c[i + shift] += f.mul(coef, bi);
        }
        if 2 * l <= n {
            l = n + 1 - l;
            b = prev;
            last_d = d;
            shift = 1;
        } else {
            shift += 1;
        }
    }
    (GfPoly::from_coeffs(c), l)
}

/// Tally of random decoding trials at a fixed number of errors and erasures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadiusSuite {
    pub n2: usize,
    pub k2: usize,
    pub errors: usize,
    pub erasures: usize,
    pub trials: usize,
    /// Trials that returned the sent message with the exact (e, r) counts.
    pub recovered: usize,
}

impl RadiusSuite {
    pub fn passed(&self) -> bool {
        self.recovered == self.trials
    }
}

impl std::fmt::Display for RadiusSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "RS({},{}) e={} r={}: {}/{} recovered",
            self.n2, self.k2, self.errors, self.erasures, self.recovered, self.trials
        )
    }
}

/// Random messages hit by `errors` errors and `erasures` erasures at distinct
/// random positions; erased positions also get a random placeholder value.
pub fn radius_suite<R: rand::Rng + ?Sized>(
    code: &RsCode,
    errors: usize,
    erasures: usize,
    trials: usize,
    rng: &mut R,
) -> Result<RadiusSuite> {
    let n2 = code.n2();
    if errors + erasures > n2 {
        return Err(CcnError::InvalidInput(format!("{errors} errors and {erasures} erasures exceed n2 = {n2}")));
    }
    let q = code.field().q();
    let mut positions: Vec<usize> = (0..n2).collect();
    let mut recovered = 0;
    for _ in 0..trials {
        let msg: Vec<u8> = (0..code.k2()).map(|_| rng.random_range(0..q) as u8).collect();
        let mut word = code.encode(&msg)?;
        for j in 0..errors + erasures {
            let pick = rng.random_range(j..n2);
            positions.swap(j, pick);
        }
        let erased = &positions[..erasures];
        for &p in erased {
            word[p] = rng.random_range(0..q) as u8;
        }
        for &p in &positions[erasures..erasures + errors] {
            word[p] ^= rng.random_range(1..q) as u8;
        }
        let outcome = if erasures == 0 {
            code.decode_errors(&word)?
        } else {
            code.decode_errors_erasures(&word, erased)?
        };
        if let RsDecodeOutcome::Corrected { message, errors: e, erasures: r, .. } = &outcome {
            if *message == msg && *e == errors && *r == erasures {
                recovered += 1;
            }
        }
    }
    Ok(RadiusSuite { n2, k2: code.k2(), errors, erasures, trials, recovered })
}

/// The (code, e, r, trials) cases of the standard radius check.
pub fn standard_radius_cases() -> Vec<(RsCode, usize, usize, usize)> {
    let small = RsCode::rs_15_11();
    let large = RsCode::rs_255_223();
    let mut cases = Vec::new();
    for e in 0..=2 {
        for r in 0..=(4 - 2 * e) {
            cases.push((small.clone(), e, r, 10_000));
        }
    }
    for (e, r) in [(0, 0), (8, 0), (16, 0), (0, 32), (10, 12)] {
        cases.push((large.clone(), e, r, 1_000));
    }
    cases
}
