//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Trained models are cached under the cargo target temp directory, keyed by
//! a checksum of their training configuration, so reruns only pay for the
//! Monte Carlo sweeps.
//!
//! Arguments that parse as integers select criteria, e.g.
//! `cargo test --test acceptance -- 5 6`. Setting `CCN_ACCEPTANCE_FULL=1`
//! adds the large-system gain measured at BLER 1e-4.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ccn::channels::{substream, ChannelKind, ChannelRealization, SnrSpec};
use ccn::galois::{FieldElement, GfField};
use ccn::neural_net::{load_model, save_model, NeuralCodeModel};
use ccn::normal_approx::{biawgn_capacity_dispersion, biawgn_information_density, ebn0_for_epsilon, NaChannel};
use ccn::reed_solomon::{radius_suite, standard_radius_cases, RsCode};
use ccn::sim_harness::{ebn0_at_bler, run_sweep_thresholds, CodeUnderTest, CurvePoint, MessageMode, SweepConfig};
use ccn::trainer::{estimate_symbol_error_rate, train_inner, TrainConfig};
use ccn::CcnCode;
use rand::Rng;

// Pinned tolerances.
const SER_BAND: (f64, f64) = (3e-3, 3e-2);
const SER_MIN_SYMBOLS: usize = 100_000;
const SMALL_GAIN_DB: (f64, f64) = (0.4, 1.2);
const LARGE_GAIN_DB: (f64, f64) = (2.4, 3.8);
const ERASURE_HALF_WIDTHS: f64 = 2.0;
const BURSTY_MIN_GAIN_DB: f64 = 4.0;
const RAYLEIGH_MIN_GAIN_DB: f64 = 6.0;
const NA_GAP_DB: (f64, f64) = (1.5, 3.0);
const NA_ORACLE_TOL: f64 = 1e-6;
const GRADIENT_REL_TOL: f64 = 1e-4;
const TARGET_BLER: f64 = 1e-3;
const DEEP_BLER: f64 = 1e-4;
const TAU: f64 = 0.5;

const LARGE_RATE: f64 = (223.0 * 8.0) / (255.0 * 12.0);
/// Training budget of the stand-alone (7, 4) autoencoder (one epoch).
const AE_SAMPLES: usize = 9_999_990;

struct Line {
    id: String,
    pass: bool,
    detail: String,
}

fn line(id: impl Into<String>, pass: bool, detail: impl Into<String>) -> Line {
    Line { id: id.into(), pass, detail: detail.into() }
}

fn in_band(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

fn fmt_db(x: Option<f64>) -> String {
    x.map_or("not reached".into(), |v| format!("{v:.3} dB"))
}

/// Trained models and measured curves shared between criteria.
struct Ctx {
    cache_dir: PathBuf,
    full: bool,
    ae_awgn: Option<NeuralCodeModel<f64>>,
    ae_rayleigh: Option<NeuralCodeModel<f64>>,
    large_awgn: Option<NeuralCodeModel<f64>>,
    large_rayleigh: Option<NeuralCodeModel<f64>>,
    ae_awgn_curve: Option<Vec<CurvePoint>>,
    large_awgn_curves: Option<Vec<Vec<CurvePoint>>>,
    large_rayleigh_curves: Option<Vec<Vec<CurvePoint>>>,
}

fn frozen(mut model: NeuralCodeModel<f64>) -> NeuralCodeModel<f64> {
    model.freeze_normalization().expect("population statistics");
    model
}

fn cached_model(dir: &Path, name: &str, cfg: &TrainConfig) -> NeuralCodeModel<f64> {
    let json = serde_json::to_string(cfg).unwrap();
    let path = dir.join(format!("{name}-{:08x}.ccnm", crc32fast::hash(json.as_bytes())));
    if let Ok(model) = load_model(&path) {
        return model;
    }
    eprintln!("training {name}: {} steps", cfg.total_steps());
    let t = Instant::now();
    let out = train_inner::<f64>(cfg).unwrap_or_else(|e| panic!("training {name}: {e}"));
    eprintln!("trained {name} in {:.0?}", t.elapsed());
    save_model(&out.model, &path).unwrap();
    out.model
}

fn ae_config(channel: ChannelKind) -> TrainConfig {
    let mut cfg = TrainConfig::reference_ae(channel, 1);
    cfg.samples_per_epoch = AE_SAMPLES;
    cfg.epochs = 1;
    cfg.eval_every = usize::MAX;
    cfg
}

fn large_config(channel: ChannelKind) -> TrainConfig {
    let mut cfg = TrainConfig::ccn_large_inner(channel, 1);
    cfg.eval_every = usize::MAX;
    cfg
}

fn grid(lo: f64, step: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + step * i as f64).collect()
}

fn sweep(
    code: CodeUnderTest<f64>,
    channel: ChannelKind,
    ebn0: Vec<f64>,
    min_errors: u64,
    max_blocks: u64,
    thresholds: &[f64],
) -> Vec<Vec<CurvePoint>> {
    let cfg = SweepConfig {
        code,
        channel,
        ebn0_grid_db: ebn0,
        min_block_errors: min_errors,
        max_blocks,
        seed: 2024,
        message_mode: MessageMode::Fresh,
        rate: None,
    };
    let t = Instant::now();
    let curves = run_sweep_thresholds(&cfg, thresholds).unwrap();
    for p in &curves[0] {
        eprintln!("  {:>5.2} dB  bler {:.3e}  ({} / {})", p.ebn0_db, p.bler, p.block_errors, p.blocks);
    }
    eprintln!("  swept in {:.0?}", t.elapsed());
    curves
}

fn reference_curve(model: &NeuralCodeModel<f64>, channel: ChannelKind, ebn0: Vec<f64>) -> Vec<CurvePoint> {
    sweep(CodeUnderTest::Reference(frozen(model.clone())), channel, ebn0, 200, 20_000_000, &[0.0]).remove(0)
}

fn large_ccn(model: &NeuralCodeModel<f64>) -> CodeUnderTest<f64> {
    CodeUnderTest::Ccn(CcnCode::new(RsCode::rs_255_223(), frozen(model.clone()), 0.0).unwrap())
}

impl Ctx {
    fn ae_awgn(&mut self) -> NeuralCodeModel<f64> {
        let dir = self.cache_dir.clone();
        self.ae_awgn.get_or_insert_with(|| cached_model(&dir, "ae-awgn", &ae_config(ChannelKind::Awgn))).clone()
    }

    fn ae_rayleigh(&mut self) -> NeuralCodeModel<f64> {
        let dir = self.cache_dir.clone();
        self.ae_rayleigh
            .get_or_insert_with(|| cached_model(&dir, "ae-rayleigh", &ae_config(ChannelKind::RayleighFast)))
            .clone()
    }

    fn large_awgn(&mut self) -> NeuralCodeModel<f64> {
        let dir = self.cache_dir.clone();
        self.large_awgn.get_or_insert_with(|| cached_model(&dir, "large-awgn", &large_config(ChannelKind::Awgn))).clone()
    }

    fn large_rayleigh(&mut self) -> NeuralCodeModel<f64> {
        let dir = self.cache_dir.clone();
        self.large_rayleigh
            .get_or_insert_with(|| cached_model(&dir, "large-rayleigh", &large_config(ChannelKind::RayleighFast)))
            .clone()
    }

    fn ae_awgn_curve(&mut self) -> Vec<CurvePoint> {
        if self.ae_awgn_curve.is_none() {
            let model = self.ae_awgn();
            eprintln!("AE(7,4), AWGN:");
            self.ae_awgn_curve = Some(reference_curve(&model, ChannelKind::Awgn, grid(4.0, 0.5, 8.0)));
        }
        self.ae_awgn_curve.clone().unwrap()
    }

    /// Errors-only and τ = 0.5 curves of the large CCN on AWGN, from shared inner outputs.
    fn large_awgn_curves(&mut self) -> Vec<Vec<CurvePoint>> {
        if self.large_awgn_curves.is_none() {
            let model = self.large_awgn();
            let (hi, max_blocks) = if self.full { (5.0, 255 * 400) } else { (4.75, 255 * 60) };
            eprintln!("(255·12, 223·8) CCN, AWGN:");
            self.large_awgn_curves =
                Some(sweep(large_ccn(&model), ChannelKind::Awgn, grid(3.5, 0.25, hi), 100, max_blocks, &[0.0, TAU]));
        }
        self.large_awgn_curves.clone().unwrap()
    }

    fn large_rayleigh_curves(&mut self) -> Vec<Vec<CurvePoint>> {
        if self.large_rayleigh_curves.is_none() {
            let model = self.large_rayleigh();
            eprintln!("(255·12, 223·8) CCN, Rayleigh:");
            self.large_rayleigh_curves = Some(sweep(
                large_ccn(&model),
                ChannelKind::RayleighFast,
                grid(7.5, 0.5, 10.0),
                100,
                255 * 60,
                &[0.0, TAU],
            ));
        }
        self.large_rayleigh_curves.clone().unwrap()
    }
}

fn criterion_1(_: &mut Ctx) -> Vec<Line> {
    let mut failures = Vec::new();
    let mut patterns = 0;
    for (i, (code, e, r, trials)) in standard_radius_cases().into_iter().enumerate() {
        let suite = radius_suite(&code, e, r, trials, &mut substream(1, 0, i as u64)).unwrap();
        patterns += suite.trials;
        if !suite.passed() {
            failures.push(suite.to_string());
        }
    }
    let detail = if failures.is_empty() {
        format!("RS radius suites, all {patterns} patterns recovered")
    } else {
        format!("RS radius suites: {}", failures.join("; "))
    };
    vec![line("1", failures.is_empty(), detail)]
}

/// Shift-and-add multiplication reduced by `poly`.
fn peasant(mut a: u32, mut b: u32, m: u32, poly: u32) -> u32 {
    let mut acc = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & (1 << m) != 0 {
            a ^= poly;
        }
    }
    acc
}

fn criterion_2(_: &mut Ctx) -> Vec<Line> {
    let mut mismatches = 0u64;
    let mut pairs = 0u64;
    for (f, poly) in [(GfField::gf256(), 0x11D), (GfField::gf16(), 0x13)] {
        let q = f.q() as u32;
        for a in 0..q {
            for b in 0..q {
                let got = f.mul(FieldElement::new(a as u8), FieldElement::new(b as u8)).value() as u32;
                mismatches += u64::from(got != peasant(a, b, f.m(), poly));
                pairs += 1;
            }
        }
    }
    vec![line("2", mismatches == 0, format!("GF table vs peasant multiplication, {mismatches} mismatches over {pairs} pairs"))]
}

fn worst_gradient_error(seed: u64) -> f64 {
    let mut rng = substream(seed, 0, 0);
    let mut model = NeuralCodeModel::<f64>::new(2, 3, 8, &mut rng).unwrap();
    // Off-zero biases keep rows away from the ReLU kink at exactly zero.
    for layer in model.encoder.iter_mut().chain(model.decoder.iter_mut()) {
        layer.bias.mapv_inplace(|_| rng.random_range(-0.3..0.3));
    }
    let mut rng = substream(seed, 1, 0);
    let idx: Vec<usize> = (0..8).map(|i| if i < 4 { i } else { rng.random_range(0..4) }).collect();
    let ch = ChannelRealization::sample(&ChannelKind::Awgn, 8, 3, 0.5, &mut rng);
    let (_, grads) = model.loss_and_grads(&idx, &ch).unwrap();
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    let loss = |m: &NeuralCodeModel<f64>| m.loss(&m.forward_train(&idx, &ch).unwrap());
    let h = 1e-4;
    let mut worst = 0.0f64;
    for (t, tensor) in analytic.iter().enumerate() {
        for (j, &a) in tensor.iter().enumerate() {
            let orig = model.param_slices_mut()[t][j];
            model.param_slices_mut()[t][j] = orig + h;
            let up = loss(&model);
            model.param_slices_mut()[t][j] = orig - h;
            let down = loss(&model);
            model.param_slices_mut()[t][j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let scale = a.abs().max(numeric.abs());
            let err = if scale < 1e-8 { (a - numeric).abs() } else { (a - numeric).abs() / scale };
            worst = worst.max(err);
        }
    }
    worst
}

fn criterion_3(_: &mut Ctx) -> Vec<Line> {
    let worst = [1, 2, 3].map(worst_gradient_error).into_iter().fold(0.0, f64::max);
    vec![line(
        "3",
        worst < GRADIENT_REL_TOL,
        format!("(3,2) toy gradients, worst relative error {worst:.2e} over seeds 1-3 (limit {GRADIENT_REL_TOL:.0e})"),
    )]
}

fn criterion_4(ctx: &mut Ctx) -> Vec<Line> {
    let model = frozen(ctx.large_awgn());
    let snr = SnrSpec::new(5.0, LARGE_RATE).unwrap();
    let est = estimate_symbol_error_rate(&model, &ChannelKind::Awgn, snr, 2 * SER_MIN_SYMBOLS, &mut substream(4, 0, 0))
        .unwrap();
    let pass = in_band(est.rate, SER_BAND) && est.trials as usize >= SER_MIN_SYMBOLS;
    vec![line(
        "4",
        pass,
        format!(
            "(12,8) inner SER at 5 dB = {:.3e} ± {:.1e} over {} symbols (band [{:.0e}, {:.0e}])",
            est.rate, est.half_width, est.trials, SER_BAND.0, SER_BAND.1
        ),
    )]
}

fn criterion_5(ctx: &mut Ctx) -> Vec<Line> {
    let ae = ctx.ae_awgn_curve();
    let model = frozen(ctx.ae_awgn());
    eprintln!("(15·7, 11·4) CCN, AWGN:");
    let code = CodeUnderTest::Ccn(CcnCode::new(RsCode::rs_15_11(), model, 0.0).unwrap());
    let ccn = sweep(code, ChannelKind::Awgn, grid(3.5, 0.5, 6.0), 200, 20_000_000, &[0.0]).remove(0);
    let (a, c) = (ebn0_at_bler(&ae, TARGET_BLER), ebn0_at_bler(&ccn, TARGET_BLER));
    let gain = a.zip(c).map(|(a, c)| a - c);
    vec![line(
        "5",
        gain.is_some_and(|g| in_band(g, SMALL_GAIN_DB)),
        format!(
            "small-system gain at BLER 1e-3: AE {} vs CCN {} -> {} (band [{}, {}] dB)",
            fmt_db(a),
            fmt_db(c),
            fmt_db(gain),
            SMALL_GAIN_DB.0,
            SMALL_GAIN_DB.1
        ),
    )]
}

fn criterion_6(ctx: &mut Ctx) -> Vec<Line> {
    let ae = ctx.ae_awgn_curve();
    let ccn = ctx.large_awgn_curves().remove(0);
    let mut lines = Vec::new();
    let mut targets = vec![("6", TARGET_BLER)];
    if ctx.full {
        targets.push(("6 (1e-4)", DEEP_BLER));
    }
    for (id, target) in targets {
        let (a, c) = (ebn0_at_bler(&ae, target), ebn0_at_bler(&ccn, target));
        let gain = a.zip(c).map(|(a, c)| a - c);
        lines.push(line(
            id,
            gain.is_some_and(|g| in_band(g, LARGE_GAIN_DB)),
            format!(
                "large-system gain at BLER {target:.0e}: AE {} vs CCN {} -> {} (band [{}, {}] dB)",
                fmt_db(a),
                fmt_db(c),
                fmt_db(gain),
                LARGE_GAIN_DB.0,
                LARGE_GAIN_DB.1
            ),
        ));
    }
    lines
}

/// Largest excess of the τ curve over the errors-only curve, in units of the
/// errors-only CI half-width.
fn erasure_excess(curves: &[Vec<CurvePoint>]) -> (bool, f64) {
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for (eo, ee) in curves[0].iter().zip(&curves[1]) {
        let hw = eo.bler_half_width();
        ok &= ee.bler <= eo.bler + ERASURE_HALF_WIDTHS * hw;
        if hw > 0.0 {
            worst = worst.max((ee.bler - eo.bler) / hw);
        }
    }
    (ok, worst)
}

fn criterion_7(ctx: &mut Ctx) -> Vec<Line> {
    let mut lines = Vec::new();
    for (name, curves) in [("AWGN", ctx.large_awgn_curves()), ("Rayleigh", ctx.large_rayleigh_curves())] {
        let (ok, worst) = erasure_excess(&curves);
        let errors: (u64, u64) = curves[0]
            .iter()
            .zip(&curves[1])
            .fold((0, 0), |acc, (a, b)| (acc.0 + a.block_errors, acc.1 + b.block_errors));
        lines.push(line(
            format!("7 ({name})"),
            ok,
            format!(
                "tau = {TAU} vs errors-only on shared outputs: {} vs {} block errors, worst excess {worst:+.2} half-widths (limit {ERASURE_HALF_WIDTHS})",
                errors.1, errors.0
            ),
        ));
    }
    lines
}

fn criterion_8(ctx: &mut Ctx) -> Vec<Line> {
    let bursty = ChannelKind::Bursty { p: 0.1 };
    let ae_model = ctx.ae_awgn();
    eprintln!("AE(7,4) AWGN-trained, bursty:");
    let ae = reference_curve(&ae_model, bursty, grid(5.0, 0.5, 9.0));
    let model = ctx.large_awgn();
    eprintln!("(255·12, 223·8) CCN AWGN-trained, bursty:");
    let ccn = sweep(large_ccn(&model), bursty, grid(4.5, 0.25, 5.75), 100, 255 * 60, &[TAU]).remove(0);
    let (a, c) = (ebn0_at_bler(&ae, TARGET_BLER), ebn0_at_bler(&ccn, TARGET_BLER));
    let gain = a.zip(c).map(|(a, c)| a - c);
    let bursty_line = line(
        "8 (bursty)",
        gain.is_some_and(|g| g >= BURSTY_MIN_GAIN_DB),
        format!(
            "bursty p = 0.1 gain at BLER 1e-3: AE {} vs CCN {} -> {} (minimum {BURSTY_MIN_GAIN_DB} dB)",
            fmt_db(a),
            fmt_db(c),
            fmt_db(gain)
        ),
    );

    let ae_model = ctx.ae_rayleigh();
    eprintln!("AE(7,4) Rayleigh-trained, Rayleigh:");
    let ae = reference_curve(&ae_model, ChannelKind::RayleighFast, grid(8.0, 1.0, 18.0));
    let ccn = ctx.large_rayleigh_curves().remove(1);
    let (a, c) = (ebn0_at_bler(&ae, TARGET_BLER), ebn0_at_bler(&ccn, TARGET_BLER));
    let gain = a.zip(c).map(|(a, c)| a - c);
    let rayleigh_line = line(
        "8 (Rayleigh)",
        gain.is_some_and(|g| g >= RAYLEIGH_MIN_GAIN_DB),
        format!(
            "Rayleigh gain at BLER 1e-3: AE {} vs CCN {} -> {} (minimum {RAYLEIGH_MIN_GAIN_DB} dB)",
            fmt_db(a),
            fmt_db(c),
            fmt_db(gain)
        ),
    );
    vec![bursty_line, rayleigh_line]
}

/// Adaptive trapezoid rule on [a, b].
fn trapezoid(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let coarse = 0.5 * (b - a) * (fa + fb);
    let fine = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
    if depth == 0 || (fine - coarse).abs() < 3.0 * tol {
        fine
    } else {
        trapezoid(f, a, m, tol / 2.0, depth - 1) + trapezoid(f, m, b, tol / 2.0, depth - 1)
    }
}

/// C and V of BI-AWGN by direct integration over the output density given x = +1.
fn oracle_capacity_dispersion(sigma2: f64) -> (f64, f64) {
    let s = sigma2.sqrt();
    let pdf = move |y: f64| (-(y - 1.0).powi(2) / (2.0 * sigma2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    let (lo, hi) = (1.0 - 14.0 * s, 1.0 + 14.0 * s);
    let pieces = 400;
    let w = (hi - lo) / pieces as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for i in 0..pieces {
        let (a, b) = (lo + w * i as f64, lo + w * (i + 1) as f64);
        m1 += trapezoid(&|y| pdf(y) * biawgn_information_density(y, sigma2), a, b, 1e-12, 30);
        m2 += trapezoid(&|y| pdf(y) * biawgn_information_density(y, sigma2).powi(2), a, b, 1e-12, 30);
    }
    (m1, m2 - m1 * m1)
}

fn criterion_9(ctx: &mut Ctx) -> Vec<Line> {
    let mut worst = 0.0f64;
    for i in 0..=28 {
        let snr_db = -4.0 + 0.5 * i as f64;
        let sigma2 = 1.0 / (2.0 * 10f64.powf(snr_db / 10.0));
        let (c, v) = biawgn_capacity_dispersion(sigma2);
        let (co, vo) = oracle_capacity_dispersion(sigma2);
        worst = worst.max((c - co).abs()).max((v - vo).abs());
    }
    let na = ebn0_for_epsilon(3060, LARGE_RATE, NaChannel::BiAwgn, TARGET_BLER).unwrap();
    let ccn = ebn0_at_bler(&ctx.large_awgn_curves()[0], TARGET_BLER);
    let gap = ccn.map(|c| c - na);
    vec![
        line(
            "9 (gap)",
            gap.is_some_and(|g| in_band(g, NA_GAP_DB)),
            format!(
                "normal approximation (3060, 0.583) at 1e-3: {na:.3} dB, CCN {} -> gap {} (band [{}, {}] dB)",
                fmt_db(ccn),
                fmt_db(gap),
                NA_GAP_DB.0,
                NA_GAP_DB.1
            ),
        ),
        line(
            "9 (quadrature)",
            worst < NA_ORACLE_TOL,
            format!("BI-AWGN C and V vs trapezoid oracle, worst deviation {worst:.1e} (limit {NA_ORACLE_TOL:.0e})"),
        ),
    ]
}

fn run_cli(dir: &Path, workers: &str, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_ccn"))
        .current_dir(dir)
        .env("CCN_WORKERS", workers)
        .args(args)
        .output()
        .expect("spawn ccn");
    assert!(out.status.success(), "ccn {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn criterion_10(_: &mut Ctx) -> Vec<Line> {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("train.json"),
        r#"{"k1": 4, "n1": 7, "channel": {"kind": "awgn"}, "train_ebn0_db": 5.0, "rate": 0.5714285714285714,
            "samples_per_epoch": 30000, "epochs": 2, "batch_size": 15, "seed": 17, "eval_every": 500, "eval_symbols": 1500}"#,
    )
    .unwrap();
    let sweep = |kind: &str| {
        format!(
            r#"{{"code": {kind}, "model": "a.ccnm", "channel": {{"kind": "bursty", "p": 0.1}},
                "ebn0_db": [2.0, 3.0, 4.0], "min_block_errors": 50, "max_blocks": 3000, "seed": 5}}"#
        )
    };
    std::fs::write(p.join("ccn.json"), sweep(r#"{"kind": "ccn", "rs_n": 15, "rs_k": 11, "threshold": 0.5}"#)).unwrap();
    std::fs::write(p.join("ref.json"), sweep(r#"{"kind": "reference"}"#)).unwrap();
    for (tag, workers) in [("a", "1"), ("b", "3")] {
        let (model, log) = (format!("{tag}.ccnm"), format!("{tag}.csv"));
        run_cli(p, workers, &["train", "--config", "train.json", "--out", &model, "--log", &log]);
        run_cli(p, workers, &["sweep", "--config", "ccn.json", "--out", &format!("ccn-{tag}.csv")]);
        run_cli(p, workers, &["sweep", "--config", "ref.json", "--out", &format!("ref-{tag}.csv")]);
    }
    let same = |x: &str, y: &str| std::fs::read(p.join(x)).unwrap() == std::fs::read(p.join(y)).unwrap();
    let checks = [("a.ccnm", "b.ccnm"), ("a.csv", "b.csv"), ("ccn-a.csv", "ccn-b.csv"), ("ref-a.csv", "ref-b.csv")];
    let differing: Vec<&str> = checks.iter().filter(|(x, y)| !same(x, y)).map(|(x, _)| *x).collect();
    vec![line(
        "10",
        differing.is_empty(),
        if differing.is_empty() {
            "repeated train and sweep runs (1 and 3 workers) are byte-identical".to_string()
        } else {
            format!("outputs differ between repeated runs: {differing:?}")
        },
    )]
}

type Criterion = fn(&mut Ctx) -> Vec<Line>;

fn main() {
    let criteria: [(u32, Criterion); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let cache_dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-models");
    std::fs::create_dir_all(&cache_dir).unwrap();
    let mut ctx = Ctx {
        cache_dir,
        full: std::env::var("CCN_ACCEPTANCE_FULL").is_ok_and(|v| v == "1"),
        ae_awgn: None,
        ae_rayleigh: None,
        large_awgn: None,
        large_rayleigh: None,
        ae_awgn_curve: None,
        large_awgn_curves: None,
        large_rayleigh_curves: None,
    };
    let mut lines = Vec::new();
    for (n, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t = Instant::now();
        for l in run(&mut ctx) {
            println!("criterion {:<14} {}  {}  [{:.1?}]", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail, t.elapsed());
            lines.push(l);
        }
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
