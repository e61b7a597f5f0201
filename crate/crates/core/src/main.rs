use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ccn::channels::substream;
use ccn::neural_net::save_model;
use ccn::normal_approx::{normal_approximation, NaChannel};
use ccn::reed_solomon::{radius_suite, standard_radius_cases};
use ccn::sim_harness::{configure_workers_from_env, run_sweep_thresholds_with, write_csv, CodeSpec, SweepFile};
use ccn::trainer::{train_inner_with, TrainConfig};
use ccn::CcnError;

#[derive(Parser)]
#[command(name = "ccn", version, about = "Concatenated Reed-Solomon and neural channel codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an inner autoencoder from a JSON configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        /// Training log (CSV: step,loss,val_ser).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Simulate BLER/BER over an Eb/N0 grid and write a CSV curve.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Reed-Solomon correction-radius suites.
    RsSelftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print a normal-approximation table (ebn0_db,epsilon).
    Na {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value = "biawgn")]
        channel: NaChannel,
        /// Grid as start:step:stop (inclusive).
        #[arg(long)]
        ebn0: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CcnError::Unreadable { .. } | CcnError::Config(_) | CcnError::InvalidInput(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn read_text(path: &PathBuf) -> ccn::Result<String> {
    fs::read_to_string(path).map_err(|source| CcnError::Unreadable { path: path.clone(), source })
}

fn run(command: Command) -> ccn::Result<ExitCode> {
    match command {
        Command::Train { config, out, log } => {
            let cfg = TrainConfig::from_json(&read_text(&config)?)?;
            eprintln!("config: {}", serde_json::to_string(&cfg).expect("config serializes"));
            eprintln!("seed: {}", cfg.seed);
            let total = cfg.total_steps();
            let trained = train_inner_with::<f64>(&cfg, |r| {
                if let Some(ser) = r.val_ser {
                    eprintln!("step {}/{total} loss {:.5} val_ser {:.4e}", r.step, r.loss, ser);
                }
            });
            let output = match trained {
                Ok(o) => o,
                Err(ccn::trainer::TrainError::Fault { error, step, last_good }) => {
                    let ckpt = out.with_extension("last_good.ccnm");
                    save_model(&last_good.model, &ckpt)?;
                    eprintln!("last good checkpoint written to {}", ckpt.display());
                    return Err(CcnError::NumericalFault(format!("step {step}: {error}")));
                }
                Err(e) => return Err(e.into()),
            };
            save_model(&output.model, &out)?;
            if let Some(path) = log {
                output.log.save_csv(&path)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, out } => {
            let file = SweepFile::from_json(&read_text(&config)?)?;
            eprintln!("config: {}", serde_json::to_string(&file).expect("config serializes"));
            eprintln!("model: {}", file.model_path(&config).display());
            eprintln!("seed: {}", file.seed);
            let sweep = file.resolve(&config)?;
            let tau = match file.code {
                CodeSpec::Ccn { threshold, .. } => threshold,
                CodeSpec::Reference => 0.0,
            };
            eprintln!("rate: {:.6}", sweep.accounting_rate());
            let mut curves = run_sweep_thresholds_with(&sweep, &[tau], |_, points| {
                let p = &points[0];
                eprintln!("{} dB: bler {:.4e} ({} / {} blocks)", p.ebn0_db, p.bler, p.block_errors, p.blocks);
            })?;
            let mut f = std::io::BufWriter::new(fs::File::create(&out)?);
            write_csv(&curves.remove(0), &mut f)?;
            f.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::RsSelftest { seed } => {
            eprintln!("seed: {seed}");
            let mut all = true;
            for (i, (code, e, r, trials)) in standard_radius_cases().into_iter().enumerate() {
                let suite = radius_suite(&code, e, r, trials, &mut substream(seed, 0, i as u64))?;
                println!("{} {suite}", if suite.passed() { "PASS" } else { "FAIL" });
                all &= suite.passed();
            }
            Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Na { n, rate, channel, ebn0 } => {
            let grid = parse_grid(&ebn0)?;
            eprintln!("config: n={n} rate={rate} channel={channel} ebn0={ebn0}");
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            writeln!(w, "ebn0_db,epsilon")?;
            for db in grid {
                let p = normal_approximation(n, rate, channel, db)?;
                let flag = if p.reliable { "" } else { " # not reliable: R >= C" };
                writeln!(w, "{db},{:.9e}{flag}", p.epsilon)?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// `start:step:stop`, stop included; values rounded to 1e-9.
fn parse_grid(spec: &str) -> ccn::Result<Vec<f64>> {
    let bad = || CcnError::InvalidInput(format!("grid `{spec}` is not start:step:stop"));
    let parts: Vec<f64> = spec.split(':').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let [start, step, stop] = parts[..] else { return Err(bad()) };
    if step.is_nan() || step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}
