use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use simpell::arith::FactorBudget;
use simpell::realcf::PrecisionPolicy;
use simpell::report::{render_text, Record};
use simpell::sweep::{run_sweep, SweepOptions};
use simpell::verifier::{verify_b, Status, VerifyConfig};

/// Certify uniqueness for x^2 - a y^2 = 1, z^2 - b x^2 = 1.
#[derive(Parser, Debug)]
#[command(name = "simpell", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    /// Initial working precision in bits.
    #[arg(long, global = true, default_value_t = 192, value_parser = clap::value_parser!(u32).range(32..))]
    precision_bits: u32,
    /// Ceiling for adaptive precision doubling.
    #[arg(long, global = true, default_value_t = 32768, value_parser = clap::value_parser!(u32).range(32..))]
    precision_ceiling_bits: u32,
    /// Wall-clock budget for factoring each kept candidate.
    #[arg(long, global = true, default_value_t = 5000)]
    factor_budget_ms: u64,
    /// Largest n' range the fallback scan may cover.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    scan_cap: u64,
    /// Seed for randomized primality rounds.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Verify a single b and print its report.
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        b: u64,
        /// JSON record (the default).
        #[arg(long, conflicts_with = "text")]
        json: bool,
        /// Human-readable summary.
        #[arg(long)]
        text: bool,
    },
    /// Verify every b in a range, writing JSONL.
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        from: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        to: u64,
        /// Worker threads (0 = number of cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Defaults to sweep-<from>-<to>.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to <out>.ckpt.json.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

impl Global {
    fn config(&self) -> VerifyConfig {
        VerifyConfig {
            policy: PrecisionPolicy {
                initial_bits: self.precision_bits,
                ceiling_bits: self.precision_ceiling_bits.max(self.precision_bits),
            },
            factor_budget: FactorBudget {
                time_limit: Some(Duration::from_millis(self.factor_budget_ms)),
                seed: self.seed,
                ..FactorBudget::default()
            },
            scan_cap: self.scan_cap,
        }
    }
}

fn status_code(s: &Status) -> u8 {
    match s {
        Status::UniqueCertified => 0,
        Status::PairsFound => 2,
        Status::NotCertified(_) => 3,
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(s: &str) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(s.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let config = cli.global.config();
    match cli.cmd {
        Cmd::Verify { b, text, .. } => {
            let report = verify_b(b, &config);
            let rec = Record::from_report(&report);
            let body = if text { render_text(&rec) } else { rec.to_json_line() + "\n" };
            emit(&body)?;
            Ok(status_code(&report.status))
        }
        Cmd::Sweep { from, to, jobs, out, checkpoint } => {
            anyhow::ensure!(from <= to, "--from must not exceed --to");
            let out = out.unwrap_or_else(|| PathBuf::from(format!("sweep-{from}-{to}.jsonl")));
            let opts = SweepOptions { from, to, jobs, out, checkpoint, config };
            let summary = run_sweep(&opts).context("sweep failed")?;
            emit(&(summary.line() + "\n"))?;
            Ok(summary.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
