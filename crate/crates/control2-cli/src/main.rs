//! `control2`: run the 2-adic control theorem checks over a grid of levels
//! and write a JSON report.
//!
//! Exit status: 0 when every check passes, 1 on any failure, 2 on usage
//! errors, 3 when a resource bound was hit (skipped checks or an unwritable
//! output path). Set CONTROL2_LOG=info for progress lines on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use control2::verifier::{run, CheckStatus, ControlReport, VerifyConfig};

#[derive(Parser, Debug)]
#[command(
    name = "control2",
    version,
    about = "Verify a 2-adic control theorem for modular curve homology at concrete levels",
    long_about = None
)]
struct Cli {
    /// Tame levels N (odd), comma separated.
    #[arg(long = "N", value_name = "LIST", value_delimiter = ',', default_value = "1,3,5")]
    n: Vec<u64>,

    /// Smallest dyadic level exponent r (levels N*2^r).
    #[arg(long, default_value_t = 2)]
    r_min: u32,

    /// Largest dyadic level exponent r.
    #[arg(long, default_value_t = 4)]
    r_max: u32,

    /// Smallest target exponent s in the control pairs s <= r.
    #[arg(long, default_value_t = 2)]
    s_min: u32,

    /// Working precision k: ordinary parts live over Z/2^k.
    #[arg(long, default_value_t = 16)]
    precision: u32,

    /// Check ids to run, comma separated, or "all".
    #[arg(long, value_delimiter = ',', default_value = "all")]
    checks: Vec<String>,

    /// Write the JSON report here (stdout gets the human summary either way).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads; 0 means one per core. Ignored in sequential builds.
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Abort coset enumerations beyond this many cosets.
    #[arg(long, default_value_t = 1_000_000)]
    coset_bound: usize,
}

fn log_enabled() -> bool {
    std::env::var("CONTROL2_LOG").map_or(false, |v| !v.is_empty() && v != "0" && v != "off")
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    for &n in &cli.n {
        if n == 0 || n % 2 == 0 {
            return usage_error(&format!("--N: {n} is not an odd positive integer"));
        }
    }
    if cli.r_min < 2 {
        return usage_error(&format!(
            "--r-min: levels start at r = 2 (the tower base N*4), got {}",
            cli.r_min
        ));
    }
    if cli.s_min < 2 {
        return usage_error(&format!("--s-min: must be at least 2, got {}", cli.s_min));
    }
    if cli.r_max < cli.r_min {
        return usage_error(&format!(
            "--r-max: {} is below --r-min {}",
            cli.r_max, cli.r_min
        ));
    }
    if !(4..=64).contains(&cli.precision) {
        return usage_error(&format!(
            "--precision: must lie in [4, 64], got {}",
            cli.precision
        ));
    }

    let config = VerifyConfig {
        n_list: cli.n,
        r_min: cli.r_min,
        r_max: cli.r_max,
        s_min: cli.s_min,
        precision: cli.precision,
        checks: cli.checks,
        coset_bound: cli.coset_bound,
    };
    if let Err(e) = config.validate() {
        return usage_error(&e.to_string());
    }

    if log_enabled() {
        eprintln!("control2: running {:?}", config);
    }

    let report = match run_with_jobs(&config, cli.jobs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    for check in &report.checks {
        let p = &check.params;
        let status = match check.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skipped",
        };
        let fmt_opt = |x: Option<u32>| x.map_or("-".to_string(), |v| v.to_string());
        println!(
            "{:<16} N={:<4} r={:<3} s={:<3} k={:<3} {:<8} {} ms",
            check.id,
            p.n,
            fmt_opt(p.r),
            fmt_opt(p.s),
            fmt_opt(p.k),
            status,
            check.ms
        );
    }
    println!(
        "summary: {} checks, {} failed, {} skipped; d_by_N = {:?}, stable = {}",
        report.checks.len(),
        report.failures(),
        report.skipped(),
        report.summary.d_by_n,
        report.summary.stable
    );

    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, report.to_json_pretty()) {
            eprintln!("error: cannot write report to {}: {e}", path.display());
            return ExitCode::from(3);
        }
        if log_enabled() {
            eprintln!("control2: report written to {}", path.display());
        }
    }

    if report.failures() > 0 {
        ExitCode::from(1)
    } else if report.skipped() > 0 {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

#[cfg(feature = "parallel")]
fn run_with_jobs(config: &VerifyConfig, jobs: usize) -> control2::Result<ControlReport> {
    if jobs == 0 {
        run(config)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| control2::Error::Internal(format!("thread pool: {e}")))?;
        pool.install(|| run(config))
    }
}

#[cfg(not(feature = "parallel"))]
fn run_with_jobs(config: &VerifyConfig, _jobs: usize) -> control2::Result<ControlReport> {
    run(config)
}
