//! Argument handling and output formatting for the `symop` binary.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use symop::experiments::{linspace, sweep_hom, HomConfig, HomResult};
use symop::modes::{gaussian_overlap, quadrature_overlap, Envelope, GaussianEnvelope, Polarization, C64};
use symop::par::Execution;
use symop::selfcheck::run_selfcheck;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "symop", version, about = "Symbolic photonic operators: overlaps, HOM sweeps, self-checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Overlap of two Gaussian wave packets.
    Overlap(OverlapArgs),
    /// Coincidence probability over a delay/detuning grid, written as CSV.
    HomSweep(SweepArgs),
    /// Randomized cross-checks against the Fock-space and permanent oracles.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct OverlapArgs {
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub sigma1: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    pub tau1: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    pub tau2: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    pub omega1: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    pub omega2: f64,
    /// Also evaluate the overlap numerically and report the difference.
    #[arg(long)]
    pub quadrature: bool,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub sigma1: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 3.0, value_parser = finite)]
    pub omega0: f64,
    /// Delay grid `a:b:n`, endpoints inclusive.
    #[arg(long, default_value = "-5:5:41", allow_hyphen_values = true)]
    pub dtau_range: Range,
    /// Detuning grid `a:b:n`, endpoints inclusive.
    #[arg(long, default_value = "-5:5:41", allow_hyphen_values = true)]
    pub domega_range: Range,
    /// One of H, V, D, A, R, L.
    #[arg(long, default_value = "H", value_parser = polarization)]
    pub pol1: Polarization,
    #[arg(long, default_value = "H", value_parser = polarization)]
    pub pol2: Polarization,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate cells on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
}

/// `a:b:n`, n evenly spaced points from a to b inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.end, self.count)
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("expected a:b:n, got '{s}'"));
        };
        let start = finite(a)?;
        let end = finite(b)?;
        let count: usize = n.parse().map_err(|_| format!("'{n}' is not a point count"))?;
        if count == 0 {
            return Err("point count must be at least 1".into());
        }
        if count == 1 && start != end {
            return Err(format!("a single point needs a = b, got {start} and {end}"));
        }
        Ok(Range { start, end, count })
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.count)
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !x.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(x)
}

fn positive(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x <= 0.0 {
        return Err(format!("must be > 0, got {x}"));
    }
    Ok(x)
}

pub fn polarization(s: &str) -> Result<Polarization, String> {
    match s.to_ascii_uppercase().as_str() {
        "H" => Ok(Polarization::horizontal()),
        "V" => Ok(Polarization::vertical()),
        "D" => Ok(Polarization::diagonal()),
        "A" => Ok(Polarization::antidiagonal()),
        "R" => Ok(Polarization::right_circular()),
        "L" => Ok(Polarization::left_circular()),
        _ => Err(format!("unknown polarization '{s}', expected one of H V D A R L")),
    }
}

/// Rounds values that would print as ±0 at `decimals` to +0.
fn unsigned_zero(x: f64, decimals: i32) -> f64 {
    if (x * 10f64.powi(decimals)).round() == 0.0 {
        0.0
    } else {
        x
    }
}

/// `re±imi` with twelve decimals, e.g. `1.000000000000+0.000000000000i`.
pub fn format_complex(z: C64) -> String {
    format!("{:.12}{:+.12}i", unsigned_zero(z.re, 12), unsigned_zero(z.im, 12))
}

/// Fifteen significant digits in scientific notation.
pub fn format_real(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.14e}")
}

pub fn overlap_report(args: &OverlapArgs) -> symop::error::Result<String> {
    let a = GaussianEnvelope::new(args.sigma1, args.tau1, args.omega1)?;
    let b = GaussianEnvelope::new(args.sigma2, args.tau2, args.omega2)?;
    let analytic = gaussian_overlap(&a, &b);
    let mut out = format_complex(analytic);
    out.push('\n');
    if args.quadrature {
        let numeric = quadrature_overlap(&Envelope::Gaussian(a), &Envelope::Gaussian(b))?;
        out.push_str(&format!("quadrature {}\n", format_complex(numeric)));
        out.push_str(&format!("difference {:.3e}\n", (numeric - analytic).norm()));
    }
    Ok(out)
}

pub fn sweep(args: &SweepArgs) -> symop::error::Result<HomResult> {
    let config = HomConfig {
        sigma1: args.sigma1,
        sigma2: args.sigma2,
        omega0: args.omega0,
        pol1: args.pol1,
        pol2: args.pol2,
        delta_tau: args.dtau_range.points(),
        delta_omega: args.domega_range.points(),
    };
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    sweep_hom(&config, exec)
}

pub fn write_csv<W: Write>(result: &HomResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta_tau", "delta_omega", "gamma_sq", "p_coinc"])?;
    for c in &result.cells {
        w.write_record([
            format_real(c.delta_tau),
            format_real(c.delta_omega),
            format_real(c.gamma_sq),
            format_real(c.p_coinc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs one parsed command, writing normal output to `stdout` and
/// diagnostics to `stderr`, and returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    match &cli.command {
        Command::Overlap(args) => match overlap_report(args) {
            Ok(text) => emit(stdout, stderr, &text),
            Err(e) => fail(stderr, EXIT_CHECK, &e),
        },
        Command::HomSweep(args) => {
            let result = match sweep(args) {
                Ok(r) => r,
                Err(e) => return fail(stderr, EXIT_CHECK, &e),
            };
            let written = match &args.out {
                Some(path) => File::create(path)
                    .map_err(csv::Error::from)
                    .and_then(|f| write_csv(&result, io::BufWriter::new(f)))
                    .map_err(|e| format!("{}: {e}", path.display())),
                None => write_csv(&result, &mut *stdout).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(e) => fail(stderr, EXIT_IO, &e),
            }
        }
        Command::Selfcheck(args) => {
            let report = run_selfcheck(args.seed, args.cases, Execution::Parallel);
            let code = emit(stdout, stderr, &report.to_string());
            if code != EXIT_OK {
                code
            } else if report.passed() {
                EXIT_OK
            } else {
                EXIT_CHECK
            }
        }
    }
}

fn emit(stdout: &mut dyn Write, stderr: &mut dyn Write, text: &str) -> u8 {
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(stderr, EXIT_IO, &e),
    }
}

fn fail(stderr: &mut dyn Write, code: u8, err: &dyn fmt::Display) -> u8 {
    let _ = writeln!(stderr, "error: {err}");
    code
}
