//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 reproduction mismatch.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::protocol::{run_protocol, ProtocolConfig};
use crate::reproduce::{run_target, Manifest, Target};
use crate::security::{
    compute_c, depolarizing_closed_form, key_rate, key_rate_report, max_tolerated_qber,
    symmetric_error_entropy,
};
use crate::sweep::{pi_fractions, run_sweep, write_csv, SweepDocument, SweepGrid, SweepOptions};
use crate::walk::{
    born_distribution, evolve, split_index, CoinState, Flip, StateVector, StepOrder,
    WalkParams,
};

/// Directory used for table output when `--out` is not given.
pub const OUT_DIR_ENV: &str = "QWQKD_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qwqkd", version, about = "Quantum-walk key distribution toolkit")]
pub struct Cli {
    /// Random seed for protocol runs; overrides the config file, whose default is 20180507.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OrderArg {
    #[default]
    CoinThenShift,
    ShiftThenCoin,
}

impl From<OrderArg> for StepOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::CoinThenShift => StepOrder::CoinThenShift,
            OrderArg::ShiftThenCoin => StepOrder::ShiftThenCoin,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a basis state and print its Born distribution.
    Walk(WalkArgs),
    /// Overlap constant c minimized over t.
    Cvalue(CvalueArgs),
    /// Asymptotic key rate.
    Keyrate(KeyrateArgs),
    /// Noise tolerance for a given c, or the depolarizing form of a Pauli channel.
    Noise(NoiseArgs),
    /// Grid search over coin parameters.
    Sweep(SweepArgs),
    /// Simulate a protocol from a JSON config.
    Protocol(ProtocolArgs),
    /// Recompute a reference table or figure and compare.
    Reproduce(ReproduceArgs),
}

fn angle(s: &str) -> std::result::Result<f64, String> {
    crate::protocol::parse_angle(s).map_err(|e| e.to_string())
}

fn initial(s: &str) -> std::result::Result<(usize, CoinState), String> {
    let (x, c) = s
        .split_once(',')
        .ok_or_else(|| format!("expected POSITION,COIN, got {s:?}"))?;
    let x = x.trim().parse().map_err(|_| format!("bad position {x:?}"))?;
    let c = c.parse().map_err(|e: Error| e.to_string())?;
    Ok((x, c))
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[arg(long = "P")]
    pub positions: usize,
    #[arg(long, value_parser = angle)]
    pub theta: f64,
    #[arg(long, value_parser = angle, default_value = "0")]
    pub phi: f64,
    #[arg(long)]
    pub t: u64,
    #[arg(long = "F", default_value = "I")]
    pub flip: Flip,
    #[arg(long, value_enum, default_value_t)]
    pub order: OrderArg,
    /// Initial basis state as `POSITION,COIN`.
    #[arg(long, value_parser = initial, default_value = "0,R")]
    pub init: (usize, CoinState),
}

#[derive(Debug, Args)]
pub struct CvalueArgs {
    #[arg(long = "P")]
    pub positions: usize,
    #[arg(long, value_parser = angle)]
    pub theta: f64,
    #[arg(long, value_parser = angle, default_value = "0")]
    pub phi: f64,
    #[arg(long = "F", default_value = "I")]
    pub flip: Flip,
    #[arg(long, default_value_t = 5000)]
    pub tmax: u64,
    #[arg(long, value_enum, default_value_t)]
    pub order: OrderArg,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("errors").required(true).args(["q", "hz"])))]
pub struct KeyrateArgs {
    #[arg(long)]
    pub c: f64,
    #[arg(long = "P")]
    pub positions: Option<usize>,
    /// Symmetric error rate in both bases; needs `--P`.
    #[arg(long, requires = "positions")]
    pub q: Option<f64>,
    /// Conditional entropy in the computational basis, in bits.
    #[arg(long, requires = "hw")]
    pub hz: Option<f64>,
    #[arg(long, requires = "hz")]
    pub hw: Option<f64>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["c", "er"])))]
pub struct NoiseArgs {
    #[arg(long = "P")]
    pub positions: usize,
    #[arg(long)]
    pub c: Option<f64>,
    /// Error weight of the uniform Pauli channel.
    #[arg(long)]
    pub er: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "P", value_delimiter = ',', required = true)]
    pub positions: Vec<usize>,
    #[arg(long = "F", value_delimiter = ',', default_value = "I,X,Y")]
    pub flips: Vec<Flip>,
    /// Angles `kπ/N` for `k = 0..N`.
    #[arg(long, conflicts_with_all = ["theta", "phi"])]
    pub grid: Option<u32>,
    #[arg(long, value_delimiter = ',', value_parser = angle, requires = "phi")]
    pub theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = angle, requires = "theta")]
    pub phi: Vec<f64>,
    #[arg(long, default_value_t = 5000)]
    pub tmax: u64,
    #[arg(long, value_enum, default_value_t)]
    pub order: OrderArg,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON-lines file of finished cells; an interrupted sweep resumes from it.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Suppress progress on standard error.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub target: Target,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

/// What a subcommand produced, before rendering.
enum Output {
    /// One-line summary and its JSON form.
    Scalar { text: String, json: serde_json::Value },
    Table { name: &'static str, csv: Vec<u8>, json: String },
}

fn check_jobs(jobs: Option<usize>) -> Result<()> {
    if jobs == Some(0) {
        return Err(invalid("--jobs must be at least 1"));
    }
    Ok(())
}

fn check_odd(positions: usize) -> Result<()> {
    if positions == 0 {
        return Err(invalid("--P must be at least 1"));
    }
    if positions % 2 == 0 {
        return Err(Error::EvenPositions(positions));
    }
    Ok(())
}

fn check_unit(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(invalid(format!("--{name} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

fn json_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn walk(a: &WalkArgs) -> Result<Output> {
    if a.positions == 0 {
        return Err(invalid("--P must be at least 1"));
    }
    let (x, s) = a.init;
    let params = WalkParams::new(a.positions, a.theta, a.phi, a.t)?
        .with_flip(a.flip)
        .with_order(a.order.into());
    let start = StateVector::basis(a.positions, x, s)?;
    let state = evolve(&start, &params)?;
    let probs = born_distribution(&state);

    #[derive(Serialize)]
    struct Entry {
        x: usize,
        s: CoinState,
        re: f64,
        im: f64,
        p: f64,
    }
    let entries: Vec<Entry> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let (x, s) = split_index(i);
            let a = state.amplitudes()[i];
            Entry {
                x,
                s,
                re: a.re,
                im: a.im,
                p,
            }
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "s", "re", "im", "p"])?;
    for e in &entries {
        w.write_record([
            e.x.to_string(),
            e.s.to_string(),
            format!("{:.12}", e.re),
            format!("{:.12}", e.im),
            format!("{:.12}", e.p),
        ])?;
    }
    let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(Output::Table {
        name: "walk",
        csv,
        json: json_string(&serde_json::json!({ "walk": params, "state": entries }))?,
    })
}

fn cvalue(a: &CvalueArgs) -> Result<Output> {
    check_odd(a.positions)?;
    if a.tmax == 0 {
        return Err(invalid("--tmax must be at least 1"));
    }
    let params = WalkParams::new(a.positions, a.theta, a.phi, 0)?
        .with_flip(a.flip)
        .with_order(a.order.into());
    let report = compute_c(&params, a.tmax)?;
    let q = max_tolerated_qber(report.c, a.positions)?;
    Ok(Output::Scalar {
        text: format!("c={:.6} t={} Q_max={:.6}", report.c, report.t_star, q),
        json: serde_json::json!({ "c": report.c, "t": report.t_star, "Q_max": q }),
    })
}

fn keyrate(a: &KeyrateArgs) -> Result<Output> {
    if !(a.c > 0.0 && a.c <= 1.0) {
        return Err(invalid(format!("--c must lie in (0, 1], got {}", a.c)));
    }
    let (h_z, h_w) = match (a.q, a.positions, a.hz, a.hw) {
        (Some(q), Some(p), _, _) => {
            check_unit("q", q)?;
            if p == 0 {
                return Err(invalid("--P must be at least 1"));
            }
            let r = key_rate_report(a.c, p, q)?;
            (r.h_z, r.h_w)
        }
        (None, _, Some(hz), Some(hw)) => {
            if hz < 0.0 || hw < 0.0 {
                return Err(invalid("entropies must be non-negative"));
            }
            (hz, hw)
        }
        _ => return Err(invalid("give --q with --P, or --hz with --hw")),
    };
    let rate = key_rate(a.c, h_z, h_w)?;
    Ok(Output::Scalar {
        text: format!("r={rate:.6}"),
        json: serde_json::json!({ "c": a.c, "H_Z": h_z, "H_W": h_w, "rate": rate }),
    })
}

fn noise(a: &NoiseArgs) -> Result<Output> {
    if a.positions == 0 {
        return Err(invalid("--P must be at least 1"));
    }
    if let Some(c) = a.c {
        if !(c > 0.0 && c <= 1.0) {
            return Err(invalid(format!("--c must lie in (0, 1], got {c}")));
        }
        let q = max_tolerated_qber(c, a.positions)?;
        return Ok(Output::Scalar {
            text: format!("{q:.6}"),
            json: serde_json::json!({ "c": c, "P": a.positions, "Q_max": q }),
        });
    }
    let er = a.er.expect("clap enforces one of --c / --er");
    check_unit("er", er)?;
    let d = depolarizing_closed_form(er, a.positions)?;
    let h = symmetric_error_entropy(d.qber, 2 * a.positions);
    Ok(Output::Scalar {
        text: format!("lambda={:.6} Q={:.6}", d.lambda, d.qber),
        json: serde_json::json!({ "E_r": er, "P": a.positions, "lambda": d.lambda, "Q": d.qber, "H": h }),
    })
}

fn sweep(a: &SweepArgs) -> Result<Output> {
    check_jobs(a.jobs)?;
    for &p in &a.positions {
        check_odd(p)?;
    }
    if a.tmax == 0 {
        return Err(invalid("--tmax must be at least 1"));
    }
    let (thetas, phis) = if a.theta.is_empty() {
        let n = a.grid.unwrap_or(10);
        if n == 0 {
            return Err(invalid("--grid must be at least 1"));
        }
        (pi_fractions(n), pi_fractions(n))
    } else {
        (a.theta.clone(), a.phi.clone())
    };
    let mut grid = SweepGrid::new(a.positions.clone(), thetas, phis, a.flips.clone(), a.tmax)?;
    grid.order = a.order.into();
    let options = SweepOptions {
        jobs: a.jobs,
        progress: !a.quiet,
        checkpoint: a.checkpoint.clone(),
    };
    let rows = run_sweep(&grid, &options)?;
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv)?;
    Ok(Output::Table {
        name: "sweep",
        csv,
        json: json_string(&SweepDocument::new(&grid, &rows))?,
    })
}

fn protocol(a: &ProtocolArgs, seed: Option<u64>, err: &mut dyn Write) -> Result<Output> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| invalid(format!("cannot read {}: {e}", a.config.display())))?;
    let mut config: ProtocolConfig = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("bad config {}: {e}", a.config.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate()?;
    for w in config.warnings() {
        writeln!(err, "warning: {w}")?;
    }
    let transcript = run_protocol(&config)?;
    let mut csv = Vec::new();
    transcript.write_summary_csv(&mut csv)?;
    Ok(Output::Table {
        name: "protocol",
        csv,
        json: transcript.to_json()?,
    })
}

fn reproduce(a: &ReproduceArgs, err: &mut dyn Write) -> Result<(Output, bool)> {
    check_jobs(a.jobs)?;
    let manifest = Manifest::embedded()?;
    let options = SweepOptions {
        jobs: a.jobs,
        progress: !a.quiet,
        checkpoint: None,
    };
    let report = run_target(a.target, &manifest, &options)?;
    for check in &report.checks {
        if !check.passed {
            writeln!(err, "{}", check.describe())?;
        }
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    let passed = report.passed();
    Ok((
        Output::Table {
            name: a.target.name(),
            csv,
            json: json_string(&report)?,
        },
        passed,
    ))
}

fn destination(out: &Option<PathBuf>, table: Option<(&str, &str)>) -> Option<PathBuf> {
    if let Some(path) = out {
        return Some(path.clone());
    }
    let (name, ext) = table?;
    let dir = std::env::var_os(OUT_DIR_ENV)?;
    Some(Path::new(&dir).join(format!("{name}.{ext}")))
}

fn emit(cli: &Cli, output: Output, stdout: &mut dyn Write) -> Result<()> {
    let (bytes, table) = match output {
        Output::Scalar { text, json } => match cli.format {
            Some(Format::Json) => (format!("{}\n", serde_json::to_string_pretty(&json)?).into_bytes(), None),
            _ => (format!("{text}\n").into_bytes(), None),
        },
        Output::Table { name, csv, json } => match cli.format {
            Some(Format::Json) => (format!("{json}\n").into_bytes(), Some((name, "json"))),
            _ => (csv, Some((name, "csv"))),
        },
    };
    match destination(&cli.out, table) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(&path)?);
            w.write_all(&bytes)?;
            w.flush()?;
        }
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (output, passed) = match &cli.command {
        Command::Walk(a) => (walk(a)?, true),
        Command::Cvalue(a) => (cvalue(a)?, true),
        Command::Keyrate(a) => (keyrate(a)?, true),
        Command::Noise(a) => (noise(a)?, true),
        Command::Sweep(a) => (sweep(a)?, true),
        Command::Protocol(a) => (protocol(a, cli.seed, stderr)?, true),
        Command::Reproduce(a) => reproduce(a, stderr)?,
    };
    emit(cli, output, stdout)?;
    Ok(if passed { EXIT_OK } else { EXIT_MISMATCH })
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn dispatch_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let rendered = e.render().to_string();
                    let body = rendered.split("Usage:").next().unwrap_or_default();
                    let line = body
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with("tip:"))
                        .collect::<Vec<_>>()
                        .join(" ");
                    let _ = writeln!(stderr, "{line}");
                    EXIT_VALIDATION
                }
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

/// [`dispatch_with`] on the process's standard streams.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = dispatch_with(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["qwqkd"];
        argv.extend_from_slice(args);
        let code = dispatch_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn noise_recovers_bb84() {
        let (code, out, _) = run(&["noise", "--c", "0.5", "--P", "1"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("0.110"), "{out}");
    }

    #[test]
    fn walk_at_zero_steps_is_one_hot() {
        let (code, out, _) = run(&["walk", "--P", "5", "--theta", "0.25pi", "--t", "0", "--init", "0,R"]);
        assert_eq!(code, 0);
        let probs: Vec<f64> = out
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(probs.len(), 10);
        assert_eq!(probs[0], 1.0);
        assert!(probs[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(&["cvalue", "--P", "4", "--theta", "0.4pi"]).0, 1);
        assert_eq!(run(&["cvalue", "--bogus"]).0, 1);
        assert_eq!(run(&["noise", "--P", "1"]).0, 1);
        assert_eq!(run(&["noise", "--P", "1", "--c", "1.5"]).0, 1);
        assert_eq!(run(&["--help"]).0, 0);
        let (code, _, err) = run(&["sweep", "--P", "3", "--grid", "2", "--theta", "0"]);
        assert_eq!(code, 1);
        assert_eq!(err.lines().count(), 1);
    }

    #[test]
    fn keyrate_noiseless_bb84_point() {
        let (code, out, _) = run(&["keyrate", "--c", "0.5", "--hz", "0", "--hw", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "r=1.000000");
    }
}
