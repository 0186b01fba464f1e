//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 usage or domain error, 3 the scan
//! confirmed a counterexample, 4 the scan stopped at its chain cap.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::analyze;
use crate::chain::Chain;
use crate::error::Error;
use crate::exceedance::{ExceedanceSpec, UnitInterval};
use crate::numfmt;
use crate::par::Execution;
use crate::plot::{self, Figure};
use crate::scan::DEFAULT_TOLERANCE;
use crate::search::{conjecture_scan, resume_scan, ScanConfig, SearchReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COUNTEREXAMPLE: i32 = 3;
pub const EXIT_TRUNCATED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "binexceed", version, about = "Binomial exceedance functions and their compositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a chain, its slope and curvature sign at one point.
    Eval {
        /// JSON list of [k, m] pairs, outermost first.
        #[arg(long)]
        chain: String,
        #[arg(long)]
        p: f64,
    },
    /// Locate interior inflection points.
    Inflect(AnalyzeArgs),
    /// Locate the interior fixed point.
    Fixed(AnalyzeArgs),
    /// Solve p1 = F_{k2,m2}(p2), p2 = F_{k1,m1}(p1).
    Coins {
        #[arg(long, num_args = 2, value_names = ["K1", "M1"])]
        c1: Vec<u32>,
        #[arg(long, num_args = 2, value_names = ["K2", "M2"])]
        c2: Vec<u32>,
    },
    /// Emit curve data as CSV.
    Plot(PlotArgs),
    /// Exhaustive inflection count over chains of n >= 3 stages.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    chain: String,
    /// Scan grid for chains of three or more stages.
    #[arg(long, default_value_t = 100_000)]
    grid: usize,
    /// Bisection bracket width.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_enum, conflicts_with = "chain", required_unless_present = "chain")]
    figure: Option<Figure>,
    /// Custom chain; repeat for several series.
    #[arg(long)]
    chain: Vec<String>,
    #[arg(long, default_value_t = plot::DEFAULT_SAMPLES)]
    samples: usize,
    /// CSV destination (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render an SVG from the same rows.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 6)]
    k_max: u32,
    #[arg(long, default_value_t = 100_000)]
    grid: usize,
    #[arg(long, env = "BINEXCEED_JOBS")]
    jobs: Option<usize>,
    /// Report destination (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stop after this many chains and mark the report truncated.
    #[arg(long)]
    max_chains: Option<u64>,
    /// Continue a truncated report; `--n/--k-max/--grid` come from it.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn parse_chain(s: &str) -> Result<Chain, Failure> {
    s.parse::<Chain>().map_err(|e| Failure::Usage(format!("--chain {s:?}: {e}")))
}

fn pair_spec(v: &[u32]) -> Result<ExceedanceSpec, Failure> {
    Ok(ExceedanceSpec::new(v[0], v[1])?)
}

#[derive(Serialize)]
struct EvalOutput {
    chain: Chain,
    #[serde(serialize_with = "numfmt::ser_f64")]
    p: f64,
    #[serde(serialize_with = "numfmt::ser_f64")]
    value: f64,
    #[serde(serialize_with = "numfmt::ser_f64")]
    deriv1: f64,
    #[serde(serialize_with = "numfmt::ser_opt_f64")]
    curvature_stat: Option<f64>,
    curvature_sign: Option<i8>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum CoinsOutput {
    Found {
        #[serde(serialize_with = "numfmt::ser_f64")]
        p1: f64,
        #[serde(serialize_with = "numfmt::ser_f64")]
        p2: f64,
    },
    Missing {
        solution: Option<()>,
    },
}

fn print_json<T: Serialize, W: Write>(out: &mut W, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn open_out(path: &PathBuf) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn cmd_eval<W: Write>(chain: &str, p: f64, out: &mut W) -> Result<i32, Failure> {
    let chain = parse_chain(chain)?;
    let p = UnitInterval::new(p)?;
    let e = chain.evaluate(p);
    let sign = e.curvature_sign_stat.map(|s| match s.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Greater) => 1,
        Some(std::cmp::Ordering::Less) => -1,
        _ => 0,
    });
    print_json(
        out,
        &EvalOutput {
            chain,
            p: p.get(),
            value: e.value.get(),
            deriv1: e.deriv1,
            curvature_stat: e.curvature_sign_stat,
            curvature_sign: sign,
        },
    )?;
    Ok(EXIT_OK)
}

fn cmd_analyze<W: Write>(args: &AnalyzeArgs, out: &mut W) -> Result<i32, Failure> {
    let chain = parse_chain(&args.chain)?;
    if !(args.tolerance > 0.0) || args.grid < 2 {
        return Err(Failure::Usage("--tolerance must be positive and --grid at least 2".into()));
    }
    print_json(out, &analyze(&chain, args.grid, args.tolerance)?)?;
    Ok(EXIT_OK)
}

fn cmd_coins<W: Write>(c1: &[u32], c2: &[u32], out: &mut W) -> Result<i32, Failure> {
    let result = match crate::analysis::coin_pair_solve(pair_spec(c1)?, pair_spec(c2)?) {
        Some((p1, p2)) => CoinsOutput::Found { p1: p1.get(), p2: p2.get() },
        None => CoinsOutput::Missing { solution: None },
    };
    print_json(out, &result)?;
    Ok(EXIT_OK)
}

fn cmd_plot<W: Write>(args: &PlotArgs, out: &mut W) -> Result<i32, Failure> {
    if args.samples < 2 {
        return Err(Failure::Usage("--samples must be at least 2".into()));
    }
    let series = match args.figure {
        Some(f) => plot::figure_series(f, args.samples),
        None => args
            .chain
            .iter()
            .map(|c| parse_chain(c).map(|c| plot::chain_series(&c, args.samples, true)))
            .collect::<Result<Vec<_>, _>>()?,
    };
    match &args.out {
        Some(path) => {
            let mut w = open_out(path)?;
            plot::write_csv(&series, &mut w)?;
            w.flush()?;
        }
        None => plot::write_csv(&series, &mut *out)?,
    }
    if let Some(path) = &args.svg {
        let mut w = open_out(path)?;
        plot::write_svg(&series, &mut w)?;
        w.flush()?;
    }
    Ok(EXIT_OK)
}

fn run_scan(args: &ScanArgs, exec: Execution) -> Result<SearchReport, Failure> {
    match &args.resume {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let previous: SearchReport = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: not a scan report: {e}", path.display())))?;
            Ok(resume_scan(&previous, args.max_chains, exec)?)
        }
        None => {
            let cfg = ScanConfig {
                max_chains: args.max_chains,
                exec,
                ..ScanConfig::new(args.n, args.k_max, args.grid)
            };
            Ok(conjecture_scan(&cfg)?)
        }
    }
}

fn cmd_scan<W: Write, E: Write>(args: &ScanArgs, out: &mut W, err: &mut E) -> Result<i32, Failure> {
    let jobs = args.jobs.unwrap_or(0);
    let exec = if jobs == 1 { Execution::Sequential } else { Execution::Parallel };
    #[cfg(feature = "parallel")]
    let report = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if jobs > 0 {
            builder = builder.num_threads(jobs);
        }
        let pool = builder.build().map_err(|e| Failure::Io(e.to_string()))?;
        pool.install(|| run_scan(args, exec))?
    };
    #[cfg(not(feature = "parallel"))]
    let report = run_scan(args, exec)?;

    let out_path = args.out.clone().or_else(|| args.resume.clone());
    match &out_path {
        Some(path) => {
            let mut w = open_out(path)?;
            writeln!(w, "{}", report.to_json())?;
            w.flush()?;
        }
        None => writeln!(out, "{}", report.to_json())?,
    }
    let summary = format!(
        "scanned {}/{} chains (n={}, k_max={}, grid={}): {} violations, {} rejected candidates, max count {}{}",
        report.chains_scanned,
        report.total_chains,
        report.n,
        report.k_max,
        report.grid_size,
        report.violations.len(),
        report.rejected_candidates,
        report.max_count_observed,
        report.cursor.map(|c| format!(", truncated at cursor {c}")).unwrap_or_default(),
    );
    if out_path.is_some() {
        writeln!(out, "{summary}")?;
    } else {
        writeln!(err, "{summary}")?;
    }
    Ok(if !report.violations.is_empty() {
        EXIT_COUNTEREXAMPLE
    } else if report.truncated {
        EXIT_TRUNCATED
    } else {
        EXIT_OK
    })
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Eval { chain, p } => cmd_eval(chain, *p, out),
        Command::Inflect(a) | Command::Fixed(a) => cmd_analyze(a, out),
        Command::Coins { c1, c2 } => cmd_coins(c1, c2, out),
        Command::Plot(a) => cmd_plot(a, out),
        Command::Scan(a) => cmd_scan(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Io(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_IO
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["binexceed"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn json(s: &str) -> serde_json::Value {
        serde_json::from_str(s.trim()).unwrap()
    }

    #[test]
    fn eval_identity() {
        let (code, out, _) = call(&["eval", "--chain", "[[1,1]]", "--p", "0.3"]);
        assert_eq!(code, 0);
        let v = json(&out);
        assert_eq!(v["value"].as_f64(), Some(0.3));
        assert_eq!(v["deriv1"].as_f64(), Some(1.0));
        assert_eq!(v["curvature_sign"], 0);
    }

    #[test]
    fn eval_at_endpoint_has_no_curvature() {
        let (code, out, _) = call(&["eval", "--chain", "[[3,2]]", "--p", "1"]);
        assert_eq!(code, 0);
        let v = json(&out);
        assert_eq!(v["value"].as_f64(), Some(1.0));
        assert!(v["curvature_sign"].is_null());
    }

    #[test]
    fn bad_input_exits_2() {
        assert_eq!(call(&["eval", "--chain", "[[3,4]]", "--p", "0.3"]).0, 2);
        assert_eq!(call(&["eval", "--chain", "[[3,2]]", "--p", "1.3"]).0, 2);
        assert_eq!(call(&["eval", "--chain", "not json", "--p", "0.3"]).0, 2);
        assert_eq!(call(&["eval", "--p", "0.3"]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["coins", "--c1", "3", "0", "--c2", "3", "2"]).0, 2);
        assert_eq!(call(&["scan", "--n", "2", "--k-max", "2", "--grid", "1000"]).0, 2);
    }

    #[test]
    fn coins_outputs() {
        let (code, out, _) = call(&["coins", "--c1", "3", "2", "--c2", "3", "2"]);
        assert_eq!(code, 0);
        let v = json(&out);
        assert!((v["p1"].as_f64().unwrap() - 0.5).abs() < 1e-15);
        assert!((v["p2"].as_f64().unwrap() - 0.5).abs() < 1e-15);
        let (_, out, _) = call(&["coins", "--c1", "2", "1", "--c2", "3", "1"]);
        assert_eq!(out.trim(), r#"{"solution":null}"#);
    }

    #[test]
    fn fixed_reports() {
        let (_, out, _) = call(&["fixed", "--chain", "[[2,1]]"]);
        let v = json(&out);
        assert!(v["fixed_point"].is_null());
        assert_eq!(v["guarantee"], "at_most_one");
    }

    #[test]
    fn unwritable_plot_path_exits_1() {
        let (code, _, err) = call(&["plot", "--figure", "fig1", "--out", "/nonexistent/dir/x.csv"]);
        assert_eq!(code, 1);
        assert!(err.contains("error"));
    }

    #[test]
    fn plot_needs_a_selection() {
        assert_eq!(call(&["plot"]).0, 2);
        assert_eq!(call(&["plot", "--figure", "fig1", "--chain", "[[3,2]]"]).0, 2);
    }
}
