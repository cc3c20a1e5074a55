//! `pwp` — command-line front end for the probabilistic weakest-precondition
//! calculus library.
//!
//! Subcommands cover the expectation transformer on program files (`wp run`),
//! search-program analysis (`grover prob|sweep|optimal|simulate`), and the
//! generating-function/kernel identity checks (`series check`).
//!
//! Exit status: `0` on success, `1` when a requested check fails, `2` on
//! usage errors, unreadable files, or parse errors.

mod fmt;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fmt::fmt_sig;
use pwp_core::{
    dirichlet_check, gf_pair, optimal_iterations, optimal_real, parse_expression, parse_program,
    recurrence_ab, series_coeffs, simulate_hits, success_prob_closed, success_prob_recurrence,
    sweep, theta, Env, Evaluator, GroverParams,
};

/// Probabilistic weakest-precondition calculus: expectation transformers,
/// quantum-search analysis, and series identity checks.
#[derive(Parser)]
#[command(name = "pwp", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weakest-precondition queries on program files
    #[command(subcommand)]
    Wp(WpCommand),
    /// Success probabilities and simulation for the bundled search program
    #[command(subcommand)]
    Grover(GroverCommand),
    /// Identity checks for the amplitude generating functions
    #[command(subcommand)]
    Series(SeriesCommand),
}

#[derive(Subcommand)]
enum WpCommand {
    /// Compute the expected value of a post-expression over a program's
    /// final distribution
    Run(WpRunArgs),
}

#[derive(Args)]
struct WpRunArgs {
    /// Program file to analyze
    file: PathBuf,

    /// Post-expression whose expectation is computed
    #[arg(long, value_name = "EXPR")]
    post: String,

    /// Bind a free variable before running; EXPR is evaluated with earlier
    /// bindings in scope, so later values may refer to earlier names
    #[arg(long = "bind", value_name = "NAME=EXPR")]
    bind: Vec<String>,
}

#[derive(Subcommand)]
enum GroverCommand {
    /// Print the success probability by recurrence and by closed form
    Prob {
        /// Search-space size
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Iteration count
        #[arg(long)]
        c: u64,
    },
    /// Tabulate success probability for iteration counts 0..=CMAX as CSV
    Sweep {
        /// Search-space size
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Largest iteration count
        #[arg(long)]
        cmax: u64,
        /// Write CSV here instead of stdout
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Largest allowed |P_recurrence - P_closed| per row
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Tabulate the optimal iteration count for sizes 1..=NMAX as CSV
    Optimal {
        /// Largest search-space size
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        nmax: u64,
        /// Write CSV here instead of stdout
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Estimate the success probability by seeded sampling of the program
    Simulate {
        /// Search-space size
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Iteration count
        #[arg(long)]
        c: u64,
        /// Marked argument
        #[arg(long, default_value_t = 0)]
        x0: u64,
        /// Number of sampled runs
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        /// Master seed; identical arguments and seed reproduce identical output
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum SeriesCommand {
    /// Verify generating-function coefficients and the kernel identity
    Check {
        /// Search-space size
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Largest index / iteration count checked
        #[arg(long)]
        cmax: u64,
    },
}

/// Failure before or during a command that is the caller's to fix:
/// bad flags, unreadable files, parse errors, unbound names.
struct UsageError(String);

impl UsageError {
    fn new(message: impl Into<String>) -> Self {
        UsageError(message.into())
    }
}

/// A check the user asked for ran to completion and did not hold.
const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(UsageError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8, UsageError> {
    match cli.command {
        Command::Wp(WpCommand::Run(args)) => wp_run(args),
        Command::Grover(cmd) => grover(cmd),
        Command::Series(cmd) => series(cmd),
    }
}

fn wp_run(args: WpRunArgs) -> Result<u8, UsageError> {
    let source = fs::read_to_string(&args.file)
        .map_err(|e| UsageError::new(format!("cannot read {}: {e}", args.file.display())))?;
    let program = parse_program(&source)
        .map_err(|e| UsageError::new(format!("{}: {e}", args.file.display())))?;
    let post = parse_expression(&args.post)
        .map_err(|e| UsageError::new(format!("post-expression: {e}")))?;

    let mut env = Env::new();
    for binding in &args.bind {
        let (name, expr_src) = binding.split_once('=').ok_or_else(|| {
            UsageError::new(format!("binding `{binding}` is not of the form NAME=EXPR"))
        })?;
        let expr = parse_expression(expr_src)
            .map_err(|e| UsageError::new(format!("binding `{name}`: {e}")))?;
        let value = Evaluator::new()
            .eval(&expr, &env)
            .map_err(|e| UsageError::new(format!("binding `{name}`: {e}")))?;
        env = env.bind(name.trim(), value);
    }

    let value = pwp_core::wp(&program, &post, &env)
        .map_err(|e| UsageError::new(format!("{}: {e}", args.file.display())))?;
    println!("{}", fmt_sig(value));
    Ok(0)
}

fn grover(cmd: GroverCommand) -> Result<u8, UsageError> {
    match cmd {
        GroverCommand::Prob { n, c } => {
            println!("P_recurrence = {}", fmt_sig(success_prob_recurrence(n, c)));
            println!("P_closed = {}", fmt_sig(success_prob_closed(n, c)));
            Ok(0)
        }
        GroverCommand::Sweep {
            n,
            cmax,
            out,
            tolerance,
        } => {
            let rows = sweep(n, cmax);
            let mut csv = String::from("C,P_recurrence,P_closed\n");
            let mut worst: Option<(u64, f64)> = None;
            for row in &rows {
                writeln!(
                    csv,
                    "{},{},{}",
                    row.c,
                    fmt_sig(row.p_recurrence),
                    fmt_sig(row.p_closed)
                )
                .expect("writing to a String cannot fail");
                let gap = (row.p_recurrence - row.p_closed).abs();
                if gap > tolerance && worst.is_none_or(|(_, w)| gap > w) {
                    worst = Some((row.c, gap));
                }
            }
            emit(&out, &csv)?;
            if let Some((c, gap)) = worst {
                eprintln!(
                    "check failed: recurrence and closed form differ by {} at C = {c} \
                     (tolerance {})",
                    fmt_sig(gap),
                    fmt_sig(tolerance)
                );
                return Ok(CHECK_FAILED);
            }
            Ok(0)
        }
        GroverCommand::Optimal { nmax, out } => {
            let mut csv = String::from("N,H_real,C_star,P_at_C_star\n");
            for n in 1..=nmax {
                let c_star = optimal_iterations(n);
                writeln!(
                    csv,
                    "{n},{},{c_star},{}",
                    fmt_sig(optimal_real(n)),
                    fmt_sig(success_prob_closed(n, c_star))
                )
                .expect("writing to a String cannot fail");
            }
            emit(&out, &csv)?;
            Ok(0)
        }
        GroverCommand::Simulate {
            n,
            c,
            x0,
            runs,
            seed,
        } => {
            let params = GroverParams::new(n, x0, c).map_err(|e| UsageError::new(e.to_string()))?;
            let hits =
                simulate_hits(&params, runs, seed).map_err(|e| UsageError::new(e.to_string()))?;
            println!("hits = {hits}");
            println!("runs = {runs}");
            println!("frequency = {}", fmt_sig(hits as f64 / runs as f64));
            Ok(0)
        }
    }
}

fn series(cmd: SeriesCommand) -> Result<u8, UsageError> {
    let SeriesCommand::Check { n, cmax } = cmd;
    let mut all_ok = true;
    let (gf_a, gf_b) = gf_pair(n);
    let count = cmax as usize + 1;
    let coeffs_a = series_coeffs(&gf_a, count);
    let coeffs_b = series_coeffs(&gf_b, count);

    let mut first_bad_a = None;
    let mut first_bad_b = None;
    for i in 0..count {
        let (a, b) = recurrence_ab(n, i as u64);
        if coeffs_a[i] != a && first_bad_a.is_none() {
            first_bad_a = Some(i);
        }
        if coeffs_b[i] != b && first_bad_b.is_none() {
            first_bad_b = Some(i);
        }
    }
    report_line(
        "coefficients A",
        first_bad_a.is_none(),
        &mut all_ok,
        || match first_bad_a {
            None => format!("exact match for i <= {cmax}"),
            Some(i) => format!("first mismatch at i = {i}"),
        },
    );
    report_line(
        "coefficients B",
        first_bad_b.is_none(),
        &mut all_ok,
        || match first_bad_b {
            None => format!("exact match for i <= {cmax}"),
            Some(i) => format!("first mismatch at i = {i}"),
        },
    );

    let angle = theta(n);
    let mut max_gap = 0.0_f64;
    let mut first_bad_kernel = None;
    for c in 0..=cmax {
        let (lhs, rhs) = dirichlet_check(c, angle).map_err(|e| UsageError::new(e.to_string()))?;
        let gap = (lhs - rhs).abs();
        max_gap = max_gap.max(gap);
        if gap > 1e-9 && first_bad_kernel.is_none() {
            first_bad_kernel = Some(c);
        }
    }
    report_line(
        "kernel",
        first_bad_kernel.is_none(),
        &mut all_ok,
        || match first_bad_kernel {
            None => format!("max |lhs - rhs| = {} for C <= {cmax}", fmt_sig(max_gap)),
            Some(c) => format!("identity violated at C = {c}"),
        },
    );

    let mut max_prob_gap = 0.0_f64;
    let mut first_bad_prob = None;
    for c in 0..=cmax {
        let (lhs, _) = dirichlet_check(c, angle).map_err(|e| UsageError::new(e.to_string()))?;
        let prob = lhs * lhs / n as f64;
        let gap = (prob - success_prob_closed(n, c)).abs();
        max_prob_gap = max_prob_gap.max(gap);
        if gap > 1e-9 && first_bad_prob.is_none() {
            first_bad_prob = Some(c);
        }
    }
    report_line(
        "closed form",
        first_bad_prob.is_none(),
        &mut all_ok,
        || match first_bad_prob {
            None => format!(
                "max |P_kernel - P_closed| = {} for C <= {cmax}",
                fmt_sig(max_prob_gap)
            ),
            Some(c) => format!("probabilities diverge at C = {c}"),
        },
    );

    Ok(if all_ok { 0 } else { CHECK_FAILED })
}

fn report_line(name: &str, ok: bool, all_ok: &mut bool, detail: impl FnOnce() -> String) {
    *all_ok &= ok;
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("{name}: {verdict} ({})", detail());
}

/// Write `content` to `out` if given, otherwise to stdout. Line endings are
/// always LF and the text is UTF-8.
fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), UsageError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| UsageError::new(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
