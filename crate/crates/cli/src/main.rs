//! Batch front door: single-surface checks, box counting, counterexample
//! scans, density experiments, and the rational point search.
//!
//! Exit codes are a contract. check: 0 decided, 2 undecided, 3 not
//! everywhere locally soluble. oracle: 0 point found, 1 none. Usage and
//! validation problems exit 64 everywhere. Output files are byte
//! reproducible for a fixed configuration and version.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dp2_core::{
    count_grid, decade_bounds, find_rational_point, fit_exponents, has_bm_obstruction_with,
    CoefficientTriple, CountConfig, CountError, CountProgress, CountReport, FrobenianSpec,
    ObstructionDecision, ObstructionStatus, PipelineConfig, Provenance, ScanKind, ScanRow,
    Verdict,
};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

const EX_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "dp2",
    version,
    about = "Brauer-Manin obstructions from the quaternion class on diagonal degree 2 del Pezzo surfaces"
)]
struct Cli {
    /// Seed for randomized tooling. Accepted everywhere for reproducible
    /// scripts; the shipped subcommands are fully deterministic.
    #[arg(long, global = true, default_value_t = 0x00d1ce)]
    #[allow(dead_code)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the obstruction status of one surface
    Check(CheckArgs),
    /// Count obstruction buckets over the coefficient box |a_i| <= T
    Count(CountArgs),
    /// Stream decision records for obstructed triples to JSONL
    Scan(ScanArgs),
    /// Empirical prime densities and partial-sum exponents
    Frobenian(FrobenianArgs),
    /// Search for a rational point up to a height
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CheckArgs {
    #[arg(allow_negative_numbers = true)]
    a0: i64,
    #[arg(allow_negative_numbers = true)]
    a1: i64,
    #[arg(allow_negative_numbers = true)]
    a2: i64,
    /// Print the full JSON decision record instead of the summary
    #[arg(long)]
    json: bool,
    /// Height cap for the quadric point search
    #[arg(long)]
    height: Option<u32>,
    /// Node budget for p-adic refinement; caps the working precision
    #[arg(long = "precision-cap")]
    precision_cap: Option<u64>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    tmax: u64,
    /// Comma-separated report heights, ending at --tmax
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<u64>>,
    /// Worker threads; 0 lets the pool decide. The output does not.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Directory for counts.csv and obstructed.jsonl
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Checkpoint file; reruns resume from it when the config matches
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Stop after this many slabs (recovery drills)
    #[arg(long, hide = true)]
    stop_after_slabs: Option<u64>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    tmax: u64,
    #[arg(long, value_enum)]
    status: ScanStatus,
    /// JSONL file to stream matching decision records to
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy)]
enum ScanStatus {
    Obstructed,
}

#[derive(Args)]
struct FrobenianArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long, allow_negative_numbers = true)]
    x: i128,
    /// Largest prime bound (alpha, beta) or sum bound (lambda-sum)
    #[arg(long)]
    limit: u64,
    /// Optional CSV file; the table always goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy)]
enum Which {
    Alpha,
    Beta,
    LambdaSum,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(allow_negative_numbers = true)]
    a0: i64,
    #[arg(allow_negative_numbers = true)]
    a1: i64,
    #[arg(allow_negative_numbers = true)]
    a2: i64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    height: u32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EX_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Check(args) => run_check(&args),
        Command::Count(args) => run_count(&args),
        Command::Scan(args) => run_scan(&args),
        Command::Frobenian(args) => run_frobenian(&args),
        Command::Oracle(args) => run_oracle(&args),
    };
    ExitCode::from(code)
}

fn usage(msg: &str) -> u8 {
    eprintln!("error: {msg}");
    EX_USAGE
}

fn triple(a0: i64, a1: i64, a2: i64) -> Result<CoefficientTriple, u8> {
    CoefficientTriple::new([a0, a1, a2]).map_err(|e| usage(&e.to_string()))
}

fn status_name(s: ObstructionStatus) -> &'static str {
    match s {
        ObstructionStatus::NotEverywhereLocallySoluble => "NotEverywhereLocallySoluble",
        ObstructionStatus::NoObstructionFromA => "NoObstructionFromA",
        ObstructionStatus::ObstructionFromA => "ObstructionFromA",
        ObstructionStatus::UndecidedByA => "UndecidedByA",
    }
}

fn print_summary(a: &CoefficientTriple, d: &ObstructionDecision) {
    let [a0, a1, a2] = a.coefficients();
    println!("a = ({a0}, {a1}, {a2}), theta = {}", a.theta());
    if d.reason.is_empty() {
        println!("status: {}", status_name(d.status));
    } else {
        println!("status: {} ({})", status_name(d.status), d.reason);
    }
    for c in &d.per_place {
        let verdict = match c.verdict {
            Verdict::Constant(v) => format!("constant {v}"),
            Verdict::Surjective => "surjective".to_string(),
            Verdict::Undecided => "undecided".to_string(),
        };
        let how = match &c.provenance {
            Provenance::ClosedForm(rule) => format!("closed form, {rule}"),
            Provenance::Sampling { precision, .. } => format!("sampling at precision {precision}"),
        };
        println!("  at {}: {verdict} ({how})", c.place);
    }
    if let Some(total) = d.total {
        println!("invariant sum: {total}");
    }
}

fn run_check(args: &CheckArgs) -> u8 {
    let a = match triple(args.a0, args.a1, args.a2) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let mut cfg = PipelineConfig::default();
    if let Some(h) = args.height {
        cfg.quadric_height_cap = h;
    }
    if let Some(k) = args.precision_cap {
        cfg.tree_node_budget = k;
    }
    let d = has_bm_obstruction_with(&a, &cfg);
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&d.to_json(&a)).expect("decision serializes")
        );
    } else {
        print_summary(&a, &d);
    }
    match d.status {
        ObstructionStatus::NotEverywhereLocallySoluble => 3,
        ObstructionStatus::UndecidedByA => 2,
        ObstructionStatus::ObstructionFromA | ObstructionStatus::NoObstructionFromA => 0,
    }
}

fn count_failure(e: &CountError) -> u8 {
    match e {
        CountError::BadGrid | CountError::CheckpointMismatch(_) => usage(&e.to_string()),
        _ => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run_count(args: &CountArgs) -> u8 {
    let grid = args.grid.clone().unwrap_or_else(|| vec![args.tmax]);
    if grid.last() != Some(&args.tmax) {
        return usage("--grid must end at --tmax");
    }
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return 1;
    }
    let mut cfg = CountConfig {
        threads: args.threads,
        checkpoint_path: args.checkpoint.clone(),
        jsonl_path: Some(args.out.join("obstructed.jsonl")),
        stop_after_slabs: args.stop_after_slabs,
        ..CountConfig::default()
    };
    if args.stop_after_slabs.is_some() {
        // land the pause exactly; chunking is not part of the config hash
        cfg.checkpoint_every_slabs = 1;
    }
    match count_grid(&grid, &cfg) {
        Ok(CountProgress::Paused { completed_slabs }) => {
            println!("paused after {completed_slabs} slabs; rerun to resume");
            0
        }
        Ok(CountProgress::Complete(reports)) => {
            let csv = render_count_csv(&reports);
            print!("{csv}");
            let path = args.out.join("counts.csv");
            if let Err(e) = fs::write(&path, csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
            0
        }
        Err(e) => count_failure(&e),
    }
}

fn render_count_csv(reports: &[CountReport]) -> String {
    let mut csv = String::from(CountReport::csv_header());
    csv.push('\n');
    for r in reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    // the fit is advisory; it needs four heights with obstructions seen
    let pairs: Vec<(u64, u64)> = reports
        .iter()
        .map(|r| (r.t, r.n_obstructed_minus_square + r.n_obstructed_nonsquare))
        .filter(|&(_, n)| n > 0)
        .collect();
    if let Ok(fit) = fit_exponents(&pairs) {
        csv.push_str(&format!(
            "# fit: log N ~ {:.4} + {:.4} log T + {:.4} log log T\n",
            fit.intercept, fit.log_t_exponent, fit.log_log_t_exponent
        ));
    }
    csv
}

fn run_scan(args: &ScanArgs) -> u8 {
    let ScanStatus::Obstructed = args.status;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            if let Err(e) = fs::create_dir_all(parent) {
                eprintln!("error: cannot create {}: {e}", parent.display());
                return 1;
            }
        }
    }
    let cfg = CountConfig {
        jsonl_path: Some(args.out.clone()),
        ..CountConfig::default()
    };
    match count_grid(&[args.tmax], &cfg) {
        Ok(CountProgress::Complete(reports)) => {
            let r = reports.last().expect("one report per grid height");
            println!(
                "obstructed triples up to {}: {} (streamed to {})",
                args.tmax,
                r.n_obstructed_minus_square + r.n_obstructed_nonsquare,
                args.out.display()
            );
            0
        }
        Ok(CountProgress::Paused { .. }) => unreachable!("scan never pauses"),
        Err(e) => count_failure(&e),
    }
}

fn run_frobenian(args: &FrobenianArgs) -> u8 {
    let kind = match args.which {
        Which::Alpha => ScanKind::Alpha,
        Which::Beta => ScanKind::Beta,
        Which::LambdaSum => ScanKind::LambdaSum,
    };
    let spec = match FrobenianSpec::new(kind, args.x) {
        Ok(s) => s,
        Err(e) => return usage(&e.to_string()),
    };
    if args.limit < 10_000 {
        return usage("--limit must be at least 10^4");
    }
    let bounds = decade_bounds(10_000, args.limit);
    let rows = match spec.scan(&bounds) {
        Ok(rows) => rows,
        Err(e) => return usage(&e.to_string()),
    };
    let mut csv = String::from(ScanRow::csv_header());
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    print!("{csv}");
    if let Some(path) = &args.out {
        if let Err(e) = fs::write(path, csv) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 1;
        }
    }
    0
}

fn run_oracle(args: &OracleArgs) -> u8 {
    let a = match triple(args.a0, args.a1, args.a2) {
        Ok(a) => a,
        Err(code) => return code,
    };
    match find_rational_point(&a, args.height) {
        Some([x0, x1, x2, w]) => {
            println!("({x0},{x1},{x2},{w})");
            0
        }
        None => {
            println!("none");
            1
        }
    }
}
