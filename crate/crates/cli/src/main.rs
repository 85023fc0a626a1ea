//! Command-line front end: build and verify basis families and striation
//! tables, run the retrodiction protocol analytically or trial by trial,
//! and drive the combinatorial striation search.
//!
//! Exit codes: 0 when the requested check passes, 1 when a verification
//! verdict is a failure, 2 on usage or configuration errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use meanking::designs::{
    build_striations, load_striations, render_squares, render_strings, save_striations,
    verify_equivalence, verify_mols, verify_strings, StriationTable,
};
use meanking::king::{composite_build, simulate, verify_solution};
use meanking::mub::{build_mub, load_mub, save_mub, verify_mub, MubFamily, SUPPORTED_DIMS};
use meanking::report::{ProtocolReport, REPORT_SCHEMA};
use meanking::search::{max_striations, max_striations_all_squares, SearchResult, DEFAULT_BUDGET};
use meanking::{Error, DEFAULT_TOLERANCE};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "meanking",
    version,
    about = "Verify and simulate the mean-king retrodiction protocol",
    long_about = "Builds mutually unbiased bases and orthogonal striation tables, \
                  verifies the retrodiction solution they define, simulates it with \
                  a seeded generator, and searches for striation sets combinatorially."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutually unbiased basis families
    #[command(subcommand)]
    Mub(MubCommand),
    /// Striation tables viewed as mutually orthogonal Latin squares
    #[command(subcommand)]
    Mols(MolsCommand),
    /// Striation tables viewed as strings agreeing in exactly one place
    #[command(subcommand)]
    Strings(StringsCommand),
    /// Three-way equivalence of the table characterizations
    #[command(subcommand)]
    Equiv(EquivCommand),
    /// The retrodiction protocol end to end
    #[command(subcommand)]
    King(KingCommand),
    /// Paired construction for composite dimensions
    #[command(subcommand)]
    Composite(CompositeCommand),
    /// Combinatorial search for pairwise-orthogonal striations
    #[command(subcommand)]
    Search(SearchCommand),
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    /// Human-oriented lines (not a stability surface)
    Table,
    /// Versioned report documents
    Json,
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let value: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err("tolerance must be a positive finite number".to_owned())
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (left, right) = s
        .split_once(',')
        .ok_or_else(|| "expected two comma-separated dimensions, e.g. 2,3".to_owned())?;
    let d1 = left.trim().parse().map_err(|e| format!("first dimension: {e}"))?;
    let d2 = right.trim().parse().map_err(|e| format!("second dimension: {e}"))?;
    Ok((d1, d2))
}

/// Where a basis family comes from: built canonically or loaded from disk.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct MubSource {
    /// Build the canonical family for this dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Load a basis-family document instead
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
}

impl MubSource {
    fn resolve(&self) -> Result<MubFamily, String> {
        match (self.dim, &self.input) {
            (Some(d), None) => build_mub(d).map_err(|e| describe_error("building bases", e)),
            (None, Some(path)) => {
                let file = open_input(path)?;
                let (family, _) = load_mub(file)
                    .map_err(|e| format!("loading {}: {e}", path.display()))?;
                Ok(family)
            }
            _ => unreachable!("clap enforces exactly one source"),
        }
    }
}

/// Where a striation table comes from: built canonically or loaded.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct TableSource {
    /// Build the canonical table for this dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Load a striation-table document instead
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
}

impl TableSource {
    fn resolve(&self) -> Result<StriationTable, String> {
        match (self.dim, &self.input) {
            (Some(d), None) => {
                build_striations(d).map_err(|e| describe_error("building striations", e))
            }
            (None, Some(path)) => {
                let file = open_input(path)?;
                load_striations(file).map_err(|e| format!("loading {}: {e}", path.display()))
            }
            _ => unreachable!("clap enforces exactly one source"),
        }
    }
}

#[derive(Subcommand)]
enum MubCommand {
    /// Build the canonical family for a dimension and verify it
    Build {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_parser = parse_tolerance, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Also write the family as a JSON document
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Check orthonormality and pairwise unbiasedness
    Verify {
        #[command(flatten)]
        source: MubSource,
        #[arg(long, value_parser = parse_tolerance, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Write the canonical family as a JSON document
    Export {
        #[arg(long)]
        dim: usize,
        /// Destination path (standard output when omitted)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MolsCommand {
    /// Build the canonical table for a dimension and verify the
    /// Latin-square conditions
    Build {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Also write the table as a JSON document
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Check that every column pair meets each label pair exactly once
    Verify {
        #[command(flatten)]
        source: TableSource,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Print the table as strings and as squares
    Render {
        #[command(flatten)]
        source: TableSource,
    },
}

#[derive(Subcommand)]
enum StringsCommand {
    /// Check that every pair of rows agrees in exactly one place
    Verify {
        #[command(flatten)]
        source: TableSource,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum EquivCommand {
    /// Run the string, square, and Fourier-unitarity checks and compare
    /// their verdicts
    Check {
        #[command(flatten)]
        source: TableSource,
        #[arg(long, value_parser = parse_tolerance, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum KingCommand {
    /// Verify the retrodiction solution analytically
    Verify {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_parser = parse_tolerance, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run the protocol trial by trial with a seeded generator
    Simulate {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum CompositeCommand {
    /// Simulate the paired construction on d = d1·d2
    Simulate {
        /// The two prime-power factors, e.g. 2,3
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum SearchCommand {
    /// Find the largest set of pairwise-orthogonal striations
    Max {
        #[arg(long)]
        dim: usize,
        /// Node budget (one node per attempted assignment)
        #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        /// Organize the search square by square over all reduced Latin
        /// squares (the complete demonstration for dimension 6)
        #[arg(long)]
        all_squares: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<bool, String> {
    match command {
        Command::Mub(sub) => run_mub(sub),
        Command::Mols(sub) => run_mols(sub),
        Command::Strings(StringsCommand::Verify { source, format }) => {
            let table = source.resolve()?;
            let report = verify_strings(&table);
            emit_report(&report, format)?;
            Ok(report.pass)
        }
        Command::Equiv(EquivCommand::Check { source, tolerance, format }) => {
            let table = source.resolve()?;
            let report = verify_equivalence(&table, tolerance);
            emit_report(&report, format)?;
            Ok(report.pass)
        }
        Command::King(sub) => run_king(sub),
        Command::Composite(CompositeCommand::Simulate { dims, seed, trials, format }) => {
            let (d1, d2) = dims;
            let solution = composite_build(d1, d2)
                .map_err(|e| format!("building the paired construction: {e}"))?;
            let report = solution.simulate(trials, seed);
            emit_report(&report, format)?;
            Ok(report.pass)
        }
        Command::Search(SearchCommand::Max { dim, budget, all_squares, format }) => {
            let result = if all_squares {
                max_striations_all_squares(dim, budget)
            } else {
                max_striations(dim, budget)
            }
            .map_err(|e| format!("searching dimension {dim}: {e}"))?;
            emit_search(&result, format)?;
            Ok(true)
        }
    }
}

fn run_mub(command: MubCommand) -> Result<bool, String> {
    match command {
        MubCommand::Build { dim, tolerance, format, out } => {
            let family = build_mub(dim).map_err(|e| describe_error("building bases", e))?;
            let report = verify_mub(&family, tolerance);
            if let Some(path) = &out {
                write_document(Some(path), |sink| save_mub(&family, sink))?;
            }
            emit_report(&report, format)?;
            Ok(report.pass)
        }
        MubCommand::Verify { source, tolerance, format } => {
            let family = source.resolve()?;
            let report = verify_mub(&family, tolerance);
            emit_report(&report, format)?;
            Ok(report.pass)
        }
        MubCommand::Export { dim, out } => {
            let family = build_mub(dim).map_err(|e| describe_error("building bases", e))?;
            write_document(out.as_deref(), |sink| save_mub(&family, sink))?;
            Ok(true)
        }
    }
}

fn run_mols(command: MolsCommand) -> Result<bool, String> {
    match command {
        MolsCommand::Build { dim, format, out } => {
            let table =
                build_striations(dim).map_err(|e| describe_error("building striations", e))?;
            let report = verify_mols(&table);
            if let Some(path) = &out {
                write_document(Some(path), |sink| save_striations(&table, sink))?;
            }
            emit_report(&report, format)?;
            Ok(report.pass)
        }
        MolsCommand::Verify { source, format } => {
            let table = source.resolve()?;
            let report = verify_mols(&table);
            emit_report(&report, format)?;
            Ok(report.pass)
        }
        MolsCommand::Render { source } => {
            let table = source.resolve()?;
            let body = format!("{}\n{}", render_strings(&table), render_squares(&table));
            print_out(&body)?;
            Ok(true)
        }
    }
}

fn run_king(command: KingCommand) -> Result<bool, String> {
    match command {
        KingCommand::Verify { dim, tolerance, format } => {
            let (family, table) = king_inputs(dim)?;
            let report = verify_solution(&family, &table, tolerance)
                .map_err(|e| describe_error("verifying the solution", e))?;
            emit_report(&report, format)?;
            Ok(report.pass)
        }
        KingCommand::Simulate { dim, seed, trials, format } => {
            let (family, table) = king_inputs(dim)?;
            let report = simulate(&family, &table, trials, seed)
                .map_err(|e| describe_error("simulating", e))?;
            emit_report(&report, format)?;
            Ok(report.pass)
        }
    }
}

fn king_inputs(dim: usize) -> Result<(MubFamily, StriationTable), String> {
    let family = build_mub(dim).map_err(|e| describe_error("building bases", e))?;
    let table = build_striations(dim).map_err(|e| describe_error("building striations", e))?;
    Ok((family, table))
}

/// Turn a construction error into a message, appending the paired-factor
/// workaround when the dimension splits into supported factors.
fn describe_error(context: &str, error: Error) -> String {
    let mut message = format!("{context}: {error}");
    if let Error::UnsupportedDimension(d) = error {
        if let Some((d1, d2)) = composite_factors(d) {
            let _ = write!(
                message,
                "\nno maximal basis family or striation table is available in dimension {d}; \
                 the paired construction still guesses perfectly — try \
                 `meanking composite simulate --dims {d1},{d2}`"
            );
        }
    }
    message
}

fn composite_factors(d: usize) -> Option<(usize, usize)> {
    (2..=d)
        .take_while(|a| a * a <= d)
        .filter(|a| d % a == 0)
        .map(|a| (a, d / a))
        .find(|(a, b)| SUPPORTED_DIMS.contains(a) && SUPPORTED_DIMS.contains(b))
}

fn open_input(path: &Path) -> Result<File, String> {
    File::open(path).map_err(|e| format!("opening {}: {e}", path.display()))
}

fn write_document<F>(path: Option<&Path>, write: F) -> Result<(), String>
where
    F: FnOnce(&mut dyn Write) -> meanking::Result<()>,
{
    match path {
        Some(path) => {
            let mut file = File::create(path)
                .map_err(|e| format!("creating {}: {e}", path.display()))?;
            write(&mut file).map_err(|e| format!("writing {}: {e}", path.display()))
        }
        None => {
            let stdout = io::stdout();
            match write(&mut stdout.lock()) {
                Ok(()) => Ok(()),
                Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(format!("writing to standard output: {e}")),
            }
        }
    }
}

/// Write to standard output, treating a closed pipe as normal shutdown
/// (the reader simply stopped listening).
fn print_out(body: &str) -> Result<(), String> {
    match io::stdout().lock().write_all(body.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(format!("writing to standard output: {e}")),
    }
}

fn emit_report(report: &ProtocolReport, format: Format) -> Result<(), String> {
    let body = match format {
        Format::Json => {
            let mut body = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
            body.push('\n');
            body
        }
        Format::Table => {
            let mut body = String::new();
            format_report(&mut body, report, 0);
            body
        }
    };
    print_out(&body)
}

fn format_report(out: &mut String, report: &ProtocolReport, depth: usize) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}{report}");
    let pad = format!("{pad}    ");
    if let Some(tolerance) = report.tolerance {
        let _ = writeln!(out, "{pad}tolerance {tolerance:e}");
    }
    if let Some(consistent) = report.consistent {
        let _ = writeln!(out, "{pad}routes agree: {}", if consistent { "yes" } else { "NO" });
    }
    if let (Some(seed), Some(trials)) = (report.seed, report.trials) {
        let _ = writeln!(
            out,
            "{pad}seed {seed}, {trials} trials, rng {}",
            report.rng.as_deref().unwrap_or("unknown")
        );
    }
    if let (Some(successes), Some(trials)) = (report.success_count, report.trials) {
        let _ = writeln!(out, "{pad}correct guesses {successes}/{trials}");
    }
    if let Some(p) = report.analytic_success {
        let _ = writeln!(out, "{pad}analytic success probability {p}");
    }
    if report.reorthonormalized == Some(true) {
        let _ = writeln!(out, "{pad}measurement set had to be re-orthonormalized");
    }
    if let Some(pairing) = &report.basis_pairing {
        let _ = writeln!(out, "{pad}basis pairing: {pairing}");
    }
    for child in &report.children {
        format_report(out, child, depth + 1);
    }
}

/// Versioned document for search results (searches report findings, not
/// pass/fail verdicts, so they are not protocol reports).
#[derive(Serialize)]
struct SearchDocument<'a> {
    schema: u32,
    check: &'static str,
    d: usize,
    count: usize,
    ceiling: usize,
    proven: bool,
    nodes: u64,
    bruck_ryser_excluded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    squares_scanned: Option<u64>,
    /// Each striation as its d² labels in point order.
    columns: &'a [Vec<u16>],
}

fn emit_search(result: &SearchResult, format: Format) -> Result<(), String> {
    let body = match format {
        Format::Json => {
            let document = SearchDocument {
                schema: REPORT_SCHEMA,
                check: "search_max",
                d: result.d,
                count: result.count,
                ceiling: result.d + 1,
                proven: result.proven,
                nodes: result.nodes,
                bruck_ryser_excluded: result.bruck_ryser_excluded,
                squares_scanned: result.squares_scanned,
                columns: result.design.columns(),
            };
            let mut body = serde_json::to_string_pretty(&document).map_err(|e| e.to_string())?;
            body.push('\n');
            body
        }
        Format::Table => {
            let mut body = String::new();
            let _ = writeln!(
                body,
                "search_max d={}: {} pairwise-orthogonal striations (ceiling {}), {}, {} nodes",
                result.d,
                result.count,
                result.d + 1,
                if result.proven {
                    "demonstrated maximal"
                } else {
                    "not demonstrated maximal (budget exhausted)"
                },
                result.nodes
            );
            if result.bruck_ryser_excluded {
                let _ = writeln!(body, "    the counting argument already excludes a full set");
            }
            if let Some(squares) = result.squares_scanned {
                let _ = writeln!(body, "    reduced squares scanned: {squares}");
            }
            for (k, column) in result.design.columns().iter().enumerate() {
                let labels: String =
                    column.iter().map(|&v| char::from(b'0' + v as u8)).collect();
                let _ = writeln!(body, "    striation {k}: {labels}");
            }
            body
        }
    };
    print_out(&body)
}
