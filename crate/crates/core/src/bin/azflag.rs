//! Command-line driver: verification, computation, corpus runs, and
//! floating-point oracle cross-checks for flag-case files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use azflag::azpipe::Computation;
use azflag::corpus::{
    self, CaseReport, CorpusError, FlagCase, OracleReport,
};
use azflag::exactnum::Rat;
use azflag::lattices::{verify_restriction, VerificationReport};
use azflag::zariski::verify_threefold_decomposition;

const REPORT_SCHEMA: &str = "azflag-report/1";
const ORACLE_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "azflag", version, about = "Exact stability-threshold computations for flags on Fano threefolds")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a flag file: schema, restriction compatibility, and the
    /// supplied threefold decomposition.
    Verify { path: PathBuf },
    /// Compute all S-invariants and the local bound for one flag file.
    Compute {
        path: PathBuf,
        /// Also print every chamber cell: ranges, active set, affine
        /// negative-part coefficients, positive part.
        #[arg(long)]
        trace: bool,
    },
    /// Run every case in a corpus directory and compare expected values.
    Corpus {
        /// Defaults to $AZFLAG_CORPUS_DIR, then the bundled corpus.
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
        /// Worker threads (default: number of processors).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Cross-check one case against midpoint-quadrature in floating point.
    Oracle {
        path: PathBuf,
        #[arg(long, default_value_t = 400)]
        grid: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { path } => cmd_verify(path, cli.format),
        Command::Compute { path, trace } => cmd_compute(path, cli.format, *trace),
        Command::Corpus { corpus_dir, jobs } => cmd_corpus(corpus_dir.as_deref(), *jobs, cli.format),
        Command::Oracle { path, grid } => cmd_oracle(path, *grid, cli.format),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &std::path::Path) -> Result<FlagCase, CorpusError> {
    corpus::load_flag(path)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct VerifyOut<'a> {
    schema: &'a str,
    case: &'a str,
    pass: bool,
    reports: Vec<(&'a str, &'a VerificationReport)>,
}

fn cmd_verify(path: &std::path::Path, format: Format) -> Result<ExitCode, CorpusError> {
    let case = load(path)?;
    let dec = verify_threefold_decomposition(&case.threefold, &case.y, &case.dec3);
    let restriction = case.flag.as_ref().map(|flag| {
        verify_restriction(&flag.restriction, &case.threefold, &case.y, &flag.surface)
    });
    let mut reports: Vec<(&str, &VerificationReport)> =
        vec![("threefold-decomposition", &dec)];
    if let Some(r) = &restriction {
        reports.push(("restriction", r));
    }
    let pass = reports.iter().all(|(_, r)| r.pass());
    match format {
        Format::Json => {
            let out = VerifyOut {
                schema: REPORT_SCHEMA,
                case: &case.name,
                pass,
                reports,
            };
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
        Format::Text => {
            for (label, report) in &reports {
                for entry in &report.entries {
                    println!(
                        "{} {label}: {} — {}",
                        if entry.pass { "ok  " } else { "FAIL" },
                        entry.check,
                        entry.detail
                    );
                }
            }
            println!("{}: {}", case.name, if pass { "pass" } else { "fail" });
        }
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

// ---------------------------------------------------------------------------
// compute
// ---------------------------------------------------------------------------

fn cmd_compute(path: &std::path::Path, format: Format, trace: bool) -> Result<ExitCode, CorpusError> {
    let case = load(path)?;
    let report = corpus::run_case(&case);
    let Some(values) = &report.values else {
        return Err(CorpusError::Validation {
            path: case.name.clone(),
            message: report.error.unwrap_or_else(|| "pipeline failed".into()),
        });
    };
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                schema: &'a str,
                #[serde(flatten)]
                report: &'a CaseReport,
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&Out {
                    schema: REPORT_SCHEMA,
                    report: &report
                })
                .unwrap()
            );
        }
        Format::Text => {
            println!("case      = {}", case.name);
            println!("S_X(Y)    = {}", values.s_x_y);
            if let Some(sv) = &values.s_v_z {
                println!("S(V;Z)    = {sv}");
            }
            for p in &values.points {
                println!("F[{}]     = {}", p.name, p.f_p);
                println!("S(W;{})   = {}", p.name, p.s_w);
            }
            println!("delta_bound = {}  (witness: {:?})", values.delta_bound, values.witness);
            if trace {
                print_trace(&case)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// One block per cell, ranges first, then the positive part and the
/// negative-part coefficients, mirroring a piecewise table.
fn print_trace(case: &FlagCase) -> Result<(), CorpusError> {
    let Some(flag) = &case.flag else {
        return Ok(());
    };
    let ctx = case.context().expect("non-divisor case");
    let comp = Computation::prepare(&ctx).map_err(|e| CorpusError::Validation {
        path: case.name.clone(),
        message: e.to_string(),
    })?;
    for (u_lo, u_hi, complex) in comp.complexes() {
        println!("chamber u in [{u_lo}, {u_hi}]");
        for seg in &complex.threshold {
            println!("  threshold t(u) = {}  on [{}, {}]", seg.t, seg.u_lo, seg.u_hi);
        }
        for (i, cell) in complex.cells.iter().enumerate() {
            println!("  cell {i}: u in [{}, {}], v in [{}, {}]", cell.u_lo, cell.u_hi, cell.v_lo, cell.v_hi);
            if cell.active.is_empty() {
                println!("    N = 0");
            } else {
                for (name, coeff) in cell.active.iter().zip(&cell.n_coeffs) {
                    println!("    N[{name}] = {coeff}");
                }
            }
            for (name, coeff) in flag.surface.basis.iter().zip(&cell.positive.coeffs) {
                if !coeff.is_zero() {
                    println!("    P[{name}] = {coeff}");
                }
            }
            println!("    vol = {}", cell.vol);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// corpus
// ---------------------------------------------------------------------------

fn cmd_corpus(
    dir: Option<&std::path::Path>,
    jobs: Option<usize>,
    format: Format,
) -> Result<ExitCode, CorpusError> {
    let dir = dir
        .map(|p| p.to_path_buf())
        .unwrap_or_else(corpus::default_corpus_dir);
    let jobs = jobs.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let reports = corpus::run_dir(&dir, jobs)?;
    // reload cases for the mode-aware summary
    let mut cases = Vec::new();
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|source| CorpusError::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    for f in &files {
        cases.push(load(f)?);
    }
    let summary = corpus::regional_summary(&cases, &reports).cloned();
    let pass = reports.iter().all(|r| r.pass);
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                schema: &'a str,
                pass: bool,
                regional_summary: Option<Rat>,
                cases: &'a [CaseReport],
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&Out {
                    schema: REPORT_SCHEMA,
                    pass,
                    regional_summary: summary,
                    cases: &reports
                })
                .unwrap()
            );
        }
        Format::Text => {
            println!("{:<12} {:>6} {:>14} {:>6}", "case", "checks", "delta_bound", "ms");
            for r in &reports {
                let bound = r
                    .values
                    .as_ref()
                    .map_or("-".to_string(), |v| v.delta_bound.to_string());
                let status = if r.pass { "pass" } else { "FAIL" };
                println!(
                    "{:<12} {:>6} {:>14} {:>6}  {status}",
                    r.name,
                    r.comparisons.len(),
                    bound,
                    r.millis
                );
                if !r.pass {
                    if let Some(e) = &r.error {
                        println!("    error: {e}");
                    }
                    for c in r.comparisons.iter().filter(|c| !c.pass) {
                        println!("    {}: expected {}, computed {}", c.field, c.expected, c.computed);
                    }
                }
            }
            match &summary {
                Some(b) => println!("regional summary: min bound > 1 over point flags = {b}"),
                None => println!("regional summary: no point-mode bound exceeds 1"),
            }
        }
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn cmd_oracle(path: &std::path::Path, grid: u32, format: Format) -> Result<ExitCode, CorpusError> {
    let case = load(path)?;
    let report = corpus::run_case(&case);
    let Some(values) = &report.values else {
        return Err(CorpusError::Validation {
            path: case.name.clone(),
            message: report.error.unwrap_or_else(|| "pipeline failed".into()),
        });
    };
    let oracle = corpus::numeric_oracle(&case, grid)?;

    struct Row {
        quantity: String,
        exact: Rat,
        approx: f64,
    }
    let mut rows = vec![Row {
        quantity: "s_x_y".into(),
        exact: values.s_x_y.clone(),
        approx: oracle.s_x_y,
    }];
    if let (Some(exact), Some(approx)) = (&values.s_v_z, oracle.s_v_z) {
        rows.push(Row {
            quantity: "s_v_z".into(),
            exact: exact.clone(),
            approx,
        });
    }
    for p in &values.points {
        rows.push(Row {
            quantity: format!("f_p.{}", p.name),
            exact: p.f_p.clone(),
            approx: oracle.f_p[&p.name],
        });
        rows.push(Row {
            quantity: format!("s_w_p.{}", p.name),
            exact: p.s_w.clone(),
            approx: oracle.s_w_p[&p.name],
        });
    }

    let rel = |exact: f64, approx: f64| {
        let abs = (approx - exact).abs();
        if exact == 0.0 {
            abs
        } else {
            abs / exact.abs()
        }
    };
    let pass = rows
        .iter()
        .all(|r| rel(r.exact.to_f64(), r.approx) <= ORACLE_TOLERANCE);
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct JsonRow {
                quantity: String,
                exact: Rat,
                oracle: f64,
                abs_error: f64,
                rel_error: f64,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                schema: &'a str,
                case: &'a str,
                pass: bool,
                oracle: &'a OracleReport,
                rows: Vec<JsonRow>,
            }
            let json_rows = rows
                .iter()
                .map(|r| JsonRow {
                    quantity: r.quantity.clone(),
                    exact: r.exact.clone(),
                    oracle: r.approx,
                    abs_error: (r.approx - r.exact.to_f64()).abs(),
                    rel_error: rel(r.exact.to_f64(), r.approx),
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&Out {
                    schema: REPORT_SCHEMA,
                    case: &case.name,
                    pass,
                    oracle: &oracle,
                    rows: json_rows
                })
                .unwrap()
            );
        }
        Format::Text => {
            println!("{:<12} {:>14} {:>16} {:>12} {:>12}", "quantity", "exact", "oracle", "abs err", "rel err");
            for r in &rows {
                let e = r.exact.to_f64();
                println!(
                    "{:<12} {:>14} {:>16.10} {:>12.3e} {:>12.3e}",
                    r.quantity,
                    r.exact.to_string(),
                    r.approx,
                    (r.approx - e).abs(),
                    rel(e, r.approx)
                );
            }
            println!("grid = {grid}: {}", if pass { "pass" } else { "fail" });
        }
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
