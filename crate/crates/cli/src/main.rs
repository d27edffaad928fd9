use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tep_core::report::{render_report, Report, SolveSummary, VariantRun};
use tep_core::{
    build_milp, bundled, decode_plan, parse_case, parse_solution, solve_milp, validate_case, write_mps, Case,
    SolveOutcome, SolveParams, Variant,
};

/// Multi-epoch transmission expansion planning with seasonal switching.
#[derive(Parser)]
#[command(name = "tep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case file and print its findings.
    Validate { case: String },
    /// Export a variant's model as MPS without solving it.
    Build {
        case: String,
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        /// Write here instead of <out>/model_<variant>.mps.
        #[arg(long, conflicts_with = "out")]
        mps: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve one variant and write its report and CSV files.
    Solve {
        case: String,
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Solve all three variants and write the comparison report.
    Compare {
        case: String,
        #[command(flatten)]
        solve: SolveArgs,
        /// Solve the variants one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Decode a solution listing produced by an external solver.
    Import {
        case: String,
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Relative optimality gap (0.00001 = 0.001%).
    #[arg(long, default_value_t = 1e-5, value_parser = parse_gap, allow_negative_numbers = true)]
    gap: f64,
    /// Time limit in seconds.
    #[arg(long, default_value_t = 3000.0, value_parser = parse_seconds, allow_negative_numbers = true)]
    timelim: f64,
    /// Stop after this many branch-and-bound nodes.
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print incumbent and bound updates to stderr.
    #[arg(long, short)]
    verbose: bool,
}

impl SolveArgs {
    fn params(&self) -> SolveParams {
        SolveParams {
            mip_gap: self.gap,
            time_limit: Duration::from_secs_f64(self.timelim),
            node_limit: self.node_limit,
            verbose: self.verbose,
            ..SolveParams::default()
        }
    }

    fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("gap".to_string(), self.gap.to_string()),
            ("timelim".to_string(), format!("{} s", self.timelim)),
        ];
        if let Some(n) = self.node_limit {
            h.push(("node limit".to_string(), n.to_string()));
        }
        h
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn parse_gap(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a nonnegative number")),
    }
}

fn parse_seconds(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 && v < 1e9 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number of seconds")),
    }
}

/// A path to a case file, or the name of a bundled case when no such file
/// exists.
fn read_case(arg: &str) -> Result<Case> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(case) = bundled::load(arg) {
            return Ok(case);
        }
    }
    let text = fs::read_to_string(path).with_context(|| format!("cannot read case file {}", path.display()))?;
    parse_case(&text).with_context(|| format!("{}", path.display()))
}

fn load_valid(arg: &str) -> Result<Case> {
    let case = read_case(arg)?;
    let report = validate_case(&case);
    for w in report.warnings() {
        eprintln!("{w}");
    }
    if !report.is_ok() {
        bail!("case failed validation:\n{report}");
    }
    Ok(case)
}

fn write_report(out: &Path, report: &Report) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    let write = |name: &str, body: &str| {
        let p = out.join(name);
        fs::write(&p, body).with_context(|| format!("cannot write {}", p.display()))
    };
    write("report.txt", &report.text)?;
    for (name, body) in &report.files {
        write(name, body)?;
    }
    Ok(())
}

struct Solved {
    run: Option<VariantRun>,
    outcome: SolveOutcome,
}

fn solve_variant(case: &Case, variant: Variant, params: &SolveParams) -> Result<Solved> {
    let (model, index) = build_milp(case, variant)?;
    let outcome = solve_milp(&model, params);
    let run = match &outcome.incumbent {
        Some(x) => {
            let plan = decode_plan(case, &model, &index, x)
                .with_context(|| format!("{variant}: incumbent failed to decode"))?;
            Some(VariantRun {
                plan,
                solve: Some(SolveSummary::from(&outcome)),
            })
        }
        None => None,
    };
    Ok(Solved { run, outcome })
}

fn solve_header(args: &SolveArgs, solved: &[Solved]) -> Vec<(String, String)> {
    let mut header = args.header();
    if solved.iter().any(|s| s.outcome.time_limited) {
        header.push((
            "nondeterministic".to_string(),
            "yes (time limit reached; results depend on machine speed)".to_string(),
        ));
    }
    header
}

fn finish(case: &Case, args: &SolveArgs, solved: &[Solved]) -> Result<u8> {
    let mut code = 0;
    for s in solved {
        if !s.outcome.status.is_solved() {
            eprintln!("stopped with status {}", s.outcome.status);
            code = 1;
        }
    }
    let runs: Vec<VariantRun> = solved.iter().filter_map(|s| s.run.clone()).collect();
    if !runs.is_empty() {
        let report = render_report(case, &solve_header(args, solved), &runs);
        write_report(&args.out, &report)?;
        print!("{}", report.text);
    }
    Ok(code)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate { case } => {
            let case = read_case(&case)?;
            let report = validate_case(&case);
            print!("{report}");
            Ok(if report.is_ok() { 0 } else { 2 })
        }
        Command::Build {
            case,
            variant,
            mps,
            out,
        } => {
            let case = load_valid(&case)?;
            let (model, _) = build_milp(&case, variant)?;
            let text = write_mps(&model)?;
            let path = match mps {
                Some(p) => p,
                None => {
                    fs::create_dir_all(&out)
                        .with_context(|| format!("cannot create output directory {}", out.display()))?;
                    out.join(format!("model_{}.mps", variant.tag()))
                }
            };
            fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            println!(
                "{}: {} columns ({} binary), {} rows, {} nonzeros -> {}",
                variant.label(),
                model.num_variables(),
                model.num_binaries(),
                model.num_constraints(),
                model.num_nonzeros(),
                path.display()
            );
            Ok(0)
        }
        Command::Solve {
            case,
            variant,
            solve,
        } => {
            let case = load_valid(&case)?;
            let solved = solve_variant(&case, variant, &solve.params())?;
            finish(&case, &solve, &[solved])
        }
        Command::Compare {
            case,
            solve,
            sequential,
        } => {
            let case = load_valid(&case)?;
            let params = solve.params();
            let solved: Vec<Result<Solved>> = if sequential {
                Variant::ALL.iter().map(|&v| solve_variant(&case, v, &params)).collect()
            } else {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = Variant::ALL
                        .iter()
                        .map(|&v| {
                            let (case, params) = (&case, &params);
                            scope.spawn(move || solve_variant(case, v, params))
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("solver thread panicked"))
                        .collect()
                })
            };
            let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
            finish(&case, &solve, &solved)
        }
        Command::Import {
            case,
            variant,
            solution,
            out,
        } => {
            let case = load_valid(&case)?;
            let (model, index) = build_milp(&case, variant)?;
            let text = fs::read_to_string(&solution)
                .with_context(|| format!("cannot read solution file {}", solution.display()))?;
            let x = parse_solution(&model, &text).with_context(|| format!("{}", solution.display()))?;
            let plan = match decode_plan(&case, &model, &index, &x) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(1);
                }
            };
            let header = vec![("solution".to_string(), solution.display().to_string())];
            let report = render_report(&case, &header, &[VariantRun { plan, solve: None }]);
            write_report(&out, &report)?;
            print!("{}", report.text);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
