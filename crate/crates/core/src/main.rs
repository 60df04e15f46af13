//! Command-line front end: closed-loop scenario execution, pairwise overlap
//! diagnostics, overlap-curve dumps, and randomized property suites.
//!
//! Exit codes: 0 success (and `overlap`: disjoint or touching), 1 any error
//! or failed verification, 2 a run in which the raw footprint contacted an
//! obstacle, 3 `overlap` detected intersection.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ellipsoid_mpc::overlap::{kappa_star, write_curve};
use ellipsoid_mpc::scenario::Scenario;
use ellipsoid_mpc::simulation::{fmt_float, perturbed_run, run};
use ellipsoid_mpc::verify;
use ellipsoid_mpc::Ellipsoid;

#[derive(Parser)]
#[command(
    name = "ellipsoid-mpc",
    version,
    about = "Ellipsoid-overlap collision constraints inside a planar nonlinear MPC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and write its log as CSV.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Output CSV path.
        out: PathBuf,
        /// Add zero-mean Gaussian noise of this standard deviation (m, rad)
        /// to every measured pose component.
        #[arg(long, value_name = "STD")]
        perturb: Option<f64>,
        /// Also write per-iteration solver traces to `<out>.trace.csv`.
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate the overlap measure for one pair of ellipses.
    Overlap {
        /// First ellipse as `sx,sy,rot,cx,cy` (semi-axes m, rotation rad,
        /// center m).
        #[arg(long, value_parser = parse_ellipse)]
        a: Ellipsoid,
        /// Second ellipse, same format.
        #[arg(long, value_parser = parse_ellipse)]
        b: Ellipsoid,
    },
    /// Dump the overlap curve of a pair over a uniform grid as CSV.
    Curve {
        /// Output CSV path.
        out: PathBuf,
        /// First ellipse as `sx,sy,rot,cx,cy`.
        #[arg(long, value_parser = parse_ellipse)]
        a: Ellipsoid,
        /// Second ellipse, same format.
        #[arg(long, value_parser = parse_ellipse)]
        b: Ellipsoid,
        /// Number of grid points on [0, 1].
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Run randomized property suites and report per-suite counts.
    Verify {
        /// Which suite to run.
        #[arg(long, value_enum, default_value_t = SuiteChoice::All)]
        suite: SuiteChoice,
        /// Randomized cases per suite.
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        /// Seed of the deterministic case generator.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteChoice {
    Geometry,
    Overlap,
    Solver,
    All,
}

fn parse_ellipse(text: &str) -> Result<Ellipsoid, String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("ellipse spec {text:?}: {e}"))?;
    if parts.len() != 5 {
        return Err(format!(
            "ellipse spec needs five comma-separated values sx,sy,rot,cx,cy, got {}",
            parts.len()
        ));
    }
    Ellipsoid::from_semi_axes(parts[0], parts[1], parts[2], (parts[3], parts[4]))
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    // Exit codes are part of the contract (0 ok, 1 error, 2 collision,
    // 3 overlap), so argument errors must map to 1 rather than clap's
    // default of 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Run { scenario, out, perturb, trace } => cmd_run(&scenario, &out, perturb, trace),
        Command::Overlap { a, b } => cmd_overlap(&a, &b),
        Command::Curve { out, a, b, samples } => cmd_curve(&a, &b, samples, &out),
        Command::Verify { suite, pairs, seed } => cmd_verify(suite, pairs, seed),
    };
    ExitCode::from(code)
}

fn cmd_run(scenario_path: &PathBuf, out: &PathBuf, perturb: Option<f64>, trace: bool) -> u8 {
    let mut scenario = match Scenario::from_file(scenario_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", scenario_path.display());
            return 1;
        }
    };
    scenario.solver.trace = trace;

    let log = match perturb {
        Some(std) => perturbed_run(&scenario, std),
        None => run(&scenario),
    };
    let log = match log {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };

    let mut file = match std::fs::File::create(out) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", out.display());
            return 1;
        }
    };
    if let Err(e) = log.write_csv(&mut file) {
        eprintln!("error: writing {}: {e}", out.display());
        return 1;
    }

    if trace {
        let trace_path = out.with_extension("trace.csv");
        match std::fs::File::create(&trace_path) {
            Ok(mut f) => {
                use std::io::Write;
                let mut ok = writeln!(f, "outer,inner,cost,violation,step_len").is_ok();
                for row in log.rows.iter().flat_map(|r| r.trace.iter()) {
                    ok = ok
                        && writeln!(
                            f,
                            "{},{},{},{},{}",
                            row.outer,
                            row.inner,
                            fmt_float(row.cost),
                            fmt_float(row.violation),
                            fmt_float(row.step_len)
                        )
                        .is_ok();
                }
                if !ok {
                    eprintln!("error: writing {}", trace_path.display());
                    return 1;
                }
            }
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", trace_path.display());
                return 1;
            }
        }
    }

    if let Some(e) = &log.error {
        eprintln!("error: run aborted after {} steps: {e}", log.rows.len());
        return 1;
    }
    if log.any_collision() {
        eprintln!("collision: raw footprint contacted an obstacle; see {}", out.display());
        return 2;
    }
    println!("wrote {} rows to {}", log.rows.len(), out.display());
    0
}

fn cmd_overlap(a: &Ellipsoid, b: &Ellipsoid) -> u8 {
    let r = match kappa_star(a, b, None) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let verdict = if r.kappa_star.abs() <= 1e-9 {
        "touching"
    } else if r.kappa_star > 0.0 {
        "overlap"
    } else {
        "disjoint"
    };
    println!("lambda_star = {}", fmt_float(r.lambda_star));
    println!("kappa_star = {}", fmt_float(r.kappa_star));
    println!("branch = {}", r.branch);
    println!("verdict = {verdict}");
    if verdict == "overlap" {
        3
    } else {
        0
    }
}

fn cmd_curve(a: &Ellipsoid, b: &Ellipsoid, samples: usize, out: &PathBuf) -> u8 {
    let mut file = match std::fs::File::create(out) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", out.display());
            return 1;
        }
    };
    match write_curve(a, b, samples, &mut file) {
        Ok(()) => {
            println!("wrote {samples} samples to {}", out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_verify(suite: SuiteChoice, pairs: usize, seed: u64) -> u8 {
    let reports = match suite {
        SuiteChoice::Geometry => vec![verify::geometry_suite(pairs, seed)],
        SuiteChoice::Overlap => vec![verify::overlap_suite(pairs, seed)],
        SuiteChoice::Solver => vec![verify::solver_suite(pairs, seed)],
        SuiteChoice::All => verify::all_suites(pairs, seed),
    };
    let mut all_ok = true;
    for report in &reports {
        println!("{report}");
        all_ok = all_ok && report.passed();
    }
    if all_ok {
        0
    } else {
        1
    }
}
