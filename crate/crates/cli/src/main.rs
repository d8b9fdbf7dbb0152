use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use kappa_ent::channels::one_shot_exact_cost;
use kappa_ent::measures::{extract_witness, measure};
use kappa_ent::sdp::SolveOptions;
use kappa_ent_cli::battery::parse_suites;
use kappa_ent_cli::output::{certificate_text, measure_text, CertificateFile, WitnessFile};
use kappa_ent_cli::statefile::{resolve_state, write_atomic};
use kappa_ent_cli::sweep::{self, Family};
use kappa_ent_cli::CliError;

#[derive(Parser)]
#[command(name = "kappa-ent", version, about = "κ-entanglement, negativity and exact PPT cost of bipartite states")]
struct Cli {
    /// Relative duality-gap tolerance of the SDP solver
    #[arg(long, global = true, default_value_t = 1e-8)]
    gap_tol: f64,
    /// Primal/dual feasibility tolerance of the SDP solver
    #[arg(long, global = true, default_value_t = 1e-8)]
    feas_tol: f64,
    /// Seed for the random states used by `check`
    #[arg(long, global = true, default_value_t = 20170)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute every measure of a state
    Measure {
        /// Built-in name (phi:d, rho_v, sigma:p, omega:p, tau:p, convexity:{1,2,avg}, monogamy:{ab,ac,abc}) or JSON file
        state: String,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a state family on a grid and write CSV
    Sweep {
        family: String,
        p0: f64,
        p1: f64,
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find and certify the exact one-shot PPT cost
    Oneshot {
        state: String,
        /// Also write the certificate as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite (duality, additivity, faithfulness, monotonicity, convexity, monogamy, twoqubit, sandwich, all)
    Check { suite: String },
    /// Extract the optimal entanglement witness
    Witness {
        state: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn options(cli: &Cli) -> Result<SolveOptions, CliError> {
    for (name, v) in [("--gap-tol", cli.gap_tol), ("--feas-tol", cli.feas_tol)] {
        if !(v.is_finite() && v > 0.0 && v < 1.0) {
            return Err(CliError::Validation(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    Ok(SolveOptions { gap_tol: cli.gap_tol, feas_tol: cli.feas_tol, ..SolveOptions::default() })
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let opts = options(cli)?;
    match &cli.command {
        Command::Measure { state, json } => {
            let rho = resolve_state(state)?;
            let report = measure(&rho, &opts)?;
            if *json {
                print!("{}", to_json(&report));
            } else {
                print!("{}", measure_text(state, &report));
            }
        }
        Command::Sweep { family, p0, p1, steps, out } => {
            let family: Family = family.parse()?;
            let points = sweep::grid(*p0, *p1, *steps)?;
            let threads = sweep::thread_limit()?;
            let rows = sweep::run(family, &points, &opts, threads)?;
            write_atomic(out, sweep::to_csv(&rows).as_bytes())?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Oneshot { state, out } => {
            let rho = resolve_state(state)?;
            let cert = one_shot_exact_cost(&rho, &opts)?;
            print!("{}", certificate_text(state, &cert));
            let file = CertificateFile::new(&cert);
            if let Some(path) = out {
                write_atomic(path, to_json(&file).as_bytes())?;
            }
            if !file.passed {
                return Err(CliError::Integrity("certificate checks failed".into()));
            }
        }
        Command::Check { suite } => {
            let suites = parse_suites(suite)?;
            let mut failed = 0usize;
            for s in suites {
                let start = Instant::now();
                let results = s.run(&opts, cli.seed)?;
                let bad = results.iter().filter(|a| !a.passed).count();
                for a in &results {
                    println!("[{s}] {}", a.line());
                }
                println!(
                    "[{s}] {} {}/{} assertions passed in {:.2?}",
                    if bad == 0 { "PASS" } else { "FAIL" },
                    results.len() - bad,
                    results.len(),
                    start.elapsed()
                );
                failed += bad;
            }
            if failed > 0 {
                return Err(CliError::Integrity(format!("{failed} assertions failed")));
            }
        }
        Command::Witness { state, out } => {
            let rho = resolve_state(state)?;
            let w = extract_witness(&rho, &opts)?;
            let file = WitnessFile::new(&w);
            match out {
                Some(path) => {
                    write_atomic(path, to_json(&file).as_bytes())?;
                    println!("violation {:.9}", w.violation);
                }
                None => print!("{}", to_json(&file)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
