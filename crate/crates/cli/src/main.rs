//! `philap solve|hypotheses|bounds|sweep --config PATH [--out DIR] [--grid-n N]`
//!
//! Exit status: 0 on success, 2 when a hypothesis or a precondition
//! fails, 3 on numerical failure, 4 on configuration or usage errors.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use philap::existence::{lambda_sweep, solve_problem, solve_sign_changing};
use philap::io;
use philap::solveop::{bound_envelope, solve_s_phi};
use serde_json::json;

use config::{Config, ConfigError, Formats};

#[derive(Parser)]
#[command(
    name = "philap",
    version,
    about = "Sub/supersolution solver for one-dimensional phi-Laplacian problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a positive solution and write its profiles.
    Solve(Common),
    /// Check the hypotheses of the declared case.
    Hypotheses(Common),
    /// Compare S_phi(m) with its two-sided envelope.
    Bounds(Common),
    /// Solve along the decreasing lambda list of [sweep].
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_n: Option<usize>,
}

enum Failure {
    Config(String),
    Hypothesis(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Hypothesis(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Config(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Hypothesis(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<philap::Error> for Failure {
    fn from(e: philap::Error) -> Self {
        use philap::Error as E;
        let msg = e.to_string();
        match e.root() {
            E::HypothesisViolation(_) | E::Precondition(_) => Failure::Hypothesis(msg),
            E::Config(_) | E::Input(_) | E::Expr(_) => Failure::Config(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

/// Output directory and formats.
struct Sink {
    dir: PathBuf,
    formats: Formats,
}

impl Sink {
    fn new(args: &Common, cfg: &Config) -> Result<Sink, Failure> {
        let dir = args
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Sink {
            dir,
            formats: cfg.formats,
        })
    }

    fn write(&self, name: &str, body: &str) -> Result<(), Failure> {
        let wanted = match Path::new(name).extension().and_then(|e| e.to_str()) {
            Some("csv") => self.formats.csv,
            Some("json") => self.formats.json,
            _ => true,
        };
        if !wanted {
            return Ok(());
        }
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
    }
}

fn solve(args: &Common) -> Result<(), Failure> {
    let cfg = Config::load(&args.config)?;
    let spec = cfg.problem(args.grid_n)?;
    let sink = Sink::new(args, &cfg)?;
    let cert = if cfg.sign_changing {
        solve_sign_changing(&spec, cfg.omega0)?
    } else {
        solve_problem(&spec)?
    };
    sink.write("certificate.json", &(cert.to_json() + "\n"))?;
    sink.write("profiles.csv", &io::profiles_csv(&cert))?;
    sink.write("solution.csv", &io::solution_csv(&spec.phi, &cert.solution))?;
    sink.write("solution.json", &io::solution_json(&cert.solution))?;
    println!(
        "certified: {} iterations, residual {:.3e}, sup u {:.6e}, positive cone {}",
        cert.iterations,
        cert.final_residual,
        cert.solution.u.values().iter().fold(0.0f64, |m, v| m.max(v.abs())),
        cert.in_positive_cone
    );
    for w in &cert.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn hypotheses(args: &Common) -> Result<(), Failure> {
    let cfg = Config::load(&args.config)?;
    let spec = cfg.problem(args.grid_n)?;
    let sink = Sink::new(args, &cfg)?;
    let reports = spec.hypothesis_reports()?;
    let mut violated = Vec::new();
    for r in &reports {
        let name = format!("{:?}", r.hypothesis);
        sink.write(&format!("hypothesis_{name}.json"), &(r.to_json() + "\n"))?;
        let verdict = match r.violation_point {
            Some((t, x)) => format!("violated at ({t:e}, {x:e})"),
            None if r.verdict.is_corroborated() => "corroborated on range".to_string(),
            None => "not applicable".to_string(),
        };
        println!("{name}: {verdict}; {}", r.detail);
        if r.verdict.is_violated() {
            violated.push(name);
        }
    }
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Failure::Hypothesis(format!("violated: {}", violated.join(", "))))
    }
}

/// Envelope slack allowed at each node.
const ENVELOPE_TOLERANCE: f64 = 1e-6;

fn bounds(args: &Common) -> Result<(), Failure> {
    let cfg = Config::load(&args.config)?;
    let spec = cfg.problem(args.grid_n)?;
    let sink = Sink::new(args, &cfg)?;
    let h = &spec.m;
    let sol = solve_s_phi(&spec.phi, h)?;
    let env = bound_envelope(&spec.phi, h)?;
    let (u, lo, hi) = (sol.u.values(), env.lower.values(), env.upper.values());
    let violations = (0..u.len())
        .filter(|&i| lo[i] - ENVELOPE_TOLERANCE > u[i] || u[i] > hi[i] + ENVELOPE_TOLERANCE)
        .count();
    let mid = spec.grid.nearest_node(spec.interval().midpoint());
    let x_mid = spec.grid.x(mid);
    let summary = json!({
        "holds": violations == 0,
        "violations": violations,
        "tolerance": ENVELOPE_TOLERANCE,
        "m_omega_constant": env.m_omega_constant,
        "upper_constant": env.upper_constant,
        "support": env.support,
        "c_h": sol.c_h,
        "at_midpoint": { "x": x_mid, "lower": lo[mid], "u": u[mid], "upper": hi[mid] },
    });
    sink.write("envelope.csv", &io::envelope_csv(&env, &sol))?;
    sink.write("solution.csv", &io::solution_csv(&spec.phi, &sol))?;
    sink.write("solution.json", &io::solution_json(&sol))?;
    sink.write("bounds.json", &io::pretty(&summary))?;
    println!(
        "lower({x_mid}) = {:.6} <= u({x_mid}) = {:.6} <= upper({x_mid}) = {:.6}",
        lo[mid], u[mid], hi[mid]
    );
    if violations == 0 {
        println!("envelope holds at all {} nodes", u.len());
        Ok(())
    } else {
        Err(Failure::Numerical(format!("envelope violated at {violations} nodes")))
    }
}

fn sweep(args: &Common) -> Result<(), Failure> {
    let cfg = Config::load(&args.config)?;
    if cfg.lambdas.is_empty() {
        return Err(Failure::Config("[sweep] needs a `lambdas` list".into()));
    }
    let spec = cfg.problem(args.grid_n)?;
    let sink = Sink::new(args, &cfg)?;
    let table = lambda_sweep(&spec, &cfg.lambdas)?;
    sink.write("sweep.csv", &io::sweep_csv(&table))?;
    sink.write(
        "sweep.json",
        &io::pretty(&serde_json::to_value(&table).expect("sweep tables serialize")),
    )?;
    for r in &table.rows {
        println!(
            "lambda {:.3e}: C1 norm {:.6e}, sup u {:.6e} <= bound {:.6e}: {}",
            r.lambda, r.c1_norm, r.sup_u, r.bound_value, r.bound_holds
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Hypotheses(a) => hypotheses(a),
        Command::Bounds(a) => bounds(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        use philap::Error as E;
        let code = |e: E| Failure::from(e).code();
        assert_eq!(code(E::HypothesisViolation("x".into())), 2);
        assert_eq!(code(E::Precondition("x".into())), 2);
        assert_eq!(code(E::Input("x".into())), 4);
        assert_eq!(code(E::Numerical("x".into())), 3);
        assert_eq!(Failure::from(ConfigError("x".into())).code(), 4);
    }
}
