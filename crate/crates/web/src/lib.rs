//! Browser bindings. Every entry point takes a JSON request string and
//! returns a JSON string; failures come back as `{"error": "..."}` so the
//! page never has to catch a thrown value.

use philap::existence::{lambda_sweep, solve_problem, CaseSpec, ProblemSpec};
use philap::expr::{parse_expression, Expr};
use philap::funcgrid::{EndpointWeight, Interval, PiecewiseSpec, SampledFunction};
use philap::homeo::{GrowthConstants, GrowthWitness, Homeomorphism, PhiKind};
use philap::solveop::{bound_envelope, solve_s_phi};
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

/// Nodes sent back for plotting; the solve itself runs on the full grid.
const PLOT_POINTS: usize = 401;
const MAX_GRID_N: usize = 8193;

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn num(req: &Value, key: &str, default: f64) -> Res<f64> {
    match req.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| format!("`{key}` must be a number")),
    }
}

fn text<'a>(req: &'a Value, key: &str, default: &'a str) -> Res<&'a str> {
    match req.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_str().ok_or_else(|| format!("`{key}` must be a string")),
    }
}

fn expr(src: &str, what: &str) -> Res<Expr> {
    parse_expression(src).map_err(|e| format!("{what}: {e}"))
}

fn grid_n(req: &Value) -> Res<usize> {
    let n = num(req, "n", 1025.0)?;
    if !(n.fract() == 0.0 && (3.0..=MAX_GRID_N as f64).contains(&n)) {
        return Err(format!("`n` must be an integer in [3, {MAX_GRID_N}]"));
    }
    Ok(n as usize)
}

/// `{"kind": "p_laplacian", "p": 2}` and friends.
fn phi(req: &Value) -> Res<Homeomorphism> {
    let p = num(req, "p", 2.0)?;
    let kind = match text(req, "phi", "p_laplacian")? {
        "p_laplacian" => PhiKind::PLaplacian { p },
        "sum_powers" => PhiKind::SumPowers {
            p1: num(req, "p1", 2.0)?,
            p2: num(req, "p2", 1.0)?,
        },
        "exp_power" => PhiKind::ExpPower { p },
        "exp_minus_linear" => PhiKind::ExpMinusLinear,
        "power_ratio" => PhiKind::PowerRatio {
            p1: num(req, "p1", 2.0)?,
            p2: num(req, "p2", 1.0)?,
        },
        "log_weighted" => PhiKind::LogWeighted,
        "linear_minus_log" => PhiKind::LinearMinusLog,
        "log_power" => PhiKind::LogPower { p },
        other => return Err(format!("unknown phi {other:?}")),
    };
    Homeomorphism::new(kind).map_err(err)
}

/// Weight on `[0, 1]` from `"pieces"` (`|`-separated, in `x`) and
/// `"breakpoints"`.
fn weight(req: &Value, key: &str, n: usize) -> Res<SampledFunction> {
    let pieces = text(req, key, "1")?
        .split('|')
        .map(|p| expr(p.trim(), key))
        .collect::<Res<Vec<_>>>()?;
    let breakpoints = match req.get("breakpoints") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_f64().ok_or("`breakpoints` must hold numbers"))
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err("`breakpoints` must be an array".into()),
    };
    let spec = PiecewiseSpec::new(breakpoints, pieces, EndpointWeight::NONE).map_err(err)?;
    let iv = Interval::new(0.0, 1.0).map_err(err)?;
    let grid = PiecewiseSpec::grid_for(iv, n, &[&spec]).map_err(err)?;
    spec.sample(&grid).map_err(err)
}

/// Every `k`-th node so that roughly `PLOT_POINTS` remain, ends included.
fn thin(v: &[f64]) -> Vec<f64> {
    let step = v.len().div_ceil(PLOT_POINTS).max(1);
    let mut out: Vec<f64> = v.iter().step_by(step).copied().collect();
    if !(v.len() - 1).is_multiple_of(step) {
        out.push(v[v.len() - 1]);
    }
    out
}

fn respond(r: Res<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn parse(request: &str) -> Res<Value> {
    let v: Value = serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))?;
    if v.is_object() {
        Ok(v)
    } else {
        Err("request must be a JSON object".into())
    }
}

pub fn envelope_json(request: &str) -> Res<Value> {
    let req = parse(request)?;
    let phi = phi(&req)?;
    let h = weight(&req, "h", grid_n(&req)?)?;
    let sol = solve_s_phi(&phi, &h).map_err(err)?;
    let env = bound_envelope(&phi, &h).map_err(err)?;
    let (u, lo, hi) = (sol.u.values(), env.lower.values(), env.upper.values());
    let holds = (0..u.len()).all(|i| lo[i] - 1e-6 <= u[i] && u[i] <= hi[i] + 1e-6);
    Ok(json!({
        "phi": phi.name(),
        "x": thin(sol.grid().nodes()),
        "u": thin(&u),
        "lower": thin(&lo),
        "upper": thin(&hi),
        "c_h": sol.c_h,
        "residual": sol.residual_sup,
        "m_omega": env.m_omega_constant,
        "upper_constant": env.upper_constant,
        "support": [env.support.alpha, env.support.beta],
        "holds": holds,
    }))
}

/// p-Laplacian problem in the first sublinear case, with `ψ(t) = t^{p−1}`
/// and the growth exponent `q` of `f` near zero.
fn problem(req: &Value) -> Res<ProblemSpec> {
    let n = grid_n(req)?;
    let p = num(req, "p", 2.0)?;
    let phi = Homeomorphism::p_laplacian(p).map_err(err)?;
    let f = expr(text(req, "f", "sqrt(t)")?, "f")?;
    let growth = GrowthConstants {
        k1: num(req, "k1", 1.0)?,
        k2: num(req, "k2", 1.0)?,
        t_bar: num(req, "t_bar", 1.0)?,
    };
    let psi = GrowthWitness::power(1.0, p - 1.0, 1.0).map_err(err)?;
    let case = CaseSpec::I {
        psi,
        q: num(req, "q", 0.5)?,
    };
    let m = weight(req, "m", n)?;
    ProblemSpec::new(phi, f, growth, m, num(req, "lambda", 1.0)?, case).map_err(err)
}

pub fn solve_json(request: &str) -> Res<Value> {
    let req = parse(request)?;
    let spec = problem(&req)?;
    let cert = solve_problem(&spec).map_err(err)?;
    Ok(json!({
        "x": thin(cert.solution.grid().nodes()),
        "u": thin(&cert.solution.u.values()),
        "sub": thin(&cert.pair.sub.u.values()),
        "super": thin(&cert.pair.sup.u.values()),
        "epsilon": cert.pair.epsilon,
        "iterations": cert.iterations,
        "residual": cert.final_residual,
        "positive_cone": cert.in_positive_cone,
        "warnings": cert.warnings,
    }))
}

pub fn sweep_json(request: &str) -> Res<Value> {
    let req = parse(request)?;
    let spec = problem(&req)?;
    let lambdas = match req.get("lambdas") {
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_f64().ok_or("`lambdas` must hold numbers"))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err("`lambdas` must be an array".into()),
    };
    let table = lambda_sweep(&spec, &lambdas).map_err(err)?;
    serde_json::to_value(&table).map_err(err)
}

/// `S_φ(h)` with its two-sided envelope.
#[wasm_bindgen]
pub fn envelope(request: &str) -> String {
    respond(envelope_json(request))
}

/// Certified positive solution with its sub/supersolution pair.
#[wasm_bindgen]
pub fn solve(request: &str) -> String {
    respond(solve_json(request))
}

/// `‖u_λ‖` along a decreasing list of `λ`.
#[wasm_bindgen]
pub fn sweep(request: &str) -> String {
    respond(sweep_json(request))
}
