//! Plain-text emitters: CSV with a header row and LF endings, JSON with
//! sorted keys. Floats are written with 17 significant digits so identical
//! inputs give byte-identical files.

use std::fmt::Write;

use serde_json::{json, Value};

use crate::existence::{ExistenceCertificate, SweepTable};
use crate::homeo::Homeomorphism;
use crate::solveop::{BoundEnvelope, BvpSolution};

/// `{:.16e}`; non-finite values as `nan`, `inf`, `-inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Columns of equal length under a header.
pub fn csv(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    debug_assert!(columns.iter().all(|c| c.len() == rows));
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_float(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// `x, u, uprime, defect`.
pub fn solution_csv(phi: &Homeomorphism, sol: &BvpSolution) -> String {
    let x = sol.grid().nodes();
    csv(
        &["x", "u", "uprime", "defect"],
        &[x, &sol.u.values(), &sol.uprime.values(), &sol.defect(phi)],
    )
}

pub fn solution_json(sol: &BvpSolution) -> String {
    pretty(&json!({ "c_h": sol.c_h, "residual_sup": sol.residual_sup }))
}

/// `x, lower, u, upper`.
pub fn envelope_csv(env: &BoundEnvelope, sol: &BvpSolution) -> String {
    csv(
        &["x", "lower", "u", "upper"],
        &[
            sol.grid().nodes(),
            &env.lower.values(),
            &sol.u.values(),
            &env.upper.values(),
        ],
    )
}

/// `x, sub, super, u, uprime`.
pub fn profiles_csv(cert: &ExistenceCertificate) -> String {
    let sol = &cert.solution;
    csv(
        &["x", "sub", "super", "u", "uprime"],
        &[
            sol.grid().nodes(),
            &cert.pair.sub.u.values(),
            &cert.pair.sup.u.values(),
            &sol.u.values(),
            &sol.uprime.values(),
        ],
    )
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("lambda,sup_u,sup_uprime,c1_norm,bound_value,bound_holds,iterations,residual\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.lambda),
            fmt_float(r.sup_u),
            fmt_float(r.sup_uprime),
            fmt_float(r.c1_norm),
            fmt_float(r.bound_value),
            r.bound_holds,
            r.iterations,
            fmt_float(r.residual)
        )
        .expect("writing to a string");
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcgrid::{Grid, Interval, SampledFunction};
    use crate::solveop::solve_s_phi;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn solution_csv_shape() {
        let g = Grid::uniform(Interval::new(0.0, 1.0).unwrap(), 5).unwrap();
        let phi = Homeomorphism::p_laplacian(2.0).unwrap();
        let sol = solve_s_phi(&phi, &SampledFunction::constant(&g, 1.0)).unwrap();
        let text = solution_csv(&phi, &sol);
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], "x,u,uprime,defect");
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[6], "");
        assert!(!text.contains('\r'));
        assert_eq!(lines[3].split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.125);
        let header: Value = serde_json::from_str(&solution_json(&sol)).unwrap();
        assert!((header["c_h"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
}
