#![allow(dead_code)]

use philap::existence::{CaseSpec, ProblemSpec};
use philap::expr::parse_expression;
use philap::funcgrid::{Grid, Interval, PiecewiseSpec, SampledFunction};
use philap::homeo::{GrowthConstants, GrowthWitness, Homeomorphism, PhiKind};

pub const N: usize = 2049;

pub fn unit() -> Interval {
    Interval::new(0.0, 1.0).unwrap()
}

pub fn p_lap(p: f64) -> Homeomorphism {
    Homeomorphism::p_laplacian(p).unwrap()
}

pub fn sum_powers(p1: f64, p2: f64) -> Homeomorphism {
    Homeomorphism::new(PhiKind::SumPowers { p1, p2 }).unwrap()
}

pub fn ones() -> SampledFunction {
    SampledFunction::constant(&Grid::uniform(unit(), N).unwrap(), 1.0)
}

/// `c` on `(lo, hi)`, zero elsewhere, on a grid with nodes at `lo`, `hi`.
pub fn indicator(lo: f64, hi: f64) -> SampledFunction {
    let spec = PiecewiseSpec::indicator(unit(), lo, hi, 1.0).unwrap();
    let g = PiecewiseSpec::grid_for(unit(), N, &[&spec]).unwrap();
    spec.sample(&g).unwrap()
}

pub fn steps(bps: &[f64], values: &[f64]) -> SampledFunction {
    let spec = PiecewiseSpec::steps(bps.to_vec(), values).unwrap();
    let g = PiecewiseSpec::grid_for(unit(), N, &[&spec]).unwrap();
    spec.sample(&g).unwrap()
}

pub fn sqrt_growth() -> GrowthConstants {
    GrowthConstants {
        k1: 1.0,
        k2: 1.0,
        t_bar: 1.0,
    }
}

/// Case I witness for `φ`: `ψ(t) = t^{p−1}` for the p-Laplacian, `ψ(t) = t`
/// for `t² + t`.
pub fn case_i(phi: &Homeomorphism) -> CaseSpec {
    let p = match phi.kind() {
        PhiKind::PLaplacian { p } => p - 1.0,
        _ => 1.0,
    };
    CaseSpec::I {
        psi: GrowthWitness::power(1.0, p, 1.0).unwrap(),
        q: 0.5,
    }
}

pub fn sqrt_problem(phi: Homeomorphism, m: SampledFunction, lambda: f64) -> ProblemSpec {
    let case = case_i(&phi);
    ProblemSpec::new(
        phi,
        parse_expression("sqrt(t)").unwrap(),
        sqrt_growth(),
        m,
        lambda,
        case,
    )
    .unwrap()
}

pub fn sqrt_problem_ii(phi: Homeomorphism, m: SampledFunction, lambda: f64, p: f64) -> ProblemSpec {
    let case = CaseSpec::II {
        p,
        q1: 0.5,
        q2: 0.5,
        k: None,
        n: None,
    };
    ProblemSpec::new(
        phi,
        parse_expression("sqrt(t)").unwrap(),
        sqrt_growth(),
        m,
        lambda,
        case,
    )
    .unwrap()
}

fn rk4(y0: f64, v0: f64, lambda: f64, steps: usize) -> (f64, Vec<f64>) {
    // −y″ = λ √y⁺ on [0, 1]
    let h = 1.0 / steps as f64;
    let rhs = |y: f64| -lambda * y.max(0.0).sqrt();
    let (mut y, mut v) = (y0, v0);
    let mut ys = vec![y];
    for _ in 0..steps {
        let k1 = (v, rhs(y));
        let k2 = (v + 0.5 * h * k1.1, rhs(y + 0.5 * h * k1.0));
        let k3 = (v + 0.5 * h * k2.1, rhs(y + 0.5 * h * k2.0));
        let k4 = (v + h * k3.1, rhs(y + h * k3.0));
        y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        ys.push(y);
    }
    (y, ys)
}

/// Positive solution of `−u″ = λ√u`, `u(0) = u(1) = 0`, by shooting on
/// `u′(0)` with RK4 and bisection; values at `steps + 1` uniform nodes.
pub fn shooting_sqrt(lambda: f64, steps: usize) -> Vec<f64> {
    let end = |s: f64| rk4(0.0, s, lambda, steps).0;
    // sublinear: small amplitudes oscillate faster, so the first zero moves
    // right as the slope grows
    let (mut lo, mut hi) = (1e-12, 1.0);
    while end(hi) <= 0.0 {
        hi *= 2.0;
    }
    assert!(end(lo) <= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if end(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    rk4(0.0, 0.5 * (lo + hi), lambda, steps).1
}
