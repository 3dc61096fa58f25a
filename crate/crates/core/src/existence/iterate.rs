//! Fixed-point iteration between an ordered pair, and the drivers built on
//! it: single solves, `λ` sweeps and sign-changing weights.

use serde::Serialize;

use super::constants::{pick_constants_case_ii, pick_epsilon_case_i, MAX_HALVINGS};
use super::pairs::{adjust_sub_for_r, build_sub_super_case_i, build_sub_super_case_ii, order_margin, MarginBook};
use super::{nodal_margin, side_value, CaseSpec, ExistenceCertificate, Kink, ProblemSpec, SubSuperPair};
use crate::error::{Error, Result, StageExt};
use crate::funcgrid::{c1_norm, integrate, sup_norm, Grid, Interval, SampledFunction};
use crate::solveop::{first_order_defect, solve_s_phi, BvpSolution};

pub const ITERATION_CAP: usize = 500;
/// Sup-norm step at which the iteration may stop, also relative to `sup|u|`.
pub const STEP_TOLERANCE: f64 = 1e-8;
/// First-order defect every certificate must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
pub const SANDWICH_TOLERANCE: f64 = 1e-8;
/// Strictness of the boundary slope test for the positive cone.
pub const SLOPE_TOLERANCE: f64 = 1e-9;
/// Smallest relaxation weight of the damped fallback.
pub const MIN_RELAXATION: f64 = 1.0 / 64.0;

fn clamp_into(u: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    u.iter().zip(lo).zip(hi).map(|((&v, &l), &h)| v.max(l).min(h)).collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `f` nondecreasing on `[0, top]` at 1001 samples.
fn f_nondecreasing(spec: &ProblemSpec, top: f64) -> Result<bool> {
    let mut prev = spec.f_at(0.0)?;
    for k in 1..=1000 {
        let v = spec.f_at(top * k as f64 / 1000.0)?;
        if v < prev - 1e-14 * prev.abs() {
            return Ok(false);
        }
        prev = v;
    }
    Ok(true)
}

/// `u_{k+1} = S_φ(λ m f(û_k) − r φ(û_k))` with `û_k` the clamp of `u_k`
/// into `[sub, super]`, from `u_0 = sub`.
pub fn iterate_between(spec: &ProblemSpec, pair: &SubSuperPair) -> Result<ExistenceCertificate> {
    if pair.sub.grid() != &spec.grid || pair.sup.grid() != &spec.grid {
        return Err(Error::Input("pair and problem live on different grids".into()));
    }
    let lo = pair.sub.u.values();
    let hi = pair.sup.u.values();
    let (order, node, scale) = order_margin(&pair.sub, &pair.sup);
    if order < -SANDWICH_TOLERANCE.max(1e-12 * scale) {
        return Err(Error::Precondition(format!(
            "sub exceeds super by {:e} at x = {}",
            -order,
            spec.grid.x(node)
        )));
    }
    let f_monotone = f_nondecreasing(spec, hi.iter().fold(0.0, |m: f64, v| m.max(*v)))?;

    let mut u = lo.clone();
    let mut last_step = f64::INFINITY;
    let mut last_defect = f64::INFINITY;
    // relaxation weight, halved whenever the fixed-point residual grows
    let mut omega = 1.0;
    let mut prev_step = f64::INFINITY;
    for k in 1..=ITERATION_CAP {
        let src = spec.source(&clamp_into(&u, &lo, &hi))?;
        let sol = solve_s_phi(&spec.phi, &src)?;
        let next = sol.u.values();
        let step = sup_diff(&next, &u);
        let norm = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        last_step = step;
        if step <= STEP_TOLERANCE.min(STEP_TOLERANCE * norm) {
            let defect = first_order_defect(&spec.phi, &sol.uprime, &spec.source(&next)?)?;
            last_defect = defect;
            if defect <= RESIDUAL_TOLERANCE {
                return Ok(certify(spec, pair, sol, k, defect, step, f_monotone, omega));
            }
        }
        if k > 2 && step > prev_step && omega > MIN_RELAXATION {
            omega *= 0.5;
        }
        prev_step = step;
        u = if omega == 1.0 {
            next
        } else {
            u.iter().zip(&next).map(|(a, b)| a + omega * (b - a)).collect()
        };
    }
    Err(Error::NonConvergence {
        iterations: ITERATION_CAP,
        last_step,
        residual: last_defect,
    })
}

fn certify(
    spec: &ProblemSpec,
    pair: &SubSuperPair,
    solution: BvpSolution,
    iterations: usize,
    final_residual: f64,
    final_step: f64,
    f_monotone: bool,
    relaxation: f64,
) -> ExistenceCertificate {
    let n = solution.u.len();
    let u = solution.u.values();
    let gap_lo = (0..n).map(|i| u[i] - pair.sub.u.value(i)).fold(f64::INFINITY, f64::min);
    let gap_hi = (0..n).map(|i| pair.sup.u.value(i) - u[i]).fold(f64::INFINITY, f64::min);
    let slopes = solution.boundary_slopes();
    let in_positive_cone =
        u[1..n - 1].iter().all(|&v| v > 0.0) && slopes.0 > SLOPE_TOLERANCE && slopes.1 < -SLOPE_TOLERANCE;
    let mut warnings = Vec::new();
    if gap_lo.min(gap_hi) < -SANDWICH_TOLERANCE {
        warnings.push(format!(
            "clamping active at convergence: solution leaves [sub, super] by {:e}",
            -gap_lo.min(gap_hi)
        ));
    }
    if !f_monotone {
        warnings.push("f is not nondecreasing on [0, sup super]; the iteration is not monotone".into());
    }
    if !in_positive_cone {
        warnings.push(format!(
            "solution is not in the positive cone: u'(a) = {:e}, u'(b) = {:e}",
            slopes.0, slopes.1
        ));
    }
    ExistenceCertificate {
        lambda: spec.lambda,
        pair: pair.clone(),
        solution,
        iterations,
        final_residual,
        final_step,
        in_positive_cone,
        slopes,
        sandwich_gaps: (gap_lo, gap_hi),
        f_monotone,
        relaxation,
        warnings,
    }
}

/// The pair of the matching construction, without iterating.
pub(crate) fn construct_pair(spec: &ProblemSpec) -> Result<SubSuperPair> {
    match &spec.case {
        CaseSpec::I { .. } => {
            let eps = pick_epsilon_case_i(spec).stage("constants")?;
            if spec.has_r() {
                adjust_sub_for_r(spec, eps).stage("construction")
            } else {
                build_sub_super_case_i(spec, eps).stage("construction")
            }
        }
        CaseSpec::II { .. } => {
            let (eps, gamma) = pick_constants_case_ii(spec).stage("constants")?;
            if spec.has_r() {
                adjust_sub_for_r(spec, eps).stage("construction")
            } else {
                build_sub_super_case_ii(spec, eps, gamma).stage("construction")
            }
        }
    }
}

/// The same construction with a smaller `ε`.
fn rebuild(spec: &ProblemSpec, pair: &SubSuperPair, epsilon: f64) -> Result<SubSuperPair> {
    if spec.has_r() {
        return adjust_sub_for_r(spec, epsilon);
    }
    match (&spec.case, pair.gamma) {
        (CaseSpec::I { .. }, _) => build_sub_super_case_i(spec, epsilon),
        (CaseSpec::II { .. }, Some(gamma)) => build_sub_super_case_ii(spec, epsilon, gamma),
        (CaseSpec::II { .. }, None) => {
            let (_, gamma) = pick_constants_case_ii(spec)?;
            build_sub_super_case_ii(spec, epsilon, gamma)
        }
    }
}

/// Halves `ε` until the subsolution lies below `ceiling` on the nodes of
/// `ceiling` starting at `offset`.
fn sub_below(spec: &ProblemSpec, mut pair: SubSuperPair, ceiling: &BvpSolution, offset: usize) -> Result<SubSuperPair> {
    for _ in 0..=MAX_HALVINGS {
        let n = pair.sub.u.len();
        let below = (0..n).all(|i| pair.sub.u.value(i) <= ceiling.u.value(offset + i) + SANDWICH_TOLERANCE * 1e-3);
        if below {
            return Ok(pair);
        }
        pair = rebuild(spec, &pair, 0.5 * pair.epsilon)?;
    }
    Err(Error::Construction(
        "no subsolution found below the supersolution".into(),
    ))
}

/// Hypotheses, constants, pair, iteration.
pub fn solve_problem(spec: &ProblemSpec) -> Result<ExistenceCertificate> {
    spec.require_hypotheses().stage("hypotheses")?;
    let pair = construct_pair(spec)?;
    iterate_between(spec, &pair).stage("iteration")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub sup_u: f64,
    pub sup_uprime: f64,
    pub c1_norm: f64,
    /// `φ⁻¹(λ ∫ m f(u)) · c_Ω`.
    pub bound_value: f64,
    pub bound_holds: bool,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub certificates: Vec<ExistenceCertificate>,
}

impl SweepTable {
    /// `sup u` nonincreasing along the list.
    pub fn monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sup_u <= w[0].sup_u + SANDWICH_TOLERANCE)
    }
}

fn sweep_row(spec: &ProblemSpec, cert: &ExistenceCertificate) -> Result<SweepRow> {
    let sol = &cert.solution;
    let fu = sol
        .u
        .values()
        .iter()
        .map(|&t| spec.f_at(t))
        .collect::<Result<Vec<_>>>()?;
    let total = integrate(&spec.m.mul_nodal(&fu)?)?;
    let sup_u = sup_norm(&sol.u);
    let bound_value = spec.phi.inverse(spec.lambda * total)? * spec.interval().c_omega();
    Ok(SweepRow {
        lambda: spec.lambda,
        sup_u,
        sup_uprime: sup_norm(&sol.uprime),
        c1_norm: c1_norm(&sol.u, &sol.uprime),
        bound_value,
        bound_holds: sup_u <= bound_value + RESIDUAL_TOLERANCE,
        iterations: cert.iterations,
        residual: cert.final_residual,
    })
}

/// Solves along a decreasing list of `λ`, each solution serving as the
/// supersolution of the next so that `u_λ` is pointwise nonincreasing.
pub fn lambda_sweep(spec: &ProblemSpec, lambdas: &[f64]) -> Result<SweepTable> {
    if lambdas.is_empty() {
        return Err(Error::Input("empty lambda list".into()));
    }
    if lambdas.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(Error::Input("lambdas must be positive".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input("lambda list must be strictly decreasing".into()));
    }
    let first = spec.with_lambda(lambdas[0])?;
    let cert = solve_problem(&first)?;
    let mut rows = vec![sweep_row(&first, &cert)?];
    let mut certificates = vec![cert];
    for &lambda in &lambdas[1..] {
        let s = spec.with_lambda(lambda)?;
        let prev = certificates.last().expect("nonempty");
        let base = sub_below(&s, construct_pair(&s)?, &prev.solution, 0).stage("construction")?;

        let mut book = MarginBook::default();
        let x = s.grid.nodes();
        book.nodal("order", order_margin(&base.sub, &prev.solution), x);
        // (λ_prev − λ) m f(u_prev) ≥ 0
        let fu = prev
            .solution
            .u
            .values()
            .iter()
            .map(|&t| s.f_at(t))
            .collect::<Result<Vec<_>>>()?;
        let dl = prev.lambda - lambda;
        book.nodal(
            "super_reuse",
            nodal_margin(|i, side| dl * side_value(&s.m, i, side) * fu[i], |_, _| 0.0, fu.len()),
            x,
        );
        book.constant("super_residual", prev.final_residual);
        book.constant("previous_lambda", prev.lambda);
        let (reuse_margins, reuse_constants) = book.finish().stage("construction")?;
        let mut pair = base;
        pair.margins.retain(|k, _| k != "super" && k != "order");
        pair.margins.extend(reuse_margins);
        pair.constants.extend(reuse_constants);
        pair.sup = prev.solution.clone();
        pair.gamma = None;
        pair.construction = format!("{}, previous solution as supersolution", pair.construction);

        let cert = iterate_between(&s, &pair).stage("iteration")?;
        rows.push(sweep_row(&s, &cert)?);
        certificates.push(cert);
    }
    Ok(SweepTable { rows, certificates })
}

/// Node range of the subinterval with `m ≥ 0` carrying the most mass.
fn detect_omega0(m: &SampledFunction) -> Option<(usize, usize)> {
    let n = m.len();
    let x = m.grid().nodes();
    let cell_ok = |j: usize| m.right_value(j) >= 0.0 && m.left_value(j + 1) >= 0.0;
    let mut best: Option<(usize, usize, f64)> = None;
    let mut j = 0;
    while j < n - 1 {
        if !cell_ok(j) {
            j += 1;
            continue;
        }
        let start = j;
        let mut mass = 0.0;
        while j < n - 1 && cell_ok(j) {
            let (l, r) = (m.right_value(j), m.left_value(j + 1));
            if l.is_finite() && r.is_finite() {
                mass += 0.5 * (l + r) * (x[j + 1] - x[j]);
            } else {
                mass = f64::INFINITY;
            }
            j += 1;
        }
        if mass > 0.0 && best.is_none_or(|b| mass > b.2) {
            best = Some((start, j, mass));
        }
    }
    best.map(|b| (b.0, b.1))
}

/// One-sided slope at `x[i0]` from the quadratic through three nodes
/// walking in the direction of `step`.
fn one_sided_slope(x: &[f64], u: &[f64], i0: usize, step: isize) -> f64 {
    let i1 = (i0 as isize + step) as usize;
    let i2 = (i0 as isize + 2 * step) as usize;
    let (x0, x1, x2) = (x[i0], x[i1], x[i2]);
    u[i0] * (2.0 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + u[i1] * (x0 - x2) / ((x1 - x0) * (x1 - x2))
        + u[i2] * (x0 - x1) / ((x2 - x0) * (x2 - x1))
}

/// A problem whose weight changes sign: the supersolution solves the
/// problem with `m⁺`, the subsolution is built on a subinterval `Ω₀` where
/// `m ≥ 0` and extended by zero.
pub fn solve_sign_changing(spec: &ProblemSpec, omega0: Option<Interval>) -> Result<ExistenceCertificate> {
    let grid = &spec.grid;
    let n = grid.len();
    let m_plus = spec.m.positive_part();
    if m_plus.is_negligible(0.0) {
        return Err(Error::Precondition(
            "m <= 0 everywhere: no admissible subinterval".into(),
        ));
    }
    let (i0, i1) = match omega0 {
        Some(iv) => {
            let i0 = grid
                .node_index(iv.a)
                .ok_or_else(|| Error::Input(format!("omega0 endpoint {} is not a grid node", iv.a)))?;
            let i1 = grid
                .node_index(iv.b)
                .ok_or_else(|| Error::Input(format!("omega0 endpoint {} is not a grid node", iv.b)))?;
            (i0, i1)
        }
        None => {
            detect_omega0(&spec.m).ok_or_else(|| Error::Precondition("m has no nonnegative part with mass".into()))?
        }
    };
    if i1 < i0 + 4 {
        return Err(Error::Precondition("omega0 must span at least four cells".into()));
    }
    let m0 = spec.m.restrict(i0, i1)?;
    if !m0.is_nonnegative() || m0.is_negligible(0.0) {
        return Err(Error::Precondition(
            "m must be nonnegative and nontrivial on omega0".into(),
        ));
    }

    let mut plus = spec.clone();
    plus.m = m_plus;
    let upper = solve_problem(&plus).stage("supersolution")?;

    let grid0 = grid.restrict(i0, i1)?;
    let mut sub_spec = spec.clone();
    sub_spec.grid = grid0.clone();
    sub_spec.m = m0;
    if let Some(r) = &spec.r {
        sub_spec.r = Some(r.restrict(i0, i1)?);
    }
    let inner = sub_below(&sub_spec, construct_pair(&sub_spec)?, &upper.solution, i0).stage("subsolution")?;

    let sub = extend_solution(&inner.sub, grid, i0)?;
    let x = grid.nodes();
    let u = sub.u.values();
    let mut kinks = Vec::new();
    if i0 > 0 {
        kinks.push(Kink {
            x: x[i0],
            left_slope: one_sided_slope(x, &u, i0, -1),
            right_slope: one_sided_slope(x, &u, i0, 1),
        });
    }
    if i1 < n - 1 {
        kinks.push(Kink {
            x: x[i1],
            left_slope: one_sided_slope(x, &u, i1, -1),
            right_slope: one_sided_slope(x, &u, i1, 1),
        });
    }
    if let Some(bad) = kinks.iter().find(|k| !k.holds()) {
        return Err(Error::Construction(format!(
            "kink condition fails at x = {}: left slope {:e} >= right slope {:e}",
            bad.x, bad.left_slope, bad.right_slope
        )))
        .stage("subsolution");
    }

    let mut book = MarginBook::default();
    book.nodal("order", order_margin(&sub, &upper.solution), x);
    for k in &kinks {
        book.scalar(&format!("kink@{}", k.x), k.right_slope - k.left_slope);
    }
    // λ m⁺ f(ū) ≥ λ m f(ū)
    let fu = upper
        .solution
        .u
        .values()
        .iter()
        .map(|&t| spec.f_at(t))
        .collect::<Result<Vec<_>>>()?;
    book.nodal(
        "super",
        nodal_margin(
            |i, s| spec.lambda * side_value(&plus.m, i, s) * fu[i],
            |i, s| spec.lambda * side_value(&spec.m, i, s) * fu[i],
            n,
        ),
        x,
    );
    book.constant("omega0_a", x[i0]);
    book.constant("omega0_b", x[i1]);
    book.constant("super_residual", upper.final_residual);
    let (margins, constants) = book.finish().stage("construction")?;
    let mut pair = SubSuperPair {
        sub,
        sup: upper.solution.clone(),
        epsilon: inner.epsilon,
        gamma: None,
        margins: inner
            .margins
            .into_iter()
            .map(|(k, v)| (format!("omega0_{k}"), v))
            .collect(),
        constants: inner
            .constants
            .into_iter()
            .map(|(k, v)| (format!("omega0_{k}"), v))
            .collect(),
        kink_set: kinks,
        construction: format!("sign-changing, {} on omega0", inner.construction),
    };
    pair.margins.extend(margins);
    pair.constants.extend(constants);
    iterate_between(spec, &pair).stage("iteration")
}

/// Zero extension of a solution on a node range to the full grid.
fn extend_solution(s: &BvpSolution, full: &Grid, i0: usize) -> Result<BvpSolution> {
    let n = full.len();
    let m = s.u.len();
    let u = s.u.extend_by_zero(full, i0)?;
    let uprime = s.uprime.extend_by_zero(full, i0)?;
    let hv = s.h_cumulative.values();
    let end = hv[m - 1];
    let mut h = vec![0.0; n];
    h[i0..i0 + m].copy_from_slice(&hv);
    h[i0 + m..].iter_mut().for_each(|v| *v = end);
    Ok(BvpSolution {
        u,
        uprime,
        c_h: s.c_h,
        residual_sup: s.residual_sup,
        h_cumulative: SampledFunction::from_values(full, h)?,
        h_integral: s.h_integral,
    })
}
