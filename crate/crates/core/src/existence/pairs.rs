//! Sub/supersolution pairs built from `S_φ`.

use std::collections::BTreeMap;

use serde::Serialize;

use super::constants::{
    case_i_chain, case_i_constants, case_ii_chain, case_ii_constants, pick_constants_case_ii, MAX_HALVINGS,
};
use super::iterate::solve_problem;
use super::{nodal_margin, side_value, CaseSpec, ProblemSpec, SubSuperPair, MARGIN_TOLERANCE, SAFETY_FACTOR};
use crate::error::{Error, Result, StageExt};
use crate::funcgrid::SampledFunction;
use crate::homeo::geometric_grid;
use crate::solveop::{solve_s_phi, BvpSolution};

/// Accumulates margins and the inequalities that failed.
#[derive(Default)]
pub(crate) struct MarginBook {
    pub margins: BTreeMap<String, f64>,
    pub constants: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl MarginBook {
    /// A closed-form link of a constant chain; must hold exactly.
    pub fn scalar(&mut self, name: &str, slack: f64) {
        self.margins.insert(name.to_string(), slack);
        if !(slack >= 0.0) {
            self.failures.push(format!("{name} fails with slack {slack:e}"));
        }
    }

    /// A nodal inequality; may fail by roundoff relative to its terms.
    pub fn nodal(&mut self, name: &str, (slack, node, scale): (f64, usize, f64), x: &[f64]) {
        self.margins.insert(name.to_string(), slack);
        if !(slack >= -MARGIN_TOLERANCE * scale) {
            self.failures
                .push(format!("{name} fails at x = {} with slack {slack:e}", x[node]));
        }
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn finish(self) -> Result<(BTreeMap<String, f64>, BTreeMap<String, f64>)> {
        if self.failures.is_empty() {
            Ok((self.margins, self.constants))
        } else {
            Err(Error::Construction(self.failures.join("; ")))
        }
    }
}

/// `min(w − v)` over all nodes, with `sup|w|` as scale.
pub(crate) fn order_margin(v: &BvpSolution, w: &BvpSolution) -> (f64, usize, f64) {
    let mut worst = (f64::INFINITY, 0);
    let mut scale: f64 = 0.0;
    for i in 0..v.u.len() {
        let d = w.u.value(i) - v.u.value(i);
        scale = scale.max(w.u.value(i).abs()).max(v.u.value(i).abs());
        if d < worst.0 {
            worst = (d, i);
        }
    }
    (worst.0, worst.1, scale)
}

/// `λ m f(v) ≥ source` at interior nodes.
pub(crate) fn sub_margin(spec: &ProblemSpec, v: &BvpSolution, source: &SampledFunction) -> Result<(f64, usize, f64)> {
    let fv = v.u.values().iter().map(|&t| spec.f_at(t)).collect::<Result<Vec<_>>>()?;
    Ok(nodal_margin(
        |i, s| spec.lambda * side_value(&spec.m, i, s) * fv[i],
        |i, s| side_value(source, i, s),
        v.u.len(),
    ))
}

/// `source ≥ λ m f(w)` at interior nodes.
pub(crate) fn super_margin(spec: &ProblemSpec, w: &BvpSolution, source: &SampledFunction) -> Result<(f64, usize, f64)> {
    let fw = w.u.values().iter().map(|&t| spec.f_at(t)).collect::<Result<Vec<_>>>()?;
    Ok(nodal_margin(
        |i, s| side_value(source, i, s),
        |i, s| spec.lambda * side_value(&spec.m, i, s) * fw[i],
        w.u.len(),
    ))
}

fn sub_bound(book: &mut MarginBook, spec: &ProblemSpec, v: &BvpSolution) {
    let sup_v = v.u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    book.scalar("sub_bound", spec.growth.t_bar - sup_v);
}

/// `v = S_φ(εmδ^q)`, `w = S_φ(ε⁻¹mδ^q)`.
pub fn build_sub_super_case_i(spec: &ProblemSpec, epsilon: f64) -> Result<SubSuperPair> {
    let CaseSpec::I { q, .. } = &spec.case else {
        return Err(Error::Precondition("case I pair needs a case I problem".into()));
    };
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
    }
    let c = case_i_constants(spec)?;
    let mut book = MarginBook::default();
    for (name, slack) in case_i_chain(spec, &c, epsilon) {
        book.scalar(name, slack);
    }
    book.constant("epsilon_bar", c.epsilon_bar);
    book.constant("M", c.big_m);
    book.constant("M_omega", c.m_omega);
    book.constant("theta_under", c.theta_under);
    book.constant("integral_m_delta_q", c.integral);
    let h = spec.m_delta(*q)?;
    let sub_src = h.scale(epsilon);
    let sup_src = h.scale(1.0 / epsilon);
    let v = solve_s_phi(&spec.phi, &sub_src)?;
    let w = solve_s_phi(&spec.phi, &sup_src)?;
    let x = spec.grid.nodes();
    book.nodal("sub", sub_margin(spec, &v, &sub_src)?, x);
    book.nodal("super", super_margin(spec, &w, &sup_src)?, x);
    book.nodal("order", order_margin(&v, &w), x);
    sub_bound(&mut book, spec, &v);
    let (margins, constants) = book.finish()?;
    Ok(SubSuperPair {
        sub: v,
        sup: w,
        epsilon,
        gamma: None,
        margins,
        constants,
        kink_set: Vec::new(),
        construction: "case I".into(),
    })
}

/// `v = S_φ(εmδ^{q1})`, `w = S_φ(γm)`.
pub fn build_sub_super_case_ii(spec: &ProblemSpec, epsilon: f64, gamma: f64) -> Result<SubSuperPair> {
    let c = case_ii_constants(spec)?;
    if !(epsilon > 0.0 && epsilon.is_finite() && gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Input(format!(
            "epsilon and gamma must be positive, got ({epsilon}, {gamma})"
        )));
    }
    let mut book = MarginBook::default();
    for (name, slack) in case_ii_chain(spec, &c, epsilon, gamma) {
        book.scalar(name, slack);
    }
    book.constant("K", c.k);
    book.constant("N", c.n);
    book.constant("N_omega", c.n_omega);
    book.constant("theta_under", c.theta_under);
    book.constant("epsilon_bar", c.epsilon_bar);
    book.constant("epsilon_kk", c.epsilon_kk);
    book.constant("epsilon_ew", c.epsilon_ew);
    let sub_src = spec.m_delta(c.q1)?.scale(epsilon);
    let sup_src = spec.m.scale(gamma);
    let v = solve_s_phi(&spec.phi, &sub_src)?;
    let w = solve_s_phi(&spec.phi, &sup_src)?;
    let x = spec.grid.nodes();
    book.nodal("sub", sub_margin(spec, &v, &sub_src)?, x);
    book.nodal("super", super_margin(spec, &w, &sup_src)?, x);
    book.nodal("order", order_margin(&v, &w), x);
    sub_bound(&mut book, spec, &v);
    let (margins, constants) = book.finish()?;
    Ok(SubSuperPair {
        sub: v,
        sup: w,
        epsilon,
        gamma: Some(gamma),
        margins,
        constants,
        kink_set: Vec::new(),
        construction: "case II".into(),
    })
}

/// Which of the two admissible relations between `r` and `m` is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RBranch {
    /// `r ≤ m`.
    Dominated,
    /// `m, r` bounded and `inf m > 0`.
    Bounded,
}

fn finite_extremes(h: &SampledFunction) -> Option<(f64, f64)> {
    if h.weight().left < 0.0 || h.weight().right < 0.0 {
        return None;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..h.len() {
        for v in [h.left_value(i), h.right_value(i)] {
            if !v.is_finite() {
                return None;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Some((lo, hi))
}

fn r_branch(m: &SampledFunction, r: &SampledFunction) -> Option<RBranch> {
    let n = m.len();
    let tol = 1e-12 * m.regular_sup().max(r.regular_sup());
    let dominated = (0..n).all(|i| {
        [(m.left_value(i), r.left_value(i)), (m.right_value(i), r.right_value(i))]
            .iter()
            .all(|&(mv, rv)| !(mv.is_finite() && rv.is_finite()) || rv <= mv + tol)
    });
    if dominated {
        return Some(RBranch::Dominated);
    }
    match (finite_extremes(m), finite_extremes(r)) {
        (Some((m_inf, _)), Some(_)) if m_inf > 0.0 => Some(RBranch::Bounded),
        _ => None,
    }
}

/// `K` with `φ(t) ≤ K t^p` on `(0, c_Ω]`, from a geometric sample.
fn power_ceiling(spec: &ProblemSpec, p: f64) -> Result<f64> {
    let c_omega = spec.interval().c_omega();
    let grid = geometric_grid(1e-8 * c_omega, c_omega, 161);
    let ratio = |t: f64| spec.phi.eval(t) / t.powf(p);
    let sup = grid.iter().map(|&t| ratio(t)).fold(0.0, f64::max);
    let (near, far) = (ratio(grid[0]), ratio(grid[40]));
    if !sup.is_finite() || near > SAFETY_FACTOR * far {
        return Err(Error::Precondition(format!(
            "phi(t) <= K t^{p} fails near 0: phi(t)/t^p grows to {near:e}"
        )));
    }
    Ok(SAFETY_FACTOR * sup)
}

/// Subsolution of the problem with `r`, by halving `ε` from the given value
/// until the r-aware chain and the combined nodal margin hold. The
/// supersolution is the certified solution without `r`.
pub fn adjust_sub_for_r(spec: &ProblemSpec, epsilon: f64) -> Result<SubSuperPair> {
    if !spec.has_r() {
        return match &spec.case {
            CaseSpec::I { .. } => build_sub_super_case_i(spec, epsilon),
            CaseSpec::II { .. } => {
                let (_, gamma) = pick_constants_case_ii(spec)?;
                build_sub_super_case_ii(spec, epsilon, gamma)
            }
        };
    }
    let r = spec.r.as_ref().expect("has_r");
    let h2 = spec
        .h2
        .ok_or_else(|| Error::Precondition("a nonzero r needs H2 constants t2 and M".into()))?;
    let branch = r_branch(&spec.m, r)
        .ok_or_else(|| Error::Precondition("r <= m fails and m, r are not both bounded with inf m > 0".into()))?;
    let c_omega = spec.interval().c_omega();
    let g = spec.growth;

    // ε ↦ A ε^a is the lower subsolution term, B ε the bound on φ(v) / δ^p
    let (q, p, a_coef, integral, base_chain): (f64, f64, f64, f64, Box<dyn Fn(f64) -> Vec<(&'static str, f64)> + '_>) =
        match &spec.case {
            CaseSpec::I { psi, q } => {
                let (c_psi, p) = psi
                    .is_power()
                    .ok_or_else(|| Error::Precondition("with r, case I needs a power witness psi(t) = c t^p".into()))?;
                let c = case_i_constants(spec)?;
                let a = spec.lambda * g.k1 * (c.theta_under * c.m_omega).powf(*q) * c_psi.powf(-q / p);
                let chain = move |e: f64| case_i_chain(spec, &c, e).into_iter().filter(|s| s.0 != "e0").collect();
                (*q, p, a, c.integral, Box::new(chain))
            }
            CaseSpec::II { .. } => {
                let c = case_ii_constants(spec)?;
                let a = spec.lambda * g.k1 * (c.theta_under * c.n_omega / c.k.powf(1.0 / c.p)).powf(c.q1);
                let chain = move |e: f64| {
                    case_ii_chain(spec, &c, e, f64::INFINITY)
                        .into_iter()
                        .filter(|s| s.0 == "pri" || s.0 == "kk")
                        .collect()
                };
                (c.q1, c.p, a, c.integral_q1, Box::new(chain))
            }
        };
    if !(q < p) {
        return Err(Error::Precondition(format!("the r-term needs q = {q} < p = {p}")));
    }
    let k_aau = power_ceiling(spec, p)?;
    let b_coef = h2.m * k_aau * integral * c_omega.powf(p - q);
    let (m_inf, m_sup) = finite_extremes(&spec.m).unwrap_or((0.0, f64::INFINITY));
    let r_sup = finite_extremes(r).map_or(f64::INFINITY, |e| e.1);
    let chain_r = |e: f64| match branch {
        RBranch::Dominated => a_coef * e.powf(q / p) - b_coef * e - e,
        RBranch::Bounded => m_inf * a_coef * e.powf(q / p) - r_sup * b_coef * e - m_sup * e,
    };

    let free = solve_problem(&spec.without_r()).stage("r-free supersolution")?;
    let w = free.solution.clone();
    let h = spec.m_delta(q)?;
    let x = spec.grid.nodes();
    let mut last_failure = String::new();
    let mut e = epsilon;
    for _ in 0..=MAX_HALVINGS {
        let mut book = MarginBook::default();
        for (name, slack) in base_chain(e) {
            book.scalar(name, slack);
        }
        book.scalar(
            "t2",
            match spec.phi.inverse(e * integral) {
                Ok(v) => h2.t2 - v,
                Err(_) => f64::NEG_INFINITY,
            },
        );
        book.scalar("chain_r", chain_r(e));
        if book.ok() {
            let src = h.scale(e);
            let v = solve_s_phi(&spec.phi, &src)?;
            let combined = {
                let fv = v.u.values().iter().map(|&t| spec.f_at(t)).collect::<Result<Vec<_>>>()?;
                let pv: Vec<f64> = v.u.values().iter().map(|&t| spec.phi.eval(t)).collect();
                nodal_margin(
                    |i, s| spec.lambda * side_value(&spec.m, i, s) * fv[i] - side_value(r, i, s) * pv[i],
                    |i, s| side_value(&src, i, s),
                    v.u.len(),
                )
            };
            book.nodal("sub_combined", combined, x);
            book.nodal("order", order_margin(&v, &w), x);
            book.nodal("super", r_term_margin(spec, r, &w), x);
            sub_bound(&mut book, spec, &v);
            if book.ok() {
                book.constant("K_aau", k_aau);
                book.constant("super_residual", free.final_residual);
                book.constant("initial_epsilon", epsilon);
                let (margins, constants) = book.finish()?;
                return Ok(SubSuperPair {
                    sub: v,
                    sup: w,
                    epsilon: e,
                    gamma: None,
                    margins,
                    constants,
                    kink_set: Vec::new(),
                    construction: format!("r-adjusted, {branch:?} branch"),
                });
            }
        }
        last_failure = book.finish().err().map(|e| e.to_string()).unwrap_or_default();
        e *= 0.5;
    }
    Err(Error::Construction(format!(
        "no eps >= {:e} gives an r-aware subsolution: {last_failure}",
        epsilon * 0.5f64.powi(MAX_HALVINGS as i32)
    )))
}

/// `r φ(w) ≥ 0`: the r-free solution over-satisfies the problem with `r`.
fn r_term_margin(spec: &ProblemSpec, r: &SampledFunction, w: &BvpSolution) -> (f64, usize, f64) {
    let pw: Vec<f64> = w.u.values().iter().map(|&t| spec.phi.eval(t)).collect();
    nodal_margin(|i, s| side_value(r, i, s) * pw[i], |_, _| 0.0, w.u.len())
}
