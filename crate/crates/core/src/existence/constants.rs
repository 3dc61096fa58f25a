//! The `ε` / `γ` constant chains of the two sublinear cases.

use serde::Serialize;

use super::{CaseSpec, ProblemSpec, SAFETY_FACTOR};
use crate::error::{Error, Result};
use crate::funcgrid::integrate;
use crate::homeo::{check_h1_prime_default, check_sublinearity_conditions, SublinearCase};
use crate::solveop::{m_omega_constant, n_omega_constant};

/// Dyadic search depth: `ε ≥ 2^{−80}`.
pub const MAX_HALVINGS: u32 = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseIConstants {
    pub q: f64,
    /// `∫ m δ^q`.
    pub integral: f64,
    /// `ε̄ = φ(t̄/c_Ω) / ∫ m δ^q`.
    pub epsilon_bar: f64,
    pub m_omega: f64,
    pub theta_under: f64,
    /// `max{1/(λk₁(θ̲M_Ω)^q), λk₂ φ⁻¹(∫mδ^q)^q}`.
    pub big_m: f64,
    /// `ψ(t₁)`.
    pub psi_t1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseIIConstants {
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    /// `φ(t) ≤ K t^p` on `[0, 1]`.
    pub k: f64,
    /// `φ(c_Ω t) ≤ N φ(t)` for `t ≥ 1`.
    pub n: f64,
    /// `∫ m δ^{q1}`.
    pub integral_q1: f64,
    pub integral_m: f64,
    pub epsilon_bar: f64,
    /// `φ(1) / ∫ m δ^{q1}`, keeping every argument of `φ⁻¹` where the
    /// power lower bound on `φ⁻¹` holds.
    pub epsilon_kk: f64,
    /// `(λk₁(θ̲N_Ω/K^{1/p})^{q1})^{p/(p−q1)}`.
    pub epsilon_ew: f64,
    pub n_omega: f64,
    pub theta_under: f64,
}

fn weight_precondition(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Precondition(format!("m must be nonnegative and nontrivial: {msg}")),
        e => e,
    }
}

pub fn case_i_constants(spec: &ProblemSpec) -> Result<CaseIConstants> {
    let CaseSpec::I { psi, q } = &spec.case else {
        return Err(Error::Precondition("case I constants need a case I problem".into()));
    };
    let q = *q;
    let h = spec.m_delta(q)?;
    let (m_omega, support) = m_omega_constant(&spec.phi, &h).map_err(weight_precondition)?;
    let integral = integrate(&h)?;
    let c_omega = spec.interval().c_omega();
    let g = spec.growth;
    let lambda = spec.lambda;
    let big_m = (1.0 / (lambda * g.k1 * (support.theta_under * m_omega).powf(q)))
        .max(lambda * g.k2 * spec.phi.inverse(integral)?.powf(q));
    Ok(CaseIConstants {
        q,
        integral,
        epsilon_bar: spec.phi.eval(g.t_bar / c_omega) / integral,
        m_omega,
        theta_under: support.theta_under,
        big_m,
        psi_t1: psi.eval(psi.t1),
    })
}

/// Slacks of the case I chain at `ε`: `t̄/c_Ω − φ⁻¹(ε∫mδ^q)`,
/// `min{1, ε̄, ψ(t₁)} − ε` and `ψ⁻¹(ε)^q − Mε`.
pub fn case_i_chain(spec: &ProblemSpec, c: &CaseIConstants, epsilon: f64) -> Vec<(&'static str, f64)> {
    let CaseSpec::I { psi, q } = &spec.case else {
        return Vec::new();
    };
    let c_omega = spec.interval().c_omega();
    let pri = match spec.phi.inverse(epsilon * c.integral) {
        Ok(x) => spec.growth.t_bar / c_omega - x,
        Err(_) => f64::NEG_INFINITY,
    };
    let e2 = 1f64.min(c.epsilon_bar).min(c.psi_t1) - epsilon;
    let e0 = match psi.inverse(epsilon) {
        Ok(s) => s.powf(*q) - c.big_m * epsilon,
        Err(_) => f64::NEG_INFINITY,
    };
    vec![("pri", pri), ("e2", e2), ("e0", e0)]
}

/// Largest `ε = 2^{−k}`, `k ≤ 80`, meeting the case I chain, with the
/// `Mε ≤ ψ⁻¹(ε)^q` link also holding at every smaller dyadic.
pub fn pick_epsilon_case_i(spec: &ProblemSpec) -> Result<f64> {
    let CaseSpec::I { psi, q } = &spec.case else {
        return Err(Error::Precondition("case I constants need a case I problem".into()));
    };
    let nu = check_sublinearity_conditions(SublinearCase::I { psi, q: *q })?;
    if !nu.verdict.is_corroborated() {
        return Err(Error::HypothesisViolation(format!(
            "liminf t^q/psi(t) = inf fails numerically: {}",
            nu.detail
        )));
    }
    let c = case_i_constants(spec)?;
    let eps = |k: u32| 0.5f64.powi(k as i32);
    let chain = |k: u32| case_i_chain(spec, &c, eps(k));
    let slack = |k: u32, name: &str| chain(k).iter().find(|s| s.0 == name).map_or(f64::NEG_INFINITY, |s| s.1);

    // smallest k from which the e0 link holds for every deeper dyadic
    let mut k_e0 = None;
    for k in (0..=MAX_HALVINGS).rev() {
        if slack(k, "e0") >= 0.0 {
            k_e0 = Some(k);
        } else {
            break;
        }
    }
    let k_e0 = k_e0.ok_or_else(|| {
        Error::HypothesisViolation(format!(
            "M eps <= psi^-1(eps)^q fails down to eps = 2^-{MAX_HALVINGS} (M = {:e})",
            c.big_m
        ))
    })?;
    let k = (k_e0..=MAX_HALVINGS)
        .find(|&k| slack(k, "pri") >= 0.0 && slack(k, "e2") >= 0.0)
        .ok_or_else(|| {
            Error::HypothesisViolation(format!(
                "no eps >= 2^-{MAX_HALVINGS} meets eps <= min(1, eps_bar = {:e}, psi(t1) = {:e})",
                c.epsilon_bar, c.psi_t1
            ))
        })?;
    Ok(eps(k))
}

fn case_ii_parameters(spec: &ProblemSpec) -> Result<(f64, f64, f64, Option<f64>, Option<f64>)> {
    let CaseSpec::II { p, q1, q2, k, n } = &spec.case else {
        return Err(Error::Precondition("case II constants need a case II problem".into()));
    };
    if !(*q1 > 0.0 && q1 < p) {
        return Err(Error::Precondition(format!("q1 = {q1} must lie in (0, p = {p})")));
    }
    if !(*q2 > 0.0 && *q2 < 1.0) {
        return Err(Error::Precondition(format!("q2 = {q2} must lie in (0, 1)")));
    }
    Ok((*p, *q1, *q2, *k, *n))
}

pub fn case_ii_constants(spec: &ProblemSpec) -> Result<CaseIIConstants> {
    let (p, q1, q2, k, n) = case_ii_parameters(spec)?;
    let c_omega = spec.interval().c_omega();
    let (k, n) = match (k, n) {
        (Some(k), Some(n)) => (k, n),
        _ => {
            let report = check_h1_prime_default(&spec.phi, p, c_omega)?;
            let measured = |name: &str| {
                report
                    .constant(name)
                    .ok_or_else(|| Error::HypothesisViolation(format!("H1' gives no {name}: {}", report.detail)))
            };
            (
                match k {
                    Some(k) => k,
                    None => SAFETY_FACTOR * measured("K")?,
                },
                match n {
                    Some(n) => n,
                    None => SAFETY_FACTOR * measured("N")?,
                },
            )
        }
    };
    let h = spec.m_delta(q1)?;
    let support = crate::solveop::support_bounds(&h).map_err(weight_precondition)?;
    let n_omega = n_omega_constant(&h, p).map_err(weight_precondition)?;
    let integral_q1 = integrate(&h)?;
    let integral_m = integrate(&spec.m)?;
    let g = spec.growth;
    let base = spec.lambda * g.k1 * (support.theta_under * n_omega / k.powf(1.0 / p)).powf(q1);
    Ok(CaseIIConstants {
        p,
        q1,
        q2,
        k,
        n,
        integral_q1,
        integral_m,
        epsilon_bar: spec.phi.eval(g.t_bar / c_omega) / integral_q1,
        epsilon_kk: spec.phi.eval(1.0) / integral_q1,
        epsilon_ew: base.powf(p / (p - q1)),
        n_omega,
        theta_under: support.theta_under,
    })
}

/// Slacks of the case II chain at `(ε, γ)`.
pub fn case_ii_chain(spec: &ProblemSpec, c: &CaseIIConstants, epsilon: f64, gamma: f64) -> Vec<(&'static str, f64)> {
    let c_omega = spec.interval().c_omega();
    let g = spec.growth;
    let lambda = spec.lambda;
    let pri = match spec.phi.inverse(epsilon * c.integral_q1) {
        Ok(x) => g.t_bar / c_omega - x,
        Err(_) => f64::NEG_INFINITY,
    };
    let kk = spec.phi.eval(1.0) - epsilon * c.integral_q1;
    let ew = lambda * g.k1 * (c.theta_under * c.n_omega / c.k.powf(1.0 / c.p)).powf(c.q1) * epsilon.powf(c.q1 / c.p)
        - epsilon;
    let gaio_phi1 = gamma * c.integral_m - spec.phi.eval(1.0);
    let gaio = gamma - lambda * g.k2 * (c.n * gamma * c.integral_m).powf(c.q2);
    let gamma_order = gamma - epsilon * c_omega.powf(c.q1);
    vec![
        ("pri", pri),
        ("kk", kk),
        ("ew", ew),
        ("gaio_phi1", gaio_phi1),
        ("gaio", gaio),
        ("gamma_order", gamma_order),
    ]
}

/// `ε` is the largest power of two under `min{ε̄, φ(1)/∫mδ^{q1}, ε_ew}`;
/// `γ` the smallest power of two over the `γ` floor.
pub fn pick_constants_case_ii(spec: &ProblemSpec) -> Result<(f64, f64)> {
    let c = case_ii_constants(spec)?;
    let bound = c.epsilon_bar.min(c.epsilon_kk).min(c.epsilon_ew);
    if !(bound.is_finite() && bound > 0.0) {
        return Err(Error::Numerical(format!(
            "epsilon bound {bound} is not a positive real"
        )));
    }
    let epsilon = power_of_two_below(bound);
    let c_omega = spec.interval().c_omega();
    let floor = (spec.phi.eval(1.0) / c.integral_m)
        .max((spec.lambda * spec.growth.k2 * (c.n * c.integral_m).powf(c.q2)).powf(1.0 / (1.0 - c.q2)))
        .max(epsilon * c_omega.powf(c.q1));
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::Numerical(format!("gamma floor {floor} is not a positive real")));
    }
    Ok((epsilon, power_of_two_above(floor)))
}

pub(crate) fn power_of_two_below(x: f64) -> f64 {
    let mut e = 2f64.powi(x.log2().floor() as i32);
    while e > x {
        e *= 0.5;
    }
    while 2.0 * e <= x {
        e *= 2.0;
    }
    e
}

pub(crate) fn power_of_two_above(x: f64) -> f64 {
    let mut e = 2f64.powi(x.log2().ceil() as i32);
    while e < x {
        e *= 2.0;
    }
    while 0.5 * e >= x {
        e *= 0.5;
    }
    e
}
