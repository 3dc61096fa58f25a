//! Constructive existence for `−φ(u′)′ + rφ(u) = λ m f(u)`, `u = 0` on the
//! boundary: explicit sub/supersolution pairs built from `S_φ`, a clamped
//! fixed-point iteration between them, and the residual certificate of the
//! result.

mod constants;
mod iterate;
mod pairs;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::funcgrid::{Grid, Interval, SampledFunction};
use crate::homeo::{
    check_f1, check_f1_prime, check_h1_default, check_h1_prime_default, check_h2_default,
    check_sublinearity_conditions, default_f_grid, GrowthConstants, GrowthWitness, Homeomorphism, HypothesisReport,
    SublinearCase,
};
use crate::solveop::BvpSolution;

pub use constants::{
    case_i_chain, case_i_constants, case_ii_chain, case_ii_constants, pick_constants_case_ii, pick_epsilon_case_i,
    CaseIConstants, CaseIIConstants, MAX_HALVINGS,
};
pub use iterate::{
    iterate_between, lambda_sweep, solve_problem, solve_sign_changing, SweepRow, SweepTable, ITERATION_CAP,
    RESIDUAL_TOLERANCE,
};
pub use pairs::{adjust_sub_for_r, build_sub_super_case_i, build_sub_super_case_ii, RBranch};

/// Safety factor applied to measured floors and ceilings.
pub const SAFETY_FACTOR: f64 = 1.05;
/// Upper end of the sample on which F1 / F1′ are checked.
pub const F_CHECK_MAX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum CaseSpec {
    /// H1 with witness `ψ`, F1 with exponent `q`, and `liminf t^q/ψ(t) = ∞`.
    I { psi: GrowthWitness, q: f64 },
    /// H1′ with exponent `p`, F1′ with `q1 ∈ (0,p)`, `q2 ∈ (0,1)`. `k` and `n`
    /// default to the measured H1′ constants times the safety factor.
    II {
        p: f64,
        q1: f64,
        q2: f64,
        k: Option<f64>,
        n: Option<f64>,
    },
}

impl CaseSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CaseSpec::I { .. } => "I",
            CaseSpec::II { .. } => "II",
        }
    }
}

/// H2 constants: `φ(tx) ≤ Mφ(t)φ(x)` on `[0, t2] × [0, c_Ω]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H2Witness {
    pub t2: f64,
    pub m: f64,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub phi: Homeomorphism,
    pub f: Expr,
    pub growth: GrowthConstants,
    pub m: SampledFunction,
    pub r: Option<SampledFunction>,
    pub lambda: f64,
    pub case: CaseSpec,
    pub h2: Option<H2Witness>,
}

impl ProblemSpec {
    pub fn new(
        phi: Homeomorphism,
        f: Expr,
        growth: GrowthConstants,
        m: SampledFunction,
        lambda: f64,
        case: CaseSpec,
    ) -> Result<ProblemSpec> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Input(format!("lambda must be positive, got {lambda}")));
        }
        if !(growth.k1 > 0.0 && growth.k2 > 0.0 && growth.t_bar > 0.0) {
            return Err(Error::Input("growth constants k1, k2, t_bar must be positive".into()));
        }
        if let CaseSpec::II { k, n, .. } = &case {
            if k.is_some_and(|k| !(k > 0.0)) || n.is_some_and(|n| !(n > 0.0)) {
                return Err(Error::Input("K and N must be positive".into()));
            }
        }
        Ok(ProblemSpec {
            grid: m.grid().clone(),
            phi,
            f,
            growth,
            m,
            r: None,
            lambda,
            case,
            h2: None,
        })
    }

    pub fn with_r(mut self, r: SampledFunction) -> Result<ProblemSpec> {
        if r.grid() != &self.grid {
            return Err(Error::Input("r and m must share a grid".into()));
        }
        if !r.is_nonnegative() {
            return Err(Error::Domain("r must be nonnegative".into()));
        }
        self.r = Some(r);
        Ok(self)
    }

    pub fn with_h2(mut self, t2: f64, m: f64) -> Result<ProblemSpec> {
        if !(t2 > 0.0 && m > 0.0) {
            return Err(Error::Input("H2 constants t2 and M must be positive".into()));
        }
        self.h2 = Some(H2Witness { t2, m });
        Ok(self)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<ProblemSpec> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Input(format!("lambda must be positive, got {lambda}")));
        }
        let mut s = self.clone();
        s.lambda = lambda;
        Ok(s)
    }

    pub fn without_r(&self) -> ProblemSpec {
        let mut s = self.clone();
        s.r = None;
        s
    }

    pub fn interval(&self) -> Interval {
        self.grid.interval()
    }

    /// `r` is present and not negligible.
    pub fn has_r(&self) -> bool {
        self.r.as_ref().is_some_and(|r| !r.is_negligible(0.0))
    }

    /// `f(t)` for `t ≥ 0`; roundoff-negative arguments are read as `0`.
    pub fn f_at(&self, t: f64) -> Result<f64> {
        let v = self.f.eval_checked(t.max(0.0))?;
        if !v.is_finite() {
            return Err(Error::Numerical(format!("f({t}) = {v}")));
        }
        Ok(v)
    }

    /// Reports for the declared case, plus H2 when `r` is present.
    pub fn hypothesis_reports(&self) -> Result<Vec<HypothesisReport>> {
        let c_omega = self.interval().c_omega();
        let f = |t: f64| self.f.eval(t);
        let grid = default_f_grid(F_CHECK_MAX);
        let mut out = Vec::new();
        match &self.case {
            CaseSpec::I { psi, q } => {
                out.push(check_h1_default(&self.phi, psi)?);
                out.push(check_f1(&f, self.growth, *q, &grid)?);
                out.push(check_sublinearity_conditions(SublinearCase::I { psi, q: *q })?);
            }
            CaseSpec::II { p, q1, q2, .. } => {
                out.push(check_h1_prime_default(&self.phi, *p, c_omega)?);
                out.push(check_f1_prime(&f, &self.phi, self.growth, *q1, *q2, &grid)?);
                out.push(check_sublinearity_conditions(SublinearCase::II {
                    p: *p,
                    q1: *q1,
                    q2: *q2,
                })?);
            }
        }
        if self.has_r() {
            let w = self
                .h2
                .ok_or_else(|| Error::Precondition("a nonzero r needs H2 constants t2 and M".into()))?;
            out.push(check_h2_default(&self.phi, w.t2, w.m, c_omega)?);
        }
        Ok(out)
    }

    /// All reports, or a hypothesis-violation error naming the first failure.
    pub fn require_hypotheses(&self) -> Result<Vec<HypothesisReport>> {
        let reports = self.hypothesis_reports()?;
        if let Some(bad) = reports.iter().find(|r| !r.verdict.is_corroborated()) {
            return Err(Error::HypothesisViolation(format!(
                "{:?} not corroborated for case {}: {}",
                bad.hypothesis,
                self.case.name(),
                bad.detail
            )));
        }
        Ok(reports)
    }

    /// `m δ^e` on the grid.
    pub fn m_delta(&self, e: f64) -> Result<SampledFunction> {
        if e == 0.0 {
            return Ok(self.m.clone());
        }
        self.m.mul(&SampledFunction::delta_power(&self.grid, e)?)
    }

    /// `λ m f(u) − r φ(u)` for nodal `u`.
    pub fn source(&self, u: &[f64]) -> Result<SampledFunction> {
        let fu = u.iter().map(|&t| self.f_at(t)).collect::<Result<Vec<_>>>()?;
        let main = self.m.mul_nodal(&fu)?.scale(self.lambda);
        match &self.r {
            Some(r) if self.has_r() => {
                let pu: Vec<f64> = u.iter().map(|&t| self.phi.eval(t)).collect();
                main.sub(&r.mul_nodal(&pu)?)
            }
            _ => Ok(main),
        }
    }
}

/// One-sided slopes of a subsolution at a point where it is only continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kink {
    pub x: f64,
    pub left_slope: f64,
    pub right_slope: f64,
}

impl Kink {
    /// `v′(τ⁻) < v′(τ⁺)`.
    pub fn holds(&self) -> bool {
        self.left_slope < self.right_slope
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubSuperPair {
    #[serde(skip)]
    pub sub: BvpSolution,
    #[serde(skip)]
    pub sup: BvpSolution,
    pub epsilon: f64,
    pub gamma: Option<f64>,
    /// Inequality name to its smallest slack.
    pub margins: BTreeMap<String, f64>,
    /// Constants of the construction that are not inequalities.
    pub constants: BTreeMap<String, f64>,
    pub kink_set: Vec<Kink>,
    pub construction: String,
}

impl SubSuperPair {
    /// A pair with no recorded margins, for callers that supply their own.
    pub fn from_parts(sub: BvpSolution, sup: BvpSolution, epsilon: f64) -> Result<SubSuperPair> {
        if sub.grid() != sup.grid() {
            return Err(Error::Input("sub and super live on different grids".into()));
        }
        Ok(SubSuperPair {
            sub,
            sup,
            epsilon,
            gamma: None,
            margins: BTreeMap::new(),
            constants: BTreeMap::new(),
            kink_set: Vec::new(),
            construction: "supplied".into(),
        })
    }

    pub fn margin(&self, name: &str) -> Option<f64> {
        self.margins.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceCertificate {
    pub lambda: f64,
    pub pair: SubSuperPair,
    #[serde(skip)]
    pub solution: BvpSolution,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_step: f64,
    pub in_positive_cone: bool,
    /// `(u′(a), u′(b))`.
    pub slopes: (f64, f64),
    /// `min(u − sub)` and `min(super − u)` over the nodes.
    pub sandwich_gaps: (f64, f64),
    pub f_monotone: bool,
    /// Relaxation weight in use at convergence; `1` is the plain iteration.
    pub relaxation: f64,
    pub warnings: Vec<String>,
}

impl ExistenceCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }
}

/// Smallest slack of `lhs ≥ rhs` over interior nodes and both one-sided
/// values, and the magnitude scale of the compared terms.
pub(crate) fn nodal_margin(
    lhs: impl Fn(usize, Side) -> f64,
    rhs: impl Fn(usize, Side) -> f64,
    n: usize,
) -> (f64, usize, f64) {
    let mut worst = (f64::INFINITY, 0usize);
    let mut scale: f64 = 0.0;
    for i in 1..n - 1 {
        for side in [Side::Left, Side::Right] {
            let (l, r) = (lhs(i, side), rhs(i, side));
            scale = scale.max(l.abs()).max(r.abs());
            if l - r < worst.0 {
                worst = (l - r, i);
            }
        }
    }
    (worst.0, worst.1, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Left,
    Right,
}

pub(crate) fn side_value(h: &SampledFunction, i: usize, side: Side) -> f64 {
    match side {
        Side::Left => h.left_value(i),
        Side::Right => h.right_value(i),
    }
}

/// Relative tolerance on nodal margins.
pub const MARGIN_TOLERANCE: f64 = 1e-9;
