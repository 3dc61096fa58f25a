//! The solution operator `S_φ` of `−φ(v′)′ = h`, `v(a) = v(b) = 0`, its
//! support constants, and the two-sided envelope of its values.
//!
//! `S_φ(h)(x) = ∫_a^x φ⁻¹(c_h − H(y)) dy` with `H(y) = ∫_a^y h` and `c_h` the
//! unique root of `F(c) = ∫_a^b φ⁻¹(c − H)`. On each cell `z = c − H` is
//! treated as linear, for which Young's identity gives the exact integral
//!
//! ```text
//! ∫ φ⁻¹(z(y)) dy = Δy · [G(z₁) − G(z₀)] / (z₁ − z₀),   G(z) = z φ⁻¹(z) − Φ(φ⁻¹(z))
//! ```
//!
//! with `Φ` a primitive of `φ`. This stays accurate where `φ⁻¹` is not
//! differentiable at `0`, which the trapezoid rule is not. `F` and `u` share
//! the rule, so `u(b) = F(c_h)` holds by construction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcgrid::{cumulative_integral, integral_to, integrate, Grid, SampledFunction};
use crate::homeo::Homeomorphism;
use crate::roots::illinois;

/// Relative width below which a cell falls back to the trapezoid rule,
/// avoiding cancellation in the Young difference quotient.
const YOUNG_MIN_RELATIVE_DZ: f64 = 1e-4;
const C_MAX_ITER: usize = 200;
/// Boundary defect allowed relative to `1 + sup|u|`.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;
/// Zero test for support detection, relative to `sup|h|`.
pub const SUPPORT_ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BvpSolution {
    pub u: SampledFunction,
    pub uprime: SampledFunction,
    pub c_h: f64,
    /// `sup |φ(u′) − (c_h − H)|` over the nodes.
    pub residual_sup: f64,
    /// `H = ∫_a^x h` at the nodes.
    pub h_cumulative: SampledFunction,
    pub h_integral: f64,
}

impl BvpSolution {
    /// `c̃_h`, the constant for which the profile vanishes at `a` when
    /// integrated from `b`.
    pub fn c_tilde(&self) -> f64 {
        self.h_integral - self.c_h
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `(u′(a), u′(b))`.
    pub fn boundary_slopes(&self) -> (f64, f64) {
        let n = self.uprime.len();
        (self.uprime.value(0), self.uprime.value(n - 1))
    }

    /// `φ(u′) − (c_h − H)` at every node.
    pub fn defect(&self, phi: &Homeomorphism) -> Vec<f64> {
        (0..self.u.len())
            .map(|i| phi.eval(self.uprime.value(i)) - (self.c_h - self.h_cumulative.value(i)))
            .collect()
    }
}

/// Per-cell quadrature of `∫ φ⁻¹(z)` for `z` linear between node values.
struct CellRule<'a> {
    phi: &'a Homeomorphism,
    closed_primitive: bool,
}

impl<'a> CellRule<'a> {
    fn new(phi: &'a Homeomorphism) -> Self {
        CellRule {
            phi,
            closed_primitive: phi.has_closed_primitive(),
        }
    }

    /// `x = φ⁻¹(z)` and, when closed, `Φ(x)`.
    fn node(&self, z: f64) -> Result<(f64, f64)> {
        let x = self.phi.inverse(z)?;
        let p = if self.closed_primitive {
            self.phi.primitive(x)
        } else {
            f64::NAN
        };
        Ok((x, p))
    }

    fn cell(&self, dy: f64, z0: f64, z1: f64, n0: (f64, f64), n1: (f64, f64)) -> f64 {
        let (x0, x1) = (n0.0, n1.0);
        let dz = z1 - z0;
        if dz.abs() <= YOUNG_MIN_RELATIVE_DZ * z0.abs().max(z1.abs()) {
            return 0.5 * (x0 + x1) * dy;
        }
        let phi_integral = if self.closed_primitive {
            n1.1 - n0.1
        } else {
            self.phi.integral_between(x0, x1)
        };
        dy * (z1 * x1 - z0 * x0 - phi_integral) / dz
    }
}

/// `F(c) = ∫_a^b φ⁻¹(c − H)`; fills `u` and `u′` when asked.
fn profile(
    rule: &CellRule<'_>,
    nodes: &[f64],
    big_h: &[f64],
    c: f64,
    mut out: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
) -> Result<f64> {
    let n = nodes.len();
    let mut z_prev = c - big_h[0];
    let mut node_prev = rule.node(z_prev)?;
    let mut acc = 0.0;
    if let Some((u, up)) = out.as_mut() {
        u.clear();
        up.clear();
        u.push(0.0);
        up.push(node_prev.0);
    }
    for i in 1..n {
        let z = c - big_h[i];
        let node = rule.node(z)?;
        acc += rule.cell(nodes[i] - nodes[i - 1], z_prev, z, node_prev, node);
        if let Some((u, up)) = out.as_mut() {
            u.push(acc);
            up.push(node.0);
        }
        z_prev = z;
        node_prev = node;
    }
    if !acc.is_finite() {
        return Err(Error::Numerical(format!("F({c}) is not finite")));
    }
    Ok(acc)
}

/// `S_φ(h)`.
pub fn solve_s_phi(phi: &Homeomorphism, h: &SampledFunction) -> Result<BvpSolution> {
    let big_h = cumulative_integral(h)?;
    let grid = h.grid();
    let nodes = grid.nodes();
    let hv = big_h.values();
    let total = hv[hv.len() - 1];
    let rule = CellRule::new(phi);
    let (h_min, h_max) = hv
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

    let f = |c: f64| profile(&rule, nodes, &hv, c, None);
    let c = if h_max - h_min <= f64::MIN_POSITIVE {
        h_min
    } else {
        let (f_lo, f_hi) = (f(h_min)?, f(h_max)?);
        let mut failure = None;
        // never looser than 1e-12 (1 + |∫h|); scale-relative for tiny sources
        let tol = (1e-12 * (1.0 + total.abs())).min(1e-13 * (h_max - h_min));
        let floor = |lo: f64, hi: f64| 4.0 * f64::EPSILON * lo.abs().max(hi.abs());
        let bracket = illinois(
            |c| match f(c) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            h_min,
            h_max,
            f_lo,
            f_hi,
            |lo, hi| tol.max(floor(lo, hi)),
            C_MAX_ITER,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if !bracket.converged {
            return Err(Error::Numerical(format!(
                "c_h search did not converge in {C_MAX_ITER} iterations: bracket [{}, {}]",
                bracket.lo, bracket.hi
            )));
        }
        let (lo, hi, flo, fhi) = (bracket.lo, bracket.hi, bracket.f_lo, bracket.f_hi);
        // final secant step inside the converged bracket
        if hi > lo && flo.is_finite() && fhi.is_finite() && fhi != flo {
            (lo * fhi - hi * flo) / (fhi - flo)
        } else {
            bracket.best()
        }
    };

    let mut u = Vec::with_capacity(nodes.len());
    let mut up = Vec::with_capacity(nodes.len());
    let end = profile(&rule, nodes, &hv, c, Some((&mut u, &mut up)))?;
    let sup_u = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if end.abs() > BOUNDARY_TOLERANCE * (1.0 + sup_u) {
        return Err(Error::Numerical(format!(
            "boundary defect |u(b)| = {:e} exceeds tolerance at c_h = {c}",
            end.abs()
        )));
    }
    let residual_sup = up
        .iter()
        .zip(&hv)
        .map(|(&x, &hh)| (phi.eval(x) - (c - hh)).abs())
        .fold(0.0, f64::max);
    Ok(BvpSolution {
        u: SampledFunction::from_values(grid, u)?,
        uprime: SampledFunction::from_values(grid, up)?,
        c_h: c,
        residual_sup,
        h_cumulative: big_h,
        h_integral: total,
    })
}

/// `sup |φ(u′(x)) − (c_h − H(x))|` with `H` recomputed from `h`.
pub fn residual_of(phi: &Homeomorphism, h: &SampledFunction, candidate: &BvpSolution) -> Result<f64> {
    if candidate.uprime.grid() != h.grid() {
        return Err(Error::Input("candidate and h live on different grids".into()));
    }
    let big_h = cumulative_integral(h)?;
    Ok((0..h.len())
        .map(|i| (phi.eval(candidate.uprime.value(i)) - (candidate.c_h - big_h.value(i))).abs())
        .fold(0.0, f64::max))
}

/// Defect of the first-order form `φ(u′)(x) = φ(u′(a)) − ∫_a^x source`.
pub fn first_order_defect(phi: &Homeomorphism, uprime: &SampledFunction, source: &SampledFunction) -> Result<f64> {
    let big_h = cumulative_integral(source)?;
    let c = phi.eval(uprime.value(0));
    Ok((0..uprime.len())
        .map(|i| (phi.eval(uprime.value(i)) - (c - big_h.value(i))).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportBounds {
    pub alpha: f64,
    pub beta: f64,
    pub theta_under: f64,
    pub theta_bar: f64,
}

/// `α_h`, `β_h`, `θ̲_h`, `θ̄_h` of a nonnegative `h ≢ 0`.
pub fn support_bounds(h: &SampledFunction) -> Result<SupportBounds> {
    let left = h.regular_left();
    let right = h.regular_right();
    if left.iter().chain(right).any(|&v| v < 0.0) {
        return Err(Error::Domain("support bounds need h >= 0".into()));
    }
    let sup = h.regular_sup();
    if sup == 0.0 {
        return Err(Error::Domain("support bounds need h not identically zero".into()));
    }
    let zero = |v: f64| v <= SUPPORT_ZERO_TOLERANCE * sup;
    let n = h.len();
    let cell_zero = |j: usize| zero(right[j]) && zero(left[j + 1]);
    let lead = (0..n - 1).take_while(|&j| cell_zero(j)).count();
    let trail = (0..n - 1).rev().take_while(|&j| cell_zero(j)).count();
    let grid = h.grid();
    let iv = grid.interval();
    let alpha = grid.x(lead);
    let beta = grid.x(n - 1 - trail);
    if !(alpha < beta) {
        return Err(Error::Domain("h vanishes on every cell".into()));
    }
    Ok(SupportBounds {
        alpha,
        beta,
        theta_under: (1.0 / (beta - iv.a)).min(1.0 / (iv.b - alpha)),
        theta_bar: 0.5 * (alpha + beta),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEnvelope {
    pub lower: SampledFunction,
    pub upper: SampledFunction,
    /// `min{∫_a^θ̄ φ⁻¹(∫_y^θ̄ h) dy, ∫_θ̄^b φ⁻¹(∫_θ̄^y h) dy}`.
    pub m_omega_constant: f64,
    /// The same minimum with `s ↦ s^{1/p}` in place of `φ⁻¹`.
    pub n_omega_constant: Option<f64>,
    /// `φ⁻¹(∫_a^b h)`.
    pub upper_constant: f64,
    pub support: SupportBounds,
}

/// `∫_a^θ̄ φ⁻¹(H(θ̄) − H(y)) dy` and `∫_θ̄^b φ⁻¹(H(y) − H(θ̄)) dy`.
fn envelope_integrals(
    phi: &Homeomorphism,
    h: &SampledFunction,
    big_h: &SampledFunction,
    theta: f64,
) -> Result<(f64, f64)> {
    let grid = h.grid();
    let rule = CellRule::new(phi);
    let h_theta = integral_to(h, big_h, theta);
    let k = grid.cell_of(theta);
    let n = grid.len();

    let left = {
        let mut acc = 0.0;
        let mut z_prev = 0.0;
        let mut node_prev = rule.node(0.0)?;
        let mut y_prev = theta;
        for i in (0..=k).rev() {
            let y = grid.x(i);
            if y >= theta {
                continue;
            }
            let z = h_theta - big_h.value(i);
            let node = rule.node(z)?;
            acc += rule.cell(y_prev - y, z_prev, z, node_prev, node);
            z_prev = z;
            node_prev = node;
            y_prev = y;
        }
        acc
    };
    let right = {
        let mut acc = 0.0;
        let mut z_prev = 0.0;
        let mut node_prev = rule.node(0.0)?;
        let mut y_prev = theta;
        for i in k..n {
            let y = grid.x(i);
            if y <= theta {
                continue;
            }
            let z = big_h.value(i) - h_theta;
            let node = rule.node(z)?;
            acc += rule.cell(y - y_prev, z_prev, z, node_prev, node);
            z_prev = z;
            node_prev = node;
            y_prev = y;
        }
        acc
    };
    Ok((left, right))
}

/// `M_Ω` for `φ` and `h`, together with the support constants.
pub fn m_omega_constant(phi: &Homeomorphism, h: &SampledFunction) -> Result<(f64, SupportBounds)> {
    let support = support_bounds(h)?;
    let big_h = cumulative_integral(h)?;
    let (l, r) = envelope_integrals(phi, h, &big_h, support.theta_bar)?;
    Ok((l.min(r), support))
}

/// `N_Ω` for exponent `p`; `s^{1/p}` is the inverse of the `(p+1)`-Laplacian.
pub fn n_omega_constant(h: &SampledFunction, p: f64) -> Result<f64> {
    let phi = Homeomorphism::p_laplacian(p + 1.0)?;
    Ok(m_omega_constant(&phi, h)?.0)
}

/// Lower and upper envelopes of `S_φ(h)` for `h ≥ 0`, `h ≢ 0`.
pub fn bound_envelope(phi: &Homeomorphism, h: &SampledFunction) -> Result<BoundEnvelope> {
    let (m_omega, support) = m_omega_constant(phi, h)?;
    let total = integrate(h)?;
    let upper_constant = phi.inverse(total)?;
    let grid = h.grid();
    let iv = grid.interval();
    let delta: Vec<f64> = grid.nodes().iter().map(|&x| iv.delta(x)).collect();
    let lower_c = support.theta_under * m_omega;
    Ok(BoundEnvelope {
        lower: SampledFunction::from_values(grid, delta.iter().map(|d| lower_c * d).collect())?,
        upper: SampledFunction::from_values(grid, delta.iter().map(|d| upper_constant * d).collect())?,
        m_omega_constant: m_omega,
        n_omega_constant: None,
        upper_constant,
        support,
    })
}

impl BoundEnvelope {
    pub fn with_n_omega(mut self, h: &SampledFunction, p: f64) -> Result<BoundEnvelope> {
        self.n_omega_constant = Some(n_omega_constant(h, p)?);
        Ok(self)
    }
}
