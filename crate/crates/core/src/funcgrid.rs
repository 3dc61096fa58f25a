//! Discrete functions on an interval: grids, sampled functions with jump
//! and endpoint-singularity support, quadrature, and norms.
//!
//! A [`SampledFunction`] stores a *regular part* `g` at every node, as a pair
//! of one-sided limits so that jumps located at nodes are represented
//! exactly, together with an [`EndpointWeight`] `(σa, σb)`. The represented
//! function is
//!
//! ```text
//! h(x) = g(x) · (x − a)^σa · (b − x)^σb
//! ```
//!
//! with `g` linear on each cell. Integrals use product integration against
//! the singular factor of the nearer endpoint, which reduces to the
//! composite trapezoid rule when both exponents vanish.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Interval> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Input(format!("invalid interval ({a}, {b})")));
        }
        Ok(Interval { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Half-length, the maximum of the distance to the boundary.
    pub fn c_omega(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// Distance from `x` to the boundary.
    pub fn delta(&self, x: f64) -> f64 {
        (x - self.a).min(self.b - x)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }
}

/// Default node count for uniform grids.
pub const DEFAULT_GRID_N: usize = 2049;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    interval: Interval,
    nodes: Arc<[f64]>,
}

impl Grid {
    pub fn uniform(interval: Interval, n: usize) -> Result<Grid> {
        Grid::with_breakpoints(interval, n, &[])
    }

    /// Uniform grid whose nearest nodes are moved onto each breakpoint.
    pub fn with_breakpoints(interval: Interval, n: usize, breakpoints: &[f64]) -> Result<Grid> {
        if n < 3 {
            return Err(Error::Input(format!("grid needs at least 3 nodes, got {n}")));
        }
        let Interval { a, b } = interval;
        let dx = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|k| a + k as f64 * dx).collect();
        nodes[n - 1] = b;
        let mut pinned = vec![false; n];
        for &bp in breakpoints {
            if !(bp > a && bp < b) {
                return Err(Error::Input(format!("breakpoint {bp} is not interior to ({a}, {b})")));
            }
            let k = (((bp - a) / dx).round() as usize).clamp(1, n - 2);
            if pinned[k] {
                if nodes[k] == bp {
                    continue;
                }
                return Err(Error::Input(format!(
                    "breakpoints closer than the grid spacing near {bp}; refine the grid"
                )));
            }
            nodes[k] = bp;
            pinned[k] = true;
        }
        Grid::from_nodes(interval, nodes)
    }

    pub fn from_nodes(interval: Interval, nodes: Vec<f64>) -> Result<Grid> {
        if nodes.len() < 3 {
            return Err(Error::Input("grid needs at least 3 nodes".into()));
        }
        if nodes[0] != interval.a || nodes[nodes.len() - 1] != interval.b {
            return Err(Error::Input("grid endpoints must equal the interval endpoints".into()));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Input("grid nodes must be strictly increasing".into()));
        }
        Ok(Grid {
            interval,
            nodes: nodes.into(),
        })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Index of the node equal to `x`, if any.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.total_cmp(&x)).ok()
    }

    /// Index of the node nearest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let i = self.cell_of(x);
        if (x - self.nodes[i]).abs() <= (self.nodes[i + 1] - x).abs() {
            i
        } else {
            i + 1
        }
    }

    /// Index `i` of the cell `[x_i, x_{i+1}]` containing `x` (clamped).
    pub fn cell_of(&self, x: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Nodes `i0..=i1` as a grid on `(x_i0, x_i1)`.
    pub fn restrict(&self, i0: usize, i1: usize) -> Result<Grid> {
        if i1 >= self.len() || i0 + 2 > i1 {
            return Err(Error::Input(format!("invalid restriction {i0}..={i1}")));
        }
        let interval = Interval::new(self.nodes[i0], self.nodes[i1])?;
        Grid::from_nodes(interval, self.nodes[i0..=i1].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Expression,
    Piecewise,
    Samples,
}

/// Exponents of the endpoint power factors `(x − a)^left · (b − x)^right`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EndpointWeight {
    pub left: f64,
    pub right: f64,
}

impl EndpointWeight {
    pub const NONE: EndpointWeight = EndpointWeight { left: 0.0, right: 0.0 };

    pub fn is_none(&self) -> bool {
        self.left == 0.0 && self.right == 0.0
    }

    fn factor(&self, iv: Interval, x: f64) -> f64 {
        endpoint_power(x - iv.a, self.left) * endpoint_power(iv.b - x, self.right)
    }
}

fn endpoint_power(d: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else {
        d.max(0.0).powf(sigma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    left: Vec<f64>,
    right: Vec<f64>,
    weight: EndpointWeight,
    provenance: Provenance,
}

impl SampledFunction {
    /// Continuous function from node values.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<SampledFunction> {
        SampledFunction::from_limits(grid, values.clone(), values, EndpointWeight::NONE, Provenance::Samples)
    }

    /// Function with separate one-sided limits at every node.
    pub fn from_limits(
        grid: &Grid,
        left: Vec<f64>,
        right: Vec<f64>,
        weight: EndpointWeight,
        provenance: Provenance,
    ) -> Result<SampledFunction> {
        if left.len() != grid.len() || right.len() != grid.len() {
            return Err(Error::Input(format!(
                "sample count {} does not match grid size {}",
                left.len().max(right.len()),
                grid.len()
            )));
        }
        if let Some(i) = left.iter().chain(&right).position(|v| !v.is_finite()) {
            let i = i % grid.len();
            return Err(Error::Input(format!(
                "non-finite sample at x = {} (declare endpoint singularities instead)",
                grid.x(i)
            )));
        }
        if weight.left <= -1.0 || weight.right <= -1.0 {
            return Err(Error::Input(format!(
                "endpoint exponents must exceed -1 for integrability, got ({}, {})",
                weight.left, weight.right
            )));
        }
        Ok(SampledFunction {
            grid: grid.clone(),
            left,
            right,
            weight,
            provenance,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<SampledFunction> {
        let values: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
        let mut s = SampledFunction::from_values(grid, values)?;
        s.provenance = Provenance::Expression;
        Ok(s)
    }

    pub fn constant(grid: &Grid, c: f64) -> SampledFunction {
        SampledFunction {
            grid: grid.clone(),
            left: vec![c; grid.len()],
            right: vec![c; grid.len()],
            weight: EndpointWeight::NONE,
            provenance: Provenance::Expression,
        }
    }

    pub fn zeros(grid: &Grid) -> SampledFunction {
        SampledFunction::constant(grid, 0.0)
    }

    /// `δ_Ω^q` in weighted form, so that its integrals are exact.
    pub fn delta_power(grid: &Grid, q: f64) -> Result<SampledFunction> {
        let iv = grid.interval();
        let values: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&x| (x - iv.a).max(iv.b - x).powf(-q))
            .collect();
        SampledFunction::from_limits(
            grid,
            values.clone(),
            values,
            EndpointWeight { left: q, right: q },
            Provenance::Expression,
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn weight(&self) -> EndpointWeight {
        self.weight
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Regular part, left limits.
    pub fn regular_left(&self) -> &[f64] {
        &self.left
    }

    /// Regular part, right limits.
    pub fn regular_right(&self) -> &[f64] {
        &self.right
    }

    fn factor(&self, i: usize) -> f64 {
        if self.weight.is_none() {
            1.0
        } else {
            self.weight.factor(self.grid.interval(), self.grid.x(i))
        }
    }

    pub fn left_value(&self, i: usize) -> f64 {
        self.left[i] * self.factor(i)
    }

    pub fn right_value(&self, i: usize) -> f64 {
        self.right[i] * self.factor(i)
    }

    /// Node value, right-continuous (left limit at the last node).
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.len() {
            self.left_value(i)
        } else {
            self.right_value(i)
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Linear interpolation of a continuous, unweighted function.
    pub fn interpolate(&self, x: f64) -> f64 {
        let i = self.grid.cell_of(x);
        let (x0, x1) = (self.grid.x(i), self.grid.x(i + 1));
        let s = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        self.right_value(i) * (1.0 - s) + self.left_value(i + 1) * s
    }

    pub fn is_continuous(&self) -> bool {
        self.left == self.right
    }

    fn same_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Input("sampled functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> SampledFunction {
        let mut out = self.clone();
        out.left.iter_mut().for_each(|v| *v *= c);
        out.right.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Pointwise product; endpoint exponents add.
    pub fn mul(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.same_grid(other)?;
        let left = self.left.iter().zip(&other.left).map(|(a, b)| a * b).collect();
        let right = self.right.iter().zip(&other.right).map(|(a, b)| a * b).collect();
        let weight = EndpointWeight {
            left: self.weight.left + other.weight.left,
            right: self.weight.right + other.weight.right,
        };
        SampledFunction::from_limits(&self.grid, left, right, weight, self.provenance)
    }

    /// Pointwise product with a continuous multiplier given at the nodes.
    pub fn mul_nodal(&self, factor: &[f64]) -> Result<SampledFunction> {
        if factor.len() != self.len() {
            return Err(Error::Input("multiplier length does not match grid".into()));
        }
        let left = self.left.iter().zip(factor).map(|(a, b)| a * b).collect();
        let right = self.right.iter().zip(factor).map(|(a, b)| a * b).collect();
        SampledFunction::from_limits(&self.grid, left, right, self.weight, self.provenance)
    }

    /// `alpha·self + beta·other`, with exponents aligned to the more singular.
    pub fn linear_combination(&self, alpha: f64, other: &SampledFunction, beta: f64) -> Result<SampledFunction> {
        self.same_grid(other)?;
        let weight = EndpointWeight {
            left: self.weight.left.min(other.weight.left),
            right: self.weight.right.min(other.weight.right),
        };
        let a = self.rebased(weight);
        let b = other.rebased(weight);
        let left = a.0.iter().zip(&b.0).map(|(u, v)| alpha * u + beta * v).collect();
        let right = a.1.iter().zip(&b.1).map(|(u, v)| alpha * u + beta * v).collect();
        SampledFunction::from_limits(&self.grid, left, right, weight, self.provenance)
    }

    pub fn add(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.linear_combination(1.0, other, -1.0)
    }

    /// Regular part re-expressed against a less singular weight.
    fn rebased(&self, target: EndpointWeight) -> (Vec<f64>, Vec<f64>) {
        let extra = EndpointWeight {
            left: self.weight.left - target.left,
            right: self.weight.right - target.right,
        };
        if extra.is_none() {
            return (self.left.clone(), self.right.clone());
        }
        let iv = self.grid.interval();
        let f: Vec<f64> = self.grid.nodes().iter().map(|&x| extra.factor(iv, x)).collect();
        (
            self.left.iter().zip(&f).map(|(a, b)| a * b).collect(),
            self.right.iter().zip(&f).map(|(a, b)| a * b).collect(),
        )
    }

    /// Applies `f` to the node values of an unweighted function.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SampledFunction> {
        if !self.weight.is_none() {
            return Err(Error::Input("cannot compose a weighted function pointwise".into()));
        }
        let left = self.left.iter().map(|&v| f(v)).collect();
        let right = self.right.iter().map(|&v| f(v)).collect();
        SampledFunction::from_limits(&self.grid, left, right, self.weight, Provenance::Samples)
    }

    /// `max(h, 0)`; the endpoint factor is positive so only `g` is clipped.
    pub fn positive_part(&self) -> SampledFunction {
        let mut out = self.clone();
        out.left.iter_mut().for_each(|v| *v = v.max(0.0));
        out.right.iter_mut().for_each(|v| *v = v.max(0.0));
        out
    }

    /// Largest absolute value of the regular part.
    pub fn regular_sup(&self) -> f64 {
        self.left.iter().chain(&self.right).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn regular_min(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.left.iter().chain(&self.right).all(|&v| v >= 0.0)
    }

    /// True when the regular part is at most `rel_tol·sup|g|` everywhere.
    pub fn is_negligible(&self, rel_tol: f64) -> bool {
        let sup = self.regular_sup();
        sup == 0.0 || self.left.iter().chain(&self.right).all(|v| v.abs() <= rel_tol * sup)
    }

    /// Restriction to nodes `i0..=i1`. Endpoint factors that no longer sit
    /// at an endpoint are folded into the regular part.
    pub fn restrict(&self, i0: usize, i1: usize) -> Result<SampledFunction> {
        let grid = self.grid.restrict(i0, i1)?;
        let n = self.len();
        let iv = self.grid.interval();
        let keep = EndpointWeight {
            left: if i0 == 0 { self.weight.left } else { 0.0 },
            right: if i1 == n - 1 { self.weight.right } else { 0.0 },
        };
        let folded = EndpointWeight {
            left: self.weight.left - keep.left,
            right: self.weight.right - keep.right,
        };
        let fold = |i: usize| folded.factor(iv, self.grid.x(i));
        let mut left: Vec<f64> = (i0..=i1).map(|i| self.left[i] * fold(i)).collect();
        let mut right: Vec<f64> = (i0..=i1).map(|i| self.right[i] * fold(i)).collect();
        // one-sided limits outside the new interval are irrelevant
        left[0] = right[0];
        let last = right.len() - 1;
        right[last] = left[last];
        SampledFunction::from_limits(&grid, left, right, keep, self.provenance)
    }

    /// Zero extension of a function defined on a restriction `i0..=i1`.
    pub fn extend_by_zero(&self, full: &Grid, i0: usize) -> Result<SampledFunction> {
        if !self.weight.is_none() {
            return Err(Error::Input(
                "zero extension of weighted functions is unsupported".into(),
            ));
        }
        let n = full.len();
        let m = self.len();
        if i0 + m > n || full.nodes()[i0..i0 + m] != *self.grid.nodes() {
            return Err(Error::Input("restriction does not match the target grid".into()));
        }
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        left[i0 + 1..i0 + m].copy_from_slice(&self.left[1..]);
        right[i0..i0 + m - 1].copy_from_slice(&self.right[..m - 1]);
        SampledFunction::from_limits(full, left, right, EndpointWeight::NONE, self.provenance)
    }

    fn cell_regular(&self, i: usize) -> (f64, f64) {
        (self.right[i], self.left[i + 1])
    }

    /// `∫` over the cell `[x_i, x]`, `x` inside cell `i`.
    fn cell_integral_to(&self, i: usize, x: f64) -> f64 {
        let grid = &self.grid;
        let (x0, x1) = (grid.x(i), grid.x(i + 1));
        if x <= x0 {
            return 0.0;
        }
        let x = x.min(x1);
        let frac = (x - x0) / (x1 - x0);
        let (g0, g1) = self.cell_regular(i);
        if self.weight.is_none() {
            let gx = g0 + (g1 - g0) * frac;
            return 0.5 * (g0 + gx) * (x - x0);
        }
        let iv = grid.interval();
        let EndpointWeight { left: sl, right: sr } = self.weight;
        let use_left = sr == 0.0 || (sl != 0.0 && 0.5 * (x0 + x1) <= iv.midpoint());
        if use_left {
            // singular factor (x − a)^sl; (b − x)^sr is smooth on this cell
            let p0 = g0 * endpoint_power(iv.b - x0, sr);
            let p1 = g1 * endpoint_power(iv.b - x1, sr);
            let px = p0 + (p1 - p0) * frac;
            product_weight_integral(p0, px, x0 - iv.a, x - iv.a, sl)
        } else {
            let p0 = g0 * endpoint_power(x0 - iv.a, sl);
            let p1 = g1 * endpoint_power(x1 - iv.a, sl);
            let px = p0 + (p1 - p0) * frac;
            // mirrored: distance to b decreases from b − x0 to b − x
            product_weight_integral(px, p0, iv.b - x, iv.b - x0, sr)
        }
    }
}

/// Piecewise closed-form weight: `pieces[k]` applies between consecutive
/// breakpoints, and the optional endpoint exponents multiply every piece.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSpec {
    breakpoints: Vec<f64>,
    pieces: Vec<Expr>,
    singularity: EndpointWeight,
}

impl PiecewiseSpec {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Expr>, singularity: EndpointWeight) -> Result<PiecewiseSpec> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::Input(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Input("breakpoints must be strictly increasing".into()));
        }
        for s in [singularity.left, singularity.right] {
            if !(s == 0.0 || (-1.0 < s && s < 0.0)) {
                return Err(Error::Input(format!(
                    "endpoint singularity exponent {s} must lie in (-1, 0)"
                )));
            }
        }
        Ok(PiecewiseSpec {
            breakpoints,
            pieces,
            singularity,
        })
    }

    pub fn constant(c: f64) -> PiecewiseSpec {
        PiecewiseSpec {
            breakpoints: Vec::new(),
            pieces: vec![Expr::Num(c)],
            singularity: EndpointWeight::NONE,
        }
    }

    /// `c` on `(lo, hi)`, zero elsewhere in `interval`.
    pub fn indicator(interval: Interval, lo: f64, hi: f64, c: f64) -> Result<PiecewiseSpec> {
        let mut breakpoints = Vec::new();
        let mut pieces = Vec::new();
        if lo > interval.a {
            breakpoints.push(lo);
            pieces.push(Expr::Num(0.0));
        }
        pieces.push(Expr::Num(c));
        if hi < interval.b {
            breakpoints.push(hi);
            pieces.push(Expr::Num(0.0));
        }
        PiecewiseSpec::new(breakpoints, pieces, EndpointWeight::NONE)
    }

    /// Constant values on consecutive pieces.
    pub fn steps(breakpoints: Vec<f64>, values: &[f64]) -> Result<PiecewiseSpec> {
        let pieces = values.iter().map(|&v| Expr::Num(v)).collect();
        PiecewiseSpec::new(breakpoints, pieces, EndpointWeight::NONE)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Expr] {
        &self.pieces
    }

    pub fn singularity(&self) -> EndpointWeight {
        self.singularity
    }

    /// Samples on a grid that already contains every breakpoint as a node.
    pub fn sample(&self, grid: &Grid) -> Result<SampledFunction> {
        let iv = grid.interval();
        let mut cut_nodes = Vec::with_capacity(self.breakpoints.len());
        for &bp in &self.breakpoints {
            if !(iv.a < bp && bp < iv.b) {
                return Err(Error::Input(format!(
                    "breakpoint {bp} is not interior to ({}, {})",
                    iv.a, iv.b
                )));
            }
            let k = grid
                .node_index(bp)
                .ok_or_else(|| Error::Input(format!("breakpoint {bp} is not a grid node")))?;
            cut_nodes.push(k);
        }
        let n = grid.len();
        // piece index of cell i is the number of breakpoint nodes <= i
        let mut cell_piece = vec![0usize; n - 1];
        let mut k = 0;
        for (i, slot) in cell_piece.iter_mut().enumerate() {
            while k < cut_nodes.len() && cut_nodes[k] <= i {
                k += 1;
            }
            *slot = k;
        }
        let eval = |piece: usize, i: usize| -> Result<f64> {
            let x = grid.x(i);
            self.pieces[piece]
                .eval_checked(x)
                .map_err(|e| Error::Input(format!("weight piece {} at x = {x}: {e}", self.pieces[piece])))
        };
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for i in 0..n {
            right[i] = eval(cell_piece[i.min(n - 2)], i)?;
            left[i] = if i == 0 { right[0] } else { eval(cell_piece[i - 1], i)? };
        }
        SampledFunction::from_limits(grid, left, right, self.singularity, Provenance::Piecewise)
    }

    /// Grid on `interval` with `n` nodes resolving the breakpoints of all `specs`.
    pub fn grid_for(interval: Interval, n: usize, specs: &[&PiecewiseSpec]) -> Result<Grid> {
        let mut bps: Vec<f64> = specs.iter().flat_map(|s| s.breakpoints.iter().copied()).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        Grid::with_breakpoints(interval, n, &bps)
    }
}

/// `∫_{s0}^{s1} ℓ(s) s^σ ds` for `ℓ` linear with `ℓ(s0) = p0`, `ℓ(s1) = p1`.
fn product_weight_integral(p0: f64, p1: f64, s0: f64, s1: f64, sigma: f64) -> f64 {
    let d = s1 - s0;
    if sigma == 0.0 {
        return 0.5 * (p0 + p1) * d;
    }
    if s0 >= 64.0 * d {
        // weight is smooth across the cell: 4-point Gauss-Legendre
        const NODES: [f64; 4] = [
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_3,
            0.339_981_043_584_856_3,
            0.861_136_311_594_052_6,
        ];
        const WEIGHTS: [f64; 4] = [
            0.347_854_845_137_453_9,
            0.652_145_154_862_546_1,
            0.652_145_154_862_546_1,
            0.347_854_845_137_453_9,
        ];
        let mid = 0.5 * (s0 + s1);
        return NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(&z, w)| {
                let tau = 0.5 * (1.0 + z);
                let s = mid + 0.5 * d * z;
                w * (p0 + (p1 - p0) * tau) * s.powf(sigma)
            })
            .sum::<f64>()
            * 0.5
            * d;
    }
    let e1 = sigma + 1.0;
    let e2 = sigma + 2.0;
    let pw = |s: f64, e: f64| if s <= 0.0 { 0.0 } else { s.powf(e) };
    let w0 = (pw(s1, e1) - pw(s0, e1)) / e1;
    let w1 = (pw(s1, e2) - pw(s0, e2)) / e2 - s0 * w0;
    p0 * w0 + (p1 - p0) / d * w1
}

/// `H(x_i) = ∫_a^{x_i} h` at every node.
pub fn cumulative_integral(h: &SampledFunction) -> Result<SampledFunction> {
    let n = h.len();
    let mut acc = vec![0.0; n];
    for i in 0..n - 1 {
        acc[i + 1] = acc[i] + h.cell_integral_to(i, h.grid.x(i + 1));
    }
    if let Some(v) = acc.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("cumulative integral is not finite ({v})")));
    }
    let mut out = SampledFunction::from_values(&h.grid, acc)?;
    out.provenance = Provenance::Samples;
    Ok(out)
}

/// `∫_a^b h`.
pub fn integrate(h: &SampledFunction) -> Result<f64> {
    let total: f64 = (0..h.len() - 1).map(|i| h.cell_integral_to(i, h.grid.x(i + 1))).sum();
    if !total.is_finite() {
        return Err(Error::Numerical("integral is not finite".into()));
    }
    Ok(total)
}

/// `∫_a^x h` for an arbitrary `x` in the interval, consistent with
/// [`cumulative_integral`] at the nodes.
pub fn integral_to(h: &SampledFunction, cumulative: &SampledFunction, x: f64) -> f64 {
    let i = h.grid.cell_of(x);
    cumulative.value(i) + h.cell_integral_to(i, x)
}

/// `δ_Ω` sampled at the nodes.
pub fn delta_omega(interval: Interval, grid: &Grid) -> SampledFunction {
    let values = grid.nodes().iter().map(|&x| interval.delta(x)).collect();
    SampledFunction::from_values(grid, values).expect("distance samples are finite")
}

pub fn sup_norm(u: &SampledFunction) -> f64 {
    (0..u.len())
        .map(|i| u.left_value(i).abs().max(u.right_value(i).abs()))
        .fold(0.0, f64::max)
}

pub fn c1_norm(u: &SampledFunction, uprime: &SampledFunction) -> f64 {
    sup_norm(u) + sup_norm(uprime)
}
