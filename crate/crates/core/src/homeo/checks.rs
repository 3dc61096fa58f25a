//! Sampled checks of H1, H1′, H2, F1, F1′ and the sublinearity conditions.
//!
//! Inequalities `lhs ≤ rhs` are tested with slack `1e−9·(1 + |rhs|)`. For
//! the multiplicative hypotheses H1 and H2 both sides are first divided by
//! the positive factor `φ(x)` (resp. `φ(t)φ(x)`), so violations are found at
//! every scale rather than only where `φ` is of order one. Limits at `0` and
//! `∞` are judged from finite samples; a verdict is never a proof.

use std::collections::BTreeMap;

use serde::Serialize;

use super::Homeomorphism;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::roots::{illinois, rel_tol};

/// Log–log slope beyond which a sampled limit is judged to drift.
pub const SLOPE_THRESHOLD: f64 = 0.02;
/// Ratio beyond which `φ(c_Ω t)/φ(t)` counts as unbounded.
pub const RATIO_CEILING: f64 = 1e12;
/// Samples per decade of the default geometric grids.
pub const PER_DECADE: usize = 20;

pub fn slack(rhs: f64) -> f64 {
    1e-9 * (1.0 + rhs.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H1,
    H1prime,
    H2,
    F1,
    F1prime,
    NuCondition,
    Q12Condition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Verdict {
    CorroboratedOnRange,
    ViolatedAt(f64, f64),
    NotApplicable,
}

impl Verdict {
    pub fn is_corroborated(&self) -> bool {
        matches!(self, Verdict::CorroboratedOnRange)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::ViolatedAt(..))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub hypothesis: Hypothesis,
    #[serde(serialize_with = "verdict_name")]
    pub verdict: Verdict,
    /// `((t_min, t_max), (x_min, x_max))`.
    pub tested_range: ((f64, f64), (f64, f64)),
    pub witness_constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation_point: Option<(f64, f64)>,
    pub detail: String,
}

fn verdict_name<S: serde::Serializer>(v: &Verdict, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match v {
        Verdict::CorroboratedOnRange => "CorroboratedOnRange",
        Verdict::ViolatedAt(..) => "ViolatedAt",
        Verdict::NotApplicable => "NotApplicable",
    })
}

impl HypothesisReport {
    fn new(hypothesis: Hypothesis, verdict: Verdict, tested_range: ((f64, f64), (f64, f64))) -> Self {
        let violation_point = match verdict {
            Verdict::ViolatedAt(t, x) => Some((t, x)),
            _ => None,
        };
        HypothesisReport {
            hypothesis,
            verdict,
            tested_range,
            witness_constants: BTreeMap::new(),
            violation_point,
            detail: String::new(),
        }
    }

    fn with(mut self, name: &str, value: f64) -> Self {
        self.witness_constants.insert(name.to_string(), value);
        self
    }

    fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.witness_constants.get(name).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// The increasing homeomorphism `ψ` of H1.
#[derive(Debug, Clone, PartialEq)]
pub enum Psi {
    /// `c·t^p`.
    Power {
        c: f64,
        p: f64,
    },
    Custom(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthWitness {
    pub psi: Psi,
    pub t1: f64,
    pub purpose: Hypothesis,
}

impl GrowthWitness {
    pub fn power(c: f64, p: f64, t1: f64) -> Result<GrowthWitness> {
        GrowthWitness::new(Psi::Power { c, p }, t1)
    }

    /// Validates `ψ(0) = 0` and strict increase on a sample of `[0, t1]`.
    pub fn new(psi: Psi, t1: f64) -> Result<GrowthWitness> {
        if !(t1.is_finite() && t1 > 0.0) {
            return Err(Error::Config(format!("t1 must be positive, got {t1}")));
        }
        if let Psi::Power { c, p } = psi {
            if !(c > 0.0 && p > 0.0 && c.is_finite() && p.is_finite()) {
                return Err(Error::Config(format!("power witness needs c, p > 0, got ({c}, {p})")));
            }
        }
        let w = GrowthWitness {
            psi,
            t1,
            purpose: Hypothesis::H1,
        };
        if w.eval(0.0) != 0.0 {
            return Err(Error::Config("ψ(0) must be 0".into()));
        }
        let mut prev = 0.0;
        for k in 1..=1000 {
            let v = w.eval(t1 * k as f64 / 1000.0);
            if !(v.is_finite() && v > prev) {
                return Err(Error::Config(format!(
                    "ψ is not increasing on [0, {t1}] near t = {}",
                    t1 * k as f64 / 1000.0
                )));
            }
            prev = v;
        }
        Ok(w)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.psi {
            Psi::Power { c, p } => c * t.powf(*p),
            Psi::Custom(e) => e.eval(t),
        }
    }

    /// `ψ⁻¹(r)` for `r ∈ [0, ψ(t1)]`.
    pub fn inverse(&self, r: f64) -> Result<f64> {
        match &self.psi {
            Psi::Power { c, p } => Ok((r / c).powf(1.0 / p)),
            Psi::Custom(_) => {
                let top = self.eval(self.t1);
                if !(0.0..=top).contains(&r) {
                    return Err(Error::Domain(format!("ψ⁻¹({r}) outside [0, ψ(t1) = {top}]")));
                }
                if r == 0.0 {
                    return Ok(0.0);
                }
                let b = illinois(
                    |t| self.eval(t) - r,
                    0.0,
                    self.t1,
                    -r,
                    top - r,
                    rel_tol(4.0 * f64::EPSILON, f64::MIN_POSITIVE),
                    400,
                );
                Ok(b.best())
            }
        }
    }

    pub fn is_power(&self) -> Option<(f64, f64)> {
        match self.psi {
            Psi::Power { c, p } => Some((c, p)),
            Psi::Custom(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.psi {
            Psi::Power { c, p } => format!("{c}*t^{p}"),
            Psi::Custom(e) => e.to_string(),
        }
    }
}

/// `count` points spaced geometrically on `[lo, hi]`, increasing.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                (l0 + (l1 - l0) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

fn decades(lo: f64, hi: f64) -> usize {
    ((hi / lo).log10().ceil() as usize * PER_DECADE).max(2) + 1
}

/// Default grid toward `0`: `[1e−8, 1]`, decreasing.
pub fn default_small_grid() -> Vec<f64> {
    let mut g = geometric_grid(1e-8, 1.0, decades(1e-8, 1.0));
    g.reverse();
    g
}

/// Default grid toward `∞`: `[1, 1e8]`, increasing.
pub fn default_large_grid() -> Vec<f64> {
    geometric_grid(1.0, 1e8, decades(1.0, 1e8))
}

/// `{0} ∪` a geometric grid on `[lo, hi]`.
pub fn grid_with_zero(lo: f64, hi: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(geometric_grid(lo, hi, decades(lo, hi)));
    g
}

fn range_of(g: &[f64]) -> (f64, f64) {
    g.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

fn require_nonempty(g: &[f64], name: &str) -> Result<()> {
    if g.is_empty() || g.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Input(format!(
            "{name} must be a nonempty set of finite nonnegative reals"
        )));
    }
    Ok(())
}

/// Least-squares slope of `ln value` against `ln t` over the two decades of
/// the sample closest to the limit point.
fn tail_slope(samples: &[(f64, f64)], toward_zero: bool) -> Option<f64> {
    let extreme = if toward_zero {
        samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min)
    } else {
        samples.iter().map(|s| s.0).fold(0.0, f64::max)
    };
    let window: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, v)| {
            *v > 0.0
                && v.is_finite()
                && if toward_zero {
                    *t <= 100.0 * extreme
                } else {
                    *t >= extreme / 100.0
                }
        })
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if window.len() < 2 {
        return None;
    }
    let n = window.len() as f64;
    let mx = window.iter().map(|w| w.0).sum::<f64>() / n;
    let my = window.iter().map(|w| w.1).sum::<f64>() / n;
    let sxy: f64 = window.iter().map(|w| (w.0 - mx) * (w.1 - my)).sum();
    let sxx: f64 = window.iter().map(|w| (w.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// H1: `φ(tx) ≤ ψ(t)φ(x)` for `t ∈ [0, t1]`, `x ≥ 0`.
pub fn check_h1(phi: &Homeomorphism, psi: &GrowthWitness, grid_t: &[f64], grid_x: &[f64]) -> Result<HypothesisReport> {
    require_nonempty(grid_t, "t grid")?;
    require_nonempty(grid_x, "x grid")?;
    if let Some(t) = grid_t.iter().find(|&&t| t > psi.t1) {
        return Err(Error::Input(format!("t = {t} lies outside [0, t1 = {}]", psi.t1)));
    }
    let mut worst: Option<(f64, f64, f64)> = None;
    let mut margin = f64::INFINITY;
    for &t in grid_t {
        let rhs = psi.eval(t);
        for &x in grid_x {
            let fx = phi.eval(x);
            if fx == 0.0 || !fx.is_finite() {
                continue;
            }
            let lhs = phi.eval(t * x) / fx;
            let excess = lhs - rhs;
            margin = margin.min(-excess);
            if excess > slack(rhs) && worst.is_none_or(|w| excess > w.2) {
                worst = Some((t, x, excess));
            }
        }
    }
    let verdict = match worst {
        Some((t, x, _)) => Verdict::ViolatedAt(t, x),
        None => Verdict::CorroboratedOnRange,
    };
    let mut r = HypothesisReport::new(Hypothesis::H1, verdict, (range_of(grid_t), range_of(grid_x)))
        .with("t1", psi.t1)
        .with("margin", margin)
        .detail(format!("phi = {}, psi(t) = {}", phi.name(), psi.describe()));
    if let Some((c, p)) = psi.is_power() {
        r = r.with("c", c).with("p", p);
    }
    Ok(r)
}

/// H1 on `{0} ∪ [1e−6 t1, t1]` × `{0} ∪ [1e−6, 1e6]`.
pub fn check_h1_default(phi: &Homeomorphism, psi: &GrowthWitness) -> Result<HypothesisReport> {
    let mut grid_t = vec![0.0];
    grid_t.extend(geometric_grid(1e-6 * psi.t1, psi.t1, decades(1e-6, 1.0)));
    check_h1(phi, psi, &grid_t, &grid_with_zero(1e-6, 1e6))
}

/// H1′ with the default grids.
pub fn check_h1_prime_default(phi: &Homeomorphism, p: f64, c_omega: f64) -> Result<HypothesisReport> {
    check_h1_prime(phi, p, c_omega, &default_small_grid(), &default_large_grid())
}

/// H1′: `liminf_{t→0} t^p/φ(t) > 0` and `limsup_{t→∞} φ(c_Ω t)/φ(t) < ∞`.
///
/// Witness `K` is `1/floor` of `t^p/φ(t)` on the small grid (so `φ(t) ≤ K t^p`
/// there) and `N` is the ceiling of `φ(c_Ω t)/φ(t)` on the large grid.
pub fn check_h1_prime(
    phi: &Homeomorphism,
    p: f64,
    c_omega: f64,
    small_t_grid: &[f64],
    large_t_grid: &[f64],
) -> Result<HypothesisReport> {
    if !(p > 0.0 && c_omega > 0.0) {
        return Err(Error::Input(format!(
            "H1' needs p > 0 and c_omega > 0, got ({p}, {c_omega})"
        )));
    }
    require_nonempty(small_t_grid, "small t grid")?;
    require_nonempty(large_t_grid, "large t grid")?;
    let range = (range_of(small_t_grid), range_of(large_t_grid));

    // (h32)
    let mut small = Vec::new();
    let mut floor = f64::INFINITY;
    let mut h32_violation = None;
    for &t in small_t_grid.iter().filter(|&&t| t > 0.0) {
        let v = t.powf(p) / phi.eval(t);
        if !(v.is_finite() && v > 0.0) {
            h32_violation.get_or_insert((t, v));
            continue;
        }
        floor = floor.min(v);
        small.push((t, v));
    }
    let slope32 = tail_slope(&small, true);
    if h32_violation.is_none() && slope32.is_some_and(|s| s > SLOPE_THRESHOLD) {
        let t_min = small.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        h32_violation = small.iter().find(|s| s.0 == t_min).map(|s| (s.0, s.1));
    }

    // (hbi)
    let mut large = Vec::new();
    let mut ceiling: f64 = 0.0;
    let mut hbi_violation = None;
    for &t in large_t_grid {
        let ft = phi.eval(t);
        if !ft.is_finite() {
            break;
        }
        let v = phi.eval(c_omega * t) / ft;
        if v.is_nan() {
            break;
        }
        if !v.is_finite() || v > RATIO_CEILING {
            hbi_violation = Some((t, v));
            break;
        }
        ceiling = ceiling.max(v);
        large.push((t, v));
    }
    let slope_bi = tail_slope(&large, false);
    if hbi_violation.is_none() && slope_bi.is_some_and(|s| s > SLOPE_THRESHOLD) {
        hbi_violation = large.last().copied();
    }

    let verdict = match (h32_violation, hbi_violation) {
        (Some((t, v)), _) | (None, Some((t, v))) => Verdict::ViolatedAt(t, v),
        (None, None) => Verdict::CorroboratedOnRange,
    };
    let detail = format!(
        "(h32) {}; (hbi) {}",
        match h32_violation {
            Some((t, v)) => format!("violated: t^p/phi(t) = {v:e} at t = {t:e} and decaying"),
            None => "corroborated".into(),
        },
        match hbi_violation {
            Some((t, v)) => format!("violated: phi(c t)/phi(t) = {v:e} at t = {t:e} and growing"),
            None => "corroborated".into(),
        }
    );
    let mut r = HypothesisReport::new(Hypothesis::H1prime, verdict, range)
        .with("p", p)
        .with("c_omega", c_omega)
        .with("h32_holds", if h32_violation.is_none() { 1.0 } else { 0.0 })
        .with("hbi_holds", if hbi_violation.is_none() { 1.0 } else { 0.0 })
        .detail(detail);
    if h32_violation.is_none() && floor.is_finite() {
        r = r.with("floor", floor).with("K", 1.0 / floor);
    }
    if hbi_violation.is_none() {
        r = r.with("N", ceiling);
    }
    if let Some(s) = slope32 {
        r = r.with("h32_tail_slope", s);
    }
    if let Some(s) = slope_bi {
        r = r.with("hbi_tail_slope", s);
    }
    Ok(r)
}

/// H2: `φ(tx) ≤ Mφ(t)φ(x)` on `[0, t2] × [0, c_Ω]`.
pub fn check_h2(
    phi: &Homeomorphism,
    t2: f64,
    m: f64,
    c_omega: f64,
    grid_t: &[f64],
    grid_x: &[f64],
) -> Result<HypothesisReport> {
    if !(t2 > 0.0 && m > 0.0 && c_omega > 0.0) {
        return Err(Error::Input(format!(
            "H2 needs t2, M, c_omega > 0, got ({t2}, {m}, {c_omega})"
        )));
    }
    require_nonempty(grid_t, "t grid")?;
    require_nonempty(grid_x, "x grid")?;
    let ts: Vec<f64> = grid_t.iter().copied().filter(|&t| t <= t2).collect();
    let xs: Vec<f64> = grid_x.iter().copied().filter(|&x| x <= c_omega).collect();
    let mut worst: Option<(f64, f64, f64)> = None;
    let mut sup_ratio: f64 = 0.0;
    for &t in &ts {
        let ft = phi.eval(t);
        for &x in &xs {
            let denom = ft * phi.eval(x);
            let lhs = phi.eval(t * x);
            if denom == 0.0 {
                if lhs > 0.0 && t > 0.0 && x > 0.0 && ft > 0.0 {
                    worst.get_or_insert((t, x, f64::INFINITY));
                }
                continue;
            }
            let ratio = lhs / denom;
            sup_ratio = sup_ratio.max(ratio);
            let excess = ratio - m;
            if excess > slack(m) && worst.is_none_or(|w| excess > w.2) {
                worst = Some((t, x, excess));
            }
        }
    }
    let verdict = match worst {
        Some((t, x, _)) => Verdict::ViolatedAt(t, x),
        None => Verdict::CorroboratedOnRange,
    };
    Ok(
        HypothesisReport::new(Hypothesis::H2, verdict, (range_of(&ts), range_of(&xs)))
            .with("t2", t2)
            .with("M", m)
            .with("c_omega", c_omega)
            .with("sampled_sup_ratio", sup_ratio)
            .detail(format!("phi = {}", phi.name())),
    )
}

/// H2 on default grids: `{0} ∪ [1e−8, t2]` by `{0} ∪ [1e−8, c_Ω]`.
pub fn check_h2_default(phi: &Homeomorphism, t2: f64, m: f64, c_omega: f64) -> Result<HypothesisReport> {
    check_h2(
        phi,
        t2,
        m,
        c_omega,
        &grid_with_zero(1e-8, t2),
        &grid_with_zero(1e-8, c_omega),
    )
}

/// Sampled `sup t φ′(tx) / (φ(t) φ′(x))` over `(0,1) × (0,c_Ω)`; a finite
/// supremum gives H2 with `t2 = 1` and `M` equal to it.
pub fn check_h2_derivative(
    phi: &Homeomorphism,
    c_omega: f64,
    grid_t: &[f64],
    grid_x: &[f64],
) -> Result<HypothesisReport> {
    if c_omega <= 0.0 {
        return Err(Error::Input(format!("c_omega must be positive, got {c_omega}")));
    }
    let ts: Vec<f64> = grid_t.iter().copied().filter(|&t| t > 0.0 && t < 1.0).collect();
    let xs: Vec<f64> = grid_x.iter().copied().filter(|&x| x > 0.0 && x < c_omega).collect();
    let range = (range_of(&ts), range_of(&xs));
    if !phi.has_derivative() {
        return Ok(HypothesisReport::new(Hypothesis::H2, Verdict::NotApplicable, range)
            .detail("derivative expression missing"));
    }
    let d = |x: f64| phi.derivative(x).unwrap_or(f64::NAN);
    let mut sup: f64 = 0.0;
    let mut bad = None;
    for &t in &ts {
        let ft = phi.eval(t);
        for &x in &xs {
            let v = t * d(t * x) / (ft * d(x));
            if !v.is_finite() {
                bad.get_or_insert((t, x));
                continue;
            }
            sup = sup.max(v);
        }
    }
    let verdict = match bad {
        Some((t, x)) => Verdict::ViolatedAt(t, x),
        None => Verdict::CorroboratedOnRange,
    };
    let mut r = HypothesisReport::new(Hypothesis::H2, verdict, range)
        .with("c_omega", c_omega)
        .with("t2", 1.0)
        .detail(format!("derivative criterion, phi = {}", phi.name()));
    if bad.is_none() {
        r = r.with("M", sup);
    }
    Ok(r)
}

pub fn check_h2_derivative_default(phi: &Homeomorphism, c_omega: f64) -> Result<HypothesisReport> {
    let ts = geometric_grid(1e-8, 1.0 - 1e-9, decades(1e-8, 1.0));
    let xs = geometric_grid(1e-8 * c_omega, c_omega * (1.0 - 1e-9), decades(1e-8, 1.0));
    check_h2_derivative(phi, c_omega, &ts, &xs)
}

/// `sup_{t ∈ (0, t0]} φ(t)/t^p` on a geometric sample.
pub fn power_upper_constant(phi: &Homeomorphism, p: f64, t0: f64) -> f64 {
    geometric_grid(1e-8 * t0, t0, decades(1e-8, 1.0))
        .into_iter()
        .map(|t| phi.eval(t) / t.powf(p))
        .fold(0.0, f64::max)
}

/// `sup_{x ∈ (0, x0]} x^p/φ(x)` on a geometric sample.
pub fn power_lower_constant(phi: &Homeomorphism, p: f64, x0: f64) -> f64 {
    geometric_grid(1e-8 * x0, x0, decades(1e-8, 1.0))
        .into_iter()
        .map(|x| x.powf(p) / phi.eval(x))
        .fold(0.0, f64::max)
}

/// Sampled form of `liminf_{x→0} φ(x)/x^p > 0`: the ratio stays positive and
/// does not decay along the default small grid.
pub fn check_as_condition(phi: &Homeomorphism, p: f64) -> bool {
    let samples: Vec<(f64, f64)> = default_small_grid()
        .into_iter()
        .map(|x| (x, phi.eval(x) / x.powf(p)))
        .collect();
    samples.iter().all(|s| s.1.is_finite() && s.1 > 0.0)
        && tail_slope(&samples, true).is_some_and(|s| s <= SLOPE_THRESHOLD)
}

/// The H2 constant `M = M_{c_Ω} N_1 N_{c_Ω}` built from power bounds.
pub fn h2_constant_from_power_bounds(phi: &Homeomorphism, p: f64, c_omega: f64) -> f64 {
    power_upper_constant(phi, p, c_omega) * power_lower_constant(phi, p, 1.0) * power_lower_constant(phi, p, c_omega)
}

/// Growth-constant set for F1 / F1′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub k1: f64,
    pub k2: f64,
    pub t_bar: f64,
}

fn check_two_sided(
    hypothesis: Hypothesis,
    f: &dyn Fn(f64) -> f64,
    lower: &dyn Fn(f64) -> f64,
    upper: &dyn Fn(f64) -> f64,
    c: GrowthConstants,
    grid: &[f64],
) -> Result<HypothesisReport> {
    if !(c.k1 > 0.0 && c.k2 > 0.0 && c.t_bar > 0.0) {
        return Err(Error::Input("growth constants must be positive".into()));
    }
    require_nonempty(grid, "t grid")?;
    let mut lower_worst: Option<(f64, f64)> = None;
    let mut upper_worst: Option<(f64, f64)> = None;
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for &t in grid {
        let ft = f(t);
        if !ft.is_finite() {
            return Err(Error::Numerical(format!("f({t}) = {ft} is not finite")));
        }
        if t <= c.t_bar {
            let lo = lower(t);
            let excess = lo - ft;
            lower_margin = lower_margin.min(-excess);
            if excess > slack(ft) && lower_worst.is_none_or(|w| excess > w.1) {
                lower_worst = Some((t, excess));
            }
        }
        let hi = upper(t);
        if hi.is_finite() {
            let excess = ft - hi;
            upper_margin = upper_margin.min(-excess);
            if excess > slack(hi) && upper_worst.is_none_or(|w| excess > w.1) {
                upper_worst = Some((t, excess));
            }
        }
    }
    let verdict = match (lower_worst, upper_worst) {
        (Some((t, _)), _) | (None, Some((t, _))) => Verdict::ViolatedAt(t, f(t)),
        (None, None) => Verdict::CorroboratedOnRange,
    };
    let r = range_of(grid);
    Ok(HypothesisReport::new(hypothesis, verdict, (r, r))
        .with("k1", c.k1)
        .with("k2", c.k2)
        .with("t_bar", c.t_bar)
        .with("lower_margin", lower_margin)
        .with("upper_margin", upper_margin)
        .detail(format!(
            "lower bound {}; upper bound {}",
            lower_worst.map_or("holds".into(), |(t, _)| format!("fails at t = {t:e}")),
            upper_worst.map_or("holds".into(), |(t, _)| format!("fails at t = {t:e}")),
        )))
}

/// F1: `k1 t^q ≤ f(t)` on `[0, t̄]` and `f(t) ≤ k2 t^q` on the grid.
pub fn check_f1(f: &dyn Fn(f64) -> f64, c: GrowthConstants, q: f64, grid: &[f64]) -> Result<HypothesisReport> {
    if q <= 0.0 {
        return Err(Error::Input(format!("q must be positive, got {q}")));
    }
    let lower = |t: f64| c.k1 * t.powf(q);
    let upper = |t: f64| c.k2 * t.powf(q);
    Ok(check_two_sided(Hypothesis::F1, f, &lower, &upper, c, grid)?.with("q", q))
}

/// F1′: `k1 t^{q1} ≤ f(t)` on `[0, t̄]` and `f(t) ≤ k2 φ(t)^{q2}` on the grid.
pub fn check_f1_prime(
    f: &dyn Fn(f64) -> f64,
    phi: &Homeomorphism,
    c: GrowthConstants,
    q1: f64,
    q2: f64,
    grid: &[f64],
) -> Result<HypothesisReport> {
    if !(q1 > 0.0 && q2 > 0.0) {
        return Err(Error::Input(format!("q1, q2 must be positive, got ({q1}, {q2})")));
    }
    let lower = |t: f64| c.k1 * t.powf(q1);
    let upper = |t: f64| c.k2 * phi.eval(t).powf(q2);
    Ok(check_two_sided(Hypothesis::F1prime, f, &lower, &upper, c, grid)?
        .with("q1", q1)
        .with("q2", q2))
}

/// Default `f` grid: `{0} ∪ [1e−8, t_max]`.
pub fn default_f_grid(t_max: f64) -> Vec<f64> {
    grid_with_zero(1e-8, t_max)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SublinearCase<'a> {
    /// `liminf_{t→0} t^q/ψ(t) = ∞`.
    I { psi: &'a GrowthWitness, q: f64 },
    /// `q1 ∈ (0, p)` and `q2 ∈ (0, 1)`.
    II { p: f64, q1: f64, q2: f64 },
}

pub fn check_sublinearity_conditions(case: SublinearCase<'_>) -> Result<HypothesisReport> {
    match case {
        SublinearCase::I { psi, q } => {
            let top = psi.t1.min(1.0);
            let mut grid = geometric_grid(1e-8 * top, top, decades(1e-8, 1.0));
            grid.reverse();
            let samples: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t.powf(q) / psi.eval(t))).collect();
            let slope = tail_slope(&samples, true);
            let (t_min, r_min) = samples.last().copied().unwrap_or((0.0, 0.0));
            let verdict = if slope.is_some_and(|s| s < -SLOPE_THRESHOLD) {
                Verdict::CorroboratedOnRange
            } else {
                Verdict::ViolatedAt(t_min, r_min)
            };
            let r = range_of(&grid);
            Ok(HypothesisReport::new(Hypothesis::NuCondition, verdict, (r, r))
                .with("q", q)
                .with("tail_slope", slope.unwrap_or(f64::NAN))
                .detail(format!("t^q/psi(t) with psi(t) = {}", psi.describe())))
        }
        SublinearCase::II { p, q1, q2 } => {
            let verdict = if !(q1 > 0.0 && q1 < p) {
                Verdict::ViolatedAt(q1, p)
            } else if !(q2 > 0.0 && q2 < 1.0) {
                Verdict::ViolatedAt(q2, 1.0)
            } else {
                Verdict::CorroboratedOnRange
            };
            Ok(
                HypothesisReport::new(Hypothesis::Q12Condition, verdict, ((0.0, p), (0.0, 1.0)))
                    .with("p", p)
                    .with("q1", q1)
                    .with("q2", q2)
                    .detail("q1 in (0, p) and q2 in (0, 1)"),
            )
        }
    }
}
