//! Odd increasing homeomorphisms `φ: ℝ → ℝ` and checks of the structural
//! hypotheses used by the existence theory.
//!
//! Every kind is defined by its restriction to `[0, ∞)`; negative arguments
//! are handled by odd extension, so `φ(−x) = −φ(x)` holds bit for bit.

mod checks;

pub use checks::*;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::roots::{illinois, rel_tol};

#[derive(Debug, Clone, PartialEq)]
pub enum PhiKind {
    /// `|x|^{p−2}x`, `p > 1`.
    PLaplacian { p: f64 },
    /// `x^{p1} + x^{p2}`, `p1 ≥ p2 > 0`.
    SumPowers { p1: f64, p2: f64 },
    /// `e^{x^p} − 1`, `p > 0`.
    ExpPower { p: f64 },
    /// `e^x − x − 1`.
    ExpMinusLinear,
    /// `x^{p1} / (1 + x^{p2})`, `p1 > p2 > 0`.
    PowerRatio { p1: f64, p2: f64 },
    /// `x(|ln x| + 1)`.
    LogWeighted,
    /// `x − ln(1 + x)`.
    LinearMinusLog,
    /// `ln(1 + x)^p`, `p > 0`.
    LogPower { p: f64 },
    /// User expression in `x` on `[0, ∞)`, with an optional derivative.
    Custom { phi: Expr, derivative: Option<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Homeomorphism {
    kind: PhiKind,
}

/// Absolute tolerance on `|φ(x) − y|` accepted when the inverse hits its
/// iteration cap.
pub const INVERSE_TOLERANCE: f64 = 1e-10;
const INVERSE_MAX_ITER: usize = 200;
/// Sample count used to falsify monotonicity of custom expressions.
pub const CUSTOM_MONOTONE_SAMPLES: usize = 10_000;

impl Homeomorphism {
    pub fn new(kind: PhiKind) -> Result<Homeomorphism> {
        let bad = |what: String| Err(Error::Config(what));
        match &kind {
            PhiKind::PLaplacian { p } if !(p.is_finite() && *p > 1.0) => {
                return bad(format!("PLaplacian needs p > 1, got {p}"))
            }
            PhiKind::SumPowers { p1, p2 } if !(p2.is_finite() && *p2 > 0.0 && p1.is_finite() && p1 >= p2) => {
                return bad(format!("SumPowers needs p1 >= p2 > 0, got ({p1}, {p2})"))
            }
            PhiKind::ExpPower { p } | PhiKind::LogPower { p } if !(p.is_finite() && *p > 0.0) => {
                return bad(format!("exponent must be positive, got {p}"))
            }
            PhiKind::PowerRatio { p1, p2 } if !(p2.is_finite() && *p2 > 0.0 && p1.is_finite() && p1 > p2) => {
                return bad(format!("PowerRatio needs p1 > p2 > 0, got ({p1}, {p2})"))
            }
            PhiKind::Custom { .. } => return bad("custom φ must be built with Homeomorphism::custom".into()),
            _ => {}
        }
        Ok(Homeomorphism { kind })
    }

    pub fn p_laplacian(p: f64) -> Result<Homeomorphism> {
        Homeomorphism::new(PhiKind::PLaplacian { p })
    }

    /// Custom `φ` from an expression in `x`. Monotonicity must be declared;
    /// it is falsified, not proved, by sampling a geometric grid on
    /// `[1e−6, 1e4]`.
    pub fn custom(phi: Expr, derivative: Option<Expr>, declared_increasing: bool) -> Result<Homeomorphism> {
        if !declared_increasing {
            return Err(Error::Config(
                "custom φ must declare that it is increasing (monotone = true)".into(),
            ));
        }
        let at0 = phi.eval(0.0);
        if at0 != 0.0 {
            return Err(Error::Config(format!("custom φ must vanish at 0, got φ(0) = {at0}")));
        }
        let grid = checks::geometric_grid(1e-6, 1e4, CUSTOM_MONOTONE_SAMPLES);
        let mut prev = 0.0f64;
        for &x in &grid {
            let v = phi.eval(x);
            if !v.is_finite() {
                return Err(Error::Config(format!("custom φ is not finite at x = {x}")));
            }
            // decreases below the expression's own rounding level falsify monotonicity
            if v < prev - 1e-9 * prev.abs() - 1e-15 {
                return Err(Error::Config(format!(
                    "custom φ is not increasing near x = {x} ({v} < {prev})"
                )));
            }
            prev = prev.max(v);
        }
        if !(prev > 0.0) {
            return Err(Error::Config(
                "custom φ is not increasing (constant on the sample)".into(),
            ));
        }
        Ok(Homeomorphism {
            kind: PhiKind::Custom { phi, derivative },
        })
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            PhiKind::PLaplacian { p } => format!("PLaplacian(p={p})"),
            PhiKind::SumPowers { p1, p2 } => format!("SumPowers(p1={p1},p2={p2})"),
            PhiKind::ExpPower { p } => format!("ExpPower(p={p})"),
            PhiKind::ExpMinusLinear => "ExpMinusLinear".into(),
            PhiKind::PowerRatio { p1, p2 } => format!("PowerRatio(p1={p1},p2={p2})"),
            PhiKind::LogWeighted => "LogWeighted".into(),
            PhiKind::LinearMinusLog => "LinearMinusLog".into(),
            PhiKind::LogPower { p } => format!("LogPower(p={p})"),
            PhiKind::Custom { phi, .. } => format!("Custom({phi})"),
        }
    }

    /// `φ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let v = self.eval_pos(x.abs());
        if x < 0.0 {
            -v
        } else {
            v
        }
    }

    fn eval_pos(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match &self.kind {
            PhiKind::PLaplacian { p } => pow(x, p - 1.0),
            PhiKind::SumPowers { p1, p2 } => pow(x, *p1) + pow(x, *p2),
            PhiKind::ExpPower { p } => pow(x, *p).exp_m1(),
            PhiKind::ExpMinusLinear => {
                if x < 0.1 {
                    series(x, |k| 1.0 / factorial(k), 2, 18)
                } else {
                    x.exp_m1() - x
                }
            }
            PhiKind::PowerRatio { p1, p2 } => pow(x, *p1) / (1.0 + pow(x, *p2)),
            PhiKind::LogWeighted => x * (x.ln().abs() + 1.0),
            PhiKind::LinearMinusLog => {
                if x < 0.1 {
                    series(x, |k| alt(k) / k as f64, 2, 24)
                } else {
                    x - x.ln_1p()
                }
            }
            PhiKind::LogPower { p } => pow(x.ln_1p(), *p),
            PhiKind::Custom { phi, .. } => phi.eval(x),
        }
    }

    /// `φ⁻¹(y)`: closed form where available, otherwise a bracketed search
    /// started on `[0, max(1, y)]` with doubling.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() {
            return Err(Error::Numerical("φ⁻¹ of NaN".into()));
        }
        let x = self.inverse_pos(y.abs())?;
        Ok(if y < 0.0 { -x } else { x })
    }

    fn inverse_pos(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(0.0);
        }
        if y.is_infinite() {
            return Ok(f64::INFINITY);
        }
        let closed = match &self.kind {
            PhiKind::PLaplacian { p } => Some(pow(y, 1.0 / (p - 1.0))),
            PhiKind::SumPowers { p1, p2 } if p1 == p2 => Some(pow(0.5 * y, 1.0 / p1)),
            PhiKind::SumPowers { p1, p2 } if *p1 == 2.0 * p2 => {
                // s² + s = y with s = x^{p2}
                let s = 2.0 * y / (1.0 + (1.0 + 4.0 * y).sqrt());
                Some(pow(s, 1.0 / p2))
            }
            PhiKind::ExpPower { p } => Some(pow(y.ln_1p(), 1.0 / p)),
            PhiKind::LogPower { p } => Some(pow(y, 1.0 / p).exp_m1()),
            _ => None,
        };
        if let Some(x) = closed {
            return Ok(x);
        }
        self.inverse_numeric(y)
    }

    fn inverse_numeric(&self, y: f64) -> Result<f64> {
        let phi = |x: f64| self.eval_pos(x);
        let (mut lo, mut hi);
        if phi(1.0) >= y {
            // descend by squaring, then close in geometrically
            hi = 1.0;
            lo = 0.5;
            while phi(lo) >= y {
                hi = lo;
                lo *= lo;
                if lo < f64::MIN_POSITIVE {
                    lo = 0.0;
                    break;
                }
            }
        } else {
            hi = y.max(1.0);
            lo = 1.0;
            let mut growth = 0;
            while !(phi(hi) >= y) {
                if growth == INVERSE_MAX_ITER || !hi.is_finite() {
                    return Err(Error::Numerical(format!(
                        "φ⁻¹({y}): bracket growth exceeded {INVERSE_MAX_ITER} doublings"
                    )));
                }
                lo = hi;
                hi *= 2.0;
                growth += 1;
            }
        }
        while lo > 0.0 && hi > 4.0 * lo {
            let mid = lo.sqrt() * hi.sqrt();
            if phi(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r = illinois(
            |x| phi(x) - y,
            lo,
            hi,
            phi(lo) - y,
            phi(hi) - y,
            rel_tol(4.0 * f64::EPSILON, f64::MIN_POSITIVE),
            INVERSE_MAX_ITER,
        );
        let x = r.best();
        if !r.converged && (phi(x) - y).abs() > INVERSE_TOLERANCE {
            return Err(Error::Numerical(format!(
                "φ⁻¹({y}) did not converge: bracket [{}, {}]",
                r.lo, r.hi
            )));
        }
        Ok(x)
    }

    /// `φ′(x)` for `x > 0`, when known.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        let x = x.abs();
        Some(match &self.kind {
            PhiKind::PLaplacian { p } => (p - 1.0) * pow(x, p - 2.0),
            PhiKind::SumPowers { p1, p2 } => p1 * pow(x, p1 - 1.0) + p2 * pow(x, p2 - 1.0),
            PhiKind::ExpPower { p } => p * pow(x, p - 1.0) * pow(x, *p).exp(),
            PhiKind::ExpMinusLinear => x.exp_m1(),
            PhiKind::PowerRatio { p1, p2 } => {
                let d = 1.0 + pow(x, *p2);
                (p1 * pow(x, p1 - 1.0) * d - p2 * pow(x, p1 + p2 - 1.0)) / (d * d)
            }
            PhiKind::LogWeighted => {
                if x < 1.0 {
                    -x.ln()
                } else {
                    x.ln() + 2.0
                }
            }
            PhiKind::LinearMinusLog => x / (1.0 + x),
            PhiKind::LogPower { p } => p * pow(x.ln_1p(), p - 1.0) / (1.0 + x),
            PhiKind::Custom { derivative, .. } => derivative.as_ref()?.eval(x),
        })
    }

    pub fn has_derivative(&self) -> bool {
        !matches!(&self.kind, PhiKind::Custom { derivative: None, .. })
    }

    /// Closed form of `Φ(x) = ∫_0^x φ` for `x ≥ 0`, when one is known.
    fn primitive_closed(&self, x: f64) -> Option<f64> {
        Some(match &self.kind {
            PhiKind::PLaplacian { p } => pow(x, *p) / p,
            PhiKind::SumPowers { p1, p2 } => pow(x, p1 + 1.0) / (p1 + 1.0) + pow(x, p2 + 1.0) / (p2 + 1.0),
            PhiKind::ExpPower { p } if *p == 1.0 => {
                if x < 0.1 {
                    series(x, |k| 1.0 / factorial(k), 2, 18)
                } else {
                    x.exp_m1() - x
                }
            }
            PhiKind::ExpMinusLinear => {
                if x < 0.1 {
                    series(x, |k| 1.0 / factorial(k), 3, 19)
                } else {
                    x.exp_m1() - x - 0.5 * x * x
                }
            }
            PhiKind::LogWeighted => {
                if x == 0.0 {
                    0.0
                } else if x < 1.0 {
                    x * x * (0.75 - 0.5 * x.ln())
                } else {
                    x * x * (0.25 + 0.5 * x.ln()) + 0.5
                }
            }
            PhiKind::LinearMinusLog => {
                if x < 0.1 {
                    series(x, |k| alt(k - 1) / ((k - 1) * k) as f64, 3, 25)
                } else {
                    0.5 * x * x - ((1.0 + x) * x.ln_1p() - x)
                }
            }
            PhiKind::LogPower { p } if *p == 1.0 => {
                if x < 0.1 {
                    series(x, |k| alt(k) / (k * (k - 1)) as f64, 2, 24)
                } else {
                    (1.0 + x) * x.ln_1p() - x
                }
            }
            _ => return None,
        })
    }

    pub fn has_closed_primitive(&self) -> bool {
        self.primitive_closed(0.0).is_some()
    }

    /// `Φ(x) = ∫_0^x φ`, an even function.
    pub fn primitive(&self, x: f64) -> f64 {
        let x = x.abs();
        match self.primitive_closed(x) {
            Some(v) => v,
            None => self.integrate_numeric(0.0, x),
        }
    }

    /// `∫_{x0}^{x1} φ`.
    pub fn integral_between(&self, x0: f64, x1: f64) -> f64 {
        let (s0, s1) = (x0.abs(), x1.abs());
        if self.has_closed_primitive() {
            return self.primitive(s1) - self.primitive(s0);
        }
        if s0.max(s1) <= 2.0 * s0.min(s1) {
            // one panel away from the origin
            return adaptive_gauss(&|t| self.eval_pos(t), s0, s1);
        }
        self.integrate_numeric(0.0, s1) - self.integrate_numeric(0.0, s0)
    }

    /// `∫_0^x φ` over geometric panels refined toward the origin.
    fn integrate_numeric(&self, lo: f64, x: f64) -> f64 {
        debug_assert_eq!(lo, 0.0);
        if x == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut hi = x;
        for _ in 0..60 {
            let mid = 0.5 * hi;
            let piece = adaptive_gauss(&|t| self.eval_pos(t), mid, hi);
            total += piece;
            hi = mid;
            if piece.abs() <= 1e-17 * total.abs() {
                break;
            }
        }
        total + gauss_legendre(&|t| self.eval_pos(t), 0.0, hi)
    }
}

impl Serialize for Homeomorphism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

fn pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e == 3.0 {
        x * x * x
    } else if e == 0.5 {
        x.sqrt()
    } else {
        x.powf(e)
    }
}

fn alt(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `Σ_{k=from}^{to} coef(k)·x^k`, summed from the small end.
fn series(x: f64, coef: impl Fn(usize) -> f64, from: usize, to: usize) -> f64 {
    let mut acc = 0.0;
    for k in (from..=to).rev() {
        acc = acc * x + coef(k);
    }
    acc * x.powi(from as i32)
}

/// Gauss–Legendre with interval halving until two levels agree to
/// roundoff.
fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gauss_legendre(f, a, m), gauss_legendre(f, m, b));
        let refined = l + r;
        if depth == 0 || (refined - whole).abs() <= 1e-15 * refined.abs() {
            return refined;
        }
        go(f, a, m, l, depth - 1) + go(f, m, b, r, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    go(f, a, b, gauss_legendre(f, a, b), 12)
}

fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const NODES: [f64; 8] = [
        -0.960_289_856_497_536_2,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const WEIGHTS: [f64; 8] = [
        0.101_228_536_290_376_3,
        0.222_381_034_453_374_5,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362,
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * NODES
        .iter()
        .zip(WEIGHTS)
        .map(|(&z, w)| w * f(mid + half * z))
        .sum::<f64>()
}

/// One instance of every catalog kind, with representative parameters.
pub fn catalog() -> Vec<Homeomorphism> {
    [
        PhiKind::PLaplacian { p: 2.0 },
        PhiKind::PLaplacian { p: 3.0 },
        PhiKind::PLaplacian { p: 1.5 },
        PhiKind::SumPowers { p1: 2.0, p2: 1.0 },
        PhiKind::SumPowers { p1: 3.0, p2: 0.5 },
        PhiKind::ExpPower { p: 1.0 },
        PhiKind::ExpPower { p: 2.0 },
        PhiKind::ExpMinusLinear,
        PhiKind::PowerRatio { p1: 2.0, p2: 1.0 },
        PhiKind::LogWeighted,
        PhiKind::LinearMinusLog,
        PhiKind::LogPower { p: 1.0 },
        PhiKind::LogPower { p: 2.0 },
    ]
    .into_iter()
    .map(|k| Homeomorphism::new(k).expect("catalog parameters are admissible"))
    .collect()
}
