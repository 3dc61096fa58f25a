//! One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use common::*;
use philap::existence::{lambda_sweep, solve_problem, solve_sign_changing, ExistenceCertificate, ProblemSpec};
use philap::funcgrid::{Grid, PiecewiseSpec, SampledFunction};
use philap::homeo::{
    check_h1_default, check_h1_prime_default, check_h2_default, check_h2_derivative_default,
    h2_constant_from_power_bounds, GrowthWitness, Homeomorphism, PhiKind,
};
use philap::solveop::{bound_envelope, solve_s_phi};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn phi(kind: PhiKind) -> Homeomorphism {
    Homeomorphism::new(kind).unwrap()
}

fn uniform(n: usize) -> Grid {
    Grid::uniform(unit(), n).unwrap()
}

/// `(3/4)[(1/2)^{4/3} − |1/2 − x|^{4/3}]`, the `p = 4`, `h ≡ 1` solution.
fn p4_exact(x: f64) -> f64 {
    0.75 * (0.5f64.powf(4.0 / 3.0) - (0.5 - x).abs().powf(4.0 / 3.0))
}

fn p4_error(n: usize) -> f64 {
    let g = uniform(n);
    let sol = solve_s_phi(&p_lap(4.0), &SampledFunction::constant(&g, 1.0)).unwrap();
    let exact: Vec<f64> = g.nodes().iter().map(|&x| p4_exact(x)).collect();
    max_diff(&sol.u.values(), &exact)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let g = uniform(N);
    let sol = solve_s_phi(&p_lap(2.0), &SampledFunction::constant(&g, 1.0)).unwrap();
    let elapsed = start.elapsed();
    let exact: Vec<f64> = g.nodes().iter().map(|x| x * (1.0 - x) / 2.0).collect();
    let err = max_diff(&sol.u.values(), &exact);
    let c_err = (sol.c_h - 0.5).abs();
    outcome(
        err <= 1e-7 && c_err <= 1e-10 && elapsed < Duration::from_millis(100),
        format!("sup error {err:.2e}, |c_h - 0.5| {c_err:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let err = p4_error(N);
    outcome(err <= 1e-6, format!("sup error {err:.2e}"))
}

fn five_phis() -> Vec<Homeomorphism> {
    vec![
        p_lap(2.0),
        p_lap(4.0),
        sum_powers(2.0, 1.0),
        phi(PhiKind::ExpPower { p: 1.0 }),
        phi(PhiKind::LogPower { p: 1.0 }),
    ]
}

/// Random step weight: up to six pieces, values in `[0, 3]`, about a fifth
/// of them zero.
fn random_steps(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let k = rng.gen_range(0..6);
    let mut bps: Vec<f64> = (0..k).map(|_| (rng.gen_range(1..1000) as f64) / 1000.0).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let values = (0..=bps.len())
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..3.0)
            }
        })
        .collect();
    (bps, values)
}

fn sample_steps(bps: &[f64], values: &[f64]) -> SampledFunction {
    let spec = PiecewiseSpec::steps(bps.to_vec(), values).unwrap();
    let g = PiecewiseSpec::grid_for(unit(), N, &[&spec]).unwrap();
    spec.sample(&g).unwrap()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phis = five_phis();
    let (mut weights, mut violations, mut worst) = (0, 0, f64::NEG_INFINITY);
    while weights < 200 {
        let (bps, values) = random_steps(&mut rng);
        if values.iter().all(|&v| v == 0.0) {
            continue;
        }
        weights += 1;
        let h = sample_steps(&bps, &values);
        for phi in &phis {
            let u = solve_s_phi(phi, &h).unwrap().u.values();
            let env = bound_envelope(phi, &h).unwrap();
            let (lo, hi) = (env.lower.values(), env.upper.values());
            for i in 0..u.len() {
                let excess = (lo[i] - u[i]).max(u[i] - hi[i]);
                worst = worst.max(excess);
                if excess > 1e-6 {
                    violations += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && elapsed < Duration::from_secs(30),
        format!("{weights} weights x 5 phi, {violations} violations, worst excess {worst:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let phis = five_phis();
    let (mut violations, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..200 {
        let (bps, lo) = random_steps(&mut rng);
        let hi: Vec<f64> = lo
            .iter()
            .map(|v| {
                v + if rng.gen_bool(0.5) {
                    rng.gen_range(0.0..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        let (h1, h2) = (sample_steps(&bps, &lo), sample_steps(&bps, &hi));
        for phi in &phis {
            let u1 = solve_s_phi(phi, &h1).unwrap().u.values();
            let u2 = solve_s_phi(phi, &h2).unwrap().u.values();
            for (a, b) in u1.iter().zip(&u2) {
                worst = worst.max(a - b);
                if *a > b + 1e-6 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("200 pairs x 5 phi, {violations} violations, worst excess {worst:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rows: Vec<(&str, bool, bool)> = Vec::new();
    let mut row = |name: &'static str, expected: bool, got: bool| rows.push((name, expected, got));
    let ok = |r: philap::Result<philap::homeo::HypothesisReport>| r.unwrap().verdict.is_corroborated();
    let power = |p: f64, t1: f64| GrowthWitness::power(1.0, p, t1).unwrap();

    // (a1): x^2 + x = x^{p2}·(x + 1)
    let a1 = sum_powers(2.0, 1.0);
    row("a1 H1", true, ok(check_h1_default(&a1, &power(1.0, 1.0))));
    row("a1 H2 M=1", true, ok(check_h2_default(&a1, 1.0, 1.0, 1.0)));

    // (a2): e^x − 1, φ(x)/x increasing
    let a2 = phi(PhiKind::ExpPower { p: 1.0 });
    row("a2 H1", true, ok(check_h1_default(&a2, &power(1.0, 1.0))));
    let m = h2_constant_from_power_bounds(&a2, 1.0, 1.0);
    row("a2 H2", true, ok(check_h2_default(&a2, 1.0, m, 1.0)));
    row("a2 H1' |Omega|=2", true, ok(check_h1_prime_default(&a2, 1.0, 1.0)));
    row("a2 H1' |Omega|=4", false, ok(check_h1_prime_default(&a2, 1.0, 2.0)));

    // (a4): x^2/(1 + x), c_Ω = 1
    let a4 = phi(PhiKind::PowerRatio { p1: 2.0, p2: 1.0 });
    row(
        "a4 H2 M=2(1+c)",
        true,
        ok(check_h2_default(&a4, 1.0, 2.0 * (1.0 + 1.0), 1.0)),
    );

    // (b): x(|ln x| + 1) with p = 1/2 and t1 where |ln t| ≤ t^{−1/2} − 1
    let b = phi(PhiKind::LogWeighted);
    row("b H1 p=1/2", true, ok(check_h1_default(&b, &power(0.5, 0.05))));
    row("b H2 M=1", true, ok(check_h2_default(&b, 1.0, 1.0, 1.0)));

    // (c): x − ln(1 + x)
    let c = phi(PhiKind::LinearMinusLog);
    row("c H1' p=1", true, ok(check_h1_prime_default(&c, 1.0, 1.0)));
    let report = check_h2_derivative_default(&c, 1.0).unwrap();
    let bound = 2.0 / (1.0 - 2f64.ln()) * 1.05;
    row(
        "c H2 derivative bound",
        true,
        report.verdict.is_corroborated() && report.constant("M").unwrap() <= bound,
    );

    // (d): ln(1 + x)
    let d = phi(PhiKind::LogPower { p: 1.0 });
    for q in [0.1, 0.5, 1.0, 2.0, 3.0] {
        let name: &'static str = Box::leak(format!("d H1 psi=t^{q}").into_boxed_str());
        row(name, false, ok(check_h1_default(&d, &power(q, 1.0))));
    }
    row("d H1' p=1", true, ok(check_h1_prime_default(&d, 1.0, 1.0)));
    let m = h2_constant_from_power_bounds(&d, 1.0, 1.0);
    row("d H2", true, ok(check_h2_default(&d, 1.0, m, 1.0)));

    let mismatches: Vec<String> = rows
        .iter()
        .filter(|r| r.1 != r.2)
        .map(|r| format!("{} expected {} got {}", r.0, r.1, r.2))
        .collect();
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} verdicts match", rows.len())
        } else {
            mismatches.join("; ")
        },
    )
}

/// Residual, sandwich and cone checks of a certificate.
fn certified(cert: &ExistenceCertificate) -> Result<(), String> {
    if cert.final_residual > 1e-6 {
        return Err(format!("residual {:.2e}", cert.final_residual));
    }
    let (lo, hi) = cert.sandwich_gaps;
    if lo < -1e-8 || hi < -1e-8 {
        return Err(format!("sandwich gaps ({lo:.2e}, {hi:.2e})"));
    }
    if !cert.in_positive_cone {
        return Err(format!("not in the positive cone, slopes {:?}", cert.slopes));
    }
    Ok(())
}

fn existence_suite() -> Vec<(&'static str, Homeomorphism, &'static str, SampledFunction, f64)> {
    let mut out = Vec::new();
    for (pn, phi) in [("p2", p_lap(2.0)), ("p3", p_lap(3.0)), ("x^2+x", sum_powers(2.0, 1.0))] {
        for (mn, m) in [("m=1", ones()), ("m=1(0.4,0.6)", indicator(0.4, 0.6))] {
            for lambda in [0.1, 1.0, 10.0] {
                out.push((pn, phi.clone(), mn, m.clone(), lambda));
            }
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut worst: f64 = 0.0;
    let suite = existence_suite();
    for (pn, phi, mn, m, lambda) in &suite {
        let start = Instant::now();
        let result = solve_problem(&sqrt_problem(phi.clone(), m.clone(), *lambda));
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        match result.map_err(|e| e.to_string()).and_then(|c| certified(&c).map(|_| c)) {
            Ok(c) => worst = worst.max(c.final_residual),
            Err(e) => failures.push(format!("{pn} {mn} lambda={lambda}: {e}")),
        }
        if elapsed > Duration::from_secs(2) {
            failures.push(format!("{pn} {mn} lambda={lambda}: {elapsed:.2?}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} runs, worst residual {worst:.2e}, slowest {slowest:.2?}{}",
            suite.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

fn with_r(spec: ProblemSpec, r: SampledFunction) -> ProblemSpec {
    // φ(tx) ≤ φ(t)φ(x) for t^{p−1} and for t² + t
    spec.with_r(r).unwrap().with_h2(1.0, 1.0).unwrap()
}

fn criterion_7() -> Outcome {
    let mut runs = Vec::new();
    for (pn, phi, mn, m, lambda) in existence_suite() {
        let spec = with_r(sqrt_problem(phi, m.clone(), lambda), m);
        runs.push((format!("{pn} r=m {mn} lambda={lambda}"), spec));
    }
    for (pn, phi) in [("p2", p_lap(2.0)), ("p3", p_lap(3.0)), ("x^2+x", sum_powers(2.0, 1.0))] {
        for lambda in [0.1, 1.0, 10.0] {
            let spec = with_r(sqrt_problem(phi.clone(), ones(), lambda), ones().scale(2.0));
            runs.push((format!("{pn} r=2 m=1 lambda={lambda}"), spec));
        }
    }
    let mut failures = Vec::new();
    let (mut worst, mut least_margin) = (0.0f64, f64::INFINITY);
    for (name, spec) in &runs {
        let result = solve_problem(spec).map_err(|e| e.to_string()).and_then(|c| {
            let combined = c.pair.margin("sub_combined").ok_or("no combined margin")?;
            if combined < 0.0 {
                return Err(format!("combined margin {combined:.2e}"));
            }
            if name.contains("r=2") && !c.pair.construction.contains("Bounded") {
                return Err(format!("expected the bounded branch, got {}", c.pair.construction));
            }
            certified(&c).map(|_| (c.final_residual, combined))
        });
        match result {
            Ok((res, margin)) => {
                worst = worst.max(res);
                least_margin = least_margin.min(margin);
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} runs, worst residual {worst:.2e}, least combined margin {least_margin:.2e}{}",
            runs.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

fn criterion_8() -> Outcome {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let lambdas: Vec<f64> = (0..=6).map(|k| 10f64.powi(-k)).collect();
    let table = match lambda_sweep(&spec, &lambdas) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let nonincreasing = table.rows.windows(2).all(|w| w[1].c1_norm <= w[0].c1_norm);
    let last = table.rows.last().unwrap().c1_norm;
    let bounds = table.rows.iter().all(|r| r.sup_u <= r.bound_value + 1e-6);
    outcome(
        nonincreasing && last <= 1e-2 && bounds,
        format!("C1 norms nonincreasing {nonincreasing}, final {last:.2e}, bound holds on every row {bounds}"),
    )
}

fn criterion_9() -> Outcome {
    let spec = sqrt_problem(p_lap(2.0), steps(&[0.5], &[1.0, -1.0]), 1.0);
    let cert = match solve_sign_changing(&spec, None) {
        Ok(c) => c,
        Err(e) => return outcome(false, e.to_string()),
    };
    let u = cert.solution.u.values();
    let min = u.iter().copied().fold(f64::INFINITY, f64::min);
    let kink = cert.pair.kink_set.iter().find(|k| (k.x - 0.5).abs() < 1e-12);
    let kink_ok = kink.is_some_and(|k| k.holds());
    outcome(
        min >= 0.0 && sup(&u) > 0.0 && cert.final_residual <= 1e-6 && kink_ok,
        format!(
            "min u {min:.2e}, sup u {:.4e}, residual {:.2e}, kink at 0.5 {}",
            sup(&u),
            cert.final_residual,
            kink.map_or("missing".to_string(), |k| format!(
                "left {:.3e} < right {:.3e}: {}",
                k.left_slope,
                k.right_slope,
                k.holds()
            ))
        ),
    )
}

/// Measured order of the `h ≡ 1` oracle error under grid halving. The cell
/// rule integrates `φ⁻¹` of a linear argument in closed form, so this error
/// sits at roundoff on every grid and does not decrease; the line reports
/// that faithfully. As context only, it also reports the Richardson order of
/// `c_h` for `h(x) = 2x`, where the grid does not reproduce the argument.
fn criterion_10() -> Outcome {
    let sizes = [129, 257, 513, 1025, 2049];
    let errors: Vec<f64> = sizes.iter().map(|&n| p4_error(n)).collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let pass = orders.iter().all(|&o| o >= 1.9);

    let c_h = |n: usize| {
        let h = SampledFunction::from_fn(&uniform(n), |x| 2.0 * x).unwrap();
        solve_s_phi(&p_lap(4.0), &h).unwrap().c_h
    };
    let cs: Vec<f64> = sizes.iter().map(|&n| c_h(n)).collect();
    let richardson: Vec<f64> = cs
        .windows(3)
        .map(|w| ((w[0] - w[1]) / (w[1] - w[2])).abs().log2())
        .collect();
    outcome(
        pass,
        format!(
            "h=1 oracle errors {} give orders {}{}; context: c_h orders for h=2x {}",
            errors.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(" "),
            fmt_orders(&orders),
            if pass {
                ""
            } else {
                " (errors at roundoff on every grid, nothing left to reduce)"
            },
            fmt_orders(&richardson)
        ),
    )
}

fn fmt_orders(v: &[f64]) -> String {
    v.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(" ")
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form operator, p=2, h=1", criterion_1),
        ("closed-form operator, p=4, h=1", criterion_2),
        ("two-sided envelope, 200 random weights", criterion_3),
        ("comparison, 200 ordered pairs", criterion_4),
        ("hypothesis golden table", criterion_5),
        ("existence without r", criterion_6),
        ("existence with r", criterion_7),
        ("small-lambda sweep", criterion_8),
        ("sign-changing weight", criterion_9),
        ("grid convergence, p=4", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} [{}] ({:.2?})",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            start.elapsed()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
