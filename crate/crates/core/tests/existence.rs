mod common;

use common::*;
use philap::error::Error;
use philap::existence::*;
use philap::expr::parse_expression;
use philap::funcgrid::{Grid, Interval, SampledFunction};
use philap::homeo::GrowthWitness;
use philap::solveop::{solve_s_phi, BvpSolution};

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn is_construction(e: &Error) -> bool {
    matches!(e.root(), Error::Construction(_))
}

/// Case I constants for `φ(t) = t`, `ψ(t) = t`, `f = √t`, `m ≡ 1` on `(0,1)`
/// in closed form: `I = ∫δ^{1/2} = (2/3)√(1/2)`, `M_Ω = 0.4·(1/2)^{5/2}`, `θ̲ = 1`.
fn hand_constants_case_i(lambda: f64) -> (f64, f64, f64) {
    let integral = 2.0 / 3.0 * 0.5f64.sqrt();
    let m_omega = 0.4 * 0.5f64.powf(2.5);
    let big_m = (1.0 / (lambda * m_omega.sqrt())).max(lambda * integral.sqrt());
    (integral, m_omega, big_m)
}

#[test]
fn epsilon_case_i_satisfies_the_chain_by_substitution() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let eps = pick_epsilon_case_i(&spec).unwrap();
    let (integral, _, big_m) = hand_constants_case_i(1.0);
    assert!(eps * integral <= 1.0 / 0.5);
    assert!(eps <= 1.0);
    assert!(big_m * eps <= eps.sqrt());
    // largest dyadic: doubling breaks the binding e0 link
    assert!(big_m * 2.0 * eps > (2.0 * eps).sqrt());
    assert_eq!(eps, 0.0625);
}

#[test]
fn epsilon_case_i_shrinks_with_lambda() {
    let e1 = pick_epsilon_case_i(&sqrt_problem(p_lap(2.0), ones(), 1.0)).unwrap();
    let e2 = pick_epsilon_case_i(&sqrt_problem(p_lap(2.0), ones(), 0.01)).unwrap();
    assert!(e2 < e1);
    let (_, _, big_m) = hand_constants_case_i(0.01);
    assert!(big_m * e2 <= e2.sqrt());
    assert!(big_m * 2.0 * e2 > (2.0 * e2).sqrt());
}

#[test]
fn epsilon_case_i_rejects_q_equal_p_minus_one() {
    let mut spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    spec.case = CaseSpec::I {
        psi: GrowthWitness::power(1.0, 1.0, 1.0).unwrap(),
        q: 1.0,
    };
    let err = pick_epsilon_case_i(&spec).unwrap_err();
    assert!(matches!(err.root(), Error::HypothesisViolation(_)), "{err}");
}

#[test]
fn case_i_pair_margins_recomputed_independently() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let eps = pick_epsilon_case_i(&spec).unwrap();
    let pair = build_sub_super_case_i(&spec, eps).unwrap();
    let x = spec.grid.nodes();
    let v = pair.sub.u.values();
    let w = pair.sup.u.values();
    let d = |x: f64| x.min(1.0 - x).sqrt();
    let interior = 1..N - 1;
    let sub = interior
        .clone()
        .map(|i| v[i].sqrt() - eps * d(x[i]))
        .fold(f64::INFINITY, f64::min);
    let sup_m = interior
        .map(|i| d(x[i]) / eps - w[i].sqrt())
        .fold(f64::INFINITY, f64::min);
    let order = (0..N).map(|i| w[i] - v[i]).fold(f64::INFINITY, f64::min);
    let (integral, m_omega, big_m) = hand_constants_case_i(1.0);
    let constant = |name: &str| pair.constants[name];
    for (name, exact) in [("integral_m_delta_q", integral), ("M_omega", m_omega), ("M", big_m)] {
        assert!(
            (constant(name) - exact).abs() <= 1e-6 * exact,
            "{name}: {} vs {exact}",
            constant(name)
        );
    }
    assert_eq!(constant("theta_under"), 1.0);
    // scalar links from the stored constants, nodal ones from scratch
    let (integral, big_m) = (constant("integral_m_delta_q"), constant("M"));
    let expected = [
        ("sub", sub),
        ("super", sup_m),
        ("order", order),
        ("sub_bound", 1.0 - sup(&v)),
        ("pri", 2.0 - eps * integral),
        ("e2", 1.0f64.min(2.0 / integral) - eps),
        ("e0", eps.sqrt() - big_m * eps),
    ];
    for (name, value) in expected {
        let stored = pair.margin(name).unwrap_or_else(|| panic!("missing margin {name}"));
        assert!(stored >= 0.0, "{name} = {stored}");
        assert!(
            (stored - value).abs() <= 1e-10,
            "{name}: stored {stored}, recomputed {value}"
        );
    }
    assert!(sup(&v) <= spec.growth.t_bar);
}

#[test]
fn pure_power_source_is_nearly_tight_for_the_sub() {
    // f = k₁ t^q exactly, so the sub inequality has no slack from f
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let eps = pick_epsilon_case_i(&spec).unwrap();
    let pair = build_sub_super_case_i(&spec, eps).unwrap();
    let slack = pair.margin("sub").unwrap();
    let src_scale = eps * 0.5f64.sqrt();
    assert!(slack >= 0.0);
    assert!(slack < 0.1 * src_scale, "slack {slack} vs source scale {src_scale}");
}

#[test]
fn doubled_epsilon_fails_construction() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let eps = pick_epsilon_case_i(&spec).unwrap();
    let err = build_sub_super_case_i(&spec, 2.0 * eps).unwrap_err();
    assert!(is_construction(&err), "{err}");
}

fn case_ii_given(lambda: f64, q2: f64) -> ProblemSpec {
    let case = CaseSpec::II {
        p: 1.0,
        q1: 0.5,
        q2,
        k: Some(1.0),
        n: Some(0.5),
    };
    ProblemSpec::new(
        p_lap(2.0),
        parse_expression("sqrt(t)").unwrap(),
        sqrt_growth(),
        ones(),
        lambda,
        case,
    )
    .unwrap()
}

#[test]
fn case_ii_constants_satisfy_the_chain_by_substitution() {
    let spec = case_ii_given(1.0, 0.5);
    let (eps, gamma) = pick_constants_case_ii(&spec).unwrap();
    let (integral, n_omega, _) = hand_constants_case_i(1.0);
    // ew with θ̲ = 1, K = 1, p = 1: ε ≤ (λ N_Ω^{1/2})^2
    let ew = (n_omega.sqrt()).powi(2);
    assert!(eps <= ew && eps <= 2.0 / integral && eps <= 1.0 / integral);
    assert!(2.0 * eps > ew.min(1.0 / integral));
    // gaio: γ ≥ max{φ(1)/∫m, (λ k₂ (N∫m)^{q2})^{1/(1−q2)}, εc_Ω^{q1}}
    let floor = 1.0f64.max(0.5f64.sqrt().powi(2)).max(eps * 0.5f64.sqrt());
    assert!(gamma >= floor && gamma < 2.0 * floor);
    assert_eq!((eps, gamma), (0.0625, 1.0));
    let pair = build_sub_super_case_ii(&spec, eps, gamma).unwrap();
    for (name, slack) in &pair.margins {
        assert!(*slack >= -1e-12, "{name} = {slack}");
    }
}

#[test]
fn case_ii_gamma_grows_like_the_thousandth_power() {
    let lambda = 2.2;
    let spec = case_ii_given(lambda, 0.999);
    let (_, gamma) = pick_constants_case_ii(&spec).unwrap();
    let floor = (lambda * 0.5f64.powf(0.999)).powf(1000.0);
    assert!(floor > 1e40);
    assert!(
        gamma.is_finite() && gamma >= floor && gamma < 2.0 * floor,
        "gamma {gamma:e} floor {floor:e}"
    );
}

#[test]
fn case_ii_rejects_q1_equal_p() {
    let case = CaseSpec::II {
        p: 1.0,
        q1: 1.0,
        q2: 0.5,
        k: Some(1.0),
        n: Some(0.5),
    };
    let spec = ProblemSpec::new(
        p_lap(2.0),
        parse_expression("sqrt(t)").unwrap(),
        sqrt_growth(),
        ones(),
        1.0,
        case,
    )
    .unwrap();
    let err = pick_constants_case_ii(&spec).unwrap_err();
    assert!(matches!(err.root(), Error::Precondition(_)), "{err}");
}

#[test]
fn halved_gamma_fails_construction() {
    let spec = case_ii_given(1.0, 0.5);
    let (eps, gamma) = pick_constants_case_ii(&spec).unwrap();
    let err = build_sub_super_case_ii(&spec, eps, 0.5 * gamma).unwrap_err();
    assert!(is_construction(&err), "{err}");
}

#[test]
fn case_ii_indicator_weight_gives_positive_sub() {
    let case = CaseSpec::II {
        p: 1.0,
        q1: 0.5,
        q2: 0.5,
        k: Some(1.0),
        n: Some(0.5),
    };
    let m = indicator(0.4, 0.6);
    let spec = ProblemSpec::new(
        p_lap(2.0),
        parse_expression("sqrt(t)").unwrap(),
        sqrt_growth(),
        m,
        1.0,
        case,
    )
    .unwrap();
    let (eps, gamma) = pick_constants_case_ii(&spec).unwrap();
    let pair = build_sub_super_case_ii(&spec, eps, gamma).unwrap();
    let v = pair.sub.u.values();
    assert!(v[1..v.len() - 1].iter().all(|&t| t > 0.0));
    // no source outside (0.4, 0.6): the sub is linear there
    let x = spec.grid.nodes();
    let left: Vec<usize> = (0..x.len()).filter(|&i| x[i] <= 0.4).collect();
    let slope = v[1] / x[1];
    for &i in &left[1..] {
        assert!((v[i] - slope * x[i]).abs() <= 1e-12 * sup(&v).max(1e-300) + 1e-15);
    }
}

fn with_r(spec: ProblemSpec, r: SampledFunction) -> ProblemSpec {
    spec.with_r(r).unwrap().with_h2(1.0, 1.0).unwrap()
}

#[test]
fn zero_r_reduces_to_the_plain_construction() {
    let base = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let eps = pick_epsilon_case_i(&base).unwrap();
    let zero = SampledFunction::zeros(&base.grid);
    let spec = with_r(base.clone(), zero);
    let a = adjust_sub_for_r(&spec, eps).unwrap();
    let b = build_sub_super_case_i(&base, eps).unwrap();
    assert_eq!(a.epsilon, b.epsilon);
    assert_eq!(a.sub.u.values(), b.sub.u.values());
    assert_eq!(a.sup.u.values(), b.sup.u.values());
    assert_eq!(a.margins, b.margins);
}

/// `λ m f(v) − r φ(v) − εmδ^q` at interior nodes for `φ(t) = t`, `q = 1/2`.
fn combined_margin(pair: &SubSuperPair, m: f64, r: f64, x: &[f64]) -> f64 {
    let v = pair.sub.u.values();
    (1..x.len() - 1)
        .map(|i| m * v[i].sqrt() - r * v[i] - pair.epsilon * m * x[i].min(1.0 - x[i]).sqrt())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn dominated_r_gives_a_valid_pair() {
    let spec = with_r(sqrt_problem(p_lap(2.0), ones(), 1.0), ones());
    let eps = pick_epsilon_case_i(&spec.without_r()).unwrap();
    let pair = adjust_sub_for_r(&spec, eps).unwrap();
    assert!(pair.construction.contains("Dominated"), "{}", pair.construction);
    let slack = combined_margin(&pair, 1.0, 1.0, spec.grid.nodes());
    assert!(slack >= 0.0);
    assert!((slack - pair.margin("sub_combined").unwrap()).abs() <= 1e-10);
    assert!(pair.margins.values().all(|&s| s >= -1e-9));
}

#[test]
fn bounded_r_uses_the_second_branch() {
    let spec = with_r(sqrt_problem(p_lap(2.0), ones(), 1.0), ones().scale(2.0));
    let eps = pick_epsilon_case_i(&spec.without_r()).unwrap();
    let pair = adjust_sub_for_r(&spec, eps).unwrap();
    assert!(pair.construction.contains("Bounded"), "{}", pair.construction);
    let slack = combined_margin(&pair, 1.0, 2.0, spec.grid.nodes());
    assert!(slack >= 0.0);
    assert!((slack - pair.margin("sub_combined").unwrap()).abs() <= 1e-10);
    let cert = iterate_between(&spec, &pair).unwrap();
    assert!(cert.final_residual <= 1e-6 && cert.in_positive_cone);
}

#[test]
fn r_without_an_admissible_branch_is_rejected() {
    let base = sqrt_problem(p_lap(2.0), indicator(0.4, 0.6), 1.0);
    let r = SampledFunction::constant(&base.grid, 2.0);
    let spec = with_r(base, r);
    let err = adjust_sub_for_r(&spec, 0.0625).unwrap_err();
    assert!(matches!(err.root(), Error::Precondition(_)), "{err}");
}

fn zero_source_spec(f: &str) -> ProblemSpec {
    let phi = p_lap(2.0);
    let case = case_i(&phi);
    ProblemSpec::new(phi, parse_expression(f).unwrap(), sqrt_growth(), ones(), 1.0, case).unwrap()
}

fn solve(h: &SampledFunction) -> BvpSolution {
    solve_s_phi(&p_lap(2.0), h).unwrap()
}

#[test]
fn zero_nonlinearity_converges_to_zero_at_once() {
    let spec = zero_source_spec("0");
    let pair = SubSuperPair::from_parts(solve(&SampledFunction::zeros(&spec.grid)), solve(&ones()), 1.0).unwrap();
    let cert = iterate_between(&spec, &pair).unwrap();
    assert_eq!(cert.iterations, 1);
    assert_eq!(cert.final_residual, 0.0);
    assert!(sup(&cert.solution.u.values()) == 0.0);
    assert!(!cert.in_positive_cone);
    assert!(!cert.warnings.is_empty());
}

#[test]
fn constant_nonlinearity_gives_the_parabola() {
    let spec = zero_source_spec("1");
    let pair = SubSuperPair::from_parts(
        solve(&SampledFunction::zeros(&spec.grid)),
        solve(&ones().scale(10.0)),
        1.0,
    )
    .unwrap();
    let cert = iterate_between(&spec, &pair).unwrap();
    assert!(cert.iterations <= 2);
    let exact: Vec<f64> = spec.grid.nodes().iter().map(|x| x * (1.0 - x) / 2.0).collect();
    assert!(max_diff(&cert.solution.u.values(), &exact) <= 1e-12);
    assert!(cert.in_positive_cone);
}

#[test]
fn sqrt_solution_matches_shooting() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let cert = solve_problem(&spec).unwrap();
    assert!(cert.final_residual <= 1e-6);
    assert!(cert.in_positive_cone);
    let shot = shooting_sqrt(1.0, N - 1);
    let u = cert.solution.u.values();
    let err = max_diff(&u, &shot);
    assert!(err <= 1e-6 * sup(&u).max(1.0), "shooting gap {err:e}");
    let (lo, hi) = cert.sandwich_gaps;
    assert!(lo >= -1e-8 && hi >= -1e-8);
}

#[test]
fn p3_case_i_end_to_end() {
    let phi = p_lap(3.0);
    let case = CaseSpec::I {
        psi: GrowthWitness::power(1.0, 2.0, 1.0).unwrap(),
        q: 0.5,
    };
    let spec = ProblemSpec::new(
        phi,
        parse_expression("t^(1/2)").unwrap(),
        sqrt_growth(),
        ones(),
        1.0,
        case,
    )
    .unwrap();
    let cert = solve_problem(&spec).unwrap();
    assert!(cert.in_positive_cone && cert.final_residual <= 1e-6);
}

#[test]
fn case_ii_end_to_end() {
    let cert = solve_problem(&case_ii_given(1.0, 0.5)).unwrap();
    assert!(cert.in_positive_cone && cert.final_residual <= 1e-6);
    assert_eq!(cert.pair.construction, "case II");
}

#[test]
fn case_i_and_case_ii_agree_for_the_laplacian() {
    let one = solve_problem(&sqrt_problem(p_lap(2.0), ones(), 1.0)).unwrap();
    let two = solve_problem(&sqrt_problem_ii(p_lap(2.0), ones(), 1.0, 1.0)).unwrap();
    let gap = max_diff(&one.solution.u.values(), &two.solution.u.values());
    assert!(
        gap <= 1e-5 || (one.final_residual <= 1e-6 && two.final_residual <= 1e-6),
        "gap {gap:e}"
    );
}

#[test]
fn small_lambda_has_small_norm_consistent_with_sweep() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1e-6);
    let cert = solve_problem(&spec).unwrap();
    let direct = sup(&cert.solution.u.values()) + sup(&cert.solution.uprime.values());
    assert!(direct < 1e-10);
    let table = lambda_sweep(&spec, &[1e-6]).unwrap();
    assert!((table.rows[0].c1_norm - direct).abs() <= 1e-6 * direct);
}

#[test]
fn sweep_decreases_and_respects_the_bound() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let table = lambda_sweep(&spec, &[1.0, 0.1, 0.01, 0.001]).unwrap();
    assert!(table.monotone());
    for w in table.rows.windows(2) {
        assert!(w[1].c1_norm < w[0].c1_norm);
    }
    assert!(table.rows.last().unwrap().c1_norm <= 0.01);
    let x = spec.grid.nodes();
    for (row, cert) in table.rows.iter().zip(&table.certificates) {
        let u = cert.solution.u.values();
        let fu: Vec<f64> = u.iter().map(|t| t.max(0.0).sqrt()).collect();
        let bound = row.lambda * trapezoid(x, &fu) * 0.5;
        assert!((bound - row.bound_value).abs() <= 1e-12 * bound.max(1.0));
        assert!(sup(&u) <= bound + 1e-6);
        assert!(row.bound_holds);
    }
    // reuse rule: pointwise nonincreasing
    for w in table.certificates.windows(2) {
        let (hi, lo) = (w[0].solution.u.values(), w[1].solution.u.values());
        assert!(lo.iter().zip(&hi).all(|(l, h)| *l <= h + 1e-8));
    }
}

#[test]
fn single_lambda_sweep_matches_solve_problem() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let cert = solve_problem(&spec).unwrap();
    let table = lambda_sweep(&spec, &[1.0]).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].sup_u, sup(&cert.solution.u.values()));
    assert_eq!(table.rows[0].sup_uprime, sup(&cert.solution.uprime.values()));
}

#[test]
fn increasing_lambdas_are_rejected() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let err = lambda_sweep(&spec, &[0.1, 1.0]).unwrap_err();
    assert!(matches!(err.root(), Error::Input(_)), "{err}");
}

#[test]
fn sign_changing_weight_has_a_nonnegative_solution() {
    let spec = sqrt_problem(p_lap(2.0), steps(&[0.5], &[1.0, -1.0]), 1.0);
    let cert = solve_sign_changing(&spec, None).unwrap();
    let u = cert.solution.u.values();
    assert!(u.iter().all(|&t| t >= 0.0) && sup(&u) > 0.0);
    assert!(cert.final_residual <= 1e-6);
    let kink = cert
        .pair
        .kink_set
        .iter()
        .find(|k| (k.x - 0.5).abs() < 1e-12)
        .expect("kink at 0.5");
    assert!(kink.holds());
}

#[test]
fn sign_changing_path_matches_solve_problem_on_the_whole_interval() {
    let spec = sqrt_problem(p_lap(2.0), ones(), 1.0);
    let direct = solve_problem(&spec).unwrap();
    let signed = solve_sign_changing(&spec, Some(Interval::new(0.0, 1.0).unwrap())).unwrap();
    assert!(max_diff(&direct.solution.u.values(), &signed.solution.u.values()) <= 1e-7);
}

#[test]
fn nonpositive_weight_has_no_admissible_subinterval() {
    let grid = Grid::uniform(unit(), N).unwrap();
    let spec = sqrt_problem(p_lap(2.0), SampledFunction::constant(&grid, -1.0), 1.0);
    let err = solve_sign_changing(&spec, None).unwrap_err();
    assert!(matches!(err.root(), Error::Precondition(_)), "{err}");
}

#[test]
fn certificate_json_has_the_documented_keys() {
    let cert = solve_problem(&sqrt_problem(p_lap(2.0), ones(), 1.0)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
    for key in ["iterations", "final_residual", "in_positive_cone", "slopes"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    for key in ["epsilon", "gamma", "margins"] {
        assert!(v["pair"].get(key).is_some(), "{key}");
    }
}
