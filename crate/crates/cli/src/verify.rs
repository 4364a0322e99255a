//! The `verify` subcommand: a fixed battery of fixtures exercising the
//! calculus rules, the counterexamples that bound them, the degenerate
//! spectrum, and the spectrum oracles. Every fixture is deterministic.

use gencalc_core::deriv::{self, LimitOutcome};
use gencalc_core::func::RealFunction;
use gencalc_core::interval::Interval;
use gencalc_core::pmap::{self, PMap, PMapFamily};
use gencalc_core::rng::SplitMix64;
use gencalc_core::sl::{self, SLProblem};
use gencalc_core::units;

const PI: f64 = std::f64::consts::PI;

type Fixture = (&'static str, fn() -> Result<(), String>);

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn builtin(fam: PMapFamily, alpha: Option<f64>, lo: f64, hi: f64) -> PMap {
    PMap::builtin(fam, alpha, iv(lo, hi)).unwrap()
}

/// Under p = t + h^2 every differentiable function has vanishing derivative.
fn quadratic_annihilates() -> Result<(), String> {
    let pm = builtin(PMapFamily::Quadratic, None, -1.0, 1.0);
    for name in ["sin", "exp", "t3"] {
        let f = RealFunction::by_name(name).unwrap();
        for t in [-0.6, 0.0, 0.5] {
            let v = deriv::gd_limit_num(&pm, &f, t).map_err(|e| e.to_string())?;
            if v.abs() > 1e-9 {
                return Err(format!("D {name}({t}) = {v}, expected 0"));
            }
        }
    }
    Ok(())
}

/// sgn with sgn(0) = 1 is p-differentiable at 0 under p = t + h^2 although
/// it is not continuous there.
fn discontinuous_yet_differentiable() -> Result<(), String> {
    let pm = builtin(PMapFamily::Quadratic, None, -1.0, 1.0);
    let f = RealFunction::by_name("sgn_plus").unwrap();
    let v = deriv::gd_limit_num(&pm, &f, 0.0).map_err(|e| e.to_string())?;
    if v != 0.0 {
        return Err(format!("D sgn(0) = {v}, expected exactly 0"));
    }
    // while under the classical map the same function has no derivative
    let classical = builtin(PMapFamily::Classical, None, -1.0, 1.0);
    match deriv::gd_limit(&classical, &f, 0.0).map_err(|e| e.to_string())? {
        LimitOutcome::NotPDifferentiable { .. } => Ok(()),
        LimitOutcome::Value(r) => Err(format!("classical map gave a value {r:?}")),
    }
}

/// First failure mode: p(t, h) = t admits no solution of p = t + eps at all.
fn h1_failure_no_solution() -> Result<(), String> {
    let pm = PMap::custom("constant_in_h", iv(-1.0, 1.0), |t, _| t);
    let rep = pmap::check_hypotheses(&pm, &[0.0, 0.4], &[1e-2, 1e-3, 1e-4])
        .map_err(|e| e.to_string())?;
    if rep.h1_plus {
        return Err("expected H1+ to fail for the constant-in-h map".into());
    }
    if rep.h1_failures.is_empty() {
        return Err("expected recorded failures".into());
    }
    // the sgn-type function is still p-differentiable with derivative 0
    let f = RealFunction::by_name("sgn_minus").unwrap();
    let v = deriv::gd_limit_num(&pm, &f, 0.0).map_err(|e| e.to_string())?;
    if v != 0.0 {
        return Err(format!("D f(0) = {v}, expected 0"));
    }
    Ok(())
}

/// Second failure mode: p(t, h) = t + e^h solves p = t + eps with
/// h = log eps, which does not tend to 0.
fn h1_failure_limit_violation() -> Result<(), String> {
    let pm = PMap::custom("t_plus_exp_h", iv(-1.0, 1.0), |t, h| t + h.exp());
    let rep = pmap::check_hypotheses(&pm, &[0.0], &[1e-2, 1e-3, 1e-4])
        .map_err(|e| e.to_string())?;
    if rep.h1_plus {
        return Err("expected H1+ to fail for t + e^h".into());
    }
    if rep.h1_plus_evidence.is_empty() {
        return Err("expected solutions to exist (the limit condition is what fails)".into());
    }
    // evidence magnitudes must grow as eps shrinks (h = log eps)
    let hs: Vec<f64> = rep.h1_plus_evidence.iter().map(|s| s.h.abs()).collect();
    if !hs.windows(2).all(|w| w[1] > w[0]) {
        return Err(format!("expected growing |h| along the eps grid, got {hs:?}"));
    }
    Ok(())
}

/// p = t + h^3 has p_h(t, 0) = 0: |t| is p-differentiable at 0 while the
/// classical derivative does not exist.
fn cubic_abs_gap() -> Result<(), String> {
    let pm = builtin(PMapFamily::Cubic, None, -1.0, 1.0);
    let f = RealFunction::by_name("abs").unwrap();
    let v = deriv::gd_limit_num(&pm, &f, 0.0).map_err(|e| e.to_string())?;
    if v.abs() > 1e-10 {
        return Err(format!("D|t|(0) = {v}, expected 0"));
    }
    match deriv::gd_lift(&pm, &f, 0.0) {
        Err(_) => Ok(()),
        Ok(r) => Err(format!("lift should be inapplicable, got {r:?}")),
    }
}

/// Sum/product/quotient/chain residuals under khalil and katugampola.
fn calculus_rules() -> Result<(), String> {
    let cases = [
        (builtin(PMapFamily::Khalil, Some(0.5), 0.01, 1.0), "sin", "cos", 0.5),
        (builtin(PMapFamily::Khalil, Some(0.8), 0.01, 1.0), "t2", "exp", 0.3),
        (builtin(PMapFamily::Katugampola, Some(0.4), 0.05, 1.0), "t3", "cos", 0.7),
    ];
    for (pm, fname, gname, t) in cases {
        let f = RealFunction::by_name(fname).unwrap();
        let g = RealFunction::by_name(gname).unwrap();
        let r = deriv::rule_residuals(&pm, &f, &g, t).map_err(|e| e.to_string())?;
        for (rule, v) in
            [("sum", r.sum), ("product", r.product), ("quotient", r.quotient), ("chain", r.chain)]
        {
            if v >= 1e-6 {
                return Err(format!("{}: {rule} residual {v} at t = {t}", pm.label()));
            }
        }
    }
    Ok(())
}

/// The wrong-form chain rule D(g o f) = (Dg)(f) Df has an O(1) gap.
fn wrong_chain_gap() -> Result<(), String> {
    let pm = builtin(PMapFamily::Khalil, Some(0.5), 0.01, 1.0);
    let f = RealFunction::by_name("t").unwrap();
    let g = RealFunction::by_name("t").unwrap();
    let gap =
        deriv::chain_rule_wrong_form_residual(&pm, &f, &g, 0.5).map_err(|e| e.to_string())?;
    let analytic = (0.5f64.sqrt() - 0.5).abs();
    if gap < 0.01 {
        return Err(format!("gap {gap} below 0.01"));
    }
    if (gap - analytic).abs() > 1e-6 {
        return Err(format!("gap {gap} differs from analytic {analytic}"));
    }
    Ok(())
}

/// Sign-map operator on (-1, 1): every sampled real lambda passes the
/// eigenfunction checks.
fn degenerate_spectrum() -> Result<(), String> {
    let mut rng = SplitMix64::new(0xDE6E);
    let lambdas: Vec<f64> = (0..10).map(|_| rng.range(0.1, 100.0)).collect();
    let report = sl::degenerate_check(&lambdas).map_err(|e| e.to_string())?;
    if !report.all_pass {
        let bad: Vec<_> = report.entries.iter().filter(|e| !e.pass).collect();
        return Err(format!("failing entries: {bad:?}"));
    }
    Ok(())
}

/// Classical Dirichlet spectrum n^2 pi^2.
fn spectrum_classical() -> Result<(), String> {
    let pm = builtin(PMapFamily::Classical, None, 0.0, 1.0);
    let prob = SLProblem::builder(pm, iv(0.0, 1.0)).build().map_err(|e| e.to_string())?;
    let spec = sl::shoot_eigenvalues(&prob, 5).map_err(|e| e.to_string())?;
    for (i, lam) in spec.lambda_plus.iter().enumerate() {
        let exact = ((i + 1) as f64 * PI).powi(2);
        if (lam - exact).abs() > 1e-8 * exact {
            return Err(format!("lambda_{} = {lam}, exact {exact}", i + 1));
        }
        if spec.oscillation_plus[i] != i {
            return Err(format!("oscillation count {} at index {i}", spec.oscillation_plus[i]));
        }
    }
    Ok(())
}

/// Khalil alpha = 1/2 Dirichlet spectrum n^2 pi^2 / 4.
fn spectrum_khalil() -> Result<(), String> {
    let pm = builtin(PMapFamily::Khalil, Some(0.5), 1e-10, 1.0);
    let prob = SLProblem::builder(pm, iv(0.0, 1.0)).build().map_err(|e| e.to_string())?;
    let spec = sl::shoot_eigenvalues(&prob, 8).map_err(|e| e.to_string())?;
    for (i, lam) in spec.lambda_plus.iter().enumerate() {
        let exact = ((i + 1) as f64 * PI).powi(2) / 4.0;
        if (lam - exact).abs() > 1e-6 * exact {
            return Err(format!("lambda_{} = {lam}, exact {exact}", i + 1));
        }
    }
    Ok(())
}

/// Limit evaluation agrees with the weighted-classical lift across the
/// catalog maps with nonzero weight.
fn lift_equivalence() -> Result<(), String> {
    let maps = [
        builtin(PMapFamily::Classical, None, 0.05, 1.0),
        builtin(PMapFamily::Khalil, Some(0.5), 0.05, 1.0),
        builtin(PMapFamily::Katugampola, Some(0.3), 0.05, 1.0),
        builtin(PMapFamily::SymmetricAbs, Some(0.7), 0.05, 1.0),
        builtin(PMapFamily::SignMap, None, 0.05, 1.0),
    ];
    for pm in &maps {
        for name in ["t2", "sin", "exp"] {
            let f = RealFunction::by_name(name).unwrap();
            for i in 0..50 {
                let t = 0.06 + 0.9 * i as f64 / 49.0;
                let lim = deriv::gd_limit_num(pm, &f, t).map_err(|e| e.to_string())?;
                let lift = deriv::gd_lift(pm, &f, t).map_err(|e| e.to_string())?.value;
                if (lim - lift).abs() >= 1e-6 {
                    return Err(format!(
                        "{} {name} at t = {t}: limit {lim} vs lift {lift}",
                        pm.label()
                    ));
                }
            }
        }
    }
    Ok(())
}

/// The worked unit conversions print 2.38 and 6.19 at alpha = 0.99.
fn units_worked_examples() -> Result<(), String> {
    let v = units::convert_velocity(3.0, 0.99, units::SIGMA_CESIUM).map_err(|e| e.to_string())?;
    let a =
        units::convert_acceleration(9.8, 0.99, units::SIGMA_CESIUM).map_err(|e| e.to_string())?;
    let r3 = |x: f64| {
        let mag = 10f64.powf(2.0 - x.abs().log10().floor());
        (x * mag).round() / mag
    };
    if r3(v.magnitude) != 2.38 {
        return Err(format!("velocity {} rounds to {}", v.magnitude, r3(v.magnitude)));
    }
    if r3(a.magnitude) != 6.19 {
        return Err(format!("acceleration {} rounds to {}", a.magnitude, r3(a.magnitude)));
    }
    Ok(())
}

pub fn fixtures() -> Vec<Fixture> {
    vec![
        ("quadratic_map_annihilates_differentiable", quadratic_annihilates),
        ("discontinuous_yet_p_differentiable", discontinuous_yet_differentiable),
        ("h1_failure_no_solution", h1_failure_no_solution),
        ("h1_failure_limit_violation", h1_failure_limit_violation),
        ("cubic_map_abs_lift_gap", cubic_abs_gap),
        ("calculus_rules_khalil_katugampola", calculus_rules),
        ("wrong_form_chain_rule_gap", wrong_chain_gap),
        ("degenerate_sign_map_spectrum", degenerate_spectrum),
        ("spectrum_oracle_classical", spectrum_classical),
        ("spectrum_oracle_khalil", spectrum_khalil),
        ("lift_equivalence_catalog", lift_equivalence),
        ("units_worked_examples", units_worked_examples),
    ]
}

/// Run every fixture, print one line each, and return the failure count.
pub fn run_all() -> usize {
    let mut failures = 0;
    for (name, f) in fixtures() {
        match f() {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    let total = fixtures().len();
    println!(
        "{}",
        serde_json::json!({
            "total": total,
            "passed": total - failures,
            "failed": failures,
        })
    );
    failures
}
