//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantity (visible under `--nocapture`).
//!
//! Criterion 4 is expected RED: the exact spectrum of its fixture deviates
//! from the leading asymptotic term by (1 - 1/(4n))^2 = 2.48% at n = 20,
//! outside the stated 2% window (see the test body for the transcendental
//! oracle); the assertion is kept as stated rather than loosened.

use std::time::Instant;

use gencalc_core::deriv;
use gencalc_core::func::RealFunction;
use gencalc_core::interval::Interval;
use gencalc_core::mechanics::{self, CentralForceConfig, DragConfig};
use gencalc_core::pmap::{PMap, PMapFamily};
use gencalc_core::rng::SplitMix64;
use gencalc_core::sl::{self, SLProblem};
use gencalc_core::units;

const PI: f64 = std::f64::consts::PI;

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn builtin(fam: PMapFamily, alpha: Option<f64>, lo: f64, hi: f64) -> PMap {
    PMap::builtin(fam, alpha, iv(lo, hi)).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

struct Criterion {
    id: usize,
    name: &'static str,
}

impl Criterion {
    fn new(id: usize, name: &'static str) -> Self {
        Criterion { id, name }
    }

    fn pass(&self, detail: String) {
        println!("criterion {:2} PASS  {} ({detail})", self.id, self.name);
    }

    fn fail(&self, detail: String) -> ! {
        println!("criterion {:2} FAIL  {} ({detail})", self.id, self.name);
        panic!("criterion {} failed: {detail}", self.id);
    }

    fn check(&self, ok: bool, detail: String) {
        if ok {
            self.pass(detail);
        } else {
            self.fail(detail);
        }
    }
}

#[test]
fn criterion_01_lift_equivalence() {
    let c = Criterion::new(1, "lift equivalence on 50-point grids");
    let start = Instant::now();
    let maps = [
        builtin(PMapFamily::Classical, None, 0.05, 1.0),
        builtin(PMapFamily::Khalil, Some(0.5), 0.05, 1.0),
        builtin(PMapFamily::Katugampola, Some(0.3), 0.05, 1.0),
        builtin(PMapFamily::SymmetricAbs, Some(0.7), 0.05, 1.0),
        builtin(PMapFamily::SignMap, None, 0.05, 1.0),
    ];
    let mut worst = 0.0f64;
    for pm in &maps {
        for name in ["t2", "sin", "exp"] {
            let f = RealFunction::by_name(name).unwrap();
            for i in 0..50 {
                let t = 0.06 + 0.9 * i as f64 / 49.0;
                let lim = deriv::gd_limit_num(pm, &f, t).unwrap();
                let lift = deriv::gd_lift(pm, &f, t).unwrap().value;
                worst = worst.max((lim - lift).abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    c.check(
        worst < 1e-6 && elapsed < 5.0,
        format!("max |limit - lift| = {worst:.2e}, elapsed {elapsed:.2}s < 5s"),
    );
}

#[test]
fn criterion_02_calculus_rules() {
    let c = Criterion::new(2, "calculus rules on 100 randomized fixtures + wrong-form gap");
    let mut rng = SplitMix64::new(0xCA1C);
    let f_pool = ["sin", "cos", "exp", "t2", "t3"];
    // denominators and outer functions stay differentiable and nonzero
    let g_pool: Vec<RealFunction> = vec![
        RealFunction::by_name("exp").unwrap(),
        RealFunction::new("2+sin", |s: f64| 2.0 + s.sin()).with_deriv(|s: f64| s.cos()),
        RealFunction::new("1+t2", |s: f64| 1.0 + s * s).with_deriv(|s: f64| 2.0 * s),
    ];
    let mut worst = 0.0f64;
    for case in 0..100 {
        let alpha = rng.range(0.3, 0.9);
        let pm = if case % 2 == 0 {
            builtin(PMapFamily::Khalil, Some(alpha), 0.01, 1.0)
        } else {
            builtin(PMapFamily::Katugampola, Some(alpha), 0.01, 1.0)
        };
        let f = RealFunction::by_name(f_pool[rng.index(f_pool.len())]).unwrap();
        let g = g_pool[rng.index(g_pool.len())].clone();
        let t = rng.range(0.15, 0.85);
        let r = deriv::rule_residuals(&pm, &f, &g, t)
            .unwrap_or_else(|e| panic!("case {case} ({}, t = {t}): {e}", pm.label()));
        worst = worst.max(r.sum).max(r.product).max(r.quotient).max(r.chain);
    }

    // the wrong chain-rule form D(g o f) = (Dg)(f(t)) Df(t) must show its
    // analytic gap |t^(1-a) - t^(2-2a)| ~ 0.2071 at t = 0.5, alpha = 0.5
    let pm = builtin(PMapFamily::Khalil, Some(0.5), 0.01, 1.0);
    let id = RealFunction::by_name("t").unwrap();
    let gap = deriv::chain_rule_wrong_form_residual(&pm, &id, &id, 0.5).unwrap();
    c.check(
        worst < 1e-6 && gap >= 0.01,
        format!("max rule residual = {worst:.2e}, wrong-form gap = {gap:.4}"),
    );
}

#[test]
fn criterion_03_spectrum_oracles() {
    let c = Criterion::new(3, "khalil and classical Dirichlet spectra");
    let start = Instant::now();

    let pm = builtin(PMapFamily::Khalil, Some(0.5), 1e-10, 1.0);
    let prob = SLProblem::builder(pm, iv(0.0, 1.0)).build().unwrap();
    let spec = sl::shoot_eigenvalues(&prob, 8).unwrap();
    let mut worst_khalil = 0.0f64;
    for (i, lam) in spec.lambda_plus.iter().enumerate() {
        let exact = ((i + 1) as f64 * PI).powi(2) / 4.0;
        worst_khalil = worst_khalil.max((lam - exact).abs() / exact);
    }

    let pm = builtin(PMapFamily::Classical, None, 0.0, 1.0);
    let prob = SLProblem::builder(pm, iv(0.0, 1.0)).build().unwrap();
    let spec = sl::shoot_eigenvalues(&prob, 5).unwrap();
    let mut worst_classical = 0.0f64;
    for (i, lam) in spec.lambda_plus.iter().enumerate() {
        let exact = ((i + 1) as f64 * PI).powi(2);
        worst_classical = worst_classical.max((lam - exact).abs() / exact);
    }

    let elapsed = start.elapsed().as_secs_f64();
    c.check(
        worst_khalil < 1e-6 && worst_classical < 1e-8 && elapsed < 30.0,
        format!(
            "khalil rel err {worst_khalil:.2e} (n=1..8), classical rel err {worst_classical:.2e} (n=1..5), elapsed {elapsed:.2}s < 30s"
        ),
    );
}

/// Exact eigencondition of the sign-weight fixture: tan x = -tanh x with
/// lambda = 4 x^2, one root per (n pi - pi/2, n pi).
fn sign_weight_exact_lambda(n: usize) -> f64 {
    let f = |x: f64| x.tan() + x.tanh();
    let mut a = n as f64 * PI - PI / 2.0 + 1e-9;
    let mut b = n as f64 * PI - 1e-12;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) <= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    4.0 * x * x
}

#[test]
fn criterion_04_indefinite_asymptotics() {
    let c = Criterion::new(4, "indefinite-weight ratio window at n = 20");
    let pm = builtin(PMapFamily::Classical, None, 0.0, 1.0);
    let w = RealFunction::new("sgn_shift", |s: f64| if s > 0.5 { 1.0 } else { -1.0 });
    let prob = SLProblem::builder(pm, iv(0.0, 1.0))
        .w(w)
        .breakpoints(vec![0.5])
        .build()
        .unwrap();
    let spec = sl::shoot_eigenvalues(&prob, 20).unwrap();
    let n = 20.0f64;
    let ratio_p = spec.lambda_plus[19].abs() / (4.0 * n * n * PI * PI);
    let ratio_m = spec.lambda_minus[19].abs() / (4.0 * n * n * PI * PI);

    // solver sanity against the exact transcendental roots
    let exact = sign_weight_exact_lambda(20);
    let solver_err = (spec.lambda_plus[19] - exact).abs() / exact;
    let exact_ratio = exact / (4.0 * n * n * PI * PI);
    println!(
        "criterion  4 note: solver matches the exact eigencondition to {solver_err:.1e}; \
         the exact ratio at n = 20 is {exact_ratio:.6} = (1 - 1/80)^2, outside [0.98, 1.02] \
         by exact analysis"
    );

    c.check(
        (0.98..=1.02).contains(&ratio_p) && (0.98..=1.02).contains(&ratio_m),
        format!("|lambda_20^+|/(4 n^2 pi^2) = {ratio_p:.6}, minus side {ratio_m:.6}, window [0.98, 1.02]"),
    );
}

#[test]
fn criterion_05_degenerate_spectrum() {
    let c = Criterion::new(5, "sign-map operator admits every sampled real lambda");
    let mut rng = SplitMix64::new(0xDE6E);
    let lambdas: Vec<f64> = (0..10).map(|_| rng.range(0.1, 100.0)).collect();
    let report = sl::degenerate_check(&lambdas).unwrap();
    let worst = report
        .entries
        .iter()
        .map(|e| e.max_residual)
        .fold(0.0f64, f64::max);
    let bcs_exact = report.entries.iter().all(|e| e.bc_left == 0.0 && e.bc_right == 0.0);
    c.check(
        report.all_pass && bcs_exact,
        format!("10 sampled lambda in [0.1, 100], max residual {worst:.2e}, BCs exact"),
    );
}

#[test]
fn criterion_06_central_force_ellipses() {
    let c = Criterion::new(6, "conic invariant on 10^4-sample trajectories");
    let mut rng = SplitMix64::new(0x0B17);
    let maps = [
        builtin(PMapFamily::Classical, None, 0.0, 1.0),
        builtin(PMapFamily::Khalil, Some(0.5), 1e-12, 1.0),
        builtin(PMapFamily::Katugampola, Some(0.6), 1e-10, 1.0),
        builtin(PMapFamily::SymmetricAbs, Some(0.4), -1.0, 1.0),
    ];
    let ts = linspace(0.0, 1.0, 10_000);
    let mut worst = 0.0f64;
    for pm in &maps {
        for _ in 0..20 {
            let cfg = CentralForceConfig {
                pm: pm.clone(),
                k: rng.range(0.5, 3.0),
                x0: rng.range(-2.0, 2.0),
                y0: rng.range(-2.0, 2.0),
                u0: rng.range(-2.0, 2.0),
                v0: rng.range(-2.0, 2.0),
                interval: iv(0.0, 1.0),
            };
            let (traj, consts) = mechanics::central_force_solve(&cfg, &ts).unwrap();
            worst = worst.max(mechanics::ellipse_invariant(&traj, &consts).unwrap());
        }
    }
    c.check(worst < 1e-8, format!("max residual {worst:.2e} over 80 runs of 10^4 samples"));
}

#[test]
fn criterion_07_gravity_forms() {
    let c = Criterion::new(7, "gravity closed forms vs quadrature and the alpha -> 1 limit");
    let ts = linspace(0.05, 1.0, 25);
    let mut worst = 0.0f64;
    for alpha in [0.3, 0.5, 0.9] {
        let pm = builtin(PMapFamily::Khalil, Some(alpha), 1e-12, 1.5);
        let closed = mechanics::gravity_solve(&pm, 0.2, 1.0, 5.0, -0.4, 9.8, &ts).unwrap();
        let general =
            mechanics::gravity_solve_quadrature(&pm, 0.2, 1.0, 5.0, -0.4, 9.8, &ts).unwrap();
        for i in 0..ts.len() {
            for k in 0..2 {
                worst = worst.max((closed.states[i][k] - general.states[i][k]).abs());
            }
        }
    }

    let alpha = 1.0 - 1e-8;
    let pm = builtin(PMapFamily::Khalil, Some(alpha), 1e-12, 2.0);
    let traj = mechanics::gravity_solve(&pm, 0.3, 1.0, 2.0, 0.7, 9.8, &ts).unwrap();
    let mut worst_limit = 0.0f64;
    for (i, s) in traj.states.iter().enumerate() {
        let t = ts[i];
        worst_limit = worst_limit.max((s[0] - (0.3 + 1.0 * t)).abs());
        worst_limit = worst_limit.max((s[1] - (2.0 + 0.7 * t - 4.9 * t * t)).abs());
    }
    c.check(
        worst < 1e-6 && worst_limit < 1e-6,
        format!("closed-vs-quadrature {worst:.2e}, alpha -> 1 gap {worst_limit:.2e}"),
    );
}

#[test]
fn criterion_08_drag() {
    let c = Criterion::new(8, "drag residual, terminal velocity, quadrature form");
    let mut rng = SplitMix64::new(0xD7A6);
    let mut worst_res = 0.0f64;
    let mut worst_term = 0.0f64;
    let mut worst_quad = 0.0f64;
    for _ in 0..5 {
        let cfg = DragConfig {
            m: rng.range(20.0, 150.0),
            g: 9.8,
            c_drag: rng.range(0.4, 1.5),
            rho: rng.range(0.5, 2.0),
            area: rng.range(0.1, 2.0),
            alpha: rng.range(0.9, 0.98),
            sigma: units::SIGMA_CESIUM,
        };
        cfg.validate().unwrap();
        for t in [0.05, 0.3, 1.0, 4.0, 15.0] {
            worst_res = worst_res.max(cfg.residual(t));
        }
        let vt = cfg.v_term();
        let formula = (2.0 * cfg.m * cfg.g / (cfg.c_drag * cfg.rho * cfg.area)).sqrt();
        // computed terminal velocity: the profile where tanh has saturated
        let t_sat = ((20.0 / cfg.c_const() - cfg.alpha).max(1.0)).powf(1.0 / cfg.alpha);
        worst_term = worst_term.max((cfg.velocity(t_sat) - formula).abs() / formula);
        assert!((vt - formula).abs() < 1e-12 * formula);
        for t in [0.1, 0.5, 2.0] {
            let vq = cfg.velocity_quadrature(t).unwrap();
            worst_quad = worst_quad.max((vq - cfg.velocity(t)).abs() / vt);
        }
    }
    c.check(
        worst_res < 1e-8 && worst_term < 1e-6 && worst_quad < 1e-6,
        format!(
            "residual {worst_res:.2e}, terminal rel gap {worst_term:.2e}, quadrature rel gap {worst_quad:.2e}"
        ),
    );
}

#[test]
fn criterion_09_nbody_generic_orbits() {
    let c = Criterion::new(9, "two-body circle under the khalil clock");
    let alpha = 0.5f64;
    let speed = 0.5f64.sqrt();
    let sys = mechanics::NBodySystem::new(
        vec![1.0, 1.0],
        vec![[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]],
        vec![[0.0, -speed, 0.0], [0.0, speed, 0.0]],
        1.0,
    )
    .unwrap();
    let pm = builtin(PMapFamily::Khalil, Some(alpha), 1e-12, 10.0);
    // tau_end = t_end^alpha/alpha = 5 with 10^4 fixed steps
    let t_end = 6.25f64;
    let run = mechanics::nbody_integrate(&sys, &pm, t_end, 5e-4).unwrap();
    let steps = run.traj_tau.len() - 1;
    let pos = |traj: &mechanics::Trajectory| -> Vec<Vec<f64>> {
        traj.states.iter().map(|s| s[0..6].to_vec()).collect()
    };
    let hausdorff =
        mechanics::hausdorff_distance(&pos(&run.traj_t), &pos(&run.traj_tau));
    c.check(
        hausdorff < 1e-6 && run.max_energy_drift < 1e-6 && steps == 10_000,
        format!(
            "hausdorff {hausdorff:.2e}, energy drift {:.2e} over {steps} steps",
            run.max_energy_drift
        ),
    );
}

#[test]
fn criterion_10_unit_conversions() {
    let c = Criterion::new(10, "alpha-second worked conversions");
    let v = units::convert_velocity(3.0, 0.99, units::SIGMA_CESIUM).unwrap();
    let a = units::convert_acceleration(9.8, 0.99, units::SIGMA_CESIUM).unwrap();
    let r3 = |x: f64| {
        let mag = 10f64.powf(2.0 - x.abs().log10().floor());
        (x * mag).round() / mag
    };
    c.check(
        r3(v.magnitude) == 2.38 && r3(a.magnitude) == 6.19,
        format!(
            "3 m/s -> {:.6} ~ {} m/sec^0.99; 9.8 m/s^2 -> {:.6} ~ {} m/sec^1.98",
            v.magnitude,
            r3(v.magnitude),
            a.magnitude,
            r3(a.magnitude)
        ),
    );
}

#[test]
fn criterion_11_counterexample_fixtures_via_verify() {
    let c = Criterion::new(11, "counterexample fixtures through `gencalc verify`");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_gencalc"))
        .arg("verify")
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout);
    let wanted = [
        "PASS quadratic_map_annihilates_differentiable",
        "PASS discontinuous_yet_p_differentiable",
        "PASS h1_failure_no_solution",
        "PASS h1_failure_limit_violation",
        "PASS cubic_map_abs_lift_gap",
    ];
    let all_present = wanted.iter().all(|w| text.contains(w));
    c.check(
        out.status.success() && all_present,
        format!("exit {:?}, fixtures present: {all_present}", out.status.code()),
    );
}
