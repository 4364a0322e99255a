//! Evaluation of the generalized derivative: by its limit definition, by the
//! weighted-classical lift `p_h(t, 0) f'(t)`, and as the composed
//! second-order operator `p_h (p_h f')'`. Also the calculus-rule residuals
//! (sum/product/quotient/chain) used to confirm or falsify the rules
//! numerically.

use serde::Serialize;
use thiserror::Error;

use crate::func::RealFunction;
use crate::pmap::{PMap, PMapError};

#[derive(Debug, Error)]
pub enum DerivError {
    #[error("t = {t} is outside the p-map domain")]
    OutOfDomain { t: f64 },
    #[error("function is not p-differentiable at t = {t}")]
    NotPDifferentiable { t: f64 },
    #[error("classical derivative unavailable at t = {t}")]
    DerivativeUnavailable { t: f64 },
    #[error("difference quotients did not stabilize at t = {t}")]
    QuotientNoise { t: f64 },
    #[error("second-derivative composition failed at t = {t}")]
    SecondDerivFailed { t: f64 },
    #[error("{rule} rule precondition failed at t = {t}: {reason}")]
    RulePrecondition { rule: &'static str, t: f64, reason: String },
    #[error(transparent)]
    PMap(#[from] PMapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Limit,
    Lift,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeResult {
    pub value: f64,
    pub method: Method,
    pub estimated_error: f64,
}

/// The limit either exists (a value with an error estimate) or the one-sided
/// quotients diverge/disagree, which is a meaningful mathematical outcome
/// distinct from numerical failure.
#[derive(Debug, Clone, Copy)]
pub enum LimitOutcome {
    Value(DerivativeResult),
    NotPDifferentiable { left: Option<f64>, right: Option<f64> },
}

impl LimitOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LimitOutcome::Value(r) => Some(r.value),
            LimitOutcome::NotPDifferentiable { .. } => None,
        }
    }
}

const RICHARDSON_ROWS: usize = 8;
const RICHARDSON_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy)]
enum SideOutcome {
    Converged { value: f64, err: f64 },
    Divergent,
    Invalid,
}

/// Extrapolate a sequence of quotients sampled at steps h0 * 2^-k, assuming
/// an error expansion in integer powers of h.
fn extrapolate(xs: &[f64; RICHARDSON_ROWS], scale: f64) -> SideOutcome {
    if xs.iter().any(|v| v.is_nan()) {
        return SideOutcome::Invalid;
    }
    if xs.iter().any(|v| v.is_infinite()) {
        return SideOutcome::Divergent;
    }
    // Divergence: magnitudes persistently growing to a large multiple of the
    // function scale. Roundoff noise also grows like 1/h but stays tiny.
    let n = xs.len();
    let growing = (n - 4..n).all(|k| xs[k].abs() > 1.4 * xs[k - 1].abs());
    if growing && xs[n - 1].abs() > 1e4 * scale {
        return SideOutcome::Divergent;
    }

    let mut table = [[0.0f64; RICHARDSON_DEPTH + 1]; RICHARDSON_ROWS];
    for (k, x) in xs.iter().enumerate() {
        table[k][0] = *x;
        let jmax = k.min(RICHARDSON_DEPTH);
        for j in 1..=jmax {
            let p = 2f64.powi(j as i32);
            table[k][j] = (p * table[k][j - 1] - table[k - 1][j - 1]) / (p - 1.0);
        }
    }
    let col = RICHARDSON_DEPTH;
    let mut best: Option<(f64, f64)> = None;
    for k in col + 1..RICHARDSON_ROWS {
        let d = (table[k][col] - table[k - 1][col]).abs();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((table[k][col], d));
        }
    }
    let (value, err) = best.unwrap();
    // Loose acceptance so quotients built on top of other numerical
    // derivatives (themselves good to ~1e-9) still report a value; the
    // error estimate carries the achieved accuracy either way.
    if err <= 1e-4 * value.abs().max(scale) {
        SideOutcome::Converged { value, err }
    } else {
        SideOutcome::Invalid
    }
}

struct SideEval {
    outcome: SideOutcome,
    stayed_in_domain: bool,
}

fn eval_side(pm: &PMap, f: &RealFunction, t: f64, ft: f64, sign: f64, h0: f64) -> SideEval {
    let dom = pm.domain();
    let slack = 1e-9 * dom.width();
    let mut xs = [0.0f64; RICHARDSON_ROWS];
    let mut stayed = true;
    for (k, x) in xs.iter_mut().enumerate() {
        let h = sign * h0 * 0.5f64.powi(k as i32);
        let pt = pm.eval(t, h);
        if !dom.contains_slack(pt, slack) {
            stayed = false;
        }
        *x = (f.eval(pt) - ft) / h;
    }
    let scale = ft.abs().max(1.0);
    SideEval { outcome: extrapolate(&xs, scale), stayed_in_domain: stayed }
}

/// The generalized derivative by the limit definition, evaluated on
/// geometrically shrinking steps of both signs with Richardson
/// extrapolation. Two-sided agreement is required at interior points;
/// endpoints fall back to the inward one-sided limit as usual.
pub fn gd_limit(pm: &PMap, f: &RealFunction, t: f64) -> Result<LimitOutcome, DerivError> {
    let dom = pm.domain();
    if !dom.contains_slack(t, 1e-12 * dom.width()) {
        return Err(DerivError::OutOfDomain { t });
    }
    let ft = f.eval(t);
    if !ft.is_finite() {
        return Err(DerivError::QuotientNoise { t });
    }
    let h0 = 1e-3 * t.abs().max(1.0);
    let right = eval_side(pm, f, t, ft, 1.0, h0);
    let left = eval_side(pm, f, t, ft, -1.0, h0);

    let edge = 1e-9 * dom.width();
    let at_endpoint = (t - dom.lo()).abs() <= edge || (dom.hi() - t).abs() <= edge;

    let two_sided = |l: (f64, f64), r: (f64, f64)| -> LimitOutcome {
        let (lv, le) = l;
        let (rv, re) = r;
        let spread = (lv - rv).abs();
        let tol = (50.0 * (le + re)).max(1e-7 * lv.abs().max(rv.abs()).max(1.0));
        if spread <= tol {
            LimitOutcome::Value(DerivativeResult {
                value: 0.5 * (lv + rv),
                method: Method::Limit,
                estimated_error: spread + le + re,
            })
        } else {
            LimitOutcome::NotPDifferentiable { left: Some(lv), right: Some(rv) }
        }
    };

    match (left.outcome, right.outcome) {
        (SideOutcome::Converged { value: lv, err: le }, SideOutcome::Converged { value: rv, err: re }) => {
            if at_endpoint && left.stayed_in_domain != right.stayed_in_domain {
                // only one side is inward; use it
                let (v, e) = if left.stayed_in_domain { (lv, le) } else { (rv, re) };
                return Ok(LimitOutcome::Value(DerivativeResult {
                    value: v,
                    method: Method::Limit,
                    estimated_error: e,
                }));
            }
            Ok(two_sided((lv, le), (rv, re)))
        }
        (SideOutcome::Converged { value, err }, _) if at_endpoint => {
            Ok(LimitOutcome::Value(DerivativeResult {
                value,
                method: Method::Limit,
                estimated_error: err,
            }))
        }
        (_, SideOutcome::Converged { value, err }) if at_endpoint => {
            Ok(LimitOutcome::Value(DerivativeResult {
                value,
                method: Method::Limit,
                estimated_error: err,
            }))
        }
        (SideOutcome::Divergent, _) | (_, SideOutcome::Divergent) => {
            Ok(LimitOutcome::NotPDifferentiable { left: None, right: None })
        }
        (SideOutcome::Converged { .. }, SideOutcome::Invalid)
        | (SideOutcome::Invalid, SideOutcome::Converged { .. })
        | (SideOutcome::Invalid, SideOutcome::Invalid) => Err(DerivError::QuotientNoise { t }),
    }
}

/// `gd_limit` unwrapped to a number; the not-p-differentiable outcome
/// becomes an error. Convenience for rule residuals and fixtures that
/// require differentiability.
pub fn gd_limit_num(pm: &PMap, f: &RealFunction, t: f64) -> Result<f64, DerivError> {
    match gd_limit(pm, f, t)? {
        LimitOutcome::Value(r) => Ok(r.value),
        LimitOutcome::NotPDifferentiable { .. } => Err(DerivError::NotPDifferentiable { t }),
    }
}

/// Classical derivative of `f` at `t`: analytic when supplied, otherwise
/// both one-sided difference quotients must converge and agree.
pub fn numeric_derivative(f: &RealFunction, t: f64) -> Result<f64, DerivError> {
    if let Some(d) = f.deriv_analytic(t) {
        return Ok(d);
    }
    let ft = f.eval(t);
    if !ft.is_finite() {
        return Err(DerivError::DerivativeUnavailable { t });
    }
    let h0 = 1e-3 * t.abs().max(1.0);
    let scale = ft.abs().max(1.0);
    let side = |sign: f64| {
        let mut xs = [0.0f64; RICHARDSON_ROWS];
        for (k, x) in xs.iter_mut().enumerate() {
            let h = sign * h0 * 0.5f64.powi(k as i32);
            *x = (f.eval(t + h) - ft) / h;
        }
        extrapolate(&xs, scale)
    };
    match (side(-1.0), side(1.0)) {
        (SideOutcome::Converged { value: lv, err: le }, SideOutcome::Converged { value: rv, err: re }) => {
            if (lv - rv).abs() <= (50.0 * (le + re)).max(1e-7 * lv.abs().max(rv.abs()).max(1.0)) {
                Ok(0.5 * (lv + rv))
            } else {
                Err(DerivError::DerivativeUnavailable { t })
            }
        }
        _ => Err(DerivError::DerivativeUnavailable { t }),
    }
}

/// The lift: `D_p f(t) = p_h(t, 0) f'(t)`, valid when `p_h(t, 0) != 0` and
/// `f` is differentiable at `t`.
pub fn gd_lift(pm: &PMap, f: &RealFunction, t: f64) -> Result<DerivativeResult, DerivError> {
    let ph = pm.ph_at_zero(t)?;
    let fp = numeric_derivative(f, t)?;
    Ok(DerivativeResult {
        value: ph * fp,
        method: Method::Lift,
        estimated_error: 1e-12 * (ph * fp).abs().max(1e-14),
    })
}

/// The composed second-order operator `D^2 f(t) = p_h(t,0) (p_h(.,0) f')'(t)`,
/// with the outer derivative taken by extrapolated central differences on
/// the inner product.
pub fn gd_second(pm: &PMap, f: &RealFunction, t: f64) -> Result<f64, DerivError> {
    let ph = pm.ph_fn();
    let fprime = |s: f64| match f.deriv_analytic(s) {
        Some(d) => d,
        None => numeric_derivative(f, s).unwrap_or(f64::NAN),
    };
    let inner = |s: f64| ph(s) * fprime(s);

    let h0 = 1e-3 * t.abs().max(1.0);
    let mut xs = [0.0f64; RICHARDSON_ROWS];
    for (k, x) in xs.iter_mut().enumerate() {
        let h = h0 * 0.5f64.powi(k as i32);
        *x = (inner(t + h) - inner(t - h)) / (2.0 * h);
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(DerivError::SecondDerivFailed { t });
    }
    // central differences: even powers of h, so the elimination factor is 4^j
    let mut table = [[0.0f64; RICHARDSON_DEPTH + 1]; RICHARDSON_ROWS];
    for (k, x) in xs.iter().enumerate() {
        table[k][0] = *x;
        let jmax = k.min(RICHARDSON_DEPTH);
        for j in 1..=jmax {
            let p = 4f64.powi(j as i32);
            table[k][j] = (p * table[k][j - 1] - table[k - 1][j - 1]) / (p - 1.0);
        }
    }
    let col = RICHARDSON_DEPTH;
    let mut best: Option<(f64, f64)> = None;
    for k in col + 1..RICHARDSON_ROWS {
        let d = (table[k][col] - table[k - 1][col]).abs();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((table[k][col], d));
        }
    }
    let (gprime, err) = best.unwrap();
    let ph_t = pm.ph_at_zero(t)?;
    if err > 1e-6 * gprime.abs().max(1.0) {
        return Err(DerivError::SecondDerivFailed { t });
    }
    Ok(ph_t * gprime)
}

/// Residuals of the four calculus rules at `t`, every derivative evaluated
/// through the limit definition. Caller is responsible for `pm` satisfying
/// the solvability hypotheses (see `pmap::check_hypotheses`); the quotient
/// and chain preconditions are checked here and reported per rule.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RuleResiduals {
    pub sum: f64,
    pub product: f64,
    pub quotient: f64,
    pub chain: f64,
}

pub fn rule_residuals(
    pm: &PMap,
    f: &RealFunction,
    g: &RealFunction,
    t: f64,
) -> Result<RuleResiduals, DerivError> {
    let df = gd_limit_num(pm, f, t)?;
    let dg = gd_limit_num(pm, g, t)?;
    let ft = f.eval(t);
    let gt = g.eval(t);

    let fc = f.clone();
    let gc = g.clone();
    let sum_fn = RealFunction::new("f+g", move |s| fc.eval(s) + gc.eval(s));
    let d_sum = gd_limit_num(pm, &sum_fn, t)?;
    let sum = (d_sum - (df + dg)).abs();

    let fc = f.clone();
    let gc = g.clone();
    let prod_fn = RealFunction::new("f*g", move |s| fc.eval(s) * gc.eval(s));
    let d_prod = gd_limit_num(pm, &prod_fn, t)?;
    let product = (d_prod - (ft * dg + gt * df)).abs();

    if gt.abs() < 1e-12 {
        return Err(DerivError::RulePrecondition {
            rule: "quotient",
            t,
            reason: format!("g(t) = {gt} is too close to zero"),
        });
    }
    let fc = f.clone();
    let gc = g.clone();
    let quot_fn = RealFunction::new("f/g", move |s| fc.eval(s) / gc.eval(s));
    let d_quot = gd_limit_num(pm, &quot_fn, t)?;
    let quotient = (d_quot - (gt * df - ft * dg) / (gt * gt)).abs();

    let gprime_at_ft = numeric_derivative(g, ft).map_err(|_| DerivError::RulePrecondition {
        rule: "chain",
        t,
        reason: format!("g is not differentiable at f(t) = {ft}"),
    })?;
    let fc = f.clone();
    let gc = g.clone();
    let comp_fn = RealFunction::new("g(f)", move |s| gc.eval(fc.eval(s)));
    let d_comp = gd_limit_num(pm, &comp_fn, t)?;
    let chain = (d_comp - gprime_at_ft * df).abs();

    Ok(RuleResiduals { sum, product, quotient, chain })
}

/// Residual of the *wrong* chain-rule form `D(g o f) = (Dg)(f(t)) Df(t)`,
/// which uses the generalized derivative of `g` instead of the classical
/// one. Nonzero in general for fractional maps.
pub fn chain_rule_wrong_form_residual(
    pm: &PMap,
    f: &RealFunction,
    g: &RealFunction,
    t: f64,
) -> Result<f64, DerivError> {
    let df = gd_limit_num(pm, f, t)?;
    let ft = f.eval(t);
    let dg_at_ft = gd_limit_num(pm, g, ft)?;
    let fc = f.clone();
    let gc = g.clone();
    let comp_fn = RealFunction::new("g(f)", move |s| gc.eval(fc.eval(s)));
    let d_comp = gd_limit_num(pm, &comp_fn, t)?;
    Ok((d_comp - dg_at_ft * df).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use crate::pmap::PMapFamily;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn builtin(fam: PMapFamily, alpha: Option<f64>, lo: f64, hi: f64) -> PMap {
        PMap::builtin(fam, alpha, iv(lo, hi)).unwrap()
    }

    #[test]
    fn quadratic_map_annihilates_smooth_functions() {
        let pm = builtin(PMapFamily::Quadratic, None, -1.0, 1.0);
        for name in ["sin", "exp", "t2"] {
            let f = RealFunction::by_name(name).unwrap();
            for t in [-0.7, 0.0, 0.5] {
                let v = gd_limit_num(&pm, &f, t).unwrap();
                assert!(v.abs() < 1e-9, "{name} at {t}: {v}");
            }
        }
    }

    #[test]
    fn fractional_quadratic_variant_annihilates() {
        // p(t, h) = t + h^2 |t|^(1-a) on t > 0 behaves like the plain
        // quadratic map: every differentiable function has zero derivative
        let a = 0.4;
        let pm = PMap::custom("quad_frac", iv(0.05, 1.0), move |t: f64, h: f64| {
            t + h * h * t.abs().powf(1.0 - a)
        });
        for name in ["sin", "t3"] {
            let f = RealFunction::by_name(name).unwrap();
            let v = gd_limit_num(&pm, &f, 0.3).unwrap();
            assert!(v.abs() < 1e-9, "{name}: {v}");
        }
    }

    #[test]
    fn khalil_and_katugampola_coincide_on_differentiable_functions() {
        // both families share the weight t^(1-alpha), so their derivatives
        // agree wherever f is differentiable
        let kha = builtin(PMapFamily::Khalil, Some(0.35), 0.05, 1.0);
        let kat = builtin(PMapFamily::Katugampola, Some(0.35), 0.05, 1.0);
        let f = RealFunction::by_name("exp").unwrap();
        for t in [0.1, 0.4, 0.9] {
            let a = gd_limit_num(&kha, &f, t).unwrap();
            let b = gd_limit_num(&kat, &f, t).unwrap();
            assert!((a - b).abs() < 1e-8, "t = {t}: {a} vs {b}");
        }
    }

    #[test]
    fn khalil_derivative_of_identity() {
        // D f = t^(1-alpha) for f(t) = t; at alpha = 0.5, t = 0.25: 0.5
        let pm = builtin(PMapFamily::Khalil, Some(0.5), 0.01, 1.0);
        let f = RealFunction::by_name("t").unwrap();
        let v = gd_limit_num(&pm, &f, 0.25).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn classical_square_at_three() {
        let pm = builtin(PMapFamily::Classical, None, 0.0, 5.0);
        let f = RealFunction::by_name("t2").unwrap();
        let v = gd_limit_num(&pm, &f, 3.0).unwrap();
        assert!((v - 6.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn discontinuous_yet_p_differentiable() {
        // f = sgn with f(0) = 1 under p = t + h^2: quotient is identically 0
        let pm = builtin(PMapFamily::Quadratic, None, -1.0, 1.0);
        let f = RealFunction::by_name("sgn_plus").unwrap();
        let v = gd_limit_num(&pm, &f, 0.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sgn_not_p_differentiable_under_classical() {
        let pm = builtin(PMapFamily::Classical, None, -1.0, 1.0);
        let f = RealFunction::by_name("sgn_plus").unwrap();
        match gd_limit(&pm, &f, 0.0).unwrap() {
            LimitOutcome::NotPDifferentiable { .. } => {}
            LimitOutcome::Value(r) => panic!("expected not-p-differentiable, got {r:?}"),
        }
    }

    #[test]
    fn constant_in_h_map_gives_zero_for_sgn() {
        let pm = PMap::custom("constant_in_h", iv(-1.0, 1.0), |t, _| t);
        let f = RealFunction::by_name("sgn_minus").unwrap();
        let v = gd_limit_num(&pm, &f, 0.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn lift_matches_weighted_classical() {
        let pm = builtin(PMapFamily::Khalil, Some(0.5), 0.01, 1.0);
        let f = RealFunction::by_name("t2").unwrap();
        let r = gd_lift(&pm, &f, 0.25).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12, "got {}", r.value); // 0.5 * 2*0.25
        let lim = gd_limit_num(&pm, &f, 0.25).unwrap();
        assert!((r.value - lim).abs() < 1e-8);
    }

    #[test]
    fn lift_is_identity_weight_for_classical() {
        let pm = builtin(PMapFamily::Classical, None, -2.0, 2.0);
        let f = RealFunction::by_name("sin").unwrap();
        let r = gd_lift(&pm, &f, 1.1).unwrap();
        assert!((r.value - (1.1f64).cos()).abs() < 1e-12);
    }

    #[test]
    fn cubic_map_abs_lift_fails_limit_succeeds() {
        // p = t + h^3 has p_h(t,0) = 0; |t| is p-differentiable at 0 with
        // D_p f(0) = 0 although f'(0) does not exist
        let pm = builtin(PMapFamily::Cubic, None, -1.0, 1.0);
        let f = RealFunction::by_name("abs").unwrap();
        assert!(matches!(
            gd_lift(&pm, &f, 0.0),
            Err(DerivError::DerivativeUnavailable { .. })
        ));
        let v = gd_limit_num(&pm, &f, 0.0).unwrap();
        assert!(v.abs() < 1e-10, "got {v}");
    }

    #[test]
    fn second_operator_classical_cube() {
        let pm = builtin(PMapFamily::Classical, None, 0.0, 5.0);
        let f = RealFunction::by_name("t3").unwrap();
        let v = gd_second(&pm, &f, 2.0).unwrap();
        assert!((v - 12.0).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn second_operator_khalil_identity() {
        // p_h = sqrt(t); D^2 t = sqrt(t) (sqrt(t))' = 0.5 for all t
        let pm = builtin(PMapFamily::Khalil, Some(0.5), 0.01, 1.0);
        let f = RealFunction::by_name("t").unwrap();
        let v = gd_second(&pm, &f, 0.25).unwrap();
        assert!((v - 0.5).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn second_operator_symmetric_abs_formula() {
        // |t|^(1-a) (|t|^(1-a) f')' at f = t^2, a = 0.5, t = 0.49:
        // sqrt(t) * (2 t^(3/2))' = 3 t
        let pm = builtin(PMapFamily::SymmetricAbs, Some(0.5), -1.0, 1.0);
        let f = RealFunction::by_name("t2").unwrap();
        let v = gd_second(&pm, &f, 0.49).unwrap();
        assert!((v - 1.47).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn rules_hold_for_khalil_sin_cos() {
        let pm = builtin(PMapFamily::Khalil, Some(0.5), 0.01, 1.0);
        let f = RealFunction::by_name("sin").unwrap();
        let g = RealFunction::by_name("cos").unwrap();
        let r = rule_residuals(&pm, &f, &g, 0.5).unwrap();
        assert!(r.sum < 1e-6 && r.product < 1e-6 && r.quotient < 1e-6 && r.chain < 1e-6,
            "{r:?}");
    }

    #[test]
    fn rules_hold_tightly_for_classical_polynomials() {
        let pm = builtin(PMapFamily::Classical, None, 0.0, 2.0);
        let f = RealFunction::by_name("t2").unwrap();
        let g = RealFunction::by_name("t3").unwrap();
        let r = rule_residuals(&pm, &f, &g, 1.0).unwrap();
        assert!(r.sum < 1e-9 && r.product < 1e-9 && r.quotient < 1e-9 && r.chain < 1e-9,
            "{r:?}");
    }

    #[test]
    fn wrong_form_chain_rule_has_visible_gap() {
        // f = g = id, t = 0.5, alpha = 0.5: |t^(1-a) - t^(2-2a)| ~ 0.2071
        let pm = builtin(PMapFamily::Khalil, Some(0.5), 0.01, 1.0);
        let f = RealFunction::by_name("t").unwrap();
        let g = RealFunction::by_name("t").unwrap();
        let gap = chain_rule_wrong_form_residual(&pm, &f, &g, 0.5).unwrap();
        let analytic = (0.5f64.sqrt() - 0.5).abs();
        assert!(gap >= 0.01, "gap = {gap}");
        assert!((gap - analytic).abs() < 1e-6, "gap = {gap}, analytic = {analytic}");
    }

    #[test]
    fn quotient_rule_rejects_vanishing_denominator() {
        let pm = builtin(PMapFamily::Classical, None, -1.0, 1.0);
        let f = RealFunction::by_name("t2").unwrap();
        let g = RealFunction::by_name("t").unwrap();
        assert!(matches!(
            rule_residuals(&pm, &f, &g, 0.0),
            Err(DerivError::RulePrecondition { rule: "quotient", .. })
        ));
    }

    #[test]
    fn endpoint_one_sided_limit() {
        let pm = builtin(PMapFamily::Classical, None, 0.0, 1.0);
        let f = RealFunction::by_name("t2").unwrap();
        let v = gd_limit_num(&pm, &f, 0.0).unwrap();
        assert!(v.abs() < 1e-9, "got {v}");
        let v1 = gd_limit_num(&pm, &f, 1.0).unwrap();
        assert!((v1 - 2.0).abs() < 1e-9, "got {v1}");
    }

    #[test]
    fn composed_limit_agrees_with_second_operator() {
        let pm = builtin(PMapFamily::Khalil, Some(0.6), 0.05, 1.0);
        let f = RealFunction::by_name("sin").unwrap();
        let t = 0.4;
        let direct = gd_second(&pm, &f, t).unwrap();
        let pm2 = pm.clone();
        let fc = f.clone();
        let df = RealFunction::new("Df", move |s| {
            gd_limit_num(&pm2, &fc, s).unwrap_or(f64::NAN)
        });
        let composed = gd_limit_num(&pm, &df, t).unwrap();
        assert!((direct - composed).abs() < 1e-5, "direct {direct} vs composed {composed}");
    }
}
