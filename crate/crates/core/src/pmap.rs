//! The p-map catalog and numerical checks of the hypotheses that make
//! p-derivatives behave like derivatives.
//!
//! A p-map is a function `p(t, h)` (with the fractional order `alpha` baked
//! in at construction for the fractional families). The solvability
//! hypotheses H1+/H1- ask that `p(t, h) = t +/- eps` be solvable for `h`
//! with `h -> 0` as `eps -> 0`; H2 asks that `1/p_h(., 0)` be integrable.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::func::sgn;
use crate::interval::Interval;
use crate::quad;
use crate::rootfind;

#[derive(Debug, Error)]
pub enum PMapError {
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("{family} requires alpha")]
    AlphaRequired { family: String },
    #[error("{family} requires a domain with t > 0, got [{lo}, {hi}]")]
    DomainRequiresPositive { family: String, lo: f64, hi: f64 },
    #[error("t = {t} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("difference quotient for p_h(t, 0) did not converge at t = {t} (last delta {delta})")]
    PhNonConvergent { t: f64, delta: f64 },
    #[error("unknown p-map family '{0}'")]
    UnknownFamily(String),
}

/// Built-in p-map families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMapFamily {
    /// `p(t, h) = t + h`; the classical derivative.
    Classical,
    /// `p(t, h) = t + h t^(1-alpha)` on `t > 0`.
    Khalil,
    /// `p(t, h) = t exp(h t^(-alpha))` on `t > 0`.
    Katugampola,
    /// `p(t, h) = t + |t|^(1-alpha) h`; time-reversible fractional map.
    SymmetricAbs,
    /// `p(t, h) = t + sgn(t) h`; indefinite weight, degenerate spectrum.
    SignMap,
    /// `p(t, h) = t + h^2`; annihilates every differentiable function.
    Quadratic,
    /// `p(t, h) = t + h^3`; p-differentiability without differentiability.
    Cubic,
}

impl PMapFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PMapFamily::Classical => "classical",
            PMapFamily::Khalil => "khalil",
            PMapFamily::Katugampola => "katugampola",
            PMapFamily::SymmetricAbs => "symmetric_abs",
            PMapFamily::SignMap => "sign_map",
            PMapFamily::Quadratic => "quadratic",
            PMapFamily::Cubic => "cubic",
        }
    }

    pub fn parse(name: &str) -> Result<Self, PMapError> {
        Ok(match name {
            "classical" => PMapFamily::Classical,
            "khalil" => PMapFamily::Khalil,
            "katugampola" => PMapFamily::Katugampola,
            "symmetric_abs" => PMapFamily::SymmetricAbs,
            "sign_map" => PMapFamily::SignMap,
            "quadratic" => PMapFamily::Quadratic,
            "cubic" => PMapFamily::Cubic,
            other => return Err(PMapError::UnknownFamily(other.to_string())),
        })
    }

    fn needs_alpha(&self) -> bool {
        matches!(
            self,
            PMapFamily::Khalil | PMapFamily::Katugampola | PMapFamily::SymmetricAbs
        )
    }

    fn needs_positive_domain(&self) -> bool {
        matches!(self, PMapFamily::Khalil | PMapFamily::Katugampola)
    }
}

type Eval2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Eval1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Descriptor of a map `p(t, h)`: evaluator, analytic `p_h(t, 0)` when
/// known, domain, and optional fractional order.
///
/// Immutable after construction; all operations on shared `PMap` values are
/// pure and safe to call concurrently.
#[derive(Clone)]
pub struct PMap {
    label: String,
    eval: Eval2,
    ph_zero: Option<Eval1>,
    domain: Interval,
    alpha: Option<f64>,
    family: Option<PMapFamily>,
    /// Points where `p_h(., 0)` vanishes or is non-smooth; quadrature and
    /// grid builders split panels there.
    ph_kinks: Vec<f64>,
}

impl fmt::Debug for PMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PMap")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl PMap {
    /// Custom p-map from a raw evaluator. Catalog maps come from
    /// [`PMap::builtin`] instead.
    pub fn custom(
        label: impl Into<String>,
        domain: Interval,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            ph_zero: None,
            domain,
            alpha: None,
            family: None,
            ph_kinks: Vec::new(),
        }
    }

    pub fn with_ph_zero(mut self, ph: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.ph_zero = Some(Arc::new(ph));
        self
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.ph_kinks = kinks;
        self
    }

    /// Construct a catalog map. `alpha` is required for the fractional
    /// families (khalil, katugampola, symmetric_abs) and ignored otherwise;
    /// khalil and katugampola require a domain with `t > 0`.
    pub fn builtin(
        family: PMapFamily,
        alpha: Option<f64>,
        domain: Interval,
    ) -> Result<Self, PMapError> {
        let a = if family.needs_alpha() {
            let a = alpha.ok_or_else(|| PMapError::AlphaRequired { family: family.name().into() })?;
            if !(a > 0.0 && a <= 1.0) {
                return Err(PMapError::InvalidAlpha(a));
            }
            Some(a)
        } else {
            None
        };
        if family.needs_positive_domain() && domain.lo() <= 0.0 {
            return Err(PMapError::DomainRequiresPositive {
                family: family.name().into(),
                lo: domain.lo(),
                hi: domain.hi(),
            });
        }

        let (label, eval, ph, kinks): (String, Eval2, Eval1, Vec<f64>) = match family {
            PMapFamily::Classical => (
                "classical".into(),
                Arc::new(|t: f64, h: f64| t + h),
                Arc::new(|_| 1.0),
                vec![],
            ),
            PMapFamily::Khalil => {
                let al = a.unwrap();
                (
                    format!("khalil(alpha={al})"),
                    Arc::new(move |t: f64, h: f64| t + h * t.powf(1.0 - al)),
                    Arc::new(move |t: f64| t.powf(1.0 - al)),
                    vec![0.0],
                )
            }
            PMapFamily::Katugampola => {
                let al = a.unwrap();
                (
                    format!("katugampola(alpha={al})"),
                    Arc::new(move |t: f64, h: f64| t * (h * t.powf(-al)).exp()),
                    Arc::new(move |t: f64| t.powf(1.0 - al)),
                    vec![0.0],
                )
            }
            PMapFamily::SymmetricAbs => {
                let al = a.unwrap();
                (
                    format!("symmetric_abs(alpha={al})"),
                    Arc::new(move |t: f64, h: f64| t + t.abs().powf(1.0 - al) * h),
                    Arc::new(move |t: f64| t.abs().powf(1.0 - al)),
                    vec![0.0],
                )
            }
            PMapFamily::SignMap => (
                "sign_map".into(),
                Arc::new(|t: f64, h: f64| t + sgn(t) * h),
                Arc::new(sgn),
                vec![0.0],
            ),
            PMapFamily::Quadratic => (
                "quadratic".into(),
                Arc::new(|t: f64, h: f64| t + h * h),
                Arc::new(|_| 0.0),
                vec![],
            ),
            PMapFamily::Cubic => (
                "cubic".into(),
                Arc::new(|t: f64, h: f64| t + h * h * h),
                Arc::new(|_| 0.0),
                vec![],
            ),
        };
        Ok(Self {
            label,
            eval,
            ph_zero: Some(ph),
            domain,
            alpha: a,
            family: Some(family),
            ph_kinks: kinks,
        })
    }

    #[inline]
    pub fn eval(&self, t: f64, h: f64) -> f64 {
        (self.eval)(t, h)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn family(&self) -> Option<PMapFamily> {
        self.family
    }

    pub fn has_analytic_ph(&self) -> bool {
        self.ph_zero.is_some()
    }

    pub fn kinks(&self) -> &[f64] {
        &self.ph_kinks
    }

    /// Half-width of the `h` neighborhood searched around a point `t`.
    /// The theory never quantifies it, so a scale-aware default is used.
    pub fn delta_at(&self, t: f64) -> f64 {
        let d = (t - self.domain.lo()).min(self.domain.hi() - t).min(1.0);
        0.5 * d.max(0.0)
    }

    /// `p_h(t, 0)`: analytic when known, otherwise a central difference in
    /// `h` refined until two successive estimates agree to relative 1e-9.
    pub fn ph_at_zero(&self, t: f64) -> Result<f64, PMapError> {
        if !self.domain.contains_slack(t, 1e-12 * self.domain.width()) {
            return Err(PMapError::OutOfDomain {
                t,
                lo: self.domain.lo(),
                hi: self.domain.hi(),
            });
        }
        if let Some(ph) = &self.ph_zero {
            return Ok(ph(t));
        }
        self.ph_numeric(t)
    }

    /// Central-difference estimate of `p_h(t, 0)`, step-refined.
    pub fn ph_numeric(&self, t: f64) -> Result<f64, PMapError> {
        let mut h = 1e-2 * self.delta_at(t).max(1e-3);
        let quot = |h: f64| (self.eval(t, h) - self.eval(t, -h)) / (2.0 * h);
        let mut prev = quot(h);
        let mut delta = f64::INFINITY;
        for _ in 0..40 {
            h *= 0.5;
            let cur = quot(h);
            if !cur.is_finite() {
                break;
            }
            delta = (cur - prev).abs();
            if delta <= 1e-9 * cur.abs().max(1.0) {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(PMapError::PhNonConvergent { t, delta })
    }

    /// Owned `p_h(., 0)` closure for quadrature and solver internals.
    /// Analytic when available; the numeric fallback maps failures to NaN so
    /// they surface through the quadrature error path. No domain gate: the
    /// eigenvalue machinery integrates up to singular endpoints that the
    /// formal domain excludes.
    pub fn ph_fn(&self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        if let Some(ph) = &self.ph_zero {
            return ph.clone();
        }
        let eval = self.eval.clone();
        let domain = self.domain;
        Arc::new(move |t: f64| {
            let d = (t - domain.lo()).min(domain.hi() - t).min(1.0).max(0.0);
            let mut h = 1e-2 * (0.5 * d).max(1e-3);
            let quot = |h: f64| (eval(t, h) - eval(t, -h)) / (2.0 * h);
            let mut prev = quot(h);
            for _ in 0..40 {
                h *= 0.5;
                let cur = quot(h);
                if !cur.is_finite() {
                    return f64::NAN;
                }
                if (cur - prev).abs() <= 1e-9 * cur.abs().max(1.0) {
                    return cur;
                }
                prev = cur;
            }
            f64::NAN
        })
    }

    /// Sampling check of the range invariant: `p(t, h)` stays inside the
    /// domain for `|h| < delta_at(t)`.
    pub fn range_stays_in_domain(&self, n_samples: usize) -> bool {
        let slack = 1e-9 * self.domain.width();
        for t in self.domain.linspace(n_samples) {
            let delta = self.delta_at(t);
            for k in 0..=8 {
                let h = delta * 0.99 * 0.5f64.powi(k);
                for s in [h, -h] {
                    if !self.domain.contains_slack(self.eval(t, s), slack) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// JSON-addressable descriptor, e.g.
/// `{"family": "khalil", "alpha": 0.5, "domain": [0.01, 1.0]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PMapSpec {
    pub family: PMapFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub domain: Interval,
}

impl PMapSpec {
    pub fn build(&self) -> Result<PMap, PMapError> {
        PMap::builtin(self.family, self.alpha, self.domain)
    }
}

/// Evidence for one solved instance of `p(t, h) = t +/- eps`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct H1Sample {
    pub t: f64,
    pub eps: f64,
    pub h: f64,
}

/// A sample where no solution `h` was found (or the limit condition failed).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct H1Failure {
    pub t: f64,
    pub eps: f64,
    pub plus_side: bool,
}

/// Outcome of the numerical hypothesis checks for one p-map.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub h1_plus: bool,
    pub h1_plus_evidence: Vec<H1Sample>,
    pub h1_minus: bool,
    pub h1_minus_evidence: Vec<H1Sample>,
    pub h1_failures: Vec<H1Failure>,
    pub h2: bool,
    /// Converged estimate of `int_I |1/p_h(s, 0)| ds` when H2 holds.
    pub h2_integral: Option<f64>,
    pub continuity_at_zero: bool,
    /// The lift identity additionally needs `lim eps/h(t, eps)` to exist
    /// and be nonzero; verifying that robustly is ill-posed, so it is
    /// assumed.
    pub eps_over_h_limit: &'static str,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.h1_plus && self.h1_minus && self.h2 && self.continuity_at_zero
    }
}

/// Solve `p(t, h) = target` for `h` with `|h| < delta`, scanning a geometric
/// grid `+/- delta * 2^-k` for sign changes and bisecting the bracket
/// nearest `h = 0`. H1 only asserts existence, so the search is exhaustive
/// down to machine scale.
fn solve_for_h(pm: &PMap, t: f64, target: f64, delta: f64) -> Option<f64> {
    if delta <= 0.0 {
        return None;
    }
    let g = |h: f64| pm.eval(t, h) - target;
    let mut best: Option<f64> = None;
    for side in [1.0f64, -1.0] {
        // walk outward from the smallest magnitude so the root closest to 0
        // is found first on each side
        let mut prev_h = 0.0;
        let mut prev_g = g(0.0);
        if prev_g == 0.0 {
            // p(t, 0) = target would mean eps = 0; not expected, skip
            prev_g = f64::NAN;
        }
        let mut found = None;
        for k in (0..=40).rev() {
            let h = side * delta * 0.5f64.powi(k);
            let gh = g(h);
            if !gh.is_finite() {
                prev_h = h;
                prev_g = gh;
                continue;
            }
            if gh == 0.0 {
                found = Some(h);
                break;
            }
            if prev_g.is_finite() && gh.signum() != prev_g.signum() {
                let (lo, hi) = if prev_h < h { (prev_h, h) } else { (h, prev_h) };
                if let Ok(root) = rootfind::bisect(g, lo, hi, 0.0, 200) {
                    found = Some(root);
                    break;
                }
            }
            prev_h = h;
            prev_g = gh;
        }
        if let Some(h) = found {
            best = match best {
                Some(b) if b.abs() <= h.abs() => Some(b),
                _ => Some(h),
            };
        }
    }
    best
}

/// Numerically check H1+/H1-, H2, and continuity of `p` at `h = 0`.
///
/// `sample_ts` must lie inside the domain; `eps_grid` must decrease strictly
/// to 0. H1 holds when every sample admits a solution `h(t, eps)` whose
/// magnitude decreases to 0 along the grid; H2 is decided by quadrature
/// convergence of `|1/p_h(., 0)|` (a heuristic stand-in for true Lebesgue
/// integrability).
pub fn check_hypotheses(
    pm: &PMap,
    sample_ts: &[f64],
    eps_grid: &[f64],
) -> Result<HypothesisReport, PMapError> {
    for &t in sample_ts {
        if !pm.domain().contains(t) {
            return Err(PMapError::OutOfDomain {
                t,
                lo: pm.domain().lo(),
                hi: pm.domain().hi(),
            });
        }
    }
    assert!(
        eps_grid.windows(2).all(|w| w[1] < w[0]) && eps_grid.iter().all(|&e| e > 0.0),
        "eps_grid must decrease strictly to 0"
    );

    let mut failures = Vec::new();
    let mut check_side = |plus: bool| -> (bool, Vec<H1Sample>) {
        let mut ok = true;
        let mut evidence = Vec::new();
        for &t in sample_ts {
            let delta = pm.delta_at(t);
            let mut hs = Vec::with_capacity(eps_grid.len());
            for &eps in eps_grid {
                let target = if plus { t + eps } else { t - eps };
                // Search the h-neighborhood first; fall back to a wide scan
                // so maps whose solutions exist but escape every
                // neighborhood still produce evidence for the limit check.
                let solved = solve_for_h(pm, t, target, delta)
                    .or_else(|| solve_for_h(pm, t, target, 16.0 * delta.max(1.0)));
                match solved {
                    Some(h) => {
                        evidence.push(H1Sample { t, eps, h });
                        hs.push(h.abs());
                    }
                    None => {
                        failures.push(H1Failure { t, eps, plus_side: plus });
                        ok = false;
                    }
                }
            }
            if hs.len() == eps_grid.len() && !hs.is_empty() {
                // |h| must be non-increasing and shrink toward 0
                let monotone = hs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
                let vanishes = *hs.last().unwrap() <= (0.5 * hs[0]).max(1e-12);
                if !(monotone && vanishes) {
                    failures.push(H1Failure { t, eps: *eps_grid.last().unwrap(), plus_side: plus });
                    ok = false;
                }
            }
        }
        (ok, evidence)
    };

    let (h1_plus, h1_plus_evidence) = check_side(true);
    let (h1_minus, h1_minus_evidence) = check_side(false);

    // H2: adaptive quadrature of |1/p_h(., 0)| with panel splits at the
    // known kinks of p_h.
    let ph = pm.ph_fn();
    let integrand = move |s: f64| {
        let v = ph(s);
        if v == 0.0 {
            f64::INFINITY
        } else {
            (1.0 / v).abs()
        }
    };
    let h2_result = quad::integrate_split(
        integrand,
        pm.domain().lo(),
        pm.domain().hi(),
        1e-6,
        pm.kinks(),
    );
    let (h2, h2_integral) = match h2_result {
        Ok(r) if r.value.is_finite() => (true, Some(r.value)),
        _ => (false, None),
    };

    // Continuity of p(t, .) at h = 0 over the samples: the deviation from
    // p(t, 0) must have died out by machine-small h.
    let mut continuity = true;
    for &t in sample_ts {
        let p0 = pm.eval(t, 0.0);
        let scale = t.abs().max(1.0);
        let h = pm.delta_at(t).max(1e-6) * 0.5f64.powi(30);
        let dev = (pm.eval(t, h) - p0).abs().max((pm.eval(t, -h) - p0).abs());
        if !(dev <= 1e-7 * scale) {
            continuity = false;
        }
    }

    Ok(HypothesisReport {
        h1_plus,
        h1_plus_evidence,
        h1_minus,
        h1_minus_evidence,
        h1_failures: failures,
        h2,
        h2_integral,
        continuity_at_zero: continuity,
        eps_over_h_limit: "assumed (not numerically verified)",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn khalil_ph_zero_quarter() {
        // p_h(t, 0) = t^(1-alpha); at alpha = 0.5, t = 0.25 this is 0.5
        let pm = PMap::builtin(PMapFamily::Khalil, Some(0.5), iv(0.01, 1.0)).unwrap();
        assert!((pm.ph_at_zero(0.25).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn classical_ph_is_one() {
        let pm = PMap::builtin(PMapFamily::Classical, None, iv(0.0, 1.0)).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(pm.ph_at_zero(t).unwrap(), 1.0);
        }
    }

    #[test]
    fn katugampola_analytic_matches_numeric() {
        let pm = PMap::builtin(PMapFamily::Katugampola, Some(0.3), iv(0.1, 2.0)).unwrap();
        for t in [0.1, 0.35, 0.8, 1.5, 2.0] {
            let analytic = pm.ph_at_zero(t).unwrap();
            let numeric = pm.ph_numeric(t).unwrap();
            assert!(
                (analytic - numeric).abs() < 1e-8 * analytic.abs().max(1.0),
                "t = {t}: {analytic} vs {numeric}"
            );
        }
    }

    #[test]
    fn quadratic_and_sign_ph_values() {
        let quad_map = PMap::builtin(PMapFamily::Quadratic, None, iv(-1.0, 1.0)).unwrap();
        assert_eq!(quad_map.ph_at_zero(0.37).unwrap(), 0.0);
        let sign = PMap::builtin(PMapFamily::SignMap, None, iv(-1.0, 1.0)).unwrap();
        assert_eq!(sign.ph_at_zero(-0.3).unwrap(), -1.0);
    }

    #[test]
    fn builtin_validation() {
        assert!(matches!(
            PMap::builtin(PMapFamily::Khalil, Some(1.5), iv(0.1, 1.0)),
            Err(PMapError::InvalidAlpha(_))
        ));
        assert!(matches!(
            PMap::builtin(PMapFamily::Khalil, None, iv(0.1, 1.0)),
            Err(PMapError::AlphaRequired { .. })
        ));
        assert!(matches!(
            PMap::builtin(PMapFamily::Khalil, Some(0.5), iv(0.0, 1.0)),
            Err(PMapError::DomainRequiresPositive { .. })
        ));
        assert!(matches!(
            PMap::builtin(PMapFamily::Katugampola, Some(0.5), iv(-0.5, 1.0)),
            Err(PMapError::DomainRequiresPositive { .. })
        ));
    }

    #[test]
    fn eval_at_zero_recovers_t_for_catalog() {
        // forced by H1 + continuity: p(t, 0) = t
        let maps = [
            PMap::builtin(PMapFamily::Classical, None, iv(-1.0, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::Khalil, Some(0.4), iv(0.05, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::Katugampola, Some(0.7), iv(0.05, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::SymmetricAbs, Some(0.6), iv(-1.0, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::SignMap, None, iv(-1.0, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::Quadratic, None, iv(-1.0, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::Cubic, None, iv(-1.0, 1.0)).unwrap(),
        ];
        for pm in &maps {
            for t in pm.domain().linspace(17) {
                assert!((pm.eval(t, 0.0) - t).abs() <= 1e-12, "{}: t = {t}", pm.label());
            }
        }
    }

    #[test]
    fn khalil_hypotheses_hold_with_closed_form_h2() {
        let pm = PMap::builtin(PMapFamily::Khalil, Some(0.5), iv(0.01, 1.0)).unwrap();
        let ts = [0.05, 0.25, 0.5, 0.9];
        let eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let rep = check_hypotheses(&pm, &ts, &eps).unwrap();
        assert!(rep.h1_plus && rep.h1_minus && rep.continuity_at_zero);
        assert!(rep.h2);
        // int_{0.01}^{1} s^(-1/2) ds = 2 (1 - sqrt(0.01)) = 1.8
        let integral = rep.h2_integral.unwrap();
        assert!((integral - 1.8).abs() < 1e-6, "H2 integral = {integral}");
        assert!(!rep.h1_plus_evidence.is_empty() && !rep.h1_minus_evidence.is_empty());
    }

    #[test]
    fn constant_in_h_map_fails_h1() {
        // p(t, h) = t has no solution of p = t + eps at all
        let pm = PMap::custom("constant_in_h", iv(-1.0, 1.0), |t, _| t);
        let rep = check_hypotheses(&pm, &[0.0, 0.5], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(!rep.h1_plus);
        assert!(!rep.h1_failures.is_empty());
    }

    #[test]
    fn exp_map_solves_but_violates_limit_condition() {
        // p(t, h) = t + e^h: h = log eps exists but |h| grows as eps -> 0
        let pm = PMap::custom("t_plus_exp_h", iv(-1.0, 1.0), |t, h| t + h.exp());
        let rep = check_hypotheses(&pm, &[0.0], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(!rep.h1_plus);
    }

    #[test]
    fn quadratic_h1_plus_only() {
        // p(t, h) = t + h^2: h = sqrt(eps) solves the + side; the - side has
        // no real solution at interior t
        let pm = PMap::builtin(PMapFamily::Quadratic, None, iv(-1.0, 1.0)).unwrap();
        let rep = check_hypotheses(&pm, &[-0.4, 0.0, 0.3], &[1e-2, 1e-3, 1e-4, 1e-5]).unwrap();
        assert!(rep.h1_plus);
        assert!(!rep.h1_minus);
        for s in &rep.h1_plus_evidence {
            assert!((s.h.abs() - s.eps.sqrt()).abs() < 1e-7, "h = {}, eps = {}", s.h, s.eps);
        }
    }

    #[test]
    fn numeric_fallback_agrees_with_analytic_across_catalog() {
        let maps = [
            PMap::builtin(PMapFamily::Classical, None, iv(-1.0, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::Khalil, Some(0.5), iv(0.05, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::Katugampola, Some(0.5), iv(0.05, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::SymmetricAbs, Some(0.7), iv(-1.0, 1.0)).unwrap(),
            PMap::builtin(PMapFamily::Quadratic, None, iv(-1.0, 1.0)).unwrap(),
        ];
        for pm in &maps {
            for t in pm.domain().linspace(7) {
                // skip the p_h kink of symmetric_abs at 0, where only the
                // analytic form is defined
                if pm.kinks().iter().any(|&k| (t - k).abs() < 1e-6) {
                    continue;
                }
                let analytic = pm.ph_at_zero(t).unwrap();
                let numeric = pm.ph_numeric(t).unwrap();
                assert!(
                    (analytic - numeric).abs() <= 1e-8 * analytic.abs().max(1.0),
                    "{} at t = {t}: {analytic} vs {numeric}",
                    pm.label()
                );
            }
        }
    }

    #[test]
    fn range_invariant_sampled() {
        let pm = PMap::builtin(PMapFamily::Classical, None, iv(0.0, 1.0)).unwrap();
        assert!(pm.range_stays_in_domain(33));
    }

    #[test]
    fn h2_fails_for_non_integrable_weight() {
        // p_h(t, 0) = t^2 makes 1/p_h ~ 1/t^2 non-integrable at 0
        let pm = PMap::custom("hard_zero", iv(0.0, 1.0), |t, h| t + t * t * h)
            .with_ph_zero(|t| t * t)
            .with_kinks(vec![0.0]);
        let rep = check_hypotheses(&pm, &[0.3, 0.7], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(!rep.h2);
        assert!(rep.h2_integral.is_none());
    }

    #[test]
    fn spec_round_trips_from_json() {
        let spec: PMapSpec =
            serde_json::from_str(r#"{"family": "khalil", "alpha": 0.5, "domain": [0.01, 1.0]}"#)
                .unwrap();
        let pm = spec.build().unwrap();
        assert_eq!(pm.label(), "khalil(alpha=0.5)");
        assert!(serde_json::from_str::<PMapSpec>(
            r#"{"family": "khalil", "alpha": 0.5, "domain": [0.01, 1.0], "extra": 1}"#
        )
        .is_err());
    }
}
