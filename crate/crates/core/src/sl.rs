//! Sturm-Liouville problems built from generalized derivatives.
//!
//! The second-order problem `-D(P Dy) + q y = lambda w y` with boundary
//! conditions imposed on `Dy = p_h y'` reduces to a weighted classical
//! problem. The clock change `tau(t) = int_a^t ds/(P p_h)` turns it into
//! `-z'' + Q* z = lambda W* z` on `[0, c]` with `Q* = (P q)(t(tau))`,
//! `W* = (P w)(t(tau))` and unchanged boundary angles, which is where the
//! shooting happens: the singular weight factors live entirely inside the
//! clock, so the transformed equation is regular.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::deriv;
use crate::func::RealFunction;
use crate::interval::Interval;
use crate::ode::{self, OdeOptions};
use crate::pmap::{PMap, PMapFamily};
use crate::quad::{self, QuadError};
use crate::rootfind::{self, RootError};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum SlError {
    #[error("boundary angle {which} = {value} must lie in [0, pi)")]
    BoundaryAngle { which: &'static str, value: f64 },
    #[error("coefficient {which} is not integrable against 1/p_h on the interval")]
    NonIntegrable { which: &'static str },
    #[error("1/p_h(., 0) vanishes on a set of positive measure; problem rejected")]
    PhVanishingMeasure,
    #[error("time change is not monotone; only closed-form and degenerate checks apply")]
    NonMonotoneTimeChange,
    #[error("tau = {tau} is outside the computed range [0, {c}]")]
    TauOutOfRange { tau: f64, c: f64 },
    #[error("eigenvalue bracket not found while scanning lambda in [{lo}, {hi}]")]
    MissedBracket { lo: f64, hi: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("asymptotic denominator vanishes on the {side} side")]
    ZeroAsymptoticDenominator { side: &'static str },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Ode(#[from] ode::OdeError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Deriv(#[from] deriv::DerivError),
    #[error(transparent)]
    PMap(#[from] crate::pmap::PMapError),
}

/// Which half of the doubly infinite eigenvalue sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumSide {
    Plus,
    Minus,
}

// ---------------------------------------------------------------------------
// Problem definition
// ---------------------------------------------------------------------------

/// A generalized Sturm-Liouville problem: coefficients, interval, boundary
/// angles, and the attached p-map.
///
/// The interval may reach a singular endpoint excluded from the p-map's
/// formal domain (e.g. t = 0 for the khalil family); construction verifies
/// that the coefficient combinations stay integrable there.
#[derive(Debug, Clone)]
pub struct SLProblem {
    pm: PMap,
    interval: Interval,
    p_coeff: RealFunction,
    q_coeff: RealFunction,
    w_coeff: RealFunction,
    mu: f64,
    nu: f64,
    breakpoints: Vec<f64>,
}

pub struct SLProblemBuilder {
    pm: PMap,
    interval: Interval,
    p_coeff: RealFunction,
    q_coeff: RealFunction,
    w_coeff: RealFunction,
    mu: f64,
    nu: f64,
    breakpoints: Vec<f64>,
}

impl SLProblem {
    /// Start a problem on `[a, b]` with defaults `P = 1`, `q = 0`, `w = 1`
    /// and Dirichlet angles `mu = nu = 0`.
    pub fn builder(pm: PMap, interval: Interval) -> SLProblemBuilder {
        SLProblemBuilder {
            pm,
            interval,
            p_coeff: RealFunction::one(),
            q_coeff: RealFunction::zero(),
            w_coeff: RealFunction::one(),
            mu: 0.0,
            nu: 0.0,
            breakpoints: Vec::new(),
        }
    }

    pub fn pm(&self) -> &PMap {
        &self.pm
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn p_coeff(&self) -> &RealFunction {
        &self.p_coeff
    }

    pub fn q_coeff(&self) -> &RealFunction {
        &self.q_coeff
    }

    pub fn w_coeff(&self) -> &RealFunction {
        &self.w_coeff
    }

    /// Interior split points: user-declared coefficient breakpoints plus the
    /// p-map's own kinks.
    fn splits(&self) -> Vec<f64> {
        let mut s = self.breakpoints.clone();
        s.extend(self.pm.kinks().iter().copied());
        s.retain(|&x| x > self.interval.lo() && x < self.interval.hi());
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.dedup();
        s
    }
}

impl SLProblemBuilder {
    pub fn p(mut self, p: RealFunction) -> Self {
        self.p_coeff = p;
        self
    }

    pub fn q(mut self, q: RealFunction) -> Self {
        self.q_coeff = q;
        self
    }

    pub fn w(mut self, w: RealFunction) -> Self {
        self.w_coeff = w;
        self
    }

    pub fn angles(mut self, mu: f64, nu: f64) -> Self {
        self.mu = mu;
        self.nu = nu;
        self
    }

    pub fn breakpoints(mut self, bp: Vec<f64>) -> Self {
        self.breakpoints = bp;
        self
    }

    pub fn build(self) -> Result<SLProblem, SlError> {
        if !(0.0..PI).contains(&self.mu) {
            return Err(SlError::BoundaryAngle { which: "mu", value: self.mu });
        }
        if !(0.0..PI).contains(&self.nu) {
            return Err(SlError::BoundaryAngle { which: "nu", value: self.nu });
        }
        let prob = SLProblem {
            pm: self.pm,
            interval: self.interval,
            p_coeff: self.p_coeff,
            q_coeff: self.q_coeff,
            w_coeff: self.w_coeff,
            mu: self.mu,
            nu: self.nu,
            breakpoints: self.breakpoints,
        };
        let ph = prob.pm.ph_fn();
        let (a, b) = (prob.interval.lo(), prob.interval.hi());
        let splits = prob.splits();

        // 1/p_h = 0 on positive measure (p_h infinite) is the reformulation
        // territory the theory avoids; detect by sampling.
        let n = 512;
        let mut vanishing = 0usize;
        for t in prob.interval.linspace(n) {
            let v = ph(t);
            if v.is_infinite() || (v.is_finite() && v.abs() > 1e300) {
                vanishing += 1;
            }
        }
        if vanishing > n / 20 {
            return Err(SlError::PhVanishingMeasure);
        }

        // Regularity: 1/(P p_h), q/p_h, w/p_h integrable.
        let pc = prob.p_coeff.clone();
        let ph1 = ph.clone();
        let lead = move |s: f64| {
            let d = pc.eval(s) * ph1(s);
            if d == 0.0 {
                f64::INFINITY
            } else {
                (1.0 / d).abs()
            }
        };
        quad::integrate_split(lead, a, b, 1e-6, &splits)
            .map_err(|_| SlError::NonIntegrable { which: "1/(P p_h)" })?;

        for (which, f) in [("q/p_h", prob.q_coeff.clone()), ("w/p_h", prob.w_coeff.clone())] {
            let ph_k = ph.clone();
            let integrand = move |s: f64| {
                let d = ph_k(s);
                let num = f.eval(s);
                if d == 0.0 {
                    if num == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (num / d).abs()
                }
            };
            quad::integrate_split(integrand, a, b, 1e-6, &splits)
                .map_err(|_| SlError::NonIntegrable { which })?;
        }
        Ok(prob)
    }
}

// ---------------------------------------------------------------------------
// Time change
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum CellKind {
    Smooth,
    SingularLeft,
    SingularRight,
}

/// The clock `tau(t) = int_a^t ds / (P(s) p_h(s, 0))`, tabulated on a graded
/// grid with exact re-integration inside cells.
#[derive(Clone)]
pub struct TimeChange {
    grid_t: Vec<f64>,
    grid_tau: Vec<f64>,
    cells: Vec<CellKind>,
    c: f64,
    monotone: bool,
    increasing: bool,
    integrand: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for TimeChange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeChange")
            .field("nodes", &self.grid_t.len())
            .field("c", &self.c)
            .field("monotone", &self.monotone)
            .finish()
    }
}

impl TimeChange {
    /// Build from a raw integrand over `[a, b]`. `special` lists points
    /// where the integrand is singular or kinked (grid cells are graded
    /// toward them); endpoints are probed automatically.
    pub fn build(
        integrand: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        a: f64,
        b: f64,
        n_grid: usize,
        special: &[f64],
    ) -> Result<Self, SlError> {
        let n_grid = n_grid.max(16);
        let width = b - a;
        let mut nodes: Vec<f64> =
            (0..=n_grid).map(|i| a + width * i as f64 / n_grid as f64).collect();
        for &s in special {
            if s > a && s < b {
                nodes.push(s);
            }
        }
        nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
        nodes.dedup_by(|x, y| (*x - *y).abs() < 1e-15 * width.abs());

        // Singular points: declared specials and endpoints where the
        // integrand actually blows up or is undefined nearby. A smooth
        // breakpoint stays a plain panel boundary; grading toward it would
        // only create sub-resolution cells.
        let probe_bad = |x: f64| {
            let v = integrand(x);
            !v.is_finite() || v.abs() > 1e12
        };
        let mut singular: Vec<f64> = Vec::new();
        for &s in special.iter().filter(|&&s| s >= a && s <= b) {
            let off = 1e-9 * width.abs().max(1.0);
            if probe_bad(s) || probe_bad((s + off).min(b)) || probe_bad((s - off).max(a)) {
                singular.push(s);
            }
        }
        for probe in [a, b] {
            if probe_bad(probe) {
                singular.push(probe);
            }
        }
        singular.sort_by(|x, y| x.partial_cmp(y).unwrap());
        singular.dedup();

        // Grade geometrically toward each singular point so the tabulated
        // grid keeps the running integral well resolved there.
        let mut extra = Vec::new();
        for &s0 in &singular {
            let idx = nodes.iter().position(|&n| (n - s0).abs() < 1e-15 * width);
            let Some(idx) = idx else { continue };
            if idx + 1 < nodes.len() {
                let w = nodes[idx + 1] - s0;
                for j in 1..=46 {
                    let x = s0 + w * 0.25f64.powi(j);
                    if x > s0 {
                        extra.push(x);
                    }
                }
            }
            if idx > 0 {
                let w = s0 - nodes[idx - 1];
                for j in 1..=46 {
                    let x = s0 - w * 0.25f64.powi(j);
                    if x < s0 {
                        extra.push(x);
                    }
                }
            }
        }
        nodes.extend(extra);
        nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
        nodes.dedup();

        let near_singular =
            |x: f64| singular.iter().any(|&s| (x - s).abs() < 1e-14 * width.abs().max(1.0));

        let mut grid_tau = Vec::with_capacity(nodes.len());
        let mut cells = Vec::with_capacity(nodes.len().saturating_sub(1));
        grid_tau.push(0.0);
        let mut acc = 0.0;
        let mut has_pos = false;
        let mut has_neg = false;
        for i in 0..nodes.len() - 1 {
            let (lo, hi) = (nodes[i], nodes[i + 1]);
            let kind = if near_singular(lo) {
                CellKind::SingularLeft
            } else if near_singular(hi) {
                CellKind::SingularRight
            } else {
                CellKind::Smooth
            };
            let dtau = match kind {
                CellKind::Smooth => quad::gauss15(&*integrand, lo, hi),
                _ => quad::tanh_sinh(&*integrand, lo, hi, 1e-12)?.value,
            };
            if !dtau.is_finite() {
                return Err(SlError::Quad(QuadError::NonFiniteSample { x: 0.5 * (lo + hi) }));
            }
            acc += dtau;
            grid_tau.push(acc);
            cells.push(kind);

            for frac in [0.25, 0.5, 0.75] {
                let v = integrand(lo + (hi - lo) * frac);
                if v > 1e-13 {
                    has_pos = true;
                } else if v < -1e-13 {
                    has_neg = true;
                }
            }
        }

        let c = grid_tau.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let monotone = !(has_pos && has_neg);
        let increasing = has_pos && !has_neg;
        Ok(Self { grid_t: nodes, grid_tau, cells, c, monotone, increasing, integrand })
    }

    /// `max_{t in [a,b]} tau(t)`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn monotone(&self) -> bool {
        self.monotone
    }

    pub fn increasing(&self) -> bool {
        self.increasing
    }

    /// Tabulated `(t, tau)` pairs.
    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid_t.iter().copied().zip(self.grid_tau.iter().copied())
    }

    pub fn t_start(&self) -> f64 {
        self.grid_t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.grid_t.last().unwrap()
    }

    pub fn tau_end(&self) -> f64 {
        *self.grid_tau.last().unwrap()
    }

    /// dtau/dt at `t`.
    pub fn slope(&self, t: f64) -> f64 {
        (self.integrand)(t)
    }

    /// `tau(t)` by cell-anchored quadrature: stored prefix plus an exact
    /// integral over the remainder of the cell, so the result is smooth in
    /// `t` (no interpolation error).
    pub fn tau_at(&self, t: f64) -> f64 {
        let (a, b) = (self.grid_t[0], *self.grid_t.last().unwrap());
        let t = t.clamp(a, b);
        let i = match self.grid_t.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.grid_tau[i],
            Err(i) => i.saturating_sub(1).min(self.cells.len() - 1),
        };
        let (lo, hi) = (self.grid_t[i], self.grid_t[i + 1]);
        match self.cells[i] {
            CellKind::Smooth => self.grid_tau[i] + quad::gauss15(&*self.integrand, lo, t),
            CellKind::SingularLeft => {
                // anchor from the regular right end of the cell
                let tail = quad::tanh_sinh(&*self.integrand, t, hi, 1e-13)
                    .map(|r| r.value)
                    .unwrap_or_else(|_| quad::gauss15(&*self.integrand, t, hi));
                self.grid_tau[i + 1] - tail
            }
            CellKind::SingularRight => {
                let head = quad::tanh_sinh(&*self.integrand, lo, t, 1e-13)
                    .map(|r| r.value)
                    .unwrap_or_else(|_| quad::gauss15(&*self.integrand, lo, t));
                self.grid_tau[i] + head
            }
        }
    }

    /// Invert the clock: the `t` with `tau(t) = tau`. Requires a monotone
    /// clock (either direction).
    pub fn invert(&self, tau: f64) -> Result<f64, SlError> {
        if !self.monotone {
            return Err(SlError::NonMonotoneTimeChange);
        }
        let sign = if self.increasing { 1.0 } else { -1.0 };
        let end = sign * self.tau_end();
        let target = sign * tau;
        let span = end.abs().max(1.0);
        if target < -1e-9 * span || target > end + 1e-9 * span {
            return Err(SlError::TauOutOfRange { tau, c: self.c });
        }
        // locate the bracketing cell in the tabulated tau grid
        let mut lo = 0usize;
        let mut hi = self.grid_tau.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if sign * self.grid_tau[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (mut tl, mut th) = (self.grid_t[lo], self.grid_t[hi]);
        let (vl, vh) = (sign * self.grid_tau[lo], sign * self.grid_tau[hi]);
        if target <= vl {
            return Ok(tl);
        }
        if target >= vh {
            return Ok(th);
        }
        // Newton from a linear seed, with bisection safeguards
        let mut t = tl + (th - tl) * (target - vl) / (vh - vl).max(f64::MIN_POSITIVE);
        for _ in 0..80 {
            let g = sign * self.tau_at(t) - target;
            if g.abs() <= 1e-14 * span {
                return Ok(t);
            }
            if g > 0.0 {
                th = t;
            } else {
                tl = t;
            }
            let slope = sign * (self.integrand)(t);
            let newton = if slope.is_finite() && slope > 0.0 { t - g / slope } else { f64::NAN };
            t = if newton.is_finite() && newton > tl && newton < th {
                newton
            } else {
                0.5 * (tl + th)
            };
            if th - tl <= f64::EPSILON * t.abs().max(1.0) {
                return Ok(t);
            }
        }
        Ok(t)
    }
}

/// The clock of an SL problem: integrand `1 / (P(s) p_h(s, 0))` over the
/// problem's interval.
pub fn time_change(prob: &SLProblem, n_grid: usize) -> Result<TimeChange, SlError> {
    time_change_with(&prob.pm, &prob.p_coeff, prob.interval, n_grid, &prob.splits())
}

/// Clock for an arbitrary p-map and principal coefficient on `interval`;
/// mechanics uses this with `P = 1`.
pub fn time_change_with(
    pm: &PMap,
    p_coeff: &RealFunction,
    interval: Interval,
    n_grid: usize,
    extra_splits: &[f64],
) -> Result<TimeChange, SlError> {
    let ph = pm.ph_fn();
    let p = p_coeff.clone();
    let integrand = Arc::new(move |s: f64| {
        let d = p.eval(s) * ph(s);
        if d == 0.0 {
            f64::INFINITY
        } else {
            1.0 / d
        }
    });
    let mut special: Vec<f64> = pm.kinks().to_vec();
    special.extend_from_slice(extra_splits);
    TimeChange::build(integrand, interval.lo(), interval.hi(), n_grid, &special)
}

// ---------------------------------------------------------------------------
// Classical reduction
// ---------------------------------------------------------------------------

/// The weighted classical problem equivalent to a generalized one:
/// `-(P* y')' + Q* y = lambda W* y` with `P* = P p_h`, `Q* = q/p_h`,
/// `W* = w/p_h`, and boundary conditions rewritten on `P p_h y'`.
pub struct ClassicalSL {
    p_star: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    q_star: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    w_star: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub interval: Interval,
    pub mu: f64,
    pub nu: f64,
}

impl ClassicalSL {
    pub fn p_at(&self, t: f64) -> f64 {
        (self.p_star)(t)
    }

    pub fn q_at(&self, t: f64) -> f64 {
        (self.q_star)(t)
    }

    pub fn w_at(&self, t: f64) -> f64 {
        (self.w_star)(t)
    }
}

pub fn to_classical(prob: &SLProblem) -> ClassicalSL {
    let ph = prob.pm.ph_fn();
    let p = prob.p_coeff.clone();
    let q = prob.q_coeff.clone();
    let w = prob.w_coeff.clone();
    let ph_p = ph.clone();
    let ph_q = ph.clone();
    ClassicalSL {
        p_star: Arc::new(move |t| p.eval(t) * ph_p(t)),
        q_star: Arc::new(move |t| q.eval(t) / ph_q(t)),
        w_star: Arc::new(move |t| w.eval(t) / ph(t)),
        interval: prob.interval,
        mu: prob.mu,
        nu: prob.nu,
    }
}

// ---------------------------------------------------------------------------
// Closed-form solutions for -D^2 y = lambda y
// ---------------------------------------------------------------------------

/// General solution of `-D^2 y = lambda y` (coefficients `P = 1`, `q = 0`,
/// `w = 1`): trigonometric in `tau` for `lambda > 0`, hyperbolic for
/// `lambda < 0` (fixed determination of the square root), linear in `tau`
/// for `lambda = 0`.
pub struct ClosedFormSolution {
    pub y: RealFunction,
    pub dy: RealFunction,
    pub lambda: f64,
    pub time_change: Arc<TimeChange>,
}

pub fn closed_form_solution(
    prob: &SLProblem,
    lambda: f64,
    coeff_a: f64,
    coeff_b: f64,
) -> Result<ClosedFormSolution, SlError> {
    // this branch of the theory requires the two-term operator
    for t in prob.interval.linspace(32) {
        if prob.q_coeff.eval(t).abs() > 1e-12
            || (prob.w_coeff.eval(t) - 1.0).abs() > 1e-12
            || (prob.p_coeff.eval(t) - 1.0).abs() > 1e-12
        {
            return Err(SlError::Precondition(
                "closed_form_solution requires q = 0, w = 1, P = 1".into(),
            ));
        }
    }
    let tc = Arc::new(time_change(prob, 2048)?);
    let ph = prob.pm.ph_fn();

    let (y, dy): (RealFunction, RealFunction) = if lambda > 0.0 {
        let rl = lambda.sqrt();
        let tc_y = tc.clone();
        let tc_d = tc.clone();
        let tc_yp = tc.clone();
        let y = RealFunction::new("closed_form_y", move |t| {
            let arg = rl * tc_y.tau_at(t);
            coeff_a * arg.sin() + coeff_b * arg.cos()
        })
        .with_deriv(move |t| {
            let arg = rl * tc_yp.tau_at(t);
            rl * (coeff_a * arg.cos() - coeff_b * arg.sin()) / ph(t)
        });
        let dy = RealFunction::new("closed_form_dy", move |t| {
            let arg = rl * tc_d.tau_at(t);
            rl * (coeff_a * arg.cos() - coeff_b * arg.sin())
        });
        (y, dy)
    } else if lambda < 0.0 {
        let rl = (-lambda).sqrt();
        let tc_y = tc.clone();
        let tc_d = tc.clone();
        let tc_yp = tc.clone();
        let y = RealFunction::new("closed_form_y", move |t| {
            let arg = rl * tc_y.tau_at(t);
            coeff_a * arg.sinh() + coeff_b * arg.cosh()
        })
        .with_deriv(move |t| {
            let arg = rl * tc_yp.tau_at(t);
            rl * (coeff_a * arg.cosh() + coeff_b * arg.sinh()) / ph(t)
        });
        let dy = RealFunction::new("closed_form_dy", move |t| {
            let arg = rl * tc_d.tau_at(t);
            rl * (coeff_a * arg.cosh() + coeff_b * arg.sinh())
        });
        (y, dy)
    } else {
        // lambda = 0: y = A tau + B, Dy = A
        let tc_y = tc.clone();
        let y = RealFunction::new("closed_form_y", move |t| coeff_a * tc_y.tau_at(t) + coeff_b)
            .with_deriv(move |t| coeff_a / ph(t));
        let dy = RealFunction::new("closed_form_dy", move |_| coeff_a);
        (y, dy)
    };

    Ok(ClosedFormSolution { y, dy, lambda, time_change: tc })
}

// ---------------------------------------------------------------------------
// Shooting in tau-space
// ---------------------------------------------------------------------------

/// Ordered real eigenvalues with oscillation counts and the two asymptotic
/// denominators `int sqrt((w/p_h)_+-) ds`.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub lambda_plus: Vec<f64>,
    pub lambda_minus: Vec<f64>,
    pub oscillation_plus: Vec<usize>,
    pub oscillation_minus: Vec<usize>,
    pub asymptotic_denominator_plus: f64,
    pub asymptotic_denominator_minus: f64,
}

/// Coefficients of the tau-space equation `-z'' + Q* z = lambda W* z` on
/// `[0, c]`.
struct TauProblem {
    c: f64,
    mu: f64,
    nu: f64,
    wstar: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    qstar: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    tau_breaks: Vec<f64>,
}

/// Cubic Hermite table for `t(tau)`, used when the tau-space coefficients
/// are not constant.
struct InverseTable {
    taus: Vec<f64>,
    ts: Vec<f64>,
    slopes: Vec<f64>, // dt/dtau
}

impl InverseTable {
    fn build(tc: &TimeChange, m: usize) -> Result<Self, SlError> {
        let c = tc.tau_end();
        let mut taus = Vec::with_capacity(m + 1);
        let mut ts = Vec::with_capacity(m + 1);
        let mut slopes = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let tau = c * j as f64 / m as f64;
            let t = tc.invert(tau)?;
            let phi = tc.slope(t);
            let slope = if phi.is_finite() && phi.abs() > 1e-300 { 1.0 / phi } else { 0.0 };
            taus.push(tau);
            ts.push(t);
            slopes.push(slope);
        }
        Ok(Self { taus, ts, slopes })
    }

    fn eval(&self, tau: f64) -> f64 {
        let n = self.taus.len();
        let c = self.taus[n - 1];
        let tau = tau.clamp(0.0, c);
        let h = c / (n - 1) as f64;
        let j = ((tau / h) as usize).min(n - 2);
        let s = (tau - self.taus[j]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ts[j]
            + h10 * h * self.slopes[j]
            + h01 * self.ts[j + 1]
            + h11 * h * self.slopes[j + 1]
    }
}

fn nearly_constant(vals: &[f64]) -> Option<f64> {
    let first = vals[0];
    let tol = 1e-13 * first.abs().max(1.0);
    if vals.iter().all(|v| (v - first).abs() <= tol) {
        Some(first)
    } else {
        None
    }
}

fn build_tau_problem(prob: &SLProblem, tc: &TimeChange) -> Result<TauProblem, SlError> {
    let c = tc.tau_end();

    // t(tau): exact line when the clock rate is constant, cubic Hermite
    // table otherwise.
    let a = tc.t_start();
    let phi0 = tc.slope(0.5 * (tc.t_start() + tc.t_end()));
    let uniform = {
        let mut ok = phi0.is_finite() && phi0 != 0.0;
        if ok {
            let n_probe = 48;
            for i in 0..=n_probe {
                let t = tc.t_start()
                    + (tc.t_end() - tc.t_start()) * (i as f64 + 0.31) / (n_probe as f64 + 1.0);
                let v = tc.slope(t);
                if !v.is_finite() || (v - phi0).abs() > 1e-13 * phi0.abs().max(1.0) {
                    ok = false;
                    break;
                }
            }
        }
        ok
    };
    let t_of_tau: Arc<dyn Fn(f64) -> f64 + Send + Sync> = if uniform {
        Arc::new(move |tau: f64| a + tau / phi0)
    } else {
        let table = InverseTable::build(tc, 16384)?;
        Arc::new(move |tau: f64| table.eval(tau))
    };

    let pw = {
        let p = prob.p_coeff.clone();
        let w = prob.w_coeff.clone();
        let tf = t_of_tau.clone();
        move |tau: f64| {
            let t = tf(tau);
            p.eval(t) * w.eval(t)
        }
    };
    let pq = {
        let p = prob.p_coeff.clone();
        let q = prob.q_coeff.clone();
        let tf = t_of_tau.clone();
        move |tau: f64| {
            let t = tf(tau);
            p.eval(t) * q.eval(t)
        }
    };

    // collapse constant coefficients so the hot loop skips the inverse map
    let sample: Vec<f64> = (0..=64).map(|i| c * i as f64 / 64.0).collect();
    let wvals: Vec<f64> = sample.iter().map(|&tau| pw(tau)).collect();
    let qvals: Vec<f64> = sample.iter().map(|&tau| pq(tau)).collect();
    let wstar: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match nearly_constant(&wvals) {
        Some(v) => Arc::new(move |_| v),
        None => Arc::new(pw),
    };
    let qstar: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match nearly_constant(&qvals) {
        Some(v) => Arc::new(move |_| v),
        None => Arc::new(pq),
    };

    let tau_breaks: Vec<f64> = prob.splits().iter().map(|&bp| tc.tau_at(bp)).collect();

    Ok(TauProblem { c, mu: prob.mu, nu: prob.nu, wstar, qstar, tau_breaks })
}

impl TauProblem {
    /// Terminal Pruefer angle `theta(c; lambda)` from `theta(0) = mu`.
    fn theta_end(&self, lambda: f64, opts: &OdeOptions) -> Result<f64, SlError> {
        let w = self.wstar.clone();
        let q = self.qstar.clone();
        let rhs = move |tau: f64, y: &[f64; 1]| {
            let (s, co) = y[0].sin_cos();
            [co * co + (lambda * w(tau) - q(tau)) * s * s]
        };
        let end =
            ode::solve_piecewise(rhs, 0.0, self.c, [self.mu], &self.tau_breaks, opts, |_, _| {})?;
        Ok(end[0])
    }
}

/// Interior zero count of the eigenfunction whose terminal angle is
/// `theta_end`: upward crossings of multiples of pi strictly inside the
/// interval.
fn oscillation_count(theta_end: f64) -> usize {
    let guard = 1e-9 * theta_end.abs().max(1.0);
    ((theta_end - guard) / PI).floor().max(0.0) as usize
}

/// Asymptotic denominator `int_a^b sqrt((w/p_h)_side) ds`.
fn asymptotic_denominator(prob: &SLProblem, side: SpectrumSide) -> Result<f64, SlError> {
    let ph = prob.pm.ph_fn();
    let w = prob.w_coeff.clone();
    let sgn = match side {
        SpectrumSide::Plus => 1.0,
        SpectrumSide::Minus => -1.0,
    };
    let integrand = move |s: f64| {
        let r = sgn * w.eval(s) / ph(s);
        if r > 0.0 {
            r.sqrt()
        } else {
            0.0
        }
    };
    let r = quad::integrate_split(
        integrand,
        prob.interval.lo(),
        prob.interval.hi(),
        1e-10,
        &prob.splits(),
    )?;
    Ok(r.value)
}

/// The asymptotic eigenvalue estimate
/// `+- n^2 pi^2 / (int_a^b sqrt((w/p_h)_+-) ds)^2`.
pub fn asymptotic_estimate(prob: &SLProblem, n: usize, side: SpectrumSide) -> Result<f64, SlError> {
    assert!(n >= 1, "asymptotic_estimate needs n >= 1");
    let denom = asymptotic_denominator(prob, side)?;
    if denom <= 1e-300 {
        return Err(SlError::ZeroAsymptoticDenominator {
            side: match side {
                SpectrumSide::Plus => "plus",
                SpectrumSide::Minus => "minus",
            },
        });
    }
    let v = (n as f64 * PI / denom).powi(2);
    Ok(match side {
        SpectrumSide::Plus => v,
        SpectrumSide::Minus => -v,
    })
}

const LAMBDA_CAP: f64 = 1e8;

/// Eigenvalues of a definite problem (weight of one sign) by root finding on
/// the monotone terminal angle against successive targets.
fn shoot_definite(
    tp: &TauProblem,
    n_want: usize,
    opts: &OdeOptions,
) -> Result<(Vec<f64>, Vec<usize>), SlError> {
    let targets: Vec<f64> = (1..=n_want).map(|n| n as f64 * PI - tp.nu).collect();

    // lower edge: expand down until below the first target
    let mut lam_lo = 0.0f64;
    loop {
        if tp.theta_end(lam_lo, opts)? < targets[0] {
            break;
        }
        lam_lo = if lam_lo == 0.0 { -1.0 } else { 2.0 * lam_lo };
        if lam_lo < -LAMBDA_CAP {
            return Err(SlError::MissedBracket { lo: lam_lo, hi: 0.0 });
        }
    }
    // upper edge: expand up until above the last target
    let mut lam_hi = 1.0f64;
    loop {
        if tp.theta_end(lam_hi, opts)? > targets[n_want - 1] {
            break;
        }
        lam_hi *= 2.0;
        if lam_hi > LAMBDA_CAP {
            return Err(SlError::MissedBracket { lo: lam_lo, hi: lam_hi });
        }
    }

    let mut lambdas = Vec::with_capacity(n_want);
    let mut counts = Vec::with_capacity(n_want);
    let mut lo = lam_lo;
    for &target in &targets {
        let f = |lam: f64| tp.theta_end(lam, opts).map(|th| th - target).unwrap_or(f64::NAN);
        let xtol = 1e-13 * lo.abs().max(lam_hi.abs()).max(1.0);
        let lam = rootfind::brent(f, lo, lam_hi, xtol, 200)?;
        counts.push(oscillation_count(tp.theta_end(lam, opts)?));
        lambdas.push(lam);
        lo = lam;
    }
    Ok((lambdas, counts))
}

/// Eigenvalues of an indefinite problem on one lambda half-line by scanning
/// the terminal angle for target crossings; the step adapts so no crossing
/// slips between scan points.
fn shoot_indefinite_side(
    tp: &TauProblem,
    n_want: usize,
    opts: &OdeOptions,
) -> Result<(Vec<f64>, Vec<usize>), SlError> {
    let mut found: Vec<(f64, usize)> = Vec::new();
    let mut lam_prev = 0.0f64;
    let mut th_prev = tp.theta_end(lam_prev, opts)?;
    let level = |th: f64| ((th + tp.nu) / PI).floor() as i64;
    let mut step = 1.0f64;

    while found.len() < n_want {
        if lam_prev >= LAMBDA_CAP {
            return Err(SlError::MissedBracket { lo: 0.0, hi: lam_prev });
        }
        let lam_next = (lam_prev + step).min(LAMBDA_CAP);
        let th_next = tp.theta_end(lam_next, opts)?;
        if (th_next - th_prev).abs() > 0.45 * PI && step > 1e-9 * lam_prev.abs().max(1.0) {
            step *= 0.5;
            continue;
        }
        let (l0, l1) = (level(th_prev), level(th_next));
        if l1 != l0 {
            let (mlo, mhi) = if l1 > l0 { (l0 + 1, l1) } else { (l1 + 1, l0) };
            for m in mlo..=mhi {
                let target = m as f64 * PI - tp.nu;
                if target <= 0.0 {
                    continue;
                }
                let f =
                    |lam: f64| tp.theta_end(lam, opts).map(|th| th - target).unwrap_or(f64::NAN);
                let xtol = 1e-13 * lam_next.abs().max(1.0);
                let lam = rootfind::brent(f, lam_prev, lam_next, xtol, 200)?;
                let th = tp.theta_end(lam, opts)?;
                found.push((lam, oscillation_count(th)));
            }
        }
        lam_prev = lam_next;
        th_prev = th_next;
        step = (step * 1.6).min(0.25 * lam_prev.abs().max(4.0));
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    found.truncate(n_want);
    let lambdas: Vec<f64> = found.iter().map(|x| x.0).collect();
    let counts: Vec<usize> = found.iter().map(|x| x.1).collect();
    Ok((lambdas, counts))
}

/// Solver knobs for the shooting run; the defaults hold for every oracle in
/// the test suite.
#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    /// Relative/absolute tolerance of the Pruefer angle integration.
    pub ode_rtol: f64,
    pub ode_atol: f64,
    /// Clock tabulation density.
    pub n_grid: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { ode_rtol: 1e-11, ode_atol: 1e-11, n_grid: 4096 }
    }
}

/// Compute the real spectrum by Pruefer shooting on the tau-space equation.
///
/// Requires `p_h P > 0` a.e. (monotone increasing clock); both signs of
/// lambda are searched when `w/p_h` is indefinite. Eigenvalues sit where the
/// terminal angle matches `nu` mod pi; oscillation counts come from the
/// angle winding.
pub fn shoot_eigenvalues(prob: &SLProblem, n_per_side: usize) -> Result<Spectrum, SlError> {
    shoot_eigenvalues_opts(prob, n_per_side, &ShootOptions::default())
}

pub fn shoot_eigenvalues_opts(
    prob: &SLProblem,
    n_per_side: usize,
    options: &ShootOptions,
) -> Result<Spectrum, SlError> {
    assert!(n_per_side >= 1);
    let tc = time_change(prob, options.n_grid)?;
    if !tc.monotone || !tc.increasing {
        return Err(SlError::NonMonotoneTimeChange);
    }
    let tp = build_tau_problem(prob, &tc)?;
    let opts = OdeOptions {
        rtol: options.ode_rtol,
        atol: options.ode_atol,
        max_steps: 5_000_000,
    };

    // weight sign classification in tau-space
    let mut has_pos = false;
    let mut has_neg = false;
    for i in 0..=512 {
        let v = (tp.wstar)(tp.c * i as f64 / 512.0);
        if v > 1e-12 {
            has_pos = true;
        } else if v < -1e-12 {
            has_neg = true;
        }
    }

    let mirrored = |tp: &TauProblem| TauProblem {
        c: tp.c,
        mu: tp.mu,
        nu: tp.nu,
        wstar: {
            let w = tp.wstar.clone();
            Arc::new(move |tau| -w(tau))
        },
        qstar: tp.qstar.clone(),
        tau_breaks: tp.tau_breaks.clone(),
    };

    let (lambda_plus, oscillation_plus, lambda_minus, oscillation_minus) =
        match (has_pos, has_neg) {
            (true, false) => {
                let (l, o) = shoot_definite(&tp, n_per_side, &opts)?;
                (l, o, Vec::new(), Vec::new())
            }
            (false, true) => {
                let (l, o) = shoot_definite(&mirrored(&tp), n_per_side, &opts)?;
                (Vec::new(), Vec::new(), l.iter().map(|x| -x).collect(), o)
            }
            (true, true) => {
                let (lp, op) = shoot_indefinite_side(&tp, n_per_side, &opts)?;
                let (lm_u, om) = shoot_indefinite_side(&mirrored(&tp), n_per_side, &opts)?;
                let lm: Vec<f64> = lm_u.iter().map(|x| -x).collect();
                (lp, op, lm, om)
            }
            (false, false) => {
                return Err(SlError::Precondition("weight function vanishes identically".into()))
            }
        };

    Ok(Spectrum {
        lambda_plus,
        lambda_minus,
        oscillation_plus,
        oscillation_minus,
        asymptotic_denominator_plus: asymptotic_denominator(prob, SpectrumSide::Plus)?,
        asymptotic_denominator_minus: asymptotic_denominator(prob, SpectrumSide::Minus)?,
    })
}

// ---------------------------------------------------------------------------
// Eigenfunction reconstruction
// ---------------------------------------------------------------------------

/// Samples of a reconstructed eigenfunction: `z(tau) = y(t(tau))` and
/// `dz/dtau = (P p_h y')(t)`, plus the tau-space coefficient values needed
/// for residual checks.
#[derive(Debug, Clone)]
pub struct EigenfunctionSamples {
    pub lambda: f64,
    pub taus: Vec<f64>,
    pub ts: Vec<f64>,
    pub z: Vec<f64>,
    pub dz: Vec<f64>,
    pub qstar: Vec<f64>,
    pub wstar: Vec<f64>,
}

impl EigenfunctionSamples {
    /// Sup over interior nodes of the finite-difference residual of
    /// `-z'' + (Q* - lambda W*) z = 0`, normalized by the scale of the
    /// zeroth-order term.
    pub fn max_normalized_residual(&self) -> f64 {
        let n = self.z.len();
        if n < 3 {
            return 0.0;
        }
        let h = self.taus[1] - self.taus[0];
        let mut scale = 0.0f64;
        for i in 0..n {
            scale = scale.max(((self.qstar[i] - self.lambda * self.wstar[i]) * self.z[i]).abs());
        }
        let scale = scale.max(1.0);
        let mut worst = 0.0f64;
        for i in 1..n - 1 {
            // skip stencils spanning a coefficient jump
            if self.wstar[i - 1] != self.wstar[i + 1] || self.qstar[i - 1] != self.qstar[i + 1] {
                continue;
            }
            let zpp = (self.z[i + 1] - 2.0 * self.z[i] + self.z[i - 1]) / (h * h);
            let r = -zpp + (self.qstar[i] - self.lambda * self.wstar[i]) * self.z[i];
            worst = worst.max(r.abs() / scale);
        }
        worst
    }
}

/// Integrate the Pruefer system at a fixed `lambda` and sample the
/// reconstructed eigenfunction on `n_samples + 1` uniform tau nodes.
pub fn eigenfunction(
    prob: &SLProblem,
    lambda: f64,
    n_samples: usize,
) -> Result<EigenfunctionSamples, SlError> {
    let tc = time_change(prob, 4096)?;
    if !tc.monotone || !tc.increasing {
        return Err(SlError::NonMonotoneTimeChange);
    }
    let tp = build_tau_problem(prob, &tc)?;
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-12, max_steps: 5_000_000 };

    let w = tp.wstar.clone();
    let q = tp.qstar.clone();
    // state: [theta, log rho]
    let rhs = move |tau: f64, y: &[f64; 2]| {
        let (s, co) = y[0].sin_cos();
        let coeff = lambda * w(tau) - q(tau);
        [co * co + coeff * s * s, (1.0 - coeff) * s * co]
    };

    let n = n_samples.max(2);
    let mut taus = Vec::with_capacity(n + 1);
    let mut z = Vec::with_capacity(n + 1);
    let mut dz = Vec::with_capacity(n + 1);
    let mut state = [prob.mu, 0.0];
    taus.push(0.0);
    z.push(state[1].exp() * state[0].sin());
    dz.push(state[1].exp() * state[0].cos());
    for j in 1..=n {
        let t0 = tp.c * (j - 1) as f64 / n as f64;
        let t1 = tp.c * j as f64 / n as f64;
        let breaks: Vec<f64> =
            tp.tau_breaks.iter().copied().filter(|&b| b > t0 && b < t1).collect();
        state = ode::solve_piecewise(&rhs, t0, t1, state, &breaks, &opts, |_, _| {})?;
        taus.push(t1);
        z.push(state[1].exp() * state[0].sin());
        dz.push(state[1].exp() * state[0].cos());
    }

    let mut ts = Vec::with_capacity(taus.len());
    for &tau in &taus {
        ts.push(tc.invert(tau)?);
    }
    let qstar = taus.iter().map(|&tau| (tp.qstar)(tau)).collect();
    let wstar = taus.iter().map(|&tau| (tp.wstar)(tau)).collect();
    Ok(EigenfunctionSamples { lambda, taus, ts, z, dz, qstar, wstar })
}

// ---------------------------------------------------------------------------
// Degenerate sign-map fixture
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct DegenerateEntry {
    pub lambda: f64,
    pub bc_left: f64,
    pub bc_right: f64,
    pub dy_jump_at_zero: f64,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegenerateReport {
    pub entries: Vec<DegenerateEntry>,
    pub all_pass: bool,
}

/// Verify that for the sign-map operator on (-1, 1) with Dirichlet
/// conditions, every sampled real `lambda` admits the eigenfunction
/// `y = sin(sqrt(lambda) (|t| - 1))`: both boundary values vanish exactly,
/// `p_h y'` is continuous across 0, and the equation residual stays below
/// 1e-6 away from the kink.
pub fn degenerate_check(lambda_samples: &[f64]) -> Result<DegenerateReport, SlError> {
    let pm = PMap::builtin(PMapFamily::SignMap, None, Interval::new(-1.0, 1.0).unwrap())?;
    let mut entries = Vec::with_capacity(lambda_samples.len());
    for &lambda in lambda_samples {
        if lambda <= 0.0 {
            return Err(SlError::Precondition(
                "degenerate_check samples must be positive".into(),
            ));
        }
        let rl = lambda.sqrt();
        let y = RealFunction::new("degenerate_y", move |t: f64| (rl * (t.abs() - 1.0)).sin())
            .with_deriv(move |t: f64| crate::func::sgn(t) * rl * (rl * (t.abs() - 1.0)).cos());

        let bc_left = y.eval(-1.0).abs();
        let bc_right = y.eval(1.0).abs();

        // Dy = p_h y' = sqrt(lambda) cos(sqrt(lambda)(|t|-1)) approaching 0
        // from either side.
        let g = |t: f64| crate::func::sgn(t) * y.deriv_analytic(t).unwrap();
        let mut dy_jump = 0.0f64;
        for k in 3..=8 {
            let h = 10f64.powi(-k);
            dy_jump = dy_jump.max((g(h) - g(-h)).abs());
        }

        let mut max_residual = 0.0f64;
        for i in 0..40 {
            let mag = 0.05 + 0.9 * i as f64 / 39.0;
            for t in [mag, -mag] {
                let d2 = deriv::gd_second(&pm, &y, t)?;
                max_residual = max_residual.max((d2 + lambda * y.eval(t)).abs());
            }
        }

        let pass = bc_left == 0.0 && bc_right == 0.0 && dy_jump < 1e-9 && max_residual < 1e-6;
        entries.push(DegenerateEntry {
            lambda,
            bc_left,
            bc_right,
            dy_jump_at_zero: dy_jump,
            max_residual,
            pass,
        });
    }
    let all_pass = entries.iter().all(|e| e.pass);
    Ok(DegenerateReport { entries, all_pass })
}
