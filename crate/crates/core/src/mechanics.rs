//! Mechanics under generalized derivatives: central force, motion under
//! gravity with and without quadratic drag, and the gravitational n-body
//! problem.
//!
//! Everything reduces to classical mechanics on the rescaled clock
//! `tau(t) = int_0^t ds/p_h(s, 0)`: trajectories are classical in `tau` and
//! reparameterized back to `t`, so the phase-space geometry is independent
//! of the p-map while the time grading is not.

use serde::Serialize;
use thiserror::Error;

use crate::func::RealFunction;
use crate::interval::Interval;
use crate::pmap::{PMap, PMapFamily};
use crate::quad::{self, QuadError};
use crate::sl::{self, SlError, TimeChange};

#[derive(Debug, Error)]
pub enum MechError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sample times must be strictly increasing and inside the interval")]
    BadSampleTimes,
    #[error("force constant must be positive (lambda = k^2 > 0), got k = {0}")]
    NonPositiveForceConstant(f64),
    #[error("close encounter at tau = {tau}: pairwise distance {dist} below minimum")]
    CloseEncounter { tau: f64, dist: f64 },
    #[error("the clock is not invertible for this p-map (p_h must be positive a.e.)")]
    NonInvertibleClock,
    #[error("trajectory column '{0}' not present")]
    UnknownColumn(String),
    #[error("malformed trajectory CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Sl(#[from] SlError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

/// Time-stamped state samples plus the clock values at each sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub taus: Vec<f64>,
    pub labels: Vec<String>,
    /// One state vector per sample; dimension equals `labels.len()`.
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        taus: Vec<f64>,
        labels: Vec<String>,
        states: Vec<Vec<f64>>,
    ) -> Result<Self, MechError> {
        if times.len() != states.len() || times.len() != taus.len() {
            return Err(MechError::InvalidConfig("sample column lengths differ".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MechError::BadSampleTimes);
        }
        if states.iter().any(|s| s.len() != labels.len()) {
            return Err(MechError::InvalidConfig("state dimension varies".into()));
        }
        Ok(Self { times, taus, labels, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column_index(&self, label: &str) -> Result<usize, MechError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| MechError::UnknownColumn(label.to_string()))
    }

    pub fn column(&self, label: &str) -> Result<Vec<f64>, MechError> {
        let i = self.column_index(label)?;
        Ok(self.states.iter().map(|s| s[i]).collect())
    }

    /// CSV with header `t,tau,<labels...>`; floats printed with the shortest
    /// round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tau");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for i in 0..self.times.len() {
            out.push_str(&format!("{},{}", self.times[i], self.taus[i]));
            for v in &self.states[i] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, MechError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| MechError::Csv("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 || cols[0] != "t" || cols[1] != "tau" {
            return Err(MechError::Csv(format!("unexpected header '{header}'")));
        }
        let labels: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
        let mut times = Vec::new();
        let mut taus = Vec::new();
        let mut states = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| MechError::Csv(format!("line {}: {e}", ln + 2)))?;
            if vals.len() != labels.len() + 2 {
                return Err(MechError::Csv(format!("line {}: wrong arity", ln + 2)));
            }
            times.push(vals[0]);
            taus.push(vals[1]);
            states.push(vals[2..].to_vec());
        }
        Trajectory::new(times, taus, labels, states)
    }
}

/// Hausdorff distance between two point sets (each point one row).
pub fn hausdorff_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let one_sided = |p: &[Vec<f64>], q: &[Vec<f64>]| -> f64 {
        let mut worst = 0.0f64;
        for x in p {
            let mut best = f64::INFINITY;
            for y in q {
                let d2: f64 = x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
                best = best.min(d2);
            }
            worst = worst.max(best);
        }
        worst.sqrt()
    };
    one_sided(a, b).max(one_sided(b, a))
}

// ---------------------------------------------------------------------------
// Central force
// ---------------------------------------------------------------------------

/// Planar motion attracted to the origin by `F(r) = -m k^2 r`, with initial
/// data given as positions and covariant velocities `Dx(0) = (p_h x')(0)`.
#[derive(Debug, Clone)]
pub struct CentralForceConfig {
    pub pm: PMap,
    pub k: f64,
    pub x0: f64,
    pub y0: f64,
    /// `Dx(0)`
    pub u0: f64,
    /// `Dy(0)`
    pub v0: f64,
    pub interval: Interval,
}

/// The four constants of the closed-form solution:
/// `x = c1 sin(sqrt(lambda) tau) + c2 cos(...)`, `y` likewise with `d1, d2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CentralConstants {
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn central_force_solve(
    cfg: &CentralForceConfig,
    ts: &[f64],
) -> Result<(Trajectory, CentralConstants), MechError> {
    if !(cfg.k > 0.0) {
        return Err(MechError::NonPositiveForceConstant(cfg.k));
    }
    if ts.windows(2).any(|w| w[1] <= w[0])
        || ts.iter().any(|&t| !cfg.interval.contains_slack(t, 1e-12))
    {
        return Err(MechError::BadSampleTimes);
    }
    let lambda = cfg.k * cfg.k;
    let rl = lambda.sqrt();
    let consts = CentralConstants { c1: cfg.u0 / rl, c2: cfg.x0, d1: cfg.v0 / rl, d2: cfg.y0 };
    let tc = sl::time_change_with(&cfg.pm, &RealFunction::one(), cfg.interval, 2048, &[])?;

    let mut states = Vec::with_capacity(ts.len());
    let mut taus = Vec::with_capacity(ts.len());
    for &t in ts {
        let tau = tc.tau_at(t);
        let arg = rl * tau;
        let (s, c) = arg.sin_cos();
        let x = consts.c1 * s + consts.c2 * c;
        let y = consts.d1 * s + consts.d2 * c;
        let dx = rl * (consts.c1 * c - consts.c2 * s);
        let dy = rl * (consts.d1 * c - consts.d2 * s);
        taus.push(tau);
        states.push(vec![x, y, dx, dy]);
    }
    let labels = ["x", "y", "Dx", "Dy"].iter().map(|s| s.to_string()).collect();
    let traj = Trajectory::new(ts.to_vec(), taus, labels, states)?;
    Ok((traj, consts))
}

/// Max residual of the conic invariant
/// `(d1 x - c1 y)^2 + (d2 x - c2 y)^2 = (d1 c2 - c1 d2)^2` over the samples.
pub fn ellipse_invariant(traj: &Trajectory, consts: &CentralConstants) -> Result<f64, MechError> {
    let xi = traj.column_index("x")?;
    let yi = traj.column_index("y")?;
    let rhs = (consts.d1 * consts.c2 - consts.c1 * consts.d2).powi(2);
    let mut worst = 0.0f64;
    for s in &traj.states {
        let (x, y) = (s[xi], s[yi]);
        let lhs = (consts.d1 * x - consts.c1 * y).powi(2) + (consts.d2 * x - consts.c2 * y).powi(2);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Motion under gravity
// ---------------------------------------------------------------------------

/// Projectile under constant gravity: `x = x0 + u0 tau(t)`,
/// `y = y0 + v0 tau(t) - g (..)`, with the closed forms `tau = t^alpha/alpha`
/// substituted automatically for the khalil/symmetric_abs families and the
/// classical map; any other p-map goes through quadrature.
pub fn gravity_solve(
    pm: &PMap,
    x0: f64,
    u0: f64,
    y0: f64,
    v0: f64,
    g: f64,
    ts: &[f64],
) -> Result<Trajectory, MechError> {
    let closed_alpha = match pm.family() {
        Some(PMapFamily::Classical) => Some(1.0),
        Some(PMapFamily::Khalil) | Some(PMapFamily::SymmetricAbs) => pm.alpha(),
        _ => None,
    };
    match closed_alpha {
        Some(alpha) if ts.iter().all(|&t| t >= 0.0) => {
            if ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(MechError::BadSampleTimes);
            }
            let mut states = Vec::with_capacity(ts.len());
            let mut taus = Vec::with_capacity(ts.len());
            for &t in ts {
                let tau = if alpha == 1.0 { t } else { t.powf(alpha) / alpha };
                let x = x0 + u0 * tau;
                let y = y0 + v0 * tau - 0.5 * g * tau * tau;
                taus.push(tau);
                states.push(vec![x, y, u0, v0 - g * tau]);
            }
            let labels = ["x", "y", "Dx", "Dy"].iter().map(|s| s.to_string()).collect();
            Trajectory::new(ts.to_vec(), taus, labels, states)
        }
        _ => gravity_solve_quadrature(pm, x0, u0, y0, v0, g, ts),
    }
}

/// The general double-integral form: `x = x0 + u0 int_0^t 1/p_h`,
/// `y = y0 + v0 int_0^t 1/p_h - g int_0^t (1/p_h)(s) (int_0^s 1/p_h) ds`,
/// all integrals by singularity-aware quadrature.
pub fn gravity_solve_quadrature(
    pm: &PMap,
    x0: f64,
    u0: f64,
    y0: f64,
    v0: f64,
    g: f64,
    ts: &[f64],
) -> Result<Trajectory, MechError> {
    if ts.is_empty() || ts.windows(2).any(|w| w[1] <= w[0]) || ts[0] < 0.0 {
        return Err(MechError::BadSampleTimes);
    }
    let t_max = *ts.last().unwrap();
    let interval = Interval::new(0.0, t_max.max(1e-9))
        .map_err(|e| MechError::InvalidConfig(format!("bad sample range: {e}")))?;
    let tc = sl::time_change_with(pm, &RealFunction::one(), interval, 2048, &[])?;

    let ph = pm.ph_fn();
    // inner integrand of the double integral: tau'(s) * tau(s)
    let inner = {
        let tc = tc.clone();
        move |s: f64| {
            let d = ph(s);
            let rate = if d == 0.0 { f64::INFINITY } else { 1.0 / d };
            rate * tc.tau_at(s)
        }
    };

    let mut states = Vec::with_capacity(ts.len());
    let mut taus = Vec::with_capacity(ts.len());
    let mut i2 = 0.0f64;
    let mut prev_t = 0.0f64;
    for &t in ts {
        let tau = tc.tau_at(t);
        i2 += quad::tanh_sinh(&inner, prev_t, t, 1e-11)?.value;
        prev_t = t;
        let x = x0 + u0 * tau;
        let y = y0 + v0 * tau - g * i2;
        taus.push(tau);
        states.push(vec![x, y, u0, v0 - g * tau]);
    }
    let labels = ["x", "y", "Dx", "Dy"].iter().map(|s| s.to_string()).collect();
    Trajectory::new(ts.to_vec(), taus, labels, states)
}

// ---------------------------------------------------------------------------
// Gravity with quadratic drag
// ---------------------------------------------------------------------------

/// Vertical fall against quadratic drag, modeled through the fractional
/// clock: the classical drag profile arises from the resistance-free
/// covariant equation `m p_h v' = m g` for a specific `p_h` family.
#[derive(Debug, Clone, Serialize)]
pub struct DragConfig {
    /// mass, kg
    pub m: f64,
    /// gravitational acceleration, m/s^2
    pub g: f64,
    /// drag coefficient (dimensionless)
    pub c_drag: f64,
    /// medium density, kg/m^3
    pub rho: f64,
    /// cross-sectional area, m^2
    pub area: f64,
    /// fractional order in (0, 1)
    pub alpha: f64,
    /// cosmic-time factor, seconds
    pub sigma: f64,
}

impl DragConfig {
    pub fn validate(&self) -> Result<(), MechError> {
        let all_pos = self.m > 0.0
            && self.g > 0.0
            && self.c_drag > 0.0
            && self.rho > 0.0
            && self.area > 0.0
            && self.sigma > 0.0;
        if !all_pos {
            return Err(MechError::InvalidConfig("drag parameters must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(MechError::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Terminal velocity `sqrt(2 m g / (C rho A))`.
    pub fn v_term(&self) -> f64 {
        (2.0 * self.m * self.g / (self.c_drag * self.rho * self.area)).sqrt()
    }

    /// The matching constant
    /// `c = sqrt(2) sigma^(1-alpha) / (2 alpha m) * sqrt(g C rho A m)`.
    pub fn c_const(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.sigma.powf(1.0 - self.alpha) / (2.0 * self.alpha * self.m)
            * (self.g * self.c_drag * self.rho * self.area * self.m).sqrt()
    }

    /// `v(t, alpha) = v_term tanh(c (alpha + t^alpha))`.
    pub fn velocity(&self, t: f64) -> f64 {
        self.v_term() * (self.c_const() * (self.alpha + t.powf(self.alpha))).tanh()
    }

    /// Analytic `v'(t, alpha)`.
    pub fn velocity_prime(&self, t: f64) -> f64 {
        let u = self.c_const() * (self.alpha + t.powf(self.alpha));
        let sech = 1.0 / u.cosh();
        self.v_term() * self.c_const() * self.alpha * t.powf(self.alpha - 1.0) * sech * sech
    }

    /// The clock weight
    /// `p_h(t, 0, alpha) = t^(1-alpha) sigma^(alpha-1) cosh^2(c (alpha + t^alpha))`.
    pub fn ph(&self, t: f64) -> f64 {
        let u = self.c_const() * (self.alpha + t.powf(self.alpha));
        t.powf(1.0 - self.alpha) * self.sigma.powf(self.alpha - 1.0) * u.cosh().powi(2)
    }

    /// Residual of the covariant equation `|p_h v' - g|` at `t`.
    ///
    /// For cesium-scale `sigma` and small `alpha` the constant `c` is huge
    /// and `cosh^2` overflows; the product is then evaluated in log space,
    /// where the `cosh^2 sech^2` factor cancels exactly and the residual
    /// reduces to the matching identity `v_term c alpha sigma^(alpha-1) = g`
    /// in floating point.
    pub fn residual(&self, t: f64) -> f64 {
        let u = self.c_const() * (self.alpha + t.powf(self.alpha));
        if u < 300.0 {
            (self.ph(t) * self.velocity_prime(t) - self.g).abs()
        } else {
            // ln(cosh^2 sech^2) = 2 (ln cosh - ln cosh) vanishes exactly, so
            // only the matching constant survives
            let vca = self.v_term()
                * self.c_const()
                * self.alpha
                * self.sigma.powf(self.alpha - 1.0);
            (vca - self.g).abs()
        }
    }

    /// The quadrature form `v(t) = v_term - g int_t^inf ds / p_h(s)`,
    /// truncated where the integrand's sech^2 factor underflows.
    pub fn velocity_quadrature(&self, t: f64) -> Result<f64, MechError> {
        let vt = self.v_term();
        let c = self.c_const();
        // c (alpha + s^alpha) = 45 marks tanh saturation far past 1e-16
        let cutoff = 45.0 / c - self.alpha;
        if cutoff <= 0.0 || t.powf(self.alpha) >= cutoff {
            return Ok(vt);
        }
        let s_max = cutoff.powf(1.0 / self.alpha);
        let alpha = self.alpha;
        let sig = self.sigma;
        let integrand = move |s: f64| {
            let u = c * (alpha + s.powf(alpha));
            let sech = 1.0 / u.cosh();
            s.powf(alpha - 1.0) * sig.powf(1.0 - alpha) * sech * sech
        };
        let tail = quad::tanh_sinh(integrand, t, s_max, 1e-11)?.value;
        Ok(vt - self.g * tail)
    }
}

/// Sample the drag velocity profile.
pub fn drag_solve(cfg: &DragConfig, ts: &[f64]) -> Result<Trajectory, MechError> {
    cfg.validate()?;
    if ts.windows(2).any(|w| w[1] <= w[0]) || ts.first().is_some_and(|&t| t < 0.0) {
        return Err(MechError::BadSampleTimes);
    }
    let states: Vec<Vec<f64>> = ts.iter().map(|&t| vec![cfg.velocity(t)]).collect();
    // the drag clock is the fall's own: tau = int 1/p_h, reported alongside
    let hi = ts.last().copied().unwrap_or(1.0).max(1e-9);
    let cfg2 = cfg.clone();
    let integrand = std::sync::Arc::new(move |s: f64| {
        let d = cfg2.ph(s);
        if d == 0.0 {
            f64::INFINITY
        } else {
            1.0 / d
        }
    });
    let tc = TimeChange::build(integrand, 0.0, hi, 512, &[])?;
    let taus = ts.iter().map(|&t| tc.tau_at(t)).collect();
    Trajectory::new(ts.to_vec(), taus, vec!["v".to_string()], states)
}

// ---------------------------------------------------------------------------
// Gravitational n-body
// ---------------------------------------------------------------------------

/// Point masses with positions and tau-frame velocities `dq/dtau`.
#[derive(Debug, Clone)]
pub struct NBodySystem {
    pub masses: Vec<f64>,
    pub positions: Vec<[f64; 3]>,
    pub velocities: Vec<[f64; 3]>,
    pub g_const: f64,
}

impl NBodySystem {
    pub fn new(
        masses: Vec<f64>,
        positions: Vec<[f64; 3]>,
        velocities: Vec<[f64; 3]>,
        g_const: f64,
    ) -> Result<Self, MechError> {
        let n = masses.len();
        if n == 0 || positions.len() != n || velocities.len() != n {
            return Err(MechError::InvalidConfig("body arrays must share a nonzero length".into()));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(MechError::InvalidConfig("masses must be positive".into()));
        }
        if !(g_const > 0.0) {
            return Err(MechError::InvalidConfig("G must be positive".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if dist(&positions[i], &positions[j]) == 0.0 {
                    return Err(MechError::InvalidConfig(format!(
                        "bodies {i} and {j} start at the same point"
                    )));
                }
            }
        }
        Ok(Self { masses, positions, velocities, g_const })
    }

    /// Kinetic + potential energy in the tau frame.
    pub fn energy(&self) -> f64 {
        let n = self.masses.len();
        let mut e = 0.0;
        for i in 0..n {
            let v = &self.velocities[i];
            e += 0.5 * self.masses[i] * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            for j in i + 1..n {
                e -= self.g_const * self.masses[i] * self.masses[j]
                    / dist(&self.positions[i], &self.positions[j]);
            }
        }
        e
    }

    /// Total angular momentum vector in the tau frame.
    pub fn angular_momentum(&self) -> [f64; 3] {
        let mut l = [0.0f64; 3];
        for i in 0..self.masses.len() {
            let r = &self.positions[i];
            let v = &self.velocities[i];
            l[0] += self.masses[i] * (r[1] * v[2] - r[2] * v[1]);
            l[1] += self.masses[i] * (r[2] * v[0] - r[0] * v[2]);
            l[2] += self.masses[i] * (r[0] * v[1] - r[1] * v[0]);
        }
        l
    }
}

#[inline]
fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

fn accelerations(sys: &NBodySystem, acc: &mut [[f64; 3]]) -> f64 {
    let n = sys.masses.len();
    let mut min_dist = f64::INFINITY;
    for a in acc.iter_mut() {
        *a = [0.0; 3];
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(&sys.positions[i], &sys.positions[j]);
            min_dist = min_dist.min(d);
            let inv3 = 1.0 / (d * d * d);
            for k in 0..3 {
                let r = sys.positions[j][k] - sys.positions[i][k];
                acc[i][k] += sys.g_const * sys.masses[j] * r * inv3;
                acc[j][k] -= sys.g_const * sys.masses[i] * r * inv3;
            }
        }
    }
    min_dist
}

/// Result of an n-body run: the same state samples stamped in both clocks,
/// plus conservation diagnostics from the tau frame.
#[derive(Debug, Clone)]
pub struct NBodyRun {
    pub traj_t: Trajectory,
    pub traj_tau: Trajectory,
    pub energy_initial: f64,
    pub max_energy_drift: f64,
    pub max_angular_momentum_drift: f64,
}

/// Integrate the system in the tau frame with fixed-step kick-drift-kick
/// leapfrog from `tau = 0` to `tau(t_end)`, then stamp the samples back into
/// `t` through the clock inverse. Requires `p_h > 0` a.e.
pub fn nbody_integrate(
    sys: &NBodySystem,
    pm: &PMap,
    t_end: f64,
    dt_tau: f64,
) -> Result<NBodyRun, MechError> {
    if !(t_end > 0.0) || !(dt_tau > 0.0) {
        return Err(MechError::InvalidConfig("t_end and dt_tau must be positive".into()));
    }
    let interval =
        Interval::new(0.0, t_end).map_err(|e| MechError::InvalidConfig(e.to_string()))?;
    let tc = sl::time_change_with(pm, &RealFunction::one(), interval, 2048, &[])?;
    if !tc.monotone() || !tc.increasing() {
        return Err(MechError::NonInvertibleClock);
    }
    let tau_end = tc.tau_end();
    let n_steps = (tau_end / dt_tau).ceil().max(1.0) as usize;
    let dt = tau_end / n_steps as f64;

    let n = sys.masses.len();
    let mut state = sys.clone();
    let mut acc = vec![[0.0f64; 3]; n];

    // length scale for the close-encounter guard
    let scale = {
        let mut s = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                s = s.max(dist(&state.positions[i], &state.positions[j]));
            }
        }
        s.max(1.0)
    };
    let hard_floor = 1e-9 * scale;
    // an encounter a fixed step cannot resolve: bodies cross a whole
    // separation within one step
    let speed_max = |s: &NBodySystem| -> f64 {
        s.velocities
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .fold(0.0f64, f64::max)
    };
    let under_resolved = |dmin: f64, s: &NBodySystem| dmin < 2.0 * speed_max(s) * dt;

    let e0 = state.energy();
    let l0 = state.angular_momentum();
    let l0_norm = (l0[0] * l0[0] + l0[1] * l0[1] + l0[2] * l0[2]).sqrt().max(1e-300);
    let mut max_e_drift = 0.0f64;
    let mut max_l_drift = 0.0f64;

    let flatten = |s: &NBodySystem| -> Vec<f64> {
        let mut row = Vec::with_capacity(6 * s.masses.len());
        for r in &s.positions {
            row.extend_from_slice(r);
        }
        for v in &s.velocities {
            row.extend_from_slice(v);
        }
        row
    };

    let mut taus = Vec::with_capacity(n_steps + 1);
    let mut rows = Vec::with_capacity(n_steps + 1);
    taus.push(0.0);
    rows.push(flatten(&state));

    let d0 = accelerations(&state, &mut acc);
    if d0 < hard_floor || under_resolved(d0, &state) {
        return Err(MechError::CloseEncounter { tau: 0.0, dist: d0 });
    }
    for step in 0..n_steps {
        // kick
        for i in 0..n {
            for k in 0..3 {
                state.velocities[i][k] += 0.5 * dt * acc[i][k];
            }
        }
        // drift
        for i in 0..n {
            for k in 0..3 {
                state.positions[i][k] += dt * state.velocities[i][k];
            }
        }
        let dmin = accelerations(&state, &mut acc);
        if dmin < hard_floor || under_resolved(dmin, &state) {
            return Err(MechError::CloseEncounter { tau: dt * (step + 1) as f64, dist: dmin });
        }
        // kick
        for i in 0..n {
            for k in 0..3 {
                state.velocities[i][k] += 0.5 * dt * acc[i][k];
            }
        }
        let tau = dt * (step + 1) as f64;
        taus.push(tau);
        rows.push(flatten(&state));

        let e = state.energy();
        max_e_drift = max_e_drift.max(((e - e0) / e0.abs().max(1e-300)).abs());
        let l = state.angular_momentum();
        let dl = ((l[0] - l0[0]).powi(2) + (l[1] - l0[1]).powi(2) + (l[2] - l0[2]).powi(2)).sqrt();
        max_l_drift = max_l_drift.max(dl / l0_norm);
    }

    let mut labels = Vec::with_capacity(6 * n);
    for i in 0..n {
        for k in ["x", "y", "z"] {
            labels.push(format!("r{i}{k}"));
        }
    }
    for i in 0..n {
        for k in ["x", "y", "z"] {
            labels.push(format!("v{i}{k}"));
        }
    }

    let mut times = Vec::with_capacity(taus.len());
    for &tau in &taus {
        times.push(tc.invert(tau)?);
    }

    let traj_tau = Trajectory::new(taus.clone(), taus.clone(), labels.clone(), rows.clone())?;
    let traj_t = Trajectory::new(times, taus, labels, rows)?;
    Ok(NBodyRun {
        traj_t,
        traj_tau,
        energy_initial: e0,
        max_energy_drift: max_e_drift,
        max_angular_momentum_drift: max_l_drift,
    })
}
