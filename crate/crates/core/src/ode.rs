//! Adaptive Dormand-Prince 5(4) integrator over fixed-size states.
//!
//! Small state dimensions (Pruefer angle, angle + log-amplitude) are the only
//! users, so the state is a const-generic array and the right-hand side a
//! plain closure; no allocation happens per step.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit {limit} reached at t = {t}")]
    StepLimit { t: f64, limit: usize },
    #[error("right-hand side returned a non-finite value at t = {t}")]
    NonFiniteRhs { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, max_steps: 2_000_000 }
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` (`t1 > t0`), invoking
/// `on_step(t, y)` after the initial point and each accepted step.
pub fn solve<const N: usize, F, C>(
    rhs: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &OdeOptions,
    mut on_step: C,
) -> Result<[f64; N], OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    C: FnMut(f64, &[f64; N]),
{
    assert!(t1 >= t0, "solve requires forward integration");
    let span = t1 - t0;
    if span == 0.0 {
        on_step(t0, &y0);
        return Ok(y0);
    }

    let mut t = t0;
    let mut y = y0;
    on_step(t, &y);
    let mut k1 = rhs(t, &y);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteRhs { t });
    }

    // Initial step from the scale of the first derivative.
    let d0 = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1.0);
    let d1 = k1.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let mut h = if d1 > 0.0 { (0.01 * d0 / d1).min(span / 10.0) } else { span / 100.0 };
    h = h.max(span * 1e-12);

    let mut steps = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(OdeError::StepLimit { t, limit: opts.max_steps });
        }
        steps += 1;
        if t + h > t1 {
            h = t1 - t;
        }
        if h <= span * 1e-15 {
            return Err(OdeError::StepUnderflow { t, h });
        }

        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(t + h, &y_new);

        let mut err_sq = 0.0;
        let mut bad = false;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            if !e.is_finite() || !y_new[i].is_finite() {
                bad = true;
                break;
            }
            err_sq += (e / sc) * (e / sc);
        }
        let err = if bad { f64::INFINITY } else { (err_sq / N as f64).sqrt() };

        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7; // FSAL
            on_step(t, &y);
        }
        let factor = if err.is_finite() && err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else if err == 0.0 {
            5.0
        } else {
            0.2
        };
        h *= factor;
    }
    Ok(y)
}

/// Integrate across a partition of `[t0, t1]`, restarting step-size control
/// at each interior breakpoint so coefficient discontinuities do not poison
/// the error estimator. Breakpoints outside `(t0, t1)` are ignored.
pub fn solve_piecewise<const N: usize, F, C>(
    rhs: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    breakpoints: &[f64],
    opts: &OdeOptions,
    mut on_step: C,
) -> Result<[f64; N], OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    C: FnMut(f64, &[f64; N]),
{
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > t0 && b < t1)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    cuts.push(t1);

    let mut y = y0;
    let mut t = t0;
    let mut first = true;
    for cut in cuts {
        let skip_initial = !first;
        let mut emitted = false;
        y = solve(&rhs, t, cut, y, opts, |tt, yy| {
            // The initial point of every segment after the first duplicates
            // the previous segment's final point.
            if skip_initial && !emitted {
                emitted = true;
            } else {
                on_step(tt, yy);
            }
        })?;
        t = cut;
        first = false;
    }
    Ok(y)
}
