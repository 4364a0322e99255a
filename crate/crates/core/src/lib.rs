//! Numerical toolkit for limit-defined generalized and fractional derivatives.
//!
//! A map `p(t, h)` induces a derivative through the difference quotient
//! `[f(p(t,h)) - f(t)] / h`. When `p_h(t, 0)` exists and is nonzero this
//! reduces to a weighted classical derivative; second-order eigenvalue
//! problems built from it become weighted Sturm-Liouville problems, and the
//! mechanics built from it becomes classical mechanics on a rescaled clock.
//!
//! - [`pmap`]: the p-map catalog plus numerical checks of the solvability
//!   and integrability hypotheses that make the theory work
//! - [`deriv`]: limit- and lift-based evaluation of the derivative and
//!   calculus-rule residuals
//! - [`sl`]: time change, closed-form solutions, shooting spectra for
//!   possibly indefinite weights
//! - [`mechanics`]: central force, gravity with and without drag, n-body
//! - [`units`]: fractional-time (alpha-second) unit conversions

pub mod deriv;
pub mod func;
pub mod interval;
pub mod mechanics;
pub mod ode;
pub mod pmap;
pub mod quad;
pub mod rng;
pub mod rootfind;
pub mod sl;
pub mod units;
