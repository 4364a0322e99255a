//! Real-valued functions of one variable with an optional analytic
//! derivative, shared by the derivative engine, the eigenvalue solvers, and
//! the CLI's named-function catalog.

use std::fmt;
use std::sync::Arc;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function `f: R -> R` plus, when known, its classical derivative.
#[derive(Clone)]
pub struct RealFunction {
    label: String,
    eval: Eval,
    deriv: Option<Eval>,
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("label", &self.label)
            .field("deriv", &self.deriv.is_some())
            .finish()
    }
}

impl RealFunction {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), eval: Arc::new(eval), deriv: None }
    }

    pub fn with_deriv(mut self, deriv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// Analytic derivative at `t`, if one was supplied.
    pub fn deriv_analytic(&self, t: f64) -> Option<f64> {
        self.deriv.as_ref().map(|d| d(t))
    }

    pub fn has_deriv(&self) -> bool {
        self.deriv.is_some()
    }

    /// Constant function.
    pub fn constant(value: f64) -> Self {
        Self::new(format!("const({value})"), move |_| value).with_deriv(|_| 0.0)
    }

    pub fn one() -> Self {
        Self::new("one", |_| 1.0).with_deriv(|_| 0.0)
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0).with_deriv(|_| 0.0)
    }

    /// Named functions addressable from configs and the command line.
    pub fn by_name(name: &str) -> Option<Self> {
        let f = match name {
            "t" | "identity" => Self::new("t", |t| t).with_deriv(|_| 1.0),
            "t2" | "square" => Self::new("t2", |t| t * t).with_deriv(|t| 2.0 * t),
            "t3" | "cube" => Self::new("t3", |t| t * t * t).with_deriv(|t| 3.0 * t * t),
            "sin" => Self::new("sin", f64::sin).with_deriv(f64::cos),
            "cos" => Self::new("cos", f64::cos).with_deriv(|t| -t.sin()),
            "exp" => Self::new("exp", f64::exp).with_deriv(f64::exp),
            "abs" => Self::new("abs", f64::abs),
            // sign function with the two conventions for the value at 0
            "sgn_plus" => Self::new("sgn_plus", |t| if t >= 0.0 { 1.0 } else { -1.0 }),
            "sgn_minus" => Self::new("sgn_minus", |t| if t > 0.0 { 1.0 } else { -1.0 }),
            "one" => Self::one(),
            "zero" => Self::zero(),
            _ => return None,
        };
        Some(f)
    }
}

/// sgn with sgn(0) = 0, as used for the sign p-map weight.
#[inline]
pub fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_catalog() {
        let f = RealFunction::by_name("t2").unwrap();
        assert_eq!(f.eval(3.0), 9.0);
        assert_eq!(f.deriv_analytic(3.0), Some(6.0));
        assert!(RealFunction::by_name("nope").is_none());
    }

    #[test]
    fn sgn_at_zero_is_zero() {
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(sgn(-0.0), 0.0);
        assert_eq!(sgn(2.0), 1.0);
        assert_eq!(sgn(-3.0), -1.0);
    }

    #[test]
    fn sgn_plus_convention() {
        let f = RealFunction::by_name("sgn_plus").unwrap();
        assert_eq!(f.eval(0.0), 1.0);
        let g = RealFunction::by_name("sgn_minus").unwrap();
        assert_eq!(g.eval(0.0), -1.0);
    }
}
