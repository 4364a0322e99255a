//! JSON configuration schemas. Unknown keys are rejected so that a typo in
//! a reproducible run fails loudly instead of silently changing defaults.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use gencalc_core::func::RealFunction;
use gencalc_core::interval::Interval;
use gencalc_core::mechanics::{CentralForceConfig, DragConfig, NBodySystem};
use gencalc_core::pmap::{PMap, PMapSpec};
use gencalc_core::sl::SLProblem;
use gencalc_core::units::SIGMA_CESIUM;

/// Coefficient functions addressable from configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSpec {
    Zero,
    One,
    Const { value: f64 },
    /// `sgn(s - shift)`: -1 below, +1 above.
    SgnShift { shift: f64 },
    /// `c0 + c1 s + c2 s^2 + ...`
    Poly { coeffs: Vec<f64> },
    /// A named function from the built-in catalog.
    Named { name: String },
}

impl CoeffSpec {
    pub fn build(&self) -> Result<RealFunction> {
        Ok(match self {
            CoeffSpec::Zero => RealFunction::zero(),
            CoeffSpec::One => RealFunction::one(),
            CoeffSpec::Const { value } => RealFunction::constant(*value),
            CoeffSpec::SgnShift { shift } => {
                let shift = *shift;
                RealFunction::new(format!("sgn(s-{shift})"), move |s| {
                    if s > shift {
                        1.0
                    } else {
                        -1.0
                    }
                })
            }
            CoeffSpec::Poly { coeffs } => {
                let c = coeffs.clone();
                RealFunction::new("poly", move |s| {
                    c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck)
                })
            }
            CoeffSpec::Named { name } => RealFunction::by_name(name)
                .with_context(|| format!("unknown function name '{name}'"))?,
        })
    }

    /// Interior discontinuities the solvers should split panels at.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CoeffSpec::SgnShift { shift } => vec![*shift],
            _ => vec![],
        }
    }
}

fn default_one() -> CoeffSpec {
    CoeffSpec::One
}

fn default_zero() -> CoeffSpec {
    CoeffSpec::Zero
}

/// Boundary conditions: a named preset or explicit angles in [0, pi).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcSpec {
    Named(String),
    Angles { mu: f64, nu: f64 },
}

impl Default for BcSpec {
    fn default() -> Self {
        BcSpec::Named("dirichlet".into())
    }
}

impl BcSpec {
    pub fn angles(&self) -> Result<(f64, f64)> {
        match self {
            BcSpec::Named(name) => match name.as_str() {
                "dirichlet" => Ok((0.0, 0.0)),
                "neumann" => Ok((std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)),
                other => bail!("unknown boundary-condition preset '{other}'"),
            },
            BcSpec::Angles { mu, nu } => Ok((*mu, *nu)),
        }
    }
}

/// An eigenvalue problem: p-map, interval, coefficients, boundary angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlConfig {
    pub pmap: PMapSpec,
    pub interval: Interval,
    #[serde(default)]
    pub bc: BcSpec,
    #[serde(default = "default_one")]
    pub p: CoeffSpec,
    #[serde(default = "default_zero")]
    pub q: CoeffSpec,
    #[serde(default = "default_one")]
    pub w: CoeffSpec,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_n() -> usize {
    5
}

impl SlConfig {
    pub fn build(&self) -> Result<SLProblem> {
        let pm = self.pmap.build()?;
        let (mu, nu) = self.bc.angles()?;
        let mut breaks = self.breakpoints.clone();
        breaks.extend(self.q.breakpoints());
        breaks.extend(self.w.breakpoints());
        breaks.extend(self.p.breakpoints());
        let prob = SLProblem::builder(pm, self.interval)
            .p(self.p.build()?)
            .q(self.q.build()?)
            .w(self.w.build()?)
            .angles(mu, nu)
            .breakpoints(breaks)
            .build()?;
        Ok(prob)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentralForceFile {
    pub pmap: PMapSpec,
    pub k: f64,
    pub x0: f64,
    pub y0: f64,
    pub u0: f64,
    pub v0: f64,
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    1000
}

impl CentralForceFile {
    pub fn build(&self) -> Result<(CentralForceConfig, Vec<f64>)> {
        if !(self.t_end > 0.0) {
            bail!("t_end must be positive");
        }
        let pm = self.pmap.build()?;
        let interval = Interval::new(0.0, self.t_end).context("bad interval")?;
        let cfg = CentralForceConfig {
            pm,
            k: self.k,
            x0: self.x0,
            y0: self.y0,
            u0: self.u0,
            v0: self.v0,
            interval,
        };
        Ok((cfg, linspace(0.0, self.t_end, self.samples)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravityFile {
    pub pmap: PMapSpec,
    pub x0: f64,
    pub u0: f64,
    pub y0: f64,
    pub v0: f64,
    pub g: f64,
    pub t_end: f64,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragFile {
    pub m: f64,
    pub g: f64,
    pub c_drag: f64,
    pub rho: f64,
    pub area: f64,
    pub alpha: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl DragFile {
    pub fn build(&self, sigma_default: f64) -> DragConfig {
        DragConfig {
            m: self.m,
            g: self.g,
            c_drag: self.c_drag,
            rho: self.rho,
            area: self.area,
            alpha: self.alpha,
            sigma: self.sigma.unwrap_or(sigma_default),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub mass: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NBodyFile {
    pub pmap: PMapSpec,
    pub g_const: f64,
    pub bodies: Vec<BodyFile>,
    pub t_end: f64,
    pub dt_tau: f64,
}

impl NBodyFile {
    pub fn build(&self) -> Result<(NBodySystem, PMap)> {
        let pm = self.pmap.build()?;
        let sys = NBodySystem::new(
            self.bodies.iter().map(|b| b.mass).collect(),
            self.bodies.iter().map(|b| b.position).collect(),
            self.bodies.iter().map(|b| b.velocity).collect(),
            self.g_const,
        )?;
        Ok((sys, pm))
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// sigma default: GENCALC_SIGMA when set, the cesium count otherwise.
pub fn sigma_default() -> Result<f64> {
    match std::env::var("GENCALC_SIGMA") {
        Ok(s) => {
            let v: f64 = s.parse().context("GENCALC_SIGMA must be a number")?;
            if !(v > 0.0) {
                bail!("GENCALC_SIGMA must be positive");
            }
            Ok(v)
        }
        Err(_) => Ok(SIGMA_CESIUM),
    }
}
