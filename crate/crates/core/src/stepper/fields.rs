//! Contact-angle and forcing data.

use std::fmt;
use std::sync::Arc;

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::gridset::GridDomain;
use crate::numeric::gl3_mean;

/// β sampled at the floor-cell centers, admissible against Φ(e_n).
#[derive(Clone, Debug, PartialEq)]
pub struct ContactAngleField {
    values: Vec<f64>,
    sup_abs: f64,
    inf: f64,
    sup: f64,
    phi_e: f64,
}

impl ContactAngleField {
    pub fn from_values(grid: &GridDomain, phi: &Anisotropy, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.floor_len() {
            return Err(Error::GridMismatch(format!(
                "{} contact-angle values for {} floor cells",
                values.len(),
                grid.floor_len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Admissibility("β must be finite".into()));
        }
        let phi_e = phi.vertical();
        let sup_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sup_abs >= phi_e {
            return Err(Error::Admissibility(format!(
                "‖β‖∞ = {sup_abs} must be strictly below Φ(e_n) = {phi_e}"
            )));
        }
        let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
        let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { values, sup_abs, inf, sup, phi_e })
    }

    /// β evaluated at the lateral coordinates of each floor-cell center.
    pub fn new(grid: &GridDomain, phi: &Anisotropy, beta: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.floor_len()).map(|s| beta(&grid.floor_point(s))).collect();
        Self::from_values(grid, phi, values)
    }

    pub fn constant(grid: &GridDomain, phi: &Anisotropy, beta: f64) -> Result<Self> {
        Self::from_values(grid, phi, vec![beta; grid.floor_len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup_abs
    }

    pub fn inf(&self) -> f64 {
        self.inf
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// Φ(e_n) of the anisotropy the field was checked against.
    pub fn phi_vertical(&self) -> f64 {
        self.phi_e
    }

    /// The largest η with ‖β‖∞ ≤ (1 − 2η)Φ(e_n).
    pub fn eta(&self) -> f64 {
        0.5 * (1.0 - self.sup_abs / self.phi_e)
    }

    /// Pointwise β₁ ≥ β₂.
    pub fn dominates(&self, other: &Self) -> bool {
        self.values.len() == other.values.len() && self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }
}

/// Time profile a(t) of a separable forcing.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    /// Σ c_k t^k.
    Polynomial(Vec<f64>),
    /// offset + amplitude·sin(ω t + phase).
    Sine { offset: f64, amplitude: f64, omega: f64, phase: f64 },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => *c,
            TimeProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * t + ck),
            TimeProfile::Sine { offset, amplitude, omega, phase } => offset + amplitude * (omega * t + phase).sin(),
        }
    }
}

/// Space profile h(x) of a separable forcing.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceProfile {
    Constant(f64),
    /// offset + gradient·x.
    Linear { offset: f64, gradient: Vec<f64> },
    /// amplitude·exp(−|x − center|²/(2σ²)).
    Gaussian { amplitude: f64, center: Vec<f64>, sigma: f64 },
}

impl SpaceProfile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SpaceProfile::Constant(c) => *c,
            SpaceProfile::Linear { offset, gradient } => offset + gradient.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>(),
            SpaceProfile::Gaussian { amplitude, center, sigma } => {
                let r2: f64 = center.iter().zip(x).map(|(c, xi)| (xi - c).powi(2)).sum();
                amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

type ForcingFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// The forcing f(t, x); positive values shrink the droplet.
#[derive(Clone)]
pub enum ForcingField {
    Constant(f64),
    Separable { time: TimeProfile, space: SpaceProfile },
    /// Per-cell samples at increasing times, linear in time between samples
    /// and constant outside the sampled window.
    Tabulated { times: Vec<f64>, values: Vec<Vec<f64>>, grid: Arc<GridDomain> },
    Custom(ForcingFn),
}

impl fmt::Debug for ForcingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingField::Constant(c) => write!(f, "Constant({c})"),
            ForcingField::Separable { time, space } => write!(f, "Separable({time:?}, {space:?})"),
            ForcingField::Tabulated { times, .. } => write!(f, "Tabulated({} samples)", times.len()),
            ForcingField::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ForcingField {
    pub fn zero() -> Self {
        ForcingField::Constant(0.0)
    }

    pub fn custom(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ForcingField::Custom(Arc::new(f))
    }

    pub fn tabulated(grid: &Arc<GridDomain>, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("tabulated forcing needs increasing times, one field each".into()));
        }
        if values.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::GridMismatch("tabulated forcing field does not match the grid".into()));
        }
        Ok(ForcingField::Tabulated { times, values, grid: grid.clone() })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingField::Constant(c) if *c == 0.0)
    }

    /// f(t, x). Tabulated fields evaluate at the cell containing x.
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            ForcingField::Constant(c) => *c,
            ForcingField::Separable { time, space } => time.eval(t) * space.eval(x),
            ForcingField::Tabulated { grid, .. } => match grid.locate(x) {
                Some(idx) => self.eval_cell(t, idx),
                None => 0.0,
            },
            ForcingField::Custom(f) => f(t, x),
        }
    }

    fn eval_cell(&self, t: f64, idx: usize) -> f64 {
        let ForcingField::Tabulated { times, values, .. } = self else {
            unreachable!("only tabulated fields are stored per cell")
        };
        let k = times.partition_point(|s| *s <= t);
        if k == 0 {
            values[0][idx]
        } else if k == times.len() {
            values[k - 1][idx]
        } else {
            let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
            (1.0 - w) * values[k - 1][idx] + w * values[k][idx]
        }
    }

    /// Mean of f over [t0, t1] at every cell center (3-point Gauss–Legendre).
    pub fn step_means(&self, grid: &GridDomain, t0: f64, t1: f64) -> Vec<f64> {
        let n = grid.dim();
        match self {
            ForcingField::Constant(c) => vec![*c; grid.len()],
            ForcingField::Separable { time, space } => {
                let a = gl3_mean(t0, t1, |t| time.eval(t));
                (0..grid.len()).map(|i| a * space.eval(&grid.center(i)[..n])).collect()
            }
            ForcingField::Tabulated { grid: g, .. } if g.as_ref() == grid => {
                (0..grid.len()).map(|i| gl3_mean(t0, t1, |t| self.eval_cell(t, i))).collect()
            }
            _ => (0..grid.len())
                .map(|i| {
                    let x = grid.center(i);
                    gl3_mean(t0, t1, |t| self.eval(t, &x[..n]))
                })
                .collect(),
        }
    }

    /// max |f| over the cell centers and a time sample of [0, T].
    pub fn sup_norm(&self, grid: &GridDomain, t_end: f64) -> f64 {
        match self {
            ForcingField::Constant(c) => c.abs(),
            _ => {
                let n = grid.dim();
                let mut m = 0.0f64;
                for s in 0..=32 {
                    let t = t_end * s as f64 / 32.0;
                    for i in 0..grid.len() {
                        m = m.max(self.eval(t, &grid.center(i)[..n]).abs());
                    }
                }
                m
            }
        }
    }
}
