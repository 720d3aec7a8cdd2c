//! The forced capillary ATW functional and its reduction to a binary energy.

use std::sync::Arc;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::graphcut::{BinaryEnergy, IntegerEnergy};
use crate::gridset::{
    adhesion_energy, distance_transform, for_each_pair, perimeter_phi, BinarySet, GridDomain, Metric,
    PerimeterStencil, Region, StencilKind,
};

use super::{ContactAngleField, ForcingField};

/// How the distance to ∂E₀ is sampled in the dissipation term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DissipationDistance {
    /// Signed distance between cell centers and the staircase boundary.
    Staircase,
    /// Staircase distance corrected toward the level set of a Gaussian-blurred
    /// indicator, never by more than one cell.
    #[default]
    Subcell,
}

impl std::str::FromStr for DissipationDistance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "staircase" => Ok(Self::Staircase),
            "subcell" => Ok(Self::Subcell),
            _ => Err(Error::Config(format!("unknown distance '{s}' (staircase | subcell)"))),
        }
    }
}

/// Everything a step needs besides E₀, τ and k.
#[derive(Clone, Debug)]
pub struct Scheme {
    pub grid: Arc<GridDomain>,
    pub phi: Anisotropy,
    pub stencil: Arc<PerimeterStencil>,
    pub beta: ContactAngleField,
    pub forcing: ForcingField,
    pub distance: DissipationDistance,
}

impl Scheme {
    /// Calibrates the default stencil for `phi`.
    pub fn new(grid: &Arc<GridDomain>, phi: &Anisotropy, beta: ContactAngleField, forcing: ForcingField) -> Result<Self> {
        let stencil = PerimeterStencil::calibrate(phi, StencilKind::default_for(phi.dim()))?;
        Self::with_stencil(grid, phi, Arc::new(stencil), beta, forcing)
    }

    pub fn with_stencil(
        grid: &Arc<GridDomain>,
        phi: &Anisotropy,
        stencil: Arc<PerimeterStencil>,
        beta: ContactAngleField,
        forcing: ForcingField,
    ) -> Result<Self> {
        if grid.dim() != phi.dim() {
            return Err(Error::Dimension { expected: phi.dim(), got: grid.dim() });
        }
        if beta.values().len() != grid.floor_len() {
            return Err(Error::GridMismatch("contact-angle field does not match the floor row".into()));
        }
        if (beta.phi_vertical() - phi.vertical()).abs() > 1e-12 * phi.vertical() {
            return Err(Error::Admissibility("contact-angle field was checked against another anisotropy".into()));
        }
        Ok(Self { grid: grid.clone(), phi: phi.clone(), stencil, beta, forcing, distance: DissipationDistance::default() })
    }

    pub fn with_distance(mut self, d: DissipationDistance) -> Self {
        self.distance = d;
        self
    }

    /// Same Φ, stencil and grid with other data (for paired runs).
    pub fn with_data(&self, beta: ContactAngleField, forcing: ForcingField) -> Result<Self> {
        Ok(Self::with_stencil(&self.grid, &self.phi, self.stencil.clone(), beta, forcing)?.with_distance(self.distance))
    }

    /// Bound on the total pair weight a single cell can touch, plus the
    /// largest adhesion; unary terms beyond it decide the cell outright.
    pub fn cell_weight_bound(&self) -> f64 {
        let w: f64 = self.stencil.weights(self.grid.h()).iter().sum();
        3.0 * w + self.phi.vertical() * self.grid.facet_area()
    }

    /// Integer scale 2⁴⁰/(4·bound), independent of E₀, β and f so that paired
    /// runs round their coefficients monotonically.
    pub fn capacity_scale(&self) -> f64 {
        (1u64 << 40) as f64 / (4.0 * self.cell_weight_bound())
    }

    /// Time-averaged forcing over [kτ, (k+1)τ] at every cell.
    pub fn forcing_means(&self, tau: f64, k: usize) -> Vec<f64> {
        if self.forcing.is_zero() {
            return vec![0.0; self.grid.len()];
        }
        self.forcing.step_means(&self.grid, k as f64 * tau, (k + 1) as f64 * tau)
    }

    /// Signed distance to ∂E₀ used in the dissipation (negative inside).
    pub fn dissipation_distance(&self, e0: &BinarySet) -> Result<Vec<f64>> {
        let sd = distance_transform(e0, true, &Metric::Euclidean)?.into_values();
        Ok(match self.distance {
            DissipationDistance::Staircase => sd,
            DissipationDistance::Subcell => subcell_correction(e0, sd),
        })
    }
}

/// Blur width in cells of the subcell correction.
const BLUR_SIGMA: f64 = 1.5;

/// median(sd − h, −σΦ_N⁻¹(χ̃), sd + h) with χ̃ the indicator blurred by a
/// cell-averaged Gaussian (mirrored at the floor, vacuum elsewhere).
fn subcell_correction(e0: &BinarySet, sd: Vec<f64>) -> Vec<f64> {
    let grid = e0.grid();
    let n = grid.dim();
    let h = grid.h();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let reach = (4.0 * BLUR_SIGMA).ceil() as i64;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|j| normal.cdf((j as f64 + 0.5) / BLUR_SIGMA) - normal.cdf((j as f64 - 0.5) / BLUR_SIGMA))
        .collect();
    let mut field: Vec<f64> = (0..grid.len()).map(|i| if e0.get(i) { 1.0 } else { 0.0 }).collect();
    let counts = grid.counts().to_vec();
    let top = n - 1;
    for axis in 0..n {
        let mut out = vec![0.0; field.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let c = grid.coords(idx);
            let mut acc = 0.0;
            for (m, w) in kernel.iter().enumerate() {
                let mut j = c[axis] as i64 + m as i64 - reach;
                if axis == top && j < 0 {
                    j = -j - 1;
                }
                if j < 0 || j >= counts[axis] as i64 {
                    continue;
                }
                let mut cc = c;
                cc[axis] = j as usize;
                acc += w * field[grid.index(&cc[..n])];
            }
            *o = acc;
        }
        field = out;
    }
    let sigma = BLUR_SIGMA * h;
    sd.iter()
        .zip(&field)
        .map(|(&s, &p)| {
            let p = p.clamp(1e-12, 1.0 - 1e-12);
            let g = -sigma * normal.inverse_cdf(p);
            g.clamp(s - h, s + h)
        })
        .collect()
}

/// One ATW step as a binary energy over the grid cells, with E ↦ energy
/// equal to 𝓕(E; E₀, τ, k) up to floating-point summation order.
#[derive(Clone, Debug)]
pub struct StepProblem {
    pub energy: BinaryEnergy,
    /// Signed dissipation distance of E₀ at every cell.
    pub distance: Vec<f64>,
    /// Time-averaged forcing at every cell.
    pub forcing: Vec<f64>,
    bound: f64,
    scale: f64,
}

impl StepProblem {
    pub fn build(e0: &BinarySet, tau: f64, k: usize, scheme: &Scheme) -> Result<Self> {
        check_step_args(e0, tau, k, scheme)?;
        let grid = &scheme.grid;
        let hn = grid.cell_volume();
        let distance = scheme.dissipation_distance(e0)?;
        let forcing = scheme.forcing_means(tau, k);
        let mut energy = BinaryEnergy::new(grid.len());
        for (i, u) in energy.unary.iter_mut().enumerate() {
            *u = distance[i] / tau * hn + forcing[i] * hn;
        }
        let a = grid.facet_area();
        for (s, b) in scheme.beta.values().iter().enumerate() {
            energy.unary[s] += b * a;
        }
        let w = scheme.stencil.weights(grid.h());
        for_each_pair(grid, scheme.stencil.directions(), |p| match (p.a, p.b) {
            (Some(x), Some(y)) => energy.pairs.push((x, y, w[p.dir])),
            (Some(x), None) | (None, Some(x)) => energy.unary[x] += w[p.dir],
            (None, None) => {}
        });
        energy.constant = -e0.iter_ones().map(|i| distance[i]).sum::<f64>() / tau * hn;
        Ok(Self { energy, distance, forcing, bound: scheme.cell_weight_bound(), scale: scheme.capacity_scale() })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Unary terms clamped to ±bound·(1 + 10⁻⁶) (which leaves the minimizers
    /// unchanged) and rounded at the scheme's fixed scale.
    pub fn quantized(&self) -> Result<IntegerEnergy> {
        let cap = self.bound * (1.0 + 1e-6);
        let mut e = self.energy.clone();
        for u in e.unary.iter_mut() {
            *u = u.clamp(-cap, cap);
        }
        e.quantize(self.scale)
    }
}

fn check_step_args(e0: &BinarySet, tau: f64, k: usize, scheme: &Scheme) -> Result<()> {
    if e0.grid().as_ref() != scheme.grid.as_ref() {
        return Err(Error::GridMismatch("set and scheme live on different grids".into()));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Precondition(format!("time step {tau} must be positive")));
    }
    if k == 0 {
        return Err(Error::Precondition("step index 0 is the initial datum; the k = 0 functional is |E Δ E₀|".into()));
    }
    Ok(())
}

/// Components of 𝓕(E; E₀, τ, k).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    /// P_Φ(E, Ω).
    pub perimeter: f64,
    /// ∫_{∂Ω} β χ_E.
    pub adhesion: f64,
    /// 𝒞_β(E) = perimeter + adhesion.
    pub capillary: f64,
    /// (1/τ)(Σ_E sd − Σ_{E₀} sd)hⁿ; equals (1/τ)∫_{EΔE₀} d_{E₀} for the staircase distance.
    pub dissipation: f64,
    /// Σ_E f̄ hⁿ.
    pub forcing: f64,
    pub total: f64,
}

/// 𝓕(E; E₀, τ, k). For k = 0 only |E Δ E₀| is returned (in `total`).
pub fn atw_energy(e: &BinarySet, e0: &BinarySet, tau: f64, k: usize, scheme: &Scheme) -> Result<EnergyBreakdown> {
    if k == 0 {
        let d = e.symmetric_difference_measure(e0)?;
        return Ok(EnergyBreakdown { total: d, ..Default::default() });
    }
    check_step_args(e0, tau, k, scheme)?;
    let perimeter = perimeter_phi(e, &scheme.phi, &scheme.stencil, Region::Interior)?;
    let adhesion = adhesion_energy(e, &scheme.beta)?;
    let hn = scheme.grid.cell_volume();
    let f = scheme.forcing_means(tau, k);
    let forcing = e.iter_ones().map(|i| f[i]).sum::<f64>() * hn;
    let dissipation = if e0.is_empty() {
        // d_{E₀} is undefined; only the empty step is representable.
        if e.is_empty() {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        let sd = scheme.dissipation_distance(e0)?;
        let diff = e.symmetric_difference(e0)?;
        diff.iter_ones().map(|i| if e.get(i) { sd[i] } else { -sd[i] }).sum::<f64>() / tau * hn
    };
    let capillary = perimeter + adhesion;
    Ok(EnergyBreakdown { perimeter, adhesion, capillary, dissipation, forcing, total: capillary + dissipation + forcing })
}
