//! Sampled checks of the forcing hypotheses and GMM extraction across τ.

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::graphcut::Select;
use crate::gridset::{BinarySet, GridDomain};

use super::energy::Scheme;
use super::fields::ForcingField;
use super::flow::{run_flat_flow, FlatFlowState};

/// Time samples used by `validate_forcing`.
const TIME_SAMPLES: usize = 64;

/// Sampled forcing hypotheses on [0, T] × box. Integrals are midpoint sums
/// over the grid cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingReport {
    /// Admissible radius scale for the small-set bound; `None` when f ≡ 0
    /// leaves it unconstrained.
    pub gamma_t: Option<f64>,
    /// sup |f| over the samples.
    pub c_t: f64,
    /// max over consecutive samples of ∫|f(s) − f(s + δ)| dx / δ.
    pub time_lipschitz: f64,
    /// Linear-growth coefficients of f⁻ (a_T, b_T), fitted with b_T = 0 on the box.
    pub growth: (f64, f64),
    /// (1/τ)∫₀^τ∫|f| for τ = T/10, T/100, T/1000.
    pub short_time_mass: [f64; 3],
    pub negative_part_mass: f64,
    /// Names of hypotheses that failed.
    pub violations: Vec<String>,
}

impl ForcingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn spatial_mass(f: &ForcingField, grid: &GridDomain, t: f64, g: impl Fn(f64) -> f64) -> f64 {
    let n = grid.dim();
    (0..grid.len()).map(|i| g(f.eval(t, &grid.center(i)[..n]))).sum::<f64>() * grid.cell_volume()
}

/// Samples f on [0, T] at the cell centres of `grid`.
pub fn validate_forcing(f: &ForcingField, grid: &GridDomain, t_end: f64, phi: &Anisotropy, eta: f64) -> ForcingReport {
    let n = grid.dim();
    let times: Vec<f64> = (0..=TIME_SAMPLES).map(|j| t_end * j as f64 / TIME_SAMPLES as f64).collect();
    let mut c_t = 0.0f64;
    let mut neg = 0.0f64;
    let mut neg_mass = 0.0f64;
    for &t in &times {
        for i in 0..grid.len() {
            let v = f.eval(t, &grid.center(i)[..n]);
            c_t = c_t.max(v.abs());
            neg = neg.max((-v).max(0.0));
        }
        neg_mass = neg_mass.max(spatial_mass(f, grid, t, |v| (-v).max(0.0)));
    }
    let mut time_lipschitz = 0.0f64;
    for w in times.windows(2) {
        let d = w[1] - w[0];
        let jump = (0..grid.len())
            .map(|i| {
                let x = &grid.center(i)[..n];
                (f.eval(w[0], x) - f.eval(w[1], x)).abs()
            })
            .sum::<f64>()
            * grid.cell_volume();
        time_lipschitz = time_lipschitz.max(jump / d);
    }
    let short_time_mass = [10.0, 100.0, 1000.0].map(|q| {
        let tau = t_end / q;
        let k = 8;
        (0..k).map(|j| spatial_mass(f, grid, tau * (j as f64 + 0.5) / k as f64, f64::abs)).sum::<f64>() / k as f64
    });
    let (c_phi, _) = phi.norm_bounds();
    let gamma_t = (c_t > 0.0).then(|| c_phi * eta * n as f64 / (4.0 * c_t));
    let mut violations = Vec::new();
    if !c_t.is_finite() {
        violations.push("H4': f is unbounded on the samples".to_string());
    }
    if !neg_mass.is_finite() {
        violations.push("H1: f⁻ is not integrable on the box".to_string());
    }
    if !time_lipschitz.is_finite() {
        violations.push("H4'': no Lipschitz bound in time".to_string());
    }
    if short_time_mass.iter().any(|v| !v.is_finite()) || short_time_mass[2] > 10.0 * short_time_mass[0].max(1e-300) {
        violations.push("H3: short-time mass of |f| grows as τ → 0".to_string());
    }
    if !(eta > 0.0 && eta < 0.5) {
        violations.push(format!("H2: η = {eta} is outside (0, 1/2)"));
    }
    ForcingReport {
        gamma_t,
        c_t,
        time_lipschitz,
        growth: (neg, 0.0),
        short_time_mass,
        negative_part_mass: neg_mass,
        violations,
    }
}

/// Symmetric differences between flat flows at decreasing τ.
#[derive(Clone, Debug)]
pub struct GmmReport {
    pub taus: Vec<f64>,
    pub times: Vec<f64>,
    /// `differences[i][j]` = |E(τ_j, ⌊t_i/τ_j⌋) Δ E(τ_{j+1}, ⌊t_i/τ_{j+1}⌋)|.
    pub differences: Vec<Vec<f64>>,
    /// Whether the differences are non-increasing along the τ list at every time.
    pub cauchy: bool,
    /// One flow per τ, in the order of `taus`; the last is the GMM proxy.
    pub flows: Vec<FlatFlowState>,
}

impl GmmReport {
    pub fn finest(&self) -> &FlatFlowState {
        self.flows.last().expect("at least three flows")
    }
}

/// Runs the flat flow for every τ (concurrently) and compares them at `times`.
pub fn gmm_extract(
    e0: &BinarySet,
    taus: &[f64],
    t_end: f64,
    times: &[f64],
    scheme: &Scheme,
    select: Select,
) -> Result<GmmReport> {
    if taus.len() < 3 || taus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("need at least three strictly decreasing τ values".into()));
    }
    if times.iter().any(|t| *t < 0.0 || *t > t_end) {
        return Err(Error::Precondition("sample times must lie in [0, T]".into()));
    }
    let flows = std::thread::scope(|s| {
        let handles: Vec<_> =
            taus.iter().map(|&tau| s.spawn(move || run_flat_flow(e0, tau, t_end, scheme, select))).collect();
        handles.into_iter().map(|h| h.join().expect("flat-flow worker panicked")).collect::<Result<Vec<_>>>()
    })?;
    let mut differences = Vec::with_capacity(times.len());
    for &t in times {
        let row = flows
            .windows(2)
            .map(|w| w[0].at_time(t).symmetric_difference_measure(w[1].at_time(t)))
            .collect::<Result<Vec<_>>>()?;
        differences.push(row);
    }
    let cauchy = differences.iter().all(|row| row.windows(2).all(|w| w[1] <= w[0]));
    if !cauchy {
        log::info!("flat flows are not Cauchy across the τ list");
    }
    Ok(GmmReport { taus: taus.to_vec(), times: times.to_vec(), differences, cauchy, flows })
}
