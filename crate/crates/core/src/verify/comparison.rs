//! Comparison-principle checks: paired flows, Wulff balls and Winterbottom barriers.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::graphcut::Select;
use crate::gridset::{BinarySet, GridDomain};
use crate::shapes::{smallest_containing_winterbottom, Shape, WinterbottomShape, WulffShape};
use crate::stepper::{run_flat_flow, ContactAngleField, FlatFlowState, ForcingField, GmmReport, Scheme};

use super::CheckReport;

/// Size of the randomized comparison suite.
#[derive(Clone, Debug)]
pub struct ComparisonSuite {
    pub instances: usize,
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
}

impl Default for ComparisonSuite {
    fn default() -> Self {
        Self { instances: 12, h: 1.0 / 32.0, tau: 4e-3, steps: 8 }
    }
}

/// First step k at which `small[k] ⊄ big[k]`.
fn first_violation(small: &FlatFlowState, big: &FlatFlowState) -> Result<Option<usize>> {
    for (k, (a, b)) in small.sets.iter().zip(&big.sets).enumerate() {
        if !a.is_subset_of(b)? {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// One to three disks (x, y, r) centred at or slightly above the floor.
fn random_droplet(rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let m = rng.gen_range(1..=3);
    (0..m).map(|_| [rng.gen_range(-0.4..0.4), rng.gen_range(0.0..0.15), rng.gen_range(0.15..0.35)]).collect()
}

fn disks(grid: &Arc<GridDomain>, d: &[[f64; 3]], shrink: f64) -> BinarySet {
    BinarySet::from_predicate(grid, |x| {
        d.iter().any(|c| {
            let r = c[2] - shrink;
            r > 0.0 && (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) < r * r
        })
    })
}

/// Randomized nested instances (E₀⁽¹⁾ ⊆ E₀⁽²⁾, β₁ ≥ β₂, f₁ ≥ f₂) run in pairs.
/// Checks per step: minimal flow 1 ⊆ minimal and maximal flow 2, maximal flow 1 ⊆
/// maximal flow 2, and minimal ⊆ maximal for equal data.
pub fn check_comparison_suite(seed: u64, suite: &ComparisonSuite) -> Result<CheckReport> {
    let mut rep = CheckReport::new("comparison");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Arc::new(GridDomain::centered(2, 1.0, 0.75, suite.h)?);
    let phi = Anisotropy::euclidean(2)?;
    let t_end = suite.tau * (suite.steps as f64 + 0.5);
    let mut pairs = 0usize;
    for inst in 0..suite.instances {
        let d = random_droplet(&mut rng);
        let outer = disks(&grid, &d, 0.0);
        // The first instance exercises the empty inner datum.
        let inner = if inst == 0 { BinarySet::empty(&grid) } else { disks(&grid, &d, rng.gen_range(0.0..0.1)) };
        let b2: f64 = rng.gen_range(-0.7..0.5);
        let b1 = (b2 + rng.gen_range(0.0..0.3)).min(0.8);
        let f2 = rng.gen_range(-1.0..1.0);
        let f1 = f2 + rng.gen_range(0.0..0.5);
        let s1 = Scheme::new(&grid, &phi, ContactAngleField::constant(&grid, &phi, b1)?, ForcingField::Constant(f1))?;
        let s2 = Scheme::new(&grid, &phi, ContactAngleField::constant(&grid, &phi, b2)?, ForcingField::Constant(f2))?;
        let runs = std::thread::scope(|s| {
            let h = [
                s.spawn(|| run_flat_flow(&inner, suite.tau, t_end, &s1, Select::Minimal)),
                s.spawn(|| run_flat_flow(&inner, suite.tau, t_end, &s1, Select::Maximal)),
                s.spawn(|| run_flat_flow(&outer, suite.tau, t_end, &s2, Select::Minimal)),
                s.spawn(|| run_flat_flow(&outer, suite.tau, t_end, &s2, Select::Maximal)),
            ];
            h.map(|j| j.join().expect("flat-flow worker panicked"))
        });
        let [min1, max1, min2, max2] = runs;
        let (min1, max1, min2, max2) = (min1?, max1?, min2?, max2?);
        let checks = [
            ("min1 ⊆ min2", &min1, &min2),
            ("min1 ⊆ max2", &min1, &max2),
            ("max1 ⊆ max2", &max1, &max2),
            ("min1 ⊆ max1", &min1, &max1),
            ("min2 ⊆ max2", &min2, &max2),
        ];
        for (label, a, b) in checks {
            pairs += 1;
            if let Some(k) = first_violation(a, b)? {
                rep.fail(format!("instance {inst}: {label} at step {k}"));
            }
        }
    }
    rep.measure("instances", suite.instances as f64, None);
    rep.measure("paired_runs", pairs as f64, None);
    rep.measure("violations", rep.offenders.len() as f64, Some(0.0));
    Ok(rep)
}

/// E(τ_j, ⌊t/τ_j⌋) of `smaller` ⊆ that of `larger` for every τ and sampled time.
pub fn check_gmm_ordering(smaller: &GmmReport, larger: &GmmReport) -> Result<CheckReport> {
    if smaller.taus != larger.taus || smaller.times != larger.times {
        return Err(Error::Precondition("GMM reports use different τ lists or times".into()));
    }
    let mut rep = CheckReport::new("gmm_ordering");
    for (j, (a, b)) in smaller.flows.iter().zip(&larger.flows).enumerate() {
        for &t in &smaller.times {
            if !a.at_time(t).is_subset_of(b.at_time(t))? {
                rep.fail(format!("τ = {}, t = {t}", smaller.taus[j]));
            }
        }
    }
    rep.measure("violations", rep.offenders.len() as f64, Some(0.0));
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallSide {
    /// Ω ∩ W_{R₀}(p) ⊂ E₀; the shrunk ball must stay inside.
    Inside,
    /// W_{R₀}(p) ∩ E₀ = ∅; the shrunk ball must stay outside.
    Outside,
}

/// Shrunk Wulff ball W_r(p), r = β₀R₀/(16Φ(e_n)), β₀ = (‖β‖∞ + Φ(e_n))/2, tested
/// against E(τ, k) for kτ ≤ ϑ₀R₀²/(R₀ + 1).
pub fn check_wulff_avoidance(
    state: &FlatFlowState,
    scheme: &Scheme,
    p: &[f64],
    r0: f64,
    side: BallSide,
    vartheta0: f64,
) -> Result<CheckReport> {
    let name = "wulff_avoidance";
    let grid = &scheme.grid;
    let n = grid.dim();
    let h = grid.h();
    if r0 < 4.0 * h {
        return Ok(CheckReport::skipped(name, format!("R0 = {r0} is below 4h = {}", 4.0 * h)));
    }
    let e0 = &state.sets[0];
    let big = WulffShape::new(&scheme.phi, p, r0)?;
    let centers = || (0..grid.len()).map(|i| (i, grid.center(i)));
    let bad = match side {
        BallSide::Outside => e0.iter_ones().any(|i| big.contains(&grid.center(i)[..n])),
        BallSide::Inside => centers().any(|(i, x)| big.contains(&x[..n]) && !e0.get(i)),
    };
    if bad {
        return Err(Error::Precondition(format!("W_{r0}(p) is not {side:?} E0")));
    }
    let pv = scheme.phi.vertical();
    let beta0 = 0.5 * (scheme.beta.sup_abs() + pv);
    let r = beta0 * r0 / (16.0 * pv);
    let small = WulffShape::new(&scheme.phi, p, r)?;
    let cells: Vec<usize> = centers().filter(|(_, x)| small.contains(&x[..n])).map(|(i, _)| i).collect();
    let mut rep = CheckReport::new(name);
    if cells.is_empty() {
        return Ok(CheckReport::skipped(name, format!("shrunk ball of radius {r} meets no cell centre")));
    }
    let window = vartheta0 * r0 * r0 / (r0 + 1.0);
    if state.tau >= vartheta0 * r0 * r0 {
        rep.notes.push(format!("τ = {} is not below ϑ₀R₀² = {}", state.tau, vartheta0 * r0 * r0));
    }
    let mut tested = 0usize;
    for (k, e) in state.sets.iter().enumerate() {
        if k as f64 * state.tau > window + 1e-12 {
            break;
        }
        tested += 1;
        let hit = match side {
            BallSide::Outside => cells.iter().filter(|&&i| e.get(i)).count(),
            BallSide::Inside => cells.iter().filter(|&&i| !e.get(i)).count(),
        };
        if hit > 0 {
            rep.fail(format!("step {k}: {hit} cells"));
        }
    }
    rep.measure("shrunk_radius", r, None);
    rep.measure("time_window", window, None);
    rep.measure("steps_tested", tested as f64, None);
    rep.measure("violating_steps", rep.offenders.len() as f64, Some(0.0));
    Ok(rep)
}

/// Smallest containing Winterbottom radius per step. Unforced runs must satisfy
/// r_k ≤ r₀ + 4h; forced runs report the growth constants C₆ (with C₇ = 0) and
/// C₇ (with C₆ = 0) fitted to r_k ≤ max(r₀e^{C₆t}, r₀ + C₇t) + 4h.
pub fn check_winterbottom_containment(
    state: &FlatFlowState,
    scheme: &Scheme,
    beta0: f64,
    r0: f64,
    horizontal_center: &[f64],
) -> Result<CheckReport> {
    let pv = scheme.phi.vertical();
    let eta = scheme.beta.eta();
    if !(beta0 > -pv && beta0 < -(1.0 - 2.0 * eta) * pv) {
        return Err(Error::Precondition(format!(
            "β₀ = {beta0} must lie in (−Φ(e_n), −(1 − 2η)Φ(e_n)) = ({}, {})",
            -pv,
            -(1.0 - 2.0 * eta) * pv
        )));
    }
    let proto = WinterbottomShape::new(&scheme.phi, beta0, r0, horizontal_center)?;
    let h = scheme.grid.h();
    let tol = 1e-9 * r0;
    let radius = |e: &BinarySet| smallest_containing_winterbottom(&proto, e).map(|r| r.unwrap_or(0.0));
    let r_init = radius(&state.sets[0])?;
    if r_init > r0 + tol {
        return Err(Error::Precondition(format!("E0 needs radius {r_init} > r0 = {r0}")));
    }
    let mut rep = CheckReport::new("winterbottom_containment");
    let slack = 4.0 * h;
    let forced = !scheme.forcing.is_zero();
    let (mut r_max, mut c6, mut c7) = (r_init, 0.0f64, 0.0f64);
    for (k, e) in state.sets.iter().enumerate().skip(1) {
        let r = radius(e)?;
        r_max = r_max.max(r);
        let t = k as f64 * state.tau;
        let excess = r - slack;
        if excess > r0 {
            c7 = c7.max((excess - r0) / t);
            c6 = c6.max((excess / r0).ln() / t);
            if !forced {
                rep.fail(format!("step {k}: r = {r:.5}"));
            }
        }
    }
    rep.measure("r0", r0, None);
    rep.measure("r_initial", r_init, None);
    rep.measure("r_max", r_max, if forced { None } else { Some(r0 + slack) });
    rep.measure("c6", c6, None);
    rep.measure("c7", c7, None);
    if !(c6.is_finite() && c7.is_finite()) {
        rep.fail("growth constants are not finite");
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_is_ordered() {
        let suite = ComparisonSuite { instances: 3, h: 1.0 / 16.0, tau: 8e-3, steps: 4 };
        let rep = check_comparison_suite(7, &suite).unwrap();
        assert!(rep.passed(), "{rep}");
        assert_eq!(rep.value("paired_runs"), Some(15.0));
    }

    #[test]
    fn wulff_ball_below_resolution_is_skipped() {
        let g = Arc::new(GridDomain::centered(2, 1.0, 1.0, 1.0 / 16.0).unwrap());
        let phi = Anisotropy::euclidean(2).unwrap();
        let s = Scheme::new(&g, &phi, ContactAngleField::constant(&g, &phi, 0.0).unwrap(), ForcingField::zero())
            .unwrap();
        let e0 = BinarySet::from_predicate(&g, |x| x[0] * x[0] + x[1] * x[1] < 0.09);
        let st = run_flat_flow(&e0, 0.01, 0.03, &s, Select::Minimal).unwrap();
        let rep = check_wulff_avoidance(&st, &s, &[0.6, 0.3], 0.2, BallSide::Outside, 0.5).unwrap();
        assert_eq!(rep.status, super::super::Status::Skipped);
        assert!(check_wulff_avoidance(&st, &s, &[0.0, 0.1], 0.3, BallSide::Outside, 0.5).is_err());
    }

    #[test]
    fn initial_winterbottom_has_radius_r0() {
        let g = Arc::new(GridDomain::centered(2, 1.0, 1.0, 1.0 / 32.0).unwrap());
        let phi = Anisotropy::euclidean(2).unwrap();
        let s = Scheme::new(&g, &phi, ContactAngleField::constant(&g, &phi, -0.3).unwrap(), ForcingField::zero())
            .unwrap();
        let w = WinterbottomShape::new(&phi, -0.5, 0.4, &[0.0]).unwrap();
        let e0 = crate::shapes::rasterize(&w, &g).unwrap().set;
        let st = run_flat_flow(&e0, 0.01, 0.03, &s, Select::Minimal).unwrap();
        let rep = check_winterbottom_containment(&st, &s, -0.5, 0.4, &[0.0]).unwrap();
        assert!(rep.value("r_initial").unwrap() <= 0.4 + 1e-9);
        assert!(rep.passed(), "{rep}");
        assert!(check_winterbottom_containment(&st, &s, 0.1, 0.4, &[0.0]).is_err());
    }
}
