//! Density, displacement, Hölder, coercivity and volume–distance checks.

use crate::error::Result;
use crate::gridset::{capillary_energy, perimeter_phi, BinarySet, Region};
use crate::stepper::{FlatFlowState, Scheme};

use super::CheckReport;

#[derive(Clone, Debug)]
pub struct DensityOptions {
    pub radii: Vec<f64>,
    /// Boundary cells examined per step.
    pub samples_per_step: usize,
    /// Examine every `stride`-th step.
    pub stride: usize,
    /// Calibrated lower bound for the empirical θ.
    pub theta_floor: Option<f64>,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self { radii: Vec::new(), samples_per_step: 64, stride: 1, theta_floor: None }
    }
}

/// Cells of E with a lateral or upper neighbour outside E.
fn boundary_cells(e: &BinarySet) -> Vec<usize> {
    let g = e.grid();
    let n = g.dim();
    e.iter_ones()
        .filter(|&i| {
            let c = g.coords(i);
            (0..n).any(|a| {
                [-1i64, 1].iter().any(|&s| {
                    if a == n - 1 && s < 0 && c[a] == 0 {
                        return false;
                    }
                    let mut d = [0i64; 3];
                    for b in 0..n {
                        d[b] = c[b] as i64;
                    }
                    d[a] += s;
                    !e.get_signed(&d[..n])
                })
            })
        })
        .collect()
}

/// (|B_r ∩ E| / |B_r|, P_Φ(E, B_r)/r^{n−1}) for the ball centred at cell `i`.
fn ball_ratios(e: &BinarySet, scheme: &Scheme, weights: &[f64], i: usize, r: f64) -> (f64, f64) {
    let g = e.grid();
    let n = g.dim();
    let h = g.h();
    let c = g.coords(i);
    let rc = r / h;
    let reach = rc.ceil() as i64 + 2;
    let dirs = scheme.stencil.directions();
    let (mut inside, mut total, mut per) = (0usize, 0usize, 0.0);
    let mut off = [0i64; 3];
    let span = 2 * reach + 1;
    let count = (span as usize).pow(n as u32);
    for lin in 0..count {
        let mut rem = lin as i64;
        for o in off.iter_mut().take(n) {
            *o = rem % span - reach;
            rem /= span;
        }
        let mut y = [0i64; 3];
        for a in 0..n {
            y[a] = c[a] as i64 + off[a];
        }
        let d2: f64 = off[..n].iter().map(|v| (*v * *v) as f64).sum();
        if d2 <= rc * rc {
            total += 1;
            if y[n - 1] >= 0 && e.get_signed(&y[..n]) {
                inside += 1;
            }
        }
        for (v, w) in dirs.iter().zip(weights) {
            let mut m2 = 0.0;
            for a in 0..n {
                let m = off[a] as f64 + 0.5 * v[a] as f64;
                m2 += m * m;
            }
            // Midpoint height above the floor in cell units is y + v/2 + 1/2.
            if m2 > rc * rc || y[n - 1] as f64 + 0.5 * v[n - 1] as f64 + 0.5 <= 0.0 {
                continue;
            }
            let mut z = [0i64; 3];
            for a in 0..n {
                z[a] = y[a] + v[a];
            }
            if e.get_signed(&y[..n]) != e.get_signed(&z[..n]) {
                per += w;
            }
        }
    }
    (inside as f64 / total as f64, per / r.powi(n as i32 - 1))
}

/// Volume fractions and perimeter ratios in balls centred on free-boundary cells.
pub fn check_density_estimates(state: &FlatFlowState, scheme: &Scheme, opts: &DensityOptions) -> Result<CheckReport> {
    let mut rep = CheckReport::new("density_estimates");
    let h = scheme.grid.h();
    let radii: Vec<f64> = opts.radii.iter().copied().filter(|r| *r >= 2.0 * h).collect();
    if radii.len() < opts.radii.len() {
        rep.notes.push(format!("skipped radii below 2h = {:.4}", 2.0 * h));
    }
    if radii.is_empty() {
        rep.status = super::Status::Skipped;
        rep.notes.push("no admissible radius".into());
        return Ok(rep);
    }
    let upper = (state.tau).sqrt();
    if radii.iter().any(|r| *r > upper) {
        rep.notes.push(format!("radii above √τ = {upper:.4} exceed the theorem's range"));
    }
    let weights = scheme.stencil.weights(h);
    let (mut theta_v, mut theta_p) = (f64::INFINITY, f64::INFINITY);
    let (mut frac_lo, mut frac_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sampled = 0usize;
    for (k, e) in state.sets.iter().enumerate().step_by(opts.stride.max(1)) {
        let cells = boundary_cells(e);
        if cells.is_empty() {
            continue;
        }
        let m = opts.samples_per_step.max(1).min(cells.len());
        let mut step_theta = f64::INFINITY;
        for s in 0..m {
            let i = cells[s * cells.len() / m];
            for &r in &radii {
                let (frac, ratio) = ball_ratios(e, scheme, &weights, i, r);
                frac_lo = frac_lo.min(frac);
                frac_hi = frac_hi.max(frac);
                theta_v = theta_v.min(frac.min(1.0 - frac));
                theta_p = theta_p.min(ratio);
                step_theta = step_theta.min(frac.min(1.0 - frac)).min(ratio);
                sampled += 1;
            }
        }
        if let Some(floor) = opts.theta_floor {
            if step_theta < floor {
                rep.fail(format!("step {k}: θ = {step_theta:.4}"));
            }
        }
    }
    if sampled == 0 {
        rep.notes.push("no boundary cells: vacuous".into());
        return Ok(rep);
    }
    let theta = theta_v.min(theta_p);
    rep.measure("theta", theta, opts.theta_floor);
    rep.measure("theta_volume", theta_v, None);
    rep.measure("theta_perimeter", theta_p, None);
    rep.measure("volume_fraction_min", frac_lo, None);
    rep.measure("volume_fraction_max", frac_hi, None);
    rep.measure("samples", sampled as f64, None);
    if !(theta > 0.0) {
        rep.fail("empirical θ is not positive");
    }
    Ok(rep)
}

/// max over steps of the largest flipped-cell distance, in units of √τ.
pub fn check_linf_displacement(state: &FlatFlowState, theta: Option<f64>) -> CheckReport {
    let mut rep = CheckReport::new("linf_displacement");
    let root = state.tau.sqrt();
    let mut worst = 0.0f64;
    for r in &state.records[1..] {
        let v = r.max_flip_distance / root;
        worst = worst.max(v);
        if let Some(th) = theta {
            if v > 1.0 / th {
                rep.fail(format!("step {}: d = {:.5}", r.k, r.max_flip_distance));
            }
        }
    }
    rep.measure("max_distance_over_sqrt_tau", worst, theta.map(|t| 1.0 / t));
    rep.measure("max_distance", worst * root, None);
    rep
}

/// max |E(t) Δ E(s)| / |t − s|^{1/2} over sampled pairs with |t − s| ∈ [min_gap·τ, max_gap].
pub fn check_holder(state: &FlatFlowState, min_gap: usize, max_gap: f64, bound: Option<f64>) -> Result<CheckReport> {
    let mut rep = CheckReport::new("holder");
    let tau = state.tau;
    let max_steps = (max_gap / tau + 1e-9).floor() as usize;
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for k in 0..state.sets.len() {
        for l in (k + min_gap.max(1))..state.sets.len().min(k + max_steps + 1) {
            let d = state.sets[k].symmetric_difference_measure(&state.sets[l])?;
            worst = worst.max(d / (((l - k) as f64) * tau).sqrt());
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Ok(CheckReport::skipped("holder", "run too short for the requested gaps"));
    }
    rep.measure("holder_constant", worst, bound);
    rep.measure("pairs", pairs as f64, None);
    if bound.is_some_and(|b| worst > b) {
        rep.fail(format!("constant {worst:.5}"));
    }
    Ok(rep)
}

/// ηP_Φ ≤ 𝒞_β ≤ P_Φ and ((Φ(e_n) + inf β)/(2Φ(e_n)))P_Φ ≤ 𝒞_β ≤ max{sup β/Φ(e_n), 1}P_Φ, zero tolerance.
pub fn check_coercivity(sets: &[BinarySet], scheme: &Scheme) -> Result<CheckReport> {
    let mut rep = CheckReport::new("coercivity");
    let beta = &scheme.beta;
    let pv = scheme.phi.vertical();
    let eta = beta.eta();
    let lo_a = (pv + beta.inf()) / (2.0 * pv);
    let hi_a = (beta.sup() / pv).max(1.0);
    let mut worst = f64::INFINITY;
    for (k, e) in sets.iter().enumerate() {
        let p = perimeter_phi(e, &scheme.phi, &scheme.stencil, Region::All)?;
        let c = capillary_energy(e, &scheme.phi, &scheme.stencil, beta)?;
        let checks = [(eta * p, c), (c, p), (lo_a * p, c), (c, hi_a * p)];
        for (i, (small, big)) in checks.iter().enumerate() {
            worst = worst.min(big - small);
            if small > big {
                rep.fail(format!("set {k}, inequality {i}: {small} > {big}"));
            }
        }
    }
    rep.measure("min_slack", if sets.is_empty() { 0.0 } else { worst }, Some(0.0));
    rep.measure("eta", eta, None);
    rep.measure("sets", sets.len() as f64, None);
    Ok(rep)
}

/// |E_k Δ E_{k−1}| ≤ (C₄/p)𝒞_β(E_{k−1})τ + (p/τ)∫_{E_kΔE_{k−1}} d; reports the smallest C₄
/// that makes every step hold and checks `c4` when given.
pub fn check_volume_distance(state: &FlatFlowState, p: f64, c4: Option<f64>) -> Result<CheckReport> {
    let mut rep = CheckReport::new("volume_distance");
    let tau = state.tau;
    let mut fitted = 0.0f64;
    for k in 1..state.sets.len() {
        let delta = state.sets[k].symmetric_difference_measure(&state.sets[k - 1])?;
        let dist = state.records[k].dissipation * tau;
        let cap = state.records[k - 1].capillary;
        let excess = delta - p / tau * dist;
        if excess <= 0.0 {
            continue;
        }
        let need = if cap > 0.0 { p * excess / (cap * tau) } else { f64::INFINITY };
        fitted = fitted.max(need);
        if let Some(c) = c4 {
            if c / p * cap * tau + p / tau * dist < delta {
                rep.fail(format!("step {k}"));
            }
        }
    }
    rep.measure("c4", fitted, c4);
    if !fitted.is_finite() {
        rep.fail("an empty predecessor changed volume");
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::anisotropy::Anisotropy;
    use crate::gridset::GridDomain;
    use crate::stepper::{ContactAngleField, ForcingField};

    fn scheme(g: &Arc<GridDomain>) -> Scheme {
        let phi = Anisotropy::euclidean(2).unwrap();
        Scheme::new(g, &phi, ContactAngleField::constant(g, &phi, 0.0).unwrap(), ForcingField::zero()).unwrap()
    }

    #[test]
    fn flat_interface_is_half_filled() {
        let g = Arc::new(GridDomain::centered(2, 1.0, 1.0, 1.0 / 64.0).unwrap());
        let s = scheme(&g);
        let e = BinarySet::from_predicate(&g, |x| x[1] < 0.5);
        let i = g.locate(&[0.0, 0.5 - 0.5 / 64.0]).unwrap();
        let r = 8.0 * g.h();
        let (frac, ratio) = ball_ratios(&e, &s, &s.stencil.weights(g.h()), i, r);
        assert!((frac - 0.5).abs() <= g.h() / r, "{frac}");
        // A flat chord of length 2r.
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn empty_flow_is_vacuous() {
        let g = Arc::new(GridDomain::centered(2, 0.5, 0.5, 1.0 / 16.0).unwrap());
        let s = scheme(&g);
        let st = crate::stepper::run_flat_flow(&BinarySet::empty(&g), 0.01, 0.05, &s, crate::graphcut::Select::Minimal)
            .unwrap();
        let opts = DensityOptions { radii: vec![0.2], ..Default::default() };
        let rep = check_density_estimates(&st, &s, &opts).unwrap();
        assert!(rep.passed());
        assert_eq!(check_linf_displacement(&st, Some(0.1)).value("max_distance"), Some(0.0));
    }
}
