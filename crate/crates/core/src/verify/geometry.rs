//! Euler–Lagrange residuals on step contours and stepper/oracle consistency.

use crate::error::{Error, Result};
use crate::gridset::{BinarySet, GridDomain};
use crate::oracle2d::FrontRun;
use crate::stepper::{FlatFlowState, Scheme};

use super::contour::{hausdorff, Contour, Point};
use super::CheckReport;

/// Gaussian width (cells) used to smooth step contours before differentiating.
const CONTOUR_BLUR: f64 = 1.5;
/// Half-width of the Menger stencil, in contour samples spaced h apart.
const CURVATURE_SPAN: usize = 16;

/// Uniform arclength samples at spacing close to `ds`.
fn resample(line: &[Point], ds: f64) -> Vec<Point> {
    let mut acc = vec![0.0];
    for w in line.windows(2) {
        acc.push(acc.last().unwrap() + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    let total = *acc.last().unwrap();
    let m = (total / ds).round() as usize;
    if m < 2 {
        return line.to_vec();
    }
    let mut out = Vec::with_capacity(m + 1);
    let mut j = 0;
    for i in 0..=m {
        let s = total * i as f64 / m as f64;
        while j + 2 < acc.len() && acc[j + 1] < s {
            j += 1;
        }
        let seg = acc[j + 1] - acc[j];
        let u = if seg > 0.0 { ((s - acc[j]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        out.push([line[j][0] + u * (line[j + 1][0] - line[j][0]), line[j][1] + u * (line[j + 1][1] - line[j][1])]);
    }
    out
}

/// Bilinear interpolation of cell-centred values; rows below the floor repeat row 0.
fn bilinear(grid: &GridDomain, values: &[f64], x: Point) -> f64 {
    let h = grid.h();
    let lo = grid.lower();
    let c = grid.counts();
    let u = ((x[0] - lo[0]) / h - 0.5).clamp(0.0, (c[0] - 1) as f64);
    let v = ((x[1] - lo[1]) / h - 0.5).clamp(0.0, (c[1] - 1) as f64);
    let (i, j) = ((u.floor() as usize).min(c[0].saturating_sub(2)), (v.floor() as usize).min(c[1].saturating_sub(2)));
    let (a, b) = (u - i as f64, v - j as f64);
    let at = |i: usize, j: usize| values[grid.index(&[i, j])];
    (1.0 - a) * (1.0 - b) * at(i, j) + a * (1.0 - b) * at(i + 1, j) + (1.0 - a) * b * at(i, j + 1) + a * b * at(i + 1, j + 1)
}

fn inside(e: &BinarySet, x: Point) -> bool {
    let g = e.grid();
    let h = g.h();
    let lo = g.lower();
    let c = [((x[0] - lo[0]) / h).floor() as i64, ((x[1] - lo[1]) / h).floor() as i64];
    e.get_signed(&c)
}

/// Residual of (1/τ)sd_{E₀} + κ^Φ_{E_τ} + f̄ = 0 along the smoothed contour of a step,
/// at points more than 4h above the floor. Lattice quantization makes the residual
/// O(h/τ), so `bound` caps the median residual in units of h/τ.
pub fn check_euler_lagrange(
    step: &BinarySet,
    e0: &BinarySet,
    tau: f64,
    k: usize,
    scheme: &Scheme,
    bound: Option<f64>,
) -> Result<CheckReport> {
    let name = "euler_lagrange";
    let grid = &scheme.grid;
    if grid.dim() != 2 {
        return Err(Error::Precondition("the Euler–Lagrange check is planar".into()));
    }
    if e0.is_empty() {
        return Ok(CheckReport::skipped(name, "empty previous set"));
    }
    let h = grid.h();
    let sd = scheme.dissipation_distance(e0)?;
    let fbar = scheme.forcing_means(tau, k);
    let contour = Contour::extract(step, Some(CONTOUR_BLUR));
    let (mut res, mut dom, mut curv, mut dist) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for line in &contour.polylines {
        let pts = resample(line, h);
        let l = CURVATURE_SPAN;
        if pts.len() < 2 * l + 1 {
            continue;
        }
        for i in l..pts.len() - l {
            let (a, b, c) = (pts[i - l], pts[i], pts[i + l]);
            if b[1] <= 4.0 * h {
                continue;
            }
            let (u, w) = ([a[0] - b[0], a[1] - b[1]], [c[0] - b[0], c[1] - b[1]]);
            let cross = u[0] * w[1] - u[1] * w[0];
            let ac = (c[0] - a[0]).hypot(c[1] - a[1]);
            let menger = 2.0 * cross.abs() / (u[0].hypot(u[1]) * w[0].hypot(w[1]) * ac);
            // Convex (positive) when the chord midpoint side lies in E.
            let mid = [0.5 * (a[0] + c[0]) - b[0], 0.5 * (a[1] + c[1]) - b[1]];
            let ml = mid[0].hypot(mid[1]);
            let sign = if ml == 0.0 {
                0.0
            } else if inside(step, [b[0] + 2.0 * h * mid[0] / ml, b[1] + 2.0 * h * mid[1] / ml]) {
                1.0
            } else {
                -1.0
            };
            let t = [(c[0] - a[0]) / ac, (c[1] - a[1]) / ac];
            let nu = [t[1], -t[0]];
            let hess = scheme.phi.hessian(&nu)?;
            let stiff = t[0] * (hess[0][0] * t[0] + hess[0][1] * t[1]) + t[1] * (hess[1][0] * t[0] + hess[1][1] * t[1]);
            let kappa = sign * menger * stiff;
            // Averaged over the curvature window, like κ.
            let win = &pts[i - l..=i + l];
            let d = win.iter().map(|p| bilinear(grid, &sd, *p)).sum::<f64>() / (win.len() as f64 * tau);
            let f = win.iter().map(|p| grid.locate(p).map_or(0.0, |j| fbar[j])).sum::<f64>() / win.len() as f64;
            res.push((d + kappa + f).abs());
            dom.push(d.abs().max(kappa.abs()));
            curv.push(kappa);
            dist.push(d);
        }
    }
    if res.len() < 8 {
        return Ok(CheckReport::skipped(name, format!("only {} contour points above 4h", res.len())));
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let m_res = median(&mut res);
    let m_dom = median(&mut dom);
    let m_curv = median(&mut curv);
    let m_dist = median(&mut dist);
    let relative = if m_dom > 0.0 { m_res / m_dom } else { 0.0 };
    let mut rep = CheckReport::new(name);
    rep.measure("median_residual", m_res, None);
    rep.measure("median_residual_over_h_tau", m_res * tau / h, bound);
    rep.measure("median_dominant", m_dom, None);
    rep.measure("median_curvature", m_curv, None);
    rep.measure("median_distance_term", m_dist, None);
    rep.measure("relative_residual", relative, None);
    rep.measure("points", res.len() as f64, None);
    if bound.is_some_and(|b| m_res * tau / h > b) {
        rep.fail(format!("step {k}: median residual {:.4} h/τ", m_res * tau / h));
    }
    Ok(rep)
}

/// Hausdorff distance between the stepper contour and the oracle curve at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencySample {
    pub t: f64,
    pub hausdorff: f64,
    pub relative: f64,
}

/// Compares E(τ, ⌊t/τ⌋) with the oracle curve at each time; distances are relative
/// to `r0` and `budget` bounds their maximum.
pub fn check_consistency(
    state: &FlatFlowState,
    oracle: &FrontRun,
    times: &[f64],
    r0: f64,
    budget: Option<f64>,
) -> Result<(CheckReport, Vec<ConsistencySample>)> {
    let grid = state.sets[0].grid();
    if grid.dim() != 2 {
        return Err(Error::Precondition("consistency is checked in the plane only".into()));
    }
    let h = grid.h();
    let mut rep = CheckReport::new("consistency");
    let mut out = Vec::new();
    let horizon = oracle.stopped.as_ref().map_or(f64::INFINITY, |s| s.0);
    for &t in times {
        if t > horizon {
            rep.notes.push(format!("oracle stopped at t = {horizon:.4}; comparison truncated"));
            break;
        }
        if !state.covers(t) || oracle.last().time() + 1e-12 < t {
            rep.notes.push(format!("no data at t = {t}"));
            continue;
        }
        let stepper = Contour::extract(state.at_time(t), None);
        let curve = vec![oracle.at_time(t).nodes().to_vec()];
        let d = hausdorff(&stepper.polylines, &curve, 0.5 * h);
        out.push(ConsistencySample { t, hausdorff: d, relative: d / r0 });
    }
    if out.is_empty() {
        rep.status = super::Status::Skipped;
        return Ok((rep, out));
    }
    let worst = out.iter().map(|s| s.relative).fold(0.0, f64::max);
    rep.measure("max_relative_hausdorff", worst, budget);
    if let Some(last) = out.last() {
        rep.measure("final_relative_hausdorff", last.relative, None);
    }
    if budget.is_some_and(|b| worst > b) {
        for s in out.iter().filter(|s| budget.is_some_and(|b| s.relative > b)) {
            rep.fail(format!("t = {}: {:.5}", s.t, s.hausdorff));
        }
    }
    Ok((rep, out))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::anisotropy::Anisotropy;
    use crate::graphcut::Select;
    use crate::oracle2d::{run_front, FrontOptions, SmoothCurve};
    use crate::stepper::{run_flat_flow, ContactAngleField, ForcingField};

    fn scheme(g: &Arc<GridDomain>, f: f64) -> Scheme {
        let phi = Anisotropy::euclidean(2).unwrap();
        Scheme::new(g, &phi, ContactAngleField::constant(g, &phi, 0.0).unwrap(), ForcingField::Constant(f)).unwrap()
    }

    #[test]
    fn flat_stationary_interface_has_no_residual() {
        let g = Arc::new(GridDomain::centered(2, 1.0, 1.0, 1.0 / 32.0).unwrap());
        let s = scheme(&g, 0.0);
        // A slab reaching the lateral faces: flat away from the corners.
        let e = BinarySet::from_predicate(&g, |x| x[1] < 0.5);
        let rep = check_euler_lagrange(&e, &e, 1e-2, 1, &s, None).unwrap();
        assert!(rep.value("median_residual").unwrap() < 0.1 / 1e-2 * g.h(), "{rep}");
    }

    #[test]
    fn initial_half_disk_agrees_with_its_curve() {
        let g = Arc::new(GridDomain::centered(2, 1.0, 1.0, 1.0 / 64.0).unwrap());
        let s = scheme(&g, 0.0);
        let curve = SmoothCurve::half_circle(0.0, 0.5, 256).unwrap();
        let e0 = curve.rasterize(&g).unwrap();
        let st = run_flat_flow(&e0, 0.01, 0.02, &s, Select::Minimal).unwrap();
        let phi = Anisotropy::euclidean(2).unwrap();
        let run = run_front(&curve, &phi, |_| 0.0, &ForcingField::zero(), 0.02, &FrontOptions::default()).unwrap();
        let (rep, samples) = check_consistency(&st, &run, &[0.0], 0.5, None).unwrap();
        assert!(samples[0].hausdorff <= g.h(), "{rep}");
    }
}
