//! Front tracking for planar droplets: a polyline with both endpoints on the
//! floor, moved by v = −κ^Φ − f with Young's law imposed at the contact points.
//!
//! Nodes run counter-clockwise from the right contact point over the top to the
//! left one, so the droplet lies to the left of the direction of travel and the
//! outward normal of an edge with tangent t is (t_y, −t_x).

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::gridset::{BinarySet, GridDomain};
use crate::spline::{solve_tridiagonal, NaturalSpline};
use crate::stepper::ForcingField;

/// Largest admissible dt per unit of minimum node spacing.
///
/// The curvature term is implicit, so this only bounds the explicit contact
/// point projection and the frozen coefficients; 0.25 was the largest value
/// for which the half-circle area error stayed first order in dt.
pub const FRONT_DT_FACTOR: f64 = 0.25;

/// Turning angle per edge beyond which the polyline no longer resolves the curve.
const MAX_TURN: f64 = 0.5;

type P = [f64; 2];

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P, b: P) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn len(a: P) -> f64 {
    a[0].hypot(a[1])
}

fn point_segment_distance(x: P, a: P, b: P) -> f64 {
    let d = sub(b, a);
    let l2 = d[0] * d[0] + d[1] * d[1];
    let s = if l2 > 0.0 { (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    len(sub(x, [a[0] + s * d[0], a[1] + s * d[1]]))
}

fn segments_meet(a: P, b: P, c: P, d: P) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: P, q: P, r: P, o: f64| {
        o == 0.0 && r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// A droplet boundary p_0..p_M at time t.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothCurve {
    nodes: Vec<P>,
    t: f64,
}

impl SmoothCurve {
    /// Validates the invariants; a clockwise polyline is reversed.
    pub fn new(mut nodes: Vec<P>, t: f64) -> Result<Self> {
        if nodes.len() < 4 {
            return Err(Error::DegenerateSet(format!("a curve needs at least 4 nodes, got {}", nodes.len())));
        }
        let m = nodes.len() - 1;
        if nodes[0][1] != 0.0 || nodes[m][1] != 0.0 {
            return Err(Error::Topology("endpoints must lie on the floor".into()));
        }
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Topology("non-finite node".into()));
        }
        if let Some(i) = (1..m).find(|&i| nodes[i][1] <= 0.0) {
            return Err(Error::Topology(format!("interior node {i} touches the floor")));
        }
        if nodes[0][0] < nodes[m][0] {
            nodes.reverse();
        }
        let c = Self { nodes, t };
        if !(c.area() > 0.0) {
            return Err(Error::Topology("curve encloses no area".into()));
        }
        if let Some((i, j)) = c.self_intersection() {
            return Err(Error::Topology(format!("edges {i} and {j} intersect")));
        }
        Ok(c)
    }

    /// Arc of the circle |x − (cx, cy)| = r above the floor, m edges, |cy| < r.
    pub fn arc(cx: f64, cy: f64, r: f64, m: usize) -> Result<Self> {
        if !(r > 0.0 && cy.abs() < r) || m < 3 {
            return Err(Error::Precondition(format!("arc needs |cy| < r and m ≥ 3 (cy = {cy}, r = {r}, m = {m})")));
        }
        let a0 = (-cy / r).asin();
        let a1 = std::f64::consts::PI - a0;
        let mut nodes: Vec<P> = (0..=m)
            .map(|i| {
                let a = a0 + (a1 - a0) * i as f64 / m as f64;
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect();
        nodes[0][1] = 0.0;
        nodes[m][1] = 0.0;
        Self::new(nodes, 0.0)
    }

    /// Half-circle of radius r centred on the floor at x = cx.
    pub fn half_circle(cx: f64, r: f64, m: usize) -> Result<Self> {
        Self::arc(cx, 0.0, r, m)
    }

    /// Polyline r(θ)·(cos θ, sin θ) + (cx, 0) for θ ∈ [0, π].
    pub fn radial(cx: f64, r: impl Fn(f64) -> f64, m: usize) -> Result<Self> {
        let nodes = (0..=m)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / m as f64;
                let rr = r(a);
                if i == 0 || i == m {
                    [cx + rr * a.cos().signum(), 0.0]
                } else {
                    [cx + rr * a.cos(), rr * a.sin()]
                }
            })
            .collect();
        Self::new(nodes, 0.0)
    }

    pub fn nodes(&self) -> &[P] {
        &self.nodes
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Number of edges M.
    pub fn edges(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Area enclosed between the curve and the floor.
    pub fn area(&self) -> f64 {
        let n = &self.nodes;
        let mut s = 0.0;
        for i in 0..n.len() {
            let a = n[i];
            let b = n[(i + 1) % n.len()];
            s += cross(a, b);
        }
        0.5 * s
    }

    /// Euclidean length of the free boundary.
    pub fn length(&self) -> f64 {
        self.nodes.windows(2).map(|w| len(sub(w[1], w[0]))).sum()
    }

    /// Σ Φ(outward edge normal)·|edge| over the free edges.
    pub fn perimeter_phi(&self, phi: &Anisotropy) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| {
                let d = sub(w[1], w[0]);
                phi.value(&[d[1], -d[0]])
            })
            .sum()
    }

    /// [left, right] contact points.
    pub fn contact(&self) -> (f64, f64) {
        (self.nodes[self.edges()][0], self.nodes[0][0])
    }

    /// P_Φ + ∫ β over the wetted interval (Simpson, 256 panels).
    pub fn capillary(&self, phi: &Anisotropy, beta: impl Fn(f64) -> f64) -> f64 {
        let (a, b) = self.contact();
        let k = 256;
        let h = (b - a) / k as f64;
        let mut s = beta(a) + beta(b);
        for i in 1..k {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * beta(a + i as f64 * h);
        }
        self.perimeter_phi(phi) + s * h / 3.0
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| len(sub(w[1], w[0]))).fold(f64::INFINITY, f64::min)
    }

    /// Unit outward normal at an interior node (central chord).
    fn normal(&self, i: usize) -> P {
        let d = sub(self.nodes[i + 1], self.nodes[i - 1]);
        let l = len(d);
        [d[1] / l, -d[0] / l]
    }

    /// Outward normals of the end edges, right then left.
    pub fn end_normals(&self) -> (P, P) {
        let m = self.edges();
        let unit = |d: P| {
            let l = len(d);
            [d[1] / l, -d[0] / l]
        };
        (unit(sub(self.nodes[1], self.nodes[0])), unit(sub(self.nodes[m], self.nodes[m - 1])))
    }

    /// ∇Φ(N)·e₂ + β at the right and left contact points.
    pub fn young_residual(&self, phi: &Anisotropy, beta: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
        let (nr, nl) = self.end_normals();
        let (l, r) = self.contact();
        Ok((phi.gradient(&nr)?[1] + beta(r), phi.gradient(&nl)?[1] + beta(l)))
    }

    /// Point-in-droplet test (closed by the floor).
    pub fn contains(&self, x: P) -> bool {
        if x[1] < 0.0 {
            return false;
        }
        let n = &self.nodes;
        let mut inside = false;
        let mut j = n.len() - 1;
        for i in 0..n.len() {
            let (a, b) = (n[i], n[j]);
            if (a[1] > x[1]) != (b[1] > x[1]) && x[0] < (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0] {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Distance to the free boundary.
    pub fn boundary_distance(&self, x: P) -> f64 {
        self.nodes.windows(2).map(|w| point_segment_distance(x, w[0], w[1])).fold(f64::INFINITY, f64::min)
    }

    /// Signed distance to the free boundary, negative inside.
    pub fn signed_distance(&self, x: P) -> f64 {
        let d = self.boundary_distance(x);
        if self.contains(x) {
            -d
        } else {
            d
        }
    }

    /// Cells whose centres lie inside the droplet.
    pub fn rasterize(&self, grid: &Arc<GridDomain>) -> Result<BinarySet> {
        if grid.dim() != 2 {
            return Err(Error::Dimension { expected: 2, got: grid.dim() });
        }
        Ok(BinarySet::from_predicate(grid, |x| self.contains([x[0], x[1]])))
    }

    /// Smallest distance between the free boundaries of two curves.
    pub fn boundary_gap(&self, other: &SmoothCurve) -> f64 {
        let a = self.nodes.iter().map(|p| other.boundary_distance(*p)).fold(f64::INFINITY, f64::min);
        let b = other.nodes.iter().map(|p| self.boundary_distance(*p)).fold(f64::INFINITY, f64::min);
        a.min(b)
    }

    /// Whether this droplet lies inside `other` with disjoint free boundaries.
    pub fn strictly_inside(&self, other: &SmoothCurve) -> bool {
        let (l, r) = self.contact();
        let (lo, ro) = other.contact();
        let m = self.edges();
        lo < l && r < ro && self.nodes[1..m].iter().all(|p| other.contains(*p)) && self.boundary_gap(other) > 0.0
    }

    /// First pair of non-adjacent edges that meet.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let n = &self.nodes;
        let m = n.len() - 1;
        let cell = n.windows(2).map(|w| len(sub(w[1], w[0]))).fold(0.0, f64::max).max(1e-300);
        let key = |v: f64| (v / cell).floor() as i64;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for e in 0..m {
            let (a, b) = (n[e], n[e + 1]);
            for kx in key(a[0].min(b[0]))..=key(a[0].max(b[0])) {
                for ky in key(a[1].min(b[1]))..=key(a[1].max(b[1])) {
                    buckets.entry((kx, ky)).or_default().push(e);
                }
            }
        }
        let mut hit: Option<(usize, usize)> = None;
        for list in buckets.values() {
            for (s, &i) in list.iter().enumerate() {
                for &j in &list[s + 1..] {
                    let (i, j) = (i.min(j), i.max(j));
                    if j == i + 1 {
                        continue;
                    }
                    if segments_meet(n[i], n[i + 1], n[j], n[j + 1]) && hit.map_or(true, |h| (i, j) < h) {
                        hit = Some((i, j));
                    }
                }
            }
        }
        hit
    }

    /// Two-column CSV with a time header.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# t = {}\nx,y\n", self.t);
        for p in &self.nodes {
            let _ = writeln!(s, "{},{}", p[0], p[1]);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut t = 0.0;
        let mut nodes = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("t =") {
                    t = v.trim().parse().map_err(|_| Error::Config(format!("bad time header: {line}")))?;
                }
                continue;
            }
            if line.starts_with('x') {
                continue;
            }
            let mut it = line.split(',').map(|v| v.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => nodes.push([x, y]),
                _ => return Err(Error::Config(format!("bad curve row: {line}"))),
            }
        }
        Self::new(nodes, t)
    }
}

/// Φ-curvature at an interior node, positive for convex droplets.
pub fn phi_curvature(curve: &SmoothCurve, phi: &Anisotropy, node: usize) -> Result<f64> {
    let m = curve.edges();
    if node == 0 || node >= m {
        return Err(Error::BoundaryNode(node));
    }
    let n = &curve.nodes;
    let a = sub(n[node], n[node - 1]);
    let b = sub(n[node + 1], n[node]);
    let c = sub(n[node + 1], n[node - 1]);
    let (la, lb, lc) = (len(a), len(b), len(c));
    if la == 0.0 || lb == 0.0 {
        return Err(Error::DegenerateSet(format!("node {node} coincides with a neighbour")));
    }
    let kappa = 2.0 * cross(a, b) / (la * lb * lc);
    Ok(stiffness(phi, curve.normal(node))? * kappa)
}

/// ∇²Φ(ν)τ̂·τ̂ with τ̂ = ν rotated by a quarter turn.
fn stiffness(phi: &Anisotropy, nu: P) -> Result<f64> {
    let h = phi.hessian(&nu)?;
    let t = [-nu[1], nu[0]];
    Ok(t[0] * (h[0][0] * t[0] + h[0][1] * t[1]) + t[1] * (h[1][0] * t[0] + h[1][1] * t[1]))
}

/// Solves ∇Φ(N(θ))·e₂ = −b for the normal angle θ in (lo, hi) by bisection.
fn young_angle(phi: &Anisotropy, b: f64, lo: f64, hi: f64) -> Result<P> {
    let g = |a: f64| -> Result<f64> { Ok(phi.gradient(&[a.cos(), a.sin()])?[1] + b) };
    let (mut a, mut z) = (lo, hi);
    let (ga, gz) = (g(a)?, g(z)?);
    if !(ga < 0.0 && gz > 0.0) && !(ga > 0.0 && gz < 0.0) {
        return Err(Error::Admissibility(format!(
            "Young's condition ∇Φ(N)·e₂ = {} has no root; need |β| < Φ(e₂) = {}",
            -b,
            phi.vertical()
        )));
    }
    let rising = ga < 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (a + z);
        if (g(mid)? < 0.0) == rising {
            a = mid;
        } else {
            z = mid;
        }
    }
    let th = 0.5 * (a + z);
    Ok([th.cos(), th.sin()])
}

/// Re-places both contact points so the end edges satisfy Young's law.
fn project_contacts(nodes: &mut [P], phi: &Anisotropy, beta: &impl Fn(f64) -> f64) -> Result<()> {
    let m = nodes.len() - 1;
    let eps = 1e-12;
    // Right end: normal angle in (−π/2, π/2), tangent (−N_y, N_x) points from p_0 to p_1.
    let p1 = nodes[1];
    let mut x = nodes[0][0];
    for _ in 0..16 {
        let nrm = young_angle(phi, beta(x), -FRAC_PI_2 + eps, FRAC_PI_2 - eps)?;
        let t = [-nrm[1], nrm[0]];
        let nx = p1[0] - p1[1] / t[1] * t[0];
        let done = (nx - x).abs() < 1e-14;
        x = nx;
        if done {
            break;
        }
    }
    nodes[0] = [x, 0.0];
    // Left end: normal angle in (π/2, 3π/2), tangent points from p_{M−1} to p_M.
    let q = nodes[m - 1];
    let mut x = nodes[m][0];
    for _ in 0..16 {
        let nrm = young_angle(phi, beta(x), FRAC_PI_2 + eps, 3.0 * FRAC_PI_2 - eps)?;
        let t = [-nrm[1], nrm[0]];
        let nx = q[0] - q[1] / t[1] * t[0];
        let done = (nx - x).abs() < 1e-14;
        x = nx;
        if done {
            break;
        }
    }
    nodes[m] = [x, 0.0];
    Ok(())
}

/// Redistributes the nodes uniformly in arclength along a cubic spline.
fn resample(nodes: &[P]) -> Vec<P> {
    let m = nodes.len() - 1;
    let mut s = vec![0.0; m + 1];
    for i in 1..=m {
        s[i] = s[i - 1] + len(sub(nodes[i], nodes[i - 1]));
    }
    let sx = NaturalSpline::new(s.clone(), nodes.iter().map(|p| p[0]).collect());
    let sy = NaturalSpline::new(s.clone(), nodes.iter().map(|p| p[1]).collect());
    let total = s[m];
    let mut out: Vec<P> = (0..=m)
        .map(|i| {
            let u = total * i as f64 / m as f64;
            [sx.eval(u).0, sy.eval(u).0]
        })
        .collect();
    out[0] = nodes[0];
    out[m] = nodes[m];
    out
}

/// Advances the curve by dt.
///
/// Interior nodes solve (p' − p)/dt = ψ(ν)·∂²ₛp' − f(t, p)ν with
/// ψ = ∇²Φ(ν)τ̂·τ̂ frozen at time t. Each contact point is eliminated through
/// the end edge, which keeps the Young direction frozen at time t; after
/// uniform arclength resampling the contact points are re-projected onto
/// Young's law exactly.
pub fn step_front(
    curve: &SmoothCurve,
    phi: &Anisotropy,
    beta: impl Fn(f64) -> f64,
    f: &ForcingField,
    dt: f64,
) -> Result<SmoothCurve> {
    if phi.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: phi.dim() });
    }
    let spacing = curve.min_spacing();
    if !(dt > 0.0 && dt <= FRONT_DT_FACTOR * spacing * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "dt = {dt} exceeds the stability bound {FRONT_DT_FACTOR}·{spacing:.3e}"
        )));
    }
    let m = curve.edges();
    let k = m - 1;
    // Young tangents frozen at the current contact points; T·(1, 0) = −N_y.
    let n = &curve.nodes;
    let mut slope = [0.0; 2];
    for (s, (end, lo)) in slope.iter_mut().zip([(0, -FRAC_PI_2), (m, FRAC_PI_2)]) {
        let nrm = young_angle(phi, beta(n[end][0]), lo + 1e-12, lo + std::f64::consts::PI - 1e-12)?;
        *s = -nrm[1] / nrm[0];
    }
    let (mut a, mut b, mut c) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let (mut dx, mut dy) = (vec![0.0; k], vec![0.0; k]);
    for r in 0..k {
        let i = r + 1;
        let hm = len(sub(n[i], n[i - 1]));
        let hp = len(sub(n[i + 1], n[i]));
        let turn = cross(sub(n[i], n[i - 1]), sub(n[i + 1], n[i])).atan2(
            (n[i][0] - n[i - 1][0]) * (n[i + 1][0] - n[i][0]) + (n[i][1] - n[i - 1][1]) * (n[i + 1][1] - n[i][1]),
        );
        if turn.abs() > MAX_TURN {
            return Err(Error::Topology(format!("resolution lost at node {i} (turning angle {turn:.3})")));
        }
        let nu = curve.normal(i);
        let psi = stiffness(phi, nu)?;
        let w = dt * psi * 2.0 / (hm + hp);
        a[r] = -w / hm;
        c[r] = -w / hp;
        b[r] = 1.0 + w / hm + w / hp;
        let fv = f.eval(curve.t, &n[i]);
        dx[r] = n[i][0] - dt * fv * nu[0];
        dy[r] = n[i][1] - dt * fv * nu[1];
    }
    // Endpoints stay on the floor, so the y-system has zero boundary data; the
    // x-system eliminates x₀ = x₁ − y₁·T_x/T_y (and likewise at the left end).
    let ys = solve_tridiagonal(&a, &b, &c, &dy);
    let shift = [ys[0] * slope[0], ys[k - 1] * slope[1]];
    let mut bx = b.clone();
    bx[0] += a[0];
    dx[0] += a[0] * shift[0];
    bx[k - 1] += c[k - 1];
    dx[k - 1] += c[k - 1] * shift[1];
    let xs = solve_tridiagonal(&a, &bx, &c, &dx);
    let mut next = Vec::with_capacity(m + 1);
    next.push([xs[0] - shift[0], 0.0]);
    next.extend((0..k).map(|r| [xs[r], ys[r]]));
    next.push([xs[k - 1] - shift[1], 0.0]);
    if let Some(i) = (1..m).find(|&i| next[i][1] <= 0.0) {
        return Err(Error::Topology(format!("interior node {i} reached the floor")));
    }
    project_contacts(&mut next, phi, &beta)?;
    let mut next = resample(&next);
    project_contacts(&mut next, phi, &beta)?;
    if let Some(i) = (1..m).find(|&i| next[i][1] <= 0.0) {
        return Err(Error::Topology(format!("interior node {i} reached the floor")));
    }
    let out = SmoothCurve { nodes: next, t: curve.t + dt };
    if !(out.area() > 0.0) || !(out.nodes[0][0] > out.nodes[m][0]) {
        return Err(Error::Topology("droplet vanished".into()));
    }
    if let Some((i, j)) = out.self_intersection() {
        return Err(Error::Topology(format!("edges {i} and {j} intersect")));
    }
    Ok(out)
}

/// Time stepping controls.
#[derive(Clone, Copy, Debug)]
pub struct FrontOptions {
    /// Upper bound on dt; the step also respects the stability bound.
    pub dt_max: f64,
    /// Spacing of the recorded samples.
    pub sample_dt: f64,
}

impl Default for FrontOptions {
    fn default() -> Self {
        Self { dt_max: 1e-4, sample_dt: 1e-2 }
    }
}

/// A front-tracking run: samples at multiples of `sample_dt`, plus the reason
/// the flow stopped early, if it did.
#[derive(Clone, Debug)]
pub struct FrontRun {
    pub samples: Vec<SmoothCurve>,
    pub steps: usize,
    pub stopped: Option<(f64, String)>,
}

impl FrontRun {
    pub fn last(&self) -> &SmoothCurve {
        self.samples.last().expect("a run holds its initial curve")
    }

    /// The sample closest to t.
    pub fn at_time(&self, t: f64) -> &SmoothCurve {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("a run holds its initial curve")
    }
}

fn sample_times(t0: f64, t_end: f64, every: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    let mut j = 1;
    loop {
        let s = t0 + j as f64 * every;
        if s >= t_end - 1e-12 {
            ts.push(t_end);
            break;
        }
        ts.push(s);
        j += 1;
    }
    ts
}

fn next_dt(curve: &SmoothCurve, opts: &FrontOptions, target: f64) -> f64 {
    let dt = opts.dt_max.min(FRONT_DT_FACTOR * curve.min_spacing());
    let rest = target - curve.t;
    if rest <= dt * (1.0 + 1e-9) {
        rest
    } else if rest < 2.0 * dt {
        0.5 * rest
    } else {
        dt
    }
}

/// Evolves until `t_end` or until the flow stops (topology change, floor
/// contact, resolution loss or extinction).
pub fn run_front(
    curve: &SmoothCurve,
    phi: &Anisotropy,
    beta: impl Fn(f64) -> f64,
    f: &ForcingField,
    t_end: f64,
    opts: &FrontOptions,
) -> Result<FrontRun> {
    if !(opts.dt_max > 0.0 && opts.sample_dt > 0.0) {
        return Err(Error::Precondition("dt_max and sample_dt must be positive".into()));
    }
    let mut run = FrontRun { samples: vec![curve.clone()], steps: 0, stopped: None };
    let mut cur = curve.clone();
    for target in sample_times(curve.t, t_end, opts.sample_dt) {
        while cur.t < target - 1e-14 {
            let dt = next_dt(&cur, opts, target);
            match step_front(&cur, phi, &beta, f, dt) {
                Ok(next) => cur = next,
                Err(Error::Topology(msg)) => {
                    log::info!("front stopped at t = {:.6}: {msg}", cur.t);
                    run.stopped = Some((cur.t, msg));
                    run.samples.push(cur);
                    return Ok(run);
                }
                Err(e) => return Err(e),
            }
            run.steps += 1;
        }
        run.samples.push(cur.clone());
    }
    Ok(run)
}

/// Gaps between two fronts evolved in lockstep.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    /// Distance between the free boundaries at each sampled time.
    pub gaps: Vec<f64>,
    /// Whether A was strictly inside B at each sampled time.
    pub inside: Vec<bool>,
    /// First time either flow stopped, and why.
    pub stopped: Option<(f64, String)>,
}

impl ComparisonReport {
    /// Strict ordering at every sample after the initial one.
    pub fn nested(&self) -> bool {
        self.inside.iter().skip(1).all(|v| *v)
    }

    pub fn min_gap(&self) -> f64 {
        self.gaps.iter().skip(1).copied().fold(f64::INFINITY, f64::min)
    }
}

/// Evolves A and B with a common dt and measures their separation, without
/// requiring any initial ordering.
#[allow(clippy::too_many_arguments)]
pub fn compare_fronts(
    a: &SmoothCurve,
    b: &SmoothCurve,
    phi: &Anisotropy,
    beta_a: impl Fn(f64) -> f64,
    beta_b: impl Fn(f64) -> f64,
    f_a: &ForcingField,
    f_b: &ForcingField,
    t_end: f64,
    opts: &FrontOptions,
) -> Result<ComparisonReport> {
    let mut rep = ComparisonReport {
        times: vec![a.t],
        gaps: vec![a.boundary_gap(b)],
        inside: vec![a.strictly_inside(b)],
        stopped: None,
    };
    let (mut ca, mut cb) = (a.clone(), b.clone());
    for target in sample_times(a.t, t_end, opts.sample_dt) {
        while ca.t < target - 1e-14 {
            let dt = next_dt(&ca, opts, target).min(next_dt(&cb, opts, target));
            let na = step_front(&ca, phi, &beta_a, f_a, dt);
            let nb = step_front(&cb, phi, &beta_b, f_b, dt);
            match (na, nb) {
                (Ok(x), Ok(y)) => {
                    ca = x;
                    cb = SmoothCurve { t: ca.t, ..y };
                }
                (Err(Error::Topology(msg)), _) => {
                    rep.stopped = Some((ca.t, format!("A: {msg}")));
                    return Ok(rep);
                }
                (_, Err(Error::Topology(msg))) => {
                    rep.stopped = Some((ca.t, format!("B: {msg}")));
                    return Ok(rep);
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        rep.times.push(ca.t);
        rep.gaps.push(ca.boundary_gap(&cb));
        rep.inside.push(ca.strictly_inside(&cb));
    }
    Ok(rep)
}

/// Strong comparison experiment: A ≺ B initially with β_A ≥ β_B and f_A ≥ f_B
/// (checked at the nodes and on a floor sample); the report says whether the
/// ordering survived.
#[allow(clippy::too_many_arguments)]
pub fn strong_comparison_check(
    a: &SmoothCurve,
    b: &SmoothCurve,
    phi: &Anisotropy,
    beta_a: impl Fn(f64) -> f64,
    beta_b: impl Fn(f64) -> f64,
    f_a: &ForcingField,
    f_b: &ForcingField,
    t_end: f64,
    opts: &FrontOptions,
) -> Result<ComparisonReport> {
    if !a.strictly_inside(b) {
        return Err(Error::Precondition("initial droplets are not strictly nested with a positive gap".into()));
    }
    let (lo, hi) = b.contact();
    if (0..=64).map(|i| lo + (hi - lo) * i as f64 / 64.0).any(|x| beta_a(x) < beta_b(x)) {
        return Err(Error::Precondition("need β_A ≥ β_B on the floor".into()));
    }
    if b.nodes.iter().chain(&a.nodes).any(|p| f_a.eval(a.t, p) < f_b.eval(a.t, p)) {
        return Err(Error::Precondition("need f_A ≥ f_B".into()));
    }
    compare_fronts(a, b, phi, beta_a, beta_b, f_a, f_b, t_end, opts)
}
