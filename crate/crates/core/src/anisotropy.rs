//! Anisotropies Φ, their duals Φ°, and ellipticity certification.
//!
//! Every kind is even and positively one-homogeneous. Evaluators come in two
//! flavours: checked (`eval`, `gradient`, `hessian`) that validate the input
//! dimension, and unchecked (`value`) for inner loops.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spline::{NaturalSpline, PeriodicSpline};

/// Tolerance below which a sampled tangential Hessian counts as degenerate.
pub const ELLIPTIC_TOL: f64 = 1e-8;

/// Local-ascent stopping rule for the dual.
const ASCENT_TOL: f64 = 1e-10;
const ASCENT_MAX_ITER: usize = 200;
const COARSE_2D: usize = 256;
const COARSE_3D: usize = 2048;
/// Dense fallback resolution when the local ascent fails to converge.
pub const FALLBACK_2D: usize = 8192;
pub const FALLBACK_3D: usize = 160_000;
/// Number of directions in the cached planar dual table.
const DUAL_TABLE_2D: usize = 8192;

/// Anything that behaves like a norm on ℝⁿ.
pub trait Norm: Send + Sync {
    fn dim(&self) -> usize;
    fn norm(&self, x: &[f64]) -> f64;
}

#[derive(Clone, Debug)]
pub enum AnisotropyKind {
    Euclidean,
    /// Φ(x) = |Ax| with A symmetric positive definite.
    LinearMap(Vec<Vec<f64>>),
    /// Φ(x) = Σ sqrt(x_i² + ε²|x|²). ε = 0 is the crystalline ℓ¹ norm.
    SmoothedL1 { eps: f64 },
    Tabulated(Tabulated),
}

impl PartialEq for AnisotropyKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Euclidean, Self::Euclidean) => true,
            (Self::LinearMap(a), Self::LinearMap(b)) => a == b,
            (Self::SmoothedL1 { eps: a }, Self::SmoothedL1 { eps: b }) => a == b,
            (Self::Tabulated(a), Self::Tabulated(b)) => a.samples == b.samples,
            _ => false,
        }
    }
}

/// Samples of Φ on the unit sphere, interpolated in log Φ.
#[derive(Clone, Debug)]
pub struct Tabulated {
    /// Raw rows as given: (angle, value) for n = 2, (azimuth, polar, value) for n = 3.
    samples: Vec<Vec<f64>>,
    interp: TabInterp,
}

#[derive(Clone, Debug)]
enum TabInterp {
    /// Period π after symmetrization.
    Planar(PeriodicSpline),
    /// Periodic in azimuth for every polar knot, natural across polar knots.
    Spherical { polar: Vec<f64>, rows: Vec<PeriodicSpline> },
}

impl Tabulated {
    fn log_value(&self, x: &[f64]) -> f64 {
        match &self.interp {
            TabInterp::Planar(s) => s.eval(x[1].atan2(x[0])).0,
            TabInterp::Spherical { polar, rows } => {
                let r = norm2(x);
                let az = x[1].atan2(x[0]);
                let po = (x[2] / r).clamp(-1.0, 1.0).acos();
                let col: Vec<f64> = rows.iter().map(|s| s.eval(az).0).collect();
                NaturalSpline::new(polar.clone(), col).eval(po).0
            }
        }
    }

    fn planar(angles: &[f64], values: &[f64]) -> Result<Self> {
        if angles.len() != values.len() || angles.len() < 3 {
            return Err(Error::InvalidAnisotropy("need at least 3 (angle, value) samples".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidAnisotropy("tabulated values must be positive".into()));
        }
        // Fold onto [0, π); samples at θ and θ + π are averaged in log.
        let mut folded: Vec<(f64, f64)> =
            angles.iter().zip(values).map(|(a, v)| (a.rem_euclid(PI), v.ln())).collect();
        folded.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots: Vec<(f64, f64, usize)> = Vec::new();
        for (a, l) in folded {
            match knots.last_mut() {
                Some(k) if (a - k.0).abs() < 1e-9 => {
                    k.1 += l;
                    k.2 += 1;
                }
                _ => knots.push((a, l, 1)),
            }
        }
        if let (Some(first), Some(last)) = (knots.first().copied(), knots.last().copied()) {
            if knots.len() > 1 && (first.0 + PI - last.0) < 1e-9 {
                knots[0].1 += last.1;
                knots[0].2 += last.2;
                knots.pop();
            }
        }
        if knots.len() < 3 {
            return Err(Error::InvalidAnisotropy("fewer than 3 distinct directions modulo π".into()));
        }
        let x = knots.iter().map(|k| k.0).collect();
        let y = knots.iter().map(|k| k.1 / k.2 as f64).collect();
        let samples = angles.iter().zip(values).map(|(a, v)| vec![*a, *v]).collect();
        Ok(Self { samples, interp: TabInterp::Planar(PeriodicSpline::new(x, y, PI)) })
    }

    fn spherical(rows: &[[f64; 3]]) -> Result<Self> {
        let mut az: Vec<f64> = rows.iter().map(|r| r[0].rem_euclid(2.0 * PI)).collect();
        let mut po: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        dedup_sorted(&mut az);
        dedup_sorted(&mut po);
        if az.len() < 4 || po.len() < 3 || az.len() * po.len() != rows.len() {
            return Err(Error::InvalidAnisotropy(
                "n = 3 table must be a full tensor grid (azimuth × polar) with ≥ 4 × 3 nodes".into(),
            ));
        }
        if po[0] < -1e-12 || po[po.len() - 1] > PI + 1e-12 {
            return Err(Error::InvalidAnisotropy("polar angles must lie in [0, π]".into()));
        }
        let mut grid = vec![vec![f64::NAN; az.len()]; po.len()];
        for r in rows {
            if !(r[2].is_finite() && r[2] > 0.0) {
                return Err(Error::InvalidAnisotropy("tabulated values must be positive".into()));
            }
            let i = nearest(&az, r[0].rem_euclid(2.0 * PI));
            let j = nearest(&po, r[1]);
            grid[j][i] = r[2].ln();
        }
        if grid.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::InvalidAnisotropy("duplicate nodes in n = 3 table".into()));
        }
        let build = |g: &Vec<Vec<f64>>| TabInterp::Spherical {
            polar: po.clone(),
            rows: g.iter().map(|row| PeriodicSpline::new(az.clone(), row.clone(), 2.0 * PI)).collect(),
        };
        let raw = Self {
            samples: Vec::new(),
            interp: build(&grid),
        };
        // Evenness: average every node with the interpolated antipode.
        let mut sym = grid.clone();
        for (j, p) in po.iter().enumerate() {
            for (i, a) in az.iter().enumerate() {
                let u = sph(*a, *p);
                let anti = raw.log_value(&[-u[0], -u[1], -u[2]]);
                sym[j][i] = 0.5 * (grid[j][i] + anti);
            }
        }
        Ok(Self {
            samples: rows.iter().map(|r| r.to_vec()).collect(),
            interp: build(&sym),
        })
    }
}

fn dedup_sorted(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
}

fn nearest(v: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, y) in v.iter().enumerate() {
        if (y - x).abs() < (v[best] - x).abs() {
            best = i;
        }
    }
    best
}

fn sph(az: f64, po: f64) -> [f64; 3] {
    [po.sin() * az.cos(), po.sin() * az.sin(), po.cos()]
}

#[derive(Debug)]
struct Inner {
    n: usize,
    kind: AnisotropyKind,
    /// AᵀA and A⁻¹ for the linear kind.
    gram: Option<Vec<Vec<f64>>>,
    inv: Option<Vec<Vec<f64>>>,
}

/// An even, positively one-homogeneous convex norm Φ on ℝⁿ, n ∈ {2, 3}.
#[derive(Clone, Debug)]
pub struct Anisotropy {
    inner: Arc<Inner>,
    pub c_lower: f64,
    pub c_upper: f64,
    pub ellipticity_gamma: Option<f64>,
}

impl PartialEq for Anisotropy {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.kind == other.inner.kind)
    }
}

impl Anisotropy {
    fn build(n: usize, kind: AnisotropyKind) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        let (gram, inv) = match &kind {
            AnisotropyKind::LinearMap(a) => {
                if a.len() != n || a.iter().any(|r| r.len() != n) {
                    return Err(Error::Dimension { expected: n, got: a.len() });
                }
                for i in 0..n {
                    for j in 0..n {
                        if (a[i][j] - a[j][i]).abs() > 1e-12 * (1.0 + a[i][j].abs()) {
                            return Err(Error::InvalidAnisotropy("matrix is not symmetric".into()));
                        }
                    }
                }
                if !is_positive_definite(a) {
                    return Err(Error::InvalidAnisotropy("matrix is not positive definite".into()));
                }
                (Some(mat_mul(a, a)), Some(mat_inv(a)))
            }
            AnisotropyKind::SmoothedL1 { eps } if !(eps.is_finite() && *eps >= 0.0) => {
                return Err(Error::InvalidAnisotropy(format!("smoothing parameter {eps} must be ≥ 0")));
            }
            _ => (None, None),
        };
        let mut phi = Self {
            inner: Arc::new(Inner { n, kind, gram, inv }),
            c_lower: 0.0,
            c_upper: 0.0,
            ellipticity_gamma: None,
        };
        let (lo, hi) = phi.norm_bounds();
        phi.c_lower = lo;
        phi.c_upper = hi;
        if phi.is_c2() {
            let res = if n == 2 { 1024 } else { 64 };
            let cert = phi.certify_ellipticity(res)?;
            phi.ellipticity_gamma = cert.elliptic.then_some(cert.gamma);
        }
        Ok(phi)
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::build(n, AnisotropyKind::Euclidean)
    }

    pub fn linear_map(a: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.len();
        Self::build(n, AnisotropyKind::LinearMap(a))
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        let a = (0..d.len())
            .map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect())
            .collect();
        Self::linear_map(a)
    }

    pub fn smoothed_l1(n: usize, eps: f64) -> Result<Self> {
        Self::build(n, AnisotropyKind::SmoothedL1 { eps })
    }

    /// Planar table of (angle, Φ(cos, sin)) samples.
    pub fn tabulated_2d(angles: &[f64], values: &[f64]) -> Result<Self> {
        Self::build(2, AnisotropyKind::Tabulated(Tabulated::planar(angles, values)?))
    }

    /// Spherical table of (azimuth, polar, Φ) samples on a tensor grid.
    pub fn tabulated_3d(rows: &[[f64; 3]]) -> Result<Self> {
        Self::build(3, AnisotropyKind::Tabulated(Tabulated::spherical(rows)?))
    }

    /// Reads a whitespace-separated table: two columns for n = 2, three for n = 3.
    /// Lines starting with `#` are ignored.
    pub fn from_table_file(path: &Path, n: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let vals = vals.map_err(|e| Error::Format {
                path: path.to_path_buf(),
                msg: format!("line {}: {e}", lineno + 1),
            })?;
            if vals.len() != n {
                return Err(Error::Dimension { expected: n, got: vals.len() });
            }
            rows.push(vals);
        }
        match n {
            2 => {
                let a: Vec<f64> = rows.iter().map(|r| r[0]).collect();
                let v: Vec<f64> = rows.iter().map(|r| r[1]).collect();
                Self::tabulated_2d(&a, &v)
            }
            3 => {
                let r: Vec<[f64; 3]> = rows.iter().map(|r| [r[0], r[1], r[2]]).collect();
                Self::tabulated_3d(&r)
            }
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.n
    }

    pub fn kind(&self) -> &AnisotropyKind {
        &self.inner.kind
    }

    /// False only for the crystalline ℓ¹ norm (ε = 0).
    pub fn is_c2(&self) -> bool {
        !matches!(self.inner.kind, AnisotropyKind::SmoothedL1 { eps } if eps == 0.0)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inner.n {
            return Err(Error::Dimension { expected: self.inner.n, got: x.len() });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.value(x))
    }

    /// Φ(x) without the dimension check.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.inner.n);
        match &self.inner.kind {
            AnisotropyKind::Euclidean => norm2(x),
            AnisotropyKind::LinearMap(a) => norm2(&mat_vec(a, x)),
            AnisotropyKind::SmoothedL1 { eps } => {
                let e2r2 = eps * eps * dot(x, x);
                x.iter().map(|xi| (xi * xi + e2r2).sqrt()).sum()
            }
            AnisotropyKind::Tabulated(t) => {
                let r = norm2(x);
                if r == 0.0 {
                    0.0
                } else {
                    r * t.log_value(x).exp()
                }
            }
        }
    }

    /// Φ(e_n), the vertical normal value that bounds admissible β.
    pub fn vertical(&self) -> f64 {
        let mut e = vec![0.0; self.inner.n];
        e[self.inner.n - 1] = 1.0;
        self.value(&e)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::SingularPoint);
        }
        Ok(match &self.inner.kind {
            AnisotropyKind::Euclidean => {
                let r = norm2(x);
                x.iter().map(|v| v / r).collect()
            }
            AnisotropyKind::LinearMap(a) => {
                let ax = mat_vec(a, x);
                let p = norm2(&ax);
                mat_vec(a, &ax).iter().map(|v| v / p).collect()
            }
            AnisotropyKind::SmoothedL1 { eps } => {
                let e2 = eps * eps;
                let e2r2 = e2 * dot(x, x);
                let s: Vec<f64> = x.iter().map(|xi| (xi * xi + e2r2).sqrt()).collect();
                if s.iter().any(|v| *v == 0.0) {
                    return Err(Error::NotSmooth("ℓ¹ norm on a coordinate hyperplane".into()));
                }
                let sum_inv: f64 = s.iter().map(|v| 1.0 / v).sum();
                (0..x.len()).map(|j| x[j] / s[j] + e2 * x[j] * sum_inv).collect()
            }
            AnisotropyKind::Tabulated(t) => match &t.interp {
                TabInterp::Planar(sp) => {
                    let (g, g1, _) = polar_profile(sp, x);
                    let r = norm2(x);
                    let (c, s) = (x[0] / r, x[1] / r);
                    vec![g * c - g1 * s, g * s + g1 * c]
                }
                TabInterp::Spherical { .. } => fd_gradient(|y| self.value(y), x),
            },
        })
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(x)?;
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::SingularPoint);
        }
        let n = self.inner.n;
        Ok(match &self.inner.kind {
            AnisotropyKind::Euclidean => {
                let r = norm2(x);
                outer_proj(x, r, &identity(n))
            }
            AnisotropyKind::LinearMap(_) => {
                let m = self.inner.gram.as_ref().expect("linear kind caches AᵀA");
                let mx = mat_vec(m, x);
                let p2 = dot(x, &mx);
                let p = p2.sqrt();
                (0..n)
                    .map(|i| (0..n).map(|j| (m[i][j] - mx[i] * mx[j] / p2) / p).collect())
                    .collect()
            }
            AnisotropyKind::SmoothedL1 { eps } => {
                if *eps == 0.0 {
                    return Err(Error::NotSmooth("crystalline ℓ¹ norm has flat facets".into()));
                }
                let e2 = eps * eps;
                let e2r2 = e2 * dot(x, x);
                let mut h = vec![vec![0.0; n]; n];
                for i in 0..n {
                    let s = (x[i] * x[i] + e2r2).sqrt();
                    // ∂s_i/∂x_j = (x_i δ_ij + ε² x_j)/s_i
                    let d: Vec<f64> =
                        (0..n).map(|j| (if i == j { x[i] } else { 0.0 } + e2 * x[j]) / s).collect();
                    for j in 0..n {
                        for k in 0..n {
                            let dd = if i == j && i == k { 1.0 } else { 0.0 } + if j == k { e2 } else { 0.0 };
                            h[j][k] += dd / s - d[j] * d[k] / s;
                        }
                    }
                }
                h
            }
            AnisotropyKind::Tabulated(t) => match &t.interp {
                TabInterp::Planar(sp) => {
                    let (g, _, g2) = polar_profile(sp, x);
                    let r = norm2(x);
                    let tv = [-x[1] / r, x[0] / r];
                    let k = (g + g2) / r;
                    vec![vec![k * tv[0] * tv[0], k * tv[0] * tv[1]], vec![k * tv[1] * tv[0], k * tv[1] * tv[1]]]
                }
                TabInterp::Spherical { .. } => fd_hessian(|y| self.value(y), x),
            },
        })
    }

    /// (min, max) of Φ over a dense unit-sphere sample.
    pub fn norm_bounds(&self) -> (f64, f64) {
        self.norm_bounds_at(if self.inner.n == 2 { 4096 } else { 20_000 })
    }

    pub fn norm_bounds_at(&self, resolution: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for u in sphere_sample(self.inner.n, resolution) {
            let v = self.value(&u);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Minimum over sampled unit x ⟂ unit y of ∇²Φ(x)y·y, plus a curvature
    /// check of the Wulff boundary in the plane.
    pub fn certify_ellipticity(&self, sphere_resolution: usize) -> Result<EllipticityReport> {
        if sphere_resolution < 16 {
            return Err(Error::Resolution { got: sphere_resolution, min: 16 });
        }
        if !self.is_c2() {
            return Ok(EllipticityReport {
                elliptic: false,
                gamma: 0.0,
                smooth: false,
                wulff_curvature: None,
                agreement: true,
            });
        }
        let n = self.inner.n;
        let mut gamma = f64::INFINITY;
        if n == 2 {
            for i in 0..sphere_resolution {
                let t = PI * i as f64 / sphere_resolution as f64;
                let x = [t.cos(), t.sin()];
                let y = [-t.sin(), t.cos()];
                let h = self.hessian(&x)?;
                gamma = gamma.min(quad(&h, &y));
            }
        } else {
            for x in fibonacci_sphere(sphere_resolution * sphere_resolution / 2) {
                let (a, b) = tangent_frame(&x);
                let h = self.hessian(&x)?;
                // Smallest eigenvalue of the 2×2 tangential block.
                let (p, q, r) = (quad(&h, &a), bilinear(&h, &a, &b), quad(&h, &b));
                let lam = 0.5 * (p + r) - (0.25 * (p - r) * (p - r) + q * q).sqrt();
                gamma = gamma.min(lam);
            }
        }
        let elliptic = gamma > ELLIPTIC_TOL;
        let wulff_curvature = (n == 2).then(|| self.wulff_curvature_range(sphere_resolution.max(256)));
        let agreement = match wulff_curvature {
            Some((kmin, kmax)) => elliptic == (kmin > 1e-6 * kmax.max(1.0)),
            None => true,
        };
        Ok(EllipticityReport {
            elliptic,
            gamma,
            smooth: true,
            wulff_curvature,
            agreement,
        })
    }

    /// Menger curvature bounds of the planar Wulff polygon. Both are positive
    /// and finite iff interior and exterior balls of uniform radius exist.
    fn wulff_curvature_range(&self, resolution: usize) -> (f64, f64) {
        let dual = DualAnisotropy::new(self.clone());
        let pts: Vec<[f64; 2]> = (0..resolution)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / resolution as f64;
                let u = [t.cos(), t.sin()];
                let d = dual.value(&u);
                [u[0] / d, u[1] / d]
            })
            .collect();
        let mut kmin = f64::INFINITY;
        let mut kmax = 0.0f64;
        for i in 0..resolution {
            let a = pts[(i + resolution - 1) % resolution];
            let b = pts[i];
            let c = pts[(i + 1) % resolution];
            let k = menger(a, b, c);
            kmin = kmin.min(k);
            kmax = kmax.max(k);
        }
        (kmin, kmax)
    }

    pub fn dual(&self) -> DualAnisotropy {
        DualAnisotropy::new(self.clone())
    }
}

impl Norm for Anisotropy {
    fn dim(&self) -> usize {
        self.inner.n
    }
    fn norm(&self, x: &[f64]) -> f64 {
        self.value(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticityReport {
    pub elliptic: bool,
    pub gamma: f64,
    /// False when the anisotropy is not C² away from the origin.
    pub smooth: bool,
    /// (min, max) Menger curvature of the planar Wulff boundary.
    pub wulff_curvature: Option<(f64, f64)>,
    /// Whether the Hessian test and the ball condition agree.
    pub agreement: bool,
}

/// Result of a direct dual evaluation by maximization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualEval {
    pub value: f64,
    /// Φ-unit maximizer y with x·y = Φ°(x).
    pub argmax_dir: [f64; 3],
    /// Dense-sampling resolution used if the local ascent did not converge.
    pub fallback: Option<usize>,
}

/// The dual norm Φ°(x) = max{x·y : Φ(y) ≤ 1}.
#[derive(Clone, Debug)]
pub struct DualAnisotropy {
    base: Anisotropy,
    table: Option<Arc<PeriodicSpline>>,
}

impl DualAnisotropy {
    pub fn new(base: Anisotropy) -> Self {
        let table = match (&base.inner.kind, base.inner.n) {
            (AnisotropyKind::SmoothedL1 { .. } | AnisotropyKind::Tabulated(_), 2) => {
                let logs = (0..DUAL_TABLE_2D)
                    .map(|i| {
                        let t = PI * i as f64 / DUAL_TABLE_2D as f64;
                        maximize_2d(&base, [t.cos(), t.sin()]).value.ln()
                    })
                    .collect();
                Some(Arc::new(PeriodicSpline::uniform(0.0, PI, logs)))
            }
            _ => None,
        };
        Self { base, table }
    }

    pub fn base(&self) -> &Anisotropy {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.inner.n
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.base.check(x)?;
        Ok(self.value(x))
    }

    /// Φ°(x): closed form for Euclidean and linear kinds, the cached
    /// interpolation table for other planar kinds, direct ascent otherwise.
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.base.inner.kind {
            AnisotropyKind::Euclidean => norm2(x),
            AnisotropyKind::LinearMap(_) => {
                norm2(&mat_vec(self.base.inner.inv.as_ref().expect("linear kind caches A⁻¹"), x))
            }
            _ => {
                let r = norm2(x);
                if r == 0.0 {
                    return 0.0;
                }
                match &self.table {
                    Some(t) => r * t.eval(x[1].atan2(x[0])).0.exp(),
                    None => self.maximize(x).value,
                }
            }
        }
    }

    /// Φ° by direct maximization of x·u/Φ(u), ignoring closed forms and tables.
    pub fn maximize(&self, x: &[f64]) -> DualEval {
        support(&self.base, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.base.check(x)?;
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::SingularPoint);
        }
        Ok(match (&self.base.inner.kind, &self.table) {
            (AnisotropyKind::Euclidean, _) => {
                let r = norm2(x);
                x.iter().map(|v| v / r).collect()
            }
            (AnisotropyKind::LinearMap(_), _) => {
                let inv = self.base.inner.inv.as_ref().expect("linear kind caches A⁻¹");
                let y = mat_vec(inv, x);
                let d = norm2(&y);
                mat_vec(inv, &y).iter().map(|v| v / d).collect()
            }
            (_, Some(t)) => {
                let (g, g1, _) = polar_profile(t, x);
                let r = norm2(x);
                let (c, s) = (x[0] / r, x[1] / r);
                vec![g * c - g1 * s, g * s + g1 * c]
            }
            // ∇Φ°(x) is the Φ-unit maximizer.
            _ => {
                let e = self.maximize(x);
                e.argmax_dir[..self.dim()].to_vec()
            }
        })
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.base.check(x)?;
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::SingularPoint);
        }
        let n = self.dim();
        Ok(match (&self.base.inner.kind, &self.table) {
            (AnisotropyKind::Euclidean, _) => outer_proj(x, norm2(x), &identity(n)),
            (AnisotropyKind::LinearMap(_), _) => {
                let inv = self.base.inner.inv.as_ref().expect("linear kind caches A⁻¹");
                let m = mat_mul(inv, inv);
                let mx = mat_vec(&m, x);
                let p2 = dot(x, &mx);
                let p = p2.sqrt();
                (0..n)
                    .map(|i| (0..n).map(|j| (m[i][j] - mx[i] * mx[j] / p2) / p).collect())
                    .collect()
            }
            (_, Some(t)) => {
                let (g, _, g2) = polar_profile(t, x);
                let r = norm2(x);
                let tv = [-x[1] / r, x[0] / r];
                let k = (g + g2) / r;
                vec![vec![k * tv[0] * tv[0], k * tv[0] * tv[1]], vec![k * tv[1] * tv[0], k * tv[1] * tv[1]]]
            }
            _ => fd_hessian(|y| self.value(y), x),
        })
    }

    /// (Φ°)°(x), by maximizing x·u/Φ°(u) over the sphere.
    pub fn bidual(&self, x: &[f64]) -> f64 {
        support(self, x).value
    }

    /// The point of ∂W^Φ in direction u.
    pub fn wulff_boundary_point(&self, u: &[f64]) -> Vec<f64> {
        let d = self.value(u);
        u.iter().map(|v| v / d).collect()
    }
}

impl Norm for DualAnisotropy {
    fn dim(&self) -> usize {
        self.base.inner.n
    }
    fn norm(&self, x: &[f64]) -> f64 {
        self.value(x)
    }
}

/// sup over unit u of x·u/N(u), the dual of an arbitrary norm N.
pub fn support<N: Norm + ?Sized>(norm: &N, x: &[f64]) -> DualEval {
    let r = norm2(x);
    if r == 0.0 {
        return DualEval { value: 0.0, argmax_dir: [0.0; 3], fallback: None };
    }
    match norm.dim() {
        2 => maximize_2d(norm, [x[0], x[1]]),
        _ => maximize_3d(norm, [x[0], x[1], x[2]]),
    }
}

fn maximize_2d<N: Norm + ?Sized>(norm: &N, x: [f64; 2]) -> DualEval {
    let obj = |t: f64| {
        let u = [t.cos(), t.sin()];
        (x[0] * u[0] + x[1] * u[1]) / norm.norm(&u)
    };
    let coarse = |m: usize| {
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..m {
            let v = obj(2.0 * PI * i as f64 / m as f64);
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    };
    let finish = |t: f64, v: f64, fallback| {
        let u = [t.cos(), t.sin()];
        let p = norm.norm(&u);
        DualEval { value: v, argmax_dir: [u[0] / p, u[1] / p, 0.0], fallback }
    };
    let (i, _) = coarse(COARSE_2D);
    let step = 2.0 * PI / COARSE_2D as f64;
    let t0 = i as f64 * step;
    match golden(&obj, t0 - step, t0 + step) {
        Some((t, v)) => finish(t, v, None),
        None => {
            let (j, v) = coarse(FALLBACK_2D);
            finish(2.0 * PI * j as f64 / FALLBACK_2D as f64, v, Some(FALLBACK_2D))
        }
    }
}

/// Golden-section maximization on [a, b]. `None` if the bracket did not
/// shrink below the tolerance or the maximum sits on the bracket edge.
fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (lo, hi) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..ASCENT_MAX_ITER {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        let best = fc.max(fd);
        if (best - prev).abs() < ASCENT_TOL * best.abs().max(1.0) && (b - a) < 1e-6 {
            let t = if fc > fd { c } else { d };
            let edge = 1e-9 * (hi - lo);
            if t - lo < edge || hi - t < edge {
                return None;
            }
            return Some((t, best));
        }
        prev = best;
    }
    None
}

fn maximize_3d<N: Norm + ?Sized>(norm: &N, x: [f64; 3]) -> DualEval {
    let obj = |u: &[f64; 3]| dot(&x, u) / norm.norm(u);
    let scan = |m: usize| {
        let mut best = ([0.0; 3], f64::NEG_INFINITY);
        for u in fibonacci_sphere(m) {
            let u = [u[0], u[1], u[2]];
            let v = obj(&u);
            if v > best.1 {
                best = (u, v);
            }
        }
        best
    };
    let finish = |u: [f64; 3], v: f64, fallback| {
        let p = norm.norm(&u);
        DualEval { value: v, argmax_dir: [u[0] / p, u[1] / p, u[2] / p], fallback }
    };
    let (mut u, mut v) = scan(COARSE_3D);
    // Pattern search in the tangent plane, step halving.
    let mut step = (4.0 * PI / COARSE_3D as f64).sqrt();
    let mut converged = false;
    for _ in 0..ASCENT_MAX_ITER * 4 {
        let (a, b) = tangent_frame(&u);
        let mut improved = false;
        for (da, db) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let mut w = [0.0; 3];
            for k in 0..3 {
                w[k] = u[k] + step * (da * a[k] + db * b[k]);
            }
            let r = norm2(&w);
            let w = [w[0] / r, w[1] / r, w[2] / r];
            let vw = obj(&w);
            if vw > v {
                u = w;
                v = vw;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-8 {
                converged = true;
                break;
            }
        }
    }
    if converged {
        finish(u, v, None)
    } else {
        let (u, v) = scan(FALLBACK_3D);
        finish(u, v, Some(FALLBACK_3D))
    }
}

/// (g, g', g'') for Φ(x) = |x|·g(θ) with g = exp(s(θ)).
fn polar_profile(s: &PeriodicSpline, x: &[f64]) -> (f64, f64, f64) {
    let (l, l1, l2) = s.eval(x[1].atan2(x[0]));
    let g = l.exp();
    (g, g * l1, g * (l2 + l1 * l1))
}

/// Uniform angles in 2-D, Fibonacci lattice in 3-D.
pub fn sphere_sample(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        (0..resolution)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / resolution as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()
    } else {
        fibonacci_sphere(resolution)
    }
}

pub fn fibonacci_sphere(m: usize) -> Vec<Vec<f64>> {
    let ga = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
            let r = (1.0 - z * z).sqrt();
            let t = ga * i as f64;
            vec![r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Orthonormal basis of the plane orthogonal to unit `x`.
fn tangent_frame(x: &[f64]) -> ([f64; 3], [f64; 3]) {
    let pick = if x[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(&pick, x);
    let mut a = [pick[0] - d * x[0], pick[1] - d * x[1], pick[2] - d * x[2]];
    let r = norm2(&a);
    a.iter_mut().for_each(|v| *v /= r);
    let b = [x[1] * a[2] - x[2] * a[1], x[2] * a[0] - x[0] * a[2], x[0] * a[1] - x[1] * a[0]];
    (a, b)
}

fn menger(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let ab = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let bc = ((c[0] - b[0]).powi(2) + (c[1] - b[1]).powi(2)).sqrt();
    let ca = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
    2.0 * cross / (ab * bc * ca)
}

fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6 * norm2(x);
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let h = 1e-4 * norm2(x);
    let mut out = vec![vec![0.0; n]; n];
    let mut y = x.to_vec();
    for i in 0..n {
        for j in i..n {
            let mut e = |si: f64, sj: f64| {
                y[i] += si * h;
                y[j] += sj * h;
                let v = f(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * h * h);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn quad(h: &[Vec<f64>], y: &[f64]) -> f64 {
    bilinear(h, y, y)
}

fn bilinear(h: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            s += h[i][j] * a[i] * b[j];
        }
    }
    s
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// (I − x̂x̂ᵀ)/|x| for the Euclidean norm.
fn outer_proj(x: &[f64], r: f64, id: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| (id[i][j] - x[i] * x[j] / (r * r)) / r).collect())
        .collect()
}

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn is_positive_definite(a: &[Vec<f64>]) -> bool {
    // Cholesky.
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

/// Gauss–Jordan inverse with partial pivoting; `a` is assumed nonsingular.
fn mat_inv(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        m[c].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot = m[c].clone();
                m[r].iter_mut().zip(&pivot).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}
