//! Wulff and Winterbottom shapes: membership, isoperimetric constants and
//! rasterization onto grids.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::anisotropy::{Anisotropy, DualAnisotropy};
use crate::error::{Error, Result};
use crate::gridset::{BinarySet, GridDomain};

/// A body that can be tested for membership and rasterized.
pub trait Shape {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
}

/// x + R·{Φ° ≤ 1}.
#[derive(Clone, Debug)]
pub struct WulffShape {
    dual: DualAnisotropy,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl WulffShape {
    pub fn new(phi: &Anisotropy, center: &[f64], radius: f64) -> Result<Self> {
        Self::with_dual(phi.dual(), center, radius)
    }

    /// Reuses an already built dual (its table is the expensive part).
    pub fn with_dual(dual: DualAnisotropy, center: &[f64], radius: f64) -> Result<Self> {
        if center.len() != dual.dim() {
            return Err(Error::Dimension { expected: dual.dim(), got: center.len() });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Precondition(format!("radius {radius} must be positive")));
        }
        Ok(Self { dual, center: center.to_vec(), radius })
    }

    pub fn anisotropy(&self) -> &Anisotropy {
        self.dual.base()
    }

    pub fn dual(&self) -> &DualAnisotropy {
        &self.dual
    }

    /// Φ°(y − center) / R; at most 1 inside.
    pub fn gauge(&self, y: &[f64]) -> f64 {
        let d: Vec<f64> = y.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.dual.value(&d) / self.radius
    }
}

impl Shape for WulffShape {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) <= 1.0
    }
}

/// Ω ∩ W_R^Φ(c) with c = (x₀, β₀R), or c = (x₀, 0) + (β₀R/Φ(e_n))∇Φ(e_n) when tilted.
#[derive(Clone, Debug)]
pub struct WinterbottomShape {
    wulff: WulffShape,
    pub beta0: f64,
    pub horizontal_center: Vec<f64>,
    pub tilted: bool,
}

impl WinterbottomShape {
    pub fn new(phi: &Anisotropy, beta0: f64, radius: f64, horizontal_center: &[f64]) -> Result<Self> {
        Self::build(phi.dual(), beta0, radius, horizontal_center, false)
    }

    pub fn tilted(phi: &Anisotropy, beta0: f64, radius: f64, horizontal_center: &[f64]) -> Result<Self> {
        Self::build(phi.dual(), beta0, radius, horizontal_center, true)
    }

    pub fn with_dual(
        dual: DualAnisotropy,
        beta0: f64,
        radius: f64,
        horizontal_center: &[f64],
        tilted: bool,
    ) -> Result<Self> {
        Self::build(dual, beta0, radius, horizontal_center, tilted)
    }

    fn build(dual: DualAnisotropy, beta0: f64, radius: f64, hc: &[f64], tilted: bool) -> Result<Self> {
        let phi = dual.base().clone();
        let n = phi.dim();
        if hc.len() != n - 1 {
            return Err(Error::Dimension { expected: n - 1, got: hc.len() });
        }
        let pv = phi.vertical();
        if beta0.abs() >= pv {
            return Err(Error::Admissibility(format!("|β₀| = {} must be below Φ(e_n) = {pv}", beta0.abs())));
        }
        let mut center: Vec<f64> = hc.to_vec();
        center.push(0.0);
        if tilted {
            let mut en = vec![0.0; n];
            en[n - 1] = 1.0;
            let g = phi.gradient(&en)?;
            for (c, gi) in center.iter_mut().zip(&g) {
                *c += beta0 * radius / pv * gi;
            }
        } else {
            center[n - 1] = beta0 * radius;
        }
        Ok(Self { wulff: WulffShape::with_dual(dual, &center, radius)?, beta0, horizontal_center: hc.to_vec(), tilted })
    }

    pub fn wulff(&self) -> &WulffShape {
        &self.wulff
    }

    pub fn radius(&self) -> f64 {
        self.wulff.radius
    }

    pub fn center(&self) -> &[f64] {
        &self.wulff.center
    }

    /// Same construction at another radius.
    pub fn rescaled(&self, radius: f64) -> Result<Self> {
        Self::build(self.wulff.dual.clone(), self.beta0, radius, &self.horizontal_center, self.tilted)
    }

    /// Width of the wetted floor region along the first horizontal axis.
    pub fn contact_extent(&self) -> f64 {
        let n = self.dim();
        let c = &self.wulff.center;
        // Largest s with c + s e₁ projected to the floor still inside.
        let inside = |s: f64| {
            let mut y = c.clone();
            y[0] += s;
            y[n - 1] = 0.0;
            self.wulff.contains(&y)
        };
        let half = |sign: f64| {
            let (mut lo, mut hi) = (0.0, 4.0 * self.wulff.radius * self.wulff.dual.base().c_upper.max(1.0));
            if !inside(0.0) {
                return 0.0;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if inside(sign * mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        half(1.0) + half(-1.0)
    }

    /// Capillary energy P_Φ(W, Ω) + β₀·|contact| and volume, by boundary quadrature.
    pub fn capillary_and_volume(&self, resolution: usize) -> Result<(f64, f64)> {
        let phi = self.wulff.dual.base();
        let n = self.dim();
        let r = self.wulff.radius;
        let c = &self.wulff.center;
        if n == 2 {
            let poly: Vec<[f64; 2]> = wulff_polygon(&self.wulff.dual, resolution)?
                .into_iter()
                .map(|p| [c[0] + r * p[0], c[1] + r * p[1]])
                .collect();
            let clipped = clip_upper(&poly);
            let mut per = 0.0;
            let mut contact = 0.0;
            for i in 0..clipped.len() {
                let a = clipped[i];
                let b = clipped[(i + 1) % clipped.len()];
                if a[1] == 0.0 && b[1] == 0.0 {
                    contact += (b[0] - a[0]).abs();
                } else {
                    per += phi.value(&[b[1] - a[1], a[0] - b[0]]);
                }
            }
            Ok((per + self.beta0 * contact, polygon_area(&clipped)))
        } else {
            let (verts, tris) = wulff_mesh(&self.wulff.dual, resolution)?;
            let verts: Vec<[f64; 3]> =
                verts.iter().map(|p| [c[0] + r * p[0], c[1] + r * p[1], c[2] + r * p[2]]).collect();
            let mut per = 0.0;
            let mut floor_flux = 0.0;
            let mut vol = 0.0;
            for t in &tris {
                let tri = [verts[t[0]], verts[t[1]], verts[t[2]]];
                let poly = clip_triangle_upper(&tri);
                if poly.len() < 3 {
                    continue;
                }
                for k in 1..poly.len() - 1 {
                    let (a, b, cc) = (poly[0], poly[k], poly[k + 1]);
                    let av = cross(sub(b, a), sub(cc, a));
                    let av = [0.5 * av[0], 0.5 * av[1], 0.5 * av[2]];
                    per += phi.value(&av);
                    floor_flux += av[2];
                    vol += dot3(a, cross(b, cc)) / 6.0;
                }
            }
            // The flat floor face closes the surface; its area balances the vertical flux.
            Ok((per + self.beta0 * floor_flux.abs(), vol))
        }
    }
}

impl Shape for WinterbottomShape {
    fn dim(&self) -> usize {
        self.wulff.center.len()
    }
    fn contains(&self, x: &[f64]) -> bool {
        x[x.len() - 1] >= 0.0 && self.wulff.contains(x)
    }
}

/// Unit Wulff boundary sampled at `m` uniform polar angles, counterclockwise.
fn wulff_polygon(dual: &DualAnisotropy, m: usize) -> Result<Vec<[f64; 2]>> {
    if m < 16 {
        return Err(Error::Resolution { got: m, min: 16 });
    }
    Ok((0..m)
        .map(|i| {
            let t = 2.0 * PI * (i as f64 + 0.5) / m as f64;
            let p = dual.wulff_boundary_point(&[t.cos(), t.sin()]);
            [p[0], p[1]]
        })
        .collect())
}

/// Unit Wulff boundary over a latitude–longitude triangulation with `m` bands.
fn wulff_mesh(dual: &DualAnisotropy, m: usize) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    if m < 8 {
        return Err(Error::Resolution { got: m, min: 8 });
    }
    let nl = 2 * m;
    let radial = |u: [f64; 3]| {
        let p = dual.wulff_boundary_point(&u);
        [p[0], p[1], p[2]]
    };
    let mut verts = vec![radial([0.0, 0.0, 1.0])];
    for i in 1..m {
        let th = PI * i as f64 / m as f64;
        for j in 0..nl {
            let ph = 2.0 * PI * j as f64 / nl as f64;
            verts.push(radial([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]));
        }
    }
    verts.push(radial([0.0, 0.0, -1.0]));
    let south = verts.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * nl + j % nl;
    let mut tris = Vec::new();
    for j in 0..nl {
        tris.push([0, ring(1, j), ring(1, j + 1)]);
        tris.push([south, ring(m - 1, j + 1), ring(m - 1, j)]);
    }
    for i in 1..m - 1 {
        for j in 0..nl {
            tris.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            tris.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    Ok((verts, tris))
}

/// Sutherland–Hodgman clip of a closed polygon to y ≥ 0.
fn clip_upper(poly: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ina, inb) = (a[1] >= 0.0, b[1] >= 0.0);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let s = a[1] / (a[1] - b[1]);
            out.push([a[0] + s * (b[0] - a[0]), 0.0]);
        }
    }
    out
}

fn clip_triangle_upper(tri: &[[f64; 3]; 3]) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let (ina, inb) = (a[2] >= 0.0, b[2] >= 0.0);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let s = a[2] / (a[2] - b[2]);
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), 0.0]);
        }
    }
    out
}

fn polygon_area(p: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let a = p[i];
        let b = p[(i + 1) % p.len()];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s.abs()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// c_{Φ,n} = P_Φ(W)/|W|^{(n−1)/n} from a polygon (n = 2) or triangulated sphere (n = 3).
pub fn isoperimetric_constant(phi: &Anisotropy, resolution: usize) -> Result<f64> {
    isoperimetric_constant_with(&phi.dual(), resolution)
}

pub fn isoperimetric_constant_with(dual: &DualAnisotropy, resolution: usize) -> Result<f64> {
    let phi = dual.base();
    if phi.dim() == 2 {
        let poly = wulff_polygon(dual, resolution)?;
        let per: f64 = (0..poly.len())
            .map(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                phi.value(&[b[1] - a[1], a[0] - b[0]])
            })
            .sum();
        Ok(per / polygon_area(&poly).sqrt())
    } else {
        let (verts, tris) = wulff_mesh(dual, resolution)?;
        let mut per = 0.0;
        let mut vol = 0.0;
        for t in &tris {
            let (a, b, c) = (verts[t[0]], verts[t[1]], verts[t[2]]);
            let av = cross(sub(b, a), sub(c, a));
            per += 0.5 * phi.value(&av);
            vol += dot3(a, cross(b, c)) / 6.0;
        }
        Ok(per / vol.powf(2.0 / 3.0))
    }
}

/// c_{Φ,β₀,n} = 𝒞_{β₀}(W_{β₀,1})/|W_{β₀,1}|^{(n−1)/n}.
pub fn winterbottom_constant(phi: &Anisotropy, beta0: f64, resolution: usize) -> Result<f64> {
    let n = phi.dim();
    let w = WinterbottomShape::new(phi, beta0, 1.0, &vec![0.0; n - 1])?;
    winterbottom_ratio(&w, resolution)
}

/// The Winterbottom ratio of a concrete shape (any radius and translation).
pub fn winterbottom_ratio(w: &WinterbottomShape, resolution: usize) -> Result<f64> {
    let n = w.dim() as f64;
    let (c, v) = w.capillary_and_volume(resolution)?;
    Ok(c / v.powf((n - 1.0) / n))
}

/// A rasterized shape; `empty_warning` is set when no cell center falls inside.
#[derive(Clone, Debug)]
pub struct Rasterized {
    pub set: BinarySet,
    pub empty_warning: bool,
}

/// Cells whose centers lie in the shape.
pub fn rasterize(shape: &dyn Shape, grid: &Arc<GridDomain>) -> Result<Rasterized> {
    if shape.dim() != grid.dim() {
        return Err(Error::Dimension { expected: grid.dim(), got: shape.dim() });
    }
    let set = BinarySet::from_predicate(grid, |x| shape.contains(x));
    let empty_warning = set.is_empty();
    if empty_warning {
        log::warn!("shape does not meet any cell center of the grid");
    }
    Ok(Rasterized { set, empty_warning })
}

/// Smallest R with every cell center of `e` inside W_{β₀,R} (fixed horizontal center).
pub fn smallest_containing_winterbottom(
    proto: &WinterbottomShape,
    e: &BinarySet,
) -> Result<Option<f64>> {
    if e.is_empty() {
        return Ok(None);
    }
    let grid = e.grid().clone();
    let pts: Vec<[f64; 3]> = e.iter_ones().map(|i| grid.center(i)).collect();
    let n = grid.dim();
    let fits = |r: f64| -> Result<bool> {
        let w = proto.rescaled(r)?;
        Ok(pts.iter().all(|p| w.contains(&p[..n])))
    };
    let mut hi = proto.radius().max(grid.h());
    while !fits(hi)? {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Precondition("set is not contained in any Winterbottom shape".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && fits(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Largest R with W_{β₀,R} (fixed horizontal center) rasterized inside `e`.
pub fn largest_contained_winterbottom(proto: &WinterbottomShape, e: &BinarySet) -> Result<f64> {
    let grid = e.grid().clone();
    let n = grid.dim();
    let fits = |r: f64| -> Result<bool> {
        let w = proto.rescaled(r)?;
        Ok((0..grid.len()).all(|i| e.get(i) || !w.contains(&grid.center(i)[..n])))
    };
    let mut hi = grid.h();
    let diam = grid.upper().iter().zip(grid.lower()).map(|(u, l)| u - l).fold(0.0, f64::max);
    while hi < 4.0 * diam && fits(hi)? {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_isoperimetric_constants() {
        let e2 = Anisotropy::euclidean(2).unwrap();
        assert!((isoperimetric_constant(&e2, 4096).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-5);
        let e3 = Anisotropy::euclidean(3).unwrap();
        let exact = 4.0 * PI / (4.0 * PI / 3.0f64).powf(2.0 / 3.0);
        assert!((isoperimetric_constant(&e3, 128).unwrap() - exact).abs() < 1e-3);
    }

    #[test]
    fn linear_map_constant_is_refinement_stable() {
        let phi = Anisotropy::diag(&[2.0, 1.0]).unwrap();
        let a = isoperimetric_constant(&phi, 512).unwrap();
        let b = isoperimetric_constant(&phi, 1024).unwrap();
        assert!((a - b).abs() / b < 5e-3);
        // |Ax| has Wulff shape A·B₁, so the constant equals 2√(π det A).
        assert!((b - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn half_disk_winterbottom_constant() {
        let e2 = Anisotropy::euclidean(2).unwrap();
        let c = winterbottom_constant(&e2, 0.0, 4096).unwrap();
        assert!((c - (2.0 * PI).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn cap_winterbottom_constant() {
        // Cap of the unit circle above the chord at height −1/2.
        let e2 = Anisotropy::euclidean(2).unwrap();
        let arc = 4.0 * PI / 3.0;
        let chord = 3f64.sqrt();
        let area = PI - 0.5 * (2.0 * PI / 3.0 - (2.0 * PI / 3.0).sin());
        let exact = (arc + 0.5 * chord) / area.sqrt();
        let c = winterbottom_constant(&e2, 0.5, 4096).unwrap();
        assert!((c - exact).abs() < 1e-4, "{c} vs {exact}");
        assert!((c - 3.1796).abs() < 1e-3);
    }

    #[test]
    fn winterbottom_ratio_is_scale_and_translation_invariant() {
        let phi = Anisotropy::smoothed_l1(2, 0.1).unwrap();
        let d = phi.dual();
        let r1 = winterbottom_ratio(&WinterbottomShape::with_dual(d.clone(), 0.3, 1.0, &[0.0], false).unwrap(), 1024)
            .unwrap();
        let r2 = winterbottom_ratio(&WinterbottomShape::with_dual(d, 0.3, 2.0, &[0.7], false).unwrap(), 1024).unwrap();
        assert!((r1 - r2).abs() < 1e-10, "{r1} {r2}");
    }

    #[test]
    fn inadmissible_beta_is_rejected() {
        let e2 = Anisotropy::euclidean(2).unwrap();
        assert!(matches!(winterbottom_constant(&e2, 1.0, 256), Err(Error::Admissibility(_))));
    }

    #[test]
    fn three_dimensional_half_ball() {
        let e3 = Anisotropy::euclidean(3).unwrap();
        let w = WinterbottomShape::new(&e3, 0.0, 1.0, &[0.0, 0.0]).unwrap();
        let (c, v) = w.capillary_and_volume(96).unwrap();
        // 2π (dome) + 0·π (floor), volume 2π/3.
        assert!((c - 2.0 * PI).abs() < 2e-3);
        assert!((v - 2.0 * PI / 3.0).abs() < 2e-3);
    }

    #[test]
    fn rasterized_areas() {
        let e2 = Anisotropy::euclidean(2).unwrap();
        let grid = Arc::new(GridDomain::new(&[0.0, 0.0], &[1.0, 1.0], 1.0 / 256.0).unwrap());
        let w = WulffShape::new(&e2, &[0.5, 0.5], 0.5).unwrap();
        let r = rasterize(&w, &grid).unwrap();
        assert!((r.set.volume() - PI * 0.25).abs() < 0.01 * PI * 0.25);
        let g2 = Arc::new(GridDomain::new(&[-1.0, 0.0], &[1.0, 1.0], 1.0 / 256.0).unwrap());
        let wb = WinterbottomShape::new(&e2, 0.0, 0.5, &[0.0]).unwrap();
        let r = rasterize(&wb, &g2).unwrap();
        assert!((r.set.volume() - PI * 0.125).abs() < 0.01 * PI * 0.125);
        let far = WulffShape::new(&e2, &[5.0, 5.0], 0.5).unwrap();
        let r = rasterize(&far, &grid).unwrap();
        assert!(r.set.is_empty() && r.empty_warning);
    }

    #[test]
    fn winterbottom_family_is_nested() {
        let phi = Anisotropy::diag(&[2.0, 1.0]).unwrap();
        let grid = Arc::new(GridDomain::new(&[-1.0, 0.0], &[1.0, 1.0], 1.0 / 64.0).unwrap());
        for beta0 in [-0.6, 0.0, 0.6] {
            let w = WinterbottomShape::new(&phi, beta0, 0.2, &[0.0]).unwrap();
            let mut prev = rasterize(&w, &grid).unwrap().set;
            for r in [0.25, 0.3, 0.4] {
                let next = rasterize(&w.rescaled(r).unwrap(), &grid).unwrap().set;
                assert!(prev.is_subset_of(&next).unwrap());
                prev = next;
            }
        }
    }

    #[test]
    fn smallest_containing_radius_recovers_the_shape() {
        let e2 = Anisotropy::euclidean(2).unwrap();
        let grid = Arc::new(GridDomain::new(&[-1.0, 0.0], &[1.0, 1.0], 1.0 / 128.0).unwrap());
        let w = WinterbottomShape::new(&e2, -0.4, 0.5, &[0.0]).unwrap();
        let e = rasterize(&w, &grid).unwrap().set;
        let r = smallest_containing_winterbottom(&w, &e).unwrap().unwrap();
        assert!(r <= 0.5 + 1e-9 && r > 0.5 - 2.0 / 128.0, "{r}");
        let inner = largest_contained_winterbottom(&w, &e).unwrap();
        assert!(inner >= 0.5 - 1e-9 && inner < 0.5 + 2.0 / 128.0, "{inner}");
    }

    #[test]
    fn tilted_center_follows_the_gradient() {
        let phi = Anisotropy::linear_map(vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let w = WinterbottomShape::tilted(&phi, 0.3, 1.0, &[0.0]).unwrap();
        let g = phi.gradient(&[0.0, 1.0]).unwrap();
        let s = 0.3 / phi.vertical();
        assert!((w.center()[0] - s * g[0]).abs() < 1e-14 && (w.center()[1] - s * g[1]).abs() < 1e-14);
    }
}
