//! Marching-squares contours of planar cell fields and polyline distances.

use std::collections::HashMap;

use crate::gridset::BinarySet;

pub type Point = [f64; 2];

/// Level-0.5 contour of a planar droplet.
///
/// The field is the cell indicator (optionally blurred by a Gaussian of `blur`
/// cells), extended by vacuum beyond the lateral and top faces and mirrored
/// below the floor, so free boundaries meet the floor instead of stopping half
/// a cell above it. Segments below the floor are discarded.
#[derive(Clone, Debug, Default)]
pub struct Contour {
    pub polylines: Vec<Vec<Point>>,
}

impl Contour {
    pub fn extract(e: &BinarySet, blur: Option<f64>) -> Self {
        let grid = e.grid();
        assert_eq!(grid.dim(), 2, "contours are planar");
        let (nx, ny) = (grid.counts()[0], grid.counts()[1]);
        let mut field: Vec<f64> = (0..grid.len()).map(|i| if e.get(i) { 1.0 } else { 0.0 }).collect();
        if let Some(s) = blur.filter(|s| *s > 0.0) {
            field = gaussian_blur(&field, nx, ny, s);
        }
        // Padded lattice: columns −1..=nx, rows −1..=ny, row −1 mirrors row 0.
        let val = |i: i64, j: i64| -> f64 {
            if i < 0 || i >= nx as i64 || j >= ny as i64 {
                return 0.0;
            }
            let j = j.max(0) as usize;
            field[j * nx + i as usize]
        };
        let h = grid.h();
        let x0 = grid.lower()[0];
        let pos = |i: i64, j: i64| -> Point { [x0 + (i as f64 + 0.5) * h, (j as f64 + 0.5) * h] };
        let level = 0.5;
        // Edge keys: (i, j, 0) is the horizontal edge (i, j)–(i+1, j), (i, j, 1) the vertical (i, j)–(i, j+1).
        let cross_point = |a: (i64, i64), b: (i64, i64)| -> Point {
            let (va, vb) = (val(a.0, a.1), val(b.0, b.1));
            let s = ((level - va) / (vb - va)).clamp(0.0, 1.0);
            let (pa, pb) = (pos(a.0, a.1), pos(b.0, b.1));
            [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
        };
        let mut segs: Vec<((i64, i64, u8), (i64, i64, u8))> = Vec::new();
        for j in -1..ny as i64 {
            for i in -1..nx as i64 {
                let c = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
                let mask = c.iter().enumerate().fold(0u8, |m, (k, v)| m | (u8::from(*v > level) << k));
                // Edges of the square: bottom, right, top, left.
                let e_b = (i, j, 0u8);
                let e_r = (i + 1, j, 1u8);
                let e_t = (i, j + 1, 0u8);
                let e_l = (i, j, 1u8);
                let centre = c.iter().sum::<f64>() / 4.0 > level;
                let pairs: &[((i64, i64, u8), (i64, i64, u8))] = match mask {
                    0 | 15 => &[],
                    1 | 14 => &[(e_l, e_b)],
                    2 | 13 => &[(e_b, e_r)],
                    3 | 12 => &[(e_l, e_r)],
                    4 | 11 => &[(e_r, e_t)],
                    6 | 9 => &[(e_b, e_t)],
                    7 | 8 => &[(e_l, e_t)],
                    5 if centre => &[(e_l, e_t), (e_b, e_r)],
                    5 => &[(e_l, e_b), (e_r, e_t)],
                    10 if centre => &[(e_l, e_b), (e_r, e_t)],
                    _ => &[(e_l, e_t), (e_b, e_r)],
                };
                segs.extend_from_slice(pairs);
            }
        }
        let point = |k: (i64, i64, u8)| {
            let b = if k.2 == 0 { (k.0 + 1, k.1) } else { (k.0, k.1 + 1) };
            cross_point((k.0, k.1), b)
        };
        let polylines = chain(&segs)
            .into_iter()
            .flat_map(|keys| {
                let pts: Vec<Point> = keys.into_iter().map(point).collect();
                clip_above_floor(pts)
            })
            .filter(|p| p.len() >= 2)
            .collect();
        Contour { polylines }
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.polylines.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.polylines.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.polylines.iter().flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
    }

    /// Points along the contour at spacing at most `ds`.
    pub fn sample(&self, ds: f64) -> Vec<Point> {
        densify(self.segments(), ds)
    }

    pub fn distance(&self, x: Point) -> f64 {
        self.segments().map(|(a, b)| point_segment_distance(x, a, b)).fold(f64::INFINITY, f64::min)
    }
}

/// Joins segments sharing edge keys into maximal chains.
fn chain<K: Copy + Eq + std::hash::Hash>(segs: &[(K, K)]) -> Vec<Vec<K>> {
    let mut adj: HashMap<K, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segs.iter().enumerate() {
        adj.entry(*a).or_default().push(s);
        adj.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let walk = |start: K, first: usize, used: &mut Vec<bool>| {
        let mut keys = vec![start];
        let mut cur = start;
        let mut seg = first;
        loop {
            used[seg] = true;
            let (a, b) = segs[seg];
            let next = if a == cur { b } else { a };
            keys.push(next);
            cur = next;
            match adj[&cur].iter().find(|s| !used[**s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        keys
    };
    // Open chains start at keys with a single incident segment.
    let mut starts: Vec<K> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    starts.sort_by_key(|k| segs.iter().position(|(a, b)| a == k || b == k));
    for k in starts {
        if let Some(&s) = adj[&k].iter().find(|s| !used[**s]) {
            out.push(walk(k, s, &mut used));
        }
    }
    for s in 0..segs.len() {
        if !used[s] {
            out.push(walk(segs[s].0, s, &mut used));
        }
    }
    out
}

/// Splits a polyline at the floor and keeps the parts with y ≥ 0.
fn clip_above_floor(pts: Vec<Point>) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    let mut cur: Vec<Point> = Vec::new();
    for w in 0..pts.len() {
        let p = pts[w];
        if p[1] >= 0.0 {
            if cur.is_empty() && w > 0 && pts[w - 1][1] < 0.0 {
                cur.push(floor_crossing(pts[w - 1], p));
            }
            cur.push(p);
        } else if !cur.is_empty() {
            cur.push(floor_crossing(*cur.last().expect("non-empty"), p));
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn floor_crossing(a: Point, b: Point) -> Point {
    let s = a[1] / (a[1] - b[1]);
    [a[0] + s * (b[0] - a[0]), 0.0]
}

fn gaussian_blur(field: &[f64], nx: usize, ny: usize, sigma: f64) -> Vec<f64> {
    let reach = (4.0 * sigma).ceil() as i64;
    let kernel: Vec<f64> = (-reach..=reach).map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let mut tmp = vec![0.0; field.len()];
    for y in 0..ny {
        for x in 0..nx {
            let mut s = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let xx = x as i64 + k as i64 - reach;
                if xx >= 0 && (xx as usize) < nx {
                    s += w * field[y * nx + xx as usize];
                }
            }
            tmp[y * nx + x] = s / norm;
        }
    }
    let mut out = vec![0.0; field.len()];
    for y in 0..ny {
        for x in 0..nx {
            let mut s = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let mut yy = y as i64 + k as i64 - reach;
                if yy < 0 {
                    yy = -yy - 1;
                }
                if (yy as usize) < ny {
                    s += w * tmp[yy as usize * nx + x];
                }
            }
            out[y * nx + x] = s / norm;
        }
    }
    out
}

pub fn point_segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let s = if l2 > 0.0 { (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (x[0] - a[0] - s * d[0]).hypot(x[1] - a[1] - s * d[1])
}

/// Segment endpoints plus interior points so that gaps are at most `ds`.
pub fn densify(segments: impl Iterator<Item = (Point, Point)>, ds: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for (a, b) in segments {
        let l = (b[0] - a[0]).hypot(b[1] - a[1]);
        let k = ((l / ds).ceil() as usize).max(1);
        for i in 0..=k {
            let s = i as f64 / k as f64;
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

/// Symmetric Hausdorff distance between two polyline families, each sampled at `ds`.
pub fn hausdorff(a: &[Vec<Point>], b: &[Vec<Point>], ds: f64) -> f64 {
    let segs = |p: &[Vec<Point>]| -> Vec<(Point, Point)> {
        p.iter().flat_map(|l| l.windows(2).map(|w| (w[0], w[1]))).collect()
    };
    let (sa, sb) = (segs(a), segs(b));
    if sa.is_empty() || sb.is_empty() {
        return if sa.is_empty() && sb.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let one_sided = |from: &[(Point, Point)], to: &[(Point, Point)]| {
        densify(from.iter().copied(), ds)
            .into_iter()
            .map(|x| to.iter().map(|(p, q)| point_segment_distance(x, *p, *q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(&sa, &sb).max(one_sided(&sb, &sa))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gridset::GridDomain;

    #[test]
    fn half_disk_contour_is_one_arc_on_the_floor() {
        let g = Arc::new(GridDomain::centered(2, 1.0, 1.0, 1.0 / 64.0).unwrap());
        let e = BinarySet::from_predicate(&g, |x| x[0] * x[0] + x[1] * x[1] < 0.25);
        let c = Contour::extract(&e, None);
        assert_eq!(c.polylines.len(), 1);
        let p = &c.polylines[0];
        assert_eq!(p.first().unwrap()[1], 0.0);
        assert_eq!(p.last().unwrap()[1], 0.0);
        for q in c.points() {
            assert!((q[0].hypot(q[1]) - 0.5).abs() < g.h(), "{q:?}");
        }
        let smooth = Contour::extract(&e, Some(1.5));
        for q in smooth.points() {
            assert!((q[0].hypot(q[1]) - 0.5).abs() < 0.3 * g.h(), "{q:?}");
        }
    }

    #[test]
    fn floating_square_is_closed() {
        let g = Arc::new(GridDomain::centered(2, 1.0, 1.0, 0.125).unwrap());
        let e = BinarySet::from_predicate(&g, |x| x[0].abs() < 0.3 && (x[1] - 0.5).abs() < 0.3);
        let c = Contour::extract(&e, None);
        assert_eq!(c.polylines.len(), 1);
        let p = &c.polylines[0];
        assert_eq!(p.first(), p.last());
    }

    #[test]
    fn hausdorff_of_shifted_lines() {
        let a = vec![vec![[0.0, 0.0], [1.0, 0.0]]];
        let b = vec![vec![[0.0, 0.1], [1.2, 0.1]]];
        let d = hausdorff(&a, &b, 0.01);
        assert!((d - 0.2f64.hypot(0.1)).abs() < 1e-12);
    }
}
