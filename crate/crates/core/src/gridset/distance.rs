//! Distance transforms to the free boundary.
//!
//! Distances are measured between cell centers and then shifted by half a
//! cell, so a cell adjacent to the interface sits at distance h/2. Vacuum
//! beyond the lateral and top faces of the box is a source for interior
//! distances; the floor never is, since only ∂E ∩ Ω counts as boundary.
//! With this convention E ⊆ F implies sd_E ≥ sd_F exactly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Index;

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};

use super::BinarySet;

#[derive(Clone, Debug)]
pub enum Metric {
    Euclidean,
    /// d^Φ(x) = inf Φ(x − y).
    Anisotropic(Anisotropy),
}

/// Per-cell distances; negative inside E when signed.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    values: Vec<f64>,
    signed: bool,
}

impl DistanceField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }
}

impl Index<usize> for DistanceField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Signed (sd = d outside, −d inside) or unsigned distance to Ω ∩ ∂E.
pub fn distance_transform(e: &BinarySet, signed: bool, metric: &Metric) -> Result<DistanceField> {
    if e.is_empty() {
        return Err(Error::DegenerateSet("distance to the boundary of the empty set".into()));
    }
    if signed && e.count() == e.grid().len() {
        return Err(Error::DegenerateSet("signed distance of the full box".into()));
    }
    let sd = match metric {
        Metric::Euclidean => signed_euclidean(e),
        Metric::Anisotropic(phi) => {
            if phi.dim() != e.grid().dim() {
                return Err(Error::Dimension { expected: e.grid().dim(), got: phi.dim() });
            }
            signed_anisotropic(e, phi)
        }
    };
    let values = if signed { sd } else { sd.into_iter().map(f64::abs).collect() };
    Ok(DistanceField { values, signed })
}

/// Box padded by one vacuum cell on every face except the floor.
struct Padded {
    n: usize,
    dims: [usize; 3],
    strides: [usize; 3],
}

impl Padded {
    fn new(counts: &[usize]) -> Self {
        let n = counts.len();
        let mut dims = [1usize; 3];
        for a in 0..n {
            dims[a] = counts[a] + if a + 1 == n { 1 } else { 2 };
        }
        let strides = [1, dims[0], dims[0] * dims[1]];
        Self { n, dims, strides }
    }

    fn len(&self) -> usize {
        self.dims[..self.n].iter().product()
    }

    /// Padded index of box cell coordinates.
    fn of_cell(&self, c: [usize; 3]) -> usize {
        let mut i = 0;
        for a in 0..self.n {
            let off = if a + 1 == self.n { 0 } else { 1 };
            i += (c[a] + off) * self.strides[a];
        }
        i
    }

    fn coords(&self, mut i: usize) -> [i64; 3] {
        let mut c = [0i64; 3];
        for a in 0..self.n {
            c[a] = (i % self.dims[a]) as i64;
            i /= self.dims[a];
        }
        c
    }
}

const FAR: f64 = 1e30;

/// Exact squared Euclidean distance (in cell units) from every padded cell
/// center to the nearest source center (Felzenszwalb–Huttenlocher).
fn edt_squared(p: &Padded, source: &[bool]) -> Vec<f64> {
    let mut f: Vec<f64> = source.iter().map(|&s| if s { 0.0 } else { FAR }).collect();
    let maxd = *p.dims[..p.n].iter().max().unwrap();
    let mut line = vec![0.0; maxd];
    let mut out = vec![0.0; maxd];
    let mut v = vec![0usize; maxd];
    let mut z = vec![0.0; maxd + 1];
    for axis in 0..p.n {
        let len = p.dims[axis];
        let stride = p.strides[axis];
        let total = p.len();
        for start in 0..total {
            // Visit each line once, from its first cell.
            if (start / stride) % len != 0 {
                continue;
            }
            for k in 0..len {
                line[k] = f[start + k * stride];
            }
            dt1d(&line[..len], &mut out[..len], &mut v, &mut z);
            for k in 0..len {
                f[start + k * stride] = out[k];
            }
        }
    }
    f
}

fn dt1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        d[q] = (dq * dq + f[p]).min(FAR);
    }
}

fn sources(e: &BinarySet, p: &Padded) -> (Vec<bool>, Vec<bool>) {
    let grid = e.grid();
    let mut inside = vec![false; p.len()];
    let mut outside = vec![true; p.len()];
    for idx in 0..grid.len() {
        let pi = p.of_cell(grid.coords(idx));
        inside[pi] = e.get(idx);
        outside[pi] = !e.get(idx);
    }
    (inside, outside)
}

fn signed_euclidean(e: &BinarySet) -> Vec<f64> {
    let grid = e.grid();
    let h = grid.h();
    let p = Padded::new(grid.counts());
    let (src_in, src_out) = sources(e, &p);
    let to_e = edt_squared(&p, &src_in);
    let to_c = edt_squared(&p, &src_out);
    (0..grid.len())
        .map(|idx| {
            let pi = p.of_cell(grid.coords(idx));
            if e.get(idx) {
                -(h * to_c[pi].sqrt() - 0.5 * h)
            } else {
                h * to_e[pi].sqrt() - 0.5 * h
            }
        })
        .collect()
}

/// Dijkstra over the king-move graph, each cell carrying its nearest source.
fn nearest_source_phi(p: &Padded, source: &[bool], phi: &Anisotropy, h: f64) -> Vec<f64> {
    let n = p.n;
    let mut best = vec![f64::INFINITY; p.len()];
    let mut src = vec![usize::MAX; p.len()];
    let mut heap = BinaryHeap::new();
    for (i, &s) in source.iter().enumerate() {
        if s {
            best[i] = 0.0;
            src[i] = i;
            heap.push(Reverse((Key(0.0), i)));
        }
    }
    let mut offsets = Vec::new();
    let range: [i64; 3] = [1, 1, if n == 3 { 1 } else { 0 }];
    for dz in -range[2]..=range[2] {
        for dy in -range[1]..=range[1] {
            for dx in -range[0]..=range[0] {
                if (dx, dy, dz) != (0, 0, 0) {
                    offsets.push([dx, dy, dz]);
                }
            }
        }
    }
    let mut x = [0.0; 3];
    while let Some(Reverse((Key(d), i))) = heap.pop() {
        if d > best[i] {
            continue;
        }
        let c = p.coords(i);
        let s = p.coords(src[i]);
        for o in &offsets {
            let mut nb = [0i64; 3];
            let mut ok = true;
            for a in 0..n {
                nb[a] = c[a] + o[a];
                ok &= nb[a] >= 0 && (nb[a] as usize) < p.dims[a];
            }
            if !ok {
                continue;
            }
            let j = (0..n).map(|a| nb[a] as usize * p.strides[a]).sum::<usize>();
            for a in 0..n {
                x[a] = (nb[a] - s[a]) as f64 * h;
            }
            let dj = phi.value(&x[..n]);
            if dj < best[j] {
                best[j] = dj;
                src[j] = src[i];
                heap.push(Reverse((Key(dj), j)));
            }
        }
    }
    // Shift from center distance to interface distance along the ray.
    (0..p.len())
        .map(|i| {
            if source[i] || src[i] == usize::MAX {
                return 0.0;
            }
            let c = p.coords(i);
            let s = p.coords(src[i]);
            let r = (0..n).map(|a| ((c[a] - s[a]) as f64 * h).powi(2)).sum::<f64>().sqrt();
            best[i] * (1.0 - 0.5 * h / r)
        })
        .collect()
}

fn signed_anisotropic(e: &BinarySet, phi: &Anisotropy) -> Vec<f64> {
    let grid = e.grid();
    let p = Padded::new(grid.counts());
    let (src_in, src_out) = sources(e, &p);
    let to_e = nearest_source_phi(&p, &src_in, phi, grid.h());
    let to_c = nearest_source_phi(&p, &src_out, phi, grid.h());
    (0..grid.len())
        .map(|idx| {
            let pi = p.of_cell(grid.coords(idx));
            if e.get(idx) {
                -to_c[pi]
            } else {
                to_e[pi]
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
