//! Uniform-grid droplets and their measurements.
//!
//! The last axis is vertical and the floor ∂Ω sits at height 0, the bottom
//! face of the box. Cells are indexed row-major with the first axis fastest:
//! `j * nx + i` in 2-D and `(k * ny + j) * nx + i` in 3-D.

mod distance;
mod snapshot;
mod stencil;

use std::sync::Arc;

use bitvec::prelude::*;

use crate::error::{Error, Result};

pub use distance::{distance_transform, DistanceField, Metric};
pub use snapshot::{read_snapshot, write_snapshot};
pub use stencil::{
    adhesion_energy, capillary_energy, cut_counts, for_each_pair, perimeter_phi, Pair, PerimeterStencil, Region,
    StencilKind,
};

/// A computational box `[lower, upper]` with uniform cell size `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    n: usize,
    lower: Vec<f64>,
    h: f64,
    counts: Vec<usize>,
}

impl GridDomain {
    pub fn new(lower: &[f64], upper: &[f64], h: f64) -> Result<Self> {
        let n = lower.len();
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        if upper.len() != n {
            return Err(Error::Dimension { expected: n, got: upper.len() });
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("cell size {h} must be positive")));
        }
        if lower[n - 1] != 0.0 {
            return Err(Error::InvalidGrid("the bottom face of the box must lie on the floor (height 0)".into()));
        }
        let mut counts = Vec::with_capacity(n);
        for a in 0..n {
            let ext = upper[a] - lower[a];
            let c = (ext / h).round();
            if c < 1.0 || (c * h - ext).abs() > 1e-9 * ext.max(h) {
                return Err(Error::InvalidGrid(format!(
                    "extent {ext} along axis {a} is not a positive multiple of h = {h}"
                )));
            }
            counts.push(c as usize);
        }
        Ok(Self { n, lower: lower.to_vec(), h, counts })
    }

    /// Box `[-half_width, half_width]^{n-1} × [0, height]`.
    pub fn centered(n: usize, half_width: f64, height: f64, h: f64) -> Result<Self> {
        let mut lower = vec![-half_width; n];
        let mut upper = vec![half_width; n];
        lower[n - 1] = 0.0;
        upper[n - 1] = height;
        Self::new(&lower, &upper, h)
    }

    /// Box with the given cell counts, lateral corner `lower` and floor at 0.
    pub fn from_counts(lower_lateral: &[f64], counts: &[usize], h: f64) -> Result<Self> {
        let n = counts.len();
        if lower_lateral.len() + 1 != n {
            return Err(Error::Dimension { expected: n - 1, got: lower_lateral.len() });
        }
        let mut lower = lower_lateral.to_vec();
        lower.push(0.0);
        let upper: Vec<f64> = (0..n).map(|a| lower[a] + counts[a] as f64 * h).collect();
        Self::new(&lower, &upper, h)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.n).map(|a| self.lower[a] + self.counts[a] as f64 * self.h).collect()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of cells in the bottom row (the floor cells).
    pub fn floor_len(&self) -> usize {
        self.counts[..self.n - 1].iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    pub fn facet_area(&self) -> f64 {
        self.h.powi(self.n as i32 - 1)
    }

    /// Grid coordinates (unused trailing entries are 0).
    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.counts[0];
        if self.n == 2 {
            [idx % nx, idx / nx, 0]
        } else {
            let ny = self.counts[1];
            [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
        }
    }

    #[inline]
    pub fn index(&self, c: &[usize]) -> usize {
        if self.n == 2 {
            c[1] * self.counts[0] + c[0]
        } else {
            (c[2] * self.counts[1] + c[1]) * self.counts[0] + c[0]
        }
    }

    /// Index of signed coordinates, `None` outside the box.
    #[inline]
    pub fn index_signed(&self, c: &[i64]) -> Option<usize> {
        let mut u = [0usize; 3];
        for a in 0..self.n {
            if c[a] < 0 || c[a] as usize >= self.counts[a] {
                return None;
            }
            u[a] = c[a] as usize;
        }
        Some(self.index(&u))
    }

    /// Vertical grid coordinate.
    #[inline]
    pub fn row(&self, idx: usize) -> usize {
        self.coords(idx)[self.n - 1]
    }

    /// Cell center (unused trailing entries are 0).
    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.n {
            x[a] = self.lower[a] + (c[a] as f64 + 0.5) * self.h;
        }
        x
    }

    /// Index of the floor cell below `idx` within the floor row.
    #[inline]
    pub fn floor_slot(&self, idx: usize) -> usize {
        idx % self.floor_len()
    }

    /// Center of floor slot `s` projected onto ∂Ω (lateral coordinates only).
    pub fn floor_point(&self, s: usize) -> Vec<f64> {
        let c = self.center(s);
        c[..self.n - 1].to_vec()
    }

    /// Cell containing point `x`, if inside the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut c = [0i64; 3];
        for a in 0..self.n {
            c[a] = ((x[a] - self.lower[a]) / self.h).floor() as i64;
        }
        self.index_signed(&c[..self.n])
    }
}

/// A droplet as a set of grid cells.
#[derive(Clone, Debug)]
pub struct BinarySet {
    grid: Arc<GridDomain>,
    cells: BitVec<u64, Lsb0>,
    count: usize,
}

impl PartialEq for BinarySet {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.cells == other.cells
    }
}

impl BinarySet {
    pub fn empty(grid: &Arc<GridDomain>) -> Self {
        Self { grid: grid.clone(), cells: bitvec![u64, Lsb0; 0; grid.len()], count: 0 }
    }

    pub fn full(grid: &Arc<GridDomain>) -> Self {
        Self { grid: grid.clone(), cells: bitvec![u64, Lsb0; 1; grid.len()], count: grid.len() }
    }

    /// Cells whose centers satisfy `inside`.
    pub fn from_predicate(grid: &Arc<GridDomain>, inside: impl Fn(&[f64]) -> bool) -> Self {
        let n = grid.dim();
        let mut s = Self::empty(grid);
        for idx in 0..grid.len() {
            let c = grid.center(idx);
            if inside(&c[..n]) {
                s.cells.set(idx, true);
                s.count += 1;
            }
        }
        s
    }

    pub fn from_bits(grid: &Arc<GridDomain>, mut bits: BitVec<u64, Lsb0>) -> Result<Self> {
        bits.set_uninitialized(false);
        if bits.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} bits for a grid of {} cells", bits.len(), grid.len())));
        }
        let count = bits.count_ones();
        Ok(Self { grid: grid.clone(), cells: bits, count })
    }

    pub fn from_indices(grid: &Arc<GridDomain>, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(grid);
        for i in idx {
            s.set(i, true);
        }
        s
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn bits(&self) -> &BitSlice<u64, Lsb0> {
        &self.cells
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.cells[idx]
    }

    pub fn set(&mut self, idx: usize, v: bool) {
        let old = self.cells.replace(idx, v);
        match (old, v) {
            (false, true) => self.count += 1,
            (true, false) => self.count -= 1,
            _ => {}
        }
    }

    /// Membership with vacuum outside the box and vertical extension of the
    /// bottom row below the floor.
    #[inline]
    pub fn get_signed(&self, c: &[i64]) -> bool {
        let n = self.grid.dim();
        let mut cc = [0i64; 3];
        cc[..n].copy_from_slice(&c[..n]);
        if cc[n - 1] < 0 {
            cc[n - 1] = 0;
        }
        match self.grid.index_signed(&cc[..n]) {
            Some(i) => self.cells[i],
            None => false,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn volume(&self) -> f64 {
        self.count as f64 * self.grid.cell_volume()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter_ones()
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("sets live on different grids".into()))
        }
    }

    fn combine(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.same_grid(other)?;
        let mut cells = self.cells.clone();
        for (a, b) in cells.as_raw_mut_slice().iter_mut().zip(other.cells.as_raw_slice()) {
            *a = op(*a, *b);
        }
        cells.set_uninitialized(false);
        let count = cells.count_ones();
        Ok(Self { grid: self.grid.clone(), cells, count })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a & !b)
    }

    pub fn symmetric_difference(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a ^ b)
    }

    pub fn complement(&self) -> Self {
        let mut cells = self.cells.clone();
        cells = !cells;
        cells.set_uninitialized(false);
        let count = self.grid.len() - self.count;
        Self { grid: self.grid.clone(), cells, count }
    }

    pub fn is_subset_of(&self, other: &Self) -> Result<bool> {
        self.same_grid(other)?;
        Ok(self
            .cells
            .as_raw_slice()
            .iter()
            .zip(other.cells.as_raw_slice())
            .all(|(a, b)| a & !b == 0))
    }

    /// |E Δ F| = h^n · #(E xor F).
    pub fn symmetric_difference_measure(&self, other: &Self) -> Result<f64> {
        Ok(self.symmetric_difference(other)?.volume())
    }

    /// Occupied cells in the bottom row.
    pub fn contact_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells[..self.grid.floor_len()].iter_ones()
    }

    pub fn contact_count(&self) -> usize {
        self.cells[..self.grid.floor_len()].count_ones()
    }

    /// Wetted floor measure h^{n-1} · #contact.
    pub fn contact_measure(&self) -> f64 {
        self.contact_count() as f64 * self.grid.facet_area()
    }

    /// Smallest number of empty cells between the set and the lateral or top
    /// faces of the box; `None` for the empty set.
    pub fn face_margin(&self) -> Option<usize> {
        let n = self.grid.dim();
        let counts = self.grid.counts();
        self.iter_ones()
            .map(|idx| {
                let c = self.grid.coords(idx);
                let mut m = counts[n - 1] - 1 - c[n - 1];
                for a in 0..n - 1 {
                    m = m.min(c[a]).min(counts[a] - 1 - c[a]);
                }
                m
            })
            .min()
    }
}
