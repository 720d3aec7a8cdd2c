//! Pairwise-cut perimeter stencils and the capillary energy.
//!
//! A stencil direction v (a primitive integer offset) with coefficient c_v
//! contributes the cut weight c_v·h^{n-1} for every discordant cell pair
//! (x, x + v). On a flat interface with unit normal ν this integrates to
//! Φ_disc(ν) = Σ c_v |v·ν| per unit area.
//!
//! Floor rule: a pair counts only if its midpoint lies strictly above the
//! floor, and an endpoint below the floor takes the value of the bottom-row
//! cell in its column. Only offsets with vertical component 2 create such
//! straddling pairs. With this rule every bottom-row cell starts |v_n|
//! upward lattice lines per direction, so P(E, Ω) ≥ Φ_disc(e_n)·h^{n-1}·#contact
//! holds exactly.

use std::f64::consts::PI;

use crate::anisotropy::{fibonacci_sphere, Anisotropy};
use crate::error::{Error, Result};
use crate::numeric::solve_dense;
use crate::stepper::ContactAngleField;

use super::{BinarySet, GridDomain};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilKind {
    /// 8-neighbourhood, 4 directions (n = 2).
    N8,
    /// 16-neighbourhood, 8 directions (n = 2).
    N16,
    /// 26-neighbourhood, 13 directions (n = 3).
    N26,
}

impl StencilKind {
    pub fn default_for(n: usize) -> Self {
        if n == 2 {
            StencilKind::N16
        } else {
            StencilKind::N26
        }
    }

    pub fn dim(self) -> usize {
        match self {
            StencilKind::N8 | StencilKind::N16 => 2,
            StencilKind::N26 => 3,
        }
    }

    /// One representative of each ±v pair, with nonnegative vertical part.
    pub fn directions(self) -> Vec<[i64; 3]> {
        match self {
            StencilKind::N8 => vec![[1, 0, 0], [0, 1, 0], [1, 1, 0], [-1, 1, 0]],
            StencilKind::N16 => vec![
                [1, 0, 0],
                [0, 1, 0],
                [1, 1, 0],
                [-1, 1, 0],
                [2, 1, 0],
                [-2, 1, 0],
                [1, 2, 0],
                [-1, 2, 0],
            ],
            StencilKind::N26 => {
                let mut d = vec![[1, 0, 0]];
                for dx in -1..=1 {
                    d.push([dx, 1, 0]);
                }
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        d.push([dx, dy, 1]);
                    }
                }
                d
            }
        }
    }
}

impl std::str::FromStr for StencilKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "8" | "n8" => Ok(StencilKind::N8),
            "16" | "n16" => Ok(StencilKind::N16),
            "26" | "n26" => Ok(StencilKind::N26),
            _ => Err(Error::Config(format!("unknown stencil '{s}' (expected 8, 16 or 26)"))),
        }
    }
}

/// Stencil coefficients fitted to one anisotropy.
#[derive(Clone, Debug)]
pub struct PerimeterStencil {
    kind: StencilKind,
    dirs: Vec<[i64; 3]>,
    coeffs: Vec<f64>,
    phi: Anisotropy,
    max_bias: f64,
}

impl PerimeterStencil {
    /// Nonnegative least-squares fit of Φ_disc to Φ in relative error, with
    /// the coordinate axes and the spherical mean matched exactly.
    pub fn calibrate(phi: &Anisotropy, kind: StencilKind) -> Result<Self> {
        let n = phi.dim();
        if kind.dim() != n {
            return Err(Error::Dimension { expected: n, got: kind.dim() });
        }
        let dirs = kind.directions();
        let m = dirs.len();
        let samples: Vec<Vec<f64>> = if n == 2 {
            (0..720)
                .map(|i| {
                    let t = PI * (i as f64 + 0.5) / 720.0;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        } else {
            fibonacci_sphere(4000)
        };
        let absdot = |v: &[i64; 3], nu: &[f64]| -> f64 { (0..n).map(|a| v[a] as f64 * nu[a]).sum::<f64>().abs() };
        let rows: Vec<Vec<f64>> = samples
            .iter()
            .map(|nu| {
                let p = phi.value(nu);
                dirs.iter().map(|v| absdot(v, nu) / p).collect()
            })
            .collect();
        let mut en = vec![0.0; n];
        en[n - 1] = 1.0;
        let phi_e = phi.value(&en);
        // Exact rows: every coordinate axis (the vertical one carries the
        // floor identity) and the spherical mean.
        let mut exact_rows: Vec<Vec<f64>> = Vec::new();
        let mut exact_rhs: Vec<f64> = Vec::new();
        for a in 0..n {
            let mut e = vec![0.0; n];
            e[a] = 1.0;
            exact_rows.push(dirs.iter().map(|v| absdot(v, &e)).collect());
            exact_rhs.push(phi.value(&e));
        }
        let ns = samples.len() as f64;
        exact_rows.push((0..m).map(|j| samples.iter().map(|nu| absdot(&dirs[j], nu)).sum::<f64>() / ns).collect());
        exact_rhs.push(samples.iter().map(|nu| phi.value(nu)).sum::<f64>() / ns);
        let ne = exact_rows.len();

        let mut free: Vec<bool> = vec![true; m];
        let coeffs = loop {
            let idx: Vec<usize> = (0..m).filter(|&j| free[j]).collect();
            let k = idx.len();
            // KKT system [AᵀA Cᵀ; C 0].
            let mut a = vec![vec![0.0; k + ne]; k + ne];
            let mut b = vec![0.0; k + ne];
            for (p, &jp) in idx.iter().enumerate() {
                for (q, &jq) in idx.iter().enumerate() {
                    a[p][q] = rows.iter().map(|r| r[jp] * r[jq]).sum();
                }
                b[p] = rows.iter().map(|r| r[jp]).sum();
                for (r, row) in exact_rows.iter().enumerate() {
                    a[p][k + r] = row[jp];
                    a[k + r][p] = row[jp];
                }
            }
            b[k..].copy_from_slice(&exact_rhs);
            let x = solve_dense(a, b)
                .ok_or_else(|| Error::InvalidAnisotropy("stencil calibration constraints are infeasible".into()))?;
            let worst = (0..k).filter(|&p| x[p] < 0.0).min_by(|&p, &q| x[p].total_cmp(&x[q]));
            match worst {
                Some(p) => free[idx[p]] = false,
                None => {
                    let mut c = vec![0.0; m];
                    for (p, &j) in idx.iter().enumerate() {
                        c[j] = x[p];
                    }
                    break c;
                }
            }
        };
        let mut st = Self { kind, dirs, coeffs, phi: phi.clone(), max_bias: 0.0 };
        // Make the floor identity hold without rounding shortfall.
        let mut guard = 0;
        while st.discrete_phi(&en) < phi_e && guard < 8 {
            let s = phi_e / st.discrete_phi(&en) * (1.0 + f64::EPSILON);
            st.coeffs.iter_mut().for_each(|c| *c *= s);
            guard += 1;
        }
        st.max_bias = samples
            .iter()
            .map(|nu| (st.discrete_phi(nu) / phi.value(nu) - 1.0).abs())
            .fold(0.0, f64::max);
        Ok(st)
    }

    pub fn kind(&self) -> StencilKind {
        self.kind
    }

    pub fn anisotropy(&self) -> &Anisotropy {
        &self.phi
    }

    pub fn directions(&self) -> &[[i64; 3]] {
        &self.dirs
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Cut weight c_v·h^{n-1} for each direction.
    pub fn weights(&self, h: f64) -> Vec<f64> {
        let f = h.powi(self.phi.dim() as i32 - 1);
        self.coeffs.iter().map(|c| c * f).collect()
    }

    /// Largest relative deviation |Φ_disc/Φ − 1| over the calibration sample.
    pub fn max_bias(&self) -> f64 {
        self.max_bias
    }

    /// Φ_disc(ν) = Σ c_v |v·ν|.
    pub fn discrete_phi(&self, nu: &[f64]) -> f64 {
        let n = self.phi.dim();
        self.dirs
            .iter()
            .zip(&self.coeffs)
            .map(|(v, c)| c * (0..n).map(|a| v[a] as f64 * nu[a]).sum::<f64>().abs())
            .sum()
    }

    fn check(&self, phi: &Anisotropy) -> Result<()> {
        if &self.phi == phi {
            Ok(())
        } else {
            Err(Error::Calibration)
        }
    }
}

/// A counted cell pair; `None` marks vacuum outside the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pair {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub dir: usize,
}

/// Visits every counted pair with at least one endpoint in the box.
/// Endpoints below the floor are already replaced by their bottom-row cell.
pub fn for_each_pair(grid: &GridDomain, dirs: &[[i64; 3]], mut f: impl FnMut(Pair)) {
    let n = grid.dim();
    let counts = grid.counts();
    let top = n - 1;
    for (d, v) in dirs.iter().enumerate() {
        for x in 0..grid.len() {
            let c = grid.coords(x);
            let mut fwd = [0i64; 3];
            let mut back = [0i64; 3];
            for a in 0..n {
                fwd[a] = c[a] as i64 + v[a];
                back[a] = c[a] as i64 - v[a];
            }
            f(Pair { a: Some(x), b: grid.index_signed(&fwd[..n]), dir: d });
            // Pairs whose lower endpoint lies outside the box.
            let outside_low = (0..n).any(|a| back[a] < 0 || back[a] as usize >= counts[a]);
            if outside_low {
                if back[top] >= 0 {
                    f(Pair { a: None, b: Some(x), dir: d });
                } else if v[top] == 2 && c[top] == 1 {
                    back[top] = 0;
                    f(Pair { a: grid.index_signed(&back[..n]), b: Some(x), dir: d });
                }
            }
        }
        if v[top] == 2 {
            // Straddling pairs whose upper endpoint is outside the box.
            for s in 0..grid.floor_len() {
                let c = grid.coords(s);
                let mut up = [0i64; 3];
                for a in 0..n {
                    up[a] = c[a] as i64 + v[a];
                }
                up[top] = 1;
                if grid.index_signed(&up[..n]).is_none() {
                    f(Pair { a: Some(s), b: None, dir: d });
                }
            }
        }
    }
}

/// Cut counts per stencil direction for pairs above the floor.
pub fn cut_counts(e: &BinarySet, stencil: &PerimeterStencil) -> Vec<u64> {
    let mut counts = vec![0u64; stencil.dirs.len()];
    let val = |c: Option<usize>| c.is_some_and(|i| e.get(i));
    for_each_pair(e.grid(), &stencil.dirs, |p| {
        if val(p.a) != val(p.b) {
            counts[p.dir] += 1;
        }
    });
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// Free boundary plus wetted floor weighted by Φ(e_n).
    All,
    /// Free boundary in the open half-space only.
    Interior,
}

/// P_Φ(E) (`All`) or P_Φ(E, Ω) (`Interior`).
pub fn perimeter_phi(e: &BinarySet, phi: &Anisotropy, stencil: &PerimeterStencil, region: Region) -> Result<f64> {
    stencil.check(phi)?;
    if e.grid().dim() != phi.dim() {
        return Err(Error::Dimension { expected: phi.dim(), got: e.grid().dim() });
    }
    let w = stencil.weights(e.grid().h());
    let p: f64 = cut_counts(e, stencil).iter().zip(&w).map(|(c, w)| *c as f64 * w).sum();
    Ok(match region {
        Region::Interior => p,
        Region::All => p + phi.vertical() * e.contact_measure(),
    })
}

/// ∫_{∂Ω} β χ_E as a sum over wetted floor cells.
pub fn adhesion_energy(e: &BinarySet, beta: &ContactAngleField) -> Result<f64> {
    if beta.values().len() != e.grid().floor_len() {
        return Err(Error::GridMismatch("contact-angle field does not match the floor row".into()));
    }
    let a = e.grid().facet_area();
    Ok(e.contact_cells().map(|s| beta.values()[s]).sum::<f64>() * a)
}

/// 𝒞_β(E) = P_Φ(E, Ω) + ∫_{∂Ω} β χ_E.
pub fn capillary_energy(
    e: &BinarySet,
    phi: &Anisotropy,
    stencil: &PerimeterStencil,
    beta: &ContactAngleField,
) -> Result<f64> {
    Ok(perimeter_phi(e, phi, stencil, Region::Interior)? + adhesion_energy(e, beta)?)
}
