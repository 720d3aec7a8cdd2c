//! Globally optimal steps and discrete flat flows.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::graphcut::Select;
use crate::gridset::BinarySet;

use super::energy::{atw_energy, Scheme, StepProblem};

/// Empty cells kept between a droplet and the lateral and top faces.
pub const TRUNCATION_MARGIN: usize = 4;

/// A step minimizer with the solver's bookkeeping.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub set: BinarySet,
    /// Minimum cut in energy units (the minimized energy up to a constant).
    pub mincut_value: f64,
    /// Largest |dissipation distance| over the cells that changed.
    pub max_flip_distance: f64,
}

/// A global minimizer of 𝓕(·; E₀, τ, k), chosen among ties by `select`.
pub fn minimize_step(e0: &BinarySet, tau: f64, k: usize, scheme: &Scheme, select: Select) -> Result<StepResult> {
    if e0.is_empty() {
        // d_{E₀} is undefined for E₀ = ∅; extinction is final.
        return Ok(StepResult { set: e0.clone(), mincut_value: 0.0, max_flip_distance: 0.0 });
    }
    let problem = StepProblem::build(e0, tau, k, scheme)?;
    let q = problem.quantized()?;
    let (x, flow) = q.minimize(select)?;
    let set = BinarySet::from_indices(&scheme.grid, x.iter().enumerate().filter(|(_, v)| **v).map(|(i, _)| i));
    let max_flip_distance = (0..x.len())
        .filter(|&i| x[i] != e0.get(i))
        .map(|i| problem.distance[i].abs())
        .fold(0.0, f64::max);
    Ok(StepResult { set, mincut_value: flow as f64 / problem.scale(), max_flip_distance })
}

/// Diagnostics of one step (k = 0 describes the initial datum).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub volume: f64,
    /// P_Φ(E, Ω).
    pub perimeter_phi: f64,
    pub adhesion: f64,
    pub capillary: f64,
    pub dissipation: f64,
    pub forcing: f64,
    /// 𝓕(E_k; E_{k−1}, τ, k).
    pub total: f64,
    /// 𝒞_β(E_{k−1}) + forcing(E_{k−1}) at step k: the value of the candidate E = E_{k−1}.
    pub previous_value: f64,
    pub mincut_value: f64,
    pub max_flip_distance: f64,
    pub contact: f64,
    pub ms: f64,
}

/// A discrete flat flow {E(τ, k)}.
#[derive(Clone, Debug)]
pub struct FlatFlowState {
    pub tau: f64,
    pub select: Select,
    pub sets: Vec<BinarySet>,
    pub records: Vec<StepRecord>,
    /// Step at which the run stopped because the droplet neared the box faces.
    pub truncated: Option<usize>,
}

impl FlatFlowState {
    pub fn steps(&self) -> usize {
        self.sets.len() - 1
    }

    /// E(τ, ⌊t/τ⌋), clamped to the last computed step.
    pub fn at_time(&self, t: f64) -> &BinarySet {
        let k = ((t / self.tau) + 1e-9).floor().max(0.0) as usize;
        &self.sets[k.min(self.sets.len() - 1)]
    }

    pub fn covers(&self, t: f64) -> bool {
        ((t / self.tau) + 1e-9).floor() as usize <= self.steps()
    }

    pub fn last(&self) -> &BinarySet {
        self.sets.last().expect("a flow holds at least its initial set")
    }
}

/// Iterates `minimize_step` for k = 1..⌊T/τ⌋.
pub fn run_flat_flow(e0: &BinarySet, tau: f64, t_end: f64, scheme: &Scheme, select: Select) -> Result<FlatFlowState> {
    if !(tau > 0.0 && tau < t_end) {
        return Err(Error::Precondition(format!("need 0 < τ < T, got τ = {tau}, T = {t_end}")));
    }
    let steps = ((t_end / tau) + 1e-9).floor() as usize;
    let initial = atw_energy(e0, e0, tau, 1, scheme)?;
    let mut state = FlatFlowState {
        tau,
        select,
        sets: vec![e0.clone()],
        records: vec![StepRecord {
            volume: e0.volume(),
            perimeter_phi: initial.perimeter,
            adhesion: initial.adhesion,
            capillary: initial.capillary,
            contact: e0.contact_measure(),
            ..Default::default()
        }],
        truncated: None,
    };
    for k in 1..=steps {
        let prev = state.last().clone();
        if prev.face_margin().is_some_and(|m| m < TRUNCATION_MARGIN) {
            log::warn!("droplet within {TRUNCATION_MARGIN} cells of the box faces before step {k}; stopping");
            state.truncated = Some(k);
            break;
        }
        let clock = Instant::now();
        let step = minimize_step(&prev, tau, k, scheme, select)?;
        let ms = clock.elapsed().as_secs_f64() * 1e3;
        let b = atw_energy(&step.set, &prev, tau, k, scheme)?;
        let before = atw_energy(&prev, &prev, tau, k, scheme)?;
        state.records.push(StepRecord {
            k,
            t: k as f64 * tau,
            volume: step.set.volume(),
            perimeter_phi: b.perimeter,
            adhesion: b.adhesion,
            capillary: b.capillary,
            dissipation: b.dissipation,
            forcing: b.forcing,
            total: b.total,
            previous_value: before.total,
            mincut_value: step.mincut_value,
            max_flip_distance: step.max_flip_distance,
            contact: step.set.contact_measure(),
            ms,
        });
        log::debug!("step {k}: volume {:.6}, energy {:.6}", step.set.volume(), b.total);
        state.sets.push(step.set);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::anisotropy::Anisotropy;
    use crate::graphcut::brute_force;
    use crate::gridset::GridDomain;
    use crate::stepper::{ContactAngleField, DissipationDistance, ForcingField};

    fn scheme(grid: &Arc<GridDomain>, beta: f64, f: ForcingField) -> Scheme {
        let phi = Anisotropy::euclidean(2).unwrap();
        let b = ContactAngleField::constant(grid, &phi, beta).unwrap();
        Scheme::new(grid, &phi, b, f).unwrap()
    }

    fn set_of(grid: &Arc<GridDomain>, x: &[bool]) -> BinarySet {
        BinarySet::from_indices(grid, (0..x.len()).filter(|&i| x[i]))
    }

    #[test]
    fn empty_initial_set_stays_empty() {
        let grid = Arc::new(GridDomain::from_counts(&[0.0], &[4, 4], 0.25).unwrap());
        let s = scheme(&grid, 0.0, ForcingField::Constant(1.0));
        let r = minimize_step(&BinarySet::empty(&grid), 0.1, 1, &s, Select::Minimal).unwrap();
        assert!(r.set.is_empty());
    }

    #[test]
    fn cross_is_stable_for_tiny_steps() {
        let grid = Arc::new(GridDomain::from_counts(&[0.0], &[3, 3], 1.0).unwrap());
        let s = scheme(&grid, 0.0, ForcingField::zero()).with_distance(DissipationDistance::Staircase);
        let e0 = BinarySet::from_indices(&grid, [1, 3, 4, 5, 7]);
        let tau = 0.05 * grid.h();
        let p = StepProblem::build(&e0, tau, 1, &s).unwrap();
        let q = p.quantized().unwrap();
        let (best, meet, join) = brute_force(&q);
        let x: Vec<bool> = (0..9).map(|i| e0.get(i)).collect();
        assert_eq!(q.eval(&x), best);
        assert_eq!((set_of(&grid, &meet), set_of(&grid, &join)), (e0.clone(), e0.clone()));
        assert_eq!(minimize_step(&e0, tau, 1, &s, Select::Any).unwrap().set, e0);
    }

    #[test]
    fn small_grids_match_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..30 {
            let grid = Arc::new(GridDomain::from_counts(&[0.0], &[4, 4], 0.25).unwrap());
            let beta = rng.gen_range(-0.8..0.8);
            let f = ForcingField::Constant(rng.gen_range(-3.0..3.0));
            let mut s = scheme(&grid, beta, f);
            if trial % 2 == 0 {
                s = s.with_distance(DissipationDistance::Staircase);
            }
            let mut e0 = BinarySet::from_indices(&grid, (0..16).filter(|_| rng.gen_bool(0.5)));
            if e0.is_empty() {
                e0.set(0, true);
            }
            let tau = rng.gen_range(0.01..0.5);
            let p = StepProblem::build(&e0, tau, 1, &s).unwrap();
            let q = p.quantized().unwrap();
            let (best, meet, join) = brute_force(&q);
            let lo = minimize_step(&e0, tau, 1, &s, Select::Minimal).unwrap().set;
            let hi = minimize_step(&e0, tau, 1, &s, Select::Maximal).unwrap().set;
            let bits = |e: &BinarySet| (0..16).map(|i| e.get(i)).collect::<Vec<_>>();
            assert_eq!(q.eval(&bits(&lo)), best);
            assert_eq!(q.eval(&bits(&hi)), best);
            assert_eq!(lo, set_of(&grid, &meet));
            assert_eq!(hi, set_of(&grid, &join));
            // Float energies of the two extreme minimizers agree to rounding.
            let a = atw_energy(&lo, &e0, tau, 1, &s).unwrap().total;
            let b = atw_energy(&hi, &e0, tau, 1, &s).unwrap().total;
            assert!((a - b).abs() < 64.0 / p.scale());
        }
    }

    #[test]
    fn flow_records_and_minimality() {
        let grid = Arc::new(GridDomain::centered(2, 1.0, 1.0, 1.0 / 32.0).unwrap());
        let s = scheme(&grid, 0.2, ForcingField::Constant(0.5));
        let e0 = BinarySet::from_predicate(&grid, |x| x[0] * x[0] + x[1] * x[1] < 0.36);
        let st = run_flat_flow(&e0, 0.01, 0.1, &s, Select::Minimal).unwrap();
        assert_eq!(st.steps(), 10);
        assert!(st.truncated.is_none());
        for r in &st.records[1..] {
            let slack = 1e-9 * (1.0 + r.previous_value.abs());
            assert!(r.total <= r.previous_value + slack, "{r:?}");
        }
        assert!(st.records[10].volume < st.records[0].volume);
    }

    #[test]
    fn truncation_is_flagged() {
        let grid = Arc::new(GridDomain::centered(2, 0.5, 0.5, 1.0 / 32.0).unwrap());
        let s = scheme(&grid, 0.0, ForcingField::Constant(-20.0));
        let e0 = BinarySet::from_predicate(&grid, |x| x[0] * x[0] + x[1] * x[1] < 0.09);
        let st = run_flat_flow(&e0, 0.01, 1.0, &s, Select::Minimal).unwrap();
        assert!(st.truncated.is_some());
        assert!(st.steps() < 100);
    }
}
