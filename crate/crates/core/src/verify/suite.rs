//! Runs a configured list of checks over the flows of one configuration.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::oracle2d::{run_front, FrontOptions};
use crate::stepper::{run_flat_flow, FlatFlowState, Scheme};

use super::{
    check_coercivity, check_comparison_suite, check_consistency, check_density_estimates, check_euler_lagrange,
    check_holder, check_linf_displacement, check_volume_distance, check_winterbottom_containment, check_wulff_avoidance,
    BallSide, CheckReport, ComparisonSuite, DensityOptions,
};

pub const ALL_CHECKS: &[&str] = &[
    "coercivity",
    "density",
    "linf",
    "holder",
    "volume_distance",
    "euler_lagrange",
    "consistency",
    "winterbottom",
    "wulff",
    "comparison",
];

/// Flat flows for every τ of the configuration, run concurrently, coarsest first.
pub fn run_flows(cfg: &RunConfig, scheme: &Scheme) -> Result<Vec<FlatFlowState>> {
    let e0 = cfg.initial_set(&scheme.grid)?;
    let mut taus = cfg.taus.clone();
    taus.sort_by(|a, b| b.total_cmp(a));
    std::thread::scope(|s| {
        let handles: Vec<_> = taus
            .iter()
            .map(|&tau| {
                let e0 = &e0;
                s.spawn(move || run_flat_flow(e0, tau, cfg.t_end, scheme, cfg.select))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("flat-flow worker panicked")).collect()
    })
}

/// Evaluates the named checks (all applicable ones when `names` is empty).
/// `flows` must be ordered from coarsest to finest τ.
pub fn run_checks(cfg: &RunConfig, scheme: &Scheme, flows: &[FlatFlowState], names: &[String]) -> Result<Vec<CheckReport>> {
    let selected: Vec<&str> =
        if names.is_empty() { ALL_CHECKS.to_vec() } else { names.iter().map(String::as_str).collect() };
    if let Some(bad) = selected.iter().find(|n| !ALL_CHECKS.contains(n)) {
        return Err(Error::Config(format!("unknown check '{bad}' (known: {})", ALL_CHECKS.join(", "))));
    }
    let finest = flows.last().ok_or_else(|| Error::Precondition("no flows to check".into()))?;
    let expected = cfg.expected_values()?;
    let h = scheme.grid.h();
    let one = |name: &str| -> Result<Vec<CheckReport>> {
        Ok(match name {
            "coercivity" => {
                let sets: Vec<_> = flows.iter().flat_map(|f| f.sets.iter().cloned()).collect();
                vec![check_coercivity(&sets, scheme)?]
            }
            "density" => {
                let radii = if cfg.density_radii.is_empty() { vec![8.0 * h] } else { cfg.density_radii.clone() };
                let opts = DensityOptions {
                    radii,
                    theta_floor: expected.get("theta").map(|t| 0.5 * t),
                    stride: (finest.steps() / 32).max(1),
                    ..Default::default()
                };
                vec![check_density_estimates(finest, scheme, &opts)?]
            }
            "linf" => flows.iter().map(|f| named(check_linf_displacement(f, expected.get("linf_theta")), f)).collect(),
            "holder" => {
                let bound = expected.get("holder_constant").map(|c| 2.0 * c);
                let mut reps = flows
                    .iter()
                    .map(|f| check_holder(f, 4, 0.1, bound).map(|r| named(r, f)))
                    .collect::<Result<Vec<_>>>()?;
                let consts: Vec<f64> = reps.iter().filter_map(|r| r.value("holder_constant")).collect();
                if consts.len() > 1 {
                    let mut spread = CheckReport::new("holder_spread");
                    let (lo, hi) = consts.iter().fold((f64::INFINITY, 0.0f64), |(l, u), c| (l.min(*c), u.max(*c)));
                    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
                    spread.measure("max_over_min", ratio, Some(2.0));
                    if !(ratio < 2.0) {
                        spread.fail(format!("constants range over [{lo:.4}, {hi:.4}]"));
                    }
                    reps.push(spread);
                }
                reps
            }
            "volume_distance" => flows
                .iter()
                .map(|f| check_volume_distance(f, 1.0, expected.get("c4")).map(|r| named(r, f)))
                .collect::<Result<_>>()?,
            "euler_lagrange" => {
                if scheme.grid.dim() != 2 || finest.steps() == 0 {
                    vec![CheckReport::skipped("euler_lagrange", "needs a planar run with at least one step")]
                } else {
                    let k = (finest.steps() / 2).max(1);
                    let b = expected.get("euler_lagrange_h_tau");
                    vec![check_euler_lagrange(&finest.sets[k], &finest.sets[k - 1], finest.tau, k, scheme, b)?]
                }
            }
            "consistency" => match (cfg.r0, cfg.initial_curve()) {
                (Some(r0), Ok(curve)) => {
                    let opts = FrontOptions { dt_max: cfg.oracle_dt, sample_dt: cfg.t_end / 10.0 };
                    let run = run_front(&curve, &scheme.phi, cfg.beta_fn()?, &scheme.forcing, cfg.t_end, &opts)?;
                    let times = [0.0, 0.5 * cfg.t_end, cfg.t_end];
                    let budget = expected.get("consistency_budget");
                    flows
                        .iter()
                        .map(|f| check_consistency(f, &run, &times, r0, budget).map(|(r, _)| named(r, f)))
                        .collect::<Result<_>>()?
                }
                _ => vec![CheckReport::skipped("consistency", "needs r0 and a planar half_disk or arc datum")],
            },
            "winterbottom" => match &cfg.winterbottom {
                Some(w) => flows
                    .iter()
                    .map(|f| check_winterbottom_containment(f, scheme, w.beta0, w.r0, &w.center).map(|r| named(r, f)))
                    .collect::<Result<_>>()?,
                None => vec![CheckReport::skipped("winterbottom", "no winterbottom fixture configured")],
            },
            "wulff" => match &cfg.wulff {
                Some(w) => {
                    let side = if w.inside { BallSide::Inside } else { BallSide::Outside };
                    let v0 = expected.get("vartheta0").unwrap_or(1.0);
                    flows
                        .iter()
                        .map(|f| check_wulff_avoidance(f, scheme, &w.point, w.r0, side, v0).map(|r| named(r, f)))
                        .collect::<Result<_>>()?
                }
                None => vec![CheckReport::skipped("wulff", "no wulff fixture configured")],
            },
            "comparison" => vec![check_comparison_suite(cfg.seed, &ComparisonSuite::default())?],
            _ => unreachable!("names are validated above"),
        })
    };
    let results: Vec<Result<Vec<CheckReport>>> = std::thread::scope(|s| {
        let one = &one;
        let handles: Vec<_> = selected.iter().map(|&n| s.spawn(move || one(n))).collect();
        handles.into_iter().map(|h| h.join().expect("check worker panicked")).collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Appends the step size to a per-flow report name.
fn named(mut r: CheckReport, f: &FlatFlowState) -> CheckReport {
    r.name = format!("{}[tau={}]", r.name, f.tau);
    r
}
