use std::f64::consts::PI;

use capflow::oracle2d::{
    compare_fronts, phi_curvature, run_front, strong_comparison_check, FrontOptions, SmoothCurve,
};
use capflow::stepper::ForcingField;
use capflow::{Anisotropy, Error};

fn euclid() -> Anisotropy {
    Anisotropy::euclidean(2).unwrap()
}

fn radius_of(c: &SmoothCurve) -> f64 {
    (2.0 * c.area() / PI).sqrt()
}

/// Classical RK4 for Ṙ = −1/R − c.
fn ode_radius(r0: f64, c: f64, t: f64) -> f64 {
    let n = 200_000;
    let h = t / n as f64;
    let g = |r: f64| -1.0 / r - c;
    let mut r = r0;
    for _ in 0..n {
        let k1 = g(r);
        let k2 = g(r + 0.5 * h * k1);
        let k3 = g(r + 0.5 * h * k2);
        let k4 = g(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    r
}

#[test]
fn half_circle_follows_the_radius_law() {
    let c = SmoothCurve::half_circle(0.0, 1.0, 512).unwrap();
    let opts = FrontOptions { dt_max: 1e-4, sample_dt: 0.02 };
    let run = run_front(&c, &euclid(), |_| 0.0, &ForcingField::zero(), 0.4, &opts).unwrap();
    assert!(run.stopped.is_none());
    for s in &run.samples {
        let exact = (1.0 - 2.0 * s.time()).sqrt();
        let rel = radius_of(s) / exact - 1.0;
        assert!(rel.abs() < 0.01, "t = {}: rel {rel}", s.time());
    }
}

#[test]
fn constant_forcing_matches_the_ode() {
    for c in [0.5, -0.5] {
        let curve = SmoothCurve::half_circle(0.0, 1.0, 512).unwrap();
        let opts = FrontOptions { dt_max: 1e-4, sample_dt: 0.05 };
        let run = run_front(&curve, &euclid(), |_| 0.0, &ForcingField::Constant(c), 0.25, &opts).unwrap();
        for s in &run.samples[1..] {
            let r = ode_radius(1.0, c, s.time());
            let area = 0.5 * PI * r * r;
            assert!((s.area() / area - 1.0).abs() < 0.01, "c = {c}, t = {}", s.time());
        }
    }
}

#[test]
fn error_is_at_least_first_order() {
    let err = |m: usize, dt: f64| {
        let c = SmoothCurve::half_circle(0.0, 1.0, m).unwrap();
        let opts = FrontOptions { dt_max: dt, sample_dt: 0.05 };
        let run = run_front(&c, &euclid(), |_| 0.0, &ForcingField::zero(), 0.3, &opts).unwrap();
        run.samples.iter().map(|s| (radius_of(s) / (1.0 - 2.0 * s.time()).sqrt() - 1.0).abs()).fold(0.0, f64::max)
    };
    let coarse = err(128, 4e-4);
    let fine = err(256, 2e-4);
    assert!(coarse / fine > 1.8, "{coarse} → {fine}");
}

#[test]
fn capillary_energy_decreases_without_forcing() {
    let phi = Anisotropy::diag(&[1.3, 1.0]).unwrap();
    let beta = |x: f64| 0.3 + 0.2 * (3.0 * x).sin();
    let c = SmoothCurve::radial(0.1, |a| 0.7 + 0.15 * (4.0 * a).cos(), 256).unwrap();
    let opts = FrontOptions { dt_max: 2e-4, sample_dt: 0.005 };
    let run = run_front(&c, &phi, beta, &ForcingField::zero(), 0.1, &opts).unwrap();
    let tol = 2.0 * c.min_spacing() * c.min_spacing();
    let energies: Vec<f64> = run.samples.iter().map(|s| s.capillary(&phi, beta)).collect();
    for w in energies.windows(2) {
        assert!(w[1] <= w[0] + tol, "{} → {}", w[0], w[1]);
    }
    assert!(energies.last().unwrap() < &(energies[0] - 0.05));
}

#[test]
fn signed_distance_moves_with_curvature_plus_forcing() {
    let phi = Anisotropy::diag(&[1.5, 1.0]).unwrap();
    let f = ForcingField::Constant(0.4);
    let c = SmoothCurve::radial(0.0, |a| 0.8 + 0.1 * (2.0 * a).cos(), 512).unwrap();
    let dt = 2e-3;
    let opts = FrontOptions { dt_max: 5e-5, sample_dt: dt };
    let run = run_front(&c, &phi, |_| 0.0, &f, dt, &opts).unwrap();
    let next = run.last();
    for node in [64, 128, 256, 384, 448] {
        let x = c.nodes()[node];
        let rate = (next.signed_distance(x) - c.signed_distance(x)) / dt;
        let expected = phi_curvature(&c, &phi, node).unwrap() + 0.4;
        assert!((rate - expected).abs() < 0.03 * expected.abs().max(1.0), "node {node}: {rate} vs {expected}");
    }
}

/// κ^Φ = div ∇Φ(∇sd) evaluated by finite differences of the normal field of an ellipse.
fn ellipse_phi_curvature(phi: &Anisotropy, a: f64, b: f64, x: [f64; 2]) -> f64 {
    let closest_normal = |p: [f64; 2]| {
        let mut s = (p[1] / b).atan2(p[0] / a);
        for _ in 0..50 {
            let (c, sn) = (s.cos(), s.sin());
            let d = [a * c - p[0], b * sn - p[1]];
            let t = [-a * sn, b * c];
            let g = d[0] * t[0] + d[1] * t[1];
            let h = t[0] * t[0] + t[1] * t[1] + d[0] * (-a * c) + d[1] * (-b * sn);
            s -= g / h;
        }
        let n = [b * s.cos(), a * s.sin()];
        let l = n[0].hypot(n[1]);
        [n[0] / l, n[1] / l]
    };
    let field = |p: [f64; 2]| phi.gradient(&closest_normal(p)).unwrap();
    let d = 1e-5;
    let dx = (field([x[0] + d, x[1]])[0] - field([x[0] - d, x[1]])[0]) / (2.0 * d);
    let dy = (field([x[0], x[1] + d])[1] - field([x[0], x[1] - d])[1]) / (2.0 * d);
    dx + dy
}

#[test]
fn anisotropic_curvature_matches_the_divergence_definition() {
    let phi = Anisotropy::diag(&[2.0, 1.0]).unwrap();
    let (a, b) = (0.8, 0.5);
    let m = 512;
    let nodes = (0..=m)
        .map(|i| {
            let s = PI * i as f64 / m as f64;
            if i == 0 || i == m {
                [a * s.cos(), 0.0]
            } else {
                [a * s.cos(), b * s.sin()]
            }
        })
        .collect();
    let c = SmoothCurve::new(nodes, 0.0).unwrap();
    for node in (8..m - 8).step_by(37) {
        let x = c.nodes()[node];
        let k = phi_curvature(&c, &phi, node).unwrap();
        let oracle = ellipse_phi_curvature(&phi, a, b, x);
        assert!((k / oracle - 1.0).abs() < 0.02, "node {node}: {k} vs {oracle}");
    }
}

#[test]
fn nested_half_circles_stay_ordered_until_extinction() {
    let inner = SmoothCurve::half_circle(0.0, 0.5, 256).unwrap();
    let outer = SmoothCurve::half_circle(0.0, 1.0, 256).unwrap();
    let zero = ForcingField::zero();
    let opts = FrontOptions { dt_max: 2e-4, sample_dt: 0.005 };
    let rep = strong_comparison_check(&inner, &outer, &euclid(), |_| 0.0, |_| 0.0, &zero, &zero, 0.3, &opts).unwrap();
    assert!(rep.nested());
    let (t_stop, _) = rep.stopped.clone().expect("the inner droplet vanishes first");
    assert!(t_stop > 0.11 && t_stop < 0.127, "{t_stop}");
    // Exact radii give a gap of √(1 − 2t) − √(0.25 − 2t); the square root makes
    // the comparison ill-conditioned right at extinction.
    for (t, g) in rep.times.iter().zip(&rep.gaps).filter(|(t, _)| **t <= 0.1) {
        let exact = (1.0 - 2.0 * t).sqrt() - (0.25 - 2.0 * t).sqrt();
        assert!((g - exact).abs() < 0.02, "t = {t}: {g} vs {exact}");
    }
}

#[test]
fn stronger_forcing_separates_identical_droplets() {
    let c = SmoothCurve::radial(0.0, |a| 0.8 + 0.1 * (3.0 * a).sin(), 256).unwrap();
    let beta = |x: f64| 0.2 * x;
    let opts = FrontOptions { dt_max: 2e-4, sample_dt: 0.01 };
    let rep = compare_fronts(
        &c,
        &c,
        &euclid(),
        beta,
        beta,
        &ForcingField::Constant(1.0),
        &ForcingField::zero(),
        0.1,
        &opts,
    )
    .unwrap();
    assert_eq!(rep.gaps[0], 0.0);
    assert!(rep.nested(), "{:?}", rep.inside);
    assert!(rep.min_gap() > 0.0);
}

#[test]
fn touching_droplets_are_rejected() {
    let c = SmoothCurve::half_circle(0.0, 1.0, 64).unwrap();
    let zero = ForcingField::zero();
    let e = strong_comparison_check(&c, &c, &euclid(), |_| 0.0, |_| 0.0, &zero, &zero, 0.1, &FrontOptions::default());
    assert!(matches!(e, Err(Error::Precondition(_))));
}
