//! Unforced half-disk on a neutral floor: area of the flat flow against π(R0² − 2t)/2.
//!
//! Usage: `cargo run --release --example half_disk -- [tau] [1/h]`

use std::sync::Arc;

use capflow::graphcut::Select;
use capflow::gridset::{BinarySet, GridDomain};
use capflow::stepper::{run_flat_flow, ContactAngleField, ForcingField, Scheme};
use capflow::Anisotropy;

fn main() -> capflow::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let tau = args.first().copied().unwrap_or(1e-2);
    let h = 1.0 / args.get(1).copied().unwrap_or(128.0);
    let (r0, t_end) = (1.0, 0.25);

    let half_width = ((r0 + 6.0 * h) / h).ceil() * h;
    let grid = Arc::new(GridDomain::centered(2, half_width, half_width, h)?);
    let phi = Anisotropy::euclidean(2)?;
    let beta = ContactAngleField::constant(&grid, &phi, 0.0)?;
    let scheme = Scheme::new(&grid, &phi, beta, ForcingField::zero())?;
    let e0 = BinarySet::from_predicate(&grid, |x| x[0] * x[0] + x[1] * x[1] <= r0 * r0);

    let clock = std::time::Instant::now();
    let flow = run_flat_flow(&e0, tau, t_end, &scheme, Select::Minimal)?;
    println!("tau = {tau}, h = 1/{}", (1.0 / h).round());
    for t in [0.05, 0.1, 0.15, 0.2, 0.25] {
        let area = flow.at_time(t).volume();
        let exact = std::f64::consts::PI * (r0 * r0 - 2.0 * t) / 2.0;
        println!("t = {t:.2}  area = {area:.5}  exact = {exact:.5}  rel = {:+.4}", area / exact - 1.0);
    }
    println!("{} steps in {:.1} s", flow.steps(), clock.elapsed().as_secs_f64());
    Ok(())
}
