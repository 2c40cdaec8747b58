//! The CIR business clock: Riccati moments against simulated paths.

use tcl_engine::activity::{clock_mgf, clock_moments, simulate_clock, ActivityModel};
use tcl_engine::montecarlo::EmpiricalDistribution;

fn main() -> tcl_engine::Result<()> {
    let model = ActivityModel::cir(1.0, 0.5);
    let paths = simulate_clock(&model, 2.0, 2e-3, 20_000, 11)?;
    let law = EmpiricalDistribution::new(paths.terminal_clock.clone())?;
    let exact = clock_moments(&model, 2.0)?;
    println!("E T_2   = {:.5} (simulated {:.5} ± {:.1e})", exact.mean, law.mean(), law.mean_stderr());
    println!("Var T_2 = {:.5} (simulated {:.5} ± {:.1e})", exact.variance, law.variance(), law.variance_stderr());
    for u in [-1.0, -0.5, 0.25] {
        let (mc, se) = law.laplace(-u);
        println!("E e^(u T_2), u = {u}: {:.6} (simulated {mc:.6} ± {se:.1e})", clock_mgf(&model, 2.0, u)?);
    }
    let r = &paths.recorded[0];
    println!("first path: v_2 = {:.4}, T_2 = {:.4}", r.rate.last().unwrap(), r.clock.last().unwrap());
    Ok(())
}
