//! Forward equation for the rate density under a clock/driver Fourier tilt.

use tcl_engine::activity::{conditional_cf_exponent, ActivityModel};
use tcl_engine::fokker_planck::{solve_qhat, SpatialGrid};

fn main() -> tcl_engine::Result<()> {
    let model = ActivityModel::cir(1.0, 0.5);
    let t = 1.0;
    let grid = SpatialGrid::for_model(&model, t, 321)?;
    let density = solve_qhat(&model, t, 0.0, 0.0, &grid, 2.5e-3)?;
    println!("mass at zero frequency: {:.8}", density.mass.re);
    for xi in [0.5, 1.0, 2.0] {
        let q = solve_qhat(&model, t, xi, 0.0, &grid, 2.5e-3)?;
        let riccati = conditional_cf_exponent(&model, t, 0.0, -xi)?;
        println!("E e^(-i{xi} T_1): forward equation {:.6}, Riccati {:.6}", q.mass, riccati.phi(model.v0).exp());
    }
    let q = solve_qhat(&model, t, 1.0, 1.0, &grid, 2.5e-3)?;
    println!("E e^(-i T_1 - i B_1) = {:.6}", q.mass);
    Ok(())
}
