//! Density, characteristic function and Laplace transform of a correlated
//! time-changed return.

use tcl_engine::activity::ActivityModel;
use tcl_engine::levy::{LevyComposition, SubordinatorSpec};
use tcl_engine::transforms::{cf_Y_grid, laplace_Y_grid, pdf_Y, TransformNumerics};

fn main() -> tcl_engine::Result<()> {
    let model = ActivityModel::cir(1.0, 0.5);
    let spec = SubordinatorSpec::gamma(0.2);
    let levy = LevyComposition::new(0.0, 1.0, -0.7)?;
    let num = TransformNumerics::default();
    let t = 1.0;

    let grid: Vec<f64> = (0..=120).map(|k| -6.0 + 0.1 * k as f64).collect();
    let pdf = pdf_Y(&model, &levy, &spec, t, &grid, &num)?;
    println!("density: mass {:.6}, mean {:.6}", pdf.mass(), pdf.mean());
    for y in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let k = grid.iter().position(|&g| (g - y).abs() < 1e-9).unwrap();
        println!("  f({y:+.1}) = {:.6}", pdf.values[k].re);
    }
    let cf = cf_Y_grid(&model, &levy, &spec, t, &[0.5, 1.0, 2.0], &num)?;
    for (theta, v) in cf.arguments.iter().zip(&cf.values) {
        println!("E e^(i{theta} Y) = {v:.6}");
    }
    let lap = laplace_Y_grid(&model, &levy, &spec, t, &[0.5, 1.0], &num)?;
    for (r, v) in lap.arguments.iter().zip(&lap.values) {
        println!("E e^(-{r} Y) = {:.6}", v.re);
    }
    print!("{}", lap.to_csv());
    Ok(())
}
