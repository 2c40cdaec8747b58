//! Simulated returns compared with the transform pipelines.

use tcl_engine::activity::ActivityModel;
use tcl_engine::levy::{LevyComposition, SubordinatorSpec};
use tcl_engine::montecarlo::{compare, simulate_paths};
use tcl_engine::transforms::{cf_Y_grid, laplace_Y_grid, TransformNumerics};

fn main() -> tcl_engine::Result<()> {
    let model = ActivityModel::cir(1.0, 0.5);
    let spec = SubordinatorSpec::gamma(0.2);
    let levy = LevyComposition::standard(-0.5);
    let num = TransformNumerics::default();
    let paths = simulate_paths(&model, &levy, &spec, 1.0, 100_000, 2e-3, 17)?;
    let law = paths.distribution()?;
    println!("mean {:.5} ± {:.1e}, skewness {:.4} ± {:.4}", law.mean(), law.mean_stderr(), law.skewness(), law.skewness_stderr());
    println!("correlation audit: {:?}", paths.correlation_audit());
    let cf = compare(&law, &cf_Y_grid(&model, &levy, &spec, 1.0, &[0.5, 1.0, 2.0], &num)?)?;
    println!("max cf error {:.2e} (largest stderr {:.1e})", cf.max_cf_error.unwrap(), cf.max_stderr.unwrap());
    let lap = compare(&law, &laplace_Y_grid(&model, &levy, &spec, 1.0, &[0.5, 1.0], &num)?)?;
    println!("max Laplace relative error {:.2e} (stderr {:.1e})", lap.max_laplace_rel_error.unwrap(), lap.max_stderr.unwrap());
    Ok(())
}
