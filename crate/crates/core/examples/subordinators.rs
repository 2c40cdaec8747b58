//! Gamma and inverse-Gaussian subordinators: densities, Laplace transforms
//! and exact sampling.

use num_complex::Complex64;
use tcl_engine::levy::SubordinatorSpec;
use tcl_engine::montecarlo::EmpiricalDistribution;
use tcl_engine::rng::aux_rng;

fn main() -> tcl_engine::Result<()> {
    let y = 1.5;
    for spec in [SubordinatorSpec::gamma(0.2), SubordinatorSpec::inverse_gaussian(5.0)] {
        println!("{:?}", spec.family);
        println!("  E J_y = {:.6}, Var J_y = {:.6}", spec.mean(y), spec.variance(y));
        for j in [0.5, 1.0, 1.5, 2.5] {
            println!("  f(j={j}) = {:.6}", spec.density(y, j)?);
        }
        let mut rng = aux_rng(3, 0);
        let draws = EmpiricalDistribution::new((0..200_000).map(|_| spec.sample_increment(&mut rng, y)).collect())?;
        let exact = spec.laplace(Complex64::new(1.0, 0.0), y)?.re;
        let (mc, se) = draws.laplace(1.0);
        println!("  E e^(-J_y) = {exact:.6}, sampled {mc:.6} ± {se:.1e}");
    }
    Ok(())
}
