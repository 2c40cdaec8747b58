//! Laplace transforms of the shipped SV1..SV4 two-factor presets, checked
//! against simulation.

use tcl_engine::cli::{prepare, ResolvedModel};
use tcl_engine::model_zoo::laplace_two_factor;
use tcl_engine::montecarlo::simulate_two_factor;
use tcl_engine::transforms::TransformNumerics;

fn main() {
    let num = TransformNumerics::default();
    for name in ["sv1", "sv2", "sv3", "sv4"] {
        let (_, resolved) = prepare(&format!("preset:{name}"), &[], &[]).expect("presets resolve");
        let ResolvedModel::TwoFactor { model } = resolved else { unreachable!() };
        let law = simulate_two_factor(&model, 1.0, 50_000, 4e-3, 5).and_then(|b| b.distribution()).unwrap();
        for r in [0.5, 1.0] {
            let exact = laplace_two_factor(&model, 1.0, r, &num).unwrap();
            let (mc, se) = law.laplace(r);
            println!("{name} r={r}: {exact:.6}  simulated {mc:.6} ± {se:.1e}");
        }
    }
}
