//! Var F against the chaos integral int_0^inf e^{-t} E<rho>_{0,t} dt.
use spinchaos::analysis::{
    chaos_curve, default_grid, single_edge_chaos_curve, variance_direct, variance_from_chaos_integral,
    ChaosObservable, Engine,
};
use spinchaos::quadrature::single_edge_variance;
use spinchaos::{Beta, ModelSpec, SeedRecord};

fn main() -> spinchaos::Result<()> {
    let grid = default_grid();
    for beta in [0.5, 1.0, 2.0] {
        let integral = variance_from_chaos_integral(&single_edge_chaos_curve(beta, &grid)?)?;
        println!(
            "single edge beta={beta}: Var F={:.6} integral={:.6} (tail {:.1e})",
            single_edge_variance(beta),
            integral.value,
            integral.tail_bound
        );
    }
    let model = ModelSpec::sk(8)?;
    let beta = Beta::Finite(1.0);
    let direct = variance_direct(&model, beta, 4000, SeedRecord::new(1))?;
    let curve = chaos_curve(&model, beta, ChaosObservable::Kernel, &grid, 1000, Engine::Exact, SeedRecord::new(2))?;
    let integral = variance_from_chaos_integral(&curve)?;
    println!(
        "SK N=8 beta=1: Var F={:.4}+-{:.4} integral={:.4}+-{:.4}",
        direct.var.mean, direct.var.stderr, integral.value, integral.stderr
    );
    Ok(())
}
