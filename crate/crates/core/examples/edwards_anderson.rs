//! Edwards-Anderson on a cycle: variance lower bound, quenched chaos of the
//! bond overlap, and the no-chaos floor.
use spinchaos::analysis::{
    chaos_curve, ea_variance_lower_bound, quenched_chaos_statistic, variance_direct, ChaosObservable, Engine,
    NoChaosFloor,
};
use spinchaos::{Beta, Graph, ModelSpec, SeedRecord};

fn main() -> spinchaos::Result<()> {
    let graph = Graph::cycle(8)?;
    let model = ModelSpec::edwards_anderson(graph.clone());
    for beta in [Beta::Finite(0.25), Beta::Finite(1.0), Beta::Infinite] {
        let d = variance_direct(&model, beta, 5000, SeedRecord::new(1))?;
        println!(
            "beta={:?}: Var F={:.4}+-{:.4}, lower bound {:.4}",
            beta.value(),
            d.var.mean,
            d.var.stderr,
            ea_variance_lower_bound(&graph, beta)
        );
    }
    for t in [0.25, 1.0, 4.0] {
        let q = quenched_chaos_statistic(&graph, 2.0, t, 2000, Engine::Exact, SeedRecord::new(2))?;
        println!("t={t}: E<(Q-<Q>)^2>={:.4}+-{:.4} bound {:.4}", q.estimate.mean, q.estimate.stderr, q.bound);
    }
    let beta = Beta::Finite(1.0);
    let var_f = variance_direct(&model, beta, 5000, SeedRecord::new(3))?.var.mean;
    let grid = [0.0, 0.5, 1.0, 2.0];
    let curve = chaos_curve(&model, beta, ChaosObservable::Kernel, &grid, 5000, Engine::Exact, SeedRecord::new(4))?;
    let floor = NoChaosFloor::new(var_f, curve.phi_hat[0])?;
    for (i, &t) in grid.iter().enumerate() {
        println!("t={t}: E<rho>={:.4} floor={:.4}", curve.phi_hat[i], floor.at(t));
    }
    Ok(())
}
