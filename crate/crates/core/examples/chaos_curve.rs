//! Disorder chaos in SK: E<R^2>_{0,t} over a grid, its monotonicity checks,
//! and the interpolation bound at larger t.
use spinchaos::analysis::{chaos_curve, chaos_from_interpolation_inf, check_complete_monotonicity, ChaosObservable, Engine};
use spinchaos::{Beta, ModelSpec, SeedRecord};

fn main() -> spinchaos::Result<()> {
    let model = ModelSpec::sk(10)?;
    let beta = 1.5;
    let grid = [0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 50.0];
    let curve = chaos_curve(
        &model,
        Beta::Finite(beta),
        ChaosObservable::OverlapMoment { k: 1 },
        &grid,
        500,
        Engine::Exact,
        SeedRecord::new(3),
    )?;
    let s_grid: Vec<f64> = (1..=60).map(|i| i as f64 * 0.25).collect();
    println!("t, E<R^2>, stderr, interpolation bound");
    for (i, &t) in grid.iter().enumerate() {
        let bound = chaos_from_interpolation_inf(&model, beta, t, &s_grid, 1, curve.phi_hat[0])?;
        let bound = if bound.is_finite() { format!("{bound:.5}") } else { "-".into() };
        println!("{t:>5} {:.5} {:.5} {bound}", curve.phi_hat[i], curve.stderr[i]);
    }
    let report = check_complete_monotonicity(&curve, 3.0);
    println!(
        "{} pairs, {} triples checked, {} violations",
        report.pairs_checked,
        report.triples_checked,
        report.violations.len()
    );
    print!("{}", curve.to_csv());
    Ok(())
}
