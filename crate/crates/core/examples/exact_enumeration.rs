//! Exact Gibbs measure of one SK instance by full enumeration.
use spinchaos::disorder::{fresh_disorder, SeedRecord};
use spinchaos::exact::{build_gibbs_table, overlap_moment, Beta};
use spinchaos::ModelSpec;

fn main() -> spinchaos::Result<()> {
    let n = 14;
    let model = ModelSpec::sk(n)?;
    let g = fresh_disorder(model.coupling_count(), SeedRecord::new(7))?;
    for beta in [0.5, 1.0, 2.0] {
        let table = build_gibbs_table(&model, &g, Beta::Finite(beta))?;
        println!(
            "beta={beta}: F={:.4} <H>={:.4} <R^2>={:.4} <R^4>={:.4}",
            table.free_energy(),
            table.mean_energy(),
            overlap_moment(&table, &table, 1)?,
            overlap_moment(&table, &table, 2)?,
        );
    }
    let cold = build_gibbs_table(&model, &g, Beta::Infinite)?;
    println!("ground energy {:.4}", cold.ground_energy());
    for s in cold.ground_states() {
        println!("  {s}");
    }
    Ok(())
}
