//! Glauber and Metropolis chains against the exact Gibbs table.
use spinchaos::disorder::fresh_disorder;
use spinchaos::exact::{build_gibbs_table, overlap_moment};
use spinchaos::models::site_overlap;
use spinchaos::sampler::{chain_average, pair_average, run_chain, sample_replica_pair, ChainConfig, Kernel, Perturbation};
use spinchaos::{Beta, ModelSpec, SeedRecord};

fn main() -> spinchaos::Result<()> {
    let model = ModelSpec::sk(12)?;
    let g = fresh_disorder(model.coupling_count(), SeedRecord::new(5))?;
    let beta = Beta::Finite(1.2);
    let table = build_gibbs_table(&model, &g, beta)?;
    let exact_r2 = overlap_moment(&table, &table, 1)?;
    println!("exact: <H>={:.4} <R^2>={:.4}", table.mean_energy(), exact_r2);
    for kernel in [Kernel::Glauber, Kernel::Metropolis] {
        let mut cfg = ChainConfig::with_default_burn_in(12, 50_000, SeedRecord::new(6));
        cfg.kernel = kernel;
        let states = run_chain(&model, &g, beta, &cfg)?;
        let h = chain_average(&states, |s| model.hamiltonian(&g, s).expect("sized"));
        let pairs = sample_replica_pair(&model, &g, &g, beta, &cfg, Perturbation::Identical)?;
        let r2 = pair_average(&pairs, |a, b| site_overlap(a, b).expect("sized").powi(2));
        println!(
            "{kernel:?}: <H>={:.4}+-{:.4} <R^2>={:.4}+-{:.4}",
            h.mean, h.stderr, r2.mean, r2.stderr
        );
    }
    Ok(())
}
