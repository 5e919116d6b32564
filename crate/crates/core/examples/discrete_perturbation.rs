//! Resampling k of n inputs: sum_i E d_i f(x) d_i f(x^A) against
//! (n+1)/(k+1) Var f + 3 n delta epsilon gamma / 2.
use spinchaos::analysis::{discrete_perturb_experiment, t_k_exact, FSpec, Polynomial};
use spinchaos::SeedRecord;

fn main() -> spinchaos::Result<()> {
    let linear = FSpec::Linear { n: 6 };
    for k in 0..=6 {
        let r = discrete_perturb_experiment(&linear, k, 20_000, SeedRecord::new(k as u64))?;
        let cov = r.cov_f.expect("polynomial input");
        println!(
            "linear n=6 k={k}: lhs={:.4} rhs={:.4} Cov(f, f^A)={:.4}+-{:.4}",
            r.lhs.mean, r.rhs, cov.mean, cov.stderr
        );
    }
    let t_k = t_k_exact(&Polynomial::from_terms(3, [(vec![1, 1, 0], 1.0), (vec![0, 0, 2], 0.5)])?)?;
    println!("T_k for g1 g2 + g3^2 / 2: {t_k:?}");
    let sk = FSpec::SkFreeEnergy { n_sites: 8, beta: 1.0 };
    for k in [0, 16, 32, 64] {
        let r = discrete_perturb_experiment(&sk, k, 1000, SeedRecord::new(100 + k as u64))?;
        let o = r.overlap.expect("SK input");
        println!("SK N=8 k={k}: E<R^2>={:.4}+-{:.4} rhs={:.4}", o.mean, o.stderr, r.rhs);
    }
    Ok(())
}
