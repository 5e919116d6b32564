//! Coupled disorder: OU interpolation, subset resampling, and reproducible seeds.
use spinchaos::disorder::{fresh_disorder, mix, ou_weights, random_mask, resample_subset, SeedRecord};

fn corr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

fn main() -> spinchaos::Result<()> {
    let root = SeedRecord::new(2024);
    let m = 20_000;
    let g = fresh_disorder(m, root.child(0))?;
    let g_fresh = fresh_disorder(m, root.child(1))?;
    for t in [0.0, 0.1, 0.5, 1.0, 3.0, 50.0] {
        let (a, b) = ou_weights(t)?;
        let gt = mix(&g, &g_fresh, a, b)?;
        println!("t={t:<4} e^-t={:.4} empirical corr={:.4}", (-t as f64).exp(), corr(g.values(), gt.values()));
    }
    let mask = random_mask(m, m / 4, root.child(2))?;
    let ga = resample_subset(&g, &g_fresh, &mask)?;
    println!("resampled {} of {m}: corr={:.4}", mask.k(), corr(g.values(), ga.values()));
    assert_eq!(fresh_disorder(m, root.child(0))?, g);
    Ok(())
}
