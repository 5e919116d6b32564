//! REM coincidence probability E<1{s1 = s2}>_{0,t} above and below beta_c.
//! At large beta the t=50 value comes from rare coincidences, so its error
//! bar is only trustworthy with many more draws than used here.
use spinchaos::analysis::rem_overlap_curve;
use spinchaos::{Beta, SeedRecord};

fn main() -> spinchaos::Result<()> {
    let n = 12;
    let grid = [0.0, 0.05, 0.2, 1.0, 50.0];
    println!("2^-N = {:.3e}", 0.5f64.powi(n as i32));
    for beta in [0.5, 1.5, 3.0] {
        let curve = rem_overlap_curve(n, Beta::Finite(beta), &grid, 5000, SeedRecord::new(1))?;
        let row: Vec<String> = curve
            .phi_hat
            .iter()
            .zip(&curve.stderr)
            .map(|(m, s)| format!("{m:.3e}+-{s:.0e}"))
            .collect();
        println!("beta={beta}: {}", row.join("  "));
    }
    Ok(())
}
