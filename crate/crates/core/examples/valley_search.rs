//! Multiple-valley search on SK: perturbed-Gibbs draws, their certificate,
//! and the level-alpha variant.
use spinchaos::valleys::{asymptotic_schedule, valley_pass_rate};
use spinchaos::{ModelSpec, SeedRecord};

fn main() -> spinchaos::Result<()> {
    let n = 18;
    let model = ModelSpec::sk(n)?;
    let mut params = asymptotic_schedule(n)?;
    params.r = 3;
    params.delta = 0.3;
    params.epsilon = 0.2;
    println!(
        "beta={:.3} t={:.3} r={} epsilon={} delta={}",
        params.beta, params.t, params.r, params.epsilon, params.delta
    );
    let rate = valley_pass_rate(&model, &params, None, 20, SeedRecord::new(10))?;
    for (d, r) in rate.reports.iter().enumerate() {
        let off: Vec<String> = (0..r.configs.len())
            .flat_map(|i| (i + 1..r.configs.len()).map(move |j| (i, j)))
            .map(|(i, j)| format!("{:.3}", r.kernel_ratio[i][j]))
            .collect();
        let x: Vec<String> = r.field_ratio.iter().map(|v| format!("{v:.3}")).collect();
        println!("draw {d:2}: X/M=[{}] rho/sigma2=[{}] pass={}", x.join(", "), off.join(", "), r.pass);
    }
    println!("pass rate {}/{}", rate.passes, rate.total);

    let mut worst: Vec<f64> = rate
        .reports
        .iter()
        .map(|r| r.field_ratio.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    worst.sort_by(f64::total_cmp);
    println!("median over draws of min X/M: {:.3}", worst[worst.len() / 2]);

    let level = valley_pass_rate(&model, &params, Some(0.5), 20, SeedRecord::new(11))?;
    println!("level alpha=0.5: pass rate {}/{}", level.passes, level.total);
    Ok(())
}
