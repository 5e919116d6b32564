//! Small estimators shared by the sampler and the analysis layer.
//!
//! Reductions run sequentially over already-collected vectors, so results do
//! not depend on the thread count.

use serde::Serialize;

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Estimate {
            mean,
            stderr: 0.0,
            n: 1,
        }
    }

    /// `|mean - target| <= k * stderr` (plus a rounding allowance).
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-12 * target.abs().max(1.0)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Mean and standard error for i.i.d. samples.
pub fn iid_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let stderr = if n > 1 {
        (sample_variance(xs) / n as f64).sqrt()
    } else {
        0.0
    };
    Estimate {
        mean: mean(xs),
        stderr,
        n,
    }
}

/// Sample covariance matrix of the column means of `rows` (each row one i.i.d.
/// draw of a vector), i.e. `Cov(x) / n`.
pub fn mean_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let means: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    if n < 2 {
        return cov;
    }
    for r in rows {
        for i in 0..d {
            let di = r[i] - means[i];
            for j in i..d {
                cov[i][j] += di * (r[j] - means[j]);
            }
        }
    }
    let denom = (n as f64 - 1.0) * n as f64;
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

/// Jackknife estimate of the variance of `xs` and its standard error.
///
/// Leave-one-out variances are formed from running sums, so the cost is `O(n)`.
pub fn jackknife_variance(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let full = sample_variance(xs);
    if n < 3 {
        return Estimate {
            mean: full,
            stderr: f64::INFINITY,
            n,
        };
    }
    let shift = mean(xs);
    let s1: f64 = xs.iter().map(|x| x - shift).sum();
    let s2: f64 = xs.iter().map(|x| (x - shift).powi(2)).sum();
    let m = (n - 1) as f64;
    let loo: Vec<f64> = xs
        .iter()
        .map(|x| {
            let d = x - shift;
            let a = s1 - d;
            let b = s2 - d * d;
            (b - a * a / m) / (m - 1.0)
        })
        .collect();
    let loo_mean = mean(&loo);
    let var_jk = m / n as f64 * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>();
    Estimate {
        mean: full,
        stderr: var_jk.sqrt(),
        n,
    }
}

/// Integrated autocorrelation time by Geyer's initial positive sequence.
pub fn integrated_autocorrelation_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(xs);
    let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = autocov(lag) + autocov(lag + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        lag += 2;
    }
    ((2.0 * sum - c0) / c0).max(1.0)
}

/// Mean of a correlated chain with IAT-corrected standard error.
pub fn chain_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return Estimate {
            mean: m,
            stderr: 0.0,
            n,
        };
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    let tau = integrated_autocorrelation_time(xs);
    Estimate {
        mean: m,
        stderr: (var * tau / n as f64).sqrt(),
        n,
    }
}
