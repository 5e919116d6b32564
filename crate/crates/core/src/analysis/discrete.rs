//! Discrete perturbation: resample a random size-`k` subset of the inputs and
//! compare `E sum_i d_i f(x) d_i f(x^A)` with `(n+1)/(k+1) Var f + 3 n delta eps gamma / 2`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hermite::{hermite_variance, Polynomial};
use crate::disorder::{fresh_disorder, random_mask, random_mask_with, resample_subset, SeedRecord};
use crate::error::{Error, Result};
use crate::exact::{build_gibbs_table, overlap_moment, Beta};
use crate::models::ModelSpec;
use crate::quadrature::abs_moment_quadrature;
use crate::stats::{iid_estimate, jackknife_variance, Estimate};

/// Largest input dimension for the exact `T_k` table.
pub const EXACT_TK_CAP: usize = 8;

/// The function being perturbed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FSpec {
    Polynomial { f: Polynomial },
    /// `sum_i x_i / sqrt(n)`.
    Linear { n: usize },
    /// `N^{-1/2} F_N(beta)` as a function of the `N^2` SK couplings.
    SkFreeEnergy { n_sites: usize, beta: f64 },
}

impl FSpec {
    pub fn n_inputs(&self) -> usize {
        match self {
            FSpec::Polynomial { f } => f.n_vars(),
            FSpec::Linear { n } => *n,
            FSpec::SkFreeEnergy { n_sites, .. } => n_sites * n_sites,
        }
    }

    fn polynomial(&self) -> Result<Option<Polynomial>> {
        Ok(match self {
            FSpec::Polynomial { f } => Some(f.clone()),
            FSpec::Linear { n } => {
                let c = 1.0 / (*n as f64).sqrt();
                Some(Polynomial::from_terms(
                    *n,
                    (0..*n).map(|i| {
                        let mut e = vec![0; *n];
                        e[i] = 1;
                        (e, c)
                    }),
                )?)
            }
            FSpec::SkFreeEnergy { .. } => None,
        })
    }
}

/// `gamma = E|X - X'|^3` for independent standard Gaussians, i.e.
/// `E|N(0,2)|^3 = 8 / sqrt(pi)`, by quadrature.
pub fn gaussian_gamma() -> f64 {
    abs_moment_quadrature(3.0, 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePerturbReport {
    pub n: usize,
    pub k: usize,
    /// `E sum_i d_i f(x) d_i f(x^A)`.
    pub lhs: Estimate,
    /// SK only: `E<R^2>` between the original and resampled measures
    /// (equal to `2 * lhs` under the `H = -X_N / sqrt(2N)` normalization).
    pub overlap: Option<Estimate>,
    /// Polynomial inputs: `Cov(f(x), f(x^A))`.
    pub cov_f: Option<Estimate>,
    pub var_f: Estimate,
    /// `sup |d_i f|`, infinite when unbounded.
    pub delta: f64,
    /// `sup |d_i^2 f|`.
    pub epsilon: f64,
    pub gamma: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// Exact `T_0..T_{n-1}` for small polynomial inputs.
    pub t_k: Option<Vec<f64>>,
}

impl DiscretePerturbReport {
    /// `lhs <= rhs` up to `n_sigma` combined standard errors, plus float
    /// rounding for the deterministic case where both are exact.
    pub fn holds_within(&self, n_sigma: f64) -> bool {
        let se = (self.lhs.stderr.powi(2) + self.rhs_stderr.powi(2)).sqrt();
        self.lhs.mean <= self.rhs + n_sigma * se + 1e-12 * self.rhs.abs().max(1.0)
    }
}

fn rhs_value(n: usize, k: usize, var_f: f64, delta: f64, epsilon: f64, gamma: f64) -> f64 {
    let correction = if epsilon == 0.0 || delta == 0.0 {
        0.0
    } else {
        1.5 * n as f64 * delta * epsilon * gamma
    };
    (n as f64 + 1.0) / (k as f64 + 1.0) * var_f + correction
}

/// Global bounds on the first and second partials of a polynomial on `R^n`.
fn derivative_bounds(f: &Polynomial) -> (f64, f64) {
    let n = f.n_vars();
    let mut delta: f64 = 0.0;
    let mut epsilon: f64 = 0.0;
    for i in 0..n {
        let d1 = f.derivative(i);
        delta = delta.max(d1.as_constant().map_or(f64::INFINITY, f64::abs));
        epsilon = epsilon.max(d1.derivative(i).as_constant().map_or(f64::INFINITY, f64::abs));
    }
    (delta, epsilon)
}

pub fn discrete_perturb_experiment(
    spec: &FSpec,
    k: usize,
    n_samples: usize,
    seed: SeedRecord,
) -> Result<DiscretePerturbReport> {
    let n = spec.n_inputs();
    if k > n {
        return Err(Error::invalid("k", format!("subset size {k} exceeds n = {n}")));
    }
    if n_samples < 3 {
        return Err(Error::invalid("n_samples", "need at least three samples"));
    }
    let gamma = gaussian_gamma();
    match spec {
        FSpec::SkFreeEnergy { n_sites, beta } => sk_experiment(*n_sites, *beta, k, n_samples, gamma, seed),
        _ => {
            let f = spec.polynomial()?.expect("polynomial spec");
            polynomial_experiment(&f, k, n_samples, gamma, seed)
        }
    }
}

fn polynomial_experiment(
    f: &Polynomial,
    k: usize,
    n_samples: usize,
    gamma: f64,
    seed: SeedRecord,
) -> Result<DiscretePerturbReport> {
    let n = f.n_vars();
    let grads: Vec<Polynomial> = (0..n).map(|i| f.derivative(i)).collect();
    let mean_f = f.expectation();
    let rows: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed.child(s as u64).rng();
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let xp: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let mask = random_mask_with(n, k, &mut rng)?;
            let mut xa = x.clone();
            for &i in mask.indices() {
                xa[i] = xp[i];
            }
            let lhs = grads.iter().map(|d| d.eval(&x) * d.eval(&xa)).sum();
            Ok((lhs, (f.eval(&x) - mean_f) * (f.eval(&xa) - mean_f)))
        })
        .collect::<Result<_>>()?;
    let lhs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let cov: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let var_f = hermite_variance(f)?.variance;
    let (delta, epsilon) = derivative_bounds(f);
    let t_k = if n <= EXACT_TK_CAP { Some(t_k_exact(f)?) } else { None };
    Ok(DiscretePerturbReport {
        n,
        k,
        lhs: iid_estimate(&lhs),
        overlap: None,
        cov_f: Some(iid_estimate(&cov)),
        var_f: Estimate::exact(var_f),
        delta,
        epsilon,
        gamma,
        rhs: rhs_value(n, k, var_f, delta, epsilon, gamma),
        rhs_stderr: 0.0,
        t_k,
    })
}

fn sk_experiment(
    n_sites: usize,
    beta: f64,
    k: usize,
    n_samples: usize,
    gamma: f64,
    seed: SeedRecord,
) -> Result<DiscretePerturbReport> {
    if !(beta > 0.0) || beta.is_infinite() {
        return Err(Error::invalid("beta", "need 0 < beta < inf"));
    }
    let model = ModelSpec::sk(n_sites)?;
    let m = n_sites * n_sites;
    let rows: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let sd = seed.child(s as u64);
            let g = fresh_disorder(m, sd.child(0))?;
            let gp = fresh_disorder(m, sd.child(1))?;
            let mask = random_mask(m, k, sd.child(2))?;
            let ga = resample_subset(&g, &gp, &mask)?;
            let ta = build_gibbs_table(&model, &g, Beta::Finite(beta))?;
            let tb = build_gibbs_table(&model, &ga, Beta::Finite(beta))?;
            Ok((overlap_moment(&ta, &tb, 1)?, ta.free_energy()))
        })
        .collect::<Result<_>>()?;
    let r2: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let scale = 1.0 / n_sites as f64;
    // f = F / sqrt(N), so Var f = Var F / N
    let fs: Vec<f64> = rows.iter().map(|r| r.1 * scale.sqrt()).collect();
    let var_f = jackknife_variance(&fs);
    let overlap = iid_estimate(&r2);
    let lhs = Estimate {
        mean: overlap.mean / 2.0,
        stderr: overlap.stderr / 2.0,
        n: overlap.n,
    };
    let nf = n_sites as f64;
    let delta = 1.0 / nf;
    let epsilon = beta / nf.powf(1.5);
    let factor = (m as f64 + 1.0) / (k as f64 + 1.0);
    Ok(DiscretePerturbReport {
        n: m,
        k,
        lhs,
        overlap: Some(overlap),
        cov_f: None,
        var_f,
        delta,
        epsilon,
        gamma,
        rhs: rhs_value(m, k, var_f.mean, delta, epsilon, gamma),
        rhs_stderr: factor * var_f.stderr,
        t_k: None,
    })
}

/// Exact `T_k = sum_i C(n-1,k)^{-1} sum_{A, |A| = k, i notin A} E(D_i f D_i f^A)`
/// for `k = 0..n-1`, with `D_i f^A = f^A - f^{A + i}`.
pub fn t_k_exact(f: &Polynomial) -> Result<Vec<f64>> {
    let n = f.n_vars();
    if n > EXACT_TK_CAP {
        return Err(Error::Resource { n, cap: EXACT_TK_CAP });
    }
    // variables 0..n are x, n..2n are x'
    let version = |set: u32| -> Polynomial {
        let map: Vec<usize> = (0..n).map(|j| if set >> j & 1 == 1 { n + j } else { j }).collect();
        f.embed(2 * n, &map)
    };
    let neg = |p: &Polynomial| -> Result<Polynomial> {
        p.mul(&Polynomial::from_terms(2 * n, [(vec![0; 2 * n], -1.0)])?)
    };
    let mut t = vec![0.0; n];
    let mut counts = vec![0usize; n];
    let f0 = version(0);
    for i in 0..n {
        let bit = 1u32 << i;
        let di = &f0 + &neg(&version(bit))?;
        for set in 0u32..1 << n {
            if set & bit != 0 {
                continue;
            }
            let k = set.count_ones() as usize;
            let dia = &version(set) + &neg(&version(set | bit))?;
            t[k] += di.mul(&dia)?.expectation();
            if i == 0 {
                counts[k] += 1;
            }
        }
    }
    for k in 0..n {
        t[k] /= counts[k] as f64;
    }
    Ok(t)
}

/// Monte Carlo `T_k` for an arbitrary `f` on `n` Gaussian inputs.
pub fn t_k_monte_carlo(
    f: impl Fn(&[f64]) -> f64 + Sync,
    n: usize,
    k: usize,
    n_samples: usize,
    seed: SeedRecord,
) -> Result<Estimate> {
    if n == 0 || k >= n {
        return Err(Error::invalid("k", format!("need 0 <= k < n = {n}")));
    }
    let xs: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed.child(s as u64).rng();
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let xp: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let i = rng.random_range(0..n);
            // size-k subset of [n] \ {i}
            let mask = random_mask_with(n - 1, k, &mut rng)?;
            let mut xa = x.clone();
            for &j in mask.indices() {
                let j = if j >= i { j + 1 } else { j };
                xa[j] = xp[j];
            }
            let mut xi = x.clone();
            xi[i] = xp[i];
            let mut xai = xa.clone();
            xai[i] = xp[i];
            Ok(n as f64 * (f(&x) - f(&xi)) * (f(&xa) - f(&xai)))
        })
        .collect::<Result<_>>()?;
    Ok(iid_estimate(&xs))
}
