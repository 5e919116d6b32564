//! Constructive search for several near-maximal, mutually near-orthogonal
//! configurations, and the certificate that checks them.
//!
//! Each candidate is one exact draw from the Gibbs measure of an independently
//! OU-perturbed copy of the disorder; candidates are then judged against the
//! unperturbed field.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{fresh_disorder, mix, ou_weights, DisorderVector, SeedRecord};
use crate::error::{Error, Result};
use crate::exact::{build_gibbs_table, field_summary, Beta, ENUMERATION_CAP};
use crate::models::{site_overlap, ModelSpec, SpinConfiguration};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValleyParams {
    pub r: usize,
    /// Bound on pairwise `rho / sigma^2`.
    pub epsilon: f64,
    /// Relative energy slack against the maximum `M`.
    pub delta: f64,
    pub beta: f64,
    pub t: f64,
}

impl ValleyParams {
    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(Error::invalid("r", format!("need at least 2 valleys, got {}", self.r)));
        }
        for (field, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(field, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.beta > 0.0) || self.beta.is_infinite() {
            return Err(Error::invalid("beta", format!("need 0 < beta < inf, got {}", self.beta)));
        }
        if !(self.t >= 0.0) || self.t.is_infinite() {
            return Err(Error::InvalidTime(self.t));
        }
        Ok(())
    }
}

/// `beta = e^{sqrt(log N)}`, `r = floor((log N)^{1/8})` raised to 2,
/// `delta = (log N)^{-1/8}`, `t = (log N)^{-1/3}`, `epsilon = e^{-(log N)^{1/8}}`.
pub fn asymptotic_schedule(n: usize) -> Result<ValleyParams> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("schedule needs N >= 3, got {n}")));
    }
    let l = (n as f64).ln();
    Ok(ValleyParams {
        r: (l.powf(0.125).floor() as usize).max(2),
        epsilon: (-l.powf(0.125)).exp(),
        delta: l.powf(-0.125),
        beta: l.sqrt().exp(),
        t: l.powf(-1.0 / 3.0),
    })
}

/// Energy condition applied by the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnergyTest {
    /// `X >= (1 - delta) M`.
    NearMax { delta: f64 },
    /// `|X - alpha M| <= 5 delta |M|`.
    Level { alpha: f64, delta: f64 },
}

impl EnergyTest {
    fn holds(&self, x: f64, m: f64) -> bool {
        match *self {
            EnergyTest::NearMax { delta } => x >= (1.0 - delta) * m,
            EnergyTest::Level { alpha, delta } => (x - alpha * m).abs() <= 5.0 * delta * m.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValleyReport {
    pub configs: Vec<SpinConfiguration>,
    /// `M = max_s X(s)` on the `field_value` scale.
    pub max_field: f64,
    /// `sigma^2 = max_s Var X(s)` on the same scale.
    pub sigma2: f64,
    /// Pairwise `rho / sigma^2`.
    pub kernel_ratio: Vec<Vec<f64>>,
    /// Pairwise squared site overlap `R^2` (equal to the ratio for SK).
    pub overlap_sq: Vec<Vec<f64>>,
    /// `X / M` per configuration.
    pub field_ratio: Vec<f64>,
    pub epsilon: f64,
    pub energy_test: EnergyTest,
    pub orthogonal: bool,
    pub energetic: bool,
    pub pass: bool,
    pub params: Option<ValleyParams>,
}

/// Pure check of an externally supplied set; no sampling.
pub fn certify(
    model: &ModelSpec,
    g: &DisorderVector,
    configs: &[SpinConfiguration],
    epsilon: f64,
    delta: f64,
) -> Result<ValleyReport> {
    certify_with(model, g, configs, epsilon, EnergyTest::NearMax { delta })
}

pub fn certify_with(
    model: &ModelSpec,
    g: &DisorderVector,
    configs: &[SpinConfiguration],
    epsilon: f64,
    energy_test: EnergyTest,
) -> Result<ValleyReport> {
    if configs.is_empty() {
        return Err(Error::invalid("configs", "need at least one configuration"));
    }
    let summary = field_summary(model, g)?;
    let m = summary.max_field;
    let sigma2 = summary.sigma2;
    let fields = configs
        .iter()
        .map(|s| model.field_value(g, s))
        .collect::<Result<Vec<_>>>()?;
    let r = configs.len();
    let mut kernel_ratio = vec![vec![0.0; r]; r];
    let mut overlap_sq = vec![vec![0.0; r]; r];
    let mut orthogonal = true;
    for i in 0..r {
        for j in 0..r {
            kernel_ratio[i][j] = model.covariance_kernel(&configs[i], &configs[j])? / sigma2;
            overlap_sq[i][j] = site_overlap(&configs[i], &configs[j])?.powi(2);
            if i != j && kernel_ratio[i][j] > epsilon {
                orthogonal = false;
            }
        }
    }
    let energetic = fields.iter().all(|&x| energy_test.holds(x, m));
    Ok(ValleyReport {
        configs: configs.to_vec(),
        max_field: m,
        sigma2,
        kernel_ratio,
        overlap_sq,
        field_ratio: fields.iter().map(|x| x / m).collect(),
        epsilon,
        energy_test,
        orthogonal,
        energetic,
        pass: orthogonal && energetic,
        params: None,
    })
}

/// One exact Gibbs draw per perturbed disorder `e^{-t} g + sqrt(1 - e^{-2t}) z_k`.
fn perturbed_draws(
    model: &ModelSpec,
    g: &DisorderVector,
    params: &ValleyParams,
    seed: SeedRecord,
) -> Result<Vec<SpinConfiguration>> {
    params.validate()?;
    model.check_disorder(g)?;
    let n = model.n_sites();
    if n > ENUMERATION_CAP {
        return Err(Error::Resource {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let (a, b) = ou_weights(params.t)?;
    (0..params.r)
        .into_par_iter()
        .map(|k| {
            let s = seed.child(k as u64);
            let z = fresh_disorder(g.len(), s.child(0))?;
            let table = build_gibbs_table(model, &mix(g, &z, a, b)?, Beta::Finite(params.beta))?;
            let u: f64 = s.child(1).rng().random();
            Ok(table.sample(u))
        })
        .collect()
}

pub fn find_valleys(model: &ModelSpec, g: &DisorderVector, params: &ValleyParams, seed: SeedRecord) -> Result<ValleyReport> {
    let configs = perturbed_draws(model, g, params, seed)?;
    let mut report = certify(model, g, &configs, params.epsilon, params.delta)?;
    report.params = Some(*params);
    Ok(report)
}

/// Valleys at level `alpha`: draws are made for `Y = alpha g + sqrt(1 - alpha^2) g'`
/// and judged by `|X - alpha M| <= 5 delta |M|` on the original field.
pub fn find_level_valleys(
    model: &ModelSpec,
    g: &DisorderVector,
    alpha: f64,
    params: &ValleyParams,
    seed: SeedRecord,
) -> Result<ValleyReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    let g_other = fresh_disorder(g.len(), seed.child(u64::MAX))?;
    let y = mix(g, &g_other, alpha, (1.0 - alpha * alpha).max(0.0).sqrt())?;
    let configs = perturbed_draws(model, &y, params, seed)?;
    let mut report = certify_with(
        model,
        g,
        &configs,
        params.epsilon,
        EnergyTest::Level {
            alpha,
            delta: params.delta,
        },
    )?;
    report.params = Some(*params);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassRate {
    pub passes: usize,
    pub total: usize,
    pub rate: f64,
    pub reports: Vec<ValleyReport>,
}

/// Fraction of disorder draws on which [`find_valleys`] (or the level
/// variant, when `alpha` is given) certifies.
pub fn valley_pass_rate(
    model: &ModelSpec,
    params: &ValleyParams,
    alpha: Option<f64>,
    n_disorder: usize,
    seed: SeedRecord,
) -> Result<PassRate> {
    if n_disorder == 0 {
        return Err(Error::invalid("n_disorder", "need at least one draw"));
    }
    let reports = (0..n_disorder)
        .map(|d| {
            let s = seed.child(d as u64);
            let g = fresh_disorder(model.coupling_count(), s.child(0))?;
            match alpha {
                None => find_valleys(model, &g, params, s.child(1)),
                Some(a) => find_level_valleys(model, &g, a, params, s.child(1)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let passes = reports.iter().filter(|r| r.pass).count();
    Ok(PassRate {
        passes,
        total: n_disorder,
        rate: passes as f64 / n_disorder as f64,
        reports,
    })
}
