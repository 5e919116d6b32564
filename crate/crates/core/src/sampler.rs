//! Single-site MCMC for Gibbs measures `∝ e^{-beta H}`.
//!
//! Each sweep performs `N` updates at uniformly chosen sites, so every update
//! is individually reversible with respect to the target.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::{DisorderVector, SeedRecord};
use crate::error::{Error, Result};
use crate::exact::Beta;
use crate::models::{ModelSpec, SpinConfiguration};
use crate::stats::{chain_estimate, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// Heat bath: flip with probability `1 / (1 + e^{beta dH})`.
    #[default]
    Glauber,
    /// Flip with probability `min(1, e^{-beta dH})`.
    Metropolis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default)]
    pub kernel: Kernel,
    pub seed: SeedRecord,
}

fn one() -> usize {
    1
}

impl ChainConfig {
    /// `samples` recorded sweeps after the default burn-in of `100 N` sweeps.
    /// The burn-in length is a heuristic, not a mixing guarantee.
    pub fn with_default_burn_in(n_sites: usize, samples: usize, seed: SeedRecord) -> Self {
        let burn_in = 100 * n_sites;
        ChainConfig {
            sweeps: burn_in + samples.max(1),
            burn_in,
            thinning: 1,
            kernel: Kernel::Glauber,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.sweeps {
            return Err(Error::invalid(
                "burn_in",
                format!("must be below sweeps ({} >= {})", self.burn_in, self.sweeps),
            ));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning", "must be at least 1"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: SeedRecord) -> Self {
        ChainConfig { seed, ..*self }
    }

    pub fn recorded(&self) -> usize {
        (self.sweeps - self.burn_in).div_ceil(self.thinning)
    }
}

/// Change of `-H` when spin `k` of `bits` is flipped.
pub(crate) fn gibbs_field_delta(model: &ModelSpec, g: &[f64], bits: u64, k: usize) -> f64 {
    let spin = |i: usize| if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
    match model {
        ModelSpec::Sk { n } => {
            let n = *n;
            let mut h = 0.0;
            for j in 0..n {
                if j != k {
                    h += (g[k * n + j] + g[j * n + k]) * spin(j);
                }
            }
            -2.0 * spin(k) * h / (2.0 * n as f64).sqrt()
        }
        ModelSpec::EdwardsAnderson { graph } => {
            let h: f64 = graph.neighbours(k).iter().map(|&(v, e)| g[e] * spin(v)).sum();
            -2.0 * spin(k) * h
        }
        ModelSpec::Rem { n } => (*n as f64).sqrt() * (g[(bits ^ 1 << k) as usize] - g[bits as usize]),
        ModelSpec::MixedPSpin { .. } => model.field_unchecked(g, bits ^ 1 << k) - model.field_unchecked(g, bits),
    }
}

/// Acceptance probability of a proposed flip with energy change `dh`.
pub fn flip_probability(kernel: Kernel, beta: f64, dh: f64) -> f64 {
    let x = beta * dh;
    match kernel {
        Kernel::Glauber => {
            if x > 0.0 {
                let e = (-x).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + x.exp())
            }
        }
        Kernel::Metropolis => {
            if x <= 0.0 {
                1.0
            } else {
                (-x).exp()
            }
        }
    }
}

/// One update at site `k`; returns the new state.
pub fn site_update(
    model: &ModelSpec,
    g: &DisorderVector,
    beta: f64,
    kernel: Kernel,
    state: &SpinConfiguration,
    k: usize,
    u: f64,
) -> SpinConfiguration {
    let dh = -gibbs_field_delta(model, g.values(), state.bits(), k);
    if u < flip_probability(kernel, beta, dh) {
        state.flipped(k)
    } else {
        *state
    }
}

fn check_inputs(model: &ModelSpec, g: &DisorderVector, beta: Beta, cfg: &ChainConfig) -> Result<f64> {
    model.check_disorder(g)?;
    cfg.validate()?;
    match beta {
        Beta::Infinite => Err(Error::Unsupported(
            "MCMC at beta = inf; use exact ground states instead".into(),
        )),
        Beta::Finite(b) if b.is_nan() || b < 0.0 => Err(Error::invalid("beta", format!("must be >= 0, got {b}"))),
        Beta::Finite(b) => Ok(b),
    }
}

fn chain_with_rng(
    model: &ModelSpec,
    g: &DisorderVector,
    beta: f64,
    cfg: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<SpinConfiguration> {
    let n = model.n_sites();
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut bits = rng.random::<u64>() & mask;
    let mut out = Vec::with_capacity(cfg.recorded());
    for sweep in 0..cfg.sweeps {
        for _ in 0..n {
            let k = rng.random_range(0..n);
            let dh = -gibbs_field_delta(model, g.values(), bits, k);
            if rng.random::<f64>() < flip_probability(cfg.kernel, beta, dh) {
                bits ^= 1 << k;
            }
        }
        if sweep >= cfg.burn_in && (sweep - cfg.burn_in) % cfg.thinning == 0 {
            out.push(SpinConfiguration::new(bits, n).expect("bits masked to n"));
        }
    }
    out
}

/// States recorded after each retained sweep.
pub fn run_chain(model: &ModelSpec, g: &DisorderVector, beta: Beta, cfg: &ChainConfig) -> Result<Vec<SpinConfiguration>> {
    let b = check_inputs(model, g, beta, cfg)?;
    Ok(chain_with_rng(model, g, b, cfg, &mut cfg.seed.rng()))
}

/// Chain average of `f` with an autocorrelation-corrected standard error.
pub fn chain_average(states: &[SpinConfiguration], f: impl Fn(&SpinConfiguration) -> f64) -> Estimate {
    let xs: Vec<f64> = states.iter().map(f).collect();
    chain_estimate(&xs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    Identical,
    Ou { t: f64 },
    Resample { k: usize },
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub disorder_a: Option<SeedRecord>,
    pub disorder_b: Option<SeedRecord>,
    pub perturbation: Perturbation,
    pub beta: f64,
}

/// `sigma1` drawn from the measure of `g_a`, `sigma2` from that of `g_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSample {
    pub sigma1: SpinConfiguration,
    pub sigma2: SpinConfiguration,
    pub provenance: Provenance,
}

/// Two independent chains (seed children 1 and 2), paired sweep by sweep.
pub fn sample_replica_pair(
    model: &ModelSpec,
    g_a: &DisorderVector,
    g_b: &DisorderVector,
    beta: Beta,
    cfg: &ChainConfig,
    perturbation: Perturbation,
) -> Result<Vec<ReplicaSample>> {
    let b = check_inputs(model, g_a, beta, cfg)?;
    model.check_disorder(g_b)?;
    let first = chain_with_rng(model, g_a, b, cfg, &mut cfg.seed.child(1).rng());
    let second = chain_with_rng(model, g_b, b, cfg, &mut cfg.seed.child(2).rng());
    let provenance = Provenance {
        disorder_a: g_a.seed(),
        disorder_b: g_b.seed(),
        perturbation,
        beta: b,
    };
    Ok(first
        .into_iter()
        .zip(second)
        .map(|(sigma1, sigma2)| ReplicaSample {
            sigma1,
            sigma2,
            provenance,
        })
        .collect())
}

/// Chain average of a two-replica observable.
pub fn pair_average(
    samples: &[ReplicaSample],
    f: impl Fn(&SpinConfiguration, &SpinConfiguration) -> f64,
) -> Estimate {
    let xs: Vec<f64> = samples.iter().map(|s| f(&s.sigma1, &s.sigma2)).collect();
    chain_estimate(&xs)
}

/// Pair-sample average of a function of `sigma1 XOR sigma2`.
pub(crate) fn pair_average_xor(samples: &[ReplicaSample], f: impl Fn(u64) -> f64) -> f64 {
    samples.iter().map(|s| f(s.sigma1.bits() ^ s.sigma2.bits())).sum::<f64>() / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::fresh_disorder;
    use crate::exact::{build_gibbs_table, overlap_moment};
    use crate::models::{site_overlap, Graph};

    fn cfg(samples: usize, seed: u64) -> ChainConfig {
        ChainConfig::with_default_burn_in(10, samples, SeedRecord::new(seed))
    }

    #[test]
    fn delta_matches_direct_difference() {
        let models = [
            ModelSpec::sk(7).unwrap(),
            ModelSpec::edwards_anderson(Graph::cycle(6).unwrap()),
            ModelSpec::rem(5).unwrap(),
            ModelSpec::mixed_p_spin(
                5,
                vec![crate::models::PSpinTerm { p: 2, c: 0.5 }, crate::models::PSpinTerm { p: 3, c: 0.3 }],
            )
            .unwrap(),
        ];
        for (m, model) in models.iter().enumerate() {
            let g = fresh_disorder(model.coupling_count(), SeedRecord::new(m as u64)).unwrap();
            let n = model.n_sites();
            for bits in [0u64, 5, 19, (1 << n) - 1] {
                for k in 0..n {
                    let direct = model.gibbs_field_unchecked(g.values(), bits ^ 1 << k)
                        - model.gibbs_field_unchecked(g.values(), bits);
                    let fast = gibbs_field_delta(model, g.values(), bits, k);
                    assert!((direct - fast).abs() < 1e-12, "model {m} bits {bits} k {k}");
                }
            }
        }
    }

    #[test]
    fn infinite_beta_is_unsupported() {
        let model = ModelSpec::sk(4).unwrap();
        let g = fresh_disorder(16, SeedRecord::new(0)).unwrap();
        assert!(matches!(
            run_chain(&model, &g, Beta::Infinite, &cfg(10, 0)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(10, 0);
        c.burn_in = c.sweeps;
        assert!(c.validate().is_err());
        let mut c = cfg(10, 0);
        c.thinning = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn beta_zero_marginals_uniform() {
        let model = ModelSpec::sk(10).unwrap();
        let g = fresh_disorder(100, SeedRecord::new(3)).unwrap();
        let states = run_chain(&model, &g, Beta::Finite(0.0), &cfg(100_000, 4)).unwrap();
        for i in 0..10 {
            let m = chain_average(&states, |s| s.spin(i));
            assert!(m.mean.abs() < 0.02, "site {i}: {}", m.mean);
        }
    }

    #[test]
    fn single_edge_correlation() {
        let model = ModelSpec::edwards_anderson(Graph::single_edge());
        let g = DisorderVector::from_values(vec![1.0]).unwrap();
        for kernel in [Kernel::Glauber, Kernel::Metropolis] {
            let c = ChainConfig {
                kernel,
                ..ChainConfig::with_default_burn_in(2, 50_000, SeedRecord::new(9))
            };
            let states = run_chain(&model, &g, Beta::Finite(1.0), &c).unwrap();
            let est = chain_average(&states, |s| s.spin(0) * s.spin(1));
            assert!(est.agrees_with(1f64.tanh(), 3.0), "{kernel:?}: {est:?}");
        }
    }

    #[test]
    fn sk_observable_matches_enumeration() {
        let model = ModelSpec::sk(10).unwrap();
        let g = fresh_disorder(100, SeedRecord::new(11)).unwrap();
        let table = build_gibbs_table(&model, &g, Beta::Finite(0.5)).unwrap();
        let exact = table.expect(|s| s.spin(0) * s.spin(3) + 0.5 * s.spin(7));
        let states = run_chain(&model, &g, Beta::Finite(0.5), &cfg(40_000, 12)).unwrap();
        let est = chain_average(&states, |s| s.spin(0) * s.spin(3) + 0.5 * s.spin(7));
        assert!(est.agrees_with(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn replica_overlap_matches_enumeration() {
        let model = ModelSpec::sk(10).unwrap();
        let g = fresh_disorder(100, SeedRecord::new(21)).unwrap();
        let g2 = fresh_disorder(100, SeedRecord::new(22)).unwrap();
        let mixed = crate::disorder::mix(&g, &g2, 0.8, 0.6).unwrap();
        let beta = Beta::Finite(1.0);
        let ta = build_gibbs_table(&model, &g, beta).unwrap();
        let tb = build_gibbs_table(&model, &mixed, beta).unwrap();
        let exact = overlap_moment(&ta, &tb, 1).unwrap();
        let samples =
            sample_replica_pair(&model, &g, &mixed, beta, &cfg(40_000, 23), Perturbation::Ou { t: 0.22 }).unwrap();
        let est = pair_average(&samples, |a, b| site_overlap(a, b).unwrap().powi(2));
        assert!(est.agrees_with(exact, 4.0), "{est:?} vs {exact}");
        // beta = 0: E R^2 = 1/N
        let samples = sample_replica_pair(
            &model,
            &g,
            &g,
            Beta::Finite(0.0),
            &cfg(40_000, 24),
            Perturbation::Identical,
        )
        .unwrap();
        let est = pair_average(&samples, |a, b| site_overlap(a, b).unwrap().powi(2));
        assert!(est.agrees_with(0.1, 4.0), "{est:?}");
    }

    #[test]
    fn detailed_balance_on_two_states() {
        // Restrict to the pair {s, s with spin 0 flipped}: from each state the
        // empirical flip frequency at site 0 must match the kernel.
        let model = ModelSpec::sk(4).unwrap();
        let g = fresh_disorder(16, SeedRecord::new(31)).unwrap();
        let beta = 0.8;
        let s = SpinConfiguration::new(0b0110, 4).unwrap();
        let t = s.flipped(0);
        let mut rng = SeedRecord::new(32).rng();
        let trials = 100_000;
        for (from, to) in [(s, t), (t, s)] {
            let dh = model.hamiltonian(&g, &to).unwrap() - model.hamiltonian(&g, &from).unwrap();
            let p = flip_probability(Kernel::Glauber, beta, dh);
            let hits = (0..trials)
                .filter(|_| site_update(&model, &g, beta, Kernel::Glauber, &from, 0, rng.random()) == to)
                .count();
            let freq = hits as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((freq - p).abs() <= 5.0 * se, "{freq} vs {p}");
        }
        // and the two rates balance the Gibbs weights
        let h = |x: &SpinConfiguration| model.hamiltonian(&g, x).unwrap();
        let lhs = (-beta * h(&s)).exp() * flip_probability(Kernel::Glauber, beta, h(&t) - h(&s));
        let rhs = (-beta * h(&t)).exp() * flip_probability(Kernel::Glauber, beta, h(&s) - h(&t));
        assert!((lhs - rhs).abs() < 1e-12 * lhs.max(rhs));
    }

    #[test]
    fn chain_is_deterministic() {
        let model = ModelSpec::sk(6).unwrap();
        let g = fresh_disorder(36, SeedRecord::new(41)).unwrap();
        let c = ChainConfig::with_default_burn_in(6, 200, SeedRecord::new(42));
        let a = run_chain(&model, &g, Beta::Finite(1.0), &c).unwrap();
        let b = run_chain(&model, &g, Beta::Finite(1.0), &c).unwrap();
        assert_eq!(a, b);
    }
}
