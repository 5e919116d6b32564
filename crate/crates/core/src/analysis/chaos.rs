//! Chaos curves `t -> E<h>_{0,t}` and the checks built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{fresh_disorder, mix, ou_weights, DisorderVector, SeedRecord};
use crate::error::{Error, Result};
use crate::exact::{build_gibbs_table, coincidence_probability, two_replica_expect_xor, Beta};
use crate::models::{overlap_from_xor, ModelSpec};
use crate::sampler::{pair_average_xor, sample_replica_pair, ChainConfig, Kernel, Perturbation};
use crate::stats::mean_covariance;

/// Two-replica observable, always a function of `sigma1 XOR sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChaosObservable {
    /// `R^{2k}`.
    OverlapMoment { k: u32 },
    /// The Gibbs covariance kernel `rho`.
    Kernel,
    /// `1{sigma1 = sigma2}`.
    Coincidence,
    /// Bond overlap `Q` (E-A only).
    BondOverlap,
}

impl ChaosObservable {
    fn evaluator<'a>(&self, model: &'a ModelSpec) -> Result<Box<dyn Fn(u64) -> f64 + Send + Sync + 'a>> {
        let n = model.n_sites();
        Ok(match *self {
            ChaosObservable::OverlapMoment { k } => {
                if k == 0 {
                    return Err(Error::invalid("k", "moment order must be at least 1"));
                }
                Box::new(move |x| overlap_from_xor(x, n).powi(2 * k as i32))
            }
            ChaosObservable::Kernel => Box::new(move |x| model.gibbs_kernel_xor(x)),
            ChaosObservable::Coincidence => Box::new(|x| if x == 0 { 1.0 } else { 0.0 }),
            ChaosObservable::BondOverlap => match model {
                ModelSpec::EdwardsAnderson { graph } => {
                    let e = graph.n_edges() as f64;
                    Box::new(move |x| graph.bond_sum_from_xor(x) / e)
                }
                _ => return Err(Error::invalid("observable", "bond overlap needs an Edwards-Anderson model")),
            },
        })
    }
}

/// How the Gibbs averages inside each disorder draw are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Engine {
    /// Exact state sums.
    Exact,
    /// Paired MCMC chains.
    Mc {
        samples: usize,
        #[serde(default)]
        burn_in: Option<usize>,
        #[serde(default)]
        kernel: Kernel,
    },
}

impl Engine {
    pub(crate) fn chain(&self, n_sites: usize, seed: SeedRecord) -> Option<ChainConfig> {
        match *self {
            Engine::Exact => None,
            Engine::Mc {
                samples,
                burn_in,
                kernel,
            } => {
                let mut cfg = ChainConfig::with_default_burn_in(n_sites, samples, seed);
                if let Some(b) = burn_in {
                    cfg.burn_in = b;
                    cfg.sweeps = b + samples.max(1);
                }
                cfg.kernel = kernel;
                Some(cfg)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// Exact state sums inside, Monte Carlo over disorder.
    ExactInState,
    MonteCarlo,
    Quadrature,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosCurve {
    pub observable: ChaosObservable,
    pub t_grid: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Covariance matrix of the estimates in `phi_hat`; draws are shared across `t`.
    pub covariance: Vec<Vec<f64>>,
    pub n_disorder: usize,
    pub mode: EstimatorMode,
}

impl ChaosCurve {
    /// A curve given by exact values, e.g. for checking the checks.
    pub fn synthetic(t_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&t_grid)?;
        if values.len() != t_grid.len() {
            return Err(Error::Shape {
                expected: t_grid.len(),
                got: values.len(),
            });
        }
        let d = t_grid.len();
        Ok(ChaosCurve {
            observable: ChaosObservable::Kernel,
            t_grid,
            phi_hat: values,
            stderr: vec![0.0; d],
            covariance: vec![vec![0.0; d]; d],
            n_disorder: 0,
            mode: EstimatorMode::Synthetic,
        })
    }

    pub(crate) fn from_rows(
        observable: ChaosObservable,
        t_grid: Vec<f64>,
        rows: &[Vec<f64>],
        mode: EstimatorMode,
    ) -> Self {
        let d = t_grid.len();
        let n = rows.len();
        let phi_hat = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let covariance = mean_covariance(rows);
        let stderr = (0..d).map(|j| covariance[j][j].max(0.0).sqrt()).collect();
        ChaosCurve {
            observable,
            t_grid,
            phi_hat,
            stderr,
            covariance,
            n_disorder: n,
            mode,
        }
    }

    pub fn value_at(&self, t: f64) -> Option<(f64, f64)> {
        self.t_grid
            .iter()
            .position(|&s| s == t)
            .map(|i| (self.phi_hat[i], self.stderr[i]))
    }

    /// CSV with columns `t,estimate,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,estimate,stderr\n");
        for i in 0..self.t_grid.len() {
            out.push_str(&format!("{},{},{}\n", self.t_grid[i], self.phi_hat[i], self.stderr[i]));
        }
        out
    }
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid", "grid is empty"));
    }
    if let Some(&t) = t_grid.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::InvalidTime(t));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("t_grid", "times must be strictly increasing"));
    }
    Ok(())
}

/// `points` times from 0 to `t_max` with geometrically growing steps, the
/// first of length `first_step`.
pub fn geometric_grid(t_max: f64, points: usize, first_step: f64) -> Result<Vec<f64>> {
    if points < 3 || !(first_step > 0.0) || !(t_max > first_step * (points - 1) as f64) {
        return Err(Error::invalid(
            "grid",
            "need points >= 3 and t_max larger than (points - 1) * first_step",
        ));
    }
    // t_i = a (r^i - 1) with a (r - 1) = first_step and t_{points-1} = t_max
    let m = (points - 1) as i32;
    let target = t_max / first_step;
    let ratio_sum = |r: f64| (r.powi(m) - 1.0) / (r - 1.0);
    let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
    while ratio_sum(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio_sum(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let a = first_step / (r - 1.0);
    let mut grid: Vec<f64> = (0..points).map(|i| a * (r.powi(i as i32) - 1.0)).collect();
    grid[points - 1] = t_max;
    Ok(grid)
}

/// Default integration grid: 40 points on `[0, 10]`, first step 0.05.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(10.0, 40, 0.05).expect("valid constants")
}

/// Estimates of `E<h>_{0,t}` on `t_grid`. Each draw uses one pair `(g, g')` for
/// every `t`, so neighbouring estimates are strongly positively correlated.
pub fn chaos_curve(
    model: &ModelSpec,
    beta: Beta,
    observable: ChaosObservable,
    t_grid: &[f64],
    n_disorder: usize,
    engine: Engine,
    seed: SeedRecord,
) -> Result<ChaosCurve> {
    model.validate()?;
    check_grid(t_grid)?;
    if n_disorder < 2 {
        return Err(Error::invalid("n_disorder", "need at least two disorder draws"));
    }
    let eval = observable.evaluator(model)?;
    let m = model.coupling_count();
    let rows: Vec<Vec<f64>> = (0..n_disorder)
        .into_par_iter()
        .map(|d| {
            let s = seed.child(d as u64);
            let g = fresh_disorder(m, s.child(0))?;
            let g_fresh = fresh_disorder(m, s.child(1))?;
            curve_row(model, beta, &observable, &*eval, t_grid, &g, &g_fresh, engine, s.child(2))
        })
        .collect::<Result<_>>()?;
    let mode = match engine {
        Engine::Exact => EstimatorMode::ExactInState,
        Engine::Mc { .. } => EstimatorMode::MonteCarlo,
    };
    Ok(ChaosCurve::from_rows(observable, t_grid.to_vec(), &rows, mode))
}

#[allow(clippy::too_many_arguments)]
fn curve_row(
    model: &ModelSpec,
    beta: Beta,
    observable: &ChaosObservable,
    eval: &(dyn Fn(u64) -> f64 + Sync),
    t_grid: &[f64],
    g: &DisorderVector,
    g_fresh: &DisorderVector,
    engine: Engine,
    chain_seed: SeedRecord,
) -> Result<Vec<f64>> {
    match engine.chain(model.n_sites(), chain_seed) {
        None => {
            let base = build_gibbs_table(model, g, beta)?;
            t_grid
                .iter()
                .map(|&t| {
                    let (a, b) = ou_weights(t)?;
                    let table = build_gibbs_table(model, &mix(g, g_fresh, a, b)?, beta)?;
                    match observable {
                        ChaosObservable::Coincidence => coincidence_probability(&base, &table),
                        _ => two_replica_expect_xor(&base, &table, eval),
                    }
                })
                .collect()
        }
        Some(cfg) => t_grid
            .iter()
            .map(|&t| {
                let (a, b) = ou_weights(t)?;
                let gt = mix(g, g_fresh, a, b)?;
                let pairs = sample_replica_pair(model, g, &gt, beta, &cfg, Perturbation::Ou { t })?;
                Ok(pair_average_xor(&pairs, eval))
            })
            .collect(),
    }
}

/// `E<1{sigma1 = sigma2}>_{0,t}` for the REM.
pub fn rem_overlap_curve(n: usize, beta: Beta, t_grid: &[f64], n_disorder: usize, seed: SeedRecord) -> Result<ChaosCurve> {
    chaos_curve(
        &ModelSpec::rem(n)?,
        beta,
        ChaosObservable::Coincidence,
        t_grid,
        n_disorder,
        Engine::Exact,
        seed,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Increase,
    Interpolation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t: f64,
    pub s: f64,
    /// Amount by which the inequality fails before the tolerance is applied.
    pub excess: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub pairs_checked: usize,
    pub triples_checked: usize,
    pub violations: Vec<Violation>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tests `phi(s) <= phi(t)` for all `t < s`, and
/// `phi(t) <= phi(t0)^{1-l} phi(s)^l` with `l = (t - t0) / (s - t0)` for all
/// `t0 < t < s`, where `t0` is the first grid time. Tolerances are `n_sigma`
/// standard errors of the tested difference, propagated through the curve's
/// covariance to first order.
pub fn check_complete_monotonicity(curve: &ChaosCurve, n_sigma: f64) -> MonotonicityReport {
    let t = &curve.t_grid;
    let phi = &curve.phi_hat;
    let cov = &curve.covariance;
    let d = t.len();
    let mut violations = Vec::new();
    let mut pairs = 0;
    for i in 0..d {
        for j in i + 1..d {
            pairs += 1;
            let excess = phi[j] - phi[i];
            let var = cov[i][i] + cov[j][j] - 2.0 * cov[i][j];
            let tol = n_sigma * var.max(0.0).sqrt();
            if excess > tol {
                violations.push(Violation {
                    kind: ViolationKind::Increase,
                    t: t[i],
                    s: t[j],
                    excess,
                    tolerance: tol,
                });
            }
        }
    }
    let mut triples = 0;
    let floor = 1e-300;
    for i in 1..d {
        for j in i + 1..d {
            triples += 1;
            let l = (t[i] - t[0]) / (t[j] - t[0]);
            let p0 = phi[0].max(floor);
            let ps = phi[j].max(floor);
            let bound = p0.powf(1.0 - l) * ps.powf(l);
            let excess = phi[i] - bound;
            // gradient of phi_i - bound with respect to (phi_0, phi_i, phi_j)
            let grad = [(0, -(1.0 - l) * bound / p0), (i, 1.0), (j, -l * bound / ps)];
            let mut var = 0.0;
            for &(a, ga) in &grad {
                for &(b, gb) in &grad {
                    var += ga * gb * cov[a][b];
                }
            }
            let tol = n_sigma * var.max(0.0).sqrt();
            if excess > tol + 1e-12 * bound.abs().max(phi[i].abs()) {
                violations.push(Violation {
                    kind: ViolationKind::Interpolation,
                    t: t[i],
                    s: t[j],
                    excess,
                    tolerance: tol,
                });
            }
        }
    }
    MonotonicityReport {
        pairs_checked: pairs,
        triples_checked: triples,
        violations,
    }
}

/// Kernel value and pair count for each Hamming distance `d = 0..=N`, for
/// models whose kernel depends on the pair only through `d`.
fn kernel_by_distance(model: &ModelSpec) -> Result<Vec<(f64, f64)>> {
    let n = model.n_sites();
    match model {
        ModelSpec::EdwardsAnderson { .. } => Err(Error::Unsupported(
            "the interpolation bound needs a nonnegative kernel; E-A kernels take negative values".into(),
        )),
        _ => {
            if n > 1000 {
                return Err(Error::InvalidSize(format!("N = {n}")));
            }
            let mut binom = 1.0;
            let mut out = Vec::with_capacity(n + 1);
            for d in 0..=n {
                let x = if d == 0 { 0 } else { (1u64 << d) - 1 };
                out.push((model.gibbs_kernel_xor(x), binom));
                binom = binom * (n - d) as f64 / (d + 1) as f64;
            }
            Ok(out)
        }
    }
}

/// `sum_{i,j} phi(rho_ij) e^{2 beta^2 e^{-s} rho_ij} nu_i nu_j` with
/// `nu = 2^{-N}` and `phi(x) = (x / rho_max)^k`; for SK this is
/// `E_uniform[R^{2k} e^{beta^2 e^{-s} N R^2}]`.
pub fn interpolation_upper_bound(model: &ModelSpec, beta: f64, s: f64, k: u32) -> Result<f64> {
    if !(beta >= 0.0) || beta.is_infinite() {
        return Err(Error::invalid("beta", "must be finite and >= 0"));
    }
    if !(s >= 0.0) {
        return Err(Error::InvalidTime(s));
    }
    let n = model.n_sites() as f64;
    let table = kernel_by_distance(model)?;
    let rho_max = model.gibbs_variance();
    let c = 2.0 * beta * beta * (-s).exp();
    // sum over distance classes, in log space: each class holds 2^N * binom pairs
    let logs: Vec<f64> = table
        .iter()
        .filter(|(rho, _)| *rho > 0.0 || k == 0)
        .map(|&(rho, count)| {
            let phi = if k == 0 { 0.0 } else { k as f64 * (rho / rho_max).ln() };
            phi + c * rho + count.ln() - n * std::f64::consts::LN_2
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(top.exp() * logs.iter().map(|l| (l - top).exp()).sum::<f64>())
}

/// Certified bound `phi(0)^{1 - t/s} U(s)^{t/s}` on `E<phi(rho)>_{0,t}`, for a
/// measured `phi(0)` with the same `phi(x) = (x / rho_max)^k`.
pub fn chaos_from_interpolation(model: &ModelSpec, beta: f64, t: f64, s: f64, k: u32, phi0: f64) -> Result<f64> {
    if !(t >= 0.0) || !(s >= t) || s == 0.0 {
        return Err(Error::invalid("s", format!("need 0 <= t <= s and s > 0 (t = {t}, s = {s})")));
    }
    let u = interpolation_upper_bound(model, beta, s, k)?;
    let l = t / s;
    Ok(phi0.max(0.0).powf(1.0 - l) * u.powf(l))
}

/// Smallest certified bound over `s` in `s_grid` (points below `t` are skipped).
pub fn chaos_from_interpolation_inf(
    model: &ModelSpec,
    beta: f64,
    t: f64,
    s_grid: &[f64],
    k: u32,
    phi0: f64,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for &s in s_grid.iter().filter(|&&s| s >= t && s > 0.0) {
        best = best.min(chaos_from_interpolation(model, beta, t, s, k, phi0)?);
    }
    Ok(best)
}

/// `E<rho>_{0,t}` for the single-edge E-A model by the Gauss-Hermite oracle.
pub fn single_edge_chaos_curve(beta: f64, t_grid: &[f64]) -> Result<ChaosCurve> {
    check_grid(t_grid)?;
    let values = t_grid
        .iter()
        .map(|&t| crate::quadrature::single_edge_rho(beta, t))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = ChaosCurve::synthetic(t_grid.to_vec(), values)?;
    curve.mode = EstimatorMode::Quadrature;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::overlap_moment;
    use crate::models::Graph;

    #[test]
    fn grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 0.05).abs() < 1e-9);
        assert_eq!(g[39], 10.0);
        assert!(check_grid(&g).is_ok());
        assert!(check_grid(&[]).is_err());
        assert!(check_grid(&[0.0, 0.0]).is_err());
        assert!(check_grid(&[-1.0, 0.0]).is_err());
    }

    #[test]
    fn synthetic_cm_functions_pass() {
        let grid: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        for f in [|t: f64| (-2.0 * t).exp(), |t: f64| 1.0 / (1.0 + t).powi(2)] {
            let curve = ChaosCurve::synthetic(grid.clone(), grid.iter().map(|&t| f(t)).collect()).unwrap();
            let report = check_complete_monotonicity(&curve, 3.0);
            assert!(report.passed(), "{:?}", report.violations);
        }
    }

    #[test]
    fn linear_decay_fails_interpolation() {
        let grid: Vec<f64> = (0..=5).map(|i| i as f64 * 0.1).collect();
        let curve = ChaosCurve::synthetic(grid.clone(), grid.iter().map(|t| 1.0 - t).collect()).unwrap();
        let report = check_complete_monotonicity(&curve, 3.0);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Interpolation));
        assert!(report.violations.iter().all(|v| v.kind != ViolationKind::Increase));
    }

    #[test]
    fn beta_zero_gives_uniform_overlap() {
        let model = ModelSpec::sk(6).unwrap();
        let curve = chaos_curve(
            &model,
            Beta::Finite(0.0),
            ChaosObservable::OverlapMoment { k: 1 },
            &[0.0, 0.5, 60.0],
            4,
            Engine::Exact,
            SeedRecord::new(1),
        )
        .unwrap();
        for &p in &curve.phi_hat {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_point_matches_direct_computation() {
        let model = ModelSpec::sk(5).unwrap();
        let seed = SeedRecord::new(7);
        let beta = Beta::Finite(1.3);
        let curve = chaos_curve(
            &model,
            beta,
            ChaosObservable::OverlapMoment { k: 2 },
            &[0.0, 0.4],
            3,
            Engine::Exact,
            seed,
        )
        .unwrap();
        let mut vals = Vec::new();
        for d in 0..3u64 {
            let s = seed.child(d);
            let g = fresh_disorder(25, s.child(0)).unwrap();
            let gp = fresh_disorder(25, s.child(1)).unwrap();
            let (a, b) = ou_weights(0.4).unwrap();
            let ta = build_gibbs_table(&model, &g, beta).unwrap();
            let tb = build_gibbs_table(&model, &mix(&g, &gp, a, b).unwrap(), beta).unwrap();
            vals.push(overlap_moment(&ta, &tb, 2).unwrap());
        }
        let mean = vals.iter().sum::<f64>() / 3.0;
        assert!((curve.phi_hat[1] - mean).abs() < 1e-14);
    }

    #[test]
    fn empty_grid_rejected() {
        let model = ModelSpec::sk(4).unwrap();
        let err = chaos_curve(
            &model,
            Beta::Finite(1.0),
            ChaosObservable::Kernel,
            &[],
            4,
            Engine::Exact,
            SeedRecord::new(0),
        );
        assert!(err.is_err());
    }

    #[test]
    fn interpolation_bound_closed_forms() {
        let (beta, s) = (0.7, 1.5);
        for n in [4, 9] {
            let rem = ModelSpec::rem(n).unwrap();
            let u = interpolation_upper_bound(&rem, beta, s, 1).unwrap();
            let expected = 2f64.powi(-(n as i32)) * (2.0 * beta * beta * (-s).exp() * n as f64).exp();
            assert!((u - expected).abs() < 1e-12 * expected);
        }
        // s -> inf, SK, k = 1: E_uniform R^2 = 1/N
        let sk = ModelSpec::sk(10).unwrap();
        let u = interpolation_upper_bound(&sk, 1.0, 200.0, 1).unwrap();
        assert!((u - 0.1).abs() < 1e-12);
        assert!(interpolation_upper_bound(&ModelSpec::edwards_anderson(Graph::cycle(4).unwrap()), 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn interpolation_endpoints() {
        let sk = ModelSpec::sk(8).unwrap();
        let u = interpolation_upper_bound(&sk, 1.0, 2.0, 1).unwrap();
        let at_s = chaos_from_interpolation(&sk, 1.0, 2.0, 2.0, 1, 0.4).unwrap();
        assert!((at_s - u).abs() < 1e-14);
        let at_0 = chaos_from_interpolation(&sk, 1.0, 0.0, 2.0, 1, 0.4).unwrap();
        assert!((at_0 - 0.4).abs() < 1e-14);
    }

    #[test]
    fn single_edge_curve_is_decreasing() {
        let curve = single_edge_chaos_curve(1.0, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        assert!(check_complete_monotonicity(&curve, 3.0).passed());
        assert_eq!(curve.mode, EstimatorMode::Quadrature);
    }
}
