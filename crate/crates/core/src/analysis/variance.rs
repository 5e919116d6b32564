//! Free-energy variance: direct estimates, the chaos-integral representation,
//! closed-form bounds and the quenched bond-overlap statistic.

use rayon::prelude::*;
use serde::Serialize;

use super::chaos::{check_grid, ChaosCurve, ChaosObservable, Engine};
use crate::disorder::{fresh_disorder, ou_perturb, CoupledDisorder, DisorderVector, SeedRecord, Sign};
use crate::error::{Error, Result};
use crate::exact::{build_gibbs_table, xor_pair_law, Beta};
use crate::models::{Graph, ModelSpec};
use crate::sampler::{pair_average_xor, sample_replica_pair, Perturbation};
use crate::stats::{iid_estimate, jackknife_variance, Estimate};

/// Monte Carlo estimate of `Var F` over i.i.d. disorder draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceDirect {
    pub mean_f: Estimate,
    /// Sample variance with its jackknife standard error.
    pub var: Estimate,
    /// Normal-approximation 95% interval for the variance.
    pub ci: (f64, f64),
}

impl VarianceDirect {
    pub fn from_samples(fs: &[f64]) -> Result<Self> {
        if fs.len() < 3 {
            return Err(Error::invalid("n_disorder", "need at least three draws"));
        }
        if let Some(f) = fs.iter().find(|f| !f.is_finite()) {
            return Err(Error::Numeric(format!("non-finite free energy {f}")));
        }
        let var = jackknife_variance(fs);
        Ok(VarianceDirect {
            mean_f: iid_estimate(fs),
            ci: (var.mean - 1.96 * var.stderr, var.mean + 1.96 * var.stderr),
            var,
        })
    }
}

/// `F` at `beta`; the ground-state field `-E_min` at `beta = inf`.
fn free_energy_of(model: &ModelSpec, g: &DisorderVector, beta: Beta) -> Result<f64> {
    if beta == Beta::Finite(0.0) {
        return Err(Error::invalid("beta", "F is infinite at beta = 0"));
    }
    Ok(build_gibbs_table(model, g, beta)?.free_energy())
}

/// Draw `i` uses seed child `i`.
pub fn free_energy_samples(model: &ModelSpec, beta: Beta, n_disorder: usize, seed: SeedRecord) -> Result<Vec<f64>> {
    variance_samples_with(model, beta, n_disorder, |i| {
        fresh_disorder(model.coupling_count(), seed.child(i as u64))
    })
}

/// Free energies for caller-supplied disorder.
pub fn variance_samples_with(
    model: &ModelSpec,
    beta: Beta,
    n_disorder: usize,
    draw: impl Fn(usize) -> Result<DisorderVector> + Sync,
) -> Result<Vec<f64>> {
    model.validate()?;
    (0..n_disorder)
        .into_par_iter()
        .map(|i| free_energy_of(model, &draw(i)?, beta))
        .collect()
}

pub fn variance_direct(model: &ModelSpec, beta: Beta, n_disorder: usize, seed: SeedRecord) -> Result<VarianceDirect> {
    VarianceDirect::from_samples(&free_energy_samples(model, beta, n_disorder, seed)?)
}

/// `int_0^inf e^{-t} phi(t) dt` from a curve on a grid starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosIntegral {
    /// Trapezoid sum plus the tail bound.
    pub value: f64,
    pub stderr: f64,
    pub trapezoid: f64,
    /// `e^{-T} phi(T)`, an upper bound for the part beyond the grid.
    pub tail_bound: f64,
}

/// Variance identity: `Var F = int_0^inf e^{-t} E<rho>_{0,t} dt`. The curve
/// must be measured on the kernel itself at the target `beta`.
pub fn variance_from_chaos_integral(curve: &ChaosCurve) -> Result<ChaosIntegral> {
    check_grid(&curve.t_grid)?;
    if curve.t_grid[0] != 0.0 {
        return Err(Error::invalid("t_grid", "the integration grid must start at t = 0"));
    }
    if curve.observable != ChaosObservable::Kernel {
        return Err(Error::invalid("observable", "the variance identity integrates the kernel rho"));
    }
    let t = &curve.t_grid;
    let d = t.len();
    let f = |i: usize| (-t[i]).exp();
    // trapezoid weights on e^{-t} phi(t), then the tail term on the last point
    let mut w = vec![0.0; d];
    for i in 0..d.saturating_sub(1) {
        let h = t[i + 1] - t[i];
        w[i] += 0.5 * h * f(i);
        w[i + 1] += 0.5 * h * f(i + 1);
    }
    let trapezoid: f64 = w.iter().zip(&curve.phi_hat).map(|(a, b)| a * b).sum();
    let tail_bound = f(d - 1) * curve.phi_hat[d - 1];
    w[d - 1] += f(d - 1);
    let mut var = 0.0;
    for i in 0..d {
        for j in 0..d {
            var += w[i] * w[j] * curve.covariance[i][j];
        }
    }
    Ok(ChaosIntegral {
        value: trapezoid + tail_bound,
        stderr: var.max(0.0).sqrt(),
        trapezoid,
        tail_bound,
    })
}

/// `C N log(2 + C beta) / log N`; the constant is not known, so this only
/// serves trend plots.
pub fn superconcentration_bound(n: f64, beta: f64, c: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Error::invalid("n", "need N > 1"));
    }
    if !(beta >= 0.0) || !(c > 0.0) {
        return Err(Error::invalid("beta", "need beta >= 0 and C > 0"));
    }
    Ok(c * n * (2.0 + c * beta).ln() / n.ln())
}

/// `9|E|/32 * min(beta^2, 1/(4 d^2))` with `d` the maximum degree.
pub fn ea_variance_lower_bound(graph: &Graph, beta: Beta) -> f64 {
    let d = graph.max_degree() as f64;
    let cap = 1.0 / (4.0 * d * d);
    let m = match beta {
        Beta::Finite(b) => (b * b).min(cap),
        Beta::Infinite => cap,
    };
    9.0 * graph.n_edges() as f64 / 32.0 * m
}

/// Lower bound `(v/2) e^{-t(2-v)/v}` on `E e^{-tU}` for `U >= 0`, where
/// `v = E[(1 + U)^{-1}]`.
pub fn laplace_tail_bound(v: f64, t: f64) -> Result<f64> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::invalid("v", format!("must lie in (0, 1], got {v}")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    Ok(0.5 * v * (-t * (2.0 - v) / v).exp())
}

/// `(1/2) Var F e^{-t(2-v)/v}` with `v = Var F / E<rho>_{0,0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoChaosFloor {
    pub var_f: f64,
    pub rho0: f64,
    pub v: f64,
}

impl NoChaosFloor {
    pub fn new(var_f: f64, rho0: f64) -> Result<Self> {
        if !(var_f > 0.0) || !(rho0 > 0.0) {
            return Err(Error::invalid("v", "need Var F > 0 and E<rho>_{0,0} > 0"));
        }
        let v = var_f / rho0;
        if v >= 2.0 {
            return Err(Error::invalid("v", format!("Var F / E<rho> = {v} is not below 2")));
        }
        Ok(NoChaosFloor { var_f, rho0, v })
    }

    pub fn at(&self, t: f64) -> f64 {
        0.5 * self.var_f * (-t * (2.0 - self.v) / self.v).exp()
    }
}

pub fn no_chaos_floor(var_f: f64, rho0: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    Ok(NoChaosFloor::new(var_f, rho0)?.at(t))
}

/// `E<(Q - <Q>)^2>` between `sigma^{+t}` and `sigma^{-t}` against its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuenchedReport {
    pub estimate: Estimate,
    pub mean_q: Estimate,
    /// `2 / (beta e^{-t/2} sqrt(t |E|))`.
    pub bound: f64,
    pub n_disorder: usize,
}

impl QuenchedReport {
    pub fn holds_within(&self, n_sigma: f64) -> bool {
        self.estimate.mean <= self.bound + n_sigma * self.estimate.stderr
    }
}

pub fn quenched_bound(graph: &Graph, beta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || t.is_infinite() {
        return Err(Error::InvalidTime(t));
    }
    if !(beta > 0.0) || beta.is_infinite() {
        return Err(Error::invalid("beta", "need 0 < beta < inf"));
    }
    Ok(2.0 / (beta * (-t / 2.0).exp() * (t * graph.n_edges() as f64).sqrt()))
}

/// Per disorder triple `(g, g', g'')`: Gibbs mean and variance of `Q` under the
/// product of the measures at `g^{+t}` and `g^{-t}`.
pub fn quenched_chaos_statistic(
    graph: &Graph,
    beta: f64,
    t: f64,
    n_disorder: usize,
    engine: Engine,
    seed: SeedRecord,
) -> Result<QuenchedReport> {
    let bound = quenched_bound(graph, beta, t)?;
    if n_disorder < 2 {
        return Err(Error::invalid("n_disorder", "need at least two disorder draws"));
    }
    let model = ModelSpec::edwards_anderson(graph.clone());
    let e = graph.n_edges() as f64;
    let q = |x: u64| graph.bond_sum_from_xor(x) / e;
    let rows: Vec<(f64, f64)> = (0..n_disorder)
        .into_par_iter()
        .map(|i| {
            let s = seed.child(i as u64);
            let coupled = CoupledDisorder::draw(graph.n_edges(), t, s)?;
            let gp = ou_perturb(&coupled, Sign::Plus)?;
            let gm = ou_perturb(&coupled, Sign::Minus)?;
            let (m1, m2) = match engine.chain(model.n_sites(), s.child(3)) {
                None => {
                    let a = build_gibbs_table(&model, &gp, Beta::Finite(beta))?;
                    let b = build_gibbs_table(&model, &gm, Beta::Finite(beta))?;
                    let law = xor_pair_law(&a, &b)?;
                    law.iter().enumerate().fold((0.0, 0.0), |(m1, m2), (x, c)| {
                        let v = q(x as u64);
                        (m1 + c * v, m2 + c * v * v)
                    })
                }
                Some(cfg) => {
                    let pairs =
                        sample_replica_pair(&model, &gp, &gm, Beta::Finite(beta), &cfg, Perturbation::Ou { t })?;
                    (pair_average_xor(&pairs, q), pair_average_xor(&pairs, |x| q(x).powi(2)))
                }
            };
            Ok((m2 - m1 * m1, m1))
        })
        .collect::<Result<_>>()?;
    let var_q: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mean_q: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(QuenchedReport {
        estimate: iid_estimate(&var_q),
        mean_q: iid_estimate(&mean_q),
        bound,
        n_disorder,
    })
}

/// Everything known about `Var F` for one model and `beta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub var_direct: VarianceDirect,
    pub var_integral: Option<ChaosIntegral>,
    /// E-A closed-form lower bound.
    pub lower_bound: Option<f64>,
    /// SK bound shape at the reporting constant.
    pub upper_bound: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::chaos::{chaos_curve, default_grid, single_edge_chaos_curve};
    use crate::quadrature::single_edge_variance;

    #[test]
    fn ea_bound_examples() {
        let c8 = Graph::cycle(8).unwrap();
        assert!((ea_variance_lower_bound(&c8, Beta::Finite(1.0)) - 9.0 / 64.0).abs() < 1e-15);
        assert_eq!(ea_variance_lower_bound(&c8, Beta::Finite(0.0)), 0.0);
        assert!((ea_variance_lower_bound(&c8, Beta::Infinite) - 0.140625).abs() < 1e-15);
    }

    #[test]
    fn superconcentration_arithmetic() {
        let e2 = std::f64::consts::E.powi(2);
        let b = superconcentration_bound(e2, 0.0, 1.0).unwrap();
        assert!((b - e2 * 2f64.ln() / 2.0).abs() < 1e-12);
        assert!(superconcentration_bound(100.0, 2.0, 1.0).unwrap() > superconcentration_bound(100.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn laplace_bound_examples() {
        let t = 0.7;
        assert!((laplace_tail_bound(1.0, t).unwrap() - 0.5 * (-t).exp()).abs() < 1e-15);
        assert_eq!(laplace_tail_bound(0.4, 0.0).unwrap(), 0.2);
        assert!(laplace_tail_bound(0.0, 1.0).is_err());
        assert!(laplace_tail_bound(1.5, 1.0).is_err());
    }

    #[test]
    fn floor_at_zero_is_half_variance() {
        let f = NoChaosFloor::new(0.3, 0.5).unwrap();
        assert!((f.at(0.0) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn single_edge_identity_by_quadrature() {
        for beta in [0.5, 1.0, 2.0] {
            let curve = single_edge_chaos_curve(beta, &default_grid()).unwrap();
            let integral = variance_from_chaos_integral(&curve).unwrap();
            let direct = single_edge_variance(beta);
            assert!((integral.value - direct).abs() < 1e-3, "beta {beta}: {} vs {direct}", integral.value);
        }
    }

    #[test]
    fn zero_curve_integrates_to_zero() {
        let curve = ChaosCurve::synthetic(vec![0.0, 1.0, 5.0], vec![0.0; 3]).unwrap();
        assert_eq!(variance_from_chaos_integral(&curve).unwrap().value, 0.0);
        let shifted = ChaosCurve::synthetic(vec![0.5, 1.0], vec![0.0; 2]).unwrap();
        assert!(variance_from_chaos_integral(&shifted).is_err());
    }

    #[test]
    fn single_edge_direct_variance_matches_oracle() {
        let model = ModelSpec::edwards_anderson(Graph::single_edge());
        for (beta, seed) in [(1.0, 1), (0.1, 2)] {
            let est = variance_direct(&model, Beta::Finite(beta), 20_000, SeedRecord::new(seed)).unwrap();
            let oracle = single_edge_variance(beta);
            assert!(est.var.agrees_with(oracle, 3.0), "beta {beta}: {:?} vs {oracle}", est.var);
        }
    }

    #[test]
    fn zero_couplings_have_zero_variance() {
        let model = ModelSpec::edwards_anderson(Graph::cycle(4).unwrap());
        let fs = variance_samples_with(&model, Beta::Finite(1.0), 10, |_| DisorderVector::zeros(4)).unwrap();
        assert_eq!(VarianceDirect::from_samples(&fs).unwrap().var.mean, 0.0);
    }

    #[test]
    fn sk_integral_matches_direct() {
        let model = ModelSpec::sk(8).unwrap();
        let beta = Beta::Finite(0.5);
        let grid = crate::analysis::chaos::geometric_grid(10.0, 16, 0.1).unwrap();
        let curve = chaos_curve(&model, beta, ChaosObservable::Kernel, &grid, 1500, Engine::Exact, SeedRecord::new(5))
            .unwrap();
        let integral = variance_from_chaos_integral(&curve).unwrap();
        let direct = variance_direct(&model, beta, 4000, SeedRecord::new(6)).unwrap();
        let se = (integral.stderr.powi(2) + direct.var.stderr.powi(2)).sqrt();
        assert!(
            (integral.value - direct.var.mean).abs() <= 4.0 * se + integral.tail_bound,
            "{integral:?} vs {:?}",
            direct.var
        );
    }

    #[test]
    fn quenched_on_four_cycle_at_zero_beta_limit() {
        // beta -> 0: both measures uniform, so Var(Q) = 1/|E| by pairwise independence of bond products
        let c4 = Graph::cycle(4).unwrap();
        let mut brute = (0.0, 0.0);
        for s in 0..16u64 {
            for t in 0..16u64 {
                let q = c4.bond_sum_from_xor(s ^ t) / 4.0;
                brute.0 += q / 256.0;
                brute.1 += q * q / 256.0;
            }
        }
        let brute_var = brute.1 - brute.0 * brute.0;
        assert!((brute_var - 0.25).abs() < 1e-15);
        let r = quenched_chaos_statistic(&c4, 1e-9, 1.0, 5, Engine::Exact, SeedRecord::new(1)).unwrap();
        assert!((r.estimate.mean - brute_var).abs() < 1e-8);
        assert!(quenched_bound(&c4, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_edge_quenched_at_most_one() {
        let r = quenched_chaos_statistic(&Graph::single_edge(), 2.0, 0.5, 50, Engine::Exact, SeedRecord::new(2)).unwrap();
        assert!(r.estimate.mean <= 1.0);
    }
}
