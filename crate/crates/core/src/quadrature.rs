//! Gaussian quadrature rules and the single-edge reference integrals built on them.

use crate::error::{Error, Result};

/// Gauss-Hermite rule rescaled to the standard normal: `E f(Z) ~ sum w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Node count of the standing quadrature oracle.
pub const ORACLE_NODES: usize = 64;

impl GaussHermite {
    /// Nodes are the roots of the physicists' `H_n`, found by Newton iteration
    /// on the orthonormal recurrence, then mapped `x -> sqrt(2) x`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 300 {
            return Err(Error::invalid("nodes", format!("need 1..=300 nodes, got {n}")));
        }
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        let norm = std::f64::consts::PI.sqrt();
        let sqrt2 = std::f64::consts::SQRT_2;
        Ok(GaussHermite {
            nodes: nodes.iter().map(|x| x * sqrt2).collect(),
            weights: weights.iter().map(|w| w / norm).collect(),
        })
    }

    pub fn oracle() -> Self {
        Self::new(ORACLE_NODES).expect("64 nodes is valid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E f(Z)`, `Z ~ N(0,1)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// `E f(Z1, Z2)` for independent standard normals.
    pub fn expect2(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, wx)| wx * self.expect(|y| f(*x, y)))
            .sum()
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("nodes", "need at least one node"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Ok(GaussLegendre { nodes, weights })
    }

    /// `int_a^b f`, split into `panels` equal sub-intervals.
    pub fn integrate(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                let mid = lo + h / 2.0;
                self.nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(x, w)| w * f(mid + h / 2.0 * x))
                    .sum::<f64>()
                    * h
                    / 2.0
            })
            .sum()
    }
}

/// `E|Z|^p` for a centered normal of variance `var`, by Gauss-Legendre on the
/// half line truncated at 40 standard deviations.
pub fn abs_moment_quadrature(p: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let gl = GaussLegendre::new(20).expect("valid");
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    2.0 * sd.powf(p) * gl.integrate(0.0, 40.0, 200, |x| x.powf(p) * density(x))
}

/// `log(4 cosh(x))` without overflow.
pub fn log_four_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() + std::f64::consts::LN_2
}

/// Single-edge E-A free energy `F(g) = (1/beta) log(4 cosh(beta g))`.
pub fn single_edge_free_energy(g: f64, beta: f64) -> f64 {
    log_four_cosh(beta * g) / beta
}

/// `Var F` of the single-edge model by the 1-D oracle.
pub fn single_edge_variance(beta: f64) -> f64 {
    let gh = GaussHermite::oracle();
    let m1 = gh.expect(|g| single_edge_free_energy(g, beta));
    let m2 = gh.expect(|g| single_edge_free_energy(g, beta).powi(2));
    m2 - m1 * m1
}

/// `E<rho>_{0,t} = E[tanh(beta g) tanh(beta g^t)]` for the single edge, by the 2-D oracle.
pub fn single_edge_rho(beta: f64, t: f64) -> Result<f64> {
    let (a, b) = crate::disorder::ou_weights(t)?;
    let gh = GaussHermite::oracle();
    Ok(gh.expect2(|g, h| (beta * g).tanh() * (beta * (a * g + b * h)).tanh()))
}
