//! Polynomials in independent standard Gaussians and their exact variances.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse polynomial: exponent vector -> nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

/// `E Z^p` for a standard Gaussian: `(p-1)!!` for even `p`, else 0.
pub fn gaussian_moment(p: u32) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    (1..p).step_by(2).map(|k| k as f64).product()
}

impl Polynomial {
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("polynomial needs at least one variable".into()));
        }
        Ok(Polynomial {
            n,
            terms: BTreeMap::new(),
        })
    }

    /// From `(exponents, coefficient)` pairs; repeated exponents are summed.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut p = Self::zero(n)?;
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    got: e.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::Numeric(format!("coefficient {c}")));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// `x_i`.
    pub fn variable(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::invalid("i", format!("variable {i} out of range 0..{n}")));
        }
        let mut e = vec![0; n];
        e[i] = 1;
        Self::from_terms(n, [(e, 1.0)])
    }

    fn add_term(&mut self, e: Vec<u32>, c: f64) {
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c != 0.0 {
                    v.insert(c);
                }
            }
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Constant term if the polynomial is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(e, _)| e.iter().all(|&p| p == 0))
                .map(|(_, c)| *c),
            _ => None,
        }
    }

    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial {
            n: self.n,
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.add_term(f, c * e[i] as f64);
            }
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.n != other.n {
            return Err(Error::Shape {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = Polynomial {
            n: self.n,
            terms: BTreeMap::new(),
        };
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let e: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    /// `E p(Z)` for i.i.d. standard Gaussians.
    pub fn expectation(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().map(|&p| gaussian_moment(p)).product::<f64>())
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&p, xi)| xi.powi(p as i32)).product::<f64>())
            .sum()
    }

    /// Re-index into `m >= n` variables, sending variable `i` to `map[i]`.
    pub(crate) fn embed(&self, m: usize, map: &[usize]) -> Polynomial {
        let mut out = Polynomial {
            n: m,
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            let mut f = vec![0; m];
            for (i, &p) in e.iter().enumerate() {
                f[map[i]] += p;
            }
            out.add_term(f, *c);
        }
        out
    }

    /// Random polynomial with up to `max_terms` monomials of total degree at
    /// most `max_degree` and coefficients uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, max_degree: u32, max_terms: usize) -> Result<Self> {
        let mut p = Self::zero(n)?;
        let count = rng.random_range(1..=max_terms.max(1));
        for _ in 0..count {
            let deg = rng.random_range(0..=max_degree);
            let mut e = vec![0; n];
            for _ in 0..deg {
                e[rng.random_range(0..n)] += 1;
            }
            p.add_term(e, rng.random_range(-1.0..1.0));
        }
        Ok(p)
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

/// Contribution of each order `k` to the variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermiteVariance {
    pub variance: f64,
    /// `(k, (1/k!) sum over ordered k-tuples of (E d^k f)^2)`.
    pub terms: Vec<(u32, f64)>,
}

/// `Var f = sum_k (1/k!) sum_{i_1..i_k} (E d_{i_1}..d_{i_k} f)^2`, exact for
/// polynomials since the series stops at `deg f`.
pub fn hermite_variance(f: &Polynomial) -> Result<HermiteVariance> {
    let deg = f.degree();
    if deg > 20 {
        return Err(Error::invalid("f", format!("degree {deg} is beyond the overflow guard")));
    }
    let mut per_order = vec![0.0; deg as usize + 1];
    // depth-first over ordered tuples; the derivative at each node is shared by its subtree
    fn walk(g: &Polynomial, depth: usize, per_order: &mut [f64]) {
        for i in 0..g.n {
            let d = g.derivative(i);
            if d.is_zero() {
                continue;
            }
            let m = d.expectation();
            per_order[depth + 1] += m * m;
            walk(&d, depth + 1, per_order);
        }
    }
    walk(f, 0, &mut per_order);
    let mut factorial = 1.0;
    let mut terms = Vec::new();
    let mut variance = 0.0;
    for (k, s) in per_order.iter().enumerate().skip(1) {
        factorial *= k as f64;
        let c = s / factorial;
        variance += c;
        terms.push((k as u32, c));
    }
    if !variance.is_finite() {
        return Err(Error::Numeric("variance overflow".into()));
    }
    Ok(HermiteVariance { variance, terms })
}

/// `E f^2 - (E f)^2` from exact Gaussian moments.
pub fn gaussian_variance_oracle(f: &Polynomial) -> f64 {
    let m = f.expectation();
    f.mul(f).expect("same arity").expectation() - m * m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceLowerBound {
    /// `(1/2) sum_i (E g_i d_i f)^2`.
    pub per_coordinate: f64,
    /// `(1/(2n)) (E g . grad f)^2`, weaker by Cauchy-Schwarz.
    pub gradient_form: f64,
}

pub fn variance_lower_bound_general(f: &Polynomial) -> VarianceLowerBound {
    let n = f.n;
    let terms: Vec<f64> = (0..n)
        .map(|i| {
            let gi = Polynomial::variable(n, i).expect("in range");
            gi.mul(&f.derivative(i)).expect("same arity").expectation()
        })
        .collect();
    let total: f64 = terms.iter().sum();
    VarianceLowerBound {
        per_coordinate: 0.5 * terms.iter().map(|x| x * x).sum::<f64>(),
        gradient_form: total * total / (2.0 * n as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(n: usize, e: &[u32]) -> Polynomial {
        Polynomial::from_terms(n, [(e.to_vec(), 1.0)]).unwrap()
    }

    #[test]
    fn moments() {
        assert_eq!(gaussian_moment(0), 1.0);
        assert_eq!(gaussian_moment(3), 0.0);
        assert_eq!(gaussian_moment(6), 15.0);
    }

    #[test]
    fn textbook_examples() {
        let cases = [(mono(1, &[1]), 1.0), (mono(1, &[2]), 2.0), (mono(2, &[1, 1]), 1.0)];
        for (f, v) in &cases {
            assert!((hermite_variance(f).unwrap().variance - v).abs() < 1e-12);
            assert!((gaussian_variance_oracle(f) - v).abs() < 1e-12);
        }
        let b = variance_lower_bound_general(&cases[1].0);
        assert!((b.per_coordinate - 2.0).abs() < 1e-12);
        assert_eq!(variance_lower_bound_general(&cases[0].0).per_coordinate, 0.0);
        assert_eq!(variance_lower_bound_general(&cases[2].0).per_coordinate, 0.0);
    }

    #[test]
    fn g1_squared_term_table() {
        let h = hermite_variance(&mono(1, &[2])).unwrap();
        assert_eq!(h.terms, vec![(1, 0.0), (2, 2.0)]);
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = Polynomial::from_terms(2, [(vec![1, 0], 1.0), (vec![1, 0], -1.0)]).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.as_constant(), Some(0.0));
    }

    #[test]
    fn eval_and_embed() {
        let p = Polynomial::from_terms(2, [(vec![2, 1], 3.0), (vec![0, 0], 1.0)]).unwrap();
        assert_eq!(p.eval(&[2.0, 5.0]), 61.0);
        let q = p.embed(4, &[3, 1]);
        assert_eq!(q.eval(&[0.0, 5.0, 0.0, 2.0]), 61.0);
    }
}
