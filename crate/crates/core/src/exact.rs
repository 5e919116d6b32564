//! Exact computations over all `2^N` states.
//!
//! Energies are produced by a Gray-code sweep: the state space is cut into
//! blocks of `2^c` consecutive indices sharing their high bits, each block is
//! walked in Gray order over its low bits with single-spin-flip updates, and
//! blocks run in parallel. Every block restarts from a direct evaluation, so
//! rounding drift is bounded by the block length.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderVector;
use crate::error::{Error, Result};
use crate::models::{overlap_from_xor, ModelSpec, SpinConfiguration};

/// Largest N enumerated exactly.
pub const ENUMERATION_CAP: usize = 24;
/// Largest N for the generic `O(4^N)` two-replica sum.
pub const PAIR_SUM_CAP: usize = 12;

const BLOCK_BITS: usize = 12;

/// Inverse temperature; `beta = inf` is its own state, never a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn finite(b: f64) -> Result<Self> {
        if b.is_nan() || b < 0.0 {
            return Err(Error::invalid("beta", format!("must be >= 0, got {b}")));
        }
        if b.is_infinite() {
            return Ok(Beta::Infinite);
        }
        Ok(Beta::Finite(b))
    }

    pub fn value(&self) -> f64 {
        match self {
            Beta::Finite(b) => *b,
            Beta::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Beta::Infinite)
    }
}

impl From<f64> for Beta {
    fn from(b: f64) -> Self {
        if b.is_infinite() {
            Beta::Infinite
        } else {
            Beta::Finite(b)
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(b) => Beta::finite(b).map_err(serde::de::Error::custom),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(Beta::Infinite)
            }
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "beta must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Exact Gibbs measure of one disorder realization.
#[derive(Debug, Clone)]
pub struct GibbsTable {
    n: usize,
    beta: Beta,
    energies: Vec<f64>,
    probs: Vec<f64>,
    log_z: f64,
    ground_energy: f64,
}

/// Hamiltonian of every state, indexed by the state's bit pattern.
pub fn state_energies(model: &ModelSpec, g: &DisorderVector) -> Result<Vec<f64>> {
    model.validate()?;
    model.check_disorder(g)?;
    let n = model.n_sites();
    if n > ENUMERATION_CAP {
        return Err(Error::Resource {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let mut fields = vec![0.0; 1 << n];
    let block_bits = n.min(BLOCK_BITS);
    let g = g.values();
    fields
        .par_chunks_mut(1 << block_bits)
        .enumerate()
        .for_each(|(block, out)| sweep_block(model, g, (block as u64) << block_bits, block_bits, out));
    if let Some(i) = fields.iter().position(|f| !f.is_finite()) {
        return Err(Error::Numeric(format!("non-finite energy at state {i}")));
    }
    let scale = model.field_scale();
    fields.iter_mut().for_each(|f| *f = -*f / scale);
    Ok(fields)
}

/// Fills `out[low]` with the field of state `high | low`, visiting `low` in Gray order.
fn sweep_block(model: &ModelSpec, g: &[f64], high: u64, bits: usize, out: &mut [f64]) {
    let steps = 1usize << bits;
    match model {
        ModelSpec::Sk { n } => {
            let n = *n;
            let mut state = high;
            let spin = |s: u64, i: usize| if s >> i & 1 == 1 { 1.0 } else { -1.0 };
            let sym = |i: usize, j: usize| g[i * n + j] + g[j * n + i];
            let mut field = model.field_unchecked(g, state);
            let mut local: Vec<f64> = (0..n)
                .map(|k| (0..n).filter(|&j| j != k).map(|j| sym(k, j) * spin(state, j)).sum())
                .collect();
            out[0] = field;
            for i in 1..steps {
                let k = i.trailing_zeros() as usize;
                let old = spin(state, k);
                field -= 2.0 * old * local[k];
                for (j, h) in local.iter_mut().enumerate() {
                    if j != k {
                        *h -= 2.0 * old * sym(j, k);
                    }
                }
                state ^= 1 << k;
                out[(state ^ high) as usize] = field;
            }
        }
        ModelSpec::EdwardsAnderson { graph } => {
            let mut state = high;
            let spin = |s: u64, i: usize| if s >> i & 1 == 1 { 1.0 } else { -1.0 };
            let mut field = model.field_unchecked(g, state);
            out[0] = field;
            for i in 1..steps {
                let k = i.trailing_zeros() as usize;
                let local: f64 = graph
                    .neighbours(k)
                    .iter()
                    .map(|&(v, e)| g[e] * spin(state, v))
                    .sum();
                field -= 2.0 * spin(state, k) * local;
                state ^= 1 << k;
                out[(state ^ high) as usize] = field;
            }
        }
        ModelSpec::Rem { .. } | ModelSpec::MixedPSpin { .. } => {
            for (low, slot) in out.iter_mut().enumerate() {
                *slot = model.field_unchecked(g, high | low as u64);
            }
        }
    }
}

/// Exact per-state Hamiltonian and Gibbs weights at `beta`.
pub fn build_gibbs_table(model: &ModelSpec, g: &DisorderVector, beta: Beta) -> Result<GibbsTable> {
    let energies = state_energies(model, g)?;
    GibbsTable::from_energies(model.n_sites(), energies, beta)
}

fn ground_tolerance(e_min: f64) -> f64 {
    1e-10 * e_min.abs().max(1.0)
}

impl GibbsTable {
    pub fn from_energies(n: usize, energies: Vec<f64>, beta: Beta) -> Result<Self> {
        if energies.len() != 1 << n {
            return Err(Error::Shape {
                expected: 1 << n,
                got: energies.len(),
            });
        }
        let ground_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let (probs, log_z) = match beta {
            Beta::Finite(b) => {
                if b.is_nan() || b < 0.0 {
                    return Err(Error::invalid("beta", format!("must be >= 0, got {b}")));
                }
                // max-shifted log-sum-exp
                let shift = -b * ground_energy;
                let mut probs: Vec<f64> = energies.iter().map(|e| (-b * e - shift).exp()).collect();
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= total);
                (probs, shift + total.ln())
            }
            Beta::Infinite => {
                let tol = ground_tolerance(ground_energy);
                let count = energies.iter().filter(|&&e| e <= ground_energy + tol).count();
                let w = 1.0 / count as f64;
                let probs = energies
                    .iter()
                    .map(|&e| if e <= ground_energy + tol { w } else { 0.0 })
                    .collect();
                (probs, (count as f64).ln())
            }
        };
        Ok(GibbsTable {
            n,
            beta,
            energies,
            probs,
            log_z,
            ground_energy,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Normalized Gibbs probabilities, indexed by state bits.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `log Z = logsumexp(-beta H)`. At `beta = inf` this holds the log of
    /// the number of ground states.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn log_weight(&self, state: usize) -> f64 {
        match self.beta {
            Beta::Finite(b) => -b * self.energies[state] - self.log_z,
            Beta::Infinite => self.probs[state].ln(),
        }
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    /// `(1/beta) log Z`; `-E_ground` at `beta = inf` and `+inf` at `beta = 0`.
    pub fn free_energy(&self) -> f64 {
        match self.beta {
            Beta::Finite(b) if b == 0.0 => f64::INFINITY,
            Beta::Finite(b) => self.log_z / b,
            Beta::Infinite => -self.ground_energy,
        }
    }

    /// Gibbs mean energy `<H>`.
    pub fn mean_energy(&self) -> f64 {
        self.energies.iter().zip(&self.probs).map(|(e, p)| e * p).sum()
    }

    pub fn ground_states(&self) -> Vec<SpinConfiguration> {
        let tol = ground_tolerance(self.ground_energy);
        self.energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| e <= self.ground_energy + tol)
            .map(|(i, _)| SpinConfiguration::from_index(i as u64, self.n))
            .collect()
    }

    pub fn expect(&self, mut observable: impl FnMut(&SpinConfiguration) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| p * observable(&SpinConfiguration::from_index(i as u64, self.n)))
            .sum()
    }

    /// Matrix of `<s_i s_j>` (row-major, `N x N`).
    pub fn spin_correlations(&self) -> Vec<f64> {
        let n = self.n;
        let mut c = vec![0.0; n * n];
        for (state, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in i..n {
                    let agree = ((state >> i) ^ (state >> j)) & 1 == 0;
                    c[i * n + j] += if agree { p } else { -p };
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                c[i * n + j] = c[j * n + i];
            }
        }
        c
    }

    /// Exact draw by inverse CDF; `u` uniform in `[0, 1)`.
    pub fn sample(&self, u: f64) -> SpinConfiguration {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                last = i;
                acc += p;
                if u < acc {
                    return SpinConfiguration::from_index(i as u64, self.n);
                }
            }
        }
        SpinConfiguration::from_index(last as u64, self.n)
    }

    pub fn summary(&self) -> TableSummary {
        TableSummary {
            n: self.n,
            beta: self.beta,
            log_z: self.log_z,
            free_energy: self.free_energy(),
            mean_energy: self.mean_energy(),
            ground_energy: self.ground_energy,
            ground_states: self.ground_states(),
        }
    }
}

/// JSON-exportable digest of a table.
#[derive(Debug, Clone, Serialize)]
pub struct TableSummary {
    pub n: usize,
    pub beta: Beta,
    pub log_z: f64,
    pub free_energy: f64,
    pub mean_energy: f64,
    pub ground_energy: f64,
    pub ground_states: Vec<SpinConfiguration>,
}

pub fn free_energy(table: &GibbsTable) -> f64 {
    table.free_energy()
}

pub fn gibbs_expect(table: &GibbsTable, observable: impl FnMut(&SpinConfiguration) -> f64) -> f64 {
    table.expect(observable)
}

fn check_same_size(a: &GibbsTable, b: &GibbsTable) -> Result<()> {
    if a.n != b.n {
        return Err(Error::Shape {
            expected: a.n,
            got: b.n,
        });
    }
    Ok(())
}

/// Generic product-measure expectation `sum_{s,t} w_a(s) w_b(t) h(s,t)`, `O(4^N)`.
pub fn two_replica_expect(
    a: &GibbsTable,
    b: &GibbsTable,
    mut observable: impl FnMut(&SpinConfiguration, &SpinConfiguration) -> f64,
) -> Result<f64> {
    check_same_size(a, b)?;
    if a.n > PAIR_SUM_CAP {
        return Err(Error::Resource {
            n: a.n,
            cap: PAIR_SUM_CAP,
        });
    }
    let mut total = 0.0;
    for (i, &pa) in a.probs.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let s = SpinConfiguration::from_index(i as u64, a.n);
        for (j, &pb) in b.probs.iter().enumerate() {
            if pb != 0.0 {
                total += pa * pb * observable(&s, &SpinConfiguration::from_index(j as u64, a.n));
            }
        }
    }
    Ok(total)
}

/// Law of `s XOR t` under the product measure: `c(x) = sum_s w_a(s) w_b(s ^ x)`.
///
/// Computed as a XOR convolution through the Walsh-Hadamard transform in
/// `O(N 2^N)`. Every overlap-type observable (site overlap, bond overlap,
/// state identity, any Gibbs kernel) is a function of `x` alone.
pub fn xor_pair_law(a: &GibbsTable, b: &GibbsTable) -> Result<Vec<f64>> {
    check_same_size(a, b)?;
    let mut fa = a.probs.clone();
    let mut fb = b.probs.clone();
    walsh_hadamard(&mut fa);
    walsh_hadamard(&mut fb);
    fa.iter_mut().zip(&fb).for_each(|(x, y)| *x *= y);
    walsh_hadamard(&mut fa);
    let scale = 1.0 / fa.len() as f64;
    fa.iter_mut().for_each(|x| *x *= scale);
    Ok(fa)
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, w) = (*x, *y);
                *x = u + w;
                *y = u - w;
            }
        }
        h *= 2;
    }
}

/// `<f(s XOR t)>` under the product of two tables.
pub fn two_replica_expect_xor(a: &GibbsTable, b: &GibbsTable, f: impl Fn(u64) -> f64) -> Result<f64> {
    let law = xor_pair_law(a, b)?;
    Ok(law.iter().enumerate().map(|(x, c)| c * f(x as u64)).sum())
}

/// `<R^{2k}>` between the two tables.
pub fn overlap_moment(a: &GibbsTable, b: &GibbsTable, k: u32) -> Result<f64> {
    let n = a.n;
    two_replica_expect_xor(a, b, |x| overlap_from_xor(x, n).powi(2 * k as i32))
}

/// `sum_s w_a(s) w_b(s)`: probability that the two replicas coincide.
pub fn coincidence_probability(a: &GibbsTable, b: &GibbsTable) -> Result<f64> {
    check_same_size(a, b)?;
    Ok(a.probs.iter().zip(&b.probs).map(|(x, y)| x * y).sum())
}

/// Max of the model's field over all states.
#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    /// `M = max_s field_value(s)`.
    pub max_field: f64,
    pub argmax: Vec<SpinConfiguration>,
    /// Disorder mean of `M`, when estimated.
    pub m_est: Option<f64>,
    /// `max_s Var(field_value(s))` (SK: `N^2` for `X_N`).
    pub sigma2: f64,
    /// Same on the Gibbs-field scale (SK: `N / 2`).
    pub sigma2_gibbs: f64,
}

pub fn field_summary(model: &ModelSpec, g: &DisorderVector) -> Result<FieldSummary> {
    let energies = state_energies(model, g)?;
    let scale = model.field_scale();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = ground_tolerance(e_min);
    let argmax = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e <= e_min + tol)
        .map(|(i, _)| SpinConfiguration::from_index(i as u64, model.n_sites()))
        .collect();
    Ok(FieldSummary {
        max_field: -e_min * scale,
        argmax,
        m_est: None,
        sigma2: model.gibbs_variance() * scale * scale,
        sigma2_gibbs: model.gibbs_variance(),
    })
}

/// Argmin set of `H`; exact ties are kept.
pub fn ground_states(model: &ModelSpec, g: &DisorderVector) -> Result<Vec<SpinConfiguration>> {
    let energies = state_energies(model, g)?;
    Ok(GibbsTable::from_energies(model.n_sites(), energies, Beta::Infinite)?.ground_states())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{fresh_disorder, SeedRecord};
    use crate::models::Graph;

    fn edge(g: f64) -> (ModelSpec, DisorderVector) {
        (
            ModelSpec::edwards_anderson(Graph::single_edge()),
            DisorderVector::from_values(vec![g]).unwrap(),
        )
    }

    #[test]
    fn single_edge_closed_forms() {
        let (m, g) = edge(0.0);
        let t = build_gibbs_table(&m, &g, Beta::Finite(1.0)).unwrap();
        assert!((t.log_z() - 4f64.ln()).abs() < 1e-15);
        assert!((t.free_energy() - 4f64.ln()).abs() < 1e-15);
        for &(gv, b) in &[(0.7, 1.3), (-1.2, 0.4), (2.5, 3.0)] {
            let (m, g) = edge(gv);
            let t = build_gibbs_table(&m, &g, Beta::Finite(b)).unwrap();
            let closed = (4.0 * (b * gv).cosh()).ln() / b;
            assert!((t.free_energy() - closed).abs() < 1e-13);
            let corr = t.expect(|s| s.spin(0) * s.spin(1));
            assert!((corr - (b * gv).tanh()).abs() < 1e-14);
        }
        let (m, g) = edge(2.0);
        let t = build_gibbs_table(&m, &g, Beta::Infinite).unwrap();
        assert_eq!(t.free_energy(), 2.0);
        assert!((t.expect(|s| s.spin(0) * s.spin(1)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sk_one_site() {
        let m = ModelSpec::sk(1).unwrap();
        let g = DisorderVector::from_values(vec![0.8]).unwrap();
        let b = 1.7;
        let t = build_gibbs_table(&m, &g, Beta::Finite(b)).unwrap();
        let closed = 0.8 / 2f64.sqrt() + 2f64.ln() / b;
        assert!((t.free_energy() - closed).abs() < 1e-14);
        let fs = field_summary(&m, &g).unwrap();
        assert_eq!(fs.max_field, 0.8);
        assert_eq!(fs.argmax.len(), 2);
    }

    #[test]
    fn ground_state_sets() {
        let (m, g) = edge(1.0);
        let gs: Vec<String> = ground_states(&m, &g).unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(gs, vec!["--", "++"]);
        let (m, g) = edge(-1.0);
        let gs: Vec<String> = ground_states(&m, &g).unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(gs, vec!["+-", "-+"]);
        let (m, g) = edge(0.0);
        assert_eq!(ground_states(&m, &g).unwrap().len(), 4);
        assert_eq!(field_summary(&m, &DisorderVector::from_values(vec![-3.0]).unwrap()).unwrap().max_field, 3.0);
    }

    #[test]
    fn beta_zero_replicas() {
        let m = ModelSpec::sk(5).unwrap();
        let g = fresh_disorder(25, SeedRecord::new(2)).unwrap();
        let t = build_gibbs_table(&m, &g, Beta::Finite(0.0)).unwrap();
        assert!((overlap_moment(&t, &t, 1).unwrap() - 0.2).abs() < 1e-15);
        assert!(t.expect(|s| s.spin(0) * s.spin(1)).abs() < 1e-15);
        assert_eq!(t.free_energy(), f64::INFINITY);
    }

    #[test]
    fn identity_observable_is_sum_of_squares() {
        let m = ModelSpec::sk(4).unwrap();
        let g = fresh_disorder(16, SeedRecord::new(11)).unwrap();
        let t = build_gibbs_table(&m, &g, Beta::Finite(1.5)).unwrap();
        let generic = two_replica_expect(&t, &t, |a, b| (a == b) as u8 as f64).unwrap();
        let squares: f64 = t.probs().iter().map(|p| p * p).sum();
        assert!((generic - squares).abs() < 1e-15);
        assert!((coincidence_probability(&t, &t).unwrap() - squares).abs() < 1e-15);
    }

    #[test]
    fn xor_law_matches_pair_sum() {
        let m = ModelSpec::sk(6).unwrap();
        let ga = fresh_disorder(36, SeedRecord::new(1)).unwrap();
        let gb = fresh_disorder(36, SeedRecord::new(2)).unwrap();
        let a = build_gibbs_table(&m, &ga, Beta::Finite(0.9)).unwrap();
        let b = build_gibbs_table(&m, &gb, Beta::Finite(1.4)).unwrap();
        for k in 1..=3 {
            let brute = two_replica_expect(&a, &b, |s, t| {
                crate::models::site_overlap(s, t).unwrap().powi(2 * k)
            })
            .unwrap();
            assert!((overlap_moment(&a, &b, k as u32).unwrap() - brute).abs() < 1e-14);
        }
        let law = xor_pair_law(&a, &b).unwrap();
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn enumeration_cap() {
        let m = ModelSpec::sk(25).unwrap();
        let g = DisorderVector::zeros(625).unwrap();
        assert!(matches!(
            build_gibbs_table(&m, &g, Beta::Finite(1.0)),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn beta_serde() {
        assert_eq!(serde_json::from_str::<Beta>("\"inf\"").unwrap(), Beta::Infinite);
        assert_eq!(serde_json::from_str::<Beta>("1.5").unwrap(), Beta::Finite(1.5));
        assert!(serde_json::from_str::<Beta>("-1").is_err());
        assert_eq!(serde_json::to_string(&Beta::Infinite).unwrap(), "\"inf\"");
    }
}
