//! Model families: Sherrington-Kirkpatrick, mixed p-spin, Edwards-Anderson on a
//! graph, and the Random Energy Model.
//!
//! Two scales are in play. `field_value` is the natural field of each model
//! (for SK the raw `X_N = sum_{i,j} g_ij s_i s_j`, for the others `-H`), while
//! the *Gibbs field* is always `-H`; the Gibbs measure puts mass proportional
//! to `exp(beta * gibbs_field)`. Kernels named `gibbs_*` are covariances of the
//! Gibbs field, which is the scale every chaos and variance identity uses.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::disorder::DisorderVector;
use crate::error::{Error, Result};

/// Largest N a [`SpinConfiguration`] can hold.
pub const MAX_SITES: usize = 64;
/// Largest N for which the REM stores one energy per state.
pub const REM_CAP: usize = 24;

/// `sigma in {-1,+1}^N` packed in a word: bit `i` set means `sigma_i = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration {
    bits: u64,
    n_sites: usize,
}

impl SpinConfiguration {
    pub fn new(bits: u64, n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::InvalidSize(format!(
                "spin configuration needs 1..={MAX_SITES} sites, got {n_sites}"
            )));
        }
        if n_sites < 64 && bits >> n_sites != 0 {
            return Err(Error::invalid("bits", "high bits beyond n_sites must be zero"));
        }
        Ok(SpinConfiguration { bits, n_sites })
    }

    pub(crate) fn from_index(bits: u64, n_sites: usize) -> Self {
        debug_assert!(n_sites >= 64 || bits >> n_sites == 0);
        SpinConfiguration { bits, n_sites }
    }

    pub fn all_up(n_sites: usize) -> Result<Self> {
        Self::new(full_mask(n_sites), n_sites)
    }

    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => bits |= 1 << i,
                -1 => {}
                _ => return Err(Error::invalid("spins", "entries must be +1 or -1")),
            }
        }
        Self::new(bits, spins.len())
    }

    /// Parses a `+-` string, site 0 first.
    pub fn parse(s: &str) -> Result<Self> {
        let spins: Result<Vec<i8>> = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::invalid("spins", format!("unexpected character {c:?}"))),
            })
            .collect();
        Self::from_spins(&spins?)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        if self.bits >> i & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn flipped(&self, i: usize) -> Self {
        SpinConfiguration {
            bits: self.bits ^ (1 << i),
            n_sites: self.n_sites,
        }
    }

    pub fn negated(&self) -> Self {
        SpinConfiguration {
            bits: !self.bits & full_mask(self.n_sites),
            n_sites: self.n_sites,
        }
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.n_sites)
            .map(|i| if self.bits >> i & 1 == 1 { 1 } else { -1 })
            .collect()
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_sites {
            f.write_str(if self.bits >> i & 1 == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl Serialize for SpinConfiguration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinConfiguration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SpinConfiguration::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_pair(a: &SpinConfiguration, b: &SpinConfiguration) -> Result<()> {
    if a.n_sites != b.n_sites {
        return Err(Error::Shape {
            expected: a.n_sites,
            got: b.n_sites,
        });
    }
    Ok(())
}

/// Site overlap `R = (1/N) sum_i s_i t_i`.
pub fn site_overlap(a: &SpinConfiguration, b: &SpinConfiguration) -> Result<f64> {
    check_pair(a, b)?;
    Ok(overlap_from_xor(a.bits ^ b.bits, a.n_sites))
}

#[inline]
pub(crate) fn overlap_from_xor(x: u64, n: usize) -> f64 {
    (n as f64 - 2.0 * x.count_ones() as f64) / n as f64
}

/// Bond overlap `Q = (1/|E|) sum_{(i,j) in E} s_i s_j t_i t_j`.
pub fn bond_overlap(graph: &Graph, a: &SpinConfiguration, b: &SpinConfiguration) -> Result<f64> {
    check_pair(a, b)?;
    if a.n_sites != graph.n_vertices {
        return Err(Error::Shape {
            expected: graph.n_vertices,
            got: a.n_sites,
        });
    }
    Ok(graph.bond_sum_from_xor(a.bits ^ b.bits) / graph.edges.len() as f64)
}

/// Undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    max_degree: usize,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Builds a graph from an edge list; rejects self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_vertices == 0 || n_vertices > MAX_SITES {
            return Err(Error::InvalidSize(format!(
                "graph needs 1..={MAX_SITES} vertices, got {n_vertices}"
            )));
        }
        if edges.is_empty() {
            return Err(Error::InvalidSize("graph must have at least one edge".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut adjacency = vec![Vec::new(); n_vertices];
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::invalid("edges", format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::invalid("edges", format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid("edges", format!("duplicate edge ({u},{v})")));
            }
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Graph {
            n_vertices,
            edges,
            max_degree,
            adjacency,
        })
    }

    pub fn single_edge() -> Self {
        Graph::new(2, vec![(0, 1)]).expect("valid")
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph::new(n, edges)
    }

    /// Cycle `C_n`, `n >= 3`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSize(format!("cycle needs n >= 3, got {n}")));
        }
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }

    /// Periodic `rows x cols` grid, both sides at least 3.
    pub fn torus(rows: usize, cols: usize) -> Result<Self> {
        if rows < 3 || cols < 3 {
            return Err(Error::InvalidSize("torus sides must be at least 3".into()));
        }
        let at = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                edges.push((at(r, c), at(r, (c + 1) % cols)));
                edges.push((at(r, c), at((r + 1) % rows, c)));
            }
        }
        Graph::new(rows * cols, edges)
    }

    /// Text format: first token is the vertex count, then whitespace-separated
    /// `u v` pairs. `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let parse = |t: Option<&str>| -> Result<usize> {
            t.ok_or_else(|| Error::invalid("edges", "unexpected end of edge list"))?
                .parse()
                .map_err(|e| Error::invalid("edges", format!("{e}")))
        };
        let n = parse(tokens.next())?;
        let mut edges = Vec::new();
        while let Some(u) = tokens.next() {
            edges.push((parse(Some(u))?, parse(tokens.next())?));
        }
        Graph::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n_vertices);
        for (u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `(neighbour, edge index)` pairs incident to `v`.
    pub fn neighbours(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// `sum_e tau_i tau_j` where `tau = -1` on the bits set in `x`.
    #[inline]
    pub(crate) fn bond_sum_from_xor(&self, x: u64) -> f64 {
        let disagree = self
            .edges
            .iter()
            .filter(|&&(u, v)| ((x >> u) ^ (x >> v)) & 1 == 1)
            .count();
        self.edges.len() as f64 - 2.0 * disagree as f64
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Edges {
                n_vertices: usize,
                edges: Vec<(usize, usize)>,
            },
            Named(NamedGraph),
        }
        #[derive(Deserialize)]
        #[serde(tag = "generator", rename_all = "kebab-case")]
        enum NamedGraph {
            SingleEdge,
            Complete { n: usize },
            Cycle { n: usize },
            Torus { rows: usize, cols: usize },
        }
        let g = match Repr::deserialize(d)? {
            Repr::Edges { n_vertices, edges } => Graph::new(n_vertices, edges),
            Repr::Named(NamedGraph::SingleEdge) => Ok(Graph::single_edge()),
            Repr::Named(NamedGraph::Complete { n }) => Graph::complete(n),
            Repr::Named(NamedGraph::Cycle { n }) => Graph::cycle(n),
            Repr::Named(NamedGraph::Torus { rows, cols }) => Graph::torus(rows, cols),
        };
        g.map_err(serde::de::Error::custom)
    }
}

/// One term `c_p x^p` of a mixed p-spin covariance `xi(x) = sum_p c_p x^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PSpinTerm {
    pub p: u32,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Sk { n: usize },
    MixedPSpin { n: usize, terms: Vec<PSpinTerm> },
    EdwardsAnderson { graph: Graph },
    Rem { n: usize },
}

impl ModelSpec {
    pub fn sk(n: usize) -> Result<Self> {
        let m = ModelSpec::Sk { n };
        m.validate()?;
        Ok(m)
    }

    pub fn mixed_p_spin(n: usize, terms: Vec<PSpinTerm>) -> Result<Self> {
        let m = ModelSpec::MixedPSpin { n, terms };
        m.validate()?;
        Ok(m)
    }

    pub fn edwards_anderson(graph: Graph) -> Self {
        ModelSpec::EdwardsAnderson { graph }
    }

    pub fn rem(n: usize) -> Result<Self> {
        let m = ModelSpec::Rem { n };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n == 0 || n > MAX_SITES {
            return Err(Error::InvalidSize(format!("N must be in 1..={MAX_SITES}, got {n}")));
        }
        match self {
            ModelSpec::Rem { n } if *n > REM_CAP => Err(Error::Resource {
                n: *n,
                cap: REM_CAP,
            }),
            ModelSpec::MixedPSpin { n, terms } => {
                if terms.is_empty() {
                    return Err(Error::invalid("terms", "mixed p-spin needs at least one term"));
                }
                for t in terms {
                    if t.p == 0 || t.c < 0.0 || !t.c.is_finite() {
                        return Err(Error::invalid(
                            "terms",
                            format!("need p >= 1 and finite c >= 0, got p={} c={}", t.p, t.c),
                        ));
                    }
                    if (*n as f64).powi(t.p as i32) > 1e7 {
                        return Err(Error::Resource { n: *n, cap: 0 });
                    }
                }
                let xi = |x: f64| terms.iter().map(|t| t.c * x.powi(t.p as i32)).sum::<f64>();
                let grid = (0..=2000).map(|k| -1.0 + k as f64 / 1000.0);
                let overlaps = (0..=*n).map(|d| 1.0 - 2.0 * d as f64 / *n as f64);
                if grid.chain(overlaps).any(|x| xi(x) < -1e-15) {
                    return Err(Error::invalid("terms", "xi must be nonnegative on [-1, 1]"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn n_sites(&self) -> usize {
        match self {
            ModelSpec::Sk { n } | ModelSpec::MixedPSpin { n, .. } | ModelSpec::Rem { n } => *n,
            ModelSpec::EdwardsAnderson { graph } => graph.n_vertices(),
        }
    }

    /// Number of Gaussian couplings the model consumes.
    pub fn coupling_count(&self) -> usize {
        match self {
            ModelSpec::Sk { n } => n * n,
            ModelSpec::MixedPSpin { n, terms } => terms.iter().map(|t| n.pow(t.p)).sum(),
            ModelSpec::EdwardsAnderson { graph } => graph.n_edges(),
            ModelSpec::Rem { n } => 1 << n,
        }
    }

    pub fn check_disorder(&self, g: &DisorderVector) -> Result<()> {
        let expected = self.coupling_count();
        if g.len() != expected {
            return Err(Error::Shape {
                expected,
                got: g.len(),
            });
        }
        Ok(())
    }

    fn check_config(&self, s: &SpinConfiguration) -> Result<()> {
        if s.n_sites() != self.n_sites() {
            return Err(Error::Shape {
                expected: self.n_sites(),
                got: s.n_sites(),
            });
        }
        Ok(())
    }

    /// `field_value = field_scale * (-H)`; `sqrt(2N)` for SK, 1 otherwise.
    pub fn field_scale(&self) -> f64 {
        match self {
            ModelSpec::Sk { n } => (2.0 * *n as f64).sqrt(),
            _ => 1.0,
        }
    }

    /// SK: `X_N(s) = sum_{i,j} g_ij s_i s_j`; E-A: `sum_E g_ij s_i s_j`;
    /// REM: `sqrt(N) g_s`; mixed p-spin: `-H(s)`.
    pub fn field_value(&self, g: &DisorderVector, s: &SpinConfiguration) -> Result<f64> {
        self.check_disorder(g)?;
        self.check_config(s)?;
        Ok(self.field_unchecked(g.values(), s.bits()))
    }

    pub fn hamiltonian(&self, g: &DisorderVector, s: &SpinConfiguration) -> Result<f64> {
        Ok(-self.field_value(g, s)? / self.field_scale())
    }

    pub(crate) fn field_unchecked(&self, g: &[f64], bits: u64) -> f64 {
        let spin = |i: usize| if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
        match self {
            ModelSpec::Sk { n } => {
                let n = *n;
                let mut total = 0.0;
                for i in 0..n {
                    let row = &g[i * n..(i + 1) * n];
                    let dot: f64 = row.iter().enumerate().map(|(j, gij)| gij * spin(j)).sum();
                    total += spin(i) * dot;
                }
                total
            }
            ModelSpec::EdwardsAnderson { graph } => graph
                .edges()
                .iter()
                .zip(g)
                .map(|(&(u, v), gij)| gij * spin(u) * spin(v))
                .sum(),
            ModelSpec::Rem { n } => (*n as f64).sqrt() * g[bits as usize],
            ModelSpec::MixedPSpin { n, terms } => {
                let spins: Vec<f64> = (0..*n).map(spin).collect();
                let mut offset = 0;
                let mut total = 0.0;
                for t in terms {
                    let len = n.pow(t.p);
                    let block = &g[offset..offset + len];
                    offset += len;
                    if t.c == 0.0 {
                        continue;
                    }
                    let scale = t.c.sqrt() * (*n as f64).powf((1.0 - t.p as f64) / 2.0);
                    total += scale * tensor_contract(block, &spins, t.p);
                }
                total
            }
        }
    }

    /// Gibbs field `-H`.
    #[inline]
    #[cfg(test)]
    pub(crate) fn gibbs_field_unchecked(&self, g: &[f64], bits: u64) -> f64 {
        self.field_unchecked(g, bits) / self.field_scale()
    }

    /// `Cov(field_value(a), field_value(b))`: SK `N^2 R^2`; E-A `sum_E` of bond
    /// products; REM `N 1{a = b}`; mixed p-spin `N xi(R)`.
    pub fn covariance_kernel(&self, a: &SpinConfiguration, b: &SpinConfiguration) -> Result<f64> {
        Ok(self.gibbs_kernel(a, b)? * self.field_scale().powi(2))
    }

    /// `Cov(-H(a), -H(b))`: SK `N R^2 / 2`, E-A `|E| Q`, REM `N 1{a = b}`,
    /// mixed p-spin `N xi(R)`.
    pub fn gibbs_kernel(&self, a: &SpinConfiguration, b: &SpinConfiguration) -> Result<f64> {
        self.check_config(a)?;
        check_pair(a, b)?;
        Ok(self.gibbs_kernel_xor(a.bits() ^ b.bits()))
    }

    /// Every kernel here depends on the pair only through `a XOR b`.
    #[inline]
    pub(crate) fn gibbs_kernel_xor(&self, x: u64) -> f64 {
        let n = self.n_sites();
        match self {
            ModelSpec::Sk { .. } => {
                let r = overlap_from_xor(x, n);
                n as f64 * r * r / 2.0
            }
            ModelSpec::EdwardsAnderson { graph } => graph.bond_sum_from_xor(x),
            ModelSpec::Rem { .. } => {
                if x == 0 {
                    n as f64
                } else {
                    0.0
                }
            }
            ModelSpec::MixedPSpin { terms, .. } => {
                let r = overlap_from_xor(x, n);
                n as f64 * terms.iter().map(|t| t.c * r.powi(t.p as i32)).sum::<f64>()
            }
        }
    }

    /// `Var(-H(s))`, the same for every state in all four families.
    pub fn gibbs_variance(&self) -> f64 {
        self.gibbs_kernel_xor(0)
    }

    /// Whether `gibbs_kernel >= 0` on every pair.
    pub fn kernel_nonnegative(&self) -> bool {
        match self {
            ModelSpec::Sk { .. } | ModelSpec::Rem { .. } => true,
            // validate() already enforced xi >= 0 on [-1, 1]
            ModelSpec::MixedPSpin { .. } => true,
            ModelSpec::EdwardsAnderson { .. } => false,
        }
    }
}

/// `sum over ordered p-tuples of block[i_1..i_p] * s_{i_1} ... s_{i_p}`.
fn tensor_contract(block: &[f64], spins: &[f64], p: u32) -> f64 {
    if p == 1 {
        return block.iter().zip(spins).map(|(a, b)| a * b).sum();
    }
    let n = spins.len();
    let stride = n.pow(p - 1);
    spins
        .iter()
        .enumerate()
        .map(|(i, s)| s * tensor_contract(&block[i * stride..(i + 1) * stride], spins, p - 1))
        .sum()
}
