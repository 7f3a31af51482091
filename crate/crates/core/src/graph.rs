//! Binary pairwise models and the random graph families used in the sweeps.
//!
//! Energy convention: `E(x) = -Σ_(i,j) J_ij x_i x_j - Σ_i θ_i x_i` with spins
//! `x_i ∈ {+1, -1}` and Gibbs weights `e^{-βE(x)}`. Positive couplings are
//! ferromagnetic.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::SeededRng;

/// An undirected edge stored canonically with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidModel(format!("self-loop on node {a}")));
        }
        Ok(Self {
            i: a.min(b),
            j: a.max(b),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub node: usize,
    pub edge: usize,
}

/// Graph, couplings, fields and inverse temperature. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    node_count: usize,
    edges: Vec<Edge>,
    couplings: Vec<f64>,
    fields: Vec<f64>,
    beta: f64,
    adjacency: Vec<Vec<Neighbor>>,
}

impl Model {
    /// Builds a model from `(i, j, J_ij)` triples. Edges are canonicalized and
    /// sorted, so the edge index order is independent of the input order.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        fields: Vec<f64>,
        beta: f64,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidModel(
                "a model needs at least one node".into(),
            ));
        }
        if fields.len() != node_count {
            return Err(Error::DimensionMismatch {
                expected: node_count,
                got: fields.len(),
            });
        }
        if let Some(t) = fields.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite field {t}")));
        }
        check_beta(beta)?;

        let mut list: Vec<(Edge, f64)> = Vec::new();
        for (a, b, j) in edges {
            for n in [a, b] {
                if n >= node_count {
                    return Err(Error::NodeOutOfRange {
                        node: n,
                        nodes: node_count,
                    });
                }
            }
            if !j.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "non-finite coupling on ({a}, {b})"
                )));
            }
            list.push((Edge::new(a, b)?, j));
        }
        list.sort_by_key(|x| x.0);
        if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidModel(format!(
                "duplicate edge ({}, {})",
                w[0].0.i, w[0].0.j
            )));
        }

        let (edges, couplings): (Vec<Edge>, Vec<f64>) = list.into_iter().unzip();
        let mut adjacency = vec![Vec::new(); node_count];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.i].push(Neighbor { node: e.j, edge: k });
            adjacency[e.j].push(Neighbor { node: e.i, edge: k });
        }
        Ok(Self {
            node_count,
            edges,
            couplings,
            fields,
            beta,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `|N(i)|`.
    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check_node(i)?;
        Ok(self.adjacency[i].len())
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.adjacency[i]
    }

    /// Index of edge `(a, b)` in [`Model::edges`], in either orientation.
    pub fn edge_index(&self, a: usize, b: usize) -> Result<usize> {
        self.check_node(a)?;
        self.check_node(b)?;
        let e = Edge::new(a, b).map_err(|_| Error::NotAnEdge { i: a, j: b })?;
        self.edges
            .binary_search(&e)
            .map_err(|_| Error::NotAnEdge { i: a, j: b })
    }

    /// `α_e = e^{4βJ_e} - 1`.
    pub fn alpha(&self, edge: usize) -> f64 {
        math::expm1(4.0 * self.beta * self.couplings[edge])
    }

    /// `e^{4β|J_e|} - 1`, the sign-free coupling strength used by the
    /// diagonal-dominance certificate.
    pub fn alpha_abs(&self, edge: usize) -> f64 {
        math::expm1(4.0 * self.beta * math::abs(self.couplings[edge]))
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            beta,
            ..self.clone()
        })
    }

    pub fn with_fields(&self, fields: Vec<f64>) -> Result<Self> {
        Self::new(self.node_count, self.edge_triples(), fields, self.beta)
    }

    pub fn with_couplings(&self, couplings: Vec<f64>) -> Result<Self> {
        if couplings.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                got: couplings.len(),
            });
        }
        Self::new(
            self.node_count,
            self.edges.iter().zip(couplings).map(|(e, j)| (e.i, e.j, j)),
            self.fields.clone(),
            self.beta,
        )
    }

    pub fn edge_triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges
            .iter()
            .zip(&self.couplings)
            .map(|(e, &j)| (e.i, e.j, j))
    }

    /// `E(x)` for spins given as `±1`.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        let pair: f64 = self
            .edge_triples()
            .map(|(i, j, c)| c * f64::from(spins[i]) * f64::from(spins[j]))
            .sum();
        let single: f64 = self
            .fields
            .iter()
            .zip(spins)
            .map(|(t, &s)| t * f64::from(s))
            .sum();
        -pair - single
    }

    /// True when every edge is ferromagnetic (`J > 0`).
    pub fn is_ferromagnetic(&self) -> bool {
        self.couplings.iter().all(|&j| j > 0.0)
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.node_count {
            return Err(Error::NodeOutOfRange {
                node: i,
                nodes: self.node_count,
            });
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidModel(format!(
            "inverse temperature must be finite and > 0, got {beta}"
        )));
    }
    Ok(())
}

/// Graph topologies of the experiment ensembles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Topology {
    /// `rows × cols` lattice with 4-neighbour connectivity.
    Grid { rows: usize, cols: usize },
    /// All `n(n-1)/2` edges.
    Complete { n: usize },
    /// Each pair included independently with probability `p`.
    ErdosRenyi { n: usize, p: f64 },
}

impl Topology {
    pub fn node_count(&self) -> usize {
        match *self {
            Topology::Grid { rows, cols } => rows * cols,
            Topology::Complete { n } | Topology::ErdosRenyi { n, .. } => n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.node_count() < 2 {
            return Err(Error::InvalidFamily(format!(
                "{self:?} has fewer than two nodes"
            )));
        }
        if let Topology::ErdosRenyi { p, .. } = *self {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidFamily(format!(
                    "edge probability {p} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Canonical edge list. Only Erdős–Rényi consumes random numbers: one
    /// uniform draw per pair `(i, j)`, `i < j`, in lexicographic order.
    pub fn edges(&self, rng: &mut SeededRng) -> Vec<Edge> {
        let mut edges = Vec::new();
        match *self {
            Topology::Grid { rows, cols } => {
                for r in 0..rows {
                    for c in 0..cols {
                        let v = r * cols + c;
                        if c + 1 < cols {
                            edges.push(Edge { i: v, j: v + 1 });
                        }
                        if r + 1 < rows {
                            edges.push(Edge { i: v, j: v + cols });
                        }
                    }
                }
                edges.sort();
            }
            Topology::Complete { n } => {
                for i in 0..n {
                    for j in i + 1..n {
                        edges.push(Edge { i, j });
                    }
                }
            }
            Topology::ErdosRenyi { n, p } => {
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.unit() < p {
                            edges.push(Edge { i, j });
                        }
                    }
                }
            }
        }
        edges
    }
}

/// A random model generator: topology plus coupling/field sampling ranges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphFamily {
    pub topology: Topology,
    pub coupling_range: (f64, f64),
    pub field_range: (f64, f64),
    pub seed: u64,
}

impl GraphFamily {
    /// Couplings in `(0, 1)`, fields in `(-1/8, 1/8)`.
    pub fn ferromagnetic(topology: Topology, seed: u64) -> Self {
        Self {
            topology,
            coupling_range: (0.0, 1.0),
            field_range: (-0.125, 0.125),
            seed,
        }
    }

    /// Couplings in `(-1, 1)`, fields in `(-1/8, 1/8)`.
    pub fn spin_glass(topology: Topology, seed: u64) -> Self {
        Self {
            coupling_range: (-1.0, 1.0),
            ..Self::ferromagnetic(topology, seed)
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        for (name, (lo, hi)) in [
            ("coupling", self.coupling_range),
            ("field", self.field_range),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::InvalidFamily(format!(
                    "{name} range ({lo}, {hi}) is empty or not finite"
                )));
            }
        }
        Ok(())
    }
}

/// Samples one model from `family`. A single generator seeded with
/// `family.seed` draws, in order: the topology, one coupling per edge (edge
/// order), one field per node.
pub fn build_model(family: &GraphFamily, beta: f64) -> Result<Model> {
    family.validate()?;
    let mut rng = SeededRng::new(family.seed);
    let n = family.topology.node_count();
    let edges = family.topology.edges(&mut rng);
    let (jlo, jhi) = family.coupling_range;
    let couplings: Vec<f64> = edges.iter().map(|_| rng.uniform(jlo, jhi)).collect();
    let (tlo, thi) = family.field_range;
    let fields: Vec<f64> = (0..n).map(|_| rng.uniform(tlo, thi)).collect();
    Model::new(
        n,
        edges.iter().zip(couplings).map(|(e, j)| (e.i, e.j, j)),
        fields,
        beta,
    )
}

/// Random recursive tree on `n` nodes (node `k` attaches to a uniform earlier
/// node) with uniformly sampled couplings and fields.
pub fn random_tree(
    n: usize,
    coupling_range: (f64, f64),
    field_range: (f64, f64),
    beta: f64,
    seed: u64,
) -> Result<Model> {
    if n == 0 {
        return Err(Error::InvalidFamily(
            "a tree needs at least one node".into(),
        ));
    }
    let mut rng = SeededRng::new(seed);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let parent = (rng.unit() * k as f64) as usize;
        edges.push((
            parent.min(k - 1),
            k,
            rng.uniform(coupling_range.0, coupling_range.1),
        ));
    }
    let fields = (0..n)
        .map(|_| rng.uniform(field_range.0, field_range.1))
        .collect();
    Model::new(n, edges, fields, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize) -> Model {
        build_model(
            &GraphFamily::ferromagnetic(Topology::Grid { rows, cols }, 1),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn complete_graph_degrees() {
        let m = build_model(
            &GraphFamily::ferromagnetic(Topology::Complete { n: 4 }, 3),
            1.0,
        )
        .unwrap();
        assert_eq!(m.edge_count(), 6);
        for i in 0..4 {
            assert_eq!(m.degree(i).unwrap(), 3);
        }
    }

    #[test]
    fn grid_corner_and_interior_degrees() {
        let m = grid(5, 5);
        assert_eq!(m.edge_count(), 40);
        assert_eq!(m.degree(0).unwrap(), 2);
        assert_eq!(m.degree(24).unwrap(), 2);
        assert_eq!(m.degree(12).unwrap(), 4);
        assert_eq!(m.degree(2).unwrap(), 3);
    }

    #[test]
    fn degree_out_of_range_is_rejected() {
        let m = grid(2, 2);
        assert_eq!(
            m.degree(4),
            Err(Error::NodeOutOfRange { node: 4, nodes: 4 })
        );
    }

    #[test]
    fn single_edge_model() {
        let m = Model::new(2, [(1, 0, 0.5)], vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(m.edges(), &[Edge { i: 0, j: 1 }]);
        assert_eq!(m.couplings(), &[0.5]);
        let g = grid(1, 2);
        assert_eq!(g.edges(), m.edges());
    }

    #[test]
    fn rejects_malformed_models() {
        assert!(Model::new(2, [(0, 0, 1.0)], vec![0.0; 2], 1.0).is_err());
        assert!(Model::new(2, [(0, 1, 1.0), (1, 0, 2.0)], vec![0.0; 2], 1.0).is_err());
        assert!(Model::new(2, [(0, 2, 1.0)], vec![0.0; 2], 1.0).is_err());
        assert!(Model::new(2, [(0, 1, 1.0)], vec![0.0; 3], 1.0).is_err());
        assert!(Model::new(2, [(0, 1, 1.0)], vec![0.0; 2], 0.0).is_err());
        assert!(Model::new(2, [(0, 1, f64::NAN)], vec![0.0; 2], 1.0).is_err());
    }

    #[test]
    fn rejects_invalid_families() {
        let bad_p = GraphFamily::ferromagnetic(Topology::ErdosRenyi { n: 5, p: 1.5 }, 0);
        assert!(matches!(
            build_model(&bad_p, 1.0),
            Err(Error::InvalidFamily(_))
        ));
        let tiny = GraphFamily::ferromagnetic(Topology::Complete { n: 1 }, 0);
        assert!(matches!(
            build_model(&tiny, 1.0),
            Err(Error::InvalidFamily(_))
        ));
        let mut inverted = GraphFamily::spin_glass(Topology::Complete { n: 3 }, 0);
        inverted.coupling_range = (1.0, -1.0);
        assert!(build_model(&inverted, 1.0).is_err());
    }

    #[test]
    fn erdos_renyi_is_reproducible() {
        let fam = GraphFamily::spin_glass(Topology::ErdosRenyi { n: 25, p: 0.2 }, 99);
        let a = build_model(&fam, 1.0).unwrap();
        let b = build_model(&fam, 1.0).unwrap();
        assert_eq!(a, b);
        let c = build_model(&fam.with_seed(100), 1.0).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn sampled_parameters_respect_ranges() {
        let fam = GraphFamily::ferromagnetic(Topology::Complete { n: 10 }, 5);
        let m = build_model(&fam, 1.0).unwrap();
        assert_eq!(m.edge_count(), 45);
        assert!(m.couplings().iter().all(|&j| (0.0..1.0).contains(&j)));
        assert!(m.fields().iter().all(|&t| (-0.125..0.125).contains(&t)));
    }

    #[test]
    fn energy_of_aligned_spins() {
        let m = Model::new(3, [(0, 1, 1.0), (1, 2, -0.5)], vec![0.25, 0.0, -1.0], 1.0).unwrap();
        // -(1 - 0.5) - (0.25 - 1.0)
        assert!((m.energy(&[1, 1, 1]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn random_tree_has_n_minus_one_edges() {
        let t = random_tree(12, (-1.0, 1.0), (-1.0, 1.0), 1.0, 4).unwrap();
        assert_eq!(t.edge_count(), 11);
        assert!(t.degrees().iter().all(|&d| d >= 1));
    }
}
