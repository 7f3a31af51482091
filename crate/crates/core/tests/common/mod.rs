#![allow(dead_code)]

use bethe_core::graph::{build_model, GraphFamily, Topology};
use bethe_core::rng::SeededRng;
use bethe_core::{BethePoint, Model, PairTable};

/// Random model on `n` nodes: each pair joined with probability `p`,
/// `J ∈ (-j, j)`, `θ ∈ (-1, 1)`.
pub fn random_model(rng: &mut SeededRng, n: usize, p: f64, j: f64, beta: f64) -> Model {
    let family = GraphFamily {
        topology: Topology::ErdosRenyi { n, p },
        coupling_range: (-j, j),
        field_range: (-1.0, 1.0),
        seed: rng.next_u64(),
    };
    build_model(&family, beta).unwrap()
}

pub fn random_point(rng: &mut SeededRng, n: usize, lo: f64, hi: f64) -> BethePoint {
    BethePoint::new((0..n).map(|_| rng.uniform(lo, hi)).collect()).unwrap()
}

pub fn complete(n: usize, j: f64, theta: f64, beta: f64) -> Model {
    let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b, j)));
    Model::new(n, edges, vec![theta; n], beta).unwrap()
}

/// Straight enumeration over all `2^N` states, written independently of the
/// library's Gray-code walk.
pub struct Naive {
    pub log_z: f64,
    pub singleton: Vec<f64>,
    pub pairwise: Vec<PairTable>,
}

pub fn naive_exact(model: &Model) -> Naive {
    let n = model.node_count();
    let edges: Vec<(usize, usize, f64)> = model.edge_triples().collect();
    let theta = model.fields();
    let beta = model.beta();
    let spin = |s: usize, i: usize| if s >> i & 1 == 1 { 1.0 } else { -1.0 };
    let neg_energy = |s: usize| {
        let pair: f64 = edges
            .iter()
            .map(|&(i, j, c)| c * spin(s, i) * spin(s, j))
            .sum();
        let field: f64 = (0..n).map(|i| theta[i] * spin(s, i)).sum();
        pair + field
    };
    let states = 1usize << n;
    let shift = (0..states)
        .map(neg_energy)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut single = vec![0.0; n];
    let mut pair = vec![[0.0; 4]; edges.len()];
    for s in 0..states {
        let w = (beta * (neg_energy(s) - shift)).exp();
        z += w;
        for (i, acc) in single.iter_mut().enumerate() {
            if s >> i & 1 == 1 {
                *acc += w;
            }
        }
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            let slot = match (s >> i & 1, s >> j & 1) {
                (1, 1) => 0,
                (1, 0) => 1,
                (0, 1) => 2,
                _ => 3,
            };
            pair[k][slot] += w;
        }
    }
    Naive {
        log_z: z.ln() + beta * shift,
        singleton: single.iter().map(|w| w / z).collect(),
        pairwise: pair
            .iter()
            .map(|t| PairTable {
                pp: t[0] / z,
                pm: t[1] / z,
                mp: t[2] / z,
                mm: t[3] / z,
            })
            .collect(),
    }
}

/// `max |a − b| / max(‖a‖∞, 1)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().map(|x| x.abs()).fold(1.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}
