//! Exact partition function and marginals by enumerating all `2^N` states.
//!
//! States are visited in Gray-code order so that consecutive states differ in
//! one spin and the energy is updated in `O(d)`. The low `k ≤ 12` spins are
//! enumerated inside blocks during which the high spins stay fixed; the
//! energy is recomputed from scratch at every block start, which bounds the
//! drift of the incremental updates. A first pass finds the ground-state
//! energy so that every weight `e^{−β(E − E_min)}` lies in `(0, 1]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::bethe::PairTable;
use crate::error::{Error, Result};
use crate::graph::Model;
use crate::math;

/// Default resource guard on the number of spins.
pub const DEFAULT_MAX_NODES: usize = 25;

const LOW_BITS: usize = 12;

/// Ground truth for one model at its `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub beta: f64,
    pub log_z: f64,
    /// `P(x_i = +1)`.
    pub singleton: Vec<f64>,
    /// One table per edge, in [`Model::edges`] order.
    pub pairwise: Vec<PairTable>,
}

impl ExactSolution {
    /// Helmholtz free energy `−(1/β) log Z`.
    pub fn free_energy(&self) -> f64 {
        -self.log_z / self.beta
    }
}

pub fn brute_force_solve(model: &Model) -> Result<ExactSolution> {
    brute_force_solve_with_limit(model, DEFAULT_MAX_NODES)
}

/// `−(1/β) log Z`.
pub fn gibbs_free_energy_at_minimum(model: &Model) -> Result<f64> {
    Ok(brute_force_solve(model)?.free_energy())
}

/// Lowest energy over all states.
pub fn ground_energy(model: &Model, max_nodes: usize) -> Result<f64> {
    check_size(model, max_nodes)?;
    let mut e_min = f64::INFINITY;
    walk(model, |_, energies| {
        e_min = energies.iter().copied().fold(e_min, f64::min);
    });
    Ok(e_min)
}

pub fn brute_force_solve_with_limit(model: &Model, max_nodes: usize) -> Result<ExactSolution> {
    let e_min = ground_energy(model, max_nodes)?;
    let n = model.node_count();
    let k = n.min(LOW_BITS);
    let width = 1usize << k;
    let beta = model.beta();

    // High nodes touched by an edge into the low block.
    let mut cross_high: Vec<usize> = model
        .edges()
        .iter()
        .filter(|e| e.i < k && e.j >= k)
        .map(|e| e.j)
        .collect();
    cross_high.sort_unstable();
    cross_high.dedup();

    let mut wa = vec![0.0; width];
    let mut wcross = vec![vec![0.0; width]; cross_high.len()];
    let mut block_sums: Vec<(u64, f64)> = Vec::with_capacity(1 << (n - k));
    let mut w = vec![0.0; width];
    walk(model, |hi, energies| {
        let mut total = 0.0;
        for (wv, &e) in w.iter_mut().zip(energies) {
            *wv = math::exp(-beta * (e - e_min));
            total += *wv;
        }
        for (acc, &wv) in wa.iter_mut().zip(&w) {
            *acc += wv;
        }
        for (slot, &node) in cross_high.iter().enumerate() {
            if hi >> (node - k) & 1 == 1 {
                for (acc, &wv) in wcross[slot].iter_mut().zip(&w) {
                    *acc += wv;
                }
            }
        }
        block_sums.push((hi, total));
    });

    let z: f64 = block_sums.iter().map(|&(_, s)| s).sum();
    let low_sum = |mask: usize, acc: &[f64]| -> f64 {
        acc.iter()
            .enumerate()
            .filter(|&(a, _)| a & mask == mask)
            .map(|(_, v)| v)
            .sum()
    };
    let high_sum = |mask: u64| -> f64 {
        block_sums
            .iter()
            .filter(|&&(b, _)| b & mask == mask)
            .map(|&(_, s)| s)
            .sum()
    };
    let singleton: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i < k {
                low_sum(1 << i, &wa)
            } else {
                high_sum(1 << (i - k))
            };
            s / z
        })
        .collect();
    let pairwise = model
        .edges()
        .iter()
        .map(|e| {
            let s = match (e.i < k, e.j < k) {
                (true, true) => low_sum((1 << e.i) | (1 << e.j), &wa),
                (false, false) => high_sum((1 << (e.i - k)) | (1 << (e.j - k))),
                _ => {
                    let slot = cross_high
                        .binary_search(&e.j)
                        .expect("cross node registered");
                    low_sum(1 << e.i, &wcross[slot])
                }
            };
            let pp = s / z;
            let (pi, pj) = (singleton[e.i], singleton[e.j]);
            PairTable {
                pp,
                pm: pi - pp,
                mp: pj - pp,
                mm: 1.0 - pi - pj + pp,
            }
        })
        .collect();
    Ok(ExactSolution {
        beta,
        log_z: -beta * e_min + math::ln(z),
        singleton,
        pairwise,
    })
}

fn check_size(model: &Model, max_nodes: usize) -> Result<()> {
    let n = model.node_count();
    if n > max_nodes || n > 40 {
        return Err(Error::TooLarge {
            nodes: n,
            limit: max_nodes.min(40),
        });
    }
    Ok(())
}

/// Calls `on_block(high_bits, energies)` once per block, where
/// `energies[a]` is the energy of the state whose low spins are the bits of
/// `a` (bit set ⇔ spin `+1`).
fn walk(model: &Model, mut on_block: impl FnMut(u64, &[f64])) {
    let n = model.node_count();
    let k = n.min(LOW_BITS);
    let width = 1u64 << k;
    let mask = width - 1;
    let mut energies = vec![0.0; width as usize];
    let mut spins = vec![-1.0f64; n];
    let field = |spins: &[f64], v: usize| -> f64 {
        model
            .neighbors(v)
            .iter()
            .map(|nb| model.couplings()[nb.edge] * spins[nb.node])
            .sum::<f64>()
            + model.fields()[v]
    };
    for block in 0..1u64 << (n - k) {
        let start = block << k;
        let mut g = start ^ (start >> 1);
        for (v, s) in spins.iter_mut().enumerate() {
            *s = if g >> v & 1 == 1 { 1.0 } else { -1.0 };
        }
        let mut e = energy(model, &spins);
        energies[(g & mask) as usize] = e;
        for i in start + 1..start + width {
            let v = i.trailing_zeros() as usize;
            let s = spins[v];
            e += 2.0 * s * field(&spins, v);
            spins[v] = -s;
            g ^= 1 << v;
            energies[(g & mask) as usize] = e;
        }
        on_block(g >> k, &energies);
    }
}

fn energy(model: &Model, spins: &[f64]) -> f64 {
    let pair: f64 = model
        .edge_triples()
        .map(|(i, j, c)| c * spins[i] * spins[j])
        .sum();
    let single: f64 = model.fields().iter().zip(spins).map(|(t, s)| t * s).sum();
    -pair - single
}
