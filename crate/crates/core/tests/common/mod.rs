//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spanforge::resistance::Graph;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

/// One edge list per isomorphism class of connected graphs on `n` vertices,
/// found by adding edges to canonical forms (minimum bitmask over all
/// relabelings).
pub fn connected_graph_classes(n: usize) -> Vec<Vec<(usize, usize)>> {
    let ps = pairs(n);
    let index = |u: usize, v: usize| ps.iter().position(|&e| e == (u.min(v), u.max(v))).unwrap();
    let tables: Vec<Vec<usize>> = permutations(n)
        .iter()
        .map(|perm| ps.iter().map(|&(u, v)| index(perm[u], perm[v])).collect())
        .collect();
    let canonical = |mask: u64| -> u64 {
        tables
            .iter()
            .map(|t| {
                let mut m = 0u64;
                let mut bits = mask;
                while bits != 0 {
                    let e = bits.trailing_zeros() as usize;
                    m |= 1 << t[e];
                    bits &= bits - 1;
                }
                m
            })
            .min()
            .unwrap()
    };
    let mut all = BTreeSet::from([0u64]);
    let mut level = BTreeSet::from([0u64]);
    for _ in 0..ps.len() {
        let mut next = BTreeSet::new();
        for &mask in &level {
            for e in 0..ps.len() {
                if mask >> e & 1 == 0 {
                    next.insert(canonical(mask | 1 << e));
                }
            }
        }
        all.extend(next.iter().copied());
        level = next;
    }
    all.into_iter()
        .map(|mask| {
            ps.iter()
                .enumerate()
                .filter(|(e, _)| mask >> e & 1 == 1)
                .map(|(_, &p)| p)
                .collect::<Vec<_>>()
        })
        .filter(|edges| connected(n, edges))
        .collect()
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &(a, b) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

pub fn random_connected(rng: &mut impl Rng, n: usize) -> Graph {
    loop {
        let p = rng.random_range(0.3..0.9);
        let g = Graph::random(n, 0, n - 1, p, rng).unwrap();
        if connected(n, &g.edges().collect::<Vec<_>>()) {
            return g;
        }
    }
}

/// Minimum energy of a unit s→t flow: a particular flow along a spanning
/// tree, minus its projection onto the cycle space.
pub fn flow_resistance(g: &Graph) -> f64 {
    let edges: Vec<_> = g.edges().collect();
    let n = g.n();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([g.s()]);
    seen[g.s()] = true;
    let mut tree = vec![false; edges.len()];
    while let Some(u) = queue.pop_front() {
        for (k, &(a, b)) in edges.iter().enumerate() {
            for (x, y) in [(a, b), (b, a)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    parent[y] = Some((u, k));
                    tree[k] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    if !seen[g.t()] {
        return f64::INFINITY;
    }
    let orient = |k: usize, from: usize| if edges[k].0 == from { 1.0 } else { -1.0 };
    let tree_path = |mut v: usize, flow: &mut DVector<f64>, sign: f64| {
        while let Some((u, k)) = parent[v] {
            flow[k] += sign * orient(k, u);
            v = u;
        }
    };
    let mut base = DVector::zeros(edges.len());
    tree_path(g.t(), &mut base, 1.0);
    let cycles: Vec<DVector<f64>> = (0..edges.len())
        .filter(|&k| !tree[k])
        .map(|k| {
            let (a, b) = edges[k];
            let mut c = DVector::zeros(edges.len());
            c[k] = 1.0;
            tree_path(a, &mut c, 1.0);
            tree_path(b, &mut c, -1.0);
            c
        })
        .collect();
    if cycles.is_empty() {
        return base.norm_squared();
    }
    let c = DMatrix::from_columns(&cycles);
    let gram = c.transpose() * &c;
    let coeff = gram.lu().solve(&(c.transpose() * &base)).unwrap();
    (base - c * coeff).norm_squared()
}

/// `|1/M Σ_k e^{ik(φ − 2πy/M)}|²`, summed term by term.
pub fn dft_probability(m: u64, phi: f64, y: u64) -> f64 {
    let d = phi - 2.0 * PI * y as f64 / m as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..m {
        re += (k as f64 * d).cos();
        im += (k as f64 * d).sin();
    }
    (re * re + im * im) / (m * m) as f64
}

/// Amplitude estimation outcome distribution from the two Grover
/// eigenphases `±2 arcsin √p`, each with weight ½.
pub fn amplitude_oracle(p: f64, m: u64) -> Vec<f64> {
    let t = 2.0 * p.sqrt().asin();
    (0..m)
        .map(|y| 0.5 * (dft_probability(m, t, y) + dft_probability(m, -t, y)))
        .collect()
}
