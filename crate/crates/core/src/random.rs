//! Random instance generators shared by the self-test and the test suites.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::complex::{SimplicialComplex, VertexSet};
use crate::cycle::{cycle_edge_complex, CycleMatrix};
use crate::factor::FactorParams;
use crate::graph::Graph;
use crate::matrix::SymmetricMatrix;
use crate::param::phi;

/// Parameters drawn uniformly from `[-1, 1]`.
pub fn random_params<R: Rng>(complex: &Arc<SimplicialComplex>, rng: &mut R) -> FactorParams {
    FactorParams::from_fn(complex.clone(), |_, _| rng.random_range(-1.0..=1.0))
}

/// A chordal graph grown by attaching each new vertex to a random subset of
/// a random existing clique, then relabelled by a random permutation.
pub fn random_chordal_graph<R: Rng>(m: usize, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    let mut cliques: Vec<VertexSet> = Vec::new();
    for v in 0..m {
        let mut attach = VertexSet::EMPTY;
        if !cliques.is_empty() && rng.random_bool(0.85) {
            let base = cliques[rng.random_range(0..cliques.len())];
            for u in base.iter() {
                if rng.random_bool(0.7) {
                    attach.insert(u);
                }
            }
        }
        for u in attach.iter() {
            edges.push((u, v));
        }
        attach.insert(v);
        cliques.push(attach);
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let edges: Vec<(usize, usize)> = edges.into_iter().map(|(a, b)| (perm[a], perm[b])).collect();
    Graph::from_edges(m, &edges).expect("valid edges")
}

/// A tree on `m` vertices with uniformly random parent choices.
pub fn random_tree<R: Rng>(m: usize, rng: &mut R) -> Graph {
    let edges: Vec<(usize, usize)> = (1..m).map(|v| (rng.random_range(0..v), v)).collect();
    Graph::from_edges(m, &edges).expect("valid edges")
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph<R: Rng>(m: usize, p: f64, rng: &mut R) -> Graph {
    let mut g = Graph::empty(m).expect("valid size");
    for i in 0..m {
        for j in i + 1..m {
            if rng.random_bool(p) {
                g.add_edge(i, j).expect("valid edge");
            }
        }
    }
    g
}

/// A complex with a few random generators of size up to `max_size`.
pub fn random_complex<R: Rng>(m: usize, max_size: usize, rng: &mut R) -> SimplicialComplex {
    let count = rng.random_range(1..=m.max(1));
    let sets = (0..count)
        .map(|_| {
            let size = rng.random_range(1..=max_size.min(m).max(1));
            let mut verts: Vec<usize> = (0..m).collect();
            verts.shuffle(rng);
            VertexSet::from_vertices(verts.into_iter().take(size))
        })
        .collect();
    SimplicialComplex::from_sets(m, sets).expect("valid generators")
}

/// `A Aᵀ` for an `m × k` standard normal `A`.
pub fn random_psd<R: Rng>(m: usize, k: usize, rng: &mut R) -> SymmetricMatrix {
    let a = DMatrix::<f64>::from_fn(m, k, |_, _| rng.sample(StandardNormal));
    let p = &a * a.transpose();
    SymmetricMatrix::from_lower_fn(m, |i, j| p[(i, j)])
}

/// A cycle matrix with diagonal in `[0.5, 2)` and cycle entries in
/// `[-1, 1)`; not necessarily PSD.
pub fn random_cycle_matrix<R: Rng>(m: usize, rng: &mut R) -> CycleMatrix {
    CycleMatrix::new(
        (0..m).map(|_| rng.random_range(0.5..2.0)).collect(),
        (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .expect("finite entries")
}

/// Edge parameters in `[-1, 1)` with zero singleton parameters, and their
/// image.
pub fn random_cycle_member<R: Rng>(m: usize, rng: &mut R) -> (FactorParams, CycleMatrix) {
    let c = cycle_edge_complex(m).expect("m >= 3");
    let p = FactorParams::from_fn(c, |f, _| if f.len() == 1 { 0.0 } else { rng.random_range(-1.0..1.0) });
    let s = CycleMatrix::from_symmetric(&phi(&p)).expect("edge complex pattern");
    (p, s)
}
