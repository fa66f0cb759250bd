//! Chordal graphs: elimination orderings, clique complexes, and the exact
//! preimage of a graphical PSD matrix under `φ` of a clique complex.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::complex::{Face, SimplicialComplex, VertexSet};
use crate::error::{Error, Result};
use crate::factor::FactorParams;
use crate::graph::Graph;
use crate::linalg::{cholesky_semidefinite, is_psd};
use crate::matrix::SymmetricMatrix;

/// Abort threshold for maximal clique enumeration.
pub const MAX_CLIQUES: usize = 1_000_000;

/// Non-edge entries above this multiple of the matrix scale are pattern
/// violations.
pub const PATTERN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrdering {
    pub order: Vec<usize>,
    pub is_perfect: bool,
}

impl EliminationOrdering {
    /// Checks that every vertex's later neighbors form a clique.
    pub fn new(g: &Graph, order: Vec<usize>) -> Self {
        let is_perfect = is_perfect_elimination(g, &order);
        EliminationOrdering { order, is_perfect }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Chordality {
    Chordal(EliminationOrdering),
    /// Vertices of an induced cycle of length at least four, in cycle order.
    ChordlessCycle(Vec<usize>),
}

impl Chordality {
    pub fn is_chordal(&self) -> bool {
        matches!(self, Chordality::Chordal(_))
    }
}

/// Maximum cardinality search, ties to the smallest index. The reverse of
/// the visiting order is a perfect elimination ordering iff `g` is chordal.
pub fn maximum_cardinality_search(g: &Graph) -> Vec<usize> {
    let m = g.vertex_count();
    let mut weight = vec![0usize; m];
    let mut numbered = VertexSet::EMPTY;
    let mut visit = Vec::with_capacity(m);
    for _ in 0..m {
        let v = (0..m)
            .filter(|&v| !numbered.contains(v))
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unnumbered vertex remains");
        numbered.insert(v);
        visit.push(v);
        for w in g.neighbors(v).iter() {
            weight[w] += 1;
        }
    }
    visit.reverse();
    visit
}

pub fn is_perfect_elimination(g: &Graph, order: &[usize]) -> bool {
    let mut later = VertexSet::full(g.vertex_count());
    for &v in order {
        later.remove(v);
        if !g.is_clique(g.neighbors(v).intersection(later)) {
            return false;
        }
    }
    true
}

pub fn is_chordal(g: &Graph) -> Chordality {
    let order = maximum_cardinality_search(g);
    let ordering = EliminationOrdering::new(g, order);
    if ordering.is_perfect {
        return Chordality::Chordal(ordering);
    }
    Chordality::ChordlessCycle(chordless_cycle(g).expect("non-chordal graph has a chordless cycle"))
}

/// A shortest induced cycle through some vertex `v` and two non-adjacent
/// neighbors `x`, `w`, found by BFS from `x` to `w` avoiding the rest of
/// the closed neighborhood of `v`.
fn chordless_cycle(g: &Graph) -> Option<Vec<usize>> {
    let m = g.vertex_count();
    let all = VertexSet::full(m);
    for v in 0..m {
        let nbrs = g.neighbors(v).to_vec();
        for (a, &x) in nbrs.iter().enumerate() {
            for &w in &nbrs[a + 1..] {
                if g.has_edge(x, w) {
                    continue;
                }
                let mut closed = g.neighbors(v);
                closed.insert(v);
                let allowed = all.difference(closed).union(VertexSet::from_vertices([x, w]));
                if let Some(path) = shortest_path(g, x, w, allowed) {
                    let mut cycle = vec![v];
                    cycle.extend(path);
                    return Some(cycle);
                }
            }
        }
    }
    None
}

fn shortest_path(g: &Graph, from: usize, to: usize, allowed: VertexSet) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; g.vertex_count()];
    let mut seen = VertexSet::singleton(from);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for w in g.neighbors(u).intersection(allowed).difference(seen).iter() {
            seen.insert(w);
            prev[w] = u;
            queue.push_back(w);
        }
    }
    None
}

/// Maximal cliques by Bron–Kerbosch with pivoting, sorted in face order.
pub fn maximal_cliques(g: &Graph) -> Result<Vec<VertexSet>> {
    let mut out = Vec::new();
    bron_kerbosch(g, VertexSet::EMPTY, VertexSet::full(g.vertex_count()), VertexSet::EMPTY, &mut out)?;
    out.sort();
    Ok(out)
}

fn bron_kerbosch(
    g: &Graph,
    r: VertexSet,
    mut p: VertexSet,
    mut x: VertexSet,
    out: &mut Vec<VertexSet>,
) -> Result<()> {
    if p.is_empty() {
        if x.is_empty() {
            if out.len() >= MAX_CLIQUES {
                return Err(Error::TooManyCliques { limit: MAX_CLIQUES });
            }
            out.push(r);
        }
        return Ok(());
    }
    let pivot = p
        .union(x)
        .iter()
        .max_by_key(|&u| (g.neighbors(u).intersection(p).len(), std::cmp::Reverse(u)))
        .expect("p is non-empty");
    for v in p.difference(g.neighbors(pivot)).iter() {
        let nv = g.neighbors(v);
        let mut r2 = r;
        r2.insert(v);
        bron_kerbosch(g, r2, p.intersection(nv), x.intersection(nv), out)?;
        p.remove(v);
        x.insert(v);
    }
    Ok(())
}

/// The complex of all cliques of `g`.
pub fn clique_complex(g: &Graph) -> Result<SimplicialComplex> {
    SimplicialComplex::from_sets(g.vertex_count(), maximal_cliques(g)?)
}

/// Whether `φ_Δ` maps onto the whole graphical cone of its underlying graph:
/// the graph must be chordal and `Δ` its clique complex.
pub fn is_surjective(delta: &SimplicialComplex) -> bool {
    let g = delta.underlying_graph();
    if !is_chordal(&g).is_chordal() {
        return false;
    }
    // a chordal graph has at most m maximal cliques
    let cliques = maximal_cliques(&g).expect("chordal graphs have few cliques");
    cliques.len() == delta.facets().len() && cliques.iter().all(|c| delta.contains_face(*c))
}

/// Parameters on the clique complex of a chordal `g` with `φ(γ) = Σ`.
///
/// `Σ` is permuted into a perfect elimination ordering, so its Cholesky
/// factor has no fill-in and the support of every column is a clique.
pub fn chordal_fiber(g: &Graph, sigma: &SymmetricMatrix, tol: f64) -> Result<(Arc<SimplicialComplex>, FactorParams)> {
    let m = g.vertex_count();
    if sigma.dim() != m {
        return Err(Error::InvalidInput(format!(
            "matrix has dimension {}, graph has {m} vertices",
            sigma.dim()
        )));
    }
    let order = match is_chordal(g) {
        Chordality::Chordal(o) => o.order,
        Chordality::ChordlessCycle(cycle) => return Err(Error::NotChordal { cycle }),
    };
    sigma.check_finite()?;
    if let Some((i, j, value)) = sigma.pattern_violation(g, PATTERN_TOL) {
        return Err(Error::PatternViolation { i, j, value });
    }
    let report = is_psd(sigma, tol)?;
    if !report.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let complex = Arc::new(clique_complex(g)?);
    let permuted = sigma.project_pattern(g).permuted(&order);
    let l = cholesky_semidefinite(permuted.as_dmatrix(), tol)?;

    let mut params = FactorParams::zeros(complex.clone());
    for k in 0..m {
        let support: Face = VertexSet::from_vertices((k..m).filter(|&r| l[(r, k)] != 0.0).map(|r| order[r]));
        if support.is_empty() {
            continue;
        }
        if !g.is_clique(support) {
            return Err(Error::Inconsistent(format!(
                "Cholesky column {k} has non-clique support {support:?}"
            )));
        }
        for r in k..m {
            if l[(r, k)] != 0.0 {
                params.set_gamma(support, order[r], l[(r, k)])?;
            }
        }
    }
    Ok((complex, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::phi;
    use crate::random::{random_chordal_graph, random_params};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fs(v: &[usize]) -> Face {
        VertexSet::from_vertices(v.iter().copied())
    }

    #[test]
    fn small_graphs() {
        assert!(is_chordal(&Graph::path(3).unwrap()).is_chordal());
        assert!(is_chordal(&Graph::complete(3).unwrap()).is_chordal());
        match is_chordal(&Graph::cycle(4).unwrap()) {
            Chordality::ChordlessCycle(c) => {
                let mut s = c.clone();
                s.sort();
                assert_eq!(s, vec![0, 1, 2, 3]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn witness_is_an_induced_cycle() {
        // 6-cycle plus a chord 0-3 leaves two induced 4-cycles
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap();
        let Chordality::ChordlessCycle(c) = is_chordal(&g) else {
            panic!("expected a cycle");
        };
        assert!(c.len() >= 4);
        let n = c.len();
        for a in 0..n {
            for b in a + 1..n {
                let consecutive = b == a + 1 || (a == 0 && b == n - 1);
                assert_eq!(g.has_edge(c[a], c[b]), consecutive, "{c:?}");
            }
        }
    }

    #[test]
    fn mcs_breaks_ties_by_index() {
        let g = Graph::empty(4).unwrap();
        assert_eq!(maximum_cardinality_search(&g), vec![3, 2, 1, 0]);
    }

    #[test]
    fn clique_complex_examples() {
        let k3 = clique_complex(&Graph::complete(3).unwrap()).unwrap();
        assert_eq!(k3.facets(), &[fs(&[0, 1, 2])]);
        let c4 = clique_complex(&Graph::cycle(4).unwrap()).unwrap();
        assert_eq!(c4.facets(), &[fs(&[0, 1]), fs(&[0, 3]), fs(&[1, 2]), fs(&[2, 3])]);
        let p3 = clique_complex(&Graph::path(3).unwrap()).unwrap();
        assert_eq!(p3.facets(), &[fs(&[0, 1]), fs(&[1, 2])]);
    }

    #[test]
    fn surjectivity_examples() {
        let k3 = Graph::complete(3).unwrap();
        assert!(is_surjective(&clique_complex(&k3).unwrap()));
        assert!(!is_surjective(&SimplicialComplex::edge_complex(&k3).unwrap()));
        let tree = Graph::from_edges(5, &[(0, 1), (0, 2), (2, 3), (2, 4)]).unwrap();
        assert!(is_surjective(&SimplicialComplex::edge_complex(&tree).unwrap()));
        assert!(!is_surjective(&SimplicialComplex::edge_complex(&Graph::cycle(4).unwrap()).unwrap()));
    }

    #[test]
    fn identity_fiber_uses_singletons() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let (_, p) = chordal_fiber(&g, &SymmetricMatrix::identity(4), 1e-9).unwrap();
        for (face, v, gamma) in p.iter() {
            let want = if face.len() == 1 { 1.0 } else { 0.0 };
            assert_eq!(gamma, want, "{face:?} {v}");
        }
    }

    #[test]
    fn three_chain_round_trip() {
        let g = Graph::path(3).unwrap();
        let sigma = SymmetricMatrix::from_rows(&[vec![2.0, 0.7, 0.0], vec![0.7, 1.5, -0.4], vec![0.0, -0.4, 1.0]]).unwrap();
        let (_, p) = chordal_fiber(&g, &sigma, 1e-9).unwrap();
        assert!(phi(&p).max_rel_diff(&sigma) < 1e-12);
    }

    #[test]
    fn random_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 1..=10 {
            for _ in 0..20 {
                let g = random_chordal_graph(m, &mut rng);
                let c = Arc::new(clique_complex(&g).unwrap());
                let p0 = random_params(&c, &mut rng);
                let sigma = phi(&p0);
                let (_, p) = chordal_fiber(&g, &sigma, 1e-9).unwrap();
                assert!(phi(&p).max_rel_diff(&sigma) < 1e-9);
            }
        }
    }

    #[test]
    fn fiber_errors() {
        let c4 = Graph::cycle(4).unwrap();
        assert!(matches!(
            chordal_fiber(&c4, &SymmetricMatrix::identity(4), 1e-9),
            Err(Error::NotChordal { .. })
        ));
        let p3 = Graph::path(3).unwrap();
        let mut s = SymmetricMatrix::identity(3);
        s.set(0, 2, 0.5);
        assert!(matches!(chordal_fiber(&p3, &s, 1e-9), Err(Error::PatternViolation { i: 0, j: 2, .. })));
        let s = SymmetricMatrix::from_diagonal(&[1.0, -1.0, 1.0]);
        assert!(matches!(chordal_fiber(&p3, &s, 1e-9), Err(Error::NotPsd { .. })));
    }
}
