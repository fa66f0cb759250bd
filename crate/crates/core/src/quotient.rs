//! Quotients of graphs and complexes by a vertex set, and the explicit
//! parameters that place a Schur complement of `φ(γ)` in the image of the
//! quotient complex.

use std::sync::Arc;

use crate::complex::{relabel_map, Face, SimplicialComplex, SubComplex, VertexSet};
use crate::error::{Error, Result};
use crate::factor::FactorParams;
use crate::graph::Graph;
use crate::param::{assemble, phi};

/// A graph on `V ∖ U`; `vertices[k]` is the original index of vertex `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphQuotient {
    pub graph: Graph,
    pub vertices: Vec<usize>,
}

fn check_proper(m: usize, u: VertexSet) -> Result<()> {
    if !u.is_subset(VertexSet::full(m)) {
        return Err(Error::InvalidInput(format!("{u:?} is not a subset of 0..{m}")));
    }
    if u.len() == m {
        return Err(Error::InvalidInput("quotient by the whole vertex set".into()));
    }
    Ok(())
}

/// `G/U`: vertices outside `U`, adjacent when adjacent in `G` or joined by
/// a path whose interior lies in `U`.
pub fn graph_quotient(g: &Graph, u: VertexSet) -> Result<GraphQuotient> {
    let m = g.vertex_count();
    check_proper(m, u)?;
    let keep = VertexSet::full(m).difference(u);
    let map = relabel_map(m, keep);
    let mut out = g.induced(&keep.to_vec())?;
    let mut done = VertexSet::EMPTY;
    for start in u.iter() {
        if done.contains(start) {
            continue;
        }
        let component = g.component_of(start, u);
        done = done.union(component);
        let boundary = component
            .iter()
            .fold(VertexSet::EMPTY, |acc, v| acc.union(g.neighbors(v)))
            .intersection(keep)
            .to_vec();
        for (a, &i) in boundary.iter().enumerate() {
            for &j in &boundary[a + 1..] {
                out.add_edge(map[i].unwrap(), map[j].unwrap())?;
            }
        }
    }
    Ok(GraphQuotient {
        graph: out,
        vertices: keep.to_vec(),
    })
}

/// Generating sets of `Δ/u` on the original labels: every facet with `u`
/// removed, and `(F₁ ∪ F₂) ∖ u` for distinct facets both containing `u`.
/// Pairs of smaller faces give subsets of these.
fn quotient_generators(facets: &[Face], u: usize) -> Vec<Face> {
    let mut out: Vec<Face> = facets
        .iter()
        .map(|f| {
            let mut g = *f;
            g.remove(u);
            g
        })
        .filter(|f| !f.is_empty())
        .collect();
    let through: Vec<Face> = facets.iter().copied().filter(|f| f.contains(u)).collect();
    for (a, f1) in through.iter().enumerate() {
        for f2 in &through[a + 1..] {
            let mut g = f1.union(*f2);
            g.remove(u);
            out.push(g);
        }
    }
    out
}

/// `Δ/U` by single-vertex quotients in ascending order of `U`, relabelled
/// onto `V ∖ U`.
pub fn complex_quotient(delta: &SimplicialComplex, u: VertexSet) -> Result<SubComplex> {
    let m = delta.ground_size();
    check_proper(m, u)?;
    let mut sets: Vec<Face> = delta.facets().to_vec();
    for v in u.iter() {
        let complex = SimplicialComplex::from_sets(m, quotient_generators(&sets, v))?;
        sets = complex.facets().to_vec();
        // vertices already removed come back as singleton facets; drop them
        sets.retain(|f| !f.is_subset(u.intersection(VertexSet::full(v + 1))));
    }
    let keep = VertexSet::full(m).difference(u);
    let map = relabel_map(m, keep);
    let relabelled = sets
        .into_iter()
        .filter_map(|f| f.intersection(keep).relabel(&map))
        .filter(|f| !f.is_empty())
        .collect();
    Ok(SubComplex {
        complex: SimplicialComplex::from_sets(keep.len(), relabelled)?,
        vertices: keep.to_vec(),
    })
}

/// Parameters on `Δ/u` reproducing `Σ/σ_uu` for `Σ = φ(γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientWitness {
    pub quotient: Arc<SimplicialComplex>,
    /// Original index of each quotient vertex.
    pub vertices: Vec<usize>,
    /// Columns before merging: the restricted columns of faces avoiding the
    /// eliminated vertex, then one column per pair of faces through it.
    /// Each is tagged with the index of its face in `quotient`.
    pub columns: Vec<(usize, Vec<f64>)>,
    /// The columns merged into one parameter vector by cone addition.
    pub params: FactorParams,
}

impl QuotientWitness {
    /// `Σ col colᵀ` over the unmerged columns.
    pub fn column_sum(&self) -> crate::matrix::SymmetricMatrix {
        let n = self.quotient.ground_size();
        crate::matrix::SymmetricMatrix::from_lower_fn(n, |i, j| {
            self.columns.iter().map(|(_, c)| c[i] * c[j]).sum()
        })
    }
}

/// Eliminates vertex `u`. For faces `F₁ < F₂` through `u` the induced face
/// `(F₁ ∪ F₂) ∖ u` gets
///
/// ```text
/// γ′_{i} = (γ_{i,F₁} γ_{u,F₂} - γ_{i,F₂} γ_{u,F₁}) / √σ_uu.
/// ```
pub fn schur_witness(params: &FactorParams, u: usize, tol: f64) -> Result<QuotientWitness> {
    let delta = params.complex();
    let m = delta.ground_size();
    if u >= m {
        return Err(Error::InvalidInput(format!("vertex {u} outside 0..{m}")));
    }
    let sigma = phi(params);
    let suu = sigma.get(u, u);
    if suu <= tol * sigma.scale() {
        return Err(Error::ZeroDiagonal { vertex: u, value: suu });
    }
    let eliminated = VertexSet::singleton(u);
    let sub = complex_quotient(delta, eliminated)?;
    let quotient = Arc::new(sub.complex);
    let keep = VertexSet::full(m).difference(eliminated);
    let map = relabel_map(m, keep);
    let n = m - 1;
    let locate = |face: Face| -> Result<usize> {
        let f = face.relabel(&map).expect("face avoids u");
        quotient
            .face_index(f)
            .ok_or_else(|| Error::Inconsistent(format!("{face:?} missing from the quotient")))
    };

    let mut columns = Vec::new();
    let mut through = Vec::new();
    for (k, face) in delta.faces().iter().enumerate() {
        if face.contains(u) {
            through.push(k);
            continue;
        }
        let col = params.column(k);
        let restricted: Vec<f64> = keep.iter().map(|v| col[v]).collect();
        columns.push((locate(*face)?, restricted));
    }
    let root = suu.sqrt();
    for (a, &k1) in through.iter().enumerate() {
        for &k2 in &through[a + 1..] {
            let (c1, c2) = (params.column(k1), params.column(k2));
            let (u1, u2) = (c1[u], c2[u]);
            let mut face = delta.faces()[k1].union(delta.faces()[k2]);
            face.remove(u);
            let mut col = vec![0.0; n];
            for i in face.iter() {
                col[map[i].unwrap()] = (c1[i] * u2 - c2[i] * u1) / root;
            }
            columns.push((locate(face)?, col));
        }
    }
    let merged = assemble(quotient.clone(), columns.clone())?;
    Ok(QuotientWitness {
        quotient,
        vertices: sub.vertices,
        columns,
        params: merged,
    })
}

/// Eliminates the vertices of `u` one at a time in ascending order, the
/// order used by [`complex_quotient`], feeding each merged witness into the
/// next step.
pub fn schur_witness_set(params: &FactorParams, u: VertexSet, tol: f64) -> Result<QuotientWitness> {
    let m = params.complex().ground_size();
    check_proper(m, u)?;
    if u.is_empty() {
        return Err(Error::InvalidInput("empty elimination set".into()));
    }
    let mut current: Option<QuotientWitness> = None;
    for v in u.iter() {
        let w = match &current {
            None => schur_witness(params, v, tol)?,
            Some(prev) => {
                let local = prev.vertices.iter().position(|&k| k == v).expect("vertex not yet eliminated");
                let mut next = schur_witness(&prev.params, local, tol)?;
                next.vertices = next.vertices.iter().map(|&k| prev.vertices[k]).collect();
                next
            }
        };
        current = Some(w);
    }
    Ok(current.expect("non-empty set"))
}
