//! The map `φ_Δ(γ) = Γ(γ)Γ(γ)ᵀ` and the convex-cone structure of its image.
//!
//! Addition in the image is constructive: given any list of vectors, each
//! supported inside some face, [`assemble`] produces a single parameter
//! vector whose image is the sum of their outer products. Faces are handled
//! from the largest down; when several vectors compete for one face `F`,
//! the Cholesky factor of their Gram matrix on `F` is computed from a QR
//! decomposition of the vectors themselves. The first column stays on `F`;
//! every later column vanishes on the first vertex of `F`, so its support is
//! a strictly smaller face and it is handed down.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::complex::{Face, SimplicialComplex, VertexSet};
use crate::error::{Error, Result};
use crate::factor::{FactorMatrix, FactorParams};
use crate::matrix::SymmetricMatrix;

/// Columns with norm below this fraction of the largest column are dropped
/// from extreme-ray decompositions.
pub const RAY_DROP_TOL: f64 = 1e-12;

/// A rank-one summand `v vᵀ` of an image point, with `v` supported on a face.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneTerm {
    pub support: Face,
    pub vector: Vec<f64>,
}

impl RankOneTerm {
    pub fn outer(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_lower_fn(self.vector.len(), |i, j| self.vector[i] * self.vector[j])
    }
}

/// `φ_Δ(γ)_ij = Σ_{F ∋ i,j} γ_{i,F} γ_{j,F}`.
pub fn phi(params: &FactorParams) -> SymmetricMatrix {
    let c = params.complex();
    let m = c.ground_size();
    let mut out = DMatrix::<f64>::zeros(m, m);
    for (k, face) in c.faces().iter().enumerate() {
        let vals = params.face_values(k);
        let verts: Vec<usize> = face.iter().collect();
        for (a, &i) in verts.iter().enumerate() {
            for (b, &j) in verts.iter().enumerate().take(a + 1) {
                out[(i, j)] += vals[a] * vals[b];
            }
        }
    }
    SymmetricMatrix::from_lower_fn(m, |i, j| out[(i, j)])
}

pub fn build_factor_matrix(params: &FactorParams) -> FactorMatrix {
    FactorMatrix::from_params(params)
}

/// Parameters whose image is `φ(γ) + φ(γ′)`.
pub fn cone_add(a: &FactorParams, b: &FactorParams) -> Result<FactorParams> {
    if !a.same_complex(b) {
        return Err(Error::ComplexMismatch);
    }
    let c = a.complex();
    let mut columns = Vec::with_capacity(2 * c.face_count());
    for p in [a, b] {
        for k in 0..c.face_count() {
            if p.face_values(k).iter().any(|&v| v != 0.0) {
                columns.push((k, p.column(k)));
            }
        }
    }
    assemble(c.clone(), columns)
}

/// Combines dense columns (length `m`), each tagged with a face index whose
/// face contains its support, into one parameter vector on `complex` with
/// `φ = Σ col colᵀ`.
pub(crate) fn assemble(
    complex: Arc<SimplicialComplex>,
    columns: Vec<(usize, Vec<f64>)>,
) -> Result<FactorParams> {
    let mut pending: Vec<Vec<Vec<f64>>> = vec![Vec::new(); complex.face_count()];
    for (k, col) in columns {
        debug_assert!(support(&col).is_subset(complex.faces()[k]));
        pending[k].push(col);
    }
    let mut out = FactorParams::zeros(complex.clone());
    for k in faces_largest_first(&complex) {
        let cols = std::mem::take(&mut pending[k]);
        let face = complex.faces()[k];
        match cols.len() {
            0 => {}
            1 => write_face(&mut out, k, face, &cols[0]),
            _ => {
                let l = face_factor(face, &cols);
                let verts = face.to_vec();
                for j in 0..verts.len() {
                    let mut col = vec![0.0; complex.ground_size()];
                    for (a, &v) in verts.iter().enumerate() {
                        col[v] = l[(a, j)];
                    }
                    if j == 0 {
                        write_face(&mut out, k, face, &col);
                        continue;
                    }
                    let s = support(&col);
                    if s.is_empty() {
                        continue;
                    }
                    let target = complex
                        .face_index(s)
                        .ok_or_else(|| Error::Inconsistent(format!("support {s:?} is not a face")))?;
                    pending[target].push(col);
                }
            }
        }
    }
    Ok(out)
}

/// Decomposes `φ(γ)` into rank-one terms supported on faces. Faces are
/// grouped under the first facet (in descending size, then face order)
/// containing them, so the term count is at most the sum of facet sizes.
pub fn extreme_decomposition(params: &FactorParams) -> Result<Vec<RankOneTerm>> {
    let c = params.complex();
    let mut claimed = vec![false; c.face_count()];
    let mut facets: Vec<Face> = c.facets().to_vec();
    facets.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));

    let col_scale = (0..c.face_count())
        .map(|k| params.face_values(k).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let drop_below = RAY_DROP_TOL * col_scale;

    let mut terms = Vec::new();
    for facet in facets {
        let mut cols = Vec::new();
        for (k, face) in c.faces().iter().enumerate() {
            if claimed[k] || !face.is_subset(facet) {
                continue;
            }
            claimed[k] = true;
            if params.face_values(k).iter().any(|&v| v != 0.0) {
                cols.push(params.column(k));
            }
        }
        let vectors: Vec<Vec<f64>> = if cols.len() <= 1 {
            cols
        } else {
            let l = face_factor(facet, &cols);
            let verts = facet.to_vec();
            (0..verts.len())
                .map(|j| {
                    let mut col = vec![0.0; c.ground_size()];
                    for (a, &v) in verts.iter().enumerate() {
                        col[v] = l[(a, j)];
                    }
                    col
                })
                .collect()
        };
        for v in vectors {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > drop_below && norm > 0.0 {
                terms.push(RankOneTerm {
                    support: support(&v),
                    vector: v,
                });
            }
        }
    }
    Ok(terms)
}

/// Parameters on the induced subcomplex `Δ_A` whose image is the principal
/// submatrix `φ(γ)_{A,A}`. Columns of faces inside `A` are kept; every other
/// column is restricted to `A`, where its support `F ∩ A` is again a face,
/// and merged in by cone addition.
pub fn submatrix_witness(params: &FactorParams, a: VertexSet) -> Result<(Arc<SimplicialComplex>, Vec<usize>, FactorParams)> {
    let c = params.complex();
    let m = c.ground_size();
    if a.is_empty() || a.len() >= m || !a.is_subset(VertexSet::full(m)) {
        return Err(Error::InvalidInput(format!(
            "{a:?} is not a proper non-empty subset of 0..{m}"
        )));
    }
    let sub = c.induced_subcomplex(a)?;
    let target = Arc::new(sub.complex);
    let map = crate::complex::relabel_map(m, a);
    let mut columns = Vec::new();
    for (k, face) in c.faces().iter().enumerate() {
        let kept = face.intersection(a);
        if kept.is_empty() {
            continue;
        }
        let col = params.column(k);
        let mut restricted = vec![0.0; a.len()];
        for v in kept.iter() {
            restricted[map[v].unwrap()] = col[v];
        }
        if restricted.iter().all(|&x| x == 0.0) {
            continue;
        }
        let new_face = kept.relabel(&map).unwrap();
        let idx = target.face_index(new_face).expect("restriction of a face is a face");
        columns.push((idx, restricted));
    }
    let witness = assemble(target.clone(), columns)?;
    Ok((target, sub.vertices, witness))
}

/// Indices of faces ordered by descending size; within a size, face order.
fn faces_largest_first(c: &SimplicialComplex) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..c.face_count()).collect();
    idx.sort_by(|&a, &b| {
        let (fa, fb) = (c.faces()[a], c.faces()[b]);
        fb.len().cmp(&fa.len()).then(fa.cmp(&fb))
    });
    idx
}

/// Cholesky factor of `Σ col colᵀ` compressed to the rows of `face`.
/// Lower-triangular `L` on the vertices of `face` with `L Lᵀ = Σ col colᵀ`,
/// taken from a QR decomposition of the stacked columns so that no Gram
/// matrix is formed. Column `j` vanishes on the first `j` vertices.
fn face_factor(face: Face, cols: &[Vec<f64>]) -> DMatrix<f64> {
    let verts = face.to_vec();
    let n = verts.len();
    let stacked = DMatrix::from_fn(cols.len(), n, |r, a| cols[r][verts[a]]);
    let r = stacked.qr().r();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..r.nrows() {
        let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        for k in j..n {
            l[(k, j)] = sign * r[(j, k)];
        }
    }
    l
}

fn write_face(out: &mut FactorParams, k: usize, face: Face, col: &[f64]) {
    for (slot, v) in out.face_values_mut(k).iter_mut().zip(face.iter()) {
        *slot = col[v];
    }
}

pub(crate) fn support(col: &[f64]) -> VertexSet {
    VertexSet::from_vertices(col.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, _)| i))
}
