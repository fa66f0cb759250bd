//! Parameter vectors `γ = (γ_{i,F})` and the factor matrix they define.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::complex::{Face, SimplicialComplex, VertexSet};
use crate::error::{Error, Result};

/// One real parameter per incidence `(F, i)` with `i ∈ F`, stored flat in
/// face order and, within a face, in increasing vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorParams {
    complex: Arc<SimplicialComplex>,
    values: Vec<f64>,
}

impl FactorParams {
    pub fn zeros(complex: Arc<SimplicialComplex>) -> Self {
        let n = complex.incidence_count();
        FactorParams {
            complex,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(complex: Arc<SimplicialComplex>, values: Vec<f64>) -> Result<Self> {
        if values.len() != complex.incidence_count() {
            return Err(Error::InvalidInput(format!(
                "{} parameter values for {} incidences",
                values.len(),
                complex.incidence_count()
            )));
        }
        Ok(FactorParams { complex, values })
    }

    /// Fills every incidence from `f(face, vertex)`.
    pub fn from_fn(complex: Arc<SimplicialComplex>, mut f: impl FnMut(Face, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(complex.incidence_count());
        for face in complex.faces() {
            for v in face.iter() {
                values.push(f(*face, v));
            }
        }
        FactorParams { complex, values }
    }

    pub fn complex(&self) -> &Arc<SimplicialComplex> {
        &self.complex
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_complex(&self, other: &FactorParams) -> bool {
        Arc::ptr_eq(&self.complex, &other.complex) || self.complex == other.complex
    }

    /// `γ_{v,F}`, or `None` if `F` is not a face or `v ∉ F`.
    pub fn gamma(&self, face: Face, v: usize) -> Option<f64> {
        let k = self.complex.face_index(face)?;
        self.complex.incidence(k, v).map(|idx| self.values[idx])
    }

    pub fn set_gamma(&mut self, face: Face, v: usize, value: f64) -> Result<()> {
        let idx = self
            .complex
            .face_index(face)
            .and_then(|k| self.complex.incidence(k, v))
            .ok_or_else(|| {
                Error::InvalidInput(format!("({face:?}, {v}) is not an incidence of the complex"))
            })?;
        self.values[idx] = value;
        Ok(())
    }

    /// `γ_i = γ_{i,{i}}`.
    pub fn singleton(&self, i: usize) -> f64 {
        self.gamma(VertexSet::singleton(i), i).unwrap_or(0.0)
    }

    /// `γ_ij = γ_{i,{i,j}}`, zero when `{i,j}` is not a face.
    pub fn edge(&self, i: usize, j: usize) -> f64 {
        self.gamma(VertexSet::from_vertices([i, j]), i).unwrap_or(0.0)
    }

    /// Parameters of face `face_idx`, in increasing vertex order.
    pub fn face_values(&self, face_idx: usize) -> &[f64] {
        let start = self.complex.face_offset(face_idx);
        &self.values[start..start + self.complex.faces()[face_idx].len()]
    }

    pub(crate) fn face_values_mut(&mut self, face_idx: usize) -> &mut [f64] {
        let start = self.complex.face_offset(face_idx);
        let len = self.complex.faces()[face_idx].len();
        &mut self.values[start..start + len]
    }

    /// Column `Γ(γ)_F` as a dense vector of length `m`.
    pub fn column(&self, face_idx: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.complex.ground_size()];
        let face = self.complex.faces()[face_idx];
        for (v, &g) in face.iter().zip(self.face_values(face_idx)) {
            col[v] = g;
        }
        col
    }

    pub fn scaled(&self, c: f64) -> FactorParams {
        FactorParams {
            complex: self.complex.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Iterates `(face, vertex, γ)` over all incidences.
    pub fn iter(&self) -> impl Iterator<Item = (Face, usize, f64)> + '_ {
        self.complex
            .faces()
            .iter()
            .flat_map(|f| f.iter().map(move |v| (*f, v)))
            .zip(self.values.iter())
            .map(|((f, v), &g)| (f, v, g))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Re-expresses parameters on `target`, a complex on relabelled vertices.
    /// `vertices[k]` is the vertex of `self` that becomes vertex `k`; faces of
    /// `self` are mapped through the inverse of that table.
    pub fn relabel(&self, target: Arc<SimplicialComplex>, vertices: &[usize]) -> Result<FactorParams> {
        let mut inverse = vec![None; self.complex.ground_size()];
        for (k, &v) in vertices.iter().enumerate() {
            inverse[v] = Some(k);
        }
        let mut out = FactorParams::zeros(target);
        for (face, v, g) in self.iter() {
            if g == 0.0 {
                continue;
            }
            let new_face = face
                .relabel(&inverse)
                .ok_or_else(|| Error::InvalidInput("relabelling drops a vertex".into()))?;
            let new_v = inverse[v].expect("vertex of a mapped face");
            out.set_gamma(new_face, new_v, g)?;
        }
        Ok(out)
    }
}

/// `Γ(γ)`: rows are vertices, columns are faces in face order, entry
/// `(i, F)` is `γ_{i,F}` when `i ∈ F` and zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    pub faces: Vec<Face>,
    pub matrix: DMatrix<f64>,
}

impl FactorMatrix {
    pub fn from_params(params: &FactorParams) -> Self {
        let c = params.complex();
        let mut matrix = DMatrix::zeros(c.ground_size(), c.face_count());
        for k in 0..c.face_count() {
            for (v, &g) in c.faces()[k].iter().zip(params.face_values(k)) {
                matrix[(v, k)] = g;
            }
        }
        FactorMatrix {
            faces: c.faces().to_vec(),
            matrix,
        }
    }

    /// Support of the column for `faces[k]`.
    pub fn column_support(&self, k: usize) -> VertexSet {
        VertexSet::from_vertices(
            (0..self.matrix.nrows()).filter(|&i| self.matrix[(i, k)] != 0.0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Arc<SimplicialComplex> {
        Arc::new(SimplicialComplex::from_facets(3, &[vec![0, 1], vec![1, 2]]).unwrap())
    }

    #[test]
    fn shorthand_accessors() {
        let mut p = FactorParams::zeros(chain());
        p.set_gamma(VertexSet::from_vertices([0, 1]), 1, 2.5).unwrap();
        p.set_gamma(VertexSet::singleton(2), 2, -1.0).unwrap();
        assert_eq!(p.edge(1, 0), 2.5);
        assert_eq!(p.edge(0, 1), 0.0);
        assert_eq!(p.singleton(2), -1.0);
        assert_eq!(p.edge(0, 2), 0.0);
        assert!(p.set_gamma(VertexSet::from_vertices([0, 2]), 0, 1.0).is_err());
        assert!(p.set_gamma(VertexSet::singleton(0), 1, 1.0).is_err());
    }

    #[test]
    fn factor_matrix_column_supports_lie_in_faces() {
        let p = FactorParams::from_fn(chain(), |f, v| (f.bits() as f64) + v as f64 + 1.0);
        let fm = FactorMatrix::from_params(&p);
        assert_eq!(fm.matrix.shape(), (3, 5));
        for (k, f) in fm.faces.iter().enumerate() {
            assert!(fm.column_support(k).is_subset(*f));
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(FactorParams::from_values(chain(), vec![0.0; 3]).is_err());
    }
}
