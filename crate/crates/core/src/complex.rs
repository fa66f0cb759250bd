//! Vertex sets, faces and simplicial complexes.
//!
//! A complex on `[m]` is stored by its facets together with the full list of
//! non-empty faces in the canonical face order: by size, then
//! lexicographically by sorted vertex list. Parameter vectors index their
//! entries through this list, so the order is part of every file format.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{Graph, MAX_VERTICES};

/// Upper bound on the number of faces materialised for one complex.
pub const MAX_FACES: usize = 1 << 20;

/// A set of 0-based vertices below 64.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VertexSet(u64);

/// Faces are vertex sets; the alias documents intent at use sites.
pub type Face = VertexSet;

impl VertexSet {
    pub const EMPTY: VertexSet = VertexSet(0);

    pub fn from_bits(bits: u64) -> Self {
        VertexSet(bits)
    }

    /// The set `{0, .., m-1}`.
    pub fn full(m: usize) -> Self {
        if m >= 64 {
            VertexSet(u64::MAX)
        } else {
            VertexSet((1u64 << m) - 1)
        }
    }

    pub fn singleton(v: usize) -> Self {
        VertexSet(1 << v)
    }

    pub fn from_vertices<I: IntoIterator<Item = usize>>(vertices: I) -> Self {
        VertexSet(vertices.into_iter().fold(0, |acc, v| acc | 1 << v))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, v: usize) -> bool {
        v < 64 && self.0 >> v & 1 == 1
    }

    pub fn is_subset(self, other: VertexSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: VertexSet) -> Self {
        VertexSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VertexSet) -> Self {
        VertexSet(self.0 & other.0)
    }

    pub fn difference(self, other: VertexSet) -> Self {
        VertexSet(self.0 & !other.0)
    }

    pub fn insert(&mut self, v: usize) {
        self.0 |= 1 << v;
    }

    pub fn remove(&mut self, v: usize) {
        self.0 &= !(1 << v);
    }

    pub fn min(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Vertices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Position of `v` among the sorted members.
    pub fn rank_of(self, v: usize) -> Option<usize> {
        self.contains(v)
            .then(|| (self.0 & ((1u64 << v) - 1)).count_ones() as usize)
    }

    /// All non-empty subsets.
    pub fn subsets(self) -> impl Iterator<Item = VertexSet> {
        // standard submask enumeration, descending
        let full = self.0;
        let mut sub = full;
        let mut done = full == 0;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = sub;
            if sub == 0 {
                done = true;
                return None;
            }
            sub = (sub - 1) & full;
            Some(VertexSet(out))
        })
    }

    /// Maps every vertex through `map` (old index -> new index).
    pub fn relabel(self, map: &[Option<usize>]) -> Option<VertexSet> {
        let mut out = VertexSet::EMPTY;
        for v in self.iter() {
            out.insert(map[v]?);
        }
        Some(out)
    }
}

impl Ord for VertexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            let diff = self.0 ^ other.0;
            if diff == 0 {
                Ordering::Equal
            } else if self.0 >> diff.trailing_zeros() & 1 == 1 {
                // the smallest differing vertex belongs to self
                Ordering::Less
            } else {
                Ordering::Greater
            }
        })
    }
}

impl PartialOrd for VertexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A simplicial complex on `{0, .., m-1}` whose ground set is all of it.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    m: usize,
    facets: Vec<Face>,
    faces: Vec<Face>,
    index: HashMap<Face, usize>,
    offsets: Vec<usize>,
}

impl PartialEq for SimplicialComplex {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.facets == other.facets
    }
}

impl Eq for SimplicialComplex {}

impl SimplicialComplex {
    /// Builds the complex generated by `generators` (0-based vertex lists).
    ///
    /// Non-maximal and repeated generators are dropped, and every vertex not
    /// covered by a generator becomes a singleton facet.
    pub fn from_facets(m: usize, generators: &[Vec<usize>]) -> Result<Self> {
        let sets = generators
            .iter()
            .map(|g| {
                if g.is_empty() {
                    return Err(Error::InvalidInput("empty facet".into()));
                }
                if let Some(&v) = g.iter().find(|&&v| v >= m) {
                    return Err(Error::InvalidInput(format!(
                        "facet vertex {v} outside 0..{m}"
                    )));
                }
                Ok(VertexSet::from_vertices(g.iter().copied()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sets(m, sets)
    }

    pub fn from_sets(m: usize, sets: Vec<Face>) -> Result<Self> {
        if m == 0 || m > MAX_VERTICES {
            return Err(Error::InvalidInput(format!(
                "ground set size {m} outside 1..={MAX_VERTICES}"
            )));
        }
        let full = VertexSet::full(m);
        if let Some(s) = sets.iter().find(|s| s.is_empty() || !s.is_subset(full)) {
            return Err(Error::InvalidInput(format!("invalid facet {s:?}")));
        }
        let mut candidates: Vec<Face> = sets;
        candidates.sort();
        candidates.dedup();
        let mut facets: Vec<Face> = candidates
            .iter()
            .copied()
            .filter(|s| !candidates.iter().any(|t| t != s && s.is_subset(*t)))
            .collect();
        let covered = facets.iter().fold(VertexSet::EMPTY, |a, f| a.union(*f));
        facets.extend(full.difference(covered).iter().map(VertexSet::singleton));
        facets.sort();

        let mut seen: HashSet<Face> = HashSet::new();
        for f in &facets {
            if f.len() > 20 {
                return Err(Error::TooManyFaces { limit: MAX_FACES });
            }
            for s in f.subsets() {
                seen.insert(s);
            }
            if seen.len() > MAX_FACES {
                return Err(Error::TooManyFaces { limit: MAX_FACES });
            }
        }
        let mut faces: Vec<Face> = seen.into_iter().collect();
        faces.sort();
        let index = faces.iter().enumerate().map(|(k, f)| (*f, k)).collect();
        let mut offsets = Vec::with_capacity(faces.len() + 1);
        let mut acc = 0;
        for f in &faces {
            offsets.push(acc);
            acc += f.len();
        }
        offsets.push(acc);
        Ok(SimplicialComplex {
            m,
            facets,
            faces,
            index,
            offsets,
        })
    }

    /// The complex whose facets are the edges of `g` (plus isolated vertices).
    pub fn edge_complex(g: &Graph) -> Result<Self> {
        let sets = g
            .edges()
            .into_iter()
            .map(|(i, j)| VertexSet::from_vertices([i, j]))
            .collect();
        Self::from_sets(g.vertex_count(), sets)
    }

    /// Only singleton faces.
    pub fn discrete(m: usize) -> Result<Self> {
        Self::from_sets(m, Vec::new())
    }

    pub fn ground_size(&self) -> usize {
        self.m
    }

    /// Facets in face order.
    pub fn facets(&self) -> &[Face] {
        &self.facets
    }

    /// All non-empty faces in face order.
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_index(&self, f: Face) -> Option<usize> {
        self.index.get(&f).copied()
    }

    pub fn contains_face(&self, f: Face) -> bool {
        self.index.contains_key(&f)
    }

    /// Number of (face, vertex) incidences, the length of a parameter vector.
    pub fn incidence_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Flat parameter index of `(face, vertex)`.
    pub fn incidence(&self, face_idx: usize, v: usize) -> Option<usize> {
        self.faces[face_idx]
            .rank_of(v)
            .map(|r| self.offsets[face_idx] + r)
    }

    pub(crate) fn face_offset(&self, face_idx: usize) -> usize {
        self.offsets[face_idx]
    }

    pub fn max_face_size(&self) -> usize {
        self.facets.iter().map(|f| f.len()).max().unwrap_or(0)
    }

    /// Graph whose edges are the two-element faces.
    pub fn underlying_graph(&self) -> Graph {
        let mut g = Graph::empty(self.m).expect("valid size");
        for f in self.faces.iter().filter(|f| f.len() == 2) {
            let v = f.to_vec();
            g.add_edge(v[0], v[1]).expect("face vertices in range");
        }
        g
    }

    /// The induced subcomplex on `vertices`, relabelled to `0..|A|` in
    /// increasing vertex order.
    pub fn induced_subcomplex(&self, vertices: VertexSet) -> Result<SubComplex> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("empty vertex subset".into()));
        }
        if !vertices.is_subset(VertexSet::full(self.m)) {
            return Err(Error::InvalidInput(format!(
                "vertex subset {vertices:?} not contained in 0..{}",
                self.m
            )));
        }
        let map = relabel_map(self.m, vertices);
        let sets = self
            .facets
            .iter()
            .filter_map(|f| {
                let kept = f.intersection(vertices);
                (!kept.is_empty()).then(|| kept.relabel(&map).expect("subset"))
            })
            .collect();
        Ok(SubComplex {
            complex: SimplicialComplex::from_sets(vertices.len(), sets)?,
            vertices: vertices.to_vec(),
        })
    }
}

/// A complex on a relabelled vertex subset. `vertices[k]` is the original
/// index of new vertex `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubComplex {
    pub complex: SimplicialComplex,
    pub vertices: Vec<usize>,
}

/// Old index -> new index for the members of `keep`, in increasing order.
pub(crate) fn relabel_map(m: usize, keep: VertexSet) -> Vec<Option<usize>> {
    let mut map = vec![None; m];
    for (k, v) in keep.iter().enumerate() {
        map[v] = Some(k);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(v: &[usize]) -> Face {
        VertexSet::from_vertices(v.iter().copied())
    }

    #[test]
    fn face_order_is_size_then_lex() {
        let mut faces = vec![fs(&[1, 2]), fs(&[2]), fs(&[0, 2]), fs(&[0]), fs(&[0, 1, 2]), fs(&[0, 1])];
        faces.sort();
        assert_eq!(
            faces,
            vec![fs(&[0]), fs(&[2]), fs(&[0, 1]), fs(&[0, 2]), fs(&[1, 2]), fs(&[0, 1, 2])]
        );
        assert!(fs(&[0, 3]) < fs(&[1, 2]));
        assert!(fs(&[1, 2]) > fs(&[0, 5]));
    }

    #[test]
    fn subsets_enumerates_all_nonempty() {
        let s: Vec<_> = fs(&[1, 4, 6]).subsets().collect();
        assert_eq!(s.len(), 7);
        assert!(VertexSet::EMPTY.subsets().next().is_none());
    }

    #[test]
    fn three_chain_graph() {
        let c = SimplicialComplex::from_facets(3, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(c.underlying_graph().edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(c.face_count(), 5);
        assert_eq!(c.incidence_count(), 7);
    }

    #[test]
    fn singleton_only_complex_has_empty_graph() {
        let c = SimplicialComplex::discrete(4).unwrap();
        assert_eq!(c.underlying_graph().edge_count(), 0);
        assert_eq!(c.facets().len(), 4);
    }

    #[test]
    fn triangle_edge_complex() {
        let c = SimplicialComplex::from_facets(3, &[vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap();
        assert_eq!(c.underlying_graph(), Graph::complete(3).unwrap());
        assert!(!c.contains_face(fs(&[0, 1, 2])));
    }

    #[test]
    fn generators_are_normalised() {
        let c = SimplicialComplex::from_facets(4, &[vec![0, 1, 2], vec![0, 1], vec![2, 1, 0]]).unwrap();
        assert_eq!(c.facets(), &[fs(&[3]), fs(&[0, 1, 2])]);
        assert!(SimplicialComplex::from_facets(3, &[vec![]]).is_err());
        assert!(SimplicialComplex::from_facets(3, &[vec![0, 3]]).is_err());
    }

    #[test]
    fn induced_subcomplex_cases() {
        let c4 = SimplicialComplex::edge_complex(&Graph::cycle(4).unwrap()).unwrap();
        let sub = c4.induced_subcomplex(fs(&[0, 1, 2])).unwrap();
        let path = SimplicialComplex::edge_complex(&Graph::path(3).unwrap()).unwrap();
        assert_eq!(sub.complex, path);
        assert_eq!(sub.vertices, vec![0, 1, 2]);

        let whole = c4.induced_subcomplex(VertexSet::full(4)).unwrap();
        assert_eq!(whole.complex, c4);

        let k3 = SimplicialComplex::from_facets(3, &[vec![0, 1, 2]]).unwrap();
        let sub = k3.induced_subcomplex(fs(&[0, 1])).unwrap();
        assert_eq!(sub.complex.facets(), &[fs(&[0, 1])]);
        assert_eq!(sub.complex.face_count(), 3);

        assert!(c4.induced_subcomplex(VertexSet::EMPTY).is_err());
    }

    #[test]
    fn incidence_indexing_is_dense() {
        let c = SimplicialComplex::from_facets(4, &[vec![0, 1, 2], vec![2, 3]]).unwrap();
        let mut seen = vec![false; c.incidence_count()];
        for (k, f) in c.faces().iter().enumerate() {
            for v in f.iter() {
                let idx = c.incidence(k, v).unwrap();
                assert!(!seen[idx]);
                seen[idx] = true;
            }
            assert!(c.incidence(k, 5).is_none());
        }
        assert!(seen.into_iter().all(|s| s));
    }
}
