//! Simple undirected graphs on at most 64 vertices, stored as adjacency bitmasks.

use crate::complex::VertexSet;
use crate::error::{Error, Result};

/// Largest supported vertex count.
pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    m: usize,
    adj: Vec<u64>,
}

impl Graph {
    pub fn empty(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_VERTICES {
            return Err(Error::InvalidInput(format!(
                "vertex count {m} outside 1..={MAX_VERTICES}"
            )));
        }
        Ok(Graph { m, adj: vec![0; m] })
    }

    /// Builds a graph from 0-based edge pairs. Self-loops and out-of-range
    /// endpoints are rejected; repeated edges are collapsed.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(m)?;
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn complete(m: usize) -> Result<Self> {
        let mut g = Graph::empty(m)?;
        for i in 0..m {
            g.adj[i] = VertexSet::full(m).bits() & !(1u64 << i);
        }
        Ok(g)
    }

    /// The chordless cycle 0-1-...-(m-1)-0.
    pub fn cycle(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidInput(format!("cycle needs m >= 3, got {m}")));
        }
        let edges: Vec<_> = (0..m).map(|i| (i, (i + 1) % m)).collect();
        Graph::from_edges(m, &edges)
    }

    pub fn path(m: usize) -> Result<Self> {
        let edges: Vec<_> = (1..m).map(|i| (i - 1, i)).collect();
        Graph::from_edges(m, &edges)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i >= self.m || j >= self.m {
            return Err(Error::InvalidInput(format!(
                "edge ({i}, {j}) has an endpoint outside 0..{}",
                self.m
            )));
        }
        if i == j {
            return Err(Error::InvalidInput(format!("self-loop at vertex {i}")));
        }
        self.adj[i] |= 1 << j;
        self.adj[j] |= 1 << i;
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.m
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.m && j < self.m && self.adj[i] >> j & 1 == 1
    }

    pub fn neighbors(&self, v: usize) -> VertexSet {
        VertexSet::from_bits(self.adj[v])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    /// Edges as 0-based pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.m {
            for j in VertexSet::from_bits(self.adj[i]).iter() {
                if j > i {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn is_clique(&self, set: VertexSet) -> bool {
        set.iter()
            .all(|v| (set.bits() & !(1u64 << v)) & !self.adj[v] == 0)
    }

    /// Subgraph induced on `vertices`, relabelled `0..vertices.len()` in the
    /// given order.
    pub fn induced(&self, vertices: &[usize]) -> Result<Graph> {
        let mut g = Graph::empty(vertices.len())?;
        for (a, &i) in vertices.iter().enumerate() {
            for (b, &j) in vertices.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    g.add_edge(a, b)?;
                }
            }
        }
        Ok(g)
    }

    /// True if the graph has no cycles.
    pub fn is_forest(&self) -> bool {
        // A graph is a forest iff |E| = |V| - #components.
        self.edge_count() + self.component_count() == self.m
    }

    pub fn component_count(&self) -> usize {
        let mut seen = 0u64;
        let mut count = 0;
        for s in 0..self.m {
            if seen >> s & 1 == 1 {
                continue;
            }
            count += 1;
            seen |= self.component_of(s, VertexSet::full(self.m)).bits();
        }
        count
    }

    /// Vertices reachable from `start` using only vertices in `allowed`.
    pub fn component_of(&self, start: usize, allowed: VertexSet) -> VertexSet {
        let allowed = allowed.bits() | 1 << start;
        let mut reached = 1u64 << start;
        let mut frontier = reached;
        while frontier != 0 {
            let mut next = 0u64;
            for v in VertexSet::from_bits(frontier).iter() {
                next |= self.adj[v];
            }
            next &= allowed & !reached;
            reached |= next;
            frontier = next;
        }
        VertexSet::from_bits(reached)
    }

    /// If the graph is a single chordless cycle on all of its vertices,
    /// returns the vertices in cycle order starting at 0 and continuing to
    /// its smaller neighbour.
    pub fn cycle_order(&self) -> Option<Vec<usize>> {
        if self.m < 3 || (0..self.m).any(|v| self.degree(v) != 2) {
            return None;
        }
        let mut order = vec![0];
        let mut prev = usize::MAX;
        let mut cur = 0;
        loop {
            let next = self
                .neighbors(cur)
                .iter()
                .find(|&w| w != prev)
                .expect("degree two");
            if next == 0 {
                break;
            }
            order.push(next);
            prev = cur;
            cur = next;
        }
        (order.len() == self.m).then_some(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_loops_and_out_of_range() {
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
        assert!(Graph::empty(0).is_err());
        assert!(Graph::empty(65).is_err());
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn forests_and_cycles() {
        assert!(Graph::path(5).unwrap().is_forest());
        assert!(!Graph::cycle(4).unwrap().is_forest());
        assert!(Graph::empty(4).unwrap().is_forest());
        assert_eq!(Graph::cycle(5).unwrap().cycle_order(), Some(vec![0, 1, 2, 3, 4]));
        // two disjoint triangles: every degree is two but it is not one cycle
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert_eq!(g.cycle_order(), None);
    }

    #[test]
    fn cycle_order_follows_relabelled_cycle() {
        let g = Graph::from_edges(4, &[(0, 2), (2, 1), (1, 3), (3, 0)]).unwrap();
        let order = g.cycle_order().unwrap();
        assert_eq!(order.len(), 4);
        for k in 0..4 {
            assert!(g.has_edge(order[k], order[(k + 1) % 4]));
        }
    }
}
