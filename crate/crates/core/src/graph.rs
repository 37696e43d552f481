//! Compact adjacency structure used by the cluster and Monte Carlo code.

use std::collections::VecDeque;

use crate::map::{lift_neg, CombinatorialMap, Lift, Surface, VertexId};

/// Undirected graph in compressed adjacency form, with an optional torus
/// lift per directed edge, forced site states and the boundary data the
/// percolation observables need.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    lifts: Vec<Lift>,
    periodic: bool,
    forced: Vec<Option<bool>>,
    boundary: Vec<bool>,
    side_a: Vec<bool>,
    side_b: Vec<bool>,
    root: Option<VertexId>,
    label: String,
}

impl SiteGraph {
    /// Builds the graph from undirected edges `(u, v, lift of v relative to u)`.
    pub fn from_edges(vertex_count: usize, edges: &[(VertexId, VertexId, Lift)], periodic: bool) -> Self {
        let mut degree = vec![0usize; vertex_count];
        for &(u, v, _) in edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = vec![0usize; vertex_count + 1];
        for v in 0..vertex_count {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[vertex_count]];
        let mut lifts = vec![[0, 0]; offsets[vertex_count]];
        for &(u, v, l) in edges {
            targets[fill[u]] = v as u32;
            lifts[fill[u]] = l;
            fill[u] += 1;
            targets[fill[v]] = u as u32;
            lifts[fill[v]] = lift_neg(l);
            fill[v] += 1;
        }
        SiteGraph {
            offsets,
            targets,
            lifts,
            periodic,
            forced: vec![None; vertex_count],
            boundary: vec![false; vertex_count],
            side_a: Vec::new(),
            side_b: Vec::new(),
            root: None,
            label: String::new(),
        }
    }

    /// Underlying graph of a map, carrying over lifts, boundary, the
    /// `side_a`/`side_b`/`root` metadata and the `spec` label.
    pub fn from_map(map: &CombinatorialMap) -> Self {
        let edges: Vec<_> = (0..map.edge_count())
            .map(|e| {
                let d = map.edge_dart(e);
                (map.origin(d), map.target(d), map.lift(d))
            })
            .collect();
        let mut g = SiteGraph::from_edges(map.vertex_count(), &edges, map.surface() == Surface::Torus);
        g.copy_map_annotations(map);
        g
    }

    pub(crate) fn copy_map_annotations(&mut self, map: &CombinatorialMap) {
        let n = map.vertex_count().min(self.vertex_count());
        for &v in map.boundary_vertices() {
            if v < n {
                self.boundary[v] = true;
            }
        }
        let parse = |key: &str| -> Option<Vec<VertexId>> {
            map.meta_value(key)
                .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        };
        if let (Some(a), Some(b)) = (parse("side_a"), parse("side_b")) {
            self.side_a = vec![false; self.vertex_count()];
            self.side_b = vec![false; self.vertex_count()];
            for v in a.into_iter().filter(|&v| v < n) {
                self.side_a[v] = true;
            }
            for v in b.into_iter().filter(|&v| v < n) {
                self.side_b[v] = true;
            }
        }
        self.root = map.meta_value("root").and_then(|r| r.parse().ok()).filter(|&r| r < n);
        if let Some(spec) = map.meta_value("spec") {
            self.label = spec.to_string();
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Neighbours of `v` with the cover displacement of each.
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, Lift)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.lifts[range])
            .map(|(&w, &l)| (w as VertexId, l))
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn forced(&self, v: VertexId) -> Option<bool> {
        self.forced[v]
    }

    pub fn forced_states(&self) -> &[Option<bool>] {
        &self.forced
    }

    pub fn set_forced(&mut self, v: VertexId, state: Option<bool>) {
        self.forced[v] = state;
    }

    /// Vertices whose state is random, in increasing order.
    pub fn free_vertices(&self) -> Vec<VertexId> {
        (0..self.vertex_count()).filter(|&v| self.forced[v].is_none()).collect()
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn set_boundary(&mut self, vs: &[VertexId]) {
        self.boundary = vec![false; self.vertex_count()];
        for &v in vs {
            self.boundary[v] = true;
        }
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.iter().any(|&b| b)
    }

    /// Flags for the two opposite sides used by crossing observables.
    pub fn sides(&self) -> Option<(&[bool], &[bool])> {
        if self.side_a.is_empty() {
            None
        } else {
            Some((&self.side_a, &self.side_b))
        }
    }

    pub fn root(&self) -> Option<VertexId> {
        self.root
    }

    pub fn set_root(&mut self, root: Option<VertexId>) {
        self.root = root;
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    /// Breadth-first distances; unreachable vertices get `usize::MAX`.
    pub fn distances_from(&self, source: VertexId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for (w, _) in self.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Distances from the root restricted to non-forced vertices; forced
    /// vertices (facial sites) are transparent and do not add to the count.
    pub fn root_distances(&self) -> Option<Vec<usize>> {
        let root = self.root?;
        let mut dist = vec![usize::MAX; self.vertex_count()];
        dist[root] = 0;
        let mut deque = VecDeque::from([root]);
        while let Some(v) = deque.pop_front() {
            for (w, _) in self.neighbors(v) {
                let step = usize::from(self.forced[w].is_none());
                if dist[v] + step < dist[w] {
                    dist[w] = dist[v] + step;
                    if step == 0 {
                        deque.push_front(w);
                    } else {
                        deque.push_back(w);
                    }
                }
            }
        }
        Some(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilings::{generate, Family, TilingSpec};

    #[test]
    fn square_torus_adjacency() {
        let m = generate(&TilingSpec::torus(Family::Square, 4)).unwrap();
        let g = SiteGraph::from_map(&m);
        assert_eq!(g.vertex_count(), 16);
        assert_eq!(g.edge_count(), 32);
        assert!(g.is_periodic());
        for v in 0..16 {
            assert_eq!(g.degree(v), 4);
            let total = g.neighbors(v).fold([0, 0], |acc, (_, l)| [acc[0] + l[0], acc[1] + l[1]]);
            assert_eq!(total, [0, 0]);
        }
    }

    #[test]
    fn ladder_carries_sides_and_root() {
        let m = generate(&TilingSpec::free(Family::Ladder, 6)).unwrap();
        let g = SiteGraph::from_map(&m);
        let (a, b) = g.sides().unwrap();
        assert_eq!(a.iter().filter(|&&x| x).count(), 2);
        assert_eq!(b.iter().filter(|&&x| x).count(), 2);
        assert_eq!(g.root(), Some(6));
        assert!(g.is_boundary(0) && g.is_boundary(11) && !g.is_boundary(4));
    }
}
