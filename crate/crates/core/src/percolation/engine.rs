//! Incremental cluster bookkeeping shared by the sweeps and the fixed-p
//! samplers: vertices are switched on one at a time and joined to their
//! open neighbours.

use crate::dsu::{DisplacementDsu, Union};
use crate::graph::SiteGraph;
use crate::map::VertexId;

use super::{Observable, PercolationError};

pub(crate) const SIDE_A: u8 = 1;
pub(crate) const SIDE_B: u8 = 2;
pub(crate) const BOUNDARY: u8 = 4;
pub(crate) const INNER: u8 = 8;
pub(crate) const ROOT: u8 = 16;

/// Per-vertex data derived once from a graph.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    pub flags: Vec<u8>,
    /// Flags a cluster must collect to count as crossing.
    pub cross_mask: u8,
    /// Membership of each vertex in the two tracked root spheres.
    pub sphere: Vec<[u32; 2]>,
    pub free: Vec<VertexId>,
    pub forced_open: Vec<VertexId>,
    pub root: Option<VertexId>,
    pub periodic: bool,
}

impl Prepared {
    pub fn new(g: &SiteGraph, radii: Option<(usize, usize)>) -> Self {
        let n = g.vertex_count();
        let mut flags = vec![0u8; n];
        let sides = g.sides();
        for (v, f) in flags.iter_mut().enumerate() {
            if g.is_boundary(v) {
                *f |= BOUNDARY;
            }
            if let Some((a, b)) = sides {
                if a[v] {
                    *f |= SIDE_A;
                }
                if b[v] {
                    *f |= SIDE_B;
                }
            }
        }
        let dist = g.root_distances();
        let mut sphere = vec![[0u32; 2]; n];
        if let (Some(dist), Some(root)) = (&dist, g.root()) {
            flags[root] |= ROOT;
            let inner = inner_radius(g, dist);
            for v in 0..n {
                if dist[v] <= inner && g.forced(v).is_none() {
                    flags[v] |= INNER;
                }
                if let Some((r1, r2)) = radii {
                    if g.forced(v).is_none() {
                        sphere[v] = [(dist[v] == r1) as u32, (dist[v] == r2) as u32];
                    }
                }
            }
        }
        let cross_mask = if sides.is_some() { SIDE_A | SIDE_B } else { ROOT | BOUNDARY };
        let forced_open = (0..n).filter(|&v| g.forced(v) == Some(true)).collect();
        Prepared {
            flags,
            cross_mask,
            sphere,
            free: g.free_vertices(),
            forced_open,
            root: g.root(),
            periodic: g.is_periodic(),
        }
    }

    pub fn supports(&self, g: &SiteGraph, observable: Observable) -> Result<(), PercolationError> {
        let unsupported = |reason: &str| {
            Err(PercolationError::UnsupportedObservable {
                observable,
                reason: reason.to_string(),
            })
        };
        match observable {
            Observable::WrapProbability if !self.periodic => unsupported("a graph without torus lifts"),
            Observable::CrossProbability if g.sides().is_none() && (self.root.is_none() || !g.has_boundary()) => {
                unsupported("a graph without sides, root or boundary")
            }
            Observable::BoundaryClusterCount if self.root.is_none() || !g.has_boundary() => {
                unsupported("a graph without root or boundary")
            }
            _ => Ok(()),
        }
    }
}

/// Radius of the inner ball: half the smallest root distance to the boundary.
pub(crate) fn inner_radius(g: &SiteGraph, dist: &[usize]) -> usize {
    let r = (0..g.vertex_count())
        .filter(|&v| g.is_boundary(v) && g.forced(v).is_none())
        .map(|v| dist[v])
        .min()
        .unwrap_or(0);
    r / 2
}

pub(crate) struct Engine<'a> {
    g: &'a SiteGraph,
    prep: &'a Prepared,
    dsu: DisplacementDsu,
    occupied: Vec<bool>,
    flags: Vec<u8>,
    sphere: Vec<[u32; 2]>,
    pub max_size: u32,
    /// Clusters holding both an inner and a boundary vertex.
    pub inner_boundary: u32,
    pub wrapped: bool,
    pub crossed: bool,
}

fn joins(flags: u8) -> bool {
    flags & (INNER | BOUNDARY) == (INNER | BOUNDARY)
}

impl<'a> Engine<'a> {
    pub fn new(g: &'a SiteGraph, prep: &'a Prepared) -> Self {
        let n = g.vertex_count();
        Engine {
            g,
            prep,
            dsu: DisplacementDsu::new(n),
            occupied: vec![false; n],
            flags: vec![0; n],
            sphere: vec![[0; 2]; n],
            max_size: 0,
            inner_boundary: 0,
            wrapped: false,
            crossed: false,
        }
    }

    pub fn reset(&mut self) {
        self.dsu = DisplacementDsu::new(self.g.vertex_count());
        self.occupied.iter_mut().for_each(|o| *o = false);
        self.max_size = 0;
        self.inner_boundary = 0;
        self.wrapped = false;
        self.crossed = false;
    }

    pub fn activate(&mut self, v: VertexId) {
        self.occupied[v] = true;
        self.flags[v] = self.prep.flags[v];
        self.sphere[v] = self.prep.sphere[v];
        self.max_size = self.max_size.max(1);
        if joins(self.flags[v]) {
            self.inner_boundary += 1;
        }
        for (w, lift) in self.g.neighbors(v) {
            if !self.occupied[w] {
                continue;
            }
            match self.dsu.union(v, w, lift) {
                Union::Merged { root, absorbed } => {
                    let before = joins(self.flags[root]) as u32 + joins(self.flags[absorbed]) as u32;
                    self.flags[root] |= self.flags[absorbed];
                    let [a, b] = self.sphere[absorbed];
                    self.sphere[root][0] += a;
                    self.sphere[root][1] += b;
                    self.inner_boundary = self.inner_boundary + joins(self.flags[root]) as u32 - before;
                    let size = self.dsu.size_of(root) as u32;
                    self.max_size = self.max_size.max(size);
                }
                Union::NewWrap { .. } => self.wrapped = true,
                Union::Same => {}
            }
        }
        let r = self.dsu.root(v);
        if self.flags[r] & self.prep.cross_mask == self.prep.cross_mask {
            self.crossed = true;
        }
    }

    /// Sphere counts of the root's cluster, zero while the root is closed.
    pub fn root_spheres(&mut self) -> [u32; 2] {
        match self.prep.root {
            Some(r) if self.occupied[r] => {
                let root = self.dsu.root(r);
                self.sphere[root]
            }
            _ => [0, 0],
        }
    }

    /// Roots of the open clusters that wrap, resp. join the inner ball to
    /// the boundary.
    pub fn proxy_roots(&mut self) -> Vec<usize> {
        let mut roots = Vec::new();
        for v in 0..self.g.vertex_count() {
            if !self.occupied[v] {
                continue;
            }
            let r = self.dsu.root(v);
            if r != v {
                continue;
            }
            let proxy = if self.prep.periodic { self.dsu.wraps(r) } else { joins(self.flags[r]) };
            if proxy {
                roots.push(r);
            }
        }
        roots
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilings::{generate, Family, TilingSpec};

    #[test]
    fn filling_a_torus_wraps_once_full() {
        let m = generate(&TilingSpec::torus(Family::Square, 5)).unwrap();
        let g = SiteGraph::from_map(&m);
        let prep = Prepared::new(&g, None);
        let mut e = Engine::new(&g, &prep);
        for v in 0..5 {
            e.activate(v);
        }
        assert!(e.wrapped);
        assert_eq!(e.max_size, 5);
        e.reset();
        for v in [0, 1, 2, 3] {
            e.activate(v);
        }
        assert!(!e.wrapped);
    }

    #[test]
    fn ladder_crossing() {
        let m = generate(&TilingSpec::free(Family::Ladder, 4)).unwrap();
        let g = SiteGraph::from_map(&m);
        let prep = Prepared::new(&g, None);
        let mut e = Engine::new(&g, &prep);
        for v in [0, 2, 4] {
            e.activate(v);
            assert!(!e.crossed);
        }
        e.activate(6);
        assert!(e.crossed);
    }
}
