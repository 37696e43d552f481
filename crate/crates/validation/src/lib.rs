//! Reference computations that share no code with the engine: plain
//! traversals, closed forms and transfer matrices.

use std::collections::VecDeque;

use percoplane_core::graph::SiteGraph;

/// A cluster found by breadth-first search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraversalCluster {
    pub vertices: Vec<usize>,
    pub touches_boundary: bool,
    pub wraps: bool,
}

/// Same-state clusters of `states`, open and closed, each listed in order
/// of their smallest vertex. A cluster wraps when the search reaches a
/// vertex along two routes whose torus displacements differ.
pub fn traversal_clusters(g: &SiteGraph, states: &[bool]) -> (Vec<TraversalCluster>, Vec<TraversalCluster>) {
    let n = g.vertex_count();
    let mut pos: Vec<Option<[i64; 2]>> = vec![None; n];
    let (mut open, mut closed) = (Vec::new(), Vec::new());
    for s in 0..n {
        if pos[s].is_some() {
            continue;
        }
        let state = states[s];
        let mut cluster = TraversalCluster {
            vertices: Vec::new(),
            touches_boundary: false,
            wraps: false,
        };
        pos[s] = Some([0, 0]);
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            cluster.vertices.push(v);
            cluster.touches_boundary |= g.is_boundary(v);
            let pv = pos[v].unwrap();
            for (w, lift) in g.neighbors(v) {
                if states[w] != state {
                    continue;
                }
                let expected = [pv[0] + lift[0] as i64, pv[1] + lift[1] as i64];
                match pos[w] {
                    None => {
                        pos[w] = Some(expected);
                        queue.push_back(w);
                    }
                    Some(p) => cluster.wraps |= p != expected,
                }
            }
        }
        cluster.vertices.sort_unstable();
        if state {
            open.push(cluster);
        } else {
            closed.push(cluster);
        }
    }
    (open, closed)
}

/// Exact probability that site percolation with density `p` on a ladder
/// of `length` rungs has an open path from the first rung to the last.
///
/// The state after each rung records which of its two vertices are joined
/// to the first rung by open paths.
pub fn ladder_span_probability(length: usize, p: f64) -> f64 {
    let q = 1.0 - p;
    let columns = [(false, false, q * q), (true, false, p * q), (false, true, q * p), (true, true, p * p)];
    // index: bit 0 = top reached, bit 1 = bottom reached
    let mut dist = [0.0f64; 4];
    for &(a, b, w) in &columns {
        dist[a as usize | (b as usize) << 1] += w;
    }
    for _ in 1..length {
        let mut next = [0.0f64; 4];
        for (s, &mass) in dist.iter().enumerate() {
            let (x, y) = (s & 1 == 1, s & 2 == 2);
            for &(a, b, w) in &columns {
                let top = a && (x || (b && y));
                let bottom = b && (y || (a && x));
                next[top as usize | (bottom as usize) << 1] += mass * w;
            }
        }
        dist = next;
    }
    1.0 - dist[0]
}

/// Expected number of vertices at distance `r` from the root of a
/// `degree`-regular tree that are joined to the root by open paths.
pub fn tree_sphere_expectation(degree: usize, p: f64, r: u32) -> f64 {
    if r == 0 {
        return p;
    }
    let sphere = degree as f64 * ((degree - 1) as f64).powi(r as i32 - 1);
    sphere * p.powi(r as i32 + 1)
}

/// Edges and sphere size of the radius-`r` ball of the square lattice:
/// `4r²` edges and `4r` vertices at distance `r`.
pub fn square_ball_counts(r: usize) -> (usize, usize) {
    (4 * r * r, 4 * r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_extremes() {
        assert_eq!(ladder_span_probability(10, 1.0), 1.0);
        assert_eq!(ladder_span_probability(10, 0.0), 0.0);
        // one rung: spans iff some vertex is open
        assert!((ladder_span_probability(1, 0.5) - 0.75).abs() < 1e-15);
        // two rungs by enumeration: (1 - q^2)^2 minus the two crossed patterns
        let p: f64 = 0.3;
        let q = 1.0 - p;
        let expected = (1.0 - q * q).powi(2) - 2.0 * (p * q) * (q * p);
        assert!((ladder_span_probability(2, p) - expected).abs() < 1e-15);
    }

    #[test]
    fn tree_expectation_ratio() {
        let ratio = tree_sphere_expectation(3, 0.5, 10) / tree_sphere_expectation(3, 0.5, 5);
        assert!((ratio - 1.0).abs() < 1e-12);
    }
}
