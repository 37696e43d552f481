//! Blocking circuits on plane patches: a ball `A` around the root is cut off
//! from the boundary by closed `G2` paths exactly when an open `G1` circuit
//! surrounds it.
//!
//! Two independent computations are compared. The `G2` side is a search
//! over closed vertices. The `G1` side works in the planar hatted graph
//! `Ĝ1`: faces and non-open vertices glued by incidence form regions, and
//! an open circuit around `A` exists iff the region of `A` misses the outer
//! face. The circuit itself is traced along the boundary of the outer
//! region and checked independently.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::map::{CombinatorialMap, DartId, FaceId, VertexId};
use crate::matching::{hatted_graphs, matching_pair, FacePartition};
use crate::tilings::{ball_vertices, root_of, TilingError};

use super::{with_threads, PercolationError};

/// Precomputed data for one patch, partition and ball radius.
#[derive(Clone, Debug)]
pub struct CircuitContext {
    n: usize,
    in_a: Vec<bool>,
    a: Vec<VertexId>,
    boundary: Vec<bool>,
    g1_adj: Vec<Vec<VertexId>>,
    g2_adj: Vec<Vec<VertexId>>,
    hat: CombinatorialMap,
    face_vertices: Vec<Vec<VertexId>>,
    vertex_faces: Vec<Vec<FaceId>>,
    outer: FaceId,
}

/// Result for one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitOutcome {
    /// No path of closed vertices in `G2` joins `A` to the boundary.
    pub disconnected: bool,
    /// The region of `A` in `Ĝ1` does not reach the outer face.
    pub circuit_exists: bool,
    /// Simple cycle of open `G1` vertices outside `A` that separates `A`
    /// from the boundary in `G2`.
    pub witness: Option<Vec<VertexId>>,
}

impl CircuitOutcome {
    pub fn consistent(&self) -> bool {
        self.disconnected == self.circuit_exists && self.disconnected == self.witness.is_some()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CircuitSummary {
    /// Configurations of all patch vertices for the two-sided equivalence.
    pub configurations: u64,
    pub disconnected: u64,
    pub mismatches: u64,
    /// Configurations (with `A` closed) run through the witness search.
    pub witness_configurations: u64,
    pub witness_failures: u64,
    pub first_failure: Option<Vec<bool>>,
}

impl CircuitSummary {
    pub fn is_clean(&self) -> bool {
        self.mismatches == 0 && self.witness_failures == 0
    }
}

fn adjacency(n: usize, pairs: impl IntoIterator<Item = (VertexId, VertexId)>) -> Vec<Vec<VertexId>> {
    let mut adj = vec![Vec::new(); n];
    for (u, v) in pairs {
        if u != v && u < n && v < n {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

impl CircuitContext {
    /// `A` is the ball of radius `n` around the patch root; it must stay
    /// clear of the patch boundary.
    pub fn new(base: &CombinatorialMap, partition: &FacePartition, n: usize) -> Result<Self, PercolationError> {
        let center = root_of(base).ok_or_else(|| PercolationError::BadParameter("patch has no root".into()))?;
        let outer_base = base
            .outer_face()
            .ok_or_else(|| PercolationError::BadParameter("blocking circuits need a plane patch".into()))?;
        let vn = base.vertex_count();
        let mut boundary = vec![false; vn];
        for &v in base.boundary_vertices() {
            boundary[v] = true;
        }
        for v in base.face_vertices(outer_base) {
            boundary[v] = true;
        }
        let a = ball_vertices(base, center, n);
        if a.iter().any(|&v| boundary[v]) {
            return Err(TilingError::BallClipped { center, radius: n }.into());
        }
        let mut in_a = vec![false; vn];
        a.iter().for_each(|&v| in_a[v] = true);
        let (g1, g2) = matching_pair(base, partition)?;
        let (h1, _) = hatted_graphs(base, partition)?;
        let hat = h1.map().clone();
        let face_vertices: Vec<Vec<VertexId>> = (0..hat.face_count()).map(|f| hat.face_vertices(f)).collect();
        let mut vertex_faces = vec![Vec::new(); hat.vertex_count()];
        for (f, vs) in face_vertices.iter().enumerate() {
            for &v in vs {
                if vertex_faces[v].last() != Some(&f) {
                    vertex_faces[v].push(f);
                }
            }
        }
        let outer = hat.outer_face().expect("stellation keeps the outer face");
        Ok(CircuitContext {
            n: vn,
            in_a,
            a,
            boundary,
            g1_adj: adjacency(vn, g1.adjacency_set()),
            g2_adj: adjacency(vn, g2.adjacency_set()),
            hat,
            face_vertices,
            vertex_faces,
            outer,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn ball(&self) -> &[VertexId] {
        &self.a
    }

    /// Vertex of `Ĝ1` outside the open set: a closed patch vertex or a
    /// vertex of `A`. Facial sites are always open.
    fn blocks(&self, omega: &[bool], v: VertexId) -> bool {
        v < self.n && (self.in_a[v] || !omega[v])
    }

    /// Whether closed vertices connect `A` to the boundary in `G2`.
    fn closed_path_exists(&self, omega: &[bool]) -> bool {
        let mut seen = self.in_a.clone();
        let mut queue: VecDeque<VertexId> = self.a.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &w in &self.g2_adj[v] {
                if !seen[w] && !omega[w] {
                    if self.boundary[w] {
                        return true;
                    }
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Faces in the region of the given start cells.
    fn region(&self, omega: &[bool], start_vertices: &[VertexId], start_faces: &[FaceId]) -> Vec<bool> {
        let mut face_in = vec![false; self.face_vertices.len()];
        let mut vertex_in = vec![false; self.hat.vertex_count()];
        let mut queue: VecDeque<(bool, usize)> = VecDeque::new();
        for &v in start_vertices {
            vertex_in[v] = true;
            queue.push_back((false, v));
        }
        for &f in start_faces {
            face_in[f] = true;
            queue.push_back((true, f));
        }
        while let Some((is_face, x)) = queue.pop_front() {
            if is_face {
                for &v in &self.face_vertices[x] {
                    if !vertex_in[v] && self.blocks(omega, v) {
                        vertex_in[v] = true;
                        queue.push_back((false, v));
                    }
                }
            } else {
                for &f in &self.vertex_faces[x] {
                    if !face_in[f] {
                        face_in[f] = true;
                        queue.push_back((true, f));
                    }
                }
            }
        }
        face_in
    }

    /// Closed walks of `Ĝ1` along which faces off the outer region lie on
    /// the right and faces of the outer region on the left.
    fn boundary_walks(&self, out_region: &[bool]) -> Vec<Vec<VertexId>> {
        let hat = &self.hat;
        let inside = |d: DartId| !out_region[hat.face_of(d)];
        let on_boundary = |d: DartId| inside(d) && !inside(hat.twin(d));
        let mut used = vec![false; hat.dart_count()];
        let mut walks = Vec::new();
        for start in 0..hat.dart_count() {
            if used[start] || !on_boundary(start) {
                continue;
            }
            let mut walk = Vec::new();
            let mut d = start;
            while !used[d] {
                used[d] = true;
                walk.push(hat.origin(d));
                let mut next = hat.face_next(d);
                while inside(hat.twin(next)) {
                    next = hat.face_next(hat.twin(next));
                }
                d = next;
            }
            walks.push(walk);
        }
        walks
    }

    /// Open `G1` cycle outside `A` that leaves `A` cut off from the boundary
    /// in `G2` whatever the other states are.
    fn is_blocking_cycle(&self, omega: &[bool], cycle: &[VertexId]) -> bool {
        if cycle.len() < 3 {
            return false;
        }
        let k = cycle.len();
        for i in 0..k {
            let (u, v) = (cycle[i], cycle[(i + 1) % k]);
            if self.blocks(omega, u) || self.g1_adj[u].binary_search(&v).is_err() {
                return false;
            }
        }
        let mut seen = self.in_a.clone();
        for &v in cycle {
            seen[v] = true;
        }
        let mut queue: VecDeque<VertexId> = self.a.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &w in &self.g2_adj[v] {
                if !seen[w] {
                    if self.boundary[w] {
                        return false;
                    }
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        true
    }

    /// Drops facial sites and splits the walk at repeated vertices, keeping
    /// a piece that still blocks.
    fn simple_blocking_cycle(&self, omega: &[bool], walk: &[VertexId]) -> Option<Vec<VertexId>> {
        let mut w: Vec<VertexId> = Vec::with_capacity(walk.len());
        for &v in walk.iter().filter(|&&v| v < self.n) {
            if w.last() != Some(&v) {
                w.push(v);
            }
        }
        while w.len() > 1 && w.first() == w.last() {
            w.pop();
        }
        loop {
            let repeat = (0..w.len()).find_map(|j| w[..j].iter().position(|&u| u == w[j]).map(|i| (i, j)));
            let Some((i, j)) = repeat else {
                return self.is_blocking_cycle(omega, &w).then_some(w);
            };
            let first: Vec<VertexId> = w[i..j].to_vec();
            let second: Vec<VertexId> = w[j..].iter().chain(&w[..i]).copied().collect();
            w = if self.is_blocking_cycle(omega, &first) { first } else { second };
        }
    }
}

/// Compares the `G2` and `Ĝ1` sides for one configuration of the patch
/// vertices and extracts a circuit when `A` is cut off.
pub fn blocking_circuit_check(ctx: &CircuitContext, omega: &[bool]) -> Result<CircuitOutcome, PercolationError> {
    if omega.len() != ctx.n {
        return Err(PercolationError::BadParameter(format!(
            "{} states for {} vertices",
            omega.len(),
            ctx.n
        )));
    }
    let disconnected = !ctx.closed_path_exists(omega);
    let region_a = ctx.region(omega, &ctx.a, &[]);
    let circuit_exists = !region_a[ctx.outer];
    let witness = if circuit_exists {
        let out_region = ctx.region(omega, &[], &[ctx.outer]);
        ctx.boundary_walks(&out_region)
            .iter()
            .find_map(|walk| ctx.simple_blocking_cycle(omega, walk))
    } else {
        None
    };
    Ok(CircuitOutcome {
        disconnected,
        circuit_exists,
        witness,
    })
}

/// Bit masks for the fast enumeration.
struct Masks {
    a: u64,
    boundary: u64,
    g2: Vec<u64>,
    /// Patch vertices sharing a face of `Ĝ1` with each vertex.
    cofacial: Vec<u64>,
    outer: u64,
}

impl Masks {
    fn new(ctx: &CircuitContext) -> Self {
        let bit = |v: VertexId| 1u64 << v;
        let set = |vs: &mut dyn Iterator<Item = VertexId>| vs.fold(0u64, |m, v| m | bit(v));
        let n = ctx.n;
        let mut cofacial = vec![0u64; n];
        let mut outer = 0u64;
        for (f, vs) in ctx.face_vertices.iter().enumerate() {
            let m = set(&mut vs.iter().copied().filter(|&v| v < n));
            for &v in vs.iter().filter(|&&v| v < n) {
                cofacial[v] |= m;
            }
            if f == ctx.outer {
                outer |= m;
            }
        }
        Masks {
            a: set(&mut ctx.a.iter().copied()),
            boundary: set(&mut (0..n).filter(|&v| ctx.boundary[v])),
            g2: (0..n).map(|v| set(&mut ctx.g2_adj[v].iter().copied())).collect(),
            cofacial,
            outer,
        }
    }

    fn spread(adj: &[u64], start: u64, allowed: u64, target: u64) -> bool {
        let mut reached = start;
        let mut frontier = start;
        while frontier != 0 {
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= adj[v];
            }
            next &= allowed & !reached;
            if next & target != 0 {
                return true;
            }
            reached |= next;
            frontier = next;
        }
        false
    }

    /// `(disconnected, circuit_exists)` for the closed set `closed`.
    fn check(&self, closed: u64) -> (bool, bool) {
        let disconnected = !Self::spread(&self.g2, self.a, closed & !self.a, self.boundary);
        let circuit = !Self::spread(&self.cofacial, self.a, closed | self.a, self.outer);
        (disconnected, circuit)
    }
}

/// Runs the two-sided equivalence on every configuration of the patch
/// vertices, and the full witness search on every configuration of the
/// vertices outside `A` (the states inside `A` play no role).
pub fn exhaustive_circuit_check(ctx: &CircuitContext, threads: usize) -> Result<CircuitSummary, PercolationError> {
    let n = ctx.n;
    if n > 30 {
        return Err(PercolationError::BadParameter(format!("{n} vertices is too many to enumerate")));
    }
    let masks = Masks::new(ctx);
    let total = 1u64 << n;
    let chunk = 1u64 << 16;
    let (configurations, disconnected, mismatches, first_mismatch) = with_threads(threads, || {
        (0..total.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let mut acc = (0u64, 0u64, 0u64, None::<u64>);
                for closed in c * chunk..((c + 1) * chunk).min(total) {
                    let (d, e) = masks.check(closed);
                    acc.0 += 1;
                    acc.1 += d as u64;
                    if d != e {
                        acc.2 += 1;
                        acc.3.get_or_insert(closed);
                    }
                }
                acc
            })
            .reduce(
                || (0, 0, 0, None),
                |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3.or(b.3)),
            )
    });
    let states_of = |closed: u64| (0..n).map(|v| closed >> v & 1 == 0).collect::<Vec<bool>>();

    let free: Vec<VertexId> = (0..n).filter(|&v| !ctx.in_a[v]).collect();
    let witness_total = 1u64 << free.len();
    let (witness_configurations, witness_failures, first_witness) = with_threads(threads, || {
        (0..witness_total.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let mut acc = (0u64, 0u64, None::<Vec<bool>>);
                let mut omega = vec![false; n];
                for bits in c * chunk..((c + 1) * chunk).min(witness_total) {
                    for (i, &v) in free.iter().enumerate() {
                        omega[v] = bits >> i & 1 == 1;
                    }
                    let outcome = blocking_circuit_check(ctx, &omega).expect("state vector has the right length");
                    acc.0 += 1;
                    if !outcome.consistent() {
                        acc.1 += 1;
                        acc.2.get_or_insert_with(|| omega.clone());
                    }
                }
                acc
            })
            .reduce(|| (0, 0, None), |a, b| (a.0 + b.0, a.1 + b.1, a.2.or(b.2)))
    });
    Ok(CircuitSummary {
        configurations,
        disconnected,
        mismatches,
        witness_configurations,
        witness_failures,
        first_failure: first_mismatch.map(states_of).or(first_witness),
    })
}
