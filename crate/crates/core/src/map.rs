//! Half-edge (dart) combinatorial maps.
//!
//! A map is a set of darts with three pieces of data: the origin vertex of
//! each dart, the `rotation` permutation (next dart counterclockwise around
//! the same origin) and the `twin` involution pairing the two halves of an
//! edge.
//!
//! Faces are the orbits of `rotation ∘ twin`: from dart `u → v` we jump to
//! `v → u` and rotate counterclockwise around `v`. With a counterclockwise
//! rotation this walks each face clockwise, i.e. with the face on the right
//! of every dart. Every module in this crate uses this convention.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

pub type VertexId = usize;
pub type DartId = usize;
pub type FaceId = usize;
pub type EdgeId = usize;

/// Integer displacement in the universal cover of a torus.
pub type Lift = [i32; 2];

pub(crate) fn lift_add(a: Lift, b: Lift) -> Lift {
    [a[0] + b[0], a[1] + b[1]]
}

pub(crate) fn lift_neg(a: Lift) -> Lift {
    [-a[0], -a[1]]
}

pub(crate) fn lift_sub(a: Lift, b: Lift) -> Lift {
    [a[0] - b[0], a[1] - b[1]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Surface {
    /// Finite patch of the plane (or sphere); one face may be flagged outer.
    PlanePatch,
    Torus,
}

impl Surface {
    pub fn euler_characteristic(self) -> i64 {
        match self {
            Surface::PlanePatch => 2,
            Surface::Torus => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Surface::PlanePatch => "plane",
            Surface::Torus => "torus",
        }
    }

    pub fn parse(s: &str) -> Option<Surface> {
        match s {
            "plane" => Some(Surface::PlanePatch),
            "torus" => Some(Surface::Torus),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("malformed permutation: {0}")]
    MalformedPermutation(String),
    #[error("euler characteristic {found} does not match {surface:?} (expected {expected})")]
    EulerMismatch {
        surface: Surface,
        found: i64,
        expected: i64,
    },
    #[error("non-orientable or inconsistent walk: {0}")]
    NonOrientable(String),
    #[error("face {0} cannot be subdivided")]
    BadFace(FaceId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub id: FaceId,
    /// Boundary walk, each dart followed by `rotation(twin(dart))`.
    pub darts: Vec<DartId>,
    pub is_outer: bool,
}

impl Face {
    pub fn size(&self) -> usize {
        self.darts.len()
    }
}

/// Raw permutation data accepted by [`CombinatorialMap::build`].
#[derive(Clone, Debug, Default)]
pub struct MapParts {
    pub vertex_count: usize,
    pub origin: Vec<VertexId>,
    pub rotation: Vec<DartId>,
    pub twin: Vec<DartId>,
    pub outer_dart: Option<DartId>,
    pub boundary: Vec<VertexId>,
    pub coords: Option<Vec<Lift>>,
    pub lifts: Option<Vec<Lift>>,
    pub meta: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinatorialMap {
    vertex_count: usize,
    origin: Vec<VertexId>,
    rotation: Vec<DartId>,
    rotation_inv: Vec<DartId>,
    twin: Vec<DartId>,
    surface: Surface,
    boundary: Vec<VertexId>,
    outer_dart: Option<DartId>,
    coords: Option<Vec<Lift>>,
    lifts: Option<Vec<Lift>>,
    meta: BTreeMap<String, String>,
    // derived
    face_of: Vec<FaceId>,
    faces: Vec<Face>,
    vertex_darts: Vec<Vec<DartId>>,
    edge_of: Vec<EdgeId>,
    edge_darts: Vec<DartId>,
}

impl CombinatorialMap {
    /// Validates the permutations and computes faces.
    pub fn build(parts: MapParts, surface: Surface) -> Result<Self, MapError> {
        let MapParts {
            vertex_count,
            origin,
            rotation,
            twin,
            outer_dart,
            boundary,
            coords,
            lifts,
            meta,
        } = parts;
        let darts = origin.len();
        if rotation.len() != darts || twin.len() != darts {
            return Err(MapError::MalformedPermutation(format!(
                "length mismatch: {} origins, {} rotation entries, {} twin entries",
                darts,
                rotation.len(),
                twin.len()
            )));
        }
        if darts % 2 != 0 {
            return Err(MapError::MalformedPermutation(format!("odd dart count {darts}")));
        }
        for (d, &v) in origin.iter().enumerate() {
            if v >= vertex_count {
                return Err(MapError::MalformedPermutation(format!(
                    "dart {d} has origin {v} outside 0..{vertex_count}"
                )));
            }
        }
        for (d, &t) in twin.iter().enumerate() {
            if t >= darts || t == d || twin[t] != d {
                return Err(MapError::MalformedPermutation(format!(
                    "twin is not a fixed-point-free involution at dart {d}"
                )));
            }
        }
        let mut rotation_inv = vec![usize::MAX; darts];
        for (d, &r) in rotation.iter().enumerate() {
            if r >= darts || rotation_inv[r] != usize::MAX {
                return Err(MapError::MalformedPermutation(format!(
                    "rotation is not a bijection at dart {d}"
                )));
            }
            if origin[r] != origin[d] {
                return Err(MapError::MalformedPermutation(format!(
                    "rotation moves dart {d} to a different vertex"
                )));
            }
            rotation_inv[r] = d;
        }

        // one rotation cycle per vertex
        let mut vertex_darts: Vec<Vec<DartId>> = vec![Vec::new(); vertex_count];
        let mut seen = vec![false; darts];
        for d in 0..darts {
            if seen[d] {
                continue;
            }
            let v = origin[d];
            if !vertex_darts[v].is_empty() {
                return Err(MapError::MalformedPermutation(format!(
                    "vertex {v} has more than one rotation cycle"
                )));
            }
            let mut cur = d;
            loop {
                seen[cur] = true;
                vertex_darts[v].push(cur);
                cur = rotation[cur];
                if cur == d {
                    break;
                }
            }
        }
        if let Some(v) = vertex_darts.iter().position(Vec::is_empty) {
            return Err(MapError::MalformedPermutation(format!("vertex {v} has no darts")));
        }

        let mut face_of = vec![usize::MAX; darts];
        let mut faces = Vec::new();
        for d in 0..darts {
            if face_of[d] != usize::MAX {
                continue;
            }
            let id = faces.len();
            let mut walk = Vec::new();
            let mut cur = d;
            loop {
                face_of[cur] = id;
                walk.push(cur);
                cur = rotation[twin[cur]];
                if cur == d {
                    break;
                }
            }
            faces.push(Face {
                id,
                darts: walk,
                is_outer: false,
            });
        }

        let mut edge_of = vec![usize::MAX; darts];
        let mut edge_darts = Vec::with_capacity(darts / 2);
        for d in 0..darts {
            if d < twin[d] {
                edge_of[d] = edge_darts.len();
                edge_of[twin[d]] = edge_darts.len();
                edge_darts.push(d);
            }
        }

        let chi = vertex_count as i64 - edge_darts.len() as i64 + faces.len() as i64;
        if chi != surface.euler_characteristic() {
            return Err(MapError::EulerMismatch {
                surface,
                found: chi,
                expected: surface.euler_characteristic(),
            });
        }

        if let Some(l) = &lifts {
            if l.len() != darts {
                return Err(MapError::NonOrientable("lift table length mismatch".into()));
            }
            for d in 0..darts {
                if l[twin[d]] != lift_neg(l[d]) {
                    return Err(MapError::NonOrientable(format!(
                        "lift of dart {d} is not the negated lift of its twin"
                    )));
                }
            }
            for f in &faces {
                let total = f.darts.iter().fold([0, 0], |acc, &d| lift_add(acc, l[d]));
                if total != [0, 0] {
                    return Err(MapError::NonOrientable(format!(
                        "face {} winds {:?} around the torus",
                        f.id, total
                    )));
                }
            }
        }
        if let Some(c) = &coords {
            if c.len() != vertex_count {
                return Err(MapError::MalformedPermutation("coordinate table length mismatch".into()));
            }
        }

        let mut outer_dart = outer_dart;
        if surface == Surface::Torus {
            outer_dart = None;
        }
        if let Some(o) = outer_dart {
            if o >= darts {
                return Err(MapError::MalformedPermutation(format!("outer dart {o} out of range")));
            }
            faces[face_of[o]].is_outer = true;
        }

        let mut boundary = boundary;
        boundary.sort_unstable();
        boundary.dedup();
        if boundary.iter().any(|&v| v >= vertex_count) {
            return Err(MapError::MalformedPermutation("boundary vertex out of range".into()));
        }

        Ok(CombinatorialMap {
            vertex_count,
            origin,
            rotation,
            rotation_inv,
            twin,
            surface,
            boundary,
            outer_dart,
            coords,
            lifts,
            meta,
            face_of,
            faces,
            vertex_darts,
            edge_of,
            edge_darts,
        })
    }

    /// Builds a map from counterclockwise face cycles covering a closed
    /// surface (include the outer face, listed clockwise, for a plane patch).
    /// The graph must be simple. Darts are numbered vertex by vertex in
    /// rotation order, so equal inputs give equal ids.
    pub fn from_face_cycles(
        vertex_count: usize,
        cycles: &[Vec<VertexId>],
        surface: Surface,
        outer_cycle: Option<usize>,
    ) -> Result<Self, MapError> {
        // at corner w -> u -> v of a ccw face, the ccw successor of u->v is u->w
        let mut succ: Vec<BTreeMap<VertexId, VertexId>> = vec![BTreeMap::new(); vertex_count];
        for cycle in cycles {
            let k = cycle.len();
            if k < 2 {
                return Err(MapError::MalformedPermutation("face cycle shorter than 2".into()));
            }
            for i in 0..k {
                let w = cycle[(i + k - 1) % k];
                let u = cycle[i];
                let v = cycle[(i + 1) % k];
                if u >= vertex_count || v >= vertex_count || w >= vertex_count {
                    return Err(MapError::MalformedPermutation("face vertex out of range".into()));
                }
                if succ[u].insert(v, w).is_some() {
                    return Err(MapError::MalformedPermutation(format!(
                        "directed edge {u}->{v} appears in two faces"
                    )));
                }
            }
        }
        let mut origin = Vec::new();
        let mut order: Vec<Vec<VertexId>> = vec![Vec::new(); vertex_count];
        let mut dart_index: HashMap<(VertexId, VertexId), DartId> = HashMap::new();
        for u in 0..vertex_count {
            let Some((&start, _)) = succ[u].iter().next() else {
                return Err(MapError::MalformedPermutation(format!("vertex {u} has no darts")));
            };
            let mut cur = start;
            loop {
                order[u].push(cur);
                dart_index.insert((u, cur), origin.len());
                origin.push(u);
                cur = *succ[u].get(&cur).ok_or_else(|| {
                    MapError::MalformedPermutation(format!("rotation around {u} is not closed"))
                })?;
                if cur == start {
                    break;
                }
                if order[u].len() > succ[u].len() {
                    return Err(MapError::MalformedPermutation(format!("rotation around {u} loops")));
                }
            }
            if order[u].len() != succ[u].len() {
                return Err(MapError::MalformedPermutation(format!(
                    "vertex {u} has more than one rotation cycle"
                )));
            }
        }
        let darts = origin.len();
        let mut rotation = vec![0; darts];
        let mut twin = vec![0; darts];
        for u in 0..vertex_count {
            let k = order[u].len();
            for i in 0..k {
                let d = dart_index[&(u, order[u][i])];
                rotation[d] = dart_index[&(u, order[u][(i + 1) % k])];
                twin[d] = *dart_index.get(&(order[u][i], u)).ok_or_else(|| {
                    MapError::MalformedPermutation(format!("edge {u}->{} has no reverse", order[u][i]))
                })?;
            }
        }
        // The outer cycle is listed clockwise, so its reversed edges are the outer face darts.
        let outer_dart = outer_cycle.map(|i| {
            let c = &cycles[i];
            dart_index[&(c[0], c[1])]
        });
        // A ccw face contains dart v->u for each of its edges u->v (face on the right).
        let outer_dart = outer_dart.map(|d| twin[d]);
        Self::build(
            MapParts {
                vertex_count,
                origin,
                rotation,
                twin,
                outer_dart,
                ..MapParts::default()
            },
            surface,
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn dart_count(&self) -> usize {
        self.origin.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_darts.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn surface(&self) -> Surface {
        self.surface
    }

    pub fn origin(&self, d: DartId) -> VertexId {
        self.origin[d]
    }

    pub fn target(&self, d: DartId) -> VertexId {
        self.origin[self.twin[d]]
    }

    pub fn twin(&self, d: DartId) -> DartId {
        self.twin[d]
    }

    pub fn rotation(&self, d: DartId) -> DartId {
        self.rotation[d]
    }

    pub fn rotation_inv(&self, d: DartId) -> DartId {
        self.rotation_inv[d]
    }

    /// Next dart along the face to the right of `d`.
    pub fn face_next(&self, d: DartId) -> DartId {
        self.rotation[self.twin[d]]
    }

    pub fn face_of(&self, d: DartId) -> FaceId {
        self.face_of[d]
    }

    pub fn edge_of(&self, d: DartId) -> EdgeId {
        self.edge_of[d]
    }

    /// Canonical dart of an edge (the smaller of the two ids).
    pub fn edge_dart(&self, e: EdgeId) -> DartId {
        self.edge_darts[e]
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let d = self.edge_darts[e];
        (self.origin[d], self.target(d))
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: FaceId) -> &Face {
        &self.faces[f]
    }

    pub fn outer_face(&self) -> Option<FaceId> {
        self.outer_dart.map(|d| self.face_of[d])
    }

    pub fn outer_dart(&self) -> Option<DartId> {
        self.outer_dart
    }

    /// Darts leaving `v` in counterclockwise order.
    pub fn vertex_darts(&self, v: VertexId) -> &[DartId] {
        &self.vertex_darts[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.vertex_darts[v].len()
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_darts[v].iter().map(move |&d| self.target(d))
    }

    pub fn boundary_vertices(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn set_boundary(&mut self, mut boundary: Vec<VertexId>) {
        boundary.sort_unstable();
        boundary.dedup();
        self.boundary = boundary;
    }

    pub fn coords(&self) -> Option<&[Lift]> {
        self.coords.as_deref()
    }

    pub fn set_coords(&mut self, coords: Vec<Lift>) {
        assert_eq!(coords.len(), self.vertex_count);
        self.coords = Some(coords);
    }

    pub fn lifts(&self) -> Option<&[Lift]> {
        self.lifts.as_deref()
    }

    pub fn lift(&self, d: DartId) -> Lift {
        self.lifts.as_ref().map_or([0, 0], |l| l[d])
    }

    /// Installs torus lifts; rejects tables inconsistent with the faces.
    pub fn set_lifts(&mut self, lifts: Vec<Lift>) -> Result<(), MapError> {
        let mut parts = self.to_parts();
        parts.lifts = Some(lifts);
        *self = Self::build(parts, self.surface)?;
        Ok(())
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// Vertex sequence of a face walk (origins of its darts).
    pub fn face_vertices(&self, f: FaceId) -> Vec<VertexId> {
        self.faces[f].darts.iter().map(|&d| self.origin[d]).collect()
    }

    /// True when no vertex repeats along the face walk.
    pub fn face_is_cycle(&self, f: FaceId) -> bool {
        let vs = self.face_vertices(f);
        let set: BTreeSet<_> = vs.iter().collect();
        set.len() == vs.len()
    }

    /// Positions of the face-walk vertices in the universal cover, relative
    /// to the origin of the first dart.
    pub fn face_positions(&self, f: FaceId) -> Vec<Lift> {
        let mut pos = [0, 0];
        let mut out = Vec::with_capacity(self.faces[f].darts.len());
        for &d in &self.faces[f].darts {
            out.push(pos);
            pos = lift_add(pos, self.lift(d));
        }
        out
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.vertex_darts[u].iter().any(|&d| self.target(d) == v)
    }

    pub fn is_simple(&self) -> bool {
        (0..self.vertex_count).all(|v| {
            let mut ns: Vec<_> = self.neighbors(v).collect();
            let k = ns.len();
            ns.sort_unstable();
            ns.dedup();
            ns.len() == k && !ns.contains(&v)
        })
    }

    pub(crate) fn to_parts(&self) -> MapParts {
        MapParts {
            vertex_count: self.vertex_count,
            origin: self.origin.clone(),
            rotation: self.rotation.clone(),
            twin: self.twin.clone(),
            outer_dart: self.outer_dart,
            boundary: self.boundary.clone(),
            coords: self.coords.clone(),
            lifts: self.lifts.clone(),
            meta: self.meta.clone(),
        }
    }

    /// Breadth-first distances from `source`; `usize::MAX` when unreachable.
    pub fn distances_from(&self, source: VertexId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Sub-map induced by `keep`. Vertices are renumbered in increasing old
    /// id. The largest face that is not a face of `self` becomes the outer
    /// face. Returns the map and the old id of every new vertex.
    pub fn induced_submap(&self, keep: &[bool]) -> Result<(CombinatorialMap, Vec<VertexId>), MapError> {
        let mut new_id = vec![usize::MAX; self.vertex_count];
        let mut old_of = Vec::new();
        for v in 0..self.vertex_count {
            if keep[v] {
                new_id[v] = old_of.len();
                old_of.push(v);
            }
        }
        let mut dart_new = vec![usize::MAX; self.dart_count()];
        let mut kept = Vec::new();
        for d in 0..self.dart_count() {
            if keep[self.origin[d]] && keep[self.target(d)] {
                dart_new[d] = kept.len();
                kept.push(d);
            }
        }
        let mut origin = Vec::with_capacity(kept.len());
        let mut rotation = Vec::with_capacity(kept.len());
        let mut twin = Vec::with_capacity(kept.len());
        let mut lifts = self.lifts.as_ref().map(|_| Vec::with_capacity(kept.len()));
        for &d in &kept {
            origin.push(new_id[self.origin[d]]);
            let mut r = self.rotation[d];
            while dart_new[r] == usize::MAX {
                r = self.rotation[r];
            }
            rotation.push(dart_new[r]);
            twin.push(dart_new[self.twin[d]]);
            if let Some(l) = lifts.as_mut() {
                l.push(self.lift(d));
            }
        }
        let coords = self
            .coords
            .as_ref()
            .map(|c| old_of.iter().map(|&v| c[v]).collect());
        let parts = MapParts {
            vertex_count: old_of.len(),
            origin,
            rotation,
            twin,
            outer_dart: None,
            boundary: Vec::new(),
            coords,
            lifts,
            meta: BTreeMap::new(),
        };
        let mut sub = Self::build(parts, Surface::PlanePatch)?;
        // faces of the parent, keyed by their sorted darts
        let parent_faces: BTreeSet<Vec<DartId>> = self
            .faces
            .iter()
            .map(|f| {
                let mut ds = f.darts.clone();
                ds.sort_unstable();
                ds
            })
            .collect();
        let mut best: Option<(usize, FaceId)> = None;
        for f in &sub.faces {
            let mut ds: Vec<DartId> = f.darts.iter().map(|&d| kept[d]).collect();
            ds.sort_unstable();
            if !parent_faces.contains(&ds) {
                let key = (f.size(), usize::MAX - f.id);
                if best.is_none_or(|(s, id)| key > (s, usize::MAX - id)) {
                    best = Some((f.size(), f.id));
                }
            }
        }
        if let Some((_, f)) = best {
            let mut parts = sub.to_parts();
            parts.outer_dart = Some(sub.faces[f].darts[0]);
            sub = Self::build(parts, Surface::PlanePatch)?;
        }
        Ok((sub, old_of))
    }

    /// Inserts a new vertex inside each listed face, joined to every corner
    /// of its walk. Returns the new map and the new vertex of each face, in
    /// the order given. New darts are appended after the existing ones.
    pub fn stellate(&self, faces: &[FaceId]) -> Result<(CombinatorialMap, Vec<VertexId>), MapError> {
        let mut parts = self.to_parts();
        let mut sites = Vec::with_capacity(faces.len());
        let mut coords = parts.coords.take();
        let mut seen = BTreeSet::new();
        for &f in faces {
            if f >= self.faces.len() || self.faces[f].is_outer || !seen.insert(f) {
                return Err(MapError::BadFace(f));
            }
            let walk = &self.faces[f].darts;
            let k = walk.len();
            let site = parts.vertex_count;
            parts.vertex_count += 1;
            sites.push(site);
            let positions = self.face_positions(f);
            let base = parts.origin.len();
            // corner i sits at target(walk[i]) = origin(walk[i+1])
            for i in 0..k {
                let d = walk[i];
                let v = self.target(d);
                let spoke = base + 2 * i;
                let back = spoke + 1;
                parts.origin.push(v);
                parts.origin.push(site);
                parts.twin.push(back);
                parts.twin.push(spoke);
                parts.rotation.push(usize::MAX);
                parts.rotation.push(usize::MAX);
                if let Some(l) = parts.lifts.as_mut() {
                    let pos_v = positions[(i + 1) % k];
                    l.push(lift_neg(pos_v));
                    l.push(pos_v);
                }
            }
            for i in 0..k {
                let spoke = base + 2 * i;
                let back = spoke + 1;
                let incoming = self.twin[walk[i]];
                let outgoing = walk[(i + 1) % k];
                // splice v->site between twin(walk[i]) and walk[i+1]
                parts.rotation[incoming] = spoke;
                parts.rotation[spoke] = outgoing;
                // around the site, counterclockwise is reverse walk order
                parts.rotation[back] = base + 2 * ((i + k - 1) % k) + 1;
            }
            if let Some(c) = coords.as_mut() {
                c.push(self.face_anchor(f).unwrap_or([0, 0]));
            }
        }
        parts.coords = coords;
        let map = Self::build(parts, self.surface)?;
        Ok((map, sites))
    }

    /// Lower-left corner of a face in vertex coordinates: the walk vertex with
    /// the smallest (y, x) position in the cover, reported in the coordinate
    /// frame of the vertex table. `None` when the map has no coordinates.
    pub fn face_anchor(&self, f: FaceId) -> Option<Lift> {
        let coords = self.coords.as_ref()?;
        let vs = self.face_vertices(f);
        let rel: Vec<Lift> = if self.lifts.is_some() {
            self.face_positions(f)
        } else {
            vs.iter().map(|&v| lift_sub(coords[v], coords[vs[0]])).collect()
        };
        let i = (0..vs.len()).min_by_key(|&i| (rel[i][1], rel[i][0]))?;
        Some(coords[vs[i]])
    }

    /// Planar dual: one vertex per face, one edge crossing each edge. Dual
    /// dart `d` crosses primal dart `d`, so edge ids coincide.
    pub fn dual(&self) -> DualMap {
        let darts = self.dart_count();
        let origin: Vec<VertexId> = self.face_of.clone();
        // counterclockwise around a face = backwards along its walk
        let rotation: Vec<DartId> = (0..darts).map(|d| self.twin[self.rotation_inv[d]]).collect();
        let twin = self.twin.clone();
        let lifts = self.lifts.as_ref().map(|_| {
            // each dual vertex sits at the first walk vertex of its face
            let mut offset = vec![[0, 0]; darts];
            for f in &self.faces {
                let pos = self.face_positions(f.id);
                for (i, &d) in f.darts.iter().enumerate() {
                    offset[d] = pos[i];
                }
            }
            (0..darts)
                .map(|d| {
                    let to_target = self.lift(d);
                    let twin = self.twin[d];
                    lift_sub(lift_add(to_target, lift_neg(offset[twin])), lift_neg(offset[d]))
                })
                .collect::<Vec<_>>()
        });
        let mut meta = BTreeMap::new();
        meta.insert("family".to_string(), "dual".to_string());
        if let Some(f) = self.outer_face() {
            meta.insert("outer_vertex".to_string(), f.to_string());
        }
        let parts = MapParts {
            vertex_count: self.faces.len(),
            origin,
            rotation,
            twin,
            outer_dart: None,
            boundary: Vec::new(),
            coords: None,
            lifts,
            meta,
        };
        let map = Self::build(parts, self.surface).expect("dual of a valid map is valid");
        DualMap {
            edge_pairing: (0..self.edge_count()).collect(),
            outer_vertex: self.outer_face(),
            map,
        }
    }
}

/// A dual map together with the primal-to-dual edge pairing.
#[derive(Clone, Debug)]
pub struct DualMap {
    pub map: CombinatorialMap,
    /// `edge_pairing[e]` is the dual edge crossing primal edge `e`.
    pub edge_pairing: Vec<EdgeId>,
    /// Dual vertex standing for the outer face of a plane patch.
    pub outer_vertex: Option<VertexId>,
}

/// Checks whether two maps have isomorphic underlying graphs under the
/// given vertex bijection (multigraph edge counts must agree).
pub fn graphs_match_under(a: &CombinatorialMap, b: &CombinatorialMap, vertex_map: &[VertexId]) -> bool {
    if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let key = |u: VertexId, v: VertexId| if u <= v { (u, v) } else { (v, u) };
    let mut ea: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    for e in 0..a.edge_count() {
        let (u, v) = a.edge_endpoints(e);
        *ea.entry(key(vertex_map[u], vertex_map[v])).or_default() += 1;
    }
    let mut eb: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    for e in 0..b.edge_count() {
        let (u, v) = b.edge_endpoints(e);
        *eb.entry(key(u, v)).or_default() += 1;
    }
    ea == eb
}

#[cfg(test)]
mod tests {
    use super::*;

    /// K4 drawn with vertex 3 in the middle of triangle 0,1,2.
    fn k4() -> CombinatorialMap {
        let cycles = vec![
            vec![0, 1, 3],
            vec![1, 2, 3],
            vec![2, 0, 3],
            vec![0, 2, 1], // outer face, clockwise
        ];
        CombinatorialMap::from_face_cycles(4, &cycles, Surface::PlanePatch, Some(3)).unwrap()
    }

    fn square_torus_2x2() -> MapParts {
        // vertex (x, y) = x + 2y; each vertex has darts E, N, W, S (ccw).
        // On a 2x2 torus E and W go to the same neighbour, so build darts by hand.
        let n = 4;
        let id = |x: usize, y: usize| (x % 2) + 2 * (y % 2);
        let mut origin = Vec::new();
        for v in 0..n {
            for _ in 0..4 {
                origin.push(v);
            }
        }
        let dart = |v: usize, dir: usize| 4 * v + dir;
        let mut rotation = vec![0; 16];
        let mut twin = vec![0; 16];
        for y in 0..2 {
            for x in 0..2 {
                let v = id(x, y);
                for dir in 0..4 {
                    rotation[dart(v, dir)] = dart(v, (dir + 1) % 4);
                }
                // E of v pairs with W of its east neighbour, N with S
                twin[dart(v, 0)] = dart(id(x + 1, y), 2);
                twin[dart(v, 2)] = dart(id(x + 1, y), 0);
                twin[dart(v, 1)] = dart(id(x, y + 1), 3);
                twin[dart(v, 3)] = dart(id(x, y + 1), 1);
            }
        }
        MapParts {
            vertex_count: n,
            origin,
            rotation,
            twin,
            ..MapParts::default()
        }
    }

    #[test]
    fn k4_counts() {
        let m = k4();
        assert_eq!((m.vertex_count(), m.edge_count(), m.face_count()), (4, 6, 4));
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.faces().iter().all(|f| f.size() == 3));
        assert_eq!(m.faces().iter().filter(|f| f.is_outer).count(), 1);
        let outer = m.outer_face().unwrap();
        let mut vs = m.face_vertices(outer);
        vs.sort();
        assert_eq!(vs, vec![0, 1, 2]);
    }

    #[test]
    fn torus_2x2() {
        let m = CombinatorialMap::build(square_torus_2x2(), Surface::Torus).unwrap();
        assert_eq!((m.vertex_count(), m.edge_count(), m.face_count()), (4, 8, 4));
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.faces().iter().all(|f| f.size() == 4));
    }

    #[test]
    fn rejects_twin_fixed_point() {
        let mut parts = square_torus_2x2();
        parts.twin[0] = 0;
        assert!(matches!(
            CombinatorialMap::build(parts, Surface::Torus),
            Err(MapError::MalformedPermutation(_))
        ));
    }

    #[test]
    fn rejects_wrong_surface() {
        assert!(matches!(
            CombinatorialMap::build(square_torus_2x2(), Surface::PlanePatch),
            Err(MapError::EulerMismatch { found: 0, .. })
        ));
    }

    #[test]
    fn rejects_rotation_across_vertices() {
        let mut parts = square_torus_2x2();
        parts.rotation.swap(0, 4);
        assert!(matches!(
            CombinatorialMap::build(parts, Surface::Torus),
            Err(MapError::MalformedPermutation(_))
        ));
    }

    #[test]
    fn single_square_face() {
        let cycles = vec![vec![0, 1, 2, 3], vec![0, 3, 2, 1]];
        let m = CombinatorialMap::from_face_cycles(4, &cycles, Surface::PlanePatch, Some(1)).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.face_count(), 2);
        assert!(m.faces().iter().all(|f| f.size() == 4));
    }

    #[test]
    fn face_walk_keeps_face_on_the_right() {
        // unit square 0=(0,0) 1=(1,0) 2=(1,1) 3=(0,1): the inner face contains 1->0
        let cycles = vec![vec![0, 1, 2, 3], vec![0, 3, 2, 1]];
        let m = CombinatorialMap::from_face_cycles(4, &cycles, Surface::PlanePatch, Some(1)).unwrap();
        let inner = (0..m.face_count()).find(|&f| !m.face(f).is_outer).unwrap();
        let d = m.face(inner).darts[0];
        let (u, v) = (m.origin(d), m.target(d));
        assert!(
            [(1, 0), (2, 1), (3, 2), (0, 3)].contains(&(u, v)),
            "inner face walked clockwise, got {u}->{v}"
        );
    }

    #[test]
    fn dual_of_k4_is_k4() {
        let m = k4();
        let d = m.dual();
        assert_eq!(d.map.vertex_count(), 4);
        assert_eq!(d.map.edge_count(), 6);
        assert_eq!(d.map.face_count(), 4);
        assert!((0..4).all(|v| d.map.degree(v) == 3));
        assert_eq!(d.outer_vertex, m.outer_face());
    }

    #[test]
    fn double_dual_reverses_darts() {
        let m = k4();
        let dd = m.dual().map.dual().map;
        // dart d of the double dual starts at the target of primal dart d
        let mut vmap = vec![usize::MAX; dd.vertex_count()];
        for d in 0..m.dart_count() {
            let w = dd.origin(d);
            assert!(vmap[w] == usize::MAX || vmap[w] == m.target(d));
            vmap[w] = m.target(d);
        }
        let mut inv = vec![0; vmap.len()];
        for (w, &v) in vmap.iter().enumerate() {
            inv[v] = w;
        }
        assert!(graphs_match_under(&m, &dd, &inv));
    }

    #[test]
    fn stellate_square() {
        let cycles = vec![vec![0, 1, 2, 3], vec![0, 3, 2, 1]];
        let m = CombinatorialMap::from_face_cycles(4, &cycles, Surface::PlanePatch, Some(1)).unwrap();
        let inner = (0..m.face_count()).find(|&f| !m.face(f).is_outer).unwrap();
        let (s, sites) = m.stellate(&[inner]).unwrap();
        assert_eq!(sites, vec![4]);
        assert_eq!(s.vertex_count(), 5);
        assert_eq!(s.edge_count(), 8);
        assert_eq!(s.degree(4), 4);
        let inner_faces: Vec<_> = s.faces().iter().filter(|f| !f.is_outer).collect();
        assert_eq!(inner_faces.len(), 4);
        assert!(inner_faces.iter().all(|f| f.size() == 3));
        assert_eq!(s.face(s.outer_face().unwrap()).size(), 4);
        assert!(m.stellate(&[m.outer_face().unwrap()]).is_err());
    }
}
