//! Matching graphs, matching pairs and facial-site triangulations.
//!
//! Diagonals are stored as plain edges next to the base map, because a
//! graph with diagonals is not planar in general. The hatted graphs are
//! real maps: the base map with a facial site inserted into each chosen
//! face.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::format::{self, parse_num, syntax, FormatError};
use crate::graph::SiteGraph;
use crate::map::{lift_sub, CombinatorialMap, FaceId, Lift, MapError, Surface, VertexId};

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("face {0} repeats a vertex on its boundary")]
    NonCycleFace(FaceId),
    #[error("face {0} has size >= 4 but no class")]
    PartitionIncomplete(FaceId),
    #[error("{0} is not a mosaic")]
    NotAMosaic(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceClass {
    F1,
    F2,
}

impl fmt::Display for FaceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaceClass::F1 => "1",
            FaceClass::F2 => "2",
        })
    }
}

impl FromStr for FaceClass {
    type Err = MatchingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "F1" | "f1" => Ok(FaceClass::F1),
            "2" | "F2" | "f2" => Ok(FaceClass::F2),
            _ => Err(MatchingError::InvalidPartition(format!("unknown face class `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Base,
    Diagonal,
    Facial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub kind: EdgeKind,
    /// Host face of a diagonal or facial edge.
    pub face: Option<FaceId>,
    /// Cover displacement from `u` to `v`.
    pub lift: Lift,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FacialSite {
    pub vertex: VertexId,
    pub face: FaceId,
    pub class: FaceClass,
}

/// A base map plus diagonals or facial sites.
///
/// For graphs with diagonals `map` is the base map; for hatted graphs it is
/// the stellated map, which embeds every edge. Edge `e < map.edge_count()`
/// of the graph is edge `e` of `map`; diagonals follow. Vertices
/// `0..base_vertex_count` are the base vertices and facial sites follow.
#[derive(Clone, Debug)]
pub struct AugmentedGraph {
    map: CombinatorialMap,
    base_vertex_count: usize,
    edges: Vec<AugEdge>,
    sites: Vec<FacialSite>,
}

impl AugmentedGraph {
    pub fn map(&self) -> &CombinatorialMap {
        &self.map
    }

    /// The planar map carrying every edge, if there are no diagonals.
    pub fn embedding(&self) -> Option<&CombinatorialMap> {
        (self.edges.len() == self.map.edge_count()).then_some(&self.map)
    }

    pub fn vertex_count(&self) -> usize {
        self.map.vertex_count()
    }

    pub fn base_vertex_count(&self) -> usize {
        self.base_vertex_count
    }

    pub fn edges(&self) -> &[AugEdge] {
        &self.edges
    }

    pub fn sites(&self) -> &[FacialSite] {
        &self.sites
    }

    pub fn is_site(&self, v: VertexId) -> bool {
        v >= self.base_vertex_count
    }

    pub fn site_at(&self, v: VertexId) -> Option<&FacialSite> {
        v.checked_sub(self.base_vertex_count).and_then(|i| self.sites.get(i))
    }

    pub fn diagonals(&self) -> impl Iterator<Item = &AugEdge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Diagonal)
    }

    /// Sorted vertex pairs joined by at least one edge.
    pub fn adjacency_set(&self) -> BTreeSet<(VertexId, VertexId)> {
        self.edges.iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect()
    }

    /// Edges up to orientation, keyed with their lift so that two edges
    /// between the same vertices that wrap differently stay distinct.
    pub fn edge_keys(&self) -> BTreeSet<(VertexId, VertexId, Lift)> {
        self.edges.iter().map(|e| edge_key(e.u, e.v, e.lift)).collect()
    }

    /// Graph for open-site percolation: every facial site is forced open,
    /// so connectivity through a site equals connectivity through the
    /// diagonals of its face.
    pub fn percolation_graph(&self) -> SiteGraph {
        let edges: Vec<_> = self.edges.iter().map(|e| (e.u, e.v, e.lift)).collect();
        let mut g = SiteGraph::from_edges(self.vertex_count(), &edges, self.map.surface() == Surface::Torus);
        for s in &self.sites {
            g.set_forced(s.vertex, Some(true));
        }
        g.copy_map_annotations(&self.map);
        g
    }
}

fn edge_key(u: VertexId, v: VertexId, lift: Lift) -> (VertexId, VertexId, Lift) {
    if u < v || (u == v && lift >= [0, 0]) {
        (u, v, lift)
    } else {
        (v, u, [-lift[0], -lift[1]])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionStrategy {
    AllF1,
    AllF2,
    /// Parity of the face anchor's `x + y`; even faces go to F1.
    Checkerboard,
    /// Period-3 diagonal stripes: faces whose anchor has `x ≡ y (mod 3)`
    /// go to F1.
    Diagonal3,
    /// One class per face id; `None` for faces left unassigned.
    Explicit(Vec<Option<FaceClass>>),
}

impl FromStr for PartitionStrategy {
    type Err = MatchingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-f1" => Ok(PartitionStrategy::AllF1),
            "all-f2" => Ok(PartitionStrategy::AllF2),
            "checkerboard" => Ok(PartitionStrategy::Checkerboard),
            "diagonal3" => Ok(PartitionStrategy::Diagonal3),
            _ => Err(MatchingError::InvalidPartition(format!("unknown strategy `{s}`"))),
        }
    }
}

impl fmt::Display for PartitionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionStrategy::AllF1 => "all-f1",
            PartitionStrategy::AllF2 => "all-f2",
            PartitionStrategy::Checkerboard => "checkerboard",
            PartitionStrategy::Diagonal3 => "diagonal3",
            PartitionStrategy::Explicit(_) => "explicit",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TrianglePolicy {
    /// Triangles go to F1 whatever the strategy says.
    #[default]
    AllF1,
    /// Triangles are classified like every other face.
    FollowStrategy,
}

/// Class of every interior face of a map. The outer face of a plane patch
/// has no class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FacePartition {
    classes: Vec<Option<FaceClass>>,
}

impl FacePartition {
    pub fn new(map: &CombinatorialMap, strategy: &PartitionStrategy, triangles: TrianglePolicy) -> Result<Self, MatchingError> {
        let mut classes = Vec::with_capacity(map.face_count());
        for f in map.faces() {
            if f.is_outer {
                classes.push(None);
                continue;
            }
            if f.size() == 3 && triangles == TrianglePolicy::AllF1 {
                classes.push(Some(FaceClass::F1));
                continue;
            }
            let anchor = || {
                map.face_anchor(f.id)
                    .ok_or_else(|| MatchingError::InvalidPartition(format!("{strategy} needs vertex coordinates")))
            };
            let class = match strategy {
                PartitionStrategy::AllF1 => Some(FaceClass::F1),
                PartitionStrategy::AllF2 => Some(FaceClass::F2),
                PartitionStrategy::Checkerboard => {
                    let a = anchor()?;
                    Some(if (a[0] + a[1]).rem_euclid(2) == 0 { FaceClass::F1 } else { FaceClass::F2 })
                }
                PartitionStrategy::Diagonal3 => {
                    let a = anchor()?;
                    Some(if (a[0] - a[1]).rem_euclid(3) == 0 { FaceClass::F1 } else { FaceClass::F2 })
                }
                PartitionStrategy::Explicit(list) => list.get(f.id).copied().flatten(),
            };
            classes.push(class);
        }
        let partition = FacePartition { classes };
        partition.validate(map)?;
        Ok(partition)
    }

    pub fn with_strategy(map: &CombinatorialMap, strategy: &PartitionStrategy) -> Result<Self, MatchingError> {
        Self::new(map, strategy, TrianglePolicy::default())
    }

    fn validate(&self, map: &CombinatorialMap) -> Result<(), MatchingError> {
        if self.classes.len() != map.face_count() {
            return Err(MatchingError::InvalidPartition(format!(
                "{} classes for {} faces",
                self.classes.len(),
                map.face_count()
            )));
        }
        for f in map.faces() {
            match (f.is_outer, self.classes[f.id]) {
                (true, Some(_)) => {
                    return Err(MatchingError::InvalidPartition("the outer face cannot have a class".into()));
                }
                (false, None) if f.size() >= 4 => return Err(MatchingError::PartitionIncomplete(f.id)),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn class(&self, f: FaceId) -> Option<FaceClass> {
        self.classes[f]
    }

    pub fn classes(&self) -> &[Option<FaceClass>] {
        &self.classes
    }

    pub fn faces_in(&self, class: FaceClass) -> Vec<FaceId> {
        (0..self.classes.len()).filter(|&f| self.classes[f] == Some(class)).collect()
    }

    /// `face <id> <1|2>` per classified face.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (f, c) in self.classes.iter().enumerate() {
            if let Some(c) = c {
                let _ = writeln!(out, "face {f} {c}");
            }
        }
        out
    }

    pub fn from_text(map: &CombinatorialMap, text: &str) -> Result<Self, MatchingError> {
        let mut list = vec![None; map.face_count()];
        for (i, line) in text.lines().enumerate() {
            let mut toks = line.split_whitespace();
            match toks.next() {
                None => continue,
                Some("face") => {
                    let f: usize = parse_num(toks.next(), i + 1, "face id")?;
                    let c: FaceClass = toks.next().unwrap_or("").parse()?;
                    if f >= list.len() {
                        return Err(MatchingError::InvalidPartition(format!("face {f} out of range")));
                    }
                    list[f] = Some(c);
                }
                Some(t) => return Err(syntax(i + 1, format!("unknown line tag `{t}`")).into()),
            }
        }
        Self::new(map, &PartitionStrategy::Explicit(list), TrianglePolicy::FollowStrategy)
    }
}

fn check_faces(map: &CombinatorialMap) -> Result<(), MatchingError> {
    for f in map.faces() {
        if !f.is_outer && !map.face_is_cycle(f.id) {
            return Err(MatchingError::NonCycleFace(f.id));
        }
    }
    Ok(())
}

fn check_mosaic(map: &CombinatorialMap) -> Result<(), MatchingError> {
    if let Some(family) = map.meta_value("family") {
        if family == "ladder" || family.starts_with("tree") {
            return Err(MatchingError::NotAMosaic(family.to_string()));
        }
    }
    check_faces(map)
}

fn base_edges(map: &CombinatorialMap) -> Vec<AugEdge> {
    (0..map.edge_count())
        .map(|e| {
            let d = map.edge_dart(e);
            AugEdge {
                u: map.origin(d),
                v: map.target(d),
                kind: EdgeKind::Base,
                face: None,
                lift: map.lift(d),
            }
        })
        .collect()
}

/// Every non-consecutive vertex pair on the walk of face `f`.
fn face_diagonals(map: &CombinatorialMap, f: FaceId) -> Vec<AugEdge> {
    let vs = map.face_vertices(f);
    let pos = map.face_positions(f);
    let k = vs.len();
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 2..k {
            if i == 0 && j == k - 1 {
                continue;
            }
            out.push(AugEdge {
                u: vs[i],
                v: vs[j],
                kind: EdgeKind::Diagonal,
                face: Some(f),
                lift: lift_sub(pos[j], pos[i]),
            });
        }
    }
    out
}

fn with_diagonals(map: &CombinatorialMap, faces: &[FaceId]) -> AugmentedGraph {
    let mut edges = base_edges(map);
    let mut seen: BTreeSet<_> = edges.iter().map(|e| edge_key(e.u, e.v, e.lift)).collect();
    for &f in faces {
        for d in face_diagonals(map, f) {
            if seen.insert(edge_key(d.u, d.v, d.lift)) {
                edges.push(d);
            }
        }
    }
    AugmentedGraph {
        map: map.clone(),
        base_vertex_count: map.vertex_count(),
        edges,
        sites: Vec::new(),
    }
}

/// The matching graph: all diagonals of every interior face.
pub fn matching_graph(map: &CombinatorialMap) -> Result<AugmentedGraph, MatchingError> {
    check_faces(map)?;
    let faces: Vec<FaceId> = map.faces().iter().filter(|f| !f.is_outer).map(|f| f.id).collect();
    Ok(with_diagonals(map, &faces))
}

/// `(G1, G2)`: the base map plus the diagonals of the F1 faces, resp. F2 faces.
pub fn matching_pair(
    map: &CombinatorialMap,
    partition: &FacePartition,
) -> Result<(AugmentedGraph, AugmentedGraph), MatchingError> {
    check_mosaic(map)?;
    partition.validate(map)?;
    Ok((
        with_diagonals(map, &partition.faces_in(FaceClass::F1)),
        with_diagonals(map, &partition.faces_in(FaceClass::F2)),
    ))
}

fn stellated(map: &CombinatorialMap, faces: &[FaceId], class_of: impl Fn(FaceId) -> FaceClass) -> Result<AugmentedGraph, MatchingError> {
    let (mut embedded, site_ids) = map.stellate(faces)?;
    let base_vertex_count = map.vertex_count();
    let sites: Vec<FacialSite> = faces
        .iter()
        .zip(&site_ids)
        .map(|(&face, &vertex)| FacialSite {
            vertex,
            face,
            class: class_of(face),
        })
        .collect();
    let edges = edges_of_embedding(&embedded, base_vertex_count, &sites);
    embedded.set_meta("sites", sites.len().to_string());
    Ok(AugmentedGraph {
        map: embedded,
        base_vertex_count,
        edges,
        sites,
    })
}

fn edges_of_embedding(map: &CombinatorialMap, base_vertex_count: usize, sites: &[FacialSite]) -> Vec<AugEdge> {
    base_edges(map)
        .into_iter()
        .map(|mut e| {
            let s = if e.u >= base_vertex_count { Some(e.u) } else if e.v >= base_vertex_count { Some(e.v) } else { None };
            if let Some(s) = s {
                e.kind = EdgeKind::Facial;
                e.face = Some(sites[s - base_vertex_count].face);
            }
            e
        })
        .collect()
}

/// The triangulation obtained by putting a facial site into every interior
/// face, triangles included. Sites are tagged F1.
pub fn facial_triangulation(map: &CombinatorialMap) -> Result<AugmentedGraph, MatchingError> {
    check_faces(map)?;
    let faces: Vec<FaceId> = map.faces().iter().filter(|f| !f.is_outer).map(|f| f.id).collect();
    stellated(map, &faces, |_| FaceClass::F1)
}

/// `(Ĝ1, Ĝ2)`: the base map with the facial sites of the F1 faces, resp.
/// the F2 faces.
pub fn hatted_graphs(
    map: &CombinatorialMap,
    partition: &FacePartition,
) -> Result<(AugmentedGraph, AugmentedGraph), MatchingError> {
    check_mosaic(map)?;
    partition.validate(map)?;
    let g1 = stellated(map, &partition.faces_in(FaceClass::F1), |_| FaceClass::F1)?;
    let g2 = stellated(map, &partition.faces_in(FaceClass::F2), |_| FaceClass::F2)?;
    Ok((g1, g2))
}

/// Exchange format of the map followed by `diag <u> <v> <face>` and
/// `site <id> <face> <class>` lines.
pub fn write_augmented(g: &AugmentedGraph) -> String {
    let mut out = String::new();
    format::write_map_into(&g.map, &mut out);
    for e in g.diagonals() {
        let _ = writeln!(out, "diag {} {} {}", e.u, e.v, e.face.expect("diagonal has a face"));
    }
    for s in &g.sites {
        let _ = writeln!(out, "site {} {} {}", s.vertex, s.face, s.class);
    }
    out
}

pub fn read_augmented(text: &str) -> Result<AugmentedGraph, MatchingError> {
    let mut diags: Vec<(VertexId, VertexId, FaceId)> = Vec::new();
    let mut raw_sites: Vec<(VertexId, FaceId, FaceClass)> = Vec::new();
    let mut bad_class = None;
    let map = format::read_map_with(text, |ln, tag, toks| {
        match tag {
            "diag" => diags.push((
                parse_num(toks.next(), ln, "vertex")?,
                parse_num(toks.next(), ln, "vertex")?,
                parse_num(toks.next(), ln, "face")?,
            )),
            "site" => {
                let v = parse_num(toks.next(), ln, "vertex")?;
                let f = parse_num(toks.next(), ln, "face")?;
                let c = toks.next().unwrap_or("");
                match c.parse() {
                    Ok(c) => raw_sites.push((v, f, c)),
                    Err(_) => bad_class = Some(ln),
                }
            }
            _ => return Err(syntax(ln, format!("unknown line tag `{tag}`"))),
        }
        Ok(())
    })?;
    if let Some(ln) = bad_class {
        return Err(syntax(ln, "bad site class").into());
    }
    if !diags.is_empty() && !raw_sites.is_empty() {
        return Err(MatchingError::InvalidPartition("a graph cannot have both diagonals and sites".into()));
    }
    let base_vertex_count = map.vertex_count() - raw_sites.len();
    let sites: Vec<FacialSite> = raw_sites
        .iter()
        .enumerate()
        .map(|(i, &(vertex, face, class))| {
            if vertex != base_vertex_count + i {
                Err(MatchingError::InvalidPartition(format!("site {vertex} out of order")))
            } else {
                Ok(FacialSite { vertex, face, class })
            }
        })
        .collect::<Result<_, _>>()?;
    let mut edges = edges_of_embedding(&map, base_vertex_count, &sites);
    let mut positions: BTreeMap<FaceId, BTreeMap<VertexId, Lift>> = BTreeMap::new();
    for (u, v, f) in diags {
        if f >= map.face_count() {
            return Err(MatchingError::InvalidPartition(format!("diagonal face {f} out of range")));
        }
        let pos = positions.entry(f).or_insert_with(|| {
            map.face_vertices(f).into_iter().zip(map.face_positions(f)).collect()
        });
        let (Some(&pu), Some(&pv)) = (pos.get(&u), pos.get(&v)) else {
            return Err(MatchingError::InvalidPartition(format!("diagonal {u}-{v} not on face {f}")));
        };
        edges.push(AugEdge {
            u,
            v,
            kind: EdgeKind::Diagonal,
            face: Some(f),
            lift: lift_sub(pv, pu),
        });
    }
    Ok(AugmentedGraph {
        map,
        base_vertex_count,
        edges,
        sites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilings::{generate, Family, TilingSpec};

    fn single_face(k: usize) -> CombinatorialMap {
        let inner: Vec<usize> = (0..k).collect();
        let outer: Vec<usize> = (0..k).rev().collect();
        CombinatorialMap::from_face_cycles(k, &[inner, outer], Surface::PlanePatch, Some(1)).unwrap()
    }

    #[test]
    fn diagonal_counts_per_face() {
        for (k, expected) in [(3, 0), (4, 2), (5, 5), (6, 9)] {
            let g = matching_graph(&single_face(k)).unwrap();
            assert_eq!(g.diagonals().count(), expected);
            assert_eq!(g.diagonals().count(), k * (k - 3) / 2);
        }
    }

    #[test]
    fn facial_site_in_one_face() {
        let m = single_face(4);
        let t = facial_triangulation(&m).unwrap();
        assert_eq!(t.sites().len(), 1);
        assert_eq!(t.edges().iter().filter(|e| e.kind == EdgeKind::Facial).count(), 4);
        let emb = t.embedding().unwrap();
        assert_eq!(emb.faces().iter().filter(|f| !f.is_outer && f.size() == 3).count(), 4);
        let tri = facial_triangulation(&single_face(3)).unwrap();
        assert_eq!(tri.sites().len(), 1);
        assert_eq!(tri.edges().len(), 6);
    }

    #[test]
    fn square_torus_sites() {
        let m = generate(&TilingSpec::torus(Family::Square, 3)).unwrap();
        let t = facial_triangulation(&m).unwrap();
        assert_eq!(t.vertex_count(), 18);
        assert_eq!(t.embedding().unwrap().euler_characteristic(), 0);
    }

    #[test]
    fn checkerboard_halves_the_faces() {
        let m = generate(&TilingSpec::torus(Family::Square, 4)).unwrap();
        let p = FacePartition::with_strategy(&m, &PartitionStrategy::Checkerboard).unwrap();
        let (g1, g2) = hatted_graphs(&m, &p).unwrap();
        assert_eq!(g1.sites().len(), 8);
        assert_eq!(g2.sites().len(), 8);
    }

    #[test]
    fn pair_edge_sets() {
        let m = generate(&TilingSpec::torus(Family::Square, 6)).unwrap();
        let star = matching_graph(&m).unwrap().edge_keys();
        let base = with_diagonals(&m, &[]).edge_keys();
        for strategy in [PartitionStrategy::AllF1, PartitionStrategy::Checkerboard, PartitionStrategy::Diagonal3] {
            let p = FacePartition::with_strategy(&m, &strategy).unwrap();
            let (g1, g2) = matching_pair(&m, &p).unwrap();
            let (e1, e2) = (g1.edge_keys(), g2.edge_keys());
            assert_eq!(e1.intersection(&e2).copied().collect::<BTreeSet<_>>(), base);
            assert_eq!(e1.union(&e2).copied().collect::<BTreeSet<_>>(), star);
        }
    }

    #[test]
    fn trees_and_ladders_are_rejected() {
        let ladder = generate(&TilingSpec::free(Family::Ladder, 4)).unwrap();
        let p = FacePartition::with_strategy(&ladder, &PartitionStrategy::AllF1).unwrap();
        assert!(matches!(matching_pair(&ladder, &p), Err(MatchingError::NotAMosaic(_))));
    }

    #[test]
    fn incomplete_partition() {
        let m = generate(&TilingSpec::torus(Family::Square, 3)).unwrap();
        let mut list = vec![Some(FaceClass::F1); m.face_count()];
        list[4] = None;
        let err = FacePartition::with_strategy(&m, &PartitionStrategy::Explicit(list)).unwrap_err();
        assert!(matches!(err, MatchingError::PartitionIncomplete(4)));
    }

    #[test]
    fn augmented_format_round_trips() {
        let m = generate(&TilingSpec::torus(Family::Square, 3)).unwrap();
        let p = FacePartition::with_strategy(&m, &PartitionStrategy::Checkerboard).unwrap();
        let (g1, _) = matching_pair(&m, &p).unwrap();
        let (h1, _) = hatted_graphs(&m, &p).unwrap();
        for g in [g1, h1] {
            let text = write_augmented(&g);
            let back = read_augmented(&text).unwrap();
            assert_eq!(back.edges(), g.edges());
            assert_eq!(back.sites(), g.sites());
            assert_eq!(write_augmented(&back), text);
        }
    }

    #[test]
    fn partition_text_round_trips() {
        let m = generate(&TilingSpec::torus(Family::Square, 3)).unwrap();
        let p = FacePartition::with_strategy(&m, &PartitionStrategy::Diagonal3).unwrap();
        assert_eq!(p.faces_in(FaceClass::F1).len(), 3);
        let q = FacePartition::from_text(&m, &p.to_text()).unwrap();
        assert_eq!(p, q);
    }
}
