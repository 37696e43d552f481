//! Generators for the graph families used throughout the crate, plus graph
//! balls and the boundary-to-volume (Cheeger) ratio.

mod euclidean;
mod hyperbolic;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

use crate::map::{lift_add, CombinatorialMap, Lift, MapError, Surface, VertexId};

use euclidean::Lattice;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TilingError {
    #[error("{{{p},{q}}} is a spherical pair (1/p + 1/q > 1/2)")]
    SphericalPair { p: usize, q: usize },
    #[error("size too small: {0}")]
    SizeTooSmall(String),
    #[error("ball of radius {radius} around {center} reaches the edge of the generated map")]
    BallClipped { center: VertexId, radius: usize },
    #[error("vertex set is empty")]
    EmptySet,
    #[error("invalid tiling spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Square,
    Triangular,
    Hexagonal,
    Hyperbolic { p: usize, q: usize },
    Tree { degree: usize },
    Ladder,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Square => f.write_str("square"),
            Family::Triangular => f.write_str("triangular"),
            Family::Hexagonal => f.write_str("hexagonal"),
            Family::Hyperbolic { p, q } => write!(f, "hyperbolic-{p}-{q}"),
            Family::Tree { degree } => write!(f, "tree-{degree}"),
            Family::Ladder => f.write_str("ladder"),
        }
    }
}

impl FromStr for Family {
    type Err = TilingError;

    /// Accepts `square`, `triangular`, `hexagonal`, `ladder`, `tree-<d>`,
    /// `hyperbolic-<p>-<q>` and `{p,q}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TilingError::InvalidSpec(format!("unknown family `{s}`"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match s {
            "square" => Ok(Family::Square),
            "triangular" => Ok(Family::Triangular),
            "hexagonal" => Ok(Family::Hexagonal),
            "ladder" => Ok(Family::Ladder),
            _ => {
                if let Some(d) = s.strip_prefix("tree-") {
                    Ok(Family::Tree { degree: num(d)? })
                } else if let Some(rest) = s.strip_prefix("hyperbolic-") {
                    let (p, q) = rest.split_once('-').ok_or_else(bad)?;
                    Ok(Family::Hyperbolic { p: num(p)?, q: num(q)? })
                } else if let Some(inner) = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
                    let (p, q) = inner.split_once(',').ok_or_else(bad)?;
                    Ok(Family::Hyperbolic { p: num(p)?, q: num(q)? })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Torus,
    Free,
}

impl FromStr for Boundary {
    type Err = TilingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "torus" => Ok(Boundary::Torus),
            "free" => Ok(Boundary::Free),
            _ => Err(TilingError::InvalidSpec(format!("unknown boundary `{s}`"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Torus => "torus",
            Boundary::Free => "free",
        })
    }
}

/// Declarative description of a generated graph.
///
/// `size` is the torus side (or patch side) for Euclidean families, the
/// ball radius for hyperbolic tilings, the depth for trees and the number
/// of rungs for ladders. `size2` gives a second torus side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TilingSpec {
    pub family: Family,
    pub size: usize,
    pub size2: Option<usize>,
    pub boundary: Boundary,
}

impl TilingSpec {
    pub fn torus(family: Family, size: usize) -> Self {
        TilingSpec {
            family,
            size,
            size2: None,
            boundary: Boundary::Torus,
        }
    }

    pub fn free(family: Family, size: usize) -> Self {
        TilingSpec {
            family,
            size,
            size2: None,
            boundary: Boundary::Free,
        }
    }

    pub fn with_size2(mut self, size2: usize) -> Self {
        self.size2 = Some(size2);
        self
    }

    /// Number of ends of the infinite graph this family approximates;
    /// `None` stands for infinitely many.
    pub fn declared_ends(&self) -> Option<usize> {
        match self.family {
            Family::Tree { .. } => None,
            Family::Ladder => Some(2),
            _ => Some(1),
        }
    }

    pub fn declared_amenable(&self) -> bool {
        match self.family {
            Family::Square | Family::Triangular | Family::Hexagonal | Family::Ladder => true,
            Family::Hyperbolic { p, q } => 2 * (p + q) == p * q,
            Family::Tree { degree } => degree <= 2,
        }
    }

    /// Resolves Euclidean {p,q} pairs to their named families.
    pub fn normalized(&self) -> Result<TilingSpec, TilingError> {
        let mut spec = *self;
        if let Family::Hyperbolic { p, q } = self.family {
            if p < 3 || q < 3 {
                return Err(TilingError::InvalidSpec(format!("{{{p},{q}}} needs p, q >= 3")));
            }
            // compare 1/p + 1/q with 1/2 as 2(p + q) against pq
            let lhs = 2 * (p + q);
            let rhs = p * q;
            if lhs > rhs {
                return Err(TilingError::SphericalPair { p, q });
            }
            if lhs == rhs {
                spec.family = match (p, q) {
                    (4, 4) => Family::Square,
                    (3, 6) => Family::Triangular,
                    _ => Family::Hexagonal,
                };
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for TilingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.boundary;
        match self.size2 {
            Some(s2) => write!(f, "{} {}x{} {}", self.family, self.size, s2, b),
            None => write!(f, "{} {} {}", self.family, self.size, b),
        }
    }
}

/// Center and radius of a graph ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallSpec {
    pub center: VertexId,
    pub radius: usize,
}

pub fn generate(spec: &TilingSpec) -> Result<CombinatorialMap, TilingError> {
    let spec = spec.normalized()?;
    let lattice = match spec.family {
        Family::Square => Some(Lattice::Square),
        Family::Triangular => Some(Lattice::Triangular),
        Family::Hexagonal => Some(Lattice::Hexagonal),
        _ => None,
    };
    let mut map = match (spec.family, spec.boundary) {
        (_, Boundary::Torus) if lattice.is_some() => {
            euclidean::lattice_torus(lattice.unwrap(), spec.size, spec.size2.unwrap_or(spec.size))?
        }
        (_, Boundary::Free) if lattice.is_some() => euclidean::lattice_patch(lattice.unwrap(), spec.size)?,
        (Family::Hyperbolic { p, q }, Boundary::Free) => hyperbolic_ball(p, q, spec.size)?,
        (Family::Tree { degree }, Boundary::Free) => euclidean::regular_tree(degree, spec.size)?,
        (Family::Ladder, Boundary::Free) => euclidean::ladder(spec.size)?,
        (family, Boundary::Torus) => {
            return Err(TilingError::InvalidSpec(format!("{family} is only generated as a free patch")));
        }
        _ => unreachable!(),
    };
    map.set_meta("family", spec.family.to_string());
    map.set_meta(
        "ends",
        spec.declared_ends().map_or("inf".to_string(), |e| e.to_string()),
    );
    map.set_meta("amenable", spec.declared_amenable().to_string());
    map.set_meta("spec", spec.to_string());
    Ok(map)
}

fn hyperbolic_ball(p: usize, q: usize, radius: usize) -> Result<CombinatorialMap, TilingError> {
    if radius < 1 {
        return Err(TilingError::SizeTooSmall("ball radius must be >= 1".into()));
    }
    // every layer moves the boundary at least one step away from the root
    let patch = hyperbolic::layered_patch(p, q, radius + 1)?;
    let mut cycles = patch.faces;
    cycles.push(patch.boundary.iter().rev().copied().collect());
    let outer = cycles.len() - 1;
    let mut full = CombinatorialMap::from_face_cycles(patch.vertex_count, &cycles, Surface::PlanePatch, Some(outer))?;
    full.set_boundary(patch.boundary);
    let (mut map, _) = ball(&full, BallSpec { center: 0, radius })?;
    map.set_meta("p", p.to_string());
    map.set_meta("q", q.to_string());
    Ok(map)
}

/// Extracts the ball of the given radius as a plane patch whose boundary is
/// the sphere at that radius. Fails if the ball meets the boundary of a
/// truncated map or wraps around a torus. Returns the patch and the old id
/// of each new vertex.
pub fn ball(map: &CombinatorialMap, spec: BallSpec) -> Result<(CombinatorialMap, Vec<VertexId>), TilingError> {
    let BallSpec { center, radius } = spec;
    if center >= map.vertex_count() {
        return Err(TilingError::InvalidSpec(format!("center {center} out of range")));
    }
    if radius < 1 {
        return Err(TilingError::SizeTooSmall("ball radius must be >= 1".into()));
    }
    let clipped = TilingError::BallClipped { center, radius };
    let dist = map.distances_from(center);
    let keep: Vec<bool> = dist.iter().map(|&d| d <= radius).collect();
    match map.surface() {
        Surface::PlanePatch => {
            if map.boundary_vertices().iter().any(|&v| keep[v]) {
                return Err(clipped);
            }
        }
        Surface::Torus => {
            let Some(lifts) = map.lifts() else {
                return Err(TilingError::InvalidSpec("torus ball needs lift data".into()));
            };
            // the ball must lift to the cover injectively with consistent edges
            let mut pos: Vec<Option<Lift>> = vec![None; map.vertex_count()];
            pos[center] = Some([0, 0]);
            let mut queue = VecDeque::from([center]);
            while let Some(v) = queue.pop_front() {
                let pv = pos[v].unwrap();
                for &d in map.vertex_darts(v) {
                    let w = map.target(d);
                    if !keep[w] {
                        continue;
                    }
                    let pw = lift_add(pv, lifts[d]);
                    match pos[w] {
                        None => {
                            pos[w] = Some(pw);
                            queue.push_back(w);
                        }
                        Some(existing) if existing != pw => return Err(clipped),
                        Some(_) => {}
                    }
                }
            }
        }
    }
    let (mut sub, old_of) = map.induced_submap(&keep)?;
    let sphere: Vec<VertexId> = (0..old_of.len()).filter(|&v| dist[old_of[v]] == radius).collect();
    sub.set_boundary(sphere);
    let root = old_of.iter().position(|&v| v == center).expect("center kept");
    sub.set_meta("root", root.to_string());
    sub.set_meta("radius", radius.to_string());
    for key in ["family", "ends", "amenable"] {
        if let Some(v) = map.meta_value(key) {
            sub.set_meta(key, v);
        }
    }
    Ok((sub, old_of))
}

/// |ΔK| / |K| where ΔK is the set of edges with exactly one endpoint in K.
pub fn cheeger_ratio(map: &CombinatorialMap, set: &[VertexId]) -> Result<Ratio<usize>, TilingError> {
    if set.is_empty() {
        return Err(TilingError::EmptySet);
    }
    let mut member = vec![false; map.vertex_count()];
    for &v in set {
        member[v] = true;
    }
    let size = member.iter().filter(|&&m| m).count();
    let cut = (0..map.edge_count())
        .filter(|&e| {
            let (u, v) = map.edge_endpoints(e);
            member[u] != member[v]
        })
        .count();
    Ok(Ratio::new(cut, size))
}

/// Vertices within distance `radius` of `center`.
pub fn ball_vertices(map: &CombinatorialMap, center: VertexId, radius: usize) -> Vec<VertexId> {
    map.distances_from(center)
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= radius)
        .map(|(v, _)| v)
        .collect()
}

/// Root vertex recorded by the generator, if any.
pub fn root_of(map: &CombinatorialMap) -> Option<VertexId> {
    map.meta_value("root").and_then(|r| r.parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h37(r: usize) -> CombinatorialMap {
        generate(&TilingSpec::free(Family::Hyperbolic { p: 3, q: 7 }, r)).unwrap()
    }

    #[test]
    fn family_names_round_trip() {
        for f in [
            Family::Square,
            Family::Triangular,
            Family::Hexagonal,
            Family::Ladder,
            Family::Tree { degree: 3 },
            Family::Hyperbolic { p: 3, q: 7 },
        ] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert_eq!("{4,5}".parse::<Family>().unwrap(), Family::Hyperbolic { p: 4, q: 5 });
    }

    #[test]
    fn spherical_pair_rejected() {
        let err = generate(&TilingSpec::free(Family::Hyperbolic { p: 3, q: 5 }, 3)).unwrap_err();
        assert_eq!(err, TilingError::SphericalPair { p: 3, q: 5 });
    }

    #[test]
    fn euclidean_pairs_resolve_to_lattices() {
        let spec = TilingSpec::torus(Family::Hyperbolic { p: 4, q: 4 }, 4);
        assert_eq!(spec.normalized().unwrap().family, Family::Square);
        let m = generate(&spec).unwrap();
        assert_eq!(m.vertex_count(), 16);
    }

    #[test]
    fn size_too_small() {
        assert!(matches!(
            generate(&TilingSpec::torus(Family::Square, 2)),
            Err(TilingError::SizeTooSmall(_))
        ));
        assert!(matches!(
            generate(&TilingSpec::free(Family::Hyperbolic { p: 3, q: 7 }, 0)),
            Err(TilingError::SizeTooSmall(_))
        ));
    }

    #[test]
    fn hyperbolic_interior_is_regular() {
        for &(p, q, r) in &[(3, 7, 3), (3, 7, 4), (4, 5, 3), (5, 4, 3), (7, 3, 4), (3, 8, 3), (6, 4, 3)] {
            let m = generate(&TilingSpec::free(Family::Hyperbolic { p, q }, r)).unwrap();
            assert!(m.is_simple());
            let root = root_of(&m).unwrap();
            let dist = m.distances_from(root);
            for v in 0..m.vertex_count() {
                if dist[v] < r {
                    assert_eq!(m.degree(v), q, "{{{p},{q}}} r={r}: vertex {v} at distance {}", dist[v]);
                }
            }
            let on_boundary: Vec<bool> = {
                let mut b = vec![false; m.vertex_count()];
                for &v in m.boundary_vertices() {
                    b[v] = true;
                }
                b
            };
            for f in m.faces().iter().filter(|f| !f.is_outer) {
                let vs = m.face_vertices(f.id);
                if vs.iter().all(|&v| !on_boundary[v]) {
                    assert_eq!(f.size(), p);
                }
            }
        }
    }

    #[test]
    fn hyperbolic_37_faces_are_triangles() {
        let m = h37(3);
        for f in m.faces().iter().filter(|f| !f.is_outer) {
            assert_eq!(f.size(), 3);
        }
    }

    #[test]
    fn balls_on_tori() {
        let sq = generate(&TilingSpec::torus(Family::Square, 9)).unwrap();
        let (b, _) = ball(&sq, BallSpec { center: 40, radius: 1 }).unwrap();
        assert_eq!(b.vertex_count(), 5);
        assert_eq!(b.boundary_vertices().len(), 4);
        let tri = generate(&TilingSpec::torus(Family::Triangular, 9)).unwrap();
        let (b, _) = ball(&tri, BallSpec { center: 0, radius: 1 }).unwrap();
        assert_eq!(b.vertex_count(), 7);
        for n in [5, 6] {
            assert!(matches!(
                ball(&sq, BallSpec { center: 0, radius: n }),
                Err(TilingError::BallClipped { .. })
            ));
        }
    }

    #[test]
    fn square_ball_sizes() {
        let sq = generate(&TilingSpec::torus(Family::Square, 20)).unwrap();
        for n in 1..=6 {
            let (b, _) = ball(&sq, BallSpec { center: 0, radius: n }).unwrap();
            assert_eq!(b.vertex_count(), 2 * n * n + 2 * n + 1);
            assert_eq!(b.boundary_vertices().len(), 4 * n);
            assert_eq!(b.euler_characteristic(), 2);
        }
    }

    #[test]
    fn ball_on_truncated_patch_is_clipped() {
        let m = h37(3);
        let root = root_of(&m).unwrap();
        assert!(ball(&m, BallSpec { center: root, radius: 2 }).is_ok());
        assert!(matches!(
            ball(&m, BallSpec { center: root, radius: 3 }),
            Err(TilingError::BallClipped { .. })
        ));
    }

    #[test]
    fn cheeger_single_vertex() {
        let sq = generate(&TilingSpec::torus(Family::Square, 6)).unwrap();
        assert_eq!(cheeger_ratio(&sq, &[7]).unwrap(), Ratio::new(4, 1));
        assert_eq!(cheeger_ratio(&sq, &[]), Err(TilingError::EmptySet));
    }

    #[test]
    fn cheeger_decreases_on_square_balls() {
        let sq = generate(&TilingSpec::torus(Family::Square, 20)).unwrap();
        let ratios: Vec<Ratio<usize>> = (1..=6)
            .map(|n| cheeger_ratio(&sq, &ball_vertices(&sq, 0, n)).unwrap())
            .collect();
        // |ΔΛ_n| = 8n + 4 and |Λ_n| = 2n² + 2n + 1
        for (i, r) in ratios.iter().enumerate() {
            let n = i + 1;
            assert_eq!(*r, Ratio::new(8 * n + 4, 2 * n * n + 2 * n + 1));
        }
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn cheeger_bounded_below_on_37_balls() {
        let m = h37(7);
        let root = root_of(&m).unwrap();
        for n in 1..=5 {
            let r = cheeger_ratio(&m, &ball_vertices(&m, root, n)).unwrap();
            assert!(r >= Ratio::new(1, 5), "n={n}: {r}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = TilingSpec::free(Family::Hyperbolic { p: 3, q: 7 }, 3);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }
}
