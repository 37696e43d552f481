//! Square, triangular and hexagonal lattices on a torus, and the finite
//! families built from them (free patches, ladder, regular tree).

use crate::map::{CombinatorialMap, Lift, Surface, VertexId};

use super::TilingError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Lattice {
    Square,
    Triangular,
    Hexagonal,
}

fn wrap_delta(d: i32, period: i32) -> i32 {
    let mut d = d.rem_euclid(period);
    if 2 * d > period {
        d -= period;
    }
    d
}

/// Lattice on an `lx` by `ly` torus. Vertex `(x, y)` has id `x + lx * y`.
///
/// The triangular lattice adds the diagonal `(x, y)-(x+1, y+1)` to every
/// square; the hexagonal (brick-wall) lattice drops the vertical edge above
/// `(x, y)` whenever `x + y` is odd.
pub(crate) fn lattice_torus(kind: Lattice, lx: usize, ly: usize) -> Result<CombinatorialMap, TilingError> {
    if lx < 3 || ly < 3 {
        return Err(TilingError::SizeTooSmall(format!("torus needs side >= 3, got {lx}x{ly}")));
    }
    if kind == Lattice::Hexagonal && (!lx.is_multiple_of(2) || !ly.is_multiple_of(2)) {
        return Err(TilingError::SizeTooSmall(format!(
            "hexagonal torus needs even sides, got {lx}x{ly}"
        )));
    }
    let id = |x: usize, y: usize| (x % lx) + lx * (y % ly);
    let mut cycles = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            match kind {
                Lattice::Square => cycles.push(vec![id(x, y), id(x + 1, y), id(x + 1, y + 1), id(x, y + 1)]),
                Lattice::Triangular => {
                    cycles.push(vec![id(x, y), id(x + 1, y), id(x + 1, y + 1)]);
                    cycles.push(vec![id(x, y), id(x + 1, y + 1), id(x, y + 1)]);
                }
                Lattice::Hexagonal => {
                    if (x + y) % 2 == 0 {
                        cycles.push(vec![
                            id(x, y),
                            id(x + 1, y),
                            id(x + 2, y),
                            id(x + 2, y + 1),
                            id(x + 1, y + 1),
                            id(x, y + 1),
                        ]);
                    }
                }
            }
        }
    }
    let mut map = CombinatorialMap::from_face_cycles(lx * ly, &cycles, Surface::Torus, None)?;
    let coords: Vec<Lift> = (0..lx * ly).map(|v| [(v % lx) as i32, (v / lx) as i32]).collect();
    let lifts = (0..map.dart_count())
        .map(|d| {
            let a = coords[map.origin(d)];
            let b = coords[map.target(d)];
            [wrap_delta(b[0] - a[0], lx as i32), wrap_delta(b[1] - a[1], ly as i32)]
        })
        .collect();
    map.set_lifts(lifts)?;
    map.set_coords(coords);
    map.set_meta("period", format!("{lx} {ly}"));
    Ok(map)
}

/// `l` by `l` window of a lattice, cut out of a larger torus.
pub(crate) fn lattice_patch(kind: Lattice, l: usize) -> Result<CombinatorialMap, TilingError> {
    if l < 3 {
        return Err(TilingError::SizeTooSmall(format!("patch needs side >= 3, got {l}")));
    }
    let mut big = l + 2;
    if kind == Lattice::Hexagonal && big % 2 == 1 {
        big += 1;
    }
    let torus = lattice_torus(kind, big, big)?;
    let coords = torus.coords().expect("torus has coordinates").to_vec();
    let mut keep: Vec<bool> = coords
        .iter()
        .map(|c| (c[0] as usize) < l && (c[1] as usize) < l)
        .collect();
    // the brick wall leaves pendant corners; peel them so the patch stays 2-connected
    loop {
        let mut changed = false;
        for v in 0..keep.len() {
            if keep[v] && torus.neighbors(v).filter(|&w| keep[w]).count() < 2 {
                keep[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let (mut map, old_of) = torus.induced_submap(&keep)?;
    let mut parts = map.to_parts();
    parts.lifts = None;
    map = CombinatorialMap::build(parts, Surface::PlanePatch)?;
    let outer = map.outer_face().expect("window has an outer face");
    let mut boundary = map.face_vertices(outer);
    boundary.sort_unstable();
    boundary.dedup();
    map.set_boundary(boundary);
    let new_coords: Vec<Lift> = old_of.iter().map(|&v| coords[v]).collect();
    let side = |x: i32| -> Vec<VertexId> { (0..new_coords.len()).filter(|&v| new_coords[v][0] == x).collect() };
    let min_x = new_coords.iter().map(|c| c[0]).min().unwrap_or(0);
    let max_x = new_coords.iter().map(|c| c[0]).max().unwrap_or(0);
    map.set_meta("side_a", join(&side(min_x)));
    map.set_meta("side_b", join(&side(max_x)));
    let center = [(l / 2) as i32, (l / 2) as i32];
    let root = (0..new_coords.len())
        .min_by_key(|&v| {
            let c = new_coords[v];
            ((c[0] - center[0]).abs() + (c[1] - center[1]).abs(), v)
        })
        .expect("non-empty patch");
    map.set_meta("root", root.to_string());
    map.set_coords(new_coords);
    Ok(map)
}

pub(crate) fn join(vs: &[VertexId]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Two-row strip of `length` squares' worth of rungs. Vertex `(i, row)` has id
/// `2i + row`. The two end rungs are the boundary.
pub(crate) fn ladder(length: usize) -> Result<CombinatorialMap, TilingError> {
    if length < 2 {
        return Err(TilingError::SizeTooSmall(format!("ladder needs length >= 2, got {length}")));
    }
    let id = |i: usize, row: usize| 2 * i + row;
    let mut cycles: Vec<Vec<usize>> = (0..length - 1)
        .map(|i| vec![id(i, 0), id(i + 1, 0), id(i + 1, 1), id(i, 1)])
        .collect();
    let mut outer = vec![id(0, 0)];
    outer.extend((0..length).map(|i| id(i, 1)));
    outer.extend((1..length).rev().map(|i| id(i, 0)));
    cycles.push(outer);
    let outer_index = cycles.len() - 1;
    let mut map = CombinatorialMap::from_face_cycles(2 * length, &cycles, Surface::PlanePatch, Some(outer_index))?;
    let last = length - 1;
    map.set_boundary(vec![id(0, 0), id(0, 1), id(last, 0), id(last, 1)]);
    map.set_meta("side_a", join(&[id(0, 0), id(0, 1)]));
    map.set_meta("side_b", join(&[id(last, 0), id(last, 1)]));
    map.set_meta("root", id(length / 2, 0).to_string());
    map.set_coords((0..2 * length).map(|v| [(v / 2) as i32, (v % 2) as i32]).collect());
    Ok(map)
}

/// Rooted tree in which every vertex above depth `depth` has `degree`
/// neighbours. Vertices are numbered breadth first from the root.
pub(crate) fn regular_tree(degree: usize, depth: usize) -> Result<CombinatorialMap, TilingError> {
    if degree < 2 || depth < 1 {
        return Err(TilingError::SizeTooSmall(format!(
            "tree needs degree >= 2 and depth >= 1, got degree {degree} depth {depth}"
        )));
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut level = vec![0usize];
    let mut frontier = vec![0usize];
    for d in 0..depth {
        let mut next = Vec::new();
        for &v in &frontier {
            let k = if d == 0 { degree } else { degree - 1 };
            for _ in 0..k {
                let c = children.len();
                children.push(Vec::new());
                level.push(d + 1);
                children[v].push(c);
                next.push(c);
            }
        }
        frontier = next;
    }
    // the single face is an Euler tour
    let mut tour = Vec::with_capacity(2 * children.len());
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    while let Some((v, i)) = stack.pop() {
        tour.push(v);
        if i < children[v].len() {
            stack.push((v, i + 1));
            stack.push((children[v][i], 0));
        }
    }
    // drop the final return to the root so the cycle is not closed twice
    tour.pop();
    let n = children.len();
    let mut map = CombinatorialMap::from_face_cycles(n, &[tour], Surface::PlanePatch, Some(0))?;
    let leaves: Vec<usize> = (0..n).filter(|&v| level[v] == depth).collect();
    map.set_boundary(leaves);
    map.set_meta("root", "0");
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_torus_counts() {
        let m = lattice_torus(Lattice::Square, 4, 4).unwrap();
        assert_eq!((m.vertex_count(), m.edge_count(), m.face_count()), (16, 32, 16));
        assert!(m.faces().iter().all(|f| f.size() == 4));
        assert!(m.is_simple());
    }

    #[test]
    fn rectangular_torus() {
        let m = lattice_torus(Lattice::Square, 3, 4).unwrap();
        assert_eq!((m.vertex_count(), m.edge_count(), m.face_count()), (12, 24, 12));
    }

    #[test]
    fn triangular_and_hexagonal_faces() {
        let t = lattice_torus(Lattice::Triangular, 6, 6).unwrap();
        assert!(t.faces().iter().all(|f| f.size() == 3));
        assert!((0..t.vertex_count()).all(|v| t.degree(v) == 6));
        let h = lattice_torus(Lattice::Hexagonal, 6, 6).unwrap();
        assert!(h.faces().iter().all(|f| f.size() == 6));
        assert!((0..h.vertex_count()).all(|v| h.degree(v) == 3));
        assert!(lattice_torus(Lattice::Hexagonal, 5, 6).is_err());
    }

    #[test]
    fn square_patch() {
        let m = lattice_patch(Lattice::Square, 5).unwrap();
        assert_eq!(m.vertex_count(), 25);
        assert_eq!(m.edge_count(), 40);
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.boundary_vertices().len(), 16);
        let outer = m.outer_face().unwrap();
        assert_eq!(m.face(outer).size(), 16);
        assert!(m.faces().iter().filter(|f| !f.is_outer).all(|f| f.size() == 4));
        let root: usize = m.meta_value("root").unwrap().parse().unwrap();
        assert_eq!(m.coords().unwrap()[root], [2, 2]);
    }

    #[test]
    fn hexagonal_patch_is_two_connected() {
        let m = lattice_patch(Lattice::Hexagonal, 8).unwrap();
        assert!((0..m.vertex_count()).all(|v| m.degree(v) >= 2));
        assert!(m.faces().iter().filter(|f| !f.is_outer).all(|f| f.size() == 6));
    }

    #[test]
    fn ladder_shape() {
        let m = ladder(5).unwrap();
        assert_eq!(m.vertex_count(), 10);
        assert_eq!(m.edge_count(), 13);
        assert_eq!(m.face_count(), 5);
        assert_eq!(m.face(m.outer_face().unwrap()).size(), 10);
    }

    #[test]
    fn binary_branching_tree() {
        let m = regular_tree(3, 3).unwrap();
        assert_eq!(m.vertex_count(), 1 + 3 + 6 + 12);
        assert_eq!(m.face_count(), 1);
        assert_eq!(m.boundary_vertices().len(), 12);
        assert_eq!(m.degree(0), 3);
        assert_eq!(m.degree(1), 3);
    }
}
