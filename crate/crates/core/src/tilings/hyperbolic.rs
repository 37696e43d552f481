//! Layer-by-layer construction of {p,q} tilings without coordinates.
//!
//! The patch is a disk whose boundary is kept as a counterclockwise cycle.
//! A boundary vertex that already lies on `k` faces still needs `q - k`
//! faces outside, separated by `q - k - 1` new outward edges ("spokes").
//! Walking the boundary, consecutive spokes bound exactly one new face: if
//! the two spokes are `m` boundary edges apart, the face closes with an
//! outer path of `p - m - 2` edges. A zero-length outer path means both
//! spokes end at the same new vertex.

use super::TilingError;

pub(crate) struct LayeredPatch {
    pub vertex_count: usize,
    /// Counterclockwise face cycles, not including the outer face.
    pub faces: Vec<Vec<usize>>,
    /// Counterclockwise boundary cycle of the patch.
    pub boundary: Vec<usize>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn add(&mut self) -> usize {
        self.0.push(self.0.len());
        self.0.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

pub(crate) fn layered_patch(p: usize, q: usize, layers: usize) -> Result<LayeredPatch, TilingError> {
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut face_count: Vec<usize> = vec![0];
    let mut vertex_count = 1usize;

    // first layer: q faces around the root
    let root = 0;
    let spokes: Vec<usize> = (0..q).map(|i| 1 + i * (p - 2)).collect();
    vertex_count += q * (p - 2);
    face_count.resize(vertex_count, 0);
    let mut boundary = Vec::with_capacity(q * (p - 2));
    for j in 0..q {
        let a_end = spokes[j];
        let b_end = spokes[(j + 1) % q];
        let mut face = vec![root, a_end];
        face.extend((1..p - 2).map(|t| a_end + t));
        face.push(b_end);
        boundary.push(a_end);
        boundary.extend((1..p - 2).map(|t| a_end + t));
        faces.push(face);
    }
    for f in &faces {
        for &v in f {
            face_count[v] += 1;
        }
    }

    for _ in 1..layers {
        let k = boundary.len();
        // spokes in counterclockwise order: (position on boundary, spoke index)
        let mut spoke_roots = Vec::new();
        for (i, &b) in boundary.iter().enumerate() {
            let have = face_count[b];
            if have >= q {
                return Err(TilingError::InvalidSpec(format!(
                    "{{{p},{q}}} layering failed: boundary vertex with {have} faces"
                )));
            }
            for _ in 0..(q - have - 1) {
                spoke_roots.push(i);
            }
        }
        let n_spokes = spoke_roots.len();
        if n_spokes < 2 {
            return Err(TilingError::InvalidSpec(format!("{{{p},{q}}} layering ran out of spokes")));
        }
        let mut ends = Dsu(Vec::new());
        for _ in 0..n_spokes {
            ends.add();
        }
        // shape of each face: boundary run and outer path length
        let mut shapes = Vec::with_capacity(n_spokes);
        for s in 0..n_spokes {
            let t_next = (s + 1) % n_spokes;
            let a = spoke_roots[s];
            let b = spoke_roots[t_next];
            let m = (b + k - a) % k;
            let outer = p as isize - m as isize - 2;
            if outer < 0 {
                return Err(TilingError::InvalidSpec(format!(
                    "{{{p},{q}}} layering failed: face spans {m} boundary edges"
                )));
            }
            if outer == 0 {
                ends.union(s, t_next);
            }
            shapes.push((a, m, outer as usize));
        }
        // allocate ids in face order
        let mut spoke_vertex: Vec<Option<usize>> = vec![None; n_spokes];
        let mut resolve = |s: usize, ends: &mut Dsu, vertex_count: &mut usize| {
            let r = ends.find(s);
            *spoke_vertex[r].get_or_insert_with(|| {
                *vertex_count += 1;
                *vertex_count - 1
            })
        };
        let mut new_boundary: Vec<usize> = Vec::new();
        for s in 0..n_spokes {
            let t_next = (s + 1) % n_spokes;
            let (a, m, outer) = shapes[s];
            let mut face = Vec::with_capacity(p);
            for step in (0..=m).rev() {
                face.push(boundary[(a + step) % k]);
            }
            let a_end = resolve(s, &mut ends, &mut vertex_count);
            face.push(a_end);
            if new_boundary.last() != Some(&a_end) {
                new_boundary.push(a_end);
            }
            for _ in 1..outer {
                let v = vertex_count;
                vertex_count += 1;
                face.push(v);
                new_boundary.push(v);
            }
            if outer >= 1 {
                let b_end = resolve(t_next, &mut ends, &mut vertex_count);
                face.push(b_end);
            }
            faces.push(face);
        }
        while new_boundary.len() > 1 && new_boundary.first() == new_boundary.last() {
            new_boundary.pop();
        }
        face_count.resize(vertex_count, 0);
        for f in &faces[faces.len() - n_spokes..] {
            for &v in f {
                face_count[v] += 1;
            }
        }
        boundary = new_boundary;
    }

    Ok(LayeredPatch {
        vertex_count,
        faces,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_layer_of_37() {
        let patch = layered_patch(3, 7, 1).unwrap();
        assert_eq!(patch.vertex_count, 8);
        assert_eq!(patch.faces.len(), 7);
        assert_eq!(patch.boundary.len(), 7);
    }

    #[test]
    fn every_face_has_p_vertices() {
        for &(p, q) in &[(3, 7), (4, 5), (5, 4), (7, 3), (3, 8), (6, 4), (8, 3)] {
            let patch = layered_patch(p, q, 4).unwrap();
            for f in &patch.faces {
                assert_eq!(f.len(), p, "{{{p},{q}}} face {f:?}");
                let mut s = f.clone();
                s.sort();
                s.dedup();
                assert_eq!(s.len(), p, "{{{p},{q}}} face repeats a vertex");
            }
        }
    }
}
