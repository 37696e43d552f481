//! Union-find with per-element displacement vectors.
//!
//! Each element stores its cover displacement relative to its parent, so
//! `position(x) - position(find(x))` is available after every `find`. A
//! union between two elements already in the same set whose cover
//! displacements disagree closes a non-contractible cycle and marks the
//! set as wrapping.

use crate::map::{lift_add, lift_sub, Lift};

#[derive(Clone, Debug)]
pub struct DisplacementDsu {
    parent: Vec<u32>,
    rank: Vec<u8>,
    size: Vec<u32>,
    offset: Vec<Lift>,
    wraps: Vec<bool>,
}

/// What a call to [`DisplacementDsu::union`] changed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Union {
    /// Two sets merged; `root` is the surviving root and `absorbed` the old one.
    Merged { root: usize, absorbed: usize },
    /// Same set, contractible cycle.
    Same,
    /// Same set; this edge closed a wrapping cycle for the first time.
    NewWrap { root: usize },
}

impl DisplacementDsu {
    pub fn new(n: usize) -> Self {
        DisplacementDsu {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            size: vec![1; n],
            offset: vec![[0, 0]; n],
            wraps: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root of `x` and the displacement from the root to `x`.
    pub fn find(&mut self, x: usize) -> (usize, Lift) {
        // path halving, composing offsets as links are shortened
        let mut y = x;
        let mut acc = [0, 0];
        loop {
            let p = self.parent[y] as usize;
            if p == y {
                return (y, acc);
            }
            let g = self.parent[p] as usize;
            if g != p {
                self.offset[y] = lift_add(self.offset[y], self.offset[p]);
                self.parent[y] = g as u32;
            }
            acc = lift_add(acc, self.offset[y]);
            y = self.parent[y] as usize;
        }
    }

    pub fn root(&mut self, x: usize) -> usize {
        self.find(x).0
    }

    pub fn size_of(&mut self, x: usize) -> usize {
        let r = self.root(x);
        self.size[r] as usize
    }

    pub fn wraps(&mut self, x: usize) -> bool {
        let r = self.root(x);
        self.wraps[r]
    }

    /// Joins `a` and `b`, where `b` sits at `lift` from `a` in the cover.
    pub fn union(&mut self, a: usize, b: usize, lift: Lift) -> Union {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        if ra == rb {
            // going a -> b directly must land where the tree says b is
            if lift_add(oa, lift) != ob && !self.wraps[ra] {
                self.wraps[ra] = true;
                return Union::NewWrap { root: ra };
            }
            return Union::Same;
        }
        // displacement of rb relative to ra
        let delta = lift_sub(lift_add(oa, lift), ob);
        let (root, child, child_off) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb, delta)
        } else {
            (rb, ra, [-delta[0], -delta[1]])
        };
        self.parent[child] = root as u32;
        self.offset[child] = child_off;
        if self.rank[root] == self.rank[child] {
            self.rank[root] += 1;
        }
        self.size[root] += self.size[child];
        self.wraps[root] |= self.wraps[child];
        Union::Merged { root, absorbed: child }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_of_three_wraps() {
        let mut d = DisplacementDsu::new(3);
        assert!(matches!(d.union(0, 1, [1, 0]), Union::Merged { .. }));
        assert!(matches!(d.union(1, 2, [1, 0]), Union::Merged { .. }));
        assert!(!d.wraps(0));
        assert_eq!(d.union(2, 0, [1, 0]), Union::NewWrap { root: d.root(0) });
        assert!(d.wraps(1));
        assert_eq!(d.union(2, 0, [1, 0]), Union::Same);
    }

    #[test]
    fn contractible_cycle_does_not_wrap() {
        let mut d = DisplacementDsu::new(4);
        d.union(0, 1, [1, 0]);
        d.union(1, 2, [0, 1]);
        d.union(2, 3, [-1, 0]);
        assert_eq!(d.union(3, 0, [0, -1]), Union::Same);
        assert!(!d.wraps(0));
        assert_eq!(d.size_of(3), 4);
    }

    #[test]
    fn offsets_survive_compression() {
        let mut d = DisplacementDsu::new(6);
        for i in 0..5 {
            d.union(i, i + 1, [1, 2]);
        }
        for i in 0..6 {
            let (r, off) = d.find(i);
            let (_, off0) = d.find(0);
            assert_eq!(r, d.root(0));
            assert_eq!(lift_sub(off, off0), [i as i32, 2 * i as i32]);
        }
    }
}
