use std::collections::VecDeque;

use percoplane_core::dsu::{DisplacementDsu, Union};
use percoplane_core::experiments::matching_graph_is_identity;
use percoplane_core::format::{read_map, write_map};
use percoplane_core::graph::SiteGraph;
use percoplane_core::matching::{hatted_graphs, matching_pair, FacePartition, PartitionStrategy};
use percoplane_core::percolation::{newman_ziff_sweep, Observable};
use percoplane_core::tilings::{generate, Family, TilingSpec};
use proptest::prelude::*;

fn open_components(g: &SiteGraph, open: &[bool]) -> Vec<Option<usize>> {
    let mut comp = vec![None; g.vertex_count()];
    let mut next = 0;
    for s in 0..g.vertex_count() {
        if !open[s] || comp[s].is_some() {
            continue;
        }
        comp[s] = Some(next);
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for (w, _) in g.neighbors(v) {
                if open[w] && comp[w].is_none() {
                    comp[w] = Some(next);
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    comp
}

fn same_component(comp: &[Option<usize>], a: usize, b: usize) -> bool {
    comp[a].is_some() && comp[a] == comp[b]
}

proptest! {
    #[test]
    fn dsu_agrees_with_naive_labels(n in 2usize..40, ops in prop::collection::vec((0usize..40, 0usize..40), 0..80)) {
        let mut dsu = DisplacementDsu::new(n);
        let mut label: Vec<usize> = (0..n).collect();
        for (a, b) in ops {
            let (a, b) = (a % n, b % n);
            let merged = label[a] != label[b];
            let outcome = dsu.union(a, b, [0, 0]);
            prop_assert_eq!(merged, matches!(outcome, Union::Merged { .. }));
            let wrapped = matches!(outcome, Union::NewWrap { .. });
            prop_assert!(!wrapped);
            if merged {
                let (old, new) = (label[b], label[a]);
                label.iter_mut().filter(|l| **l == old).for_each(|l| *l = new);
            }
        }
        for v in 0..n {
            let size = label.iter().filter(|&&l| l == label[v]).count();
            prop_assert_eq!(dsu.size_of(v), size);
            prop_assert!(!dsu.wraps(v));
        }
    }

    #[test]
    fn map_text_round_trips(
        family in prop::sample::select(vec![Family::Square, Family::Triangular, Family::Hexagonal]),
        half in 2usize..6,
    ) {
        let map = generate(&TilingSpec::torus(family, 2 * half)).unwrap();
        let text = write_map(&map);
        let back = read_map(&text).unwrap();
        prop_assert_eq!(write_map(&back), text);
    }

    #[test]
    fn sweep_curves_are_monotone(seed in 0u64..1000) {
        let g = SiteGraph::from_map(&generate(&TilingSpec::torus(Family::Square, 6)).unwrap());
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for obs in [Observable::WrapProbability, Observable::MaxClusterFraction] {
            let curve = newman_ziff_sweep(&g, 64, obs, &grid, seed, 1).unwrap();
            for w in curve.points.windows(2) {
                prop_assert!(w[1].mean >= w[0].mean - 1e-12, "{:?} at {}", obs, w[1].p);
            }
        }
    }
}

#[test]
fn hatted_connectivity_matches_matching_pair() {
    let map = generate(&TilingSpec::free(Family::Square, 3)).unwrap();
    let n = map.vertex_count();
    assert!(n <= 16, "{n}");
    for strategy in [PartitionStrategy::AllF1, PartitionStrategy::Diagonal3] {
        let partition = FacePartition::with_strategy(&map, &strategy).unwrap();
        let (g1, g2) = matching_pair(&map, &partition).unwrap();
        let (h1, h2) = hatted_graphs(&map, &partition).unwrap();
        for (g, h) in [(g1, h1), (g2, h2)] {
            let (gs, hs) = (g.percolation_graph(), h.percolation_graph());
            for omega in 0u32..1 << n {
                let open: Vec<bool> = (0..n).map(|v| omega >> v & 1 == 1).collect();
                let hopen: Vec<bool> = (0..hs.vertex_count()).map(|v| v >= n || open[v]).collect();
                let (cg, ch) = (open_components(&gs, &open), open_components(&hs, &hopen));
                for a in 0..n {
                    for b in a + 1..n {
                        assert_eq!(
                            same_component(&cg, a, b),
                            same_component(&ch, a, b),
                            "{strategy:?} omega {omega:#x} pair {a} {b}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn triangular_matching_graph_adds_nothing() {
    for size in [3, 4, 6, 9] {
        let map = generate(&TilingSpec::torus(Family::Triangular, size)).unwrap();
        assert!(matching_graph_is_identity(&map).unwrap(), "size {size}");
    }
    let square = generate(&TilingSpec::torus(Family::Square, 4)).unwrap();
    assert!(!matching_graph_is_identity(&square).unwrap());
}
