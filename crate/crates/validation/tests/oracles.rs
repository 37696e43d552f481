use percoplane_core::graph::SiteGraph;
use percoplane_core::percolation::{sample_observable, Observable};
use percoplane_core::tilings::{generate, Family, TilingSpec};
use percoplane_validation::{ladder_span_probability, square_ball_counts, traversal_clusters};

#[test]
fn ladder_monte_carlo_matches_transfer_matrix() {
    let ladder = SiteGraph::from_map(&generate(&TilingSpec::free(Family::Ladder, 40)).unwrap());
    for p in [0.6, 0.8, 0.9] {
        let point = sample_observable(&ladder, Observable::CrossProbability, p, 20_000, 11, 2).unwrap();
        let exact = ladder_span_probability(40, p);
        assert!(
            (point.mean - exact).abs() < 5.0 * point.stderr.max(1e-3),
            "p {p}: {} vs {exact}",
            point.mean
        );
    }
}

#[test]
fn free_square_ball_has_closed_form_counts() {
    for r in 1..6 {
        let map = generate(&TilingSpec::free(Family::Square, 2 * r + 1)).unwrap();
        let g = SiteGraph::from_map(&map);
        let centre = g.root().unwrap_or(map.vertex_count() / 2);
        let dist = g.distances_from(centre);
        let inside: Vec<usize> = (0..g.vertex_count()).filter(|&v| dist[v] <= r).collect();
        let edges = inside
            .iter()
            .flat_map(|&v| g.neighbors(v).map(move |(w, _)| (v, w)))
            .filter(|&(v, w)| v < w && dist[w] <= r)
            .count();
        let sphere = inside.iter().filter(|&&v| dist[v] == r).count();
        assert_eq!((edges, sphere), square_ball_counts(r), "radius {r}");
    }
}

#[test]
fn all_open_torus_is_one_wrapping_cluster() {
    let g = SiteGraph::from_map(&generate(&TilingSpec::torus(Family::Triangular, 5)).unwrap());
    let (open, closed) = traversal_clusters(&g, &vec![true; g.vertex_count()]);
    assert_eq!(open.len(), 1);
    assert!(open[0].wraps);
    assert!(closed.is_empty());
}
