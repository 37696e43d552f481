//! Site configurations as bond configurations on the hatted graph Ĝ1, their
//! planar duals, cluster statistics, and the exact correspondence between
//! faces of the open subgraph, dual components and closed clusters of Ĝ2.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dsu::DisplacementDsu;
use crate::graph::SiteGraph;
use crate::map::{CombinatorialMap, DualMap, EdgeId, FaceId, Surface, VertexId};
use crate::matching::{hatted_graphs, AugmentedGraph, FaceClass, FacePartition, MatchingError};
use crate::rng::trial_rng;

#[derive(Debug, Error)]
pub enum DualityError {
    #[error("vertex {vertex} is forced {forced} but the configuration says {state}")]
    ForcedStateViolated { vertex: VertexId, forced: u8, state: u8 },
    #[error("bond configuration has no dual link")]
    MissingDualLink,
    #[error("configuration has {found} entries, graph has {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("{found} vertices exceed the exhaustive limit of {limit}")]
    TooManyVertices { found: usize, limit: usize },
    #[error("probability {0} outside (0, 1)")]
    BadProbability(f64),
    #[error("graph has no pair of edges of the required shape")]
    NoProbeEdges,
    #[error(transparent)]
    Matching(#[from] MatchingError),
}

/// A 0/1 state per vertex, with an optional forced state per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteConfig {
    states: Vec<bool>,
    forced: Vec<Option<bool>>,
}

impl SiteConfig {
    pub fn new(states: Vec<bool>, forced: Vec<Option<bool>>) -> Result<Self, DualityError> {
        if states.len() != forced.len() {
            return Err(DualityError::LengthMismatch {
                found: states.len(),
                expected: forced.len(),
            });
        }
        for (v, (&s, &f)) in states.iter().zip(&forced).enumerate() {
            if let Some(f) = f {
                if f != s {
                    return Err(DualityError::ForcedStateViolated {
                        vertex: v,
                        forced: f as u8,
                        state: s as u8,
                    });
                }
            }
        }
        Ok(SiteConfig { states, forced })
    }

    /// Configuration without forced vertices.
    pub fn free(states: Vec<bool>) -> Self {
        let forced = vec![None; states.len()];
        SiteConfig { states, forced }
    }

    /// Extends `omega` on the base vertices of `g` by giving every facial
    /// site the state `site_state`, which is also recorded as forced.
    pub fn extend(g: &AugmentedGraph, omega: &[bool], site_state: bool) -> Result<Self, DualityError> {
        if omega.len() != g.base_vertex_count() {
            return Err(DualityError::LengthMismatch {
                found: omega.len(),
                expected: g.base_vertex_count(),
            });
        }
        let mut states = omega.to_vec();
        states.resize(g.vertex_count(), site_state);
        let mut forced = vec![None; g.base_vertex_count()];
        forced.resize(g.vertex_count(), Some(site_state));
        Ok(SiteConfig { states, forced })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[bool] {
        &self.states
    }

    pub fn state(&self, v: VertexId) -> bool {
        self.states[v]
    }

    pub fn forced(&self) -> &[Option<bool>] {
        &self.forced
    }

    pub fn open_count(&self) -> usize {
        self.states.iter().filter(|&&s| s).count()
    }
}

/// A 0/1 state per edge. `pairing[e]` names the dual edge crossing `e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BondConfig {
    states: Vec<bool>,
    pairing: Option<Vec<EdgeId>>,
}

impl BondConfig {
    pub fn new(states: Vec<bool>, pairing: Option<Vec<EdgeId>>) -> Self {
        BondConfig { states, pairing }
    }

    pub fn states(&self) -> &[bool] {
        &self.states
    }

    pub fn state(&self, e: EdgeId) -> bool {
        self.states[e]
    }

    pub fn pairing(&self) -> Option<&[EdgeId]> {
        self.pairing.as_deref()
    }
}

/// `β(e) = 1` iff both endpoints of `e` are open. Facial sites of Ĝ1 must
/// be open.
pub fn bond_from_sites(g1: &AugmentedGraph, omega: &SiteConfig) -> Result<BondConfig, DualityError> {
    if omega.len() != g1.vertex_count() {
        return Err(DualityError::LengthMismatch {
            found: omega.len(),
            expected: g1.vertex_count(),
        });
    }
    for s in g1.sites() {
        if s.class == FaceClass::F1 && !omega.state(s.vertex) {
            return Err(DualityError::ForcedStateViolated {
                vertex: s.vertex,
                forced: 1,
                state: 0,
            });
        }
    }
    let states = g1.edges().iter().map(|e| omega.state(e.u) && omega.state(e.v)).collect();
    let pairing = g1.embedding().map(|m| (0..m.edge_count()).collect());
    Ok(BondConfig { states, pairing })
}

/// `β⁺(e⁺) = 1 − β(e)` on the dual graph. The result links back to the
/// primal, so applying this twice returns the original configuration.
pub fn dual_bond_config(beta: &BondConfig) -> Result<BondConfig, DualityError> {
    let pairing = beta.pairing.as_ref().ok_or(DualityError::MissingDualLink)?;
    let mut states = vec![false; beta.states.len()];
    let mut back = vec![0; beta.states.len()];
    for (e, &e_dual) in pairing.iter().enumerate() {
        states[e_dual] = !beta.states[e];
        back[e_dual] = e;
    }
    Ok(BondConfig {
        states,
        pairing: Some(back),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    /// Members in increasing order.
    pub vertices: Vec<VertexId>,
    pub touches_boundary: bool,
    /// Contains a non-contractible cycle of the torus.
    pub wraps: bool,
}

impl Cluster {
    /// Surrogate for an infinite cluster on a finite graph.
    pub fn unbounded_proxy(&self) -> bool {
        self.touches_boundary || self.wraps
    }
}

/// Open (state 1) and closed (state 0) clusters, each list ordered by
/// smallest member.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterStats {
    pub open: Vec<Cluster>,
    pub closed: Vec<Cluster>,
}

impl ClusterStats {
    /// Number of 1-clusters.
    pub fn n_open(&self) -> usize {
        self.open.len()
    }

    /// Number of 0-clusters.
    pub fn n_closed(&self) -> usize {
        self.closed.len()
    }

    pub fn n_open_unbounded(&self) -> usize {
        self.open.iter().filter(|c| c.unbounded_proxy()).count()
    }

    pub fn n_closed_unbounded(&self) -> usize {
        self.closed.iter().filter(|c| c.unbounded_proxy()).count()
    }
}

fn collect_clusters(
    dsu: &mut DisplacementDsu,
    member: impl Fn(VertexId) -> Option<bool>,
    boundary: impl Fn(VertexId) -> bool,
) -> ClusterStats {
    let n = dsu.len();
    let mut index: Vec<Option<(bool, usize)>> = vec![None; n];
    let mut stats = ClusterStats::default();
    for v in 0..n {
        let Some(open) = member(v) else { continue };
        let r = dsu.root(v);
        let list = if open { &mut stats.open } else { &mut stats.closed };
        let i = match index[r] {
            Some((_, i)) => i,
            None => {
                list.push(Cluster {
                    vertices: Vec::new(),
                    touches_boundary: false,
                    wraps: dsu.wraps(r),
                });
                index[r] = Some((open, list.len() - 1));
                list.len() - 1
            }
        };
        list[i].vertices.push(v);
        list[i].touches_boundary |= boundary(v);
    }
    stats
}

/// Open clusters are components of the subgraph induced by open vertices;
/// closed clusters likewise for closed vertices.
pub fn cluster_stats_sites(graph: &SiteGraph, config: &SiteConfig) -> ClusterStats {
    let n = graph.vertex_count();
    let mut dsu = DisplacementDsu::new(n);
    for v in 0..n {
        for (w, lift) in graph.neighbors(v) {
            if w > v && config.state(v) == config.state(w) {
                dsu.union(v, w, lift);
            }
        }
    }
    collect_clusters(&mut dsu, |v| Some(config.state(v)), |v| graph.is_boundary(v))
}

/// Which vertices take part in a bond cluster count.
#[derive(Clone, Copy, Debug)]
pub enum BondVertices<'a> {
    /// Every vertex, isolated or not.
    All,
    /// Only the flagged vertices; a flagged vertex with no open edge is a
    /// singleton cluster.
    Mask(&'a [bool]),
}

/// Components of the open edges of `beta` on `map`. Only `open` clusters
/// are filled in.
pub fn cluster_stats_bonds(map: &CombinatorialMap, beta: &BondConfig, vertices: BondVertices<'_>) -> ClusterStats {
    let mut dsu = DisplacementDsu::new(map.vertex_count());
    for e in 0..map.edge_count() {
        if beta.state(e) {
            let d = map.edge_dart(e);
            dsu.union(map.origin(d), map.target(d), map.lift(d));
        }
    }
    let mut on_boundary = vec![false; map.vertex_count()];
    for &v in map.boundary_vertices() {
        on_boundary[v] = true;
    }
    let include = |v: VertexId| match vertices {
        BondVertices::All => Some(true),
        BondVertices::Mask(mask) => mask[v].then_some(true),
    };
    collect_clusters(&mut dsu, include, |v| on_boundary[v])
}

/// Everything needed to test the correspondence for one map and partition.
#[derive(Clone, Debug)]
pub struct DualityContext {
    pub base: CombinatorialMap,
    pub partition: FacePartition,
    pub g1: AugmentedGraph,
    pub g2: AugmentedGraph,
    pub dual: DualMap,
    g2_graph: SiteGraph,
    /// Face of Ĝ1 that each F2 face of the base map becomes.
    f2_face_in_g1: Vec<(VertexId, FaceId)>,
}

impl DualityContext {
    pub fn new(base: &CombinatorialMap, partition: &FacePartition) -> Result<Self, DualityError> {
        let (g1, g2) = hatted_graphs(base, partition)?;
        let embedding = g1.embedding().expect("hatted graphs are embedded");
        let dual = embedding.dual();
        let g2_graph = g2.percolation_graph();
        // base darts keep their ids under stellation, and F2 faces are untouched in Ĝ1
        let f2_face_in_g1 = g2
            .sites()
            .iter()
            .map(|s| (s.vertex, embedding.face_of(base.face(s.face).darts[0])))
            .collect();
        Ok(DualityContext {
            base: base.clone(),
            partition: partition.clone(),
            g1,
            g2,
            dual,
            g2_graph,
            f2_face_in_g1,
        })
    }

    pub fn base_vertex_count(&self) -> usize {
        self.base.vertex_count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    /// A face of the open subgraph meets two dual components.
    RegionSplitsDual,
    /// A dual component meets two faces of the open subgraph.
    DualSplitsRegion,
    /// The closed Ĝ2 vertices inside a face are not exactly one 0-cluster.
    NotOneClosedCluster,
    /// A 0-cluster of Ĝ2 lies inside no face.
    UncoveredClosedCluster,
    /// Open site clusters and open bond clusters differ in number.
    OpenCountMismatch,
    /// 0-clusters plus empty faces differ from the number of dual components.
    ClosedCountMismatch,
    /// A dual component and its 0-cluster disagree on wrapping the torus.
    WrapMismatch,
    /// `β(e) ≠ ω(u)ω(v)` or `β(e) + β⁺(e⁺) ≠ 1`.
    BondRule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// A face of Ĝ1 inside the offending region, if there is one.
    pub face: Option<FaceId>,
    pub witness: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorrespondenceReport {
    /// Faces of the open subgraph Ĝ1(ω).
    pub regions: usize,
    pub dual_components: usize,
    pub closed_clusters: usize,
    pub empty_regions: usize,
    pub open_site_clusters: usize,
    pub open_bond_clusters: usize,
    /// Regions excluded because they reach the boundary of a plane patch.
    pub exterior_regions: usize,
    pub violations: Vec<Violation>,
}

impl CorrespondenceReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

struct PlainDsu(Vec<u32>);

impl PlainDsu {
    fn new(n: usize) -> Self {
        PlainDsu((0..n as u32).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] as usize != x {
            let p = self.0[x] as usize;
            self.0[x] = self.0[p];
            x = p;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b) as u32;
        }
    }
}

/// Checks the face / dual component / 0-cluster correspondence and the
/// finite cluster-count identities for one configuration `omega` on the
/// base vertices.
pub fn correspondence_check(ctx: &DualityContext, omega: &[bool]) -> Result<CorrespondenceReport, DualityError> {
    let h1 = ctx.g1.embedding().expect("hatted graphs are embedded");
    let omega1 = SiteConfig::extend(&ctx.g1, omega, true)?;
    let beta = bond_from_sites(&ctx.g1, &omega1)?;
    let beta_dual = dual_bond_config(&beta)?;
    let mut report = CorrespondenceReport::default();
    let violation = |kind, face: Option<FaceId>, witness: String| Violation { kind, face, witness };

    // bond rule, checked edge by edge from the dart table
    for e in 0..h1.edge_count() {
        let d = h1.edge_dart(e);
        let expected = omega1.state(h1.origin(d)) && omega1.state(h1.target(d));
        if beta.state(e) != expected || beta.state(e) == beta_dual.state(ctx.dual.edge_pairing[e]) {
            report.violations.push(violation(ViolationKind::BondRule, None, format!("edge {e}")));
        }
    }

    // regions: faces, non-open edges and closed vertices of Ĝ1, glued by incidence
    let nf = h1.face_count();
    let ne = h1.edge_count();
    let edge_cell = |e: EdgeId| nf + e;
    let vertex_cell = |v: VertexId| nf + ne + v;
    let mut cells = PlainDsu::new(nf + ne + h1.vertex_count());
    for d in 0..h1.dart_count() {
        let e = h1.edge_of(d);
        if !beta.state(e) {
            cells.union(h1.face_of(d), edge_cell(e));
            let v = h1.origin(d);
            if !omega1.state(v) {
                cells.union(edge_cell(e), vertex_cell(v));
            }
        }
    }

    // dual components of the open edges of β⁺
    let dual = &ctx.dual.map;
    let mut comps = DisplacementDsu::new(dual.vertex_count());
    for e in 0..dual.edge_count() {
        if beta_dual.state(e) {
            let d = dual.edge_dart(e);
            comps.union(dual.origin(d), dual.target(d), dual.lift(d));
        }
    }

    let region_of_face: Vec<usize> = (0..nf).map(|f| cells.find(f)).collect();
    let comp_of_face: Vec<usize> = (0..nf).map(|f| comps.root(f)).collect();
    let mut region_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in &region_of_face {
        let next = region_ids.len();
        region_ids.entry(r).or_insert(next);
    }
    let regions = region_ids.len();
    report.regions = regions;
    let region_index: Vec<usize> = region_of_face.iter().map(|r| region_ids[r]).collect();
    let mut first_face = vec![usize::MAX; regions];
    for f in (0..nf).rev() {
        first_face[region_index[f]] = f;
    }

    // (i) regions and dual components coincide
    let mut comp_of_region: Vec<Option<usize>> = vec![None; regions];
    let mut region_of_comp: BTreeMap<usize, usize> = BTreeMap::new();
    for f in 0..nf {
        let r = region_index[f];
        let c = comp_of_face[f];
        match comp_of_region[r] {
            None => comp_of_region[r] = Some(c),
            Some(c0) if c0 != c => report.violations.push(violation(
                ViolationKind::RegionSplitsDual,
                Some(f),
                format!("faces {} and {f}", first_face[r]),
            )),
            _ => {}
        }
        match region_of_comp.get(&c) {
            None => {
                region_of_comp.insert(c, r);
            }
            Some(&r0) if r0 != r => report.violations.push(violation(
                ViolationKind::DualSplitsRegion,
                Some(f),
                format!("dual component of face {f} also meets face {}", first_face[r0]),
            )),
            _ => {}
        }
    }
    report.dual_components = region_of_comp.len();

    // exterior regions of a plane patch: reach the outer face or a boundary vertex
    let mut exterior = vec![false; regions];
    if h1.surface() == Surface::PlanePatch {
        if let Some(outer) = h1.outer_face() {
            exterior[region_index[outer]] = true;
        }
        for &v in h1.boundary_vertices() {
            if !omega1.state(v) {
                let cell = cells.find(vertex_cell(v));
                if let Some(&r) = region_ids.get(&cell) {
                    exterior[r] = true;
                }
            }
        }
    }
    report.exterior_regions = exterior.iter().filter(|&&x| x).count();

    // closed clusters of Ĝ2(ω̄)
    let omega2 = SiteConfig::extend(&ctx.g2, omega, false)?;
    let stats2 = cluster_stats_sites(&ctx.g2_graph, &omega2);
    let mut cluster_of = vec![usize::MAX; ctx.g2.vertex_count()];
    for (i, c) in stats2.closed.iter().enumerate() {
        for &v in &c.vertices {
            cluster_of[v] = i;
        }
    }
    // (ii) C2(F): closed base vertices and F2 sites inside each region
    let mut c2: Vec<Vec<VertexId>> = vec![Vec::new(); regions];
    for v in 0..ctx.base_vertex_count() {
        if !omega[v] {
            let cell = cells.find(vertex_cell(v));
            c2[region_ids[&cell]].push(v);
        }
    }
    for &(site, face) in &ctx.f2_face_in_g1 {
        c2[region_index[face]].push(site);
    }
    let interior_cluster = |i: usize| !stats2.closed[i].touches_boundary;
    let mut covered = vec![false; stats2.closed.len()];
    for r in 0..regions {
        if exterior[r] {
            for &v in &c2[r] {
                covered[cluster_of[v]] = true;
            }
            continue;
        }
        if c2[r].is_empty() {
            report.empty_regions += 1;
            let comp = comp_of_region[r].expect("every region has a face");
            if comps.wraps(comp) {
                report.violations.push(violation(
                    ViolationKind::WrapMismatch,
                    Some(first_face[r]),
                    "wrapping region contains no closed vertex".into(),
                ));
            }
            continue;
        }
        let i = cluster_of[c2[r][0]];
        let same = c2[r].iter().all(|&v| cluster_of[v] == i);
        if !same || stats2.closed[i].vertices.len() != c2[r].len() {
            report.violations.push(violation(
                ViolationKind::NotOneClosedCluster,
                Some(first_face[r]),
                format!("C2 = {:?}", c2[r]),
            ));
        }
        covered[i] = true;
        let comp = comp_of_region[r].expect("every region has a face");
        if comps.wraps(comp) != stats2.closed[i].wraps {
            report.violations.push(violation(
                ViolationKind::WrapMismatch,
                Some(first_face[r]),
                format!("dual wraps {}, closed cluster wraps {}", comps.wraps(comp), stats2.closed[i].wraps),
            ));
        }
    }
    for (i, c) in stats2.closed.iter().enumerate() {
        if !covered[i] {
            report.violations.push(violation(
                ViolationKind::UncoveredClosedCluster,
                None,
                format!("closed cluster {:?}", c.vertices),
            ));
        }
    }
    let interior_closed = (0..stats2.closed.len()).filter(|&i| interior_cluster(i)).count();
    report.closed_clusters = interior_closed;
    let interior_regions = regions - report.exterior_regions;
    if interior_closed + report.empty_regions != interior_regions {
        report.violations.push(violation(
            ViolationKind::ClosedCountMismatch,
            None,
            format!(
                "{interior_closed} closed clusters + {} empty regions vs {interior_regions} dual components",
                report.empty_regions
            ),
        ));
    }

    // (iv) open site clusters of Ĝ1 versus open bond clusters with singletons
    let g1_graph = ctx.g1.percolation_graph();
    let site_stats = cluster_stats_sites(&g1_graph, &omega1);
    let bond_stats = cluster_stats_bonds(h1, &beta, BondVertices::Mask(omega1.states()));
    report.open_site_clusters = site_stats.n_open();
    report.open_bond_clusters = bond_stats.n_open();
    if site_stats.n_open() != bond_stats.n_open() || site_stats.n_open_unbounded() != bond_stats.n_open_unbounded() {
        report.violations.push(violation(
            ViolationKind::OpenCountMismatch,
            None,
            format!("{} site clusters vs {} bond clusters", site_stats.n_open(), bond_stats.n_open()),
        ));
    }
    Ok(report)
}

/// Totals of an exhaustive run over every configuration of the base
/// vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExhaustiveReport {
    pub configurations: u64,
    pub violating_configurations: u64,
    pub violations_by_kind: BTreeMap<ViolationKind, u64>,
    /// The first few violations, with the configuration index (bit `v` is
    /// the state of vertex `v`).
    pub examples: Vec<(u64, Violation)>,
    pub bond_rule_edges_checked: u64,
}

impl ExhaustiveReport {
    pub fn total_violations(&self) -> u64 {
        self.violations_by_kind.values().sum()
    }

    fn merge(mut self, other: ExhaustiveReport) -> ExhaustiveReport {
        self.configurations += other.configurations;
        self.violating_configurations += other.violating_configurations;
        for (k, n) in other.violations_by_kind {
            *self.violations_by_kind.entry(k).or_default() += n;
        }
        for ex in other.examples {
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(ex);
            }
        }
        self.bond_rule_edges_checked += other.bond_rule_edges_checked;
        self
    }
}

const MAX_EXAMPLES: usize = 10;
const CHUNK: u64 = 256;

/// Runs [`correspondence_check`] on all `2^|V|` configurations.
pub fn exhaustive_check(ctx: &DualityContext, max_vertices: usize) -> Result<ExhaustiveReport, DualityError> {
    let n = ctx.base_vertex_count();
    if n > max_vertices || n >= 63 {
        return Err(DualityError::TooManyVertices {
            found: n,
            limit: max_vertices.min(62),
        });
    }
    let total = 1u64 << n;
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<Result<ExhaustiveReport, DualityError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut part = ExhaustiveReport::default();
            let mut omega = vec![false; n];
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                for (v, s) in omega.iter_mut().enumerate() {
                    *s = (idx >> v) & 1 == 1;
                }
                let r = correspondence_check(ctx, &omega)?;
                part.configurations += 1;
                part.bond_rule_edges_checked += ctx.g1.edges().len() as u64;
                if !r.is_clean() {
                    part.violating_configurations += 1;
                }
                for v in r.violations {
                    *part.violations_by_kind.entry(v.kind).or_default() += 1;
                    if part.examples.len() < MAX_EXAMPLES {
                        part.examples.push((idx, v));
                    }
                }
            }
            Ok(part)
        })
        .collect();
    let mut out = ExhaustiveReport::default();
    for p in parts {
        out = out.merge(p?);
    }
    Ok(out)
}

/// Empirical correlations of β on Ĝ1 under independent site states.
#[derive(Clone, Debug, PartialEq)]
pub struct DependenceReport {
    pub p: f64,
    pub trials: u64,
    /// Mean of `β_e` for one base edge, expected `p²`.
    pub marginal: f64,
    /// Mean of `β_e β_f` for two edges sharing one vertex, expected `p³`.
    pub adjacent_joint: f64,
    /// Sample correlation of two vertex-disjoint edges.
    pub disjoint_correlation: f64,
    /// `4 / sqrt(trials)`.
    pub tolerance: f64,
}

impl DependenceReport {
    pub fn disjoint_ok(&self) -> bool {
        self.disjoint_correlation.abs() < self.tolerance
    }
}

/// Samples site states on the base vertices of Ĝ1 and measures β on a
/// single edge, an adjacent pair and a vertex-disjoint pair of base edges.
pub fn one_dependence_probe(g1: &AugmentedGraph, p: f64, trials: u64, seed: u64) -> Result<DependenceReport, DualityError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DualityError::BadProbability(p));
    }
    let base: Vec<(VertexId, VertexId)> = g1
        .edges()
        .iter()
        .filter(|e| !g1.is_site(e.u) && !g1.is_site(e.v) && e.u != e.v)
        .map(|e| (e.u, e.v))
        .collect();
    let &(a, b) = base.first().ok_or(DualityError::NoProbeEdges)?;
    let adjacent = base
        .iter()
        .copied()
        .find(|&(u, v)| (u == a) != (v == a) && u != b && v != b)
        .ok_or(DualityError::NoProbeEdges)?;
    let disjoint = base
        .iter()
        .copied()
        .find(|&(u, v)| u != a && u != b && v != a && v != b)
        .ok_or(DualityError::NoProbeEdges)?;
    let mut vertices: Vec<VertexId> = vec![a, b, adjacent.0, adjacent.1, disjoint.0, disjoint.1];
    vertices.sort_unstable();
    vertices.dedup();
    let slot = |v: VertexId| vertices.binary_search(&v).expect("probe vertex");
    let (mut s_e, mut s_ef, mut s_g, mut s_eg) = (0u64, 0u64, 0u64, 0u64);
    let mut states = vec![false; vertices.len()];
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        for s in states.iter_mut() {
            *s = rng.random::<f64>() < p;
        }
        let be = states[slot(a)] && states[slot(b)];
        let bf = states[slot(adjacent.0)] && states[slot(adjacent.1)];
        let bg = states[slot(disjoint.0)] && states[slot(disjoint.1)];
        s_e += be as u64;
        s_ef += (be && bf) as u64;
        s_g += bg as u64;
        s_eg += (be && bg) as u64;
    }
    let n = trials as f64;
    let (me, mg) = (s_e as f64 / n, s_g as f64 / n);
    let cov = s_eg as f64 / n - me * mg;
    let var = (me * (1.0 - me)).sqrt() * (mg * (1.0 - mg)).sqrt();
    Ok(DependenceReport {
        p,
        trials,
        marginal: me,
        adjacent_joint: s_ef as f64 / n,
        disjoint_correlation: if var > 0.0 { cov / var } else { 0.0 },
        tolerance: 4.0 / n.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::PartitionStrategy;
    use crate::tilings::{generate, Family, TilingSpec};

    fn ctx(l: usize, strategy: PartitionStrategy) -> DualityContext {
        let m = generate(&TilingSpec::torus(Family::Square, l)).unwrap();
        let p = FacePartition::with_strategy(&m, &strategy).unwrap();
        DualityContext::new(&m, &p).unwrap()
    }

    #[test]
    fn bond_rule_examples() {
        let c = ctx(3, PartitionStrategy::AllF1);
        let all_open = SiteConfig::extend(&c.g1, &[true; 9], true).unwrap();
        assert!(bond_from_sites(&c.g1, &all_open).unwrap().states().iter().all(|&b| b));
        let all_closed = SiteConfig::extend(&c.g1, &[false; 9], true).unwrap();
        let beta = bond_from_sites(&c.g1, &all_closed).unwrap();
        assert!(beta.states().iter().all(|&b| !b));
        let dual = dual_bond_config(&beta).unwrap();
        assert!(dual.states().iter().all(|&b| b));
        assert_eq!(dual_bond_config(&dual).unwrap(), beta);
    }

    #[test]
    fn closed_site_is_rejected() {
        let c = ctx(3, PartitionStrategy::AllF1);
        let bad = SiteConfig::extend(&c.g1, &[true; 9], false).unwrap();
        assert!(matches!(
            bond_from_sites(&c.g1, &bad),
            Err(DualityError::ForcedStateViolated { .. })
        ));
        assert!(SiteConfig::new(vec![false], vec![Some(true)]).is_err());
    }

    #[test]
    fn missing_dual_link() {
        let beta = BondConfig::new(vec![true, false], None);
        assert!(matches!(dual_bond_config(&beta), Err(DualityError::MissingDualLink)));
    }

    #[test]
    fn four_cycle_alternating() {
        let g = SiteGraph::from_edges(4, &[(0, 1, [0, 0]), (1, 2, [0, 0]), (2, 3, [0, 0]), (3, 0, [0, 0])], false);
        let stats = cluster_stats_sites(&g, &SiteConfig::free(vec![true, false, true, false]));
        assert_eq!((stats.n_open(), stats.n_closed()), (2, 2));
        let stats = cluster_stats_sites(&g, &SiteConfig::free(vec![true; 4]));
        assert_eq!((stats.n_open(), stats.n_closed()), (1, 0));
    }

    #[test]
    fn all_open_and_all_closed_tori() {
        let c = ctx(3, PartitionStrategy::AllF1);
        let r = correspondence_check(&c, &[true; 9]).unwrap();
        assert!(r.is_clean(), "{:?}", r.violations);
        assert_eq!(r.empty_regions, r.regions);
        assert_eq!(r.open_site_clusters, 1);
        let r = correspondence_check(&c, &[false; 9]).unwrap();
        assert!(r.is_clean(), "{:?}", r.violations);
        assert_eq!((r.regions, r.closed_clusters), (1, 1));
    }

    #[test]
    fn mismatched_pair_is_caught() {
        // Ĝ2 taken from the wrong partition: closed clusters no longer match faces
        let good = ctx(3, PartitionStrategy::AllF1);
        let other = ctx(3, PartitionStrategy::AllF2);
        let broken = DualityContext {
            g2: other.g2.clone(),
            g2_graph: other.g2_graph.clone(),
            f2_face_in_g1: Vec::new(),
            ..good
        };
        let r = exhaustive_check(&broken, 9).unwrap();
        assert!(r.total_violations() > 0);
        assert!(r.violations_by_kind.contains_key(&ViolationKind::NotOneClosedCluster));
    }

    #[test]
    fn probe_marginals() {
        let c = ctx(4, PartitionStrategy::AllF1);
        let r = one_dependence_probe(&c.g1, 0.5, 20_000, 1).unwrap();
        assert!((r.marginal - 0.25).abs() < 0.02);
        assert!((r.adjacent_joint - 0.125).abs() < 0.015);
        assert!(r.disjoint_ok());
    }
}
