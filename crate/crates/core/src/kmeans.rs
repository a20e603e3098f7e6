//! Threshold-tree construction for k-means via solo and bulk cuts.
//!
//! Cuts are drawn from a squared-gap distribution: a dimension-interval pair
//! `(i, [a, b])` delimited by consecutive point projections is chosen with
//! probability `(b-a)^2 / L2`, then the threshold inside the interval follows
//! the triangular density `4/(b-a)^2 * min(theta-a, b-theta)`. Nodes of high
//! stretch take a single cut conditioned on separating a maximum-stretch far
//! pair (solo); low-stretch nodes repeatedly sample cuts conditioned on not
//! separating close pairs until every far pair is separated (bulk).

use crate::error::{Error, Result};
use crate::model::{l2_sq_distance, PointSet, ThresholdCut, ThresholdTree, TreeNode};
use crate::seed::Seed;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Intervals shorter than this fraction of the coordinate span are dropped
/// from tables to avoid density blowups on near-degenerate input.
const INTERVAL_FLOOR: f64 = 1e-12;

/// Hard cap on cut draws at a single bulk node; hitting it signals broken
/// geometry rather than bad luck.
const MAX_BULK_DRAWS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEntry {
    pub dim: usize,
    pub a: f64,
    pub b: f64,
}

impl IntervalEntry {
    pub fn weight(&self) -> f64 {
        (self.b - self.a) * (self.b - self.a)
    }
}

/// The dimension-interval decomposition of a point set with squared-length
/// weights.
#[derive(Debug, Clone)]
pub struct IntervalTable {
    entries: Vec<IntervalEntry>,
    cumulative: Vec<f64>,
    total: f64,
}

impl IntervalTable {
    /// Consecutive gaps between sorted distinct projections, per dimension;
    /// zero-length (and numerically tiny) gaps are dropped.
    pub fn build(v: &PointSet) -> IntervalTable {
        let mut span: f64 = 0.0;
        for dim in 0..v.dim() {
            let (lo, hi) = projection_range(v, dim);
            span = span.max(hi - lo);
        }
        let floor = span * INTERVAL_FLOOR;
        let mut entries = Vec::new();
        for dim in 0..v.dim() {
            let coords = sorted_projections(v, dim);
            for gap in coords.windows(2) {
                if gap[1] - gap[0] > floor {
                    entries.push(IntervalEntry { dim, a: gap[0], b: gap[1] });
                }
            }
        }
        IntervalTable::from_entries(entries)
    }

    fn from_entries(entries: Vec<IntervalEntry>) -> IntervalTable {
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut total = 0.0;
        for e in &entries {
            total += e.weight();
            cumulative.push(total);
        }
        IntervalTable { entries, cumulative, total }
    }

    pub fn entries(&self) -> &[IntervalEntry] {
        &self.entries
    }

    /// Total squared-gap weight L2.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Restriction for bulk cuts: drop every interval contained in the
    /// projection span of a close pair (squared distance below
    /// `diameter / k_global^4`).
    pub fn restrict_close_pairs(&self, v: &PointSet, k_global: usize) -> IntervalTable {
        let n = v.len();
        let mut delta: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                delta = delta.max(l2_sq_distance(v.point(i), v.point(j)));
            }
        }
        let threshold = delta / (k_global as f64).powi(4);
        let mut close_spans: Vec<(usize, f64, f64)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if l2_sq_distance(v.point(i), v.point(j)) < threshold {
                    for dim in 0..v.dim() {
                        let (a, b) = (v.point(i)[dim], v.point(j)[dim]);
                        if a != b {
                            close_spans.push((dim, a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
        let entries = self
            .entries
            .iter()
            .filter(|e| {
                !close_spans
                    .iter()
                    .any(|&(dim, lo, hi)| dim == e.dim && lo <= e.a && e.b <= hi)
            })
            .copied()
            .collect();
        IntervalTable::from_entries(entries)
    }

    /// Restriction for solo cuts: keep only intervals strictly between the
    /// pair's projections, so every sample separates the pair. The total
    /// weight equals the pair's pseudo-distance.
    pub fn restrict_to_pair(&self, x: &[f64], y: &[f64]) -> IntervalTable {
        let entries = self
            .entries
            .iter()
            .filter(|e| {
                let (lo, hi) = (x[e.dim].min(y[e.dim]), x[e.dim].max(y[e.dim]));
                lo <= e.a && e.b <= hi
            })
            .copied()
            .collect();
        IntervalTable::from_entries(entries)
    }

    /// Draw one cut: interval with probability proportional to its squared
    /// length, then a triangular threshold inside it. Thresholds colliding
    /// with an interval endpoint are redrawn.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<ThresholdCut> {
        if self.total <= 0.0 {
            return Err(Error::Degenerate("interval table has no weight".into()));
        }
        loop {
            let r = rng.gen_range(0.0..self.total);
            let idx = self.cumulative.partition_point(|&c| c <= r);
            let e = self.entries[idx.min(self.entries.len() - 1)];
            let theta = sample_triangular(e.a, e.b, rng);
            if theta > e.a && theta < e.b {
                return Ok(ThresholdCut { dim: e.dim, theta });
            }
        }
    }
}

fn projection_range(v: &PointSet, dim: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in v.iter() {
        lo = lo.min(p[dim]);
        hi = hi.max(p[dim]);
    }
    (lo, hi)
}

fn sorted_projections(v: &PointSet, dim: usize) -> Vec<f64> {
    let mut coords: Vec<f64> = v.iter().map(|p| p[dim]).collect();
    coords.sort_by(f64::total_cmp);
    coords.dedup();
    coords
}

/// Density `4/(b-a)^2 * min(theta-a, b-theta)` on `[a, b]`.
pub fn triangular_pdf(a: f64, b: f64, theta: f64) -> f64 {
    if theta < a || theta > b || b <= a {
        return 0.0;
    }
    4.0 / ((b - a) * (b - a)) * (theta - a).min(b - theta)
}

fn sample_triangular(a: f64, b: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    let w = b - a;
    if u < 0.5 {
        a + w * (u / 2.0).sqrt()
    } else {
        b - w * ((1.0 - u) / 2.0).sqrt()
    }
}

/// Squared-gap pseudo-distance: per dimension, the sum of squared lengths of
/// the gaps delimited by `x_i`, `y_i`, and the projections of `v` strictly
/// between them.
pub fn pseudo_distance(v: &PointSet, x: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for dim in 0..v.dim() {
        let (lo, hi) = (x[dim].min(y[dim]), x[dim].max(y[dim]));
        if lo == hi {
            continue;
        }
        let coords = sorted_projections(v, dim);
        let mut prev = lo;
        for &c in coords.iter().filter(|&&c| c > lo && c < hi) {
            total += (c - prev) * (c - prev);
            prev = c;
        }
        total += (hi - prev) * (hi - prev);
    }
    total
}

/// The maximum-stretch far pair of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct StretchReport {
    /// `s(V) = max ||x-y||^2 / d2(x, y)` over far pairs.
    pub value: f64,
    /// Indices of the pair attaining it (lexicographically first on ties).
    pub pair: (usize, usize),
    /// Squared diameter of the set.
    pub diameter: f64,
}

/// Scan all far pairs (squared distance at least half the squared diameter)
/// for the maximum stretch.
pub fn stretch(v: &PointSet) -> Result<StretchReport> {
    let n = v.len();
    if n < 2 {
        return Err(Error::InvalidParameter("stretch needs at least 2 points".into()));
    }
    let mut delta: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            delta = delta.max(l2_sq_distance(v.point(i), v.point(j)));
        }
    }
    if delta == 0.0 {
        return Err(Error::Degenerate("all points identical".into()));
    }
    let mut best: Option<StretchReport> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = l2_sq_distance(v.point(i), v.point(j));
            if dist < delta / 2.0 {
                continue;
            }
            let ratio = dist / pseudo_distance(v, v.point(i), v.point(j));
            if best.as_ref().is_none_or(|b| ratio > b.value) {
                best = Some(StretchReport { value: ratio, pair: (i, j), diameter: delta });
            }
        }
    }
    Ok(best.expect("some pair attains the diameter"))
}

/// Draw one cut from the base squared-gap distribution of `v`.
pub fn sample_d2(v: &PointSet, seed: Seed) -> Result<ThresholdCut> {
    IntervalTable::build(v).sample(&mut seed.rng())
}

/// Draw one cut conditioned on not separating any close pair of `v`.
pub fn sample_d2_prime(v: &PointSet, k_global: usize, seed: Seed) -> Result<ThresholdCut> {
    IntervalTable::build(v)
        .restrict_close_pairs(v, k_global)
        .sample(&mut seed.rng())
}

/// Draw one cut conditioned on separating `pair`; exact, no rejection loop.
pub fn sample_d2_doubleprime(v: &PointSet, pair: (usize, usize), seed: Seed) -> Result<ThresholdCut> {
    let table = IntervalTable::build(v).restrict_to_pair(v.point(pair.0), v.point(pair.1));
    if table.total() <= 0.0 {
        return Err(Error::Degenerate("pair has zero pseudo-distance".into()));
    }
    table.sample(&mut seed.rng())
}

/// Node modes of the compressed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Solo,
    Bulk,
}

/// Compressed construction tree: solo nodes carry one cut and two children,
/// bulk nodes carry their effective cuts in sampling order and one child per
/// resulting sub-box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CompressedNode {
    Leaf { center: usize },
    Solo { cuts: Vec<ThresholdCut>, children: Vec<CompressedNode> },
    Bulk { cuts: Vec<ThresholdCut>, children: Vec<CompressedNode> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompressedTree {
    pub root: CompressedNode,
}

impl CompressedTree {
    /// (solo, bulk) internal node counts.
    pub fn count_kinds(&self) -> (usize, usize) {
        fn walk(node: &CompressedNode, solo: &mut usize, bulk: &mut usize) {
            match node {
                CompressedNode::Leaf { .. } => {}
                CompressedNode::Solo { children, .. } => {
                    *solo += 1;
                    children.iter().for_each(|c| walk(c, solo, bulk));
                }
                CompressedNode::Bulk { children, .. } => {
                    *bulk += 1;
                    children.iter().for_each(|c| walk(c, solo, bulk));
                }
            }
        }
        let (mut solo, mut bulk) = (0, 0);
        walk(&self.root, &mut solo, &mut bulk);
        (solo, bulk)
    }
}

/// Per-node construction record, kept for the property suites.
#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub kind: NodeKind,
    /// Global center indices at this node.
    pub centers: Vec<usize>,
    pub l2: f64,
    pub l2_prime: f64,
    pub delta: f64,
    pub stretch: f64,
    /// The solo threshold `|U_v| / ln^2 |U_v|`.
    pub solo_threshold: f64,
    /// Cuts drawn at this node (solo: 1; bulk: every draw, effective or not).
    pub sampled_cuts: usize,
    pub effective_cuts: usize,
    /// Solo only: size of the smaller side of the center split.
    pub min_side: Option<usize>,
    /// Squared diameter of the nearest bulk ancestor, if any.
    pub parent_bulk_delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct KmeansBuild {
    pub tree: ThresholdTree,
    pub compressed: CompressedTree,
    pub stats: Vec<NodeRecord>,
}

/// Whether a node of `n` centers with stretch `s` takes a solo cut.
pub fn is_solo(n: usize, s: f64) -> bool {
    n >= 2 && s >= solo_threshold(n)
}

/// `n / ln^2 n`; exceeds 2 for n = 2, so two-center nodes are always bulk.
pub fn solo_threshold(n: usize) -> f64 {
    let ln = (n as f64).ln();
    n as f64 / (ln * ln)
}

/// Build the k-means threshold tree over distinct centers, returning the
/// flat binary tree, the compressed tree, and per-node records.
pub fn build_tree_kmeans(centers: &PointSet, seed: Seed) -> Result<KmeansBuild> {
    for a in 0..centers.len() {
        for b in (a + 1)..centers.len() {
            if centers.point(a) == centers.point(b) {
                return Err(Error::DuplicateCenters { a, b });
            }
        }
    }
    let mut rng = seed.rng();
    build_kmeans_with_rng(centers, &mut rng)
}

pub(crate) fn build_kmeans_with_rng(
    centers: &PointSet,
    rng: &mut impl Rng,
) -> Result<KmeansBuild> {
    let k_global = centers.len();
    let all: Vec<usize> = (0..k_global).collect();
    let mut stats = Vec::new();
    let (node, compressed) = build_node(centers, k_global, &all, None, rng, &mut stats)?;
    Ok(KmeansBuild {
        tree: ThresholdTree::new(node),
        compressed: CompressedTree { root: compressed },
        stats,
    })
}

fn build_node(
    centers: &PointSet,
    k_global: usize,
    sub: &[usize],
    parent_bulk_delta: Option<f64>,
    rng: &mut impl Rng,
    stats: &mut Vec<NodeRecord>,
) -> Result<(TreeNode, CompressedNode)> {
    if sub.len() == 1 {
        return Ok((TreeNode::leaf(sub[0]), CompressedNode::Leaf { center: sub[0] }));
    }
    let local = centers.select(sub);
    let report = stretch(&local)?;
    let table = IntervalTable::build(&local);
    let prime = table.restrict_close_pairs(&local, k_global);
    debug_assert!(prime.total() >= table.total() / 2.0);

    if is_solo(sub.len(), report.value) {
        let restricted =
            table.restrict_to_pair(local.point(report.pair.0), local.point(report.pair.1));
        if restricted.total() <= 0.0 {
            return Err(Error::Degenerate("max-stretch pair has zero pseudo-distance".into()));
        }
        let cut = restricted.sample(rng)?;
        let (left, right): (Vec<usize>, Vec<usize>) =
            sub.iter().partition(|&&c| cut.goes_left(centers.point(c)));
        debug_assert!(!left.is_empty() && !right.is_empty());
        stats.push(NodeRecord {
            kind: NodeKind::Solo,
            centers: sub.to_vec(),
            l2: table.total(),
            l2_prime: prime.total(),
            delta: report.diameter,
            stretch: report.value,
            solo_threshold: solo_threshold(sub.len()),
            sampled_cuts: 1,
            effective_cuts: 1,
            min_side: Some(left.len().min(right.len())),
            parent_bulk_delta,
        });
        let (lnode, lcomp) = build_node(centers, k_global, &left, parent_bulk_delta, rng, stats)?;
        let (rnode, rcomp) = build_node(centers, k_global, &right, parent_bulk_delta, rng, stats)?;
        Ok((
            TreeNode::internal(cut, lnode, rnode),
            CompressedNode::Solo { cuts: vec![cut], children: vec![lcomp, rcomp] },
        ))
    } else {
        let outcome = run_bulk_cuts(centers, sub, &prime, report.diameter, rng)?;
        stats.push(NodeRecord {
            kind: NodeKind::Bulk,
            centers: sub.to_vec(),
            l2: table.total(),
            l2_prime: prime.total(),
            delta: report.diameter,
            stretch: report.value,
            solo_threshold: solo_threshold(sub.len()),
            sampled_cuts: outcome.sampled,
            effective_cuts: outcome.cuts.len(),
            min_side: None,
            parent_bulk_delta,
        });
        let mut children = Vec::new();
        let node = attach(
            centers,
            k_global,
            outcome.fragment,
            Some(report.diameter),
            rng,
            stats,
            &mut children,
        )?;
        Ok((node, CompressedNode::Bulk { cuts: outcome.cuts, children }))
    }
}

/// Partial tree grown at a bulk node before recursing into its parts.
enum Frag {
    Part(Vec<usize>),
    Split(ThresholdCut, Box<Frag>, Box<Frag>),
}

impl Frag {
    fn apply(self, centers: &PointSet, cut: ThresholdCut, effective: &mut bool) -> Frag {
        match self {
            Frag::Part(members) => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    members.iter().partition(|&&c| cut.goes_left(centers.point(c)));
                if left.is_empty() || right.is_empty() {
                    Frag::Part(members)
                } else {
                    *effective = true;
                    Frag::Split(cut, Box::new(Frag::Part(left)), Box::new(Frag::Part(right)))
                }
            }
            Frag::Split(c, l, r) => Frag::Split(
                c,
                Box::new(l.apply(centers, cut, effective)),
                Box::new(r.apply(centers, cut, effective)),
            ),
        }
    }

    fn parts(&self, out: &mut Vec<Vec<usize>>) {
        match self {
            Frag::Part(members) => out.push(members.clone()),
            Frag::Split(_, l, r) => {
                l.parts(out);
                r.parts(out);
            }
        }
    }
}

struct BulkOutcome {
    fragment: Frag,
    cuts: Vec<ThresholdCut>,
    sampled: usize,
}

/// Sample cuts from the restricted distribution until every far pair of the
/// node's original center set is separated across the accumulated parts.
fn run_bulk_cuts(
    centers: &PointSet,
    sub: &[usize],
    prime: &IntervalTable,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<BulkOutcome> {
    let mut far_pairs: Vec<(usize, usize)> = Vec::new();
    for (i, &a) in sub.iter().enumerate() {
        for &b in &sub[(i + 1)..] {
            if l2_sq_distance(centers.point(a), centers.point(b)) >= delta / 2.0 {
                far_pairs.push((a, b));
            }
        }
    }
    let mut part_of: std::collections::HashMap<usize, usize> =
        sub.iter().map(|&c| (c, 0)).collect();
    let mut fragment = Frag::Part(sub.to_vec());
    let mut cuts = Vec::new();
    let mut sampled = 0;
    while !far_pairs.is_empty() {
        if sampled >= MAX_BULK_DRAWS {
            return Err(Error::Degenerate(format!(
                "bulk node did not separate its far pairs within {MAX_BULK_DRAWS} draws"
            )));
        }
        let cut = prime.sample(rng)?;
        sampled += 1;
        let mut effective = false;
        fragment = fragment.apply(centers, cut, &mut effective);
        if !effective {
            continue;
        }
        cuts.push(cut);
        let mut parts = Vec::new();
        fragment.parts(&mut parts);
        for (id, part) in parts.iter().enumerate() {
            for &c in part {
                part_of.insert(c, id);
            }
        }
        far_pairs.retain(|&(a, b)| part_of[&a] == part_of[&b]);
    }
    Ok(BulkOutcome { fragment, cuts, sampled })
}

/// Number of draws a standalone bulk experiment takes on point set `v`;
/// used to test the expected-cut-count bound.
pub fn bulk_cut_draws(v: &PointSet, k_global: usize, rng: &mut impl Rng) -> Result<usize> {
    let report = stretch(v)?;
    let prime = IntervalTable::build(v).restrict_close_pairs(v, k_global);
    let sub: Vec<usize> = (0..v.len()).collect();
    run_bulk_cuts(v, &sub, &prime, report.diameter, rng).map(|o| o.sampled)
}

fn attach(
    centers: &PointSet,
    k_global: usize,
    fragment: Frag,
    last_bulk_delta: Option<f64>,
    rng: &mut impl Rng,
    stats: &mut Vec<NodeRecord>,
    children: &mut Vec<CompressedNode>,
) -> Result<TreeNode> {
    match fragment {
        Frag::Part(members) => {
            let (node, comp) =
                build_node(centers, k_global, &members, last_bulk_delta, rng, stats)?;
            children.push(comp);
            Ok(node)
        }
        Frag::Split(cut, l, r) => {
            let lnode = attach(centers, k_global, *l, last_bulk_delta, rng, stats, children)?;
            let rnode = attach(centers, k_global, *r, last_bulk_delta, rng, stats, children)?;
            Ok(TreeNode::internal(cut, lnode, rnode))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::is_separating;

    fn ps(points: &[&[f64]]) -> PointSet {
        PointSet::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn interval_table_one_dim() {
        let v = ps(&[&[0.0], &[1.0], &[3.0]]);
        let table = IntervalTable::build(&v);
        assert_eq!(
            table.entries(),
            &[
                IntervalEntry { dim: 0, a: 0.0, b: 1.0 },
                IntervalEntry { dim: 0, a: 1.0, b: 3.0 },
            ]
        );
        assert_eq!(table.total(), 5.0);
    }

    #[test]
    fn interval_counts_per_dimension() {
        // Four distinct projections in dim 0, constant dim 1.
        let v = ps(&[&[0.0, 2.0], &[1.0, 2.0], &[4.0, 2.0], &[9.0, 2.0]]);
        let table = IntervalTable::build(&v);
        assert_eq!(table.entries().len(), 3);
        assert!(table.entries().iter().all(|e| e.dim == 0));
    }

    #[test]
    fn pseudo_distance_examples() {
        let v = ps(&[&[0.0], &[1.0], &[3.0]]);
        assert_eq!(pseudo_distance(&v, &[0.0], &[0.0]), 0.0);
        assert_eq!(pseudo_distance(&v, &[0.0], &[3.0]), 5.0);
    }

    #[test]
    fn stretch_two_points_is_one() {
        let v = ps(&[&[0.0, 1.0], &[2.0, -1.0]]);
        let r = stretch(&v).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.pair, (0, 1));
    }

    #[test]
    fn stretch_three_collinear() {
        let v = ps(&[&[0.0], &[1.0], &[2.0]]);
        let r = stretch(&v).unwrap();
        assert_eq!(r.pair, (0, 2));
        assert_eq!(r.diameter, 4.0);
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stretch_rejects_degenerate() {
        let v = ps(&[&[1.0], &[1.0]]);
        assert!(matches!(stretch(&v), Err(Error::Degenerate(_))));
        let v = ps(&[&[1.0]]);
        assert!(matches!(stretch(&v), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn triangular_density_shape() {
        let (a, b) = (1.0, 3.0);
        assert!((triangular_pdf(a, b, 2.0) - 2.0 / (b - a)).abs() < 1e-12);
        assert_eq!(triangular_pdf(a, b, 0.5), 0.0);
        // Numerical normalization check.
        let steps = 100_000;
        let h = (b - a) / steps as f64;
        let integral: f64 = (0..steps)
            .map(|i| triangular_pdf(a, b, a + (i as f64 + 0.5) * h) * h)
            .sum();
        assert!((integral - 1.0).abs() < 1e-6);
    }

    #[test]
    fn triangular_samples_match_analytic_density() {
        // Bin 1e5 inverse-transform samples against bin masses integrated
        // from the density formula, which shares no code with the sampler.
        let (a, b) = (1.0, 3.0);
        let bins = 20usize;
        let mut counts = vec![0u64; bins];
        let mut rng = Seed(19).rng();
        let samples = 100_000;
        for _ in 0..samples {
            let theta = sample_triangular(a, b, &mut rng);
            let idx = ((theta - a) / (b - a) * bins as f64) as usize;
            counts[idx.min(bins - 1)] += 1;
        }
        let probs: Vec<f64> = (0..bins)
            .map(|i| {
                let lo = a + (b - a) * i as f64 / bins as f64;
                let hi = a + (b - a) * (i as f64 + 1.0) / bins as f64;
                // Trapezoid integration on a fine grid within the bin.
                let steps = 200;
                let h = (hi - lo) / steps as f64;
                (0..steps)
                    .map(|j| triangular_pdf(a, b, lo + (j as f64 + 0.5) * h) * h)
                    .sum()
            })
            .collect();
        let gof = crate::stats::chi_squared_gof(&counts, &probs).unwrap();
        assert!(!gof.rejects_at(1e-3), "p-value {:.2e}", gof.p_value);
    }

    #[test]
    fn d2_interval_selection_frequency() {
        // Weights 1 and 4: the long interval is chosen with probability 4/5.
        let v = ps(&[&[0.0], &[1.0], &[3.0]]);
        let table = IntervalTable::build(&v);
        let mut rng = Seed(11).rng();
        let trials = 100_000;
        let mut hits = 0;
        for _ in 0..trials {
            if table.sample(&mut rng).unwrap().theta > 1.0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        let sigma = (0.8 * 0.2 / trials as f64).sqrt();
        assert!((freq - 0.8).abs() < 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn prime_restriction_without_close_pairs_is_identity() {
        let v = ps(&[&[0.0, 0.0], &[1.0, 2.0], &[3.0, 1.0]]);
        let table = IntervalTable::build(&v);
        let prime = table.restrict_close_pairs(&v, 3);
        assert_eq!(table.entries(), prime.entries());
    }

    #[test]
    fn prime_restriction_drops_close_span() {
        // With k_global = 2 the close threshold is delta/16 = 25, so the
        // pair {0, 0.01} is close and its span's interval is rejected.
        let v = ps(&[&[0.0], &[0.01], &[20.0]]);
        let table = IntervalTable::build(&v);
        let prime = table.restrict_close_pairs(&v, 2);
        assert_eq!(prime.entries().len(), 1);
        assert_eq!(prime.entries()[0].a, 0.01);
        assert!(prime.total() >= table.total() / 2.0);
        // Sampled cuts never land strictly inside the close pair's span.
        let mut rng = Seed(21).rng();
        for _ in 0..1000 {
            let cut = prime.sample(&mut rng).unwrap();
            assert!(cut.theta > 0.01 && cut.theta < 20.0);
        }
    }

    #[test]
    fn doubleprime_support_is_between_pair() {
        let v = ps(&[&[0.0, 5.0], &[1.0, 0.0], &[3.0, 2.0], &[2.0, 9.0]]);
        let pair = (1, 2);
        for s in 0..200u64 {
            let cut = sample_d2_doubleprime(&v, pair, Seed(s)).unwrap();
            assert!(cut.separates(v.point(pair.0), v.point(pair.1)));
            let (lo, hi) = (
                v.point(pair.0)[cut.dim].min(v.point(pair.1)[cut.dim]),
                v.point(pair.0)[cut.dim].max(v.point(pair.1)[cut.dim]),
            );
            assert!(cut.theta > lo && cut.theta < hi);
        }
    }

    #[test]
    fn doubleprime_total_equals_pair_pseudo_distance() {
        let v = ps(&[&[0.0, 5.0], &[1.0, 0.0], &[3.0, 2.0], &[2.0, 9.0]]);
        let table = IntervalTable::build(&v).restrict_to_pair(v.point(0), v.point(3));
        let d2 = pseudo_distance(&v, v.point(0), v.point(3));
        assert!((table.total() - d2).abs() < 1e-12 * d2.max(1.0));
    }

    #[test]
    fn two_centers_build_is_bulk_with_two_leaves() {
        let centers = ps(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let build = build_tree_kmeans(&centers, Seed(3)).unwrap();
        assert_eq!(build.tree.leaf_count(), 2);
        let (solo, bulk) = build.compressed.count_kinds();
        assert_eq!((solo, bulk), (0, 1));
        assert!(is_separating(&build.tree, &centers));
    }

    #[test]
    fn single_center_build_is_leaf() {
        let centers = ps(&[&[2.0, 2.0]]);
        let build = build_tree_kmeans(&centers, Seed(3)).unwrap();
        assert_eq!(build.tree.leaf_count(), 1);
        assert_eq!(build.compressed.root, CompressedNode::Leaf { center: 0 });
    }

    #[test]
    fn collinear_range_forces_solo_root() {
        // Stretch of {0..=7} on a line is 7, above 8/ln^2(8) ~ 1.85.
        let centers = PointSet::new((0..8).map(|i| vec![i as f64]).collect()).unwrap();
        let build = build_tree_kmeans(&centers, Seed(5)).unwrap();
        assert_eq!(build.stats[0].kind, NodeKind::Solo);
        assert!(is_separating(&build.tree, &centers));
    }

    #[test]
    fn builds_always_separate_and_satisfy_node_invariants() {
        let mut rng = Seed(17).rng();
        for trial in 0..30u64 {
            let n = 2 + (trial as usize % 9);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let centers = PointSet::new(points).unwrap();
            let build = build_tree_kmeans(&centers, Seed(trial)).unwrap();
            assert!(is_separating(&build.tree, &centers));
            for rec in &build.stats {
                assert!(rec.l2_prime >= rec.l2 / 2.0, "close-pair restriction lost too much");
                if rec.kind == NodeKind::Solo {
                    assert!(rec.stretch >= rec.solo_threshold);
                    assert!(rec.min_side.unwrap() >= 1);
                } else if let Some(parent) = rec.parent_bulk_delta {
                    assert!(rec.delta < parent / 2.0 + 1e-9, "diameter did not halve");
                }
            }
        }
    }

    #[test]
    fn compressed_tree_serializes_with_kind_tags() {
        let centers = ps(&[&[0.0], &[1.0]]);
        let build = build_tree_kmeans(&centers, Seed(8)).unwrap();
        let json = serde_json::to_value(&build.compressed).unwrap();
        assert_eq!(json["kind"], "bulk");
        assert_eq!(json["children"][0]["kind"], "leaf");
        let back: CompressedTree = serde_json::from_value(json).unwrap();
        assert_eq!(back, build.compressed);
    }
}
