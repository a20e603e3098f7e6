//! Geometric primitives: point sets, clusterings, threshold cuts and trees.
//!
//! A threshold tree splits space with axis-aligned cuts `(dim, theta)`;
//! coordinates exactly equal to `theta` route left. Leaf regions partition
//! space, and a tree *separates* a center set when every leaf region holds
//! exactly one center.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An ordered collection of points in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPointSet", into = "RawPointSet")]
pub struct PointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawPointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<RawPointSet> for PointSet {
    type Error = Error;
    fn try_from(raw: RawPointSet) -> Result<Self> {
        let ps = PointSet::new(raw.points)?;
        if ps.dim != raw.dim {
            return Err(Error::DimensionMismatch { expected: raw.dim, got: ps.dim });
        }
        Ok(ps)
    }
}

impl From<PointSet> for RawPointSet {
    fn from(ps: PointSet) -> Self {
        RawPointSet { dim: ps.dim, points: ps.points }
    }
}

impl PointSet {
    /// Build a point set; all points must share one dimension `d >= 1` and
    /// carry only finite coordinates.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyPointSet)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteCoordinate { point: i });
            }
        }
        Ok(PointSet { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.as_slice())
    }

    /// Subset of the points, in the given index order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        PointSet {
            dim: self.dim,
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }

    /// Parse CSV rows of `d` float columns, one point per row, no header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| {
                Error::InvalidParameter(format!("csv row {}: {e}", lineno + 1))
            })?;
            points.push(row);
        }
        PointSet::new(points)
    }

    /// CSV rendering matching [`PointSet::from_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn l1_norm(p: &[f64]) -> f64 {
    p.iter().map(|c| c.abs()).sum()
}

pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

pub fn l2_sq_norm(p: &[f64]) -> f64 {
    p.iter().map(|c| c * c).sum()
}

pub fn l2_sq_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Cost exponent: 1 for k-medians (sum of l1 distances), 2 for k-means
/// (sum of squared l2 distances).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostExponent {
    One,
    Two,
}

impl CostExponent {
    pub fn point_cost(self, x: &[f64], center: &[f64]) -> f64 {
        match self {
            CostExponent::One => l1_distance(x, center),
            CostExponent::Two => l2_sq_distance(x, center),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            CostExponent::One => 1,
            CostExponent::Two => 2,
        }
    }
}

impl TryFrom<u8> for CostExponent {
    type Error = Error;
    fn try_from(q: u8) -> Result<Self> {
        match q {
            1 => Ok(CostExponent::One),
            2 => Ok(CostExponent::Two),
            other => Err(Error::InvalidParameter(format!("q must be 1 or 2, got {other}"))),
        }
    }
}

impl Serialize for CostExponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for CostExponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let q = u8::deserialize(d)?;
        CostExponent::try_from(q).map_err(serde::de::Error::custom)
    }
}

/// A reference clustering: k distinct centers, an assignment of points to
/// centers, and the cost exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    centers: PointSet,
    assignment: Vec<usize>,
    q: CostExponent,
}

impl Clustering {
    pub fn new(centers: PointSet, assignment: Vec<usize>, q: CostExponent) -> Result<Self> {
        let k = centers.len();
        for a in 0..k {
            for b in (a + 1)..k {
                if centers.point(a) == centers.point(b) {
                    return Err(Error::DuplicateCenters { a, b });
                }
            }
        }
        for (row, &value) in assignment.iter().enumerate() {
            if value >= k {
                return Err(Error::InvalidAssignment { row, value, k });
            }
        }
        Ok(Clustering { centers, assignment, q })
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn q(&self) -> CostExponent {
        self.q
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }
}

/// Sum of q-norm costs of each point against its assigned center.
pub fn cost_q(points: &PointSet, clustering: &Clustering) -> Result<f64> {
    if points.dim() != clustering.centers().dim() {
        return Err(Error::DimensionMismatch {
            expected: clustering.centers().dim(),
            got: points.dim(),
        });
    }
    if points.len() != clustering.assignment().len() {
        return Err(Error::AssignmentLength {
            expected: points.len(),
            got: clustering.assignment().len(),
        });
    }
    let q = clustering.q();
    Ok(points
        .iter()
        .zip(clustering.assignment())
        .map(|(x, &c)| q.point_cost(x, clustering.centers().point(c)))
        .sum())
}

/// Cost of an explicit assignment against a center set.
pub fn cost_of_assignment(
    points: &PointSet,
    centers: &PointSet,
    assignment: &[usize],
    q: CostExponent,
) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(x, &c)| q.point_cost(x, centers.point(c)))
        .sum()
}

/// An axis-aligned threshold cut at coordinate `dim`, value `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCut {
    pub dim: usize,
    pub theta: f64,
}

impl ThresholdCut {
    /// Points with `x[dim] <= theta` route left.
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.dim] <= self.theta
    }

    /// True when the cut puts `x` and `y` on opposite sides.
    pub fn separates(&self, x: &[f64], y: &[f64]) -> bool {
        self.goes_left(x) != self.goes_left(y)
    }
}

/// A node of a threshold tree. Internal nodes hold a cut; leaves hold the
/// index of the unique center in their region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        dim: usize,
        theta: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        center: usize,
    },
}

impl TreeNode {
    pub fn leaf(center: usize) -> TreeNode {
        TreeNode::Leaf { center }
    }

    pub fn internal(cut: ThresholdCut, left: TreeNode, right: TreeNode) -> TreeNode {
        TreeNode::Internal {
            dim: cut.dim,
            theta: cut.theta,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Axis-aligned box `{x : lo_i < x_i <= hi_i}` with infinite defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn full(dim: usize) -> AxisBox {
        AxisBox {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&lo, &hi))| c > lo && c <= hi)
    }

    fn split(&self, cut: &ThresholdCut) -> (AxisBox, AxisBox) {
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[cut.dim] = left.hi[cut.dim].min(cut.theta);
        right.lo[cut.dim] = right.lo[cut.dim].max(cut.theta);
        (left, right)
    }
}

/// A binary tree of threshold cuts whose leaf regions partition `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdTree {
    root: TreeNode,
}

impl ThresholdTree {
    pub fn new(root: TreeNode) -> ThresholdTree {
        ThresholdTree { root }
    }

    /// Single-leaf tree pointing at `center`.
    pub fn single_leaf(center: usize) -> ThresholdTree {
        ThresholdTree { root: TreeNode::leaf(center) }
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Route a point root-to-leaf (`<= theta` goes left) and return the
    /// leaf's center index.
    pub fn route(&self, x: &[f64]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { center } => return *center,
                TreeNode::Internal { dim, theta, left, right } => {
                    node = if x[*dim] <= *theta { left } else { right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        fn count(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Internal { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }

    pub fn cut_count(&self) -> usize {
        self.leaf_count() - 1
    }

    /// Materialize each leaf's region with its stored center index,
    /// left-to-right.
    pub fn leaf_boxes(&self, dim: usize) -> Vec<(AxisBox, usize)> {
        let mut out = Vec::new();
        fn walk(node: &TreeNode, region: AxisBox, out: &mut Vec<(AxisBox, usize)>) {
            match node {
                TreeNode::Leaf { center } => out.push((region, *center)),
                TreeNode::Internal { dim, theta, left, right } => {
                    let cut = ThresholdCut { dim: *dim, theta: *theta };
                    let (lbox, rbox) = region.split(&cut);
                    walk(left, lbox, out);
                    walk(right, rbox, out);
                }
            }
        }
        walk(&self.root, AxisBox::full(dim), &mut out);
        out
    }

    /// Cuts on the root path of the leaf region containing `x`.
    pub fn path_cuts(&self, x: &[f64]) -> Vec<ThresholdCut> {
        let mut cuts = Vec::new();
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { .. } => return cuts,
                TreeNode::Internal { dim, theta, left, right } => {
                    let cut = ThresholdCut { dim: *dim, theta: *theta };
                    cuts.push(cut);
                    node = if cut.goes_left(x) { left } else { right };
                }
            }
        }
    }
}

/// True iff every leaf region contains exactly one center and that center
/// matches the leaf's stored index. Malformed labelings return false.
pub fn is_separating(tree: &ThresholdTree, centers: &PointSet) -> bool {
    // With k leaves and each center routed to a leaf labeled with its own
    // index, the leaves with distinct labels are distinct, so the k centers
    // occupy all k leaves one apiece.
    tree.leaf_count() == centers.len()
        && centers.iter().enumerate().all(|(i, c)| tree.route(c) == i)
}

/// Route every point through the tree and assign it the leaf's center.
pub fn assign_by_tree(
    tree: &ThresholdTree,
    points: &PointSet,
    centers: &PointSet,
) -> Result<Vec<usize>> {
    if points.dim() != centers.dim() {
        return Err(Error::DimensionMismatch { expected: centers.dim(), got: points.dim() });
    }
    if !is_separating(tree, centers) {
        return Err(Error::NonSeparatingTree);
    }
    Ok(points.iter().map(|x| tree.route(x)).collect())
}

/// Tree cost: route points, then charge each against its leaf's center.
pub fn tree_cost(
    tree: &ThresholdTree,
    points: &PointSet,
    centers: &PointSet,
    q: CostExponent,
) -> Result<f64> {
    let assignment = assign_by_tree(tree, points, centers)?;
    Ok(cost_of_assignment(points, centers, &assignment, q))
}
