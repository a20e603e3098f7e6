//! Brute-force optimal explainable clusterings on small instances.
//!
//! Candidate thresholds are the midpoints between consecutive distinct
//! projections of the relevant point set, so no candidate ever coincides
//! with a projection and every realizable point/center partition is realized
//! by some candidate. The search is a memoized recursion over axis-aligned
//! boxes delimited by candidate cuts.

use crate::error::{Error, Result};
use crate::model::{
    cost_q, Clustering, CostExponent, PointSet, ThresholdCut, ThresholdTree, TreeNode,
};
use std::collections::HashMap;

/// Feasibility limits for the exhaustive searches.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OracleCaps {
    /// Fixed-centers mode: maximum number of centers.
    pub max_centers: usize,
    /// Total candidate cuts across dimensions.
    pub max_grid_cuts: usize,
    /// Memoized box states.
    pub max_states: usize,
    /// Free-centers mode: maximum number of leaves.
    pub max_free_k: usize,
    /// Free-centers mode: maximum dimension.
    pub max_dims: usize,
    /// Free-centers mode: maximum number of distinct data points (colocated
    /// points collapse, so instance size itself is not the limit).
    pub max_distinct_points: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_centers: 8,
            max_grid_cuts: 200,
            max_states: 4_000_000,
            max_free_k: 5,
            max_dims: 6,
            max_distinct_points: 30,
        }
    }
}

/// Candidate cuts per dimension: midpoints between consecutive distinct
/// projections of the given point sets.
#[derive(Debug, Clone)]
pub struct CandidateGrid {
    /// Per dimension: `[-inf, cut_1, ..., cut_g, +inf]`.
    boundaries: Vec<Vec<f64>>,
}

impl CandidateGrid {
    pub fn from_point_sets(sets: &[&PointSet]) -> CandidateGrid {
        let dim = sets[0].dim();
        let mut boundaries = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut coords: Vec<f64> = sets
                .iter()
                .flat_map(|ps| ps.iter().map(move |p| p[d]))
                .collect();
            coords.sort_by(f64::total_cmp);
            coords.dedup();
            let mut b = vec![f64::NEG_INFINITY];
            b.extend(coords.windows(2).map(|w| (w[0] + w[1]) / 2.0));
            b.push(f64::INFINITY);
            boundaries.push(b);
        }
        CandidateGrid { boundaries }
    }

    pub fn total_cuts(&self) -> usize {
        self.boundaries.iter().map(|b| b.len() - 2).sum()
    }

    pub fn cuts(&self, dim: usize) -> &[f64] {
        &self.boundaries[dim][1..self.boundaries[dim].len() - 1]
    }

    fn full_box(&self) -> BoxKey {
        self.boundaries.iter().map(|b| (0u16, (b.len() - 1) as u16)).collect()
    }

    fn contains(&self, key: &BoxKey, x: &[f64]) -> bool {
        key.iter().enumerate().all(|(d, &(lo, hi))| {
            x[d] > self.boundaries[d][lo as usize] && x[d] <= self.boundaries[d][hi as usize]
        })
    }

    fn cut_value(&self, dim: usize, t: u16) -> f64 {
        self.boundaries[dim][t as usize]
    }
}

type BoxKey = Vec<(u16, u16)>;

struct FixedSolver<'a> {
    points: &'a PointSet,
    centers: &'a PointSet,
    q: CostExponent,
    grid: CandidateGrid,
    memo: HashMap<BoxKey, (f64, Option<(usize, u16)>)>,
    max_states: usize,
}

impl FixedSolver<'_> {
    fn solve(&mut self, key: &BoxKey) -> Result<f64> {
        if let Some(&(cost, _)) = self.memo.get(key) {
            return Ok(cost);
        }
        if self.memo.len() >= self.max_states {
            return Err(Error::CapsExceeded(format!(
                "fixed-centers search exceeded {} box states",
                self.max_states
            )));
        }
        let centers_in: Vec<usize> = (0..self.centers.len())
            .filter(|&c| self.grid.contains(key, self.centers.point(c)))
            .collect();
        debug_assert!(!centers_in.is_empty());
        let result = if centers_in.len() == 1 {
            let center = self.centers.point(centers_in[0]);
            let cost = self
                .points
                .iter()
                .filter(|x| self.grid.contains(key, x))
                .map(|x| self.q.point_cost(x, center))
                .sum();
            (cost, None)
        } else {
            let mut best: Option<(f64, (usize, u16))> = None;
            for dim in 0..self.points.dim() {
                let (lo, hi) = key[dim];
                for t in (lo + 1)..hi {
                    let theta = self.grid.cut_value(dim, t);
                    let lefts = centers_in
                        .iter()
                        .filter(|&&c| self.centers.point(c)[dim] <= theta)
                        .count();
                    if lefts == 0 || lefts == centers_in.len() {
                        continue;
                    }
                    let mut left_key = key.clone();
                    left_key[dim] = (lo, t);
                    let mut right_key = key.clone();
                    right_key[dim] = (t, hi);
                    let cost = self.solve(&left_key)? + self.solve(&right_key)?;
                    if best.is_none_or(|(b, _)| cost < b) {
                        best = Some((cost, (dim, t)));
                    }
                }
            }
            let (cost, cut) = best.expect("distinct centers always admit a separating grid cut");
            (cost, Some(cut))
        };
        self.memo.insert(key.clone(), result);
        Ok(result.0)
    }

    fn rebuild(&self, key: &BoxKey) -> TreeNode {
        match self.memo[key] {
            (_, None) => {
                let center = (0..self.centers.len())
                    .find(|&c| self.grid.contains(key, self.centers.point(c)))
                    .expect("leaf box holds its center");
                TreeNode::leaf(center)
            }
            (_, Some((dim, t))) => {
                let (lo, hi) = key[dim];
                let mut left_key = key.clone();
                left_key[dim] = (lo, t);
                let mut right_key = key.clone();
                right_key[dim] = (t, hi);
                TreeNode::internal(
                    ThresholdCut { dim, theta: self.grid.cut_value(dim, t) },
                    self.rebuild(&left_key),
                    self.rebuild(&right_key),
                )
            }
        }
    }
}

/// Minimum-cost threshold tree separating the given centers, charging each
/// point to its leaf's center.
pub fn opt_explainable_fixed(
    points: &PointSet,
    clustering: &Clustering,
    caps: &OracleCaps,
) -> Result<(ThresholdTree, f64)> {
    cost_q(points, clustering)?; // validates dimensions and assignment
    if clustering.k() > caps.max_centers {
        return Err(Error::CapsExceeded(format!(
            "fixed-centers search supports at most {} centers, got {}",
            caps.max_centers,
            clustering.k()
        )));
    }
    let grid = CandidateGrid::from_point_sets(&[points, clustering.centers()]);
    if grid.total_cuts() > caps.max_grid_cuts {
        return Err(Error::CapsExceeded(format!(
            "candidate grid has {} cuts, cap is {}",
            grid.total_cuts(),
            caps.max_grid_cuts
        )));
    }
    let mut solver = FixedSolver {
        points,
        centers: clustering.centers(),
        q: clustering.q(),
        grid,
        memo: HashMap::new(),
        max_states: caps.max_states,
    };
    let full = solver.grid.full_box();
    let cost = solver.solve(&full)?;
    Ok((ThresholdTree::new(solver.rebuild(&full)), cost))
}

/// Naive reference for [`opt_explainable_fixed`]: the same recursion without
/// memoization, re-solving every box it reaches. Exponential; cross-check
/// use only.
pub fn opt_explainable_fixed_naive(points: &PointSet, clustering: &Clustering) -> Result<f64> {
    cost_q(points, clustering)?;
    let grid = CandidateGrid::from_point_sets(&[points, clustering.centers()]);
    fn go(
        points: &PointSet,
        centers: &PointSet,
        q: CostExponent,
        grid: &CandidateGrid,
        key: &BoxKey,
    ) -> f64 {
        let centers_in: Vec<usize> = (0..centers.len())
            .filter(|&c| grid.contains(key, centers.point(c)))
            .collect();
        if centers_in.len() == 1 {
            let center = centers.point(centers_in[0]);
            return points
                .iter()
                .filter(|x| grid.contains(key, x))
                .map(|x| q.point_cost(x, center))
                .sum();
        }
        let mut best = f64::INFINITY;
        for dim in 0..points.dim() {
            let (lo, hi) = key[dim];
            for t in (lo + 1)..hi {
                let theta = grid.cut_value(dim, t);
                let lefts = centers_in
                    .iter()
                    .filter(|&&c| centers.point(c)[dim] <= theta)
                    .count();
                if lefts == 0 || lefts == centers_in.len() {
                    continue;
                }
                let mut left_key = key.clone();
                left_key[dim] = (lo, t);
                let mut right_key = key.clone();
                right_key[dim] = (t, hi);
                let cost = go(points, centers, q, grid, &left_key)
                    + go(points, centers, q, grid, &right_key);
                best = best.min(cost);
            }
        }
        best
    }
    Ok(go(points, clustering.centers(), clustering.q(), &grid, &grid.full_box()))
}

/// (cost, chosen (dim, boundary index, left leaf budget)).
type FreeMemoEntry = (f64, Option<(usize, u16, usize)>);

struct FreeSolver<'a> {
    points: &'a PointSet,
    q: CostExponent,
    grid: CandidateGrid,
    memo: HashMap<(BoxKey, usize), FreeMemoEntry>,
    max_states: usize,
}

impl FreeSolver<'_> {
    fn points_in(&self, key: &BoxKey) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.grid.contains(key, self.points.point(i)))
            .collect()
    }

    fn distinct_in(&self, members: &[usize]) -> usize {
        let mut seen: Vec<&[f64]> = Vec::new();
        for &i in members {
            let p = self.points.point(i);
            if !seen.contains(&p) {
                seen.push(p);
            }
        }
        seen.len()
    }

    /// Optimal single-cluster center of a point multiset: coordinate-wise
    /// lower median for q = 1, mean for q = 2.
    fn leaf_center(&self, members: &[usize]) -> Vec<f64> {
        (0..self.points.dim())
            .map(|dim| {
                let mut coords: Vec<f64> = members
                    .iter()
                    .map(|&i| self.points.point(i)[dim])
                    .collect();
                match self.q {
                    CostExponent::One => {
                        coords.sort_by(f64::total_cmp);
                        coords[(coords.len() - 1) / 2]
                    }
                    CostExponent::Two => coords.iter().sum::<f64>() / coords.len() as f64,
                }
            })
            .collect()
    }

    fn solve(&mut self, key: &BoxKey, m: usize) -> Result<f64> {
        if let Some(&(cost, _)) = self.memo.get(&(key.clone(), m)) {
            return Ok(cost);
        }
        if self.memo.len() >= self.max_states {
            return Err(Error::CapsExceeded(format!(
                "free-centers search exceeded {} states",
                self.max_states
            )));
        }
        let members = self.points_in(key);
        let result = if self.distinct_in(&members) < m {
            (f64::INFINITY, None)
        } else if m == 1 {
            let center = self.leaf_center(&members);
            let cost = members
                .iter()
                .map(|&i| self.q.point_cost(self.points.point(i), &center))
                .sum();
            (cost, None)
        } else {
            let mut best: Option<(f64, (usize, u16, usize))> = None;
            for dim in 0..self.points.dim() {
                let (lo, hi) = key[dim];
                for t in (lo + 1)..hi {
                    let mut left_key = key.clone();
                    left_key[dim] = (lo, t);
                    let mut right_key = key.clone();
                    right_key[dim] = (t, hi);
                    for ml in 1..m {
                        let cost = self.solve(&left_key, ml)?;
                        if !cost.is_finite() {
                            continue;
                        }
                        let cost = cost + self.solve(&right_key, m - ml)?;
                        if cost.is_finite() && best.is_none_or(|(b, _)| cost < b) {
                            best = Some((cost, (dim, t, ml)));
                        }
                    }
                }
            }
            match best {
                Some((cost, cut)) => (cost, Some(cut)),
                None => (f64::INFINITY, None),
            }
        };
        self.memo.insert((key.clone(), m), result);
        Ok(result.0)
    }

    fn rebuild(&self, key: &BoxKey, m: usize, centers: &mut Vec<Vec<f64>>) -> TreeNode {
        match self.memo[&(key.clone(), m)] {
            (_, None) => {
                let members = self.points_in(key);
                centers.push(self.leaf_center(&members));
                TreeNode::leaf(centers.len() - 1)
            }
            (_, Some((dim, t, ml))) => {
                let (lo, hi) = key[dim];
                let mut left_key = key.clone();
                left_key[dim] = (lo, t);
                let mut right_key = key.clone();
                right_key[dim] = (t, hi);
                let left = self.rebuild(&left_key, ml, centers);
                let right = self.rebuild(&right_key, m - ml, centers);
                TreeNode::internal(
                    ThresholdCut { dim, theta: self.grid.cut_value(dim, t) },
                    left,
                    right,
                )
            }
        }
    }
}

/// Minimum-cost threshold tree with exactly `k` leaves, each leaf's center
/// re-optimized over its own points (median for q = 1, mean for q = 2).
pub fn opt_explainable_free(
    points: &PointSet,
    k: usize,
    q: CostExponent,
    caps: &OracleCaps,
) -> Result<(ThresholdTree, PointSet, f64)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if k > caps.max_free_k {
        return Err(Error::CapsExceeded(format!(
            "free-centers search supports at most {} leaves, got {k}",
            caps.max_free_k
        )));
    }
    if points.dim() > caps.max_dims {
        return Err(Error::CapsExceeded(format!(
            "free-centers search supports at most {} dimensions, got {}",
            caps.max_dims,
            points.dim()
        )));
    }
    let grid = CandidateGrid::from_point_sets(&[points]);
    if grid.total_cuts() > caps.max_grid_cuts {
        return Err(Error::CapsExceeded(format!(
            "candidate grid has {} cuts, cap is {}",
            grid.total_cuts(),
            caps.max_grid_cuts
        )));
    }
    let mut solver = FreeSolver {
        points,
        q,
        grid,
        memo: HashMap::new(),
        max_states: caps.max_states,
    };
    let all: Vec<usize> = (0..points.len()).collect();
    let distinct = solver.distinct_in(&all);
    if distinct > caps.max_distinct_points {
        return Err(Error::CapsExceeded(format!(
            "free-centers search supports at most {} distinct points, got {distinct}",
            caps.max_distinct_points
        )));
    }
    if k > distinct {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the {distinct} distinct points"
        )));
    }
    let full = solver.grid.full_box();
    let cost = solver.solve(&full, k)?;
    debug_assert!(cost.is_finite());
    let mut centers = Vec::new();
    let root = solver.rebuild(&full, k, &mut centers);
    Ok((ThresholdTree::new(root), PointSet::new(centers)?, cost))
}

/// Ratio of the optimal explainable cost over the reference cost.
pub fn price_of_explainability(
    points: &PointSet,
    clustering: &Clustering,
    caps: &OracleCaps,
) -> Result<f64> {
    let reference = cost_q(points, clustering)?;
    if reference == 0.0 {
        return Err(Error::Degenerate(
            "reference clustering has zero cost; the ratio is undefined".into(),
        ));
    }
    let (_, opt) = opt_explainable_fixed(points, clustering, caps)?;
    Ok(opt / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_hitting_instance, HittingSetInstance};
    use crate::model::tree_cost;

    fn ps(points: &[&[f64]]) -> PointSet {
        PointSet::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn one_dim_example_prefers_point_aware_cut() {
        // Centers {0, 10}, points {0, 10, 4} assigned (0, 1, 0): a cut in
        // (4, 10) keeps point 4 with center 0 for cost 4.
        let points = ps(&[&[0.0], &[10.0], &[4.0]]);
        let centers = ps(&[&[0.0], &[10.0]]);
        let clustering = Clustering::new(centers, vec![0, 1, 0], CostExponent::One).unwrap();
        let (tree, cost) = opt_explainable_fixed(&points, &clustering, &OracleCaps::default()).unwrap();
        assert_eq!(cost, 4.0);
        assert_eq!(
            tree_cost(&tree, &points, clustering.centers(), CostExponent::One).unwrap(),
            4.0
        );
        assert_eq!(
            price_of_explainability(&points, &clustering, &OracleCaps::default()).unwrap(),
            1.0
        );
    }

    #[test]
    fn single_center_is_reference_cost() {
        let points = ps(&[&[1.0, 0.0], &[3.0, 1.0]]);
        let centers = ps(&[&[0.0, 0.0]]);
        let clustering = Clustering::new(centers, vec![0, 0], CostExponent::One).unwrap();
        let reference = cost_q(&points, &clustering).unwrap();
        let (tree, cost) = opt_explainable_fixed(&points, &clustering, &OracleCaps::default()).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(cost, reference);
    }

    #[test]
    fn hitting_example_fixed_opt_is_d_plus_h_times_s_minus_2() {
        let hs = HittingSetInstance::new(4, vec![vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let inst = gen_hitting_instance(&hs, 5).unwrap();
        let clustering = inst.clustering().unwrap();
        let (_, cost) = opt_explainable_fixed(&inst.points, &clustering, &OracleCaps::default()).unwrap();
        // d = 4, h = 1, s = 3.
        assert_eq!(cost, 5.0);
    }

    #[test]
    fn free_oracle_trivial_cases() {
        let points = ps(&[&[0.0], &[2.0], &[10.0]]);
        let caps = OracleCaps::default();
        // k = 1: the 1-median is the coordinate-wise median.
        let (tree, centers, cost) =
            opt_explainable_free(&points, 1, CostExponent::One, &caps).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(centers.point(0), &[2.0]);
        assert_eq!(cost, 10.0);
        // k = 1, q = 2: the mean.
        let (_, centers, cost) = opt_explainable_free(&points, 1, CostExponent::Two, &caps).unwrap();
        assert_eq!(centers.point(0), &[4.0]);
        assert_eq!(cost, 16.0 + 4.0 + 36.0);
        // k = n distinct points: zero cost.
        let (tree, _, cost) = opt_explainable_free(&points, 3, CostExponent::One, &caps).unwrap();
        assert_eq!(tree.leaf_count(), 3);
        assert_eq!(cost, 0.0);
        // k beyond distinct points is rejected.
        assert!(opt_explainable_free(&points, 4, CostExponent::One, &caps).is_err());
    }

    #[test]
    fn zero_reference_cost_is_an_error() {
        let points = ps(&[&[0.0], &[1.0]]);
        let centers = ps(&[&[0.0], &[1.0]]);
        let clustering = Clustering::new(centers, vec![0, 1], CostExponent::One).unwrap();
        assert!(price_of_explainability(&points, &clustering, &OracleCaps::default()).is_err());
    }

    #[test]
    fn caps_are_enforced() {
        let points = ps(&[&[0.0], &[1.0]]);
        let centers = ps(&[&[0.0], &[1.0]]);
        let clustering = Clustering::new(centers, vec![0, 1], CostExponent::One).unwrap();
        let caps = OracleCaps { max_centers: 1, ..OracleCaps::default() };
        assert!(matches!(
            opt_explainable_fixed(&points, &clustering, &caps),
            Err(Error::CapsExceeded(_))
        ));
    }

    #[test]
    fn axis_instance_price_is_bounded_and_below_monte_carlo() {
        use crate::cut_process::g_recurrence;
        use crate::instances::gen_axis_instance;
        use crate::random_thresholds::estimate_alpha;
        use crate::seed::Seed;

        let m = 100.0;
        let inst = gen_axis_instance(3, m, 0).unwrap();
        let clustering = inst.clustering().unwrap();
        let ratio =
            price_of_explainability(&inst.points, &clustering, &OracleCaps::default()).unwrap();
        // The best separating tree keeps the origin with its unit center.
        assert_eq!(ratio, 1.0);
        assert!(ratio <= m);
        // The randomized algorithm cannot beat this optimum: its mean cost
        // tracks the recurrence value well above 1.
        let g = g_recurrence(3, m).unwrap();
        let (mean, stderr) = estimate_alpha(&inst.centers, 20_000, Seed(3)).unwrap();
        assert!((mean - g).abs() <= 4.0 * stderr);
        assert!(mean + 3.0 * stderr >= ratio);
    }

    #[test]
    fn dp_matches_naive_enumeration_small() {
        let points = ps(&[&[0.0, 1.0], &[2.0, 0.0], &[3.0, 2.0], &[1.0, 3.0]]);
        let centers = ps(&[&[0.0, 0.0], &[2.0, 2.0], &[3.0, 0.0]]);
        let clustering =
            Clustering::new(centers, vec![0, 1, 1, 0], CostExponent::Two).unwrap();
        let (_, dp) = opt_explainable_fixed(&points, &clustering, &OracleCaps::default()).unwrap();
        let naive = opt_explainable_fixed_naive(&points, &clustering).unwrap();
        assert!((dp - naive).abs() < 1e-12);
    }
}
