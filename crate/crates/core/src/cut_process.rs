//! Cut-metric embeddings of l1 point sets and the last-point process.
//!
//! A finite l1 metric decomposes into nonnegative weights `z_S` on subsets:
//! each coordinate gap between consecutive projections (with the origin
//! adjoined) contributes its length to the subset of points strictly on the
//! far side of the gap from the origin. The surviving-point process over
//! these weights is evaluated three ways that must agree: an exact memoized
//! recursion, exact per-point survival probabilities, and Monte Carlo
//! simulation via competing exponential clocks.

use crate::error::{Error, Result};
use crate::model::{l1_norm, PointSet};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Exact evaluation memoizes over `2^n` subset masks; larger universes must
/// use the Monte Carlo estimators.
pub const EXACT_POINT_CAP: usize = 24;

/// Nonnegative subset weights realizing the l1 distances of a point set
/// (with the origin) as a sum of cut metrics. Bit `i` of a mask is point `i`;
/// the origin is never a member of a weighted subset.
#[derive(Debug, Clone, PartialEq)]
pub struct CutMetricEmbedding {
    n_points: usize,
    /// (mask, z) with z > 0, sorted by mask.
    weights: Vec<(u32, f64)>,
    /// l1 norms of the points, used as recursion base values.
    norms: Vec<f64>,
}

/// One weighted subset, as serialized in embedding dumps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightEntry {
    pub mask: u32,
    pub z: f64,
}

impl CutMetricEmbedding {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn full_mask(&self) -> u32 {
        mask_all(self.n_points)
    }

    pub fn weights(&self) -> &[(u32, f64)] {
        &self.weights
    }

    pub fn norm(&self, point: usize) -> f64 {
        self.norms[point]
    }

    /// Build an embedding from raw subset weights. Norms are derived as the
    /// per-point subset sums, so the weights define the geometry.
    pub fn from_weights(n_points: usize, weights: Vec<(u32, f64)>) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::EmptyPointSet);
        }
        if n_points > EXACT_POINT_CAP {
            return Err(Error::ExactCapExceeded { max: EXACT_POINT_CAP, got: n_points });
        }
        let full = mask_all(n_points);
        let mut merged: HashMap<u32, f64> = HashMap::new();
        for (mask, z) in weights {
            if mask == 0 || mask & !full != 0 {
                return Err(Error::SubsetOutOfRange { mask, n: n_points });
            }
            if !(z.is_finite() && z >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "weight for mask 0x{mask:x} must be finite and nonnegative"
                )));
            }
            if z > 0.0 {
                *merged.entry(mask).or_insert(0.0) += z;
            }
        }
        let mut weights: Vec<(u32, f64)> = merged.into_iter().collect();
        weights.sort_by_key(|&(mask, _)| mask);
        let norms = (0..n_points)
            .map(|p| {
                weights
                    .iter()
                    .filter(|(mask, _)| mask & (1 << p) != 0)
                    .map(|(_, z)| z)
                    .sum()
            })
            .collect();
        Ok(CutMetricEmbedding { n_points, weights, norms })
    }

    pub fn dump(&self) -> Vec<WeightEntry> {
        self.weights.iter().map(|&(mask, z)| WeightEntry { mask, z }).collect()
    }
}

fn mask_all(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Embed a point set's l1 geometry (with the origin adjoined) as cut-metric
/// weights: per dimension, each gap between consecutive distinct coordinate
/// values contributes its length to the subset strictly on the far side of
/// the gap from the origin. Equal subsets accumulate across gaps and
/// dimensions.
pub fn embed_cut_metric(u: &PointSet) -> Result<CutMetricEmbedding> {
    let n = u.len();
    if n > EXACT_POINT_CAP {
        return Err(Error::ExactCapExceeded { max: EXACT_POINT_CAP, got: n });
    }
    let mut weights: HashMap<u32, f64> = HashMap::new();
    for dim in 0..u.dim() {
        let mut coords: Vec<f64> = (0..n).map(|p| u.point(p)[dim]).collect();
        coords.push(0.0);
        coords.sort_by(f64::total_cmp);
        coords.dedup();
        for gap in coords.windows(2) {
            let (lo, hi) = (gap[0], gap[1]);
            // Far side of the gap from the origin: right of the gap when the
            // gap sits at or right of 0, left of it otherwise.
            let mask = if lo >= 0.0 {
                (0..n).filter(|&p| u.point(p)[dim] >= hi).fold(0u32, |m, p| m | 1 << p)
            } else {
                (0..n).filter(|&p| u.point(p)[dim] <= lo).fold(0u32, |m, p| m | 1 << p)
            };
            if mask != 0 {
                *weights.entry(mask).or_insert(0.0) += hi - lo;
            }
        }
    }
    let mut weights: Vec<(u32, f64)> = weights.into_iter().filter(|&(_, z)| z > 0.0).collect();
    weights.sort_by_key(|&(mask, _)| mask);
    let norms = (0..n).map(|p| l1_norm(u.point(p))).collect();
    Ok(CutMetricEmbedding { n_points: n, weights, norms })
}

fn crosses(mask: u32, subset: u32) -> bool {
    let inter = mask & subset;
    inter != 0 && inter != subset
}

fn check_subset(emb: &CutMetricEmbedding, subset: u32) -> Result<()> {
    if subset == 0 {
        return Err(Error::EmptySubset);
    }
    if subset & !emb.full_mask() != 0 {
        return Err(Error::SubsetOutOfRange { mask: subset, n: emb.n_points });
    }
    Ok(())
}

/// Exact expected norm of the surviving point when the process starts from
/// `subset`: `f(S) = sum_E z_E f(S \ E) / sum_E z_E` over crossing subsets
/// `E`, with `f({p})` the point's norm, and `f(S) = 0` when no crossing
/// subset has positive weight.
pub fn f_exact(emb: &CutMetricEmbedding, subset: u32) -> Result<f64> {
    check_subset(emb, subset)?;
    let mut memo: HashMap<u32, f64> = HashMap::new();
    Ok(f_rec(emb, subset, &mut memo))
}

fn f_rec(emb: &CutMetricEmbedding, subset: u32, memo: &mut HashMap<u32, f64>) -> f64 {
    if subset.count_ones() == 1 {
        return emb.norm(subset.trailing_zeros() as usize);
    }
    if let Some(&v) = memo.get(&subset) {
        return v;
    }
    let mut total = 0.0;
    let mut acc = 0.0;
    for &(mask, z) in &emb.weights {
        if crosses(mask, subset) {
            total += z;
            acc += z * f_rec(emb, subset & !mask, memo);
        }
    }
    let value = if total > 0.0 { acc / total } else { 0.0 };
    memo.insert(subset, value);
    value
}

/// Exact probability, for each point of `subset`, of being the survivor.
/// Entries outside `subset` are zero; when no crossing weight remains the
/// mass sits on the minimal-index member (a convention, not part of the
/// process definition).
pub fn survival_distribution(emb: &CutMetricEmbedding, subset: u32) -> Result<Vec<f64>> {
    check_subset(emb, subset)?;
    let mut memo: HashMap<u32, Vec<f64>> = HashMap::new();
    Ok(survival_rec(emb, subset, &mut memo))
}

fn survival_rec(
    emb: &CutMetricEmbedding,
    subset: u32,
    memo: &mut HashMap<u32, Vec<f64>>,
) -> Vec<f64> {
    let n = emb.n_points;
    if subset.count_ones() == 1 {
        let mut dist = vec![0.0; n];
        dist[subset.trailing_zeros() as usize] = 1.0;
        return dist;
    }
    if let Some(v) = memo.get(&subset) {
        return v.clone();
    }
    let mut total = 0.0;
    let mut acc = vec![0.0; n];
    for &(mask, z) in &emb.weights {
        if crosses(mask, subset) {
            total += z;
            let sub = survival_rec(emb, subset & !mask, memo);
            for (a, s) in acc.iter_mut().zip(&sub) {
                *a += z * s;
            }
        }
    }
    let dist = if total > 0.0 {
        acc.iter().map(|a| a / total).collect()
    } else {
        let mut dist = vec![0.0; n];
        dist[subset.trailing_zeros() as usize] = 1.0;
        dist
    };
    memo.insert(subset, dist.clone());
    dist
}

/// The positive-weight subsets sorted by realized exponential clocks
/// `X_S ~ Exp(z_S)`, ascending. Sampling one order couples runs started
/// from different subsets.
#[derive(Debug, Clone)]
pub struct ClockOrder {
    order: Vec<u32>,
}

impl ClockOrder {
    pub fn masks(&self) -> &[u32] {
        &self.order
    }
}

/// Realize one clock order: `X_S = -ln(u)/z_S` with `u` uniform in (0, 1];
/// ties break by mask order.
pub fn sample_clock_order(emb: &CutMetricEmbedding, rng: &mut impl rand::Rng) -> ClockOrder {
    let mut clocked: Vec<(f64, u32)> = emb
        .weights
        .iter()
        .map(|&(mask, z)| {
            let u: f64 = 1.0 - rng.gen::<f64>(); // uniform in (0, 1]
            (-u.ln() / z, mask)
        })
        .collect();
    clocked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ClockOrder { order: clocked.into_iter().map(|(_, mask)| mask).collect() }
}

/// Consume a clock order starting from `subset`: each subset in order is
/// applied iff it crosses the current set. Returns the surviving point
/// index (minimal-index member if the set never reaches a singleton).
pub fn last_point_trial(emb: &CutMetricEmbedding, subset: u32, order: &ClockOrder) -> Result<usize> {
    check_subset(emb, subset)?;
    let mut current = subset;
    for &mask in &order.order {
        if crosses(mask, current) {
            current &= !mask;
        }
    }
    Ok(current.trailing_zeros() as usize)
}

/// The closed-form recurrence for the expected origin cost on the axis
/// instance with one unit center and `k - 1` centers at distance `m`:
/// `g(1) = 1`, `g(j) = m/(m(j-1)+1) + [m(j-1)/(m(j-1)+1)] g(j-1)`.
pub fn g_recurrence(k: u32, m: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if m.is_nan() || m <= 0.0 {
        return Err(Error::InvalidParameter("M must be positive".into()));
    }
    let mut g = 1.0;
    for j in 2..=k {
        let far = m * (j - 1) as f64;
        g = m / (far + 1.0) + (far / (far + 1.0)) * g;
    }
    Ok(g)
}

/// `1 + H_{k-1}`, the harmonic price bound for `k` centers.
pub fn harmonic_bound(k: usize) -> f64 {
    1.0 + (1..k).map(|j| 1.0 / j as f64).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;

    fn ps(points: &[&[f64]]) -> PointSet {
        PointSet::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn embed_one_dim_two_points() {
        // U = {1, 3}: gap (0,1) weights both points, gap (1,3) only the far one.
        let u = ps(&[&[1.0], &[3.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        assert_eq!(emb.weights(), &[(0b10, 2.0), (0b11, 1.0)]);
    }

    #[test]
    fn embed_origin_only_is_empty() {
        let u = ps(&[&[0.0, 0.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        assert!(emb.weights().is_empty());
    }

    #[test]
    fn cut_metric_pair_identity_small() {
        let u = ps(&[&[1.0], &[3.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        let dist: f64 = emb
            .weights()
            .iter()
            .filter(|(mask, _)| crosses(*mask, 0b11))
            .map(|(_, z)| z)
            .sum();
        assert_eq!(dist, 2.0);
    }

    #[test]
    fn f_exact_singleton_is_norm() {
        let u = ps(&[&[3.0, 0.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        assert_eq!(f_exact(&emb, 0b1).unwrap(), 3.0);
    }

    #[test]
    fn f_exact_two_point_closed_form() {
        let u = ps(&[&[1.0, 0.0], &[0.0, 10.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        let f = f_exact(&emb, 0b11).unwrap();
        assert!((f - 20.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn f_exact_zero_when_no_crossing_weight() {
        // Two identical points: no subset separates them.
        let emb = CutMetricEmbedding::from_weights(2, vec![(0b11, 5.0)]).unwrap();
        assert_eq!(f_exact(&emb, 0b11).unwrap(), 0.0);
    }

    #[test]
    fn survival_two_point() {
        let u = ps(&[&[1.0, 0.0], &[0.0, 10.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        let dist = survival_distribution(&emb, 0b11).unwrap();
        assert!((dist[0] - 10.0 / 11.0).abs() < 1e-12);
        assert!((dist[1] - 1.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn survival_singleton_and_degenerate_convention() {
        let u = ps(&[&[2.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        assert_eq!(survival_distribution(&emb, 0b1).unwrap(), vec![1.0]);

        let emb = CutMetricEmbedding::from_weights(3, vec![(0b111, 1.0)]).unwrap();
        let dist = survival_distribution(&emb, 0b110).unwrap();
        assert_eq!(dist, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn last_point_singleton_any_order() {
        let u = ps(&[&[1.0], &[4.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        let order = sample_clock_order(&emb, &mut Seed(4).rng());
        assert_eq!(last_point_trial(&emb, 0b10, &order).unwrap(), 1);
    }

    #[test]
    fn g_recurrence_values() {
        assert_eq!(g_recurrence(1, 10.0).unwrap(), 1.0);
        let m = 1e6;
        let g2 = g_recurrence(2, m).unwrap();
        assert!((g2 - 2.0 * m / (m + 1.0)).abs() < 1e-12);
        assert!((g2 - 1.999998).abs() < 1e-6);
        // g(3) -> 1 + H_2 = 2.5 as M grows.
        assert!((g_recurrence(3, 1e12).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn exact_cap_enforced() {
        let points: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64 + 1.0]).collect();
        let u = PointSet::new(points).unwrap();
        assert!(matches!(
            embed_cut_metric(&u),
            Err(Error::ExactCapExceeded { max: 24, got: 25 })
        ));
    }

    #[test]
    fn survival_normalizes_and_reconstructs_f() {
        use rand::Rng;
        let mut rng = Seed(88).rng();
        for _ in 0..40 {
            let n = rng.gen_range(2..=8);
            let d = rng.gen_range(1..=4);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-9.0..9.0)).collect())
                .collect();
            let u = PointSet::new(points).unwrap();
            let emb = embed_cut_metric(&u).unwrap();
            let full = emb.full_mask();
            let dist = survival_distribution(&emb, full).unwrap();
            let total: f64 = dist.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            // With distinct points every reachable subset has crossing
            // weight, so the expectation routes agree.
            let via_survival: f64 = dist
                .iter()
                .enumerate()
                .map(|(p, prob)| prob * emb.norm(p))
                .sum();
            let f = f_exact(&emb, full).unwrap();
            assert!(
                (via_survival - f).abs() <= 1e-9 * f.max(1.0),
                "survival route {via_survival} vs recursion {f}"
            );
        }
    }

    #[test]
    fn empty_subset_rejected() {
        let u = ps(&[&[1.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        assert!(matches!(f_exact(&emb, 0), Err(Error::EmptySubset)));
        assert!(matches!(survival_distribution(&emb, 0), Err(Error::EmptySubset)));
    }

    #[test]
    fn embedding_dump_shape() {
        let u = ps(&[&[1.0], &[3.0]]);
        let emb = embed_cut_metric(&u).unwrap();
        let dump = serde_json::to_value(emb.dump()).unwrap();
        assert_eq!(dump[0], serde_json::json!({"mask": 2, "z": 2.0}));
        assert_eq!(dump[1], serde_json::json!({"mask": 3, "z": 1.0}));
    }
}
