//! The Random Thresholds algorithm for k-medians and Monte Carlo estimation
//! of the closest-point cost.
//!
//! The algorithm repeatedly samples a dimension uniformly and a threshold
//! uniformly over the centers' bounding interval, keeping only cuts that
//! separate some pair of centers still sharing a leaf. We sample effective
//! cuts directly: for each dimension the effective thresholds form a union
//! of the open center spans of the current leaves, and conditioning the
//! uniform draw on effectiveness is exactly the normalized uniform measure
//! on that union (ineffective draws change no state).

use crate::error::{Error, Result};
use crate::exec::{map_trials, mean_stderr};
use crate::model::{l1_norm, PointSet, ThresholdCut, ThresholdTree, TreeNode};
use crate::seed::Seed;
use rand::Rng;

/// One step of the construction, for audit by the property tests.
#[derive(Debug, Clone)]
pub struct RtTraceEntry {
    pub step: usize,
    pub cut: ThresholdCut,
    /// Center index sets of the leaves this cut split, at the time it applied.
    pub split_leaves: Vec<Vec<usize>>,
}

enum ArenaNode {
    Leaf { centers: Vec<usize> },
    Internal { cut: ThresholdCut, left: usize, right: usize },
}

/// Samples effective cuts for a set of active leaves over fixed centers.
pub(crate) struct EffectiveCutSampler<'a> {
    centers: &'a PointSet,
}

impl<'a> EffectiveCutSampler<'a> {
    pub(crate) fn new(centers: &'a PointSet) -> Self {
        EffectiveCutSampler { centers }
    }

    /// Merged union, per dimension, of the open center spans of leaves with
    /// two or more centers. Returns (dim, lo, hi) segments.
    fn effective_segments(&self, leaves: &[&Vec<usize>]) -> Vec<(usize, f64, f64)> {
        let d = self.centers.dim();
        let mut segments = Vec::new();
        for dim in 0..d {
            let mut spans: Vec<(f64, f64)> = Vec::new();
            for leaf in leaves {
                if leaf.len() < 2 {
                    continue;
                }
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &c in leaf.iter() {
                    let v = self.centers.point(c)[dim];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if lo < hi {
                    spans.push((lo, hi));
                }
            }
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (lo, hi) in spans {
                match merged.last_mut() {
                    Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                    _ => merged.push((lo, hi)),
                }
            }
            segments.extend(merged.into_iter().map(|(lo, hi)| (dim, lo, hi)));
        }
        segments
    }

    /// Draw one effective cut for the given leaves, or None when every leaf
    /// is a singleton. Thresholds landing exactly on a center coordinate are
    /// redrawn so separation predicates stay strict.
    pub(crate) fn sample(
        &self,
        leaves: &[&Vec<usize>],
        rng: &mut impl Rng,
    ) -> Option<ThresholdCut> {
        let segments = self.effective_segments(leaves);
        let total: f64 = segments.iter().map(|(_, lo, hi)| hi - lo).sum();
        if total <= 0.0 {
            return None;
        }
        loop {
            let mut r = rng.gen_range(0.0..total);
            for &(dim, lo, hi) in &segments {
                let len = hi - lo;
                if r < len {
                    let theta = lo + r;
                    let coincides = (0..self.centers.len())
                        .any(|c| self.centers.point(c)[dim] == theta);
                    if theta <= lo || theta >= hi || coincides {
                        break; // resample the whole draw
                    }
                    return Some(ThresholdCut { dim, theta });
                }
                r -= len;
            }
        }
    }
}

/// Build a separating threshold tree distributed as the Random Thresholds
/// algorithm, returning the construction trace alongside the tree.
pub fn build_tree_rt_traced(
    centers: &PointSet,
    seed: Seed,
) -> Result<(ThresholdTree, Vec<RtTraceEntry>)> {
    for a in 0..centers.len() {
        for b in (a + 1)..centers.len() {
            if centers.point(a) == centers.point(b) {
                return Err(Error::DuplicateCenters { a, b });
            }
        }
    }
    let mut rng = seed.rng();
    build_with_rng(centers, &mut rng)
}

pub(crate) fn build_with_rng(
    centers: &PointSet,
    rng: &mut impl Rng,
) -> Result<(ThresholdTree, Vec<RtTraceEntry>)> {
    let mut arena: Vec<ArenaNode> = vec![ArenaNode::Leaf {
        centers: (0..centers.len()).collect(),
    }];
    let mut active: Vec<usize> = vec![0];
    let sampler = EffectiveCutSampler::new(centers);
    let mut trace = Vec::new();
    let mut step = 0;

    loop {
        let leaf_sets: Vec<&Vec<usize>> = active
            .iter()
            .map(|&id| match &arena[id] {
                ArenaNode::Leaf { centers } => centers,
                ArenaNode::Internal { .. } => unreachable!("active ids are leaves"),
            })
            .collect();
        let Some(cut) = sampler.sample(&leaf_sets, rng) else {
            break;
        };

        let mut next_active = Vec::with_capacity(active.len() + 1);
        let mut split_leaves = Vec::new();
        for &id in &active {
            let members = match &arena[id] {
                ArenaNode::Leaf { centers } => centers.clone(),
                ArenaNode::Internal { .. } => unreachable!(),
            };
            let (left, right): (Vec<usize>, Vec<usize>) = members
                .iter()
                .partition(|&&c| cut.goes_left(centers.point(c)));
            if left.is_empty() || right.is_empty() {
                next_active.push(id);
                continue;
            }
            split_leaves.push(members);
            let left_id = arena.len();
            arena.push(ArenaNode::Leaf { centers: left });
            let right_id = arena.len();
            arena.push(ArenaNode::Leaf { centers: right });
            arena[id] = ArenaNode::Internal { cut, left: left_id, right: right_id };
            next_active.push(left_id);
            next_active.push(right_id);
        }
        debug_assert!(!split_leaves.is_empty(), "sampled cut must split a leaf");
        trace.push(RtTraceEntry { step, cut, split_leaves });
        step += 1;
        active = next_active;
    }

    Ok((ThresholdTree::new(freeze(&arena, 0)), trace))
}

fn freeze(arena: &[ArenaNode], id: usize) -> TreeNode {
    match &arena[id] {
        ArenaNode::Leaf { centers } => TreeNode::leaf(centers[0]),
        ArenaNode::Internal { cut, left, right } => {
            TreeNode::internal(*cut, freeze(arena, *left), freeze(arena, *right))
        }
    }
}

/// Build a separating threshold tree distributed as the Random Thresholds
/// algorithm.
pub fn build_tree_rt(centers: &PointSet, seed: Seed) -> Result<ThresholdTree> {
    build_tree_rt_traced(centers, seed).map(|(tree, _)| tree)
}

/// Run one Random Thresholds tree on `u` and return the index and l1 norm of
/// the unique point sharing the origin's leaf region.
pub fn closest_point_trial_survivor(u: &PointSet, seed: Seed) -> Result<(usize, f64)> {
    let tree = build_tree_rt(u, seed)?;
    let origin = vec![0.0; u.dim()];
    let survivor = tree.route(&origin);
    Ok((survivor, l1_norm(u.point(survivor))))
}

/// The l1 norm of the point left in the origin's region after one Random
/// Thresholds run.
pub fn closest_point_trial(u: &PointSet, seed: Seed) -> Result<f64> {
    closest_point_trial_survivor(u, seed).map(|(_, norm)| norm)
}

/// Monte Carlo estimate of the expected closest-point cost over independent
/// trials with counter-derived sub-seeds. Returns (mean, standard error).
pub fn estimate_alpha(u: &PointSet, trials: u64, seed: Seed) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let costs = closest_point_costs(u, trials, seed)?;
    Ok(mean_stderr(&costs))
}

/// Per-trial closest-point costs, in trial order.
pub fn closest_point_costs(u: &PointSet, trials: u64, seed: Seed) -> Result<Vec<f64>> {
    // Surface errors (duplicate centers) once before fanning out.
    let _ = closest_point_trial(u, seed)?;
    Ok(map_trials(trials, |i| {
        closest_point_trial(u, seed.child(i)).expect("validated instance")
    }))
}
