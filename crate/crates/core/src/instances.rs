//! Instance generators and an exact minimum hitting set solver.
//!
//! The axis instance places one unit center and `k - 1` centers at distance
//! `M` on separate axes; the hitting-set reduction turns an s-uniform set
//! system into a binary clustering instance whose optimal explainable cost
//! tracks the minimum hitting set size.

use crate::error::{Error, Result};
use crate::model::{Clustering, CostExponent, PointSet, ThresholdTree};
use crate::seed::Seed;
use rand::distributions::Distribution;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A set system over ground elements `0..ground_size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawHittingSet", into = "RawHittingSet")]
pub struct HittingSetInstance {
    ground_size: usize,
    sets: Vec<Vec<usize>>,
    uniform_size: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawHittingSet {
    d: usize,
    sets: Vec<Vec<usize>>,
}

impl TryFrom<RawHittingSet> for HittingSetInstance {
    type Error = Error;
    fn try_from(raw: RawHittingSet) -> Result<Self> {
        HittingSetInstance::new(raw.d, raw.sets)
    }
}

impl From<HittingSetInstance> for RawHittingSet {
    fn from(hs: HittingSetInstance) -> Self {
        RawHittingSet { d: hs.ground_size, sets: hs.sets }
    }
}

impl HittingSetInstance {
    pub fn new(ground_size: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut cleaned = Vec::with_capacity(sets.len());
        for (i, set) in sets.into_iter().enumerate() {
            let mut set = set;
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::InvalidParameter(format!("set {i} is empty")));
            }
            if let Some(&max) = set.last() {
                if max >= ground_size {
                    return Err(Error::InvalidParameter(format!(
                        "set {i} contains element {max} outside ground [0, {ground_size})"
                    )));
                }
            }
            cleaned.push(set);
        }
        let uniform_size = match cleaned.first() {
            Some(first) if cleaned.iter().all(|s| s.len() == first.len()) => Some(first.len()),
            _ => None,
        };
        Ok(HittingSetInstance { ground_size, sets: cleaned, uniform_size })
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// The common set size when the system is s-uniform.
    pub fn uniform_size(&self) -> Option<usize> {
        self.uniform_size
    }

    pub fn is_hit_by(&self, elements: &[usize]) -> bool {
        self.sets
            .iter()
            .all(|set| set.iter().any(|e| elements.contains(e)))
    }
}

/// Generator output: points, a reference clustering, and provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub points: PointSet,
    pub centers: PointSet,
    pub assignment: Vec<usize>,
    pub q: CostExponent,
    pub metadata: InstanceMetadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub generator: String,
    pub params: Value,
    /// Closed-form cost of the reference clustering.
    pub reference_cost: f64,
}

impl GeneratedInstance {
    pub fn clustering(&self) -> Result<Clustering> {
        Clustering::new(self.centers.clone(), self.assignment.clone(), self.q)
    }
}

/// The axis lower-bound instance: centers `e_1` and `M e_i` for `i = 2..k`
/// in `R^k`, one data point at the origin, and optionally points colocated
/// with each center. Reference cost is exactly 1.
pub fn gen_axis_instance(k: usize, m: f64, colocated: usize) -> Result<GeneratedInstance> {
    if k < 2 {
        return Err(Error::InvalidParameter("axis instance needs k >= 2".into()));
    }
    if m.is_nan() || m <= 1.0 {
        return Err(Error::InvalidParameter("axis instance needs M > 1".into()));
    }
    let mut centers = Vec::with_capacity(k);
    for i in 0..k {
        let mut c = vec![0.0; k];
        c[i] = if i == 0 { 1.0 } else { m };
        centers.push(c);
    }
    let centers = PointSet::new(centers)?;
    let mut points = vec![vec![0.0; k]];
    let mut assignment = vec![0usize];
    for c in 0..k {
        for _ in 0..colocated {
            points.push(centers.point(c).to_vec());
            assignment.push(c);
        }
    }
    Ok(GeneratedInstance {
        points: PointSet::new(points)?,
        centers,
        assignment,
        q: CostExponent::One,
        metadata: InstanceMetadata {
            generator: "axis".into(),
            params: serde_json::json!({"k": k, "m": m, "colocated": colocated}),
            reference_cost: 1.0,
        },
    })
}

/// Default colocation count for the hitting-set reduction, polynomially
/// larger than the instance so center clouds pin the explainable centers.
pub fn default_colocated(d: usize, k: usize) -> usize {
    (d + k) * (d + k)
}

/// The hitting-set reduction: center 0 at the origin, center `i` at the
/// characteristic vector of set `i - 1`, one point at each `e_j`, and `m`
/// points colocated with every center. Reference cost is `d`.
pub fn gen_hitting_instance(hs: &HittingSetInstance, m: usize) -> Result<GeneratedInstance> {
    let s = hs
        .uniform_size()
        .ok_or_else(|| Error::InvalidParameter("hitting reduction needs an s-uniform system".into()))?;
    if s < 3 {
        return Err(Error::InvalidParameter(format!(
            "hitting reduction needs set size s >= 3 for a cost gap, got {s}"
        )));
    }
    if m < 1 {
        return Err(Error::InvalidParameter("colocation count M must be >= 1".into()));
    }
    let d = hs.ground_size();
    let k = hs.sets().len();
    let mut centers = vec![vec![0.0; d]];
    for set in hs.sets() {
        let mut c = vec![0.0; d];
        for &e in set {
            c[e] = 1.0;
        }
        centers.push(c);
    }
    let centers = PointSet::new(centers)?;
    let mut points = Vec::with_capacity(d + m * (k + 1));
    let mut assignment = Vec::with_capacity(d + m * (k + 1));
    for j in 0..d {
        let mut p = vec![0.0; d];
        p[j] = 1.0;
        points.push(p);
        assignment.push(0);
    }
    for c in 0..=k {
        for _ in 0..m {
            points.push(centers.point(c).to_vec());
            assignment.push(c);
        }
    }
    Ok(GeneratedInstance {
        points: PointSet::new(points)?,
        centers,
        assignment,
        q: CostExponent::One,
        metadata: InstanceMetadata {
            generator: "hitting".into(),
            params: serde_json::json!({"d": d, "k": k, "s": s, "m": m}),
            reference_cost: d as f64,
        },
    })
}

/// Parameters of the random set-system construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SetSystemParams {
    pub k: usize,
    /// Inclusion probability, `2 ln(2k) / k^(1/3)` unless overridden.
    pub p: f64,
    /// `k^(-1/3)`.
    pub epsilon: f64,
    /// Size floor `(1 - epsilon) p k` every set should meet.
    pub size_floor: f64,
}

/// Validate `k` and the (possibly overridden) inclusion probability.
pub fn set_system_params(k: usize, p_override: Option<f64>) -> Result<SetSystemParams> {
    if k < 2 {
        return Err(Error::InvalidParameter("set system needs k >= 2".into()));
    }
    let p = match p_override {
        Some(p) => p,
        None => 2.0 * (2.0 * k as f64).ln() / (k as f64).powf(1.0 / 3.0),
    };
    if p.is_nan() || p <= 0.0 || p > 0.5 {
        return Err(Error::InvalidParameter(format!(
            "inclusion probability must lie in (0, 1/2], got {p:.4}; \
             the default formula needs large k, pass an override for small k"
        )));
    }
    let epsilon = (k as f64).powf(-1.0 / 3.0);
    Ok(SetSystemParams { k, p, epsilon, size_floor: (1.0 - epsilon) * p * k as f64 })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetSystemReport {
    pub params: SetSystemParams,
    pub sizes: Vec<usize>,
    /// Whether every set met the size floor (the complement of the bad
    /// event on set sizes).
    pub all_meet_floor: bool,
    /// Empty draws that were rejected and redrawn.
    pub resampled_empty: usize,
}

/// Sample set sizes only: `Binomial(k, p)` with empty draws redrawn. Picking
/// a binomial size and then a uniform subset of that size is distributed
/// exactly as including each element independently with probability `p`.
pub fn sample_set_sizes(
    k: usize,
    p_override: Option<f64>,
    seed: Seed,
) -> Result<(SetSystemParams, Vec<usize>, usize)> {
    let params = set_system_params(k, p_override)?;
    let binom = rand_distr::Binomial::new(k as u64, params.p)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = seed.rng();
    let mut sizes = Vec::with_capacity(k);
    let mut resampled = 0;
    for _ in 0..k {
        let mut size = binom.sample(&mut rng);
        while size == 0 {
            resampled += 1;
            size = binom.sample(&mut rng);
        }
        sizes.push(size as usize);
    }
    Ok((params, sizes, resampled))
}

/// Generate `k` random subsets of `[k]`, each element included independently
/// with probability `p`; empty sets are redrawn.
pub fn gen_random_set_system(
    k: usize,
    p_override: Option<f64>,
    seed: Seed,
) -> Result<(HittingSetInstance, SetSystemReport)> {
    let (params, sizes, resampled_empty) = sample_set_sizes(k, p_override, seed)?;
    let mut rng = seed.child(1).rng();
    let sets: Vec<Vec<usize>> = sizes
        .iter()
        .map(|&size| {
            let mut set = rand::seq::index::sample(&mut rng, k, size).into_vec();
            set.sort_unstable();
            set
        })
        .collect();
    let all_meet_floor = sizes.iter().all(|&s| s as f64 >= params.size_floor);
    let instance = HittingSetInstance::new(k, sets)?;
    Ok((
        instance,
        SetSystemReport { params, sizes, all_meet_floor, resampled_empty },
    ))
}

/// Result of the branch-and-bound hitting set search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HittingSetSolution {
    pub elements: Vec<usize>,
    /// True when the search ran to completion within the node budget.
    pub exact: bool,
    /// Best lower bound proved (equals the solution size when exact).
    pub lower_bound: usize,
    pub nodes_expanded: u64,
}

const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Exact minimum hitting set by branch and bound: branch on the elements of
/// an uncovered set, prune with a greedy upper bound and a lower bound from
/// a maximal packing of pairwise-disjoint sets.
pub fn min_hitting_set(hs: &HittingSetInstance, budget: Option<u64>) -> HittingSetSolution {
    let budget = budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let mut best = greedy_hitting_set(hs);
    let root_lb = {
        let all: Vec<&Vec<usize>> = hs.sets().iter().collect();
        packing_bound(&all)
    };
    let mut search = Search {
        hs,
        budget,
        nodes: 0,
        exhausted: true,
        best_size: best.len(),
        best: &mut best,
    };
    search.recurse(&mut Vec::new());
    let exact = search.exhausted;
    let nodes = search.nodes;
    let size = best.len();
    HittingSetSolution {
        elements: best,
        exact,
        lower_bound: if exact { size } else { root_lb },
        nodes_expanded: nodes,
    }
}

struct Search<'a> {
    hs: &'a HittingSetInstance,
    budget: u64,
    nodes: u64,
    exhausted: bool,
    best_size: usize,
    best: &'a mut Vec<usize>,
}

impl Search<'_> {
    fn recurse(&mut self, chosen: &mut Vec<usize>) {
        if self.nodes >= self.budget {
            self.exhausted = false;
            return;
        }
        self.nodes += 1;
        let uncovered: Vec<&Vec<usize>> = self
            .hs
            .sets()
            .iter()
            .filter(|set| !set.iter().any(|e| chosen.contains(e)))
            .collect();
        if uncovered.is_empty() {
            if chosen.len() < self.best_size {
                self.best_size = chosen.len();
                *self.best = chosen.clone();
            }
            return;
        }
        let lb = packing_bound(&uncovered);
        if chosen.len() + lb >= self.best_size {
            return;
        }
        // Branch on the smallest uncovered set.
        let branch = uncovered
            .iter()
            .min_by_key(|set| set.len())
            .expect("nonempty")
            .to_vec();
        for e in branch {
            chosen.push(e);
            self.recurse(chosen);
            chosen.pop();
        }
    }
}

fn greedy_hitting_set(hs: &HittingSetInstance) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut unhit: Vec<&Vec<usize>> = hs.sets().iter().collect();
    while !unhit.is_empty() {
        let mut counts = vec![0usize; hs.ground_size()];
        for set in &unhit {
            for &e in set.iter() {
                counts[e] += 1;
            }
        }
        let e = counts
            .iter()
            .enumerate()
            .max_by_key(|&(_, c)| *c)
            .map(|(e, _)| e)
            .expect("nonempty ground");
        chosen.push(e);
        unhit.retain(|set| !set.contains(&e));
    }
    chosen
}

/// Greedy maximal collection of pairwise-disjoint sets among `sets`.
fn packing_bound(sets: &[&Vec<usize>]) -> usize {
    let mut used: Vec<usize> = Vec::new();
    let mut count = 0;
    let mut order: Vec<&&Vec<usize>> = sets.iter().collect();
    order.sort_by_key(|s| s.len());
    for set in order {
        if set.iter().all(|e| !used.contains(e)) {
            used.extend(set.iter().copied());
            count += 1;
        }
    }
    count
}

/// Dimensions of the cuts along the origin-center's root path; on a
/// separating tree over a hitting instance these dimensions hit every set.
pub fn origin_path_cut_dims(tree: &ThresholdTree, centers: &PointSet) -> Vec<usize> {
    let origin = centers.point(0);
    let mut dims: Vec<usize> = tree.path_cuts(origin).iter().map(|cut| cut.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    dims
}
