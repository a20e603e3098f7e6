//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p xclust-core --test acceptance -- --nocapture`
//! to see the per-criterion lines.

use xclust_core::cut_process::{
    embed_cut_metric, g_recurrence, harmonic_bound, survival_distribution,
};
use xclust_core::exec::mean_stderr;
use xclust_core::instances::{
    gen_axis_instance, gen_hitting_instance, gen_random_set_system, min_hitting_set,
    set_system_params, HittingSetInstance,
};
use xclust_core::model::{cost_q, CostExponent};
use xclust_core::oracle::{opt_explainable_fixed, opt_explainable_free, OracleCaps};
use xclust_core::random_thresholds::closest_point_costs;
use xclust_core::verify;
use xclust_core::Seed;

fn report(criterion: &str, passed: bool, details: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {details}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {details}");
}

/// Criterion 1: the Monte Carlo mean on the axis instance (k = 10, M = 1e6,
/// 1e5 trials) lies within three standard errors of the closed-form
/// recurrence, and the recurrence sits within 1e-4 of the harmonic bound.
///
/// The per-trial cost here is two-valued (1 or M) with far-survivor
/// probability near 2.8e-6, so the empirical standard error degenerates to
/// zero on seeds with no far event; the standard error of the estimator is
/// instead computed exactly from the survival distribution.
#[test]
fn acceptance_1_harmonic_lower_bound() {
    let k = 10;
    let m = 1e6;
    let trials: u64 = 100_000;
    let g = g_recurrence(k as u32, m).unwrap();
    let bound = harmonic_bound(k);
    let gap = (g - bound).abs();

    let inst = gen_axis_instance(k, m, 0).unwrap();
    let emb = embed_cut_metric(&inst.centers).unwrap();
    let survival = survival_distribution(&emb, emb.full_mask()).unwrap();
    let values: Vec<f64> = (0..k).map(|p| emb.norm(p)).collect();
    let exact_mean: f64 = survival.iter().zip(&values).map(|(p, v)| p * v).sum();
    let exact_var: f64 = survival
        .iter()
        .zip(&values)
        .map(|(p, v)| p * (v - exact_mean) * (v - exact_mean))
        .sum();
    let exact_stderr = (exact_var / trials as f64).sqrt();
    // Dual route: the recurrence and the embedding recursion must agree.
    assert!(
        (exact_mean - g).abs() <= 1e-9 * g,
        "recurrence {g} vs embedding expectation {exact_mean}"
    );

    let costs = closest_point_costs(&inst.centers, trials, Seed(7)).unwrap();
    let (mc_mean, _) = mean_stderr(&costs);
    let deviation = (mc_mean - g).abs();
    report(
        "1 harmonic-lower-bound",
        deviation <= 3.0 * exact_stderr && gap < 1e-4,
        &format!(
            "MC mean {mc_mean:.4} vs g(10) {g:.6} (|dev| {deviation:.3} <= 3se {:.3}); |g - (1+H9)| = {gap:.2e}",
            3.0 * exact_stderr
        ),
    );
}

/// Criterion 2: 500 random normalized instances (k <= 8) keep the exact
/// expected cost under 1 + H_{k-1} + 1e-9, with the appended axis instance
/// within 5% of the bound.
#[test]
fn acceptance_2_tight_upper_bound() {
    let check = verify::harmonic_upper_bound(500, Seed(224));
    report("2 tight-upper-bound", check.passed, &check.details);
}

/// Criterion 3: exact survival distribution matches both the clock-order
/// simulation and the full tree construction's origin leaf, 1e5 trials at
/// significance 1e-3.
#[test]
fn acceptance_3_exact_vs_monte_carlo() {
    let clock = verify::survival_vs_clock_trials(2, 100_000, Seed(31));
    report("3a survival-vs-clock", clock.passed, &clock.details);
    let rt = verify::survival_vs_random_thresholds(2, 100_000, Seed(32));
    report("3b survival-vs-tree-process", rt.passed, &rt.details);
}

/// Criterion 4: zero monotonicity violations over 1e4 coupled-clock trials.
#[test]
fn acceptance_4_monotonicity() {
    let check = verify::monotonicity(10_000, Seed(4));
    report("4 monotonicity", check.passed, &check.details);
}

/// Criterion 5: l1 distances of 100 random point sets preserved to 1e-9
/// relative error, including distances to the origin.
#[test]
fn acceptance_5_cut_metric_embedding() {
    let check = verify::embedding_identity(100, Seed(5));
    report("5 cut-metric-embedding", check.passed, &check.details);
}

/// Criterion 6: the hitting-set reduction's costs. Fixed-centers optimum is
/// exactly d + h(s-2) = 5 at M = 5; the free-centers optimum at M = 50 lies
/// in [5 - 0.1, 5]; q = 1 and q = 2 agree on these binary instances.
#[test]
fn acceptance_6_hitting_set_reduction() {
    let hs = HittingSetInstance::new(4, vec![vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
    let caps = OracleCaps::default();

    let inst = gen_hitting_instance(&hs, 5).unwrap();
    let clustering = inst.clustering().unwrap();
    let (_, fixed_cost) = opt_explainable_fixed(&inst.points, &clustering, &caps).unwrap();
    let h = min_hitting_set(&hs, None);
    assert!(h.exact);
    let expected = 4.0 + h.elements.len() as f64 * (3.0 - 2.0);
    let fixed_ok = fixed_cost == expected;

    // Binary coordinates: q = 1 and q = 2 reference and fixed-centers costs
    // coincide.
    let clustering2 = xclust_core::model::Clustering::new(
        inst.centers.clone(),
        inst.assignment.clone(),
        CostExponent::Two,
    )
    .unwrap();
    let ref1 = cost_q(&inst.points, &clustering).unwrap();
    let ref2 = cost_q(&inst.points, &clustering2).unwrap();
    let (_, fixed2) = opt_explainable_fixed(&inst.points, &clustering2, &caps).unwrap();
    let q_ok = ref1 == ref2 && fixed_cost == fixed2;

    let inst50 = gen_hitting_instance(&hs, 50).unwrap();
    let (_, _, free1) = opt_explainable_free(&inst50.points, 3, CostExponent::One, &caps).unwrap();
    let (_, _, free2) = opt_explainable_free(&inst50.points, 3, CostExponent::Two, &caps).unwrap();
    let free_ok = |cost: f64| cost >= expected - 0.1 - 1e-9 && cost <= expected + 1e-9;

    report(
        "6 hitting-set-reduction",
        fixed_ok && q_ok && free_ok(free1) && free_ok(free2),
        &format!(
            "fixed OPT {fixed_cost} (expected {expected}), free OPT q1 {free1:.4} q2 {free2:.4} in [4.9, 5], costs coincide: {q_ok}"
        ),
    );
}

/// Criterion 7: per-node properties of the k-means construction on 50
/// Gaussian-mixture instances (k <= 12, d <= 6).
#[test]
fn acceptance_7_kmeans_properties() {
    // (a) close-pair restriction keeps half the weight at every node,
    // (c) diameters at least halve between consecutive bulk nodes, and the
    // end-to-end cost ratio stays finite and under the 50k ceiling.
    let nodes = verify::kmeans_node_properties(50, Seed(71));
    report("7a/7c node-properties", nodes.passed, &nodes.details);
    // (b) bulk-cut draw counts against the expected-cut bound.
    let bulk = verify::kmeans_bulk_count(50, 100, Seed(72));
    report("7b bulk-cut-count", bulk.passed, &bulk.details);
    // (d) separation probability of a base-distribution cut.
    let sep = verify::kmeans_separation_probability(50, 20_000, Seed(73));
    report("7d separation-probability", sep.passed, &sep.details);
    // (e) expected smaller side of a solo cut.
    let solo = verify::kmeans_solo_separation(50, 4_000, Seed(74));
    report("7e solo-separation", solo.passed, &solo.details);
}

/// Criterion 8: the box dynamic program equals naive enumeration on 50
/// small instances, and no Random Thresholds tree beats the optimum.
#[test]
fn acceptance_8_oracle_soundness() {
    let dp = verify::oracle_dp_vs_naive(50, Seed(81));
    report("8a dp-vs-naive", dp.passed, &dp.details);
    let rt = verify::rt_cost_dominates_oracle(12, 200, Seed(82));
    report("8b rt-dominates-oracle", rt.passed, &rt.details);
}

/// Criterion 9: set-system parameter validation and the exact small-k
/// hitting-set verification.
#[test]
fn acceptance_9_set_system_construction() {
    // Default p rejected at k = 64, accepted at k = 1e6 with p ~ 0.2902.
    let rejected = set_system_params(64, None).is_err();
    let params = set_system_params(1_000_000, None).unwrap();
    let accepted = (params.p - 0.2902).abs() < 1e-3;

    // 20 seeded instances at d = k = 15 with an override: the solver's
    // optimum is verified exhaustively (no hitting set one element smaller).
    let k = 15;
    let mut verified = 0usize;
    let mut ratio_sum = 0.0;
    for s in 0..20u64 {
        let (inst, report) = gen_random_set_system(k, Some(0.3), Seed(900 + s)).unwrap();
        let sol = min_hitting_set(&inst, None);
        assert!(sol.exact, "15-element instances are exactly solvable");
        let h = sol.elements.len();
        assert!(inst.is_hit_by(&sol.elements));
        let smaller_exists = (0u32..(1 << k)).any(|mask| {
            (mask.count_ones() as usize) == h - 1 && {
                let elements: Vec<usize> = (0..k).filter(|&e| mask & (1 << e) != 0).collect();
                inst.is_hit_by(&elements)
            }
        });
        if !smaller_exists {
            verified += 1;
        }
        let mean_size =
            report.sizes.iter().sum::<usize>() as f64 / report.sizes.len() as f64;
        ratio_sum += h as f64 * mean_size / k as f64;
    }
    // The asymptotic h*s/k >= (1-o(1)) ln k claim is reported, not asserted.
    let mean_ratio = ratio_sum / 20.0;
    report(
        "9 set-system-construction",
        rejected && accepted && verified == 20 && mean_ratio.is_finite(),
        &format!(
            "k=64 rejected, k=1e6 accepted (p={:.4}), {verified}/20 optima verified exhaustively, mean h*s/k = {mean_ratio:.2} (ln k = {:.2}, reported only)",
            params.p,
            (k as f64).ln()
        ),
    );
}
