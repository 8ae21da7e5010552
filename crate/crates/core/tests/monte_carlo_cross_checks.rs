//! Monte Carlo cross-checks: the closed-form values and the simulator must
//! agree within statistical error. These pair the two independent routes —
//! trace formulas on one side, sampled trajectories on the other.

use deeplq::equilibrium::{optimal_cost, sapde, spne, NsStrategyKind};
use deeplq::gap::performance_gap;
use deeplq::model::WeightProfile;
use deeplq::reference;
use deeplq::sim::{empirical_performance_gap, simulate, ProfileSpec, SimConfig};

#[test]
fn equilibrium_cost_formula_matches_simulation() {
    let model = reference::scalar_benchmark();
    let n = 2;
    let horizon = 50;
    let noise = reference::scalar_benchmark_noise(n);
    let profile = WeightProfile::Homogeneous { n };
    let formula = optimal_cost(&model, &profile, &noise, 0, horizon).unwrap();

    let strategy = spne(&model, &profile, horizon).unwrap();
    let config = SimConfig::new(n, horizon, 100_000, 2024);
    let result = simulate(&model, &noise, &config, &ProfileSpec::Shared(strategy)).unwrap();
    let mean = result.mean_cost[0][0];
    let se = result.std_error[0][0];
    let diff = (mean - formula.total).abs();
    assert!(
        diff < 3.0 * se,
        "formula {} vs simulated {mean} (3se = {})",
        formula.total,
        3.0 * se
    );
}

#[test]
fn lyapunov_gap_matches_common_random_numbers_estimate() {
    let model = reference::scalar_benchmark();
    let n = 20;
    let horizon = 50;
    let noise = reference::scalar_benchmark_noise(n);
    let exact = performance_gap(&model, &noise, n, NsStrategyKind::Sapde, &[1], horizon).unwrap();

    let profile = WeightProfile::Homogeneous { n };
    let hat = ProfileSpec::Shared(sapde(&model, &noise, n, horizon).unwrap());
    let star = ProfileSpec::Shared(spne(&model, &profile, horizon).unwrap());
    let est = empirical_performance_gap(
        &model, &noise, n, &hat, &star, 30_000, 99, &[1], horizon,
    )
    .unwrap();
    // Signed values agree; the gap itself is their magnitude.
    let diff = (est[0].estimate - exact.per_t0[0].per_player[0]).abs();
    assert!(
        diff < 4.0 * est[0].std_error,
        "lyapunov {} vs mc {} +- {}",
        exact.per_t0[0].per_player[0],
        est[0].estimate,
        est[0].std_error
    );
    assert!(exact.per_t0[0].gap > 1.0, "gap should be nonzero at n=20");
    let archived = exact.with_monte_carlo(deeplq::gap::McCrossCheck {
        estimate: est[0].estimate,
        std_error: est[0].std_error,
        replications: est[0].replications,
    });
    let mc = archived.monte_carlo.as_ref().unwrap();
    assert!((mc.estimate - archived.per_t0[0].per_player[0]).abs() < 4.0 * mc.std_error);
}

/// The benchmark has one special population size: at `n = 10` the two gain
/// families coincide (`(1−α)(−Sˣ) = α(Sˣ+Q̄)` at `α = 0.1`), the
/// no-sharing strategy reduces to pure local feedback identical to the
/// equilibrium, and the gap is exactly zero.
#[test]
fn benchmark_population_ten_is_degenerate() {
    let model = reference::scalar_benchmark();
    let horizon = 50;
    let sol = deeplq::riccati::solve_finite(&model, 0.1, horizon).unwrap();
    for st in &sol.stages {
        assert!((st.theta.clone() - st.theta_bar.clone()).amax() < 1e-12);
    }
    let noise = reference::scalar_benchmark_noise(10);
    let exact =
        performance_gap(&model, &noise, 10, NsStrategyKind::Sapde, &[1], horizon).unwrap();
    assert!(exact.per_t0[0].gap < 1e-12, "{}", exact.per_t0[0].gap);
}

/// Sharing draws across both runs must reduce the estimator variance well
/// below the independent-draws alternative: here the CRN standard error
/// must beat the two-run error bound by a wide margin.
#[test]
fn common_random_numbers_beat_independent_draws() {
    let model = reference::scalar_benchmark();
    let n = 10;
    let horizon = 50;
    let noise = reference::scalar_benchmark_noise(n);
    let profile = WeightProfile::Homogeneous { n };
    let hat = ProfileSpec::Shared(sapde(&model, &noise, n, horizon).unwrap());
    let star = ProfileSpec::Shared(spne(&model, &profile, horizon).unwrap());
    let reps = 5000;
    let crn = empirical_performance_gap(
        &model, &noise, n, &hat, &star, reps, 7, &[1], horizon,
    )
    .unwrap();

    // Independent-draws alternative: two simulations with different seeds.
    let mut cfg_a = SimConfig::new(n, horizon, reps, 1);
    let mut cfg_b = SimConfig::new(n, horizon, reps, 2);
    cfg_a.t0s = vec![1];
    cfg_b.t0s = vec![1];
    let run_hat = simulate(&model, &noise, &cfg_a, &hat).unwrap();
    let run_star = simulate(&model, &noise, &cfg_b, &star).unwrap();
    let independent_se =
        (run_hat.std_error[0][0].powi(2) + run_star.std_error[0][0].powi(2)).sqrt();
    assert!(
        crn[0].std_error < independent_se / 3.0,
        "crn se {} vs independent se {independent_se}",
        crn[0].std_error
    );
}

/// Switching at a later stage: the exact value and the estimator must agree
/// there too (exercises the branch-at-t0 path).
#[test]
fn mid_game_switch_gap_matches() {
    let model = reference::scalar_benchmark();
    let n = 20;
    let horizon = 50;
    let noise = reference::scalar_benchmark_noise(n);
    let exact =
        performance_gap(&model, &noise, n, NsStrategyKind::Sapde, &[25], horizon).unwrap();
    let profile = WeightProfile::Homogeneous { n };
    let hat = ProfileSpec::Shared(sapde(&model, &noise, n, horizon).unwrap());
    let star = ProfileSpec::Shared(spne(&model, &profile, horizon).unwrap());
    let est = empirical_performance_gap(
        &model, &noise, n, &hat, &star, 30_000, 41, &[25], horizon,
    )
    .unwrap();
    let diff = (est[0].estimate - exact.per_t0[0].per_player[0]).abs();
    assert!(
        diff < 4.0 * est[0].std_error,
        "lyapunov {} vs mc {} +- {}",
        exact.per_t0[0].per_player[0],
        est[0].estimate,
        est[0].std_error
    );
}

/// Same cross-check for the mean-field strategy against its matching
/// reference (infinite-population gains under deep-state sharing).
#[test]
fn swmfe_lyapunov_matches_monte_carlo() {
    let model = reference::scalar_benchmark();
    let n = 20;
    let horizon = 50;
    let noise = reference::scalar_benchmark_noise(n);
    let exact = performance_gap(&model, &noise, n, NsStrategyKind::Swmfe, &[1], horizon).unwrap();
    let hat = ProfileSpec::Shared(
        deeplq::equilibrium::swmfe(&model, &noise, &WeightProfile::Homogeneous { n }, horizon)
            .unwrap(),
    );
    let star = ProfileSpec::Shared(deeplq::equilibrium::spne_infinite(&model, horizon).unwrap());
    let est = empirical_performance_gap(
        &model, &noise, n, &hat, &star, 30_000, 17, &[1], horizon,
    )
    .unwrap();
    let diff = (est[0].estimate - exact.per_t0[0].per_player[0]).abs();
    assert!(
        diff < 4.0 * est[0].std_error,
        "lyapunov {} vs mc {} +- {}",
        exact.per_t0[0].per_player[0],
        est[0].estimate,
        est[0].std_error
    );
}
