//! Reference game instances used across the documentation, tests and the
//! regression suite.

use crate::model::{GameModel, Horizon, NoiseModel, StageMatrices};
use nalgebra::{DMatrix, DVector};

#[allow(clippy::too_many_arguments)]
fn scalar_stage(
    a: f64,
    b: f64,
    a_bar: f64,
    b_bar: f64,
    q: f64,
    s_x: f64,
    q_bar: f64,
    g_x: f64,
    r: f64,
    s_u: f64,
    r_bar: f64,
    g_u: f64,
) -> StageMatrices {
    let m = |v: f64| DMatrix::from_element(1, 1, v);
    StageMatrices {
        a: m(a),
        a_bar: m(a_bar),
        b: m(b),
        b_bar: m(b_bar),
        q: m(q),
        s_x: m(s_x),
        q_bar: m(q_bar),
        g_x: m(g_x),
        r: m(r),
        s_u: m(s_u),
        r_bar: m(r_bar),
        g_u: m(g_u),
    }
}

/// The scalar benchmark game: `A = B = 1`, `Ā = B̄ = 0`, `Q = 1`,
/// `Sˣ = −0.5`, `Q̄ = 5`, `R = 5`, everything else zero, horizon 50.
pub fn scalar_benchmark() -> GameModel {
    GameModel::new(
        1,
        1,
        Horizon::Finite(50),
        None,
        vec![scalar_stage(
            1.0, 1.0, 0.0, 0.0, 1.0, -0.5, 5.0, 0.0, 5.0, 0.0, 0.0, 0.0,
        )],
    )
    .expect("benchmark model is valid")
}

/// Stationary variant of the benchmark with discount `gamma`.
pub fn scalar_benchmark_stationary(gamma: f64) -> GameModel {
    GameModel::new(
        1,
        1,
        Horizon::Stationary,
        Some(gamma),
        vec![scalar_stage(
            1.0, 1.0, 0.0, 0.0, 1.0, -0.5, 5.0, 0.0, 5.0, 0.0, 0.0, 0.0,
        )],
    )
    .expect("benchmark model is valid")
}

/// Benchmark noise: i.i.d. with mean 10, initial variance 2, step variance 1.
pub fn scalar_benchmark_noise(n: usize) -> NoiseModel {
    NoiseModel::iid_shared(
        n,
        DVector::from_element(1, 10.0),
        DMatrix::from_element(1, 1, 2.0),
        DMatrix::from_element(1, 1, 1.0),
    )
}

/// Zero-noise benchmark variant: deterministic initial state 10.
pub fn scalar_benchmark_noise_deterministic(n: usize) -> NoiseModel {
    NoiseModel::iid_shared(
        n,
        DVector::from_element(1, 10.0),
        DMatrix::zeros(1, 1),
        DMatrix::zeros(1, 1),
    )
}

/// A game solvable for small populations but not in the infinite-population
/// limit: `Q = −1`, `R = 1`, `Sˣ = −Q`, `Sᵘ = −R`, `Q̄ = Q`,
/// `R̄ = Gᵘ = R`, `Gˣ = −100·Q`. The own-state weight turns negative as the
/// population grows, so the α→0 recursion loses convexity while small-`n`
/// instances stay well posed.
pub fn finite_only_game(horizon: usize) -> GameModel {
    let q = -1.0;
    let r = 1.0;
    GameModel::new(
        1,
        1,
        Horizon::Finite(horizon),
        None,
        vec![scalar_stage(
            1.0,
            1.0,
            0.0,
            0.0,
            q,
            -q,
            q,
            -100.0 * q,
            r,
            -r,
            r,
            r,
        )],
    )
    .expect("finite-only game is valid")
}

/// A game solvable in the infinite-population limit but not at finite `n`:
/// decoupled dynamics with well-posed individual weights, plus large
/// negative collaborative terms that destroy convexity at any finite
/// population.
pub fn infinite_only_game(horizon: usize, magnitude: f64) -> GameModel {
    GameModel::new(
        1,
        1,
        Horizon::Finite(horizon),
        None,
        vec![scalar_stage(
            1.0,
            1.0,
            0.0,
            0.0,
            1.0,
            0.0,
            -magnitude,
            -magnitude,
            1.0,
            0.0,
            -magnitude,
            -magnitude,
        )],
    )
    .expect("infinite-only game is valid")
}

/// Social-cost instance: `Q = Sˣ = R = Sᵘ = 0`, `Gˣ = 1`, `Gᵘ = 1`,
/// `Q̄ = R̄ = 0`, `A = B = 1`.
pub fn scalar_social(horizon: usize) -> GameModel {
    GameModel::new(
        1,
        1,
        Horizon::Finite(horizon),
        None,
        vec![scalar_stage(
            1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
        )],
    )
    .expect("social model is valid")
}

/// Zero-cost model of the given dimensions: every solver output is zero.
pub fn zero_cost(d_x: usize, d_u: usize, horizon: usize) -> GameModel {
    let mut stage = StageMatrices::zeros(d_x, d_u);
    stage.a = DMatrix::identity(d_x, d_x);
    stage.b = DMatrix::from_fn(d_x, d_u, |i, j| if i == j { 1.0 } else { 0.0 });
    GameModel::new(d_x, d_u, Horizon::Finite(horizon), None, vec![stage])
        .expect("zero-cost model is valid")
}
