//! Exact performance gaps of the no-sharing strategies via backward
//! Lyapunov recursions, and deviation-benefit estimates via a stacked
//! best-response oracle.
//!
//! When all players switch (at some stage `t₀`, after an exact-solution
//! history) from the deep-state-sharing strategy to its no-sharing
//! counterpart with matching gains, the per-player cost difference is a
//! quadratic functional of the relative distances
//!
//! ```text
//! s_t = (e^i_t, e_t, ζ_t)
//!     = (x̂^i_t − x̂̄_t,  x̂̄_t − z_t,  x̄_t − z_t)
//! ```
//!
//! which evolve autonomously:
//! `s_{t+1} = Ã_t s_t + (Δw^i_t, w̄_t, w̄_t)` with the block-diagonal
//! transition `Ã = diag(A+Bθ, A+Ā+(B+B̄)θ, A+Ā+(B+B̄)θ̄)`. The gap is then
//! a trace pairing of the noise/initial second moments with the solution
//! `M̃` of a backward Lyapunov recursion.

mod oracle;

pub use oracle::{
    closed_loop_cost, deviation_benefit, environment_sensitivity, StackedProfile,
    DEFAULT_ORACLE_CAP,
};

use crate::equilibrium::NsStrategyKind;
use crate::gauge::lift;
use crate::linalg::{spectral_radius, symmetrized, trace_product};
use crate::model::{GameModel, NoiseModel, StageMatrices, WeightProfile};
use crate::riccati::{self, SolutionKind};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Relative-distance transition `diag(A+Bθ, A+Ā+(B+B̄)θ, A+Ā+(B+B̄)θ̄)`.
pub fn error_transition(
    stage: &StageMatrices,
    theta: &DMatrix<f64>,
    theta_bar: &DMatrix<f64>,
) -> DMatrix<f64> {
    let d = stage.a.nrows();
    let mut out = DMatrix::zeros(3 * d, 3 * d);
    let blk1 = &stage.a + &stage.b * theta;
    let a_tot = &stage.a + &stage.a_bar;
    let b_tot = &stage.b + &stage.b_bar;
    let blk2 = &a_tot + &b_tot * theta;
    let blk3 = &a_tot + &b_tot * theta_bar;
    out.view_mut((0, 0), (d, d)).copy_from(&blk1);
    out.view_mut((d, d), (d, d)).copy_from(&blk2);
    out.view_mut((2 * d, 2 * d), (d, d)).copy_from(&blk3);
    out
}

/// Cost weight of the relative-distance system. Built from the lifted cost
/// blocks at weight `1/n`; the `(1,1)`, `(2,3)` and `(3,2)` blocks are zero
/// and the `ζ` rows carry leading minus signs (the gap is a signed
/// difference, so the weight is indefinite).
pub fn error_cost_weight(
    stage: &StageMatrices,
    n: usize,
    theta: &DMatrix<f64>,
    theta_bar: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let alpha = 1.0 / n as f64;
    let blocks = lift(stage, alpha)?;
    let d = stage.a.nrows();
    let q12 = blocks.q.view((0, d), (d, d)).into_owned();
    let q22 = blocks.q.view((d, d), (d, d)).into_owned();
    let r12 = blocks.r.view((0, d), (d, d)).into_owned();
    let r22 = blocks.r.view((d, d), (d, d)).into_owned();

    let tq12 = &q12 + theta.transpose() * &r12 * theta;
    let tq13 = -(&q12 + theta.transpose() * &r12 * theta_bar);
    let tq22 = &q22 + theta.transpose() * &r22 * theta;
    let tq33 = -(&q22 + theta_bar.transpose() * &r22 * theta_bar);

    let mut out = DMatrix::zeros(3 * d, 3 * d);
    out.view_mut((0, d), (d, d)).copy_from(&tq12);
    out.view_mut((d, 0), (d, d)).copy_from(&tq12.transpose());
    out.view_mut((0, 2 * d), (d, d)).copy_from(&tq13);
    out.view_mut((2 * d, 0), (d, d)).copy_from(&tq13.transpose());
    out.view_mut((d, d), (d, d)).copy_from(&tq22);
    out.view_mut((2 * d, 2 * d), (d, d)).copy_from(&tq33);
    Ok(out)
}

/// Which population's gains drive the relative-distance system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapVariant {
    /// Population-size-dependent gains (weight `1/n`).
    FiniteN,
    /// Infinite-population gains (weight `0`) applied in the `n`-player game.
    Infinite,
}

/// The assembled relative-distance system over a horizon.
#[derive(Debug, Clone)]
pub struct ErrorSystem {
    pub variant: GapVariant,
    pub n: usize,
    /// `Ã_t` per step.
    pub a_tilde: Vec<DMatrix<f64>>,
    /// `Q̃_t` per step.
    pub q_tilde: Vec<DMatrix<f64>>,
    /// Lyapunov solution `M̃_t`, `t = 1..=T+1` (boundary zero included).
    pub m_tilde: Vec<DMatrix<f64>>,
}

impl ErrorSystem {
    /// `‖M̃^{1,1}_t‖∞` maximized over `t`; structurally zero.
    pub fn max_m11(&self) -> f64 {
        let d = self.a_tilde[0].nrows() / 3;
        self.m_tilde
            .iter()
            .map(|m| m.view((0, 0), (d, d)).amax())
            .fold(0.0, f64::max)
    }
}

/// Assemble `Ã_t`, `Q̃_t` and solve the backward Lyapunov recursion
/// `M̃_t = Ã_tᵀ M̃_{t+1} Ã_t + Q̃_t`, `M̃_{T+1} = 0`.
pub fn error_system(
    model: &GameModel,
    n: usize,
    theta: &[DMatrix<f64>],
    theta_bar: &[DMatrix<f64>],
    variant: GapVariant,
) -> Result<ErrorSystem> {
    let horizon = theta.len();
    let d = model.d_x();
    let mut a_tilde = Vec::with_capacity(horizon);
    let mut q_tilde = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let stage = model.stage(t);
        a_tilde.push(error_transition(stage, &theta[t], &theta_bar[t]));
        q_tilde.push(error_cost_weight(stage, n, &theta[t], &theta_bar[t])?);
    }
    let mut m_tilde = vec![DMatrix::zeros(3 * d, 3 * d); horizon + 1];
    for t in (0..horizon).rev() {
        let m = &a_tilde[t].transpose() * &m_tilde[t + 1] * &a_tilde[t] + &q_tilde[t];
        m_tilde[t] = symmetrized(&m);
    }
    Ok(ErrorSystem {
        variant,
        n,
        a_tilde,
        q_tilde,
        m_tilde,
    })
}

/// Second moments of the relative-distance state at the switch stage, and
/// of its driving noise: `H^{x,i}` pairs with `M̃_{t₀}`, `H^{w,i}_t` with
/// `M̃_{t+1}`.
#[derive(Debug, Clone)]
pub struct MomentBlocks {
    /// Per player: `H^{x,i}_{t₀}` for each requested `t₀` (outer index runs
    /// over `t₀` positions).
    pub h_x: Vec<Vec<DMatrix<f64>>>,
    /// Per player, per step `t`: `H^{w,i}_t`.
    pub h_w: Vec<Vec<DMatrix<f64>>>,
    /// Player indices carried by the rows above (singleton when symmetric).
    pub players: Vec<usize>,
}

/// `3d × 3d` moment matrix from deviation/mean blocks: rows 2 and 3 carry
/// the same mean-channel variable, hence the repeated pattern.
fn h_matrix(
    var_dev: &DMatrix<f64>,
    cov_dev_bar: &DMatrix<f64>,
    var_bar: &DMatrix<f64>,
) -> DMatrix<f64> {
    let d = var_dev.nrows();
    let mut out = DMatrix::zeros(3 * d, 3 * d);
    out.view_mut((0, 0), (d, d)).copy_from(var_dev);
    for b in 1..3 {
        out.view_mut((0, b * d), (d, d)).copy_from(cov_dev_bar);
        out.view_mut((b * d, 0), (d, d))
            .copy_from(&cov_dev_bar.transpose());
        for b2 in 1..3 {
            out.view_mut((b * d, b2 * d), (d, d)).copy_from(var_bar);
        }
    }
    out
}

/// Propagated second moments of `(Δx^i_t, x̄_t − E[x̄_t])` under the linear
/// reference profile with the given gains. `h_x` entries align with the
/// positions of `t0s` as passed in.
///
/// Zero-mean driving noise means second moments obey the same propagation
/// law as covariances, so the possibly nonzero deviation mean is folded
/// into `var_dev` once at `t = 1`; the mean channel is centered by
/// construction (the prediction starts at `E[x̄_1]`).
fn reference_moments(
    model: &GameModel,
    noise: &NoiseModel,
    alpha: &[f64],
    theta: &[DMatrix<f64>],
    theta_bar: &[DMatrix<f64>],
    t0s: &[usize],
    players: &[usize],
) -> MomentBlocks {
    let horizon = theta.len();
    let mut h_x = vec![vec![DMatrix::zeros(0, 0); t0s.len()]; players.len()];
    let mut h_w = vec![Vec::with_capacity(horizon); players.len()];

    for (pi, &i) in players.iter().enumerate() {
        let init = noise.initial_gauge_moments(alpha, i);
        let mean_dev = noise.mean_of(i) - noise.mean_deep_state(alpha);
        let mut var_dev = &init.var_dev + &mean_dev * mean_dev.transpose();
        let mut cov = init.cov_dev_bar.clone();
        let mut var_bar = init.var_bar.clone();

        for t in 0..horizon {
            for (k, &t0) in t0s.iter().enumerate() {
                if t0 == t + 1 {
                    h_x[pi][k] = h_matrix(&var_dev, &cov, &var_bar);
                }
            }
            let stage = model.stage(t);
            let a_dev = &stage.a + &stage.b * &theta[t];
            let a_bar = &stage.a + &stage.a_bar + (&stage.b + &stage.b_bar) * &theta_bar[t];
            let w = noise.noise_gauge_moments(t, alpha, i);
            var_dev = symmetrized(&(&a_dev * &var_dev * a_dev.transpose() + &w.var_dev));
            cov = &a_dev * &cov * a_bar.transpose() + &w.cov_dev_bar;
            var_bar = symmetrized(&(&a_bar * &var_bar * a_bar.transpose() + &w.var_bar));
            h_w[pi].push(h_matrix(&w.var_dev, &w.cov_dev_bar, &w.var_bar));
        }
    }
    MomentBlocks {
        h_x,
        h_w,
        players: players.to_vec(),
    }
}

/// Per-`t₀` gap values.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GapAtT0 {
    pub t0: usize,
    /// `max_i |ΔJ^i|`.
    pub gap: f64,
    /// Signed per-player differences (one entry when players are symmetric).
    pub per_player: Vec<f64>,
}

/// Monte Carlo cross-check attached by the caller.
#[derive(Debug, Clone, serde::Serialize)]
pub struct McCrossCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
}

/// Exact gap report for one strategy at one population size.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GapReport {
    pub n: usize,
    pub strategy: NsStrategyKind,
    pub per_t0: Vec<GapAtT0>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McCrossCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rationality: Option<RationalityEstimate>,
    /// Max over `t` of `‖M̃^{1,1}_t‖∞` (structurally zero).
    pub m11_residual: f64,
}

/// Deviation-benefit and environment-sensitivity estimates (see
/// [`deviation_benefit`] and [`environment_sensitivity`]).
#[derive(Debug, Clone, serde::Serialize)]
pub struct RationalityEstimate {
    pub deviation_benefit: f64,
    pub environment_sensitivity: f64,
}

/// Rationality numbers for a no-sharing strategy at stage `t₀`: the exact
/// best-response benefit (tight for linear environments) and the
/// probe-family environment sensitivity, each maximized over the players
/// that matter. The supremum underlying the sensitivity is estimated, not
/// bounded.
pub fn rationality_estimate(
    model: &GameModel,
    noise: &NoiseModel,
    n: usize,
    strategy: NsStrategyKind,
    t0: usize,
    horizon: usize,
) -> Result<RationalityEstimate> {
    let profile = WeightProfile::Homogeneous { n };
    let hat = match strategy {
        NsStrategyKind::Sapde => crate::equilibrium::sapde(model, noise, n, horizon)?,
        NsStrategyKind::Swmfe => crate::equilibrium::swmfe(model, noise, &profile, horizon)?,
    }
    .to_stacked_profile(horizon);
    let star = match strategy {
        NsStrategyKind::Sapde => crate::equilibrium::spne(model, &profile, horizon)?,
        NsStrategyKind::Swmfe => crate::equilibrium::spne_infinite(model, horizon)?,
    }
    .to_stacked_profile(horizon);
    let mut benefit = 0.0f64;
    let mut sensitivity = 0.0f64;
    for i in players_to_scan(noise) {
        benefit = benefit.max(
            oracle::deviation_benefit(model, noise, n, &hat, i, t0, horizon, None)?.abs(),
        );
        sensitivity = sensitivity.max(oracle::environment_sensitivity(
            model, noise, n, &hat, &star, i, t0, horizon,
        )?);
    }
    Ok(RationalityEstimate {
        deviation_benefit: benefit,
        environment_sensitivity: sensitivity,
    })
}

impl GapReport {
    /// Attach rationality numbers computed by [`rationality_estimate`].
    pub fn with_rationality(mut self, estimate: RationalityEstimate) -> Self {
        self.rationality = Some(estimate);
        self
    }

    /// Attach a Monte Carlo cross-check.
    pub fn with_monte_carlo(mut self, check: McCrossCheck) -> Self {
        self.monte_carlo = Some(check);
        self
    }
}

fn players_to_scan(noise: &NoiseModel) -> Vec<usize> {
    if noise.player_symmetric() {
        vec![0]
    } else {
        (0..noise.n()).collect()
    }
}

/// Exact finite-horizon performance gap of a no-sharing strategy at every
/// requested switch stage `t₀` (1-based), by the backward Lyapunov
/// recursion. Requires homogeneous weights.
pub fn performance_gap(
    model: &GameModel,
    noise: &NoiseModel,
    n: usize,
    strategy: NsStrategyKind,
    t0s: &[usize],
    horizon: usize,
) -> Result<GapReport> {
    let profile = WeightProfile::Homogeneous { n };
    let alpha = profile.realize()?;
    let sol_n = riccati::solve_finite(model, 1.0 / n as f64, horizon)?;
    let (theta, theta_bar, variant) = match strategy {
        NsStrategyKind::Sapde => {
            let (t, tb) = sol_n.gain_trajectories(horizon);
            (t, tb, GapVariant::FiniteN)
        }
        NsStrategyKind::Swmfe => {
            let (t, tb) = crate::equilibrium::infinite_gains(model, horizon)?;
            (t, tb, GapVariant::Infinite)
        }
    };
    for &t0 in t0s {
        if t0 == 0 || t0 > horizon {
            return Err(Error::Precondition(format!(
                "t0 = {t0} outside 1..={horizon}"
            )));
        }
    }
    let system = error_system(model, n, &theta, &theta_bar, variant)?;
    let players = players_to_scan(noise);
    let moments = reference_moments(model, noise, &alpha, &theta, &theta_bar, t0s, &players);

    let mut per_t0 = Vec::with_capacity(t0s.len());
    for (k, &t0) in t0s.iter().enumerate() {
        let mut per_player = Vec::with_capacity(players.len());
        for pi in 0..players.len() {
            let mut value = trace_product(&moments.h_x[pi][k], &system.m_tilde[t0 - 1]);
            for t in (t0 - 1)..horizon {
                value += trace_product(&moments.h_w[pi][t], &system.m_tilde[t + 1]);
            }
            per_player.push(value);
        }
        let gap = per_player.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        per_t0.push(GapAtT0 {
            t0,
            gap,
            per_player,
        });
    }
    Ok(GapReport {
        n,
        strategy,
        per_t0,
        monte_carlo: None,
        rationality: None,
        m11_residual: system.max_m11(),
    })
}

/// Discounted stationary performance gap at stage `t₀`:
/// `γ^{t₀−1}·((1−γ)·tr(Hˣ M̃) + γ·tr(Hʷ M̃))` with
/// `M̃ = γ Ãᵀ M̃ Ã + Q̃`. Refuses when `γ·ρ(Ã)² ≥ 1` (the series diverges
/// and the no-sharing strategy can destabilize the game).
pub fn performance_gap_discounted(
    model: &GameModel,
    noise: &NoiseModel,
    n: usize,
    strategy: NsStrategyKind,
    gamma: f64,
    t0s: &[usize],
) -> Result<GapReport> {
    model.require_stationary()?;
    let profile = WeightProfile::Homogeneous { n };
    let alpha = profile.realize()?;
    let sol_n = riccati::solve_algebraic(
        model,
        1.0 / n as f64,
        gamma,
        riccati::ALGEBRAIC_TOL,
        riccati::ALGEBRAIC_MAX_ITER,
    )?;
    let (theta, theta_bar) = match strategy {
        NsStrategyKind::Sapde => {
            let st = &sol_n.stages[0];
            (st.theta.clone(), st.theta_bar.clone())
        }
        NsStrategyKind::Swmfe => {
            match riccati::solve_algebraic(
                model,
                0.0,
                gamma,
                riccati::ALGEBRAIC_TOL,
                riccati::ALGEBRAIC_MAX_ITER,
            ) {
                Ok(sol_inf) => {
                    let st = &sol_inf.stages[0];
                    (st.theta.clone(), st.theta_bar.clone())
                }
                // Pure social-cost models: the weight-independent gains are
                // the infinite-population limit.
                Err(limit_err) => match riccati::solve_social(
                    model,
                    riccati::HorizonSpec::Discounted { gamma },
                ) {
                    Ok(social) => (social.theta[0].clone(), social.theta_bar[0].clone()),
                    Err(_) => return Err(limit_err),
                },
            }
        }
    };
    debug_assert!(matches!(sol_n.kind, SolutionKind::Algebraic { .. }));
    let stage = model.stage(0);
    let a_tilde = error_transition(stage, &theta, &theta_bar);
    let q_tilde = error_cost_weight(stage, n, &theta, &theta_bar)?;
    let rho = spectral_radius(&a_tilde);
    if gamma * rho * rho >= 1.0 {
        return Err(Error::SpectralDivergence {
            value: gamma * rho * rho,
        });
    }
    // M̃ = γ Ãᵀ M̃ Ã + Q̃ by fixed-point iteration; convergence is
    // guaranteed by the spectral condition just checked.
    let mut m = DMatrix::zeros(q_tilde.nrows(), q_tilde.ncols());
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let next = symmetrized(&(&a_tilde.transpose() * &m * &a_tilde * gamma + &q_tilde));
        let diff = (&next - &m).amax();
        m = next;
        if diff < 1e-12 * (1.0 + m.amax()) {
            break;
        }
        if iterations >= 1_000_000 {
            return Err(Error::NotConverged {
                iterations,
                residual: diff,
            });
        }
    }
    let d = model.d_x();
    debug_assert!(m.view((0, 0), (d, d)).amax() < 1e-9 * (1.0 + m.amax()));

    let players = players_to_scan(noise);
    let mut per_t0 = Vec::with_capacity(t0s.len());
    for &t0 in t0s {
        if t0 == 0 {
            return Err(Error::Precondition("t0 must be at least 1".into()));
        }
        let mut per_player = Vec::with_capacity(players.len());
        for &i in &players {
            let init = noise.initial_gauge_moments(&alpha, i);
            let mean_dev = noise.mean_of(i) - noise.mean_deep_state(&alpha);
            let var_dev = &init.var_dev + &mean_dev * mean_dev.transpose();
            let h_x = h_matrix(&var_dev, &init.cov_dev_bar, &init.var_bar);
            let w = noise.noise_gauge_moments(0, &alpha, i);
            let h_w = h_matrix(&w.var_dev, &w.cov_dev_bar, &w.var_bar);
            let value = gamma.powi(t0 as i32 - 1)
                * ((1.0 - gamma) * trace_product(&h_x, &m) + gamma * trace_product(&h_w, &m));
            per_player.push(value);
        }
        let gap = per_player.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        per_t0.push(GapAtT0 {
            t0,
            gap,
            per_player,
        });
    }
    Ok(GapReport {
        n,
        strategy,
        per_t0,
        monte_carlo: None,
        rationality: None,
        m11_residual: m.view((0, 0), (d, d)).amax(),
    })
}
