//! The non-standard Riccati recursion and its specializations.
//!
//! For a weight `α` the backward recursion couples a `2d_x`-dimensional
//! value matrix `𝐏^α_t` on the (deviation, mean) channels with gain factors
//! that mix the two channels asymmetrically:
//!
//! ```text
//! F_t(α)  = (1−α)[R + α/(1−α)·Gᵘ + γ BᵀP¹¹B]  + α[R + Sᵘ + γ (B+B̄)ᵀP¹²B]
//! F̄_t(α)  = (1−α)[R + Sᵘ + γ BᵀP²¹(B+B̄)]      + α[R + 2Sᵘ + R̄ + Gᵘ + γ (B+B̄)ᵀP²²(B+B̄)]
//! K_t(α)  = −(1−α) γ BᵀP¹¹A − α γ (B+B̄)ᵀP¹²A
//! K̄_t(α)  = −(1−α) γ BᵀP²¹(A+Ā) − α γ (B+B̄)ᵀP²²(A+Ā)
//! θ_t = F_t⁻¹K_t,  θ̄_t = F̄_t⁻¹K̄_t
//! 𝐏^α_t = 𝐐^α + 𝛉ᵀ𝐑^α𝛉 + γ (𝐀+𝐁𝛉)ᵀ 𝐏^α_{t+1} (𝐀+𝐁𝛉),   𝐏^α_{T+1} = 0
//! ```
//!
//! with `𝛉 = diag(θ, θ̄)`, the blocks `Pⁱʲ` taken from `𝐏^α_{t+1}`, and the
//! lifted blocks `𝐀, 𝐁, 𝐐^α, 𝐑^α` from [`crate::gauge::lift`]. A companion
//! `d_x`-dimensional recursion tracks the per-player deviation value
//! `P^α_t = Gˣ + θᵀGᵘθ + γ (A+Bθ)ᵀ P^α_{t+1} (A+Bθ)`.
//!
//! `γ = 1` gives the undiscounted finite-horizon equations; `γ < 1` is the
//! normalized change-of-variables form whose fixed point is the discounted
//! algebraic equation, so the same step serves both.

pub mod assumptions;
pub mod standard;

pub use assumptions::{
    check_assumptions, AssumptionEntry, AssumptionReport, AssumptionStatus, Evidence, HorizonSpec,
};

use crate::gauge::lift;
use crate::linalg::{block_diag2, condition_number, gated_solve, min_symmetric_eig, symmetrize};
use crate::model::{GameModel, StageMatrices};
use crate::{Error, Result};
use nalgebra::DMatrix;

pub use standard::COND_LIMIT;

/// Default tolerance for the algebraic fixed-point iteration.
pub const ALGEBRAIC_TOL: f64 = 1e-13;
/// Default iteration cap for the algebraic fixed-point iteration.
pub const ALGEBRAIC_MAX_ITER: usize = 1_000_000;

/// Solution data for one time step.
#[derive(Debug, Clone)]
pub struct RiccatiStage {
    /// `𝐏^α_t`, `2d_x × 2d_x`.
    pub p_lift: DMatrix<f64>,
    /// Deviation value `P^α_t`, `d_x × d_x`.
    pub p_dev: DMatrix<f64>,
    /// Deviation-channel gain `θ_t`, `d_u × d_x`.
    pub theta: DMatrix<f64>,
    /// Mean-channel gain `θ̄_t`, `d_u × d_x`.
    pub theta_bar: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub f_bar: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub k_bar: DMatrix<f64>,
    /// Smallest eigenvalue of `(1−α)F_t + αF̄_t`.
    pub min_eig_combo: f64,
    pub cond_f: f64,
    pub cond_f_bar: f64,
}

/// How a [`RiccatiSolution`] was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionKind {
    Finite { horizon: usize },
    Algebraic { iterations: usize, residual: f64 },
}

/// Backward solution of the non-standard recursion. `stages[0]`
/// corresponds to `t = 1`; an algebraic solution stores a single stage.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub alpha: f64,
    /// Discount used by the recursion (1 for undiscounted).
    pub discount: f64,
    pub stages: Vec<RiccatiStage>,
    pub kind: SolutionKind,
}

impl RiccatiSolution {
    /// Stage at 0-based `t`; algebraic solutions are stationary.
    pub fn stage(&self, t: usize) -> &RiccatiStage {
        match self.kind {
            SolutionKind::Finite { .. } => &self.stages[t],
            SolutionKind::Algebraic { .. } => &self.stages[0],
        }
    }

    pub fn horizon(&self) -> usize {
        match self.kind {
            SolutionKind::Finite { horizon } => horizon,
            SolutionKind::Algebraic { .. } => 1,
        }
    }

    /// Gain trajectories `(θ_{1:T}, θ̄_{1:T})` over `horizon` steps.
    pub fn gain_trajectories(&self, horizon: usize) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let theta = (0..horizon).map(|t| self.stage(t).theta.clone()).collect();
        let theta_bar = (0..horizon)
            .map(|t| self.stage(t).theta_bar.clone())
            .collect();
        (theta, theta_bar)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(-1.0..1.0).contains(&alpha) {
        return Err(Error::Precondition(format!(
            "weight alpha must lie in (-1, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// One backward step of the non-standard recursion, producing the stage
/// data at `t` from `(𝐏^α_{t+1}, P^α_{t+1})`.
fn backward_step(
    stage: &StageMatrices,
    alpha: f64,
    gamma: f64,
    p_next: &DMatrix<f64>,
    p_dev_next: &DMatrix<f64>,
    t_label: usize,
) -> Result<RiccatiStage> {
    let d_x = stage.a.nrows();
    let blocks = lift(stage, alpha)?;
    let p11 = p_next.view((0, 0), (d_x, d_x));
    let p12 = p_next.view((0, d_x), (d_x, d_x));
    let p21 = p_next.view((d_x, 0), (d_x, d_x));
    let p22 = p_next.view((d_x, d_x), (d_x, d_x));

    let b_tot = &stage.b + &stage.b_bar;
    let a_tot = &stage.a + &stage.a_bar;
    let one_m = 1.0 - alpha;
    let ratio = alpha / one_m;

    let f = (&stage.r + &stage.g_u * ratio + (stage.b.transpose() * p11 * &stage.b) * gamma)
        * one_m
        + (&stage.r + &stage.s_u + (b_tot.transpose() * p12 * &stage.b) * gamma) * alpha;
    let f_bar = (&stage.r + &stage.s_u + (stage.b.transpose() * p21 * &b_tot) * gamma) * one_m
        + (&stage.r
            + &stage.s_u * 2.0
            + &stage.r_bar
            + &stage.g_u
            + (b_tot.transpose() * p22 * &b_tot) * gamma)
            * alpha;
    let k = (stage.b.transpose() * p11 * &stage.a) * (-one_m * gamma)
        + (b_tot.transpose() * p12 * &stage.a) * (-alpha * gamma);
    let k_bar = (stage.b.transpose() * p21 * &a_tot) * (-one_m * gamma)
        + (b_tot.transpose() * p22 * &a_tot) * (-alpha * gamma);

    let theta = gated_solve(&f, &k, "F", t_label, COND_LIMIT)?;
    let theta_bar = gated_solve(&f_bar, &k_bar, "F_bar", t_label, COND_LIMIT)?;

    let theta_diag = block_diag2(&theta, &theta_bar);
    let closed = &blocks.a + &blocks.b * &theta_diag;
    let mut p_lift =
        &blocks.q + theta_diag.transpose() * &blocks.r * &theta_diag
            + (closed.transpose() * p_next * &closed) * gamma;
    symmetrize(&mut p_lift);

    let closed_dev = &stage.a + &stage.b * &theta;
    let mut p_dev = &stage.g_x
        + theta.transpose() * &stage.g_u * &theta
        + (closed_dev.transpose() * p_dev_next * &closed_dev) * gamma;
    symmetrize(&mut p_dev);

    let combo = &f * one_m + &f_bar * alpha;
    Ok(RiccatiStage {
        p_lift,
        p_dev,
        min_eig_combo: min_symmetric_eig(&crate::linalg::symmetrized(&combo)),
        cond_f: condition_number(&f),
        cond_f_bar: condition_number(&f_bar),
        theta,
        theta_bar,
        f,
        f_bar,
        k,
        k_bar,
    })
}

/// Solve the finite-horizon recursion at weight `alpha` over `horizon`
/// steps, undiscounted.
pub fn solve_finite(model: &GameModel, alpha: f64, horizon: usize) -> Result<RiccatiSolution> {
    solve_finite_discounted(model, alpha, horizon, 1.0)
}

/// Finite-horizon recursion in the discount-normalized form: with
/// `gamma < 1` the stage values are the rescaled ones whose `t = 1` entry
/// converges to the algebraic solution as the horizon grows.
pub fn solve_finite_discounted(
    model: &GameModel,
    alpha: f64,
    horizon: usize,
    gamma: f64,
) -> Result<RiccatiSolution> {
    check_alpha(alpha)?;
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be positive".into()));
    }
    if !(0.0 < gamma && gamma <= 1.0) {
        return Err(Error::Precondition(format!(
            "discount must lie in (0, 1], got {gamma}"
        )));
    }
    let d_x = model.d_x();
    let mut p_next = DMatrix::zeros(2 * d_x, 2 * d_x);
    let mut p_dev_next = DMatrix::zeros(d_x, d_x);
    let mut stages_rev = Vec::with_capacity(horizon);
    for t in (0..horizon).rev() {
        let stage = backward_step(model.stage(t), alpha, gamma, &p_next, &p_dev_next, t + 1)?;
        p_next = stage.p_lift.clone();
        p_dev_next = stage.p_dev.clone();
        stages_rev.push(stage);
    }
    stages_rev.reverse();
    Ok(RiccatiSolution {
        alpha,
        discount: gamma,
        stages: stages_rev,
        kind: SolutionKind::Finite { horizon },
    })
}

/// Solve the discounted algebraic equations by fixed-point iteration from
/// zero. Convergence requires the iteration map to contract; failure is
/// reported with the last residual.
pub fn solve_algebraic(
    model: &GameModel,
    alpha: f64,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    check_alpha(alpha)?;
    model.require_stationary()?;
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(Error::Precondition(format!(
            "discount must lie in (0, 1), got {gamma}"
        )));
    }
    let d_x = model.d_x();
    let stage_matrices = model.stage(0);
    let mut p = DMatrix::zeros(2 * d_x, 2 * d_x);
    let mut p_dev = DMatrix::zeros(d_x, d_x);
    for it in 1..=max_iter {
        let stage = backward_step(stage_matrices, alpha, gamma, &p, &p_dev, it)?;
        if !stage.p_lift.iter().all(|v| v.is_finite()) {
            return Err(Error::NotConverged {
                iterations: it,
                residual: f64::INFINITY,
            });
        }
        let diff = (&stage.p_lift - &p).amax().max((&stage.p_dev - &p_dev).amax());
        let scale = 1.0 + p.amax().max(p_dev.amax());
        p = stage.p_lift.clone();
        p_dev = stage.p_dev.clone();
        if diff < tol * scale {
            // Verify the residual of the algebraic equations at the fixed
            // point (one more application of the map).
            let check = backward_step(stage_matrices, alpha, gamma, &p, &p_dev, it)?;
            let residual = (&check.p_lift - &p).amax().max((&check.p_dev - &p_dev).amax());
            if residual >= 10.0 * tol * scale {
                return Err(Error::NotConverged {
                    iterations: it,
                    residual,
                });
            }
            return Ok(RiccatiSolution {
                alpha,
                discount: gamma,
                stages: vec![check],
                kind: SolutionKind::Algebraic {
                    iterations: it,
                    residual,
                },
            });
        }
    }
    let check = backward_step(stage_matrices, alpha, gamma, &p, &p_dev, max_iter)?;
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: (&check.p_lift - &p).amax(),
    })
}

/// Two decoupled standard Riccati solutions plus the gain pair they induce.
#[derive(Debug, Clone)]
pub struct DecoupledSolution {
    /// First-block values (deviation channel).
    pub p1: Vec<DMatrix<f64>>,
    /// Second-block values (mean channel).
    pub p2: Vec<DMatrix<f64>>,
    pub theta: Vec<DMatrix<f64>>,
    pub theta_bar: Vec<DMatrix<f64>>,
}

impl DecoupledSolution {
    pub fn stage_gains(&self, t: usize) -> (&DMatrix<f64>, &DMatrix<f64>) {
        let idx = t.min(self.theta.len() - 1);
        (&self.theta[idx], &self.theta_bar[idx])
    }
}

fn pd_tolerance(m: &DMatrix<f64>) -> f64 {
    1e-10 * (m.trace().abs() / m.nrows().max(1) as f64).max(1.0)
}

fn require_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let min_eig = min_symmetric_eig(m);
    if min_eig < -pd_tolerance(m) {
        return Err(Error::Precondition(format!(
            "{what} must be positive semidefinite (min eig {min_eig:.3e})"
        )));
    }
    Ok(())
}

fn require_pd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let min_eig = min_symmetric_eig(m);
    if min_eig <= pd_tolerance(m) {
        return Err(Error::Precondition(format!(
            "{what} must be positive definite (min eig {min_eig:.3e})"
        )));
    }
    Ok(())
}

fn require_zero(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.amax() > 1e-12 {
        return Err(Error::Precondition(format!(
            "{what} must be zero for the social-cost specialization"
        )));
    }
    Ok(())
}

/// Infinite-population (α → 0) specialization for decoupled dynamics:
/// two independent standard Riccati recursions with weights
/// `(Q, R)` and `(Q+Sˣ, R+Sᵘ)`.
pub fn solve_decoupled_infinite(
    model: &GameModel,
    spec: HorizonSpec,
) -> Result<DecoupledSolution> {
    for (t, stage) in model.stages().iter().enumerate() {
        if stage.a_bar.amax() > 1e-12 || stage.b_bar.amax() > 1e-12 {
            return Err(Error::Precondition(format!(
                "decoupled specialization requires Ā = B̄ = 0 (violated at t={})",
                t + 1
            )));
        }
        require_psd(&stage.q, &format!("Q at t={}", t + 1))?;
        require_psd(&(&stage.q + &stage.s_x), &format!("Q+S_x at t={}", t + 1))?;
        require_pd(&stage.r, &format!("R at t={}", t + 1))?;
        require_pd(&(&stage.r + &stage.s_u), &format!("R+S_u at t={}", t + 1))?;
    }
    solve_two_blocks(
        model,
        spec,
        |s| (s.a.clone(), s.b.clone(), s.q.clone(), s.r.clone()),
        |s| {
            (
                s.a.clone(),
                s.b.clone(),
                &s.q + &s.s_x,
                &s.r + &s.s_u,
            )
        },
    )
}

/// Social-cost specialization: weight-independent gains from two standard
/// Riccati recursions with weights `(Gˣ, Gᵘ)` on `(A, B)` and
/// `(Q̄+Gˣ, R̄+Gᵘ)` on `(A+Ā, B+B̄)`.
pub fn solve_social(model: &GameModel, spec: HorizonSpec) -> Result<DecoupledSolution> {
    for (t, stage) in model.stages().iter().enumerate() {
        require_zero(&stage.q, &format!("Q at t={}", t + 1))?;
        require_zero(&stage.s_x, &format!("S_x at t={}", t + 1))?;
        require_zero(&stage.r, &format!("R at t={}", t + 1))?;
        require_zero(&stage.s_u, &format!("S_u at t={}", t + 1))?;
        require_psd(&stage.g_x, &format!("G_x at t={}", t + 1))?;
        require_psd(&(&stage.q_bar + &stage.g_x), &format!("Q_bar+G_x at t={}", t + 1))?;
        require_pd(&stage.g_u, &format!("G_u at t={}", t + 1))?;
        require_pd(&(&stage.r_bar + &stage.g_u), &format!("R_bar+G_u at t={}", t + 1))?;
    }
    solve_two_blocks(
        model,
        spec,
        |s| (s.a.clone(), s.b.clone(), s.g_x.clone(), s.g_u.clone()),
        |s| {
            (
                &s.a + &s.a_bar,
                &s.b + &s.b_bar,
                &s.q_bar + &s.g_x,
                &s.r_bar + &s.g_u,
            )
        },
    )
}

type BlockFn = fn(&StageMatrices) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>);

fn solve_two_blocks(
    model: &GameModel,
    spec: HorizonSpec,
    block1: BlockFn,
    block2: BlockFn,
) -> Result<DecoupledSolution> {
    match spec {
        HorizonSpec::Finite(horizon) => {
            let sol1 = standard::backward(horizon, 1.0, |t| block1(model.stage(t)))?;
            let sol2 = standard::backward(horizon, 1.0, |t| block2(model.stage(t)))?;
            Ok(DecoupledSolution {
                p1: sol1.p,
                p2: sol2.p,
                theta: sol1.gain,
                theta_bar: sol2.gain,
            })
        }
        HorizonSpec::Discounted { gamma } => {
            model.require_stationary()?;
            let (a1, b1, q1, r1) = block1(model.stage(0));
            let (a2, b2, q2, r2) = block2(model.stage(0));
            let (p1, g1, _, _) =
                standard::algebraic(&a1, &b1, &q1, &r1, gamma, ALGEBRAIC_TOL, ALGEBRAIC_MAX_ITER)?;
            let (p2, g2, _, _) =
                standard::algebraic(&a2, &b2, &q2, &r2, gamma, ALGEBRAIC_TOL, ALGEBRAIC_MAX_ITER)?;
            Ok(DecoupledSolution {
                p1: vec![p1],
                p2: vec![p2],
                theta: vec![g1],
                theta_bar: vec![g2],
            })
        }
    }
}
