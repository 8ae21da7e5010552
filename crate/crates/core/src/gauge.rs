//! Gauge transformation: deviations from the weighted mean plus the mean
//! itself, the lifted block dynamics, and the α-indexed cost blocks.
//!
//! For weights `α` the transformation maps per-player vectors `v^1..v^n` to
//! `(Δv^1..Δv^n, v̄)` with `Δv^i = v^i − v̄`, `v̄ = Σ_j α^j v^j`. It is
//! invertible (`v^i = Δv^i + v̄`) and introduces the linear dependence
//! `Σ_i α^i Δv^i = 0` together with orthogonality between the deviation and
//! mean channels in the cost.

use crate::linalg::{block2x2, block_diag2};
use crate::model::StageMatrices;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Gauge coordinates of one stacked vector.
#[derive(Debug, Clone)]
pub struct GaugeState {
    pub deltas: Vec<DVector<f64>>,
    pub bar: DVector<f64>,
    pub weights: Vec<f64>,
}

/// Transform per-player vectors into gauge coordinates.
pub fn to_gauge(states: &[DVector<f64>], weights: &[f64]) -> Result<GaugeState> {
    if states.len() != weights.len() {
        return Err(Error::Dimension {
            context: "to_gauge".into(),
            expected: format!("{} states", weights.len()),
            actual: format!("{}", states.len()),
        });
    }
    if states.len() < 2 {
        return Err(Error::Precondition("gauge needs at least 2 players".into()));
    }
    let d = states[0].len();
    if let Some(bad) = states.iter().find(|s| s.len() != d) {
        return Err(Error::Dimension {
            context: "to_gauge".into(),
            expected: format!("vectors of length {d}"),
            actual: format!("{}", bad.len()),
        });
    }
    let mut bar = DVector::zeros(d);
    for (a, s) in weights.iter().zip(states) {
        bar.axpy(*a, s, 1.0);
    }
    let deltas = states.iter().map(|s| s - &bar).collect();
    Ok(GaugeState {
        deltas,
        bar,
        weights: weights.to_vec(),
    })
}

/// Recover player `i`'s vector: `Δv^i + v̄`.
pub fn from_gauge(g: &GaugeState, i: usize) -> DVector<f64> {
    &g.deltas[i] + &g.bar
}

impl GaugeState {
    /// `‖Σ_i α^i Δv^i‖∞`, zero up to roundoff by construction.
    pub fn dependence_residual(&self) -> f64 {
        let mut acc = DVector::zeros(self.bar.len());
        for (a, d) in self.weights.iter().zip(&self.deltas) {
            acc.axpy(*a, d, 1.0);
        }
        acc.amax()
    }
}

/// Lifted deviation/mean block matrices for one stage and one weight.
#[derive(Debug, Clone)]
pub struct LiftedBlocks {
    /// `diag(A, A+Ā)`, `2d_x × 2d_x`.
    pub a: DMatrix<f64>,
    /// `diag(B, B+B̄)`, `2d_x × 2d_u`.
    pub b: DMatrix<f64>,
    /// State cost block `𝐐^α`.
    pub q: DMatrix<f64>,
    /// Action cost block `𝐑^α`.
    pub r: DMatrix<f64>,
}

/// Assemble the lifted blocks at weight `alpha`.
///
/// ```text
/// 𝐐^α = [ Q + α/(1−α)·Gˣ   Q + Sˣ                    ]
///       [ Q + Sˣ            Q + 2Sˣ + Q̄ + Gˣ         ]
/// ```
///
/// and the analogous `𝐑^α`. Requires `alpha != 1`.
pub fn lift(stage: &StageMatrices, alpha: f64) -> Result<LiftedBlocks> {
    if alpha == 1.0 {
        return Err(Error::Precondition(
            "alpha = 1 makes the deviation weight α/(1−α) singular".into(),
        ));
    }
    let ratio = alpha / (1.0 - alpha);
    let q11 = &stage.q + &stage.g_x * ratio;
    let q12 = &stage.q + &stage.s_x;
    let q22 = &stage.q + &stage.s_x * 2.0 + &stage.q_bar + &stage.g_x;
    let r11 = &stage.r + &stage.g_u * ratio;
    let r12 = &stage.r + &stage.s_u;
    let r22 = &stage.r + &stage.s_u * 2.0 + &stage.r_bar + &stage.g_u;
    Ok(LiftedBlocks {
        a: block_diag2(&stage.a, &(&stage.a + &stage.a_bar)),
        b: block_diag2(&stage.b, &(&stage.b + &stage.b_bar)),
        q: block2x2(&q11, &q12, &q12.transpose(), &q22),
        r: block2x2(&r11, &r12, &r12.transpose(), &r22),
    })
}

/// Per-step cost of player `i` in gauge coordinates (the transformed form
/// whose lifted blocks are [`lift`]):
///
/// ```text
/// c^i = [Δx;x̄]ᵀ𝐐^α[Δx;x̄] + [Δu;ū]ᵀ𝐑^α[Δu;ū]
///     + Σ_j α^j (Δx^jᵀGˣΔx^j + Δu^jᵀGᵘΔu^j)
///     − α^i/(1−α^i)·(Δx^iᵀGˣΔx^i + Δu^iᵀGᵘΔu^i)
/// ```
pub fn transformed_cost(
    stage: &StageMatrices,
    states: &GaugeState,
    actions: &GaugeState,
    i: usize,
) -> Result<f64> {
    let alpha = states.weights[i];
    let blocks = lift(stage, alpha)?;
    let xv = nalgebra::DVector::from_iterator(
        states.deltas[i].len() + states.bar.len(),
        states.deltas[i].iter().chain(states.bar.iter()).copied(),
    );
    let uv = nalgebra::DVector::from_iterator(
        actions.deltas[i].len() + actions.bar.len(),
        actions.deltas[i].iter().chain(actions.bar.iter()).copied(),
    );
    let mut cost = (xv.transpose() * &blocks.q * &xv)[(0, 0)]
        + (uv.transpose() * &blocks.r * &uv)[(0, 0)];
    for j in 0..states.weights.len() {
        let dxj = &states.deltas[j];
        let duj = &actions.deltas[j];
        cost += states.weights[j]
            * ((dxj.transpose() * &stage.g_x * dxj)[(0, 0)]
                + (duj.transpose() * &stage.g_u * duj)[(0, 0)]);
    }
    let ratio = alpha / (1.0 - alpha);
    let dxi = &states.deltas[i];
    let dui = &actions.deltas[i];
    cost -= ratio
        * ((dxi.transpose() * &stage.g_x * dxi)[(0, 0)]
            + (dui.transpose() * &stage.g_u * dui)[(0, 0)]);
    Ok(cost)
}
