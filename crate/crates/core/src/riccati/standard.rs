//! Plain discrete-time LQR machinery (optionally discounted), used by the
//! decoupled specializations and as an independent construction path in
//! equivalence tests.

use crate::linalg::{condition_number, gated_solve, symmetrize};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Condition-number threshold above which a factor counts as singular.
pub const COND_LIMIT: f64 = 1e12;

/// Backward solution of a standard (possibly time-varying, possibly
/// discounted) Riccati recursion. `stages[0]` corresponds to `t = 1`.
#[derive(Debug, Clone)]
pub struct StandardLqr {
    /// Value matrices `P_t`.
    pub p: Vec<DMatrix<f64>>,
    /// Feedback gains with the sign convention `u = gain · x`.
    pub gain: Vec<DMatrix<f64>>,
}

/// One backward step: given `P_{t+1}`, return `(P_t, gain_t)` for
///
/// ```text
/// P_t = Q + γAᵀPA − γ²AᵀPB (R + γBᵀPB)⁻¹ BᵀPA
/// gain_t = −(R + γBᵀPB)⁻¹ γBᵀPA
/// ```
pub fn step(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p_next: &DMatrix<f64>,
    gamma: f64,
    t: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let h = r + (b.transpose() * p_next * b) * gamma;
    let k = -(b.transpose() * p_next * a) * gamma;
    let gain = gated_solve(&h, &k, "R + γBᵀPB", t, COND_LIMIT)?;
    let closed = a + b * &gain;
    let mut p = q + gain.transpose() * r * &gain + (closed.transpose() * p_next * &closed) * gamma;
    symmetrize(&mut p);
    Ok((p, gain))
}

/// Finite-horizon backward recursion with boundary `P_{T+1} = 0`.
/// `matrices(t)` supplies `(A_t, B_t, Q_t, R_t)` for 0-based `t`.
pub fn backward<F>(horizon: usize, gamma: f64, matrices: F) -> Result<StandardLqr>
where
    F: Fn(usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>),
{
    let (_, b0, q0, _) = matrices(horizon.saturating_sub(1));
    let d_x = q0.nrows();
    let d_u = b0.ncols();
    let mut p_next = DMatrix::zeros(d_x, d_x);
    let mut p_rev = Vec::with_capacity(horizon);
    let mut gain_rev = Vec::with_capacity(horizon);
    for t in (0..horizon).rev() {
        let (a, b, q, r) = matrices(t);
        debug_assert_eq!(b.shape(), (d_x, d_u));
        let (p, gain) = step(&a, &b, &q, &r, &p_next, gamma, t + 1)?;
        p_next = p.clone();
        p_rev.push(p);
        gain_rev.push(gain);
    }
    p_rev.reverse();
    gain_rev.reverse();
    Ok(StandardLqr {
        p: p_rev,
        gain: gain_rev,
    })
}

/// Fixed-point iteration for the discounted algebraic equation. Returns
/// `(P, gain, iterations, residual)`.
pub fn algebraic(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, usize, f64)> {
    let d_x = a.nrows();
    let mut p = DMatrix::zeros(d_x, d_x);
    for it in 1..=max_iter {
        let (p_new, gain) = step(a, b, q, r, &p, gamma, it)?;
        let diff = (&p_new - &p).amax();
        let done = diff < tol * (1.0 + p.amax());
        p = p_new;
        if done {
            // Residual of the closed fixed-point equation.
            let (p_check, _) = step(a, b, q, r, &p, gamma, it)?;
            let residual = (&p_check - &p).amax();
            return Ok((p, gain, it, residual));
        }
    }
    let (p_check, _) = step(a, b, q, r, &p, gamma, max_iter)?;
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: (&p_check - &p).amax(),
    })
}

/// Condition number helper re-exported for diagnostics.
pub fn cond(m: &DMatrix<f64>) -> f64 {
    condition_number(m)
}
