//! Reduction of general exchangeable LQ games to deep structured form, and
//! the reverse stacking used for round-trip checks and best-response oracles.

use super::{GameModel, Horizon, StageMatrices};
use crate::linalg::symmetrized;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// A general LQ game in stacked (augmented) form:
/// `𝐱_{t+1} = 𝐀_t 𝐱_t + 𝐁_t 𝐮_t + 𝐰_t`, per-player cost
/// `c^i_t = 𝐱ᵀ Q^i_t 𝐱 + 𝐮ᵀ R^i_t 𝐮`.
#[derive(Debug, Clone)]
pub struct StackedExchangeableGame {
    pub n: usize,
    pub d_x: usize,
    pub d_u: usize,
    /// Per-t stacked dynamics, `n·d_x × n·d_x`.
    pub a: Vec<DMatrix<f64>>,
    /// Per-t stacked input maps, `n·d_x × n·d_u`.
    pub b: Vec<DMatrix<f64>>,
    /// Per-t, per-player state cost blocks, `n·d_x × n·d_x`.
    pub q: Vec<Vec<DMatrix<f64>>>,
    /// Per-t, per-player action cost blocks, `n·d_u × n·d_u`.
    pub r: Vec<Vec<DMatrix<f64>>>,
}

impl StackedExchangeableGame {
    pub fn horizon(&self) -> usize {
        self.a.len()
    }

    /// Verify the index-invariance of Definition-style exchangeability:
    /// swapping any two players leaves the dynamics unchanged and permutes
    /// the per-player costs. Returns the offending location on failure.
    pub fn check_exchangeable(&self, tol: f64) -> Result<()> {
        for t in 0..self.horizon() {
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    let a_sw = permute_blocks(&self.a[t], self.d_x, self.d_x, i, j);
                    let diff = (&a_sw - &self.a[t]).amax();
                    if diff > tol {
                        return Err(Error::NotExchangeable(format!(
                            "dynamics block A at t={}, swap ({},{}) changes entries by {diff:.3e}",
                            t + 1,
                            i + 1,
                            j + 1
                        )));
                    }
                    let b_sw = permute_blocks(&self.b[t], self.d_x, self.d_u, i, j);
                    let diff = (&b_sw - &self.b[t]).amax();
                    if diff > tol {
                        return Err(Error::NotExchangeable(format!(
                            "dynamics block B at t={}, swap ({},{}) changes entries by {diff:.3e}",
                            t + 1,
                            i + 1,
                            j + 1
                        )));
                    }
                    for k in 0..self.n {
                        // Swapping i and j permutes costs: c^k ∘ σ = c^{σ(k)}.
                        let target = if k == i {
                            j
                        } else if k == j {
                            i
                        } else {
                            k
                        };
                        let q_sw = permute_blocks(&self.q[t][k], self.d_x, self.d_x, i, j);
                        let diff = (symmetrized(&q_sw) - symmetrized(&self.q[t][target])).amax();
                        if diff > tol {
                            return Err(Error::NotExchangeable(format!(
                                "cost block Q^{} at t={}, swap ({},{}) differs from Q^{} by {diff:.3e}",
                                k + 1,
                                t + 1,
                                i + 1,
                                j + 1,
                                target + 1
                            )));
                        }
                        let r_sw = permute_blocks(&self.r[t][k], self.d_u, self.d_u, i, j);
                        let diff = (symmetrized(&r_sw) - symmetrized(&self.r[t][target])).amax();
                        if diff > tol {
                            return Err(Error::NotExchangeable(format!(
                                "cost block R^{} at t={}, swap ({},{}) differs from R^{} by {diff:.3e}",
                                k + 1,
                                t + 1,
                                i + 1,
                                j + 1,
                                target + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Per-player cost `𝐱ᵀQ^i𝐱 + 𝐮ᵀR^i𝐮` at stage `t`.
    pub fn cost(&self, t: usize, i: usize, x: &DMatrix<f64>, u: &DMatrix<f64>) -> f64 {
        let xs = stack_columns(x);
        let us = stack_columns(u);
        (xs.transpose() * &self.q[t][i] * &xs)[(0, 0)]
            + (us.transpose() * &self.r[t][i] * &us)[(0, 0)]
    }
}

/// Convert an exchangeable stacked game into deep structured form with
/// homogeneous weights `1/n`.
///
/// Block classes are read off player 1's matrices; the exchangeability check
/// runs first (tolerance `tol`, default [`super::EXCHANGEABILITY_TOL`]).
pub fn from_exchangeable(g: &StackedExchangeableGame, tol: Option<f64>) -> Result<GameModel> {
    let tol = tol.unwrap_or(super::EXCHANGEABILITY_TOL);
    if g.n < 2 {
        return Err(Error::InvalidModel("need at least 2 players".into()));
    }
    g.check_exchangeable(tol)?;
    let n = g.n;
    let nf = n as f64;
    let (dx, du) = (g.d_x, g.d_u);

    let mut stages = Vec::with_capacity(g.horizon());
    for t in 0..g.horizon() {
        let block =
            |m: &DMatrix<f64>, bi: usize, bj: usize, r: usize, c: usize| -> DMatrix<f64> {
                m.view((bi * r, bj * c), (r, c)).into_owned()
            };
        // Dynamics classes: diagonal ã, off-diagonal d̃ (state), b̃/ẽ (input).
        let a_tilde = block(&g.a[t], 0, 0, dx, dx);
        let d_tilde = block(&g.a[t], 0, 1, dx, dx);
        let b_tilde = block(&g.b[t], 0, 0, dx, du);
        let e_tilde = block(&g.b[t], 0, 1, dx, du);

        // Cost classes from player 1's (symmetrized) matrices: own block,
        // own-other interaction s̃, other diagonal q̃, other-other cross ŝ.
        let (q1, r1) = (symmetrized(&g.q[t][0]), symmetrized(&g.r[t][0]));
        let q_self = block(&q1, 0, 0, dx, dx);
        let s_tilde = block(&q1, 0, 1, dx, dx) + block(&q1, 1, 0, dx, dx).transpose();
        let q_tilde = block(&q1, 1, 1, dx, dx);
        let s_hat = if n >= 3 {
            symmetrized(&block(&q1, 1, 2, dx, dx))
        } else {
            // With two players there is no other-other pair; the class is
            // empty and any value yields the same quadratic form. Use zero.
            DMatrix::zeros(dx, dx)
        };
        let ru_self = block(&r1, 0, 0, du, du);
        let su_tilde = block(&r1, 0, 1, du, du) + block(&r1, 1, 0, du, du).transpose();
        let ru_tilde = block(&r1, 1, 1, du, du);
        let su_hat = if n >= 3 {
            symmetrized(&block(&r1, 1, 2, du, du))
        } else {
            DMatrix::zeros(du, du)
        };

        // A symmetric per-player cost matrix still allows an asymmetric
        // own–other class; such games have no representation with a
        // symmetric cross weight, so they are rejected explicitly.
        for (name, m) in [("state", &s_tilde), ("action", &su_tilde)] {
            if crate::linalg::asymmetry(m) > tol.max(1e-10) {
                return Err(Error::NotExchangeable(format!(
                    "own-other {name} interaction class at t={} is asymmetric; \
                     the cost cannot be expressed with symmetric cross weights",
                    t + 1
                )));
            }
        }

        stages.push(StageMatrices {
            a: &a_tilde - &d_tilde,
            a_bar: &d_tilde * nf,
            b: &b_tilde - &e_tilde,
            b_bar: &e_tilde * nf,
            q: &q_self - &s_tilde - &q_tilde + &s_hat * 2.0,
            s_x: (&s_tilde - &s_hat * 2.0) * (nf / 2.0),
            q_bar: &s_hat * (nf * nf),
            g_x: (&q_tilde - &s_hat) * nf,
            r: &ru_self - &su_tilde - &ru_tilde + &su_hat * 2.0,
            s_u: (&su_tilde - &su_hat * 2.0) * (nf / 2.0),
            r_bar: &su_hat * (nf * nf),
            g_u: (&ru_tilde - &su_hat) * nf,
        });
    }
    GameModel::new(dx, du, Horizon::Finite(g.horizon()), None, stages)
}

/// Stack a deep structured model back into augmented form for `n` players
/// with homogeneous weights (the reconstruction direction of the reduction).
pub fn stack_homogeneous(model: &GameModel, n: usize, horizon: usize) -> StackedExchangeableGame {
    let (dx, du) = (model.d_x(), model.d_u());
    let mut a = Vec::with_capacity(horizon);
    let mut b = Vec::with_capacity(horizon);
    let mut q = Vec::with_capacity(horizon);
    let mut r = Vec::with_capacity(horizon);
    let nf = n as f64;
    for t in 0..horizon {
        let stage = model.stage(t);
        a.push(stack_dynamics(&stage.a, &stage.a_bar, n));
        b.push(stack_dynamics(&stage.b, &stage.b_bar, n));
        let mut qt = Vec::with_capacity(n);
        let mut rt = Vec::with_capacity(n);
        for i in 0..n {
            qt.push(stack_cost(&stage.q, &stage.s_x, &stage.q_bar, &stage.g_x, n, i, dx, nf));
            rt.push(stack_cost(&stage.r, &stage.s_u, &stage.r_bar, &stage.g_u, n, i, du, nf));
        }
        q.push(qt);
        r.push(rt);
    }
    StackedExchangeableGame {
        n,
        d_x: dx,
        d_u: du,
        a,
        b,
        q,
        r,
    }
}

/// `I_n ⊗ M + (1/n) 𝟏_{n×n} ⊗ M̄`.
fn stack_dynamics(m: &DMatrix<f64>, m_bar: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let mut out = DMatrix::zeros(n * rows, n * cols);
    let coupled = m_bar / n as f64;
    for bi in 0..n {
        for bj in 0..n {
            let mut view = out.view_mut((bi * rows, bj * cols), (rows, cols));
            view.copy_from(&coupled);
            if bi == bj {
                view += m;
            }
        }
    }
    out
}

/// Player `i`'s stacked cost matrix for weights `1/n`:
/// own block `W + (2/n)S + Q̄/n² + G/n`, own–other `(1/n)S + Q̄/n²`,
/// other diagonal `Q̄/n² + G/n`, other–other `Q̄/n²`.
#[allow(clippy::too_many_arguments)]
fn stack_cost(
    w: &DMatrix<f64>,
    s: &DMatrix<f64>,
    w_bar: &DMatrix<f64>,
    g: &DMatrix<f64>,
    n: usize,
    i: usize,
    d: usize,
    nf: f64,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n * d, n * d);
    let bar_term = w_bar / (nf * nf);
    let g_term = g / nf;
    let s_term = s / nf;
    for bi in 0..n {
        for bj in 0..n {
            let mut view = out.view_mut((bi * d, bj * d), (d, d));
            view.copy_from(&bar_term);
            if bi == bj {
                view += &g_term;
                if bi == i {
                    view += w;
                }
            }
            // 2 x^iᵀ S x̄ splits symmetrically across row i and column i.
            if bi == i {
                view += &s_term;
            }
            if bj == i {
                view += &s_term.transpose();
            }
        }
    }
    out
}

fn permute_blocks(m: &DMatrix<f64>, dr: usize, dc: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut out = m.clone();
    let nr = m.nrows() / dr;
    // Swap block rows i and j, then block columns.
    for bj in 0..(m.ncols() / dc) {
        for r in 0..dr {
            for c in 0..dc {
                out[(i * dr + r, bj * dc + c)] = m[(j * dr + r, bj * dc + c)];
                out[(j * dr + r, bj * dc + c)] = m[(i * dr + r, bj * dc + c)];
            }
        }
    }
    let tmp = out.clone();
    for bi in 0..nr {
        for r in 0..dr {
            for c in 0..dc {
                out[(bi * dr + r, i * dc + c)] = tmp[(bi * dr + r, j * dc + c)];
                out[(bi * dr + r, j * dc + c)] = tmp[(bi * dr + r, i * dc + c)];
            }
        }
    }
    out
}

fn stack_columns(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{per_step_cost, WeightProfile};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn scalar_stacked(n: usize, a_diag: f64, a_off: f64, b_diag: f64, b_off: f64) -> StackedExchangeableGame {
        let mut a = DMatrix::from_element(n, n, a_off);
        let mut b = DMatrix::from_element(n, n, b_off);
        for k in 0..n {
            a[(k, k)] = a_diag;
            b[(k, k)] = b_diag;
        }
        let q: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
        StackedExchangeableGame {
            n,
            d_x: 1,
            d_u: 1,
            a: vec![a],
            b: vec![b],
            q: vec![q.clone()],
            r: vec![q],
        }
    }

    #[test]
    fn scalar_dynamics_extraction() {
        let g = scalar_stacked(2, 2.0, 0.5, 1.0, 0.0);
        let model = from_exchangeable(&g, None).unwrap();
        let st = model.stage(0);
        assert_abs_diff_eq!(st.a[(0, 0)], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(st.a_bar[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(st.b[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(st.b_bar[(0, 0)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn decoupled_game_has_no_coupling_terms() {
        let n = 3;
        let mut g = scalar_stacked(n, 1.2, 0.0, 0.7, 0.0);
        // Purely diagonal own-cost blocks.
        for i in 0..n {
            let mut q = DMatrix::zeros(n, n);
            q[(i, i)] = 2.0;
            g.q[0][i] = q;
            let mut r = DMatrix::zeros(n, n);
            r[(i, i)] = 3.0;
            g.r[0][i] = r;
        }
        let model = from_exchangeable(&g, None).unwrap();
        let st = model.stage(0);
        assert_abs_diff_eq!(st.a[(0, 0)], 1.2, epsilon = 1e-14);
        assert_eq!(st.a_bar[(0, 0)], 0.0);
        assert_eq!(st.b_bar[(0, 0)], 0.0);
        assert_eq!(st.s_x[(0, 0)], 0.0);
        assert_eq!(st.q_bar[(0, 0)], 0.0);
        assert_abs_diff_eq!(st.q[(0, 0)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(st.r[(0, 0)], 3.0, epsilon = 1e-14);
    }

    fn mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Player `i`'s cost matrix from the four block classes.
    fn class_blocks_to_cost(
        n: usize,
        d: usize,
        i: usize,
        q_self: &DMatrix<f64>,
        s_io: &DMatrix<f64>,
        q_oo: &DMatrix<f64>,
        s_hat: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n * d, n * d);
        for bi in 0..n {
            for bj in 0..n {
                let mut v = m.view_mut((bi * d, bj * d), (d, d));
                if bi == i && bj == i {
                    v.copy_from(q_self);
                } else if bi == i {
                    v.copy_from(s_io);
                } else if bj == i {
                    v.copy_from(&s_io.transpose());
                } else if bi == bj {
                    v.copy_from(q_oo);
                } else {
                    v.copy_from(s_hat);
                }
            }
        }
        m
    }

    fn sym(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        symmetrized(&mat(rng, d, d))
    }

    /// Build a random exchangeable instance from its block classes.
    pub(crate) fn random_exchangeable(
        rng: &mut ChaCha8Rng,
        n: usize,
        d_x: usize,
        d_u: usize,
        horizon: usize,
    ) -> StackedExchangeableGame {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut q = Vec::new();
        let mut r = Vec::new();
        for _ in 0..horizon {
            let (at, dt) = (mat(rng, d_x, d_x), mat(rng, d_x, d_x));
            let (bt, et) = (mat(rng, d_x, d_u), mat(rng, d_x, d_u));
            a.push(stack_dynamics(&(&at - &dt), &(&dt * n as f64), n));
            b.push(stack_dynamics(&(&bt - &et), &(&et * n as f64), n));

            // Cost classes for player 1, then permute for the others. The
            // own-other class must be symmetric to be representable in
            // deep structured form.
            let (q_self, s_io, q_oo, s_hat) = (
                sym(rng, d_x),
                sym(rng, d_x),
                sym(rng, d_x),
                sym(rng, d_x),
            );
            q.push(
                (0..n)
                    .map(|i| class_blocks_to_cost(n, d_x, i, &q_self, &s_io, &q_oo, &s_hat))
                    .collect::<Vec<_>>(),
            );
            let (r_self, su_io, r_oo, su_hat) = (
                sym(rng, d_u),
                sym(rng, d_u),
                sym(rng, d_u),
                sym(rng, d_u),
            );
            r.push(
                (0..n)
                    .map(|i| class_blocks_to_cost(n, d_u, i, &r_self, &su_io, &r_oo, &su_hat))
                    .collect::<Vec<_>>(),
            );
        }
        StackedExchangeableGame {
            n,
            d_x,
            d_u,
            a,
            b,
            q,
            r,
        }
    }

    #[test]
    fn random_exchangeable_roundtrip_cost_and_dynamics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let g = random_exchangeable(&mut rng, n, 2, 1, 2);
        g.check_exchangeable(1e-12).unwrap();
        let model = from_exchangeable(&g, None).unwrap();
        let alpha = WeightProfile::Homogeneous { n }.realize().unwrap();

        for t in 0..g.horizon() {
            for _ in 0..20 {
                let x = DMatrix::from_fn(2, n, |_, _| rng.random_range(-2.0..2.0));
                let u = DMatrix::from_fn(1, n, |_, _| rng.random_range(-2.0..2.0));
                // Cost equivalence for every player.
                for i in 0..n {
                    let stacked = g.cost(t, i, &x, &u);
                    let deep = per_step_cost(model.stage(t), &alpha, &x, &u, i);
                    assert_abs_diff_eq!(stacked, deep, epsilon = 1e-10);
                }
                // Dynamics equivalence: stacked propagation vs per-player form.
                let xs = stack_columns(&x);
                let us = stack_columns(&u);
                let next = &g.a[t] * &xs + &g.b[t] * &us;
                let st = model.stage(t);
                let x_bar = super::super::weighted_mean(&x, &alpha);
                let u_bar = super::super::weighted_mean(&u, &alpha);
                for i in 0..n {
                    let expect = &st.a * x.column(i) + &st.b * u.column(i)
                        + &st.a_bar * &x_bar
                        + &st.b_bar * &u_bar;
                    let got = next.rows(i * 2, 2).into_owned();
                    assert_abs_diff_eq!(got, expect, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn restacking_reproduces_input_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_exchangeable(&mut rng, 4, 1, 1, 1);
        let model = from_exchangeable(&g, None).unwrap();
        let restacked = stack_homogeneous(&model, 4, 1);
        assert_abs_diff_eq!(&restacked.a[0], &g.a[0], epsilon = 1e-10);
        assert_abs_diff_eq!(&restacked.b[0], &g.b[0], epsilon = 1e-10);
        for i in 0..4 {
            assert_abs_diff_eq!(
                symmetrized(&restacked.q[0][i]),
                symmetrized(&g.q[0][i]),
                epsilon = 1e-10
            );
            assert_abs_diff_eq!(
                symmetrized(&restacked.r[0][i]),
                symmetrized(&g.r[0][i]),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn non_exchangeable_rejected_with_block_location() {
        let mut g = scalar_stacked(3, 1.0, 0.2, 1.0, 0.0);
        g.a[0][(0, 1)] = 0.9; // break the off-diagonal class
        let err = from_exchangeable(&g, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("A at t=1"), "{msg}");
    }

    #[test]
    fn permutation_invariance_of_valid_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3, 5] {
            let g = random_exchangeable(&mut rng, n, 1, 2, 1);
            assert!(g.check_exchangeable(1e-12).is_ok());
        }
    }
}
