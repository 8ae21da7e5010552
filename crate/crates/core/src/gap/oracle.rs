//! Stacked-space best-response oracle.
//!
//! With every player but `i` pinned to a shared linear strategy, player
//! `i` faces a standard time-varying affine-quadratic control problem on
//! the stacked state. Solving it exactly (one backward pass) gives the
//! tight deviation benefit `J^i(ĝ) − min_{g^i} J^i(g^i, ĝ^{-i})`; by
//! certainty equivalence the linear-affine minimizer is optimal among all
//! measurable deviations. This path shares no code with the non-standard
//! recursion, so it doubles as an independent check of the equilibrium
//! construction.

use crate::linalg::{min_symmetric_eig, symmetrize, symmetrized};
use crate::model::{CovarianceSpec, GameModel, NoiseModel};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Largest stacked dimension (`n · d_x`) the oracle accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 512;

/// A shared linear strategy in stacked form:
/// `u^j_t = θ_t x^j_t + Λ_t x̄_t + m_t`.
///
/// Deep-state-sharing strategies carry the mean gain in `Λ_t`; no-sharing
/// strategies fold their precomputed prediction into the offset `m_t`.
#[derive(Debug, Clone)]
pub struct StackedProfile {
    pub theta: Vec<DMatrix<f64>>,
    pub lambda_bar: Vec<DMatrix<f64>>,
    pub offsets: Vec<DVector<f64>>,
}

impl StackedProfile {
    pub fn horizon(&self) -> usize {
        self.theta.len()
    }

    fn at(&self, t: usize) -> (&DMatrix<f64>, &DMatrix<f64>, &DVector<f64>) {
        (&self.theta[t], &self.lambda_bar[t], &self.offsets[t])
    }
}

/// Time-varying affine policy on the stacked state, `u = K_t 𝐱 + k_t`,
/// indexed relative to its starting stage.
#[derive(Debug, Clone)]
pub struct AffinePolicy {
    pub k: Vec<DMatrix<f64>>,
    pub kv: Vec<DVector<f64>>,
}

/// Affine expression `M_x 𝐱 + M_u u + v` used to assemble quadratic costs.
struct Affine {
    mx: DMatrix<f64>,
    mu: DMatrix<f64>,
    v: DVector<f64>,
}

/// Accumulator for `𝐱ᵀQ̂𝐱 + 2𝐱ᵀN̂u + uᵀR̂u + 2q̂ᵀ𝐱 + 2r̂ᵀu + ĉ`.
struct QuadCost {
    q: DMatrix<f64>,
    n: DMatrix<f64>,
    r: DMatrix<f64>,
    q_lin: DVector<f64>,
    r_lin: DVector<f64>,
    c: f64,
}

impl QuadCost {
    fn zeros(nd: usize, du: usize) -> Self {
        QuadCost {
            q: DMatrix::zeros(nd, nd),
            n: DMatrix::zeros(nd, du),
            r: DMatrix::zeros(du, du),
            q_lin: DVector::zeros(nd),
            r_lin: DVector::zeros(du),
            c: 0.0,
        }
    }

    /// Accumulate `factor · e1ᵀ W e2`.
    fn add(&mut self, e1: &Affine, w: &DMatrix<f64>, e2: &Affine, factor: f64) {
        self.q += (e1.mx.transpose() * w * &e2.mx) * factor;
        let cross = e1.mx.transpose() * w * &e2.mu + e2.mx.transpose() * w.transpose() * &e1.mu;
        self.n += cross * (factor / 2.0);
        self.r += symmetrized(&(e1.mu.transpose() * w * &e2.mu)) * factor;
        let lin_x = e2.mx.transpose() * w.transpose() * &e1.v + e1.mx.transpose() * w * &e2.v;
        self.q_lin += lin_x * (factor / 2.0);
        let lin_u = e2.mu.transpose() * w.transpose() * &e1.v + e1.mu.transpose() * w * &e2.v;
        self.r_lin += lin_u * (factor / 2.0);
        self.c += factor * (e1.v.transpose() * w * &e2.v)[(0, 0)];
    }

    fn finish(mut self) -> Self {
        symmetrize(&mut self.q);
        self
    }

    /// Substitute `u = L 𝐱 + m`: the cost becomes quadratic in `𝐱` alone.
    fn close(&self, l: &DMatrix<f64>, m: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>, f64) {
        let q = &self.q + &self.n * l + (&self.n * l).transpose() + l.transpose() * &self.r * l;
        let q_lin = &self.q_lin
            + &self.n * m
            + l.transpose() * &self.r * m
            + l.transpose() * &self.r_lin;
        let c = self.c + (m.transpose() * &self.r * m)[(0, 0)] + 2.0 * self.r_lin.dot(m);
        (symmetrized(&q), q_lin, c)
    }
}

/// Stacked dynamics and player-`i` cost at one stage, with everyone but
/// `i` substituted in.
struct StageAssembly {
    a_hat: DMatrix<f64>,
    b_hat: DMatrix<f64>,
    d_hat: DVector<f64>,
    cost: QuadCost,
    /// Player `i`'s own policy in stacked coordinates (for closed-loop runs).
    own_l: DMatrix<f64>,
    own_m: DVector<f64>,
}

fn selector(n: usize, d: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(d, n * d);
    for r in 0..d {
        e[(r, j * d + r)] = 1.0;
    }
    e
}

fn mean_selector(alpha: &[f64], d: usize) -> DMatrix<f64> {
    let n = alpha.len();
    let mut s = DMatrix::zeros(d, n * d);
    for (j, a) in alpha.iter().enumerate() {
        for r in 0..d {
            s[(r, j * d + r)] = *a;
        }
    }
    s
}

fn assemble(
    model: &GameModel,
    alpha: &[f64],
    profile: &StackedProfile,
    i: usize,
    t: usize,
) -> StageAssembly {
    let n = alpha.len();
    let stage = model.stage(t);
    let (d_x, d_u) = (model.d_x(), model.d_u());
    let nd = n * d_x;
    let (theta, lambda, m_off) = profile.at(t);
    let s_bar = mean_selector(alpha, d_x);

    // Policies of the fixed players: L^j = θE_j + Λ S̄, m^j = m.
    let policy_l = |j: usize| theta * selector(n, d_x, j) + lambda * &s_bar;
    // ū with player i's action kept symbolic.
    let mut l_bar_others = DMatrix::zeros(d_u, nd);
    for (j, a) in alpha.iter().enumerate() {
        if j != i {
            l_bar_others += policy_l(j) * *a;
        }
    }
    let others_weight: f64 = alpha
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, a)| a)
        .sum();
    let m_bar_others = m_off * others_weight;

    // Dynamics rows.
    let mut a_hat = DMatrix::zeros(nd, nd);
    let mut b_hat = DMatrix::zeros(nd, d_u);
    let mut d_hat = DVector::zeros(nd);
    for k in 0..n {
        let mut row = &stage.a * selector(n, d_x, k) + &stage.a_bar * &s_bar;
        row += &stage.b_bar * &l_bar_others;
        if k != i {
            row += &stage.b * policy_l(k);
        }
        a_hat.view_mut((k * d_x, 0), (d_x, nd)).copy_from(&row);

        let mut bk = &stage.b_bar * alpha[i];
        if k == i {
            bk += &stage.b;
        }
        b_hat.view_mut((k * d_x, 0), (d_x, d_u)).copy_from(&bk);

        let mut dk = &stage.b_bar * &m_bar_others;
        if k != i {
            dk += &stage.b * m_off;
        }
        d_hat.rows_mut(k * d_x, d_x).copy_from(&dk);
    }

    // Cost of player i as a quadratic in (𝐱, u).
    let zero_u = DMatrix::zeros(d_x, d_u);
    let x_i = Affine {
        mx: selector(n, d_x, i),
        mu: zero_u.clone(),
        v: DVector::zeros(d_x),
    };
    let x_bar = Affine {
        mx: s_bar.clone(),
        mu: zero_u,
        v: DVector::zeros(d_x),
    };
    let u_i = Affine {
        mx: DMatrix::zeros(d_u, nd),
        mu: DMatrix::identity(d_u, d_u),
        v: DVector::zeros(d_u),
    };
    let u_bar = Affine {
        mx: l_bar_others.clone(),
        mu: DMatrix::identity(d_u, d_u) * alpha[i],
        v: m_bar_others.clone(),
    };
    let mut cost = QuadCost::zeros(nd, d_u);
    cost.add(&x_i, &stage.q, &x_i, 1.0);
    cost.add(&x_i, &stage.s_x, &x_bar, 2.0);
    cost.add(&x_bar, &stage.q_bar, &x_bar, 1.0);
    cost.add(&u_i, &stage.r, &u_i, 1.0);
    cost.add(&u_i, &stage.s_u, &u_bar, 2.0);
    cost.add(&u_bar, &stage.r_bar, &u_bar, 1.0);
    // Σ_j α^j x^jᵀGˣx^j is block diagonal in 𝐱.
    for (j, a) in alpha.iter().enumerate() {
        let ej = Affine {
            mx: selector(n, d_x, j),
            mu: DMatrix::zeros(d_x, d_u),
            v: DVector::zeros(d_x),
        };
        cost.add(&ej, &stage.g_x, &ej, *a);
    }
    // Σ_j α^j u^jᵀGᵘu^j: the i-term sits on the control, the rest on 𝐱.
    cost.add(&u_i, &stage.g_u, &u_i, alpha[i]);
    for (j, a) in alpha.iter().enumerate() {
        if j == i {
            continue;
        }
        let uj = Affine {
            mx: policy_l(j),
            mu: DMatrix::zeros(d_u, d_u),
            v: m_off.clone(),
        };
        cost.add(&uj, &stage.g_u, &uj, *a);
    }

    StageAssembly {
        a_hat,
        b_hat,
        d_hat,
        cost: cost.finish(),
        own_l: policy_l(i),
        own_m: m_off.clone(),
    }
}

fn stacked_mean(noise: &NoiseModel, n: usize, d: usize) -> DVector<f64> {
    let mut mu = DVector::zeros(n * d);
    for j in 0..n {
        mu.rows_mut(j * d, d).copy_from(&noise.mean_of(j));
    }
    mu
}

fn stacked_cov(spec: &CovarianceSpec, n: usize, d: usize) -> DMatrix<f64> {
    match spec {
        CovarianceSpec::Shared(s) => {
            let mut out = DMatrix::zeros(n * d, n * d);
            for j in 0..n {
                out.view_mut((j * d, j * d), (d, d)).copy_from(s);
            }
            out
        }
        CovarianceSpec::PerPlayer(ss) => {
            let mut out = DMatrix::zeros(n * d, n * d);
            for (j, s) in ss.iter().enumerate() {
                out.view_mut((j * d, j * d), (d, d)).copy_from(s);
            }
            out
        }
        CovarianceSpec::Joint(m) => m.clone(),
    }
}

/// Forward stacked moments `(μ_t, Σ_t)` under the full profile up to
/// 0-based stage `t_stop` (exclusive).
fn forward_moments(
    model: &GameModel,
    noise: &NoiseModel,
    alpha: &[f64],
    profile: &StackedProfile,
    i: usize,
    t_stop: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = alpha.len();
    let d = model.d_x();
    let mut mu = stacked_mean(noise, n, d);
    let mut sigma = stacked_cov(&noise.initial, n, d);
    for t in 0..t_stop {
        let asm = assemble(model, alpha, profile, i, t);
        let a_cl = &asm.a_hat + &asm.b_hat * &asm.own_l;
        let d_cl = &asm.d_hat + &asm.b_hat * &asm.own_m;
        mu = &a_cl * mu + d_cl;
        sigma = symmetrized(&(&a_cl * sigma * a_cl.transpose() + stacked_cov(noise.noise_at(t), n, d)));
    }
    (mu, sigma)
}

fn check_cap(model: &GameModel, n: usize, cap: usize) -> Result<()> {
    let size = n * model.d_x();
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    Ok(())
}

struct BackwardOut {
    /// Value pieces at the starting stage: `E[V] = tr(ΣP) + μᵀPμ + 2pᵀμ + c`.
    p: DMatrix<f64>,
    p_lin: DVector<f64>,
    c: f64,
    policy: AffinePolicy,
}

/// Exact best response of player `i` from 0-based stage `t_from` to the
/// end, others fixed to `profile`.
fn best_response(
    model: &GameModel,
    noise: &NoiseModel,
    alpha: &[f64],
    profile: &StackedProfile,
    i: usize,
    t_from: usize,
    horizon: usize,
) -> Result<BackwardOut> {
    let n = alpha.len();
    let d = model.d_x();
    let nd = n * d;
    let mut p = DMatrix::zeros(nd, nd);
    let mut p_lin = DVector::zeros(nd);
    let mut c = 0.0f64;
    let mut k_rev = Vec::new();
    let mut kv_rev = Vec::new();
    for t in (t_from..horizon).rev() {
        let asm = assemble(model, alpha, profile, i, t);
        let h = symmetrized(&(&asm.cost.r + asm.b_hat.transpose() * &p * &asm.b_hat));
        if min_symmetric_eig(&h) <= 0.0 {
            return Err(Error::Precondition(format!(
                "stacked best response is not strictly convex at t={}",
                t + 1
            )));
        }
        let g = &asm.cost.n + asm.a_hat.transpose() * &p * &asm.b_hat;
        let pd_plus = &p * &asm.d_hat + &p_lin;
        let hv = &asm.cost.r_lin + asm.b_hat.transpose() * &pd_plus;
        let h_lu = h.clone().lu();
        let k_gain = -h_lu
            .solve(&g.transpose())
            .ok_or_else(|| Error::SingularFactor {
                matrix: "stacked H".into(),
                t: t + 1,
                cond: f64::INFINITY,
            })?;
        let k_off = -h_lu.solve(&hv).ok_or_else(|| Error::SingularFactor {
            matrix: "stacked H".into(),
            t: t + 1,
            cond: f64::INFINITY,
        })?;
        let noise_trace =
            crate::linalg::trace_product(&stacked_cov(noise.noise_at(t), n, d), &p);
        // Value update with the minimizer substituted.
        let p_new = &asm.cost.q + asm.a_hat.transpose() * &p * &asm.a_hat
            + &g * &k_gain;
        let p_lin_new = &asm.cost.q_lin + asm.a_hat.transpose() * &pd_plus + &g * &k_off;
        let c_new = asm.cost.c
            + c
            + (asm.d_hat.transpose() * &p * &asm.d_hat)[(0, 0)]
            + 2.0 * p_lin.dot(&asm.d_hat)
            + noise_trace
            + hv.dot(&k_off);
        p = symmetrized(&p_new);
        p_lin = p_lin_new;
        c = c_new;
        k_rev.push(k_gain);
        kv_rev.push(k_off);
    }
    k_rev.reverse();
    kv_rev.reverse();
    Ok(BackwardOut {
        p,
        p_lin,
        c,
        policy: AffinePolicy {
            k: k_rev,
            kv: kv_rev,
        },
    })
}

/// Closed-loop cost-to-go of player `i` from stage `t_from` when it plays
/// the affine stacked policy `(l_of, m_of)` and everyone else follows
/// `profile`.
#[allow(clippy::too_many_arguments)]
fn closed_loop_value<LF, MF>(
    model: &GameModel,
    noise: &NoiseModel,
    alpha: &[f64],
    profile: &StackedProfile,
    i: usize,
    t_from: usize,
    horizon: usize,
    mut l_of: LF,
    mut m_of: MF,
) -> (DMatrix<f64>, DVector<f64>, f64)
where
    LF: FnMut(usize, &StageAssembly) -> DMatrix<f64>,
    MF: FnMut(usize, &StageAssembly) -> DVector<f64>,
{
    let n = alpha.len();
    let d = model.d_x();
    let nd = n * d;
    let mut p = DMatrix::zeros(nd, nd);
    let mut p_lin = DVector::zeros(nd);
    let mut c = 0.0f64;
    for t in (t_from..horizon).rev() {
        let asm = assemble(model, alpha, profile, i, t);
        let l = l_of(t, &asm);
        let m = m_of(t, &asm);
        let (q_cl, q_lin_cl, c_cl) = asm.cost.close(&l, &m);
        let a_cl = &asm.a_hat + &asm.b_hat * &l;
        let d_cl = &asm.d_hat + &asm.b_hat * &m;
        let noise_trace = crate::linalg::trace_product(&stacked_cov(noise.noise_at(t), n, d), &p);
        let p_new = &q_cl + a_cl.transpose() * &p * &a_cl;
        let p_lin_new = q_lin_cl + a_cl.transpose() * (&p * &d_cl + &p_lin);
        let c_new = c_cl
            + c
            + (d_cl.transpose() * &p * &d_cl)[(0, 0)]
            + 2.0 * p_lin.dot(&d_cl)
            + noise_trace;
        p = symmetrized(&p_new);
        p_lin = p_lin_new;
        c = c_new;
    }
    (p, p_lin, c)
}

fn value_at(
    p: &DMatrix<f64>,
    p_lin: &DVector<f64>,
    c: f64,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> f64 {
    crate::linalg::trace_product(sigma, p) + (mu.transpose() * p * mu)[(0, 0)]
        + 2.0 * p_lin.dot(mu)
        + c
}

/// Exact cost-to-go `J^i(profile)_{t₀}` (1-based `t₀`) under the shared
/// profile, by moment propagation and a backward pass.
pub fn closed_loop_cost(
    model: &GameModel,
    noise: &NoiseModel,
    n: usize,
    profile: &StackedProfile,
    i: usize,
    t0: usize,
    horizon: usize,
) -> Result<f64> {
    check_cap(model, n, DEFAULT_ORACLE_CAP)?;
    let alpha = crate::model::WeightProfile::Homogeneous { n }.realize()?;
    let t_from = t0 - 1;
    let (mu, sigma) = forward_moments(model, noise, &alpha, profile, i, t_from);
    let (p, p_lin, c) = closed_loop_value(
        model,
        noise,
        &alpha,
        profile,
        i,
        t_from,
        horizon,
        |_, asm| asm.own_l.clone(),
        |_, asm| asm.own_m.clone(),
    );
    Ok(value_at(&p, &p_lin, c, &mu, &sigma))
}

/// Deviation benefit of player `i` at stage `t₀` (1-based):
/// `J^i(profile)_{t₀} − min_{g^i} J^i(g^i, profile^{-i})_{t₀} ≥ 0`, where
/// the history up to `t₀` is generated by the full profile and the
/// minimization is a standard stacked-space control problem.
#[allow(clippy::too_many_arguments)]
pub fn deviation_benefit(
    model: &GameModel,
    noise: &NoiseModel,
    n: usize,
    profile: &StackedProfile,
    i: usize,
    t0: usize,
    horizon: usize,
    cap: Option<usize>,
) -> Result<f64> {
    check_cap(model, n, cap.unwrap_or(DEFAULT_ORACLE_CAP))?;
    let alpha = crate::model::WeightProfile::Homogeneous { n }.realize()?;
    let t_from = t0 - 1;
    let (mu, sigma) = forward_moments(model, noise, &alpha, profile, i, t_from);
    let br = best_response(model, noise, &alpha, profile, i, t_from, horizon)?;
    let optimal = value_at(&br.p, &br.p_lin, br.c, &mu, &sigma);
    let (p, p_lin, c) = closed_loop_value(
        model,
        noise,
        &alpha,
        profile,
        i,
        t_from,
        horizon,
        |_, asm| asm.own_l.clone(),
        |_, asm| asm.own_m.clone(),
    );
    let actual = value_at(&p, &p_lin, c, &mu, &sigma);
    Ok(actual - optimal)
}

/// Environment-sensitivity estimate over a probe family of deviations:
/// `max_probe |J^i(g^i, ĝ^{-i})_{t₀} − J^i(g^i, g*^{-i})_{t₀}|`.
///
/// Probes: the best responses to either environment plus scaled copies of
/// the reference profile's own policy. This estimates (it does not bound)
/// the supremum over arbitrary deviations.
#[allow(clippy::too_many_arguments)]
pub fn environment_sensitivity(
    model: &GameModel,
    noise: &NoiseModel,
    n: usize,
    hat_env: &StackedProfile,
    star_env: &StackedProfile,
    i: usize,
    t0: usize,
    horizon: usize,
) -> Result<f64> {
    check_cap(model, n, DEFAULT_ORACLE_CAP)?;
    let alpha = crate::model::WeightProfile::Homogeneous { n }.realize()?;
    let t_from = t0 - 1;

    let mut probes: Vec<AffinePolicy> = Vec::new();
    probes.push(
        best_response(model, noise, &alpha, hat_env, i, t_from, horizon)?.policy,
    );
    probes.push(
        best_response(model, noise, &alpha, star_env, i, t_from, horizon)?.policy,
    );
    for scale in [0.0, 0.5, 1.5] {
        let k = (t_from..horizon)
            .map(|t| {
                let asm = assemble(model, &alpha, star_env, i, t);
                asm.own_l * scale
            })
            .collect();
        let kv = (t_from..horizon)
            .map(|t| {
                let asm = assemble(model, &alpha, star_env, i, t);
                asm.own_m * scale
            })
            .collect();
        probes.push(AffinePolicy { k, kv });
    }

    let mut worst = 0.0f64;
    for probe in &probes {
        let mut values = [0.0f64; 2];
        for (slot, env) in [hat_env, star_env].into_iter().enumerate() {
            let (mu, sigma) = forward_moments(model, noise, &alpha, env, i, t_from);
            let (p, p_lin, c) = closed_loop_value(
                model,
                noise,
                &alpha,
                env,
                i,
                t_from,
                horizon,
                |t, _| probe.k[t - t_from].clone(),
                |t, _| probe.kv[t - t_from].clone(),
            );
            values[slot] = value_at(&p, &p_lin, c, &mu, &sigma);
        }
        worst = worst.max((values[0] - values[1]).abs());
    }
    Ok(worst)
}
