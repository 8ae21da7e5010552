//! Strategy assembly: exact equilibria from the Riccati gains, deep-state
//! predictions, the no-sharing strategies built on them, and the
//! closed-form equilibrium cost.
//!
//! Every strategy here is linear: `u^i_t = θ_t x^i_t + (θ̄_t − θ_t)·ref_t`
//! where `ref` is the observed deep state (deep-state sharing) or a
//! precomputed deterministic prediction of it (no sharing).

use crate::gap::StackedProfile;
use crate::linalg::trace_product;
use crate::model::{GameModel, NoiseModel, WeightProfile};
use crate::riccati::{self, HorizonSpec, RiccatiSolution};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Origin of a strategy's gains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyKind {
    /// Exact equilibrium at population size `n` (weight `1/n`).
    SpneFiniteN { n: usize },
    /// Infinite-population gains (weight `0`).
    SpneInfinite,
    /// Social-cost gains (weight-independent).
    SpneSocial,
    /// No-sharing strategy with the population-size-dependent prediction.
    Sapde { n: usize },
    /// No-sharing strategy with the mean-field prediction.
    Swmfe,
    CustomLinear,
}

/// The two no-sharing strategy families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NsStrategyKind {
    Sapde,
    Swmfe,
}

impl std::fmt::Display for NsStrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NsStrategyKind::Sapde => write!(f, "sapde"),
            NsStrategyKind::Swmfe => write!(f, "swmfe"),
        }
    }
}

/// Deterministic deep-state prediction `z_{1:T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub kind: PredictionKind,
    /// `values[t]` is `z_{t+1}` (0-based storage of `z_1..z_T`).
    pub values: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionKind {
    PopulationSizeDependent { n: usize },
    MeanField,
}

/// What the strategy substitutes for the deep state.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSignal {
    /// The realized deep state, observed at play time.
    DeepState,
    /// A precomputed deterministic trajectory.
    Predicted(Prediction),
}

/// A linear strategy shared by all players.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Local-state gains per step (a single entry means stationary).
    pub theta: Vec<DMatrix<f64>>,
    pub theta_bar: Vec<DMatrix<f64>>,
    pub reference: ReferenceSignal,
}

impl Strategy {
    pub fn gains(&self, t: usize) -> (&DMatrix<f64>, &DMatrix<f64>) {
        let idx = t.min(self.theta.len() - 1);
        (&self.theta[idx], &self.theta_bar[idx])
    }

    /// Reference value at step `t`: the observed deep state for
    /// deep-state-sharing strategies, the stored prediction otherwise.
    pub fn reference_value(&self, t: usize, observed_deep: &DVector<f64>) -> DVector<f64> {
        match &self.reference {
            ReferenceSignal::DeepState => observed_deep.clone(),
            ReferenceSignal::Predicted(p) => p.values[t.min(p.values.len() - 1)].clone(),
        }
    }

    /// `u = θ_t x + (θ̄_t − θ_t)·ref`.
    pub fn action(&self, t: usize, x: &DVector<f64>, observed_deep: &DVector<f64>) -> DVector<f64> {
        let (theta, theta_bar) = self.gains(t);
        let r = self.reference_value(t, observed_deep);
        theta * x + (theta_bar - theta) * r
    }

    /// Whether evaluating an action needs only the local state (no sharing).
    pub fn is_no_sharing(&self) -> bool {
        matches!(self.reference, ReferenceSignal::Predicted(_))
    }

    /// Stacked form for the best-response oracle over `horizon` steps.
    pub fn to_stacked_profile(&self, horizon: usize) -> StackedProfile {
        let d_u = self.theta[0].nrows();
        let mut theta = Vec::with_capacity(horizon);
        let mut lambda_bar = Vec::with_capacity(horizon);
        let mut offsets = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let (th, tb) = self.gains(t);
            theta.push(th.clone());
            match &self.reference {
                ReferenceSignal::DeepState => {
                    lambda_bar.push(tb - th);
                    offsets.push(DVector::zeros(d_u));
                }
                ReferenceSignal::Predicted(p) => {
                    lambda_bar.push(DMatrix::zeros(d_u, th.ncols()));
                    offsets.push((tb - th) * &p.values[t.min(p.values.len() - 1)]);
                }
            }
        }
        StackedProfile {
            theta,
            lambda_bar,
            offsets,
        }
    }

    /// The all-zero strategy (useful as a baseline profile).
    pub fn zero(d_x: usize, d_u: usize) -> Strategy {
        Strategy {
            kind: StrategyKind::CustomLinear,
            theta: vec![DMatrix::zeros(d_u, d_x)],
            theta_bar: vec![DMatrix::zeros(d_u, d_x)],
            reference: ReferenceSignal::DeepState,
        }
    }
}

/// Reject a solution whose convexity factor loses positive definiteness.
/// Fully degenerate stages (all factors and targets zero, the costless
/// case where any action is optimal) pass.
fn require_solvable(sol: &RiccatiSolution, assumption: &str) -> Result<()> {
    for (idx, st) in sol.stages.iter().enumerate() {
        let trivial = st.f.amax() == 0.0
            && st.f_bar.amax() == 0.0
            && st.k.amax() == 0.0
            && st.k_bar.amax() == 0.0;
        if trivial {
            continue;
        }
        if st.min_eig_combo <= 0.0 {
            return Err(Error::AssumptionFailed {
                id: assumption.into(),
                detail: format!(
                    "(1−α)F+αF̄ not positive definite at t={} (min eig {:.3e}, alpha={})",
                    idx + 1,
                    st.min_eig_combo,
                    sol.alpha
                ),
            });
        }
    }
    Ok(())
}

fn solve_checked(
    model: &GameModel,
    alpha: f64,
    horizon: usize,
    assumption: &str,
) -> Result<RiccatiSolution> {
    let sol = riccati::solve_finite(model, alpha, horizon).map_err(|e| match e {
        Error::SingularFactor { .. } | Error::NotConverged { .. } => Error::AssumptionFailed {
            id: assumption.into(),
            detail: e.to_string(),
        },
        other => other,
    })?;
    require_solvable(&sol, assumption)?;
    Ok(sol)
}

/// Paired `(θ_{1:T}, θ̄_{1:T})` gain trajectories.
pub(crate) type GainPair = (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>);

/// Infinite-population gain trajectories. The weight-0 recursion
/// degenerates on pure social-cost models (the whole best-response
/// condition is weighted by the vanishing own weight there), whose
/// weight-independent gains are the limit instead.
pub(crate) fn infinite_gains(model: &GameModel, horizon: usize) -> Result<GainPair> {
    match solve_checked(model, 0.0, horizon, "A3") {
        Ok(sol) => {
            let degenerate = sol
                .stages
                .iter()
                .all(|st| st.f.amax() == 0.0 && st.f_bar.amax() == 0.0);
            if degenerate {
                if let Ok(social) = riccati::solve_social(model, HorizonSpec::Finite(horizon)) {
                    return Ok((social.theta, social.theta_bar));
                }
            }
            Ok(sol.gain_trajectories(horizon))
        }
        Err(limit_err) => match riccati::solve_social(model, HorizonSpec::Finite(horizon)) {
            Ok(social) => Ok((social.theta, social.theta_bar)),
            Err(_) => Err(limit_err),
        },
    }
}

/// Exact subgame-perfect equilibrium strategy for the given weights.
///
/// Homogeneous profiles use the weight `1/n`; vanishing profiles the
/// infinite-population weight `0`; positive profiles require the
/// social-cost structure, whose gains do not depend on the weights. The
/// returned strategy reads the observed deep state, so it is playable
/// under both perfect and deep-state sharing.
pub fn spne(model: &GameModel, profile: &WeightProfile, horizon: usize) -> Result<Strategy> {
    match profile {
        WeightProfile::Homogeneous { n } => {
            let sol = solve_checked(model, 1.0 / *n as f64, horizon, "A2")?;
            let (theta, theta_bar) = sol.gain_trajectories(horizon);
            Ok(Strategy {
                kind: StrategyKind::SpneFiniteN { n: *n },
                theta,
                theta_bar,
                reference: ReferenceSignal::DeepState,
            })
        }
        WeightProfile::Vanishing { .. } => {
            let (theta, theta_bar) = infinite_gains(model, horizon)?;
            Ok(Strategy {
                kind: StrategyKind::SpneInfinite,
                theta,
                theta_bar,
                reference: ReferenceSignal::DeepState,
            })
        }
        WeightProfile::Positive { .. } => {
            let sol = riccati::solve_social(model, HorizonSpec::Finite(horizon)).map_err(|e| {
                Error::AssumptionFailed {
                    id: "A5".into(),
                    detail: e.to_string(),
                }
            })?;
            Ok(Strategy {
                kind: StrategyKind::SpneSocial,
                theta: sol.theta,
                theta_bar: sol.theta_bar,
                reference: ReferenceSignal::DeepState,
            })
        }
    }
}

/// Infinite-population gains (weight 0) as a deep-state-sharing strategy.
pub fn spne_infinite(model: &GameModel, horizon: usize) -> Result<Strategy> {
    let (theta, theta_bar) = infinite_gains(model, horizon)?;
    Ok(Strategy {
        kind: StrategyKind::SpneInfinite,
        theta,
        theta_bar,
        reference: ReferenceSignal::DeepState,
    })
}

/// Stationary equilibrium strategy for the discounted problem.
pub fn spne_stationary(model: &GameModel, profile: &WeightProfile, gamma: f64) -> Result<Strategy> {
    match profile {
        WeightProfile::Homogeneous { n } => {
            let sol = riccati::solve_algebraic(
                model,
                1.0 / *n as f64,
                gamma,
                riccati::ALGEBRAIC_TOL,
                riccati::ALGEBRAIC_MAX_ITER,
            )?;
            require_solvable(&sol, "A2")?;
            Ok(Strategy {
                kind: StrategyKind::SpneFiniteN { n: *n },
                theta: vec![sol.stages[0].theta.clone()],
                theta_bar: vec![sol.stages[0].theta_bar.clone()],
                reference: ReferenceSignal::DeepState,
            })
        }
        WeightProfile::Vanishing { .. } => {
            let sol = riccati::solve_algebraic(
                model,
                0.0,
                gamma,
                riccati::ALGEBRAIC_TOL,
                riccati::ALGEBRAIC_MAX_ITER,
            )?;
            require_solvable(&sol, "A3")?;
            Ok(Strategy {
                kind: StrategyKind::SpneInfinite,
                theta: vec![sol.stages[0].theta.clone()],
                theta_bar: vec![sol.stages[0].theta_bar.clone()],
                reference: ReferenceSignal::DeepState,
            })
        }
        WeightProfile::Positive { .. } => {
            let sol = riccati::solve_social(model, HorizonSpec::Discounted { gamma }).map_err(
                |e| Error::AssumptionFailed {
                    id: "A12".into(),
                    detail: e.to_string(),
                },
            )?;
            Ok(Strategy {
                kind: StrategyKind::SpneSocial,
                theta: sol.theta,
                theta_bar: sol.theta_bar,
                reference: ReferenceSignal::DeepState,
            })
        }
    }
}

/// Forward recursion `z_{t+1} = (A_t + Ā_t + (B_t+B̄_t)θ̄_t) z_t` from
/// `z_1 = E[x̄_1]`.
pub fn predict(
    model: &GameModel,
    theta_bar: &[DMatrix<f64>],
    mean_deep_initial: &DVector<f64>,
    horizon: usize,
    kind: PredictionKind,
) -> Prediction {
    let mut values = Vec::with_capacity(horizon);
    let mut z = mean_deep_initial.clone();
    for t in 0..horizon {
        values.push(z.clone());
        if t + 1 < horizon {
            let stage = model.stage(t);
            let tb = &theta_bar[t.min(theta_bar.len() - 1)];
            z = (&stage.a + &stage.a_bar + (&stage.b + &stage.b_bar) * tb) * z;
        }
    }
    Prediction { kind, values }
}

/// No-sharing strategy with population-size-dependent gains and prediction.
pub fn sapde(
    model: &GameModel,
    noise: &NoiseModel,
    n: usize,
    horizon: usize,
) -> Result<Strategy> {
    let profile = WeightProfile::Homogeneous { n };
    let alpha = profile.realize()?;
    let sol = solve_checked(model, 1.0 / n as f64, horizon, "A7")?;
    let (theta, theta_bar) = sol.gain_trajectories(horizon);
    let z = predict(
        model,
        &theta_bar,
        &noise.mean_deep_state(&alpha),
        horizon,
        PredictionKind::PopulationSizeDependent { n },
    );
    Ok(Strategy {
        kind: StrategyKind::Sapde { n },
        theta,
        theta_bar,
        reference: ReferenceSignal::Predicted(z),
    })
}

/// No-sharing strategy with infinite-population gains and the mean-field
/// prediction. `profile` supplies the weights used for `E[x̄_1]`.
pub fn swmfe(
    model: &GameModel,
    noise: &NoiseModel,
    profile: &WeightProfile,
    horizon: usize,
) -> Result<Strategy> {
    let alpha = profile.realize()?;
    let (theta, theta_bar) = infinite_gains(model, horizon)?;
    let z = predict(
        model,
        &theta_bar,
        &noise.mean_deep_state(&alpha),
        horizon,
        PredictionKind::MeanField,
    );
    Ok(Strategy {
        kind: StrategyKind::Swmfe,
        theta,
        theta_bar,
        reference: ReferenceSignal::Predicted(z),
    })
}

/// Closed-form equilibrium cost of one player.
#[derive(Debug, Clone, Serialize)]
pub struct CostBreakdown {
    /// `J^{*,i}`.
    pub total: f64,
    /// `tr(VAR(VEC(Δx^i_1, x̄_1)) · 𝐏^α_1)`.
    pub lifted_trace: f64,
    /// Deterministic part `E[VEC(Δx^i_1, x̄_1)]ᵀ 𝐏^α_1 E[VEC(Δx^i_1, x̄_1)]`.
    pub lifted_mean: f64,
    /// `Σ_j α^j E[Δx^jᵀ P^α_1 Δx^j] − α^i/(1−α^i) E[Δx^iᵀ P^α_1 Δx^i]`.
    pub deviation_terms: f64,
    /// Noise accumulator `ℓ^i_t` for `t = 1..=T+1` (last entry zero).
    pub ell: Vec<f64>,
}

/// Evaluate the equilibrium cost of player `i` (0-based) exactly from the
/// noise statistics:
///
/// ```text
/// J^{*,i} = E[VEC(Δx^i_1, x̄_1)ᵀ 𝐏^α_1 VEC(Δx^i_1, x̄_1)] + ℓ^i_1
///         + Σ_j α^j E[Δx^jᵀ P^α_1 Δx^j] − α^i/(1−α^i) E[Δx^iᵀ P^α_1 Δx^i]
/// ℓ^i_t = ℓ^i_{t+1} + tr(VAR(VEC(Δw^i_t, w̄_t)) 𝐏^α_{t+1})
///         + Σ_j α^j tr(VAR(Δw^j_t) P^α_{t+1})
///         − α^i/(1−α^i) tr(VAR(Δw^i_t) P^α_{t+1})
/// ```
///
/// Expectations are full second moments, so nonzero means (deterministic
/// state components) are priced in.
pub fn optimal_cost(
    model: &GameModel,
    profile: &WeightProfile,
    noise: &NoiseModel,
    i: usize,
    horizon: usize,
) -> Result<CostBreakdown> {
    let alpha = profile.realize()?;
    if i >= alpha.len() {
        return Err(Error::Precondition(format!(
            "player index {i} out of range for n={}",
            alpha.len()
        )));
    }
    let a_i = alpha[i];
    let sol = match profile {
        WeightProfile::Positive { .. } => {
            // Weight-independent gains, but the value matrices still depend
            // on the player's own weight.
            solve_checked(model, a_i, horizon, "A5")?
        }
        WeightProfile::Homogeneous { .. } => solve_checked(model, a_i, horizon, "A2")?,
        WeightProfile::Vanishing { .. } => solve_checked(model, a_i, horizon, "A3")?,
    };

    let d = model.d_x();
    let zero_lift = DMatrix::zeros(2 * d, 2 * d);
    let zero_dev = DMatrix::zeros(d, d);
    // ℓ recursion, backward.
    let mut ell = vec![0.0; horizon + 1];
    for t in (0..horizon).rev() {
        let (p_lift_next, p_dev_next) = if t + 1 < horizon {
            (&sol.stages[t + 1].p_lift, &sol.stages[t + 1].p_dev)
        } else {
            (&zero_lift, &zero_dev)
        };
        let gm = noise.noise_gauge_moments(t, &alpha, i);
        let mut step = trace_product(&gm.lifted(), p_lift_next);
        let dev_vars = noise.noise_dev_variances(t, &alpha);
        for (j, var) in dev_vars.iter().enumerate() {
            step += alpha[j] * trace_product(var, p_dev_next);
        }
        step -= a_i / (1.0 - a_i) * trace_product(&dev_vars[i], p_dev_next);
        ell[t] = ell[t + 1] + step;
    }

    let p1 = &sol.stages[0].p_lift;
    let p1_dev = &sol.stages[0].p_dev;
    let init = noise.initial_gauge_moments(&alpha, i);
    let lifted_trace = trace_product(&init.lifted(), p1);
    let mu_bar = noise.mean_deep_state(&alpha);
    let mean_dev_i = noise.mean_of(i) - &mu_bar;
    let mean_vec = DVector::from_iterator(2 * d, mean_dev_i.iter().chain(mu_bar.iter()).copied());
    let lifted_mean = (mean_vec.transpose() * p1 * &mean_vec)[(0, 0)];

    let init_dev_vars = noise.initial_dev_variances(&alpha);
    let mut deviation_terms = 0.0;
    for (j, var) in init_dev_vars.iter().enumerate() {
        let mean_dev_j = noise.mean_of(j) - &mu_bar;
        let second = trace_product(var, p1_dev) + (mean_dev_j.transpose() * p1_dev * &mean_dev_j)[(0, 0)];
        deviation_terms += alpha[j] * second;
    }
    let second_i = trace_product(&init_dev_vars[i], p1_dev)
        + (mean_dev_i.transpose() * p1_dev * &mean_dev_i)[(0, 0)];
    deviation_terms -= a_i / (1.0 - a_i) * second_i;

    Ok(CostBreakdown {
        total: lifted_trace + lifted_mean + deviation_terms + ell[0],
        lifted_trace,
        lifted_mean,
        deviation_terms,
        ell,
    })
}
