//! Game specification: dimensions, horizon, dynamics/cost matrices, weights
//! and noise statistics, plus the reduction of general exchangeable LQ games
//! to deep structured form.
//!
//! Dynamics of player `i` at time `t`:
//!
//! ```text
//! x^i_{t+1} = A_t x^i_t + B_t u^i_t + Ā_t x̄_t + B̄_t ū_t + w^i_t
//! ```
//!
//! Per-step cost of player `i`:
//!
//! ```text
//! c^i_t = x^iᵀQ x^i + 2 x^iᵀS^x x̄ + x̄ᵀQ̄ x̄
//!       + u^iᵀR u^i + 2 u^iᵀS^u ū + ūᵀR̄ ū
//!       + Σ_j α^j (x^jᵀG^x x^j + u^jᵀG^u u^j)
//! ```
//!
//! with `x̄ = Σ_j α^j x^j` (the deep state) and `ū` its action analogue.

mod exchangeable;
mod json;
mod noise;

pub use exchangeable::{from_exchangeable, stack_homogeneous, StackedExchangeableGame};
pub use json::{model_from_json, model_to_json, ModelFile};
pub use noise::{CovarianceSpec, GaugeMoments, MeanSpec, NoiseCovSpec, NoiseModel, SampleFactor};

use crate::linalg::{asymmetry, symmetrize};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Asymmetry above this triggers a validation warning.
pub const SYMMETRY_WARN_TOL: f64 = 1e-8;
/// Asymmetry above this is a hard ingest error.
pub const SYMMETRY_ERROR_TOL: f64 = 1e-4;
/// Default absolute tolerance for the exchangeability block check.
pub const EXCHANGEABILITY_TOL: f64 = 1e-10;

/// Game horizon: time-varying over `T` steps, or a single stationary stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Stationary,
}

/// All model matrices for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMatrices {
    pub a: DMatrix<f64>,
    pub a_bar: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub b_bar: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub s_x: DMatrix<f64>,
    pub q_bar: DMatrix<f64>,
    pub g_x: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub s_u: DMatrix<f64>,
    pub r_bar: DMatrix<f64>,
    pub g_u: DMatrix<f64>,
}

impl StageMatrices {
    /// Zero-coupling stage of the given dimensions.
    pub fn zeros(d_x: usize, d_u: usize) -> Self {
        StageMatrices {
            a: DMatrix::zeros(d_x, d_x),
            a_bar: DMatrix::zeros(d_x, d_x),
            b: DMatrix::zeros(d_x, d_u),
            b_bar: DMatrix::zeros(d_x, d_u),
            q: DMatrix::zeros(d_x, d_x),
            s_x: DMatrix::zeros(d_x, d_x),
            q_bar: DMatrix::zeros(d_x, d_x),
            g_x: DMatrix::zeros(d_x, d_x),
            r: DMatrix::zeros(d_u, d_u),
            s_u: DMatrix::zeros(d_u, d_u),
            r_bar: DMatrix::zeros(d_u, d_u),
            g_u: DMatrix::zeros(d_u, d_u),
        }
    }

    fn weighting_matrices(&self) -> [(&'static str, &DMatrix<f64>); 8] {
        [
            ("Q", &self.q),
            ("S_x", &self.s_x),
            ("Q_bar", &self.q_bar),
            ("G_x", &self.g_x),
            ("R", &self.r),
            ("S_u", &self.s_u),
            ("R_bar", &self.r_bar),
            ("G_u", &self.g_u),
        ]
    }
}

/// The full game model. Immutable after construction; cheap to share.
#[derive(Debug, Clone)]
pub struct GameModel {
    d_x: usize,
    d_u: usize,
    horizon: Horizon,
    discount: Option<f64>,
    stages: Vec<StageMatrices>,
    ingest_warnings: Vec<String>,
}

impl GameModel {
    /// Build a model, symmetrizing every weighting matrix on ingest.
    ///
    /// `stages` must contain one entry for a stationary model, or `T`
    /// entries for `Horizon::Finite(T)`. Asymmetry beyond
    /// [`SYMMETRY_ERROR_TOL`] is rejected; beyond [`SYMMETRY_WARN_TOL`] it is
    /// recorded as a warning retrievable through [`validate_model`].
    pub fn new(
        d_x: usize,
        d_u: usize,
        horizon: Horizon,
        discount: Option<f64>,
        mut stages: Vec<StageMatrices>,
    ) -> Result<Self> {
        if d_x == 0 || d_u == 0 {
            return Err(Error::InvalidModel(
                "state and action dimensions must be positive".into(),
            ));
        }
        match horizon {
            Horizon::Finite(0) => {
                return Err(Error::InvalidModel("horizon must be positive".into()))
            }
            Horizon::Finite(t) if stages.len() != t && stages.len() != 1 => {
                return Err(Error::InvalidModel(format!(
                    "expected 1 or {} stage matrix sets, got {}",
                    t,
                    stages.len()
                )));
            }
            Horizon::Stationary if stages.len() != 1 => {
                return Err(Error::InvalidModel(format!(
                    "stationary model stores exactly one matrix set, got {}",
                    stages.len()
                )));
            }
            _ => {}
        }
        if let Some(g) = discount {
            if !(0.0 < g && g < 1.0) {
                return Err(Error::InvalidModel(format!(
                    "discount must lie in (0,1), got {g}"
                )));
            }
        }
        // Broadcast a single stage over a finite horizon.
        if let Horizon::Finite(t) = horizon {
            if stages.len() == 1 && t > 1 {
                let stage = stages[0].clone();
                stages = vec![stage; t];
            }
        }

        let mut ingest_warnings = Vec::new();
        for (idx, stage) in stages.iter_mut().enumerate() {
            for (name, dims, rows, cols) in [
                ("A", &stage.a.shape(), d_x, d_x),
                ("A_bar", &stage.a_bar.shape(), d_x, d_x),
                ("B", &stage.b.shape(), d_x, d_u),
                ("B_bar", &stage.b_bar.shape(), d_x, d_u),
                ("Q", &stage.q.shape(), d_x, d_x),
                ("S_x", &stage.s_x.shape(), d_x, d_x),
                ("Q_bar", &stage.q_bar.shape(), d_x, d_x),
                ("G_x", &stage.g_x.shape(), d_x, d_x),
                ("R", &stage.r.shape(), d_u, d_u),
                ("S_u", &stage.s_u.shape(), d_u, d_u),
                ("R_bar", &stage.r_bar.shape(), d_u, d_u),
                ("G_u", &stage.g_u.shape(), d_u, d_u),
            ] {
                if *dims != (rows, cols) {
                    return Err(Error::Dimension {
                        context: format!("{name} at t={}", idx + 1),
                        expected: format!("{rows}x{cols}"),
                        actual: format!("{}x{}", dims.0, dims.1),
                    });
                }
            }
            for (name, m) in [
                ("Q", &mut stage.q),
                ("S_x", &mut stage.s_x),
                ("Q_bar", &mut stage.q_bar),
                ("G_x", &mut stage.g_x),
                ("R", &mut stage.r),
                ("S_u", &mut stage.s_u),
                ("R_bar", &mut stage.r_bar),
                ("G_u", &mut stage.g_u),
            ] {
                let asym = asymmetry(m);
                if asym > SYMMETRY_ERROR_TOL {
                    return Err(Error::InvalidModel(format!(
                        "{name} at t={} is asymmetric (relative asymmetry {asym:.3e})",
                        idx + 1
                    )));
                }
                if asym > SYMMETRY_WARN_TOL {
                    ingest_warnings.push(format!(
                        "{name} at t={}: symmetrized away relative asymmetry {asym:.3e}",
                        idx + 1
                    ));
                }
                symmetrize(m);
            }
        }

        Ok(GameModel {
            d_x,
            d_u,
            horizon,
            discount,
            stages,
            ingest_warnings,
        })
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn d_u(&self) -> usize {
        self.d_u
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn discount(&self) -> Option<f64> {
        self.discount
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self.horizon, Horizon::Stationary)
    }

    /// Stage matrices at 0-based time `t`; a stationary model returns its
    /// single stage for every `t`.
    pub fn stage(&self, t: usize) -> &StageMatrices {
        match self.horizon {
            Horizon::Stationary => &self.stages[0],
            Horizon::Finite(_) => &self.stages[t.min(self.stages.len() - 1)],
        }
    }

    pub fn stages(&self) -> &[StageMatrices] {
        &self.stages
    }

    pub fn ingest_warnings(&self) -> &[String] {
        &self.ingest_warnings
    }

    /// Finite horizon length, if any.
    pub fn finite_horizon(&self) -> Option<usize> {
        match self.horizon {
            Horizon::Finite(t) => Some(t),
            Horizon::Stationary => None,
        }
    }

    /// A stationary view of this model over `t` steps (used to run finite
    /// recursions on stationary data). Errors on a time-varying model.
    pub fn require_stationary(&self) -> Result<()> {
        if self.is_stationary() {
            Ok(())
        } else {
            Err(Error::Precondition(
                "operation requires a stationary model".into(),
            ))
        }
    }
}

/// Weight profile `α^i_n` over the players.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightProfile {
    /// `α^i = 1/n`.
    Homogeneous { n: usize },
    /// Arbitrary positive weights summing to one.
    Positive { alpha: Vec<f64> },
    /// `α^i = γ^i / n`, `γ^i ∈ [−γ_max, γ_max]`.
    Vanishing { gamma: Vec<f64>, gamma_max: f64 },
}

/// Tolerance on `Σ α^i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl WeightProfile {
    pub fn n(&self) -> usize {
        match self {
            WeightProfile::Homogeneous { n } => *n,
            WeightProfile::Positive { alpha } => alpha.len(),
            WeightProfile::Vanishing { gamma, .. } => gamma.len(),
        }
    }

    /// Realized weights `α^1..α^n`.
    pub fn realize(&self) -> Result<Vec<f64>> {
        self.check()?;
        Ok(match self {
            WeightProfile::Homogeneous { n } => vec![1.0 / *n as f64; *n],
            WeightProfile::Positive { alpha } => alpha.clone(),
            WeightProfile::Vanishing { gamma, .. } => {
                let n = gamma.len() as f64;
                gamma.iter().map(|g| g / n).collect()
            }
        })
    }

    fn check(&self) -> Result<()> {
        match self {
            WeightProfile::Homogeneous { n } => {
                if *n < 2 {
                    return Err(Error::InvalidWeights(format!(
                        "need at least 2 players, got {n}"
                    )));
                }
            }
            WeightProfile::Positive { alpha } => {
                if alpha.len() < 2 {
                    return Err(Error::InvalidWeights("need at least 2 players".into()));
                }
                if let Some(a) = alpha.iter().find(|a| **a <= 0.0) {
                    return Err(Error::InvalidWeights(format!(
                        "positive profile contains non-positive weight {a}"
                    )));
                }
                let sum: f64 = alpha.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidWeights(format!(
                        "weights sum to {sum}, not 1"
                    )));
                }
            }
            WeightProfile::Vanishing { gamma, gamma_max } => {
                if gamma.len() < 2 {
                    return Err(Error::InvalidWeights("need at least 2 players".into()));
                }
                if *gamma_max <= 0.0 {
                    return Err(Error::InvalidWeights("gamma_max must be positive".into()));
                }
                if let Some(g) = gamma.iter().find(|g| g.abs() > *gamma_max) {
                    return Err(Error::InvalidWeights(format!(
                        "gamma {g} exceeds gamma_max {gamma_max}"
                    )));
                }
                let n = gamma.len() as f64;
                let sum: f64 = gamma.iter().map(|g| g / n).sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidWeights(format!(
                        "realized weights sum to {sum}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One violated invariant, with where it was found.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

/// Result of [`validate_model`]: empty `violations` means valid.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn violation(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }
}

/// Check every model/weights/noise invariant and report all violations.
pub fn validate_model(
    model: &GameModel,
    profile: &WeightProfile,
    noise: &NoiseModel,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    report.warnings.extend(model.ingest_warnings().iter().cloned());

    // Matrices are symmetrized on ingest; re-check defensively so that a
    // model assembled by hand still gets flagged.
    for (idx, stage) in model.stages().iter().enumerate() {
        for (name, m) in stage.weighting_matrices() {
            let asym = asymmetry(m);
            if asym > SYMMETRY_WARN_TOL {
                report.violation(
                    format!("{name} at t={}", idx + 1),
                    format!("asymmetric weighting matrix (relative asymmetry {asym:.3e})"),
                );
            }
        }
    }
    if model.is_stationary() && model.stages().len() != 1 {
        report.violation("horizon", "stationary model must store exactly one stage");
    }

    if let Err(e) = profile.check() {
        report.violation("weights", e.to_string());
    } else if let Ok(alpha) = profile.realize() {
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            report.violation("weights", format!("realized weights sum to {sum}, not 1"));
        }
    }

    noise.validate(model.d_x(), profile.n(), model.finite_horizon(), &mut report);
    report
}

/// Evaluate the per-step cost of player `i` (0-based) at one stage.
///
/// `states` and `actions` hold one column per player.
pub fn per_step_cost(
    stage: &StageMatrices,
    alpha: &[f64],
    states: &DMatrix<f64>,
    actions: &DMatrix<f64>,
    i: usize,
) -> f64 {
    let n = alpha.len();
    debug_assert_eq!(states.ncols(), n);
    debug_assert_eq!(actions.ncols(), n);
    let x_bar: DVector<f64> = weighted_mean(states, alpha);
    let u_bar: DVector<f64> = weighted_mean(actions, alpha);
    let xi = states.column(i);
    let ui = actions.column(i);

    let mut cost = (xi.transpose() * &stage.q * xi)[(0, 0)]
        + 2.0 * (xi.transpose() * &stage.s_x * &x_bar)[(0, 0)]
        + (x_bar.transpose() * &stage.q_bar * &x_bar)[(0, 0)]
        + (ui.transpose() * &stage.r * ui)[(0, 0)]
        + 2.0 * (ui.transpose() * &stage.s_u * &u_bar)[(0, 0)]
        + (u_bar.transpose() * &stage.r_bar * &u_bar)[(0, 0)];
    for j in 0..n {
        let xj = states.column(j);
        let uj = actions.column(j);
        cost += alpha[j]
            * ((xj.transpose() * &stage.g_x * xj)[(0, 0)]
                + (uj.transpose() * &stage.g_u * uj)[(0, 0)]);
    }
    cost
}

/// `Σ_j α^j v^j` over the columns of `m`.
pub fn weighted_mean(m: &DMatrix<f64>, alpha: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(m.nrows());
    weighted_mean_into(m, alpha, &mut out);
    out
}

/// Allocation-free form of [`weighted_mean`] for hot loops.
pub fn weighted_mean_into(m: &DMatrix<f64>, alpha: &[f64], out: &mut DVector<f64>) {
    let d = m.nrows();
    debug_assert_eq!(out.len(), d);
    debug_assert_eq!(m.ncols(), alpha.len());
    out.fill(0.0);
    let data = m.as_slice();
    for (j, a) in alpha.iter().enumerate() {
        let col = &data[j * d..(j + 1) * d];
        for (o, v) in out.iter_mut().zip(col) {
            *o += a * v;
        }
    }
}
