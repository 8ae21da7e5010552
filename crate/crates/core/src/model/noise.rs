//! Noise statistics: initial-state and per-step noise means/covariances,
//! and their images under the gauge transformation.

use super::ValidationReport;
use crate::linalg::{asymmetry, min_symmetric_eig, psd_factor, symmetrized};
use nalgebra::{DMatrix, DVector};

/// Minimum eigenvalue allowed before a covariance block counts as indefinite.
pub const PSD_TOL: f64 = -1e-10;

/// Initial-state means.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpec {
    /// Identical mean for every player.
    Shared(DVector<f64>),
    /// One mean per player.
    PerPlayer(Vec<DVector<f64>>),
}

/// Covariance of an `n · d_x` stacked random vector.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// Independent players, identical block.
    Shared(DMatrix<f64>),
    /// Independent players, one block per player.
    PerPlayer(Vec<DMatrix<f64>>),
    /// Arbitrarily correlated players: full `n·d_x × n·d_x` covariance.
    Joint(DMatrix<f64>),
}

/// Noise covariance, either constant over time or per step.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseCovSpec {
    Constant(CovarianceSpec),
    PerStep(Vec<CovarianceSpec>),
}

/// Gauge-transformed second moments of one stacked random vector, relative
/// to player `i`: `VAR(Δv^i)`, `COV(Δv^i, v̄)` and `VAR(v̄)` where
/// `Δv^i = v^i − v̄` and `v̄ = Σ_j α^j v^j`.
#[derive(Debug, Clone)]
pub struct GaugeMoments {
    pub var_dev: DMatrix<f64>,
    pub cov_dev_bar: DMatrix<f64>,
    pub var_bar: DMatrix<f64>,
}

impl GaugeMoments {
    /// `VAR(VEC(Δv^i, v̄))` as one `2d × 2d` matrix.
    pub fn lifted(&self) -> DMatrix<f64> {
        crate::linalg::block2x2(
            &self.var_dev,
            &self.cov_dev_bar,
            &self.cov_dev_bar.transpose(),
            &self.var_bar,
        )
    }
}

/// Sampling factor `L` with `L Lᵀ = covariance`, shaped like the spec.
#[derive(Debug, Clone)]
pub enum SampleFactor {
    Shared(DMatrix<f64>),
    PerPlayer(Vec<DMatrix<f64>>),
    Joint(DMatrix<f64>),
}

/// Initial-state and driving-noise statistics for an `n`-player game.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub mean: MeanSpec,
    pub initial: CovarianceSpec,
    pub noise: NoiseCovSpec,
    /// Asserts independent players with identical means (used to
    /// short-circuit per-player maxima).
    pub iid: bool,
    n: usize,
    d_x: usize,
}

impl NoiseModel {
    pub fn new(
        n: usize,
        d_x: usize,
        mean: MeanSpec,
        initial: CovarianceSpec,
        noise: NoiseCovSpec,
        iid: bool,
    ) -> Self {
        NoiseModel {
            mean,
            initial,
            noise,
            iid,
            n,
            d_x,
        }
    }

    /// Deterministic zero-noise model with zero means.
    pub fn zero(d_x: usize, n: usize) -> Self {
        NoiseModel {
            mean: MeanSpec::Shared(DVector::zeros(d_x)),
            initial: CovarianceSpec::Shared(DMatrix::zeros(d_x, d_x)),
            noise: NoiseCovSpec::Constant(CovarianceSpec::Shared(DMatrix::zeros(d_x, d_x))),
            iid: true,
            n,
            d_x,
        }
    }

    /// Independent Gaussian-style model: identical mean, identical initial
    /// and noise covariance blocks for every player.
    pub fn iid_shared(
        n: usize,
        mean: DVector<f64>,
        initial_cov: DMatrix<f64>,
        noise_cov: DMatrix<f64>,
    ) -> Self {
        let d_x = mean.len();
        NoiseModel {
            mean: MeanSpec::Shared(mean),
            initial: CovarianceSpec::Shared(initial_cov),
            noise: NoiseCovSpec::Constant(CovarianceSpec::Shared(noise_cov)),
            iid: true,
            n,
            d_x,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn mean_of(&self, i: usize) -> DVector<f64> {
        match &self.mean {
            MeanSpec::Shared(m) => m.clone(),
            MeanSpec::PerPlayer(ms) => ms[i].clone(),
        }
    }

    /// `E[x̄_1] = Σ_i α^i μ^i`.
    pub fn mean_deep_state(&self, alpha: &[f64]) -> DVector<f64> {
        match &self.mean {
            MeanSpec::Shared(m) => m.clone(),
            MeanSpec::PerPlayer(ms) => {
                let mut out = DVector::zeros(self.d_x);
                for (a, m) in alpha.iter().zip(ms) {
                    out.axpy(*a, m, 1.0);
                }
                out
            }
        }
    }

    /// Gauge moments of the initial state relative to player `i`.
    pub fn initial_gauge_moments(&self, alpha: &[f64], i: usize) -> GaugeMoments {
        gauge_moments(&self.initial, alpha, i, self.d_x)
    }

    /// Gauge moments of the step-`t` noise (0-based) relative to player `i`.
    pub fn noise_gauge_moments(&self, t: usize, alpha: &[f64], i: usize) -> GaugeMoments {
        gauge_moments(self.noise_at(t), alpha, i, self.d_x)
    }

    /// `VAR(Δx^j_1)` for every player `j`.
    pub fn initial_dev_variances(&self, alpha: &[f64]) -> Vec<DMatrix<f64>> {
        (0..self.n)
            .map(|j| gauge_moments(&self.initial, alpha, j, self.d_x).var_dev)
            .collect()
    }

    /// `VAR(Δw^j_t)` for every player `j`.
    pub fn noise_dev_variances(&self, t: usize, alpha: &[f64]) -> Vec<DMatrix<f64>> {
        (0..self.n)
            .map(|j| gauge_moments(self.noise_at(t), alpha, j, self.d_x).var_dev)
            .collect()
    }

    pub fn noise_at(&self, t: usize) -> &CovarianceSpec {
        match &self.noise {
            NoiseCovSpec::Constant(c) => c,
            NoiseCovSpec::PerStep(cs) => &cs[t.min(cs.len() - 1)],
        }
    }

    /// Whether all covariances are exactly zero (deterministic game).
    pub fn is_deterministic(&self, horizon: usize) -> bool {
        let zero = |c: &CovarianceSpec| match c {
            CovarianceSpec::Shared(m) | CovarianceSpec::Joint(m) => m.amax() == 0.0,
            CovarianceSpec::PerPlayer(ms) => ms.iter().all(|m| m.amax() == 0.0),
        };
        zero(&self.initial) && (0..horizon).all(|t| zero(self.noise_at(t)))
    }

    /// True when per-player blocks are identical and independent, so moments
    /// and costs do not depend on the player index.
    pub fn player_symmetric(&self) -> bool {
        let sym = |c: &CovarianceSpec| matches!(c, CovarianceSpec::Shared(_));
        let noise_sym = match &self.noise {
            NoiseCovSpec::Constant(c) => sym(c),
            NoiseCovSpec::PerStep(cs) => cs.iter().all(sym),
        };
        self.iid && matches!(self.mean, MeanSpec::Shared(_)) && sym(&self.initial) && noise_sym
    }

    /// Sampling factor for the initial state. Also returns the largest
    /// eigenvalue clipped during PSD repair.
    pub fn initial_factor(&self) -> (SampleFactor, f64) {
        factor(&self.initial)
    }

    pub fn noise_factor(&self, t: usize) -> (SampleFactor, f64) {
        factor(self.noise_at(t))
    }

    pub(super) fn validate(
        &self,
        d_x: usize,
        n: usize,
        horizon: Option<usize>,
        report: &mut ValidationReport,
    ) {
        if self.d_x != d_x {
            report.violations.push(super::Violation {
                location: "noise".into(),
                message: format!("noise dimension {} != model d_x {}", self.d_x, d_x),
            });
        }
        if self.n != n {
            report.violations.push(super::Violation {
                location: "noise".into(),
                message: format!("noise player count {} != weight profile n {}", self.n, n),
            });
        }
        match &self.mean {
            MeanSpec::Shared(m) => check_len(report, "noise.mean", m.len(), d_x),
            MeanSpec::PerPlayer(ms) => {
                check_len(report, "noise.mean", ms.len(), n);
                for (i, m) in ms.iter().enumerate() {
                    check_len(report, &format!("noise.mean[{i}]"), m.len(), d_x);
                }
            }
        }
        check_cov(report, "noise.initial_cov", &self.initial, d_x, n);
        match &self.noise {
            NoiseCovSpec::Constant(c) => check_cov(report, "noise.noise_cov", c, d_x, n),
            NoiseCovSpec::PerStep(cs) => {
                if let Some(t) = horizon {
                    if cs.len() != t {
                        report.violations.push(super::Violation {
                            location: "noise.noise_cov".into(),
                            message: format!("expected {} per-step blocks, got {}", t, cs.len()),
                        });
                    }
                }
                for (t, c) in cs.iter().enumerate() {
                    check_cov(report, &format!("noise.noise_cov[t={}]", t + 1), c, d_x, n);
                }
            }
        }
        if self.iid {
            if let MeanSpec::PerPlayer(ms) = &self.mean {
                let first = &ms[0];
                if ms.iter().any(|m| (m - first).amax() > 1e-12) {
                    report.violations.push(super::Violation {
                        location: "noise.iid".into(),
                        message: "iid flag requires identical means across players".into(),
                    });
                }
            }
            let joint = |c: &CovarianceSpec| matches!(c, CovarianceSpec::Joint(_));
            let noise_joint = match &self.noise {
                NoiseCovSpec::Constant(c) => joint(c),
                NoiseCovSpec::PerStep(cs) => cs.iter().any(joint),
            };
            if joint(&self.initial) || noise_joint {
                // A joint covariance is only iid-compatible when block diagonal.
                for (loc, spec) in std::iter::once(("noise.initial_cov", &self.initial)).chain(
                    match &self.noise {
                        NoiseCovSpec::Constant(c) => vec![("noise.noise_cov", c)],
                        NoiseCovSpec::PerStep(cs) => {
                            cs.iter().map(|c| ("noise.noise_cov", c)).collect()
                        }
                    },
                ) {
                    if let CovarianceSpec::Joint(m) = spec {
                        if !is_block_diagonal(m, d_x, 1e-12) {
                            report.violations.push(super::Violation {
                                location: loc.into(),
                                message: "iid flag requires block-diagonal joint covariance"
                                    .into(),
                            });
                        }
                    }
                }
            }
        }
    }
}

fn check_len(report: &mut ValidationReport, loc: &str, got: usize, want: usize) {
    if got != want {
        report.violations.push(super::Violation {
            location: loc.into(),
            message: format!("expected length {want}, got {got}"),
        });
    }
}

fn check_cov(
    report: &mut ValidationReport,
    loc: &str,
    cov: &CovarianceSpec,
    d_x: usize,
    n: usize,
) {
    let check_block = |report: &mut ValidationReport, loc: &str, m: &DMatrix<f64>, dim: usize| {
        if m.shape() != (dim, dim) {
            report.violations.push(super::Violation {
                location: loc.into(),
                message: format!("expected {dim}x{dim}, got {}x{}", m.nrows(), m.ncols()),
            });
            return;
        }
        if asymmetry(m) > 1e-10 {
            report.violations.push(super::Violation {
                location: loc.into(),
                message: "covariance block is asymmetric".into(),
            });
        }
        let min_eig = min_symmetric_eig(m);
        if min_eig < PSD_TOL {
            report.violations.push(super::Violation {
                location: loc.into(),
                message: format!("covariance not positive semidefinite (min eig {min_eig:.3e})"),
            });
        }
    };
    match cov {
        CovarianceSpec::Shared(m) => check_block(report, loc, m, d_x),
        CovarianceSpec::PerPlayer(ms) => {
            check_len(report, loc, ms.len(), n);
            for (i, m) in ms.iter().enumerate() {
                check_block(report, &format!("{loc}[{i}]"), m, d_x);
            }
        }
        CovarianceSpec::Joint(m) => check_block(report, loc, m, n * d_x),
    }
}

fn is_block_diagonal(m: &DMatrix<f64>, d: usize, tol: f64) -> bool {
    let n = m.nrows() / d;
    for bi in 0..n {
        for bj in 0..n {
            if bi != bj && m.view((bi * d, bj * d), (d, d)).amax() > tol {
                return false;
            }
        }
    }
    true
}

/// Exact gauge moments via the linear map `Δv^i = v^i − Σ_j α^j v^j`,
/// `v̄ = Σ_j α^j v^j` applied to the stacked covariance.
fn gauge_moments(cov: &CovarianceSpec, alpha: &[f64], i: usize, d: usize) -> GaugeMoments {
    let n = alpha.len();
    match cov {
        CovarianceSpec::Shared(sigma) => {
            let a2: f64 = alpha.iter().map(|a| a * a).sum();
            let var_bar = sigma * a2;
            let var_dev = sigma * (1.0 - 2.0 * alpha[i] + a2);
            let cov_dev_bar = sigma * (alpha[i] - a2);
            GaugeMoments {
                var_dev,
                cov_dev_bar,
                var_bar,
            }
        }
        CovarianceSpec::PerPlayer(sigmas) => {
            let mut var_bar = DMatrix::zeros(d, d);
            for (j, s) in sigmas.iter().enumerate() {
                var_bar += s * (alpha[j] * alpha[j]);
            }
            // VAR(v^i − v̄) = (1−α^i)² Σ_i + Σ_{j≠i} (α^j)² Σ_j
            let mut var_dev = &sigmas[i] * (1.0 - alpha[i]).powi(2);
            for (j, s) in sigmas.iter().enumerate() {
                if j != i {
                    var_dev += s * (alpha[j] * alpha[j]);
                }
            }
            // COV(v^i − v̄, v̄) = α^i Σ_i − VAR(v̄)
            let cov_dev_bar = &sigmas[i] * alpha[i] - &var_bar;
            GaugeMoments {
                var_dev,
                cov_dev_bar,
                var_bar,
            }
        }
        CovarianceSpec::Joint(sigma) => {
            let block = |j: usize, k: usize| sigma.view((j * d, k * d), (d, d));
            let mut var_dev = DMatrix::zeros(d, d);
            let mut cov_dev_bar = DMatrix::zeros(d, d);
            let mut var_bar = DMatrix::zeros(d, d);
            for j in 0..n {
                let cj = if j == i { 1.0 - alpha[j] } else { -alpha[j] };
                for k in 0..n {
                    let ck = if k == i { 1.0 - alpha[k] } else { -alpha[k] };
                    let b = block(j, k);
                    var_dev += b * (cj * ck);
                    cov_dev_bar += b * (cj * alpha[k]);
                    var_bar += b * (alpha[j] * alpha[k]);
                }
            }
            GaugeMoments {
                var_dev,
                cov_dev_bar,
                var_bar,
            }
        }
    }
}

fn factor(cov: &CovarianceSpec) -> (SampleFactor, f64) {
    match cov {
        CovarianceSpec::Shared(m) => {
            let (l, clip) = psd_factor(&symmetrized(m));
            (SampleFactor::Shared(l), clip)
        }
        CovarianceSpec::PerPlayer(ms) => {
            let mut clip_max = 0.0f64;
            let ls = ms
                .iter()
                .map(|m| {
                    let (l, clip) = psd_factor(&symmetrized(m));
                    clip_max = clip_max.max(clip);
                    l
                })
                .collect();
            (SampleFactor::PerPlayer(ls), clip_max)
        }
        CovarianceSpec::Joint(m) => {
            let (l, clip) = psd_factor(&symmetrized(m));
            (SampleFactor::Joint(l), clip)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute-force oracle: build the joint covariance, apply the gauge map
    /// row by row, compare against the block-specialized path.
    #[test]
    fn gauge_moments_match_joint_path() {
        let n = 4;
        let d = 2;
        let alpha = [0.1, 0.2, 0.3, 0.4];
        let blocks: Vec<DMatrix<f64>> = (0..n)
            .map(|j| {
                let s = 1.0 + j as f64;
                DMatrix::from_row_slice(2, 2, &[s, 0.3, 0.3, 0.5 + s])
            })
            .collect();
        let mut joint = DMatrix::zeros(n * d, n * d);
        for (j, b) in blocks.iter().enumerate() {
            joint.view_mut((j * d, j * d), (d, d)).copy_from(b);
        }
        for i in 0..n {
            let via_blocks = gauge_moments(&CovarianceSpec::PerPlayer(blocks.clone()), &alpha, i, d);
            let via_joint = gauge_moments(&CovarianceSpec::Joint(joint.clone()), &alpha, i, d);
            assert_abs_diff_eq!(via_blocks.var_dev, via_joint.var_dev, epsilon = 1e-12);
            assert_abs_diff_eq!(
                via_blocks.cov_dev_bar,
                via_joint.cov_dev_bar,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(via_blocks.var_bar, via_joint.var_bar, epsilon = 1e-12);
        }
    }

    #[test]
    fn shared_blocks_match_per_player() {
        let d = 1;
        let alpha = [0.25; 4];
        let sigma = DMatrix::from_element(1, 1, 2.0);
        let shared = gauge_moments(&CovarianceSpec::Shared(sigma.clone()), &alpha, 1, d);
        let per = gauge_moments(&CovarianceSpec::PerPlayer(vec![sigma; 4]), &alpha, 1, d);
        assert_abs_diff_eq!(shared.var_dev, per.var_dev, epsilon = 1e-15);
        assert_abs_diff_eq!(shared.cov_dev_bar, per.cov_dev_bar, epsilon = 1e-15);
        assert_abs_diff_eq!(shared.var_bar, per.var_bar, epsilon = 1e-15);
        // VAR(x̄) = σ²/n for homogeneous weights.
        assert_abs_diff_eq!(shared.var_bar[(0, 0)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn indefinite_covariance_is_flagged() {
        let mut report = ValidationReport::default();
        let cov = CovarianceSpec::Shared(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        check_cov(&mut report, "x", &cov, 2, 3);
        assert!(!report.is_valid());
    }
}
