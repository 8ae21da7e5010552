//! Monte Carlo simulation of the `n`-player game under linear strategy
//! profiles; the independent cross-check for costs and gaps.
//!
//! Determinism contract: the pair (seed, config) fully determines every
//! output bit, independent of the number of worker threads. Each
//! replication draws from its own counter-indexed stream, replications are
//! grouped into fixed-size batches, and batch partials are merged in batch
//! order.

use crate::equilibrium::Strategy;
use crate::model::{GameModel, NoiseModel, SampleFactor, WeightProfile};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Replications per deterministic work unit.
const BATCH: usize = 64;

/// Strategy assignment across players.
#[derive(Debug, Clone)]
pub enum ProfileSpec {
    Shared(Strategy),
    PerPlayer(Vec<Strategy>),
}

impl ProfileSpec {
    /// Strategy played by player `i`.
    pub fn strategy(&self, i: usize) -> &Strategy {
        match self {
            ProfileSpec::Shared(s) => s,
            ProfileSpec::PerPlayer(v) => &v[i],
        }
    }
}

/// Shape of the standardized draws; either way the draws are scaled to the
/// configured covariance, so matching results across the two witness the
/// distribution-freeness of the second-moment formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerKind {
    #[default]
    Gaussian,
    /// Uniform on `[−√3, √3]` per component (unit variance).
    Uniform,
}

/// Simulation parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Cost-to-go stages to report (1-based).
    pub t0s: Vec<usize>,
    /// Keep full state/action paths (only sensible for few replications).
    pub store_trajectories: bool,
    /// State sup-norm beyond which a replication counts as unstable.
    pub exclude_threshold: f64,
    pub sampler: SamplerKind,
}

impl SimConfig {
    pub fn new(n: usize, horizon: usize, replications: usize, seed: u64) -> Self {
        SimConfig {
            n,
            horizon,
            replications,
            seed,
            t0s: vec![1],
            store_trajectories: false,
            exclude_threshold: 1e12,
            sampler: SamplerKind::Gaussian,
        }
    }
}

/// One stored sample path.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub replication: usize,
    /// States for `t = 1..=T+1` (columns are players).
    pub states: Vec<DMatrix<f64>>,
    /// Actions for `t = 1..=T`.
    pub actions: Vec<DMatrix<f64>>,
}

/// Aggregated simulation output.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub config_n: usize,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub t0s: Vec<usize>,
    /// `mean_cost[k][i]`: mean cost-to-go of player `i` from `t0s[k]`.
    pub mean_cost: Vec<Vec<f64>>,
    /// Matching standard errors (unbiased, over replications).
    pub std_error: Vec<Vec<f64>>,
    /// Replications excluded as numerically unstable.
    pub excluded: usize,
    /// Mean realized deep state per step.
    pub deep_state_mean: Vec<DVector<f64>>,
    /// Componentwise variance of the realized deep state per step.
    pub deep_state_var: Vec<DVector<f64>>,
    pub trajectories: Option<Vec<TrajectorySample>>,
}

/// Common-random-numbers estimate of a performance gap at one stage.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GapEstimate {
    pub t0: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
}

/// Per-replication noise draws, reused across profiles for common random
/// numbers.
struct Draws {
    initial: DMatrix<f64>,
    noises: Vec<DMatrix<f64>>,
}

/// `out = A·X (+ out)` over column-major slices; beats the generic matrix
/// product at the small per-player dimensions that dominate here.
#[inline]
fn small_gemm(accumulate: bool, out: &mut [f64], a: &DMatrix<f64>, x: &[f64]) {
    let d_out = a.nrows();
    let d_in = a.ncols();
    let a_s = a.as_slice();
    for (ocol, xcol) in out.chunks_exact_mut(d_out).zip(x.chunks_exact(d_in)) {
        for (r, o) in ocol.iter_mut().enumerate() {
            let mut acc = if accumulate { *o } else { 0.0 };
            for (c, xv) in xcol.iter().enumerate() {
                acc += a_s[c * d_out + r] * xv;
            }
            *o = acc;
        }
    }
}

#[inline]
fn small_gemv(accumulate: bool, out: &mut DVector<f64>, a: &DMatrix<f64>, x: &DVector<f64>) {
    let d_out = a.nrows();
    let a_s = a.as_slice();
    for r in 0..d_out {
        let mut acc = if accumulate { out[r] } else { 0.0 };
        for (c, xv) in x.iter().enumerate() {
            acc += a_s[c * d_out + r] * xv;
        }
        out[r] = acc;
    }
}

struct Sampler {
    n: usize,
    d: usize,
    mean: Vec<DVector<f64>>,
    initial: SampleFactor,
    /// One factor per step (collapsed to one entry when constant).
    noise: Vec<SampleFactor>,
    horizon: usize,
    kind: SamplerKind,
}

impl Sampler {
    fn new(noise: &NoiseModel, n: usize, horizon: usize, kind: SamplerKind) -> Self {
        let d = noise.d_x();
        let mean = (0..n).map(|i| noise.mean_of(i)).collect();
        let (initial, _) = noise.initial_factor();
        let per_t: Vec<SampleFactor> = match &noise.noise {
            crate::model::NoiseCovSpec::Constant(_) => vec![noise.noise_factor(0).0],
            crate::model::NoiseCovSpec::PerStep(_) => {
                (0..horizon).map(|t| noise.noise_factor(t).0).collect()
            }
        };
        Sampler {
            n,
            d,
            mean,
            initial,
            noise: per_t,
            horizon,
            kind,
        }
    }

    fn sample(
        &self,
        factor: &SampleFactor,
        rng: &mut ChaCha8Rng,
        xi: &mut Vec<f64>,
        out: &mut DMatrix<f64>,
    ) {
        let (d, n) = (self.d, self.n);
        xi.clear();
        match self.kind {
            SamplerKind::Gaussian => {
                xi.extend((0..d * n).map(|_| rng.sample::<f64, _>(StandardNormal)))
            }
            SamplerKind::Uniform => {
                let half = 3.0f64.sqrt();
                xi.extend((0..d * n).map(|_| rng.random_range(-half..half)))
            }
        }
        match factor {
            SampleFactor::Shared(l) => {
                small_gemm(false, out.as_mut_slice(), l, xi);
            }
            SampleFactor::PerPlayer(ls) => {
                for (j, l) in ls.iter().enumerate() {
                    small_gemm(
                        false,
                        &mut out.as_mut_slice()[j * d..(j + 1) * d],
                        l,
                        &xi[j * d..(j + 1) * d],
                    );
                }
            }
            SampleFactor::Joint(l) => {
                // One draw over the whole stacked vector.
                small_gemm(false, out.as_mut_slice(), l, xi);
            }
        }
    }

    fn new_draws(&self) -> Draws {
        Draws {
            initial: DMatrix::zeros(self.d, self.n),
            noises: vec![DMatrix::zeros(self.d, self.n); self.horizon],
        }
    }

    fn draw_into(&self, rep: usize, seed: u64, xi: &mut Vec<f64>, draws: &mut Draws) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        self.sample(&self.initial, &mut rng, xi, &mut draws.initial);
        for (j, m) in self.mean.iter().enumerate() {
            let mut col = draws.initial.column_mut(j);
            col += m;
        }
        for t in 0..self.horizon {
            let factor = if self.noise.len() == 1 {
                &self.noise[0]
            } else {
                &self.noise[t.min(self.noise.len() - 1)]
            };
            self.sample(factor, &mut rng, xi, &mut draws.noises[t]);
        }
    }
}

/// Profile with per-step gain differences precomputed for the rollout
/// inner loop.
enum Compiled<'a> {
    Shared {
        strategy: &'a Strategy,
        /// `θ̄_t − θ_t` per step.
        dgain: Vec<DMatrix<f64>>,
    },
    PerPlayer(&'a [Strategy]),
}

impl<'a> Compiled<'a> {
    fn new(profile: &'a ProfileSpec, horizon: usize) -> Self {
        match profile {
            ProfileSpec::Shared(s) => Compiled::Shared {
                strategy: s,
                dgain: (0..horizon)
                    .map(|t| {
                        let (theta, theta_bar) = s.gains(t);
                        theta_bar - theta
                    })
                    .collect(),
            },
            ProfileSpec::PerPlayer(all) => Compiled::PerPlayer(all),
        }
    }

    /// Fill `sc.u` from the state and `sc.x_bar`.
    fn actions(&self, t: usize, x: &DMatrix<f64>, sc: &mut Scratch) {
        match self {
            Compiled::Shared { strategy, dgain } => {
                let (theta, _) = strategy.gains(t);
                small_gemm(false, sc.u.as_mut_slice(), theta, x.as_slice());
                match &strategy.reference {
                    crate::equilibrium::ReferenceSignal::DeepState => {
                        small_gemv(false, &mut sc.offset, &dgain[t], &sc.x_bar);
                    }
                    crate::equilibrium::ReferenceSignal::Predicted(p) => {
                        let z = &p.values[t.min(p.values.len() - 1)];
                        small_gemv(false, &mut sc.offset, &dgain[t], z);
                    }
                }
                let d_u = sc.offset.len();
                let data = sc.u.as_mut_slice();
                for col in data.chunks_exact_mut(d_u) {
                    for (v, o) in col.iter_mut().zip(sc.offset.iter()) {
                        *v += o;
                    }
                }
            }
            Compiled::PerPlayer(all) => {
                for (i, s) in all.iter().enumerate() {
                    let a = s.action(t, &x.column(i).into_owned(), &sc.x_bar);
                    sc.u.column_mut(i).copy_from(&a);
                }
            }
        }
    }
}

/// Reusable buffers for one worker's rollouts.
struct Scratch {
    x_bar: DVector<f64>,
    u_bar: DVector<f64>,
    offset: DVector<f64>,
    u: DMatrix<f64>,
    x_next: DMatrix<f64>,
    coupled: DVector<f64>,
    qx: DMatrix<f64>,
    gxx: DMatrix<f64>,
    ru: DMatrix<f64>,
    guu: DMatrix<f64>,
    s_xbar: DVector<f64>,
    s_ubar: DVector<f64>,
    w_xbar: DVector<f64>,
    w_ubar: DVector<f64>,
}

impl Scratch {
    fn new(d_x: usize, d_u: usize, n: usize) -> Self {
        Scratch {
            x_bar: DVector::zeros(d_x),
            u_bar: DVector::zeros(d_u),
            offset: DVector::zeros(d_u),
            u: DMatrix::zeros(d_u, n),
            x_next: DMatrix::zeros(d_x, n),
            coupled: DVector::zeros(d_x),
            qx: DMatrix::zeros(d_x, n),
            gxx: DMatrix::zeros(d_x, n),
            ru: DMatrix::zeros(d_u, n),
            guu: DMatrix::zeros(d_u, n),
            s_xbar: DVector::zeros(d_x),
            s_ubar: DVector::zeros(d_u),
            w_xbar: DVector::zeros(d_x),
            w_ubar: DVector::zeros(d_u),
        }
    }
}

/// Per-step costs of all players into `out`, using the scratch buffers.
fn step_costs(
    model: &GameModel,
    alpha: &[f64],
    t: usize,
    x: &DMatrix<f64>,
    sc: &mut Scratch,
    out: &mut Vec<f64>,
) {
    let stage = model.stage(t);
    let n = alpha.len();
    let d_x = x.nrows();
    let d_u = sc.u.nrows();
    small_gemm(false, sc.qx.as_mut_slice(), &stage.q, x.as_slice());
    small_gemm(false, sc.gxx.as_mut_slice(), &stage.g_x, x.as_slice());
    small_gemm(false, sc.ru.as_mut_slice(), &stage.r, sc.u.as_slice());
    small_gemm(false, sc.guu.as_mut_slice(), &stage.g_u, sc.u.as_slice());
    small_gemv(false, &mut sc.s_xbar, &stage.s_x, &sc.x_bar);
    small_gemv(false, &mut sc.s_ubar, &stage.s_u, &sc.u_bar);
    small_gemv(false, &mut sc.w_xbar, &stage.q_bar, &sc.x_bar);
    small_gemv(false, &mut sc.w_ubar, &stage.r_bar, &sc.u_bar);
    let shared = sc.x_bar.dot(&sc.w_xbar) + sc.u_bar.dot(&sc.w_ubar);

    let xs = x.as_slice();
    let us = sc.u.as_slice();
    let qxs = sc.qx.as_slice();
    let gxs = sc.gxx.as_slice();
    let rus = sc.ru.as_slice();
    let gus = sc.guu.as_slice();
    let mut g_sum = 0.0;
    for j in 0..n {
        let mut acc = 0.0;
        for r in 0..d_x {
            acc += xs[j * d_x + r] * gxs[j * d_x + r];
        }
        for r in 0..d_u {
            acc += us[j * d_u + r] * gus[j * d_u + r];
        }
        g_sum += alpha[j] * acc;
    }
    out.clear();
    for i in 0..n {
        let mut c = shared + g_sum;
        for r in 0..d_x {
            let xi = xs[i * d_x + r];
            c += xi * qxs[i * d_x + r] + 2.0 * xi * sc.s_xbar[r];
        }
        for r in 0..d_u {
            let ui = us[i * d_u + r];
            c += ui * rus[i * d_u + r] + 2.0 * ui * sc.s_ubar[r];
        }
        out.push(c);
    }
}

/// Rolled-out path of one replication under one profile.
struct Rollout {
    /// `costs[t][i]`, `t = 0..horizon`.
    costs: Vec<Vec<f64>>,
    deep: Vec<DVector<f64>>,
    unstable: bool,
    states: Option<Vec<DMatrix<f64>>>,
    actions: Option<Vec<DMatrix<f64>>>,
}

/// Propagate one replication from the stored state `x_start` at 0-based
/// stage `t_start`, using `draws` for the noise.
#[allow(clippy::too_many_arguments)]
fn rollout(
    model: &GameModel,
    alpha: &[f64],
    profile: &Compiled<'_>,
    draws: &Draws,
    x_start: DMatrix<f64>,
    t_start: usize,
    horizon: usize,
    threshold: f64,
    keep_paths: bool,
    sc: &mut Scratch,
) -> Rollout {
    let mut x = x_start;
    let mut costs = vec![Vec::new(); horizon];
    let mut deep = Vec::with_capacity(horizon - t_start);
    let mut unstable = false;
    let mut states = keep_paths.then(Vec::new);
    let mut actions = keep_paths.then(Vec::new);
    for t in t_start..horizon {
        crate::model::weighted_mean_into(&x, alpha, &mut sc.x_bar);
        deep.push(sc.x_bar.clone());
        profile.actions(t, &x, sc);
        {
            let (u, u_bar) = (&sc.u, &mut sc.u_bar);
            crate::model::weighted_mean_into(u, alpha, u_bar);
        }
        step_costs(model, alpha, t, &x, sc, &mut costs[t]);
        if let Some(s) = states.as_mut() {
            s.push(x.clone());
        }
        if let Some(a) = actions.as_mut() {
            a.push(sc.u.clone());
        }
        // x ← A x + B u + (Ā x̄ + B̄ ū) 𝟏ᵀ + w
        let stage = model.stage(t);
        small_gemv(false, &mut sc.coupled, &stage.a_bar, &sc.x_bar);
        small_gemv(true, &mut sc.coupled, &stage.b_bar, &sc.u_bar);
        small_gemm(false, sc.x_next.as_mut_slice(), &stage.a, x.as_slice());
        small_gemm(true, sc.x_next.as_mut_slice(), &stage.b, sc.u.as_slice());
        let d_x = sc.coupled.len();
        {
            let noise = draws.noises[t].as_slice();
            let data = sc.x_next.as_mut_slice();
            for (col, ncol) in data.chunks_exact_mut(d_x).zip(noise.chunks_exact(d_x)) {
                for ((v, c), w) in col.iter_mut().zip(sc.coupled.iter()).zip(ncol) {
                    *v += c + w;
                }
            }
        }
        std::mem::swap(&mut x, &mut sc.x_next);
        if x.amax() > threshold {
            unstable = true;
            break;
        }
    }
    if let Some(s) = states.as_mut() {
        s.push(x.clone());
    }
    Rollout {
        costs,
        deep,
        unstable,
        states,
        actions,
    }
}

fn cost_to_go(costs: &[Vec<f64>], t0: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for row in costs.iter().skip(t0 - 1) {
        if row.is_empty() {
            continue;
        }
        for (acc, c) in out.iter_mut().zip(row) {
            *acc += c;
        }
    }
    out
}

struct BatchStats {
    sum: Vec<Vec<f64>>,
    sumsq: Vec<Vec<f64>>,
    deep_sum: Vec<DVector<f64>>,
    deep_sumsq: Vec<DVector<f64>>,
    count: usize,
    excluded: usize,
    trajectories: Vec<TrajectorySample>,
}

/// Simulate the game under one profile.
pub fn simulate(
    model: &GameModel,
    noise: &NoiseModel,
    config: &SimConfig,
    profile: &ProfileSpec,
) -> Result<SimResult> {
    let n = config.n;
    if config.replications == 0 {
        return Err(Error::Precondition("need at least one replication".into()));
    }
    for &t0 in &config.t0s {
        if t0 == 0 || t0 > config.horizon {
            return Err(Error::Precondition(format!(
                "t0 = {t0} outside 1..={}",
                config.horizon
            )));
        }
    }
    let alpha = WeightProfile::Homogeneous { n }.realize()?;
    let sampler = Sampler::new(noise, n, config.horizon, config.sampler);
    let d = model.d_x();
    let batches: Vec<(usize, usize)> = (0..config.replications)
        .step_by(BATCH)
        .map(|lo| (lo, (lo + BATCH).min(config.replications)))
        .collect();

    let run_batch = |&(lo, hi): &(usize, usize)| -> BatchStats {
        let mut stats = BatchStats {
            sum: vec![vec![0.0; n]; config.t0s.len()],
            sumsq: vec![vec![0.0; n]; config.t0s.len()],
            deep_sum: vec![DVector::zeros(d); config.horizon],
            deep_sumsq: vec![DVector::zeros(d); config.horizon],
            count: 0,
            excluded: 0,
            trajectories: Vec::new(),
        };
        let compiled = Compiled::new(profile, config.horizon);
        let mut sc = Scratch::new(d, model.d_u(), n);
        let mut draws = sampler.new_draws();
        let mut xi = Vec::new();
        for rep in lo..hi {
            sampler.draw_into(rep, config.seed, &mut xi, &mut draws);
            let roll = rollout(
                model,
                &alpha,
                &compiled,
                &draws,
                draws.initial.clone(),
                0,
                config.horizon,
                config.exclude_threshold,
                config.store_trajectories,
                &mut sc,
            );
            if roll.unstable {
                stats.excluded += 1;
                continue;
            }
            stats.count += 1;
            for (k, &t0) in config.t0s.iter().enumerate() {
                let j = cost_to_go(&roll.costs, t0, n);
                for i in 0..n {
                    stats.sum[k][i] += j[i];
                    stats.sumsq[k][i] += j[i] * j[i];
                }
            }
            for (t, xb) in roll.deep.iter().enumerate() {
                stats.deep_sum[t] += xb;
                stats.deep_sumsq[t] += xb.component_mul(xb);
            }
            if config.store_trajectories {
                stats.trajectories.push(TrajectorySample {
                    replication: rep,
                    states: roll.states.unwrap_or_default(),
                    actions: roll.actions.unwrap_or_default(),
                });
            }
        }
        stats
    };

    let partials: Vec<BatchStats> = batches.par_iter().map(run_batch).collect();

    // Merge in batch order: bit-identical regardless of thread count.
    let mut sum = vec![vec![0.0; n]; config.t0s.len()];
    let mut sumsq = vec![vec![0.0; n]; config.t0s.len()];
    let mut deep_sum = vec![DVector::zeros(d); config.horizon];
    let mut deep_sumsq = vec![DVector::zeros(d); config.horizon];
    let mut count = 0usize;
    let mut excluded = 0usize;
    let mut trajectories = Vec::new();
    for b in partials {
        for k in 0..config.t0s.len() {
            for i in 0..n {
                sum[k][i] += b.sum[k][i];
                sumsq[k][i] += b.sumsq[k][i];
            }
        }
        for t in 0..config.horizon {
            deep_sum[t] += &b.deep_sum[t];
            deep_sumsq[t] += &b.deep_sumsq[t];
        }
        count += b.count;
        excluded += b.excluded;
        trajectories.extend(b.trajectories);
    }
    if count == 0 {
        return Err(Error::Unstable(
            "every replication was excluded as unstable".into(),
        ));
    }
    let cf = count as f64;
    let mean_cost: Vec<Vec<f64>> = sum
        .iter()
        .map(|row| row.iter().map(|s| s / cf).collect())
        .collect();
    let std_error: Vec<Vec<f64>> = sum
        .iter()
        .zip(&sumsq)
        .map(|(srow, qrow)| {
            srow.iter()
                .zip(qrow)
                .map(|(s, q)| {
                    if count > 1 {
                        let var = (q - s * s / cf) / (cf - 1.0);
                        (var.max(0.0) / cf).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let deep_state_mean: Vec<DVector<f64>> = deep_sum.iter().map(|v| v / cf).collect();
    let deep_state_var: Vec<DVector<f64>> = deep_sum
        .iter()
        .zip(&deep_sumsq)
        .map(|(s, q)| {
            let mean = s / cf;
            let mut v = q / cf - mean.component_mul(&mean);
            v.apply(|x| *x = x.max(0.0));
            v
        })
        .collect();
    Ok(SimResult {
        config_n: n,
        horizon: config.horizon,
        replications: config.replications,
        seed: config.seed,
        t0s: config.t0s.clone(),
        mean_cost,
        std_error,
        excluded,
        deep_state_mean,
        deep_state_var,
        trajectories: config.store_trajectories.then_some(trajectories),
    })
}

/// Common-random-numbers estimate of the performance gap at each stage in
/// `t0s`: both profiles are driven by identical draws; the reference
/// profile generates the history up to `t0`, then the runs branch.
///
/// With exchangeable (iid) noise the per-player differences share one mean,
/// so players are pooled within each replication; otherwise the worst
/// player's mean difference is reported.
#[allow(clippy::too_many_arguments)]
pub fn empirical_performance_gap(
    model: &GameModel,
    noise: &NoiseModel,
    n: usize,
    hat: &ProfileSpec,
    star: &ProfileSpec,
    replications: usize,
    seed: u64,
    t0s: &[usize],
    horizon: usize,
) -> Result<Vec<GapEstimate>> {
    if replications == 0 {
        return Err(Error::Precondition("need at least one replication".into()));
    }
    for &t0 in t0s {
        if t0 == 0 || t0 > horizon {
            return Err(Error::Precondition(format!(
                "t0 = {t0} outside 1..={horizon}"
            )));
        }
    }
    let alpha = WeightProfile::Homogeneous { n }.realize()?;
    let sampler = Sampler::new(noise, n, horizon, SamplerKind::Gaussian);
    let pooled = noise.player_symmetric();
    let threshold = 1e12;
    let batches: Vec<(usize, usize)> = (0..replications)
        .step_by(BATCH)
        .map(|lo| (lo, (lo + BATCH).min(replications)))
        .collect();

    struct GapBatch {
        /// per t0: per player (or pooled single slot) sums of differences
        sum: Vec<Vec<f64>>,
        sumsq: Vec<Vec<f64>>,
        count: usize,
    }

    let slots = if pooled { 1 } else { n };
    let d = model.d_x();
    let run_batch = |&(lo, hi): &(usize, usize)| -> GapBatch {
        let mut out = GapBatch {
            sum: vec![vec![0.0; slots]; t0s.len()],
            sumsq: vec![vec![0.0; slots]; t0s.len()],
            count: 0,
        };
        let hat_compiled = Compiled::new(hat, horizon);
        let star_compiled = Compiled::new(star, horizon);
        let mut sc = Scratch::new(d, model.d_u(), n);
        let mut draws = sampler.new_draws();
        let mut xi = Vec::new();
        // Branching at a later stage needs the reference states kept.
        let keep_paths = t0s.iter().any(|&t| t > 1);
        for rep in lo..hi {
            sampler.draw_into(rep, seed, &mut xi, &mut draws);
            let star_roll = rollout(
                model,
                &alpha,
                &star_compiled,
                &draws,
                draws.initial.clone(),
                0,
                horizon,
                threshold,
                keep_paths,
                &mut sc,
            );
            if star_roll.unstable {
                continue;
            }
            // All branches must stay stable for the replication to count.
            let hat_rolls: Vec<Rollout> = t0s
                .iter()
                .map(|&t0| {
                    if t0 == 1 {
                        rollout(
                            model,
                            &alpha,
                            &hat_compiled,
                            &draws,
                            draws.initial.clone(),
                            0,
                            horizon,
                            threshold,
                            false,
                            &mut sc,
                        )
                    } else {
                        rollout(
                            model,
                            &alpha,
                            &hat_compiled,
                            &draws,
                            star_roll.states.as_ref().expect("paths kept")[t0 - 1].clone(),
                            t0 - 1,
                            horizon,
                            threshold,
                            false,
                            &mut sc,
                        )
                    }
                })
                .collect();
            if hat_rolls.iter().any(|r| r.unstable) {
                continue;
            }
            out.count += 1;
            for (k, (&t0, hat_roll)) in t0s.iter().zip(&hat_rolls).enumerate() {
                let j_star = cost_to_go(&star_roll.costs, t0, n);
                let j_hat = cost_to_go(&hat_roll.costs, t0, n);
                if pooled {
                    let diff: f64 = j_hat
                        .iter()
                        .zip(&j_star)
                        .map(|(h, s)| h - s)
                        .sum::<f64>()
                        / n as f64;
                    out.sum[k][0] += diff;
                    out.sumsq[k][0] += diff * diff;
                } else {
                    for i in 0..n {
                        let diff = j_hat[i] - j_star[i];
                        out.sum[k][i] += diff;
                        out.sumsq[k][i] += diff * diff;
                    }
                }
            }
        }
        out
    };

    let partials: Vec<GapBatch> = batches.par_iter().map(run_batch).collect();
    let mut sum = vec![vec![0.0; slots]; t0s.len()];
    let mut sumsq = vec![vec![0.0; slots]; t0s.len()];
    let mut count = 0usize;
    for b in partials {
        for k in 0..t0s.len() {
            for s in 0..slots {
                sum[k][s] += b.sum[k][s];
                sumsq[k][s] += b.sumsq[k][s];
            }
        }
        count += b.count;
    }
    if count == 0 {
        return Err(Error::Unstable(
            "every replication was excluded as unstable".into(),
        ));
    }
    let cf = count as f64;
    let mut results = Vec::with_capacity(t0s.len());
    for (k, &t0) in t0s.iter().enumerate() {
        // Worst slot by |mean difference|.
        let mut best = (0usize, 0.0f64);
        for s in 0..slots {
            let mean = sum[k][s] / cf;
            if mean.abs() >= best.1.abs() {
                best = (s, mean);
            }
        }
        let s = best.0;
        let mean = best.1;
        let std_error = if count > 1 {
            let var = (sumsq[k][s] - sum[k][s] * sum[k][s] / cf) / (cf - 1.0);
            (var.max(0.0) / cf).sqrt()
        } else {
            0.0
        };
        results.push(GapEstimate {
            t0,
            estimate: mean,
            std_error,
            replications: count,
        });
    }
    Ok(results)
}
