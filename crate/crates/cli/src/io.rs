//! Output documents: gains JSON, simulation JSON, gap CSV, trajectory CSV.

use deeplq::riccati::{DecoupledSolution, RiccatiSolution, SolutionKind};
use deeplq::sim::SimResult;
use nalgebra::DMatrix;
use serde::Serialize;

pub const GAINS_SCHEMA: &str = "deeplq-gains/1";
pub const SIM_SCHEMA: &str = "deeplq-sim/1";
pub const CHECK_SCHEMA: &str = "deeplq-check/1";

/// CSV numbers carry 17 significant digits so they round-trip exactly.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[derive(Serialize)]
pub struct GainsStageDoc {
    pub t: usize,
    pub theta: Vec<Vec<f64>>,
    pub theta_bar: Vec<Vec<f64>>,
    pub p_lift: Vec<Vec<f64>>,
    pub p_dev: Vec<Vec<f64>>,
    pub min_eig_combo: f64,
    pub cond_f: f64,
    pub cond_f_bar: f64,
}

#[derive(Serialize)]
pub struct GainsDoc {
    pub schema: String,
    pub alpha: Option<f64>,
    pub kind: String,
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    pub d_x: usize,
    pub d_u: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub stages: Vec<GainsStageDoc>,
}

pub fn gains_doc(sol: &RiccatiSolution, d_x: usize, d_u: usize, kind: &str) -> GainsDoc {
    let (horizon, iterations, residual) = match sol.kind {
        SolutionKind::Finite { horizon } => (Some(horizon), None, None),
        SolutionKind::Algebraic {
            iterations,
            residual,
        } => (None, Some(iterations), Some(residual)),
    };
    GainsDoc {
        schema: GAINS_SCHEMA.into(),
        alpha: Some(sol.alpha),
        kind: kind.into(),
        horizon,
        discount: if sol.discount < 1.0 {
            Some(sol.discount)
        } else {
            None
        },
        d_x,
        d_u,
        iterations,
        residual,
        stages: sol
            .stages
            .iter()
            .enumerate()
            .map(|(idx, st)| GainsStageDoc {
                t: idx + 1,
                theta: rows(&st.theta),
                theta_bar: rows(&st.theta_bar),
                p_lift: rows(&st.p_lift),
                p_dev: rows(&st.p_dev),
                min_eig_combo: st.min_eig_combo,
                cond_f: st.cond_f,
                cond_f_bar: st.cond_f_bar,
            })
            .collect(),
    }
}

/// Social/decoupled solutions store the two standard blocks; the lifted
/// value is their block diagonal.
pub fn gains_doc_decoupled(
    sol: &DecoupledSolution,
    d_x: usize,
    d_u: usize,
    kind: &str,
    discount: Option<f64>,
) -> GainsDoc {
    let steps = sol.theta.len();
    GainsDoc {
        schema: GAINS_SCHEMA.into(),
        alpha: None,
        kind: kind.into(),
        horizon: if discount.is_none() { Some(steps) } else { None },
        discount,
        d_x,
        d_u,
        iterations: None,
        residual: None,
        stages: (0..steps)
            .map(|t| {
                let p_lift = deeplq::linalg::block_diag2(&sol.p1[t], &sol.p2[t]);
                GainsStageDoc {
                    t: t + 1,
                    theta: rows(&sol.theta[t]),
                    theta_bar: rows(&sol.theta_bar[t]),
                    p_lift: rows(&p_lift),
                    p_dev: rows(&sol.p1[t]),
                    min_eig_combo: f64::NAN,
                    cond_f: f64::NAN,
                    cond_f_bar: f64::NAN,
                }
            })
            .collect(),
    }
}

#[derive(Serialize)]
pub struct SimDoc {
    pub schema: String,
    pub n: usize,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub excluded: usize,
    pub t0s: Vec<usize>,
    /// `mean_cost[k][i]`: player `i`'s mean cost-to-go from `t0s[k]`.
    pub mean_cost: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
    pub deep_state_mean: Vec<Vec<f64>>,
    pub deep_state_var: Vec<Vec<f64>>,
}

pub fn sim_doc(result: &SimResult) -> SimDoc {
    SimDoc {
        schema: SIM_SCHEMA.into(),
        n: result.config_n,
        horizon: result.horizon,
        replications: result.replications,
        seed: result.seed,
        excluded: result.excluded,
        t0s: result.t0s.clone(),
        mean_cost: result.mean_cost.clone(),
        std_error: result.std_error.clone(),
        deep_state_mean: result
            .deep_state_mean
            .iter()
            .map(|v| v.iter().copied().collect())
            .collect(),
        deep_state_var: result
            .deep_state_var
            .iter()
            .map(|v| v.iter().copied().collect())
            .collect(),
    }
}

/// Stable gap CSV header (documented contract; `status` flags failed rows).
pub const GAP_CSV_HEADER: &str = "n,strategy,t0,gap_lyapunov,gap_mc,mc_stderr,n_times_gap,status";

pub struct GapCsvRow {
    pub n: usize,
    pub strategy: String,
    pub t0: usize,
    pub gap_lyapunov: Option<f64>,
    pub gap_mc: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub status: String,
}

pub fn gap_csv(rows: &[GapCsvRow]) -> String {
    let mut out = String::from(GAP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fmt = |v: &Option<f64>| v.map(sig17).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.strategy,
            r.t0,
            fmt(&r.gap_lyapunov),
            fmt(&r.gap_mc),
            fmt(&r.mc_stderr),
            fmt(&r.gap_lyapunov.map(|g| g * r.n as f64)),
            r.status
        ));
    }
    out
}

/// Trajectory CSV: one row per (replication, step, player); the final
/// state row of each path leaves the action columns empty.
pub fn trajectory_csv(result: &SimResult, d_x: usize, d_u: usize) -> String {
    let mut out = String::from("rep,t,player");
    for k in 0..d_x {
        out.push_str(&format!(",x{k}"));
    }
    for k in 0..d_u {
        out.push_str(&format!(",u{k}"));
    }
    out.push('\n');
    let Some(paths) = &result.trajectories else {
        return out;
    };
    for sample in paths {
        for (tz, x) in sample.states.iter().enumerate() {
            for i in 0..x.ncols() {
                out.push_str(&format!("{},{},{}", sample.replication, tz + 1, i + 1));
                for k in 0..d_x {
                    out.push(',');
                    out.push_str(&sig17(x[(k, i)]));
                }
                if tz < sample.actions.len() {
                    let u = &sample.actions[tz];
                    for k in 0..d_u {
                        out.push(',');
                        out.push_str(&sig17(u[(k, i)]));
                    }
                } else {
                    for _ in 0..d_u {
                        out.push(',');
                    }
                }
                out.push('\n');
            }
        }
    }
    out
}
