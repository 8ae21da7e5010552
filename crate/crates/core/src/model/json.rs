//! On-disk model format.
//!
//! A model file is a JSON document:
//!
//! ```json
//! {
//!   "schema": "deeplq-model/1",
//!   "d_x": 1, "d_u": 1,
//!   "horizon": 50,
//!   "discount": 0.9,
//!   "matrices": { "A": [[1.0]], "B": [[1.0]], ... },
//!   "weights": { "type": "homogeneous", "n": 100 },
//!   "noise": { "mean": [10.0], "initial_cov": {"shared": [[2.0]]},
//!              "noise_cov": {"shared": [[1.0]]}, "iid": true }
//! }
//! ```
//!
//! `horizon` is a step count or the string `"stationary"`. Every matrix is
//! an array of rows, or an array of `T` such matrices for time-varying
//! models. `weights` and `noise` are optional (commands may supply them).
//! Unknown fields are rejected.

use super::{
    CovarianceSpec, GameModel, Horizon, MeanSpec, NoiseCovSpec, NoiseModel, StageMatrices,
    WeightProfile,
};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const MODEL_SCHEMA: &str = "deeplq-model/1";

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixOrSeq {
    Single(Rows),
    PerT(Vec<Rows>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum HorizonField {
    Steps(usize),
    Keyword(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatricesField {
    #[serde(rename = "A")]
    a: MatrixOrSeq,
    #[serde(rename = "A_bar")]
    a_bar: Option<MatrixOrSeq>,
    #[serde(rename = "B")]
    b: MatrixOrSeq,
    #[serde(rename = "B_bar")]
    b_bar: Option<MatrixOrSeq>,
    #[serde(rename = "Q")]
    q: Option<MatrixOrSeq>,
    #[serde(rename = "S_x")]
    s_x: Option<MatrixOrSeq>,
    #[serde(rename = "Q_bar")]
    q_bar: Option<MatrixOrSeq>,
    #[serde(rename = "G_x")]
    g_x: Option<MatrixOrSeq>,
    #[serde(rename = "R")]
    r: Option<MatrixOrSeq>,
    #[serde(rename = "S_u")]
    s_u: Option<MatrixOrSeq>,
    #[serde(rename = "R_bar")]
    r_bar: Option<MatrixOrSeq>,
    #[serde(rename = "G_u")]
    g_u: Option<MatrixOrSeq>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsField {
    Homogeneous { n: usize },
    Positive { alpha: Vec<f64> },
    Vanishing { gamma: Vec<f64>, gamma_max: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MeanField {
    Shared(Vec<f64>),
    PerPlayer(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum CovField {
    Shared(Rows),
    PerPlayer(Vec<Rows>),
    Joint(Rows),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NoiseCovField {
    One(CovField),
    PerT { per_t: Vec<CovField> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseField {
    mean: MeanField,
    initial_cov: CovField,
    noise_cov: NoiseCovField,
    #[serde(default)]
    iid: bool,
}

/// Parsed model file prior to numeric validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    schema: String,
    d_x: usize,
    d_u: usize,
    horizon: HorizonField,
    #[serde(skip_serializing_if = "Option::is_none")]
    discount: Option<f64>,
    matrices: MatricesField,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<WeightsField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseField>,
}

fn to_matrix(rows: &Rows, what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::InvalidModel(format!("{what}: empty matrix")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidModel(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn expand(
    field: &Option<MatrixOrSeq>,
    name: &str,
    horizon: usize,
    rows: usize,
    cols: usize,
) -> Result<Vec<DMatrix<f64>>> {
    match field {
        None => Ok(vec![DMatrix::zeros(rows, cols); horizon]),
        Some(MatrixOrSeq::Single(m)) => Ok(vec![to_matrix(m, name)?; horizon]),
        Some(MatrixOrSeq::PerT(ms)) => {
            if ms.len() != horizon {
                return Err(Error::InvalidModel(format!(
                    "{name}: expected {horizon} matrices, got {}",
                    ms.len()
                )));
            }
            ms.iter().map(|m| to_matrix(m, name)).collect()
        }
    }
}

/// Parse a model document into the validated triple
/// `(model, weights, noise)`; the latter two are present only when the file
/// carries them.
pub fn model_from_json(
    text: &str,
) -> Result<(GameModel, Option<WeightProfile>, Option<NoiseModel>)> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidModel(format!("model file does not parse: {e}")))?;
    if file.schema != MODEL_SCHEMA {
        return Err(Error::InvalidModel(format!(
            "unsupported schema {:?}, expected {MODEL_SCHEMA:?}",
            file.schema
        )));
    }
    let horizon = match &file.horizon {
        HorizonField::Steps(t) => Horizon::Finite(*t),
        HorizonField::Keyword(k) if k == "stationary" => Horizon::Stationary,
        HorizonField::Keyword(k) => {
            return Err(Error::InvalidModel(format!(
                "horizon must be a step count or \"stationary\", got {k:?}"
            )))
        }
    };
    let steps = match horizon {
        Horizon::Finite(t) => t,
        Horizon::Stationary => 1,
    };
    let (dx, du) = (file.d_x, file.d_u);
    let m = &file.matrices;
    let a = expand(&Some(m.a.clone()), "A", steps, dx, dx)?;
    let b = expand(&Some(m.b.clone()), "B", steps, dx, du)?;
    let a_bar = expand(&m.a_bar, "A_bar", steps, dx, dx)?;
    let b_bar = expand(&m.b_bar, "B_bar", steps, dx, du)?;
    let q = expand(&m.q, "Q", steps, dx, dx)?;
    let s_x = expand(&m.s_x, "S_x", steps, dx, dx)?;
    let q_bar = expand(&m.q_bar, "Q_bar", steps, dx, dx)?;
    let g_x = expand(&m.g_x, "G_x", steps, dx, dx)?;
    let r = expand(&m.r, "R", steps, du, du)?;
    let s_u = expand(&m.s_u, "S_u", steps, du, du)?;
    let r_bar = expand(&m.r_bar, "R_bar", steps, du, du)?;
    let g_u = expand(&m.g_u, "G_u", steps, du, du)?;

    let stages: Vec<StageMatrices> = (0..steps)
        .map(|t| StageMatrices {
            a: a[t].clone(),
            a_bar: a_bar[t].clone(),
            b: b[t].clone(),
            b_bar: b_bar[t].clone(),
            q: q[t].clone(),
            s_x: s_x[t].clone(),
            q_bar: q_bar[t].clone(),
            g_x: g_x[t].clone(),
            r: r[t].clone(),
            s_u: s_u[t].clone(),
            r_bar: r_bar[t].clone(),
            g_u: g_u[t].clone(),
        })
        .collect();
    let model = GameModel::new(dx, du, horizon, file.discount, stages)?;

    let weights = file.weights.map(|w| match w {
        WeightsField::Homogeneous { n } => WeightProfile::Homogeneous { n },
        WeightsField::Positive { alpha } => WeightProfile::Positive { alpha },
        WeightsField::Vanishing { gamma, gamma_max } => {
            WeightProfile::Vanishing { gamma, gamma_max }
        }
    });

    let noise = match file.noise {
        None => None,
        Some(nf) => {
            let n = weights.as_ref().map(|w| w.n());
            Some(noise_from_field(nf, dx, n)?)
        }
    };
    Ok((model, weights, noise))
}

fn cov_from_field(f: &CovField, what: &str) -> Result<CovarianceSpec> {
    Ok(match f {
        CovField::Shared(m) => CovarianceSpec::Shared(to_matrix(m, what)?),
        CovField::PerPlayer(ms) => CovarianceSpec::PerPlayer(
            ms.iter()
                .map(|m| to_matrix(m, what))
                .collect::<Result<_>>()?,
        ),
        CovField::Joint(m) => CovarianceSpec::Joint(to_matrix(m, what)?),
    })
}

fn noise_from_field(nf: NoiseField, d_x: usize, n_hint: Option<usize>) -> Result<NoiseModel> {
    let mean = match nf.mean {
        MeanField::Shared(v) => MeanSpec::Shared(DVector::from_vec(v)),
        MeanField::PerPlayer(vs) => {
            MeanSpec::PerPlayer(vs.into_iter().map(DVector::from_vec).collect())
        }
    };
    let initial = cov_from_field(&nf.initial_cov, "initial_cov")?;
    let noise = match &nf.noise_cov {
        NoiseCovField::One(c) => NoiseCovSpec::Constant(cov_from_field(c, "noise_cov")?),
        NoiseCovField::PerT { per_t } => NoiseCovSpec::PerStep(
            per_t
                .iter()
                .map(|c| cov_from_field(c, "noise_cov"))
                .collect::<Result<_>>()?,
        ),
    };
    // Infer the player count from the weights, or from per-player data.
    let n = n_hint
        .or(match &mean {
            MeanSpec::PerPlayer(ms) => Some(ms.len()),
            _ => None,
        })
        .or(match &initial {
            CovarianceSpec::PerPlayer(ms) => Some(ms.len()),
            CovarianceSpec::Joint(m) => Some(m.nrows() / d_x.max(1)),
            _ => None,
        })
        .ok_or_else(|| {
            Error::MissingData(
                "cannot infer player count: provide weights or per-player noise data".into(),
            )
        })?;
    Ok(NoiseModel::new(n, d_x, mean, initial, noise, nf.iid))
}

/// Serialize a model (plus optional weights and shared-block noise) back to
/// the document format.
pub fn model_to_json(
    model: &GameModel,
    weights: Option<&WeightProfile>,
    noise: Option<&NoiseModel>,
) -> Result<String> {
    let steps = model.stages().len();
    let pick = |f: fn(&StageMatrices) -> &DMatrix<f64>| -> Option<MatrixOrSeq> {
        let all: Vec<&DMatrix<f64>> = model.stages().iter().map(f).collect();
        if all.iter().all(|m| m.amax() == 0.0) {
            return None;
        }
        if steps == 1 || all.windows(2).all(|w| w[0] == w[1]) {
            Some(MatrixOrSeq::Single(from_matrix(all[0])))
        } else {
            Some(MatrixOrSeq::PerT(all.iter().map(|m| from_matrix(m)).collect()))
        }
    };
    let file = ModelFile {
        schema: MODEL_SCHEMA.to_string(),
        d_x: model.d_x(),
        d_u: model.d_u(),
        horizon: match model.horizon() {
            Horizon::Finite(t) => HorizonField::Steps(t),
            Horizon::Stationary => HorizonField::Keyword("stationary".into()),
        },
        discount: model.discount(),
        matrices: MatricesField {
            a: pick(|s| &s.a).unwrap_or(MatrixOrSeq::Single(from_matrix(&model.stage(0).a))),
            a_bar: pick(|s| &s.a_bar),
            b: pick(|s| &s.b).unwrap_or(MatrixOrSeq::Single(from_matrix(&model.stage(0).b))),
            b_bar: pick(|s| &s.b_bar),
            q: pick(|s| &s.q),
            s_x: pick(|s| &s.s_x),
            q_bar: pick(|s| &s.q_bar),
            g_x: pick(|s| &s.g_x),
            r: pick(|s| &s.r),
            s_u: pick(|s| &s.s_u),
            r_bar: pick(|s| &s.r_bar),
            g_u: pick(|s| &s.g_u),
        },
        weights: weights.map(|w| match w {
            WeightProfile::Homogeneous { n } => WeightsField::Homogeneous { n: *n },
            WeightProfile::Positive { alpha } => WeightsField::Positive {
                alpha: alpha.clone(),
            },
            WeightProfile::Vanishing { gamma, gamma_max } => WeightsField::Vanishing {
                gamma: gamma.clone(),
                gamma_max: *gamma_max,
            },
        }),
        noise: noise.map(noise_to_field),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::InvalidModel(e.to_string()))
}

fn cov_to_field(c: &CovarianceSpec) -> CovField {
    match c {
        CovarianceSpec::Shared(m) => CovField::Shared(from_matrix(m)),
        CovarianceSpec::PerPlayer(ms) => CovField::PerPlayer(ms.iter().map(from_matrix).collect()),
        CovarianceSpec::Joint(m) => CovField::Joint(from_matrix(m)),
    }
}

fn noise_to_field(n: &NoiseModel) -> NoiseField {
    NoiseField {
        mean: match &n.mean {
            MeanSpec::Shared(m) => MeanField::Shared(m.iter().copied().collect()),
            MeanSpec::PerPlayer(ms) => {
                MeanField::PerPlayer(ms.iter().map(|m| m.iter().copied().collect()).collect())
            }
        },
        initial_cov: cov_to_field(&n.initial),
        noise_cov: match &n.noise {
            NoiseCovSpec::Constant(c) => NoiseCovField::One(cov_to_field(c)),
            NoiseCovSpec::PerStep(cs) => NoiseCovField::PerT {
                per_t: cs.iter().map(cov_to_field).collect(),
            },
        },
        iid: n.iid,
    }
}
