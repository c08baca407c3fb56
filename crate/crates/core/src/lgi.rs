//! Three-time Leggett–Garg correlators for quantum dynamics and for finite
//! models that re-prepare on measurement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontomodel::{predict_with, FiniteOntModel};
use crate::qcore::{CMatrix, CVector, ProjMeasurement, StateVector, UnitaryMap};
use crate::zoo::{emmr_toy_model, kochen_specker_model, lgi_fragment, SphereGrid};

pub const K_CONVENTION: &str = "K = C12 + C23 - C13 (outcome 0 -> +1, outcome 1 -> -1); macro-realist bound K <= 1";

/// Values assigned to the two outcomes.
const VALUES: [f64; 2] = [1.0, -1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct LgiProtocol {
    measurement: ProjMeasurement,
    step: UnitaryMap,
    /// Measurement times as step counts, strictly increasing.
    times: [u32; 3],
}

impl LgiProtocol {
    pub fn new(measurement: ProjMeasurement, step: UnitaryMap) -> Result<Self> {
        Self::with_times(measurement, step, [0, 1, 2])
    }

    pub fn with_times(measurement: ProjMeasurement, step: UnitaryMap, times: [u32; 3]) -> Result<Self> {
        if measurement.len() != 2 {
            return Err(Error::InvalidMeasurement(format!(
                "correlators need a dichotomic measurement, got {} outcomes",
                measurement.len()
            )));
        }
        if measurement.dim() != step.dim() {
            return Err(Error::DimensionMismatch { expected: measurement.dim(), found: step.dim() });
        }
        if !(times[0] < times[1] && times[1] < times[2]) {
            return Err(Error::Parameter(format!("times must increase, got {times:?}")));
        }
        Ok(Self { measurement, step, times })
    }

    pub fn measurement(&self) -> &ProjMeasurement {
        &self.measurement
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlators {
    pub c12: f64,
    pub c23: f64,
    pub c13: f64,
    pub k: f64,
}

impl Correlators {
    fn from_pairs(c12: f64, c23: f64, c13: f64) -> Self {
        Self { c12, c23, c13, k: c12 + c23 - c13 }
    }
}

/// Equal-weight ensemble over the rank-one eigenvectors of `m`.
pub fn eigen_mixture(m: &ProjMeasurement) -> Result<Vec<(f64, StateVector)>> {
    let v: Vec<StateVector> = (0..m.len())
        .map(|k| m.rank_one_vector(k))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidMeasurement("eigen-mixture needs rank-one projectors".into()))?;
    let w = 1.0 / v.len() as f64;
    Ok(v.into_iter().map(|s| (w, s)).collect())
}

/// Two-time correlator with Lüders update at the first time.
fn quantum_pair(p: &LgiProtocol, initial: &[(f64, StateVector)], t_a: u32, t_b: u32) -> Result<f64> {
    let u = p.step.matrix();
    let evolve = |v: &CVector, steps: u32| (0..steps).fold(v.clone(), |acc, _| u * acc);
    let mut c = 0.0;
    for (w, s) in initial {
        let first = evolve(s.as_vector(), t_a);
        for (a, pa) in p.measurement.projectors().iter().enumerate() {
            let collapsed: CVector = pa * &first;
            let prob_a = collapsed.norm_squared();
            if prob_a <= 0.0 {
                continue;
            }
            let later = evolve(&collapsed, t_b - t_a);
            for (b, pb) in p.measurement.projectors().iter().enumerate() {
                // Unnormalized: already weighted by prob_a.
                let prob_ab = (pb * &later).norm_squared();
                c += w * prob_ab * VALUES[a] * VALUES[b];
            }
        }
    }
    Ok(c)
}

pub fn quantum_correlators(p: &LgiProtocol, initial: &[(f64, StateVector)]) -> Result<Correlators> {
    for (_, s) in initial {
        if s.dim() != p.measurement.dim() {
            return Err(Error::DimensionMismatch { expected: p.measurement.dim(), found: s.dim() });
        }
    }
    let [t1, t2, t3] = p.times;
    Ok(Correlators::from_pairs(
        quantum_pair(p, initial, t1, t2)?,
        quantum_pair(p, initial, t2, t3)?,
        quantum_pair(p, initial, t1, t3)?,
    ))
}

/// How a model realizes a protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelProtocol {
    pub response: String,
    pub map: String,
    pub outcomes: [String; 2],
    pub times: [u32; 3],
}

impl ModelProtocol {
    pub fn new(response: &str, map: &str, outcomes: [&str; 2]) -> Self {
        Self {
            response: response.into(),
            map: map.into(),
            outcomes: outcomes.map(String::from),
            times: [0, 1, 2],
        }
    }
}

/// Uniform mixture over the first declared eigenstate preparation of each
/// macro value.
pub fn eigen_preparation_mixture(model: &FiniteOntModel) -> Result<Vec<f64>> {
    let preps: Vec<&[f64]> = model
        .eigenstate_preps
        .iter()
        .map(|(q, names)| {
            let name = names.first().ok_or_else(|| Error::MissingEigenstates(q.clone()))?;
            model.preparation(name)
        })
        .collect::<Result<_>>()?;
    if preps.is_empty() {
        return Err(Error::MissingEigenstates("any value".into()));
    }
    let w = 1.0 / preps.len() as f64;
    let mut mu = vec![0.0; model.atoms];
    for p in preps {
        for (m, x) in mu.iter_mut().zip(p) {
            *m += w * x;
        }
    }
    Ok(mu)
}

/// Correlators by walking the outcome tree: measure, re-prepare by the
/// update rule, evolve, measure again.
pub fn model_correlators(model: &FiniteOntModel, p: &ModelProtocol, initial: &[f64]) -> Result<Correlators> {
    let resp = model.response(&p.response)?;
    if resp.len() != 2 {
        return Err(Error::InvalidMeasurement(format!("response `{}` is not dichotomic", p.response)));
    }
    let map = model.map(&p.map)?;
    let rules = model
        .updates
        .get(&p.response)
        .ok_or_else(|| Error::InvalidModel(format!("no update rule for `{}`", p.response)))?;
    let mut after = Vec::with_capacity(2);
    for label in &p.outcomes {
        let name = rules
            .get(label)
            .ok_or_else(|| Error::InvalidModel(format!("no update rule for outcome `{label}`")))?;
        after.push(model.preparation(name)?.to_vec());
    }
    let evolve = |mu: &[f64], steps: u32| (0..steps).fold(mu.to_vec(), |acc, _| map.apply(&acc));
    let pair = |t_a: u32, t_b: u32| {
        let pa = predict_with(&evolve(initial, t_a), resp);
        let mut c = 0.0;
        for a in 0..2 {
            if pa[a] <= 0.0 {
                continue;
            }
            let pb = predict_with(&evolve(&after[a], t_b - t_a), resp);
            for b in 0..2 {
                c += pa[a] * pb[b] * VALUES[a] * VALUES[b];
            }
        }
        c
    };
    let [t1, t2, t3] = p.times;
    Ok(Correlators::from_pairs(pair(t1, t2), pair(t2, t3), pair(t1, t3)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LgiModel {
    Quantum,
    Ks { nodes: usize },
    EmmrToy,
}

impl LgiModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Quantum => "quantum",
            Self::Ks { .. } => "ks",
            Self::EmmrToy => "emmr-toy",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LgiRow {
    pub theta: f64,
    pub c12: f64,
    pub c23: f64,
    pub c13: f64,
    pub k: f64,
    pub model: String,
}

/// `K` at a single per-step Bloch rotation angle about y, measuring z.
pub fn lgi_point(theta: f64, model: LgiModel, grid: Option<&SphereGrid>) -> Result<Correlators> {
    let fragment = lgi_fragment(theta);
    let proto = ModelProtocol::new("z", "step", ["q0", "q1"]);
    match model {
        LgiModel::Quantum => {
            let m = fragment.macro_measurement().clone();
            let p = LgiProtocol::new(m.clone(), fragment.unitary("step")?.clone())?;
            quantum_correlators(&p, &eigen_mixture(&m)?)
        }
        LgiModel::Ks { nodes } => {
            let owned;
            let grid = match grid {
                Some(g) => g,
                None => {
                    owned = SphereGrid::fibonacci(nodes)?;
                    &owned
                }
            };
            let m = kochen_specker_model(grid, &fragment)?;
            model_correlators(&m, &proto, &eigen_preparation_mixture(&m)?)
        }
        LgiModel::EmmrToy => {
            let m = emmr_toy_model(theta);
            model_correlators(&m, &proto, &eigen_preparation_mixture(&m)?)
        }
    }
}

/// One row per angle, in input order.
pub fn lgi_scan(thetas: &[f64], model: LgiModel) -> Result<Vec<LgiRow>> {
    let grid = match model {
        LgiModel::Ks { nodes } => Some(SphereGrid::fibonacci(nodes)?),
        _ => None,
    };
    thetas
        .par_iter()
        .enumerate()
        .map(|(index, &theta)| {
            let c = lgi_point(theta, model, grid.as_ref()).map_err(|e| Error::Row { index, source: Box::new(e) })?;
            Ok(LgiRow { theta, c12: c.c12, c23: c.c23, c13: c.c13, k: c.k, model: model.name().into() })
        })
        .collect()
}

/// Joint probability `p(a at t_a, b at t_b)` by explicit matrix products,
/// for cross-checking.
pub fn sequence_probability(
    p: &LgiProtocol,
    state: &StateVector,
    (t_a, a): (u32, usize),
    (t_b, b): (u32, usize),
) -> Result<f64> {
    let d = state.dim();
    if d != p.measurement.dim() {
        return Err(Error::DimensionMismatch { expected: p.measurement.dim(), found: d });
    }
    let pow = |n: u32| (0..n).fold(CMatrix::identity(d, d), |acc, _| p.step.matrix() * acc);
    let proj = p.measurement.projectors();
    let chain = &proj[b] * pow(t_b - t_a) * &proj[a] * pow(t_a);
    Ok((chain * state.as_vector()).norm_squared())
}
