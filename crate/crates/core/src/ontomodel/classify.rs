use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fragment::QuantumFragment;
use super::model::{Bindings, FiniteOntModel};
use super::overlap::{support, SUPPORT_EPS};
use crate::error::{Error, Result};

/// Largest L1 residual at which a preparation counts as an eigenstate mixture.
pub const MIXTURE_TOL: f64 = 1e-9;
/// Response entries within this of 0 or 1 count as deterministic.
pub const DETERMINISM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MacroRealism {
    Emmr,
    Esmr,
    Ssmr,
    None,
}

impl std::fmt::Display for MacroRealism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Emmr => "EMMR",
            Self::Esmr => "ESMR",
            Self::Ssmr => "SSMR",
            Self::None => "NONE",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportViolation {
    pub preparation: String,
    pub atom: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureViolation {
    pub preparation: String,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminismViolation {
    pub preparation: String,
    pub atom: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: MacroRealism,
    /// Size of the union of eigenstate-preparation supports.
    pub eigenstate_support: usize,
    pub max_mixture_residual: f64,
    pub support_violation: Option<SupportViolation>,
    pub mixture_violation: Option<MixtureViolation>,
    pub determinism_violation: Option<DeterminismViolation>,
}

/// Decides which macro-realist class the model falls in, relative to its
/// declared operational-eigenstate preparations.
pub fn classify(model: &FiniteOntModel, fragment: &QuantumFragment, bindings: &Bindings) -> Result<Classification> {
    model.check()?;
    let macro_name = fragment.macro_name();
    let resp_name = bindings
        .response_for(macro_name)
        .ok_or_else(|| Error::Unbound(format!("macro observable `{macro_name}` has no response function")))?;
    let resp = model.response(resp_name)?;
    let outcomes = fragment.macro_measurement().outcomes();
    if resp.len() != outcomes.len() {
        return Err(Error::InvalidModel(format!("response `{resp_name}` has the wrong outcome count")));
    }

    let mut eigen_names = Vec::new();
    for (k, q) in outcomes.iter().enumerate() {
        let names = model.eigenstate_preps.get(q).filter(|v| !v.is_empty()).ok_or_else(|| Error::MissingEigenstates(q.clone()))?;
        for name in names {
            let p = model.predict(name, resp_name)?[k];
            if (1.0 - p).abs() > DETERMINISM_TOL {
                return Err(Error::InvalidModel(format!(
                    "eigenstate preparation `{name}` yields `{q}` with probability {p}"
                )));
            }
            eigen_names.push(name.as_str());
        }
    }
    let eigen: Vec<&[f64]> = eigen_names.iter().map(|n| model.preparation(n)).collect::<Result<_>>()?;
    let accessible: BTreeSet<usize> = eigen.iter().flat_map(|w| support(w)).collect();

    let mut support_violation = None;
    let mut mixture_violation: Option<MixtureViolation> = None;
    let mut determinism_violation = None;
    let mut max_mixture_residual: f64 = 0.0;
    for (name, w) in &model.preparations {
        if support_violation.is_none() {
            if let Some(atom) = support(w).find(|i| !accessible.contains(i)) {
                support_violation = Some(SupportViolation { preparation: name.clone(), atom, weight: w[atom] });
            }
        }
        let residual = mixture_residual(&eigen, w);
        max_mixture_residual = max_mixture_residual.max(residual);
        if residual > MIXTURE_TOL && mixture_violation.as_ref().is_none_or(|m| residual > m.residual) {
            mixture_violation = Some(MixtureViolation { preparation: name.clone(), residual });
        }
        if determinism_violation.is_none() {
            let soft = support(w).find(|&j| {
                resp.iter().any(|row| row[j].min(1.0 - row[j]).abs() > DETERMINISM_TOL)
            });
            if let Some(atom) = soft {
                determinism_violation = Some(DeterminismViolation { preparation: name.clone(), atom });
            }
        }
    }

    let supported = support_violation.is_none();
    let mixtures = mixture_violation.is_none();
    let deterministic = determinism_violation.is_none();
    let class = match (supported, mixtures, deterministic) {
        (true, true, _) => MacroRealism::Emmr,
        (true, false, _) => MacroRealism::Esmr,
        (false, _, true) => MacroRealism::Ssmr,
        _ => MacroRealism::None,
    };
    Ok(Classification {
        class,
        eigenstate_support: accessible.len(),
        max_mixture_residual,
        support_violation,
        mixture_violation,
        determinism_violation,
    })
}

/// L1 distance from `target` to the closest non-negative combination of
/// `columns` in the least-squares sense.
pub fn mixture_residual(columns: &[&[f64]], target: &[f64]) -> f64 {
    let c = nnls(columns, target);
    (0..target.len())
        .map(|i| (columns.iter().zip(&c).map(|(col, w)| w * col[i]).sum::<f64>() - target[i]).abs())
        .sum()
}

/// Lawson–Hanson active-set NNLS on the normal equations. The number of
/// columns is small, so the Gram matrix is cheap to form.
pub fn nnls(columns: &[&[f64]], target: &[f64]) -> Vec<f64> {
    let k = columns.len();
    if k == 0 {
        return Vec::new();
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let g = DMatrix::from_fn(k, k, |i, j| dot(columns[i], columns[j]));
    let h = DVector::from_fn(k, |i, _| dot(columns[i], target));
    let scale = g.diagonal().max().max(1e-300);
    let tol = 1e-14 * scale;
    let mut x = DVector::zeros(k);
    let mut passive = vec![false; k];
    let solve = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
        let gp = DMatrix::from_fn(idx.len(), idx.len(), |a, b| g[(idx[a], idx[b])]);
        let hp = DVector::from_fn(idx.len(), |a, _| h[idx[a]]);
        let zp = gp.svd(true, true).solve(&hp, 1e-13 * scale).unwrap_or_else(|_| DVector::zeros(idx.len()));
        let mut z = DVector::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            z[i] = zp[a];
        }
        z
    };
    for _ in 0..3 * k + 10 {
        let w = &h - &g * &x;
        let Some(j) = (0..k).filter(|&i| !passive[i] && w[i] > tol).max_by(|&a, &b| w[a].total_cmp(&w[b])) else {
            break;
        };
        passive[j] = true;
        for _ in 0..3 * k + 10 {
            let z = solve(&passive);
            if (0..k).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                x = z;
                break;
            }
            let step = (0..k)
                .filter(|&i| passive[i] && z[i] <= 0.0)
                .map(|i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (&z - &x) * step;
            for i in 0..k {
                if passive[i] && x[i] <= SUPPORT_EPS {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x.iter().map(|v| v.max(0.0)).collect()
}
