use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::model::{Bindings, FiniteOntModel};
use crate::error::{Error, Result};

/// Weight above which an atom counts as carried by a measure.
pub const SUPPORT_EPS: f64 = 1e-12;
/// `f(λ)` counts as 1 when `1 − f(λ)` is at most this.
pub const KERNEL_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Preparation(String),
    /// Every preparation bound to the state.
    State(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub value: f64,
    pub realizing_set: Vec<usize>,
    pub targets: Vec<String>,
}

pub fn support(w: &[f64]) -> impl Iterator<Item = usize> + '_ {
    w.iter().enumerate().filter(|(_, x)| **x > SUPPORT_EPS).map(|(i, _)| i)
}

/// On a finite space the smallest set of full measure under every target is
/// the union of their supports, so the infimum is attained there.
pub fn overlap_with(mu: &[f64], targets: &[&[f64]]) -> (f64, Vec<usize>) {
    let set: BTreeSet<usize> = targets.iter().flat_map(|t| support(t)).collect();
    let value = set.iter().map(|&i| mu[i]).sum::<f64>().clamp(0.0, 1.0);
    (value, set.into_iter().collect())
}

pub fn asymmetric_overlap(
    model: &FiniteOntModel,
    bindings: &Bindings,
    mu: &str,
    targets: &[Target],
) -> Result<OverlapReport> {
    let mu_w = model.preparation(mu)?;
    let mut names = Vec::new();
    let mut measures: Vec<&[f64]> = Vec::new();
    for t in targets {
        match t {
            Target::Preparation(p) => {
                measures.push(model.preparation(p)?);
                names.push(p.clone());
            }
            Target::State(s) => {
                let preps = bindings.preparations_of(s);
                if preps.is_empty() {
                    return Err(Error::Unbound(format!("no preparation is bound to state `{s}`")));
                }
                for p in preps {
                    measures.push(model.preparation(p)?);
                }
                names.push(s.clone());
            }
        }
    }
    let (value, realizing_set) = overlap_with(mu_w, &measures);
    Ok(OverlapReport { value, realizing_set, targets: names })
}

/// Atoms where `f` is 1 up to [`KERNEL_EPS`]. When `Σ μ f = 1` this set has
/// full `μ`-measure.
pub fn kernel_set(f: &[f64], _mu: &[f64]) -> Vec<usize> {
    f.iter().enumerate().filter(|(_, x)| 1.0 - **x <= KERNEL_EPS).map(|(i, _)| i).collect()
}
