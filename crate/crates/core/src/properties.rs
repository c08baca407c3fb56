//! Checks of the structural facts every valid model must obey, run against a
//! model, the fragment it reproduces and the bindings between them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontomodel::{
    classify, kernel_set, predict_with, validate, Bindings, FiniteOntModel, MacroRealism, QuantumFragment, SUPPORT_EPS,
};
use crate::qcore::{apply, born};
use crate::random::ZERO_PROB;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// For facts that hold exactly on any valid model.
    pub structural: f64,
    /// For facts that depend on reproducing Born statistics.
    pub statistical: f64,
    /// Passed to [`validate`].
    pub reproduction: f64,
}

impl Tolerances {
    pub const EXACT: Tolerances = Tolerances { structural: 1e-9, statistical: 1e-12, reproduction: 1e-10 };

    /// For models that reproduce quantum statistics only up to a
    /// discretization error.
    pub fn quadrature(statistical: f64, reproduction: f64) -> Self {
        Tolerances { structural: 1e-9, statistical, reproduction }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    /// `Σ μ f = 1` forces `μ` onto the set where `f = 1`.
    KernelLemma,
    /// `ϖ(φ|μ_ψ) ≤ |⟨φ|ψ⟩|²`.
    BornBound,
    /// `ϖ({y,z}|μ) ≤ ϖ(y|μ) + ϖ(z|μ)`.
    BooleBound,
    /// `ϖ(Uφ|Γ_U μ) ≥ ϖ(φ|μ)`.
    Monotonicity,
    /// Equality in the Boole bound for anti-distinguishable triples.
    Additivity,
    /// `ϖ(q|μ_ψ) = |⟨q|ψ⟩|²` and `Σ_q ϖ(q|μ_ψ) = 1` for ESMR and EMMR models.
    Saturation,
    /// `ϖ({y,z}|μ)` is at most the probability of the outcomes `y` or `z` can give.
    TripartiteBound,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::KernelLemma,
        Property::BornBound,
        Property::BooleBound,
        Property::Monotonicity,
        Property::Additivity,
        Property::Saturation,
        Property::TripartiteBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::KernelLemma => "kernel-lemma",
            Property::BornBound => "born-bound",
            Property::BooleBound => "boole-bound",
            Property::Monotonicity => "monotonicity",
            Property::Additivity => "additivity",
            Property::Saturation => "saturation",
            Property::TripartiteBound => "tripartite-bound",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyStat {
    pub checked: usize,
    pub violations: usize,
    /// Largest amount by which an instance missed, violation or not.
    pub worst_excess: f64,
}

impl PropertyStat {
    fn record(&mut self, excess: f64, tol: f64) {
        self.checked += 1;
        if excess > tol {
            self.violations += 1;
        }
        self.worst_excess = self.worst_excess.max(excess);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub class: MacroRealism,
    pub reproduction_deviation: f64,
    pub reproduces: bool,
    pub stats: BTreeMap<Property, PropertyStat>,
}

impl PropertyReport {
    pub fn violations(&self) -> usize {
        self.stats.values().map(|s| s.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.reproduces && self.violations() == 0
    }
}

fn union_support(measures: &[&[f64]], n: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    for w in measures {
        for (i, &x) in w.iter().enumerate() {
            if x > SUPPORT_EPS {
                mask[i] = true;
            }
        }
    }
    mask
}

fn mass(mu: &[f64], mask: &[bool]) -> f64 {
    mu.iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| x).sum::<f64>().min(1.0)
}

fn mass_either(mu: &[f64], a: &[bool], b: &[bool]) -> f64 {
    mu.iter().zip(a.iter().zip(b)).filter(|(_, (x, y))| **x || **y).map(|(w, _)| w).sum::<f64>().min(1.0)
}

/// Runs the whole suite. The model is validated first; the properties are
/// still checked when validation fails, since that helps locate the fault.
pub fn check_properties(
    model: &FiniteOntModel,
    fragment: &QuantumFragment,
    bindings: &Bindings,
    tol: Tolerances,
) -> Result<PropertyReport> {
    let validation = validate(model, fragment, bindings, tol.reproduction)?;
    let class = classify(model, fragment, bindings)?.class;
    let n = model.atoms;
    let mut stats: BTreeMap<Property, PropertyStat> = Property::ALL.iter().map(|p| (*p, PropertyStat::default())).collect();

    // States with at least one bound preparation, and the union of supports.
    let mut masks: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for name in fragment.states().keys() {
        let preps = bindings.preparations_of(name);
        if !preps.is_empty() {
            let ws = preps.iter().map(|p| model.preparation(p)).collect::<Result<Vec<_>>>()?;
            masks.insert(name, union_support(&ws, n));
        }
    }
    let states: Vec<&str> = masks.keys().copied().collect();
    let preps: Vec<(&str, &str, &[f64])> = bindings
        .preparations
        .iter()
        .map(|(p, s)| Ok((p.as_str(), s.as_str(), model.preparation(p)?)))
        .collect::<Result<_>>()?;
    let measurements: Vec<(&String, &[Vec<f64>])> = fragment
        .measurements()
        .keys()
        .filter_map(|m| bindings.response_for(m).map(|r| (m, r)))
        .map(|(m, r)| Ok((m, model.response(r)?)))
        .collect::<Result<_>>()?;
    let born_of = |s: &str, m: &str| -> Result<Vec<f64>> { born(fragment.state(s)?, fragment.measurement(m)?) };

    let kernel = stats.get_mut(&Property::KernelLemma).expect("seeded");
    for mu in model.preparations.values() {
        for rows in model.responses.values() {
            for f in rows {
                let p: f64 = mu.iter().zip(f).map(|(a, b)| a * b).sum();
                if p >= 1.0 - 1e-12 {
                    let ker = kernel_set(f, mu);
                    let m: f64 = ker.iter().map(|&i| mu[i]).sum();
                    kernel.record(1.0 - m, tol.structural);
                }
            }
        }
    }

    for &(_, psi, mu) in &preps {
        let single: BTreeMap<&str, f64> = states.iter().map(|s| (*s, mass(mu, &masks[s]))).collect();
        let predicted: BTreeMap<&str, Vec<f64>> = measurements.iter().map(|(m, r)| (m.as_str(), predict_with(mu, r))).collect();
        for &phi in &states {
            if phi != psi {
                let b = fragment.state(phi)?.overlap(fragment.state(psi)?)?;
                stats.get_mut(&Property::BornBound).expect("seeded").record(single[phi] - b, tol.statistical);
            }
        }
        for (i, &y) in states.iter().enumerate() {
            for &z in &states[i + 1..] {
                let joint = mass_either(mu, &masks[y], &masks[z]);
                stats
                    .get_mut(&Property::BooleBound)
                    .expect("seeded")
                    .record(joint - single[y] - single[z], tol.structural);
                for (m, _) in &measurements {
                    let (by, bz) = (born_of(y, m)?, born_of(z, m)?);
                    let reachable: Vec<usize> = (0..by.len()).filter(|&e| by[e] > ZERO_PROB || bz[e] > ZERO_PROB).collect();
                    if reachable.len() < by.len() {
                        let bound: f64 = reachable.iter().map(|&e| predicted[m.as_str()][e]).sum();
                        stats.get_mut(&Property::TripartiteBound).expect("seeded").record(joint - bound, tol.statistical);
                    }
                    if y != psi && z != psi {
                        let bx = born_of(psi, m)?;
                        let excluded = (0..bx.len()).all(|e| bx[e] <= ZERO_PROB || by[e] <= ZERO_PROB || bz[e] <= ZERO_PROB);
                        if excluded {
                            let gap = (joint - single[y] - single[z]).abs();
                            stats.get_mut(&Property::Additivity).expect("seeded").record(gap, tol.statistical);
                        }
                    }
                }
            }
        }
    }

    for (map_name, unitary) in &bindings.maps {
        let u = fragment.unitary(unitary)?;
        let gamma = model.map(map_name)?;
        let images: Vec<(&str, &str)> = states
            .iter()
            .filter_map(|&phi| {
                let img = apply(u, fragment.state(phi).ok()?).ok()?;
                let name = fragment.find_state(&img, 1e-9)?;
                masks.contains_key(name).then_some((phi, name))
            })
            .collect();
        for &(_, _, mu) in &preps {
            let pushed = gamma.apply(mu);
            for &(phi, uphi) in &images {
                let drop = mass(mu, &masks[phi]) - mass(&pushed, &masks[uphi]);
                stats.get_mut(&Property::Monotonicity).expect("seeded").record(drop, tol.statistical);
            }
        }
    }

    if matches!(class, MacroRealism::Esmr | MacroRealism::Emmr) {
        let macro_name = fragment.macro_name();
        let response = bindings
            .response_for(macro_name)
            .ok_or_else(|| Error::Unbound(format!("macro observable `{macro_name}` has no response function")))?;
        let rows = model.response(response)?;
        let outcomes = fragment.macro_measurement().outcomes().to_vec();
        let mut eigen_masks = Vec::new();
        for q in &outcomes {
            let names = model.eigenstate_preps.get(q).ok_or_else(|| Error::MissingEigenstates(q.clone()))?;
            let ws = names.iter().map(|p| model.preparation(p)).collect::<Result<Vec<_>>>()?;
            eigen_masks.push(union_support(&ws, n));
        }
        let sat = stats.get_mut(&Property::Saturation).expect("seeded");
        for &(_, psi, mu) in &preps {
            let predicted = predict_with(mu, rows);
            let quantum = born(fragment.state(psi)?, fragment.macro_measurement())?;
            let mut total = 0.0;
            for (k, m) in eigen_masks.iter().enumerate() {
                let w = mass(mu, m);
                total += w;
                sat.record((w - predicted[k]).abs(), tol.structural);
                sat.record((w - quantum[k]).abs(), tol.statistical.max(tol.reproduction));
            }
            sat.record((total - 1.0).abs(), tol.structural);
        }
    }

    Ok(PropertyReport {
        class,
        reproduction_deviation: validation.max_deviation,
        reproduces: validation.pass,
        stats,
    })
}
