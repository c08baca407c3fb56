//! Reference models: a discretized Kochen–Specker qubit model, the
//! Beltrametti–Bugajski model on a finite catalogue, a deterministic
//! extension of the macro observable, and a two-atom Markov toy.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontomodel::{FiniteOntModel, QuantumFragment, StochasticMap};
use crate::qcore::{apply, born, CMatrix, ProjMeasurement, StateVector, UnitaryMap};

/// Same-ray tolerance used when matching states against a catalogue.
const RAY_TOL: f64 = 1e-9;

pub type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Fibonacci lattice on the unit sphere with equal weights `4π/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
}

impl SphereGrid {
    pub fn fibonacci(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("sphere grid needs at least 2 nodes, got {n}")));
        }
        let golden = PI * (3.0 - 5f64.sqrt());
        let nodes = (0..n)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let t = golden * i as f64;
                [r * t.cos(), r * t.sin(), z]
            })
            .collect();
        Ok(Self { nodes, weights: vec![4.0 * PI / n as f64; n] })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the node closest to the unit vector `v`. Nodes are sorted by
    /// decreasing `z`, so only a band of indices needs scanning: any node with
    /// `|Δz|` above the best chord found so far cannot be closer.
    pub fn nearest(&self, v: &Vec3) -> usize {
        let n = self.nodes.len();
        let spacing = (4.0 * PI / n as f64).sqrt();
        let centre = (((1.0 - v[2]) * n as f64 / 2.0 - 0.5).round().clamp(0.0, (n - 1) as f64)) as usize;
        let mut band = 2.0 * spacing;
        loop {
            let mut best = (centre, f64::NEG_INFINITY);
            let mut scan = |i: usize| {
                let d = dot(&self.nodes[i], v);
                if d > best.1 {
                    best = (i, d);
                }
            };
            let mut lo = centre;
            while lo > 0 && self.nodes[lo - 1][2] - v[2] <= band {
                lo -= 1;
            }
            let mut hi = centre;
            while hi + 1 < n && v[2] - self.nodes[hi + 1][2] <= band {
                hi += 1;
            }
            (lo..=hi).for_each(&mut scan);
            let chord = (2.0 - 2.0 * best.1).max(0.0).sqrt();
            if chord <= band || (lo == 0 && hi == n - 1) {
                return best.0;
            }
            band *= 2.0;
        }
    }
}

/// Bloch vector of a qubit state.
pub fn bloch_vector(s: &StateVector) -> Result<Vec3> {
    if s.dim() != 2 {
        return Err(Error::Parameter(format!("Bloch vectors need dim 2, got {}", s.dim())));
    }
    let (a, b) = (s.amplitudes()[0], s.amplitudes()[1]);
    let c = a.conj() * b;
    Ok([2.0 * c.re, 2.0 * c.im, a.norm_sqr() - b.norm_sqr()])
}

/// Qubit state with Bloch polar angle `theta` and azimuth `phi`.
pub fn bloch_state(theta: f64, phi: f64) -> StateVector {
    let a = Complex64::new((theta / 2.0).cos(), 0.0);
    let b = Complex64::from_polar((theta / 2.0).sin(), phi);
    StateVector::new(vec![a, b]).expect("unit vector by construction")
}

/// Two-outcome measurement along the Bloch direction `(theta, phi)`.
pub fn bloch_measurement(theta: f64, phi: f64, plus: &str, minus: &str) -> ProjMeasurement {
    let up = bloch_state(theta, phi);
    let down = bloch_state(PI - theta, phi + PI);
    ProjMeasurement::from_basis(vec![plus.into(), minus.into()], &[up, down]).expect("orthonormal by construction")
}

/// `exp(−i·angle·σ_y/2)`: rotation of the Bloch sphere by `angle` about y.
pub fn ry(angle: f64) -> UnitaryMap {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let m = CMatrix::from_row_slice(2, 2, &[c.into(), (-s).into(), s.into(), c.into()]);
    UnitaryMap::new(m).expect("real rotation")
}

/// SO(3) image of a qubit unitary: `R_ij = ½ Tr(σ_i U σ_j U†)`.
pub fn bloch_rotation(u: &UnitaryMap) -> Result<[Vec3; 3]> {
    if u.dim() != 2 {
        return Err(Error::Parameter(format!("Bloch rotations need dim 2, got {}", u.dim())));
    }
    let (o, i) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
    let one = Complex64::new(1.0, 0.0);
    let pauli = [
        CMatrix::from_row_slice(2, 2, &[o, one, one, o]),
        CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        CMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
    ];
    let m = u.matrix();
    let mut r = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            r[a][b] = 0.5 * (&pauli[a] * m * &pauli[b] * m.adjoint()).trace().re;
        }
    }
    Ok(r)
}

/// The qubit catalogue used by default: six states on the x–z great circle
/// spaced by π/3 plus the +y state, measurements along z, x, y and the
/// π/3 direction, and the π/3 rotation about y, which permutes the states.
pub fn qubit_fragment() -> QuantumFragment {
    let third = PI / 3.0;
    let mut f = QuantumFragment::new(2, "z", bloch_measurement(0.0, 0.0, "q0", "q1")).expect("qubit");
    let names = ["q0", "s1", "s2", "q1", "s4", "s5"];
    for (k, name) in names.iter().enumerate() {
        let t = k as f64 * third;
        // Keep polar angles in [0, π] so the azimuth encodes the half-plane.
        let s = if t <= PI + 1e-12 { bloch_state(t, 0.0) } else { bloch_state(2.0 * PI - t, PI) };
        f.add_state(*name, s).expect("qubit");
    }
    f.add_state("y_plus", bloch_state(PI / 2.0, PI / 2.0)).expect("qubit");
    f.add_measurement("x", bloch_measurement(PI / 2.0, 0.0, "x+", "x-")).expect("qubit");
    f.add_measurement("y", bloch_measurement(PI / 2.0, PI / 2.0, "y+", "y-")).expect("qubit");
    f.add_measurement("n", bloch_measurement(third, 0.0, "n+", "n-")).expect("qubit");
    f.add_unitary("ry", ry(third)).expect("qubit");
    f
}

/// `states` Bloch states on a golden-angle spiral and the z measurement plus
/// `measurements − 1` tilted axes, giving `states × measurements` pairs for
/// checking Born statistics. No unitaries.
pub fn born_grid_fragment(states: usize, measurements: usize) -> Result<QuantumFragment> {
    if states == 0 || measurements == 0 {
        return Err(Error::Parameter("the Born grid needs at least one state and one measurement".into()));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut f = QuantumFragment::new(2, "z", bloch_measurement(0.0, 0.0, "q0", "q1"))?;
    for k in 0..states {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / states as f64;
        f.add_state(format!("s{k}"), bloch_state(z.acos(), (k as f64 * golden) % (2.0 * PI)))?;
    }
    for j in 1..measurements {
        let theta = PI * j as f64 / measurements as f64;
        let phi = (j as f64 * 2.1) % (2.0 * PI);
        f.add_measurement(format!("m{j}"), bloch_measurement(theta, phi, &format!("m{j}+"), &format!("m{j}-")))?;
    }
    Ok(f)
}

/// Preparation name for the eigenstate of `label` in `meas`: the catalogued
/// state on that ray if there is one, otherwise `"{meas}:{label}"`.
fn eigen_name(fragment: &QuantumFragment, meas: &str, label: &str, v: &StateVector) -> String {
    fragment.find_state(v, RAY_TOL).map_or_else(|| format!("{meas}:{label}"), str::to_string)
}

/// Kochen–Specker model on a sphere grid. Each state is the measure
/// `∝ max(0, n̂·λ)`; a measurement along `m̂` answers its first outcome iff
/// `m̂·λ ≥ 0`; unitaries rotate each node and snap to the nearest one;
/// measuring re-prepares the eigenstate of the outcome.
pub fn kochen_specker_model(grid: &SphereGrid, fragment: &QuantumFragment) -> Result<FiniteOntModel> {
    if fragment.dim() != 2 {
        return Err(Error::Parameter(format!("the Kochen-Specker model needs a qubit fragment, got dim {}", fragment.dim())));
    }
    let n = grid.len();
    let mut model = FiniteOntModel::new(n);
    let measure = |s: &StateVector| -> Result<Vec<f64>> {
        let b = bloch_vector(s)?;
        let w: Vec<f64> = grid.nodes().iter().zip(grid.weights()).map(|(l, w)| dot(&b, l).max(0.0) * w).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / total).collect())
    };
    for (name, s) in fragment.states() {
        model.preparations.insert(name.clone(), measure(s)?);
    }
    for (mname, meas) in fragment.measurements() {
        if meas.len() == 1 {
            model.responses.insert(mname.clone(), vec![vec![1.0; n]]);
            continue;
        }
        let eig: Vec<StateVector> = (0..meas.len())
            .map(|k| meas.rank_one_vector(k))
            .collect::<Option<_>>()
            .filter(|v: &Vec<StateVector>| v.len() == 2)
            .ok_or_else(|| Error::InvalidMeasurement(format!("`{mname}` is not a rank-one qubit measurement")))?;
        let axis = bloch_vector(&eig[0])?;
        let first: Vec<f64> = grid.nodes().iter().map(|l| if dot(&axis, l) >= 0.0 { 1.0 } else { 0.0 }).collect();
        let second = first.iter().map(|x| 1.0 - x).collect();
        model.responses.insert(mname.clone(), vec![first, second]);
        let mut rules = BTreeMap::new();
        for (k, label) in meas.outcomes().iter().enumerate() {
            let name = eigen_name(fragment, mname, label, &eig[k]);
            if !model.preparations.contains_key(&name) {
                model.preparations.insert(name.clone(), measure(&eig[k])?);
            }
            rules.insert(label.clone(), name.clone());
            if mname == fragment.macro_name() {
                model.eigenstate_preps.insert(label.clone(), vec![name]);
            }
        }
        model.updates.insert(mname.clone(), rules);
    }
    for (uname, u) in fragment.unitaries() {
        let r = bloch_rotation(u)?;
        let targets: Vec<usize> = grid
            .nodes()
            .par_iter()
            .map(|l| {
                let v = [dot(&r[0], l), dot(&r[1], l), dot(&r[2], l)];
                grid.nearest(&v)
            })
            .collect();
        model.maps.insert(uname.clone(), StochasticMap::deterministic(&targets));
    }
    Ok(model)
}

/// Atom states for catalogue-based models: the catalogue in name order,
/// then any macro eigenstate missing from it.
fn catalogue_atoms(fragment: &QuantumFragment) -> Vec<(String, StateVector)> {
    let mut atoms: Vec<(String, StateVector)> = fragment.states().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let m = fragment.macro_measurement();
    for (k, label) in m.outcomes().iter().enumerate() {
        if let Some(v) = m.rank_one_vector(k) {
            if fragment.find_state(&v, RAY_TOL).is_none() {
                atoms.push((format!("{}:{label}", fragment.macro_name()), v));
            }
        }
    }
    atoms
}

/// Names of atoms (or preparations) that are eigenstates of each macro value.
fn macro_eigenstates(fragment: &QuantumFragment, atoms: &[(String, StateVector)]) -> Result<BTreeMap<String, Vec<String>>> {
    let m = fragment.macro_measurement();
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (name, s) in atoms {
        let p = born(s, m)?;
        if let Some(k) = p.iter().position(|&x| x >= 1.0 - 1e-10) {
            out.entry(m.outcomes()[k].clone()).or_default().push(name.clone());
        }
    }
    Ok(out)
}

/// Ontic states are the catalogued quantum states themselves.
pub fn beltrametti_bugajski_model(fragment: &QuantumFragment) -> Result<FiniteOntModel> {
    let atoms = catalogue_atoms(fragment);
    let n = atoms.len();
    let mut model = FiniteOntModel::new(n);
    for (j, (name, _)) in atoms.iter().enumerate() {
        let mut w = vec![0.0; n];
        w[j] = 1.0;
        model.preparations.insert(name.clone(), w);
    }
    for (mname, meas) in fragment.measurements() {
        let cols = atoms.iter().map(|(_, s)| born(s, meas)).collect::<Result<Vec<_>>>()?;
        let rows = (0..meas.len()).map(|k| cols.iter().map(|c| c[k]).collect()).collect();
        model.responses.insert(mname.clone(), rows);
    }
    for (uname, u) in fragment.unitaries() {
        let targets: Option<Vec<usize>> = atoms
            .iter()
            .map(|(_, s)| {
                let image = apply(u, s).ok()?;
                atoms.iter().position(|(_, t)| t.same_ray(&image, RAY_TOL))
            })
            .collect();
        if let Some(t) = targets {
            model.maps.insert(uname.clone(), StochasticMap::deterministic(&t));
        }
    }
    model.eigenstate_preps = macro_eigenstates(fragment, &atoms)?;
    Ok(model)
}

/// Each state is split over atoms `(state, q)` weighted by its Born
/// probabilities for the macro observable; atom `(state, q)` answers `q`.
pub fn deterministic_extension_model(fragment: &QuantumFragment) -> Result<FiniteOntModel> {
    if fragment.measurements().len() != 1 {
        return Err(Error::Construction(format!(
            "deterministic extension supports only the macro observable, fragment has {} measurements",
            fragment.measurements().len()
        )));
    }
    let m = fragment.macro_measurement();
    let states = catalogue_atoms(fragment);
    let mut atoms: Vec<(usize, usize, f64)> = Vec::new();
    for (si, (_, s)) in states.iter().enumerate() {
        for (k, p) in born(s, m)?.into_iter().enumerate() {
            if p > 1e-12 {
                atoms.push((si, k, p));
            }
        }
    }
    let n = atoms.len();
    let mut model = FiniteOntModel::new(n);
    for (si, (name, _)) in states.iter().enumerate() {
        let mut w: Vec<f64> = atoms.iter().map(|&(s, _, p)| if s == si { p } else { 0.0 }).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        model.preparations.insert(name.clone(), w);
    }
    let rows = (0..m.len()).map(|k| atoms.iter().map(|&(_, q, _)| if q == k { 1.0 } else { 0.0 }).collect()).collect();
    model.responses.insert(fragment.macro_name().to_string(), rows);
    model.eigenstate_preps = macro_eigenstates(fragment, &states)?;
    let rules = model
        .eigenstate_preps
        .iter()
        .map(|(q, names)| (q.clone(), names[0].clone()))
        .collect();
    model.updates.insert(fragment.macro_name().to_string(), rules);
    Ok(model)
}

/// Two atoms, one per macro value of a qubit. The map `step` flips the atom
/// with probability `sin²(θ/2)`; measuring re-prepares the observed value,
/// which leaves the atom as it was.
pub fn emmr_toy_model(theta: f64) -> FiniteOntModel {
    let (c2, s2) = ((theta / 2.0).cos().powi(2), (theta / 2.0).sin().powi(2));
    let mut m = FiniteOntModel::new(2);
    m.preparations.insert("q0".into(), vec![1.0, 0.0]);
    m.preparations.insert("q1".into(), vec![0.0, 1.0]);
    m.eigenstate_preps.insert("q0".into(), vec!["q0".into()]);
    m.eigenstate_preps.insert("q1".into(), vec!["q1".into()]);
    m.responses.insert("z".into(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    m.maps.insert("step".into(), StochasticMap::from_columns(vec![vec![(0, c2), (1, s2)], vec![(0, s2), (1, c2)]]));
    m.updates.insert("z".into(), BTreeMap::from([("q0".into(), "q0".into()), ("q1".into(), "q1".into())]));
    m
}

/// Fragment with the z measurement, its eigenstates, and `step = R_y(θ)`.
pub fn lgi_fragment(theta: f64) -> QuantumFragment {
    let mut f = QuantumFragment::new(2, "z", bloch_measurement(0.0, 0.0, "q0", "q1")).expect("qubit");
    f.add_state("q0", bloch_state(0.0, 0.0)).expect("qubit");
    f.add_state("q1", bloch_state(PI, 0.0)).expect("qubit");
    f.add_unitary("step", ry(theta)).expect("qubit");
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontomodel::{classify, validate, Bindings, MacroRealism};

    #[test]
    fn grid_is_normalized() {
        let g = SphereGrid::fibonacci(1000).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 4.0 * PI).abs() < 1e-6);
        assert!(g.nodes().iter().all(|v| (dot(v, v) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn nearest_matches_exhaustive_scan() {
        let g = SphereGrid::fibonacci(3001).unwrap();
        let probes = [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.6, 0.0, 0.8], [-0.48, 0.6, 0.64], [1.0, 0.0, 0.0]];
        for p in probes {
            let brute = (0..g.len()).max_by(|&a, &b| dot(&g.nodes()[a], &p).total_cmp(&dot(&g.nodes()[b], &p))).unwrap();
            assert_eq!(g.nearest(&p), brute);
        }
    }

    #[test]
    fn bloch_rotation_of_ry() {
        let r = bloch_rotation(&ry(PI / 2.0)).unwrap();
        // z ↦ x under a quarter turn about y.
        let z = [0.0, 0.0, 1.0];
        let img = [dot(&r[0], &z), dot(&r[1], &z), dot(&r[2], &z)];
        assert!((img[0] - 1.0).abs() < 1e-12 && img[1].abs() < 1e-12 && img[2].abs() < 1e-12);
        let s = bloch_vector(&apply(&ry(PI / 2.0), &bloch_state(0.0, 0.0)).unwrap()).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_fragment_rotation_permutes_states() {
        let f = qubit_fragment();
        let u = f.unitary("ry").unwrap();
        for s in f.states().values() {
            assert!(f.find_state(&apply(u, s).unwrap(), RAY_TOL).is_some());
        }
    }

    fn ks(n: usize) -> (FiniteOntModel, QuantumFragment) {
        let f = qubit_fragment();
        (kochen_specker_model(&SphereGrid::fibonacci(n).unwrap(), &f).unwrap(), f)
    }

    #[test]
    fn ks_predictions_follow_born() {
        let (m, _) = ks(20_000);
        let aligned = m.predict("q0", "z").unwrap();
        assert!((aligned[0] - 1.0).abs() < 1e-3);
        let side = m.predict("y_plus", "z").unwrap();
        assert!((side[0] - 0.5).abs() < 1e-3);
        // cos²(π/6) for states π/3 from the axis.
        let tilted = m.predict("s1", "z").unwrap();
        assert!((tilted[0] - 0.75).abs() < 1e-3, "{tilted:?}");
    }

    #[test]
    fn ks_validates_and_is_esmr() {
        let (m, f) = ks(20_000);
        let b = Bindings::by_name(&m, &f);
        let r = validate(&m, &f, &b, 1e-3).unwrap();
        assert!(r.pass, "max deviation {}", r.max_deviation);
        let c = classify(&m, &f, &b).unwrap();
        assert_eq!(c.class, MacroRealism::Esmr);
        assert!(c.max_mixture_residual > 0.01);
    }

    #[test]
    fn ks_rejects_larger_dimension() {
        let f = QuantumFragment::new(3, "m", ProjMeasurement::computational(3, "q").unwrap()).unwrap();
        assert!(kochen_specker_model(&SphereGrid::fibonacci(100).unwrap(), &f).is_err());
    }

    #[test]
    fn bb_model_on_eigenbasis_and_with_superposition() {
        let mut f = QuantumFragment::new(2, "z", bloch_measurement(0.0, 0.0, "q0", "q1")).unwrap();
        f.add_state("q0", bloch_state(0.0, 0.0)).unwrap();
        f.add_state("q1", bloch_state(PI, 0.0)).unwrap();
        let m = beltrametti_bugajski_model(&f).unwrap();
        assert!(m.responses["z"].iter().flatten().all(|&x| x.min(1.0 - x) < 1e-15));
        f.add_state("plus", bloch_state(PI / 2.0, 0.0)).unwrap();
        let m = beltrametti_bugajski_model(&f).unwrap();
        let b = Bindings::by_name(&m, &f);
        assert_eq!(validate(&m, &f, &b, 0.0).unwrap().max_deviation, 0.0);
        assert_eq!(classify(&m, &f, &b).unwrap().class, MacroRealism::None);
    }

    #[test]
    fn bb_model_adds_missing_eigenstates() {
        let mut f = QuantumFragment::new(2, "z", bloch_measurement(0.0, 0.0, "q0", "q1")).unwrap();
        f.add_state("plus", bloch_state(PI / 2.0, 0.0)).unwrap();
        let m = beltrametti_bugajski_model(&f).unwrap();
        assert_eq!(m.atoms, 3);
        assert_eq!(m.eigenstate_preps["q1"], vec!["z:q1".to_string()]);
    }

    #[test]
    fn deterministic_extension_cases() {
        let mut f = lgi_fragment(0.3);
        let m = deterministic_extension_model(&f).unwrap();
        assert_eq!(m.atoms, 2);
        f.add_state("plus", bloch_state(PI / 2.0, 0.0)).unwrap();
        let m = deterministic_extension_model(&f).unwrap();
        let b = Bindings::by_name(&m, &f);
        assert!(validate(&m, &f, &b, 1e-15).unwrap().pass);
        assert_eq!(classify(&m, &f, &b).unwrap().class, MacroRealism::Ssmr);
        assert!(deterministic_extension_model(&qubit_fragment()).is_err());
    }

    #[test]
    fn emmr_toy_reproduces_its_fragment() {
        let theta = 0.7;
        let (m, f) = (emmr_toy_model(theta), lgi_fragment(theta));
        let b = Bindings::by_name(&m, &f);
        assert!(validate(&m, &f, &b, 1e-12).unwrap().pass);
        assert_eq!(classify(&m, &f, &b).unwrap().class, MacroRealism::Emmr);
    }
}
