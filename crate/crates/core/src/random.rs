//! Seeded random fragments in dimension 2 and 3 with finite models that
//! reproduce them exactly.
//!
//! A fragment is built from a few base states and base measurements and a
//! unitary `U` of finite order `n`; the catalogue holds every `U^k`-image,
//! so `U` permutes both states and measurements. Measure-based models live
//! on deterministic response atoms, where `U` acts as an atom permutation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exclusion::{enumerate_atoms, ResponseAtom};
use crate::ontomodel::{Bindings, FiniteOntModel, QuantumFragment, StochasticMap};
use crate::qcore::{apply, born, complete_basis, CMatrix, CVector, ProjMeasurement, StateVector, UnitaryMap};
use crate::zoo::beltrametti_bugajski_model;

/// Born probabilities at or below this are treated as exact zeros.
pub const ZERO_PROB: f64 = 1e-12;
/// Macro observable of every random fragment.
pub const RANDOM_MACRO: &str = "bq@0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// One product-of-marginals preparation per state.
    Product,
    /// Product preparations plus a second one coupling two measurements.
    Coupled,
    /// Ontic states are the catalogued quantum states.
    Beltrametti,
}

#[derive(Clone, Debug)]
pub struct RandomCase {
    pub seed: u64,
    pub dim: usize,
    pub order: u32,
    pub kind: ModelKind,
    pub fragment: QuantumFragment,
    pub model: FiniteOntModel,
    pub bindings: Bindings,
}

fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn combination<R: Rng>(rng: &mut R, vectors: &[&CVector]) -> Result<StateVector> {
    let v = vectors.iter().fold(CVector::zeros(vectors[0].len()), |acc, b| acc + *b * random_complex(rng));
    StateVector::normalized(v.iter().copied().collect())
}

/// Random orthonormal basis whose first element is `first`.
fn basis_through<R: Rng>(rng: &mut R, first: &StateVector) -> Result<Vec<StateVector>> {
    let d = first.dim();
    let candidates: Vec<CVector> = (0..d).map(|_| CVector::from_fn(d, |_, _| random_complex(rng))).collect();
    complete_basis(std::slice::from_ref(first), &candidates)
}

fn columns(u: &UnitaryMap) -> Result<Vec<StateVector>> {
    let d = u.dim();
    (0..d).map(|k| StateVector::normalized(u.matrix().column(k).iter().copied().collect())).collect()
}

/// `V·diag(1, ω, ω², …)·V†` with `ω = e^{2πi/n}`, so `U^n = I`.
fn finite_order_unitary<R: Rng>(rng: &mut R, d: usize, n: u32) -> Result<UnitaryMap> {
    let v = UnitaryMap::random(d, rng)?;
    let diag = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / n as f64)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    UnitaryMap::new(v.matrix() * diag * v.matrix().adjoint())
}

struct Blueprint {
    dim: usize,
    order: u32,
    u: UnitaryMap,
    /// Base states by name; `q{j}` are the macro eigenstates.
    states: Vec<(String, StateVector)>,
    /// Base measurements by name; `bq` is the macro observable.
    measurements: Vec<(String, ProjMeasurement)>,
}

fn blueprint<R: Rng>(rng: &mut R, dim: usize) -> Result<Blueprint> {
    let bq = columns(&UnitaryMap::random(dim, rng)?)?;
    let labels: Vec<String> = (0..dim).map(|j| format!("q{j}")).collect();
    let mut states: Vec<(String, StateVector)> = labels.iter().cloned().zip(bq.iter().cloned()).collect();
    let mut measurements = vec![("bq".to_string(), ProjMeasurement::from_basis(labels, &bq)?)];
    let order;
    if dim == 2 {
        order = rng.random_range(1..=3u32);
        for name in ["psi", "phi"] {
            let s = StateVector::random(2, rng)?;
            let basis = basis_through(rng, &s)?;
            let outcomes = vec![format!("{name}+"), format!("{name}-")];
            measurements.push((format!("b{name}"), ProjMeasurement::from_basis(outcomes, &basis)?));
            states.push((name.to_string(), s));
        }
    } else {
        // An anti-distinguishable triple: each member misses one element of `anti`.
        order = 1;
        let anti = columns(&UnitaryMap::random(dim, rng)?)?;
        let v: Vec<&CVector> = anti.iter().map(StateVector::as_vector).collect();
        let triple = [
            ("x", combination(rng, &[v[1], v[2]])?),
            ("y", combination(rng, &[v[0], v[2]])?),
            ("z", combination(rng, &[v[0], v[1]])?),
        ];
        measurements.push(("anti".into(), ProjMeasurement::from_basis(vec!["a0".into(), "a1".into(), "a2".into()], &anti)?));
        for (name, s) in triple {
            let basis = basis_through(rng, &s)?;
            let outcomes = (0..dim).map(|k| format!("{name}{k}")).collect();
            measurements.push((format!("b{name}"), ProjMeasurement::from_basis(outcomes, &basis)?));
            states.push((name.to_string(), s));
        }
    }
    let u = finite_order_unitary(rng, dim, order)?;
    Ok(Blueprint { dim, order, u, states, measurements })
}

fn fragment_of(bp: &Blueprint) -> Result<QuantumFragment> {
    let mut f = QuantumFragment::new(bp.dim, RANDOM_MACRO, bp.measurements[0].1.clone())?;
    for (name, s) in &bp.states {
        let mut cur = s.clone();
        for k in 0..bp.order {
            f.add_state(format!("{name}@{k}"), cur.clone())?;
            cur = apply(&bp.u, &cur)?;
        }
    }
    for (name, m) in &bp.measurements {
        let mut cur = m.clone();
        for k in 0..bp.order {
            f.add_measurement(format!("{name}@{k}"), cur.clone())?;
            cur = cur.conjugate(&bp.u)?;
        }
    }
    f.add_unitary("u", bp.u.clone())?;
    Ok(f)
}

/// Born marginals with tiny probabilities zeroed and the rest renormalized.
fn clean_marginals(fragment: &QuantumFragment, s: &StateVector) -> Result<Vec<Vec<f64>>> {
    fragment
        .measurements()
        .values()
        .map(|m| {
            let mut p = born(s, m)?;
            p.iter_mut().filter(|x| **x <= ZERO_PROB).for_each(|x| *x = 0.0);
            let t: f64 = p.iter().sum();
            Ok(p.into_iter().map(|x| x / t).collect())
        })
        .collect()
}

fn product_measure(atoms: &[ResponseAtom], marg: &[Vec<f64>]) -> Vec<f64> {
    atoms.iter().map(|a| a.0.iter().enumerate().map(|(m, &e)| marg[m][e]).product()).collect()
}

/// Joint of two marginals by the north-west corner rule.
fn corner_coupling(p: &[f64], q: &[f64]) -> Vec<Vec<f64>> {
    let mut joint = vec![vec![0.0; q.len()]; p.len()];
    let (mut rp, mut rq) = (p.to_vec(), q.to_vec());
    let (mut i, mut j) = (0, 0);
    while i < p.len() && j < q.len() {
        let t = rp[i].min(rq[j]);
        joint[i][j] += t;
        rp[i] -= t;
        rq[j] -= t;
        if rp[i] <= 1e-15 {
            i += 1;
        } else {
            j += 1;
        }
    }
    joint
}

/// Product measure except that measurements `a` and `b` are coupled.
fn coupled_measure(atoms: &[ResponseAtom], marg: &[Vec<f64>], a: usize, b: usize) -> Vec<f64> {
    let joint = corner_coupling(&marg[a], &marg[b]);
    let w: Vec<f64> = atoms
        .iter()
        .map(|at| {
            let rest: f64 = at.0.iter().enumerate().filter(|(m, _)| *m != a && *m != b).map(|(m, &e)| marg[m][e]).product();
            rest * joint[at.0[a]][at.0[b]]
        })
        .collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|x| x / t).collect()
}

/// Atom permutation induced by `U`: the outcome for `M@k` after the map is
/// the outcome for `M@(k−1)` before it.
fn atom_map(fragment: &QuantumFragment, atoms: &[ResponseAtom], order: u32) -> Result<StochasticMap> {
    let names: Vec<&String> = fragment.measurements().keys().collect();
    let source_of: Vec<usize> = names
        .iter()
        .map(|n| {
            let (base, k) = n.rsplit_once('@').expect("orbit name");
            let k: u32 = k.parse().expect("orbit index");
            let prev = format!("{base}@{}", (k + order - 1) % order);
            names.iter().position(|m| **m == prev).expect("closed orbit")
        })
        .collect();
    let index: BTreeMap<&ResponseAtom, usize> = atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let targets = atoms
        .iter()
        .map(|a| {
            let img = ResponseAtom(source_of.iter().map(|&s| a.0[s]).collect());
            index.get(&img).copied().ok_or_else(|| Error::Construction("atom image missing".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StochasticMap::deterministic(&targets))
}

fn measure_model(bp: &Blueprint, fragment: &QuantumFragment, coupled: bool, rng: &mut impl Rng) -> Result<(FiniteOntModel, Bindings)> {
    let atoms = enumerate_atoms(fragment)?;
    let mut model = FiniteOntModel::new(atoms.len());
    let map = atom_map(fragment, &atoms, bp.order)?;
    let mut bindings = Bindings::by_name(&model, fragment);
    let nm = fragment.measurements().len();
    let pair = {
        let a = rng.random_range(0..nm);
        let b = (a + rng.random_range(1..nm)) % nm;
        (a, b)
    };
    for (name, s) in &bp.states {
        let marg = clean_marginals(fragment, s)?;
        let mut base = vec![(format!("{name}@0"), product_measure(&atoms, &marg))];
        if coupled {
            base.push((format!("{name}@0~c"), coupled_measure(&atoms, &marg, pair.0, pair.1)));
        }
        for (prep, mut w) in base {
            for k in 0..bp.order {
                let pname = prep.replacen("@0", &format!("@{k}"), 1);
                bindings.preparations.insert(pname.clone(), format!("{name}@{k}"));
                let next = map.apply(&w);
                model.preparations.insert(pname, w);
                w = next;
            }
        }
    }
    for (mname, m) in fragment.measurements() {
        let idx = fragment.measurements().keys().position(|k| k == mname).expect("present");
        let rows = (0..m.len()).map(|e| atoms.iter().map(|a| if a.0[idx] == e { 1.0 } else { 0.0 }).collect()).collect();
        model.responses.insert(mname.clone(), rows);
        bindings.measurements.insert(mname.clone(), mname.clone());
    }
    model.maps.insert("u".into(), map);
    bindings.maps.insert("u".into(), "u".into());
    for j in 0..bp.dim {
        let state = format!("q{j}@0");
        let preps = bindings.preparations_of(&state).into_iter().map(String::from).collect();
        model.eigenstate_preps.insert(format!("q{j}"), preps);
    }
    Ok((model, bindings))
}

/// Deterministic in `seed`: dimension, order of `U`, model kind and all
/// vectors are drawn from one ChaCha stream.
pub fn random_case(seed: u64) -> Result<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = if rng.random_bool(0.5) { 2 } else { 3 };
    let kind = match rng.random_range(0..3) {
        0 => ModelKind::Product,
        1 => ModelKind::Coupled,
        _ => ModelKind::Beltrametti,
    };
    let bp = blueprint(&mut rng, dim)?;
    let fragment = fragment_of(&bp)?;
    let (model, bindings) = match kind {
        ModelKind::Beltrametti => {
            let m = beltrametti_bugajski_model(&fragment)?;
            let b = Bindings::by_name(&m, &fragment);
            (m, b)
        }
        _ => measure_model(&bp, &fragment, kind == ModelKind::Coupled, &mut rng)?,
    };
    Ok(RandomCase { seed, dim, order: bp.order, kind, fragment, model, bindings })
}
