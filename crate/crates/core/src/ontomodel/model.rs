use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fragment::QuantumFragment;
use crate::error::{Error, Result};

/// Tolerance on column sums of preparations, maps and responses.
pub const SUM_TOL: f64 = 1e-12;

/// Column-stochastic `N×N` matrix stored by column: entry `(i, p)` in column
/// `j` means atom `j` moves to atom `i` with probability `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMap {
    columns: Vec<Vec<(usize, f64)>>,
}

impl StochasticMap {
    pub fn identity(n: usize) -> Self {
        Self { columns: (0..n).map(|j| vec![(j, 1.0)]).collect() }
    }

    /// `targets[j]` is where atom `j` goes.
    pub fn deterministic(targets: &[usize]) -> Self {
        Self { columns: targets.iter().map(|&i| vec![(i, 1.0)]).collect() }
    }

    pub fn from_columns(columns: Vec<Vec<(usize, f64)>>) -> Self {
        Self { columns }
    }

    /// Row-major dense input, `rows[i][j] = P(i | j)`.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!("map row of length {} in a {n}x{n} matrix", r.len())));
        }
        let columns = (0..n)
            .map(|j| (0..n).filter(|&i| rows[i][j] != 0.0).map(|i| (i, rows[i][j])).collect())
            .collect();
        Ok(Self { columns })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.columns.len();
        let mut rows = vec![vec![0.0; n]; n];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, p) in col {
                rows[i][j] += p;
            }
        }
        rows
    }

    pub fn columns(&self) -> &[Vec<(usize, f64)>] {
        &self.columns
    }

    pub fn size(&self) -> usize {
        self.columns.len()
    }

    pub fn apply(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mu.len()];
        for (j, col) in self.columns.iter().enumerate() {
            if mu[j] == 0.0 {
                continue;
            }
            for &(i, p) in col {
                out[i] += p * mu[j];
            }
        }
        out
    }

    fn check(&self, n: usize, name: &str) -> Result<()> {
        if self.columns.len() != n {
            return Err(Error::InvalidModel(format!("map `{name}` has {} columns, expected {n}", self.columns.len())));
        }
        for (j, col) in self.columns.iter().enumerate() {
            let mut sum = 0.0;
            for &(i, p) in col {
                if i >= n || p.is_nan() || p < 0.0 {
                    return Err(Error::InvalidModel(format!("map `{name}` column {j} has entry ({i}, {p})")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidModel(format!("map `{name}` column {j} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// Finite ontic space `{0, …, atoms−1}` with named preparation measures,
/// stochastic maps and response functions.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteOntModel {
    pub atoms: usize,
    pub preparations: BTreeMap<String, Vec<f64>>,
    /// Macro value label → names of its operational-eigenstate preparations.
    pub eigenstate_preps: BTreeMap<String, Vec<String>>,
    pub maps: BTreeMap<String, StochasticMap>,
    /// Outcomes × atoms; row order follows the bound measurement's outcomes.
    pub responses: BTreeMap<String, Vec<Vec<f64>>>,
    /// Response name → outcome label → preparation re-prepared after it.
    pub updates: BTreeMap<String, BTreeMap<String, String>>,
}

impl FiniteOntModel {
    pub fn new(atoms: usize) -> Self {
        Self {
            atoms,
            preparations: BTreeMap::new(),
            eigenstate_preps: BTreeMap::new(),
            maps: BTreeMap::new(),
            responses: BTreeMap::new(),
            updates: BTreeMap::new(),
        }
    }

    /// Checks every stochasticity invariant and name reference.
    pub fn check(&self) -> Result<()> {
        let n = self.atoms;
        if n == 0 {
            return Err(Error::InvalidModel("no atoms".into()));
        }
        for (name, w) in &self.preparations {
            check_distribution(w, n).map_err(|m| Error::InvalidModel(format!("preparation `{name}`: {m}")))?;
        }
        for (name, m) in &self.maps {
            m.check(n, name)?;
        }
        for (name, r) in &self.responses {
            if r.is_empty() || r.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidModel(format!("response `{name}` must be outcomes x {n}")));
            }
            for j in 0..n {
                let col: Vec<f64> = r.iter().map(|row| row[j]).collect();
                check_distribution(&col, col.len())
                    .map_err(|m| Error::InvalidModel(format!("response `{name}` atom {j}: {m}")))?;
            }
        }
        for (q, names) in &self.eigenstate_preps {
            if names.is_empty() {
                return Err(Error::MissingEigenstates(q.clone()));
            }
            for p in names {
                self.preparation(p)?;
            }
        }
        for (meas, rules) in &self.updates {
            self.response(meas)?;
            for p in rules.values() {
                self.preparation(p)?;
            }
        }
        Ok(())
    }

    pub fn preparation(&self, name: &str) -> Result<&[f64]> {
        self.preparations
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownName { kind: "preparation", name: name.into() })
    }

    pub fn map(&self, name: &str) -> Result<&StochasticMap> {
        self.maps.get(name).ok_or_else(|| Error::UnknownName { kind: "map", name: name.into() })
    }

    pub fn response(&self, name: &str) -> Result<&[Vec<f64>]> {
        self.responses
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownName { kind: "response", name: name.into() })
    }

    /// `Σ_λ μ(λ) P(E|λ)` for each outcome `E`.
    pub fn predict(&self, preparation: &str, response: &str) -> Result<Vec<f64>> {
        Ok(predict_with(self.preparation(preparation)?, self.response(response)?))
    }

    pub fn push_forward(&self, preparation: &str, map: &str) -> Result<Vec<f64>> {
        Ok(self.map(map)?.apply(self.preparation(preparation)?))
    }

    /// Pushes forward and stores the image as a new preparation.
    pub fn register_push_forward(&mut self, preparation: &str, map: &str, name: impl Into<String>) -> Result<()> {
        let v = self.push_forward(preparation, map)?;
        self.preparations.insert(name.into(), v);
        Ok(())
    }
}

pub fn predict_with(mu: &[f64], response: &[Vec<f64>]) -> Vec<f64> {
    response.iter().map(|row| row.iter().zip(mu).map(|(r, m)| r * m).sum::<f64>().clamp(0.0, 1.0)).collect()
}

fn check_distribution(w: &[f64], n: usize) -> std::result::Result<(), String> {
    if w.len() != n {
        return Err(format!("length {} instead of {n}", w.len()));
    }
    if let Some((i, x)) = w.iter().enumerate().find(|(_, x)| x.is_nan() || **x < 0.0) {
        return Err(format!("entry {i} is {x}"));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(format!("sums to {s}"));
    }
    Ok(())
}

/// Links model names to fragment names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bindings {
    /// Preparation → state it prepares.
    pub preparations: BTreeMap<String, String>,
    /// Map → unitary it implements.
    pub maps: BTreeMap<String, String>,
    /// Response → measurement it reproduces.
    pub measurements: BTreeMap<String, String>,
}

impl Bindings {
    /// Binds every model entry whose name is also a fragment entry.
    pub fn by_name(model: &FiniteOntModel, fragment: &QuantumFragment) -> Self {
        let pick = |names: Vec<&String>, present: &dyn Fn(&str) -> bool| {
            names.into_iter().filter(|n| present(n)).map(|n| (n.clone(), n.clone())).collect()
        };
        Self {
            preparations: pick(model.preparations.keys().collect(), &|n| fragment.states().contains_key(n)),
            maps: pick(model.maps.keys().collect(), &|n| fragment.unitaries().contains_key(n)),
            measurements: pick(model.responses.keys().collect(), &|n| fragment.measurements().contains_key(n)),
        }
    }

    /// The set `Δ` of preparations bound to `state`.
    pub fn preparations_of(&self, state: &str) -> Vec<&str> {
        self.preparations.iter().filter(|(_, s)| *s == state).map(|(p, _)| p.as_str()).collect()
    }

    pub fn response_for(&self, measurement: &str) -> Option<&str> {
        self.measurements.iter().find(|(_, m)| *m == measurement).map(|(r, _)| r.as_str())
    }

    pub fn map_for(&self, unitary: &str) -> Option<&str> {
        self.maps.iter().find(|(_, u)| *u == unitary).map(|(m, _)| m.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atom() -> FiniteOntModel {
        let mut m = FiniteOntModel::new(2);
        m.preparations.insert("a".into(), vec![1.0, 0.0]);
        m.preparations.insert("u".into(), vec![0.5, 0.5]);
        m.responses.insert("z".into(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        m.maps.insert("flip".into(), StochasticMap::deterministic(&[1, 0]));
        m.maps.insert("mix".into(), StochasticMap::from_dense(&[vec![0.3, 0.7], vec![0.7, 0.3]]).unwrap());
        m
    }

    #[test]
    fn point_mass_reads_response_column() {
        let m = two_atom();
        assert_eq!(m.predict("a", "z").unwrap(), vec![1.0, 0.0]);
        assert_eq!(m.predict("u", "z").unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn push_forward_variants() {
        let mut m = two_atom();
        m.maps.insert("id".into(), StochasticMap::identity(2));
        assert_eq!(m.push_forward("u", "id").unwrap(), vec![0.5, 0.5]);
        assert_eq!(m.push_forward("a", "flip").unwrap(), vec![0.0, 1.0]);
        assert_eq!(m.push_forward("a", "mix").unwrap(), vec![0.3, 0.7]);
        m.register_push_forward("a", "mix", "b").unwrap();
        m.check().unwrap();
        assert!((m.preparation("b").unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_names_are_errors() {
        let m = two_atom();
        assert!(matches!(m.predict("nope", "z"), Err(Error::UnknownName { kind: "preparation", .. })));
        assert!(matches!(m.push_forward("a", "nope"), Err(Error::UnknownName { kind: "map", .. })));
    }

    #[test]
    fn check_catches_bad_columns() {
        let mut m = two_atom();
        m.check().unwrap();
        m.responses.insert("bad".into(), vec![vec![1.0, 0.5], vec![0.0, 0.4]]);
        assert!(matches!(m.check(), Err(Error::InvalidModel(_))));
        let mut m = two_atom();
        m.preparations.insert("neg".into(), vec![1.5, -0.5]);
        assert!(m.check().is_err());
    }

    #[test]
    fn dense_sparse_agree() {
        let rows = vec![vec![0.0, 0.2, 1.0], vec![1.0, 0.3, 0.0], vec![0.0, 0.5, 0.0]];
        let map = StochasticMap::from_dense(&rows).unwrap();
        assert_eq!(map.to_dense(), rows);
        assert_eq!(map.apply(&[0.0, 1.0, 0.0]), vec![0.2, 0.3, 0.5]);
    }
}
